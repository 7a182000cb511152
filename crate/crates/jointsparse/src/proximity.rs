//! Exact projections onto l_q balls and the shrinkage operators that form
//! one Landweber step's nonlinearity.
//!
//! The central identity is `shrink(x, v, q) = x - project_ball(x, v/2, q')`
//! with `q'` the dual exponent, so only one family of closed forms needs
//! validating. The q = inf shrinkage uses the sorted clipping scheme; the
//! l1-ball projection reuses it through the same identity.

use crate::core::{channel_norm, ChannelNorm, JointCoefficients, WeightVector};
use crate::{Error, Result};

/// Euclidean projection onto the l_q ball of the given radius.
pub fn project_ball(x: &[f64], radius: f64, q: ChannelNorm) -> Vec<f64> {
    debug_assert!(radius >= 0.0);
    match q {
        ChannelNorm::Two => {
            let n = channel_norm(x, ChannelNorm::Two);
            if n <= radius {
                x.to_vec()
            } else {
                // n > radius >= 0, so n > 0
                let s = radius / n;
                x.iter().map(|a| a * s).collect()
            }
        }
        ChannelNorm::Inf => x.iter().map(|a| a.clamp(-radius, radius)).collect(),
        ChannelNorm::One => {
            // P^1_r = I - S^(inf)_{2r}: exact duality, one sorted routine.
            let shrunk = shrink_inf(x, 2.0 * radius);
            x.iter().zip(&shrunk).map(|(a, z)| a - z).collect()
        }
    }
}

/// The minimizer of `||z - x||_2^2 + v ||z||_q`.
pub fn shrink(x: &[f64], v: f64, q: ChannelNorm) -> Vec<f64> {
    debug_assert!(v >= 0.0);
    match q {
        ChannelNorm::One => x
            .iter()
            .map(|&a| {
                let t = v / 2.0;
                if a.abs() <= t {
                    0.0
                } else {
                    a.signum() * (a.abs() - t)
                }
            })
            .collect(),
        ChannelNorm::Two => {
            let n = channel_norm(x, ChannelNorm::Two);
            if n <= v / 2.0 {
                vec![0.0; x.len()]
            } else {
                let s = (n - v / 2.0) / n;
                x.iter().map(|a| a * s).collect()
            }
        }
        ChannelNorm::Inf => shrink_inf(x, v),
    }
}

/// Sorted clipping scheme for the q = inf shrinkage.
///
/// With entries ordered by magnitude, the largest index n satisfying
/// `|x_{i_n}| >= (sum_{k<n} |x_{i_k}| - v/2) / (n-1)` determines the common
/// clipped magnitude `t = (sum_{k<=n} |x_{i_k}| - v/2) / n`. The n = 1
/// condition is vacuous; the magnitude sort is stable with ascending
/// original index as tiebreaker so runs are reproducible. The boundary
/// `||x||_1 = v/2` returns zero, matching continuity of the prox in x.
fn shrink_inf(x: &[f64], v: f64) -> Vec<f64> {
    let m = x.len();
    let half = v / 2.0;
    let l1: f64 = x.iter().map(|a| a.abs()).sum();
    if l1 <= half {
        return vec![0.0; m];
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| x[b].abs().partial_cmp(&x[a].abs()).unwrap());

    // Largest n with |x_{i_n}| * (n-1) >= prefix_{n-1} - v/2.
    let mut best_n = 1;
    let mut prefix = x[order[0]].abs();
    for n in 2..=m {
        let mag = x[order[n - 1]].abs();
        if mag * (n as f64 - 1.0) >= prefix - half {
            best_n = n;
        }
        prefix += mag;
    }
    let top_sum: f64 = order[..best_n].iter().map(|&i| x[i].abs()).sum();
    let t = (top_sum - half) / best_n as f64;

    let mut z = x.to_vec();
    for &i in &order[..best_n] {
        z[i] = x[i].signum() * t;
    }
    z
}

/// Per-index thresholding: scale `shrink(u_l, v_l, q)` by `1/(1 + omega_l)`.
/// Decouples exactly over the index set.
pub fn threshold_block(
    u: &JointCoefficients,
    v: &WeightVector,
    omega: &WeightVector,
    q: ChannelNorm,
) -> Result<JointCoefficients> {
    let n = u.lambda_count();
    if v.len() != n {
        return Err(Error::Shape {
            context: "threshold_block v",
            expected: n,
            got: v.len(),
        });
    }
    if omega.len() != n {
        return Err(Error::Shape {
            context: "threshold_block omega",
            expected: n,
            got: omega.len(),
        });
    }
    let mut out = JointCoefficients::zeros(n, u.channels());
    for lambda in 0..n {
        let z = shrink(u.row(lambda), v[lambda], q);
        let s = 1.0 / (1.0 + omega[lambda]);
        for (dst, zl) in out.row_mut(lambda).iter_mut().zip(&z) {
            *dst = zl * s;
        }
    }
    Ok(out)
}

/// Lipschitz constant of `r -> project_ball(x, r, q)`: 1 for q = 2,
/// sqrt(M) for q in {1, inf}.
pub fn radius_lipschitz_constant(q: ChannelNorm, m: usize) -> f64 {
    debug_assert!(m >= 1);
    match q {
        ChannelNorm::Two => 1.0,
        ChannelNorm::One | ChannelNorm::Inf => (m as f64).sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::dual_norm;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn project_ball_trivial_cases() {
        assert_close(
            &project_ball(&[3.0, 4.0], 5.0, ChannelNorm::Two),
            &[3.0, 4.0],
            0.0,
        );
        assert_close(
            &project_ball(&[3.0, 4.0], 2.5, ChannelNorm::Two),
            &[1.5, 2.0],
            1e-15,
        );
        assert_close(
            &project_ball(&[3.0, -1.0], 2.0, ChannelNorm::Inf),
            &[2.0, -1.0],
            0.0,
        );
    }

    #[test]
    fn project_ball_l1_matches_grid_oracle() {
        // Dense grid search minimizing ||z - x||_2 over ||z||_1 <= 1,
        // step 1e-3, for x = (3, 1).
        let x = [3.0, 1.0];
        let step = 1e-3;
        let mut best = (f64::INFINITY, [0.0, 0.0]);
        let n = (2.0 / step) as i64;
        for i in -n..=n {
            let z0 = i as f64 * step;
            let rem = 1.0 - z0.abs();
            if rem < 0.0 {
                continue;
            }
            let k = (rem / step) as i64;
            for j in -k..=k {
                let z1 = j as f64 * step;
                let d = (z0 - x[0]).powi(2) + (z1 - x[1]).powi(2);
                if d < best.0 {
                    best = (d, [z0, z1]);
                }
            }
        }
        let p = project_ball(&x, 1.0, ChannelNorm::One);
        assert_close(&p, &best.1, 2.0 * step);
        assert!(channel_norm(&p, ChannelNorm::One) <= 1.0 + 1e-12);
    }

    #[test]
    fn shrink_examples() {
        assert_close(&shrink(&[3.0], 2.0, ChannelNorm::One), &[2.0], 1e-15);
        assert_close(
            &shrink(&[0.4, 0.3], 2.0, ChannelNorm::Two),
            &[0.0, 0.0],
            0.0,
        );
        assert_close(&shrink(&[3.0, 1.0], 2.0, ChannelNorm::Inf), &[2.0, 1.0], 1e-15);
        assert_close(
            &shrink(&[3.0, 2.5], 2.0, ChannelNorm::Inf),
            &[2.25, 2.25],
            1e-15,
        );
    }

    #[test]
    fn shrink_zero_v_is_identity() {
        let x = [1.5, -2.0, 0.25];
        for q in [ChannelNorm::One, ChannelNorm::Two, ChannelNorm::Inf] {
            assert_close(&shrink(&x, 0.0, q), &x, 0.0);
        }
    }

    #[test]
    fn shrink_inf_boundary_returns_zero() {
        // ||x||_1 = v/2 exactly.
        let x = [1.0, 1.0];
        assert_close(&shrink(&x, 4.0, ChannelNorm::Inf), &[0.0, 0.0], 0.0);
    }

    #[test]
    fn moreau_identity_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..2000 {
            let m = rng.gen_range(1..=5);
            let x: Vec<f64> = (0..m).map(|_| rng.gen_range(-4.0..4.0)).collect();
            let v: f64 = rng.gen_range(0.0..5.0);
            for q in [ChannelNorm::One, ChannelNorm::Two, ChannelNorm::Inf] {
                let s = shrink(&x, v, q);
                let p = project_ball(&x, v / 2.0, dual_norm(q));
                for i in 0..m {
                    assert!((s[i] + p[i] - x[i]).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn threshold_block_examples() {
        let u = JointCoefficients::new(2, 2, vec![0.0; 4]).unwrap();
        let v = WeightVector::constant(3.0, 2).unwrap();
        let w = WeightVector::constant(1.0, 2).unwrap();
        let out = threshold_block(&u, &v, &w, ChannelNorm::Two).unwrap();
        assert!(out.as_slice().iter().all(|&a| a == 0.0));

        let u = JointCoefficients::new(1, 1, vec![3.0]).unwrap();
        let v = WeightVector::constant(2.0, 1).unwrap();
        let w = WeightVector::constant(0.0, 1).unwrap();
        let out = threshold_block(&u, &v, &w, ChannelNorm::One).unwrap();
        assert_close(out.as_slice(), &[2.0], 1e-15);

        let u = JointCoefficients::new(1, 2, vec![4.0, 0.0]).unwrap();
        let v = WeightVector::constant(2.0, 1).unwrap();
        let w = WeightVector::constant(1.0, 1).unwrap();
        let out = threshold_block(&u, &v, &w, ChannelNorm::Two).unwrap();
        assert_close(out.as_slice(), &[1.5, 0.0], 1e-15);
    }

    #[test]
    fn threshold_block_dimension_mismatch() {
        let u = JointCoefficients::zeros(3, 2);
        let v = WeightVector::constant(1.0, 2).unwrap();
        let w = WeightVector::constant(1.0, 3).unwrap();
        assert!(matches!(
            threshold_block(&u, &v, &w, ChannelNorm::One),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn lipschitz_constants() {
        assert_eq!(radius_lipschitz_constant(ChannelNorm::Two, 7), 1.0);
        assert_eq!(radius_lipschitz_constant(ChannelNorm::Inf, 4), 2.0);
        assert_eq!(radius_lipschitz_constant(ChannelNorm::One, 1), 1.0);
    }

    #[test]
    fn nonexpansive_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let m = rng.gen_range(1..=4);
            let lc = rng.gen_range(1..=3);
            let xs: Vec<f64> = (0..lc * m).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let ys: Vec<f64> = (0..lc * m).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let x = JointCoefficients::new(lc, m, xs).unwrap();
            let y = JointCoefficients::new(lc, m, ys).unwrap();
            let v = WeightVector::new((0..lc).map(|_| rng.gen_range(0.0..4.0)).collect())
                .unwrap();
            let w = WeightVector::new((0..lc).map(|_| rng.gen_range(0.0..1.0)).collect())
                .unwrap();
            for q in [ChannelNorm::One, ChannelNorm::Two, ChannelNorm::Inf] {
                let tx = threshold_block(&x, &v, &w, q).unwrap();
                let ty = threshold_block(&y, &v, &w, q).unwrap();
                assert!(tx.sub(&ty).norm_l2() <= x.sub(&y).norm_l2() + 1e-12);
            }
        }
    }

    #[test]
    fn radius_lipschitz_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..2000 {
            let m = rng.gen_range(1..=6);
            let x: Vec<f64> = (0..m).map(|_| rng.gen_range(-4.0..4.0)).collect();
            let a: f64 = rng.gen_range(0.0..3.0);
            let b: f64 = rng.gen_range(0.0..3.0);
            for q in [ChannelNorm::One, ChannelNorm::Two, ChannelNorm::Inf] {
                let l = radius_lipschitz_constant(q, m);
                let pa = project_ball(&x, a, q);
                let pb = project_ball(&x, b, q);
                let d: f64 = pa
                    .iter()
                    .zip(&pb)
                    .map(|(p, r)| (p - r).powi(2))
                    .sum::<f64>()
                    .sqrt();
                assert!(d <= l * (a - b).abs() + 1e-12);
            }
        }
    }

    // Variational characterization of the shrinkage (omega = 0 case):
    // Psi(U(x)+h) - Psi(U(x)) + 2<h, U(x)-x> >= 0 for every perturbation h.
    #[test]
    fn surrogate_descent_condition_at_small_m() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..2000 {
            let m = rng.gen_range(1..=3);
            let x: Vec<f64> = (0..m).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let h: Vec<f64> = (0..m).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let v: f64 = rng.gen_range(0.0..4.0);
            for q in [ChannelNorm::One, ChannelNorm::Two, ChannelNorm::Inf] {
                let z = shrink(&x, v, q);
                let zh: Vec<f64> = z.iter().zip(&h).map(|(a, b)| a + b).collect();
                let psi_zh = v * channel_norm(&zh, q);
                let psi_z = v * channel_norm(&z, q);
                let inner: f64 = h.iter().zip(z.iter().zip(&x)).map(|(hi, (zi, xi))| hi * (zi - xi)).sum();
                assert!(psi_zh - psi_z + 2.0 * inner >= -1e-10);
            }
        }
    }
}
