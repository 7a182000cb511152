//! Independent reference computations: brute-force grid minimizers for the
//! shrinkage and the joint objective, a subgradient optimality certificate,
//! and a dense spectral-norm routine. These are deliberately slow and
//! simple; the `verify` command and the test suite check the fast paths
//! against them.

use crate::core::{
    channel_norm, dual_norm, ChannelNorm, JointCoefficients, MeasurementData,
    RegularizationParams,
};
use crate::functionals::eval_j;
use crate::linop::{DenseMatrix, LinearOperator};
use crate::{Error, Result};

/// Brute-force minimizer of `||x - z||_2^2 + v ||z||_q` over a cubic grid.
/// Limited to at most three channels. Errors with `GridBoundary` when the
/// winning point touches the grid edge, since the true minimizer may then
/// lie outside.
pub fn brute_prox(
    x: &[f64],
    v: f64,
    q: ChannelNorm,
    step: f64,
    halfwidth: Option<f64>,
) -> Result<Vec<f64>> {
    let m = x.len();
    if m == 0 || m > 3 {
        return Err(Error::InvalidParam(format!(
            "brute_prox supports 1 to 3 channels, got {m}"
        )));
    }
    if !(step > 0.0) || v < 0.0 {
        return Err(Error::InvalidParam(
            "brute_prox needs step > 0 and v >= 0".into(),
        ));
    }
    let h = halfwidth.unwrap_or_else(|| {
        1.5 * x.iter().fold(0.0f64, |a, &b| a.max(b.abs())) + 1.0
    });
    let n = (2.0 * h / step).round() as usize + 1;
    let points: Vec<f64> = (0..n).map(|i| -h + i as f64 * step).collect();
    let mut best = vec![0.0; m];
    let mut best_val = f64::INFINITY;
    let mut best_idx = vec![0usize; m];
    let mut idx = vec![0usize; m];
    let mut z = vec![0.0; m];
    loop {
        for (d, &i) in idx.iter().enumerate() {
            z[d] = points[i];
        }
        let fit: f64 = x.iter().zip(&z).map(|(a, b)| (a - b) * (a - b)).sum();
        let val = fit + v * channel_norm(&z, q);
        if val < best_val {
            best_val = val;
            best.copy_from_slice(&z);
            best_idx.copy_from_slice(&idx);
        }
        // odometer increment
        let mut d = 0;
        loop {
            idx[d] += 1;
            if idx[d] < n {
                break;
            }
            idx[d] = 0;
            d += 1;
            if d == m {
                // full sweep done
                if best_idx.iter().any(|&i| i == 0 || i == n - 1) {
                    return Err(Error::GridBoundary(format!(
                        "grid minimizer {best:?} touches the boundary of [-{h}, {h}]"
                    )));
                }
                return Ok(best);
            }
        }
    }
}

/// Structured grid oracle for the same minimization, usable at any channel
/// count: reduces to one-dimensional scans using only coarse structural
/// facts about the minimizer (separability for q = 1, radiality for q = 2,
/// sign-preserving clipping for q = inf), never the closed-form solution.
pub fn brute_prox_structured(x: &[f64], v: f64, q: ChannelNorm, step: f64) -> Result<Vec<f64>> {
    if x.is_empty() || !(step > 0.0) || v < 0.0 {
        return Err(Error::InvalidParam(
            "brute_prox_structured needs nonempty x, step > 0, v >= 0".into(),
        ));
    }
    let scan = |lo: f64, hi: f64, f: &dyn Fn(f64) -> f64| -> f64 {
        let n = ((hi - lo) / step).ceil() as usize + 1;
        let mut best_t = lo;
        let mut best = f64::INFINITY;
        for i in 0..=n {
            let t = (lo + i as f64 * step).min(hi);
            let val = f(t);
            if val < best {
                best = val;
                best_t = t;
            }
        }
        best_t
    };
    match q {
        ChannelNorm::One => {
            // Separable: scan each coordinate independently.
            Ok(x
                .iter()
                .map(|&xi| {
                    let h = xi.abs() + 1.0;
                    scan(-h, h, &|z| (xi - z) * (xi - z) + v * z.abs())
                })
                .collect())
        }
        ChannelNorm::Two => {
            // Radial: z = t * x / ||x||, objective (||x|| - t)^2 + v t.
            let r = channel_norm(x, ChannelNorm::Two);
            if r == 0.0 {
                return Ok(vec![0.0; x.len()]);
            }
            let t = scan(0.0, r, &|t| (r - t) * (r - t) + v * t);
            Ok(x.iter().map(|&xi| xi * t / r).collect())
        }
        ChannelNorm::Inf => {
            // The minimizer keeps signs and clips magnitudes at one level.
            let hi = channel_norm(x, ChannelNorm::Inf);
            let t = scan(0.0, hi, &|t| {
                let fit: f64 = x
                    .iter()
                    .map(|&xi| {
                        let d = xi.abs() - xi.abs().min(t);
                        d * d
                    })
                    .sum();
                fit + v * t
            });
            Ok(x
                .iter()
                .map(|&xi| xi.signum() * xi.abs().min(t))
                .collect())
        }
    }
}

/// Optimality certificate for `z = argmin ||x - z||^2 + v ||z||_q` via the
/// subgradient `xi = 2 (x - z) / v`: requires `||xi||_{q'} <= 1` and
/// `<xi, z> >= ||z||_q`. Returns the worst constraint violation.
#[derive(Debug, Clone, Copy)]
pub struct ShrinkCertificate {
    /// How far the dual norm of `xi` exceeds 1 (0 when inside the ball).
    pub dual_excess: f64,
    /// How far `<xi, z>` falls short of `||z||_q` (0 when attained).
    pub support_gap: f64,
    /// `max(dual_excess, support_gap)`.
    pub defect: f64,
}

pub fn subgradient_certificate(
    x: &[f64],
    z: &[f64],
    v: f64,
    q: ChannelNorm,
) -> Result<ShrinkCertificate> {
    if x.len() != z.len() {
        return Err(Error::Shape {
            context: "subgradient_certificate",
            expected: x.len(),
            got: z.len(),
        });
    }
    if !(v > 0.0) {
        return Err(Error::InvalidParam(
            "certificate needs a positive threshold v".into(),
        ));
    }
    let xi: Vec<f64> = x.iter().zip(z).map(|(a, b)| 2.0 * (a - b) / v).collect();
    let dual_excess = (channel_norm(&xi, dual_norm(q)) - 1.0).max(0.0);
    let pairing: f64 = xi.iter().zip(z).map(|(a, b)| a * b).sum();
    let support_gap = (channel_norm(z, q) - pairing).max(0.0);
    Ok(ShrinkCertificate {
        dual_excess,
        support_gap,
        defect: dual_excess.max(support_gap),
    })
}

/// One axis of the exhaustive search.
#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl GridSpec {
    fn points(&self) -> Result<Vec<f64>> {
        if !(self.step > 0.0) || self.hi <= self.lo {
            return Err(Error::InvalidParam(format!(
                "bad grid [{}, {}] step {}",
                self.lo, self.hi, self.step
            )));
        }
        let n = ((self.hi - self.lo) / self.step).round() as usize + 1;
        Ok((0..n).map(|i| self.lo + i as f64 * self.step).collect())
    }
}

/// Joint grid minimum of J over all coefficient entries and weights.
#[derive(Debug, Clone)]
pub struct GridMinimum {
    pub u: JointCoefficients,
    pub v: Vec<f64>,
    pub objective: f64,
}

/// Exhaustive minimizer of `J(u, v)` for tiny instances: every coefficient
/// entry ranges over `u_grid`, every weight over `v_grid`. The total point
/// count is capped at 10^7. Errors with `GridBoundary` when the winner sits
/// on a grid edge.
pub fn grid_joint_minimizer(
    op: &dyn LinearOperator,
    g: &MeasurementData,
    params: &RegularizationParams,
    u_grid: GridSpec,
    v_grid: GridSpec,
) -> Result<GridMinimum> {
    let lc = op.lambda_count();
    let m = op.channels();
    let u_dims = lc * m;
    let v_dims = lc;
    let up = u_grid.points()?;
    let vp = v_grid.points()?;
    let total = (up.len() as f64).powi(u_dims as i32) * (vp.len() as f64).powi(v_dims as i32);
    if total > 1e7 {
        return Err(Error::InvalidParam(format!(
            "grid has {total:.3e} points; the exhaustive oracle is capped at 1e7"
        )));
    }
    let dims = u_dims + v_dims;
    let sizes: Vec<usize> = (0..dims)
        .map(|d| if d < u_dims { up.len() } else { vp.len() })
        .collect();
    let mut idx = vec![0usize; dims];
    let mut best_idx = vec![0usize; dims];
    let mut best_val = f64::INFINITY;
    let mut u = JointCoefficients::zeros(lc, m);
    let mut v = vec![0.0; lc];
    loop {
        for d in 0..u_dims {
            u.as_mut_slice()[d] = up[idx[d]];
        }
        for d in 0..v_dims {
            v[d] = vp[idx[u_dims + d]];
        }
        let val = eval_j(op, &u, &v, g, params)?;
        if val < best_val {
            best_val = val;
            best_idx.copy_from_slice(&idx);
        }
        let mut d = 0;
        loop {
            idx[d] += 1;
            if idx[d] < sizes[d] {
                break;
            }
            idx[d] = 0;
            d += 1;
            if d == dims {
                if best_idx
                    .iter()
                    .zip(&sizes)
                    .any(|(&i, &s)| i == 0 || i == s - 1)
                {
                    return Err(Error::GridBoundary(
                        "joint grid minimizer touches the search boundary".into(),
                    ));
                }
                let mut u_best = JointCoefficients::zeros(lc, m);
                for d in 0..u_dims {
                    u_best.as_mut_slice()[d] = up[best_idx[d]];
                }
                let v_best: Vec<f64> =
                    (0..v_dims).map(|d| vp[best_idx[u_dims + d]]).collect();
                return Ok(GridMinimum {
                    u: u_best,
                    v: v_best,
                    objective: best_val,
                });
            }
        }
    }
}

/// Largest singular value of a dense matrix via cyclic Jacobi eigenvalue
/// iteration on the Gram matrix `A^T A`.
pub fn dense_svd_norm(a: &DenseMatrix) -> Result<f64> {
    let n = a.cols();
    let rows = a.rows();
    // Gram matrix, symmetric n x n.
    let mut s = vec![0.0f64; n * n];
    for i in 0..n {
        for j in i..n {
            let mut acc = 0.0;
            for r in 0..rows {
                acc += a.get(r, i) * a.get(r, j);
            }
            s[i * n + j] = acc;
            s[j * n + i] = acc;
        }
    }
    if n == 1 {
        return Ok(s[0].max(0.0).sqrt());
    }
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += s[p * n + q] * s[p * n + q];
            }
        }
        if off.sqrt() < 1e-10 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = s[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = s[p * n + p];
                let aqq = s[q * n + q];
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let skp = s[k * n + p];
                    let skq = s[k * n + q];
                    s[k * n + p] = c * skp - sn * skq;
                    s[k * n + q] = sn * skp + c * skq;
                }
                for k in 0..n {
                    let spk = s[p * n + k];
                    let sqk = s[q * n + k];
                    s[p * n + k] = c * spk - sn * sqk;
                    s[q * n + k] = sn * spk + c * sqk;
                }
            }
        }
    }
    let max_eig = (0..n).map(|i| s[i * n + i]).fold(0.0f64, f64::max);
    Ok(max_eig.max(0.0).sqrt())
}
