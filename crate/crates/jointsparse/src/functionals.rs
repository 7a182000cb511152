//! Objective evaluation and the convexity / rate certificates.
//!
//! The joint functional is
//! `J(u, v) = ||T u - g||^2 + sum_l v_l ||u_l||_q
//!           + sum_l omega_l ||u_l||_2^2 + sum_l theta_l (rho_l - v_l)^2`,
//! extended to +inf whenever some weight v_l is negative.

use crate::core::{
    channel_norm, ChannelNorm, JointCoefficients, MeasurementData, RegularizationParams,
};
use crate::linop::LinearOperator;
use crate::{Error, Result};

/// Data-fidelity term `||T u - g||^2`.
pub fn eval_discrepancy(
    op: &dyn LinearOperator,
    u: &JointCoefficients,
    g: &MeasurementData,
) -> Result<f64> {
    Ok(op.apply(u)?.sub(g).norm_sq())
}

/// Regularization part
/// `Phi(u, v) = sum_l v_l ||u_l||_q + omega_l ||u_l||_2^2 + theta_l (rho_l - v_l)^2`.
/// Returns +inf if any v_l is negative.
pub fn eval_phi(u: &JointCoefficients, v: &[f64], params: &RegularizationParams) -> Result<f64> {
    if u.lambda_count() != params.lambda_count() {
        return Err(Error::Shape {
            context: "eval_phi coefficients",
            expected: params.lambda_count(),
            got: u.lambda_count(),
        });
    }
    if v.len() != params.lambda_count() {
        return Err(Error::Shape {
            context: "eval_phi weights",
            expected: params.lambda_count(),
            got: v.len(),
        });
    }
    if v.iter().any(|x| *x < 0.0) {
        return Ok(f64::INFINITY);
    }
    let mut total = 0.0;
    for lam in 0..u.lambda_count() {
        let row = u.row(lam);
        let nq = channel_norm(row, params.q);
        let n2sq: f64 = row.iter().map(|a| a * a).sum();
        let d = params.rho.get(lam) - v[lam];
        total += v[lam] * nq + params.omega.get(lam) * n2sq + params.theta.get(lam) * d * d;
    }
    Ok(total)
}

/// Full objective `J(u, v)`.
pub fn eval_j(
    op: &dyn LinearOperator,
    u: &JointCoefficients,
    v: &[f64],
    g: &MeasurementData,
    params: &RegularizationParams,
) -> Result<f64> {
    Ok(eval_discrepancy(op, u, g)? + eval_phi(u, v, params)?)
}

/// Inner (surrogate) objective for a fixed weight vector and anchor `a`:
/// `K(u; a, v) = J(u, v) + ||u - a||^2 - ||T(u - a)||^2`.
pub fn eval_k(
    op: &dyn LinearOperator,
    u: &JointCoefficients,
    anchor: &JointCoefficients,
    v: &[f64],
    g: &MeasurementData,
    params: &RegularizationParams,
) -> Result<f64> {
    let diff = u.sub(anchor);
    let penalty = diff.norm_l2().powi(2) - op.apply(&diff)?.norm_sq();
    Ok(eval_j(op, u, v, g, params)? + penalty)
}

/// Result of the joint-convexity check.
#[derive(Debug, Clone, Copy)]
pub struct ConvexityReport {
    pub convex: bool,
    pub strict: bool,
    /// The threshold constant: omega_l * theta_l must reach kappa / 4.
    pub kappa: f64,
}

/// `J(., .)` is jointly convex iff `omega_l * theta_l >= kappa / 4` for every
/// index, with `kappa = M` for q = 1 and `kappa = 1` for q in {2, inf};
/// strictly convex iff the inequality is strict everywhere.
pub fn check_convexity(params: &RegularizationParams, channels: usize) -> ConvexityReport {
    let kappa = match params.q {
        ChannelNorm::One => channels as f64,
        ChannelNorm::Two | ChannelNorm::Inf => 1.0,
    };
    let mut convex = true;
    let mut strict = true;
    for lam in 0..params.lambda_count() {
        let p = params.omega.get(lam) * params.theta.get(lam);
        if p < kappa / 4.0 {
            convex = false;
        }
        if p <= kappa / 4.0 {
            strict = false;
        }
    }
    ConvexityReport {
        convex,
        strict: convex && strict,
        kappa,
    }
}

/// Result of the strong-rate certificate.
#[derive(Debug, Clone, Copy)]
pub struct StrongRateReport {
    pub ok: bool,
    /// `sigma = inf_l theta_l * omega_l`.
    pub sigma: f64,
    /// Norm-equivalence constant for the chosen q: M, 1, or sqrt(M).
    pub phi_q: f64,
}

/// Dual norm-equivalence constant `phi_q` between `||.||_q'` and `||.||_2`
/// on M channels.
pub fn phi_constant(q: ChannelNorm, channels: usize) -> f64 {
    match q {
        ChannelNorm::One => channels as f64,
        ChannelNorm::Two => 1.0,
        ChannelNorm::Inf => (channels as f64).sqrt(),
    }
}

/// The geometric-rate bound requires `sigma = inf_l theta_l omega_l`
/// to exceed `phi_q / 4` strictly.
pub fn check_strong_rate(params: &RegularizationParams, channels: usize) -> StrongRateReport {
    let phi_q = phi_constant(params.q, channels);
    let sigma = (0..params.lambda_count())
        .map(|lam| params.theta.get(lam) * params.omega.get(lam))
        .fold(f64::INFINITY, f64::min);
    StrongRateReport {
        ok: sigma > phi_q / 4.0,
        sigma,
        phi_q,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::WeightVector;
    use crate::linop::{BlockOperator, DenseMatrix, ScalarOperator};
    use std::sync::Arc;

    fn uniform(q: ChannelNorm, theta: f64, omega: f64, lc: usize) -> RegularizationParams {
        RegularizationParams::uniform(q, theta, 1.0, omega, lc).unwrap()
    }

    fn identity_op(n: usize, channels: usize) -> BlockOperator {
        let ops: Vec<Arc<dyn ScalarOperator>> = (0..channels)
            .map(|_| Arc::new(DenseMatrix::identity(n)) as Arc<dyn ScalarOperator>)
            .collect();
        BlockOperator::block_diagonal(ops, n).unwrap()
    }

    #[test]
    fn phi_matches_hand_computation() {
        // One index, two channels: u = (3, 4), v = 2, omega = 0.5,
        // theta = 2, rho = 3, q = 2.
        let params = RegularizationParams::new(
            ChannelNorm::Two,
            WeightVector::new(vec![2.0]).unwrap(),
            WeightVector::new(vec![3.0]).unwrap(),
            WeightVector::new(vec![0.5]).unwrap(),
            0.5,
        )
        .unwrap();
        let u = JointCoefficients::new(1, 2, vec![3.0, 4.0]).unwrap();
        let phi = eval_phi(&u, &[2.0], &params).unwrap();
        // 2*5 + 0.5*25 + 2*(3-2)^2 = 10 + 12.5 + 2 = 24.5
        assert!((phi - 24.5).abs() < 1e-12);
    }

    #[test]
    fn phi_infinite_for_negative_weight() {
        let params = uniform(ChannelNorm::One, 1.0, 1.0, 2);
        let u = JointCoefficients::zeros(2, 1);
        assert!(eval_phi(&u, &[0.5, -0.1], &params).unwrap().is_infinite());
    }

    #[test]
    fn j_decomposes_into_discrepancy_plus_phi() {
        let op = identity_op(3, 1);
        let params = uniform(ChannelNorm::Two, 1.0, 0.5, 3);
        let u = JointCoefficients::new(3, 1, vec![1.0, -2.0, 0.5]).unwrap();
        let g = MeasurementData::new(vec![vec![0.5, 0.0, 1.0]]).unwrap();
        let v = vec![0.3, 0.2, 0.1];
        let j = eval_j(&op, &u, &v, &g, &params).unwrap();
        let d = eval_discrepancy(&op, &u, &g).unwrap();
        let p = eval_phi(&u, &v, &params).unwrap();
        assert!((j - (d + p)).abs() < 1e-12);
    }

    #[test]
    fn k_equals_j_at_anchor() {
        let op = identity_op(3, 1);
        let params = uniform(ChannelNorm::One, 1.0, 0.5, 3);
        let u = JointCoefficients::new(3, 1, vec![1.0, -2.0, 0.5]).unwrap();
        let g = MeasurementData::new(vec![vec![0.5, 0.0, 1.0]]).unwrap();
        let v = vec![0.3, 0.2, 0.1];
        let j = eval_j(&op, &u, &v, &g, &params).unwrap();
        let k = eval_k(&op, &u, &u, &v, &g, &params).unwrap();
        assert!((j - k).abs() < 1e-12);
    }

    #[test]
    fn k_dominates_j_for_contraction() {
        // With ||T|| < 1 the surrogate penalty ||u-a||^2 - ||T(u-a)||^2
        // is nonnegative, so K >= J away from the anchor.
        let op = BlockOperator::new(
            vec![vec![Some(
                Arc::new(DenseMatrix::diagonal(&[0.9, 0.5, 0.1])) as Arc<dyn ScalarOperator>,
            )]],
            3,
        )
        .unwrap();
        let params = uniform(ChannelNorm::Two, 1.0, 0.5, 3);
        let g = MeasurementData::new(vec![vec![0.5, 0.0, 1.0]]).unwrap();
        let v = vec![0.3, 0.2, 0.1];
        let u = JointCoefficients::new(3, 1, vec![1.0, -2.0, 0.5]).unwrap();
        let a = JointCoefficients::new(3, 1, vec![0.0, 1.0, -0.5]).unwrap();
        let j = eval_j(&op, &u, &v, &g, &params).unwrap();
        let k = eval_k(&op, &u, &a, &v, &g, &params).unwrap();
        assert!(k >= j - 1e-12);
    }

    #[test]
    fn convexity_boundary_cases() {
        // q = 1, M = 3: kappa = 3, threshold 0.75.
        let r = check_convexity(&uniform(ChannelNorm::One, 3.0, 0.25, 4), 3);
        assert!(r.convex && !r.strict && (r.kappa - 3.0).abs() < 1e-15);

        // q = 2, M = 3: kappa = 1; omega*theta = 0.3 > 0.25 strictly convex.
        let r = check_convexity(&uniform(ChannelNorm::Two, 1.0, 0.3, 4), 3);
        assert!(r.convex && r.strict && (r.kappa - 1.0).abs() < 1e-15);

        // q = inf, M = 3: 0.2 < 0.25 not convex.
        let r = check_convexity(&uniform(ChannelNorm::Inf, 1.0, 0.2, 4), 3);
        assert!(!r.convex && !r.strict);
    }

    #[test]
    fn strong_rate_cases() {
        // q = inf, M = 4: phi = 2, threshold 0.5; theta*omega = 0.6 passes.
        let r = check_strong_rate(&uniform(ChannelNorm::Inf, 2.0, 0.3, 4), 4);
        assert!(r.ok && (r.phi_q - 2.0).abs() < 1e-15 && (r.sigma - 0.6).abs() < 1e-15);

        // q = 1, M = 4: phi = 4, threshold 1; 0.9 fails.
        let r = check_strong_rate(&uniform(ChannelNorm::One, 3.0, 0.3, 4), 4);
        assert!(!r.ok);

        // q = 2: phi = 1, threshold 0.25; exactly 0.25 fails (strict).
        let r = check_strong_rate(&uniform(ChannelNorm::Two, 0.5, 0.5, 4), 4);
        assert!(!r.ok);
    }
}
