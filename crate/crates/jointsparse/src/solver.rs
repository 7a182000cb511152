//! Two-loop alternating minimization: thresholded Landweber sweeps over the
//! coefficients in the inner loop, a closed-form weight update in the outer
//! loop, plus the convergence-rate machinery (alpha, beta, delta) used to
//! pick the inner-iteration budget.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::core::{
    channel_norm, JointCoefficients, MeasurementData, RegularizationParams, Solution,
    SolverTelemetry, WeightVector,
};
use crate::functionals::{check_strong_rate, eval_j, eval_k, phi_constant};
use crate::linop::LinearOperator;
use crate::proximity::threshold_block;
use crate::{Error, Result};

/// One thresholded Landweber step for fixed weights:
/// `u <- U_{v,omega}( u + T*(g - T u) )`.
pub fn landweber_step(
    op: &dyn LinearOperator,
    u: &JointCoefficients,
    g: &MeasurementData,
    v: &WeightVector,
    params: &RegularizationParams,
) -> Result<JointCoefficients> {
    let residual = g.sub(&op.apply(u)?);
    let grad = op.adjoint(&residual)?;
    threshold_block(&u.add(&grad), v, &params.omega, params.q)
}

/// Closed-form minimizer over the weights for fixed coefficients:
/// `v_l = rho_l - ||u_l||_q / (2 theta_l)` when that is positive, else 0.
pub fn update_v(u: &JointCoefficients, params: &RegularizationParams) -> Result<WeightVector> {
    if u.lambda_count() != params.lambda_count() {
        return Err(Error::Shape {
            context: "update_v",
            expected: params.lambda_count(),
            got: u.lambda_count(),
        });
    }
    let values = (0..u.lambda_count())
        .map(|lam| {
            let nq = channel_norm(u.row(lam), params.q);
            (params.rho.get(lam) - nq / (2.0 * params.theta.get(lam))).max(0.0)
        })
        .collect();
    WeightVector::new(values)
}

/// Iteration budget for one inner sweep.
#[derive(Debug, Clone, Copy)]
pub struct InnerBudget {
    pub max_iters: usize,
    /// Stop early once `||u^{m+1} - u^m||_2` falls below this.
    pub step_tol: f64,
}

impl InnerBudget {
    pub fn fixed(max_iters: usize) -> Self {
        Self {
            max_iters,
            step_tol: 0.0,
        }
    }
}

/// Run Landweber steps under a fixed weight vector until the budget is
/// exhausted. Appends one record per step to `telemetry` under outer
/// index `n`.
pub fn inner_solve(
    op: &dyn LinearOperator,
    u0: &JointCoefficients,
    g: &MeasurementData,
    v: &WeightVector,
    params: &RegularizationParams,
    budget: InnerBudget,
    n: usize,
    telemetry: &mut SolverTelemetry,
) -> Result<JointCoefficients> {
    let mut u = u0.clone();
    for m in 0..budget.max_iters {
        let next = landweber_step(op, &u, g, v, params)?;
        let step_norm = next.sub(&u).norm_l2();
        let objective_k = eval_k(op, &next, &u, v.as_slice(), g, params)?;
        if !objective_k.is_finite() {
            return Err(Error::NonFinite("inner objective"));
        }
        telemetry.inner.push(crate::core::InnerRecord {
            n,
            m,
            objective_k,
            step_norm,
        });
        u = next;
        if step_norm <= budget.step_tol {
            break;
        }
    }
    Ok(u)
}

/// Inner contraction factor `alpha = ||I - T* T|| / (1 + gamma)`.
pub fn rate_alpha(gamma: f64, residual_norm: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidParam(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    if !(0.0..=1.0).contains(&residual_norm) {
        return Err(Error::InvalidParam(format!(
            "residual norm must lie in [0,1], got {residual_norm}"
        )));
    }
    Ok(residual_norm / (1.0 + gamma))
}

/// Outer coupling constant
/// `beta = sup_l phi_q / (4 theta_l omega_l + 4 theta_l (1 - ||I - T*T||))`.
/// Requires the strong-rate certificate `inf_l theta_l omega_l > phi_q / 4`.
pub fn rate_beta(
    params: &RegularizationParams,
    channels: usize,
    residual_norm: f64,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&residual_norm) {
        return Err(Error::InvalidParam(format!(
            "residual norm must lie in [0,1], got {residual_norm}"
        )));
    }
    let cert = check_strong_rate(params, channels);
    if !cert.ok {
        let lam = (0..params.lambda_count())
            .min_by(|&a, &b| {
                let pa = params.theta.get(a) * params.omega.get(a);
                let pb = params.theta.get(b) * params.omega.get(b);
                pa.partial_cmp(&pb).unwrap()
            })
            .unwrap_or(0);
        return Err(Error::RateUnattainable(format!(
            "theta[{lam}] * omega[{lam}] = {:.6} does not exceed phi_q / 4 = {:.6}",
            params.theta.get(lam) * params.omega.get(lam),
            cert.phi_q / 4.0
        )));
    }
    let phi = phi_constant(params.q, channels);
    let beta = (0..params.lambda_count())
        .map(|lam| {
            let t = params.theta.get(lam);
            phi / (4.0 * t * params.omega.get(lam) + 4.0 * t * (1.0 - residual_norm))
        })
        .fold(0.0, f64::max);
    Ok(beta)
}

/// Per-outer-pass contraction `delta = alpha^L (1 + beta) + beta`.
pub fn rate_delta(alpha: f64, beta: f64, inner_iters: usize) -> f64 {
    alpha.powi(inner_iters as i32) * (1.0 + beta) + beta
}

/// Smallest inner budget L with `alpha^L (1 + beta) + beta <= delta_target`.
pub fn choose_inner_iters(alpha: f64, beta: f64, delta_target: f64) -> Result<usize> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::RateUnattainable(format!(
            "inner factor alpha = {alpha} must lie in [0,1) for the budget to exist"
        )));
    }
    if delta_target <= beta {
        return Err(Error::RateUnattainable(format!(
            "target delta = {delta_target} cannot undercut beta = {beta}"
        )));
    }
    if delta_target >= 1.0 {
        return Err(Error::InvalidParam(format!(
            "target delta must be below 1, got {delta_target}"
        )));
    }
    let mut l = 1usize;
    while rate_delta(alpha, beta, l) > delta_target {
        l += 1;
        if l > 1_000_000 {
            return Err(Error::RateUnattainable(
                "inner budget exceeds 10^6 iterations".into(),
            ));
        }
    }
    Ok(l)
}

/// Estimate `||I - T* T||` by power iteration; capped at 1 when the
/// operator norm is known to be below 1 (self-adjoint, spectrum in [.., 1]).
pub fn estimate_residual_norm(
    op: &dyn LinearOperator,
    max_iters: usize,
    tol: f64,
) -> Result<f64> {
    let lc = op.lambda_count();
    let m = op.channels();
    let mut rng = ChaCha8Rng::seed_from_u64(0x7265_7369); // "resi"
    let mut u = JointCoefficients::new(
        lc,
        m,
        (0..lc * m).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    )?;
    u = u.scale(1.0 / u.norm_l2());
    let mut lambda = 0.0;
    for _ in 0..max_iters {
        // w = (I - T*T) u
        let w = u.sub(&op.adjoint(&op.apply(&u)?)?);
        let next = w.norm_l2();
        if next == 0.0 {
            lambda = 0.0;
            break;
        }
        let rel = (next - lambda).abs() / next.max(1e-300);
        u = w.scale(1.0 / next);
        lambda = next;
        if rel < tol {
            break;
        }
    }
    let capped = if op.declared_norm_bound().map_or(false, |b| b < 1.0) {
        lambda.min(1.0)
    } else {
        lambda
    };
    Ok(capped)
}

/// How many Landweber steps to run per outer pass.
#[derive(Debug, Clone, Copy)]
pub enum InnerSchedule {
    /// A fixed count L for every pass.
    Fixed(usize),
    /// Derive L from the rate certificate so each outer pass contracts by
    /// at most `delta_target`; requires the strong-rate condition.
    Auto { delta_target: Option<f64> },
}

/// Options for a full two-loop run.
#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Outer passes run for n = 0, 1, ..., n_max inclusive.
    pub n_max: usize,
    pub schedule: InnerSchedule,
    /// Early inner exit on small steps (0 disables).
    pub inner_step_tol: f64,
    /// Stop outer iteration once `||u^(n) - u^(n-1)||_2` falls below this.
    pub outer_tol: f64,
    /// Starting coefficients; zero when absent.
    pub u0: Option<JointCoefficients>,
    /// Starting weights; rho when absent.
    pub v0: Option<WeightVector>,
}

impl SolverOptions {
    pub fn fixed(n_max: usize, inner_iters: usize) -> Self {
        Self {
            n_max,
            schedule: InnerSchedule::Fixed(inner_iters),
            inner_step_tol: 0.0,
            outer_tol: 1e-8,
            u0: None,
            v0: None,
        }
    }

    pub fn auto(n_max: usize) -> Self {
        Self {
            n_max,
            schedule: InnerSchedule::Auto { delta_target: None },
            inner_step_tol: 0.0,
            outer_tol: 1e-8,
            u0: None,
            v0: None,
        }
    }
}

/// Full alternating scheme. Each outer pass runs L Landweber steps under
/// the current weights, then refreshes the weights in closed form from the
/// last inner iterate. Assumes `||T|| < 1`; rescale the problem first.
pub fn jointsparse(
    op: &dyn LinearOperator,
    g: &MeasurementData,
    params: &RegularizationParams,
    options: &SolverOptions,
) -> Result<Solution> {
    let channels = op.channels();
    let inner_iters = match options.schedule {
        InnerSchedule::Fixed(l) => {
            if l == 0 {
                return Err(Error::InvalidParam(
                    "inner iteration count must be at least 1".into(),
                ));
            }
            l
        }
        InnerSchedule::Auto { delta_target } => {
            let residual = estimate_residual_norm(op, 500, 1e-12)?;
            let alpha = rate_alpha(params.gamma, residual)?;
            let beta = rate_beta(params, channels, residual)?;
            let target = match delta_target {
                Some(d) => d,
                None => {
                    if beta >= 1.0 {
                        return Err(Error::RateUnattainable(format!(
                            "beta = {beta:.6} is not below 1; no contractive schedule exists"
                        )));
                    }
                    (1.0 + beta) / 2.0
                }
            };
            choose_inner_iters(alpha, beta, target)?
        }
    };

    let mut u = match &options.u0 {
        Some(u0) => {
            if u0.lambda_count() != op.lambda_count() || u0.channels() != channels {
                return Err(Error::Shape {
                    context: "jointsparse u0",
                    expected: op.lambda_count() * channels,
                    got: u0.lambda_count() * u0.channels(),
                });
            }
            u0.clone()
        }
        None => JointCoefficients::zeros(op.lambda_count(), channels),
    };
    let mut v = match &options.v0 {
        Some(v0) => {
            if v0.len() != params.lambda_count() {
                return Err(Error::Shape {
                    context: "jointsparse v0",
                    expected: params.lambda_count(),
                    got: v0.len(),
                });
            }
            v0.clone()
        }
        None => params.rho.clone(),
    };

    let mut telemetry = SolverTelemetry::default();
    let budget = InnerBudget {
        max_iters: inner_iters,
        step_tol: options.inner_step_tol,
    };
    let mut prev_step: Option<f64> = None;
    for n in 0..=options.n_max {
        let prev_u = u.clone();
        u = inner_solve(op, &prev_u, g, &v, params, budget, n, &mut telemetry)?;
        v = update_v(&u, params)?;
        let step_norm = u.sub(&prev_u).norm_l2();
        let objective_j = eval_j(op, &u, v.as_slice(), g, params)?;
        if !objective_j.is_finite() {
            return Err(Error::NonFinite("outer objective"));
        }
        let measured_ratio = prev_step
            .filter(|p| *p > 0.0)
            .map(|p| step_norm / p);
        telemetry.outer.push(crate::core::OuterRecord {
            n,
            objective_j,
            step_norm,
            measured_ratio,
        });
        prev_step = Some(step_norm);
        if n > 0 && step_norm <= options.outer_tol {
            telemetry.stopped_on_tolerance = true;
            break;
        }
    }

    Ok(Solution {
        u_star: u,
        v_star: v,
        telemetry,
    })
}
