//! The five commands: `gen`, `solve`, `demo-color`, `verify`, `rates`.
//! Each is a plain function over a parsed config so tests can drive them
//! without spawning a process.

use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cli::config::{IndexMeta, RunConfig};
use crate::cli::image::{
    image_to_yiq_planes, read_ppm, write_ppm, yiq_planes_to_image, Image,
};
use crate::core::{
    ChannelNorm, JointCoefficients, MeasurementData, RegularizationParams, Solution,
    SolverTelemetry, WeightVector,
};
use crate::linop::{
    estimate_norm, BlockOperator, BlurDecimate, DenseMatrix, HaarSynthesis, LinearOperator,
    ScalarOperator, ScaledOperator,
};
use crate::oracle::brute_prox_structured;
use crate::proximity::shrink;
use crate::solver::{
    choose_inner_iters, estimate_residual_norm, inner_solve, jointsparse, landweber_step,
    rate_alpha, rate_beta, update_v, InnerBudget, InnerSchedule, SolverOptions,
};
use crate::{Error, Result};

fn fmt(x: f64) -> String {
    format!("{x:.17e}")
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)?;
    Ok(())
}

fn write_rows(path: &Path, rows: &[Vec<f64>]) -> Result<()> {
    let mut out = String::new();
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&x| fmt(x)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    write_text(path, &out)
}

fn read_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Result<Vec<f64>> = line
            .split(',')
            .map(|c| {
                c.trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("{}:{}: bad number {c:?}", path.display(), lineno + 1)))
            })
            .collect();
        rows.push(row?);
    }
    Ok(rows)
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller from two uniforms.
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Generate a seeded synthetic joint-sparsity instance: a shared support,
/// per-channel coefficients, one random measurement matrix applied to every
/// channel (rescaled so the forward map is a contraction), and data with
/// optional additive noise. Writes matrix.csv, g.csv, truth.csv, meta.txt.
pub fn cmd_gen(cfg: &RunConfig, out: &Path) -> Result<()> {
    let lc = cfg.lambda_count;
    let m = cfg.channels;
    let n = cfg.measurements;
    let k = cfg.sparsity;
    let shared = (cfg.overlap * k as f64).round() as usize;
    let needed = shared + m * (k - shared);
    if needed > lc {
        return Err(Error::InvalidParam(format!(
            "supports need {needed} distinct indices but only {lc} exist \
             (sparsity {k}, overlap {}, channels {m})",
            cfg.overlap
        )));
    }
    std::fs::create_dir_all(out)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut pool: Vec<usize> = (0..lc).collect();
    pool.shuffle(&mut rng);
    let shared_idx = &pool[..shared];
    let mut truth = JointCoefficients::zeros(lc, m);
    let mut cursor = shared;
    for ch in 0..m {
        let own = &pool[cursor..cursor + (k - shared)];
        cursor += k - shared;
        for &lam in shared_idx.iter().chain(own) {
            let mag = rng.gen_range(0.5..1.5);
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            truth.row_mut(lam)[ch] = sign * mag;
        }
    }

    let mut a_data: Vec<f64> = (0..n * lc).map(|_| normal(&mut rng)).collect();
    // Rescale the matrix so the block forward map lands at operator_target.
    let a = DenseMatrix::new(n, lc, a_data.clone())?;
    let probe = BlockOperator::new(
        vec![vec![Some(Arc::new(a) as Arc<dyn ScalarOperator>)]],
        lc,
    )?;
    let est = estimate_norm(&probe, 500, 1e-12)?;
    if est.value == 0.0 {
        return Err(Error::ZeroOperator);
    }
    let s = cfg.operator_target / est.value;
    for v in &mut a_data {
        *v *= s;
    }
    let a = DenseMatrix::new(n, lc, a_data)?;

    let mut g_rows = Vec::with_capacity(m);
    for ch in 0..m {
        let mut y = a.apply(&truth.channel(ch));
        for v in &mut y {
            *v += cfg.noise * normal(&mut rng);
        }
        g_rows.push(y);
    }

    let matrix_rows: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..lc).map(|j| a.get(i, j)).collect())
        .collect();
    write_rows(&out.join("matrix.csv"), &matrix_rows)?;
    write_rows(&out.join("g.csv"), &g_rows)?;
    let truth_rows: Vec<Vec<f64>> = (0..lc).map(|lam| truth.row(lam).to_vec()).collect();
    write_rows(&out.join("truth.csv"), &truth_rows)?;
    write_text(
        &out.join("meta.txt"),
        &format!(
            "lambda_count={lc}\nchannels={m}\nmeasurements={n}\nsparsity={k}\n\
             overlap={}\nnoise={}\nseed={}\n",
            cfg.overlap, cfg.noise, cfg.seed
        ),
    )?;
    Ok(())
}

/// A problem instance loaded from a `gen` directory.
pub struct ProblemFiles {
    pub operator: BlockOperator,
    pub g: MeasurementData,
    pub truth: Option<JointCoefficients>,
    pub lambda_count: usize,
    pub channels: usize,
}

pub fn load_problem(dir: &Path) -> Result<ProblemFiles> {
    let matrix = read_rows(&dir.join("matrix.csv"))?;
    let g_rows = read_rows(&dir.join("g.csv"))?;
    if matrix.is_empty() || g_rows.is_empty() {
        return Err(Error::Parse("empty problem files".into()));
    }
    let n = matrix.len();
    let lc = matrix[0].len();
    if matrix.iter().any(|r| r.len() != lc) {
        return Err(Error::Parse("ragged matrix.csv".into()));
    }
    let m = g_rows.len();
    let flat: Vec<f64> = matrix.into_iter().flatten().collect();
    let a = Arc::new(DenseMatrix::new(n, lc, flat)?);
    let ops: Vec<Arc<dyn ScalarOperator>> =
        (0..m).map(|_| a.clone() as Arc<dyn ScalarOperator>).collect();
    let operator = BlockOperator::block_diagonal(ops, lc)?;
    for row in &g_rows {
        if row.len() != n {
            return Err(Error::Parse("g.csv rows must match measurement count".into()));
        }
    }
    let g = MeasurementData::new(g_rows)?;
    let truth_path = dir.join("truth.csv");
    let truth = if truth_path.exists() {
        let rows = read_rows(&truth_path)?;
        let data: Vec<f64> = rows.into_iter().flatten().collect();
        Some(JointCoefficients::new(lc, m, data)?)
    } else {
        None
    };
    Ok(ProblemFiles {
        operator,
        g,
        truth,
        lambda_count: lc,
        channels: m,
    })
}

fn write_telemetry(
    path: &Path,
    echo: &str,
    telemetry: &SolverTelemetry,
) -> Result<()> {
    let mut out = String::new();
    out.push_str(echo);
    out.push('\n');
    out.push_str("n,m,J,K,step_norm,measured_ratio\n");
    for rec in &telemetry.inner {
        let outer = telemetry.outer.iter().find(|o| o.n == rec.n);
        let (j, ratio) = match outer {
            Some(o) => (
                fmt(o.objective_j),
                o.measured_ratio.map_or(String::new(), fmt),
            ),
            None => (String::new(), String::new()),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            rec.n,
            rec.m,
            j,
            fmt(rec.objective_k),
            fmt(rec.step_norm),
            ratio
        ));
    }
    write_text(path, &out)
}

/// Wrap an operator so its norm is certified below the target, scaling the
/// data identically when a rescale is needed.
fn contract(
    op: Arc<dyn LinearOperator>,
    g: &MeasurementData,
    target: f64,
) -> Result<(Arc<dyn LinearOperator>, MeasurementData, Option<f64>)> {
    let est = estimate_norm(op.as_ref(), 500, 1e-12)?;
    if est.value == 0.0 {
        return Err(Error::ZeroOperator);
    }
    if est.value <= target {
        let bounded = Arc::new(ScaledOperator::new(op, 1.0).with_norm_bound(est.value));
        return Ok((bounded, g.clone(), None));
    }
    let s = target / est.value;
    let scaled = Arc::new(ScaledOperator::new(op, s).with_norm_bound(target));
    Ok((scaled, g.scale(s), Some(s)))
}

/// Solve the instance referenced by the config and write u_star.csv,
/// v_star.csv, and telemetry.csv into `out`.
pub fn cmd_solve(cfg: &RunConfig, out: &Path) -> Result<Solution> {
    let dir = cfg
        .problem
        .as_ref()
        .ok_or_else(|| Error::InvalidParam("solve needs a `problem` key".into()))?;
    let problem = load_problem(dir)?;
    std::fs::create_dir_all(out)?;
    let params = cfg.params_flat(problem.lambda_count)?;
    let (op, g, scale) = contract(Arc::new(problem.operator), &problem.g, cfg.operator_target)?;
    let schedule = match cfg.inner_iters {
        Some(l) => InnerSchedule::Fixed(l),
        None => InnerSchedule::Auto {
            delta_target: cfg.delta_target,
        },
    };
    let options = SolverOptions {
        n_max: cfg.n_max,
        schedule,
        inner_step_tol: cfg.inner_step_tol,
        outer_tol: cfg.outer_tol,
        u0: None,
        v0: None,
    };
    let mut sol = jointsparse(op.as_ref(), &g, &params, &options)?;
    sol.telemetry.operator_scale = scale;

    let u_rows: Vec<Vec<f64>> = (0..problem.lambda_count)
        .map(|lam| sol.u_star.row(lam).to_vec())
        .collect();
    write_rows(&out.join("u_star.csv"), &u_rows)?;
    let v_rows: Vec<Vec<f64>> = sol.v_star.as_slice().iter().map(|&v| vec![v]).collect();
    write_rows(&out.join("v_star.csv"), &v_rows)?;
    let echo = cfg.echo_line(&params, problem.channels);
    write_telemetry(&out.join("telemetry.csv"), &echo, &sol.telemetry)?;
    Ok(sol)
}

/// Outcome of the color demo, for tests and reporting.
pub struct DemoReport {
    pub err_i: f64,
    pub err_q: f64,
    pub outer_passes: usize,
}

/// Color-recovery demo: observe the full-resolution luminance plane and
/// downsampled chrominance planes of an RGB image, reconstruct the full
/// color image through the block model, and write the reconstruction plus
/// per-pass chroma error curves.
pub fn cmd_demo_color(cfg: &RunConfig, out: &Path) -> Result<DemoReport> {
    let image_path = cfg
        .image
        .as_ref()
        .ok_or_else(|| Error::InvalidParam("demo-color needs an `image` key".into()))?;
    let img = read_ppm(image_path)?;
    if img.width != img.height {
        return Err(Error::InvalidParam(format!(
            "demo image must be square, got {}x{}",
            img.width, img.height
        )));
    }
    let side = img.width;
    std::fs::create_dir_all(out)?;

    let haar = Arc::new(HaarSynthesis::full_depth(side)?);
    if side % cfg.downsample != 0 {
        return Err(Error::InvalidParam(format!(
            "downsample {} does not divide side {side}",
            cfg.downsample
        )));
    }
    let meta = IndexMeta::from_scales(haar.scales());
    let params = cfg.params_for(&meta)?;

    let kernel = if cfg.downsample == 1 {
        vec![1.0]
    } else {
        BlurDecimate::gaussian_kernel(5, 1.0)
    };
    let blur = BlurDecimate::new(side, cfg.downsample, kernel.clone())?;
    let model = crate::linop::build_color_model(&kernel, cfg.downsample, haar.clone())?;

    let planes = image_to_yiq_planes(&img)?;
    let g = MeasurementData::new(vec![
        planes[0].clone(),
        blur.apply(&planes[1]),
        blur.apply(&planes[2]),
    ])?;
    let (op, g, scale) = contract(Arc::new(model), &g, cfg.operator_target)?;

    let inner_iters = match cfg.inner_iters {
        Some(l) => l,
        None => {
            let residual = estimate_residual_norm(op.as_ref(), 500, 1e-12)?;
            let alpha = rate_alpha(params.gamma, residual)?;
            let beta = rate_beta(&params, 3, residual)?;
            choose_inner_iters(alpha, beta, cfg.delta_target.unwrap_or((1.0 + beta) / 2.0))?
        }
    };

    // Outer loop run by hand so per-pass chroma errors can be logged.
    let mut telemetry = SolverTelemetry::default();
    telemetry.operator_scale = scale;
    let mut u = JointCoefficients::zeros(op.lambda_count(), 3);
    let mut v = params.rho.clone();
    let budget = InnerBudget {
        max_iters: inner_iters,
        step_tol: cfg.inner_step_tol,
    };
    let mut error_rows = vec!["n,err_i,err_q".to_string()];
    let mut prev_step: Option<f64> = None;
    let mut recon_planes = [planes[0].clone(), planes[1].clone(), planes[2].clone()];
    for n in 0..=cfg.n_max {
        let prev_u = u.clone();
        u = inner_solve(op.as_ref(), &prev_u, &g, &v, &params, budget, n, &mut telemetry)?;
        v = update_v(&u, &params)?;
        let step_norm = u.sub(&prev_u).norm_l2();
        let objective_j =
            crate::functionals::eval_j(op.as_ref(), &u, v.as_slice(), &g, &params)?;
        telemetry.outer.push(crate::core::OuterRecord {
            n,
            objective_j,
            step_norm,
            measured_ratio: prev_step.filter(|p| *p > 0.0).map(|p| step_norm / p),
        });
        prev_step = Some(step_norm);
        for (c, plane) in recon_planes.iter_mut().enumerate() {
            *plane = haar.apply(&u.channel(c));
        }
        let err = |c: usize| -> f64 {
            recon_planes[c]
                .iter()
                .zip(&planes[c])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        };
        error_rows.push(format!("{n},{},{}", fmt(err(1)), fmt(err(2))));
        if n > 0 && step_norm <= cfg.outer_tol {
            telemetry.stopped_on_tolerance = true;
            break;
        }
    }

    let recon = yiq_planes_to_image(side, side, &recon_planes)?;
    write_ppm(&out.join("recon.ppm"), &recon)?;
    write_text(&out.join("error.csv"), &(error_rows.join("\n") + "\n"))?;
    let echo = cfg.echo_line(&params, 3);
    write_telemetry(&out.join("telemetry.csv"), &echo, &telemetry)?;

    let final_err = |c: usize| -> f64 {
        recon_planes[c]
            .iter()
            .zip(&planes[c])
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    };
    Ok(DemoReport {
        err_i: final_err(1),
        err_q: final_err(2),
        outer_passes: telemetry.outer.len(),
    })
}

/// What `verify` should check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyScope {
    Prox,
    Rates,
    Stationarity,
}

impl VerifyScope {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "prox" => Ok(Self::Prox),
            "rates" => Ok(Self::Rates),
            "stationarity" => Ok(Self::Stationarity),
            other => Err(Error::InvalidParam(format!(
                "unknown verify scope {other:?}; expected prox, rates, or stationarity"
            ))),
        }
    }
}

fn verify_prox(seed: u64, report: &mut String) -> Result<()> {
    let step = 1e-3;
    let tol = 2.0 * step;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for q in [ChannelNorm::One, ChannelNorm::Two, ChannelNorm::Inf] {
        let mut worst: f64 = 0.0;
        for _ in 0..500 {
            let m = rng.gen_range(1..=3);
            let x: Vec<f64> = (0..m).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let v = rng.gen_range(0.1..2.0);
            let fast = shrink(&x, v, q);
            let slow = brute_prox_structured(&x, v, q, step)?;
            for (a, b) in fast.iter().zip(&slow) {
                worst = worst.max((a - b).abs());
            }
        }
        report.push_str(&format!("prox q={q}: max defect {worst:.3e} (tol {tol:.1e})\n"));
        if worst >= tol {
            return Err(Error::CertificateFailed(format!(
                "prox oracle defect {worst:.3e} exceeds {tol:.1e} for q={q}"
            )));
        }
    }
    Ok(())
}

fn verify_rates(seed: u64, report: &mut String) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let gamma = 0.05;
    for inst in 0..5 {
        let lc = 20;
        let data: Vec<f64> = (0..lc * lc).map(|_| normal(&mut rng)).collect();
        let dense = DenseMatrix::new(lc, lc, data)?;
        let raw = Arc::new(BlockOperator::new(
            vec![vec![Some(Arc::new(dense) as Arc<dyn ScalarOperator>)]],
            lc,
        )?);
        let (op, s) = crate::linop::rescale_to_contraction(raw, 0.9)?;
        let _ = s;
        let residual = estimate_residual_norm(&op, 500, 1e-12)?;
        let alpha = rate_alpha(gamma, residual)?;
        let params = RegularizationParams::uniform(ChannelNorm::Two, 30.0, 0.5, gamma, lc)?;
        let g = MeasurementData::new(vec![(0..lc).map(|_| normal(&mut rng)).collect()])?;
        let v = WeightVector::constant(0.3, lc)?;
        // Long reference run for the fixed point, then measure step ratios.
        let mut tel = SolverTelemetry::default();
        let u_ref = inner_solve(
            &op,
            &JointCoefficients::zeros(lc, 1),
            &g,
            &v,
            &params,
            InnerBudget {
                max_iters: 3000,
                step_tol: 1e-14,
            },
            0,
            &mut tel,
        )?;
        let mut u = JointCoefficients::zeros(lc, 1);
        let mut dist = u.sub(&u_ref).norm_l2();
        let mut worst: f64 = 0.0;
        for _ in 0..40 {
            u = landweber_step(&op, &u, &g, &v, &params)?;
            let next = u.sub(&u_ref).norm_l2();
            if dist > 1e-9 {
                worst = worst.max(next / dist);
            }
            dist = next;
        }
        report.push_str(&format!(
            "rates instance {inst}: worst ratio {worst:.6} vs alpha {alpha:.6}\n"
        ));
        if worst > alpha + 1e-6 {
            return Err(Error::CertificateFailed(format!(
                "contraction ratio {worst:.6} exceeds alpha {alpha:.6}"
            )));
        }
    }
    Ok(())
}

fn verify_stationarity(seed: u64, report: &mut String) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(2));
    let lc = 12;
    let d: Vec<f64> = (0..lc).map(|_| rng.gen_range(0.1..0.9)).collect();
    let op = BlockOperator::new(
        vec![vec![Some(Arc::new(DenseMatrix::diagonal(&d)) as Arc<dyn ScalarOperator>)]],
        lc,
    )?
    .with_norm_bound(0.9);
    let params = RegularizationParams::uniform(ChannelNorm::Two, 20.0, 0.5, 0.1, lc)?;
    let g = MeasurementData::new(vec![(0..lc).map(|_| normal(&mut rng)).collect()])?;
    let sol = jointsparse(
        &op,
        &g,
        &params,
        &SolverOptions {
            n_max: 400,
            schedule: InnerSchedule::Fixed(10),
            inner_step_tol: 0.0,
            outer_tol: 1e-13,
            u0: None,
            v0: None,
        },
    )?;
    let step = landweber_step(&op, &sol.u_star, &g, &sol.v_star, &params)?;
    let fixed_defect = step.sub(&sol.u_star).norm_l2();
    let v_check = update_v(&sol.u_star, &params)?;
    let v_defect = sol
        .v_star
        .as_slice()
        .iter()
        .zip(v_check.as_slice())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    report.push_str(&format!(
        "stationarity: fixed-point defect {fixed_defect:.3e}, v defect {v_defect:.3e}\n"
    ));
    if fixed_defect > 1e-6 || v_defect > 1e-10 {
        return Err(Error::CertificateFailed(format!(
            "stationarity defects {fixed_defect:.3e} / {v_defect:.3e} above tolerance"
        )));
    }
    Ok(())
}

/// Run the requested oracle comparisons at desk scale. Returns the defect
/// report; any defect above tolerance is an error (nonzero exit).
pub fn cmd_verify(scopes: &[VerifyScope], seed: u64) -> Result<String> {
    if scopes.is_empty() {
        return Err(Error::InvalidParam(
            "verify needs at least one scope: prox, rates, stationarity".into(),
        ));
    }
    let mut report = String::new();
    for scope in scopes {
        match scope {
            VerifyScope::Prox => verify_prox(seed, &mut report)?,
            VerifyScope::Rates => verify_rates(seed, &mut report)?,
            VerifyScope::Stationarity => verify_stationarity(seed, &mut report)?,
        }
    }
    report.push_str("all checks passed\n");
    Ok(report)
}

/// Report the certified rates (alpha, beta, delta, chosen inner budget)
/// for the instance referenced by the config, or a seeded synthetic one.
pub fn cmd_rates(cfg: &RunConfig) -> Result<String> {
    let (op, channels, lambda_count): (Arc<dyn LinearOperator>, usize, usize) =
        match &cfg.problem {
            Some(dir) => {
                let p = load_problem(dir)?;
                (Arc::new(p.operator), p.channels, p.lambda_count)
            }
            None => {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                let data: Vec<f64> = (0..cfg.measurements * cfg.lambda_count)
                    .map(|_| normal(&mut rng))
                    .collect();
                let a = Arc::new(DenseMatrix::new(cfg.measurements, cfg.lambda_count, data)?);
                let ops: Vec<Arc<dyn ScalarOperator>> = (0..cfg.channels)
                    .map(|_| a.clone() as Arc<dyn ScalarOperator>)
                    .collect();
                (
                    Arc::new(BlockOperator::block_diagonal(ops, cfg.lambda_count)?),
                    cfg.channels,
                    cfg.lambda_count,
                )
            }
        };
    let est = estimate_norm(op.as_ref(), 500, 1e-12)?;
    let (op, scale) = if est.value > cfg.operator_target {
        let s = cfg.operator_target / est.value;
        (
            Arc::new(ScaledOperator::new(op, s).with_norm_bound(cfg.operator_target))
                as Arc<dyn LinearOperator>,
            Some(s),
        )
    } else {
        (
            Arc::new(ScaledOperator::new(op, 1.0).with_norm_bound(est.value))
                as Arc<dyn LinearOperator>,
            None,
        )
    };
    let params = cfg.params_flat(lambda_count)?;
    let residual = estimate_residual_norm(op.as_ref(), 500, 1e-12)?;
    let alpha = rate_alpha(params.gamma, residual)?;
    let mut out = format!(
        "norm_estimate={:.6}\noperator_scale={}\nresidual_norm={:.6}\nalpha={:.6}\n",
        est.value,
        scale.map_or("none".into(), |s| format!("{s:.6}")),
        residual,
        alpha
    );
    match rate_beta(&params, channels, residual) {
        Ok(beta) => {
            let target = cfg.delta_target.unwrap_or((1.0 + beta) / 2.0);
            let l = choose_inner_iters(alpha, beta, target)?;
            out.push_str(&format!(
                "beta={beta:.6}\ndelta_target={target:.6}\ninner_iters={l}\n"
            ));
        }
        Err(Error::RateUnattainable(msg)) => {
            out.push_str(&format!("beta=unattainable ({msg})\n"));
        }
        Err(e) => return Err(e),
    }
    Ok(out)
}

/// Deterministic synthetic test card: smooth color gradients plus a few
/// rectangles, enough structure for the demo without external assets.
pub fn synthetic_color_image(side: usize, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = vec![0.0; side * side * 3];
    for r in 0..side {
        for c in 0..side {
            let p = (r * side + c) * 3;
            data[p] = r as f64 / side as f64;
            data[p + 1] = c as f64 / side as f64;
            data[p + 2] = 0.5 + 0.3 * ((r + c) as f64 / side as f64 - 1.0);
        }
    }
    for _ in 0..6 {
        let r0 = rng.gen_range(0..side / 2);
        let c0 = rng.gen_range(0..side / 2);
        let h = rng.gen_range(side / 8..side / 2);
        let w = rng.gen_range(side / 8..side / 2);
        let color = [rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()];
        for r in r0..(r0 + h).min(side) {
            for c in c0..(c0 + w).min(side) {
                let p = (r * side + c) * 3;
                data[p..p + 3].copy_from_slice(&color);
            }
        }
    }
    Image::new(side, side, 3, data).expect("synthetic image dimensions")
}
