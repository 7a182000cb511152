//! Flat key=value run configuration and the per-index metadata table.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use crate::core::{ChannelNorm, RegularizationParams, WeightVector};
use crate::functionals::{check_convexity, check_strong_rate};
use crate::{Error, Result};

/// Everything a run needs, parsed from a flat `key=value` file.
/// Unknown keys are rejected rather than silently ignored.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub q: ChannelNorm,
    pub theta: f64,
    pub omega: f64,
    /// Lower bound used for the inner rate; defaults to omega.
    pub gamma: Option<f64>,
    /// rho at scale 0; per-index weights follow rho_base * 2^{-j s}.
    pub rho_base: f64,
    pub rho_s: f64,
    pub n_max: usize,
    /// Fixed inner budget L; mutually exclusive with `delta_target`.
    pub inner_iters: Option<usize>,
    /// Per-pass contraction target for the derived budget.
    pub delta_target: Option<f64>,
    pub inner_step_tol: f64,
    pub outer_tol: f64,
    pub seed: u64,
    /// Norm the forward operator is rescaled to before solving.
    pub operator_target: f64,
    /// Problem directory produced by `gen` (for `solve`).
    pub problem: Option<PathBuf>,
    /// Ground-truth color image (for `demo-color`).
    pub image: Option<PathBuf>,
    pub downsample: usize,
    // Synthetic-instance shape (for `gen`).
    pub lambda_count: usize,
    pub channels: usize,
    pub measurements: usize,
    pub sparsity: usize,
    pub overlap: f64,
    pub noise: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            q: ChannelNorm::Inf,
            theta: 10.0,
            omega: 0.05,
            gamma: None,
            rho_base: 1.0,
            rho_s: 0.75,
            n_max: 15,
            inner_iters: Some(7),
            delta_target: None,
            inner_step_tol: 0.0,
            outer_tol: 1e-8,
            seed: 0,
            operator_target: 0.9,
            problem: None,
            image: None,
            downsample: 4,
            lambda_count: 128,
            channels: 3,
            measurements: 64,
            sparsity: 8,
            overlap: 1.0,
            noise: 0.0,
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_str(&text)
    }

    pub fn from_str(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = HashSet::new();
        let mut inner_set = false;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Parse(format!("line {}: expected key=value, got {raw:?}", lineno + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            if !seen.insert(key.to_string()) {
                return Err(Error::Parse(format!("duplicate key {key:?}")));
            }
            let f = |v: &str| -> Result<f64> {
                v.parse()
                    .map_err(|_| Error::Parse(format!("key {key}: bad number {v:?}")))
            };
            let u = |v: &str| -> Result<usize> {
                v.parse()
                    .map_err(|_| Error::Parse(format!("key {key}: bad integer {v:?}")))
            };
            match key {
                "q" => cfg.q = ChannelNorm::parse(value)?,
                "theta" => cfg.theta = f(value)?,
                "omega" => cfg.omega = f(value)?,
                "gamma" => cfg.gamma = Some(f(value)?),
                "rho_base" => cfg.rho_base = f(value)?,
                "rho_s" => cfg.rho_s = f(value)?,
                "n_max" => cfg.n_max = u(value)?,
                "inner_iters" => {
                    cfg.inner_iters = Some(u(value)?);
                    inner_set = true;
                }
                "delta_target" => {
                    cfg.delta_target = Some(f(value)?);
                    if !inner_set {
                        cfg.inner_iters = None;
                    }
                }
                "inner_step_tol" => cfg.inner_step_tol = f(value)?,
                "outer_tol" => cfg.outer_tol = f(value)?,
                "seed" => {
                    cfg.seed = value
                        .parse()
                        .map_err(|_| Error::Parse(format!("key seed: bad integer {value:?}")))?;
                }
                "operator_target" => cfg.operator_target = f(value)?,
                "problem" => cfg.problem = Some(PathBuf::from(value)),
                "image" => cfg.image = Some(PathBuf::from(value)),
                "downsample" => cfg.downsample = u(value)?,
                "lambda_count" => cfg.lambda_count = u(value)?,
                "channels" => cfg.channels = u(value)?,
                "measurements" => cfg.measurements = u(value)?,
                "sparsity" => cfg.sparsity = u(value)?,
                "overlap" => cfg.overlap = f(value)?,
                "noise" => cfg.noise = f(value)?,
                "tv" => {
                    return Err(Error::Parse(
                        "total-variation augmentation is out of scope for this tool; \
                         remove the `tv` key (see README non-goals)"
                            .into(),
                    ))
                }
                other => {
                    return Err(Error::Parse(format!("unknown key {other:?}")));
                }
            }
        }
        if inner_set && cfg.delta_target.is_some() {
            return Err(Error::Parse(
                "inner_iters and delta_target are mutually exclusive".into(),
            ));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0) || !(self.omega > 0.0) {
            return Err(Error::InvalidParam(
                "theta and omega must be positive".into(),
            ));
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0) || g > self.omega {
                return Err(Error::InvalidParam(format!(
                    "gamma must lie in (0, omega]; got {g} with omega {}",
                    self.omega
                )));
            }
        }
        if !(self.rho_base >= 0.0) || !self.rho_s.is_finite() {
            return Err(Error::InvalidParam("bad rho rule".into()));
        }
        if !(self.operator_target > 0.0 && self.operator_target < 1.0) {
            return Err(Error::InvalidParam(format!(
                "operator_target must lie in (0,1), got {}",
                self.operator_target
            )));
        }
        if let Some(l) = self.inner_iters {
            if l == 0 {
                return Err(Error::InvalidParam("inner_iters must be >= 1".into()));
            }
        }
        if !(0.0..=1.0).contains(&self.overlap) {
            return Err(Error::InvalidParam(format!(
                "overlap must lie in [0,1], got {}",
                self.overlap
            )));
        }
        if self.sparsity > self.lambda_count {
            return Err(Error::InvalidParam(format!(
                "sparsity {} exceeds lambda_count {}",
                self.sparsity, self.lambda_count
            )));
        }
        if self.channels == 0 || self.lambda_count == 0 || self.measurements == 0 {
            return Err(Error::InvalidParam(
                "lambda_count, channels, measurements must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Regularization tuple for a flat index set (every index at scale 0).
    pub fn params_flat(&self, lambda_count: usize) -> Result<RegularizationParams> {
        self.params_for(&IndexMeta::flat(lambda_count))
    }

    /// Regularization tuple with the per-scale rho rule applied.
    pub fn params_for(&self, meta: &IndexMeta) -> Result<RegularizationParams> {
        let n = meta.scales.len();
        let rho: Vec<f64> = meta
            .scales
            .iter()
            .map(|&j| self.rho_base * 2f64.powf(-(j as f64) * self.rho_s))
            .collect();
        RegularizationParams::new(
            self.q,
            WeightVector::constant(self.theta, n)?,
            WeightVector::new(rho)?,
            WeightVector::constant(self.omega, n)?,
            self.gamma.unwrap_or(self.omega),
        )
    }

    /// One-line `key=value` echo of the solver-relevant parameters,
    /// including the certificate outcomes, for telemetry headers.
    pub fn echo_line(&self, params: &RegularizationParams, channels: usize) -> String {
        let conv = check_convexity(params, channels);
        let rate = check_strong_rate(params, channels);
        format!(
            "# q={} theta={} omega={} rho_base={} rho_s={} n_max={} inner_iters={} \
             delta_target={} seed={} convex={} strict={} strong_rate={} sigma={:.6} phi_q={:.6}",
            self.q,
            self.theta,
            self.omega,
            self.rho_base,
            self.rho_s,
            self.n_max,
            self.inner_iters.map_or("auto".into(), |l| l.to_string()),
            self.delta_target.map_or("none".into(), |d| d.to_string()),
            self.seed,
            conv.convex,
            conv.strict,
            rate.ok,
            rate.sigma,
            rate.phi_q,
        )
    }
}

/// Per-index structural metadata: the dyadic scale of each coefficient.
/// The solver itself never inspects this; it only shapes the rho weights.
#[derive(Debug, Clone)]
pub struct IndexMeta {
    pub scales: Vec<u32>,
}

impl IndexMeta {
    /// Unstructured index set: everything at scale 0.
    pub fn flat(lambda_count: usize) -> Self {
        Self {
            scales: vec![0; lambda_count],
        }
    }

    pub fn from_scales(scales: Vec<u32>) -> Self {
        Self { scales }
    }
}
