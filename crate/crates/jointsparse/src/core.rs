//! Domain types shared by all modules: coefficient fields, weight
//! sequences, regularization parameters, and problem containers.

use crate::{Error, Result};

/// The mixed-norm exponent applied across channels at each index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelNorm {
    One,
    Two,
    Inf,
}

impl ChannelNorm {
    /// The Hoelder-dual exponent: 1 <-> inf, 2 self-dual.
    pub fn dual(self) -> ChannelNorm {
        match self {
            ChannelNorm::One => ChannelNorm::Inf,
            ChannelNorm::Two => ChannelNorm::Two,
            ChannelNorm::Inf => ChannelNorm::One,
        }
    }

    pub fn parse(s: &str) -> Result<ChannelNorm> {
        match s {
            "1" | "one" => Ok(ChannelNorm::One),
            "2" | "two" => Ok(ChannelNorm::Two),
            "inf" | "infinity" | "oo" => Ok(ChannelNorm::Inf),
            other => Err(Error::Parse(format!("unknown channel norm {other:?}"))),
        }
    }
}

impl std::fmt::Display for ChannelNorm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ChannelNorm::One => write!(f, "1"),
            ChannelNorm::Two => write!(f, "2"),
            ChannelNorm::Inf => write!(f, "inf"),
        }
    }
}

/// `||x||_q` for a channel vector.
pub fn channel_norm(x: &[f64], q: ChannelNorm) -> f64 {
    match q {
        ChannelNorm::One => x.iter().map(|a| a.abs()).sum(),
        ChannelNorm::Two => x.iter().map(|a| a * a).sum::<f64>().sqrt(),
        ChannelNorm::Inf => x.iter().fold(0.0, |m, a| m.max(a.abs())),
    }
}

/// Free-function form of [`ChannelNorm::dual`].
pub fn dual_norm(q: ChannelNorm) -> ChannelNorm {
    q.dual()
}

/// A dense field of frame coefficients: `lambda_count` rows of `channels`
/// entries each, stored channel-contiguous per row.
#[derive(Debug, Clone, PartialEq)]
pub struct JointCoefficients {
    data: Vec<f64>,
    lambda_count: usize,
    channels: usize,
}

impl JointCoefficients {
    pub fn new(lambda_count: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if lambda_count == 0 || channels == 0 {
            return Err(Error::InvalidParam(
                "coefficient field needs at least one index and one channel".into(),
            ));
        }
        if data.len() != lambda_count * channels {
            return Err(Error::Shape {
                context: "JointCoefficients::new",
                expected: lambda_count * channels,
                got: data.len(),
            });
        }
        if !data.iter().all(|a| a.is_finite()) {
            return Err(Error::NonFinite("JointCoefficients"));
        }
        Ok(Self {
            data,
            lambda_count,
            channels,
        })
    }

    pub fn zeros(lambda_count: usize, channels: usize) -> Self {
        Self::new(lambda_count, channels, vec![0.0; lambda_count * channels])
            .expect("zero field is always valid")
    }

    pub fn lambda_count(&self) -> usize {
        self.lambda_count
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn row(&self, lambda: usize) -> &[f64] {
        &self.data[lambda * self.channels..(lambda + 1) * self.channels]
    }

    pub fn row_mut(&mut self, lambda: usize) -> &mut [f64] {
        &mut self.data[lambda * self.channels..(lambda + 1) * self.channels]
    }

    /// Channel `l` as a contiguous vector of length `lambda_count`.
    pub fn channel(&self, l: usize) -> Vec<f64> {
        (0..self.lambda_count)
            .map(|lam| self.data[lam * self.channels + l])
            .collect()
    }

    pub fn set_channel(&mut self, l: usize, values: &[f64]) {
        assert_eq!(values.len(), self.lambda_count);
        for (lam, &x) in values.iter().enumerate() {
            self.data[lam * self.channels + l] = x;
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn norm_l2(&self) -> f64 {
        self.data.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &JointCoefficients) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn sub(&self, other: &JointCoefficients) -> JointCoefficients {
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        JointCoefficients {
            data,
            lambda_count: self.lambda_count,
            channels: self.channels,
        }
    }

    pub fn add(&self, other: &JointCoefficients) -> JointCoefficients {
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        JointCoefficients {
            data,
            lambda_count: self.lambda_count,
            channels: self.channels,
        }
    }

    pub fn scale(&self, s: f64) -> JointCoefficients {
        JointCoefficients {
            data: self.data.iter().map(|a| a * s).collect(),
            lambda_count: self.lambda_count,
            channels: self.channels,
        }
    }
}

/// A per-index nonnegative weight sequence. Depending on role it carries
/// the sparsity indicator `v`, the ceiling `rho`, the coupling `theta`, or
/// the quadratic weight `omega`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    values: Vec<f64>,
}

impl WeightVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if !values.iter().all(|a| a.is_finite() && *a >= 0.0) {
            return Err(Error::NonFinite("WeightVector"));
        }
        Ok(Self { values })
    }

    pub fn constant(value: f64, len: usize) -> Result<Self> {
        Self::new(vec![value; len])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, lambda: usize) -> f64 {
        self.values[lambda]
    }
}

impl std::ops::Index<usize> for WeightVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

/// The regularization tuple `(q, theta, rho, omega)` with the uniform lower
/// bound `gamma` on `omega`.
#[derive(Debug, Clone)]
pub struct RegularizationParams {
    pub q: ChannelNorm,
    pub theta: WeightVector,
    pub rho: WeightVector,
    pub omega: WeightVector,
    pub gamma: f64,
}

impl RegularizationParams {
    pub fn new(
        q: ChannelNorm,
        theta: WeightVector,
        rho: WeightVector,
        omega: WeightVector,
        gamma: f64,
    ) -> Result<Self> {
        let n = theta.len();
        if rho.len() != n {
            return Err(Error::Shape {
                context: "RegularizationParams rho",
                expected: n,
                got: rho.len(),
            });
        }
        if omega.len() != n {
            return Err(Error::Shape {
                context: "RegularizationParams omega",
                expected: n,
                got: omega.len(),
            });
        }
        if !(gamma > 0.0) {
            return Err(Error::InvalidParam(format!(
                "gamma must be positive, got {gamma}"
            )));
        }
        if let Some((lam, &w)) = omega
            .as_slice()
            .iter()
            .enumerate()
            .find(|(_, &w)| w < gamma)
        {
            return Err(Error::InvalidParam(format!(
                "omega[{lam}] = {w} is below the declared lower bound gamma = {gamma}"
            )));
        }
        if let Some((lam, &t)) = theta
            .as_slice()
            .iter()
            .enumerate()
            .find(|(_, &t)| !(t > 0.0))
        {
            return Err(Error::InvalidParam(format!(
                "theta[{lam}] = {t} must be strictly positive"
            )));
        }
        Ok(Self {
            q,
            theta,
            rho,
            omega,
            gamma,
        })
    }

    /// Uniform parameters over `lambda_count` indices.
    pub fn uniform(
        q: ChannelNorm,
        theta: f64,
        rho: f64,
        omega: f64,
        lambda_count: usize,
    ) -> Result<Self> {
        Self::new(
            q,
            WeightVector::constant(theta, lambda_count)?,
            WeightVector::constant(rho, lambda_count)?,
            WeightVector::constant(omega, lambda_count)?,
            omega,
        )
    }

    pub fn lambda_count(&self) -> usize {
        self.theta.len()
    }
}

/// Measurement data split into Hilbert-space blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementData {
    blocks: Vec<Vec<f64>>,
}

impl MeasurementData {
    pub fn new(blocks: Vec<Vec<f64>>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidParam("need at least one data block".into()));
        }
        if !blocks.iter().flatten().all(|a| a.is_finite()) {
            return Err(Error::NonFinite("MeasurementData"));
        }
        Ok(Self { blocks })
    }

    pub fn zeros(dims: &[usize]) -> Self {
        Self {
            blocks: dims.iter().map(|&d| vec![0.0; d]).collect(),
        }
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn block(&self, j: usize) -> &[f64] {
        &self.blocks[j]
    }

    pub fn block_mut(&mut self, j: usize) -> &mut Vec<f64> {
        &mut self.blocks[j]
    }

    pub fn blocks(&self) -> &[Vec<f64>] {
        &self.blocks
    }

    pub fn dims(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.len()).collect()
    }

    pub fn dot(&self, other: &MeasurementData) -> f64 {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>())
            .sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn sub(&self, other: &MeasurementData) -> MeasurementData {
        MeasurementData {
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
                .collect(),
        }
    }

    pub fn scale(&self, s: f64) -> MeasurementData {
        MeasurementData {
            blocks: self
                .blocks
                .iter()
                .map(|b| b.iter().map(|x| x * s).collect())
                .collect(),
        }
    }
}

/// One inner-loop record, keyed by (outer n, inner m).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerRecord {
    pub n: usize,
    pub m: usize,
    /// Inner objective K(u) after the step.
    pub objective_k: f64,
    /// `||u^{m+1} - u^m||_2`.
    pub step_norm: f64,
}

/// One outer-loop record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuterRecord {
    pub n: usize,
    /// Full objective J(u^(n), v^(n)) after the v-update.
    pub objective_j: f64,
    /// `||u^(n) - u^(n-1)||_2` (0 for n = 0).
    pub step_norm: f64,
    /// Measured outer contraction ratio when a previous step exists.
    pub measured_ratio: Option<f64>,
}

/// Append-only per-iteration log of a solver run.
#[derive(Debug, Clone, Default)]
pub struct SolverTelemetry {
    pub inner: Vec<InnerRecord>,
    pub outer: Vec<OuterRecord>,
    /// Scale applied to (T, g) before running, for mapping solutions back.
    pub operator_scale: Option<f64>,
    /// True when the run ended on the outer step tolerance rather than n_max.
    pub stopped_on_tolerance: bool,
}

/// Approximation of the joint minimizer together with its run log.
#[derive(Debug, Clone)]
pub struct Solution {
    pub u_star: JointCoefficients,
    pub v_star: WeightVector,
    pub telemetry: SolverTelemetry,
}
