//! Linear-operator abstraction: the forward map `T`, its adjoint, the
//! block composition from per-channel operators and a synthesis map, and
//! operator-norm estimation/rescaling.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::core::{JointCoefficients, MeasurementData};
use crate::{Error, Result};

/// The forward map `T` from coefficient fields to blocked measurements.
pub trait LinearOperator: Send + Sync {
    fn lambda_count(&self) -> usize;
    fn channels(&self) -> usize;
    fn block_dims(&self) -> Vec<usize>;
    fn apply(&self, u: &JointCoefficients) -> Result<MeasurementData>;
    fn adjoint(&self, g: &MeasurementData) -> Result<JointCoefficients>;
    /// Upper bound on the operator norm, when one is known by construction.
    fn declared_norm_bound(&self) -> Option<f64> {
        None
    }
}

/// A scalar-channel operator: maps one coefficient channel to one block.
pub trait ScalarOperator: Send + Sync {
    fn in_dim(&self) -> usize;
    fn out_dim(&self) -> usize;
    fn apply(&self, x: &[f64]) -> Vec<f64>;
    fn adjoint(&self, y: &[f64]) -> Vec<f64>;
}

/// Dense matrix in row-major order.
#[derive(Debug, Clone)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape {
                context: "DenseMatrix::new",
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self {
            rows: n,
            cols: n,
            data,
        }
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let n = d.len();
        let mut m = Self::identity(n);
        for i in 0..n {
            m.data[i * n + i] = d[i];
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

impl ScalarOperator for DenseMatrix {
    fn in_dim(&self) -> usize {
        self.cols
    }

    fn out_dim(&self) -> usize {
        self.rows
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.rows];
        for i in 0..self.rows {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            y[i] = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
        y
    }

    fn adjoint(&self, y: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.cols];
        for i in 0..self.rows {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            for (xj, a) in x.iter_mut().zip(row) {
                *xj += a * y[i];
            }
        }
        x
    }
}

/// Composition `outer . inner` of two scalar operators.
pub struct ComposedOperator {
    inner: Arc<dyn ScalarOperator>,
    outer: Arc<dyn ScalarOperator>,
}

impl ComposedOperator {
    pub fn new(outer: Arc<dyn ScalarOperator>, inner: Arc<dyn ScalarOperator>) -> Result<Self> {
        if outer.in_dim() != inner.out_dim() {
            return Err(Error::Shape {
                context: "ComposedOperator",
                expected: outer.in_dim(),
                got: inner.out_dim(),
            });
        }
        Ok(Self { inner, outer })
    }
}

impl ScalarOperator for ComposedOperator {
    fn in_dim(&self) -> usize {
        self.inner.in_dim()
    }

    fn out_dim(&self) -> usize {
        self.outer.out_dim()
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.outer.apply(&self.inner.apply(x))
    }

    fn adjoint(&self, y: &[f64]) -> Vec<f64> {
        self.inner.adjoint(&self.outer.adjoint(y))
    }
}

/// N x M grid of scalar-channel operators; block j of the output is the
/// sum over channels of `blocks[j][l]` applied to channel l. Empty cells
/// are zero blocks.
pub struct BlockOperator {
    blocks: Vec<Vec<Option<Arc<dyn ScalarOperator>>>>,
    block_dims: Vec<usize>,
    lambda_count: usize,
    channels: usize,
    norm_bound: Option<f64>,
}

impl BlockOperator {
    pub fn new(
        blocks: Vec<Vec<Option<Arc<dyn ScalarOperator>>>>,
        lambda_count: usize,
    ) -> Result<Self> {
        if blocks.is_empty() || blocks[0].is_empty() {
            return Err(Error::InvalidParam("block grid must be non-empty".into()));
        }
        let channels = blocks[0].len();
        let mut block_dims = vec![0usize; blocks.len()];
        for (j, row) in blocks.iter().enumerate() {
            if row.len() != channels {
                return Err(Error::Shape {
                    context: "BlockOperator row width",
                    expected: channels,
                    got: row.len(),
                });
            }
            let mut dim = None;
            for cell in row.iter().flatten() {
                if cell.in_dim() != lambda_count {
                    return Err(Error::Shape {
                        context: "BlockOperator cell in_dim",
                        expected: lambda_count,
                        got: cell.in_dim(),
                    });
                }
                match dim {
                    None => dim = Some(cell.out_dim()),
                    Some(d) if d == cell.out_dim() => {}
                    Some(d) => {
                        return Err(Error::Shape {
                            context: "BlockOperator cell out_dim",
                            expected: d,
                            got: cell.out_dim(),
                        })
                    }
                }
            }
            // An all-zero row still needs a dimension; default to lambda_count.
            block_dims[j] = dim.unwrap_or(lambda_count);
        }
        Ok(Self {
            blocks,
            block_dims,
            lambda_count,
            channels,
            norm_bound: None,
        })
    }

    /// Block-diagonal operator: block j applies `ops[j]` to channel j.
    pub fn block_diagonal(ops: Vec<Arc<dyn ScalarOperator>>, lambda_count: usize) -> Result<Self> {
        let n = ops.len();
        let mut blocks: Vec<Vec<Option<Arc<dyn ScalarOperator>>>> =
            vec![vec![None; n]; n];
        for (j, op) in ops.into_iter().enumerate() {
            blocks[j][j] = Some(op);
        }
        Self::new(blocks, lambda_count)
    }

    pub fn with_norm_bound(mut self, bound: f64) -> Self {
        self.norm_bound = Some(bound);
        self
    }
}

impl LinearOperator for BlockOperator {
    fn lambda_count(&self) -> usize {
        self.lambda_count
    }

    fn channels(&self) -> usize {
        self.channels
    }

    fn block_dims(&self) -> Vec<usize> {
        self.block_dims.clone()
    }

    fn apply(&self, u: &JointCoefficients) -> Result<MeasurementData> {
        if u.lambda_count() != self.lambda_count || u.channels() != self.channels {
            return Err(Error::Shape {
                context: "BlockOperator::apply",
                expected: self.lambda_count * self.channels,
                got: u.lambda_count() * u.channels(),
            });
        }
        let chans: Vec<Vec<f64>> = (0..self.channels).map(|l| u.channel(l)).collect();
        let mut out = MeasurementData::zeros(&self.block_dims);
        for (j, row) in self.blocks.iter().enumerate() {
            for (l, cell) in row.iter().enumerate() {
                if let Some(op) = cell {
                    let y = op.apply(&chans[l]);
                    for (dst, val) in out.block_mut(j).iter_mut().zip(&y) {
                        *dst += val;
                    }
                }
            }
        }
        Ok(out)
    }

    fn adjoint(&self, g: &MeasurementData) -> Result<JointCoefficients> {
        if g.block_count() != self.blocks.len() {
            return Err(Error::Shape {
                context: "BlockOperator::adjoint blocks",
                expected: self.blocks.len(),
                got: g.block_count(),
            });
        }
        for (j, &d) in self.block_dims.iter().enumerate() {
            if g.block(j).len() != d {
                return Err(Error::Shape {
                    context: "BlockOperator::adjoint block dim",
                    expected: d,
                    got: g.block(j).len(),
                });
            }
        }
        let mut out = JointCoefficients::zeros(self.lambda_count, self.channels);
        for (j, row) in self.blocks.iter().enumerate() {
            for (l, cell) in row.iter().enumerate() {
                if let Some(op) = cell {
                    let x = op.adjoint(g.block(j));
                    for (lam, &val) in x.iter().enumerate() {
                        out.row_mut(lam)[l] += val;
                    }
                }
            }
        }
        Ok(out)
    }

    fn declared_norm_bound(&self) -> Option<f64> {
        self.norm_bound
    }
}

/// An operator scaled by a positive factor; the adjoint scales identically.
pub struct ScaledOperator {
    inner: Arc<dyn LinearOperator>,
    scale: f64,
    norm_bound: Option<f64>,
}

impl ScaledOperator {
    pub fn new(inner: Arc<dyn LinearOperator>, scale: f64) -> Self {
        Self {
            inner,
            scale,
            norm_bound: None,
        }
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn with_norm_bound(mut self, bound: f64) -> Self {
        self.norm_bound = Some(bound);
        self
    }
}

impl LinearOperator for ScaledOperator {
    fn lambda_count(&self) -> usize {
        self.inner.lambda_count()
    }

    fn channels(&self) -> usize {
        self.inner.channels()
    }

    fn block_dims(&self) -> Vec<usize> {
        self.inner.block_dims()
    }

    fn apply(&self, u: &JointCoefficients) -> Result<MeasurementData> {
        Ok(self.inner.apply(u)?.scale(self.scale))
    }

    fn adjoint(&self, g: &MeasurementData) -> Result<JointCoefficients> {
        Ok(self.inner.adjoint(g)?.scale(self.scale))
    }

    fn declared_norm_bound(&self) -> Option<f64> {
        self.norm_bound
            .or_else(|| self.inner.declared_norm_bound().map(|b| b * self.scale.abs()))
    }
}

/// Operator-norm estimate from power iteration on `T* T`, inflated by a
/// fixed safety factor of 1.01.
#[derive(Debug, Clone, Copy)]
pub struct NormEstimate {
    /// Raw power-iteration estimate of `||T||`.
    pub raw: f64,
    /// `raw` inflated by the safety factor; the reported value.
    pub value: f64,
    /// False when the iteration hit `max_iters` before the tolerance.
    pub converged: bool,
    pub iterations: usize,
}

const NORM_SAFETY_FACTOR: f64 = 1.01;

/// Deterministic seeded start vector for power iteration.
fn power_start(lambda_count: usize, channels: usize) -> JointCoefficients {
    let mut rng = ChaCha8Rng::seed_from_u64(0x706f_7765); // "powe"
    let data: Vec<f64> = (0..lambda_count * channels)
        .map(|_| rng.gen_range(-1.0..1.0))
        .collect();
    JointCoefficients::new(lambda_count, channels, data).expect("finite start vector")
}

/// Estimate `||T||` by power iteration on `T* T`.
pub fn estimate_norm(op: &dyn LinearOperator, max_iters: usize, tol: f64) -> Result<NormEstimate> {
    let mut u = power_start(op.lambda_count(), op.channels());
    let mut n = u.norm_l2();
    if n == 0.0 {
        return Err(Error::InvalidParam("degenerate power start".into()));
    }
    u = u.scale(1.0 / n);
    let mut sigma_sq = 0.0;
    let mut converged = false;
    let mut iters = 0;
    for it in 0..max_iters {
        iters = it + 1;
        let w = op.adjoint(&op.apply(&u)?)?;
        let next = w.norm_l2();
        if next == 0.0 {
            // Exact zero operator (or start in the kernel of a zero map).
            return Ok(NormEstimate {
                raw: 0.0,
                value: 0.0,
                converged: true,
                iterations: iters,
            });
        }
        let rel = (next - sigma_sq).abs() / next.max(1e-300);
        u = w.scale(1.0 / next);
        sigma_sq = next;
        if rel < tol {
            converged = true;
            break;
        }
    }
    n = sigma_sq.sqrt();
    Ok(NormEstimate {
        raw: n,
        value: n * NORM_SAFETY_FACTOR,
        converged,
        iterations: iters,
    })
}

/// Rescale so the (inflated) norm estimate meets `target` in (0, 1).
/// Returns the scaled operator and the applied scale factor.
pub fn rescale_to_contraction(
    op: Arc<dyn LinearOperator>,
    target: f64,
) -> Result<(ScaledOperator, f64)> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::InvalidParam(format!(
            "contraction target must lie in (0,1), got {target}"
        )));
    }
    let est = estimate_norm(op.as_ref(), 500, 1e-12)?;
    if est.value == 0.0 {
        return Err(Error::ZeroOperator);
    }
    let scale = target / est.value;
    Ok((
        ScaledOperator::new(op, scale).with_norm_bound(target),
        scale,
    ))
}

/// Orthonormal 2-D Haar transform on a square image, used as synthesis map:
/// `apply` reconstructs an image from coefficients, `adjoint` analyzes.
/// Coefficients live in the usual pyramid layout of a side x side array,
/// flattened row-major.
pub struct HaarSynthesis {
    side: usize,
    levels: usize,
}

impl HaarSynthesis {
    pub fn new(side: usize, levels: usize) -> Result<Self> {
        if side == 0 || levels == 0 || side % (1 << levels) != 0 {
            return Err(Error::InvalidParam(format!(
                "side {side} is not divisible by 2^{levels}"
            )));
        }
        Ok(Self { side, levels })
    }

    /// Full dyadic depth for a power-of-two side.
    pub fn full_depth(side: usize) -> Result<Self> {
        if side == 0 || !side.is_power_of_two() {
            return Err(Error::InvalidParam(format!(
                "full-depth transform needs a power-of-two side, got {side}"
            )));
        }
        let levels = side.trailing_zeros() as usize;
        Self::new(side, levels.max(1))
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Scale index per coefficient: 0 for the coarsest block, increasing
    /// toward the finest detail bands (scale `levels` at the full side).
    pub fn scales(&self) -> Vec<u32> {
        let side = self.side;
        let mut out = vec![0u32; side * side];
        // Decomposition step t operates on a cur x cur block and emits
        // detail bands occupying [cur/2, cur) in each direction.
        for t in 1..=self.levels {
            let cur = side >> (t - 1);
            let half = cur / 2;
            let j = (self.levels - t + 1) as u32;
            for r in 0..cur {
                for c in 0..cur {
                    if r >= half || c >= half {
                        out[r * side + c] = j;
                    }
                }
            }
        }
        out
    }

    fn analyze_1d(buf: &mut [f64], tmp: &mut [f64], n: usize) {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for k in 0..n / 2 {
            tmp[k] = (buf[2 * k] + buf[2 * k + 1]) * s;
            tmp[n / 2 + k] = (buf[2 * k] - buf[2 * k + 1]) * s;
        }
        buf[..n].copy_from_slice(&tmp[..n]);
    }

    fn synthesize_1d(buf: &mut [f64], tmp: &mut [f64], n: usize) {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for k in 0..n / 2 {
            tmp[2 * k] = (buf[k] + buf[n / 2 + k]) * s;
            tmp[2 * k + 1] = (buf[k] - buf[n / 2 + k]) * s;
        }
        buf[..n].copy_from_slice(&tmp[..n]);
    }

    fn transform(&self, x: &[f64], forward: bool) -> Vec<f64> {
        let side = self.side;
        let mut img = x.to_vec();
        let mut tmp = vec![0.0; side];
        let mut col = vec![0.0; side];
        let step = |img: &mut Vec<f64>, tmp: &mut Vec<f64>, col: &mut Vec<f64>, cur: usize, fwd: bool| {
            for r in 0..cur {
                let row = &mut img[r * side..r * side + cur];
                if fwd {
                    Self::analyze_1d(row, tmp, cur);
                } else {
                    Self::synthesize_1d(row, tmp, cur);
                }
            }
            for c in 0..cur {
                for r in 0..cur {
                    col[r] = img[r * side + c];
                }
                if fwd {
                    Self::analyze_1d(col, tmp, cur);
                } else {
                    Self::synthesize_1d(col, tmp, cur);
                }
                for r in 0..cur {
                    img[r * side + c] = col[r];
                }
            }
        };
        if forward {
            let mut cur = side;
            for _ in 0..self.levels {
                step(&mut img, &mut tmp, &mut col, cur, true);
                cur /= 2;
            }
        } else {
            let mut cur = side >> (self.levels - 1);
            for _ in 0..self.levels {
                step(&mut img, &mut tmp, &mut col, cur, false);
                cur *= 2;
            }
        }
        img
    }
}

impl ScalarOperator for HaarSynthesis {
    fn in_dim(&self) -> usize {
        self.side * self.side
    }

    fn out_dim(&self) -> usize {
        self.side * self.side
    }

    fn apply(&self, coeffs: &[f64]) -> Vec<f64> {
        self.transform(coeffs, false)
    }

    fn adjoint(&self, image: &[f64]) -> Vec<f64> {
        // Orthonormal: adjoint of synthesis is analysis.
        self.transform(image, true)
    }
}

/// Convolution (symmetric boundary extension) followed by decimation:
/// the high-to-low resolution operator of the block model.
pub struct BlurDecimate {
    side: usize,
    factor: usize,
    kernel: Vec<f64>,
}

impl BlurDecimate {
    pub fn new(side: usize, factor: usize, kernel: Vec<f64>) -> Result<Self> {
        if factor == 0 || side % factor != 0 {
            return Err(Error::InvalidParam(format!(
                "downsample factor {factor} does not divide side {side}"
            )));
        }
        if kernel.is_empty() || kernel.len() % 2 == 0 {
            return Err(Error::InvalidParam(
                "blur kernel must have odd length".into(),
            ));
        }
        let sum: f64 = kernel.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParam(format!(
                "blur kernel must sum to 1, got {sum}"
            )));
        }
        Ok(Self {
            side,
            factor,
            kernel,
        })
    }

    /// Normalized Gaussian taps of the given (odd) length.
    pub fn gaussian_kernel(len: usize, sigma: f64) -> Vec<f64> {
        assert!(len % 2 == 1);
        let c = (len / 2) as f64;
        let mut k: Vec<f64> = (0..len)
            .map(|i| (-((i as f64 - c).powi(2)) / (2.0 * sigma * sigma)).exp())
            .collect();
        let s: f64 = k.iter().sum();
        for v in &mut k {
            *v /= s;
        }
        k
    }

    fn mirror(i: isize, n: usize) -> usize {
        let n = n as isize;
        let mut i = i;
        loop {
            if i < 0 {
                i = -i - 1;
            } else if i >= n {
                i = 2 * n - 1 - i;
            } else {
                return i as usize;
            }
        }
    }

    fn conv_1d(&self, x: &[f64], n: usize) -> Vec<f64> {
        let c = (self.kernel.len() / 2) as isize;
        (0..n as isize)
            .map(|i| {
                self.kernel
                    .iter()
                    .enumerate()
                    .map(|(k, h)| h * x[Self::mirror(i + k as isize - c, n)])
                    .sum()
            })
            .collect()
    }

    fn conv_1d_adjoint(&self, y: &[f64], n: usize) -> Vec<f64> {
        let c = (self.kernel.len() / 2) as isize;
        let mut x = vec![0.0; n];
        for (i, &yi) in y.iter().enumerate() {
            for (k, h) in self.kernel.iter().enumerate() {
                x[Self::mirror(i as isize + k as isize - c, n)] += h * yi;
            }
        }
        x
    }

    fn blur_2d(&self, img: &[f64]) -> Vec<f64> {
        let n = self.side;
        let mut out = vec![0.0; n * n];
        for r in 0..n {
            let row = self.conv_1d(&img[r * n..(r + 1) * n], n);
            out[r * n..(r + 1) * n].copy_from_slice(&row);
        }
        let mut col = vec![0.0; n];
        for c in 0..n {
            for r in 0..n {
                col[r] = out[r * n + c];
            }
            let filtered = self.conv_1d(&col, n);
            for r in 0..n {
                out[r * n + c] = filtered[r];
            }
        }
        out
    }

    fn blur_2d_adjoint(&self, img: &[f64]) -> Vec<f64> {
        let n = self.side;
        let mut out = img.to_vec();
        let mut col = vec![0.0; n];
        for c in 0..n {
            for r in 0..n {
                col[r] = out[r * n + c];
            }
            let back = self.conv_1d_adjoint(&col, n);
            for r in 0..n {
                out[r * n + c] = back[r];
            }
        }
        let mut final_out = vec![0.0; n * n];
        for r in 0..n {
            let row = self.conv_1d_adjoint(&out[r * n..(r + 1) * n], n);
            final_out[r * n..(r + 1) * n].copy_from_slice(&row);
        }
        final_out
    }
}

impl ScalarOperator for BlurDecimate {
    fn in_dim(&self) -> usize {
        self.side * self.side
    }

    fn out_dim(&self) -> usize {
        (self.side / self.factor) * (self.side / self.factor)
    }

    fn apply(&self, img: &[f64]) -> Vec<f64> {
        let blurred = self.blur_2d(img);
        let low = self.side / self.factor;
        let mut out = vec![0.0; low * low];
        for r in 0..low {
            for c in 0..low {
                out[r * low + c] = blurred[(r * self.factor) * self.side + c * self.factor];
            }
        }
        out
    }

    fn adjoint(&self, low_img: &[f64]) -> Vec<f64> {
        let low = self.side / self.factor;
        let mut up = vec![0.0; self.side * self.side];
        for r in 0..low {
            for c in 0..low {
                up[(r * self.factor) * self.side + c * self.factor] = low_img[r * low + c];
            }
        }
        self.blur_2d_adjoint(&up)
    }
}

/// The 3x3 block-diagonal color model: blocks (F, A.F, A.F) where F is the
/// supplied synthesis transform and A blurs and decimates.
pub fn build_color_model(
    blur_kernel: &[f64],
    downsample: usize,
    transform: Arc<dyn ScalarOperator>,
) -> Result<BlockOperator> {
    let pixels = transform.out_dim();
    let side = (pixels as f64).sqrt().round() as usize;
    if side * side != pixels {
        return Err(Error::InvalidParam(format!(
            "transform output of {pixels} values is not a square image"
        )));
    }
    let a = Arc::new(BlurDecimate::new(side, downsample, blur_kernel.to_vec())?);
    let af: Arc<dyn ScalarOperator> = Arc::new(ComposedOperator::new(a, transform.clone())?);
    BlockOperator::block_diagonal(
        vec![transform.clone(), af.clone(), af],
        transform.in_dim(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_dense(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
        DenseMatrix::new(
            rows,
            cols,
            (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        )
        .unwrap()
    }

    fn adjoint_defect(op: &dyn LinearOperator, rng: &mut ChaCha8Rng) -> f64 {
        let lc = op.lambda_count();
        let m = op.channels();
        let dims = op.block_dims();
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let u = JointCoefficients::new(
                lc,
                m,
                (0..lc * m).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            )
            .unwrap();
            let g = MeasurementData::new(
                dims.iter()
                    .map(|&d| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect())
                    .collect(),
            )
            .unwrap();
            let lhs = op.apply(&u).unwrap().dot(&g);
            let rhs = u.dot(&op.adjoint(&g).unwrap());
            let scale = lhs.abs().max(rhs.abs()).max(1e-12);
            worst = worst.max((lhs - rhs).abs() / scale);
        }
        worst
    }

    #[test]
    fn identity_block_operator_flattens() {
        let op = BlockOperator::block_diagonal(
            vec![Arc::new(DenseMatrix::identity(4)), Arc::new(DenseMatrix::identity(4))],
            4,
        )
        .unwrap();
        let u = JointCoefficients::new(4, 2, (0..8).map(|i| i as f64).collect()).unwrap();
        let g = op.apply(&u).unwrap();
        assert_eq!(g.block(0), u.channel(0).as_slice());
        assert_eq!(g.block(1), u.channel(1).as_slice());
    }

    #[test]
    fn dense_block_matches_matrix_column() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_dense(&mut rng, 4, 6);
        let col2: Vec<f64> = (0..4).map(|i| a.get(i, 2)).collect();
        let op = BlockOperator::new(vec![vec![Some(Arc::new(a) as Arc<dyn ScalarOperator>)]], 6)
            .unwrap();
        let mut u = JointCoefficients::zeros(6, 1);
        u.row_mut(2)[0] = 1.0;
        let g = op.apply(&u).unwrap();
        assert_eq!(g.block(0), col2.as_slice());
    }

    #[test]
    fn adjoint_consistency_random_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let blocks: Vec<Vec<Option<Arc<dyn ScalarOperator>>>> = vec![
            vec![
                Some(Arc::new(random_dense(&mut rng, 3, 5))),
                None,
            ],
            vec![
                Some(Arc::new(random_dense(&mut rng, 4, 5))),
                Some(Arc::new(random_dense(&mut rng, 4, 5))),
            ],
        ];
        let op = BlockOperator::new(blocks, 5).unwrap();
        assert!(adjoint_defect(&op, &mut rng) <= 1e-10);
    }

    #[test]
    fn single_block_equals_scalar_operator() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_dense(&mut rng, 3, 4);
        let direct = a.apply(&[1.0, -1.0, 2.0, 0.5]);
        let op = BlockOperator::new(
            vec![vec![None, Some(Arc::new(a) as Arc<dyn ScalarOperator>)]],
            4,
        )
        .unwrap();
        let mut u = JointCoefficients::zeros(4, 2);
        u.set_channel(1, &[1.0, -1.0, 2.0, 0.5]);
        let g = op.apply(&u).unwrap();
        assert_eq!(g.block(0), direct.as_slice());
    }

    #[test]
    fn estimate_norm_diagonal() {
        let op = BlockOperator::new(
            vec![vec![Some(
                Arc::new(DenseMatrix::diagonal(&[0.5, 0.25])) as Arc<dyn ScalarOperator>,
            )]],
            2,
        )
        .unwrap();
        let est = estimate_norm(&op, 500, 1e-12).unwrap();
        assert!((est.raw - 0.5).abs() < 1e-9);
        assert!((est.value - 0.505).abs() < 1e-9);
    }

    #[test]
    fn estimate_norm_identity() {
        let op = BlockOperator::new(
            vec![vec![Some(Arc::new(DenseMatrix::identity(10)) as Arc<dyn ScalarOperator>)]],
            10,
        )
        .unwrap();
        let est = estimate_norm(&op, 200, 1e-12).unwrap();
        assert!((est.value - 1.01).abs() < 1e-9);
    }

    #[test]
    fn rescale_examples() {
        let op: Arc<dyn LinearOperator> = Arc::new(
            BlockOperator::new(
                vec![vec![Some(
                    Arc::new(DenseMatrix::diagonal(&[2.0, 1.0])) as Arc<dyn ScalarOperator>,
                )]],
                2,
            )
            .unwrap(),
        );
        let (scaled, s) = rescale_to_contraction(op, 0.9).unwrap();
        assert!((s - 0.9 / (2.0 * 1.01)).abs() < 1e-9);
        let re = estimate_norm(&scaled, 500, 1e-12).unwrap();
        assert!(re.raw <= 0.95);

        let op: Arc<dyn LinearOperator> = Arc::new(
            BlockOperator::new(
                vec![vec![Some(
                    Arc::new(DenseMatrix::diagonal(&[0.5, 0.1])) as Arc<dyn ScalarOperator>,
                )]],
                2,
            )
            .unwrap(),
        );
        let (_, s) = rescale_to_contraction(op, 0.9).unwrap();
        assert!((s - 0.9 / (0.5 * 1.01)).abs() < 1e-9);
    }

    #[test]
    fn rescale_zero_operator_fails() {
        let op: Arc<dyn LinearOperator> = Arc::new(
            BlockOperator::new(
                vec![vec![Some(
                    Arc::new(DenseMatrix::new(2, 2, vec![0.0; 4]).unwrap())
                        as Arc<dyn ScalarOperator>,
                )]],
                2,
            )
            .unwrap(),
        );
        assert!(matches!(
            rescale_to_contraction(op, 0.9),
            Err(Error::ZeroOperator)
        ));
    }

    #[test]
    fn haar_is_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let f = HaarSynthesis::full_depth(8).unwrap();
        let x: Vec<f64> = (0..64).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let coeffs = f.adjoint(&x);
        let back = f.apply(&coeffs);
        for (a, b) in x.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
        // isometry
        let nx: f64 = x.iter().map(|a| a * a).sum();
        let nc: f64 = coeffs.iter().map(|a| a * a).sum();
        assert!((nx - nc).abs() < 1e-10);
    }

    #[test]
    fn haar_scales_layout() {
        let f = HaarSynthesis::new(8, 3).unwrap();
        let scales = f.scales();
        // Top-left 1x1 after 3 levels is the coarsest approximation.
        assert_eq!(scales[0], 0);
        // Finest detail bands occupy everything at offsets >= 4.
        assert_eq!(scales[4 * 8 + 4], 3);
        assert_eq!(scales[7 * 8 + 7], 3);
        // Level-2 details sit in [2,4).
        assert_eq!(scales[2 * 8 + 2], 2);
        // Coarsest details at offset 1.
        assert_eq!(scales[8 + 1], 1);
    }

    #[test]
    fn blur_decimate_preserves_dc() {
        let kernel = BlurDecimate::gaussian_kernel(5, 1.0);
        let op = BlurDecimate::new(8, 4, kernel).unwrap();
        let img = vec![0.7; 64];
        let low = op.apply(&img);
        assert_eq!(low.len(), 4);
        for v in low {
            assert!((v - 0.7).abs() < 1e-12);
        }
    }

    #[test]
    fn blur_decimate_adjoint_consistency() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let op = BlurDecimate::new(8, 2, BlurDecimate::gaussian_kernel(5, 1.2)).unwrap();
        for _ in 0..50 {
            let x: Vec<f64> = (0..64).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let y: Vec<f64> = (0..16).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let lhs: f64 = op.apply(&x).iter().zip(&y).map(|(a, b)| a * b).sum();
            let rhs: f64 = x.iter().zip(op.adjoint(&y)).map(|(a, b)| a * b).sum();
            assert!((lhs - rhs).abs() < 1e-10);
        }
    }

    #[test]
    fn color_model_shapes() {
        let f: Arc<dyn ScalarOperator> = Arc::new(HaarSynthesis::full_depth(8).unwrap());
        let kernel = BlurDecimate::gaussian_kernel(5, 1.0);
        let op = build_color_model(&kernel, 4, f).unwrap();
        assert_eq!(op.block_dims(), vec![64, 4, 4]);
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        assert!(adjoint_defect(&op, &mut rng) <= 1e-10);
    }

    #[test]
    fn color_model_identity_downsample() {
        let f: Arc<dyn ScalarOperator> = Arc::new(HaarSynthesis::full_depth(4).unwrap());
        let op = build_color_model(&[1.0], 1, f.clone()).unwrap();
        // All three blocks act as plain F.
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let coeffs: Vec<f64> = (0..16).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut u = JointCoefficients::zeros(16, 3);
        for l in 0..3 {
            u.set_channel(l, &coeffs);
        }
        let g = op.apply(&u).unwrap();
        let direct = f.apply(&coeffs);
        for j in 0..3 {
            for (a, b) in g.block(j).iter().zip(&direct) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
