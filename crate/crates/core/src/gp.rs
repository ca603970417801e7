//! Exact zero-mean GP regression with a squared-exponential ARD kernel.

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, Cholesky};
use crate::par::{self, Execution};

/// Design inputs and outputs, stored in the (possibly normalised) space the
/// GP works in, together with the affine map back to original units.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    n: usize,
    d: usize,
    inputs: Vec<f64>,
    outputs: Vec<f64>,
    input_shift: Vec<f64>,
    input_scale: Vec<f64>,
    output_shift: f64,
    output_scale: f64,
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    (
        mean,
        if std > 0.0 && std.is_finite() {
            std
        } else {
            1.0
        },
    )
}

impl TrainingSet {
    /// Training set used as-is (identity normalisation).
    pub fn new(inputs: Vec<Vec<f64>>, outputs: Vec<f64>) -> Result<Self> {
        let d = inputs.first().map_or(0, Vec::len);
        Self::build(inputs, outputs, vec![0.0; d], vec![1.0; d], 0.0, 1.0)
    }

    /// Standardises every input column and the output to zero mean and unit
    /// (population) standard deviation. Constant columns keep scale 1.
    pub fn normalized(inputs: Vec<Vec<f64>>, outputs: Vec<f64>) -> Result<Self> {
        let d = inputs.first().map_or(0, Vec::len);
        if inputs.is_empty() || d == 0 {
            return Err(invalid("training set needs N >= 1 rows and d >= 1 columns"));
        }
        if inputs.iter().any(|r| r.len() != d) {
            return Err(invalid("ragged input rows"));
        }
        let mut shift = Vec::with_capacity(d);
        let mut scale = Vec::with_capacity(d);
        for j in 0..d {
            let (m, s) = mean_std(inputs.iter().map(|r| r[j]));
            shift.push(m);
            scale.push(s);
        }
        let (ym, ys) = mean_std(outputs.iter().copied());
        Self::build(inputs, outputs, shift, scale, ym, ys)
    }

    /// Builds a set from original-unit data and an explicit normalisation.
    pub fn with_normalization(
        inputs: Vec<Vec<f64>>,
        outputs: Vec<f64>,
        input_shift: Vec<f64>,
        input_scale: Vec<f64>,
        output_shift: f64,
        output_scale: f64,
    ) -> Result<Self> {
        Self::build(
            inputs,
            outputs,
            input_shift,
            input_scale,
            output_shift,
            output_scale,
        )
    }

    fn build(
        inputs: Vec<Vec<f64>>,
        outputs: Vec<f64>,
        input_shift: Vec<f64>,
        input_scale: Vec<f64>,
        output_shift: f64,
        output_scale: f64,
    ) -> Result<Self> {
        let n = inputs.len();
        let d = inputs.first().map_or(0, Vec::len);
        if n == 0 || d == 0 {
            return Err(invalid("training set needs N >= 1 rows and d >= 1 columns"));
        }
        if outputs.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: outputs.len(),
            });
        }
        if input_shift.len() != d || input_scale.len() != d {
            return Err(Error::Dimension {
                expected: d,
                got: input_shift.len().min(input_scale.len()),
            });
        }
        if input_scale.iter().any(|s| !(*s > 0.0) || !s.is_finite()) || !(output_scale > 0.0) {
            return Err(invalid("normalisation scales must be positive"));
        }
        let mut flat = Vec::with_capacity(n * d);
        for row in &inputs {
            if row.len() != d {
                return Err(Error::Dimension {
                    expected: d,
                    got: row.len(),
                });
            }
            for (j, v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(invalid("non-finite training input"));
                }
                flat.push((v - input_shift[j]) / input_scale[j]);
            }
        }
        if outputs.iter().any(|v| !v.is_finite()) {
            return Err(invalid("non-finite training output"));
        }
        let outputs = outputs
            .iter()
            .map(|y| (y - output_shift) / output_scale)
            .collect();
        for i in 0..n {
            for k in 0..i {
                if flat[i * d..(i + 1) * d] == flat[k * d..(k + 1) * d] {
                    return Err(invalid(format!(
                        "duplicate training inputs at rows {k} and {i}"
                    )));
                }
            }
        }
        Ok(Self {
            n,
            d,
            inputs: flat,
            outputs,
            input_shift,
            input_scale,
            output_shift,
            output_scale,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Normalised input row `i`.
    pub fn input(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.d..(i + 1) * self.d]
    }

    /// Normalised outputs.
    pub fn outputs(&self) -> &[f64] {
        &self.outputs
    }

    pub fn input_shift(&self) -> &[f64] {
        &self.input_shift
    }

    pub fn input_scale(&self) -> &[f64] {
        &self.input_scale
    }

    pub fn output_shift(&self) -> f64 {
        self.output_shift
    }

    pub fn output_scale(&self) -> f64 {
        self.output_scale
    }

    pub fn normalize_input(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.input_shift)
            .zip(&self.input_scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }

    pub fn denormalize_input(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.input_shift)
            .zip(&self.input_scale)
            .map(|((v, m), s)| m + s * v)
            .collect()
    }

    pub fn normalize_output(&self, y: f64) -> f64 {
        (y - self.output_shift) / self.output_scale
    }

    pub fn denormalize_output(&self, y: f64) -> f64 {
        self.output_shift + self.output_scale * y
    }

    /// Input row `i` in original units.
    pub fn original_input(&self, i: usize) -> Vec<f64> {
        self.denormalize_input(self.input(i))
    }

    pub fn original_output(&self, i: usize) -> f64 {
        self.denormalize_output(self.outputs[i])
    }

    /// Copy with row `i` removed, keeping the normalisation metadata.
    pub fn without(&self, i: usize) -> Result<Self> {
        if self.n < 2 {
            return Err(invalid("cannot remove the only training row"));
        }
        let mut out = self.clone();
        out.inputs.drain(i * self.d..(i + 1) * self.d);
        out.outputs.remove(i);
        out.n -= 1;
        Ok(out)
    }

    /// Copy with one extra (already normalised) row.
    pub fn with_row(&self, x: &[f64], y: f64) -> Result<Self> {
        if x.len() != self.d {
            return Err(Error::Dimension {
                expected: self.d,
                got: x.len(),
            });
        }
        let mut out = self.clone();
        out.inputs.extend_from_slice(x);
        out.outputs.push(y);
        out.n += 1;
        Ok(out)
    }
}

/// Signal variance σ², ARD lengthscales θ and the diagonal nugget.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperParams {
    pub sigma2: f64,
    pub lengthscales: Vec<f64>,
    pub nugget: f64,
}

impl HyperParams {
    pub fn new(sigma2: f64, lengthscales: Vec<f64>, nugget: f64) -> Result<Self> {
        let p = Self {
            sigma2,
            lengthscales,
            nugget,
        };
        p.validate()?;
        Ok(p)
    }

    /// Isotropic lengthscale in `d` dimensions.
    pub fn isotropic(sigma2: f64, lengthscale: f64, d: usize, nugget: f64) -> Result<Self> {
        Self::new(sigma2, vec![lengthscale; d], nugget)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma2 > 0.0) || !self.sigma2.is_finite() {
            return Err(invalid(format!(
                "sigma2 must be positive, got {}",
                self.sigma2
            )));
        }
        if self.lengthscales.is_empty() {
            return Err(invalid("at least one lengthscale is required"));
        }
        if self
            .lengthscales
            .iter()
            .any(|t| !(*t > 0.0) || !t.is_finite())
        {
            return Err(invalid("lengthscales must be positive and finite"));
        }
        if !(self.nugget >= 0.0) || !self.nugget.is_finite() {
            return Err(invalid("nugget must be non-negative"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }
}

/// Precomputed `1 / (2 θᵢ²)` for the kernel hot loop.
#[derive(Debug, Clone, PartialEq)]
struct KernelWeights {
    sigma2: f64,
    inv_two_theta2: Vec<f64>,
}

impl KernelWeights {
    fn new(params: &HyperParams) -> Self {
        Self {
            sigma2: params.sigma2,
            inv_two_theta2: params.lengthscales.iter().map(|t| 0.5 / (t * t)).collect(),
        }
    }

    #[inline]
    fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut s = 0.0;
        for ((a, b), w) in x.iter().zip(y).zip(&self.inv_two_theta2) {
            let d = a - b;
            s += d * d * w;
        }
        self.sigma2 * (-s).exp()
    }
}

/// Squared-exponential ARD covariance `σ² exp(−Σ (xᵢ−x'ᵢ)² / (2θᵢ²))`.
pub fn kernel(x: &[f64], x2: &[f64], params: &HyperParams) -> Result<f64> {
    let d = params.dim();
    if x.len() != d {
        return Err(Error::Dimension {
            expected: d,
            got: x.len(),
        });
    }
    if x2.len() != d {
        return Err(Error::Dimension {
            expected: d,
            got: x2.len(),
        });
    }
    Ok(KernelWeights::new(params).eval(x, x2))
}

/// Gram matrix `K` of the training inputs (no nugget), row-major.
pub fn gram_matrix(train: &TrainingSet, params: &HyperParams) -> Result<Vec<f64>> {
    if params.dim() != train.dim() {
        return Err(Error::Dimension {
            expected: train.dim(),
            got: params.dim(),
        });
    }
    let w = KernelWeights::new(params);
    let n = train.len();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        k[i * n + i] = params.sigma2;
        for j in 0..i {
            let v = w.eval(train.input(i), train.input(j));
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    Ok(k)
}

/// Posterior mean and variance of the latent function at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPrediction {
    pub mean: f64,
    pub variance: f64,
}

impl GaussianPrediction {
    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// First jitter tried after a failed factorisation, relative to σ².
pub const JITTER_START: f64 = 1e-10;
/// Largest jitter tried, relative to σ².
pub const JITTER_MAX: f64 = 1e-4;

/// A GP conditioned on its training set. Immutable once built.
#[derive(Debug, Clone)]
pub struct FittedGP {
    train: TrainingSet,
    params: HyperParams,
    weights: KernelWeights,
    chol: Cholesky,
    inv_factor: Vec<f64>,
    alpha: Vec<f64>,
    kinv_diag: Vec<f64>,
    jitter: f64,
}

impl FittedGP {
    /// Factors `K + nugget·I`, escalating a diagonal jitter from
    /// `1e-10·σ²` by ×10 up to `1e-4·σ²` if the factorisation fails.
    pub fn fit(train: TrainingSet, params: HyperParams) -> Result<Self> {
        params.validate()?;
        let n = train.len();
        let gram = gram_matrix(&train, &params)?;
        let attempt = |extra: f64| {
            let mut a = gram.clone();
            for i in 0..n {
                a[i * n + i] += params.nugget + extra;
            }
            Cholesky::factor(&a, n)
        };
        let mut jitter = 0.0;
        let mut chol = attempt(0.0);
        let mut level = JITTER_START;
        while chol.is_none() {
            if level > JITTER_MAX * (1.0 + 1e-9) {
                return Err(Error::Cholesky { jitter });
            }
            jitter = level * params.sigma2;
            chol = attempt(jitter);
            level *= 10.0;
        }
        let chol = chol.expect("factorisation succeeded");
        let alpha = chol.solve(train.outputs());
        let inv_factor = chol.inverse_factor();
        let kinv_diag = linalg::inverse_diagonal(&inv_factor, n);
        let weights = KernelWeights::new(&params);
        Ok(Self {
            train,
            params,
            weights,
            chol,
            inv_factor,
            alpha,
            kinv_diag,
            jitter,
        })
    }

    pub fn train(&self) -> &TrainingSet {
        &self.train
    }

    pub fn params(&self) -> &HyperParams {
        &self.params
    }

    pub fn cholesky(&self) -> &Cholesky {
        &self.chol
    }

    /// `K⁻¹Y`
    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    /// `diag(K⁻¹)`
    pub fn kinv_diag(&self) -> &[f64] {
        &self.kinv_diag
    }

    /// Jitter added on top of the nugget (0 unless escalation was needed).
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Total diagonal term actually factorised.
    pub fn effective_nugget(&self) -> f64 {
        self.params.nugget + self.jitter
    }

    /// Posterior at a normalised input. Variance is clamped at zero.
    pub fn predict(&self, x: &[f64]) -> Result<GaussianPrediction> {
        if x.len() != self.train.dim() {
            return Err(Error::Dimension {
                expected: self.train.dim(),
                got: x.len(),
            });
        }
        Ok(self.predict_unchecked(x))
    }

    /// Posterior mean only, skipping the O(N²) variance.
    pub fn predict_mean(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.train.dim() {
            return Err(Error::Dimension {
                expected: self.train.dim(),
                got: x.len(),
            });
        }
        Ok((0..self.train.len())
            .map(|i| self.weights.eval(x, self.train.input(i)) * self.alpha[i])
            .sum())
    }

    fn predict_unchecked(&self, x: &[f64]) -> GaussianPrediction {
        let n = self.train.len();
        let k: Vec<f64> = (0..n)
            .map(|i| self.weights.eval(x, self.train.input(i)))
            .collect();
        let mean = linalg::dot(&k, &self.alpha);
        let mut quad = 0.0;
        for i in 0..n {
            let v = linalg::dot(&self.inv_factor[i * n..i * n + i + 1], &k[..=i]);
            quad += v * v;
        }
        GaussianPrediction {
            mean,
            variance: (self.params.sigma2 - quad).max(0.0),
        }
    }

    /// Predictions at many normalised points (flat, row-major).
    pub fn predict_many(&self, exec: Execution, points: &[f64]) -> Result<Vec<GaussianPrediction>> {
        let d = self.train.dim();
        if !points.len().is_multiple_of(d) {
            return Err(Error::Dimension {
                expected: d,
                got: points.len() % d,
            });
        }
        Ok(par::map_chunks(exec, points, d * 256, |chunk| {
            chunk
                .chunks_exact(d)
                .map(|x| self.predict_unchecked(x))
                .collect()
        }))
    }

    /// Closed-form leave-one-out predictors of every training output:
    /// mean `yᵢ − [K⁻¹Y]ᵢ / [K⁻¹]ᵢᵢ`, variance `1 / [K⁻¹]ᵢᵢ`.
    pub fn loo_predictions(&self) -> Vec<GaussianPrediction> {
        self.train
            .outputs()
            .iter()
            .zip(&self.alpha)
            .zip(&self.kinv_diag)
            .map(|((y, a), d)| GaussianPrediction {
                mean: y - a / d,
                variance: 1.0 / d,
            })
            .collect()
    }
}
