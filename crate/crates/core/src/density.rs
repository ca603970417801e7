//! Non-negative GP interpolation of 2-D densities, Monte-Carlo
//! normalisation and squared Hellinger distance.
//!
//! All integrals over the support box use one cached uniform sample per
//! `(seed, box)`: the normaliser `F̂ = V·mean(f̂⁺)` and
//! `H² = V·mean(½(√(f/F) − √(f̂⁺/F̂))²)` are computed from the same points,
//! with `F` the target's own mass inside the box, so both sides of the
//! distance are densities on the box. Negative surrogate values (possible
//! only without projection) are floored at zero.

use std::f64::consts::PI;
use std::fmt::Write;

use crate::benchmarks::{MethodVariant, Stat};
use crate::error::{invalid, Error, Result};
use crate::gp::{FittedGP, TrainingSet};
use crate::inference::{self, InferenceConfig, InferenceMode, InferenceResult};
use crate::par::{self, Execution};
use crate::projection::BoundSpec;
use crate::surrogate::Surrogate;
use crate::{design, rng};

/// Default Monte-Carlo sample size of the density experiments.
pub const MC_SAMPLES: usize = 1_000_000;

/// An analytic target density with its support box.
#[derive(Debug, Clone, Copy)]
pub struct TargetDensity {
    pub name: &'static str,
    pub domain: [(f64, f64); 2],
    pdf: fn(&[f64]) -> f64,
}

impl TargetDensity {
    pub fn new(name: &'static str, domain: [(f64, f64); 2], pdf: fn(&[f64]) -> f64) -> Self {
        Self { name, domain, pdf }
    }

    pub fn pdf(&self, x: &[f64]) -> f64 {
        (self.pdf)(x)
    }

    pub fn volume(&self) -> f64 {
        self.domain.iter().map(|(a, b)| b - a).product()
    }
}

/// Bivariate normal density with unit variances and correlation `rho`.
pub fn bvn_pdf(x: &[f64], mean: [f64; 2], rho: f64) -> f64 {
    let (u, v) = (x[0] - mean[0], x[1] - mean[1]);
    let det = 1.0 - rho * rho;
    let q = (u * u - 2.0 * rho * u * v + v * v) / det;
    (-0.5 * q).exp() / (2.0 * PI * det.sqrt())
}

/// Twisted Gaussian: `N(0, 100 I)` evaluated at `(x₁, x₂ + 0.03x₁² − 3)`.
pub fn banana_pdf(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1] + 0.03 * x[0] * x[0] - 3.0);
    (-(a * a + b * b) / 200.0).exp() / (200.0 * PI)
}

/// Twisted Gaussian with covariance `diag(100, 1)`, the classic narrow
/// banana, on the same twisted coordinates as [`banana_pdf`].
pub fn banana_narrow_pdf(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1] + 0.03 * x[0] * x[0] - 3.0);
    (-(a * a / 200.0 + b * b / 2.0)).exp() / (20.0 * PI)
}

/// Three-component Gaussian mixture with correlations 0, 0.9 and −0.9.
pub fn mixture_pdf(x: &[f64]) -> f64 {
    0.34 * bvn_pdf(x, [0.0, 0.0], 0.0)
        + 0.33 * bvn_pdf(x, [-3.0, -3.0], 0.9)
        + 0.33 * bvn_pdf(x, [2.0, 2.0], -0.9)
}

pub fn nonlinear() -> TargetDensity {
    TargetDensity::new("nonlinear", [(-20.0, 20.0), (-10.0, 5.0)], banana_pdf)
}

pub fn nonlinear_narrow() -> TargetDensity {
    TargetDensity::new(
        "nonlinear-narrow",
        [(-20.0, 20.0), (-10.0, 5.0)],
        banana_narrow_pdf,
    )
}

pub fn multimodal() -> TargetDensity {
    TargetDensity::new("multimodal", [(-6.0, 6.0), (-6.0, 6.0)], mixture_pdf)
}

pub const TARGET_NAMES: [&str; 3] = ["nonlinear", "nonlinear-narrow", "multimodal"];

pub fn target(name: &str) -> Result<TargetDensity> {
    match name.to_ascii_lowercase().as_str() {
        "nonlinear" | "banana" => Ok(nonlinear()),
        "nonlinear-narrow" | "banana-narrow" => Ok(nonlinear_narrow()),
        "multimodal" | "mixture" => Ok(multimodal()),
        _ => Err(Error::Catalog(format!(
            "unknown target '{name}' (expected one of {})",
            TARGET_NAMES.join(", ")
        ))),
    }
}

/// Uniform points over a box together with the target values there.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarlo {
    pub seed: u64,
    /// Row-major points, two coordinates each.
    pub points: Vec<f64>,
    pub target_values: Vec<f64>,
    pub volume: f64,
}

impl MonteCarlo {
    pub fn new(target: &TargetDensity, n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(invalid("Monte-Carlo sample size must be positive"));
        }
        let mut r = rng::stream(seed, rng::STREAM_MONTE_CARLO);
        let points = design::uniform_sample(n, &target.domain, &mut r)?.concat();
        let target_values = points.chunks_exact(2).map(|x| target.pdf(x)).collect();
        Ok(Self {
            seed,
            points,
            target_values,
            volume: target.volume(),
        })
    }

    pub fn len(&self) -> usize {
        self.target_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.target_values.is_empty()
    }

    /// `V · mean(max(g, 0))`.
    pub fn integrate_positive(&self, values: &[f64]) -> f64 {
        self.volume * values.iter().map(|v| v.max(0.0)).sum::<f64>() / values.len() as f64
    }
}

/// Squared Hellinger distance between `f` and `g⁺`, each normalised to unit
/// mass by its own MC integral over the box, clamped into `[0, 1]`.
pub fn hellinger_sq_values(f: &[f64], g: &[f64], volume: f64) -> Result<f64> {
    if f.len() != g.len() {
        return Err(Error::Dimension {
            expected: f.len(),
            got: g.len(),
        });
    }
    if f.is_empty() {
        return Err(invalid("no Monte-Carlo values"));
    }
    let n = f.len() as f64;
    let mass = |v: &[f64]| volume * v.iter().map(|x| x.max(0.0)).sum::<f64>() / n;
    let (mf, mg) = (mass(f), mass(g));
    if !(mf > 0.0 && mg > 0.0 && mf.is_finite() && mg.is_finite()) {
        return Err(Error::Metric(format!(
            "densities must have positive finite mass, got {mf} and {mg}"
        )));
    }
    let s: f64 = f
        .iter()
        .zip(g)
        .map(|(a, b)| {
            let d = (a.max(0.0) / mf).sqrt() - (b.max(0.0) / mg).sqrt();
            0.5 * d * d
        })
        .sum();
    Ok((volume * s / n).clamp(0.0, 1.0))
}

/// A fitted density surrogate with its Monte-Carlo normaliser.
#[derive(Debug, Clone)]
pub struct DensityApproximation {
    pub surrogate: Surrogate,
    pub variant: MethodVariant,
    pub inference: InferenceResult,
    pub normalizer: f64,
    pub mc_samples: usize,
    pub seed: u64,
    mc_values: Vec<f64>,
}

impl DensityApproximation {
    /// Unnormalised surrogate value `f̂(x)`.
    pub fn unnormalized(&self, x: &[f64]) -> Result<f64> {
        Ok(self
            .surrogate
            .predict_means(Execution::Sequential, &[x.to_vec()])?[0])
    }

    /// Normalised approximation `f̄(x) = max(f̂(x), 0) / F̂`.
    pub fn density(&self, x: &[f64]) -> Result<f64> {
        Ok(self.unnormalized(x)?.max(0.0) / self.normalizer)
    }

    /// Surrogate values at the cached Monte-Carlo points.
    pub fn mc_values(&self) -> &[f64] {
        &self.mc_values
    }
}

/// Non-negativity bound used for every density surrogate.
pub fn nonnegative() -> BoundSpec {
    BoundSpec::none().with_lower(|_| 0.0)
}

/// LHS training set of the target over its box (original units; normalised
/// inside the returned [`TrainingSet`]).
pub fn density_training_set(
    target: &TargetDensity,
    n_train: usize,
    seed: u64,
) -> Result<TrainingSet> {
    if n_train < 4 {
        return Err(invalid(
            "density surrogates need at least d + 2 = 4 training points",
        ));
    }
    let mut r = rng::stream(seed, rng::STREAM_TRAIN);
    let xs = design::lhs_sample(n_train, &target.domain, &mut r)?;
    let ys = xs.iter().map(|x| target.pdf(x)).collect();
    TrainingSet::normalized(xs, ys)
}

/// Fits the surrogate from given hyperparameters and computes `F̂` on `mc`.
pub fn approximation_from(
    train: &TrainingSet,
    variant: MethodVariant,
    fit: InferenceResult,
    mc: &MonteCarlo,
    execution: Execution,
) -> Result<DensityApproximation> {
    let gp = FittedGP::fit(train.clone(), fit.params.clone())?;
    let surrogate = Surrogate::new(gp, nonnegative(), variant.prediction_uses_projection());
    let mc_values = surrogate.predict_means_flat(execution, &mc.points)?;
    let normalizer = mc.integrate_positive(&mc_values);
    if !(normalizer > 0.0) {
        return Err(Error::Inference(
            "surrogate integrates to zero over the box".into(),
        ));
    }
    Ok(DensityApproximation {
        surrogate,
        variant,
        inference: fit,
        normalizer,
        mc_samples: mc.len(),
        seed: mc.seed,
        mc_values,
    })
}

/// Builds the density surrogate for one seed: LHS design, inference per the
/// variant (bounded inference uses `l = 0`) and the MC normaliser over
/// `mc_samples` uniform points.
pub fn build_approximation(
    target: &TargetDensity,
    n_train: usize,
    variant: MethodVariant,
    seed: u64,
    mc_samples: usize,
    inference_template: &InferenceConfig,
) -> Result<DensityApproximation> {
    let train = density_training_set(target, n_train, seed)?;
    let cfg = InferenceConfig {
        mode: variant.inference_mode(),
        seed,
        ..inference_template.clone()
    };
    let fit = inference::infer(&train, Some(&nonnegative()), &cfg)?;
    let mc = MonteCarlo::new(target, mc_samples, seed)?;
    approximation_from(&train, variant, fit, &mc, inference_template.execution)
}

/// `H²(f, f̄)` by uniform MC with `mc_samples` points drawn from `seed`;
/// reuses the approximation's cached sample when it matches.
pub fn hellinger_sq(
    target: &TargetDensity,
    approx: &DensityApproximation,
    mc_samples: usize,
    seed: u64,
) -> Result<f64> {
    let mc = MonteCarlo::new(target, mc_samples, seed)?;
    if seed == approx.seed && mc_samples == approx.mc_samples {
        return hellinger_sq_values(&mc.target_values, &approx.mc_values, mc.volume);
    }
    let values = approx
        .surrogate
        .predict_means_flat(Execution::default(), &mc.points)?;
    hellinger_sq_values(&mc.target_values, &values, mc.volume)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityConfig {
    pub replications: usize,
    pub base_seed: u64,
    pub mc_samples: usize,
    pub inference: InferenceConfig,
    pub execution: Execution,
}

impl Default for DensityConfig {
    fn default() -> Self {
        Self {
            replications: 50,
            base_seed: 0,
            mc_samples: MC_SAMPLES,
            inference: InferenceConfig::default(),
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityTrial {
    pub seed: u64,
    pub h2: f64,
    pub normalizer: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensitySummary {
    pub target: String,
    pub variant: MethodVariant,
    pub n_train: usize,
    pub trials: Vec<DensityTrial>,
    pub failures: Vec<(u64, String)>,
    pub h2: Stat,
}

/// One replication for several variants sharing design, MC sample and
/// per-mode inference.
pub fn run_density_trial(
    target: &TargetDensity,
    variants: &[MethodVariant],
    n_train: usize,
    seed: u64,
    config: &DensityConfig,
) -> Vec<Result<DensityTrial>> {
    let setup = || -> Result<_> {
        let train = density_training_set(target, n_train, seed)?;
        let mc = MonteCarlo::new(target, config.mc_samples, seed)?;
        Ok((train, mc))
    };
    let (train, mc) = match setup() {
        Ok(s) => s,
        Err(e) => return variants.iter().map(|_| Err(e.clone())).collect(),
    };
    let bounds = nonnegative();
    let mut fits: Vec<(InferenceMode, Result<InferenceResult>)> = Vec::new();
    variants
        .iter()
        .map(|v| {
            let mode = v.inference_mode();
            if !fits.iter().any(|(m, _)| *m == mode) {
                let cfg = InferenceConfig {
                    mode,
                    seed,
                    ..config.inference.clone()
                };
                fits.push((mode, inference::infer(&train, Some(&bounds), &cfg)));
            }
            let fit = fits
                .iter()
                .find(|(m, _)| *m == mode)
                .expect("fitted")
                .1
                .clone()?;
            let approx = approximation_from(&train, *v, fit, &mc, config.execution)?;
            let h2 = hellinger_sq_values(&mc.target_values, approx.mc_values(), mc.volume)?;
            Ok(DensityTrial {
                seed,
                h2,
                normalizer: approx.normalizer,
            })
        })
        .collect()
}

pub fn run_density_experiment(
    target: &TargetDensity,
    variants: &[MethodVariant],
    n_train: usize,
    config: &DensityConfig,
) -> Result<Vec<DensitySummary>> {
    if config.replications == 0 {
        return Err(invalid("replications must be at least 1"));
    }
    if variants.is_empty() {
        return Err(invalid("no method variants requested"));
    }
    config.inference.validate()?;
    let per_trial = par::map_range(config.execution, config.replications, |r| {
        run_density_trial(
            target,
            variants,
            n_train,
            config.base_seed + r as u64,
            config,
        )
    });
    Ok(variants
        .iter()
        .enumerate()
        .map(|(k, &variant)| {
            let mut trials = Vec::new();
            let mut failures = Vec::new();
            for (r, t) in per_trial.iter().enumerate() {
                match &t[k] {
                    Ok(t) => trials.push(*t),
                    Err(e) => failures.push((config.base_seed + r as u64, e.to_string())),
                }
            }
            let h2 = Stat::of(&trials.iter().map(|t| t.h2).collect::<Vec<_>>());
            DensitySummary {
                target: target.name.to_string(),
                variant,
                n_train,
                trials,
                failures,
                h2,
            }
        })
        .collect())
}

/// `target,variant,n_train,seed,h2,normalizer`
pub fn density_csv(summaries: &[DensitySummary]) -> String {
    let mut s = String::from("target,variant,n_train,seed,h2,normalizer\n");
    for e in summaries {
        for t in &e.trials {
            writeln!(
                s,
                "{},{},{},{},{},{}",
                e.target, e.variant, e.n_train, t.seed, t.h2, t.normalizer
            )
            .unwrap();
        }
    }
    s
}

/// Mean ± std of H² per variant and N.
pub fn density_markdown(summaries: &[DensitySummary]) -> String {
    let mut s = String::from("| target | N | variant | H² | failures |\n|---|---|---|---|---|\n");
    for e in summaries {
        let cell = if e.h2.mean.is_nan() {
            "n/a".to_string()
        } else {
            format!("{:.4} ± {:.4}", e.h2.mean, e.h2.std)
        };
        let total = e.trials.len() + e.failures.len();
        writeln!(
            s,
            "| {} | {} | {} | {} | {}/{} |",
            e.target,
            e.n_train,
            e.variant,
            cell,
            e.failures.len(),
            total
        )
        .unwrap();
    }
    s
}

/// `variant,x1,x2,f,f_hat,f_bar` on a `res × res` grid for every approximation.
pub fn contour_csv(
    target: &TargetDensity,
    approximations: &[&DensityApproximation],
    res: usize,
) -> Result<String> {
    let grid = design::grid_2d(&target.domain, res)?;
    let mut s = String::from("variant,x1,x2,f,f_hat,f_bar\n");
    for a in approximations {
        let vals = a.surrogate.predict_means(Execution::default(), &grid)?;
        for (x, v) in grid.iter().zip(vals) {
            writeln!(
                s,
                "{},{},{},{},{},{}",
                a.variant,
                x[0],
                x[1],
                target.pdf(x),
                v,
                v.max(0.0) / a.normalizer
            )
            .unwrap();
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn banana_mode_and_symmetry() {
        assert_relative_eq!(
            banana_pdf(&[0.0, 3.0]),
            1.0 / (200.0 * PI),
            max_relative = 1e-15
        );
        assert_relative_eq!(
            banana_pdf(&[10.0, 0.0]),
            banana_pdf(&[0.0, 3.0]) * (-0.5f64).exp(),
            max_relative = 1e-14
        );
        assert_eq!(banana_pdf(&[4.2, -1.0]), banana_pdf(&[-4.2, -1.0]));
        assert_relative_eq!(
            banana_narrow_pdf(&[0.0, 3.0]),
            1.0 / (20.0 * PI),
            max_relative = 1e-15
        );
    }

    #[test]
    fn mixture_at_origin() {
        let c = |m: f64, rho: f64| {
            let det = 1.0 - rho * rho;
            (-(m * m * (2.0 - 2.0 * rho)) / (2.0 * det)).exp() / (2.0 * PI * det.sqrt())
        };
        let oracle = 0.34 / (2.0 * PI) + 0.33 * c(3.0, 0.9) + 0.33 * c(2.0, -0.9);
        assert_relative_eq!(mixture_pdf(&[0.0, 0.0]), oracle, max_relative = 1e-14);
    }

    #[test]
    fn disjoint_uniforms_are_maximally_distant() {
        let xs: Vec<f64> = design::linspace(0.0, 1.0, 1001);
        let f: Vec<f64> = xs
            .iter()
            .map(|x| if *x < 0.5 { 2.0 } else { 0.0 })
            .collect();
        let g: Vec<f64> = xs
            .iter()
            .map(|x| if *x < 0.5 { 0.0 } else { 2.0 })
            .collect();
        assert_eq!(hellinger_sq_values(&f, &g, 1.0).unwrap(), 1.0);
        assert_eq!(hellinger_sq_values(&f, &f, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn unknown_target() {
        assert!(target("nope").is_err());
        assert_eq!(target("Banana").unwrap().name, "nonlinear");
    }
}
