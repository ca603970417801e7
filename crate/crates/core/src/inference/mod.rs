//! Hyperparameter estimation by leave-one-out cross-validation.
//!
//! Unbounded mode minimises PRESS over the log-lengthscales and then sets σ²
//! by the closed-form LOO calibration. Bounded mode minimises the PRESS of
//! the *projected* LOO means jointly over log-lengthscales and σ², with σ²
//! confined to `[c_l·σ̂²(θ), c_u·σ̂²(θ)]`. Both use CMA-ES with restarts.
//!
//! The nugget is configured relative to σ², so the unit-variance Gram matrix
//! `R(θ) + ν I` is factorised once per candidate θ and every σ² is a rescale.

pub mod cmaes;

use crate::error::{invalid, Error, Result};
use crate::gp::{FittedGP, GaussianPrediction, HyperParams, TrainingSet};
use crate::par::Execution;
use crate::projection::{BoundSpec, PointBounds, ProjectedPosterior};
use crate::rng;
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InferenceMode {
    Unbounded,
    Bounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InferenceConfig {
    pub mode: InferenceMode,
    /// Lower multiplier of the σ² box around the closed-form estimate.
    pub c_l: f64,
    /// Upper multiplier of the σ² box.
    pub c_u: f64,
    /// CMA-ES λ for the first run; `None` picks `4 + ⌊3 ln n⌋`.
    pub cma_population: Option<usize>,
    pub cma_generations: usize,
    pub cma_initial_step: f64,
    /// Additional runs, each with twice the previous population.
    pub restarts: usize,
    pub seed: u64,
    /// Lengthscale search box in normalised input units (searched in log).
    pub lengthscale_box: (f64, f64),
    /// Nugget as a fraction of σ².
    pub nugget: f64,
    pub tol_fun: f64,
    pub tol_x: f64,
    pub execution: Execution,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        Self {
            mode: InferenceMode::Unbounded,
            c_l: 1e-2,
            c_u: 1e2,
            cma_population: None,
            cma_generations: 100,
            cma_initial_step: 1.0,
            restarts: 2,
            seed: 0,
            lengthscale_box: (0.05, 0.7),
            nugget: 1e-8,
            tol_fun: 1e-10,
            tol_x: 1e-6,
            execution: Execution::default(),
        }
    }
}

impl InferenceConfig {
    pub fn bounded() -> Self {
        Self {
            mode: InferenceMode::Bounded,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c_l > 0.0 && self.c_l < self.c_u && self.c_u.is_finite()) {
            return Err(invalid("need 0 < c_l < c_u"));
        }
        if self.cma_population.is_some_and(|p| p < 4) {
            return Err(invalid("CMA-ES population must be at least 4"));
        }
        if self.cma_generations == 0 {
            return Err(invalid("CMA-ES needs at least one generation"));
        }
        if !(self.cma_initial_step > 0.0) {
            return Err(invalid("initial step must be positive"));
        }
        let (lo, hi) = self.lengthscale_box;
        if !(lo > 0.0 && lo < hi && hi.is_finite()) {
            return Err(invalid("lengthscale box must satisfy 0 < min < max"));
        }
        if !(self.nugget >= 0.0 && self.nugget.is_finite()) {
            return Err(invalid("nugget must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InferenceResult {
    pub params: HyperParams,
    /// PRESS at `params` (projected PRESS in bounded mode).
    pub objective: f64,
    pub evaluations: usize,
    pub converged: bool,
    /// Closed-form σ̂² at the returned lengthscales.
    pub sigma2_reference: f64,
    /// Per-generation best objective of every run, concatenated.
    pub trace: Vec<f64>,
}

/// LOO quantities of the unit-variance model `R(θ) + ν I`.
struct UnitLoo {
    means: Vec<f64>,
    unit_vars: Vec<f64>,
    sigma2_hat: f64,
}

impl UnitLoo {
    fn new(train: &TrainingSet, theta: &[f64], rel_nugget: f64) -> Result<Self> {
        let params = HyperParams::new(1.0, theta.to_vec(), rel_nugget)?;
        let gp = FittedGP::fit(train.clone(), params)?;
        let loo = gp.loo_predictions();
        let n = train.len() as f64;
        let sigma2_hat = gp
            .alpha()
            .iter()
            .zip(gp.kinv_diag())
            .map(|(a, d)| a * a / d)
            .sum::<f64>()
            / n;
        Ok(Self {
            means: loo.iter().map(|p| p.mean).collect(),
            unit_vars: loo.iter().map(|p| p.variance).collect(),
            sigma2_hat,
        })
    }

    fn press(&self, train: &TrainingSet) -> f64 {
        train
            .outputs()
            .iter()
            .zip(&self.means)
            .map(|(y, m)| (y - m).powi(2))
            .sum()
    }

    fn press_projected(
        &self,
        train: &TrainingSet,
        bounds: &[PointBounds],
        sigma2: f64,
    ) -> Result<f64> {
        let mut s = 0.0;
        for (i, y) in train.outputs().iter().enumerate() {
            let pred = GaussianPrediction {
                mean: self.means[i],
                variance: sigma2 * self.unit_vars[i],
            };
            let mg = ProjectedPosterior::new(pred, bounds[i])?.mean();
            s += (y - mg).powi(2);
        }
        Ok(s)
    }
}

fn check_theta(train: &TrainingSet, theta: &[f64]) -> Result<()> {
    if theta.len() != train.dim() {
        return Err(Error::Dimension {
            expected: train.dim(),
            got: theta.len(),
        });
    }
    Ok(())
}

/// `Σᵢ (yᵢ − μ_{f,−i})²` in the training set's (normalised) units.
pub fn press_unbounded(
    train: &TrainingSet,
    theta: &[f64],
    sigma2: f64,
    nugget: f64,
) -> Result<f64> {
    check_theta(train, theta)?;
    let gp = FittedGP::fit(
        train.clone(),
        HyperParams::new(sigma2, theta.to_vec(), nugget)?,
    )?;
    let loo = gp.loo_predictions();
    Ok(train
        .outputs()
        .iter()
        .zip(&loo)
        .map(|(y, p)| (y - p.mean).powi(2))
        .sum())
}

/// `σ̂² = (1/N) Yᵀ K̃⁻¹ diag(K̃⁻¹)⁻¹ K̃⁻¹ Y` with `K̃ = R(θ) + nugget·I` at unit σ².
pub fn sigma2_closed_form(train: &TrainingSet, theta: &[f64], nugget: f64) -> Result<f64> {
    check_theta(train, theta)?;
    Ok(UnitLoo::new(train, theta, nugget)?.sigma2_hat)
}

/// Bounds at every training input, in the training set's normalised output units.
pub fn training_bounds(train: &TrainingSet, bounds: &BoundSpec) -> Result<Vec<PointBounds>> {
    (0..train.len())
        .map(|i| {
            let b = bounds.eval(&train.original_input(i))?;
            normalized_bounds(train, b)
        })
        .collect()
}

fn normalized_bounds(train: &TrainingSet, b: PointBounds) -> Result<PointBounds> {
    let nb = b.normalize(train.output_shift(), train.output_scale());
    PointBounds::new(nb.lower, nb.upper).map_err(|e| Error::Bounds(e.to_string()))
}

/// `Σᵢ (yᵢ − μ_{g,−i})²`, the PRESS of projected LOO means.
pub fn press_bounded(train: &TrainingSet, bounds: &BoundSpec, params: &HyperParams) -> Result<f64> {
    let tb = training_bounds(train, bounds)?;
    press_bounded_at(train, &tb, params)
}

/// [`press_bounded`] with pre-evaluated (normalised) training bounds.
pub fn press_bounded_at(
    train: &TrainingSet,
    bounds: &[PointBounds],
    params: &HyperParams,
) -> Result<f64> {
    if bounds.len() != train.len() {
        return Err(Error::Dimension {
            expected: train.len(),
            got: bounds.len(),
        });
    }
    let gp = FittedGP::fit(train.clone(), params.clone())?;
    let mut s = 0.0;
    for ((y, pred), b) in train.outputs().iter().zip(gp.loo_predictions()).zip(bounds) {
        s += (y - ProjectedPosterior::new(pred, *b)?.mean()).powi(2);
    }
    Ok(s)
}

/// Estimates hyperparameters. `bounds` is required in bounded mode and
/// ignored otherwise.
pub fn infer(
    train: &TrainingSet,
    bounds: Option<&BoundSpec>,
    config: &InferenceConfig,
) -> Result<InferenceResult> {
    config.validate()?;
    let d = train.dim();
    let (tlo, thi) = (config.lengthscale_box.0.ln(), config.lengthscale_box.1.ln());
    let rel = config.nugget;

    let tb = match config.mode {
        InferenceMode::Bounded => {
            let spec =
                bounds.ok_or_else(|| invalid("bounded inference needs a bound specification"))?;
            Some(training_bounds(train, spec)?)
        }
        InferenceMode::Unbounded => None,
    };

    let (mut lower, mut upper) = (vec![tlo; d], vec![thi; d]);
    if tb.is_some() {
        lower.push(config.c_l.ln());
        upper.push(config.c_u.ln());
    }
    let dim = lower.len();

    let objective = |v: &[f64]| -> f64 {
        let theta: Vec<f64> = v[..d].iter().map(|t| t.exp()).collect();
        let Ok(unit) = UnitLoo::new(train, &theta, rel) else {
            return f64::INFINITY;
        };
        match &tb {
            None => unit.press(train),
            Some(tb) => {
                let sigma2 = unit.sigma2_hat * v[d].exp();
                unit.press_projected(train, tb, sigma2)
                    .unwrap_or(f64::INFINITY)
            }
        }
    };

    let base_pop = config
        .cma_population
        .unwrap_or_else(|| cmaes::default_population(dim));
    let mut r = rng::stream(config.seed, rng::STREAM_OPTIMIZER);
    let mut best: Option<cmaes::CmaesOutcome> = None;
    let mut evaluations = 0;
    let mut trace = Vec::new();
    for run in 0..=config.restarts {
        let x0: Vec<f64> = if run == 0 {
            lower
                .iter()
                .zip(&upper)
                .map(|(l, u)| 0.5 * (l + u))
                .collect()
        } else {
            lower
                .iter()
                .zip(&upper)
                .map(|(l, u)| r.random_range(*l..*u))
                .collect()
        };
        let opts = cmaes::CmaesOptions {
            population: Some(base_pop << run),
            max_generations: config.cma_generations,
            initial_step: config.cma_initial_step,
            tol_fun: config.tol_fun,
            tol_x: config.tol_x,
            lower: lower.clone(),
            upper: upper.clone(),
            execution: config.execution,
        };
        let out = cmaes::minimize(&objective, &x0, &opts, &mut r);
        evaluations += out.evaluations;
        trace.extend_from_slice(&out.trace);
        if best.as_ref().is_none_or(|b| out.best_f < b.best_f) {
            best = Some(out);
        }
    }
    let best = best.expect("at least one run");
    if !best.best_f.is_finite() {
        return Err(Error::Inference(
            "every CMA-ES candidate was infeasible".into(),
        ));
    }

    let theta: Vec<f64> = best.best_x[..d].iter().map(|t| t.exp()).collect();
    let unit = UnitLoo::new(train, &theta, rel)?;
    let sigma2 = match config.mode {
        InferenceMode::Unbounded => unit.sigma2_hat,
        InferenceMode::Bounded => unit.sigma2_hat * best.best_x[d].exp(),
    };
    let params = HyperParams::new(sigma2, theta, rel * sigma2)?;
    Ok(InferenceResult {
        params,
        objective: best.best_f,
        evaluations,
        converged: best.converged,
        sigma2_reference: unit.sigma2_hat,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn toy() -> TrainingSet {
        let xs: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64 / 7.0]).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (6.0 * x[0]).sin() + x[0]).collect();
        TrainingSet::normalized(xs, ys).unwrap()
    }

    #[test]
    fn press_is_sigma2_invariant_without_nugget() {
        let t = toy();
        let a = press_unbounded(&t, &[0.4], 1.0, 0.0).unwrap();
        let b = press_unbounded(&t, &[0.4], 2.0, 0.0).unwrap();
        assert!((a - b).abs() < 1e-10 * a.max(1.0));
    }

    #[test]
    fn symmetric_pair_press() {
        let t = TrainingSet::new(vec![vec![-0.5], vec![0.5]], vec![0.7, 0.7]).unwrap();
        let gp = FittedGP::fit(t.clone(), HyperParams::new(1.0, vec![0.8], 0.0).unwrap()).unwrap();
        let loo = gp.loo_predictions();
        assert_relative_eq!(loo[0].mean, loo[1].mean, max_relative = 1e-14);
        assert_relative_eq!(loo[0].variance, loo[1].variance, max_relative = 1e-14);
        let p = press_unbounded(&t, &[0.8], 1.0, 0.0).unwrap();
        assert_relative_eq!(p, 2.0 * (0.7 - loo[0].mean).powi(2), max_relative = 1e-12);
    }

    #[test]
    fn sigma2_single_point_and_scaling() {
        let t = TrainingSet::new(vec![vec![0.0]], vec![1.5]).unwrap();
        assert_relative_eq!(
            sigma2_closed_form(&t, &[1.0], 0.0).unwrap(),
            2.25,
            max_relative = 1e-14
        );

        let xs: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64 * 0.3]).collect();
        let ys = vec![0.1, -0.4, 0.9, 0.2, -0.3];
        let a = sigma2_closed_form(
            &TrainingSet::new(xs.clone(), ys.clone()).unwrap(),
            &[0.5],
            0.0,
        )
        .unwrap();
        let scaled: Vec<f64> = ys.iter().map(|y| 3.0 * y).collect();
        let b = sigma2_closed_form(&TrainingSet::new(xs, scaled).unwrap(), &[0.5], 0.0).unwrap();
        assert_relative_eq!(b, 9.0 * a, max_relative = 1e-12);
    }

    #[test]
    fn unbounded_spec_press_matches() {
        let t = toy();
        let p = HyperParams::new(1.3, vec![0.3], 0.0).unwrap();
        let a = press_bounded(&t, &BoundSpec::none(), &p).unwrap();
        let b = press_unbounded(&t, &[0.3], 1.3, 0.0).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        assert!(InferenceConfig::default().validate().is_ok());
        assert!(InferenceConfig {
            c_l: 10.0,
            c_u: 1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(InferenceConfig {
            cma_population: Some(3),
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(InferenceConfig {
            lengthscale_box: (2.0, 1.0),
            ..Default::default()
        }
        .validate()
        .is_err());
        let t = toy();
        assert!(infer(&t, None, &InferenceConfig::bounded()).is_err());
    }

    #[test]
    fn bounded_result_respects_variance_box() {
        let t = toy();
        let spec = BoundSpec::constant(Some(-1.0), Some(1.5)).unwrap();
        let cfg = InferenceConfig {
            seed: 3,
            ..InferenceConfig::bounded()
        };
        let r = infer(&t, Some(&spec), &cfg).unwrap();
        let s = r.sigma2_reference;
        assert!(
            r.params.sigma2 >= cfg.c_l * s * (1.0 - 1e-12)
                && r.params.sigma2 <= cfg.c_u * s * (1.0 + 1e-12)
        );
        let check = press_bounded(&t, &spec, &r.params).unwrap();
        assert!((check - r.objective).abs() <= 1e-10 * r.objective.max(1.0));
    }
}
