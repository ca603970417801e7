use std::fmt;
use std::str::FromStr;

use super::metrics::{self, Stat};
use super::problems::Problem;
use crate::error::{invalid, Error, Result};
use crate::gp::{FittedGP, TrainingSet};
use crate::inference::{self, InferenceConfig, InferenceMode, InferenceResult};
use crate::par::{self, Execution};
use crate::surrogate::{PointPrediction, Surrogate};
use crate::{design, rng};

/// Which of the two bound-aware ingredients a method uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MethodVariant {
    Bgp,
    BgpI,
    BgpP,
    Gp,
}

impl MethodVariant {
    pub const ALL: [MethodVariant; 4] = [Self::Bgp, Self::BgpI, Self::BgpP, Self::Gp];

    pub fn name(self) -> &'static str {
        match self {
            Self::Bgp => "bGP",
            Self::BgpI => "bGP-I",
            Self::BgpP => "bGP-P",
            Self::Gp => "GP",
        }
    }

    pub fn inference_uses_bounds(self) -> bool {
        matches!(self, Self::Bgp | Self::BgpI)
    }

    pub fn prediction_uses_projection(self) -> bool {
        matches!(self, Self::Bgp | Self::BgpP)
    }

    pub fn inference_mode(self) -> InferenceMode {
        if self.inference_uses_bounds() {
            InferenceMode::Bounded
        } else {
            InferenceMode::Unbounded
        }
    }
}

impl fmt::Display for MethodVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MethodVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| !matches!(c, '-' | '_'))
            .collect::<String>()
            .to_ascii_lowercase();
        Ok(match key.as_str() {
            "bgp" | "full" => Self::Bgp,
            "bgpi" => Self::BgpI,
            "bgpp" | "projection" => Self::BgpP,
            "gp" | "unconstrained" => Self::Gp,
            _ => return Err(invalid(format!("unknown method variant '{s}'"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialResult {
    pub variant: MethodVariant,
    pub n_train: usize,
    pub seed: u64,
    pub r2: f64,
    pub rmse: f64,
    pub cp: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n_test: usize,
    pub replications: usize,
    pub base_seed: u64,
    /// Template; `mode` and `seed` are set per variant and trial.
    pub inference: InferenceConfig,
    /// How replications are scheduled.
    pub execution: Execution,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_test: 1000,
            replications: 50,
            base_seed: 0,
            inference: InferenceConfig::default(),
            execution: Execution::default(),
        }
    }
}

/// Trials of one (problem, variant, N) cell and their aggregate.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSummary {
    pub problem: String,
    pub dim: usize,
    pub variant: MethodVariant,
    pub n_train: usize,
    pub trials: Vec<TrialResult>,
    /// Failed trials with their error message; excluded from the statistics.
    pub failures: Vec<(u64, String)>,
    pub r2: Stat,
    pub rmse: Stat,
    pub cp: Stat,
}

impl ExperimentSummary {
    fn new(
        problem: &Problem,
        variant: MethodVariant,
        n_train: usize,
        trials: Vec<TrialResult>,
        failures: Vec<(u64, String)>,
    ) -> Self {
        let col = |f: fn(&TrialResult) -> f64| Stat::of(&trials.iter().map(f).collect::<Vec<_>>());
        Self {
            problem: problem.name.to_string(),
            dim: problem.dim(),
            variant,
            n_train,
            r2: col(|t| t.r2),
            rmse: col(|t| t.rmse),
            cp: col(|t| t.cp),
            trials,
            failures,
        }
    }
}

/// Seeded training design and outputs of one trial, in original units.
pub fn training_data(
    problem: &Problem,
    n_train: usize,
    seed: u64,
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let mut r = rng::stream(seed, rng::STREAM_TRAIN);
    let xs = design::lhs_sample(n_train, &problem.domain, &mut r)?;
    let ys = xs.iter().map(|x| problem.truth(x)).collect();
    Ok((xs, ys))
}

/// Equally spaced in 1-D, seeded uniform otherwise.
pub fn test_points(problem: &Problem, n_test: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if problem.dim() == 1 {
        let (a, b) = problem.domain[0];
        Ok(design::linspace(a, b, n_test)
            .into_iter()
            .map(|x| vec![x])
            .collect())
    } else {
        let mut r = rng::stream(seed, rng::STREAM_TEST);
        design::uniform_sample(n_test, &problem.domain, &mut r)
    }
}

/// Hyperparameters for both inference modes that `variants` need, each
/// computed at most once.
pub fn infer_modes(
    train: &TrainingSet,
    problem: &Problem,
    variants: &[MethodVariant],
    template: &InferenceConfig,
    seed: u64,
) -> Vec<(InferenceMode, Result<InferenceResult>)> {
    let mut out: Vec<(InferenceMode, Result<InferenceResult>)> = Vec::new();
    for v in variants {
        let mode = v.inference_mode();
        if out.iter().any(|(m, _)| *m == mode) {
            continue;
        }
        let cfg = InferenceConfig {
            mode,
            seed,
            ..template.clone()
        };
        out.push((mode, inference::infer(train, Some(&problem.bounds), &cfg)));
    }
    out
}

fn trial_metrics(truth: &[f64], preds: &[PointPrediction]) -> Result<(f64, f64, f64)> {
    let means: Vec<f64> = preds.iter().map(|p| p.mean).collect();
    let intervals: Vec<(f64, f64)> = preds.iter().map(|p| (p.q025, p.q975)).collect();
    Ok((
        metrics::r_squared(truth, &means)?,
        metrics::rmse(truth, &means)?,
        metrics::coverage(truth, &intervals)?,
    ))
}

/// One replication for several variants sharing the design, test set and
/// per-mode inference.
pub fn run_trial(
    problem: &Problem,
    variants: &[MethodVariant],
    n_train: usize,
    n_test: usize,
    seed: u64,
    template: &InferenceConfig,
) -> Vec<(MethodVariant, Result<TrialResult>)> {
    let setup = || -> Result<_> {
        let (xs, ys) = training_data(problem, n_train, seed)?;
        let train = TrainingSet::normalized(xs, ys)?;
        let tests = test_points(problem, n_test, seed)?;
        let truth: Vec<f64> = tests.iter().map(|x| problem.truth(x)).collect();
        Ok((train, tests, truth))
    };
    let (train, tests, truth) = match setup() {
        Ok(s) => s,
        Err(e) => return variants.iter().map(|v| (*v, Err(e.clone()))).collect(),
    };
    let fits = infer_modes(&train, problem, variants, template, seed);
    variants
        .iter()
        .map(|&v| {
            let res = (|| {
                let (_, fit) = fits
                    .iter()
                    .find(|(m, _)| *m == v.inference_mode())
                    .expect("mode inferred");
                let fit = fit.as_ref().map_err(Clone::clone)?;
                let gp = FittedGP::fit(train.clone(), fit.params.clone())?;
                let s = Surrogate::new(gp, problem.bounds.clone(), v.prediction_uses_projection());
                let preds = s.predict_many(Execution::Sequential, &tests)?;
                if v.prediction_uses_projection()
                    && preds.iter().any(|p| !p.bounds.contains(p.mean))
                {
                    return Err(Error::Inference(
                        "projected prediction left its bounds".into(),
                    ));
                }
                let (r2, rmse, cp) = trial_metrics(&truth, &preds)?;
                Ok(TrialResult {
                    variant: v,
                    n_train,
                    seed,
                    r2,
                    rmse,
                    cp,
                })
            })();
            (v, res)
        })
        .collect()
}

/// Runs `config.replications` trials (seed `base_seed + r`) for every variant.
pub fn run_experiments(
    problem: &Problem,
    variants: &[MethodVariant],
    n_train: usize,
    config: &ExperimentConfig,
) -> Result<Vec<ExperimentSummary>> {
    if config.replications == 0 {
        return Err(invalid("replications must be at least 1"));
    }
    if variants.is_empty() {
        return Err(invalid("no method variants requested"));
    }
    config.inference.validate()?;
    let per_trial = par::map_range(config.execution, config.replications, |r| {
        run_trial(
            problem,
            variants,
            n_train,
            config.n_test,
            config.base_seed + r as u64,
            &config.inference,
        )
    });
    Ok(variants
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let mut trials = Vec::new();
            let mut failures = Vec::new();
            for (r, trial) in per_trial.iter().enumerate() {
                match &trial[k].1 {
                    Ok(t) => trials.push(*t),
                    Err(e) => failures.push((config.base_seed + r as u64, e.to_string())),
                }
            }
            ExperimentSummary::new(problem, v, n_train, trials, failures)
        })
        .collect())
}

/// Single-variant convenience wrapper with default inference settings.
pub fn run_experiment(
    problem: &Problem,
    variant: MethodVariant,
    n_train: usize,
    n_test: usize,
    replications: usize,
    base_seed: u64,
) -> Result<ExperimentSummary> {
    let cfg = ExperimentConfig {
        n_test,
        replications,
        base_seed,
        ..Default::default()
    };
    Ok(run_experiments(problem, &[variant], n_train, &cfg)?.remove(0))
}

/// One row of 1-D plot data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlotRow {
    pub x: f64,
    pub truth: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub mean: f64,
    pub q025: f64,
    pub q975: f64,
}

/// Predictions of one variant from the trial with `seed`, at `n_points`
/// equally spaced inputs of a 1-D problem.
pub fn plot_data(
    problem: &Problem,
    variant: MethodVariant,
    n_train: usize,
    n_points: usize,
    seed: u64,
    template: &InferenceConfig,
) -> Result<Vec<PlotRow>> {
    if problem.dim() != 1 {
        return Err(invalid("plot data is only produced for 1-D problems"));
    }
    let (xs, ys) = training_data(problem, n_train, seed)?;
    let train = TrainingSet::normalized(xs, ys)?;
    let cfg = InferenceConfig {
        mode: variant.inference_mode(),
        seed,
        ..template.clone()
    };
    let fit = inference::infer(&train, Some(&problem.bounds), &cfg)?;
    let s = Surrogate::new(
        FittedGP::fit(train, fit.params)?,
        problem.bounds.clone(),
        variant.prediction_uses_projection(),
    );
    let pts = test_points(problem, n_points, seed)?;
    let preds = s.predict_many(Execution::Sequential, &pts)?;
    Ok(pts
        .iter()
        .zip(preds)
        .map(|(x, p)| PlotRow {
            x: x[0],
            truth: problem.truth(x),
            lower: p.bounds.lower,
            upper: p.bounds.upper,
            mean: p.mean,
            q025: p.q025,
            q975: p.q975,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variant_flags() {
        use MethodVariant::*;
        let flags: Vec<(bool, bool)> = MethodVariant::ALL
            .iter()
            .map(|v| (v.inference_uses_bounds(), v.prediction_uses_projection()))
            .collect();
        assert_eq!(
            flags,
            vec![(true, true), (true, false), (false, true), (false, false)]
        );
        assert_eq!("bgp_i".parse::<MethodVariant>().unwrap(), BgpI);
        assert_eq!("bGP-P".parse::<MethodVariant>().unwrap(), BgpP);
        assert_eq!("GP".parse::<MethodVariant>().unwrap(), Gp);
        assert!("dm".parse::<MethodVariant>().is_err());
    }
}
