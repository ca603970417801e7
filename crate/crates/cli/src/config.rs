//! Command-line flags, the TOML config file that mirrors them, and the
//! merged [`RunConfig`].
//!
//! Precedence is flag, then config file, then built-in default.

use std::path::{Path, PathBuf};

use bgp_core::benchmarks::MethodVariant;
use bgp_core::{Execution, InferenceConfig};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::error::{CliError, CliResult};
use crate::model::BoundDecl;

#[derive(Debug, Parser)]
#[command(name = "bgp", version, about = "Bounded Gaussian-process regression")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Master seed; all randomness derives from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// TOML file with the same keys as the long flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Run every loop on the calling thread.
    #[arg(long, global = true)]
    pub sequential: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Infer hyperparameters on a training CSV and write a model file.
    Fit(FitArgs),
    /// Evaluate a model file on a query CSV.
    Predict(PredictArgs),
    /// Run the synthetic regression benchmarks.
    Benchmark(BenchmarkArgs),
    /// Run the density-approximation experiments.
    Density(DensityArgs),
}

#[derive(Debug, Args, Default)]
pub struct InferenceArgs {
    /// CMA-ES generations per run.
    #[arg(long)]
    pub generations: Option<usize>,
    /// CMA-ES restarts with doubled population.
    #[arg(long)]
    pub restarts: Option<usize>,
    /// CMA-ES population of the first run.
    #[arg(long)]
    pub population: Option<usize>,
    /// Nugget relative to σ².
    #[arg(long)]
    pub nugget: Option<f64>,
    /// Lower σ² multiplier of the bounded search.
    #[arg(long)]
    pub c_lower: Option<f64>,
    /// Upper σ² multiplier of the bounded search.
    #[arg(long)]
    pub c_upper: Option<f64>,
    /// Smallest lengthscale searched (normalised inputs).
    #[arg(long)]
    pub lengthscale_min: Option<f64>,
    /// Largest lengthscale searched (normalised inputs).
    #[arg(long)]
    pub lengthscale_max: Option<f64>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Training CSV: header, d input columns, then the output column.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Lower bound expression over x1..xd.
    #[arg(long, allow_hyphen_values = true)]
    pub lower: Option<String>,
    /// Upper bound expression over x1..xd.
    #[arg(long, allow_hyphen_values = true)]
    pub upper: Option<String>,
    /// bGP, bGP-I, bGP-P or GP (default bGP with bounds, GP without).
    #[arg(long)]
    pub variant: Option<String>,
    /// Model file to write (default OUT/model.txt).
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[command(flatten)]
    pub inference: InferenceArgs,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Model file written by `fit`.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Query CSV with one column per model input.
    #[arg(long)]
    pub query: Option<PathBuf>,
    /// Predictions CSV to write (default OUT/predictions.csv).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// Catalog problem (a, b, c, 2d, ishigami) or "all".
    #[arg(long)]
    pub problem: Option<String>,
    /// Comma-separated method variants.
    #[arg(long)]
    pub variants: Option<String>,
    /// Comma-separated training sizes (default: the problem's own).
    #[arg(long)]
    pub n: Option<String>,
    /// Replications per variant and size (default 50).
    #[arg(long)]
    pub reps: Option<usize>,
    /// Test points per replication (default 1000).
    #[arg(long)]
    pub n_test: Option<usize>,
    /// Points of the 1-D plot data (0 disables).
    #[arg(long)]
    pub plot_points: Option<usize>,
    #[command(flatten)]
    pub inference: InferenceArgs,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    /// nonlinear, nonlinear-narrow or multimodal.
    #[arg(long)]
    pub target: Option<String>,
    /// Comma-separated method variants (default bGP,bGP-P,GP).
    #[arg(long)]
    pub variants: Option<String>,
    /// Comma-separated training sizes (default 200).
    #[arg(long)]
    pub n: Option<String>,
    /// Replications per variant and size (default 50).
    #[arg(long)]
    pub reps: Option<usize>,
    /// Monte-Carlo points per Hellinger estimate.
    #[arg(long)]
    pub mc_samples: Option<usize>,
    /// Contour grid resolution per axis (0 disables).
    #[arg(long)]
    pub contour_res: Option<usize>,
    #[command(flatten)]
    pub inference: InferenceArgs,
}

/// Integer list given either as `"10,20"` or `[10, 20]`.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum SizeList {
    Text(String),
    Items(Vec<usize>),
}

/// Variant list given either as `"bGP,GP"` or `["bGP", "GP"]`.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum NameList {
    Text(String),
    Items(Vec<String>),
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub sequential: Option<bool>,
    pub data: Option<PathBuf>,
    pub lower: Option<String>,
    pub upper: Option<String>,
    pub variant: Option<String>,
    pub model: Option<PathBuf>,
    pub query: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub problem: Option<String>,
    pub target: Option<String>,
    pub variants: Option<NameList>,
    pub n: Option<SizeList>,
    pub reps: Option<usize>,
    pub n_test: Option<usize>,
    pub plot_points: Option<usize>,
    pub mc_samples: Option<usize>,
    pub contour_res: Option<usize>,
    pub generations: Option<usize>,
    pub restarts: Option<usize>,
    pub population: Option<usize>,
    pub nugget: Option<f64>,
    pub c_lower: Option<f64>,
    pub c_upper: Option<f64>,
    pub lengthscale_min: Option<f64>,
    pub lengthscale_max: Option<f64>,
}

impl FileConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::usage(format!("config file: {e}")))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Task {
    Fit {
        data: PathBuf,
        bounds: BoundDecl,
        variant: Option<MethodVariant>,
        model: PathBuf,
    },
    Predict {
        model: PathBuf,
        query: PathBuf,
        output: PathBuf,
    },
    Benchmark {
        problems: Vec<String>,
        variants: Vec<MethodVariant>,
        sizes: Option<Vec<usize>>,
        reps: usize,
        n_test: usize,
        plot_points: usize,
    },
    Density {
        target: String,
        variants: Vec<MethodVariant>,
        sizes: Vec<usize>,
        reps: usize,
        mc_samples: usize,
        contour_res: usize,
    },
}

/// Fully resolved settings of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub task: Task,
    pub seed: u64,
    pub out: PathBuf,
    pub execution: Execution,
    pub inference: InferenceConfig,
}

pub const DEFAULT_REPS: usize = 50;
pub const DEFAULT_N_TEST: usize = 1000;
pub const DEFAULT_PLOT_POINTS: usize = 200;
pub const DEFAULT_CONTOUR_RES: usize = 200;
pub const DEFAULT_DENSITY_SIZES: [usize; 1] = [200];

fn parse_sizes(text: &str) -> CliResult<Vec<usize>> {
    let sizes = text
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| CliError::usage(format!("invalid training size '{s}'")))
        })
        .collect::<CliResult<Vec<_>>>()?;
    if sizes.contains(&0) {
        return Err(CliError::usage("training sizes must be positive"));
    }
    Ok(sizes)
}

fn parse_variants(names: &[String]) -> CliResult<Vec<MethodVariant>> {
    let vs = names
        .iter()
        .map(|s| {
            s.trim()
                .parse::<MethodVariant>()
                .map_err(|e| CliError::usage(e.to_string()))
        })
        .collect::<CliResult<Vec<_>>>()?;
    if vs.is_empty() {
        return Err(CliError::usage("no method variants given"));
    }
    Ok(vs)
}

fn split_names(text: &str) -> Vec<String> {
    text.split(',')
        .map(str::to_string)
        .filter(|s| !s.trim().is_empty())
        .collect()
}

fn sizes(cli: Option<&String>, file: Option<&SizeList>) -> CliResult<Option<Vec<usize>>> {
    match (cli, file) {
        (Some(s), _) | (None, Some(SizeList::Text(s))) => parse_sizes(s).map(Some),
        (None, Some(SizeList::Items(v))) => {
            if v.contains(&0) {
                return Err(CliError::usage("training sizes must be positive"));
            }
            Ok(Some(v.clone()))
        }
        (None, None) => Ok(None),
    }
}

fn variants(
    cli: Option<&String>,
    file: Option<&NameList>,
    default: &[MethodVariant],
) -> CliResult<Vec<MethodVariant>> {
    match (cli, file) {
        (Some(s), _) | (None, Some(NameList::Text(s))) => parse_variants(&split_names(s)),
        (None, Some(NameList::Items(v))) => parse_variants(v),
        (None, None) => Ok(default.to_vec()),
    }
}

fn inference(
    args: &InferenceArgs,
    file: &FileConfig,
    execution: Execution,
    seed: u64,
) -> CliResult<InferenceConfig> {
    let d = InferenceConfig::default();
    let cfg = InferenceConfig {
        cma_generations: args
            .generations
            .or(file.generations)
            .unwrap_or(d.cma_generations),
        restarts: args.restarts.or(file.restarts).unwrap_or(d.restarts),
        cma_population: args.population.or(file.population).or(d.cma_population),
        nugget: args.nugget.or(file.nugget).unwrap_or(d.nugget),
        c_l: args.c_lower.or(file.c_lower).unwrap_or(d.c_l),
        c_u: args.c_upper.or(file.c_upper).unwrap_or(d.c_u),
        lengthscale_box: (
            args.lengthscale_min
                .or(file.lengthscale_min)
                .unwrap_or(d.lengthscale_box.0),
            args.lengthscale_max
                .or(file.lengthscale_max)
                .unwrap_or(d.lengthscale_box.1),
        ),
        seed,
        execution,
        ..d
    };
    cfg.validate().map_err(|e| CliError::usage(e.to_string()))?;
    Ok(cfg)
}

fn required<T>(v: Option<T>, flag: &str) -> CliResult<T> {
    v.ok_or_else(|| CliError::usage(format!("--{flag} is required")))
}

impl RunConfig {
    pub fn resolve(cli: Cli) -> CliResult<Self> {
        let file = match &cli.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let seed = cli.seed.or(file.seed).unwrap_or(0);
        let out = cli
            .out
            .clone()
            .or(file.out.clone())
            .unwrap_or_else(|| PathBuf::from("."));
        let sequential = cli.sequential || file.sequential.unwrap_or(false);
        let execution = if sequential {
            Execution::Sequential
        } else {
            Execution::default()
        };
        let (task, inf) = match cli.command {
            Command::Fit(a) => {
                let bounds = BoundDecl::parse(
                    a.lower.as_deref().or(file.lower.as_deref()),
                    a.upper.as_deref().or(file.upper.as_deref()),
                )?;
                let variant = a
                    .variant
                    .or(file.variant.clone())
                    .map(|s| {
                        s.parse::<MethodVariant>()
                            .map_err(|e| CliError::usage(e.to_string()))
                    })
                    .transpose()?;
                let task = Task::Fit {
                    data: required(a.data.or(file.data.clone()), "data")?,
                    bounds,
                    variant,
                    model: a
                        .model
                        .or(file.model.clone())
                        .unwrap_or_else(|| out.join("model.txt")),
                };
                (task, inference(&a.inference, &file, execution, seed)?)
            }
            Command::Predict(a) => {
                let task = Task::Predict {
                    model: required(a.model.or(file.model.clone()), "model")?,
                    query: required(a.query.or(file.query.clone()), "query")?,
                    output: a
                        .output
                        .or(file.output.clone())
                        .unwrap_or_else(|| out.join("predictions.csv")),
                };
                (
                    task,
                    inference(&InferenceArgs::default(), &file, execution, seed)?,
                )
            }
            Command::Benchmark(a) => {
                let name = required(a.problem.or(file.problem.clone()), "problem")?;
                let problems = if name == "all" {
                    bgp_core::benchmarks::PROBLEM_NAMES
                        .iter()
                        .map(|s| s.to_string())
                        .collect()
                } else if bgp_core::benchmarks::PROBLEM_NAMES.contains(&name.as_str()) {
                    vec![name]
                } else {
                    return Err(CliError::usage(format!(
                        "unknown problem '{name}' (expected one of {} or all)",
                        bgp_core::benchmarks::PROBLEM_NAMES.join(", ")
                    )));
                };
                let task = Task::Benchmark {
                    problems,
                    variants: variants(
                        a.variants.as_ref(),
                        file.variants.as_ref(),
                        &MethodVariant::ALL,
                    )?,
                    sizes: sizes(a.n.as_ref(), file.n.as_ref())?,
                    reps: a.reps.or(file.reps).unwrap_or(DEFAULT_REPS),
                    n_test: a.n_test.or(file.n_test).unwrap_or(DEFAULT_N_TEST),
                    plot_points: a
                        .plot_points
                        .or(file.plot_points)
                        .unwrap_or(DEFAULT_PLOT_POINTS),
                };
                (task, inference(&a.inference, &file, execution, seed)?)
            }
            Command::Density(a) => {
                let target = required(a.target.or(file.target.clone()), "target")?;
                if bgp_core::density::target(&target).is_err() {
                    return Err(CliError::usage(format!(
                        "unknown target '{target}' (expected one of {})",
                        bgp_core::density::TARGET_NAMES.join(", ")
                    )));
                }
                let task = Task::Density {
                    target,
                    variants: variants(
                        a.variants.as_ref(),
                        file.variants.as_ref(),
                        &[MethodVariant::Bgp, MethodVariant::BgpP, MethodVariant::Gp],
                    )?,
                    sizes: sizes(a.n.as_ref(), file.n.as_ref())?
                        .unwrap_or_else(|| DEFAULT_DENSITY_SIZES.to_vec()),
                    reps: a.reps.or(file.reps).unwrap_or(DEFAULT_REPS),
                    mc_samples: a
                        .mc_samples
                        .or(file.mc_samples)
                        .unwrap_or(bgp_core::density::MC_SAMPLES),
                    contour_res: a
                        .contour_res
                        .or(file.contour_res)
                        .unwrap_or(DEFAULT_CONTOUR_RES),
                };
                (task, inference(&a.inference, &file, execution, seed)?)
            }
        };
        if let Task::Benchmark { reps: 0, .. } | Task::Density { reps: 0, .. } = task {
            return Err(CliError::usage("--reps must be at least 1"));
        }
        Ok(Self {
            task,
            seed,
            out,
            execution,
            inference: inf,
        })
    }
}
