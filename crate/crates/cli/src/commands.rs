use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use bgp_core::benchmarks::{self, ExperimentConfig, ExperimentSummary, MethodVariant};
use bgp_core::density::{self, DensityConfig, DensitySummary};
use bgp_core::surrogate::PointPrediction;
use bgp_core::{inference, InferenceConfig, TrainingSet};

use crate::config::{RunConfig, Task};
use crate::error::{CliError, CliResult};
use crate::model::{BoundDecl, Model};
use crate::table::{num, Table};

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::data(format!("cannot create {}: {e}", dir.display())))?;
    }
    std::fs::write(path, contents)
        .map_err(|e| CliError::data(format!("cannot write {}: {e}", path.display())))
}

fn say(out: &mut dyn Write, text: &str) -> CliResult<()> {
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::data(format!("cannot write to stdout: {e}")))
}

pub fn execute(config: &RunConfig, out: &mut dyn Write) -> CliResult<Vec<PathBuf>> {
    match &config.task {
        Task::Fit {
            data,
            bounds,
            variant,
            model,
        } => fit(config, data, bounds, *variant, model, out),
        Task::Predict {
            model,
            query,
            output,
        } => predict(config, model, query, output, out),
        Task::Benchmark {
            problems,
            variants,
            sizes,
            reps,
            n_test,
            plot_points,
        } => benchmark(
            config,
            problems,
            variants,
            sizes.as_deref(),
            *reps,
            *n_test,
            *plot_points,
            out,
        ),
        Task::Density {
            target,
            variants,
            sizes,
            reps,
            mc_samples,
            contour_res,
        } => density_cmd(
            config,
            target,
            variants,
            sizes,
            *reps,
            *mc_samples,
            *contour_res,
            out,
        ),
    }
}

fn list(v: &[f64]) -> String {
    v.iter().map(|&x| num(x)).collect::<Vec<_>>().join(",")
}

fn fit(
    config: &RunConfig,
    data: &Path,
    bounds: &BoundDecl,
    variant: Option<MethodVariant>,
    model_path: &Path,
    out: &mut dyn Write,
) -> CliResult<Vec<PathBuf>> {
    let table = Table::read(data)?;
    let (xs, ys) = table.split_output()?;
    let d = table.width() - 1;
    bounds.check_dim(d)?;
    let variant = variant.unwrap_or(if bounds.is_none() {
        MethodVariant::Gp
    } else {
        MethodVariant::Bgp
    });
    let needs_bounds = variant.inference_uses_bounds() || variant.prediction_uses_projection();
    if needs_bounds && bounds.is_none() {
        return Err(CliError::usage(format!(
            "variant {variant} needs --lower and/or --upper"
        )));
    }
    let spec = bounds.spec();
    for (i, (x, y)) in xs.iter().zip(&ys).enumerate() {
        let (l, u) = spec.eval_raw(x);
        if l.is_some_and(|l| !(l <= *y)) || u.is_some_and(|u| !(*y <= u)) {
            return Err(CliError::data(format!(
                "row {}: output {y} violates the declared bounds [{l:?}, {u:?}]",
                i + 1
            )));
        }
    }
    let train = TrainingSet::normalized(xs.clone(), ys.clone())?;
    let cfg = InferenceConfig {
        mode: variant.inference_mode(),
        ..config.inference.clone()
    };
    let fit = inference::infer(&train, Some(&spec), &cfg)?;
    let model = Model {
        variant,
        columns: table.header.clone(),
        bounds: bounds.clone(),
        params: fit.params.clone(),
        objective: fit.objective,
        input_shift: train.input_shift().to_vec(),
        input_scale: train.input_scale().to_vec(),
        output_shift: train.output_shift(),
        output_scale: train.output_scale(),
        inputs: xs,
        outputs: ys,
    };
    model.surrogate()?;
    write_file(model_path, &model.to_text())?;
    let mut msg = String::new();
    writeln!(msg, "variant       {variant}").unwrap();
    writeln!(
        msg,
        "mode          {}",
        if variant.inference_uses_bounds() {
            "bounded"
        } else {
            "unbounded"
        }
    )
    .unwrap();
    writeln!(msg, "press         {}", num(fit.objective)).unwrap();
    writeln!(msg, "sigma2        {}", num(fit.params.sigma2)).unwrap();
    writeln!(msg, "sigma2_hat    {}", num(fit.sigma2_reference)).unwrap();
    writeln!(msg, "lengthscales  {}", list(&fit.params.lengthscales)).unwrap();
    writeln!(msg, "nugget        {}", num(fit.params.nugget)).unwrap();
    writeln!(msg, "evaluations   {}", fit.evaluations).unwrap();
    writeln!(msg, "model         {}", model_path.display()).unwrap();
    say(out, &msg)?;
    Ok(vec![model_path.to_path_buf()])
}

/// Column names of the prediction block.
pub const PREDICTION_COLUMNS: [&str; 11] = [
    "mu_f",
    "sigma_f",
    "l",
    "u",
    "mu_g",
    "sigma_g",
    "q025",
    "q50",
    "q975",
    "mass_lower",
    "mass_upper",
];

pub fn predictions_csv(header: &[String], rows: &[Vec<f64>], preds: &[PointPrediction]) -> String {
    let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
    let mut s = String::new();
    writeln!(s, "{},{}", header.join(","), PREDICTION_COLUMNS.join(",")).unwrap();
    for (x, p) in rows.iter().zip(preds) {
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            list(x),
            num(p.mu_f),
            num(p.sigma_f),
            opt(p.bounds.lower),
            opt(p.bounds.upper),
            num(p.mean),
            num(p.std_dev),
            num(p.q025),
            num(p.q50),
            num(p.q975),
            num(p.mass_lower),
            num(p.mass_upper)
        )
        .unwrap();
    }
    s
}

fn predict(
    config: &RunConfig,
    model_path: &Path,
    query: &Path,
    output: &Path,
    out: &mut dyn Write,
) -> CliResult<Vec<PathBuf>> {
    let model = Model::load(model_path)?;
    let table = Table::read(query)?;
    if table.width() != model.dim() {
        return Err(CliError::data(format!(
            "dimension mismatch: model has {} inputs, query has {} columns",
            model.dim(),
            table.width()
        )));
    }
    let preds = model
        .surrogate()?
        .predict_many(config.execution, &table.rows)?;
    write_file(output, &predictions_csv(&table.header, &table.rows, &preds))?;
    say(
        out,
        &format!(
            "wrote {} predictions to {}\n",
            preds.len(),
            output.display()
        ),
    )?;
    Ok(vec![output.to_path_buf()])
}

#[allow(clippy::too_many_arguments)]
fn benchmark(
    config: &RunConfig,
    problems: &[String],
    variants: &[MethodVariant],
    sizes: Option<&[usize]>,
    reps: usize,
    n_test: usize,
    plot_points: usize,
    out: &mut dyn Write,
) -> CliResult<Vec<PathBuf>> {
    let exp = ExperimentConfig {
        n_test,
        replications: reps,
        base_seed: config.seed,
        inference: config.inference.clone(),
        execution: config.execution,
    };
    let mut summaries: Vec<ExperimentSummary> = Vec::new();
    let mut written = Vec::new();
    let mut plots = Vec::new();
    for name in problems {
        let problem = benchmarks::problem(name)?;
        let ns = sizes
            .map(<[usize]>::to_vec)
            .unwrap_or_else(|| problem.default_train_sizes.clone());
        for &n in &ns {
            summaries.extend(benchmarks::run_experiments(&problem, variants, n, &exp)?);
        }
        if problem.dim() == 1 && plot_points > 0 {
            for &v in variants {
                let rows = benchmarks::plot_data(
                    &problem,
                    v,
                    ns[0],
                    plot_points,
                    config.seed,
                    &config.inference,
                )?;
                let path = config.out.join(format!("plot_{}_{}.csv", problem.name, v));
                plots.push((path, benchmarks::report::plot_csv(&rows)));
            }
        }
    }
    let markdown = benchmarks::report::summary_markdown(&summaries);
    let files = [
        (
            "benchmark_trials.csv",
            benchmarks::report::trials_csv(&summaries),
        ),
        (
            "benchmark_failures.csv",
            benchmarks::report::failures_csv(&summaries),
        ),
        ("benchmark_summary.md", markdown.clone()),
    ];
    for (name, text) in files {
        let path = config.out.join(name);
        write_file(&path, &text)?;
        written.push(path);
    }
    for (path, text) in plots {
        write_file(&path, &text)?;
        written.push(path);
    }
    say(out, &markdown)?;
    Ok(written)
}

#[allow(clippy::too_many_arguments)]
fn density_cmd(
    config: &RunConfig,
    target_name: &str,
    variants: &[MethodVariant],
    sizes: &[usize],
    reps: usize,
    mc_samples: usize,
    contour_res: usize,
    out: &mut dyn Write,
) -> CliResult<Vec<PathBuf>> {
    let target = density::target(target_name)?;
    let cfg = DensityConfig {
        replications: reps,
        base_seed: config.seed,
        mc_samples,
        inference: config.inference.clone(),
        execution: config.execution,
    };
    let mut summaries: Vec<DensitySummary> = Vec::new();
    for &n in sizes {
        summaries.extend(density::run_density_experiment(&target, variants, n, &cfg)?);
    }
    let markdown = density::density_markdown(&summaries);
    let mut files = vec![
        ("density_h2.csv", density::density_csv(&summaries)),
        ("density_summary.md", markdown.clone()),
    ];
    if contour_res > 0 {
        let approx = variants
            .iter()
            .map(|&v| {
                density::build_approximation(
                    &target,
                    sizes[0],
                    v,
                    config.seed,
                    mc_samples,
                    &config.inference,
                )
            })
            .collect::<bgp_core::Result<Vec<_>>>()?;
        let refs: Vec<_> = approx.iter().collect();
        files.push((
            "density_contour.csv",
            density::contour_csv(&target, &refs, contour_res)?,
        ));
    }
    let mut written = Vec::new();
    for (name, text) in files {
        let path = config.out.join(name);
        write_file(&path, &text)?;
        written.push(path);
    }
    say(out, &markdown)?;
    Ok(written)
}
