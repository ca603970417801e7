//! CSV and Markdown writers. Numbers use Rust's shortest round-trip
//! formatting so reruns are byte-identical.

use std::fmt::Write;

use super::experiment::{ExperimentSummary, PlotRow};
use super::metrics::Stat;

type Column = fn(&ExperimentSummary) -> Stat;

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per successful trial.
pub fn trials_csv(summaries: &[ExperimentSummary]) -> String {
    let mut s = String::from("problem,variant,n_train,seed,r2,rmse,cp\n");
    for e in summaries {
        for t in &e.trials {
            writeln!(
                s,
                "{},{},{},{},{},{},{}",
                e.problem, t.variant, t.n_train, t.seed, t.r2, t.rmse, t.cp
            )
            .unwrap();
        }
    }
    s
}

/// One row per failed trial.
pub fn failures_csv(summaries: &[ExperimentSummary]) -> String {
    let mut s = String::from("problem,variant,n_train,seed,error\n");
    for e in summaries {
        for (seed, msg) in &e.failures {
            writeln!(
                s,
                "{},{},{},{},\"{}\"",
                e.problem,
                e.variant,
                e.n_train,
                seed,
                msg.replace('"', "'")
            )
            .unwrap();
        }
    }
    s
}

fn cell(st: Stat, scale: f64) -> String {
    if st.mean.is_nan() {
        return "n/a".into();
    }
    format!("{:.3} ± {:.3}", st.mean * scale, st.std * scale)
}

/// A table per problem with metric/N rows and variant columns. R² and CP are
/// in percent; RMSE is ×100 for 1-D problems and raw otherwise.
pub fn summary_markdown(summaries: &[ExperimentSummary]) -> String {
    let mut out = String::new();
    let mut problems: Vec<&str> = Vec::new();
    for e in summaries {
        if !problems.contains(&e.problem.as_str()) {
            problems.push(&e.problem);
        }
    }
    for p in problems {
        let cells: Vec<&ExperimentSummary> = summaries.iter().filter(|e| e.problem == p).collect();
        let mut variants = Vec::new();
        let mut ns = Vec::new();
        for e in &cells {
            if !variants.contains(&e.variant) {
                variants.push(e.variant);
            }
            if !ns.contains(&e.n_train) {
                ns.push(e.n_train);
            }
        }
        let one_d = cells[0].dim == 1;
        let rmse_label = if one_d { "RMSE ×100" } else { "RMSE" };
        writeln!(out, "### Problem {p}\n").unwrap();
        write!(out, "| metric | N |").unwrap();
        for v in &variants {
            write!(out, " {v} |").unwrap();
        }
        writeln!(out).unwrap();
        writeln!(out, "|---|---|{}", "---|".repeat(variants.len())).unwrap();
        let rows: [(&str, Column, f64); 3] = [
            ("R² ×100", |e| e.r2, 100.0),
            (rmse_label, |e| e.rmse, if one_d { 100.0 } else { 1.0 }),
            ("CP (%)", |e| e.cp, 100.0),
        ];
        for (label, get, scale) in rows {
            for n in &ns {
                write!(out, "| {label} | {n} |").unwrap();
                for v in &variants {
                    let c = cells.iter().find(|e| e.variant == *v && e.n_train == *n);
                    write!(out, " {} |", c.map_or("-".into(), |e| cell(get(e), scale))).unwrap();
                }
                writeln!(out).unwrap();
            }
        }
        for n in &ns {
            write!(out, "| failures | {n} |").unwrap();
            for v in &variants {
                let c = cells.iter().find(|e| e.variant == *v && e.n_train == *n);
                write!(
                    out,
                    " {} |",
                    c.map_or("-".into(), |e| format!(
                        "{}/{}",
                        e.failures.len(),
                        e.failures.len() + e.trials.len()
                    ))
                )
                .unwrap();
            }
            writeln!(out).unwrap();
        }
        writeln!(out).unwrap();
    }
    out.push_str(
        "CP of projected variants uses the projected 2.5%/97.5% quantiles; unprojected variants use μ ± 1.96σ.\n",
    );
    out
}

/// `x,truth,l,u,mu_g,q025,q975`; a missing bound is an empty field.
pub fn plot_csv(rows: &[PlotRow]) -> String {
    let mut s = String::from("x,truth,l,u,mu_g,q025,q975\n");
    for r in rows {
        writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.x,
            r.truth,
            opt(r.lower),
            opt(r.upper),
            r.mean,
            r.q025,
            r.q975
        )
        .unwrap();
    }
    s
}
