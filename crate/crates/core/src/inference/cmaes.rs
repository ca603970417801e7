//! (μ/μ_w, λ) CMA-ES with rank-one and rank-μ covariance updates.
//!
//! Box constraints are handled by evaluating the objective at the clamped
//! candidate and adding the squared distance to the box as a penalty, so the
//! distribution is pulled back inside while every evaluation is feasible.
//! Candidates of one generation are evaluated through [`par::map_slice`];
//! the state update only sees the ordered results, so the run is a pure
//! function of the seed.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::par::{self, Execution};

#[derive(Debug, Clone)]
pub struct CmaesOptions {
    /// λ; `None` uses `4 + ⌊3 ln n⌋`.
    pub population: Option<usize>,
    pub max_generations: usize,
    pub initial_step: f64,
    /// Stop when the spread of recent best values and of the current
    /// generation falls below this.
    pub tol_fun: f64,
    /// Stop when every coordinate's step falls below this.
    pub tol_x: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub execution: Execution,
}

/// Default population size for dimension `n`.
pub fn default_population(n: usize) -> usize {
    4 + (3.0 * (n as f64).ln()).floor() as usize
}

#[derive(Debug, Clone, PartialEq)]
pub struct CmaesOutcome {
    /// Best feasible (clamped) point seen.
    pub best_x: Vec<f64>,
    /// Objective at `best_x` (no penalty).
    pub best_f: f64,
    pub evaluations: usize,
    pub generations: usize,
    /// Stopped on `tol_fun`/`tol_x` rather than on the generation budget.
    pub converged: bool,
    /// Best objective of each generation.
    pub trace: Vec<f64>,
}

fn clamp_into(x: &[f64], lo: &[f64], hi: &[f64]) -> Vec<f64> {
    x.iter()
        .zip(lo)
        .zip(hi)
        .map(|((v, l), h)| v.clamp(*l, *h))
        .collect()
}

/// Minimises `f` over the box `[lower, upper]` starting from `x0`.
pub fn minimize<F, R>(f: &F, x0: &[f64], opts: &CmaesOptions, rng: &mut R) -> CmaesOutcome
where
    F: Fn(&[f64]) -> f64 + Sync,
    R: Rng + ?Sized,
{
    let n = x0.len();
    assert!(n >= 1 && opts.lower.len() == n && opts.upper.len() == n);
    let nf = n as f64;
    let lambda = opts
        .population
        .unwrap_or_else(|| default_population(n))
        .max(2);
    let mu = lambda / 2;
    let raw: Vec<f64> = (0..mu)
        .map(|i| (mu as f64 + 0.5).ln() - ((i + 1) as f64).ln())
        .collect();
    let wsum: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.iter().map(|w| w / wsum).collect();
    let mu_eff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();

    let c_sigma = (mu_eff + 2.0) / (nf + mu_eff + 5.0);
    let d_sigma = 1.0 + 2.0 * (((mu_eff - 1.0) / (nf + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
    let c_c = (4.0 + mu_eff / nf) / (nf + 4.0 + 2.0 * mu_eff / nf);
    let c1 = 2.0 / ((nf + 1.3).powi(2) + mu_eff);
    let c_mu = (1.0 - c1).min(2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((nf + 2.0).powi(2) + mu_eff));
    let chi_n = nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf));

    let mut mean = DVector::from_column_slice(&clamp_into(x0, &opts.lower, &opts.upper));
    let mut sigma = opts.initial_step;
    let mut cov = DMatrix::<f64>::identity(n, n);
    let mut p_sigma = DVector::<f64>::zeros(n);
    let mut p_c = DVector::<f64>::zeros(n);
    let mut basis = DMatrix::<f64>::identity(n, n);
    let mut scales = DVector::<f64>::from_element(n, 1.0);

    let history_len = 10 + (30.0 * nf / lambda as f64).ceil() as usize;
    let mut trace = Vec::new();
    let mut best_x = mean.as_slice().to_vec();
    let mut best_f = f64::INFINITY;
    let mut evaluations = 0;
    let mut converged = false;
    let mut generation = 0;

    while generation < opts.max_generations {
        // sample
        let mut steps = Vec::with_capacity(lambda);
        let mut candidates = Vec::with_capacity(lambda);
        for _ in 0..lambda {
            let z = DVector::<f64>::from_fn(n, |_, _| rng.sample(StandardNormal));
            let y = &basis * z.component_mul(&scales);
            let x = &mean + sigma * &y;
            candidates.push(x.as_slice().to_vec());
            steps.push(y);
        }
        let results: Vec<(f64, f64, Vec<f64>)> = par::map_slice(opts.execution, &candidates, |x| {
            let feasible = clamp_into(x, &opts.lower, &opts.upper);
            let value = f(&feasible);
            let value = if value.is_finite() {
                value
            } else {
                f64::INFINITY
            };
            let dist2: f64 = x.iter().zip(&feasible).map(|(a, b)| (a - b).powi(2)).sum();
            (value + dist2, value, feasible)
        });
        evaluations += lambda;

        let mut order: Vec<usize> = (0..lambda).collect();
        order.sort_by(|&a, &b| results[a].0.total_cmp(&results[b].0));
        for (_, value, feasible) in &results {
            if *value < best_f {
                best_f = *value;
                best_x = feasible.clone();
            }
        }
        let gen_best = results[order[0]].1;
        trace.push(gen_best);
        generation += 1;

        // recombination
        let mut y_w = DVector::<f64>::zeros(n);
        for (w, &k) in weights.iter().zip(&order) {
            y_w += *w * &steps[k];
        }
        mean += sigma * &y_w;

        // cumulation
        let inv_sqrt =
            &basis * DMatrix::from_diagonal(&scales.map(|d| 1.0 / d)) * basis.transpose();
        p_sigma = (1.0 - c_sigma) * &p_sigma
            + (c_sigma * (2.0 - c_sigma) * mu_eff).sqrt() * (&inv_sqrt * &y_w);
        let norm_ps = p_sigma.norm();
        let h_sigma = norm_ps / (1.0 - (1.0 - c_sigma).powi(2 * generation as i32)).sqrt()
            < (1.4 + 2.0 / (nf + 1.0)) * chi_n;
        let h = if h_sigma { 1.0 } else { 0.0 };
        p_c = (1.0 - c_c) * &p_c + h * (c_c * (2.0 - c_c) * mu_eff).sqrt() * &y_w;

        // covariance
        let mut rank_mu = DMatrix::<f64>::zeros(n, n);
        for (w, &k) in weights.iter().zip(&order) {
            rank_mu += *w * &steps[k] * steps[k].transpose();
        }
        cov = (1.0 - c1 - c_mu) * &cov
            + c1 * (&p_c * p_c.transpose() + (1.0 - h) * c_c * (2.0 - c_c) * &cov)
            + c_mu * rank_mu;
        cov = (&cov + cov.transpose()) * 0.5;

        sigma *= ((c_sigma / d_sigma) * (norm_ps / chi_n - 1.0)).exp();

        let eig = SymmetricEigen::new(cov.clone());
        basis = eig.eigenvectors;
        scales = eig.eigenvalues.map(|v| v.max(1e-300).sqrt());

        // termination
        let finite: Vec<f64> = results
            .iter()
            .map(|r| r.1)
            .filter(|v| v.is_finite())
            .collect();
        if trace.len() >= history_len && finite.len() == lambda {
            let recent = &trace[trace.len() - history_len..];
            let (rmin, rmax) = min_max(recent);
            let (gmin, gmax) = min_max(&finite);
            if rmax - rmin < opts.tol_fun && gmax - gmin < opts.tol_fun {
                converged = true;
                break;
            }
        }
        let max_step = (0..n)
            .map(|i| sigma * cov[(i, i)].sqrt())
            .fold(0.0, f64::max);
        let max_pc = p_c.amax() * sigma;
        if max_step < opts.tol_x && max_pc < opts.tol_x {
            converged = true;
            break;
        }
        let (dmin, dmax) = min_max(scales.as_slice());
        if dmax / dmin > 1e7 || !sigma.is_finite() {
            break;
        }
    }

    CmaesOutcome {
        best_x,
        best_f,
        evaluations,
        generations: generation,
        converged,
        trace,
    }
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn opts(n: usize, lo: f64, hi: f64) -> CmaesOptions {
        CmaesOptions {
            population: None,
            max_generations: 500,
            initial_step: 0.5,
            tol_fun: 1e-12,
            tol_x: 1e-9,
            lower: vec![lo; n],
            upper: vec![hi; n],
            execution: Execution::Sequential,
        }
    }

    #[test]
    fn solves_shifted_sphere() {
        let f = |x: &[f64]| {
            x.iter()
                .enumerate()
                .map(|(i, v)| (v - 0.1 * i as f64).powi(2))
                .sum::<f64>()
        };
        let out = minimize(
            &f,
            &[1.0, 1.0, 1.0],
            &opts(3, -5.0, 5.0),
            &mut rng::seeded(1),
        );
        assert!(out.best_f < 1e-10, "{}", out.best_f);
        assert!(out.converged);
    }

    #[test]
    fn solves_rosenbrock() {
        let f = |x: &[f64]| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2);
        let out = minimize(&f, &[-1.0, 1.5], &opts(2, -5.0, 5.0), &mut rng::seeded(2));
        assert!((out.best_x[0] - 1.0).abs() < 1e-4 && (out.best_x[1] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn respects_box() {
        // unconstrained optimum at 3, box stops at 1
        let f = |x: &[f64]| (x[0] - 3.0).powi(2);
        let out = minimize(&f, &[0.0], &opts(1, -1.0, 1.0), &mut rng::seeded(3));
        assert!((out.best_x[0] - 1.0).abs() < 1e-6);
        assert!(out.best_x[0] <= 1.0);
    }

    #[test]
    fn deterministic_and_schedule_independent() {
        let f = |x: &[f64]| (x[0] - 0.3).powi(2) + 2.0 * (x[1] + 0.2).powi(2) + (x[0] * x[1]).sin();
        let mut o = opts(2, -3.0, 3.0);
        let a = minimize(&f, &[1.0, 1.0], &o, &mut rng::seeded(9));
        o.execution = Execution::Parallel;
        let b = minimize(&f, &[1.0, 1.0], &o, &mut rng::seeded(9));
        assert_eq!(a, b);
    }

    #[test]
    fn survives_infeasible_regions() {
        let f = |x: &[f64]| {
            if x[0] > 0.5 {
                f64::NAN
            } else {
                (x[0] - 0.2).powi(2)
            }
        };
        let out = minimize(&f, &[0.0], &opts(1, -2.0, 2.0), &mut rng::seeded(4));
        assert!((out.best_x[0] - 0.2).abs() < 1e-5);
    }
}
