use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::projection::BoundSpec;
use crate::{design, rng};

pub type TruthFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A synthetic regression problem with known truth and bounds.
#[derive(Clone)]
pub struct Problem {
    pub name: &'static str,
    pub domain: Vec<(f64, f64)>,
    pub truth: TruthFn,
    pub bounds: BoundSpec,
    pub default_train_sizes: Vec<usize>,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .finish()
    }
}

/// Number of uniform points checked when a problem is registered.
pub const REGISTRATION_POINTS: usize = 100_000;

impl Problem {
    pub fn dim(&self) -> usize {
        self.domain.len()
    }

    pub fn truth(&self, x: &[f64]) -> f64 {
        (self.truth)(x)
    }

    /// Checks `l(x) ≤ f(x) ≤ u(x)` (non-strict) on `n` seeded uniform points.
    pub fn validate(&self, n: usize, seed: u64) -> Result<()> {
        let mut r = rng::seeded(seed);
        for x in design::uniform_sample(n, &self.domain, &mut r)? {
            let f = self.truth(&x);
            let (l, u) = self.bounds.eval_raw(&x);
            let ok = f.is_finite() && l.is_none_or(|l| l <= f) && u.is_none_or(|u| f <= u);
            if !ok {
                return Err(Error::Catalog(format!(
                    "problem {}: truth {f} outside [{l:?}, {u:?}] at {x:?}",
                    self.name
                )));
            }
        }
        Ok(())
    }
}

/// Beta(a, b) density, zero outside `[0, 1]`.
pub fn beta_pdf(t: f64, a: f64, b: f64) -> f64 {
    if !(0.0..=1.0).contains(&t) {
        return 0.0;
    }
    let log_beta = libm::lgamma(a) + libm::lgamma(b) - libm::lgamma(a + b);
    let body = (a - 1.0) * t.ln() + (b - 1.0) * (1.0 - t).ln() - log_beta;
    if body.is_nan() {
        0.0
    } else {
        body.exp()
    }
}

/// `sin(t)/t` with its limit 1 at the origin.
fn sinc(t: f64) -> f64 {
    if t == 0.0 {
        1.0
    } else {
        t.sin() / t
    }
}

fn problem_a() -> Problem {
    Problem {
        name: "a",
        domain: vec![(0.0, 10.0)],
        truth: Arc::new(|x| 0.2 * beta_pdf((x[0] - 3.0) / 5.0, 1.4, 2.6)),
        bounds: BoundSpec::none().with_lower(|_| 0.0),
        default_train_sizes: vec![10],
    }
}

fn b_truth(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x * (1.0 / x).sin()
    }
}

fn problem_b() -> Problem {
    Problem {
        name: "b",
        domain: vec![(-PI / 8.0, PI / 8.0)],
        truth: Arc::new(|x| b_truth(x[0])),
        bounds: BoundSpec::none()
            .with_lower(|x| -(x[0] * x[0]))
            .with_upper(|x| x[0] * x[0]),
        default_train_sizes: vec![15],
    }
}

/// Problem (c)'s truth; the removable singularity at 0 takes its limit 0.
pub fn c_truth(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        (10.0 * PI * x.powf(2.5)).sin() / (10.0 * PI * x)
    }
}

fn problem_c() -> Problem {
    Problem {
        name: "c",
        domain: vec![(0.0, 1.0)],
        truth: Arc::new(|x| c_truth(x[0])),
        bounds: BoundSpec::none()
            .with_partial_lower(|x| (c_truth(x[0]) >= 0.0).then_some(0.0))
            .with_partial_upper(|x| (c_truth(x[0]) < 0.0).then_some(0.0)),
        default_train_sizes: vec![10],
    }
}

/// `min(1/|t|, 1)`, the envelope of `|sin(t)/t|`.
fn inv_envelope(t: f64) -> f64 {
    (1.0 / t.abs()).min(1.0)
}

fn problem_2d() -> Problem {
    Problem {
        name: "2d",
        domain: vec![(-10.0, 10.0), (-10.0, 10.0)],
        truth: Arc::new(|x| -sinc(x[0]) - sinc(x[1] + 2.0) + 2.0),
        bounds: BoundSpec::none()
            .with_lower(|x| -inv_envelope(x[0]) - inv_envelope(x[1] + 2.0) + 2.0)
            .with_upper(|x| inv_envelope(x[0]) + inv_envelope(x[1] + 2.0) + 2.0),
        default_train_sizes: vec![30, 40, 50],
    }
}

fn problem_ishigami() -> Problem {
    Problem {
        name: "ishigami",
        domain: vec![(-PI, PI); 3],
        truth: Arc::new(|x| {
            x[0].sin() + 7.0 * x[1].sin().powi(2) + 0.1 * x[2].powi(4) * x[0].sin()
        }),
        bounds: BoundSpec::none()
            .with_lower(|x| x[0].clamp(-1.0, 0.0) * (1.0 + 0.1 * x[2].powi(4)))
            .with_upper(|x| {
                x[0].clamp(0.0, 1.0) * (1.0 + 0.1 * x[2].powi(4)) + 7.0 * (x[1] * x[1]).min(1.0)
            }),
        default_train_sizes: vec![20, 40, 60, 80, 100],
    }
}

/// Catalog names in display order.
pub const PROBLEM_NAMES: [&str; 5] = ["a", "b", "c", "2d", "ishigami"];

fn build(name: &str) -> Option<Problem> {
    Some(match name {
        "a" => problem_a(),
        "b" => problem_b(),
        "c" => problem_c(),
        "2d" => problem_2d(),
        "ishigami" => problem_ishigami(),
        _ => return None,
    })
}

/// All five problems, each validated on [`REGISTRATION_POINTS`] points.
pub fn problem_catalog() -> Result<Vec<Problem>> {
    PROBLEM_NAMES.iter().map(|n| problem(n)).collect()
}

/// One validated problem by name.
pub fn problem(name: &str) -> Result<Problem> {
    let p = build(name).ok_or_else(|| {
        Error::Catalog(format!(
            "unknown problem '{name}' (expected one of {})",
            PROBLEM_NAMES.join(", ")
        ))
    })?;
    p.validate(REGISTRATION_POINTS, 0)?;
    Ok(p)
}
