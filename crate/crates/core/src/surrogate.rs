//! A fitted GP together with its bounds, predicting in original units.

use crate::error::{Error, Result};
use crate::gp::{FittedGP, GaussianPrediction};
use crate::normal;
use crate::par::{self, Execution};
use crate::projection::{BoundSpec, PointBounds, ProjectedPosterior};

/// Everything reported at one query point, in original output units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointPrediction {
    pub mu_f: f64,
    pub sigma_f: f64,
    pub bounds: PointBounds,
    /// Reported mean: projected when the surrogate projects, `mu_f` otherwise.
    pub mean: f64,
    pub std_dev: f64,
    pub q025: f64,
    pub q50: f64,
    pub q975: f64,
    pub mass_lower: f64,
    pub mass_upper: f64,
}

#[derive(Debug, Clone)]
pub struct Surrogate {
    gp: FittedGP,
    bounds: BoundSpec,
    project: bool,
}

impl Surrogate {
    /// `gp` must be fitted on a (possibly normalised) [`crate::TrainingSet`];
    /// `bounds` take original-unit inputs and return original-unit values.
    pub fn new(gp: FittedGP, bounds: BoundSpec, project: bool) -> Self {
        Self {
            gp,
            bounds,
            project,
        }
    }

    pub fn gp(&self) -> &FittedGP {
        &self.gp
    }

    pub fn bounds(&self) -> &BoundSpec {
        &self.bounds
    }

    pub fn projects(&self) -> bool {
        self.project
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        let d = self.gp.train().dim();
        if x.len() != d {
            return Err(Error::Dimension {
                expected: d,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Gaussian posterior in normalised units at an original-unit input.
    fn latent(&self, x: &[f64]) -> Result<GaussianPrediction> {
        self.check(x)?;
        self.gp.predict(&self.gp.train().normalize_input(x))
    }

    fn summarize(&self, x: &[f64], pred: GaussianPrediction) -> Result<PointPrediction> {
        let t = self.gp.train();
        let (shift, scale) = (t.output_shift(), t.output_scale());
        let bounds = self.bounds.eval(x)?;
        let to_orig = |v: f64| shift + scale * v;
        let sigma = pred.std_dev();
        let (mean, std, q, ml, mu) = if self.project {
            let pp = ProjectedPosterior::new(pred, bounds.normalize(shift, scale))?;
            let q = [pp.quantile(0.025)?, pp.quantile(0.5)?, pp.quantile(0.975)?];
            (pp.mean(), pp.std_dev(), q, pp.mass_lower(), pp.mass_upper())
        } else {
            let h = normal::Z_975 * sigma;
            (
                pred.mean,
                sigma,
                [pred.mean - h, pred.mean, pred.mean + h],
                0.0,
                0.0,
            )
        };
        let [q025, q50, q975] = q.map(&to_orig);
        // keep reported values inside the original-unit bounds despite rounding
        let fix = |v: f64| if self.project { bounds.clip(v) } else { v };
        Ok(PointPrediction {
            mu_f: to_orig(pred.mean),
            sigma_f: scale * sigma,
            bounds,
            mean: fix(to_orig(mean)),
            std_dev: scale * std,
            q025: fix(q025),
            q50: fix(q50),
            q975: fix(q975),
            mass_lower: ml,
            mass_upper: mu,
        })
    }

    pub fn predict(&self, x: &[f64]) -> Result<PointPrediction> {
        let pred = self.latent(x)?;
        self.summarize(x, pred)
    }

    /// Full predictions at many original-unit points.
    pub fn predict_many(
        &self,
        exec: Execution,
        points: &[Vec<f64>],
    ) -> Result<Vec<PointPrediction>> {
        par::map_chunks(exec, points, 256, |chunk| {
            chunk.iter().map(|x| self.predict(x)).collect::<Vec<_>>()
        })
        .into_iter()
        .collect()
    }

    /// Reported means only (projected when the surrogate projects).
    pub fn predict_means(&self, exec: Execution, points: &[Vec<f64>]) -> Result<Vec<f64>> {
        let d = self.gp.train().dim();
        if let Some(x) = points.iter().find(|x| x.len() != d) {
            return Err(Error::Dimension {
                expected: d,
                got: x.len(),
            });
        }
        self.predict_means_flat(exec, &points.concat())
    }

    /// [`Self::predict_means`] on row-major flattened points.
    pub fn predict_means_flat(&self, exec: Execution, points: &[f64]) -> Result<Vec<f64>> {
        let t = self.gp.train();
        let d = t.dim();
        if !points.len().is_multiple_of(d) {
            return Err(Error::Dimension {
                expected: d,
                got: points.len() % d,
            });
        }
        let (shift, scale) = (t.output_shift(), t.output_scale());
        par::map_chunks(exec, points, d * 256, |chunk| {
            chunk
                .chunks_exact(d)
                .map(|x| {
                    let xn = t.normalize_input(x);
                    if !self.project {
                        return Ok(shift + scale * self.gp.predict_mean(&xn)?);
                    }
                    let pred = self.gp.predict(&xn)?;
                    let b = self.bounds.eval(x)?;
                    let m = ProjectedPosterior::new(pred, b.normalize(shift, scale))?.mean();
                    Ok(b.clip(shift + scale * m))
                })
                .collect::<Vec<_>>()
        })
        .into_iter()
        .collect()
    }
}
