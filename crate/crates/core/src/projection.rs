//! Projection of Gaussian marginals onto pointwise bounds.
//!
//! Clipping a path to `[l(x), u(x)]` is the L²-closest bound-respecting
//! function, so the projected posterior at a point is the law of
//! `clip(F, l, u)` with `F ~ N(μ_f, σ_f²)`: an atom `Φ(α)` at `l`, an atom
//! `1 − Φ(β)` at `u` and a Gaussian body of mass `Z` in between, where
//! `α = (l − μ_f)/σ_f` and `β = (u − μ_f)/σ_f`. A missing bound never binds.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};
use crate::gp::GaussianPrediction;
use crate::normal;

/// A bound function on original-unit inputs. `None` means the bound does not
/// exist at that point, which lets a single side switch on and off.
pub type BoundFn = Arc<dyn Fn(&[f64]) -> Option<f64> + Send + Sync>;

/// Optional lower and upper bound functions.
#[derive(Clone, Default)]
pub struct BoundSpec {
    lower: Option<BoundFn>,
    upper: Option<BoundFn>,
}

impl fmt::Debug for BoundSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundSpec")
            .field("lower", &self.lower.is_some())
            .field("upper", &self.upper.is_some())
            .finish()
    }
}

impl BoundSpec {
    /// No bounds at all.
    pub fn none() -> Self {
        Self::default()
    }

    pub fn new(lower: Option<BoundFn>, upper: Option<BoundFn>) -> Self {
        Self { lower, upper }
    }

    /// Constant bounds; `l < u` is required when both are given.
    pub fn constant(lower: Option<f64>, upper: Option<f64>) -> Result<Self> {
        PointBounds::new(lower, upper)?;
        Ok(Self {
            lower: lower.map(|l| Arc::new(move |_: &[f64]| Some(l)) as BoundFn),
            upper: upper.map(|u| Arc::new(move |_: &[f64]| Some(u)) as BoundFn),
        })
    }

    pub fn with_lower(mut self, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.lower = Some(Arc::new(move |x| Some(f(x))));
        self
    }

    pub fn with_upper(mut self, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.upper = Some(Arc::new(move |x| Some(f(x))));
        self
    }

    pub fn with_partial_lower(
        mut self,
        f: impl Fn(&[f64]) -> Option<f64> + Send + Sync + 'static,
    ) -> Self {
        self.lower = Some(Arc::new(f));
        self
    }

    pub fn with_partial_upper(
        mut self,
        f: impl Fn(&[f64]) -> Option<f64> + Send + Sync + 'static,
    ) -> Self {
        self.upper = Some(Arc::new(f));
        self
    }

    pub fn has_lower(&self) -> bool {
        self.lower.is_some()
    }

    pub fn has_upper(&self) -> bool {
        self.upper.is_some()
    }

    pub fn is_unbounded(&self) -> bool {
        self.lower.is_none() && self.upper.is_none()
    }

    /// Raw bound values at `x` without any validation.
    pub fn eval_raw(&self, x: &[f64]) -> (Option<f64>, Option<f64>) {
        (
            self.lower.as_ref().and_then(|f| f(x)),
            self.upper.as_ref().and_then(|f| f(x)),
        )
    }

    /// Evaluates both bounds at `x` and checks finiteness and `l < u`.
    pub fn eval(&self, x: &[f64]) -> Result<PointBounds> {
        let (l, u) = self.eval_raw(x);
        PointBounds::new(l, u).map_err(|e| Error::Bounds(format!("at {x:?}: {e}")))
    }
}

/// Bounds evaluated at a single point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PointBounds {
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

impl PointBounds {
    pub fn new(lower: Option<f64>, upper: Option<f64>) -> Result<Self> {
        if lower.is_some_and(|l| !l.is_finite()) || upper.is_some_and(|u| !u.is_finite()) {
            return Err(invalid("bound values must be finite"));
        }
        if let (Some(l), Some(u)) = (lower, upper) {
            if !(l < u) {
                return Err(invalid(format!(
                    "lower bound {l} must be below upper bound {u}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn unbounded() -> Self {
        Self::default()
    }

    pub fn lower_or_neg_inf(&self) -> f64 {
        self.lower.unwrap_or(f64::NEG_INFINITY)
    }

    pub fn upper_or_inf(&self) -> f64 {
        self.upper.unwrap_or(f64::INFINITY)
    }

    /// Clips `v` into the bounds.
    pub fn clip(&self, v: f64) -> f64 {
        match (self.lower, self.upper) {
            (Some(l), _) if v <= l => l,
            (_, Some(u)) if v >= u => u,
            _ => v,
        }
    }

    /// Bounds after the affine change of variable `v ↦ (v − shift) / scale`.
    pub fn normalize(&self, shift: f64, scale: f64) -> Self {
        Self {
            lower: self.lower.map(|l| (l - shift) / scale),
            upper: self.upper.map(|u| (u - shift) / scale),
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lower.is_none_or(|l| v >= l) && self.upper.is_none_or(|u| v <= u)
    }
}

/// Pathwise projection of a single value.
pub fn project_value(f_val: f64, lower: Option<f64>, upper: Option<f64>) -> Result<f64> {
    Ok(PointBounds::new(lower, upper)?.clip(f_val))
}

/// The mixed discrete/continuous law of a clipped Gaussian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectedPosterior {
    mu_f: f64,
    sigma_f: f64,
    bounds: PointBounds,
    alpha: Option<f64>,
    beta: Option<f64>,
    mass_lower: f64,
    mass_upper: f64,
    z: f64,
}

/// Projects a Gaussian prediction onto `[l, u]`.
pub fn project_posterior(
    pred: GaussianPrediction,
    lower: Option<f64>,
    upper: Option<f64>,
) -> Result<ProjectedPosterior> {
    ProjectedPosterior::new(pred, PointBounds::new(lower, upper)?)
}

impl ProjectedPosterior {
    pub fn new(pred: GaussianPrediction, bounds: PointBounds) -> Result<Self> {
        if !pred.mean.is_finite() || !pred.variance.is_finite() {
            return Err(invalid("prediction must be finite"));
        }
        if pred.variance < 0.0 {
            return Err(invalid(format!(
                "negative predictive variance {}",
                pred.variance
            )));
        }
        let mu = pred.mean;
        let sigma = pred.variance.sqrt();
        if sigma == 0.0 {
            // point mass at the clipped mean
            let at_lower = bounds.lower.is_some_and(|l| mu <= l);
            let at_upper = !at_lower && bounds.upper.is_some_and(|u| mu >= u);
            let mass_lower = if at_lower { 1.0 } else { 0.0 };
            let mass_upper = if at_upper { 1.0 } else { 0.0 };
            return Ok(Self {
                mu_f: mu,
                sigma_f: 0.0,
                bounds,
                alpha: bounds.lower.map(|_| {
                    if at_lower {
                        f64::INFINITY
                    } else {
                        f64::NEG_INFINITY
                    }
                }),
                beta: bounds.upper.map(|_| {
                    if at_upper {
                        f64::NEG_INFINITY
                    } else {
                        f64::INFINITY
                    }
                }),
                mass_lower,
                mass_upper,
                z: 1.0 - mass_lower - mass_upper,
            });
        }
        let alpha = bounds.lower.map(|l| (l - mu) / sigma);
        let beta = bounds.upper.map(|u| (u - mu) / sigma);
        let mass_lower = alpha.map_or(0.0, normal::cdf);
        let mass_upper = beta.map_or(0.0, normal::sf);
        let a = alpha.unwrap_or(f64::NEG_INFINITY);
        let b = beta.unwrap_or(f64::INFINITY);
        // pick the tail that keeps Z accurate when both bounds sit on one side
        let z = if a > 0.0 {
            normal::sf(a) - normal::sf(b)
        } else if b < 0.0 {
            normal::cdf(b) - normal::cdf(a)
        } else {
            1.0 - mass_lower - mass_upper
        };
        Ok(Self {
            mu_f: mu,
            sigma_f: sigma,
            bounds,
            alpha,
            beta,
            mass_lower,
            mass_upper,
            z: z.max(0.0),
        })
    }

    pub fn mu_f(&self) -> f64 {
        self.mu_f
    }

    pub fn sigma_f(&self) -> f64 {
        self.sigma_f
    }

    pub fn lower(&self) -> Option<f64> {
        self.bounds.lower
    }

    pub fn upper(&self) -> Option<f64> {
        self.bounds.upper
    }

    pub fn bounds(&self) -> PointBounds {
        self.bounds
    }

    /// `(l − μ_f) / σ_f`
    pub fn alpha(&self) -> Option<f64> {
        self.alpha
    }

    /// `(u − μ_f) / σ_f`
    pub fn beta(&self) -> Option<f64> {
        self.beta
    }

    /// Atom at the lower bound, `Φ(α)`.
    pub fn mass_lower(&self) -> f64 {
        self.mass_lower
    }

    /// Atom at the upper bound, `1 − Φ(β)`.
    pub fn mass_upper(&self) -> f64 {
        self.mass_upper
    }

    /// Mass of the continuous body.
    pub fn z(&self) -> f64 {
        self.z
    }

    /// Bernoulli parameter of the two-point part: probability of the upper
    /// atom given that the value sits on a bound. Undefined when `Z = 1`.
    pub fn gamma(&self) -> Option<f64> {
        let atoms = self.mass_lower + self.mass_upper;
        (atoms > 0.0).then(|| self.mass_upper / atoms)
    }

    fn is_degenerate(&self) -> bool {
        self.sigma_f == 0.0
    }

    /// Value of the point mass when `σ_f = 0`.
    fn point_value(&self) -> f64 {
        self.bounds.clip(self.mu_f)
    }

    /// `P(G ≤ g)`; right-continuous, jumps at the atoms.
    pub fn cdf(&self, g: f64) -> f64 {
        if self.is_degenerate() {
            return if g >= self.point_value() { 1.0 } else { 0.0 };
        }
        if self.bounds.lower.is_some_and(|l| g < l) {
            return 0.0;
        }
        if self.bounds.upper.is_some_and(|u| g >= u) {
            return 1.0;
        }
        normal::cdf((g - self.mu_f) / self.sigma_f)
    }

    /// Density of the continuous body (zero outside `(l, u)`); the atoms are
    /// reported separately by [`Self::mass_lower`] and [`Self::mass_upper`].
    pub fn body_pdf(&self, g: f64) -> f64 {
        if self.is_degenerate()
            || !(g > self.bounds.lower_or_neg_inf() && g < self.bounds.upper_or_inf())
        {
            return 0.0;
        }
        normal::pdf((g - self.mu_f) / self.sigma_f) / self.sigma_f
    }

    /// Generalised inverse CDF, `inf { g : cdf(g) ≥ p }`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(invalid(format!(
                "quantile level must lie in (0, 1), got {p}"
            )));
        }
        if self.is_degenerate() {
            return Ok(self.point_value());
        }
        if let Some(l) = self.bounds.lower {
            if p <= self.mass_lower {
                return Ok(l);
            }
        }
        if let Some(u) = self.bounds.upper {
            if p > 1.0 - self.mass_upper {
                return Ok(u);
            }
        }
        Ok(self
            .bounds
            .clip(self.mu_f + self.sigma_f * normal::quantile(p)))
    }

    /// Mean and variance of the standardised clipped variable
    /// `clip(W, α, β)`, `W ~ N(0, 1)`.
    fn standardized_moments(&self) -> (f64, f64) {
        match (self.alpha, self.beta) {
            (None, None) => (0.0, 1.0),
            (Some(a), None) => lower_only_moments(a),
            (None, Some(b)) => {
                // reflect W ↦ −W: the upper bound becomes a lower bound at −β
                let (m, v) = lower_only_moments(-b);
                (-m, v)
            }
            (Some(a), Some(b)) => {
                if self.z == 0.0 {
                    // all mass on the atoms
                    let (pl, pu) = (self.mass_lower, self.mass_upper);
                    let m = a * pl + b * pu;
                    return (m, (b - a).powi(2) * pl * pu);
                }
                let (pa, pb) = (normal::pdf(a), normal::pdf(b));
                let (ca, sb) = (normal::cdf(a), normal::sf(b));
                let m = a * ca + (pa - pb) + b * sb;
                let e2 = a * a * ca + b * b * sb + self.z + a * pa - b * pb;
                (m, e2 - m * m)
            }
        }
    }

    /// Projected mean `E[clip(F, l, u)]`, always within the bounds.
    pub fn mean(&self) -> f64 {
        if self.is_degenerate() {
            return self.point_value();
        }
        let (m, _) = self.standardized_moments();
        self.bounds.clip(self.mu_f + self.sigma_f * m)
    }

    /// Projected variance, clamped into `[0, σ_f²]`.
    pub fn variance(&self) -> f64 {
        if self.is_degenerate() {
            return 0.0;
        }
        let (_, v) = self.standardized_moments();
        (self.sigma_f * self.sigma_f * v.clamp(0.0, 1.0)).max(0.0)
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    /// Draws `clip(F, l, u)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let w: f64 = rng.sample(StandardNormal);
        self.bounds.clip(self.mu_f + self.sigma_f * w)
    }
}

/// Lower-bound-only moments of `max(W, α)`: mean `αΦ(α) + φ(α)` and second
/// moment `α²Φ(α) + Z + αφ(α)`, `Z = 1 − Φ(α)`.
fn lower_only_moments(a: f64) -> (f64, f64) {
    let (pa, ca, z) = (normal::pdf(a), normal::cdf(a), normal::sf(a));
    if z == 0.0 {
        return (a, 0.0);
    }
    let m = a * ca + pa;
    let e2 = a * a * ca + z + a * pa;
    (m, e2 - m * m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use approx::assert_relative_eq;

    fn pp(mu: f64, sigma: f64, l: Option<f64>, u: Option<f64>) -> ProjectedPosterior {
        project_posterior(
            GaussianPrediction {
                mean: mu,
                variance: sigma * sigma,
            },
            l,
            u,
        )
        .unwrap()
    }

    /// Moments written exactly as the unstandardised closed forms.
    fn literal_two_sided(mu: f64, s: f64, l: f64, u: f64) -> (f64, f64) {
        let (a, b) = ((l - mu) / s, (u - mu) / s);
        let (pa, pb, ca, cb) = (
            normal::pdf(a),
            normal::pdf(b),
            normal::cdf(a),
            normal::cdf(b),
        );
        let z = cb - ca;
        let mean = z * mu + (pa - pb) * s + l * ca + u * (1.0 - cb);
        let var = z * (s * s + mu * mu)
            + 2.0 * mu * s * (pa - pb)
            + s * s * (a * pa - b * pb)
            + l * l * ca
            + u * u * (1.0 - cb)
            - mean * mean;
        (mean, var)
    }

    fn literal_lower_only(mu: f64, s: f64, l: f64) -> (f64, f64) {
        let a = (l - mu) / s;
        let (pa, ca) = (normal::pdf(a), normal::cdf(a));
        let z = 1.0 - normal::cdf_with(l, mu, s * s);
        let mean = z * mu + pa * s + l * ca;
        let var =
            z * (s * s + mu * mu) + (2.0 * mu * s + s * s * a) * pa + l * l * ca - mean * mean;
        (mean, var)
    }

    #[test]
    fn project_value_examples() {
        assert_eq!(project_value(0.5, Some(-1.0), Some(2.0)).unwrap(), 0.5);
        assert_eq!(project_value(-3.0, Some(-1.0), Some(2.0)).unwrap(), -1.0);
        assert_eq!(project_value(7.0, None, Some(2.0)).unwrap(), 2.0);
        assert_eq!(project_value(7.0, None, None).unwrap(), 7.0);
        assert!(project_value(0.0, Some(1.0), Some(1.0)).is_err());
        assert!(project_value(0.0, Some(2.0), Some(1.0)).is_err());
    }

    #[test]
    fn figure_configuration_masses() {
        let p = pp(0.0, 1.0, Some(-1.0), Some(2.0));
        assert_relative_eq!(
            p.mass_lower(),
            0.158_655_253_931_457_05,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            p.mass_upper(),
            0.022_750_131_948_179_2,
            max_relative = 1e-12
        );
        assert_relative_eq!(p.z(), 0.818_594_614_120_363_7, max_relative = 1e-12);
        assert_relative_eq!(p.cdf(-1.0), p.mass_lower(), max_relative = 1e-15);
        assert_eq!(p.cdf(2.0), 1.0);
        assert_eq!(p.cdf(-1.0 - 1e-12), 0.0);
        assert_relative_eq!(
            p.gamma().unwrap(),
            p.mass_upper() / (1.0 - p.z()),
            max_relative = 1e-12
        );
    }

    #[test]
    fn unbounded_is_gaussian() {
        let p = pp(0.3, 1.7, None, None);
        assert_eq!((p.mass_lower(), p.mass_upper(), p.z()), (0.0, 0.0, 1.0));
        assert_eq!(p.mean(), 0.3);
        assert_relative_eq!(p.variance(), 1.7 * 1.7, max_relative = 1e-15);
        assert_relative_eq!(p.quantile(0.5).unwrap(), 0.3, epsilon = 1e-15);
        assert_relative_eq!(
            p.cdf(1.0),
            normal::cdf((1.0 - 0.3) / 1.7),
            max_relative = 1e-15
        );
        assert!(p.gamma().is_none());
    }

    #[test]
    fn symmetric_bounds() {
        let p = pp(0.0, 1.3, Some(-0.8), Some(0.8));
        assert_relative_eq!(p.mass_lower(), p.mass_upper(), max_relative = 1e-14);
        assert!(p.mean().abs() < 1e-15);
        let p = pp(2.0, 0.5, Some(1.0), Some(3.0));
        assert_relative_eq!(p.mass_lower(), p.mass_upper(), max_relative = 1e-14);
        assert_relative_eq!(p.mean(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn closed_forms_match_literal_expressions() {
        for &(mu, s, l, u) in &[
            (0.0, 1.0, -1.0, 2.0),
            (0.7, 0.3, 0.2, 1.5),
            (-2.0, 3.0, -1.0, 0.5),
            (5.0, 2.0, 0.0, 4.0),
        ] {
            let p = pp(mu, s, Some(l), Some(u));
            let (m, v) = literal_two_sided(mu, s, l, u);
            assert_relative_eq!(p.mean(), m, epsilon = 1e-12);
            assert_relative_eq!(p.variance(), v, epsilon = 1e-12);

            let p = pp(mu, s, Some(l), None);
            let (m, v) = literal_lower_only(mu, s, l);
            assert_relative_eq!(p.mean(), m, epsilon = 1e-12);
            assert_relative_eq!(p.variance(), v, epsilon = 1e-12);

            // upper-only through reflection of the lower-only forms
            let p = pp(mu, s, None, Some(u));
            let (m, v) = literal_lower_only(-mu, s, -u);
            assert_relative_eq!(p.mean(), -m, epsilon = 1e-12);
            assert_relative_eq!(p.variance(), v, epsilon = 1e-12);
        }
    }

    #[test]
    fn far_bounds_recover_gaussian() {
        let p = pp(0.4, 2.0, Some(0.4 - 25.0), Some(0.4 + 25.0));
        assert_relative_eq!(p.variance(), 4.0, epsilon = 1e-8);
        assert_relative_eq!(p.mean(), 0.4, epsilon = 1e-8);
    }

    #[test]
    fn all_mass_on_one_bound() {
        let p = pp(0.0, 1.0, Some(40.0), Some(50.0));
        assert_eq!(p.mean(), 40.0);
        assert_eq!(p.variance(), 0.0);
        let p = pp(0.0, 1.0, None, Some(-60.0));
        assert_eq!(p.mean(), -60.0);
        assert_eq!(p.variance(), 0.0);
        assert_eq!(p.quantile(0.3).unwrap(), -60.0);
    }

    #[test]
    fn degenerate_variance_is_point_mass() {
        let p = pp(0.5, 0.0, Some(-1.0), Some(2.0));
        assert_eq!((p.mean(), p.variance()), (0.5, 0.0));
        assert_eq!(p.quantile(0.01).unwrap(), 0.5);
        assert_eq!(p.cdf(0.49), 0.0);
        assert_eq!(p.cdf(0.5), 1.0);
        let p = pp(-4.0, 0.0, Some(-1.0), Some(2.0));
        assert_eq!((p.mean(), p.mass_lower()), (-1.0, 1.0));
        let p = pp(3.0, 0.0, Some(-1.0), Some(2.0));
        assert_eq!((p.mean(), p.mass_upper()), (2.0, 1.0));
    }

    #[test]
    fn quantiles_absorb_atoms() {
        let p = pp(0.0, 1.0, Some(-1.0), Some(2.0));
        assert_eq!(p.quantile(0.1).unwrap(), -1.0);
        assert_eq!(p.quantile(p.mass_lower()).unwrap(), -1.0);
        assert_eq!(p.quantile(0.99).unwrap(), 2.0);
        assert_relative_eq!(p.quantile(0.5).unwrap(), 0.0, epsilon = 1e-14);
        assert!(p.quantile(0.0).is_err());
        assert!(p.quantile(1.0).is_err());
        for g in [-0.5, 0.0, 0.7, 1.9] {
            assert_relative_eq!(p.quantile(p.cdf(g)).unwrap(), g, epsilon = 1e-9);
        }
    }

    #[test]
    fn rejects_non_finite() {
        let bad = GaussianPrediction {
            mean: f64::NAN,
            variance: 1.0,
        };
        assert!(project_posterior(bad, None, None).is_err());
        let bad = GaussianPrediction {
            mean: 0.0,
            variance: -1.0,
        };
        assert!(project_posterior(bad, None, None).is_err());
        assert!(project_posterior(
            GaussianPrediction {
                mean: 0.0,
                variance: 1.0
            },
            Some(f64::INFINITY),
            None
        )
        .is_err());
    }

    #[test]
    fn sampling_is_reproducible_and_bounded() {
        let p = pp(0.0, 1.0, Some(-1.0), Some(2.0));
        let mut r1 = rng::seeded(11);
        let mut r2 = rng::seeded(11);
        let a: Vec<f64> = (0..100).map(|_| p.sample(&mut r1)).collect();
        let b: Vec<f64> = (0..100).map(|_| p.sample(&mut r2)).collect();
        assert_eq!(a, b);
        assert!(a.iter().all(|v| (-1.0..=2.0).contains(v)));
    }

    #[test]
    fn bound_spec_eval() {
        let spec = BoundSpec::none()
            .with_lower(|x| -x[0] * x[0])
            .with_upper(|x| x[0] * x[0]);
        let b = spec.eval(&[0.5]).unwrap();
        assert_eq!((b.lower, b.upper), (Some(-0.25), Some(0.25)));
        assert!(matches!(spec.eval(&[0.0]), Err(Error::Bounds(_))));
        assert!(BoundSpec::constant(Some(1.0), Some(0.0)).is_err());
        let sign = BoundSpec::none()
            .with_partial_lower(|x| (x[0] >= 0.0).then_some(0.0))
            .with_partial_upper(|x| (x[0] < 0.0).then_some(0.0));
        assert_eq!(
            sign.eval(&[1.0]).unwrap(),
            PointBounds {
                lower: Some(0.0),
                upper: None
            }
        );
        assert_eq!(
            sign.eval(&[-1.0]).unwrap(),
            PointBounds {
                lower: None,
                upper: Some(0.0)
            }
        );
    }
}
