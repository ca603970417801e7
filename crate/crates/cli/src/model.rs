//! Bound declarations and the versioned model file.
//!
//! A model file is a `key = value` header followed by a `[data]` section
//! holding the original-unit training table as CSV. Floats are written in
//! Rust's shortest round-trip form, so a loaded model refits to exactly the
//! same factorisation and predicts bit-identically.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use bgp_core::benchmarks::MethodVariant;
use bgp_core::surrogate::Surrogate;
use bgp_core::{BoundSpec, FittedGP, HyperParams, TrainingSet};

use crate::error::{CliError, CliResult};
use crate::expr::Expr;
use crate::table::Table;

pub const FORMAT: &str = "bgp-model";
pub const VERSION: u32 = 1;

/// Lower and/or upper bound expressions over original-unit inputs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BoundDecl {
    pub lower: Option<Expr>,
    pub upper: Option<Expr>,
}

impl BoundDecl {
    pub fn parse(lower: Option<&str>, upper: Option<&str>) -> CliResult<Self> {
        let parse = |side: &str, s: Option<&str>| -> CliResult<Option<Expr>> {
            match s.map(str::trim).filter(|s| !s.is_empty()) {
                None => Ok(None),
                Some(s) => Expr::parse(s)
                    .map(Some)
                    .map_err(|e| CliError::usage(format!("{side} bound '{s}': {e}"))),
            }
        };
        let decl = Self {
            lower: parse("lower", lower)?,
            upper: parse("upper", upper)?,
        };
        if let (Some(l), Some(u)) = (&decl.lower, &decl.upper) {
            if l.max_var() == 0 && u.max_var() == 0 && !(l.eval(&[]) < u.eval(&[])) {
                return Err(CliError::usage(format!(
                    "constant bounds need l < u, got {l} and {u}"
                )));
            }
        }
        Ok(decl)
    }

    pub fn is_none(&self) -> bool {
        self.lower.is_none() && self.upper.is_none()
    }

    /// Fails if an expression references a coordinate beyond `d`.
    pub fn check_dim(&self, d: usize) -> CliResult<()> {
        for e in self.lower.iter().chain(&self.upper) {
            if e.max_var() > d {
                return Err(CliError::usage(format!(
                    "bound '{e}' uses x{} but the data has {d} inputs",
                    e.max_var()
                )));
            }
        }
        Ok(())
    }

    pub fn spec(&self) -> BoundSpec {
        let wrap = |e: &Option<Expr>| {
            e.clone().map(|e| {
                let e = Arc::new(e);
                Arc::new(move |x: &[f64]| Some(e.eval(x))) as bgp_core::projection::BoundFn
            })
        };
        BoundSpec::new(wrap(&self.lower), wrap(&self.upper))
    }
}

/// Everything needed to rebuild a fitted surrogate.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub variant: MethodVariant,
    pub columns: Vec<String>,
    pub bounds: BoundDecl,
    pub params: HyperParams,
    pub objective: f64,
    pub input_shift: Vec<f64>,
    pub input_scale: Vec<f64>,
    pub output_shift: f64,
    pub output_scale: f64,
    pub inputs: Vec<Vec<f64>>,
    pub outputs: Vec<f64>,
}

fn list(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x:?}"))
        .collect::<Vec<_>>()
        .join(",")
}

impl Model {
    pub fn dim(&self) -> usize {
        self.input_shift.len()
    }

    pub fn training_set(&self) -> CliResult<TrainingSet> {
        Ok(TrainingSet::with_normalization(
            self.inputs.clone(),
            self.outputs.clone(),
            self.input_shift.clone(),
            self.input_scale.clone(),
            self.output_shift,
            self.output_scale,
        )?)
    }

    pub fn surrogate(&self) -> CliResult<Surrogate> {
        let gp = FittedGP::fit(self.training_set()?, self.params.clone())?;
        Ok(Surrogate::new(
            gp,
            self.bounds.spec(),
            self.variant.prediction_uses_projection(),
        ))
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let opt = |e: &Option<Expr>| {
            e.as_ref()
                .map(|e| e.source().to_string())
                .unwrap_or_default()
        };
        writeln!(s, "format = {FORMAT}").unwrap();
        writeln!(s, "version = {VERSION}").unwrap();
        writeln!(s, "variant = {}", self.variant).unwrap();
        writeln!(
            s,
            "mode = {}",
            if self.variant.inference_uses_bounds() {
                "bounded"
            } else {
                "unbounded"
            }
        )
        .unwrap();
        writeln!(s, "dim = {}", self.dim()).unwrap();
        writeln!(s, "n = {}", self.outputs.len()).unwrap();
        writeln!(s, "lower = {}", opt(&self.bounds.lower)).unwrap();
        writeln!(s, "upper = {}", opt(&self.bounds.upper)).unwrap();
        writeln!(s, "sigma2 = {:?}", self.params.sigma2).unwrap();
        writeln!(s, "lengthscales = {}", list(&self.params.lengthscales)).unwrap();
        writeln!(s, "nugget = {:?}", self.params.nugget).unwrap();
        writeln!(s, "press = {:?}", self.objective).unwrap();
        writeln!(s, "input_shift = {}", list(&self.input_shift)).unwrap();
        writeln!(s, "input_scale = {}", list(&self.input_scale)).unwrap();
        writeln!(s, "output_shift = {:?}", self.output_shift).unwrap();
        writeln!(s, "output_scale = {:?}", self.output_scale).unwrap();
        writeln!(s, "[data]").unwrap();
        writeln!(s, "{}", self.columns.join(",")).unwrap();
        for (x, y) in self.inputs.iter().zip(&self.outputs) {
            writeln!(s, "{},{y:?}", list(x)).unwrap();
        }
        s
    }

    pub fn from_text(text: &str) -> CliResult<Self> {
        let (head, data) = text
            .split_once("[data]\n")
            .ok_or_else(|| CliError::data("model file has no [data] section"))?;
        let mut keys: Vec<(&str, &str)> = Vec::new();
        for (i, line) in head.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CliError::data(format!(
                    "model header line {}: expected 'key = value'",
                    i + 1
                ))
            })?;
            keys.push((k.trim(), v.trim()));
        }
        let get = |k: &str| -> CliResult<&str> {
            keys.iter()
                .find(|(key, _)| *key == k)
                .map(|(_, v)| *v)
                .ok_or_else(|| CliError::data(format!("model file lacks '{k}'")))
        };
        let num = |k: &str| -> CliResult<f64> {
            get(k)?
                .parse::<f64>()
                .map_err(|_| CliError::data(format!("model key '{k}' is not a number")))
        };
        let nums = |k: &str| -> CliResult<Vec<f64>> {
            get(k)?
                .split(',')
                .map(|v| {
                    v.trim().parse::<f64>().map_err(|_| {
                        CliError::data(format!("model key '{k}' is not a number list"))
                    })
                })
                .collect()
        };
        if get("format")? != FORMAT {
            return Err(CliError::data("not a bgp model file"));
        }
        let version = get("version")?;
        if version != VERSION.to_string() {
            return Err(CliError::data(format!(
                "unsupported model file version {version} (this build reads version {VERSION})"
            )));
        }
        let variant: MethodVariant = get("variant")?
            .parse()
            .map_err(|e: bgp_core::Error| CliError::data(e.to_string()))?;
        let bounds = BoundDecl::parse(Some(get("lower")?), Some(get("upper")?))
            .map_err(|e| CliError::data(format!("model bounds: {e}")))?;
        let params = HyperParams::new(num("sigma2")?, nums("lengthscales")?, num("nugget")?)?;
        let table = Table::parse(data)?;
        let (inputs, outputs) = table.split_output()?;
        let model = Self {
            variant,
            columns: table.header.clone(),
            bounds,
            params,
            objective: num("press")?,
            input_shift: nums("input_shift")?,
            input_scale: nums("input_scale")?,
            output_shift: num("output_shift")?,
            output_scale: num("output_scale")?,
            inputs,
            outputs,
        };
        let d = model.dim();
        if model.params.lengthscales.len() != d
            || model.input_scale.len() != d
            || table.width() != d + 1
        {
            return Err(CliError::data("model file dimensions are inconsistent"));
        }
        if get("n")? != model.outputs.len().to_string() {
            return Err(CliError::data("model file row count does not match 'n'"));
        }
        model
            .bounds
            .check_dim(d)
            .map_err(|e| CliError::data(e.to_string()))?;
        Ok(model)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::data(format!("cannot read model {}: {e}", path.display())))?;
        Self::from_text(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Model {
        Model {
            variant: MethodVariant::Bgp,
            columns: vec!["x1".into(), "y".into()],
            bounds: BoundDecl::parse(Some("0"), Some("x1^2 + 1")).unwrap(),
            params: HyperParams::new(1.3, vec![0.25], 1.3e-8).unwrap(),
            objective: 0.125,
            input_shift: vec![0.1],
            input_scale: vec![0.3],
            output_shift: 0.7,
            output_scale: 1.0 / 3.0,
            inputs: vec![vec![0.0], vec![0.1], vec![1.0 / 7.0]],
            outputs: vec![0.5, 0.25, 0.2],
        }
    }

    #[test]
    fn text_round_trip() {
        let m = sample();
        let back = Model::from_text(&m.to_text()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn version_mismatch_is_refused() {
        let text = sample().to_text().replace("version = 1", "version = 2");
        let err = Model::from_text(&text).unwrap_err();
        assert!(
            matches!(err, CliError::Data(ref m) if m.contains("version 2")),
            "{err}"
        );
    }

    #[test]
    fn bound_declarations() {
        assert!(BoundDecl::parse(Some("1"), Some("0")).is_err());
        assert!(BoundDecl::parse(Some("1 +"), None).is_err());
        let d = BoundDecl::parse(None, Some("x2")).unwrap();
        assert!(d.check_dim(1).is_err());
        assert!(d.check_dim(2).is_ok());
        assert!(BoundDecl::parse(Some(""), None).unwrap().is_none());
    }
}
