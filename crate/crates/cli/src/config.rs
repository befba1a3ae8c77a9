//! Run configuration: JSON schema, field-level validation and conversion to
//! solver inputs.

use std::fmt;
use std::path::PathBuf;
use std::sync::Arc;

use robin_core::fields::{boundary_inf, BoundaryField, SourceField};
use robin_core::mesh::{Domain, Mesh};
use robin_core::quadrature::MAX_ORDER;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::expr::Expr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainName {
    Interval,
    Square,
    Cube,
}

impl DomainName {
    pub fn domain(self) -> Domain {
        match self {
            DomainName::Interval => Domain::Interval,
            DomainName::Square => Domain::Square,
            DomainName::Cube => Domain::Cube,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Solve,
    Stability,
    Convergence,
    Stampacchia,
    Theorem0,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Solve => "solve",
            Experiment::Stability => "stability",
            Experiment::Convergence => "convergence",
            Experiment::Stampacchia => "stampacchia",
            Experiment::Theorem0 => "theorem0",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    Constant { value: f64 },
    PerFacet { values: Vec<f64> },
    Expr { expr: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    OneOverK,
}

/// `β_k = base + 1/(k+1)` for `k = 0..count`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Generator {
    pub kind: GeneratorKind,
    pub base: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BetaSequence {
    Generated(Generator),
    List(Vec<FieldSpec>),
}

impl BetaSequence {
    pub fn len(&self) -> usize {
        match self {
            BetaSequence::Generated(g) => g.count,
            BetaSequence::List(l) => l.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn specs(&self) -> Vec<FieldSpec> {
        match self {
            BetaSequence::Generated(g) => (0..g.count)
                .map(|k| FieldSpec::Constant { value: g.base + 1.0 / (k + 1) as f64 })
                .collect(),
            BetaSequence::List(l) => l.clone(),
        }
    }

    /// Pointwise limit, known only for generated sequences.
    pub fn limit(&self) -> Option<FieldSpec> {
        match self {
            BetaSequence::Generated(g) => Some(FieldSpec::Constant { value: g.base }),
            BetaSequence::List(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub domain: DomainName,
    pub n: usize,
    pub lambda: f64,
    pub f: FieldSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<FieldSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_sequence: Option<BetaSequence>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_limit: Option<FieldSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub experiment: Option<Experiment>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c2: Option<f64>,
    pub quad_order: usize,
    pub lumped: bool,
    pub tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

pub const DEFAULT_QUAD_ORDER: usize = 2;
pub const DEFAULT_TOL: f64 = 1e-10;

const KNOWN_FIELDS: [&str; 14] = [
    "domain",
    "n",
    "lambda",
    "f",
    "beta",
    "beta_sequence",
    "beta_limit",
    "experiment",
    "p",
    "c2",
    "quad_order",
    "lumped",
    "tol",
    "output_dir",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError { field: field.into(), message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn take<T: DeserializeOwned>(obj: &mut Map<String, Value>, key: &str) -> Result<Option<T>, ConfigError> {
    match obj.remove(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => serde_json::from_value(v).map(Some).map_err(|e| ConfigError::new(key, e.to_string())),
    }
}

fn require<T: DeserializeOwned>(obj: &mut Map<String, Value>, key: &str) -> Result<T, ConfigError> {
    take(obj, key)?.ok_or_else(|| ConfigError::new(key, "missing required field"))
}

impl RunConfig {
    /// Parses JSON, reporting the first offending field. Semantic checks are
    /// left to [`RunConfig::validate`].
    pub fn from_json(text: &str) -> Result<RunConfig, ConfigError> {
        let value: Value = serde_json::from_str(text).map_err(|e| ConfigError::new("config", e.to_string()))?;
        let Value::Object(mut obj) = value else {
            return Err(ConfigError::new("config", "expected a JSON object"));
        };
        if let Some(unknown) = obj.keys().find(|k| !KNOWN_FIELDS.contains(&k.as_str())) {
            return Err(ConfigError::new(unknown.clone(), "unknown field"));
        }
        Ok(RunConfig {
            domain: take(&mut obj, "domain")?.unwrap_or(DomainName::Cube),
            n: require(&mut obj, "n")?,
            lambda: require(&mut obj, "lambda")?,
            f: require(&mut obj, "f")?,
            beta: take(&mut obj, "beta")?,
            beta_sequence: take(&mut obj, "beta_sequence")?,
            beta_limit: take(&mut obj, "beta_limit")?,
            experiment: take(&mut obj, "experiment")?,
            p: take(&mut obj, "p")?,
            c2: take(&mut obj, "c2")?,
            quad_order: take(&mut obj, "quad_order")?.unwrap_or(DEFAULT_QUAD_ORDER),
            lumped: take(&mut obj, "lumped")?.unwrap_or(false),
            tol: take(&mut obj, "tol")?.unwrap_or(DEFAULT_TOL),
            output_dir: take(&mut obj, "output_dir")?,
        })
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }

    /// Checks everything that can be checked without a mesh.
    pub fn validate(&self) -> Result<Experiment, ConfigError> {
        let experiment = self
            .experiment
            .ok_or_else(|| ConfigError::new("experiment", "no experiment given on the command line or in the config"))?;
        if self.n == 0 {
            return Err(ConfigError::new("n", "must be at least 1"));
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(ConfigError::new("lambda", format!("must be finite and > 0, got {}", self.lambda)));
        }
        if !(1..=MAX_ORDER).contains(&self.quad_order) {
            return Err(ConfigError::new("quad_order", format!("must lie in 1..={MAX_ORDER}")));
        }
        if !(self.tol.is_finite() && self.tol > 0.0 && self.tol < 1.0) {
            return Err(ConfigError::new("tol", "must lie in (0, 1)"));
        }
        check_source(&self.f, "f")?;
        if let Some(b) = &self.beta {
            check_coefficient(b, "beta")?;
        }
        if let Some(b) = &self.beta_limit {
            check_coefficient(b, "beta_limit")?;
        }
        if let Some(seq) = &self.beta_sequence {
            if let BetaSequence::Generated(g) = seq {
                if !(g.base.is_finite() && g.base >= 0.0) {
                    return Err(ConfigError::new("beta_sequence.base", "must be finite and >= 0"));
                }
            }
            for (i, spec) in seq.specs().iter().enumerate() {
                check_coefficient(spec, &format!("beta_sequence[{i}]"))?;
            }
        }
        let seq_len = self.beta_sequence.as_ref().map_or(0, BetaSequence::len);
        match experiment {
            Experiment::Solve | Experiment::Theorem0 => {
                if self.beta.is_none() && seq_len == 0 {
                    return Err(ConfigError::new("beta", "required (or a nonempty beta_sequence)"));
                }
            }
            Experiment::Stability => {
                if seq_len < 2 {
                    return Err(ConfigError::new("beta_sequence", "stability needs at least two coefficients"));
                }
            }
            Experiment::Convergence => {
                if seq_len == 0 {
                    return Err(ConfigError::new("beta_sequence", "convergence needs a nonempty sequence"));
                }
                if self.limit_spec().is_none() {
                    return Err(ConfigError::new("beta_limit", "required when beta_sequence is an explicit list"));
                }
            }
            Experiment::Stampacchia => {
                if self.domain != DomainName::Cube {
                    return Err(ConfigError::new("domain", "the level-set experiment needs dimension >= 3 (cube)"));
                }
                if self.pair_specs().is_none() {
                    return Err(ConfigError::new("beta_sequence", "stampacchia needs two coefficients"));
                }
                if let Some(c2) = self.c2 {
                    if !(c2.is_finite() && c2 >= 0.0) {
                        return Err(ConfigError::new("c2", "must be finite and >= 0"));
                    }
                }
            }
        }
        if experiment == Experiment::Theorem0 && self.p.is_none() {
            return Err(ConfigError::new("p", "required for theorem0"));
        }
        if let Some(p) = self.p {
            if !(p.is_finite() && p >= 1.0) {
                return Err(ConfigError::new("p", "must be finite and >= 1"));
            }
        }
        Ok(experiment)
    }

    pub fn single_spec(&self) -> Option<FieldSpec> {
        self.beta.clone().or_else(|| self.beta_sequence.as_ref().and_then(|s| s.specs().into_iter().next()))
    }

    pub fn limit_spec(&self) -> Option<FieldSpec> {
        self.beta_limit.clone().or_else(|| self.beta_sequence.as_ref().and_then(BetaSequence::limit))
    }

    /// The two coefficients compared by the level-set experiment: the first
    /// two sequence entries, or `beta` against `beta_limit`.
    pub fn pair_specs(&self) -> Option<(FieldSpec, FieldSpec)> {
        if let Some(seq) = &self.beta_sequence {
            let specs = seq.specs();
            if specs.len() >= 2 {
                return Some((specs[0].clone(), specs[1].clone()));
            }
        }
        Some((self.beta.clone()?, self.beta_limit.clone()?))
    }
}

fn check_source(spec: &FieldSpec, field: &str) -> Result<(), ConfigError> {
    match spec {
        FieldSpec::Constant { value } if !value.is_finite() => Err(ConfigError::new(field, "value must be finite")),
        FieldSpec::PerFacet { .. } => Err(ConfigError::new(field, "per_facet is only meaningful for boundary coefficients")),
        FieldSpec::Expr { expr } => Expr::parse(expr).map(|_| ()).map_err(|e| ConfigError::new(field, e.to_string())),
        _ => Ok(()),
    }
}

fn check_coefficient(spec: &FieldSpec, field: &str) -> Result<(), ConfigError> {
    match spec {
        FieldSpec::Constant { value } if !(value.is_finite() && *value >= 0.0) => {
            Err(ConfigError::new(field, format!("coefficient must be finite and >= 0, got {value}")))
        }
        FieldSpec::PerFacet { values } => match values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            Some(i) => Err(ConfigError::new(field, format!("values[{i}] must be finite and >= 0"))),
            None => Ok(()),
        },
        FieldSpec::Expr { expr } => Expr::parse(expr).map(|_| ()).map_err(|e| ConfigError::new(field, e.to_string())),
        _ => Ok(()),
    }
}

pub fn source_field(spec: &FieldSpec) -> SourceField {
    match spec {
        FieldSpec::Constant { value } => SourceField::Constant(*value),
        FieldSpec::Expr { expr } => {
            let e = Expr::parse(expr).expect("validated expression");
            match e.as_constant() {
                Some(v) => SourceField::Constant(v),
                None => SourceField::Closure(Arc::new(move |p| e.eval(p))),
            }
        }
        FieldSpec::PerFacet { .. } => unreachable!("rejected by validation"),
    }
}

/// Builds the coefficient and checks it against the mesh: facet count for
/// `per_facet`, nonnegativity at the sample points for expressions.
pub fn boundary_field(spec: &FieldSpec, field: &str, mesh: &Mesh, quad_order: usize) -> Result<BoundaryField, ConfigError> {
    let b = match spec {
        FieldSpec::Constant { value } => BoundaryField::Constant(*value),
        FieldSpec::PerFacet { values } => {
            let expected = mesh.boundary_facets().len();
            if values.len() != expected {
                return Err(ConfigError::new(
                    field,
                    format!("per_facet needs {expected} values for this mesh, got {}", values.len()),
                ));
            }
            BoundaryField::PerFacet(values.clone())
        }
        FieldSpec::Expr { expr } => {
            let e = Expr::parse(expr).map_err(|e| ConfigError::new(field, e.to_string()))?;
            match e.as_constant() {
                Some(v) => BoundaryField::Constant(v),
                None => BoundaryField::Closure(Arc::new(move |p| e.eval(p))),
            }
        }
    };
    match boundary_inf(&b, mesh, quad_order) {
        Ok(inf) if inf >= 0.0 => Ok(b),
        Ok(inf) => Err(ConfigError::new(field, format!("coefficient is negative on the boundary (min {inf})"))),
        Err(e) => Err(ConfigError::new(field, e.to_string())),
    }
}
