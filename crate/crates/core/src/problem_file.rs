//! JSON problem files.
//!
//! ```json
//! {
//!   "meta": { "name": "demo", "description": "..." },
//!   "kind": "qvi",
//!   "dim": 2,
//!   "f": { "matrix": [[3, 1], [1, 4]], "remainder": ["0.5*cos(x2)^3", "0.7*sin(x1)"] },
//!   "v": { "matrix": [[-0.2, -0.4], [-0.4, -0.6]] },
//!   "inverse": { "strategy": "linear" },
//!   "set": { "type": "box", "lower": [-30, -30], "upper": [40, 40] },
//!   "constants": { "L": 5.32 }
//! }
//! ```
//!
//! A field is a list of expression strings, `{"components": [...], "lipschitz": l}`,
//! `{"matrix": rows, "remainder": [...], "lipschitz": l, "remainder_lipschitz": lg}`
//! or the string `"zero"`. Problems of kind `"zero"` give `w` instead of `v` and
//! have no set.

use serde::{Deserialize, Serialize};

use crate::analysis::{Constant, ProblemConstants, Source};
use crate::error::{Error, Result};
use crate::field::{FieldRepr, VectorField};
use crate::inverse::{InverseSpec, Monotonicity, Strategy, DEFAULT_INNER_TOL, DEFAULT_MAX_INNER};
use crate::model::QviProblem;
use crate::set::ConvexSet;
use crate::solvers::ZeroProblem;
use crate::{Matrix, Vector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<Meta>,
    #[serde(default = "default_kind")]
    pub kind: String,
    pub dim: usize,
    pub f: FieldSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<FieldSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<FieldSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inverse: Option<InverseFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub set: Option<SetFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants: Option<ConstantsFile>,
}

fn default_kind() -> String {
    "qvi".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Meta {
    #[serde(default)]
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FieldSpec {
    Keyword(String),
    Components(Vec<String>),
    Expressions {
        components: Vec<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lipschitz: Option<f64>,
    },
    Split {
        matrix: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        remainder: Option<Vec<String>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lipschitz: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        remainder_lipschitz: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InverseFile {
    /// `linear`, `picard`, `semilinear` or `bracket`.
    pub strategy: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_inner: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetFile {
    /// `whole`, `orthant` or `box`.
    #[serde(rename = "type")]
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsFile {
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub lipschitz_f: Option<f64>,
    #[serde(rename = "l", default, skip_serializing_if = "Option::is_none")]
    pub lipschitz_v: Option<f64>,
    #[serde(rename = "l_tilde", default, skip_serializing_if = "Option::is_none")]
    pub lipschitz_inverse: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
}

/// A loaded problem.
#[derive(Debug, Clone)]
pub enum Problem {
    Qvi(QviProblem),
    Zero(ZeroProblem),
}

impl Problem {
    pub fn name(&self) -> &str {
        match self {
            Problem::Qvi(p) => p.name(),
            Problem::Zero(p) => p.name(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Problem::Qvi(p) => p.dim(),
            Problem::Zero(p) => p.dim(),
        }
    }
}

fn bad(msg: impl Into<String>) -> Error {
    Error::ProblemFile(msg.into())
}

fn matrix_from_rows(rows: &[Vec<f64>], dim: usize, what: &str) -> Result<Matrix> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(bad(format!("{what}: matrix must be {dim}x{dim}")));
    }
    Ok(Matrix::from_fn(dim, dim, |i, j| rows[i][j]))
}

fn rows_of(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn check_positive(value: Option<f64>, what: &str) -> Result<Option<f64>> {
    match value {
        Some(v) if !(v > 0.0 && v.is_finite()) => Err(bad(format!("{what} must be positive, got {v}"))),
        other => Ok(other),
    }
}

fn parse_components(exprs: &[String], dim: usize, what: &str) -> Result<VectorField> {
    if exprs.len() != dim {
        return Err(bad(format!("{what}: expected {dim} components, found {}", exprs.len())));
    }
    let parsed = exprs
        .iter()
        .enumerate()
        .map(|(i, s)| {
            crate::expr::Expression::parse(s, dim)
                .map_err(|e| bad(format!("{what}[{i}] = {s:?}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    VectorField::from_components(parsed)
}

impl FieldSpec {
    pub fn build(&self, dim: usize, what: &str) -> Result<VectorField> {
        match self {
            FieldSpec::Keyword(k) if k == "zero" => Ok(VectorField::zero(dim)),
            FieldSpec::Keyword(k) => Err(bad(format!("{what}: unknown keyword {k:?}"))),
            FieldSpec::Components(c) => parse_components(c, dim, what),
            FieldSpec::Expressions { components, lipschitz } => {
                let f = parse_components(components, dim, what)?;
                Ok(match check_positive(*lipschitz, what)? {
                    Some(l) => f.with_lipschitz(l),
                    None => f,
                })
            }
            FieldSpec::Split {
                matrix,
                remainder,
                lipschitz,
                remainder_lipschitz,
            } => {
                let m = matrix_from_rows(matrix, dim, what)?;
                let rem = match remainder {
                    Some(r) => {
                        let g = parse_components(r, dim, &format!("{what}.remainder"))?;
                        Some(match check_positive(*remainder_lipschitz, what)? {
                            Some(l) => g.with_lipschitz(l),
                            None => g,
                        })
                    }
                    None if remainder_lipschitz.is_some() => {
                        return Err(bad(format!("{what}: remainder_lipschitz without remainder")))
                    }
                    None => None,
                };
                let f = VectorField::split(m, rem)?;
                Ok(match check_positive(*lipschitz, what)? {
                    Some(l) => f.with_lipschitz(l),
                    None => f,
                })
            }
        }
    }

    pub fn from_field(field: &VectorField) -> Result<Self> {
        match field.repr() {
            FieldRepr::Components(exprs) => {
                let components = exprs.iter().map(|e| e.to_string()).collect();
                Ok(match field.declared_lipschitz() {
                    Some(l) => FieldSpec::Expressions {
                        components,
                        lipschitz: Some(l),
                    },
                    None => FieldSpec::Components(components),
                })
            }
            FieldRepr::Split { matrix, remainder } => {
                let (remainder, remainder_lipschitz) = match remainder {
                    None => (None, None),
                    Some(r) => match r.repr() {
                        FieldRepr::Components(exprs) => (
                            Some(exprs.iter().map(|e| e.to_string()).collect()),
                            r.declared_lipschitz(),
                        ),
                        FieldRepr::Split { .. } => {
                            return Err(bad("nested split remainders cannot be written"))
                        }
                    },
                };
                Ok(FieldSpec::Split {
                    matrix: rows_of(matrix),
                    remainder,
                    lipschitz: field.declared_lipschitz(),
                    remainder_lipschitz,
                })
            }
        }
    }
}

impl SetFile {
    pub fn build(&self, dim: usize) -> Result<ConvexSet> {
        let bounds_absent = self.lower.is_none() && self.upper.is_none();
        match self.kind.as_str() {
            "whole" if bounds_absent => Ok(ConvexSet::WholeSpace(dim)),
            "orthant" if bounds_absent => Ok(ConvexSet::NonnegativeOrthant(dim)),
            "whole" | "orthant" => Err(bad(format!("set type {:?} takes no bounds", self.kind))),
            "box" => {
                let (Some(lo), Some(hi)) = (&self.lower, &self.upper) else {
                    return Err(bad("box needs lower and upper"));
                };
                if lo.len() != dim || hi.len() != dim {
                    return Err(bad(format!("box bounds must have {dim} entries")));
                }
                ConvexSet::boxed(Vector::from_column_slice(lo), Vector::from_column_slice(hi))
            }
            other => Err(bad(format!("unknown set type {other:?}"))),
        }
    }

    pub fn from_set(set: &ConvexSet) -> Self {
        match set {
            ConvexSet::WholeSpace(_) => SetFile {
                kind: "whole".into(),
                lower: None,
                upper: None,
            },
            ConvexSet::NonnegativeOrthant(_) => SetFile {
                kind: "orthant".into(),
                lower: None,
                upper: None,
            },
            ConvexSet::Box { lower, upper } => SetFile {
                kind: "box".into(),
                lower: Some(lower.iter().copied().collect()),
                upper: Some(upper.iter().copied().collect()),
            },
        }
    }
}

impl ConstantsFile {
    pub fn build(&self) -> Result<ProblemConstants> {
        let c = |v: Option<f64>, what: &str| -> Result<Option<Constant>> {
            Ok(check_positive(v, what)?.map(|v| Constant::new(v, Source::Declared)))
        };
        Ok(ProblemConstants {
            lipschitz_f: c(self.lipschitz_f, "constants.L")?,
            lipschitz_v: c(self.lipschitz_v, "constants.l")?,
            lipschitz_inverse: c(self.lipschitz_inverse, "constants.l_tilde")?,
            gamma: c(self.gamma, "constants.gamma")?,
            mu: c(self.mu, "constants.mu")?,
        })
    }

    /// Declared entries only.
    pub fn from_constants(c: &ProblemConstants) -> Option<Self> {
        let d = |c: Option<Constant>| c.filter(|c| c.source == Source::Declared).map(|c| c.value);
        let out = ConstantsFile {
            lipschitz_f: d(c.lipschitz_f),
            lipschitz_v: d(c.lipschitz_v),
            lipschitz_inverse: d(c.lipschitz_inverse),
            gamma: d(c.gamma),
            mu: d(c.mu),
        };
        (out != ConstantsFile::default()).then_some(out)
    }
}

impl InverseFile {
    fn named(strategy: &str) -> Self {
        InverseFile {
            strategy: strategy.into(),
            lipschitz: None,
            lower: None,
            upper: None,
            direction: None,
            inner_tol: None,
            max_inner: None,
        }
    }

    /// Builds the inverse of `Id - v`.
    pub fn build(&self, v: &VectorField) -> Result<InverseSpec> {
        let spec = match self.strategy.as_str() {
            "linear" => {
                let m = v
                    .as_matrix()
                    .ok_or_else(|| bad("linear inversion needs v given as a matrix without remainder"))?;
                InverseSpec::linear(m.clone())?
            }
            "picard" => {
                let l = self.lipschitz.ok_or_else(|| bad("picard inversion needs lipschitz"))?;
                InverseSpec::picard(v.clone(), l)?
            }
            "semilinear" => InverseSpec::semilinear_from(v)?,
            "bracket" => {
                let (Some(lo), Some(hi)) = (self.lower, self.upper) else {
                    return Err(bad("bracket inversion needs lower and upper"));
                };
                let direction = match self.direction.as_deref() {
                    Some("increasing") => Monotonicity::Increasing,
                    Some("decreasing") => Monotonicity::Decreasing,
                    other => {
                        return Err(bad(format!(
                            "bracket direction must be \"increasing\" or \"decreasing\", got {other:?}"
                        )))
                    }
                };
                InverseSpec::scalar_bracket(v.clone(), lo, hi, direction)?
            }
            other => return Err(bad(format!("unknown inverse strategy {other:?}"))),
        };
        let tol = check_positive(self.inner_tol, "inverse.inner_tol")?.unwrap_or(DEFAULT_INNER_TOL);
        let max_inner = match self.max_inner {
            Some(0) => return Err(bad("inverse.max_inner must be at least 1")),
            Some(m) => m,
            None => DEFAULT_MAX_INNER,
        };
        Ok(spec.with_tolerance(tol, max_inner))
    }

    pub fn from_spec(spec: &InverseSpec) -> Self {
        let mut out = match spec.strategy() {
            Strategy::LinearExact { .. } => Self::named("linear"),
            Strategy::PicardContraction { contraction } => InverseFile {
                lipschitz: Some(*contraction),
                ..Self::named("picard")
            },
            Strategy::Semilinear { .. } => Self::named("semilinear"),
            Strategy::ScalarBracket {
                lower,
                upper,
                direction,
            } => InverseFile {
                lower: Some(*lower),
                upper: Some(*upper),
                direction: Some(
                    match direction {
                        Monotonicity::Increasing => "increasing",
                        Monotonicity::Decreasing => "decreasing",
                    }
                    .into(),
                ),
                ..Self::named("bracket")
            },
        };
        if spec.inner_tol() != DEFAULT_INNER_TOL {
            out.inner_tol = Some(spec.inner_tol());
        }
        if spec.max_inner() != DEFAULT_MAX_INNER {
            out.max_inner = Some(spec.max_inner());
        }
        out
    }
}

impl ProblemFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| bad(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem files serialize")
    }

    pub fn build(&self) -> Result<Problem> {
        if self.dim == 0 {
            return Err(bad("dim must be at least 1"));
        }
        let n = self.dim;
        let name = self.meta.as_ref().map(|m| m.name.clone()).unwrap_or_default();
        let f = self.f.build(n, "f")?;
        match self.kind.as_str() {
            "qvi" => {
                if self.w.is_some() {
                    return Err(bad("qvi problems take v, not w"));
                }
                let v = match &self.v {
                    Some(spec) => spec.build(n, "v")?,
                    None => VectorField::zero(n),
                };
                let inverse = match &self.inverse {
                    Some(i) => i.build(&v)?,
                    None if v.as_matrix().is_some() => InverseFile::named("linear").build(&v)?,
                    None if v.linear_part().is_some() => InverseFile::named("semilinear").build(&v)?,
                    None => return Err(bad("v given componentwise needs an inverse strategy")),
                };
                let set = self.set.as_ref().ok_or_else(|| bad("qvi problems need a set"))?.build(n)?;
                let constants = self.constants.clone().unwrap_or_default().build()?;
                let problem = QviProblem::new(f, inverse, set)?.with_name(name).with_constants(constants);
                problem.check_inverse_consistency()?;
                Ok(Problem::Qvi(problem))
            }
            "zero" => {
                if self.v.is_some() || self.set.is_some() || self.constants.is_some() {
                    return Err(bad("zero problems take only f, w and inverse"));
                }
                let w = self.w.as_ref().ok_or_else(|| bad("zero problems need w"))?.build(n, "w")?;
                let problem = match &self.inverse {
                    None => ZeroProblem::from_fields(f, w)?,
                    Some(i) => {
                        let inverse = i.build(&w.identity_minus())?;
                        ZeroProblem::new(f, w, inverse)?
                    }
                };
                Ok(Problem::Zero(problem.with_name(name)))
            }
            other => Err(bad(format!("unknown problem kind {other:?}"))),
        }
    }

    pub fn from_problem(problem: &Problem) -> Result<Self> {
        let meta = (!problem.name().is_empty()).then(|| Meta {
            name: problem.name().to_string(),
            description: String::new(),
        });
        Ok(match problem {
            Problem::Qvi(p) => ProblemFile {
                meta,
                kind: "qvi".into(),
                dim: p.dim(),
                f: FieldSpec::from_field(p.f())?,
                v: Some(FieldSpec::from_field(p.v())?),
                w: None,
                inverse: Some(InverseFile::from_spec(p.inverse())),
                set: Some(SetFile::from_set(p.set())),
                constants: ConstantsFile::from_constants(p.constants()),
            },
            Problem::Zero(z) => {
                let inverse = match z.inverse().strategy() {
                    Strategy::LinearExact { .. } | Strategy::Semilinear { .. }
                        if z.inverse().inner_tol() == DEFAULT_INNER_TOL
                            && z.inverse().max_inner() == DEFAULT_MAX_INNER =>
                    {
                        None
                    }
                    _ => Some(InverseFile::from_spec(z.inverse())),
                };
                ProblemFile {
                    meta,
                    kind: "zero".into(),
                    dim: z.dim(),
                    f: FieldSpec::from_field(z.f())?,
                    v: None,
                    w: Some(FieldSpec::from_field(z.w())?),
                    inverse,
                    set: None,
                    constants: None,
                }
            }
        })
    }
}

/// Parses and validates a problem document.
pub fn load_problem(text: &str) -> Result<Problem> {
    ProblemFile::from_json(text)?.build()
}

pub fn save_problem(problem: &Problem) -> Result<String> {
    Ok(ProblemFile::from_problem(problem)?.to_json())
}
