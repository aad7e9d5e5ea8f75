//! The problem `0 ∈ f(x) + N_{K(x)}(x)` with `K(x) = C + v(x)`.

use crate::analysis::ProblemConstants;
use crate::error::{check_dim, Error, Result};
use crate::field::{Map, VectorField};
use crate::inverse::InverseSpec;
use crate::set::ConvexSet;
use crate::Vector;

#[derive(Debug, Clone)]
pub struct QviProblem {
    name: String,
    f: VectorField,
    inverse: InverseSpec,
    set: ConvexSet,
    constants: ProblemConstants,
}

impl QviProblem {
    /// `v` is the displacement held by `inverse`.
    pub fn new(f: VectorField, inverse: InverseSpec, set: ConvexSet) -> Result<Self> {
        let n = f.dim();
        check_dim(n, inverse.dim())?;
        check_dim(n, set.dim())?;
        Ok(Self {
            name: String::new(),
            f,
            inverse,
            set,
            constants: ProblemConstants::default(),
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_constants(mut self, constants: ProblemConstants) -> Self {
        self.constants = constants.sanitized();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.f.dim()
    }

    pub fn f(&self) -> &VectorField {
        &self.f
    }

    pub fn v(&self) -> &VectorField {
        self.inverse.v()
    }

    pub fn inverse(&self) -> &InverseSpec {
        &self.inverse
    }

    pub fn set(&self) -> &ConvexSet {
        &self.set
    }

    pub fn constants(&self) -> &ProblemConstants {
        &self.constants
    }

    /// `y = x - v(x)`.
    pub fn to_y(&self, x: &Vector) -> Result<Vector> {
        self.inverse.forward(x)
    }

    /// Checks `invert((Id - v)(x)) ≈ x` on a few deterministic points of `[-1, 1]^n`.
    pub fn check_inverse_consistency(&self) -> Result<()> {
        let n = self.dim();
        for k in 0..8 {
            let x = Vector::from_fn(n, |i, _| (((k * 7 + i * 3) % 11) as f64 / 5.0) - 1.0);
            let back = self.inverse.invert(&self.to_y(&x)?)?;
            let err = (&back - &x).norm();
            let lt = self.inverse.lipschitz_of_inverse().unwrap_or(1.0).max(1.0);
            if err > 1e3 * lt * self.inverse.inner_tol() * x.norm().max(1.0) {
                return Err(Error::InvalidSpec(format!(
                    "inverse is inconsistent with v: round trip error {err:e}"
                )));
            }
        }
        Ok(())
    }
}

/// Projection onto the moving set `K(base) = C + v(base)`.
pub fn project_moving(problem: &QviProblem, base: &Vector, z: &Vector) -> Result<Vector> {
    check_dim(problem.dim(), z.len())?;
    let shift = problem.v().eval(base)?;
    Ok(&shift + problem.set().project(&(z - &shift))?)
}

/// `‖y - proj_C(y - h f(x))‖` with `y = x - v(x)`; zero exactly at solutions.
pub fn natural_residual(problem: &QviProblem, x: &Vector, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::Config(format!("step size must be positive, got {h}")));
    }
    let y = problem.to_y(x)?;
    let fx = problem.f().eval(x)?;
    Ok((&y - problem.set().project(&(&y - fx * h))?).norm())
}

/// The variational inequality `0 ∈ T(y) + N_C(y)` with `T = f ∘ (Id - v)^{-1}`.
#[derive(Debug, Clone, Copy)]
pub struct VariationalInequality<'a> {
    problem: &'a QviProblem,
}

impl<'a> VariationalInequality<'a> {
    pub fn set(&self) -> &'a ConvexSet {
        self.problem.set()
    }

    /// `T(y)`.
    pub fn operator(&self, y: &Vector) -> Result<Vector> {
        self.problem.f().eval(&self.recover(y)?)
    }

    /// Maps a VI point back to the QVI: `x = (Id - v)^{-1}(y)`.
    pub fn recover(&self, y: &Vector) -> Result<Vector> {
        self.problem.inverse().invert(y)
    }
}

impl Map for VariationalInequality<'_> {
    fn dim(&self) -> usize {
        self.problem.dim()
    }

    fn apply(&self, y: &Vector) -> Result<Vector> {
        self.operator(y)
    }
}

pub fn to_vi(problem: &QviProblem) -> VariationalInequality<'_> {
    VariationalInequality { problem }
}
