use nalgebra::{Dyn, LU};

use super::{check_step, drive, SolveReport, SolverConfig, StepSize};
use crate::analysis::{operator_norm, sample_lipschitz, SamplingPlan};
use crate::error::{check_dim, Error, Result};
use crate::field::{FnMap, VectorField};
use crate::inverse::InverseSpec;
use crate::{Matrix, Vector};

/// Find `x` with `f(x) = 0`, preconditioned by an invertible map `w`.
#[derive(Debug, Clone)]
pub struct ZeroProblem {
    name: String,
    f: VectorField,
    w: VectorField,
    /// Evaluates `w^{-1}` as `(Id - v)^{-1}` with `v = Id - w`.
    inverse: InverseSpec,
    lu: Option<LU<f64, Dyn, Dyn>>,
}

impl ZeroProblem {
    /// `w = A`.
    pub fn with_matrix(f: VectorField, a: Matrix) -> Result<Self> {
        check_dim(f.dim(), a.nrows())?;
        let n = a.nrows();
        let inverse = InverseSpec::linear(Matrix::identity(n, n) - &a)?;
        let w = VectorField::linear(a)?;
        Self::new(f, w, inverse)
    }

    /// Picks the inversion strategy from the shape of `w`: exact for a matrix,
    /// semilinear for a split form.
    pub fn from_fields(f: VectorField, w: VectorField) -> Result<Self> {
        if let Some(a) = w.as_matrix() {
            return Self::with_matrix(f, a.clone());
        }
        if w.linear_part().is_some() {
            let inverse = InverseSpec::semilinear_from(&w.identity_minus())?;
            return Self::new(f, w, inverse);
        }
        Err(Error::InvalidSpec(
            "w given componentwise needs an explicit inversion strategy".into(),
        ))
    }

    /// `inverse` must invert `Id - v` for `v = Id - w`.
    pub fn new(f: VectorField, w: VectorField, inverse: InverseSpec) -> Result<Self> {
        check_dim(f.dim(), w.dim())?;
        check_dim(f.dim(), inverse.dim())?;
        let lu = match w.as_matrix() {
            Some(a) => {
                let sv = a.singular_values();
                if !(sv.min() > 1e-14 * sv.max()) {
                    return Err(Error::SingularLinearPart);
                }
                Some(a.clone().lu())
            }
            None => None,
        };
        Ok(Self {
            name: String::new(),
            f,
            w,
            inverse,
            lu,
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
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

    pub fn w(&self) -> &VectorField {
        &self.w
    }

    pub fn inverse(&self) -> &InverseSpec {
        &self.inverse
    }

    pub fn matrix(&self) -> Option<&Matrix> {
        self.w.as_matrix()
    }

    /// `w^{-1}(w(x) - h f(x))`.
    pub fn step_general(&self, x: &Vector, h: f64) -> Result<Vector> {
        check_step(h)?;
        let target = self.w.eval(x)? - self.f.eval(x)? * h;
        self.inverse.invert(&target)
    }

    /// `x - h A^{-1} f(x)`; `None` unless `w` is a matrix.
    pub fn step_matrix(&self, x: &Vector, h: f64) -> Option<Result<Vector>> {
        let lu = self.lu.as_ref()?;
        Some((|| {
            check_step(h)?;
            let fx = self.f.eval(x)?;
            let d = lu.solve(&fx).ok_or(Error::SingularLinearPart)?;
            Ok(x - d * h)
        })())
    }

    /// `‖A^{-1}‖ L̂_g` for `g = f - A`, with `L̂_g` sampled.
    pub fn contraction_alpha(&self, plan: &SamplingPlan) -> Result<f64> {
        let a = self
            .matrix()
            .ok_or_else(|| Error::Config("contraction factor needs w to be a matrix".into()))?;
        let inv = self.lu.as_ref().and_then(|lu| lu.try_inverse()).ok_or(Error::SingularLinearPart)?;
        let g = FnMap::new(self.dim(), |x: &Vector| Ok(self.f.eval(x)? - a * x));
        Ok(operator_norm(&inv) * sample_lipschitz(&g, plan)?)
    }
}

/// Runs `x_{n+1} = w^{-1}(w(x_n) - h f(x_n))` until `‖f(x_n)‖ <= tol`.
///
/// When `w` is a matrix the equivalent form `x_n - h A^{-1} f(x_n)` is used.
pub fn solve_zero_alg3(problem: &ZeroProblem, x0: &Vector, config: &SolverConfig) -> Result<SolveReport> {
    check_dim(problem.dim(), x0.len())?;
    let h = match config.h {
        StepSize::Fixed(h) => h,
        StepSize::Auto => return Err(Error::Config("the zero finder needs an explicit step size".into())),
    };
    drive(
        x0,
        config,
        h,
        |x| match problem.step_matrix(x, h) {
            Some(r) => r,
            None => problem.step_general(x, h),
        },
        |x| Ok(problem.f.eval(x)?.norm()),
    )
}
