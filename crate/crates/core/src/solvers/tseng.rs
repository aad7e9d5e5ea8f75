use super::{check_step, drive, SolveReport, SolverConfig, StepSize};
use crate::analysis::{estimate_constants, SamplingPlan};
use crate::error::{Error, Result};
use crate::model::{natural_residual, QviProblem};
use crate::Vector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TsengVariant {
    /// Forward-backward-forward in `y = x - v(x)`:
    /// `ȳ = proj_C(y - h T(y))`, `y⁺ = ȳ - h (T(ȳ) - T(y))`.
    #[default]
    Standard,
    /// `z = (Id - v)^{-1} proj_C(y - h f(x))`, `x⁺ = (Id - v)^{-1}(y + h (f(x) - f(z)))`,
    /// which drops `ȳ` from the correction.
    Literal,
}

/// `0.9 / (L l̃)`.
pub fn tseng_auto_step(problem: &QviProblem, plan: &SamplingPlan) -> Result<f64> {
    let c = estimate_constants(problem, plan)?;
    let l = c
        .safe_lipschitz_f()
        .ok_or_else(|| Error::Config("auto step needs L, the Lipschitz constant of f".into()))?;
    let lt = c.safe_lipschitz_inverse().ok_or_else(|| {
        Error::Config("auto step needs the Lipschitz constant of (Id - v)^-1".into())
    })?;
    Ok(0.9 / (l * lt))
}

pub fn tseng_step(problem: &QviProblem, x: &Vector, h: f64, variant: TsengVariant) -> Result<Vector> {
    check_step(h)?;
    let inverse = problem.inverse();
    let y = problem.to_y(x)?;
    let fx = problem.f().eval(x)?;
    let y_bar = problem.set().project(&(&y - &fx * h))?;
    let z = inverse.invert(&y_bar)?;
    let fz = problem.f().eval(&z)?;
    match variant {
        TsengVariant::Standard => inverse.invert(&(y_bar - (fz - fx) * h)),
        TsengVariant::Literal => inverse.invert(&(y + (fx - fz) * h)),
    }
}

pub fn solve_tseng(
    problem: &QviProblem,
    x0: &Vector,
    config: &SolverConfig,
    variant: TsengVariant,
) -> Result<SolveReport> {
    crate::error::check_dim(problem.dim(), x0.len())?;
    let h = match config.h {
        StepSize::Fixed(h) => h,
        StepSize::Auto => tseng_auto_step(problem, &SamplingPlan::with_seed(config.seed))?,
    };
    drive(
        x0,
        config,
        h,
        |x| tseng_step(problem, x, h, variant),
        |x| natural_residual(problem, x, h),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::VectorField;
    use crate::inverse::InverseSpec;
    use crate::set::ConvexSet;
    use crate::Matrix;
    use nalgebra::dvector;

    fn rotation() -> QviProblem {
        let f = VectorField::parse(&["-x2", "x1"]).unwrap();
        let inv = InverseSpec::linear(Matrix::zeros(2, 2)).unwrap();
        QviProblem::new(f, inv, ConvexSet::cube(2, -1.0, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn rotation_field_converges_to_origin() {
        let r = solve_tseng(&rotation(), &dvector![0.5, 0.5], &SolverConfig::fixed(0.5), TsengVariant::Standard)
            .unwrap();
        assert!(r.converged);
        assert!(r.x_final.norm() <= 1e-6);
    }

    #[test]
    fn auto_step_on_rotation() {
        let p = rotation();
        // sampled L gets the 1.1 safety factor
        let h = tseng_auto_step(&p, &SamplingPlan::default()).unwrap();
        assert!((h - 0.9 / 1.1).abs() < 1e-9);
        let f = VectorField::linear(nalgebra::dmatrix![0.0, -1.0; 1.0, 0.0]).unwrap();
        let exact = QviProblem::new(f, p.inverse().clone(), p.set().clone()).unwrap();
        let h = tseng_auto_step(&exact, &SamplingPlan::default()).unwrap();
        assert!((h - 0.9).abs() < 1e-12);
        let r = solve_tseng(&p, &dvector![0.5, 0.5], &SolverConfig::default(), TsengVariant::Standard).unwrap();
        assert!(r.converged);
    }

    #[test]
    fn starts_at_solution() {
        let r = solve_tseng(&rotation(), &dvector![0.0, 0.0], &SolverConfig::fixed(0.5), TsengVariant::Standard)
            .unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn variants_agree_without_projection_activity() {
        // interior, v = 0: ȳ and the literal correction differ only by y - ȳ
        let p = rotation();
        let x = dvector![0.1, 0.2];
        let s = tseng_step(&p, &x, 0.1, TsengVariant::Standard).unwrap();
        let l = tseng_step(&p, &x, 0.1, TsengVariant::Literal).unwrap();
        let y_bar = &x - p.f().eval(&x).unwrap() * 0.1;
        assert!(((&s - &l) - (&y_bar - &x)).norm() < 1e-15);
    }
}
