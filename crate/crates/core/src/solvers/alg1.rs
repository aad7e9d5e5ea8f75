use super::{check_step, drive, SolveReport, SolverConfig, StepSize};
use crate::analysis::{estimate_constants, ProblemConstants, SamplingPlan};
use crate::error::{Error, Result};
use crate::model::{natural_residual, project_moving, QviProblem};
use crate::Vector;

/// `h = γ/L²` from safety-adjusted constants.
pub fn step_from_constants(constants: &ProblemConstants) -> Result<f64> {
    let gamma = constants.safe_gamma().ok_or_else(|| {
        Error::Config("auto step needs gamma, the strong monotonicity modulus of (f, Id - v)".into())
    })?;
    let l = constants
        .safe_lipschitz_f()
        .ok_or_else(|| Error::Config("auto step needs L, the Lipschitz constant of f".into()))?;
    Ok(gamma / (l * l))
}

/// `h = γ/L²` with declared, spectral or sampled constants.
pub fn auto_step(problem: &QviProblem, plan: &SamplingPlan) -> Result<f64> {
    step_from_constants(&estimate_constants(problem, plan)?)
}

pub(super) fn resolve_step(problem: &QviProblem, config: &SolverConfig) -> Result<f64> {
    match config.h {
        StepSize::Fixed(h) => {
            check_step(h)?;
            Ok(h)
        }
        StepSize::Auto => auto_step(problem, &SamplingPlan::with_seed(config.seed)),
    }
}

/// `(Id - v)^{-1}(proj_C(x - v(x) - h f(x)))`.
pub fn alg1_step(problem: &QviProblem, x: &Vector, h: f64) -> Result<Vector> {
    check_step(h)?;
    let y = problem.to_y(x)?;
    let fx = problem.f().eval(x)?;
    let p = problem.set().project(&(y - fx * h))?;
    problem.inverse().invert(&p)
}

/// `proj_{K(x)}(x - h f(x))`.
pub fn catching_up_step(problem: &QviProblem, x: &Vector, h: f64) -> Result<Vector> {
    check_step(h)?;
    let fx = problem.f().eval(x)?;
    project_moving(problem, x, &(x - fx * h))
}

pub fn solve_alg1(problem: &QviProblem, x0: &Vector, config: &SolverConfig) -> Result<SolveReport> {
    crate::error::check_dim(problem.dim(), x0.len())?;
    let h = resolve_step(problem, config)?;
    drive(
        x0,
        config,
        h,
        |x| alg1_step(problem, x, h),
        |x| natural_residual(problem, x, h),
    )
}

pub fn solve_catching_up(problem: &QviProblem, x0: &Vector, config: &SolverConfig) -> Result<SolveReport> {
    crate::error::check_dim(problem.dim(), x0.len())?;
    let h = resolve_step(problem, config)?;
    drive(
        x0,
        config,
        h,
        |x| catching_up_step(problem, x, h),
        |x| natural_residual(problem, x, h),
    )
}
