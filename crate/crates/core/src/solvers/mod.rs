//! Iterative solvers and convergence diagnostics.

mod alg1;
mod rate;
mod sweep;
mod tseng;
mod zero;

pub use alg1::{
    alg1_step, auto_step, catching_up_step, solve_alg1, solve_catching_up, step_from_constants,
};
pub use rate::{fit_linear_rate, RateFit};
pub use sweep::{sweep_trajectory, SweepScheme, Trajectory};
pub use tseng::{solve_tseng, tseng_auto_step, tseng_step, TsengVariant};
pub use zero::{solve_zero_alg3, ZeroProblem};

use crate::error::{Error, Result};
use crate::Vector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSize {
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Record {
    None,
    Residuals,
    /// Residuals and iterates.
    Iterates,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub h: StepSize,
    pub tol: f64,
    pub max_iter: usize,
    pub record: Record,
    /// Iterate-norm cap beyond which a run is declared divergent.
    pub divergence_guard: f64,
    /// Seed for sampled constants behind `StepSize::Auto`.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            h: StepSize::Auto,
            tol: 1e-8,
            max_iter: 10_000,
            record: Record::Residuals,
            divergence_guard: 1e12,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn fixed(h: f64) -> Self {
        Self {
            h: StepSize::Fixed(h),
            ..Self::default()
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_record(mut self, record: Record) -> Self {
        self.record = record;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        if !(self.divergence_guard > 0.0) {
            return Err(Error::Config("divergence guard must be positive".into()));
        }
        if let StepSize::Fixed(h) = self.h {
            check_step(h)?;
        }
        Ok(())
    }
}

pub(crate) fn check_step(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("step size must be positive and finite, got {h}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    Diverged,
    IterationCap,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::Diverged => "diverged",
            Status::IterationCap => "iteration_cap",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub x_final: Vector,
    pub status: Status,
    pub converged: bool,
    pub diverged: bool,
    pub iterations: usize,
    /// Stopping residual at `x_0, x_1, ...` (empty unless recorded).
    pub residuals: Vec<f64>,
    /// `x_0, x_1, ...` (empty unless recorded).
    pub iterates: Vec<Vector>,
    /// Fitted per-iteration contraction factor of the residual.
    pub rate_estimate: Option<f64>,
    pub h_used: f64,
    pub final_residual: f64,
    /// `‖x_n - x_{n-1}‖` of the last step; zero when no step was taken.
    pub final_displacement: f64,
    /// Whether the last step also passed `‖x_n - x_{n-1}‖ <= tol max(1, ‖x_{n-1}‖)`.
    pub displacement_converged: bool,
}

/// Non-finite values produced inside a step mean the run blew up.
fn is_blow_up(err: &Error) -> bool {
    matches!(err, Error::Eval { .. } | Error::NonFinite(_))
}

/// Runs `x <- step(x)` until `residual(x) <= tol`, the iteration cap, or divergence.
///
/// Divergence: `‖x‖ > guard`, a non-finite evaluation, or a residual more than
/// ten times larger than one hundred iterations earlier.
pub(crate) fn drive<S, R>(
    x0: &Vector,
    config: &SolverConfig,
    h_used: f64,
    mut step: S,
    mut residual: R,
) -> Result<SolveReport>
where
    S: FnMut(&Vector) -> Result<Vector>,
    R: FnMut(&Vector) -> Result<f64>,
{
    config.validate()?;
    crate::field::check_finite(x0)?;
    let keep_iterates = config.record == Record::Iterates;

    let mut x = x0.clone();
    let mut history = vec![residual(&x)?];
    let mut iterates = if keep_iterates { vec![x.clone()] } else { Vec::new() };
    let mut status = Status::IterationCap;
    let mut iterations = 0;
    let mut displacement = 0.0;
    let mut displacement_ok = false;

    if history[0] <= config.tol {
        status = Status::Converged;
    } else {
        for n in 1..=config.max_iter {
            iterations = n;
            let next = match step(&x) {
                Ok(v) => v,
                Err(e) if is_blow_up(&e) => {
                    status = Status::Diverged;
                    break;
                }
                Err(e) => return Err(e),
            };
            displacement = (&next - &x).norm();
            displacement_ok = displacement <= config.tol * x.norm().max(1.0);
            x = next;
            if keep_iterates {
                iterates.push(x.clone());
            }
            if !(x.norm() <= config.divergence_guard) {
                status = Status::Diverged;
                break;
            }
            let r = match residual(&x) {
                Ok(r) => r,
                Err(e) if is_blow_up(&e) => {
                    status = Status::Diverged;
                    break;
                }
                Err(e) => return Err(e),
            };
            history.push(r);
            if r <= config.tol {
                status = Status::Converged;
                break;
            }
            if n >= 100 && r > 10.0 * history[n - 100] {
                status = Status::Diverged;
                break;
            }
        }
    }

    let final_residual = *history.last().expect("non-empty");
    let rate_estimate = fit_linear_rate(&history).ok().map(|f| f.factor);
    Ok(SolveReport {
        x_final: x,
        status,
        converged: status == Status::Converged,
        diverged: status == Status::Diverged,
        iterations,
        residuals: if config.record == Record::None { Vec::new() } else { history },
        iterates,
        rate_estimate,
        h_used,
        final_residual,
        final_displacement: displacement,
        displacement_converged: displacement_ok,
    })
}
