use super::alg1::{alg1_step, catching_up_step};
use super::check_step;
use crate::error::{check_dim, Error, Result};
use crate::field::check_finite;
use crate::model::{natural_residual, QviProblem};
use crate::Vector;

const GUARD: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SweepScheme {
    /// Projection in `y = x - v(x)` followed by `(Id - v)^{-1}`.
    #[default]
    SemiImplicit,
    /// `x_{k+1} = proj_{K(x_k)}(x_k - h f(x_k))`.
    CatchingUp,
}

/// Time-stamped states of a discretized sweeping process.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub h: f64,
    pub times: Vec<f64>,
    pub states: Vec<Vector>,
    /// `‖x_k - x_{k-1}‖ / h`, zero at `k = 0`.
    pub speeds: Vec<f64>,
    /// Natural residual of each state at step `h`.
    pub residuals: Vec<f64>,
    pub diverged: bool,
}

impl Trajectory {
    pub fn terminal(&self) -> &Vector {
        self.states.last().expect("trajectory holds x0")
    }
}

/// States at `t_k = k h` for `k = 0..=round(t_end / h)`.
pub fn sweep_trajectory(
    problem: &QviProblem,
    x0: &Vector,
    h: f64,
    t_end: f64,
    scheme: SweepScheme,
) -> Result<Trajectory> {
    check_dim(problem.dim(), x0.len())?;
    check_finite(x0)?;
    check_step(h)?;
    if !(t_end >= h) || !t_end.is_finite() {
        return Err(Error::Config(format!("final time {t_end} must be at least h = {h}")));
    }
    let steps = (t_end / h).round() as usize;
    let mut traj = Trajectory {
        h,
        times: vec![0.0],
        states: vec![x0.clone()],
        speeds: vec![0.0],
        residuals: vec![natural_residual(problem, x0, h)?],
        diverged: false,
    };
    let mut x = x0.clone();
    for k in 1..=steps {
        let step = match scheme {
            SweepScheme::SemiImplicit => alg1_step(problem, &x, h),
            SweepScheme::CatchingUp => catching_up_step(problem, &x, h),
        };
        let next = match step {
            Ok(v) => v,
            Err(Error::Eval { .. } | Error::NonFinite(_)) => {
                traj.diverged = true;
                break;
            }
            Err(e) => return Err(e),
        };
        if !(next.norm() <= GUARD) {
            traj.diverged = true;
            break;
        }
        let residual = match natural_residual(problem, &next, h) {
            Ok(r) => r,
            Err(Error::Eval { .. } | Error::NonFinite(_)) => {
                traj.diverged = true;
                break;
            }
            Err(e) => return Err(e),
        };
        traj.times.push(k as f64 * h);
        traj.speeds.push((&next - &x).norm() / h);
        traj.residuals.push(residual);
        traj.states.push(next.clone());
        x = next;
    }
    Ok(traj)
}
