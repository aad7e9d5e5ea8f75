//! Evaluation of `(Id - v)^{-1}`.
//!
//! Four strategies are available; which one applies depends on the structure
//! of `v`:
//!
//! | `v`                                   | strategy              |
//! |---------------------------------------|-----------------------|
//! | linear, `I - V` nonsingular           | [`Strategy::LinearExact`] |
//! | `l`-Lipschitz with `l < 1`            | [`Strategy::PicardContraction`] |
//! | `A x + g(x)`, `‖(I-A)^{-1}‖ L_g < 1`  | [`Strategy::Semilinear`] |
//! | scalar, `x - v(x)` monotone           | [`Strategy::ScalarBracket`] |
//!
//! Every call checks the returned point a posteriori: `‖x - v(x) - y‖` must be
//! at most `inner_tol * max(1, ‖y‖)`.

use nalgebra::{Dyn, LU};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::{self, SamplingPlan};
use crate::error::{check_dim, Error, Result};
use crate::field::{check_finite, VectorField};
use crate::{Matrix, Vector};

pub const DEFAULT_INNER_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_INNER: usize = 100_000;

/// Safety factor applied to a sampled Lipschitz constant of the semilinear remainder.
const SAMPLED_LIPSCHITZ_SAFETY: f64 = 1.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monotonicity {
    Increasing,
    Decreasing,
}

#[derive(Debug, Clone)]
pub enum Strategy {
    LinearExact {
        lu: LU<f64, Dyn, Dyn>,
    },
    PicardContraction {
        contraction: f64,
    },
    Semilinear {
        a: Matrix,
        g: VectorField,
        lu: LU<f64, Dyn, Dyn>,
        inverse_norm: f64,
        g_lipschitz: f64,
        g_lipschitz_sampled: bool,
    },
    ScalarBracket {
        lower: f64,
        upper: f64,
        direction: Monotonicity,
    },
}

#[derive(Debug, Clone)]
pub struct InverseSpec {
    v: VectorField,
    strategy: Strategy,
    inner_tol: f64,
    max_inner: usize,
}

fn factorize(m: &Matrix) -> Result<LU<f64, Dyn, Dyn>> {
    let sv = m.singular_values();
    let max = sv.max();
    let min = sv.min();
    if !(min > 1e-14 * max.max(f64::MIN_POSITIVE)) {
        return Err(Error::SingularLinearPart);
    }
    Ok(m.clone().lu())
}

impl InverseSpec {
    /// `v(x) = V x`; factorizes `I - V` up front.
    pub fn linear(v: Matrix) -> Result<Self> {
        let n = v.nrows();
        let field = VectorField::linear(v)?;
        let i_minus_v = Matrix::identity(n, n) - field.as_matrix().expect("linear");
        let lu = factorize(&i_minus_v)?;
        Ok(Self::with_strategy(field, Strategy::LinearExact { lu }))
    }

    /// Fixed-point iteration `x <- y + v(x)` for a contraction `v` with factor `contraction < 1`.
    pub fn picard(v: VectorField, contraction: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&contraction) {
            return Err(Error::InvalidSpec(format!(
                "Picard inversion needs a contraction factor in [0, 1), got {contraction}"
            )));
        }
        Ok(Self::with_strategy(v, Strategy::PicardContraction { contraction }))
    }

    /// `v(x) = A x + g(x)`, iterated as `x <- (I - A)^{-1}(y + g(x))`.
    ///
    /// The Lipschitz constant of `g` is taken from its declaration when present,
    /// otherwise sampled with the default plan and inflated by 10%.
    pub fn semilinear(a: Matrix, g: VectorField) -> Result<Self> {
        let n = a.nrows();
        let v = VectorField::split(a.clone(), Some(g.clone()))?;
        let lu = factorize(&(Matrix::identity(n, n) - &a))?;
        let inv = lu.try_inverse().ok_or(Error::SingularLinearPart)?;
        let inverse_norm = analysis::operator_norm(&inv);
        let (g_lipschitz, sampled) = match g.declared_lipschitz() {
            Some(l) => (l, false),
            None => (
                SAMPLED_LIPSCHITZ_SAFETY * analysis::sample_lipschitz(&g, &SamplingPlan::default())?,
                true,
            ),
        };
        let factor = inverse_norm * g_lipschitz;
        if factor >= 1.0 {
            return Err(Error::InvalidSpec(format!(
                "semilinear contraction factor ‖(I-A)^-1‖·L_g = {factor} is not below 1"
            )));
        }
        Ok(Self::with_strategy(
            v,
            Strategy::Semilinear {
                a,
                g,
                lu,
                inverse_norm,
                g_lipschitz,
                g_lipschitz_sampled: sampled,
            },
        ))
    }

    /// Semilinear inversion using the split parts of `v`.
    pub fn semilinear_from(v: &VectorField) -> Result<Self> {
        let a = v
            .linear_part()
            .ok_or_else(|| Error::InvalidSpec("semilinear inversion needs v in split form".into()))?;
        let g = v
            .remainder()
            .cloned()
            .unwrap_or_else(|| VectorField::zero(v.dim()));
        Self::semilinear(a.clone(), g)
    }

    /// Bisection on `[lower, upper]` for scalar `v`; `x - v(x)` must be strictly
    /// monotone in the declared direction.
    pub fn scalar_bracket(v: VectorField, lower: f64, upper: f64, direction: Monotonicity) -> Result<Self> {
        if v.dim() != 1 {
            return Err(Error::InvalidSpec("bracket inversion needs a scalar v".into()));
        }
        if !(lower.is_finite() && upper.is_finite() && lower < upper) {
            return Err(Error::InvalidSpec(format!("invalid bracket [{lower}, {upper}]")));
        }
        let spec = Self::with_strategy(
            v,
            Strategy::ScalarBracket {
                lower,
                upper,
                direction,
            },
        );
        let lo = spec.forward_scalar(lower)?;
        let hi = spec.forward_scalar(upper)?;
        let ok = match direction {
            Monotonicity::Increasing => lo < hi,
            Monotonicity::Decreasing => lo > hi,
        };
        if !ok {
            return Err(Error::InvalidSpec(format!(
                "x - v(x) is not {direction:?} over [{lower}, {upper}]"
            )));
        }
        Ok(spec)
    }

    fn with_strategy(v: VectorField, strategy: Strategy) -> Self {
        Self {
            v,
            strategy,
            inner_tol: DEFAULT_INNER_TOL,
            max_inner: DEFAULT_MAX_INNER,
        }
    }

    pub fn with_tolerance(mut self, inner_tol: f64, max_inner: usize) -> Self {
        self.inner_tol = inner_tol;
        self.max_inner = max_inner.max(1);
        self
    }

    pub fn v(&self) -> &VectorField {
        &self.v
    }

    pub fn strategy(&self) -> &Strategy {
        &self.strategy
    }

    pub fn dim(&self) -> usize {
        self.v.dim()
    }

    pub fn inner_tol(&self) -> f64 {
        self.inner_tol
    }

    pub fn max_inner(&self) -> usize {
        self.max_inner
    }

    /// `(Id - v)(x)`.
    pub fn forward(&self, x: &Vector) -> Result<Vector> {
        Ok(x - self.v.eval(x)?)
    }

    fn forward_scalar(&self, x: f64) -> Result<f64> {
        Ok(self.forward(&Vector::from_element(1, x))?[0])
    }

    fn residual(&self, x: &Vector, y: &Vector) -> Result<f64> {
        Ok((self.forward(x)? - y).norm())
    }

    fn threshold(&self, y: &Vector) -> f64 {
        self.inner_tol * y.norm().max(1.0)
    }

    pub fn invert(&self, y: &Vector) -> Result<Vector> {
        self.invert_traced(y, None)
    }

    /// Like [`invert`](Self::invert), also returning the residual after every inner step.
    pub fn invert_with_trace(&self, y: &Vector) -> Result<(Vector, Vec<f64>)> {
        let mut trace = Vec::new();
        let x = self.invert_traced(y, Some(&mut trace))?;
        Ok((x, trace))
    }

    fn invert_traced(&self, y: &Vector, mut trace: Option<&mut Vec<f64>>) -> Result<Vector> {
        check_dim(self.dim(), y.len())?;
        check_finite(y)?;
        let tol = self.threshold(y);
        let mut log = |r: f64| {
            if let Some(t) = trace.as_deref_mut() {
                t.push(r);
            }
        };
        let x = match &self.strategy {
            Strategy::LinearExact { lu } => {
                let mut x = lu.solve(y).ok_or(Error::SingularLinearPart)?;
                let mut r = self.forward(&x)? - y;
                log(r.norm());
                if r.norm() > tol {
                    // one step of iterative refinement
                    x -= lu.solve(&r).ok_or(Error::SingularLinearPart)?;
                    r = self.forward(&x)? - y;
                    log(r.norm());
                }
                x
            }
            Strategy::PicardContraction { .. } => {
                let mut x = y.clone();
                let mut k = 0;
                loop {
                    let next = y + self.v.eval(&x)?;
                    // ‖x - v(x) - y‖ = ‖x - next‖
                    let r = (&x - &next).norm();
                    log(r);
                    if r <= tol {
                        break x;
                    }
                    k += 1;
                    if k >= self.max_inner {
                        return Err(Error::NoConvergence {
                            iterations: k,
                            residual: r,
                        });
                    }
                    x = next;
                }
            }
            Strategy::Semilinear { g, lu, .. } => {
                let mut x = lu.solve(y).ok_or(Error::SingularLinearPart)?;
                let mut k = 0;
                loop {
                    let r = self.residual(&x, y)?;
                    log(r);
                    if r <= tol {
                        break x;
                    }
                    k += 1;
                    if k >= self.max_inner {
                        return Err(Error::NoConvergence {
                            iterations: k,
                            residual: r,
                        });
                    }
                    x = lu.solve(&(y + g.eval(&x)?)).ok_or(Error::SingularLinearPart)?;
                }
            }
            Strategy::ScalarBracket {
                lower,
                upper,
                direction,
            } => {
                let target = y[0];
                let sign = match direction {
                    Monotonicity::Increasing => 1.0,
                    Monotonicity::Decreasing => -1.0,
                };
                // phi is increasing after the sign flip
                let phi = |x: f64| -> Result<f64> { Ok(sign * (self.forward_scalar(x)? - target)) };
                let (mut lo, mut hi) = (*lower, *upper);
                let (p_lo, p_hi) = (phi(lo)?, phi(hi)?);
                if p_lo > 0.0 || p_hi < 0.0 {
                    return Err(Error::BracketingFailure {
                        lower: lo,
                        upper: hi,
                        at_lower: sign * p_lo,
                        at_upper: sign * p_hi,
                    });
                }
                let (mut best, mut best_r) = if -p_lo < p_hi { (lo, -p_lo) } else { (hi, p_hi) };
                let mut k = 0;
                while best_r > tol {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi || k >= self.max_inner {
                        return Err(Error::NoConvergence {
                            iterations: k,
                            residual: best_r,
                        });
                    }
                    let p = phi(mid)?;
                    log(p.abs());
                    if p.abs() < best_r {
                        best = mid;
                        best_r = p.abs();
                    }
                    if p < 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    k += 1;
                }
                Vector::from_element(1, best)
            }
        };
        let r = self.residual(&x, y)?;
        if r > tol {
            return Err(Error::NoConvergence {
                iterations: self.max_inner,
                residual: r,
            });
        }
        Ok(x)
    }

    /// Lipschitz constant `l̃` of `(Id - v)^{-1}`.
    ///
    /// Exact for the linear strategy, a bound for Picard and semilinear, and a
    /// sampled lower estimate for the scalar bracket.
    pub fn lipschitz_of_inverse(&self) -> Result<f64> {
        match &self.strategy {
            Strategy::LinearExact { lu } => {
                let inv = lu.try_inverse().ok_or(Error::SingularLinearPart)?;
                Ok(analysis::operator_norm(&inv))
            }
            Strategy::PicardContraction { contraction } => Ok(1.0 / (1.0 - contraction)),
            Strategy::Semilinear {
                inverse_norm,
                g_lipschitz,
                ..
            } => {
                let factor = inverse_norm * g_lipschitz;
                if factor >= 1.0 {
                    return Err(Error::InvalidSpec(format!("contraction factor {factor} >= 1")));
                }
                Ok(inverse_norm / (1.0 - factor))
            }
            Strategy::ScalarBracket { lower, upper, .. } => {
                let plan = SamplingPlan::default();
                let lo = lower.max(plan.lo);
                let hi = upper.min(plan.hi);
                let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
                let mut best: f64 = 0.0;
                for _ in 0..plan.count {
                    let a = rng.random_range(lo..=hi);
                    let b = rng.random_range(lo..=hi);
                    if (a - b).abs() < plan.min_separation {
                        continue;
                    }
                    let dy = self.forward_scalar(a)? - self.forward_scalar(b)?;
                    best = best.max((a - b).abs() / dy.abs());
                }
                if best == 0.0 {
                    return Err(Error::Sampling("no usable pairs in bracket".into()));
                }
                Ok(best)
            }
        }
    }

    /// Whether [`lipschitz_of_inverse`](Self::lipschitz_of_inverse) is a sampled estimate.
    pub fn inverse_lipschitz_is_sampled(&self) -> bool {
        match &self.strategy {
            Strategy::ScalarBracket { .. } => true,
            Strategy::Semilinear {
                g_lipschitz_sampled, ..
            } => *g_lipschitz_sampled,
            _ => false,
        }
    }
}

pub fn invert(spec: &InverseSpec, y: &Vector) -> Result<Vector> {
    spec.invert(y)
}
