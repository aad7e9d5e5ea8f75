//! Lipschitz and (pair) monotonicity constants.
//!
//! Linear maps get exact spectral values. Nonlinear maps are probed on seeded
//! random pairs; such estimates are one-sided: a sampled Lipschitz constant
//! is a lower bound on the true one and a sampled pair modulus is an upper
//! bound on the true infimum. Consumers that need conservative values apply
//! [`GAMMA_SAFETY`] and [`LIPSCHITZ_SAFETY`].

use std::fmt;

use nalgebra::SymmetricEigen;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{check_dim, Error, Result};
use crate::field::{FnMap, Map};
use crate::model::QviProblem;
use crate::{Matrix, Vector};

pub const GAMMA_SAFETY: f64 = 0.9;
pub const LIPSCHITZ_SAFETY: f64 = 1.1;

/// Seeded pair sampler over the cube `[lo, hi]^n`.
///
/// Half of the pairs are drawn independently; the other half are local
/// perturbations `y = x + r d` with a random direction `d` and a radius
/// log-uniform between `1e-5 (hi - lo)` and `hi - lo`, so that estimates see
/// both global and local behaviour.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingPlan {
    pub seed: u64,
    pub count: usize,
    pub lo: f64,
    pub hi: f64,
    pub min_separation: f64,
}

impl Default for SamplingPlan {
    fn default() -> Self {
        Self {
            seed: 0,
            count: 10_000,
            lo: -10.0,
            hi: 10.0,
            min_separation: 1e-6,
        }
    }
}

impl SamplingPlan {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.count < 2 {
            return Err(Error::Sampling(format!("count must be >= 2, got {}", self.count)));
        }
        if !(self.lo < self.hi) || !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(Error::Sampling(format!("invalid box [{}, {}]", self.lo, self.hi)));
        }
        Ok(())
    }

    /// The accepted pairs, in generation order.
    pub fn pairs(&self, dim: usize) -> Result<Vec<(Vector, Vector)>> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let width = self.hi - self.lo;
        let mut out = Vec::with_capacity(self.count);
        for k in 0..self.count {
            let x = Vector::from_fn(dim, |_, _| rng.random_range(self.lo..=self.hi));
            let y = if k % 2 == 0 {
                Vector::from_fn(dim, |_, _| rng.random_range(self.lo..=self.hi))
            } else {
                let d = Vector::from_fn(dim, |_, _| rng.random_range(-1.0..=1.0));
                let radius = width * 10f64.powf(-rng.random_range(0.0..5.0));
                let n = d.norm();
                if n == 0.0 {
                    continue;
                }
                (x.clone() + d * (radius / n)).map(|v| v.clamp(self.lo, self.hi))
            };
            if (&x - &y).norm() >= self.min_separation {
                out.push((x, y));
            }
        }
        if out.is_empty() {
            return Err(Error::Sampling("all sampled pairs were rejected".into()));
        }
        Ok(out)
    }
}

/// Largest singular value, by power iteration on `MᵀM` from the all-ones vector.
///
/// The unit vectors are tried as extra starts so that a start orthogonal to the
/// top singular direction cannot hide it.
pub fn operator_norm(m: &Matrix) -> f64 {
    let n = m.ncols();
    if n == 0 || m.iter().all(|v| *v == 0.0) {
        return 0.0;
    }
    let gram = m.transpose() * m;
    let mut starts = vec![Vector::from_element(n, 1.0)];
    starts.extend((0..n).map(|i| {
        let mut e = Vector::zeros(n);
        e[i] = 1.0;
        e
    }));
    let mut best: f64 = 0.0;
    for start in starts {
        let mut v = start.normalize();
        let mut sigma = (m * &v).norm();
        for _ in 0..100_000 {
            let w = &gram * &v;
            let norm = w.norm();
            if norm == 0.0 {
                break;
            }
            v = w / norm;
            let next = (m * &v).norm();
            let done = (next - sigma).abs() <= 1e-15 * next;
            sigma = next;
            if done {
                break;
            }
        }
        best = best.max(sigma);
    }
    best
}

/// Strong-monotonicity modulus of the linear map `M`: the smallest eigenvalue of `(M + Mᵀ)/2`.
pub fn linear_monotonicity_modulus(m: &Matrix) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    SymmetricEigen::new(sym).eigenvalues.min()
}

/// Modulus of the linear pair `(A1, A2)`: `inf ⟨A1 x, A2 x⟩ / ‖x‖²`, computed as
/// the modulus of `A2ᵀ A1`.
pub fn pair_modulus_linear(a1: &Matrix, a2: &Matrix) -> Result<f64> {
    if !a1.is_square() || a1.shape() != a2.shape() {
        return Err(Error::DimensionMismatch {
            expected: a1.nrows(),
            found: a2.nrows(),
        });
    }
    Ok(linear_monotonicity_modulus(&(a2.transpose() * a1)))
}

fn sample_ratios<F>(plan: &SamplingPlan, dim: usize, ratio: F) -> Result<Vec<f64>>
where
    F: Fn(&Vector, &Vector) -> Result<f64> + Sync,
{
    let pairs = plan.pairs(dim)?;
    pairs.par_iter().map(|(x, y)| ratio(x, y)).collect()
}

/// `min ⟨f(x)-f(y), w(x)-w(y)⟩ / ‖x-y‖²` over the plan's pairs (an upper bound on the true modulus).
pub fn sample_pair_modulus<F: Map + ?Sized, W: Map + ?Sized>(f: &F, w: &W, plan: &SamplingPlan) -> Result<f64> {
    check_dim(f.dim(), w.dim())?;
    let ratios = sample_ratios(plan, f.dim(), |x, y| {
        let df = f.apply(x)? - f.apply(y)?;
        let dw = w.apply(x)? - w.apply(y)?;
        Ok(df.dot(&dw) / (x - y).norm_squared())
    })?;
    Ok(ratios.into_iter().fold(f64::INFINITY, f64::min))
}

/// `max ‖f(x)-f(y)‖ / ‖x-y‖` over the plan's pairs (a lower bound on the true constant).
pub fn sample_lipschitz<F: Map + ?Sized>(f: &F, plan: &SamplingPlan) -> Result<f64> {
    let ratios = sample_ratios(plan, f.dim(), |x, y| {
        Ok((f.apply(x)? - f.apply(y)?).norm() / (x - y).norm())
    })?;
    Ok(ratios.into_iter().fold(0.0, f64::max))
}

const PSEUDO_SLACK: f64 = 1e-12;
const MAX_WITNESSES: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct PseudoReport {
    /// Ordered pairs examined (each sampled pair is tested both ways).
    pub checked: usize,
    pub violations: usize,
    /// Up to 16 ordered pairs `(x, y)` that violate the implication.
    pub witnesses: Vec<(Vector, Vector)>,
}

/// Counts ordered pairs where `⟨f(x), w(y)-w(x)⟩ >= 0` holds but `⟨f(y), w(y)-w(x)⟩ >= 0` fails.
pub fn check_pseudo_pair<F: Map + ?Sized, W: Map + ?Sized>(
    f: &F,
    w: &W,
    plan: &SamplingPlan,
) -> Result<PseudoReport> {
    check_dim(f.dim(), w.dim())?;
    let pairs = plan.pairs(f.dim())?;
    let flags: Vec<[bool; 2]> = pairs
        .par_iter()
        .map(|(x, y)| {
            let (fx, fy) = (f.apply(x)?, f.apply(y)?);
            let dw = w.apply(y)? - w.apply(x)?;
            let violates = |fa: &Vector, fb: &Vector, d: &Vector| {
                fa.dot(d) >= -PSEUDO_SLACK && fb.dot(d) < -PSEUDO_SLACK
            };
            Ok([violates(&fx, &fy, &dw), violates(&fy, &fx, &(-&dw))])
        })
        .collect::<Result<_>>()?;
    let mut report = PseudoReport {
        checked: 2 * pairs.len(),
        violations: 0,
        witnesses: Vec::new(),
    };
    for ((x, y), [forward, backward]) in pairs.iter().zip(flags) {
        for (hit, a, b) in [(forward, x, y), (backward, y, x)] {
            if hit {
                report.violations += 1;
                if report.witnesses.len() < MAX_WITNESSES {
                    report.witnesses.push((a.clone(), b.clone()));
                }
            }
        }
    }
    Ok(report)
}

/// Strong-monotonicity modulus `γ/(1+l)²` of `f ∘ (Id - v)^{-1}` given a `γ`-strongly
/// monotone pair `(f, Id - v)` and an `l`-Lipschitz `v`.
pub fn composition_modulus_bound(gamma: f64, l: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::Domain(format!("gamma must be positive, got {gamma}")));
    }
    if !(l >= 0.0) {
        return Err(Error::Domain(format!("l must be nonnegative, got {l}")));
    }
    Ok(gamma / ((1.0 + l) * (1.0 + l)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Declared,
    Spectral,
    Sampled,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Declared => "declared",
            Source::Spectral => "spectral",
            Source::Sampled => "sampled",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constant {
    pub value: f64,
    pub source: Source,
}

impl Constant {
    pub fn new(value: f64, source: Source) -> Self {
        Self { value, source }
    }
}

/// The constants `L`, `l`, `l̃`, `γ`, `μ` with their provenance.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProblemConstants {
    /// Lipschitz constant of `f`.
    pub lipschitz_f: Option<Constant>,
    /// Lipschitz constant of `v`.
    pub lipschitz_v: Option<Constant>,
    /// Lipschitz constant of `(Id - v)^{-1}`.
    pub lipschitz_inverse: Option<Constant>,
    /// Modulus of the pair `(f, Id - v)`.
    pub gamma: Option<Constant>,
    /// Strong-monotonicity modulus of `f`.
    pub mu: Option<Constant>,
}

impl ProblemConstants {
    /// Keeps only strictly positive finite entries.
    pub fn sanitized(mut self) -> Self {
        for slot in [
            &mut self.lipschitz_f,
            &mut self.lipschitz_v,
            &mut self.lipschitz_inverse,
            &mut self.gamma,
            &mut self.mu,
        ] {
            if slot.is_some_and(|c| !(c.value > 0.0 && c.value.is_finite())) {
                *slot = None;
            }
        }
        self
    }

    /// `γ` scaled down by [`GAMMA_SAFETY`] when sampled.
    pub fn safe_gamma(&self) -> Option<f64> {
        self.gamma.map(|c| match c.source {
            Source::Sampled => GAMMA_SAFETY * c.value,
            _ => c.value,
        })
    }

    /// `L` scaled up by [`LIPSCHITZ_SAFETY`] when sampled.
    pub fn safe_lipschitz_f(&self) -> Option<f64> {
        self.lipschitz_f.map(|c| safe_upper(c))
    }

    pub fn safe_lipschitz_v(&self) -> Option<f64> {
        self.lipschitz_v.map(|c| safe_upper(c))
    }

    pub fn safe_lipschitz_inverse(&self) -> Option<f64> {
        self.lipschitz_inverse.map(|c| safe_upper(c))
    }

    /// `α = γ/(1+l)²` when both constants are known.
    pub fn alpha(&self) -> Option<f64> {
        let gamma = self.safe_gamma()?;
        let l = self.safe_lipschitz_v()?;
        composition_modulus_bound(gamma, l).ok()
    }

    /// Rate `κ = sqrt(1 - α²/(L² l̃²))` for the step `h = α/(L² l̃²)`.
    pub fn kappa(&self) -> Option<f64> {
        let alpha = self.alpha()?;
        let big_l = self.safe_lipschitz_f()?;
        let lt = self.safe_lipschitz_inverse()?;
        Some((1.0 - (alpha * alpha) / (big_l * big_l * lt * lt)).max(0.0).sqrt())
    }

    /// Rate `ρ = sqrt(1 - γ²/(L²(1+l)²))` for the step `h = γ/L²`.
    pub fn rho(&self) -> Option<f64> {
        let gamma = self.safe_gamma()?;
        let big_l = self.safe_lipschitz_f()?;
        let l = self.safe_lipschitz_v()?;
        let q = gamma / (big_l * (1.0 + l));
        Some((1.0 - q * q).max(0.0).sqrt())
    }
}

fn safe_upper(c: Constant) -> f64 {
    match c.source {
        Source::Sampled => LIPSCHITZ_SAFETY * c.value,
        _ => c.value,
    }
}

/// Fills every constant the problem does not declare, preferring exact spectral
/// values for linear maps and falling back to sampling.
pub fn estimate_constants(problem: &QviProblem, plan: &SamplingPlan) -> Result<ProblemConstants> {
    let declared = problem.constants().clone().sanitized();
    let f = problem.f();
    let v = problem.v();
    let n = problem.dim();
    let w = FnMap::new(n, |x: &Vector| Ok(x - v.eval(x)?));

    let lipschitz_f = match declared.lipschitz_f {
        Some(c) => Some(c),
        None => Some(match (f.declared_lipschitz(), f.as_matrix()) {
            (Some(l), _) => Constant::new(l, Source::Declared),
            (None, Some(m)) => Constant::new(operator_norm(m), Source::Spectral),
            (None, None) => Constant::new(sample_lipschitz(f, plan)?, Source::Sampled),
        }),
    };
    let lipschitz_v = match declared.lipschitz_v {
        Some(c) => Some(c),
        None => Some(match (v.declared_lipschitz(), v.as_matrix()) {
            (Some(l), _) => Constant::new(l, Source::Declared),
            (None, Some(m)) => Constant::new(operator_norm(m), Source::Spectral),
            (None, None) => Constant::new(sample_lipschitz(v, plan)?, Source::Sampled),
        }),
    };
    let lipschitz_inverse = match declared.lipschitz_inverse {
        Some(c) => Some(c),
        None => {
            let spec = problem.inverse();
            let source = if spec.inverse_lipschitz_is_sampled() {
                Source::Sampled
            } else {
                Source::Spectral
            };
            Some(Constant::new(spec.lipschitz_of_inverse()?, source))
        }
    };
    let gamma = match declared.gamma {
        Some(c) => Some(c),
        None => Some(match (f.as_matrix(), v.as_matrix()) {
            (Some(fm), Some(vm)) => {
                let w = Matrix::identity(n, n) - vm;
                Constant::new(pair_modulus_linear(fm, &w)?, Source::Spectral)
            }
            _ => Constant::new(sample_pair_modulus(f, &w, plan)?, Source::Sampled),
        }),
    };
    let mu = match declared.mu {
        Some(c) => Some(c),
        None => Some(match f.as_matrix() {
            Some(m) => Constant::new(linear_monotonicity_modulus(m), Source::Spectral),
            None => Constant::new(
                sample_pair_modulus(f, &crate::field::Identity(n), plan)?,
                Source::Sampled,
            ),
        }),
    };
    Ok(ProblemConstants {
        lipschitz_f,
        lipschitz_v,
        lipschitz_inverse,
        gamma,
        mu,
    }
    .sanitized())
}
