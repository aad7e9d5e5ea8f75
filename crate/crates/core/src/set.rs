use crate::error::{check_dim, Error, Result};
use crate::field::check_finite;
use crate::Vector;

/// Closed convex sets with a closed-form projection.
#[derive(Debug, Clone, PartialEq)]
pub enum ConvexSet {
    WholeSpace(usize),
    NonnegativeOrthant(usize),
    Box { lower: Vector, upper: Vector },
}

impl ConvexSet {
    pub fn boxed(lower: Vector, upper: Vector) -> Result<Self> {
        check_dim(lower.len(), upper.len())?;
        if lower.is_empty() {
            return Err(Error::InvalidSet("box must have dimension >= 1".into()));
        }
        for i in 0..lower.len() {
            if !lower[i].is_finite() || !upper[i].is_finite() {
                return Err(Error::InvalidSet(format!("bound {i} is not finite")));
            }
            if lower[i] > upper[i] {
                return Err(Error::InvalidSet(format!(
                    "lower[{i}] = {} exceeds upper[{i}] = {}",
                    lower[i], upper[i]
                )));
            }
        }
        Ok(ConvexSet::Box { lower, upper })
    }

    /// The cube `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::boxed(Vector::from_element(dim, lo), Vector::from_element(dim, hi))
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexSet::WholeSpace(n) | ConvexSet::NonnegativeOrthant(n) => *n,
            ConvexSet::Box { lower, .. } => lower.len(),
        }
    }

    pub fn contains(&self, z: &Vector) -> bool {
        if z.len() != self.dim() {
            return false;
        }
        match self {
            ConvexSet::WholeSpace(_) => true,
            ConvexSet::NonnegativeOrthant(_) => z.iter().all(|v| *v >= 0.0),
            ConvexSet::Box { lower, upper } => {
                (0..z.len()).all(|i| lower[i] <= z[i] && z[i] <= upper[i])
            }
        }
    }

    pub fn project(&self, z: &Vector) -> Result<Vector> {
        check_dim(self.dim(), z.len())?;
        check_finite(z)?;
        Ok(match self {
            ConvexSet::WholeSpace(_) => z.clone(),
            ConvexSet::NonnegativeOrthant(_) => z.map(|v| v.max(0.0)),
            ConvexSet::Box { lower, upper } => {
                Vector::from_iterator(z.len(), (0..z.len()).map(|i| z[i].clamp(lower[i], upper[i])))
            }
        })
    }
}

pub fn project(set: &ConvexSet, z: &Vector) -> Result<Vector> {
    set.project(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn example_one_box() -> ConvexSet {
        ConvexSet::cube(2, -30.0, 40.0).unwrap()
    }

    #[test]
    fn box_clamps() {
        let p = example_one_box().project(&dvector![50.0, -50.0]).unwrap();
        assert_eq!(p, dvector![40.0, -30.0]);
        let p = example_one_box().project(&dvector![6.0, 2.0]).unwrap();
        assert_eq!(p, dvector![6.0, 2.0]);
    }

    #[test]
    fn orthant_and_whole_space() {
        let p = ConvexSet::NonnegativeOrthant(1).project(&dvector![-3.0]).unwrap();
        assert_eq!(p, dvector![0.0]);
        let z = dvector![-3.0, 4.0];
        assert_eq!(ConvexSet::WholeSpace(2).project(&z).unwrap(), z);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let err = example_one_box().project(&dvector![1.0]).unwrap_err();
        assert_eq!(err, Error::DimensionMismatch { expected: 2, found: 1 });
    }

    #[test]
    fn invalid_boxes_rejected() {
        assert!(ConvexSet::boxed(dvector![1.0], dvector![0.0]).is_err());
        assert!(ConvexSet::boxed(dvector![f64::NEG_INFINITY], dvector![0.0]).is_err());
        assert!(ConvexSet::boxed(dvector![0.0, 0.0], dvector![1.0]).is_err());
    }

    fn sets() -> Vec<ConvexSet> {
        vec![
            ConvexSet::WholeSpace(3),
            ConvexSet::NonnegativeOrthant(3),
            ConvexSet::boxed(dvector![-1.0, 0.0, 2.0], dvector![1.0, 0.5, 7.0]).unwrap(),
        ]
    }

    fn random_vec(rng: &mut ChaCha8Rng, scale: f64) -> Vector {
        Vector::from_fn(3, |_, _| rng.random_range(-scale..scale))
    }

    #[test]
    fn idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for set in sets() {
            for _ in 0..1000 {
                let z = random_vec(&mut rng, 20.0);
                let p = set.project(&z).unwrap();
                assert!(set.contains(&p));
                assert_eq!(set.project(&p).unwrap(), p);
            }
        }
    }

    #[test]
    fn nonexpansive() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for set in sets() {
            for _ in 0..1000 {
                let a = random_vec(&mut rng, 20.0);
                let b = random_vec(&mut rng, 20.0);
                let d = (set.project(&a).unwrap() - set.project(&b).unwrap()).norm();
                assert!(d <= (&a - &b).norm() + 1e-12);
            }
        }
    }

    #[test]
    fn variational_characterization() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for set in sets() {
            for _ in 0..100 {
                let z = random_vec(&mut rng, 20.0);
                let p = set.project(&z).unwrap();
                for _ in 0..100 {
                    let c = set.project(&random_vec(&mut rng, 10.0)).unwrap();
                    assert!((&z - &p).dot(&(c - &p)) <= 1e-12);
                }
            }
        }
    }
}
