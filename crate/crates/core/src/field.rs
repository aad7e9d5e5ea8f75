//! Vector fields `R^n -> R^n` and the [`Map`] abstraction the estimators and
//! solvers evaluate through.

use crate::error::{check_dim, Error, Result};
use crate::expr::{BinOp, Expr, Expression};
use crate::{Matrix, Vector};

/// Anything that maps `R^n` to `R^n`.
pub trait Map: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &Vector) -> Result<Vector>;
}

pub(crate) fn check_finite(x: &Vector) -> Result<()> {
    match x.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::NonFinite(i)),
        None => Ok(()),
    }
}

fn check_output(y: Vector) -> Result<Vector> {
    match y.iter().position(|v| !v.is_finite()) {
        Some(component) => Err(Error::Eval {
            component,
            message: "non-finite result".into(),
        }),
        None => Ok(y),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FieldRepr {
    /// One expression per output component.
    Components(Vec<Expression>),
    /// `matrix * x + remainder(x)`.
    Split {
        matrix: Matrix,
        remainder: Option<Box<VectorField>>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    dim: usize,
    repr: FieldRepr,
    declared_lipschitz: Option<f64>,
}

impl VectorField {
    pub fn from_components(components: Vec<Expression>) -> Result<Self> {
        let dim = components.len();
        if dim == 0 {
            return Err(Error::Config("vector field needs at least one component".into()));
        }
        for c in &components {
            check_dim(dim, c.dim())?;
        }
        Ok(Self {
            dim,
            repr: FieldRepr::Components(components),
            declared_lipschitz: None,
        })
    }

    /// Parses one expression per component; the dimension is the number of strings.
    pub fn parse<S: AsRef<str>>(components: &[S]) -> Result<Self> {
        let dim = components.len();
        let exprs = components
            .iter()
            .map(|s| Expression::parse(s.as_ref(), dim))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Self::from_components(exprs)
    }

    pub fn linear(matrix: Matrix) -> Result<Self> {
        Self::split(matrix, None)
    }

    pub fn split(matrix: Matrix, remainder: Option<VectorField>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::Config(format!(
                "linear part must be a non-empty square matrix, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("linear part has non-finite entries".into()));
        }
        let dim = matrix.nrows();
        if let Some(r) = &remainder {
            check_dim(dim, r.dim)?;
        }
        Ok(Self {
            dim,
            repr: FieldRepr::Split {
                matrix,
                remainder: remainder.map(Box::new),
            },
            declared_lipschitz: None,
        })
    }

    pub fn zero(dim: usize) -> Self {
        Self::linear(Matrix::zeros(dim, dim)).expect("zero matrix is valid")
    }

    pub fn identity(dim: usize) -> Self {
        Self::linear(Matrix::identity(dim, dim)).expect("identity is valid")
    }

    pub fn with_lipschitz(mut self, lipschitz: f64) -> Self {
        self.declared_lipschitz = Some(lipschitz);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn repr(&self) -> &FieldRepr {
        &self.repr
    }

    pub fn declared_lipschitz(&self) -> Option<f64> {
        self.declared_lipschitz
    }

    /// Matrix of the split form, if any.
    pub fn linear_part(&self) -> Option<&Matrix> {
        match &self.repr {
            FieldRepr::Split { matrix, .. } => Some(matrix),
            FieldRepr::Components(_) => None,
        }
    }

    pub fn remainder(&self) -> Option<&VectorField> {
        match &self.repr {
            FieldRepr::Split { remainder, .. } => remainder.as_deref(),
            FieldRepr::Components(_) => None,
        }
    }

    /// The matrix when the field is exactly linear (split form, no remainder).
    pub fn as_matrix(&self) -> Option<&Matrix> {
        match &self.repr {
            FieldRepr::Split {
                matrix,
                remainder: None,
            } => Some(matrix),
            _ => None,
        }
    }

    /// True when the field is identically zero in split form.
    pub fn is_zero(&self) -> bool {
        self.as_matrix().is_some_and(|m| m.iter().all(|v| *v == 0.0))
    }

    pub fn eval(&self, x: &Vector) -> Result<Vector> {
        check_dim(self.dim, x.len())?;
        check_finite(x)?;
        self.eval_unchecked(x)
    }

    fn eval_unchecked(&self, x: &Vector) -> Result<Vector> {
        match &self.repr {
            FieldRepr::Components(exprs) => {
                let xs = x.as_slice();
                let mut out = Vector::zeros(self.dim);
                for (i, e) in exprs.iter().enumerate() {
                    out[i] = e.eval(xs).map_err(|err| Error::Eval {
                        component: i,
                        message: err.message,
                    })?;
                }
                Ok(out)
            }
            FieldRepr::Split { matrix, remainder } => {
                let lin = check_output(matrix * x)?;
                match remainder {
                    Some(r) => check_output(lin + r.eval_unchecked(x)?),
                    None => Ok(lin),
                }
            }
        }
    }

    /// Builds `Id - self`. Used to turn a map `w` into the displacement `v = Id - w`.
    pub fn identity_minus(&self) -> VectorField {
        let repr = match &self.repr {
            FieldRepr::Components(exprs) => FieldRepr::Components(
                exprs
                    .iter()
                    .enumerate()
                    .map(|(i, e)| {
                        Expression::from_ast(
                            Expr::Binary(BinOp::Sub, Box::new(Expr::Var(i)), Box::new(e.ast().clone())),
                            self.dim,
                        )
                    })
                    .collect(),
            ),
            FieldRepr::Split { matrix, remainder } => FieldRepr::Split {
                matrix: Matrix::identity(self.dim, self.dim) - matrix,
                remainder: remainder.as_ref().map(|r| Box::new(r.negated())),
            },
        };
        VectorField {
            dim: self.dim,
            repr,
            declared_lipschitz: None,
        }
    }

    fn negated(&self) -> VectorField {
        let repr = match &self.repr {
            FieldRepr::Components(exprs) => FieldRepr::Components(
                exprs
                    .iter()
                    .map(|e| Expression::from_ast(Expr::Neg(Box::new(e.ast().clone())), self.dim))
                    .collect(),
            ),
            FieldRepr::Split { matrix, remainder } => FieldRepr::Split {
                matrix: -matrix,
                remainder: remainder.as_ref().map(|r| Box::new(r.negated())),
            },
        };
        VectorField {
            dim: self.dim,
            repr,
            declared_lipschitz: self.declared_lipschitz,
        }
    }
}

impl Map for VectorField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &Vector) -> Result<Vector> {
        self.eval(x)
    }
}

/// Identity map on `R^n`.
#[derive(Debug, Clone, Copy)]
pub struct Identity(pub usize);

impl Map for Identity {
    fn dim(&self) -> usize {
        self.0
    }

    fn apply(&self, x: &Vector) -> Result<Vector> {
        check_dim(self.0, x.len())?;
        Ok(x.clone())
    }
}

/// Adapts a closure into a [`Map`].
pub struct FnMap<F> {
    dim: usize,
    f: F,
}

impl<F> FnMap<F>
where
    F: Fn(&Vector) -> Result<Vector> + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> Map for FnMap<F>
where
    F: Fn(&Vector) -> Result<Vector> + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &Vector) -> Result<Vector> {
        check_dim(self.dim, x.len())?;
        (self.f)(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    fn example_one_f() -> VectorField {
        let rem = VectorField::parse(&["0.5*cos(x2)^3", "0.7*sin(x1)"]).unwrap();
        VectorField::split(dmatrix![3.0, 1.0; 1.0, 4.0], Some(rem)).unwrap()
    }

    #[test]
    fn example_one_f_at_origin() {
        let y = example_one_f().eval(&dvector![0.0, 0.0]).unwrap();
        assert_eq!(y, dvector![0.5, 0.0]);
    }

    #[test]
    fn zero_field() {
        let z = VectorField::zero(3);
        assert_eq!(z.eval(&dvector![1.0, -2.0, 3.0]).unwrap(), Vector::zeros(3));
        assert!(z.is_zero());
    }

    #[test]
    fn remark_five_f_at_origin() {
        let f = VectorField::parse(&["-x1 + (1/3)*sin(x1)"]).unwrap();
        assert_eq!(f.eval(&dvector![0.0]).unwrap()[0], 0.0);
    }

    #[test]
    fn split_matches_composition_bitwise() {
        let f = example_one_f();
        let m = f.linear_part().unwrap().clone();
        let r = f.remainder().unwrap().clone();
        for x in [dvector![0.3, -1.7], dvector![12.5, 3.25], dvector![-0.001, 7.0]] {
            let direct = f.eval(&x).unwrap();
            let composed = &m * &x + r.eval(&x).unwrap();
            for (a, b) in direct.iter().zip(composed.iter()) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn dimension_and_finiteness_checks() {
        let f = example_one_f();
        assert!(matches!(
            f.eval(&dvector![1.0]),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        ));
        assert!(matches!(f.eval(&dvector![f64::NAN, 0.0]), Err(Error::NonFinite(0))));
    }

    #[test]
    fn overflow_names_component() {
        let f = VectorField::parse(&["x1", "x2*x2*x2"]).unwrap();
        match f.eval(&dvector![1.0, 1e200]) {
            Err(Error::Eval { component, .. }) => assert_eq!(component, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn identity_minus_round_trip() {
        let w = example_one_f();
        let v = w.identity_minus();
        let x = dvector![0.4, -2.0];
        let lhs = &x - v.eval(&x).unwrap();
        let rhs = w.eval(&x).unwrap();
        assert!((lhs - rhs).norm() < 1e-14);

        let w = VectorField::parse(&["x1 + sin(x2)", "2*x2"]).unwrap();
        let v = w.identity_minus();
        let lhs = &x - v.eval(&x).unwrap();
        assert!((lhs - w.eval(&x).unwrap()).norm() < 1e-14);
    }
}
