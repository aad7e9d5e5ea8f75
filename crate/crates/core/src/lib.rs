//! Projection solvers for quasi-variational inequalities
//! `0 ∈ f(x) + N_{K(x)}(x)` whose constraint set is a translate `K(x) = C + v(x)`
//! of a fixed closed convex set.

pub mod analysis;
pub mod error;
pub mod expr;
pub mod field;
pub mod inverse;
pub mod library;
pub mod model;
pub mod problem_file;
pub mod set;
pub mod solvers;

pub use error::{Error, Result};

pub type Vector = nalgebra::DVector<f64>;
pub type Matrix = nalgebra::DMatrix<f64>;
