//! Tensor calculus on a single coordinate chart.
//!
//! The crate computes the Leibniz coboundary of arbitrary (not necessarily
//! antisymmetric) k-tensors in two independent ways, builds the Levi-Civita
//! apparatus of a metric, and evaluates first variations of tensor
//! functionals over curves and squares. Everything is expressed through the
//! symbolic [`expr::Expr`] type so that derived quantities can be
//! differentiated again exactly.

pub mod cli;
pub mod error;
pub mod expr;
pub mod fields;
pub mod leibniz;
pub mod quadrature;
pub mod riemann;
pub mod sampling;
pub mod variation;
pub mod verify;

pub use error::{Error, Result};
pub use expr::{parse_expr, Expr};
pub use fields::{Chart, MultiIndex, Point, ScalarField, TensorField, VectorField};
