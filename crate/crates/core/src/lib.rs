//! Difference and differential-difference variational calculus with moving
//! frames: Euler–Lagrange operators, invariantization, Maurer–Cartan
//! invariants, invariant Euler–Lagrange equations and Noether conservation
//! laws, all checked numerically.

pub mod calculus;
pub mod catalog;
pub mod error;
pub mod expr;
pub mod frame;
pub mod group;
pub mod harness;
pub mod variational;

pub use error::{Error, Result};
pub use expr::{parse, Expr, FieldId, FieldVar, Shift, Signature};
