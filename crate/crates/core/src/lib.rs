//! Local normal forms of Poisson structures around regular submanifolds.
//!
//! The crate builds, from a Poisson bivector given by symbolic entries and a
//! parametrized submanifold, the smallest Poisson submanifold containing it
//! (swept out by the exponential map of a spray) together with an explicit
//! local model, and checks the model numerically.

pub mod error;
pub mod expr;
pub mod field;
pub mod fixtures;
pub mod linear;
pub mod model;
pub mod par;
pub mod pipeline;
pub mod report;
pub mod sampling;
pub mod scene;
pub mod sprayflow;
pub mod submanifold;

pub use error::{Error, Result};
