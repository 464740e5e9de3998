//! Equilibrium search on Riemannian manifolds by tracing generalized isoclines.
//!
//! A generalized isocline is a curve along which the direction of a vector
//! field `X` is parallel-transported. Starting from a regular point the tracer
//! follows the one-dimensional kernel of `∇Y`, `Y = X / sqrt(g(X, X))`, until
//! the field vanishes. Charts come either from closed-form atlases
//! ([`manifolds`]) or are learned from sampled point clouds ([`learn`]).

pub mod chart;
pub mod error;
pub mod field;
pub mod geometry;
pub mod learn;
pub mod manifolds;
pub mod sampling;
pub mod tracer;

pub use error::{Error, Result};
