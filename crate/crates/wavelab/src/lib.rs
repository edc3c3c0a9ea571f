//! Wave interaction and cancellation estimates for scalar conservation laws.
//!
//! The crate solves Riemann problems for a piecewise affine flux sampled on a
//! uniform value grid, runs wavefront tracking and the Glimm scheme on step
//! data while following every wave, evaluates interaction potentials built on
//! convex and concave envelopes, and checks the interaction and cancellation
//! bounds event by event.

pub mod batch;
pub mod corpus;
pub mod datum;
pub mod envelope;
pub mod error;
pub mod glimm;
pub mod potentials;
pub mod riemann;
pub mod verifier;
pub mod wft;

pub use error::{Error, Result};
