//! Inverse scattering transform for the Toda lattice with steplike initial
//! data.
//!
//! The lattice `ȧ_n = (a_n/2)(b_{n+1} − b_n)`, `ḃ_n = a_n² − a_{n−1}²` is
//! solved two ways: directly, by time stepping on a finite window
//! ([`direct`]), and spectrally, by mapping the initial state to scattering
//! data ([`forward`]), evolving the data in closed form ([`flow`]) and
//! reconstructing the lattice ([`inverse`]). [`pipeline`] ties the pieces
//! together and compares the two answers.

// `!(x > tol)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod direct;
pub mod error;
pub mod flow;
pub mod forward;
pub mod inverse;
pub mod lattice;
mod linalg;
pub mod pipeline;
mod spline;

pub use error::{Result, Stage, TodaError};
pub use lattice::{LatticeState, SteplikeProfileSpec, Window};
