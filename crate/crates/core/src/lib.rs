//! Strain spectra of continuum rods: Lie-group kinematics, geometric
//! variable-strain statics and dynamics, discrete strain Fourier
//! transforms and sparse strain-basis identification.

// Negated float comparisons are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fitting;
pub mod gvs;
pub mod liealg;
pub mod pipeline;
pub mod rodmodel;
pub mod spectra;

pub use error::{Error, Result};
pub use liealg::{Pose, ScrewVector};
