//! Piecewise-affine regression and classification over a polyhedral
//! partition, with a mixed-integer encoding of the fitted predictor.

pub mod config;
pub mod data;
pub mod error;
pub mod linalg;
pub mod mip;
pub mod parc;
pub mod predictor;
pub mod solvers;
pub mod synth;

pub use error::{ParcError, Result};
