//! Differentiable photoresist simulation and calibration.
//!
//! The pipeline maps an aerial image to a binary resist pattern in three
//! stages: Dill exposure of the photoactive compound, the Mack dissolution
//! rate, and development either column by column or with fast marching.
//! [`gradcal`] fits the model parameters to wafer patterns with Adam and
//! [`evalkit`] scores predictions against threshold baselines.

pub mod develop;
pub mod config;
pub mod error;
pub mod evalkit;
pub mod exposure;
pub mod gradcal;
pub mod grids;
pub mod io;
pub mod pipeline;
pub mod synth;
pub mod workflow;

pub use error::{ResistError, Result};
