//! Scale functions of spectrally negative Lévy processes killed at a
//! state-dependent rate `ω`.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classical_scale;
pub mod cli;
pub mod closed_forms;
pub mod error;
pub mod fluctuation;
pub mod io;
pub mod levy_model;
pub mod mc_oracle;
pub mod omega_scale;
pub mod polyexp;
pub mod special_fn;
pub mod volterra;

pub use classical_scale::{w_q, w_q_prime, z_q, ClassicalScale, ScaleTable};
pub use error::{Error, Result};
pub use levy_model::{LevyModel, ModelSpec, PhiTable};
