//! Analytic special cases: occupation-time (band) `ω`, the Omega model,
//! exponential `ω` with self-similar exit laws, and step `ω`.
//!
//! They serve as end-user features and as independent oracles for the
//! generic renewal solver.

pub mod band;
pub mod omega_model;
pub mod selfsim;
pub mod step;

pub use band::{band_composites, band_h, band_two_arg, band_w, band_z, BandComposite, BandScale};
pub use omega_model::{omega_model_bankruptcy, OmegaModelSolution};
pub use selfsim::{perpetual_exponential_functional, SelfSimilarBm, SelfSimilarCl};
pub use step::{step_recursion, StepScale};

use crate::classical_scale::ClassicalScale;
use crate::error::{Error, Result};
use crate::levy_model::LevyModel;
use crate::polyexp::PolyExp;

/// `(W^(q), Z^(q))` as exponential polynomials; closed-form models only.
pub(crate) fn closed_pair(model: &LevyModel, q: f64) -> Result<(PolyExp, PolyExp)> {
    let s = ClassicalScale::new(model, q)?;
    match (s.w_polyexp(), s.z_polyexp()) {
        (Some(w), Some(z)) => Ok((w.clone(), z.clone())),
        _ => Err(Error::UnsupportedModel("closed forms need a Brownian or Cramér–Lundberg model".into())),
    }
}
