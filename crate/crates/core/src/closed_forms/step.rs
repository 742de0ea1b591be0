//! Piecewise-constant `ω = p_k` on `[x_k, x_{k+1})`, `x_0 = −∞`.
//!
//! `𝒲_0(x, y) = W^(p_0)(x − y)` and
//! `𝒲_{k+1}(x, y) = 𝒲_k(x, y) + (p_{k+1} − p_k) ∫_{x_{k+1} ∨ y}^x W^(p_{k+1})(x − z) 𝒲_k(z, y) dz`;
//! `𝒵` follows the same recursion from `Z^(p_0)(x − y)`.

use crate::error::{Error, Result};
use crate::levy_model::LevyModel;
use crate::polyexp::Piecewise;

use super::closed_pair;

/// `x ↦ 𝒲^(ω)(x, y)` and `x ↦ 𝒵^(ω)(x, y)` for a step `ω`, exact for closed-form models.
#[derive(Debug, Clone)]
pub struct StepScale {
    pub y: f64,
    w: Piecewise,
    z: Piecewise,
}

impl StepScale {
    pub fn new(model: &LevyModel, p: &[f64], xs: &[f64], y: f64) -> Result<Self> {
        if p.len() != xs.len() + 1 {
            return Err(Error::Domain(format!(
                "step needs len(p) = len(x) + 1, got {} and {}",
                p.len(),
                xs.len()
            )));
        }
        if !p.iter().all(|&v| v >= 0.0 && v.is_finite()) {
            return Err(Error::Domain("step levels must be finite and >= 0".into()));
        }
        if !xs.windows(2).all(|w| w[1] >= w[0]) || !y.is_finite() {
            return Err(Error::Ordering("step locations must be nondecreasing".into()));
        }
        let (w0, z0) = closed_pair(model, p[0])?;
        let mut w = Piecewise::from_start(0.0, y, w0.shift(y));
        let mut z = Piecewise::from_start(1.0, y, z0.shift(y));
        for (k, &xk) in xs.iter().enumerate() {
            let dp = p[k + 1] - p[k];
            if dp == 0.0 {
                continue;
            }
            let (kernel, _) = closed_pair(model, p[k + 1])?;
            let lower = xk.max(y);
            w = w.add(&w.conv_from(&kernel, lower).scale(dp));
            z = z.add(&z.conv_from(&kernel, lower).scale(dp));
        }
        Ok(Self { y, w, z })
    }

    pub fn w(&self, x: f64) -> f64 {
        self.w.eval(x)
    }

    pub fn z(&self, x: f64) -> f64 {
        self.z.eval(x)
    }

    pub fn w_piecewise(&self) -> &Piecewise {
        &self.w
    }

    pub fn z_piecewise(&self) -> &Piecewise {
        &self.z
    }
}

/// `(𝒲_n(x, y), 𝒵_n(x, y))`.
pub fn step_recursion(model: &LevyModel, p: &[f64], xs: &[f64], x: f64, y: f64) -> Result<(f64, f64)> {
    let s = StepScale::new(model, p, xs, y)?;
    Ok((s.w(x), s.z(x)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical_scale::ClassicalScale;
    use crate::closed_forms::BandScale;

    fn bm() -> LevyModel {
        LevyModel::brownian(1.0, 2f64.sqrt()).unwrap()
    }

    #[test]
    fn no_steps_is_classical() {
        let m = bm();
        let c = ClassicalScale::new(&m, 0.4).unwrap();
        for &x in &[0.0, 0.3, 1.7] {
            let (w, z) = step_recursion(&m, &[0.4], &[], x + 0.5, 0.5).unwrap();
            assert!((w - c.w(x)).abs() < 1e-13);
            assert!((z - c.z(x)).abs() < 1e-13);
        }
    }

    #[test]
    fn single_step_is_band_without_upper_end() {
        for m in [bm(), LevyModel::cramer_lundberg(1.5, 1.0, 2.0).unwrap()] {
            let band = BandScale::new(&m, 0.3, 0.9, 0.6).unwrap();
            let s = StepScale::new(&m, &[0.3, 1.2], &[0.6], 0.0).unwrap();
            for i in 0..40 {
                let x = i as f64 * 0.07;
                assert!((s.w(x) - band.w(x)).abs() <= 1e-10 * band.w(x).abs().max(1.0));
                assert!((s.z(x) - band.z(x)).abs() <= 1e-10 * band.z(x).abs().max(1.0));
            }
        }
    }

    #[test]
    fn start_above_steps_uses_top_level() {
        let m = bm();
        let c = ClassicalScale::new(&m, 0.8).unwrap();
        let s = StepScale::new(&m, &[0.1, 0.5, 0.8], &[-1.0, 0.2], 0.4).unwrap();
        assert!((s.w(1.4) - c.w(1.0)).abs() < 1e-12);
        assert_eq!(s.w(0.3), 0.0);
        assert_eq!(s.z(0.3), 1.0);
    }
}
