//! `ω = p + q 1_{(a,b)}`: occupation times of an interval.

use crate::error::{Error, Result};
use crate::levy_model::LevyModel;
use crate::polyexp::{Piecewise, PolyExp};

use super::closed_pair;

/// `𝒲_a^(p,q)`, `𝒵_a^(p,q)` and `ℋ^(p,q)` as piecewise exponential polynomials.
#[derive(Debug, Clone)]
pub struct BandScale {
    pub p: f64,
    pub q: f64,
    pub a: f64,
    w_p: PolyExp,
    z_p: PolyExp,
    w_pq: PolyExp,
    z_pq: PolyExp,
    w_a: Piecewise,
    z_a: Piecewise,
    h: Piecewise,
}

impl BandScale {
    /// `a < 0` is allowed and gives `𝒲_a = W^(p+q)`.
    pub fn new(model: &LevyModel, p: f64, q: f64, a: f64) -> Result<Self> {
        if !(p >= 0.0 && q >= 0.0 && a.is_finite()) {
            return Err(Error::Domain(format!("band needs p, q >= 0 and finite a, got {p}, {q}, {a}")));
        }
        let (w_p, z_p) = closed_pair(model, p)?;
        let (w_pq, z_pq) = closed_pair(model, p + q)?;
        let a0 = a.max(0.0);
        let w_a = Piecewise::new(
            vec![f64::NEG_INFINITY, 0.0, a0],
            vec![PolyExp::zero(), w_p.clone(), w_p.add(&w_pq.conv_from(&w_p, a0).scale(q))],
        );
        let z_a = Piecewise::new(
            vec![f64::NEG_INFINITY, 0.0, a0],
            vec![PolyExp::constant(1.0), z_p.clone(), z_p.add(&w_pq.conv_from(&z_p, a0).scale(q))],
        );
        let phi = model.phi_inverse(p)?;
        let inner = w_pq.mul_exp(-phi).antiderivative_from(0.0).scale(q).add(&PolyExp::constant(1.0));
        let h = Piecewise::new(
            vec![f64::NEG_INFINITY, 0.0],
            vec![PolyExp::exp(1.0, phi), inner.mul_exp(phi)],
        );
        Ok(Self {
            p,
            q,
            a,
            w_p,
            z_p,
            w_pq,
            z_pq,
            w_a,
            z_a,
            h,
        })
    }

    pub fn w(&self, x: f64) -> f64 {
        self.w_a.eval(x)
    }

    pub fn z(&self, x: f64) -> f64 {
        self.z_a.eval(x)
    }

    pub fn h(&self, x: f64) -> f64 {
        self.h.eval(x)
    }

    /// `W^(p+q)(x) − q ∫_0^a W^(p+q)(x−y) W^(p)(y) dy`.
    pub fn w_first_form(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        let upper = self.a.max(0.0).min(x);
        self.w_pq.eval(x) - self.q * self.w_pq.conv_between(&self.w_p, 0.0, upper).eval(x)
    }

    /// `Z^(p+q)(x) − q ∫_0^a W^(p+q)(x−y) Z^(p)(y) dy`.
    pub fn z_first_form(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 1.0;
        }
        let upper = self.a.max(0.0).min(x);
        self.z_pq.eval(x) - self.q * self.w_pq.conv_between(&self.z_p, 0.0, upper).eval(x)
    }

    pub fn w_piecewise(&self) -> &Piecewise {
        &self.w_a
    }

    pub fn z_piecewise(&self) -> &Piecewise {
        &self.z_a
    }

    pub fn h_piecewise(&self) -> &Piecewise {
        &self.h
    }

    pub(crate) fn w_p(&self) -> &PolyExp {
        &self.w_p
    }
}

/// `𝒲_a^(p,q)(x)`.
pub fn band_w(model: &LevyModel, p: f64, q: f64, a: f64, x: f64) -> Result<f64> {
    Ok(BandScale::new(model, p, q, a)?.w(x))
}

/// `𝒵_a^(p,q)(x)`.
pub fn band_z(model: &LevyModel, p: f64, q: f64, a: f64, x: f64) -> Result<f64> {
    Ok(BandScale::new(model, p, q, a)?.z(x))
}

/// `ℋ^(p,q)(x)`.
pub fn band_h(model: &LevyModel, p: f64, q: f64, x: f64) -> Result<f64> {
    Ok(BandScale::new(model, p, q, 0.0)?.h(x))
}

/// `𝒲^(ω)`, `𝒵^(ω)` (and `ℋ^(ω)` when `a = 0`) for `ω = p + q 1_{(a,b)}`.
#[derive(Debug, Clone)]
pub struct BandComposite {
    pub p: f64,
    pub q: f64,
    pub a: f64,
    pub b: f64,
    w: Piecewise,
    z: Piecewise,
    h: Option<Piecewise>,
    phi_p: f64,
    phi_prime_p: f64,
}

impl BandComposite {
    pub fn new(model: &LevyModel, p: f64, q: f64, a: f64, b: f64) -> Result<Self> {
        if !(a >= 0.0 && b > a) {
            return Err(Error::Domain(format!("band composite needs 0 <= a < b, got a = {a}, b = {b}")));
        }
        let base = BandScale::new(model, p, q, a)?;
        let correct = |f: &Piecewise| -> Piecewise {
            if b.is_finite() {
                f.add(&f.conv_from(base.w_p(), b).scale(-q))
            } else {
                f.clone()
            }
        };
        let w = correct(base.w_piecewise());
        let z = correct(base.z_piecewise());
        let h = (a == 0.0).then(|| correct(base.h_piecewise()));
        Ok(Self {
            p,
            q,
            a,
            b,
            w,
            z,
            h,
            phi_p: model.phi_inverse(p)?,
            phi_prime_p: model.phi_prime(p)?,
        })
    }

    pub fn w(&self, x: f64) -> f64 {
        self.w.eval(x)
    }

    pub fn z(&self, x: f64) -> f64 {
        self.z.eval(x)
    }

    /// `ℋ^(ω)(x)`; present only for `a = 0`.
    pub fn h(&self, x: f64) -> Option<f64> {
        self.h.as_ref().map(|h| h.eval(x))
    }

    pub fn w_piecewise(&self) -> &Piecewise {
        &self.w
    }
}

/// `(𝒲^(ω)(x), 𝒵^(ω)(x))` for `ω = p + q 1_{(a,b)}`.
pub fn band_composites(model: &LevyModel, p: f64, q: f64, a: f64, b: f64, x: f64) -> Result<(f64, f64)> {
    let c = BandComposite::new(model, p, q, a, b)?;
    Ok((c.w(x), c.z(x)))
}

/// `(𝒲^(ω)(x, y), 𝒵^(ω)(x, y))` for `ω = p + q 1_{(a,b)}`, `a ≥ 0`: the
/// band seen from `y` is `(max(a−y, 0), b−y)`.
pub fn band_two_arg(model: &LevyModel, p: f64, q: f64, a: f64, b: f64, x: f64, y: f64) -> Result<(f64, f64)> {
    if x < y {
        return Ok((0.0, 1.0));
    }
    let b_y = b - y;
    if b_y <= 0.0 {
        let (w, z) = closed_pair(model, p)?;
        return Ok((w.eval(x - y), z.eval(x - y)));
    }
    band_composites(model, p, q, (a - y).max(0.0), b_y, x - y)
}

impl BandComposite {
    /// `Θ(x, y)` for `a = 0`, `p > 0`, finite `b`: the unkilled potential density.
    pub fn theta(&self, model: &LevyModel, x: f64, y: f64) -> Result<f64> {
        let hx = self.h(x).ok_or_else(|| Error::Domain("theta needs a = 0".into()))?;
        if !(self.p > 0.0 && self.b.is_finite()) {
            return Err(Error::Domain("theta needs p > 0 and a finite band".into()));
        }
        let phi = self.phi_p;
        let shifted = BandScale::new(model, self.p, self.q, -y)?;
        let lo = y.max(0.0);
        let num = (-phi * y).exp()
            + if self.b > lo {
                self.q * shifted.w_piecewise().shift(y).mul_exp(-phi).integral(lo, self.b)
            } else {
                0.0
            };
        let hpq = BandScale::new(model, self.p, self.q, 0.0)?;
        let den = 1.0 / self.phi_prime_p + self.q * hpq.h_piecewise().mul_exp(-phi).integral(0.0, self.b);
        let (wxy, _) = band_two_arg(model, self.p, self.q, self.a, self.b, x, y)?;
        Ok(num / den * hx - wxy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical_scale::ClassicalScale;

    fn models() -> [LevyModel; 2] {
        [
            LevyModel::brownian(1.0, 2f64.sqrt()).unwrap(),
            LevyModel::cramer_lundberg(1.0, 1.0, 2.0).unwrap(),
        ]
    }

    #[test]
    fn below_a_and_zero_q() {
        for m in models() {
            let s = BandScale::new(&m, 0.3, 1.0, 0.5).unwrap();
            let wp = ClassicalScale::new(&m, 0.3).unwrap();
            for x in [0.0, 0.2, 0.5] {
                assert!((s.w(x) - wp.w(x)).abs() < 1e-14);
                assert!((s.z(x) - wp.z(x)).abs() < 1e-14);
            }
            let s0 = BandScale::new(&m, 0.3, 0.0, 0.5).unwrap();
            for x in [0.7, 1.9] {
                assert!((s0.w(x) - wp.w(x)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn two_forms_agree() {
        for m in models() {
            let s = BandScale::new(&m, 0.3, 1.0, 0.5).unwrap();
            for i in 0..50 {
                let x = 0.06 * i as f64;
                assert!((s.w(x) - s.w_first_form(x)).abs() <= 1e-10 * s.w(x).max(1.0), "x = {x}");
                assert!((s.z(x) - s.z_first_form(x)).abs() <= 1e-10 * s.z(x).max(1.0), "x = {x}");
            }
        }
    }

    #[test]
    fn negative_a_is_killed_scale() {
        let m = &models()[0];
        let s = BandScale::new(m, 0.3, 1.0, -0.4).unwrap();
        let w = ClassicalScale::new(m, 1.3).unwrap();
        for x in [0.1, 1.0, 2.0] {
            assert!((s.w(x) - w.w(x)).abs() < 1e-12);
            assert!((s.z(x) - w.z(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn composite_unchanged_below_b() {
        for m in models() {
            let s = BandScale::new(&m, 0.3, 1.0, 0.5).unwrap();
            let c = BandComposite::new(&m, 0.3, 1.0, 0.5, 1.2).unwrap();
            for x in [0.3, 0.9, 1.2] {
                assert!((c.w(x) - s.w(x)).abs() < 1e-13);
                assert!((c.z(x) - s.z(x)).abs() < 1e-13);
            }
            assert!(c.w(2.0) < s.w(2.0));
        }
    }

    #[test]
    fn h_composite_for_constant_band() {
        // q on (0, ∞): ℋ^(ω) = e^{Φ(p+q) x} would need floor p + q, so
        // check the defining renewal equation of ℋ^(p,q) instead
        let m = &models()[0];
        let s = BandScale::new(m, 0.5, 1.0, 0.0).unwrap();
        let w = ClassicalScale::new(m, 0.5).unwrap();
        let phi = m.phi_inverse(0.5).unwrap();
        for x in [0.4, 1.3] {
            let n = 20_000;
            let hh = x / n as f64;
            let mut conv = 0.0;
            for i in 0..=n {
                let z = i as f64 * hh;
                let wt = if i == 0 || i == n { 0.5 } else { 1.0 };
                conv += wt * w.w(x - z) * s.h(z);
            }
            let rhs = (phi * x).exp() + 1.0 * conv * hh;
            assert!((s.h(x) - rhs).abs() < 1e-6 * s.h(x));
        }
    }
}
