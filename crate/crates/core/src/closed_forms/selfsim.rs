//! `ω(x) = ϱ e^{−ξx}`: Bessel forms for linear Brownian motion and Kummer
//! forms for the Cramér–Lundberg model.

use crate::error::{Error, Result};
use crate::levy_model::LevyModel;
use crate::special_fn::{bessel_i, bessel_k, gamma_fn, kummer_1f1, SeriesControl};

/// Distance from an integer below which an order counts as integral.
const INTEGER_TOL: f64 = 1e-8;

fn near_integer(v: f64) -> bool {
    (v - v.round()).abs() <= INTEGER_TOL
}

/// Linear Brownian motion `σB_t + μt`, `ψ(s) = D s (s + R)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfSimilarBm {
    pub varrho: f64,
    pub xi: f64,
    pub mu: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub beta: f64,
    pub d: f64,
    pub r: f64,
    ctl: SeriesControl,
}

impl SelfSimilarBm {
    pub fn new(varrho: f64, xi: f64, mu: f64, sigma: f64) -> Result<Self> {
        if !(varrho > 0.0 && xi > 0.0 && sigma > 0.0 && mu.is_finite()) {
            return Err(Error::Domain(format!(
                "need varrho, xi, sigma > 0, got {varrho}, {xi}, {sigma}"
            )));
        }
        let d = 0.5 * sigma * sigma;
        let r = 2.0 * mu / (sigma * sigma);
        let alpha = r / xi;
        if near_integer(alpha) {
            return Err(Error::IntegerOrder(alpha));
        }
        Ok(Self {
            varrho,
            xi,
            mu,
            sigma,
            alpha,
            beta: 2.0 * varrho.sqrt() / (xi * d.sqrt()),
            d,
            r,
            ctl: SeriesControl::default(),
        })
    }

    pub fn from_model(model: &LevyModel, varrho: f64, xi: f64) -> Result<Self> {
        match *model {
            LevyModel::BrownianDrift { mu, sigma } => Self::new(varrho, xi, mu, sigma),
            _ => Err(Error::UnsupportedModel("Bessel forms need a Brownian model".into())),
        }
    }

    fn i(&self, v: f64, z: f64) -> Result<f64> {
        bessel_i(v, z, &self.ctl)
    }

    fn gg(&self) -> Result<f64> {
        Ok(gamma_fn(1.0 + self.alpha)? * gamma_fn(1.0 - self.alpha)?)
    }

    /// `𝒲^(ω)(x, y)`; `y = 0` gives `𝒲^(ω)(x)`.
    pub fn w_two_arg(&self, x: f64, y: f64) -> Result<f64> {
        if x < y {
            return Ok(0.0);
        }
        let (a, b) = (self.alpha, self.beta);
        let by = b * (-self.xi * y / 2.0).exp();
        let bx = b * (-self.xi * x / 2.0).exp();
        let bracket = self.i(a, by)? * self.i(-a, bx)? - self.i(-a, by)? * self.i(a, bx)?;
        Ok(self.gg()? / (self.d * self.r) * (-self.r * x / 2.0 + self.xi * a * y / 2.0).exp() * bracket)
    }

    pub fn w(&self, x: f64) -> Result<f64> {
        self.w_two_arg(x, 0.0)
    }

    pub fn z(&self, x: f64) -> Result<f64> {
        if x < 0.0 {
            return Ok(1.0);
        }
        let (a, b) = (self.alpha, self.beta);
        let bx = b * (-self.xi * x / 2.0).exp();
        let bracket = self.i(a - 1.0, b)? * self.i(-a, bx)? - self.i(1.0 - a, b)? * self.i(a, bx)?;
        Ok(self.varrho.sqrt() * self.gg()? / (self.r * self.d.sqrt()) * (-self.r * x / 2.0).exp() * bracket)
    }
}

/// `E_x[exp(−ϱ ∫_0^∞ e^{−ξ(σB_t + μt)} dt)] = (2/Γ(α)) (βe^{−ξx/2}/2)^α K_α(βe^{−ξx/2})`.
pub fn perpetual_exponential_functional(varrho: f64, xi: f64, mu: f64, sigma: f64, x: f64) -> Result<f64> {
    if !(mu > 0.0) {
        return Err(Error::Domain(format!("the functional is finite only for mu > 0, got {mu}")));
    }
    let s = SelfSimilarBm::new(varrho, xi, mu, sigma)?;
    let z = s.beta * (-xi * x / 2.0).exp();
    Ok(2.0 / gamma_fn(s.alpha)? * (z / 2.0).powf(s.alpha) * bessel_k(s.alpha, z, &s.ctl)?)
}

/// Drift minus compound Poisson with exponential jumps,
/// `ψ(s) = μ s (s + ς)/(s + ρ)`, `ς = ρ − ϑ/μ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfSimilarCl {
    pub varrho: f64,
    pub xi: f64,
    pub mu: f64,
    pub rho: f64,
    pub varsigma: f64,
    ctl: SeriesControl,
}

impl SelfSimilarCl {
    pub fn new(varrho: f64, xi: f64, mu: f64, vartheta: f64, rho: f64) -> Result<Self> {
        if !(varrho > 0.0 && xi > 0.0 && mu > 0.0 && vartheta >= 0.0 && rho > 0.0) {
            return Err(Error::Domain("need varrho, xi, mu, rho > 0 and vartheta >= 0".into()));
        }
        let varsigma = rho - vartheta / mu;
        for v in [varsigma / xi, rho / xi] {
            if near_integer(v) {
                return Err(Error::IntegerOrder(v));
            }
        }
        Ok(Self {
            varrho,
            xi,
            mu,
            rho,
            varsigma,
            ctl: SeriesControl::default(),
        })
    }

    pub fn from_model(model: &LevyModel, varrho: f64, xi: f64) -> Result<Self> {
        match *model {
            LevyModel::CramerLundberg { mu, vartheta, rho } => Self::new(varrho, xi, mu, vartheta, rho),
            _ => Err(Error::UnsupportedModel("Kummer forms need a Cramér–Lundberg model".into())),
        }
    }

    fn m(&self, a: f64, b: f64, z: f64) -> Result<f64> {
        kummer_1f1(a, b, z, &self.ctl)
    }

    fn k(&self) -> f64 {
        self.varrho / (self.mu * self.xi)
    }

    pub fn w(&self, x: f64) -> Result<f64> {
        if x < 0.0 {
            return Ok(0.0);
        }
        let (xi, rho, vs, mu) = (self.xi, self.rho, self.varsigma, self.mu);
        let k = self.k();
        let e = -k * (-xi * x).exp();
        let first = rho / (vs * mu) * self.m((xi + rho) / xi, (xi + vs) / xi, k)? * self.m((xi - rho) / xi, (xi - vs) / xi, e)?;
        let second = (vs - rho) / (vs * mu)
            * (-vs * x).exp()
            * self.m((xi + rho - vs) / xi, (xi - vs) / xi, k)?
            * self.m((xi + vs - rho) / xi, (xi + vs) / xi, e)?;
        Ok(first + second)
    }

    pub fn z(&self, x: f64) -> Result<f64> {
        if x < 0.0 {
            return Ok(1.0);
        }
        let (xi, rho, vs, mu) = (self.xi, self.rho, self.varsigma, self.mu);
        let k = self.k();
        let e = -k * (-xi * x).exp();
        let first = self.m(rho / xi, vs / xi, k)? * self.m((xi - rho) / xi, (xi - vs) / xi, e)?;
        let c2 = (vs - rho) * self.varrho / (vs * mu * (xi - vs)) * self.m((xi + rho - vs) / xi, (2.0 * xi - vs) / xi, k)?;
        let second = c2 * (-vs * x).exp() * self.m((xi + vs - rho) / xi, (xi + vs) / xi, e)?;
        Ok(first + second)
    }
}
