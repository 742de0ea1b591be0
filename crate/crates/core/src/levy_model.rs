//! Spectrally negative Lévy models: Laplace exponent and its right inverse.

use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;

use crate::classical_scale::ScaleTable;
use crate::error::{Error, Result};

const PHI_MAX_ITER: usize = 200;

/// The process family.
#[derive(Debug, Clone, PartialEq)]
pub enum LevyModel {
    /// `X_t = x + σ B_t + μ t`.
    BrownianDrift { mu: f64, sigma: f64 },
    /// `X_t = x + μ t - Σ_{i ≤ N_t} U_i`, `N` Poisson(ϑ), `U_i ~ Exp(ρ)`.
    CramerLundberg { mu: f64, vartheta: f64, rho: f64 },
    /// A user-supplied scale table together with a table of Φ.
    Tabulated(Arc<TabulatedModel>),
}

/// Externally computed scale functions; no Laplace exponent is available.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedModel {
    pub scale: ScaleTable,
    pub phi: PhiTable,
}

impl LevyModel {
    pub fn brownian(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() || !sigma.is_finite() || sigma < 0.0 {
            return Err(Error::InvalidModel(format!("mu = {mu}, sigma = {sigma}")));
        }
        if sigma == 0.0 && mu <= 0.0 {
            return Err(Error::InvalidModel(
                "zero volatility with non-positive drift is the negative of a subordinator".into(),
            ));
        }
        Ok(Self::BrownianDrift { mu, sigma })
    }

    pub fn cramer_lundberg(mu: f64, vartheta: f64, rho: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::InvalidModel(format!("premium drift must be positive, got {mu}")));
        }
        if !(vartheta >= 0.0 && vartheta.is_finite()) {
            return Err(Error::InvalidModel(format!("jump intensity must be >= 0, got {vartheta}")));
        }
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::InvalidModel(format!("jump rate must be positive, got {rho}")));
        }
        Ok(Self::CramerLundberg { mu, vartheta, rho })
    }

    pub fn tabulated(scale: ScaleTable, phi: PhiTable) -> Self {
        Self::Tabulated(Arc::new(TabulatedModel { scale, phi }))
    }

    /// `ς = ρ - ϑ/μ` for Cramér–Lundberg models.
    pub fn safety(&self) -> Option<f64> {
        match *self {
            Self::CramerLundberg { mu, vartheta, rho } => Some(rho - vartheta / mu),
            _ => None,
        }
    }

    /// Value `W(0)` of every scale function of the model.
    pub fn w_at_zero(&self) -> f64 {
        match self {
            Self::BrownianDrift { mu, sigma } => {
                if *sigma == 0.0 {
                    1.0 / mu
                } else {
                    0.0
                }
            }
            Self::CramerLundberg { mu, .. } => 1.0 / mu,
            Self::Tabulated(t) => t.scale.w0(),
        }
    }

    /// Laplace exponent `ψ(θ) = log E[e^{θ X_1}]`.
    pub fn psi(&self, theta: f64) -> Result<f64> {
        if theta < 0.0 || theta.is_nan() {
            return Err(Error::Domain(format!("psi requires theta >= 0, got {theta}")));
        }
        self.psi_unchecked(theta)
    }

    fn psi_unchecked(&self, s: f64) -> Result<f64> {
        match *self {
            Self::BrownianDrift { mu, sigma } => Ok(0.5 * sigma * sigma * s * s + mu * s),
            Self::CramerLundberg { mu, vartheta, rho } => {
                let vs = rho - vartheta / mu;
                Ok(mu * s * (s + vs) / (s + rho))
            }
            Self::Tabulated(_) => Err(Error::UnsupportedModel(
                "tabulated models carry no Laplace exponent".into(),
            )),
        }
    }

    /// `ψ'(θ)`.
    pub fn psi_prime(&self, theta: f64) -> Result<f64> {
        if theta < 0.0 || theta.is_nan() {
            return Err(Error::Domain(format!("psi' requires theta >= 0, got {theta}")));
        }
        match *self {
            Self::BrownianDrift { mu, sigma } => Ok(sigma * sigma * theta + mu),
            Self::CramerLundberg { mu, vartheta, rho } => {
                Ok(mu - vartheta * rho / ((theta + rho) * (theta + rho)))
            }
            Self::Tabulated(_) => Err(Error::UnsupportedModel(
                "tabulated models carry no Laplace exponent".into(),
            )),
        }
    }

    /// `E[X_1] = ψ'(0+)`; positive iff the process drifts to +∞.
    pub fn mean_drift(&self) -> Result<f64> {
        self.psi_prime(0.0)
    }

    /// Right-continuous inverse `Φ(q) = inf{s > 0 : ψ(s) > q}`.
    pub fn phi_inverse(&self, q: f64) -> Result<f64> {
        if q < 0.0 || q.is_nan() {
            return Err(Error::Domain(format!("Phi requires q >= 0, got {q}")));
        }
        if let Self::Tabulated(t) = self {
            return t.phi.phi(q);
        }
        // ψ is convex with ψ(0) = 0; start the bracket at its minimiser on [0, ∞).
        let lo = if self.psi_prime(0.0)? >= 0.0 {
            0.0
        } else {
            self.argmin_psi()?
        };
        if q == 0.0 && lo == 0.0 {
            return Ok(0.0);
        }
        let mut hi = lo.max(1.0);
        let mut guard = 0;
        while self.psi_unchecked(hi)? <= q {
            hi *= 2.0;
            guard += 1;
            if guard > 1100 || !hi.is_finite() {
                return Err(Error::NoConvergence {
                    what: format!("bracketing Phi({q})"),
                    iterations: guard,
                });
            }
        }
        self.newton_bisect(q, lo, hi)
    }

    fn argmin_psi(&self) -> Result<f64> {
        let mut lo = 0.0;
        let mut hi = 1.0;
        while self.psi_prime(hi)? < 0.0 {
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(Error::NoConvergence {
                    what: "bracketing argmin psi".into(),
                    iterations: 0,
                });
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.psi_prime(mid)? < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Newton from the right end of `[lo, hi]` (monotone for convex ψ), bisection as fallback.
    fn newton_bisect(&self, q: f64, mut lo: f64, mut hi: f64) -> Result<f64> {
        let tol = 1e-12 * q.max(1.0);
        let mut s = hi;
        for _ in 0..PHI_MAX_ITER {
            let f = self.psi_unchecked(s)? - q;
            if f.abs() <= tol {
                return Ok(s);
            }
            if f > 0.0 {
                hi = s;
            } else {
                lo = s;
            }
            let d = self.psi_prime(s)?;
            let mut next = s - f / d;
            if !(next > lo && next < hi) || !next.is_finite() {
                next = 0.5 * (lo + hi);
            }
            if next == s {
                // cannot move any more; accept the tighter of the two ends
                return Ok(s);
            }
            s = next;
        }
        Err(Error::NoConvergence {
            what: format!("Phi({q})"),
            iterations: PHI_MAX_ITER,
        })
    }

    /// `Φ'(q) = 1 / ψ'(Φ(q))`.
    pub fn phi_prime(&self, q: f64) -> Result<f64> {
        if let Self::Tabulated(t) = self {
            return t.phi.slope(q);
        }
        let s = self.phi_inverse(q)?;
        let d = self.psi_prime(s)?;
        if d <= 0.0 {
            return Err(Error::Domain(format!("psi'(Phi({q})) = {d} is not positive")));
        }
        Ok(1.0 / d)
    }

    /// Parses the CLI's JSON model object.
    pub fn from_json(v: &serde_json::Value, base: Option<&Path>) -> Result<Self> {
        let spec: ModelSpec = serde_json::from_value(v.clone())
            .map_err(|e| Error::Config(format!("model: {e}")))?;
        spec.build(base)
    }
}

/// Wire form of a model in job configs.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", deny_unknown_fields)]
pub enum ModelSpec {
    #[serde(rename = "bm")]
    Brownian { mu: f64, sigma: f64 },
    #[serde(rename = "cl")]
    CramerLundberg { mu: f64, vartheta: f64, rho: f64 },
    #[serde(rename = "table")]
    Table {
        scale_csv: String,
        phi_csv: String,
        #[serde(default)]
        q: f64,
    },
}

impl ModelSpec {
    pub fn build(&self, base: Option<&Path>) -> Result<LevyModel> {
        match self {
            Self::Brownian { mu, sigma } => LevyModel::brownian(*mu, *sigma),
            Self::CramerLundberg { mu, vartheta, rho } => LevyModel::cramer_lundberg(*mu, *vartheta, *rho),
            Self::Table { scale_csv, phi_csv, q } => {
                let resolve = |p: &str| match base {
                    Some(b) if Path::new(p).is_relative() => b.join(p),
                    _ => Path::new(p).to_path_buf(),
                };
                let scale = ScaleTable::from_csv_path(&resolve(scale_csv), *q)?;
                let phi = PhiTable::from_csv_path(&resolve(phi_csv))?;
                Ok(LevyModel::tabulated(scale, phi))
            }
        }
    }
}

/// Φ on a grid of `q` values, linearly interpolated.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiTable {
    q: Vec<f64>,
    phi: Vec<f64>,
}

impl PhiTable {
    pub fn new(q: Vec<f64>, phi: Vec<f64>) -> Result<Self> {
        if q.len() != phi.len() || q.len() < 2 {
            return Err(Error::Table("phi table needs at least two rows".into()));
        }
        if !q.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::Table("phi table q column must be strictly increasing".into()));
        }
        if q[0] < 0.0 {
            return Err(Error::Table("phi table q column must be non-negative".into()));
        }
        if !phi.windows(2).all(|w| w[1] >= w[0]) {
            return Err(Error::Table("phi must be nondecreasing in q".into()));
        }
        Ok(Self { q, phi })
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)
            .map_err(|e| Error::Table(format!("{}: {e}", path.display())))?;
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["q", "phi"] {
            return Err(Error::Table(format!(
                "{}: expected header `q,phi`, found `{}`",
                path.display(),
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut q = Vec::new();
        let mut phi = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            q.push(parse_cell(&rec[0])?);
            phi.push(parse_cell(&rec[1])?);
        }
        Self::new(q, phi)
    }

    fn locate(&self, q: f64) -> Result<usize> {
        let n = self.q.len();
        if q < self.q[0] || q > self.q[n - 1] {
            return Err(Error::Domain(format!(
                "q = {q} outside phi table [{}, {}]",
                self.q[0],
                self.q[n - 1]
            )));
        }
        Ok(self.q.partition_point(|&v| v <= q).clamp(1, n - 1) - 1)
    }

    pub fn phi(&self, q: f64) -> Result<f64> {
        let i = self.locate(q)?;
        let t = (q - self.q[i]) / (self.q[i + 1] - self.q[i]);
        Ok(self.phi[i] + t * (self.phi[i + 1] - self.phi[i]))
    }

    pub fn slope(&self, q: f64) -> Result<f64> {
        let i = self.locate(q)?;
        Ok((self.phi[i + 1] - self.phi[i]) / (self.q[i + 1] - self.q[i]))
    }
}

pub(crate) fn parse_cell(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|e| Error::Table(format!("bad number `{s}`: {e}")))
}
