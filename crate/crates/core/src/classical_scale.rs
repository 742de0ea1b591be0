//! Classical scale functions `W^(q)`, `Z^(q)` and `W^(q)'`.
//!
//! Both closed-form families have `1/(ψ(θ) - q)` rational with two real poles,
//! so `W^(q)` is a two-term exponential polynomial (or `x e^{rx}` in the
//! confluent case). Derivatives are right-derivatives; for the
//! Cramér–Lundberg family `W^(q)'` jumps at zero.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::levy_model::{parse_cell, LevyModel};
use crate::polyexp::{ExpTerm, PolyExp};

/// Roots closer than this are merged into the confluent branch.
const CONFLUENT_TOL: f64 = 1e-9;

/// `W^(q)`, `Z^(q)` and `W^(q)'` of one model at one killing rate.
#[derive(Debug, Clone)]
pub struct ClassicalScale {
    q: f64,
    repr: Repr,
}

#[derive(Debug, Clone)]
enum Repr {
    Closed { w: PolyExp, z: PolyExp, wprime: PolyExp },
    Table(Arc<ScaleTable>),
}

impl ClassicalScale {
    pub fn new(model: &LevyModel, q: f64) -> Result<Self> {
        if !(q >= 0.0 && q.is_finite()) {
            return Err(Error::Domain(format!("killing rate must be >= 0, got {q}")));
        }
        let w = match *model {
            LevyModel::BrownianDrift { mu, sigma } => brownian_w(mu, sigma, q),
            LevyModel::CramerLundberg { mu, vartheta, rho } => cramer_lundberg_w(mu, vartheta, rho, q),
            LevyModel::Tabulated(ref t) => {
                if (t.scale.q - q).abs() > 1e-12 * q.max(1.0) {
                    return Err(Error::UnsupportedModel(format!(
                        "table holds W^(q) for q = {}, requested q = {q}",
                        t.scale.q
                    )));
                }
                return Ok(Self {
                    q,
                    repr: Repr::Table(Arc::new(t.scale.clone())),
                });
            }
        };
        let z = PolyExp::constant(1.0).add(&w.antiderivative_from(0.0).scale(q));
        let wprime = w.derivative();
        Ok(Self {
            q,
            repr: Repr::Closed { w, z, wprime },
        })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// Exponential-polynomial form of `W^(q)` on `[0, ∞)`, when available.
    pub fn w_polyexp(&self) -> Option<&PolyExp> {
        match &self.repr {
            Repr::Closed { w, .. } => Some(w),
            Repr::Table(_) => None,
        }
    }

    pub fn z_polyexp(&self) -> Option<&PolyExp> {
        match &self.repr {
            Repr::Closed { z, .. } => Some(z),
            Repr::Table(_) => None,
        }
    }

    /// Largest `x` at which the functions can be evaluated.
    pub fn x_limit(&self) -> f64 {
        match &self.repr {
            Repr::Closed { .. } => f64::INFINITY,
            Repr::Table(t) => t.x_max(),
        }
    }

    /// `W^(q)(x)`, zero for `x < 0`.
    #[inline]
    pub fn w(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        match &self.repr {
            Repr::Closed { w, .. } => w.eval(x),
            Repr::Table(t) => t.interp(&t.w, x),
        }
    }

    /// `W^(q)(0)`.
    pub fn w0(&self) -> f64 {
        self.w(0.0)
    }

    /// `Z^(q)(x)`, one for `x ≤ 0`.
    pub fn z(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        match &self.repr {
            Repr::Closed { z, .. } => z.eval(x),
            Repr::Table(t) => t.interp(&t.z, x),
        }
    }

    /// Right-derivative `W^(q)'(x+)`; zero for `x < 0`.
    pub fn wprime(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        match &self.repr {
            Repr::Closed { wprime, .. } => wprime.eval(x),
            Repr::Table(t) => t.interp(&t.wprime, x),
        }
    }

    pub(crate) fn check_range(&self, x: f64) -> Result<()> {
        if x > self.x_limit() * (1.0 + 1e-12) {
            return Err(Error::UnsupportedModel(format!(
                "x = {x} beyond tabulated grid (x_max = {})",
                self.x_limit()
            )));
        }
        Ok(())
    }
}

/// Real roots `r_1 ≥ r_2` of `a s² + b s + c`, computed without cancellation.
fn quadratic_roots(a: f64, b: f64, c: f64) -> (f64, f64) {
    let disc = (b * b - 4.0 * a * c).max(0.0).sqrt();
    if disc == 0.0 {
        let r = -b / (2.0 * a);
        return (r, r);
    }
    let t = -0.5 * (b + b.signum() * disc);
    let (u, v) = if t == 0.0 { (0.0, 0.0) } else { (t / a, c / t) };
    if u >= v {
        (u, v)
    } else {
        (v, u)
    }
}

fn brownian_w(mu: f64, sigma: f64, q: f64) -> PolyExp {
    if sigma == 0.0 {
        return PolyExp::exp(1.0 / mu, q / mu);
    }
    let s2 = sigma * sigma;
    let (r1, r2) = quadratic_roots(0.5 * s2, mu, -q);
    let k = 2.0 / s2;
    if (r1 - r2).abs() <= CONFLUENT_TOL * r1.abs().max(1.0) {
        let r = 0.5 * (r1 + r2);
        PolyExp::from_terms(vec![ExpTerm::new(k, 1, r)])
    } else {
        let c = k / (r1 - r2);
        PolyExp::from_terms(vec![ExpTerm::new(c, 0, r1), ExpTerm::new(-c, 0, r2)])
    }
}

fn cramer_lundberg_w(mu: f64, vartheta: f64, rho: f64, q: f64) -> PolyExp {
    let vs = rho - vartheta / mu;
    // ψ(s) - q = [μ s² + (μς - q) s - qρ] / (s + ρ)
    let (r1, r2) = quadratic_roots(mu, mu * vs - q, -q * rho);
    if (r1 - r2).abs() <= CONFLUENT_TOL * r1.abs().max(1.0) {
        let r = 0.5 * (r1 + r2);
        PolyExp::from_terms(vec![
            ExpTerm::new(1.0 / mu, 0, r),
            ExpTerm::new((r + rho) / mu, 1, r),
        ])
    } else {
        let a = (r1 + rho) / (r1 - r2);
        let b = (r2 + rho) / (r2 - r1);
        PolyExp::from_terms(vec![ExpTerm::new(a / mu, 0, r1), ExpTerm::new(b / mu, 0, r2)])
    }
}

/// `W^(q)(x)`.
pub fn w_q(model: &LevyModel, q: f64, x: f64) -> Result<f64> {
    let s = ClassicalScale::new(model, q)?;
    s.check_range(x)?;
    Ok(s.w(x))
}

/// `Z^(q)(x) = 1 + q ∫_0^x W^(q)`.
pub fn z_q(model: &LevyModel, q: f64, x: f64) -> Result<f64> {
    let s = ClassicalScale::new(model, q)?;
    s.check_range(x)?;
    Ok(s.z(x))
}

/// Right-derivative of `W^(q)` at `x ≥ 0`.
pub fn w_q_prime(model: &LevyModel, q: f64, x: f64) -> Result<f64> {
    if x < 0.0 {
        return Err(Error::Domain(format!("W' requested at x = {x} < 0")));
    }
    let s = ClassicalScale::new(model, q)?;
    s.check_range(x)?;
    Ok(s.wprime(x))
}

/// `W^(q)`, `Z^(q)`, `W^(q)'` sampled on `x_i = i h`, `i = 0..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleTable {
    pub h: f64,
    pub x: Vec<f64>,
    pub w: Vec<f64>,
    pub z: Vec<f64>,
    pub wprime: Vec<f64>,
    pub q: f64,
}

impl ScaleTable {
    pub fn new(h: f64, w: Vec<f64>, z: Vec<f64>, wprime: Vec<f64>, q: f64) -> Result<Self> {
        let n = w.len();
        if n < 2 || z.len() != n || wprime.len() != n {
            return Err(Error::Table("scale table columns must have equal length >= 2".into()));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Table(format!("grid step must be positive, got {h}")));
        }
        let tol = 1e-12;
        if w.windows(2).any(|p| p[1] < p[0] - tol * p[0].abs().max(1.0)) {
            return Err(Error::Table("w column must be nondecreasing".into()));
        }
        if (z[0] - 1.0).abs() > 1e-9 {
            return Err(Error::Table(format!("z(0) must be 1, got {}", z[0])));
        }
        if q >= 0.0 && z.windows(2).any(|p| p[1] < p[0] - tol * p[0].abs().max(1.0)) {
            return Err(Error::Table("z column must be nondecreasing".into()));
        }
        let x = (0..n).map(|i| i as f64 * h).collect();
        Ok(Self { h, x, w, z, wprime, q })
    }

    /// Samples the closed form of `model` on `[0, x_max]`.
    pub fn from_model(model: &LevyModel, q: f64, x_max: f64, h: f64) -> Result<Self> {
        let s = ClassicalScale::new(model, q)?;
        let n = (x_max / h).round() as usize;
        let xs: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
        Self::new(
            h,
            xs.iter().map(|&x| s.w(x)).collect(),
            xs.iter().map(|&x| s.z(x)).collect(),
            xs.iter().map(|&x| s.wprime(x)).collect(),
            q,
        )
    }

    /// Reads a CSV with header `x,w,z,wprime` on a uniform grid starting at 0.
    pub fn from_csv_path(path: &Path, q: f64) -> Result<Self> {
        let rdr = csv::Reader::from_path(path)
            .map_err(|e| Error::Table(format!("{}: {e}", path.display())))?;
        Self::from_csv_reader(rdr, q).map_err(|e| match e {
            Error::Table(m) => Error::Table(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn from_csv_reader<R: std::io::Read>(mut rdr: csv::Reader<R>, q: f64) -> Result<Self> {
        let headers: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
        if headers != ["x", "w", "z", "wprime"] {
            return Err(Error::Table(format!(
                "expected header `x,w,z,wprime`, found `{}`",
                headers.join(",")
            )));
        }
        let (mut x, mut w, mut z, mut wp) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for rec in rdr.records() {
            let rec = rec?;
            if rec.len() != 4 {
                return Err(Error::Table(format!("row has {} fields, expected 4", rec.len())));
            }
            x.push(parse_cell(&rec[0])?);
            w.push(parse_cell(&rec[1])?);
            z.push(parse_cell(&rec[2])?);
            wp.push(parse_cell(&rec[3])?);
        }
        if x.len() < 2 {
            return Err(Error::Table("scale table needs at least two rows".into()));
        }
        if x[0].abs() > 1e-12 {
            return Err(Error::Table(format!("grid must start at 0, starts at {}", x[0])));
        }
        let h = x[1] - x[0];
        for (i, &xi) in x.iter().enumerate() {
            if (xi - i as f64 * h).abs() > 1e-9 * xi.abs().max(1.0) {
                return Err(Error::Table(format!("grid is not uniform at row {i} (x = {xi})")));
            }
        }
        Self::new(h, w, z, wp, q)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["x", "w", "z", "wprime"])?;
        for i in 0..self.x.len() {
            wtr.write_record([
                crate::io::fmt_num(self.x[i]),
                crate::io::fmt_num(self.w[i]),
                crate::io::fmt_num(self.z[i]),
                crate::io::fmt_num(self.wprime[i]),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn w0(&self) -> f64 {
        self.w[0]
    }

    pub fn x_max(&self) -> f64 {
        self.x[self.x.len() - 1]
    }

    fn interp(&self, col: &[f64], x: f64) -> f64 {
        let n = col.len();
        let t = x / self.h;
        let i = (t.floor() as usize).min(n - 2);
        let f = t - i as f64;
        col[i] + f * (col[i + 1] - col[i])
    }
}
