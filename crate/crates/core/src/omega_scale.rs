//! ω-scale functions `𝒲^(ω)`, `𝒵^(ω)`, `ℋ^(ω)`, their two-argument forms and
//! derivatives, and the `c → ∞` limit constants.
//!
//! Every object is the solution of a renewal equation with kernel `W^(δ)`;
//! `δ` is the infimum of `ω` on the solve window (or the table's `q` for
//! tabulated models, the only level at which a kernel is available).

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::classical_scale::ClassicalScale;
use crate::error::{Error, Result};
use crate::io::fmt_num;
use crate::levy_model::LevyModel;
use crate::volterra::{self, Grid, LeftExtension, Quadrature, Rate, Reflected, Shifted, VolterraProblem, VolterraSolution};

fn infinity() -> f64 {
    f64::INFINITY
}

fn is_infinite(v: &f64) -> bool {
    v.is_infinite()
}

/// The killing rate `ω`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum OmegaSpec {
    /// `ω ≡ q`.
    Constant { q: f64 },
    /// `ω = p + q 1_{(a,b)}`; a missing `b` means `+∞`.
    Band {
        p: f64,
        q: f64,
        a: f64,
        #[serde(default = "infinity", skip_serializing_if = "is_infinite")]
        b: f64,
    },
    /// `ω = (γ₀ + γ₁ (x + d)) 1_{[-d, 0]}`.
    LinearBand { gamma0: f64, gamma1: f64, d: f64 },
    /// `ω = ϱ e^{-ξ x}`.
    Exponential { varrho: f64, xi: f64 },
    /// `ω = p₀ + Σ_j (p_j - p_{j-1}) 1(x > x_j)`.
    Step { p: Vec<f64>, x: Vec<f64> },
    /// `ω = values[k]` on `[x_k, x_{k+1})`, `values[0]` below `x_0`.
    Table { x: Vec<f64>, values: Vec<f64> },
}

impl OmegaSpec {
    pub fn constant(q: f64) -> Result<Self> {
        Self::Constant { q }.validated()
    }

    pub fn band(p: f64, q: f64, a: f64, b: f64) -> Result<Self> {
        Self::Band { p, q, a, b }.validated()
    }

    pub fn linear_band(gamma0: f64, gamma1: f64, d: f64) -> Result<Self> {
        Self::LinearBand { gamma0, gamma1, d }.validated()
    }

    pub fn exponential(varrho: f64, xi: f64) -> Result<Self> {
        Self::Exponential { varrho, xi }.validated()
    }

    pub fn step(p: Vec<f64>, x: Vec<f64>) -> Result<Self> {
        Self::Step { p, x }.validated()
    }

    pub fn table(x: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::Table { x, values }.validated()
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let spec: Self = serde_json::from_value(v.clone()).map_err(|e| Error::Config(format!("omega: {e}")))?;
        spec.validated()
    }

    /// Checks the structural invariants; every constructor goes through here.
    pub fn validated(self) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidOmega(m));
        let nonneg = |v: f64| v >= 0.0 && v.is_finite();
        match &self {
            Self::Constant { q } if !nonneg(*q) => return bad(format!("q = {q}")),
            Self::Band { p, q, a, b } => {
                if !nonneg(*p) || !nonneg(*q) {
                    return bad(format!("band levels p = {p}, q = {q} must be >= 0"));
                }
                if !a.is_finite() || b.is_nan() || *b <= *a {
                    return bad(format!("band needs a < b, got a = {a}, b = {b}"));
                }
            }
            Self::LinearBand { gamma0, gamma1, d } => {
                if !nonneg(*gamma0) || !nonneg(*gamma1) {
                    return bad(format!("gamma0 = {gamma0}, gamma1 = {gamma1} must be >= 0"));
                }
                if !(*d > 0.0 && d.is_finite()) {
                    return bad(format!("d = {d} must be positive"));
                }
            }
            Self::Exponential { varrho, xi } => {
                if !nonneg(*varrho) || !(*xi > 0.0 && xi.is_finite()) {
                    return bad(format!("need varrho >= 0 and xi > 0, got {varrho}, {xi}"));
                }
            }
            Self::Step { p, x } => {
                if p.len() != x.len() + 1 {
                    return bad(format!("step needs len(p) = len(x) + 1, got {} and {}", p.len(), x.len()));
                }
                if !p.iter().all(|&v| nonneg(v)) {
                    return bad("step levels must be >= 0".into());
                }
                if !x.iter().all(|v| v.is_finite()) || !x.windows(2).all(|w| w[1] >= w[0]) {
                    return bad("step locations must be finite and nondecreasing".into());
                }
            }
            Self::Table { x, values } => {
                if x.is_empty() || x.len() != values.len() {
                    return bad("table needs equal, nonzero numbers of x and values".into());
                }
                if !values.iter().all(|&v| nonneg(v)) {
                    return bad("table values must be >= 0".into());
                }
                if !x.iter().all(|v| v.is_finite()) || !x.windows(2).all(|w| w[1] > w[0]) {
                    return bad("table grid must be finite and strictly increasing".into());
                }
            }
            _ => {}
        }
        Ok(self)
    }

    /// Jump locations and levels of a piecewise-constant `ω`: level `k` holds
    /// on `[jumps[k-1], jumps[k])`.
    fn piecewise(&self) -> Option<(&[f64], &[f64])> {
        match self {
            Self::Step { p, x } => Some((x, p)),
            Self::Table { x, values } => Some((&x[1..], values)),
            _ => None,
        }
    }

    fn level_index(jumps: &[f64], x: f64, right: bool) -> usize {
        if right {
            jumps.partition_point(|&j| j <= x)
        } else {
            jumps.partition_point(|&j| j < x)
        }
    }

    fn eval_side(&self, x: f64, right: bool) -> f64 {
        let inside = |lo: f64, hi: f64| if right { x >= lo && x < hi } else { x > lo && x <= hi };
        match self {
            Self::Constant { q } => *q,
            Self::Band { p, q, a, b } => {
                if inside(*a, *b) {
                    p + q
                } else {
                    *p
                }
            }
            Self::LinearBand { gamma0, gamma1, d } => {
                if inside(-d, 0.0) {
                    gamma0 + gamma1 * (x + d)
                } else {
                    0.0
                }
            }
            Self::Exponential { varrho, xi } => varrho * (-xi * x).exp(),
            Self::Step { .. } | Self::Table { .. } => {
                let (jumps, levels) = self.piecewise().unwrap();
                levels[Self::level_index(jumps, x, right)]
            }
        }
    }

    /// Right limit `ω(x+)`.
    pub fn value(&self, x: f64) -> f64 {
        self.eval_side(x, true)
    }

    /// Left limit `ω(x-)`.
    pub fn left_limit(&self, x: f64) -> f64 {
        self.eval_side(x, false)
    }

    /// Jump locations of `ω` in `(lo, hi)`.
    pub fn breakpoints(&self, lo: f64, hi: f64) -> Vec<f64> {
        let cand: Vec<f64> = match self {
            Self::Constant { .. } | Self::Exponential { .. } => Vec::new(),
            Self::Band { q, a, b, .. } => {
                if *q == 0.0 {
                    Vec::new()
                } else {
                    vec![*a, *b]
                }
            }
            Self::LinearBand { gamma0, gamma1, d } => {
                let mut v = Vec::new();
                if *gamma0 != 0.0 {
                    v.push(-d);
                }
                if gamma0 + gamma1 * d != 0.0 {
                    v.push(0.0);
                }
                v
            }
            Self::Step { .. } | Self::Table { .. } => {
                let (jumps, levels) = self.piecewise().unwrap();
                jumps
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| levels[k + 1] != levels[*k])
                    .map(|(_, &j)| j)
                    .collect()
            }
        };
        let mut out: Vec<f64> = cand.into_iter().filter(|&b| b > lo && b < hi && b.is_finite()).collect();
        out.dedup();
        out
    }

    /// `φ` with `ω(x) = φ` for all `x ≤ 0`, if there is one.
    pub fn floor(&self) -> Option<f64> {
        match self {
            Self::Constant { q } => Some(*q),
            Self::Band { p, q, a, .. } => (*q == 0.0 || *a >= 0.0).then_some(*p),
            Self::LinearBand { gamma0, gamma1, .. } => (*gamma0 == 0.0 && *gamma1 == 0.0).then_some(0.0),
            Self::Exponential { varrho, .. } => (*varrho == 0.0).then_some(0.0),
            Self::Step { .. } | Self::Table { .. } => {
                let (jumps, levels) = self.piecewise().unwrap();
                let first_jump = self
                    .breakpoints(f64::NEG_INFINITY, f64::INFINITY)
                    .first()
                    .copied()
                    .unwrap_or(f64::INFINITY);
                let _ = jumps;
                (first_jump >= 0.0).then_some(levels[0])
            }
        }
    }

    /// `(q, Υ)` with `ω(x) = q` for all `x ≥ Υ`; `Υ = -∞` when `ω` is constant.
    pub fn ceiling(&self) -> Option<(f64, f64)> {
        let bps = self.breakpoints(f64::NEG_INFINITY, f64::INFINITY);
        let last = bps.last().copied().unwrap_or(f64::NEG_INFINITY);
        match self {
            Self::Constant { q } => Some((*q, f64::NEG_INFINITY)),
            Self::Band { p, q, b, .. } => {
                if b.is_finite() {
                    Some((*p, last))
                } else {
                    Some((p + q, last))
                }
            }
            Self::LinearBand { .. } => Some((0.0, last.max(0.0))),
            Self::Exponential { varrho, .. } => (*varrho == 0.0).then_some((0.0, f64::NEG_INFINITY)),
            Self::Step { .. } | Self::Table { .. } => {
                let (_, levels) = self.piecewise().unwrap();
                Some((*levels.last().unwrap(), last))
            }
        }
    }

    /// `inf ω` over `[lo, hi]`.
    pub fn inf_on(&self, lo: f64, hi: f64) -> f64 {
        self.range_on(lo, hi).0
    }

    /// `sup ω` over `[lo, hi]`.
    pub fn sup_on(&self, lo: f64, hi: f64) -> f64 {
        self.range_on(lo, hi).1
    }

    fn range_on(&self, lo: f64, hi: f64) -> (f64, f64) {
        // ω is monotone between jumps for every variant, so the extremes are
        // attained among one-sided values at the ends and at the jumps
        let mut pts = vec![lo, hi];
        pts.extend(self.breakpoints(lo, hi));
        let mut mn = f64::INFINITY;
        let mut mx = f64::NEG_INFINITY;
        for &x in &pts {
            let mut vals = Vec::with_capacity(2);
            if x > lo {
                vals.push(self.left_limit(x));
            }
            if x < hi {
                vals.push(self.value(x));
            }
            if lo == hi {
                vals.push(self.value(x));
            }
            for v in vals {
                mn = mn.min(v);
                mx = mx.max(v);
            }
        }
        (mn, mx)
    }

    /// `∫_lo^hi ω(x) dx`.
    pub fn integral(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return -self.integral(hi, lo);
        }
        let overlap = |a: f64, b: f64| (hi.min(b) - lo.max(a)).max(0.0);
        match self {
            Self::Constant { q } => q * (hi - lo),
            Self::Band { p, q, a, b } => p * (hi - lo) + q * overlap(*a, *b),
            Self::LinearBand { gamma0, gamma1, d } => {
                let l = lo.max(-d);
                let u = hi.min(0.0);
                if u <= l {
                    0.0
                } else {
                    gamma0 * (u - l) + 0.5 * gamma1 * ((u + d).powi(2) - (l + d).powi(2))
                }
            }
            Self::Exponential { varrho, xi } => varrho / xi * ((-xi * lo).exp() - (-xi * hi).exp()),
            Self::Step { .. } | Self::Table { .. } => {
                let (jumps, levels) = self.piecewise().unwrap();
                let mut s = 0.0;
                for (k, &lev) in levels.iter().enumerate() {
                    let a = if k == 0 { f64::NEG_INFINITY } else { jumps[k - 1] };
                    let b = jumps.get(k).copied().unwrap_or(f64::INFINITY);
                    s += lev * overlap(a, b);
                }
                s
            }
        }
    }
}

impl Rate for OmegaSpec {
    fn value(&self, x: f64) -> f64 {
        OmegaSpec::value(self, x)
    }
    fn left_limit(&self, x: f64) -> f64 {
        OmegaSpec::left_limit(self, x)
    }
    fn breakpoints(&self, lo: f64, hi: f64) -> Vec<f64> {
        OmegaSpec::breakpoints(self, lo, hi)
    }
}

/// Grid and quadrature for the renewal solves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSettings {
    pub x_max: f64,
    pub h: f64,
    /// Shift level for `𝒲^(ω)`, `𝒵^(ω)`; by default `inf ω` on the solve window (the table's `q`
    /// for tabulated models).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip)]
    pub quadrature: Quadrature,
}

impl SolverSettings {
    pub fn new(x_max: f64, h: f64) -> Self {
        Self {
            x_max,
            h,
            delta: None,
            quadrature: Quadrature::default(),
        }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = Some(delta);
        self
    }
}

/// Settings a table was built with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Provenance {
    pub x_max: f64,
    pub h: f64,
    pub nodes: usize,
    pub delta: f64,
    pub delta_h: Option<f64>,
    pub quadrature: Quadrature,
}

enum Forcing {
    W,
    Z,
    Exp(f64),
}

/// Shift level for a solve over `[lo, hi]`.
fn pick_delta(model: &LevyModel, omega: &OmegaSpec, lo: f64, hi: f64, settings: &SolverSettings) -> f64 {
    if let Some(d) = settings.delta {
        return d;
    }
    match model {
        LevyModel::Tabulated(t) => t.scale.q,
        _ => omega.inf_on(lo, hi).max(0.0),
    }
}

/// Solves `H = h_δ + W^(δ) * ((r - δ) H)` on `[0, extent]`.
fn solve_with(
    model: &LevyModel,
    rate: &dyn Rate,
    delta: f64,
    extent: f64,
    forcing: Forcing,
    settings: &SolverSettings,
) -> Result<VolterraSolution> {
    let scale = ClassicalScale::new(model, delta)?;
    scale.check_range(extent)?;
    let kernel = |x: f64| scale.w(x);
    let (f, left): (Box<dyn Fn(f64) -> f64 + Sync>, LeftExtension) = match forcing {
        Forcing::W => (Box::new(|x| scale.w(x)), LeftExtension::Zero),
        Forcing::Z => (Box::new(|x| scale.z(x)), LeftExtension::Constant(1.0)),
        Forcing::Exp(r) => (Box::new(move |x: f64| (r * x).exp()), LeftExtension::Exp { coef: 1.0, rate: r }),
    };
    let grid = Grid::new(extent, settings.h, &rate.breakpoints(0.0, extent))?;
    volterra::solve(&VolterraProblem {
        kernel: &kernel,
        forcing: &*f,
        rate,
        delta,
        grid,
        left,
        quadrature: settings.quadrature,
    })
}

/// Empirical convergence order of the `𝒲^(ω)` solve at `settings.h`
/// (errors against the `h/4` solution).
pub fn convergence_order(model: &LevyModel, omega: &OmegaSpec, settings: &SolverSettings) -> Result<Option<f64>> {
    let delta = pick_delta(model, omega, 0.0, settings.x_max, settings);
    let scale = ClassicalScale::new(model, delta)?;
    scale.check_range(settings.x_max)?;
    let kernel = |x: f64| scale.w(x);
    volterra::richardson_order(&VolterraProblem {
        kernel: &kernel,
        forcing: &kernel,
        rate: omega,
        delta,
        grid: Grid::new(settings.x_max, settings.h, &omega.breakpoints(0.0, settings.x_max))?,
        left: LeftExtension::Zero,
        quadrature: settings.quadrature,
    })
}

/// `𝒲^(ω)`, `𝒵^(ω)` and optionally `ℋ^(ω)` on `[0, x_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct OmegaScaleTable {
    w: VolterraSolution,
    z: VolterraSolution,
    h: Option<VolterraSolution>,
    w_prime: Option<Vec<f64>>,
    z_prime: Option<Vec<f64>>,
    h_prime: Option<Vec<f64>>,
    pub provenance: Provenance,
}

/// Solves for `𝒲^(ω)` and `𝒵^(ω)`.
pub fn build_w_omega(model: &LevyModel, omega: &OmegaSpec, settings: &SolverSettings) -> Result<OmegaScaleTable> {
    let delta = pick_delta(model, omega, 0.0, settings.x_max, settings);
    let w = solve_with(model, omega, delta, settings.x_max, Forcing::W, settings)?;
    let z = solve_with(model, omega, delta, settings.x_max, Forcing::Z, settings)?;
    Ok(OmegaScaleTable {
        provenance: Provenance {
            x_max: settings.x_max,
            h: w.grid.h(),
            nodes: w.grid.len(),
            delta,
            delta_h: None,
            quadrature: settings.quadrature,
        },
        w,
        z,
        h: None,
        w_prime: None,
        z_prime: None,
        h_prime: None,
    })
}

/// Solves for `𝒲^(ω)`, `𝒵^(ω)` and `ℋ^(ω)`; needs `ω` constant on `(-∞, 0]`.
pub fn build_h_omega(model: &LevyModel, omega: &OmegaSpec, settings: &SolverSettings) -> Result<OmegaScaleTable> {
    let phi_floor = omega.floor().ok_or(Error::MissingFloor)?;
    let mut table = build_w_omega(model, omega, settings)?;
    let rate = model.phi_inverse(phi_floor)?;
    let h = solve_with(model, omega, phi_floor, settings.x_max, Forcing::Exp(rate), settings)?;
    table.h = Some(h);
    table.provenance.delta_h = Some(phi_floor);
    Ok(table)
}

impl OmegaScaleTable {
    pub fn grid(&self) -> &Grid {
        &self.w.grid
    }

    pub fn x_max(&self) -> f64 {
        self.w.x_max()
    }

    pub fn w_solution(&self) -> &VolterraSolution {
        &self.w
    }

    pub fn z_solution(&self) -> &VolterraSolution {
        &self.z
    }

    pub fn h_solution(&self) -> Option<&VolterraSolution> {
        self.h.as_ref()
    }

    fn check(&self, x: f64) -> Result<()> {
        if x > self.x_max() * (1.0 + 1e-12) {
            return Err(Error::Domain(format!("x = {x} beyond table extent {}", self.x_max())));
        }
        Ok(())
    }

    /// `𝒲^(ω)(x)`, zero for `x < 0`.
    pub fn w(&self, x: f64) -> Result<f64> {
        self.check(x)?;
        Ok(self.w.eval(x))
    }

    /// `𝒵^(ω)(x)`, one for `x < 0`.
    pub fn z(&self, x: f64) -> Result<f64> {
        self.check(x)?;
        Ok(self.z.eval(x))
    }

    /// `ℋ^(ω)(x)`, `e^{Φ(φ)x}` for `x < 0`.
    pub fn h(&self, x: f64) -> Result<f64> {
        self.check(x)?;
        Ok(self.h.as_ref().ok_or(Error::MissingFloor)?.eval(x))
    }

    /// Fills the nodal derivative samples.
    pub fn with_derivatives(mut self) -> Self {
        self.w_prime = Some(self.w.derivative_samples());
        self.z_prime = Some(self.z.derivative_samples());
        self.h_prime = self.h.as_ref().map(|h| h.derivative_samples());
        self
    }

    pub fn has_derivatives(&self) -> bool {
        self.w_prime.is_some()
    }

    fn derivative(&self, sol: &VolterraSolution, samples: &Option<Vec<f64>>, x: f64) -> Result<f64> {
        self.check(x)?;
        let samples = samples.as_ref().ok_or(Error::MissingDerivatives)?;
        if x < 0.0 {
            return Ok(match sol.left {
                LeftExtension::Exp { coef, rate } => coef * rate * (rate * x).exp(),
                _ => 0.0,
            });
        }
        Ok(match sol.grid.node_index(x) {
            Some(i) => samples[i],
            None => sol.derivative_at(x),
        })
    }

    /// Right-derivative `𝒲^(ω)'(x)`.
    pub fn w_prime(&self, x: f64) -> Result<f64> {
        self.derivative(&self.w, &self.w_prime, x)
    }

    /// Right-derivative `𝒵^(ω)'(x)`.
    pub fn z_prime(&self, x: f64) -> Result<f64> {
        self.derivative(&self.z, &self.z_prime, x)
    }

    pub fn h_prime(&self, x: f64) -> Result<f64> {
        let h = self.h.as_ref().ok_or(Error::MissingFloor)?;
        self.derivative(h, &self.h_prime, x)
    }

    /// Writes `x,w_omega,z_omega,h_omega,w_prime,z_prime` (empty `h_omega`
    /// cells when `ℋ` was not built).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let wp = self.w_prime.clone().unwrap_or_else(|| self.w.derivative_samples());
        let zp = self.z_prime.clone().unwrap_or_else(|| self.z.derivative_samples());
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["x", "w_omega", "z_omega", "h_omega", "w_prime", "z_prime"])?;
        for (i, &x) in self.w.nodes().iter().enumerate() {
            let h = self.h.as_ref().map(|h| fmt_num(h.values[i])).unwrap_or_default();
            wtr.write_record([
                fmt_num(x),
                fmt_num(self.w.values[i]),
                fmt_num(self.z.values[i]),
                h,
                fmt_num(wp[i]),
                fmt_num(zp[i]),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// `x ↦ 𝒲^(ω)(x, y)` and `x ↦ 𝒵^(ω)(x, y)` for one base point `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoArgScale {
    pub y: f64,
    w: VolterraSolution,
    z: VolterraSolution,
}

/// Solves the shifted equations for base point `y` on `x ∈ [y, x_max]`.
pub fn build_two_arg(model: &LevyModel, omega: &OmegaSpec, y: f64, settings: &SolverSettings) -> Result<TwoArgScale> {
    let extent = settings.x_max - y;
    if !(extent > 0.0) {
        return Err(Error::Ordering(format!("base point y = {y} must lie below x_max = {}", settings.x_max)));
    }
    let delta = pick_delta(model, omega, y, settings.x_max, settings);
    let shifted = Shifted { inner: omega, y0: y };
    let w = solve_with(model, &shifted, delta, extent, Forcing::W, settings)?;
    let z = solve_with(model, &shifted, delta, extent, Forcing::Z, settings)?;
    Ok(TwoArgScale { y, w, z })
}

impl TwoArgScale {
    pub fn x_max(&self) -> f64 {
        self.y + self.w.x_max()
    }

    fn check(&self, x: f64) -> Result<()> {
        if x > self.x_max() + 1e-12 * self.x_max().abs().max(1.0) {
            return Err(Error::Domain(format!("x = {x} beyond two-argument extent {}", self.x_max())));
        }
        Ok(())
    }

    /// `𝒲^(ω)(x, y)`, zero for `x < y`.
    pub fn w(&self, x: f64) -> Result<f64> {
        self.check(x)?;
        Ok(self.w.eval(x - self.y))
    }

    /// `𝒵^(ω)(x, y)`, one for `x < y`.
    pub fn z(&self, x: f64) -> Result<f64> {
        self.check(x)?;
        Ok(self.z.eval(x - self.y))
    }

    /// Right-derivative in `x`.
    pub fn w_prime(&self, x: f64) -> Result<f64> {
        self.check(x)?;
        Ok(if x < self.y { 0.0 } else { self.w.derivative_at(x - self.y) })
    }

    pub fn z_prime(&self, x: f64) -> Result<f64> {
        self.check(x)?;
        Ok(if x < self.y { 0.0 } else { self.z.derivative_at(x - self.y) })
    }

    pub fn w_solution(&self) -> &VolterraSolution {
        &self.w
    }
}

/// `y ↦ 𝒲^(ω)(x, y)` for one fixed `x`, over `y ∈ [y_min, ∞)`.
///
/// `R(s) = 𝒲^(ω)(x, x - s)` solves the renewal equation with rate
/// `s ↦ ω(x - s)`, so a whole row costs one solve.
#[derive(Debug, Clone, PartialEq)]
pub struct WRow {
    pub x: f64,
    pub y_min: f64,
    sol: Option<VolterraSolution>,
    w0: f64,
}

pub fn w_row(model: &LevyModel, omega: &OmegaSpec, x: f64, y_min: f64, settings: &SolverSettings) -> Result<WRow> {
    if y_min > x {
        return Err(Error::Ordering(format!("row at x = {x} needs y_min <= x, got {y_min}")));
    }
    let w0 = ClassicalScale::new(model, pick_delta(model, omega, y_min, x, settings))?.w0();
    if y_min == x {
        return Ok(WRow { x, y_min, sol: None, w0 });
    }
    let delta = pick_delta(model, omega, y_min, x, settings);
    let reflected = Reflected { inner: omega, x };
    let sol = solve_with(model, &reflected, delta, x - y_min, Forcing::W, settings)?;
    Ok(WRow {
        x,
        y_min,
        sol: Some(sol),
        w0,
    })
}

impl WRow {
    /// `𝒲^(ω)(x, y)`; zero for `y > x`.
    pub fn eval(&self, y: f64) -> Result<f64> {
        if y > self.x {
            return Ok(0.0);
        }
        if y < self.y_min - 1e-12 * self.y_min.abs().max(1.0) {
            return Err(Error::Domain(format!("y = {y} below row start {}", self.y_min)));
        }
        Ok(match &self.sol {
            Some(s) => s.eval((self.x - y).max(0.0)),
            None => self.w0,
        })
    }

    /// Row nodes in `y`, increasing.
    pub fn y_nodes(&self) -> Vec<f64> {
        match &self.sol {
            Some(s) => s.nodes().iter().rev().map(|&t| self.x - t).collect(),
            None => vec![self.x],
        }
    }
}

/// `𝒲^(ω)'(x)` through `W'(x) + W(0)ω(x)𝒲(x) + ∫_0^x ω(x-y)𝒲(x-y)W'(y)dy`.
pub fn w_prime_by_convolution(model: &LevyModel, omega: &OmegaSpec, table: &OmegaScaleTable, x: f64) -> Result<f64> {
    let base = ClassicalScale::new(model, 0.0)?;
    let conv = piecewise_simpson(
        |u| omega.value(u) * table.w.eval(u) * base.wprime(x - u),
        0.0,
        x,
        &omega.breakpoints(0.0, x),
        table.grid().h(),
    );
    Ok(base.wprime(x) + base.w0() * omega.value(x) * table.w.eval(x) + conv)
}

/// `𝒵^(ω)'(x)` through `W(0)ω(x)𝒵(x) + ∫_0^x ω(x-y)𝒵(x-y)W'(y)dy`.
pub fn z_prime_by_convolution(model: &LevyModel, omega: &OmegaSpec, table: &OmegaScaleTable, x: f64) -> Result<f64> {
    let base = ClassicalScale::new(model, 0.0)?;
    let conv = piecewise_simpson(
        |u| omega.value(u) * table.z.eval(u) * base.wprime(x - u),
        0.0,
        x,
        &omega.breakpoints(0.0, x),
        table.grid().h(),
    );
    Ok(base.w0() * omega.value(x) * table.z.eval(x) + conv)
}

/// Composite Simpson with sub-steps of at most `h`, restarted at every breakpoint.
pub(crate) fn piecewise_simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, breaks: &[f64], h: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let mut pts = vec![lo];
    pts.extend(breaks.iter().copied().filter(|&b| b > lo && b < hi));
    pts.push(hi);
    let mut total = 0.0;
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mut n = ((b - a) / h).ceil() as usize;
        n = (n + n % 2).max(2);
        let step = (b - a) / n as f64;
        // stay strictly inside so one-sided values are used at the ends
        let eps = 1e-12 * step;
        let mut s = f(a + eps) + f(b - eps);
        for i in 1..n {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * step);
        }
        total += s * step / 3.0;
    }
    total
}

/// Limits of `1/𝒲^(ω)(c)` and `𝒵^(ω)(c)/𝒲^(ω)(c)` as `c → ∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitConstants {
    pub c_w_inv_inf: f64,
    pub c_z_over_w_inf: f64,
    pub converged: bool,
    pub c_used: f64,
}

/// Largest table grown while searching for the limits of an `ω` without a
/// constant tail.
pub const LIMIT_NODE_BUDGET: usize = 20_000;

/// Evaluates both ratios at `c = x_max, 2x_max, 4x_max, …` up to `c_cap`,
/// stopping once successive changes fall below `tol · max(1, |value|)`.
///
/// When `ω = q` beyond some `Υ`, values past the table come from
/// `𝒲(c) = W^(q)(c) + ∫_0^Υ W^(q)(c-z)(ω(z)-q)𝒲(z)dz` (and likewise for
/// `𝒵`), so only `[0, Υ]` is ever solved on.
pub fn limit_constants(
    model: &LevyModel,
    omega: &OmegaSpec,
    tol: f64,
    c_cap: f64,
    settings: &SolverSettings,
) -> Result<LimitConstants> {
    let start = settings.x_max;
    if !(c_cap >= start) {
        return Err(Error::Domain(format!("c_cap = {c_cap} below x_max = {start}")));
    }
    let tail = omega
        .ceiling()
        .and_then(|(q, ups)| ClassicalScale::new(model, q).ok().map(|s| (q, ups.max(0.0), s)));
    let mut table = build_w_omega(model, omega, &SolverSettings { x_max: start, ..*settings })?;
    if let Some((_, ups, _)) = &tail {
        if *ups > start {
            table = build_w_omega(model, omega, &SolverSettings { x_max: *ups, ..*settings })?;
        }
    }
    let bps = omega.breakpoints(0.0, f64::INFINITY);
    let mut c = start;
    let mut prev: Option<(f64, f64)> = None;
    loop {
        let values = if c <= table.x_max() * (1.0 + 1e-12) {
            Some((table.w(c)?, table.z(c)?))
        } else if let Some((q, ups, s)) = &tail {
            let conv = |f: &dyn Fn(f64) -> f64| {
                piecewise_simpson(|z| s.w(c - z) * (omega.value(z) - q) * f(z), 0.0, *ups, &bps, settings.h)
            };
            Some((s.w(c) + conv(&|z| table.w.eval(z)), s.z(c) + conv(&|z| table.z.eval(z))))
        } else {
            let nodes = (c / settings.h).ceil() as usize;
            if nodes > LIMIT_NODE_BUDGET {
                None
            } else {
                table = build_w_omega(model, omega, &SolverSettings { x_max: c, ..*settings })?;
                Some((table.w(c)?, table.z(c)?))
            }
        };
        let cur = values.map(|(w, z)| (1.0 / w, z / w)).filter(|r| r.0.is_finite() && r.1.is_finite());
        let Some(cur) = cur else {
            let (a, b) = prev.unwrap_or((f64::NAN, f64::NAN));
            return Ok(LimitConstants {
                c_w_inv_inf: a,
                c_z_over_w_inf: b,
                converged: false,
                c_used: c / 2.0,
            });
        };
        if let Some(p) = prev {
            let small = |a: f64, b: f64| (a - b).abs() <= tol * b.abs().max(1.0);
            if small(p.0, cur.0) && small(p.1, cur.1) {
                return Ok(LimitConstants {
                    c_w_inv_inf: cur.0,
                    c_z_over_w_inf: cur.1,
                    converged: true,
                    c_used: c,
                });
            }
        }
        if 2.0 * c > c_cap * (1.0 + 1e-12) {
            return Ok(LimitConstants {
                c_w_inv_inf: cur.0,
                c_z_over_w_inf: cur.1,
                converged: false,
                c_used: c,
            });
        }
        prev = Some(cur);
        c *= 2.0;
    }
}
