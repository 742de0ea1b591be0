//! Exit identities and `ω`-killed resolvent densities.
//!
//! The free functions evaluate one identity on prebuilt tables. The
//! [`FluctuationSolver`] builds whatever tables a query needs.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy_model::LevyModel;
use crate::omega_scale::{
    build_h_omega, build_two_arg, build_w_omega, limit_constants, piecewise_simpson, w_row, LimitConstants,
    OmegaScaleTable, OmegaSpec, SolverSettings, WRow,
};

/// Default cap on resolvent panel nodes.
pub const PANEL_CAP: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitKind {
    TwoSidedUp,
    TwoSidedDown,
    OneSidedDown,
    OneSidedUp,
    ReflectedUp,
    ReflectedDual,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExitQuery {
    pub x: f64,
    pub c: f64,
    #[serde(default)]
    pub z: f64,
    pub kind: ExitKind,
}

/// `value` is the requested transform; one-sided downward queries also
/// carry the survival part in `survive`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExitValue {
    pub value: f64,
    pub survive: Option<f64>,
}

fn check_order(x: f64, c: f64) -> Result<()> {
    if x > c || x.is_nan() || c.is_nan() {
        return Err(Error::Ordering(format!("need x <= c, got x = {x}, c = {c}")));
    }
    Ok(())
}

/// `𝒜(x, c) = 𝒲(x)/𝒲(c)`.
pub fn exit_a(x: f64, c: f64, t: &OmegaScaleTable) -> Result<f64> {
    check_order(x, c)?;
    if x < 0.0 {
        return Ok(0.0);
    }
    Ok(t.w(x)? / t.w(c)?)
}

/// `ℬ(x, c) = 𝒵(x) − 𝒲(x) 𝒵(c)/𝒲(c)`.
pub fn exit_b(x: f64, c: f64, t: &OmegaScaleTable) -> Result<f64> {
    check_order(x, c)?;
    if x < 0.0 {
        return Ok(1.0);
    }
    Ok(t.z(x)? - t.w(x)? * t.z(c)? / t.w(c)?)
}

/// `(c_{𝒲⁻¹(∞)} 𝒲(x), 𝒵(x) − c_{𝒵/𝒲(∞)} 𝒲(x))`: survival without ever
/// going below zero, and the transform at ruin.
pub fn one_sided_down(x: f64, t: &OmegaScaleTable, limits: &LimitConstants) -> Result<(f64, f64)> {
    if !limits.converged {
        return Err(Error::NotConverged { c_used: limits.c_used });
    }
    if x < 0.0 {
        return Ok((0.0, 1.0));
    }
    let w = t.w(x)?;
    Ok((limits.c_w_inv_inf * w, t.z(x)? - limits.c_z_over_w_inf * w))
}

/// `ℋ(x)/ℋ(c)`.
pub fn one_sided_up(x: f64, c: f64, t: &OmegaScaleTable) -> Result<f64> {
    check_order(x, c)?;
    Ok(t.h(x)? / t.h(c)?)
}

/// `𝒞(x, c) = 𝒵(x)/𝒵(c)`.
pub fn reflected_up(x: f64, c: f64, t: &OmegaScaleTable) -> Result<f64> {
    check_order(x, c)?;
    Ok(t.z(x.max(0.0))? / t.z(c)?)
}

/// `Ĉ(x, c) = 𝒵(c−x) − 𝒲(c−x) 𝒵'(c)/𝒲'(c)`.
pub fn reflected_dual(x: f64, c: f64, t: &OmegaScaleTable) -> Result<f64> {
    check_order(x, c)?;
    if !t.has_derivatives() {
        return Err(Error::MissingDerivatives);
    }
    let u = c - x.max(0.0);
    Ok(t.z(u)? - t.w(u)? * t.z_prime(c)? / t.w_prime(c)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResolventKind {
    U,
    Xi,
    Theta,
    L,
    LHat,
}

/// Evenly spaced `y`-nodes `lo, …, hi` (`n` cells).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Panel {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Panel {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self { lo, hi, n }.checked(PANEL_CAP)
    }

    pub fn checked(self, cap: usize) -> Result<Self> {
        if self.n + 1 > cap {
            return Err(Error::PanelTooLarge {
                requested: self.n + 1,
                cap,
            });
        }
        if !(self.hi > self.lo) || self.n == 0 || !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(Error::Domain(format!("bad panel [{}, {}] with {} cells", self.lo, self.hi, self.n)));
        }
        Ok(self)
    }

    pub fn nodes(&self) -> Vec<f64> {
        let d = (self.hi - self.lo) / self.n as f64;
        (0..=self.n)
            .map(|k| if k == self.n { self.hi } else { self.lo + k as f64 * d })
            .collect()
    }

    /// Nodes with any node within rounding distance of a `target` moved onto it,
    /// so densities that jump there are read on a definite side.
    pub fn nodes_snapped(&self, targets: &[f64]) -> Vec<f64> {
        let tol = 1e-9 * (self.hi - self.lo) / self.n as f64;
        let mut y = self.nodes();
        for v in &mut y {
            if let Some(&t) = targets.iter().find(|&&t| (*v - t).abs() <= tol) {
                *v = t;
            }
        }
        y
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolventDensity {
    pub kind: ResolventKind,
    pub x: f64,
    pub y: Vec<f64>,
    pub density: Vec<f64>,
    pub atom_at_zero: Option<f64>,
}

impl ResolventDensity {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["y", "density"])?;
        for (y, d) in self.y.iter().zip(&self.density) {
            wtr.write_record([crate::io::fmt_num(*y), crate::io::fmt_num(*d)])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Builds tables and rows for exit and resolvent queries.
#[derive(Debug, Clone)]
pub struct FluctuationSolver {
    pub model: LevyModel,
    pub omega: OmegaSpec,
    pub settings: SolverSettings,
    pub panel_cap: usize,
    /// Tolerance and cap for the `c → ∞` limits.
    pub limit_tol: f64,
    pub c_cap: f64,
}

impl FluctuationSolver {
    pub fn new(model: LevyModel, omega: OmegaSpec, settings: SolverSettings) -> Self {
        Self {
            model,
            omega,
            settings,
            panel_cap: PANEL_CAP,
            limit_tol: 1e-8,
            c_cap: 1024.0,
        }
    }

    /// Settings whose grid has `c` as a node and reaches a few steps past it,
    /// so derivatives at `c` are one-sided from the right.
    fn settings_through(&self, c: f64) -> SolverSettings {
        let c = c.max(self.settings.h);
        let n = (c / self.settings.h - 1e-9).ceil().max(1.0);
        let h = c / n;
        SolverSettings {
            x_max: c + 4.0 * h,
            h,
            ..self.settings
        }
    }

    /// Tables through `c` with derivative samples; `with_h` adds `ℋ^(ω)`.
    pub fn tables(&self, c: f64, with_h: bool) -> Result<OmegaScaleTable> {
        let s = self.settings_through(c);
        let t = if with_h {
            build_h_omega(&self.model, &self.omega, &s)?
        } else {
            build_w_omega(&self.model, &self.omega, &s)?
        };
        Ok(t.with_derivatives())
    }

    pub fn exit(&self, q: &ExitQuery) -> Result<ExitValue> {
        check_order(q.x, q.c)?;
        let plain = |value| Ok(ExitValue { value, survive: None });
        if q.z != 0.0 {
            if !matches!(q.kind, ExitKind::TwoSidedUp | ExitKind::TwoSidedDown) {
                return Err(Error::Domain("a lower barrier other than 0 is only supported for two-sided exits".into()));
            }
            if q.c < q.z {
                return Err(Error::Ordering(format!("need z <= c, got z = {}, c = {}", q.z, q.c)));
            }
            if q.x < q.z {
                return plain(if q.kind == ExitKind::TwoSidedUp { 0.0 } else { 1.0 });
            }
            let s = self.settings_through(q.c - q.z);
            let two = build_two_arg(
                &self.model,
                &self.omega,
                q.z,
                &SolverSettings {
                    x_max: q.z + s.x_max,
                    ..s
                },
            )?;
            let a = two.w(q.x)? / two.w(q.c)?;
            return plain(match q.kind {
                ExitKind::TwoSidedUp => a,
                _ => two.z(q.x)? - two.z(q.c)? * a,
            });
        }
        match q.kind {
            ExitKind::TwoSidedUp => plain(exit_a(q.x, q.c, &self.tables(q.c, false)?)?),
            ExitKind::TwoSidedDown => plain(exit_b(q.x, q.c, &self.tables(q.c, false)?)?),
            ExitKind::ReflectedUp => plain(reflected_up(q.x, q.c, &self.tables(q.c, false)?)?),
            ExitKind::ReflectedDual => plain(reflected_dual(q.x, q.c, &self.tables(q.c, false)?)?),
            ExitKind::OneSidedUp => plain(one_sided_up(q.x, q.c, &self.tables(q.c.max(q.x.abs()), true)?)?),
            ExitKind::OneSidedDown => {
                let lim = self.limits(q.x.max(1.0))?;
                let t = self.tables(q.x.max(0.0), false)?;
                let (survive, ruin) = one_sided_down(q.x, &t, &lim)?;
                Ok(ExitValue {
                    value: ruin,
                    survive: Some(survive),
                })
            }
        }
    }

    pub fn limits(&self, start: f64) -> Result<LimitConstants> {
        let s = SolverSettings {
            x_max: start,
            ..self.settings
        };
        limit_constants(&self.model, &self.omega, self.limit_tol, self.c_cap.max(start), &s)
    }

    fn row(&self, x: f64, y_min: f64) -> Result<Option<WRow>> {
        if x < y_min {
            return Ok(None);
        }
        w_row(&self.model, &self.omega, x, y_min, &self.settings).map(Some)
    }

    fn row_eval(row: &Option<WRow>, y: f64) -> Result<f64> {
        match row {
            Some(r) => r.eval(y),
            None => Ok(0.0),
        }
    }

    /// Density of the requested resolvent at start point `x` over `panel`.
    /// `c` is ignored for `Theta`.
    pub fn resolvent(&self, kind: ResolventKind, x: f64, c: f64, panel: &Panel) -> Result<ResolventDensity> {
        let panel = panel.checked(self.panel_cap)?;
        match kind {
            ResolventKind::U => self.resolvent_u(x, c, &panel),
            ResolventKind::Xi => self.resolvent_xi(x, c, &panel),
            ResolventKind::Theta => self.resolvent_theta(x, &panel),
            ResolventKind::L => self.resolvent_l(x, c, &panel),
            ResolventKind::LHat => self.resolvent_l_hat(x, c, &panel),
        }
    }

    /// `ratio · 𝒲(c, y) − 𝒲(x, y)` over the panel.
    fn two_row_density(&self, kind: ResolventKind, x: f64, c: f64, ratio: f64, panel: &Panel) -> Result<ResolventDensity> {
        let row_c = self.row(c, panel.lo)?;
        let row_x = self.row(x, panel.lo)?;
        let y = panel.nodes_snapped(&[x, c]);
        let density = y
            .iter()
            .map(|&y| Ok(ratio * Self::row_eval(&row_c, y)? - Self::row_eval(&row_x, y)?))
            .collect::<Result<Vec<f64>>>()?;
        Ok(ResolventDensity {
            kind,
            x,
            y,
            density,
            atom_at_zero: None,
        })
    }

    fn check_inside(x: f64, c: f64, panel: &Panel) -> Result<()> {
        if !(0.0 <= x && x <= c) {
            return Err(Error::Ordering(format!("need 0 <= x <= c, got x = {x}, c = {c}")));
        }
        if panel.lo < 0.0 || panel.hi > c {
            return Err(Error::Ordering(format!("panel [{}, {}] must lie in [0, c = {c}]", panel.lo, panel.hi)));
        }
        Ok(())
    }

    /// `u(x,y) = 𝒲(x) 𝒲(c,y)/𝒲(c) − 𝒲(x,y)`.
    pub fn resolvent_u(&self, x: f64, c: f64, panel: &Panel) -> Result<ResolventDensity> {
        Self::check_inside(x, c, panel)?;
        let t = self.tables(c, false)?;
        let ratio = t.w(x)? / t.w(c)?;
        self.two_row_density(ResolventKind::U, x, c, ratio, panel)
    }

    /// `Ξ(x,y) = ℋ(x) 𝒲(c,y)/ℋ(c) − 𝒲(x,y)` for `y ≤ c`.
    pub fn resolvent_xi(&self, x: f64, c: f64, panel: &Panel) -> Result<ResolventDensity> {
        check_order(x, c)?;
        if panel.hi > c {
            return Err(Error::Ordering(format!("panel must end at or below c = {c}")));
        }
        let t = self.tables(c.max(x.abs()), true)?;
        let ratio = t.h(x)? / t.h(c)?;
        self.two_row_density(ResolventKind::Xi, x, c, ratio, panel)
    }

    /// `l(x,y) = 𝒵(x) 𝒲(c,y)/𝒵(c) − 𝒲(x,y)`.
    pub fn resolvent_l(&self, x: f64, c: f64, panel: &Panel) -> Result<ResolventDensity> {
        Self::check_inside(x, c, panel)?;
        let t = self.tables(c, false)?;
        let ratio = t.z(x)? / t.z(c)?;
        self.two_row_density(ResolventKind::L, x, c, ratio, panel)
    }

    /// `l̂(x,y) = 𝒲(c−x) ∂ₓ𝒲(c, c−y)/𝒲'(c) − 𝒲(c−x, c−y)` with the atom
    /// `𝒲(c−x) W(0)/𝒲'(c)` at `y = 0`.
    pub fn resolvent_l_hat(&self, x: f64, c: f64, panel: &Panel) -> Result<ResolventDensity> {
        Self::check_inside(x, c, panel)?;
        let t = self.tables(c, false)?;
        let s = self.settings_through(c);
        let hd = s.h;
        let wp_c = t.w_prime(c)?;
        let lead = t.w(c - x)? / wp_c;
        let y_min = c - panel.hi;
        let rows = [0.0, hd, 2.0 * hd].map(|k| w_row(&self.model, &self.omega, c + k, y_min, &s));
        let [r0, r1, r2] = rows;
        let (r0, r1, r2) = (r0?, r1?, r2?);
        let back = if c - hd >= y_min { Some(w_row(&self.model, &self.omega, c - hd, y_min, &s)?) } else { None };
        let inner = self.row(c - x, y_min)?;
        // a jump of ω moves ∂ₓ𝒲 only through the atom W(0), so the central
        // difference is safe exactly when W(0) = 0
        let central_ok = self.model.w_at_zero() == 0.0;
        let y = panel.nodes_snapped(&[x]);
        let mut density = Vec::with_capacity(y.len());
        for &yy in &y {
            let u = c - yy;
            let d = match &back {
                Some(b) if central_ok && yy >= hd => (r1.eval(u)? - b.eval(u)?) / (2.0 * hd),
                _ => (-3.0 * r0.eval(u)? + 4.0 * r1.eval(u)? - r2.eval(u)?) / (2.0 * hd),
            };
            density.push(lead * d - Self::row_eval(&inner, u)?);
        }
        Ok(ResolventDensity {
            kind: ResolventKind::LHat,
            x,
            y,
            density,
            atom_at_zero: Some(t.w(c - x)? * self.model.w_at_zero() / wp_c),
        })
    }

    /// `Θ(x,y)`: the resolvent without barriers; needs a floor `φ` and a
    /// ceiling `(q, Υ)` of `ω`.
    pub fn resolvent_theta(&self, x: f64, panel: &Panel) -> Result<ResolventDensity> {
        let phi = self.omega.floor().ok_or(Error::MissingFloor)?;
        let (q, ups) = self.omega.ceiling().ok_or(Error::MissingCeiling)?;
        if q == 0.0 && phi == 0.0 {
            return Err(Error::Domain("the unkilled potential needs q > 0 or phi > 0".into()));
        }
        let m = &self.model;
        let big_phi_q = m.phi_inverse(q)?;
        let reach = x.max(ups).max(self.settings.h);
        let t = self.tables(reach, true)?;
        let h = self.settings.h;

        let c0 = if phi == q {
            1.0 / m.phi_prime(q)?
        } else {
            (q - phi) / (big_phi_q - m.phi_inverse(phi)?)
        };
        let bps = self.omega.breakpoints(f64::NEG_INFINITY, f64::INFINITY);
        let weight = |z: f64| (-big_phi_q * z).exp() * (self.omega.value(z) - q);
        let denom_int = if ups > 0.0 {
            piecewise_simpson(|z| weight(z) * t.h(z).unwrap_or(f64::NAN), 0.0, ups, &bps, h)
        } else {
            0.0
        };
        let denom = c0 + denom_int;
        let hx = t.h(x)?;

        let y = panel.nodes_snapped(&[x]);
        let numer = y
            .par_iter()
            .map(|&yy| -> Result<f64> {
                let base = (-big_phi_q * yy).exp();
                if !(ups > yy) {
                    return Ok(base);
                }
                let s = SolverSettings {
                    x_max: ups,
                    ..self.settings
                };
                let col = build_two_arg(m, &self.omega, yy, &s)?;
                let int = piecewise_simpson(|z| weight(z) * col.w(z).unwrap_or(f64::NAN), yy, ups, &bps, h);
                Ok(base + int)
            })
            .collect::<Result<Vec<f64>>>()?;
        let row_x = self.row(x, panel.lo)?;
        let density = y
            .iter()
            .zip(&numer)
            .map(|(&yy, &nu)| Ok(nu / denom * hx - Self::row_eval(&row_x, yy)?))
            .collect::<Result<Vec<f64>>>()?;
        if density.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(x));
        }
        Ok(ResolventDensity {
            kind: ResolventKind::Theta,
            x,
            y,
            density,
            atom_at_zero: None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical_scale::ClassicalScale;

    fn bm() -> LevyModel {
        LevyModel::brownian(1.0, 2f64.sqrt()).unwrap()
    }

    fn cl() -> LevyModel {
        LevyModel::cramer_lundberg(1.0, 1.0, 2.0).unwrap()
    }

    fn band() -> OmegaSpec {
        OmegaSpec::band(0.3, 1.0, 0.5, 1.2).unwrap()
    }

    fn solver(m: LevyModel, om: OmegaSpec) -> FluctuationSolver {
        FluctuationSolver::new(m, om, SolverSettings::new(2.0, 2e-3))
    }

    /// Trapezoid of `ω(y) f(y)` over panel nodes that include every kink.
    /// `jump = (y0, left, right)` adds `left`/`right` to the node value at
    /// `y0` when it is used as a left/right limit.
    fn weighted_mass(om: &OmegaSpec, r: &ResolventDensity, reflect_at: Option<f64>, jump: (f64, f64, f64)) -> f64 {
        let w = |y: f64, right: bool| {
            let arg = reflect_at.map_or(y, |c| c - y);
            match (reflect_at.is_some(), right) {
                (false, true) | (true, false) => om.value(arg),
                _ => om.left_limit(arg),
            }
        };
        let at = |y: f64, d: f64, right: bool| {
            if (y - jump.0).abs() < 1e-12 {
                d + if right { jump.2 } else { jump.1 }
            } else {
                d
            }
        };
        r.y.windows(2)
            .zip(r.density.windows(2))
            .map(|(y, d)| 0.5 * (y[1] - y[0]) * (w(y[0], true) * at(y[0], d[0], true) + w(y[1], false) * at(y[1], d[1], false)))
            .sum()
    }

    #[test]
    fn classical_exit_values() {
        let q = 6.0;
        let s = solver(bm(), OmegaSpec::constant(q).unwrap());
        let k = ClassicalScale::new(&bm(), q).unwrap();
        let (x, c) = (1.0, 2.0);
        let a = s.exit(&ExitQuery { x, c, z: 0.0, kind: ExitKind::TwoSidedUp }).unwrap().value;
        assert!((a - k.w(x) / k.w(c)).abs() < 1e-6);
        let b = s.exit(&ExitQuery { x, c, z: 0.0, kind: ExitKind::TwoSidedDown }).unwrap().value;
        assert!((b - (k.z(x) - k.z(c) * k.w(x) / k.w(c))).abs() < 1e-6);
        let r = s.exit(&ExitQuery { x, c, z: 0.0, kind: ExitKind::ReflectedUp }).unwrap().value;
        assert!((r - k.z(x) / k.z(c)).abs() < 1e-6);
        let d = s.exit(&ExitQuery { x, c, z: 0.0, kind: ExitKind::ReflectedDual }).unwrap().value;
        let want = k.z(c - x) - q * k.w(c - x) * k.w(c) / k.wprime(c);
        assert!((d - want).abs() < 1e-4, "{d} vs {want}");
        let u = s.exit(&ExitQuery { x, c, z: 0.0, kind: ExitKind::OneSidedUp }).unwrap().value;
        let phi = bm().phi_inverse(q).unwrap();
        assert!((u - (-phi * (c - x)).exp()).abs() < 1e-9);
        let dn = s.exit(&ExitQuery { x, c, z: 0.0, kind: ExitKind::OneSidedDown }).unwrap();
        assert!((dn.value - (k.z(x) - q / phi * k.w(x))).abs() < 1e-5);
        assert!(dn.survive.unwrap() < 1e-8);
    }

    #[test]
    fn exit_boundaries_and_ruin() {
        let s = solver(bm(), band());
        let t = s.tables(2.0, false).unwrap();
        assert_eq!(exit_a(2.0, 2.0, &t).unwrap(), 1.0);
        assert_eq!(exit_a(-0.5, 2.0, &t).unwrap(), 0.0);
        assert_eq!(exit_b(-0.5, 2.0, &t).unwrap(), 1.0);
        assert_eq!(reflected_up(2.0, 2.0, &t).unwrap(), 1.0);
        assert!((reflected_up(0.0, 2.0, &t).unwrap() - 1.0 / t.z(2.0).unwrap()).abs() < 1e-15);
        assert!(matches!(exit_a(2.5, 2.0, &t), Err(Error::Ordering(_))));

        let zero = solver(bm(), OmegaSpec::constant(0.0).unwrap());
        let t0 = zero.tables(2.0, false).unwrap();
        let w = ClassicalScale::new(&bm(), 0.0).unwrap();
        assert!((exit_b(0.7, 2.0, &t0).unwrap() - (1.0 - w.w(0.7) / w.w(2.0))).abs() < 1e-7);
        assert!((reflected_dual(0.7, 2.0, &t0).unwrap() - 1.0).abs() < 1e-12);
        let dn = zero.exit(&ExitQuery { x: 0.8, c: 0.8, z: 0.0, kind: ExitKind::OneSidedDown }).unwrap();
        assert!((dn.survive.unwrap() - (1.0 - (-0.8f64).exp())).abs() < 1e-6);
        let lim = zero.limits(2.0).unwrap();
        assert_eq!(one_sided_down(-1.0, &t0, &lim).unwrap(), (0.0, 1.0));
    }

    #[test]
    fn exit_monotonicity_and_markov() {
        for m in [bm(), cl()] {
            let s = solver(m, band());
            let t = s.tables(2.0, false).unwrap();
            let xs: Vec<f64> = (0..=20).map(|i| i as f64 * 0.1).collect();
            for w in xs.windows(2) {
                assert!(exit_a(w[0], 2.0, &t).unwrap() <= exit_a(w[1], 2.0, &t).unwrap());
                assert!(exit_a(0.5, w[0].max(0.5), &t).unwrap() >= exit_a(0.5, w[1].max(0.5), &t).unwrap());
            }
            for &x in &xs {
                for v in [exit_a(x, 2.0, &t).unwrap(), exit_b(x, 2.0, &t).unwrap(), reflected_up(x, 2.0, &t).unwrap()] {
                    assert!((-1e-12..=1.0 + 1e-12).contains(&v), "x = {x}: {v}");
                }
                let d = reflected_dual(x, 2.0, &t).unwrap();
                assert!((-1e-9..=1.0 + 1e-9).contains(&d), "{d}");
            }
            let (x, y, z) = (0.3, 0.9, 1.7);
            let lhs = exit_a(x, z, &t).unwrap();
            assert!((lhs - exit_a(x, y, &t).unwrap() * exit_a(y, z, &t).unwrap()).abs() < 1e-6);
            let lhs = reflected_up(x, z, &t).unwrap();
            assert!((lhs - reflected_up(x, y, &t).unwrap() * reflected_up(y, z, &t).unwrap()).abs() < 1e-6);
        }
    }

    #[test]
    fn lower_barrier_matches_shifted_interval() {
        let q = 1.5;
        let s = solver(bm(), OmegaSpec::constant(q).unwrap());
        let k = ClassicalScale::new(&bm(), q).unwrap();
        let a = s.exit(&ExitQuery { x: 0.2, c: 1.0, z: -0.5, kind: ExitKind::TwoSidedUp }).unwrap().value;
        assert!((a - k.w(0.7) / k.w(1.5)).abs() < 1e-6);
        let e = s.exit(&ExitQuery { x: 0.2, c: 1.0, z: -0.5, kind: ExitKind::ReflectedUp });
        assert!(matches!(e, Err(Error::Domain(_))));
    }

    #[test]
    fn resolvents_match_classical_forms() {
        let q = 1.3;
        let s = solver(bm(), OmegaSpec::constant(q).unwrap());
        let k = ClassicalScale::new(&bm(), q).unwrap();
        let (x, c) = (0.8, 2.0);
        let p = Panel::new(0.0, c, 40).unwrap();
        let u = s.resolvent_u(x, c, &p).unwrap();
        let l = s.resolvent_l(x, c, &p).unwrap();
        let lh = s.resolvent_l_hat(x, c, &p).unwrap();
        for (i, &y) in u.y.iter().enumerate() {
            let want = k.w(x) / k.w(c) * k.w(c - y) - k.w(x - y);
            assert!((u.density[i] - want).abs() < 1e-5, "u at {y}");
            let want = k.z(x) / k.z(c) * k.w(c - y) - k.w(x - y);
            assert!((l.density[i] - want).abs() < 1e-5, "l at {y}");
            let want = k.w(c - x) / k.wprime(c) * k.wprime(y) - k.w(y - x);
            assert!((lh.density[i] - want).abs() < 1e-4, "l_hat at {y}: {} vs {want}", lh.density[i]);
        }
        assert_eq!(lh.atom_at_zero, Some(0.0));

        let xp = Panel::new(-3.0, c, 50).unwrap();
        let xi = s.resolvent_xi(x, c, &xp).unwrap();
        let big = bm().phi_inverse(q).unwrap();
        for (i, &y) in xi.y.iter().enumerate() {
            let want = (-big * (c - x)).exp() * k.w(c - y) - k.w(x - y);
            assert!((xi.density[i] - want).abs() < 1e-5 * want.abs().max(1.0), "xi at {y}");
        }

        let th = s.resolvent_theta(x, &Panel::new(-2.0, 3.0, 50).unwrap()).unwrap();
        let dphi = bm().phi_prime(q).unwrap();
        for (i, &y) in th.y.iter().enumerate() {
            let want = dphi * (-big * (y - x)).exp() - k.w(x - y);
            assert!((th.density[i] - want).abs() < 1e-6 * want.abs().max(1.0), "theta at {y}");
        }
    }

    #[test]
    fn l_hat_atom_for_cramer_lundberg() {
        let q = 0.7;
        let m = cl();
        let s = solver(m.clone(), OmegaSpec::constant(q).unwrap());
        let k = ClassicalScale::new(&m, q).unwrap();
        let (x, c) = (0.5, 1.5);
        let lh = s.resolvent_l_hat(x, c, &Panel::new(0.0, c, 30).unwrap()).unwrap();
        let atom = k.w0() * k.w(c - x) / k.wprime(c);
        assert!((lh.atom_at_zero.unwrap() - atom).abs() < 1e-4);
        for (i, &y) in lh.y.iter().enumerate() {
            let want = k.w(c - x) / k.wprime(c) * k.wprime(y) - k.w(y - x);
            assert!((lh.density[i] - want).abs() < 1e-3, "y = {y}: {} vs {want}", lh.density[i]);
        }
    }

    #[test]
    fn mass_balance_identities() {
        let om = band();
        for m in [bm(), cl()] {
            let w0 = m.w_at_zero();
            let s = solver(m, om.clone());
            let (x, c) = (1.0, 2.0);
            let p = Panel { lo: 0.0, hi: c, n: 400 };
            let t = s.tables(c, false).unwrap();

            let u = s.resolvent_u(x, c, &p).unwrap();
            let total = exit_a(x, c, &t).unwrap() + exit_b(x, c, &t).unwrap() + weighted_mass(&om, &u, None, (x, 0.0, w0));
            assert!((total - 1.0).abs() < 1e-4, "u balance {total}");
            assert!(u.density.iter().all(|&d| d >= -5e-6));

            let l = s.resolvent_l(x, c, &p).unwrap();
            let total = reflected_up(x, c, &t).unwrap() + weighted_mass(&om, &l, None, (x, 0.0, w0));
            assert!((total - 1.0).abs() < 1e-4, "l balance {total}");

            let lh = s.resolvent_l_hat(x, c, &p).unwrap();
            let atom = lh.atom_at_zero.unwrap();
            let total = reflected_dual(x, c, &t).unwrap() + om.left_limit(c) * atom + weighted_mass(&om, &lh, Some(c), (x, w0, 0.0));
            assert!((total - 1.0).abs() < 1e-3, "l_hat balance {total}");
        }
    }

    #[test]
    fn xi_and_theta_balance_with_floor() {
        let om = OmegaSpec::band(0.4, 1.0, 0.0, 1.0).unwrap();
        let s = solver(bm(), om.clone());
        let (x, c) = (0.6, 1.5);
        let p = Panel { lo: -14.0, hi: c, n: 620 };
        let xi = s.resolvent_xi(x, c, &p).unwrap();
        let t = s.tables(c, true).unwrap();
        let total = one_sided_up(x, c, &t).unwrap() + weighted_mass(&om, &xi, None, (x, 0.0, 0.0));
        assert!((total - 1.0).abs() < 1e-4, "xi balance {total}");
        assert!(xi.density.iter().all(|&d| d >= -5e-6));

        let coarse = FluctuationSolver::new(bm(), om.clone(), SolverSettings::new(2.0, 1e-2));
        let th = coarse.resolvent_theta(x, &Panel { lo: -14.0, hi: 60.0, n: 740 }).unwrap();
        assert!(th.density.iter().all(|&d| d >= -5e-6));
        let total = weighted_mass(&om, &th, None, (x, 0.0, 0.0));
        assert!((total - 1.0).abs() < 1e-3, "theta balance {total}");
    }

    #[test]
    fn panel_cap_and_errors() {
        let s = solver(bm(), band());
        let e = s.resolvent(ResolventKind::U, 1.0, 2.0, &Panel { lo: 0.0, hi: 2.0, n: 400 });
        assert_eq!(e, Err(Error::PanelTooLarge { requested: 401, cap: 400 }));
        let lb = solver(bm(), OmegaSpec::linear_band(0.1, 0.1, 1.0).unwrap());
        assert_eq!(lb.resolvent_theta(0.5, &Panel::new(0.0, 1.0, 10).unwrap()), Err(Error::MissingFloor));
        let exp = solver(bm(), OmegaSpec::exponential(0.5, 1.0).unwrap());
        assert!(exp.resolvent_theta(0.5, &Panel::new(0.0, 1.0, 10).unwrap()).is_err());
        let bad = LimitConstants { c_w_inv_inf: 0.0, c_z_over_w_inf: 0.0, converged: false, c_used: 8.0 };
        let t = s.tables(1.0, false).unwrap();
        assert_eq!(one_sided_down(0.5, &t, &bad), Err(Error::NotConverged { c_used: 8.0 }));
    }
}
