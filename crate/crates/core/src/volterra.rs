//! Product-trapezoid solver for `H(x) = h(x) + ∫_0^x K(x-y) (ω(y) - δ) H(y) dy`.
//!
//! The kernel is a classical scale function `W^(δ)`, possibly with an atom
//! `K(0) > 0`, which makes the diagonal term implicit. Discontinuities of `ω`
//! are inserted as grid nodes and every trapezoid cell uses the one-sided
//! limits of `ω` at its two ends, so a jump costs nothing in accuracy.

use crate::error::{Error, Result};

/// A nonnegative, locally bounded rate function with finitely many jumps on
/// any compact window. Values are right-continuous.
pub trait Rate: Send + Sync {
    /// `ω(x)`, the right limit at a jump.
    fn value(&self, x: f64) -> f64;
    /// `ω(x-)`.
    fn left_limit(&self, x: f64) -> f64 {
        self.value(x)
    }
    /// Jump locations in the open interval `(lo, hi)`.
    fn breakpoints(&self, lo: f64, hi: f64) -> Vec<f64>;
}

impl<R: Rate + ?Sized> Rate for &R {
    fn value(&self, x: f64) -> f64 {
        (**self).value(x)
    }
    fn left_limit(&self, x: f64) -> f64 {
        (**self).left_limit(x)
    }
    fn breakpoints(&self, lo: f64, hi: f64) -> Vec<f64> {
        (**self).breakpoints(lo, hi)
    }
}

/// `x ↦ ω(x + y0)`.
pub struct Shifted<R> {
    pub inner: R,
    pub y0: f64,
}

impl<R: Rate> Rate for Shifted<R> {
    fn value(&self, x: f64) -> f64 {
        self.inner.value(x + self.y0)
    }
    fn left_limit(&self, x: f64) -> f64 {
        self.inner.left_limit(x + self.y0)
    }
    fn breakpoints(&self, lo: f64, hi: f64) -> Vec<f64> {
        self.inner
            .breakpoints(lo + self.y0, hi + self.y0)
            .into_iter()
            .map(|b| b - self.y0)
            .collect()
    }
}

/// `t ↦ ω(x - t)`, kept right-continuous in `t`.
pub struct Reflected<R> {
    pub inner: R,
    pub x: f64,
}

impl<R: Rate> Rate for Reflected<R> {
    fn value(&self, t: f64) -> f64 {
        self.inner.left_limit(self.x - t)
    }
    fn left_limit(&self, t: f64) -> f64 {
        self.inner.value(self.x - t)
    }
    fn breakpoints(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut b: Vec<f64> = self
            .inner
            .breakpoints(self.x - hi, self.x - lo)
            .into_iter()
            .map(|b| self.x - b)
            .collect();
        b.reverse();
        b
    }
}

/// Value of the solution to the left of the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LeftExtension {
    Zero,
    Constant(f64),
    /// `coef · e^{rate x}`.
    Exp { coef: f64, rate: f64 },
}

impl LeftExtension {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            LeftExtension::Zero => 0.0,
            LeftExtension::Constant(c) => c,
            LeftExtension::Exp { coef, rate } => coef * (rate * x).exp(),
        }
    }
}

/// Nodes `0 = x_0 < … < x_n = x_max`: the uniform points `i·h` plus every
/// jump of `ω` in `(0, x_max)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    nodes: Vec<f64>,
    h: f64,
    x_max: f64,
    breakpoints: Vec<f64>,
    break_nodes: Vec<usize>,
    uniform: bool,
}

impl Grid {
    /// `h` is shrunk to `x_max / ceil(x_max / h)` so that `x_max` is a node.
    pub fn new(x_max: f64, h: f64, breakpoints: &[f64]) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Domain(format!("grid step must be positive, got {h}")));
        }
        if !(x_max > 0.0 && x_max.is_finite()) {
            return Err(Error::Domain(format!("grid extent must be positive, got {x_max}")));
        }
        let n = ((x_max / h) - 1e-9).ceil().max(1.0) as usize;
        let h = x_max / n as f64;
        let mut nodes: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
        nodes[n] = x_max;
        let mut bps: Vec<f64> = breakpoints
            .iter()
            .copied()
            .filter(|&b| b > 0.0 && b < x_max)
            .collect();
        bps.sort_by(|a, b| a.partial_cmp(b).unwrap());
        bps.dedup();
        let snap = 1e-9 * h;
        let mut uniform = true;
        for &b in &bps {
            let i = (b / h).round();
            if (i * h - b).abs() > snap {
                let pos = nodes.partition_point(|&x| x < b);
                nodes.insert(pos, b);
                uniform = false;
            }
        }
        let break_nodes = bps
            .iter()
            .map(|&b| nodes.partition_point(|&x| x < b - snap))
            .collect();
        Ok(Self {
            nodes,
            h,
            x_max,
            breakpoints: bps,
            break_nodes,
            uniform,
        })
    }

    pub fn uniform(x_max: f64, h: f64) -> Result<Self> {
        Self::new(x_max, h, &[])
    }

    /// Same extent and breakpoints with step `h / factor`.
    pub fn refined(&self, factor: usize) -> Self {
        Self::new(self.x_max, self.h / factor as f64, &self.breakpoints).expect("valid refinement")
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    /// Index of the node equal to `x`, if any.
    pub fn node_index(&self, x: f64) -> Option<usize> {
        let tol = 1e-9 * self.h;
        let i = self.nodes.partition_point(|&v| v < x - tol);
        (i < self.nodes.len() && (self.nodes[i] - x).abs() <= tol).then_some(i)
    }

    /// Index range `[lo, hi]` of the smooth segment containing cell `k`.
    fn segment_of_cell(&self, k: usize) -> (usize, usize) {
        let last = self.nodes.len() - 1;
        let mut lo = 0;
        let mut hi = last;
        for &b in &self.break_nodes {
            if b <= k {
                lo = b;
            } else {
                hi = b;
                break;
            }
        }
        (lo, hi)
    }
}

/// One renewal equation to solve.
pub struct VolterraProblem<'a> {
    /// `W^(δ)` on `[0, ∞)`, including its value at zero.
    pub kernel: &'a (dyn Fn(f64) -> f64 + Sync),
    /// `h_δ` on `[0, ∞)`.
    pub forcing: &'a (dyn Fn(f64) -> f64 + Sync),
    pub rate: &'a dyn Rate,
    pub delta: f64,
    pub grid: Grid,
    /// `H` to the left of zero.
    pub left: LeftExtension,
    pub quadrature: Quadrature,
}

/// Nodal solution with piecewise cubic interpolation between nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct VolterraSolution {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub left: LeftExtension,
}

/// Smallest admissible diagonal factor `1 - c_i K(0) (ω_i - δ)`.
pub const DIAGONAL_GUARD: f64 = 0.5;

/// Quadrature rule for the convolution integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Quadrature {
    /// Plain trapezoid, second order.
    Trapezoid,
    /// Trapezoid plus the first Gregory end correction on every smooth
    /// segment between jumps of `ω`, third order.
    #[default]
    EndCorrected,
}

pub fn solve(p: &VolterraProblem) -> Result<VolterraSolution> {
    let x = p.grid.nodes();
    let n = x.len();
    let d: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let mut brk = vec![false; n];
    for &b in &p.grid.break_nodes {
        brk[b] = true;
    }
    let mut gm = Vec::with_capacity(n);
    let mut gp = Vec::with_capacity(n);
    for (j, &xi) in x.iter().enumerate() {
        // jumps snapped onto a node may sit a rounding error to either side
        // of it, so read the one-sided limits slightly inside each cell
        let (l, r) = if brk[j] {
            let eta = 1e-6 * d[j - 1].min(d.get(j).copied().unwrap_or(d[j - 1]));
            (p.rate.left_limit(xi - eta), p.rate.value(xi + eta))
        } else {
            (p.rate.left_limit(xi), p.rate.value(xi))
        };
        if !(l.is_finite() && r.is_finite()) {
            return Err(Error::InvalidOmega(format!("rate is not finite at {xi}")));
        }
        gm.push(l - p.delta);
        gp.push(r - p.delta);
    }
    let is_start = |j: usize| j == 0 || brk[j];
    let is_end = |j: usize| j == n - 1 || brk[j];
    let corr = match p.quadrature {
        Quadrature::Trapezoid => 0.0,
        Quadrature::EndCorrected => 1.0 / 12.0,
    };
    // weight of node j in every row past it
    let coef: Vec<f64> = (0..n)
        .map(|j| {
            let mut c = 0.0;
            if j > 0 {
                c += 0.5 * d[j - 1] * gm[j];
                if is_start(j - 1) {
                    c += corr * d[j - 1] * gm[j];
                }
                if is_end(j) {
                    c -= corr * d[j - 1] * gm[j];
                }
            }
            if j + 1 < n {
                c += 0.5 * d[j] * gp[j];
                if is_start(j) {
                    c -= corr * d[j] * gp[j];
                }
                if is_end(j + 1) {
                    c += corr * d[j] * gp[j];
                }
            }
            c
        })
        .collect();
    let k0 = (p.kernel)(0.0);
    let cache: Option<Vec<f64>> = p
        .grid
        .is_uniform()
        .then(|| (0..n).map(|k| (p.kernel)(k as f64 * p.grid.h())).collect());

    let mut h = vec![0.0; n];
    let mut v = vec![0.0; n];
    h[0] = (p.forcing)(0.0);
    v[0] = coef[0] * h[0];
    for i in 1..n {
        let mut acc = (p.forcing)(x[i]);
        let k1 = match &cache {
            Some(kc) => {
                for j in 0..i {
                    acc += kc[i - j] * v[j];
                }
                kc[1]
            }
            None => {
                for j in 0..i {
                    acc += (p.kernel)(x[i] - x[j]) * v[j];
                }
                (p.kernel)(x[i] - x[i - 1])
            }
        };
        if corr != 0.0 && !is_end(i) {
            // row i stops inside a segment: end correction on its last cell
            acc += corr * d[i - 1] * gp[i - 1] * k1 * h[i - 1];
        }
        let mut w_diag = (0.5 - corr) * d[i - 1] * gm[i];
        if is_start(i - 1) {
            w_diag += corr * d[i - 1] * gm[i];
        }
        let diag = 1.0 - w_diag * k0;
        if diag <= DIAGONAL_GUARD {
            return Err(Error::GridTooCoarse { x: x[i], factor: diag });
        }
        h[i] = acc / diag;
        if !h[i].is_finite() {
            return Err(Error::NonFinite(x[i]));
        }
        v[i] = coef[i] * h[i];
    }
    Ok(VolterraSolution {
        grid: p.grid.clone(),
        values: h,
        left: p.left,
    })
}

/// Solves with `ω(· + y0)` in place of `ω`.
pub fn solve_shifted(p: &VolterraProblem, y0: f64) -> Result<VolterraSolution> {
    let shifted = Shifted { inner: p.rate, y0 };
    let bps = shifted.breakpoints(0.0, p.grid.x_max());
    let q = VolterraProblem {
        kernel: p.kernel,
        forcing: p.forcing,
        rate: &shifted,
        delta: p.delta,
        grid: Grid::new(p.grid.x_max(), p.grid.h(), &bps)?,
        left: p.left,
        quadrature: p.quadrature,
    };
    solve(&q)
}

/// Empirical order `log₂(e_h / e_{h/2})` with errors measured against the
/// `h/4` solution on the coarse nodes. `None` when the coarse error is zero.
pub fn richardson_order(p: &VolterraProblem) -> Result<Option<f64>> {
    let solve_on = |g: Grid| {
        solve(&VolterraProblem {
            kernel: p.kernel,
            forcing: p.forcing,
            rate: p.rate,
            delta: p.delta,
            grid: g,
            left: p.left,
            quadrature: p.quadrature,
        })
    };
    let coarse = solve_on(p.grid.clone())?;
    let half = solve_on(p.grid.refined(2))?;
    let quarter = solve_on(p.grid.refined(4))?;
    let mut e1: f64 = 0.0;
    let mut e2: f64 = 0.0;
    for (i, &xi) in coarse.grid.nodes().iter().enumerate() {
        let r = quarter.eval(xi);
        e1 = e1.max((coarse.values[i] - r).abs());
        e2 = e2.max((half.eval(xi) - r).abs());
    }
    if e1 == 0.0 {
        return Ok(None);
    }
    if e2 == 0.0 {
        return Ok(Some(f64::INFINITY));
    }
    Ok(Some((e1 / e2).log2()))
}

fn lagrange(xs: &[f64], fs: &[f64], t: f64) -> f64 {
    let mut s = 0.0;
    for i in 0..xs.len() {
        let mut l = 1.0;
        for j in 0..xs.len() {
            if i != j {
                l *= (t - xs[j]) / (xs[i] - xs[j]);
            }
        }
        s += l * fs[i];
    }
    s
}

fn lagrange_derivative(xs: &[f64], fs: &[f64], t: f64) -> f64 {
    let m = xs.len();
    let mut s = 0.0;
    for i in 0..m {
        let mut denom = 1.0;
        for j in 0..m {
            if j != i {
                denom *= xs[i] - xs[j];
            }
        }
        let mut num = 0.0;
        for k in 0..m {
            if k == i {
                continue;
            }
            let mut p = 1.0;
            for (j, &xj) in xs.iter().enumerate().take(m) {
                if j != i && j != k {
                    p *= t - xj;
                }
            }
            num += p;
        }
        s += fs[i] * num / denom;
    }
    s
}

impl VolterraSolution {
    pub fn nodes(&self) -> &[f64] {
        self.grid.nodes()
    }

    pub fn x_max(&self) -> f64 {
        self.grid.x_max()
    }

    /// Interpolation stencil (at most four nodes, never straddling a jump of `ω`).
    fn stencil(&self, x: f64) -> (usize, usize) {
        let nodes = self.grid.nodes();
        let last = nodes.len() - 1;
        let k = nodes.partition_point(|&v| v <= x).saturating_sub(1).min(last - 1);
        let (lo, hi) = self.grid.segment_of_cell(k);
        let width = (hi - lo + 1).min(4);
        let start = k.saturating_sub(1).max(lo).min(hi + 1 - width);
        (start, start + width)
    }

    /// `H(x)`; the left extension below zero and `NaN` beyond `x_max`.
    pub fn eval(&self, x: f64) -> f64 {
        if x < 0.0 {
            return self.left.eval(x);
        }
        if x > self.x_max() * (1.0 + 1e-12) + 1e-300 {
            return f64::NAN;
        }
        if let Some(i) = self.grid.node_index(x) {
            return self.values[i];
        }
        let (a, b) = self.stencil(x);
        lagrange(&self.grid.nodes()[a..b], &self.values[a..b], x)
    }

    /// Nodal derivative estimates: three-point central differences inside a
    /// smooth segment, right-sided at its left end (so right-derivatives at
    /// jumps of `ω` and at zero), left-sided at `x_max`.
    pub fn derivative_samples(&self) -> Vec<f64> {
        let nodes = self.grid.nodes();
        let n = nodes.len();
        if n < 3 {
            let d = (self.values[1] - self.values[0]) / (nodes[1] - nodes[0]);
            return vec![d; n];
        }
        let mut out = vec![0.0; n];
        for i in 0..n {
            let cell = i.min(n - 2);
            let (lo, hi) = self.grid.segment_of_cell(cell);
            let (a, b) = if hi - lo < 2 {
                // segment too short, borrow across the boundary
                let a = i.saturating_sub(1).min(n - 3);
                (a, a + 3)
            } else if i == lo {
                (i, i + 3)
            } else if i == hi {
                (i - 2, i + 1)
            } else {
                (i - 1, i + 2)
            };
            out[i] = lagrange_derivative(&nodes[a..b], &self.values[a..b], nodes[i]);
        }
        out
    }

    /// Interpolated derivative at an arbitrary point of `[0, x_max]`.
    pub fn derivative_at(&self, x: f64) -> f64 {
        let (a, b) = self.stencil(x);
        lagrange_derivative(&self.grid.nodes()[a..b], &self.values[a..b], x)
    }
}
