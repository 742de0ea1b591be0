//! Exact arithmetic on exponential polynomials `sum c_k x^{m_k} e^{r_k x}`.
//!
//! The classical scale functions of the Brownian and Cramér–Lundberg families
//! are finite sums of this form, and the class is closed under the
//! convolution-type integrals `∫_L^x K(x-z) f(z) dz` that appear in the band,
//! step and occupation-time formulas. Carrying them symbolically gives
//! machine-precision oracles instead of a second quadrature approximation.

use std::fmt;

/// Two rates closer than this (relative) are treated as equal.
pub const RATE_TOL: f64 = 1e-9;

fn same_rate(a: f64, b: f64) -> bool {
    (a - b).abs() <= RATE_TOL * a.abs().max(b.abs()).max(1.0)
}

fn binomial(n: u32, k: u32) -> f64 {
    let mut acc = 1.0;
    for i in 0..k {
        acc *= f64::from(n - i) / f64::from(i + 1);
    }
    acc
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// `coef * x^power * e^{rate x}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpTerm {
    pub coef: f64,
    pub power: u32,
    pub rate: f64,
}

impl ExpTerm {
    pub fn new(coef: f64, power: u32, rate: f64) -> Self {
        Self { coef, power, rate }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let p = if self.power == 0 {
            1.0
        } else {
            x.powi(self.power as i32)
        };
        self.coef * p * (self.rate * x).exp()
    }
}

/// A finite sum of [`ExpTerm`]s, viewed as a function on the whole real line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PolyExp {
    terms: Vec<ExpTerm>,
}

impl PolyExp {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::from_terms(vec![ExpTerm::new(c, 0, 0.0)])
    }

    pub fn exp(coef: f64, rate: f64) -> Self {
        Self::from_terms(vec![ExpTerm::new(coef, 0, rate)])
    }

    pub fn from_terms(terms: Vec<ExpTerm>) -> Self {
        let mut p = Self { terms };
        p.simplify();
        p
    }

    pub fn terms(&self) -> &[ExpTerm] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.terms.iter().map(|t| t.eval(x)).sum()
    }

    /// Merges terms with equal power and (numerically) equal rate, drops zeros.
    fn simplify(&mut self) {
        self.terms.retain(|t| t.coef != 0.0);
        self.terms.sort_by(|a, b| {
            a.rate
                .partial_cmp(&b.rate)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.power.cmp(&b.power))
        });
        let mut out: Vec<ExpTerm> = Vec::with_capacity(self.terms.len());
        for t in self.terms.drain(..) {
            if let Some(u) = out
                .iter_mut()
                .rev()
                .take_while(|u| same_rate(u.rate, t.rate))
                .find(|u| u.power == t.power)
            {
                u.coef += t.coef;
            } else {
                out.push(t);
            }
        }
        out.retain(|t| t.coef != 0.0);
        self.terms = out;
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::from_terms(
            self.terms
                .iter()
                .map(|t| ExpTerm::new(t.coef * c, t.power, t.rate))
                .collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        Self::from_terms(terms)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                terms.push(ExpTerm::new(a.coef * b.coef, a.power + b.power, a.rate + b.rate));
            }
        }
        Self::from_terms(terms)
    }

    /// Multiplies by `e^{rate x}`.
    pub fn mul_exp(&self, rate: f64) -> Self {
        Self::from_terms(
            self.terms
                .iter()
                .map(|t| ExpTerm::new(t.coef, t.power, t.rate + rate))
                .collect(),
        )
    }

    /// Returns `x ↦ f(x - y)`.
    pub fn shift(&self, y: f64) -> Self {
        let mut terms = Vec::new();
        for t in &self.terms {
            let base = t.coef * (-t.rate * y).exp();
            for i in 0..=t.power {
                let c = base * binomial(t.power, i) * (-y).powi(i as i32);
                terms.push(ExpTerm::new(c, t.power - i, t.rate));
            }
        }
        Self::from_terms(terms)
    }

    pub fn derivative(&self) -> Self {
        let mut terms = Vec::new();
        for t in &self.terms {
            terms.push(ExpTerm::new(t.coef * t.rate, t.power, t.rate));
            if t.power > 0 {
                terms.push(ExpTerm::new(t.coef * f64::from(t.power), t.power - 1, t.rate));
            }
        }
        Self::from_terms(terms)
    }

    /// Some antiderivative (no constant fixed).
    fn primitive(&self) -> Self {
        let mut terms = Vec::new();
        for t in &self.terms {
            primitive_monomial(t.power, t.rate, t.coef, &mut terms);
        }
        Self::from_terms(terms)
    }

    /// `x ↦ ∫_lower^x f(z) dz`.
    pub fn antiderivative_from(&self, lower: f64) -> Self {
        let p = self.primitive();
        let c = p.eval(lower);
        p.sub(&Self::constant(c))
    }

    /// `∫_a^b f(z) dz`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        let p = self.primitive();
        p.eval(b) - p.eval(a)
    }

    /// `x ↦ ∫_lower^x K(x - z) f(z) dz` where `K = self`, valid for `x ≥ lower`
    /// provided `f` is given by `other` on `[lower, x]`.
    pub fn conv_from(&self, other: &Self, lower: f64) -> Self {
        let mut terms = Vec::new();
        for k in &self.terms {
            for f in &other.terms {
                conv_terms(k, f, Some(lower), None, &mut terms);
            }
        }
        Self::from_terms(terms)
    }

    /// `x ↦ ∫_s^t K(x - z) f(z) dz` with fixed limits, valid for `x ≥ t`.
    pub fn conv_between(&self, other: &Self, s: f64, t: f64) -> Self {
        let mut terms = Vec::new();
        for k in &self.terms {
            for f in &other.terms {
                conv_terms(k, f, Some(s), Some(t), &mut terms);
            }
        }
        Self::from_terms(terms)
    }
}

/// Pushes an antiderivative of `coef z^k e^{d z}`.
fn primitive_monomial(k: u32, d: f64, coef: f64, out: &mut Vec<ExpTerm>) {
    if same_rate(d, 0.0) {
        out.push(ExpTerm::new(coef / f64::from(k + 1), k + 1, 0.0));
        return;
    }
    let kf = factorial(k);
    for i in 0..=k {
        let sign = if (k - i) % 2 == 0 { 1.0 } else { -1.0 };
        let c = sign * kf / (factorial(i) * d.powi((k - i + 1) as i32));
        out.push(ExpTerm::new(coef * c, i, d));
    }
}

/// Value at `z` of the antiderivative produced by [`primitive_monomial`].
fn primitive_value(k: u32, d: f64, z: f64) -> f64 {
    let mut tmp = Vec::new();
    primitive_monomial(k, d, 1.0, &mut tmp);
    tmp.iter().map(|t| t.eval(z)).sum()
}

/// Expands `∫ K(x - z) f(z) dz` for one kernel term and one integrand term.
///
/// `K(x-z) f(z) = ck cf e^{a x} Σ_i C(m,i) (-1)^i x^{m-i} z^{i+n} e^{(b-a) z}`.
/// With `upper == None` the upper limit is `x` itself.
fn conv_terms(k: &ExpTerm, f: &ExpTerm, lower: Option<f64>, upper: Option<f64>, out: &mut Vec<ExpTerm>) {
    let a = k.rate;
    let d = f.rate - a;
    let m = k.power;
    let n = f.power;
    let lower = lower.unwrap_or(0.0);
    for i in 0..=m {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        let c = k.coef * f.coef * binomial(m, i) * sign;
        let j = i + n;
        let outer_power = m - i;
        match upper {
            Some(t) => {
                let v = primitive_value(j, d, t) - primitive_value(j, d, lower);
                out.push(ExpTerm::new(c * v, outer_power, a));
            }
            None => {
                // e^{a x} F_j(x): every term of F_j carries e^{d x}.
                let mut prim = Vec::new();
                primitive_monomial(j, d, c, &mut prim);
                for p in prim {
                    out.push(ExpTerm::new(p.coef, outer_power + p.power, a + p.rate));
                }
                let v = primitive_value(j, d, lower);
                out.push(ExpTerm::new(-c * v, outer_power, a));
            }
        }
    }
}

impl fmt::Display for PolyExp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{:e}·x^{}·e^({:e}x)", t.coef, t.power, t.rate)?;
        }
        Ok(())
    }
}

/// A right-continuous piecewise exponential polynomial.
///
/// `starts[0]` is usually `-inf`; piece `k` is active on `[starts[k], starts[k+1])`.
#[derive(Debug, Clone, PartialEq)]
pub struct Piecewise {
    starts: Vec<f64>,
    pieces: Vec<PolyExp>,
}

impl Piecewise {
    /// A function equal to `below` for `x < start` and `f` afterwards.
    pub fn from_start(below: f64, start: f64, f: PolyExp) -> Self {
        Self {
            starts: vec![f64::NEG_INFINITY, start],
            pieces: vec![PolyExp::constant(below), f],
        }
    }

    pub fn new(starts: Vec<f64>, pieces: Vec<PolyExp>) -> Self {
        assert_eq!(starts.len(), pieces.len());
        assert!(starts.windows(2).all(|w| w[0] <= w[1]));
        Self { starts, pieces }
    }

    pub fn whole_line(f: PolyExp) -> Self {
        Self {
            starts: vec![f64::NEG_INFINITY],
            pieces: vec![f],
        }
    }

    pub fn starts(&self) -> &[f64] {
        &self.starts
    }

    pub fn pieces(&self) -> &[PolyExp] {
        &self.pieces
    }

    fn index(&self, x: f64) -> usize {
        match self.starts.partition_point(|&s| s <= x) {
            0 => 0,
            k => k - 1,
        }
    }

    pub fn piece_at(&self, x: f64) -> &PolyExp {
        &self.pieces[self.index(x)]
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.piece_at(x).eval(x)
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            starts: self.starts.clone(),
            pieces: self.pieces.iter().map(|p| p.scale(c)).collect(),
        }
    }

    /// Pointwise sum; the breakpoints are merged.
    pub fn add(&self, other: &Self) -> Self {
        let mut starts: Vec<f64> = self.starts.iter().chain(other.starts.iter()).copied().collect();
        starts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        starts.dedup();
        let pieces = starts
            .iter()
            .map(|&s| self.piece_at(s).add(other.piece_at(s)))
            .collect();
        Self { starts, pieces }
    }

    /// `x ↦ g(x) * e^{rate x}`.
    pub fn mul_exp(&self, rate: f64) -> Self {
        Self {
            starts: self.starts.clone(),
            pieces: self.pieces.iter().map(|p| p.mul_exp(rate)).collect(),
        }
    }

    /// `x ↦ g(x - y)`.
    pub fn shift(&self, y: f64) -> Self {
        Self {
            starts: self.starts.iter().map(|s| s + y).collect(),
            pieces: self.pieces.iter().map(|p| p.shift(y)).collect(),
        }
    }

    /// Segments `(lo, hi, piece)` intersected with `[lo_cut, hi_cut]`.
    fn segments(&self, lo_cut: f64, hi_cut: f64) -> Vec<(f64, f64, &PolyExp)> {
        let mut out = Vec::new();
        for (k, p) in self.pieces.iter().enumerate() {
            let lo = self.starts[k].max(lo_cut);
            let hi = self
                .starts
                .get(k + 1)
                .copied()
                .unwrap_or(f64::INFINITY)
                .min(hi_cut);
            if hi > lo {
                out.push((lo, hi, p));
            }
        }
        out
    }

    /// `∫_a^b g(z) dz`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        self.segments(a, b)
            .into_iter()
            .map(|(lo, hi, p)| p.integral(lo, hi))
            .sum()
    }

    /// `x ↦ ∫_lower^x K(x - z) g(z) dz` (zero for `x < lower`).
    pub fn conv_from(&self, kernel: &PolyExp, lower: f64) -> Self {
        let mut bps = vec![lower];
        bps.extend(self.starts.iter().copied().filter(|&s| s > lower));
        let mut starts = vec![f64::NEG_INFINITY];
        let mut pieces = vec![PolyExp::zero()];
        for &r in &bps {
            let mut acc = PolyExp::zero();
            for (lo, hi, p) in self.segments(lower, r) {
                acc = acc.add(&kernel.conv_between(p, lo, hi));
            }
            acc = acc.add(&kernel.conv_from(self.piece_at(r), r));
            starts.push(r);
            pieces.push(acc);
        }
        Self { starts, pieces }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        // composite Simpson, plenty for smooth integrands
        let n = 4000;
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    fn sample() -> PolyExp {
        PolyExp::from_terms(vec![
            ExpTerm::new(1.5, 0, 0.7),
            ExpTerm::new(-0.4, 1, -1.3),
            ExpTerm::new(2.0, 2, 0.0),
        ])
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let p = sample();
        let d = p.derivative();
        for &x in &[-1.0, 0.0, 0.3, 2.0] {
            let fd = (p.eval(x + 1e-6) - p.eval(x - 1e-6)) / 2e-6;
            assert!((d.eval(x) - fd).abs() < 1e-6, "{x}");
        }
    }

    #[test]
    fn antiderivative_matches_quadrature() {
        let p = sample();
        let a = p.antiderivative_from(0.2);
        assert!((a.eval(1.7) - quad(|z| p.eval(z), 0.2, 1.7)).abs() < 1e-10);
        assert!(a.eval(0.2).abs() < 1e-14);
    }

    #[test]
    fn shift_is_translation() {
        let p = sample();
        let s = p.shift(0.4);
        for &x in &[-0.5, 0.0, 1.1] {
            assert!((s.eval(x) - p.eval(x - 0.4)).abs() < 1e-12);
        }
    }

    #[test]
    fn convolution_matches_quadrature() {
        let k = PolyExp::from_terms(vec![ExpTerm::new(1.0, 0, 0.5), ExpTerm::new(-1.0, 0, -2.0)]);
        let f = sample();
        let g = k.conv_from(&f, 0.3);
        for &x in &[0.3, 0.9, 2.5] {
            let q = quad(|z| k.eval(x - z) * f.eval(z), 0.3, x);
            assert!((g.eval(x) - q).abs() < 1e-9, "{x}: {} vs {}", g.eval(x), q);
        }
        let h = k.conv_between(&f, 0.1, 0.8);
        let q = quad(|z| k.eval(2.0 - z) * f.eval(z), 0.1, 0.8);
        assert!((h.eval(2.0) - q).abs() < 1e-10);
    }

    #[test]
    fn convolution_with_equal_rates() {
        // e^{x} * e^{x} = x e^{x}
        let e = PolyExp::exp(1.0, 1.0);
        let g = e.conv_from(&e, 0.0);
        for &x in &[0.0, 0.5, 3.0] {
            assert!((g.eval(x) - x * x.exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn piecewise_convolution_matches_quadrature() {
        let k = PolyExp::from_terms(vec![ExpTerm::new(1.0, 0, 0.5), ExpTerm::new(-1.0, 0, -2.0)]);
        let g = Piecewise::new(
            vec![f64::NEG_INFINITY, 0.0, 1.0],
            vec![PolyExp::zero(), PolyExp::exp(1.0, 0.3), PolyExp::constant(2.0)],
        );
        let c = g.conv_from(&k, 0.4);
        for &x in &[0.2f64, 0.4, 0.8, 1.0, 1.6, 3.0] {
            let q = if x > 0.4 {
                quad(|z| k.eval(x - z) * (0.3 * z).exp(), 0.4, x.min(1.0))
                    + if x > 1.0 { quad(|z| k.eval(x - z) * 2.0, 1.0, x) } else { 0.0 }
            } else {
                0.0
            };
            assert!((c.eval(x) - q).abs() < 1e-9, "{x}");
        }
        assert!((g.integral(-1.0, 2.0) - (quad(|z| (0.3 * z).exp(), 0.0, 1.0) + 2.0)).abs() < 1e-10);
    }
}
