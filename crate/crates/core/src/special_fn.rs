//! Gamma, Kummer `₁F₁`, modified Bessel `I_v`/`K_v` and Airy functions.
//!
//! Everything is a plain power series with a hard argument window; the
//! windows cover the moderate arguments that the closed-form families need.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Stopping rule for the power series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesControl {
    pub max_terms: usize,
    pub rel_tol: f64,
}

impl SeriesControl {
    pub fn new(max_terms: usize, rel_tol: f64) -> Result<Self> {
        if max_terms < 1 || !(rel_tol > 0.0) {
            return Err(Error::Domain(format!(
                "series control needs max_terms >= 1 and rel_tol > 0 (got {max_terms}, {rel_tol})"
            )));
        }
        Ok(Self { max_terms, rel_tol })
    }
}

impl Default for SeriesControl {
    fn default() -> Self {
        Self {
            max_terms: 1000,
            rel_tol: 1e-17,
        }
    }
}

/// Largest argument accepted by the Bessel series.
pub const BESSEL_Z_MAX: f64 = 30.0;
/// Half-width of the Airy series window.
pub const AIRY_X_MAX: f64 = 15.0;

const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

fn is_nonpositive_integer(z: f64) -> bool {
    z <= 0.0 && z == z.round()
}

/// `Γ(z)` by the Lanczos approximation, with reflection below 1/2.
pub fn gamma_fn(z: f64) -> Result<f64> {
    if is_nonpositive_integer(z) {
        return Err(Error::Pole(z));
    }
    if !z.is_finite() {
        return Err(Error::Domain(format!("gamma of {z}")));
    }
    if z < 0.5 {
        return Ok(PI / ((PI * z).sin() * gamma_fn(1.0 - z)?));
    }
    if z == z.round() && z <= 21.0 {
        // exact factorials
        let mut f = 1.0;
        for k in 2..(z as u64) {
            f *= k as f64;
        }
        return Ok(f);
    }
    let z = z - 1.0;
    let mut a = LANCZOS[0];
    let t = z + LANCZOS_G + 0.5;
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (z + i as f64);
    }
    // t^{z+1/2} split in two so large z does not overflow early
    let half = t.powf(0.5 * (z + 0.5));
    Ok((2.0 * PI).sqrt() * half * (-t).exp() * half * a)
}

/// `1/Γ(z)`, zero at the poles.
fn rgamma(z: f64) -> f64 {
    if is_nonpositive_integer(z) {
        0.0
    } else {
        gamma_fn(z).map(|g| 1.0 / g).unwrap_or(0.0)
    }
}

/// Sums `Σ t_n` where `t_{n+1} = t_n · ratio(n)`, stopping once the terms are
/// negligible and past `peak`.
fn sum_series(first: f64, peak: f64, ctl: &SeriesControl, what: &str, ratio: impl Fn(usize) -> f64) -> Result<f64> {
    let mut term = first;
    let mut sum = first;
    for n in 0..ctl.max_terms {
        term *= ratio(n);
        sum += term;
        if term == 0.0 || (term.abs() <= ctl.rel_tol * sum.abs() && n as f64 > peak) {
            return Ok(sum);
        }
        if !sum.is_finite() {
            return Err(Error::NonFinite(n as f64));
        }
    }
    Err(Error::NoConvergence {
        what: what.into(),
        iterations: ctl.max_terms,
    })
}

/// Kummer's confluent hypergeometric function `₁F₁(a; b; z)`.
///
/// Negative arguments go through `₁F₁(a;b;z) = e^z ₁F₁(b-a;b;-z)`, which keeps
/// the summed terms of one sign whenever `b-a ≥ 0`.
pub fn kummer_1f1(a: f64, b: f64, z: f64, ctl: &SeriesControl) -> Result<f64> {
    if is_nonpositive_integer(b) {
        return Err(Error::Pole(b));
    }
    if z == 0.0 {
        return Ok(1.0);
    }
    if z < 0.0 && !is_nonpositive_integer(a) {
        return Ok(z.exp() * kummer_series(b - a, b, -z, ctl)?);
    }
    kummer_series(a, b, z, ctl)
}

fn kummer_series(a: f64, b: f64, z: f64, ctl: &SeriesControl) -> Result<f64> {
    let peak = a.abs() + b.abs() + z.abs();
    sum_series(1.0, peak, ctl, "1F1 series", |n| {
        let n = n as f64;
        (a + n) / ((b + n) * (n + 1.0)) * z
    })
}

fn check_bessel_arg(z: f64) -> Result<()> {
    if z > BESSEL_Z_MAX {
        return Err(Error::OutsideWindow {
            arg: z,
            limit: BESSEL_Z_MAX,
        });
    }
    Ok(())
}

/// Modified Bessel function of the first kind `I_v(z)`, `z ≥ 0`.
pub fn bessel_i(v: f64, z: f64, ctl: &SeriesControl) -> Result<f64> {
    if z < 0.0 {
        return Err(Error::Domain(format!("I_v needs z >= 0, got {z}")));
    }
    check_bessel_arg(z)?;
    if v < 0.0 && v == v.round() {
        return bessel_i(-v, z, ctl);
    }
    if z == 0.0 {
        return Ok(if v == 0.0 { 1.0 } else if v > 0.0 { 0.0 } else { f64::INFINITY });
    }
    let h = 0.5 * z;
    let first = h.powf(v) * rgamma(v + 1.0);
    let h2 = h * h;
    sum_series(first, v.abs() + z, ctl, "Bessel I series", |n| {
        let n = n as f64;
        h2 / ((n + 1.0) * (v + n + 1.0))
    })
}

/// Modified Bessel function of the second kind for non-integer order,
/// `K_v(z) = (π/2)(I_{-v}(z) - I_v(z)) / sin(vπ)`.
pub fn bessel_k(v: f64, z: f64, ctl: &SeriesControl) -> Result<f64> {
    if (v - v.round()).abs() <= 1e-8 {
        return Err(Error::IntegerOrder(v));
    }
    if !(z > 0.0) {
        return Err(Error::Domain(format!("K_v needs z > 0, got {z}")));
    }
    check_bessel_arg(z)?;
    let d = bessel_i(-v, z, ctl)? - bessel_i(v, z, ctl)?;
    Ok(0.5 * PI * d / (v * PI).sin())
}

fn check_airy_arg(x: f64) -> Result<()> {
    if !(x.abs() <= AIRY_X_MAX) {
        return Err(Error::OutsideWindow {
            arg: x,
            limit: AIRY_X_MAX,
        });
    }
    Ok(())
}

/// The two Maclaurin solutions `f = 1 + x³/6 + …` and `g = x + x⁴/12 + …` of
/// `y'' = x y`, with their derivatives.
fn airy_basis(x: f64) -> Result<[f64; 4]> {
    check_airy_arg(x)?;
    let ctl = SeriesControl::default();
    let x3 = x * x * x;
    let peak = x.abs().powf(1.5);
    // a_{n+3} = a_n / ((n+3)(n+2)), step k covers n = 3k
    let f = sum_series(1.0, peak, &ctl, "Airy series", |k| {
        let n = 3.0 * k as f64;
        x3 / ((n + 3.0) * (n + 2.0))
    })?;
    let g = sum_series(x, peak, &ctl, "Airy series", |k| {
        let n = 3.0 * k as f64 + 1.0;
        x3 / ((n + 3.0) * (n + 2.0))
    })?;
    // f' = Σ a_{3k} 3k x^{3k-1}: start at x²/2
    let fp = sum_series(0.5 * x * x, peak, &ctl, "Airy series", |k| {
        let n = 3.0 * k as f64 + 3.0;
        x3 * (n + 3.0) / (n * (n + 3.0) * (n + 2.0))
    })?;
    let gp = sum_series(1.0, peak, &ctl, "Airy series", |k| {
        let n = 3.0 * k as f64 + 1.0;
        x3 * (n + 3.0) / (n * (n + 3.0) * (n + 2.0))
    })?;
    Ok([f, g, fp, gp])
}

fn airy_constants() -> (f64, f64) {
    let c1 = 3f64.powf(-2.0 / 3.0) * rgamma(2.0 / 3.0);
    let c2 = 3f64.powf(-1.0 / 3.0) * rgamma(1.0 / 3.0);
    (c1, c2)
}

/// `(Ai, Ai', Bi, Bi')` at `x`, `|x| ≤ 15`.
pub fn airy_all(x: f64) -> Result<[f64; 4]> {
    let [f, g, fp, gp] = airy_basis(x)?;
    let (c1, c2) = airy_constants();
    let s3 = 3f64.sqrt();
    Ok([
        c1 * f - c2 * g,
        c1 * fp - c2 * gp,
        s3 * (c1 * f + c2 * g),
        s3 * (c1 * fp + c2 * gp),
    ])
}

pub fn airy_ai(x: f64) -> Result<f64> {
    Ok(airy_all(x)?[0])
}

pub fn airy_ai_prime(x: f64) -> Result<f64> {
    Ok(airy_all(x)?[1])
}

pub fn airy_bi(x: f64) -> Result<f64> {
    Ok(airy_all(x)?[2])
}

pub fn airy_bi_prime(x: f64) -> Result<f64> {
    Ok(airy_all(x)?[3])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctl() -> SeriesControl {
        SeriesControl::default()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn gamma_values() {
        assert_eq!(gamma_fn(1.0).unwrap(), 1.0);
        assert_eq!(gamma_fn(5.0).unwrap(), 24.0);
        assert!(rel(gamma_fn(0.5).unwrap(), PI.sqrt()) < 1e-14);
        assert!(rel(gamma_fn(-0.5).unwrap(), -2.0 * PI.sqrt()) < 1e-14);
        for z in [0.0, -1.0, -7.0] {
            assert_eq!(gamma_fn(z), Err(Error::Pole(z)));
        }
    }

    #[test]
    fn gamma_accuracy_on_half_integers_and_recurrence() {
        // Γ(n + 1/2) = (2n)! √π / (4^n n!)
        let mut v = PI.sqrt();
        for n in 0..29 {
            let z = n as f64 + 0.5;
            assert!(rel(gamma_fn(z).unwrap(), v) < 1e-12, "z = {z}");
            v *= z;
        }
        for i in 0..60 {
            let z = 0.5 + i as f64 * 0.49;
            let lhs = gamma_fn(z + 1.0).unwrap();
            assert!(rel(lhs, z * gamma_fn(z).unwrap()) < 1e-12, "z = {z}");
        }
    }

    #[test]
    fn kummer_values() {
        assert_eq!(kummer_1f1(0.3, 1.7, 0.0, &ctl()).unwrap(), 1.0);
        for z in [-3.0, -0.4, 0.7, 5.0] {
            assert!(rel(kummer_1f1(1.3, 1.3, z, &ctl()).unwrap(), f64::exp(z)) < 1e-14);
        }
        assert!(rel(kummer_1f1(1.0, 2.0, 1.0, &ctl()).unwrap(), 1f64.exp() - 1.0) < 1e-14);
        // (e^z - 1)/z at negative z exercises the transformation
        let z = -2.5f64;
        assert!(rel(kummer_1f1(1.0, 2.0, z, &ctl()).unwrap(), (z.exp() - 1.0) / z) < 1e-14);
        // terminating series: 1F1(-2; 1; z) = 1 - 2z + z²/2
        let z = 3.0;
        assert!(rel(kummer_1f1(-2.0, 1.0, z, &ctl()).unwrap(), 1.0 - 2.0 * z + 0.5 * z * z) < 1e-14);
        assert!(kummer_1f1(1.0, -2.0, 1.0, &ctl()).is_err());
        let tight = SeriesControl::new(3, 1e-16).unwrap();
        assert!(matches!(kummer_1f1(1.0, 2.0, 10.0, &tight), Err(Error::NoConvergence { .. })));
    }

    #[test]
    fn doubling_max_terms_is_stable() {
        let a = SeriesControl::new(200, 1e-16).unwrap();
        let b = SeriesControl::new(400, 1e-16).unwrap();
        let k1 = kummer_1f1(0.7, 2.2, 4.0, &a).unwrap();
        let k2 = kummer_1f1(0.7, 2.2, 4.0, &b).unwrap();
        assert!(rel(k1, k2) < 1e-15);
        let i1 = bessel_i(1.2, 7.0, &a).unwrap();
        let i2 = bessel_i(1.2, 7.0, &b).unwrap();
        assert!(rel(i1, i2) < 1e-15);
    }

    #[test]
    fn bessel_values() {
        assert_eq!(bessel_i(0.0, 0.0, &ctl()).unwrap(), 1.0);
        assert_eq!(bessel_i(1.5, 0.0, &ctl()).unwrap(), 0.0);
        assert!((bessel_i(1.0, 1.0, &ctl()).unwrap() - 0.565_159_103_992_485).abs() < 1e-12);
        let k = bessel_k(0.5, 1.0, &ctl()).unwrap();
        assert!((k - (PI / 2.0).sqrt() * (-1f64).exp()).abs() < 1e-12);
        assert!((k - 0.461_068_504_4).abs() < 1e-10);
        // I_{1/2}(z) = √(2/(πz)) sinh z
        let z = 2.3f64;
        assert!(rel(bessel_i(0.5, z, &ctl()).unwrap(), (2.0 / (PI * z)).sqrt() * z.sinh()) < 1e-13);
        assert!(rel(bessel_i(-2.0, z, &ctl()).unwrap(), bessel_i(2.0, z, &ctl()).unwrap()) < 1e-15);
    }

    #[test]
    fn bessel_k_small_argument_asymptotic() {
        for v in [0.7, 1.2, 2.7] {
            let z = 1e-4f64;
            let k = bessel_k(v, z, &ctl()).unwrap();
            let asym = 0.5 * gamma_fn(v).unwrap() * (z / 2.0).powf(-v);
            assert!((k / asym - 1.0).abs() < 1e-3, "v = {v}");
        }
    }

    #[test]
    fn bessel_rejections() {
        assert_eq!(bessel_k(2.0, 1.0, &ctl()), Err(Error::IntegerOrder(2.0)));
        assert!(matches!(bessel_k(2.0 + 1e-9, 1.0, &ctl()), Err(Error::IntegerOrder(_))));
        assert!(matches!(bessel_i(0.5, 31.0, &ctl()), Err(Error::OutsideWindow { .. })));
        assert!(bessel_k(0.5, 0.0, &ctl()).is_err());
    }

    #[test]
    fn airy_values() {
        assert!((airy_ai(0.0).unwrap() - 0.355_028_053_9).abs() < 1e-10);
        assert!((airy_bi(0.0).unwrap() - 0.614_926_627_4).abs() < 1e-10);
        assert!((airy_ai_prime(0.0).unwrap() + 0.258_819_403_8).abs() < 1e-10);
        assert!((airy_bi_prime(0.0).unwrap() - 0.448_288_357_4).abs() < 1e-10);
        // Ai(1), Bi(1)
        assert!((airy_ai(1.0).unwrap() - 0.135_292_416_312_881_4).abs() < 1e-13);
        assert!((airy_bi(1.0).unwrap() - 1.207_423_594_952_871).abs() < 1e-12);
        assert!(matches!(airy_ai(15.5), Err(Error::OutsideWindow { .. })));
    }

    #[test]
    fn airy_wronskian() {
        for i in 0..20 {
            let x = -5.0 + 10.0 * i as f64 / 19.0;
            let [ai, aip, bi, bip] = airy_all(x).unwrap();
            assert!((ai * bip - aip * bi - 1.0 / PI).abs() < 1e-9, "x = {x}");
        }
    }

    #[test]
    fn airy_satisfies_ode() {
        for x in [-3.0, -1.0, 0.5, 2.0, 4.0] {
            let h = 1e-3;
            let d2 = (airy_bi(x + h).unwrap() - 2.0 * airy_bi(x).unwrap() + airy_bi(x - h).unwrap()) / (h * h);
            assert!(rel(d2, x * airy_bi(x).unwrap()) < 1e-5 || x.abs() < 1e-12);
        }
    }
}
