//! Monte Carlo estimates of `ω`-killed exit transforms.
//!
//! Brownian paths are stepped on a fixed `dt` with exact Gaussian increments;
//! barrier crossings inside a step are detected with the Brownian-bridge
//! crossing probability and reflection uses the exact bridge extremum.
//! Cramér–Lundberg paths are simulated exactly, event by event.
//!
//! Every path draws from its own ChaCha8 stream `(seed, path index)`, and
//! path values are reduced in index order by pairwise summation, so results
//! do not depend on the thread count.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy_model::LevyModel;
use crate::omega_scale::OmegaSpec;

/// Accumulated `∫ω` past which a path's weight counts as zero.
const KILL_LOG_WEIGHT: f64 = 40.0;
/// Fraction of capped paths above which an estimate is flagged.
const FLAG_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// Weight `exp(−∫ω(X_t) dt)`.
    ExponentialWeight,
    /// Poisson marks at rate `λ ≥ sup ω`; killed at the first mark below `ω(X)`.
    PoissonThinning,
}

/// Simulation parameters as read from a job file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSettings {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_paths")]
    pub n_paths: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_horizon")]
    pub horizon_cap: f64,
    #[serde(default = "default_estimator")]
    pub estimator: Estimator,
}

fn default_dt() -> f64 {
    1e-3
}
fn default_paths() -> usize {
    100_000
}
fn default_horizon() -> f64 {
    1e3
}
fn default_estimator() -> Estimator {
    Estimator::ExponentialWeight
}

impl Default for McSettings {
    fn default() -> Self {
        Self {
            dt: default_dt(),
            n_paths: default_paths(),
            seed: 0,
            horizon_cap: default_horizon(),
            estimator: default_estimator(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub model: LevyModel,
    pub omega: OmegaSpec,
    pub dt: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub horizon_cap: f64,
    pub estimator: Estimator,
}

impl SimConfig {
    pub fn new(model: LevyModel, omega: OmegaSpec, settings: &McSettings) -> Result<Self> {
        let cfg = Self {
            model,
            omega,
            dt: settings.dt,
            n_paths: settings.n_paths,
            seed: settings.seed,
            horizon_cap: settings.horizon_cap,
            estimator: settings.estimator,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt = {} must be positive", self.dt)));
        }
        if self.n_paths == 0 {
            return Err(Error::Config("n_paths must be at least 1".into()));
        }
        if !(self.horizon_cap > 0.0) {
            return Err(Error::Config(format!("horizon_cap = {} must be positive", self.horizon_cap)));
        }
        Ok(())
    }

    pub fn with_estimator(mut self, estimator: Estimator) -> Self {
        self.estimator = estimator;
        self
    }

    pub fn with_omega(mut self, omega: OmegaSpec) -> Self {
        self.omega = omega;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MCEstimate {
    pub mean: f64,
    pub stderr: f64,
    /// Paths that finished before the horizon cap.
    pub n_effective: usize,
    pub n: usize,
    pub seed: u64,
    /// Wall-clock seconds; left out of serialized output.
    #[serde(skip)]
    pub elapsed: f64,
    pub truncated_fraction: f64,
    /// More than 1% of paths hit the horizon cap.
    pub flagged: bool,
}

impl MCEstimate {
    /// `(formula − mean)/stderr`; infinite when the estimate is exact and differs.
    pub fn z_score(&self, formula: f64) -> f64 {
        let d = formula - self.mean;
        if self.stderr > 0.0 {
            d / self.stderr
        } else if d.abs() < 1e-12 {
            0.0
        } else {
            f64::INFINITY.copysign(d)
        }
    }
}

/// `𝒜` and `ℬ` from one set of paths.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExitEstimate {
    pub a: MCEstimate,
    pub b: MCEstimate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Lower {
    None,
    Absorb(f64),
    Reflect(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Upper {
    Absorb(f64),
    Reflect(f64),
    /// On reaching `level` the path returns below `to` with its exact
    /// probability and restarts there, or escapes for good. Only valid when
    /// `ω = 0` above `to`.
    Escape { level: f64, to: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Up,
    Down,
    Escaped,
    Killed,
    Truncated,
}

#[derive(Debug, Clone, Copy)]
enum Kernel {
    Bm { mu: f64, sigma: f64 },
    Cl { mu: f64, vartheta: f64, rho: f64 },
}

struct Problem<'a> {
    omega: &'a OmegaSpec,
    start: f64,
    lower: Lower,
    upper: Upper,
    /// Thinning rate; zero disables marks.
    lambda: f64,
}

fn kernel(model: &LevyModel) -> Result<Kernel> {
    match *model {
        LevyModel::BrownianDrift { mu, sigma } => Ok(Kernel::Bm { mu, sigma }),
        LevyModel::CramerLundberg { mu, vartheta, rho } => Ok(Kernel::Cl { mu, vartheta, rho }),
        _ => Err(Error::UnsupportedModel("path simulation needs a Brownian or Cramér–Lundberg model".into())),
    }
}

fn thinning_rate(cfg: &SimConfig, omega: &OmegaSpec, lo: f64, hi: f64) -> Result<f64> {
    if cfg.estimator == Estimator::ExponentialWeight {
        return Ok(0.0);
    }
    let sup = omega.sup_on(lo, hi);
    if !sup.is_finite() {
        return Err(Error::Domain(format!("thinning needs omega bounded on [{lo}, {hi}]")));
    }
    Ok(sup * 1.05)
}

fn exp1(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample::<f64, _>(Exp1)
}

/// Probability that a Brownian bridge from `a` to `b` over `var = σ²dt`
/// touches a level at distances `da`, `db > 0` from its ends.
fn bridge_cross(da: f64, db: f64, var: f64) -> f64 {
    (-2.0 * da * db / var).exp()
}

fn run_bm(cfg: &SimConfig, pb: &Problem, mu: f64, sigma: f64, rng: &mut ChaCha8Rng) -> (Outcome, f64) {
    let dt = cfg.dt;
    let var = sigma * sigma * dt;
    let sd = var.sqrt();
    let om = pb.omega;
    let thinning = cfg.estimator == Estimator::PoissonThinning;
    let mut x = pb.start;
    let mut t = 0.0;
    let mut integ = 0.0;
    let mut clock = if pb.lambda > 0.0 { exp1(rng) / pb.lambda } else { f64::INFINITY };
    loop {
        if t >= cfg.horizon_cap {
            return (Outcome::Truncated, 0.0);
        }
        let z: f64 = rng.sample(StandardNormal);
        let mut x1 = x + mu * dt + sd * z;
        let u: f64 = rng.random();
        if let Lower::Reflect(l) = pb.lower {
            let m = 0.5 * (x + x1 - ((x1 - x).powi(2) - 2.0 * var * (1.0 - u).ln()).sqrt());
            if m < l {
                x1 += l - m;
            }
        }
        if let Upper::Reflect(c) = pb.upper {
            let m = 0.5 * (x + x1 + ((x1 - x).powi(2) - 2.0 * var * (1.0 - u).ln()).sqrt());
            if m > c {
                x1 -= m - c;
            }
        }
        // a crossing ends the step halfway on average
        let mut event = None;
        if let Lower::Absorb(l) = pb.lower {
            if x1 < l || rng.random::<f64>() < bridge_cross(x - l, x1 - l, var) {
                event = Some(Outcome::Down);
            }
        }
        if event.is_none() {
            match pb.upper {
                Upper::Absorb(c) => {
                    if x1 >= c || rng.random::<f64>() < bridge_cross(c - x, c - x1, var) {
                        event = Some(Outcome::Up);
                    }
                }
                Upper::Escape { level, .. } => {
                    if x1 >= level || rng.random::<f64>() < bridge_cross(level - x, level - x1, var) {
                        event = Some(Outcome::Escaped);
                    }
                }
                Upper::Reflect(_) => {}
            }
        }
        let span = if event.is_some() { 0.5 } else { 1.0 };
        if thinning {
            clock -= span * dt;
            while clock <= 0.0 {
                let f = (1.0 + clock / dt).clamp(0.0, 1.0);
                let zb: f64 = rng.sample(StandardNormal);
                let xb = x + f * (x1 - x) + (var * f * (1.0 - f)).sqrt() * zb;
                if rng.random::<f64>() * pb.lambda <= om.value(xb) {
                    return (Outcome::Killed, 0.0);
                }
                clock += exp1(rng) / pb.lambda;
            }
        } else {
            integ += if event.is_some() {
                0.5 * om.value(x) * dt
            } else {
                0.5 * (om.value(x) + om.value(x1)) * dt
            };
            if integ > KILL_LOG_WEIGHT {
                return (Outcome::Killed, 0.0);
            }
        }
        t += dt;
        match event {
            None => x = x1,
            Some(Outcome::Escaped) => {
                let Upper::Escape { level, to } = pb.upper else { unreachable!() };
                if mu > 0.0 && rng.random::<f64>() >= (-2.0 * mu / (sigma * sigma) * (level - to)).exp() {
                    return (Outcome::Escaped, (-integ).exp());
                }
                x = to;
            }
            Some(o) => return (o, (-integ).exp()),
        }
    }
}

fn run_cl(cfg: &SimConfig, pb: &Problem, mu: f64, vartheta: f64, rho: f64, rng: &mut ChaCha8Rng) -> (Outcome, f64) {
    let om = pb.omega;
    let thinning = cfg.estimator == Estimator::PoissonThinning;
    let cap = match pb.upper {
        Upper::Reflect(c) => c,
        _ => f64::INFINITY,
    };
    let target = match pb.upper {
        Upper::Absorb(c) => c,
        Upper::Escape { level, .. } => level,
        Upper::Reflect(_) => f64::INFINITY,
    };
    let mut x = pb.start;
    let mut t = 0.0;
    let mut integ = 0.0;
    loop {
        if t >= cfg.horizon_cap {
            return (Outcome::Truncated, 0.0);
        }
        let tj = if vartheta > 0.0 { exp1(rng) / vartheta } else { f64::INFINITY };
        let tk = if pb.lambda > 0.0 { exp1(rng) / pb.lambda } else { f64::INFINITY };
        let tu = (target - x) / mu;
        let s = tj.min(tk).min(tu);
        let x1 = (x + mu * s).min(cap);
        if !thinning {
            integ += if x + mu * s <= cap {
                om.integral(x, x1) / mu
            } else {
                om.integral(x, cap) / mu + om.value(cap) * (s - (cap - x) / mu)
            };
            if integ > KILL_LOG_WEIGHT {
                return (Outcome::Killed, 0.0);
            }
        }
        t += s;
        x = x1;
        if s == tu {
            match pb.upper {
                Upper::Absorb(_) => return (Outcome::Up, (-integ).exp()),
                Upper::Escape { level, to } => {
                    let loading = rho - vartheta / mu;
                    let back = vartheta / (mu * rho) * (-loading * (level - to)).exp();
                    if loading <= 0.0 || rng.random::<f64>() < back {
                        x = to - exp1(rng) / rho;
                    } else {
                        return (Outcome::Escaped, (-integ).exp());
                    }
                }
                Upper::Reflect(_) => unreachable!(),
            }
        } else if s == tk {
            if rng.random::<f64>() * pb.lambda <= om.value(x) {
                return (Outcome::Killed, 0.0);
            }
            continue;
        } else {
            x -= exp1(rng) / rho;
        }
        match pb.lower {
            Lower::Absorb(l) if x < l => return (Outcome::Down, (-integ).exp()),
            Lower::Reflect(l) if x < l => x = l,
            _ => {}
        }
    }
}

fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 64 {
        return v.iter().sum();
    }
    let (a, b) = v.split_at(v.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

fn summarize(cfg: &SimConfig, values: &[f64], truncated: usize, started: Instant) -> MCEstimate {
    let n = values.len();
    let mean = pairwise_sum(values) / n as f64;
    let dev: Vec<f64> = values.iter().map(|v| (v - mean).powi(2)).collect();
    let var = if n > 1 { pairwise_sum(&dev) / (n - 1) as f64 } else { 0.0 };
    let tf = truncated as f64 / n as f64;
    MCEstimate {
        mean,
        stderr: (var / n as f64).sqrt(),
        n_effective: n - truncated,
        n,
        seed: cfg.seed,
        elapsed: started.elapsed().as_secs_f64(),
        truncated_fraction: tf,
        flagged: tf > FLAG_FRACTION,
    }
}

/// Runs all paths and maps each `(outcome, weight)` to `K` values.
fn simulate<const K: usize>(
    cfg: &SimConfig,
    pb: &Problem,
    f: impl Fn(Outcome, f64) -> [f64; K] + Sync,
) -> Result<[MCEstimate; K]> {
    cfg.validate()?;
    let k = kernel(&cfg.model)?;
    let started = Instant::now();
    let runs: Vec<(Outcome, f64)> = (0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(i);
            match k {
                Kernel::Bm { mu, sigma } => run_bm(cfg, pb, mu, sigma, &mut rng),
                Kernel::Cl { mu, vartheta, rho } => run_cl(cfg, pb, mu, vartheta, rho, &mut rng),
            }
        })
        .collect();
    let truncated = runs.iter().filter(|r| r.0 == Outcome::Truncated).count();
    let mapped: Vec<[f64; K]> = runs.iter().map(|&(o, w)| f(o, w)).collect();
    Ok(std::array::from_fn(|j| {
        let col: Vec<f64> = mapped.iter().map(|m| m[j]).collect();
        summarize(cfg, &col, truncated, started)
    }))
}

fn check_order(lo: f64, x: f64, hi: f64) -> Result<()> {
    if !(lo <= x && x <= hi && lo < hi) {
        return Err(Error::Ordering(format!("need {lo} <= {x} <= {hi} with a nonempty interval")));
    }
    Ok(())
}

/// `𝒜(x, c)` and `ℬ(x, c)` with lower barrier `z`.
pub fn simulate_exit(cfg: &SimConfig, x: f64, c: f64, z: f64) -> Result<ExitEstimate> {
    check_order(z, x, c)?;
    let pb = Problem {
        omega: &cfg.omega,
        start: x,
        lower: Lower::Absorb(z),
        upper: Upper::Absorb(c),
        lambda: thinning_rate(cfg, &cfg.omega, z, c)?,
    };
    let [a, b] = simulate(cfg, &pb, |o, w| match o {
        Outcome::Up => [w, 0.0],
        Outcome::Down => [0.0, w],
        _ => [0.0, 0.0],
    })?;
    Ok(ExitEstimate { a, b })
}

/// `𝒞(x, c)`: `X` reflected at its infimum below 0, until it exceeds `c`.
pub fn simulate_reflected(cfg: &SimConfig, x: f64, c: f64) -> Result<MCEstimate> {
    check_order(0.0, x, c)?;
    let pb = Problem {
        omega: &cfg.omega,
        start: x,
        lower: Lower::Reflect(0.0),
        upper: Upper::Absorb(c),
        lambda: thinning_rate(cfg, &cfg.omega, 0.0, c)?,
    };
    let [e] = simulate(cfg, &pb, |o, w| [if o == Outcome::Up { w } else { 0.0 }])?;
    Ok(e)
}

/// `Ĉ(x, c)`: `S − X` started at `x` until it exceeds `c`, killed at
/// `ω(c − ·)`; simulated as `X` from `c − x` reflected at `c` from above,
/// until it drops below 0.
pub fn simulate_reflected_dual(cfg: &SimConfig, x: f64, c: f64) -> Result<MCEstimate> {
    check_order(0.0, x, c)?;
    let pb = Problem {
        omega: &cfg.omega,
        start: c - x,
        lower: Lower::Absorb(0.0),
        upper: Upper::Reflect(c),
        lambda: thinning_rate(cfg, &cfg.omega, 0.0, c)?,
    };
    let [e] = simulate(cfg, &pb, |o, w| [if o == Outcome::Down { w } else { 0.0 }])?;
    Ok(e)
}

/// `ℋ(x)/ℋ(c)`: reaching `c` from below without a lower barrier.
pub fn simulate_one_sided_up(cfg: &SimConfig, x: f64, c: f64) -> Result<MCEstimate> {
    if !(x <= c) {
        return Err(Error::Ordering(format!("need x = {x} <= c = {c}")));
    }
    let pb = Problem {
        omega: &cfg.omega,
        start: x,
        lower: Lower::None,
        upper: Upper::Absorb(c),
        lambda: thinning_rate(cfg, &cfg.omega, f64::NEG_INFINITY, c)?,
    };
    let [e] = simulate(cfg, &pb, |o, w| [if o == Outcome::Up { w } else { 0.0 }])?;
    Ok(e)
}

/// Omega-model bankruptcy probability: killed at rate `γ₀ + γ₁(X + d)` on
/// `[−d, 0]` or absorbed below `−d`. `cfg.omega` is ignored. Capped paths
/// count as not bankrupt.
pub fn simulate_bankruptcy(cfg: &SimConfig, gamma0: f64, gamma1: f64, d: f64, x: f64) -> Result<MCEstimate> {
    let omega = OmegaSpec::linear_band(gamma0, gamma1, d)?;
    match cfg.model {
        LevyModel::BrownianDrift { mu, .. } if mu > 0.0 => {}
        LevyModel::CramerLundberg { mu, vartheta, rho } if rho - vartheta / mu > 0.0 => {}
        _ => return Err(Error::Domain("bankruptcy simulation needs a model drifting to +inf".into())),
    }
    let level = x.max(0.0) + 1.0;
    let pb = Problem {
        omega: &omega,
        start: x,
        lower: Lower::Absorb(-d),
        upper: Upper::Escape { level, to: 0.0 },
        lambda: thinning_rate(cfg, &omega, -d, 0.0)?,
    };
    // an escaped path with weight w went bankrupt with probability 1 − w
    let [e] = simulate(cfg, &pb, |o, w| {
        [match o {
            Outcome::Down | Outcome::Killed => 1.0,
            Outcome::Escaped => 1.0 - w,
            _ => 0.0,
        }]
    })?;
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical_scale::ClassicalScale;

    fn cfg(model: LevyModel, omega: OmegaSpec, n: usize, est: Estimator) -> SimConfig {
        let s = McSettings {
            dt: 1e-3,
            n_paths: n,
            seed: 42,
            horizon_cap: 1e3,
            estimator: est,
        };
        SimConfig::new(model, omega, &s).unwrap()
    }

    fn bm() -> LevyModel {
        LevyModel::brownian(1.0, 2f64.sqrt()).unwrap()
    }

    #[test]
    fn deterministic_for_a_seed() {
        let c = cfg(bm(), OmegaSpec::constant(0.5).unwrap(), 2000, Estimator::PoissonThinning);
        let a = simulate_exit(&c, 0.4, 1.0, 0.0).unwrap();
        let b = simulate_exit(&c, 0.4, 1.0, 0.0).unwrap();
        assert_eq!(a.a.mean.to_bits(), b.a.mean.to_bits());
        assert_eq!(a.b.stderr.to_bits(), b.b.stderr.to_bits());
    }

    #[test]
    fn no_killing_exit_matches_scale_ratio() {
        let m = bm();
        let w = ClassicalScale::new(&m, 0.0).unwrap();
        let c = cfg(m, OmegaSpec::constant(0.0).unwrap(), 20_000, Estimator::ExponentialWeight);
        let e = simulate_exit(&c, 0.4, 1.0, 0.0).unwrap();
        assert!(e.a.z_score(w.w(0.4) / w.w(1.0)).abs() < 4.0, "{e:?}");
        assert!((e.a.mean + e.b.mean - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reflected_without_killing_is_one() {
        for m in [bm(), LevyModel::cramer_lundberg(1.5, 1.0, 2.0).unwrap()] {
            let c = cfg(m, OmegaSpec::constant(0.0).unwrap(), 500, Estimator::ExponentialWeight);
            let e = simulate_reflected(&c, 0.3, 1.0).unwrap();
            assert_eq!(e.mean, 1.0);
            assert_eq!(e.stderr, 0.0);
        }
    }

    #[test]
    fn cl_reflected_matches_classical() {
        let m = LevyModel::cramer_lundberg(1.5, 1.0, 2.0).unwrap();
        let s = ClassicalScale::new(&m, 0.4).unwrap();
        for est in [Estimator::ExponentialWeight, Estimator::PoissonThinning] {
            let c = cfg(m.clone(), OmegaSpec::constant(0.4).unwrap(), 20_000, est);
            let e = simulate_reflected(&c, 0.5, 1.5).unwrap();
            assert!(e.z_score(s.z(0.5) / s.z(1.5)).abs() < 4.0, "{est:?} {e:?}");
        }
    }

    #[test]
    fn thinning_rejects_unbounded_window() {
        let c = cfg(bm(), OmegaSpec::exponential(1.0, 1.0).unwrap(), 10, Estimator::PoissonThinning);
        assert!(matches!(simulate_one_sided_up(&c, 0.0, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn horizon_cap_is_reported() {
        let mut c = cfg(bm(), OmegaSpec::constant(0.0).unwrap(), 200, Estimator::ExponentialWeight);
        c.horizon_cap = 0.01;
        let e = simulate_exit(&c, 0.5, 10.0, -10.0).unwrap();
        assert!(e.a.flagged && e.a.truncated_fraction > 0.9);
    }

    #[test]
    fn bankruptcy_decreases_in_x() {
        let c = cfg(LevyModel::brownian(1.0, 1.0).unwrap(), OmegaSpec::constant(0.0).unwrap(), 4000, Estimator::ExponentialWeight);
        let lo = simulate_bankruptcy(&c, 0.2, 0.5, 1.0, 0.0).unwrap();
        let hi = simulate_bankruptcy(&c, 0.2, 0.5, 1.0, 3.0).unwrap();
        assert!(hi.mean < lo.mean);
        assert!(hi.mean < 0.01);
    }
}
