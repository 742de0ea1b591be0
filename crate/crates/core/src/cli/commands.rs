use serde_json::{json, Value};

use crate::classical_scale::ClassicalScale;
use crate::closed_forms::{omega_model_bankruptcy, BandComposite, BandScale};
use crate::error::{Error, Result};
use crate::fluctuation::{ExitKind, ExitQuery, FluctuationSolver};
use crate::levy_model::LevyModel;
use crate::mc_oracle::{
    simulate_bankruptcy, simulate_exit, simulate_one_sided_up, simulate_reflected, simulate_reflected_dual, SimConfig,
};
use crate::omega_scale::{build_h_omega, build_w_omega, OmegaSpec};

use super::config::{ExitJob, JobConfig, McJob, McTarget, OccupationJob, ResolventJob, RuinJob, ScaleQuery};
use super::output::{Cell, Output};

fn note(verbose: bool, msg: impl FnOnce() -> String) {
    if verbose {
        eprintln!("{}", msg());
    }
}

/// `x, w_q, z_q, w_omega, z_omega[, h_omega]` on the solver grid.
pub fn cmd_scale(cfg: &JobConfig, verbose: bool) -> Result<Output> {
    let model = cfg.model()?;
    let omega = cfg.omega()?;
    let grid = cfg.grid()?;
    let q: ScaleQuery = cfg.query()?;
    let table = if q.h_omega { build_h_omega(&model, omega, &grid)? } else { build_w_omega(&model, omega, &grid)? };
    let kq = q.q.or_else(|| omega.floor()).unwrap_or(0.0);
    let classical = ClassicalScale::new(&model, kq)?;
    note(verbose, || format!("{:?}", table.provenance));
    let mut cols = vec!["x", "w_q", "z_q", "w_omega", "z_omega"];
    if q.h_omega {
        cols.push("h_omega");
    }
    let nodes = table.grid().nodes().to_vec();
    let mut rows = Vec::with_capacity(nodes.len());
    for &x in &nodes {
        let mut r: Vec<Cell> = vec![x.into(), classical.w(x).into(), classical.z(x).into(), table.w(x)?.into(), table.z(x)?.into()];
        if q.h_omega {
            r.push(table.h(x)?.into());
        }
        rows.push(r);
    }
    let doc = json!({
        "q": kq,
        "columns": cols,
        "rows": rows.iter().map(|r| r.iter().map(cell_json).collect::<Vec<_>>()).collect::<Vec<_>>(),
    });
    Ok(Output::new(&cols, rows, doc))
}

fn cell_json(c: &Cell) -> Value {
    match c {
        Cell::Num(v) => json!(v),
        Cell::Text(s) => json!(s),
        Cell::Empty => Value::Null,
    }
}

fn kind_name(k: impl serde::Serialize) -> String {
    serde_json::to_value(k).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}

/// One record per exit query.
pub fn cmd_exit(cfg: &JobConfig, verbose: bool) -> Result<Output> {
    let job: ExitJob = cfg.query()?;
    let solver = FluctuationSolver::new(cfg.model()?, cfg.omega()?.clone(), cfg.grid()?);
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for q in &job.points {
        let v = solver.exit(q)?;
        note(verbose, || format!("{q:?} -> {v:?}"));
        rows.push(vec![q.x.into(), q.c.into(), q.z.into(), Cell::Text(kind_name(q.kind)), v.value.into(), v.survive.into()]);
        records.push(json!({"query": q, "value": v.value, "survive": v.survive, "stderr": null}));
    }
    Ok(Output::new(&["x", "c", "z", "kind", "value", "survive"], rows, json!({ "records": records })))
}

/// `y, density` over the requested panel.
pub fn cmd_resolvent(cfg: &JobConfig, verbose: bool) -> Result<Output> {
    let job: ResolventJob = cfg.query()?;
    let solver = FluctuationSolver::new(cfg.model()?, cfg.omega()?.clone(), cfg.grid()?);
    let d = solver.resolvent(job.kind, job.x, job.c, &job.panel)?;
    note(verbose, || format!("{} nodes, atom {:?}", d.y.len(), d.atom_at_zero));
    let rows = d.y.iter().zip(&d.density).map(|(&y, &v)| vec![y.into(), v.into()]).collect();
    let doc = json!({
        "kind": job.kind,
        "x": job.x,
        "c": job.c,
        "y": d.y,
        "density": d.density,
        "atom_at_zero": d.atom_at_zero,
    });
    Ok(Output::new(&["y", "density"], rows, doc))
}

type Curve = Box<dyn Fn(f64) -> f64>;

/// `E_x[e^{−pτ − q·occupation of (a,b)}]` at exit of `[0, c]`, upward and
/// downward, from the closed forms and from the generic solver.
pub fn cmd_occupation(cfg: &JobConfig, verbose: bool) -> Result<Output> {
    let job: OccupationJob = cfg.query()?;
    let model = cfg.model()?;
    let omega = cfg.omega()?;
    let OmegaSpec::Band { p, q, a, b } = *omega else {
        return Err(Error::Config("occupation needs a band omega".into()));
    };
    if !(job.c > 0.0) || job.n == 0 {
        return Err(Error::Config("occupation needs c > 0 and n >= 1".into()));
    }
    let (w, z): (Curve, Curve) = if b.is_finite() {
        let s = BandComposite::new(&model, p, q, a, b)?;
        let s2 = s.clone();
        (Box::new(move |x| s.w(x)), Box::new(move |x| s2.z(x)))
    } else {
        let s = BandScale::new(&model, p, q, a)?;
        let s2 = s.clone();
        (Box::new(move |x| s.w(x)), Box::new(move |x| s2.z(x)))
    };
    let solver = FluctuationSolver::new(model, omega.clone(), cfg.grid()?);
    let c = job.c;
    let mut rows = Vec::new();
    for i in 0..=job.n {
        let x = c * i as f64 / job.n as f64;
        let up = w(x) / w(c);
        let down = z(x) - w(x) * z(c) / w(c);
        let su = solver.exit(&ExitQuery { x, c, z: 0.0, kind: ExitKind::TwoSidedUp })?.value;
        let sd = solver.exit(&ExitQuery { x, c, z: 0.0, kind: ExitKind::TwoSidedDown })?.value;
        rows.push(vec![x.into(), up.into(), down.into(), su.into(), sd.into()]);
    }
    note(verbose, || format!("{} rows", rows.len()));
    let cols = ["x", "up_closed", "down_closed", "up_solver", "down_solver"];
    let doc = json!({
        "columns": cols,
        "rows": rows.iter().map(|r: &Vec<Cell>| r.iter().map(cell_json).collect::<Vec<_>>()).collect::<Vec<_>>(),
    });
    Ok(Output::new(&cols, rows, doc))
}

/// Omega-model bankruptcy probabilities for a Brownian model.
pub fn cmd_omega_ruin(cfg: &JobConfig, _verbose: bool) -> Result<Output> {
    let job: RuinJob = cfg.query()?;
    let LevyModel::BrownianDrift { mu, sigma } = cfg.model()? else {
        return Err(Error::Config("omega-ruin needs a Brownian model".into()));
    };
    let mut rows = Vec::new();
    let mut values = Vec::new();
    for &x in &job.x {
        let v = omega_model_bankruptcy(job.gamma0, job.gamma1, job.d, mu, sigma, x)?;
        rows.push(vec![x.into(), v.into()]);
        values.push(v);
    }
    Ok(Output::new(&["x", "bankruptcy"], rows, json!({"x": job.x, "bankruptcy": values})))
}

/// Formula against Monte Carlo, with the z-score.
pub fn cmd_mc_check(cfg: &JobConfig, verbose: bool) -> Result<Output> {
    let job: McJob = cfg.query()?;
    let model = cfg.model()?;
    let (formula, est) = if job.target == McTarget::Bankruptcy {
        let (Some(g0), Some(g1), Some(d)) = (job.gamma0, job.gamma1, job.d) else {
            return Err(Error::Config("bankruptcy needs gamma0, gamma1 and d".into()));
        };
        let LevyModel::BrownianDrift { mu, sigma } = model else {
            return Err(Error::Config("bankruptcy formula needs a Brownian model".into()));
        };
        let sim = SimConfig::new(model, OmegaSpec::constant(0.0)?, &job.mc)?;
        (omega_model_bankruptcy(g0, g1, d, mu, sigma, job.x)?, simulate_bankruptcy(&sim, g0, g1, d, job.x)?)
    } else {
        let omega = cfg.omega()?.clone();
        let kind = match job.target {
            McTarget::TwoSidedUp => ExitKind::TwoSidedUp,
            McTarget::TwoSidedDown => ExitKind::TwoSidedDown,
            McTarget::ReflectedUp => ExitKind::ReflectedUp,
            McTarget::ReflectedDual => ExitKind::ReflectedDual,
            McTarget::OneSidedUp => ExitKind::OneSidedUp,
            McTarget::Bankruptcy => unreachable!(),
        };
        let solver = FluctuationSolver::new(model.clone(), omega.clone(), cfg.grid()?);
        let formula = solver.exit(&ExitQuery { x: job.x, c: job.c, z: job.z, kind })?.value;
        let sim = SimConfig::new(model, omega, &job.mc)?;
        let est = match job.target {
            McTarget::TwoSidedUp => simulate_exit(&sim, job.x, job.c, job.z)?.a,
            McTarget::TwoSidedDown => simulate_exit(&sim, job.x, job.c, job.z)?.b,
            McTarget::ReflectedUp => simulate_reflected(&sim, job.x, job.c)?,
            McTarget::ReflectedDual => simulate_reflected_dual(&sim, job.x, job.c)?,
            _ => simulate_one_sided_up(&sim, job.x, job.c)?,
        };
        (formula, est)
    };
    let z = est.z_score(formula);
    note(verbose, || format!("{:.2} s, {} effective paths", est.elapsed, est.n_effective));
    let target = job.target_name().to_string();
    let rows = vec![vec![
        Cell::Text(target.clone()),
        formula.into(),
        est.mean.into(),
        est.stderr.into(),
        z.into(),
        Cell::Text(est.n.to_string()),
        Cell::Text(est.seed.to_string()),
        est.truncated_fraction.into(),
    ]];
    let doc = json!({
        "target": target,
        "formula": formula,
        "mean": est.mean,
        "stderr": est.stderr,
        "z": z,
        "n": est.n,
        "n_effective": est.n_effective,
        "seed": est.seed,
        "truncated_fraction": est.truncated_fraction,
        "flagged": est.flagged,
    });
    let mut out = Output::new(&["target", "formula", "mean", "stderr", "z", "n", "seed", "truncated_fraction"], rows, doc);
    out.flagged = est.flagged;
    Ok(out)
}

impl McJob {
    fn target_name(&self) -> &'static str {
        match self.target {
            McTarget::TwoSidedUp => "two_sided_up",
            McTarget::TwoSidedDown => "two_sided_down",
            McTarget::ReflectedUp => "reflected_up",
            McTarget::ReflectedDual => "reflected_dual",
            McTarget::OneSidedUp => "one_sided_up",
            McTarget::Bankruptcy => "bankruptcy",
        }
    }
}
