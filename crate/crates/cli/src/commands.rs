//! Single-purpose subcommands built on the core crate.

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use stickyflow::asymptotics::{limit_profile, ExponentFit};
use stickyflow::bombardment::{
    admissible_speed, energy_gap_series, engine_cross_validation, exponent_sweep, fit_gap_decay,
    limit_point, run_recursion, BombardmentSpec, CrossValidation, GapRow, SweepRow,
};
use stickyflow::engine::simulate;
use stickyflow::lagrangian::LagrangianSolution;
use stickyflow::scenario as generate;
use stickyflow::{Error, Rational, Scalar, StepFunction};

use crate::run::{domain_in, state_in, RunOptions};
use crate::scenario::{parse_value, Arithmetic, Check, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum RandomKind {
    /// Atoms in [0, 1] on the free line.
    Free,
    /// Atoms strictly inside the walls of [0, 1].
    Box,
    /// Free-line data whose flow stays in the hull of its support.
    Confined,
}

/// Seeded random scenario running every check.
pub fn random_scenario(kind: RandomKind, atoms: usize, seed: u64) -> Result<Scenario> {
    if atoms == 0 || atoms > 1024 {
        bail!("--atoms must lie in 1..=1024");
    }
    let mut rng = generate::rng(seed);
    let (label, state, domain) = match kind {
        RandomKind::Free => ("free", generate::random_free_line(&mut rng, atoms), json!({"kind": "line"})),
        RandomKind::Box => ("box", generate::random_box(&mut rng, atoms), json!({"kind": "interval", "a": 0, "b": 1})),
        RandomKind::Confined => ("confined", generate::random_confined(&mut rng, atoms), json!({"kind": "line"})),
    };
    // generated values are dyadic, so "p/q" strings are exact in both modes
    let exact = |x: f64| Value::String(Rational::from_f64(x).to_string());
    let doc = json!({
        "name": format!("random_{label}_{atoms}_{seed}"),
        "atoms": state.atoms().iter().map(|a| json!({
            "m": exact(a.mass), "x": exact(a.position), "v": exact(a.velocity)
        })).collect::<Vec<_>>(),
        "domain": domain,
        "checks": Check::ALL.map(Check::name),
        "seed": seed,
    });
    parse_value(doc, "<random>").map_err(Into::into)
}

fn arithmetic_of(scenario: &Scenario, opts: &RunOptions) -> Arithmetic {
    opts.arithmetic.unwrap_or(scenario.arithmetic)
}

#[derive(Serialize)]
struct StepOut {
    breaks: Vec<f64>,
    values: Vec<f64>,
    /// Exact `p/q` strings in rational mode.
    exact: Option<ExactStep>,
}

#[derive(Serialize)]
struct ExactStep {
    breaks: Vec<String>,
    values: Vec<String>,
}

fn step_out<T: Scalar>(f: &StepFunction<T>) -> StepOut {
    StepOut {
        breaks: f.breaks().iter().map(Scalar::to_f64).collect(),
        values: f.values().iter().map(Scalar::to_f64).collect(),
        exact: T::EXACT.then(|| ExactStep {
            breaks: f.breaks().iter().map(ToString::to_string).collect(),
            values: f.values().iter().map(ToString::to_string).collect(),
        }),
    }
}

/// Quantile at `t` from the projection formula.
pub fn project(scenario: &Scenario, opts: &RunOptions, t: &Rational) -> Result<Value> {
    fn go<T: Scalar>(s: &Scenario, t: &Rational) -> stickyflow::Result<Value> {
        let sol = LagrangianSolution::with_domain(&state_in::<T>(s)?, domain_in::<T>(&s.domain)?)?;
        let (quantile, blocks) = sol.solve_blocks(&T::from_rational(t))?;
        Ok(json!({
            "name": s.name,
            "t": t.to_f64(),
            "quantile": step_out(&quantile.simplify()),
            "clusters": blocks.iter().map(|(m, y, v)| json!({
                "mass": m.to_f64(), "position": y.to_f64(), "velocity": v.to_f64()
            })).collect::<Vec<_>>(),
        }))
    }
    let out = match arithmetic_of(scenario, opts) {
        Arithmetic::Float64 => go::<f64>(scenario, t),
        Arithmetic::Rational => go::<Rational>(scenario, t),
    };
    out.with_context(|| format!("scenario {}", scenario.name))
}

/// Limit profile, or the reason there is none.
pub fn limits(scenario: &Scenario, opts: &RunOptions) -> Result<Value> {
    fn go<T: Scalar>(s: &Scenario, horizon: Option<T>) -> stickyflow::Result<Value> {
        let log = simulate(&state_in::<T>(s)?, &domain_in::<T>(&s.domain)?, horizon)?;
        Ok(match limit_profile(&log) {
            Ok(p) => json!({
                "name": s.name,
                "long_time": "at_rest",
                "equilibrium_time": p.equilibrium_time.as_ref().map(Scalar::to_f64),
                "limit": p.limit_measure.points().iter().map(|q| json!({
                    "mass": q.mass.to_f64(), "position": q.position.to_f64()
                })).collect::<Vec<_>>(),
                "n_inf": step_out(&p.n_inf),
            }),
            Err(Error::Divergent) => json!({"name": s.name, "long_time": "divergent"}),
            Err(Error::NotAtEquilibrium) => json!({"name": s.name, "long_time": "horizon_reached"}),
            Err(e) => return Err(e),
        })
    }
    let horizon = opts.horizon.as_ref().or(scenario.horizon.as_ref());
    let out = match arithmetic_of(scenario, opts) {
        Arithmetic::Float64 => go::<f64>(scenario, horizon.map(f64::from_rational)),
        Arithmetic::Rational => go::<Rational>(scenario, horizon.cloned()),
    };
    out.with_context(|| format!("scenario {}", scenario.name))
}

#[derive(Debug, Serialize)]
pub struct BombardReport {
    pub speed_base: i64,
    pub truncation: usize,
    pub a: String,
    pub a_value: f64,
    pub limit: String,
    pub limit_value: f64,
    pub limit_error: f64,
    pub momentum_residual: String,
    pub monotone: bool,
    pub fit_window: (usize, usize),
    pub fit: Option<ExponentFit>,
    pub fit_error: Option<String>,
    pub cross_validation: Option<CrossValidation>,
    pub rows: Vec<GapRow>,
}

impl BombardReport {
    pub fn passed(&self) -> bool {
        self.momentum_residual == "0" && self.cross_validation.as_ref().is_none_or(|c| c.first_mismatch.is_none())
    }
}

/// Collision cascade with incoming speeds `n^{-k}` (`n = 2` is the reference instance).
pub fn bombard(
    n: i64,
    truncation: usize,
    fit_from: usize,
    cross_validate: bool,
    arithmetic: Arithmetic,
    tolerance: f64,
) -> Result<BombardReport> {
    if n < 2 {
        bail!("--n must be at least 2");
    }
    if truncation < 1 {
        bail!("--k must be at least 1");
    }
    let spec = BombardmentSpec::speed_family(n, truncation);
    let a = admissible_speed(&spec)?;
    let run = run_recursion::<Rational>(&spec, &a)?;
    let rows = energy_gap_series(&spec, &run)?;
    let (ybar, err) = limit_point(&spec)?;
    let window = (fit_from, truncation);
    let (fit, fit_error) = match fit_gap_decay(&rows, window) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let cross_validation = if cross_validate {
        Some(match arithmetic {
            Arithmetic::Float64 => engine_cross_validation::<f64>(&spec, tolerance)?,
            Arithmetic::Rational => engine_cross_validation::<Rational>(&spec, tolerance)?,
        })
    } else {
        None
    };
    Ok(BombardReport {
        speed_base: n,
        truncation,
        a: a.to_string(),
        a_value: a.to_f64(),
        limit: ybar.to_string(),
        limit_value: ybar.to_f64(),
        limit_error: err.to_f64(),
        momentum_residual: run.momentum_residual.to_string(),
        monotone: run.is_monotone(),
        fit_window: window,
        fit,
        fit_error,
        cross_validation,
        rows,
    })
}

pub fn gap_rows_csv(rows: &[GapRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["k", "t", "y", "v", "e", "tail_bound"])?;
    for r in rows {
        w.write_record([
            r.k.to_string(),
            format!("{:.16e}", r.t),
            format!("{:.16e}", r.y),
            format!("{:.16e}", r.v),
            format!("{:.16e}", r.e),
            format!("{:.16e}", r.tail_bound),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

/// Decay exponents for several speed bases, one thread per base.
pub fn sweep(ns: &[i64], truncation: usize) -> Result<Vec<SweepRow>> {
    if let Some(n) = ns.iter().find(|n| **n < 2) {
        bail!("--ns entries must be at least 2, got {n}");
    }
    let rows: Vec<stickyflow::Result<Vec<SweepRow>>> =
        ns.par_iter().map(|&n| exponent_sweep(&[n], truncation)).collect();
    let mut out = Vec::with_capacity(ns.len());
    for r in rows {
        out.extend(r?);
    }
    Ok(out)
}

pub fn sweep_csv(rows: &[SweepRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["n", "gamma", "residual"])?;
    for r in rows {
        w.write_record([r.n.to_string(), format!("{:.16e}", r.gamma), format!("{:.16e}", r.residual)])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}
