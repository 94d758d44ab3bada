//! Long-time behaviour of confined flows.
//!
//! For discrete data whose free flow stays in a bounded set, equilibrium is
//! reached after finitely many events. Between two events every cluster
//! moves with constant speed, so `e(t) = ‖N(t) − N∞‖²` is a quadratic in
//! `t` and `|ρ′|²` is constant; all time integrals below are exact sums over
//! those segments.
//!
//! Identity residuals are reported under keys that match the equation tags
//! used in the diagnostics output (`eq3_7`, `eq3_12`, ...).

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::engine::EventLog;
use crate::error::{Error, Result};
use crate::lagrangian::{flow_identity_check, oleinik_check_log, LagrangianSolution};
use crate::quantile::{
    antiderivative, l2_inner, l2_norm_sq, quantile_of, wasserstein2_sq, DiscreteMeasure,
    StepFunction,
};
use crate::scalar::{Scalar, FLOAT_TOL};
use crate::scenario;

/// Residual tolerance for identities and inequality margins.
pub const DIAGNOSTIC_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct AsymptoticProfile<T: Scalar> {
    pub n_inf: StepFunction<T>,
    pub equilibrium_time: Option<T>,
    pub limit_measure: DiscreteMeasure<T>,
}

/// Final state of a run that has come to rest.
///
/// Fails with [`Error::Divergent`] when some cluster still moves after the
/// last event (no limit in the Wasserstein sense), and with
/// [`Error::NotAtEquilibrium`] when the horizon cut the run short.
pub fn limit_profile<T: Scalar>(log: &EventLog<T>) -> Result<AsymptoticProfile<T>> {
    if log.final_clusters().iter().any(|c| !c.velocity().negligible(FLOAT_TOL)) {
        return Err(Error::Divergent);
    }
    if log.equilibrium_time.is_none() {
        return Err(Error::NotAtEquilibrium);
    }
    let t = log.last_event_time();
    let limit_measure = log.state_at(&t)?.measure()?;
    Ok(AsymptoticProfile {
        n_inf: quantile_of(&limit_measure),
        equilibrium_time: Some(t),
        limit_measure,
    })
}

/// `W₂²(ρ(t), ρ∞)`
pub fn energy_gap<T: Scalar>(log: &EventLog<T>, profile: &AsymptoticProfile<T>, t: &T) -> Result<T> {
    Ok(wasserstein2_sq(&log.state_at(t)?.measure()?, &profile.limit_measure))
}

/// `⟨V₀, N(t)⟩`
pub fn theta<T: Scalar>(log: &EventLog<T>, t: &T) -> Result<T> {
    let v0 = LagrangianSolution::from_state(&log.initial)?.v0;
    let n_t = quantile_of(&log.state_at(t)?.measure()?);
    Ok(l2_inner(&v0, &n_t))
}

/// `Σ mᵢ vᵢ²` over the clusters alive at `t` (right limit at event times).
pub fn metric_derivative_sq<T: Scalar>(log: &EventLog<T>, t: &T) -> Result<T> {
    Ok(log
        .clusters_at(t)?
        .iter()
        .fold(T::zero(), |acc, c| acc + c.mass.clone() * c.velocity.square()))
}

pub fn metric_derivative<T: Scalar>(log: &EventLog<T>, t: &T) -> Result<f64> {
    Ok(metric_derivative_sq(log, t)?.to_f64().sqrt())
}

/// Inter-event interval on which `e(start + s) = a + b s + c s²`.
#[derive(Debug, Clone)]
pub struct Segment<T> {
    pub start: T,
    pub end: Option<T>,
    pub a: T,
    pub b: T,
    pub c: T,
    /// `|ρ′|²` from the engine's cluster velocities.
    pub speed_sq: T,
}

impl<T: Scalar> Segment<T> {
    fn e_dot(&self, s: &T) -> T {
        self.b.clone() + T::from_int(2) * self.c.clone() * s.clone()
    }
}

/// Quadratic pieces of `e`, read off the quantile and mass-coordinate
/// velocity at the start of each epoch.
pub fn segments<T: Scalar>(log: &EventLog<T>, profile: &AsymptoticProfile<T>) -> Result<Vec<Segment<T>>> {
    let mut out = Vec::with_capacity(log.epochs.len());
    for (j, epoch) in log.epochs.iter().enumerate() {
        let start = epoch.time.clone();
        let local = LagrangianSolution::from_state(&log.state_at(&start)?)?;
        let gap = local.n0.sub(&profile.n_inf);
        out.push(Segment {
            end: log.epochs.get(j + 1).map(|e| e.time.clone()),
            a: l2_norm_sq(&gap),
            b: T::from_int(2) * l2_inner(&gap, &local.v0),
            c: l2_norm_sq(&local.v0),
            speed_sq: metric_derivative_sq(log, &start)?,
            start,
        });
    }
    Ok(out)
}

/// `∫_t^∞ (s − t)^k |ρ′|²(s) ds` for `k ∈ {0, 1}`, exactly.
fn moment_integral<T: Scalar>(segs: &[Segment<T>], t: &T, k: u32) -> Result<T> {
    let mut total = T::zero();
    for seg in segs {
        let Some(end) = &seg.end else {
            if !seg.speed_sq.negligible(FLOAT_TOL) {
                return Err(Error::Divergent);
            }
            continue;
        };
        if end <= t {
            continue;
        }
        let a = seg.start.clone().max_of(t.clone()) - t.clone();
        let b = end.clone() - t.clone();
        let piece = match k {
            0 => b - a,
            _ => (b.square() - a.square()) / T::from_int(2),
        };
        total = total + seg.speed_sq.clone() * piece;
    }
    Ok(total)
}

/// Evenly spaced sample times `T·i/12`, `i = 0..count`, where `T` is the
/// equilibrium time (or 1 when nothing happens).
pub fn sample_times<T: Scalar>(profile: &AsymptoticProfile<T>, count: usize) -> Vec<T> {
    let horizon = match &profile.equilibrium_time {
        Some(t) if !t.is_zero() => t.clone(),
        _ => T::one(),
    };
    (0..count)
        .map(|i| horizon.clone() * T::ratio(i as i64, 12))
        .collect()
}

/// Sample times plus every event time and its `± ε` neighbours, sorted.
fn kink_grid<T: Scalar>(log: &EventLog<T>, profile: &AsymptoticProfile<T>) -> Vec<T> {
    let mut grid = sample_times(profile, 16);
    let events = log.event_times();
    let mut all: Vec<T> = grid.iter().chain(&events).cloned().collect();
    all.sort_by(Scalar::total_cmp);
    all.dedup_by(|a, b| a == b);
    let span = grid.last().cloned().unwrap_or_else(T::one);
    let mut eps = span / T::from_int(4096);
    for w in all.windows(2) {
        eps = eps.min_of((w[1].clone() - w[0].clone()) / T::from_int(4));
    }
    for e in events {
        grid.push(e.clone());
        grid.push(e.clone() + eps.clone());
        if e > eps {
            grid.push(e - eps.clone());
        }
    }
    grid.sort_by(Scalar::total_cmp);
    grid.dedup_by(|a, b| a == b);
    grid
}

/// `(t₂ − t₁) f₀ + (t₁ − t₀) f₂ − (t₂ − t₀) f₁`: nonnegative for convex `f`.
fn convexity_gap<T: Scalar>(t: [&T; 3], f: [&T; 3]) -> T {
    (t[2].clone() - t[1].clone()) * f[0].clone() + (t[1].clone() - t[0].clone()) * f[2].clone()
        - (t[2].clone() - t[0].clone()) * f[1].clone()
}

fn require_free_line<T: Scalar>(log: &EventLog<T>) -> Result<()> {
    if log.domain.is_line() {
        Ok(())
    } else {
        Err(Error::RequiresFreeLine)
    }
}

fn unit_supported<T: Scalar>(log: &EventLog<T>) -> bool {
    log.initial
        .atoms()
        .iter()
        .all(|a| T::zero() <= a.position && a.position <= T::one())
}

/// Absolute residuals of the energy identities for a confined free flow.
pub fn identity_suite<T: Scalar>(
    log: &EventLog<T>,
    profile: &AsymptoticProfile<T>,
) -> Result<BTreeMap<String, f64>> {
    require_free_line(log)?;
    let sol = LagrangianSolution::from_state(&log.initial)?;
    let segs = segments(log, profile)?;
    let times = sample_times(profile, 16);
    let mut out = BTreeMap::new();
    let mut put = |key: &str, value: f64| {
        out.insert(key.to_string(), value);
    };

    put("eq3_5", sol.v0.integral().abs().to_f64());

    let mean0 = log.initial.measure()?.mean();
    let mut worst_mean = 0.0f64;
    let mut worst_gap_rate = 0.0f64;
    let mut worst_tail = 0.0f64;
    for t in &times {
        let n_t = quantile_of(&log.state_at(t)?.measure()?);
        worst_mean = worst_mean.max((measure_mean(&n_t) - mean0.clone()).abs().to_f64());
        let lhs = l2_inner(&sol.n0, &n_t) + t.clone() * l2_inner(&sol.v0, &n_t);
        worst_gap_rate = worst_gap_rate.max((lhs - l2_norm_sq(&n_t)).abs().to_f64());
        let e = energy_gap(log, profile, t)?;
        let rhs = T::from_int(2) * moment_integral(&segs, t, 1)?;
        worst_tail = worst_tail.max((e - rhs).abs().to_f64());
    }
    put("eq3_6", worst_mean);
    put("eq3_7", worst_gap_rate);
    put(
        "eq3_8",
        (l2_inner(&sol.n0, &profile.n_inf) - l2_norm_sq(&profile.n_inf))
            .abs()
            .to_f64(),
    );

    // ė against 2θ and 2∫N v, ë against 2|ρ′|², at the start and middle of each segment
    let mut worst_first_derivative = 0.0f64;
    let mut worst_second_derivative = 0.0f64;
    for seg in &segs {
        let mut offsets = vec![T::zero()];
        if let Some(end) = &seg.end {
            offsets.push((end.clone() - seg.start.clone()) / T::from_int(2));
        }
        for s in offsets {
            let t = seg.start.clone() + s.clone();
            let e_dot = seg.e_dot(&s);
            let two = T::from_int(2);
            let th = theta(log, &t)?;
            let nv = log
                .clusters_at(&t)?
                .iter()
                .fold(T::zero(), |acc, c| acc + c.mass.clone() * c.position.clone() * c.velocity.clone());
            worst_first_derivative = worst_first_derivative
                .max((e_dot.clone() - two.clone() * th).abs().to_f64())
                .max((e_dot - two * nv).abs().to_f64());
        }
        worst_second_derivative = worst_second_derivative.max((seg.c.clone() - seg.speed_sq.clone()).abs().to_f64() * 2.0);
    }
    put("eq3_9", worst_first_derivative);
    put("eq3_10", worst_second_derivative);

    let e0 = energy_gap(log, profile, &T::zero())?;
    put(
        "eq3_12",
        (T::from_int(2) * moment_integral(&segs, &T::zero(), 1)? - e0)
            .abs()
            .to_f64(),
    );
    put("eq3_13", worst_tail);

    let mut worst_two_time = 0.0f64;
    for i in 0..16 {
        let (a, b) = (&times[i], &times[(7 * i + 3) % 16]);
        let (s, t) = if a <= b { (a, b) } else { (b, a) };
        worst_two_time = worst_two_time.max(flow_identity_check(log, s, t)?);
    }
    put("eq5_2", worst_two_time);

    // clusters at rest carry no net initial momentum
    let mut worst_cond = 0.0f64;
    for c in log.final_clusters() {
        if !c.is_absorbed() {
            worst_cond = worst_cond.max(c.initial_momentum.abs().to_f64());
        }
    }
    put("conditional_velocity", worst_cond);
    Ok(out)
}

fn measure_mean<T: Scalar>(q: &StepFunction<T>) -> T {
    q.integral()
}

/// Both candidate normalizations of the dissipation integral.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormalizationProbe {
    /// `∫₀^∞ |ρ′|²`
    pub dissipation: f64,
    /// `⟨V₀, N₀⟩`
    pub pairing: f64,
    /// `2∫|ρ′|² + ⟨V₀, N₀⟩`
    pub doubled_residual: f64,
    /// `∫|ρ′|² + ⟨V₀, N₀⟩`
    pub plain_residual: f64,
    pub doubled_holds: bool,
    pub plain_holds: bool,
}

impl NormalizationProbe {
    pub fn winner(&self) -> Option<&'static str> {
        match (self.doubled_holds, self.plain_holds) {
            (true, false) => Some("doubled"),
            (false, true) => Some("plain"),
            _ => None,
        }
    }
}

/// Evaluates both normalizations of the total dissipation against `⟨V₀, N₀⟩`.
pub fn normalization_probe<T: Scalar>(
    log: &EventLog<T>,
    profile: &AsymptoticProfile<T>,
) -> Result<NormalizationProbe> {
    let sol = LagrangianSolution::from_state(&log.initial)?;
    let segs = segments(log, profile)?;
    let dissipation = moment_integral(&segs, &T::zero(), 0)?;
    let pairing = l2_inner(&sol.v0, &sol.n0);
    let doubled = T::from_int(2) * dissipation.clone() + pairing.clone();
    let plain = dissipation.clone() + pairing.clone();
    Ok(NormalizationProbe {
        dissipation: dissipation.to_f64(),
        pairing: pairing.to_f64(),
        doubled_residual: doubled.to_f64(),
        plain_residual: plain.to_f64(),
        doubled_holds: doubled.abs().to_f64() <= DIAGNOSTIC_TOL,
        plain_holds: plain.abs().to_f64() <= DIAGNOSTIC_TOL,
    })
}

/// Inequality margins for a confined free flow; a positive margin above
/// [`DIAGNOSTIC_TOL`] is a violation.
pub fn inequality_suite<T: Scalar>(
    log: &EventLog<T>,
    profile: &AsymptoticProfile<T>,
) -> Result<BTreeMap<String, f64>> {
    require_free_line(log)?;
    let unit = unit_supported(log);
    let mut out = BTreeMap::new();

    let mut oleinik = f64::NEG_INFINITY;
    let mut two_sided = f64::NEG_INFINITY;
    let mut uniform = f64::NEG_INFINITY;
    for t in sample_times(profile, 16).iter().skip(1) {
        let r = oleinik_check_log(log, t, unit)?;
        let m = if r.max_quotient.is_finite() {
            r.max_quotient - r.bound
        } else {
            -r.bound
        };
        oleinik = oleinik.max(m);
        if let (Some(a), Some(b)) = (r.two_sided_margin, r.uniform_margin) {
            two_sided = two_sided.max(a);
            uniform = uniform.max(b);
        }
    }
    out.insert("oleinik".into(), oleinik);
    if unit {
        out.insert("two_sided_velocity_bound".into(), two_sided);
        out.insert("uniform_velocity_bound".into(), uniform);
    }

    let grid = kink_grid(log, profile);
    let thetas: Vec<T> = grid.iter().map(|t| theta(log, t)).collect::<Result<_>>()?;
    let gaps: Vec<T> = grid
        .iter()
        .map(|t| energy_gap(log, profile, t))
        .collect::<Result<_>>()?;
    let mut theta_monotone = f64::NEG_INFINITY;
    let mut e_monotone = f64::NEG_INFINITY;
    for k in 0..grid.len() - 1 {
        theta_monotone = theta_monotone.max((thetas[k].clone() - thetas[k + 1].clone()).to_f64());
        e_monotone = e_monotone.max((gaps[k + 1].clone() - gaps[k].clone()).to_f64());
    }
    let theta_max = thetas.iter().map(Scalar::to_f64).fold(f64::NEG_INFINITY, f64::max);
    let mut e_convex = f64::NEG_INFINITY;
    for k in 0..grid.len().saturating_sub(2) {
        let g = convexity_gap(
            [&grid[k], &grid[k + 1], &grid[k + 2]],
            [&gaps[k], &gaps[k + 1], &gaps[k + 2]],
        );
        e_convex = e_convex.max(-g.to_f64());
    }
    out.insert("theta_nondecreasing".into(), finite_or_zero(theta_monotone));
    out.insert("theta_nonpositive".into(), theta_max);
    out.insert("energy_gap_nonincreasing".into(), finite_or_zero(e_monotone));
    out.insert("energy_gap_convex".into(), finite_or_zero(e_convex));
    out.extend(shape_checks(log, profile)?);
    Ok(out)
}

fn finite_or_zero(x: f64) -> f64 {
    if x.is_finite() {
        x
    } else {
        0.0
    }
}

/// Shape of `P(t, x) = ∫₀ˣ N(t, z) dz` on a `(t, x)` grid, the long-time
/// behaviour of `t|ρ′|`, and the tail inequality
/// `2∫_t^∞ (s − t) ω² <= (∫_t^∞ ω)²` for `ω = |ρ′|`.
pub fn shape_checks<T: Scalar>(
    log: &EventLog<T>,
    profile: &AsymptoticProfile<T>,
) -> Result<BTreeMap<String, f64>> {
    let grid = kink_grid(log, profile);
    let xs: Vec<T> = (0..=32).map(|k| T::ratio(k, 32)).collect();
    let primitives: Vec<Vec<T>> = grid
        .iter()
        .map(|t| {
            let p = antiderivative(&quantile_of(&log.state_at(t)?.measure()?));
            Ok(xs.iter().map(|x| p.eval(x)).collect())
        })
        .collect::<Result<_>>()?;

    let mut concave_t = f64::NEG_INFINITY;
    let mut nondecreasing_t = f64::NEG_INFINITY;
    let mut convex_x = f64::NEG_INFINITY;
    for (i, _) in xs.iter().enumerate() {
        for k in 0..grid.len().saturating_sub(2) {
            let g = convexity_gap(
                [&grid[k], &grid[k + 1], &grid[k + 2]],
                [&primitives[k][i], &primitives[k + 1][i], &primitives[k + 2][i]],
            );
            concave_t = concave_t.max(g.to_f64());
        }
        for k in 0..grid.len() - 1 {
            nondecreasing_t =
                nondecreasing_t.max((primitives[k][i].clone() - primitives[k + 1][i].clone()).to_f64());
        }
    }
    for row in &primitives {
        for i in 0..xs.len() - 2 {
            let g = convexity_gap([&xs[i], &xs[i + 1], &xs[i + 2]], [&row[i], &row[i + 1], &row[i + 2]]);
            convex_x = convex_x.max(-g.to_f64());
        }
    }

    let segs = segments(log, profile)?;
    let mut tail = f64::NEG_INFINITY;
    for t in sample_times(profile, 16) {
        // ω is irrational in general, so this check runs in binary64
        let tf = t.to_f64();
        let (mut lhs, mut mass) = (0.0f64, 0.0f64);
        for seg in &segs {
            let Some(end) = &seg.end else { continue };
            let b = end.to_f64() - tf;
            if b <= 0.0 {
                continue;
            }
            let a = (seg.start.to_f64() - tf).max(0.0);
            let w2 = seg.speed_sq.to_f64();
            lhs += w2 * (b * b - a * a);
            mass += w2.sqrt() * (b - a);
        }
        tail = tail.max(lhs - mass * mass);
    }

    let late = match &profile.equilibrium_time {
        Some(t) => t.clone() * T::from_int(2) + T::one(),
        None => T::one(),
    };
    let t_speed = late.to_f64() * metric_derivative(log, &late)?;

    let mut out = BTreeMap::new();
    out.insert("primitive_concave_in_t".into(), finite_or_zero(concave_t));
    out.insert("primitive_nondecreasing_in_t".into(), finite_or_zero(nondecreasing_t));
    out.insert("primitive_convex_in_x".into(), finite_or_zero(convex_x));
    out.insert("tail_inequality".into(), tail);
    out.insert("late_time_speed".into(), t_speed);
    Ok(out)
}

/// Power law `values ≈ C t^{-γ}` fitted by least squares in log-log
/// coordinates over the samples with `t` in `window`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExponentFit {
    pub gamma: f64,
    pub log_constant: f64,
    /// Largest absolute deviation of `log value` from the fitted line.
    pub residual: f64,
    pub samples: usize,
    pub window: (f64, f64),
}

pub fn decay_fit(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<ExponentFit> {
    if times.len() != values.len() {
        return Err(Error::DecayFit("times and values differ in length".into()));
    }
    let mut pts = Vec::new();
    for (&t, &v) in times.iter().zip(values) {
        if t < window.0 || t > window.1 {
            continue;
        }
        if !(v > 0.0 && t > 0.0) || !v.is_finite() {
            return Err(Error::DecayFit(format!("non-positive sample {v} at t = {t}")));
        }
        pts.push((t.ln(), v.ln()));
    }
    if pts.len() < 8 {
        return Err(Error::DecayFit(format!(
            "need at least 8 samples in the window, got {}",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::DecayFit("all sample times coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).abs())
        .fold(0.0, f64::max);
    Ok(ExponentFit {
        gamma: -slope,
        log_constant: intercept,
        residual,
        samples: pts.len(),
        window,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub t: f64,
    /// Absent when the flow has no asymptotic profile.
    pub e: Option<f64>,
    pub theta: f64,
    pub metric_derivative: f64,
    /// Kinetic energy `½ Σ m v²`.
    pub energy: f64,
    pub n_clusters: usize,
}

/// Samples of the diagnostic curves.
pub fn sample_series<T: Scalar>(
    log: &EventLog<T>,
    profile: Option<&AsymptoticProfile<T>>,
    times: &[T],
) -> Result<Vec<SeriesPoint>> {
    times
        .iter()
        .map(|t| {
            let clusters = log.clusters_at(t)?;
            let speed_sq = metric_derivative_sq(log, t)?;
            Ok(SeriesPoint {
                t: t.to_f64(),
                e: match profile {
                    Some(p) => Some(energy_gap(log, p, t)?.to_f64()),
                    None => None,
                },
                theta: theta(log, t)?.to_f64(),
                metric_derivative: speed_sq.to_f64().sqrt(),
                energy: speed_sq.to_f64() / 2.0,
                n_clusters: clusters.len(),
            })
        })
        .collect()
}

/// Event times with `± ε` neighbours, merged with a log-spaced grid.
pub fn auto_times<T: Scalar>(log: &EventLog<T>, count: usize) -> Vec<T> {
    let end = log.last_event_time();
    let horizon = if end.is_zero() { T::one() } else { end * T::from_int(2) };
    let mut out = vec![T::zero()];
    let mut step = horizon.clone();
    for _ in 0..count {
        out.push(step.clone());
        step = step / T::from_int(2);
    }
    let eps = horizon / T::from_int(1 << 20);
    for e in log.event_times() {
        out.push(e.clone() + eps.clone());
        if e > eps {
            out.push(e.clone() - eps.clone());
        }
        out.push(e);
    }
    if let Some(h) = &log.horizon {
        if log.equilibrium_time.is_none() {
            out.retain(|t| t <= h);
        }
    }
    out.sort_by(Scalar::total_cmp);
    out.dedup_by(|a, b| a == b);
    out
}

/// Two independently seeded time sequences running past equilibrium.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LimitSurrogate {
    /// Energy gap along each sequence.
    pub gaps: [Vec<f64>; 2],
    /// The quantile at the last time of each sequence equals `N∞` cell by cell.
    pub same_limit: bool,
    pub gaps_vanish: bool,
}

pub fn limit_surrogate<T: Scalar>(
    log: &EventLog<T>,
    profile: &AsymptoticProfile<T>,
    seeds: [u64; 2],
    len: usize,
) -> Result<LimitSurrogate> {
    let base = match &profile.equilibrium_time {
        Some(t) if !t.is_zero() => t.clone(),
        _ => T::one(),
    };
    let mut gaps: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    let mut same_limit = true;
    for (k, seed) in seeds.into_iter().enumerate() {
        let mut rng = scenario::rng(seed);
        let mut t = T::zero();
        for _ in 0..len {
            // increments in (0, 2] times the equilibrium time, dyadic for exactness
            let step = T::ratio(rng.random_range(1..=512), 256);
            t = t + base.clone() * step;
            gaps[k].push(energy_gap(log, profile, &t)?.to_f64());
        }
        let last = quantile_of(&log.state_at(&t)?.measure()?);
        same_limit &= last.simplify().approx_eq(&profile.n_inf.simplify(), FLOAT_TOL);
    }
    let gaps_vanish = gaps
        .iter()
        .all(|g| g.last().is_some_and(|e| *e <= DIAGNOSTIC_TOL));
    Ok(LimitSurrogate {
        gaps,
        same_limit,
        gaps_vanish,
    })
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub identities: BTreeMap<String, f64>,
    pub inequalities: BTreeMap<String, f64>,
    pub normalization: Option<NormalizationProbe>,
    pub exponents: Vec<ExponentFit>,
    pub series: Vec<SeriesPoint>,
}

impl DiagnosticsReport {
    pub fn identities_hold(&self) -> bool {
        self.identities.values().all(|r| *r <= DIAGNOSTIC_TOL)
    }

    pub fn inequalities_hold(&self) -> bool {
        self.inequalities.values().all(|m| *m <= DIAGNOSTIC_TOL)
    }
}

/// Identities, inequalities and the normalization probe for a confined free flow.
pub fn diagnostics<T: Scalar>(log: &EventLog<T>) -> Result<DiagnosticsReport> {
    let profile = limit_profile(log)?;
    Ok(DiagnosticsReport {
        identities: identity_suite(log, &profile)?,
        inequalities: inequality_suite(log, &profile)?,
        normalization: Some(normalization_probe(log, &profile)?),
        exponents: Vec::new(),
        series: sample_series(log, Some(&profile), &auto_times(log, 16))?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Domain;
    use crate::engine::simulate;
    use crate::quantile::ParticleState;
    use crate::scalar::Rational;

    fn pair_log() -> EventLog<f64> {
        simulate(&scenario::symmetric_pair(), &Domain::line(), None).unwrap()
    }

    #[test]
    fn profile_examples() {
        let log = pair_log();
        let p = limit_profile(&log).unwrap();
        assert_eq!(p.n_inf.values(), &[0.5]);
        assert_eq!(p.equilibrium_time, Some(0.25));

        let log = simulate(&scenario::outward_pair(), &Domain::unit_interval(), None).unwrap();
        let p = limit_profile(&log).unwrap();
        assert_eq!(p.n_inf.breaks(), &[0.0, 0.5, 1.0]);
        assert_eq!(p.n_inf.values(), &[0.0, 1.0]);
        assert_eq!(p.equilibrium_time, Some(0.25));

        let log = simulate(&scenario::drifting_dirac(), &Domain::line(), None).unwrap();
        assert!(matches!(limit_profile(&log), Err(Error::Divergent)));
    }

    #[test]
    fn gap_theta_speed_examples() {
        let log = pair_log();
        let p = limit_profile(&log).unwrap();
        assert!((energy_gap(&log, &p, &0.0).unwrap() - 0.0625).abs() < 1e-15);
        assert!((energy_gap(&log, &p, &0.1).unwrap() - 0.0225).abs() < 1e-15);
        assert_eq!(energy_gap(&log, &p, &0.3).unwrap(), 0.0);
        assert!((theta(&log, &0.0).unwrap() + 0.25).abs() < 1e-15);
        assert!((theta(&log, &0.2).unwrap() + 0.05).abs() < 1e-15);
        assert_eq!(theta(&log, &0.25).unwrap(), 0.0);
        assert_eq!(metric_derivative(&log, &0.1).unwrap(), 1.0);
        assert_eq!(metric_derivative(&log, &0.3).unwrap(), 0.0);

        let three = ParticleState::<f64>::from_f64(&[
            (1.0 / 3.0, 0.0, 1.0),
            (1.0 / 3.0, 0.5, 0.0),
            (1.0 / 3.0, 1.0, -1.0),
        ])
        .unwrap();
        let log = simulate(&three, &Domain::line(), None).unwrap();
        assert!((metric_derivative(&log, &0.1).unwrap() - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn identities_on_symmetric_pair() {
        let log = pair_log();
        let p = limit_profile(&log).unwrap();
        let segs = segments(&log, &p).unwrap();
        assert!((2.0 * moment_integral(&segs, &0.0, 1).unwrap() - 0.0625).abs() < 1e-15);
        assert!((2.0 * moment_integral(&segs, &0.1, 1).unwrap() - 0.0225).abs() < 1e-15);
        let ids = identity_suite(&log, &p).unwrap();
        for (k, v) in &ids {
            assert!(*v <= 1e-14, "{k}: {v}");
        }
        assert_eq!(ids.len(), 10);
    }

    #[test]
    fn identities_exact_in_rationals() {
        let s: ParticleState<Rational> = scenario::convert(&scenario::symmetric_pair());
        let log = simulate(&s, &Domain::line(), None).unwrap();
        let p = limit_profile(&log).unwrap();
        assert!(identity_suite(&log, &p).unwrap().values().all(|v| *v == 0.0));
    }

    #[test]
    fn identities_require_free_line() {
        let log = simulate(&scenario::outward_pair(), &Domain::unit_interval(), None).unwrap();
        let p = limit_profile(&log).unwrap();
        assert!(matches!(identity_suite(&log, &p), Err(Error::RequiresFreeLine)));
    }

    #[test]
    fn normalization_probe_examples() {
        let log = pair_log();
        let p = limit_profile(&log).unwrap();
        let probe = normalization_probe(&log, &p).unwrap();
        assert!((probe.dissipation - 0.25).abs() < 1e-15);
        assert!((probe.pairing + 0.25).abs() < 1e-15);
        assert!(probe.plain_holds && !probe.doubled_holds);
        assert_eq!(probe.winner(), Some("plain"));

        let log = simulate(&scenario::outward_pair(), &Domain::unit_interval(), None).unwrap();
        let p = limit_profile(&log).unwrap();
        let probe = normalization_probe(&log, &p).unwrap();
        assert!((probe.dissipation - 0.25).abs() < 1e-15);
        assert!((probe.pairing - 0.25).abs() < 1e-15);
        assert!((probe.plain_residual - 0.5).abs() < 1e-15);
        assert!((probe.doubled_residual - 0.75).abs() < 1e-15);
    }

    #[test]
    fn inequalities_on_symmetric_pair() {
        let log = pair_log();
        let p = limit_profile(&log).unwrap();
        let m = inequality_suite(&log, &p).unwrap();
        for (k, v) in &m {
            assert!(*v <= 1e-12, "{k}: {v}");
        }
        assert!(m.contains_key("two_sided_velocity_bound"));
        // equality in the tail inequality at t = 0
        let shapes = shape_checks(&log, &p).unwrap();
        assert!(shapes["tail_inequality"].abs() < 1e-15);
        assert_eq!(shapes["late_time_speed"], 0.0);
    }

    #[test]
    fn primitive_example() {
        let log = pair_log();
        for (t, want) in [(0.0, 0.125), (0.1, 0.175), (0.25, 0.25), (1.0, 0.25)] {
            let q = quantile_of(&log.state_at(&t).unwrap().measure().unwrap());
            assert!((antiderivative(&q).eval(&0.5) - want).abs() < 1e-15);
        }
    }

    #[test]
    fn decay_fit_examples() {
        let ts: Vec<f64> = (1..=20).map(|k| k as f64).collect();
        let f = decay_fit(&ts, &ts.iter().map(|t| 1.0 / t).collect::<Vec<_>>(), (1.0, 20.0)).unwrap();
        assert!((f.gamma - 1.0).abs() < 1e-12 && f.residual < 1e-12);
        let f = decay_fit(&ts, &ts.iter().map(|t| 5.0 / (t * t)).collect::<Vec<_>>(), (1.0, 20.0)).unwrap();
        assert!((f.gamma - 2.0).abs() < 1e-12);
        assert!(decay_fit(&ts, &[0.0; 20], (1.0, 20.0)).is_err());
        assert!(decay_fit(&ts, &[1.0; 20], (1.0, 5.0)).is_err());
    }

    #[test]
    fn limit_surrogate_agrees() {
        let log = pair_log();
        let p = limit_profile(&log).unwrap();
        let s = limit_surrogate(&log, &p, [1, 2], 8).unwrap();
        assert!(s.same_limit && s.gaps_vanish);
    }

    #[test]
    fn perturbed_rest_pair_has_a_different_limit() {
        let rest = simulate(&scenario::rest_pair::<Rational>(), &Domain::line(), None).unwrap();
        let rest_limit = limit_profile(&rest).unwrap();
        assert_eq!(rest_limit.limit_measure.points().len(), 2);
        for n in 2..6 {
            let log = simulate(&scenario::perturbed_rest_pair::<Rational>(n), &Domain::line(), None).unwrap();
            let p = limit_profile(&log).unwrap();
            assert_eq!(p.limit_measure, DiscreteMeasure::dirac(Rational::ratio(1, 2)));
        }
    }
}
