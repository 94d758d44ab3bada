//! Countable collision cascades.
//!
//! A mass `m₀` starts at `x₀` with speed `a > 0` and is hit in turn by
//! masses `m_k` coming from `x_k` with speed `−b_k`. Positions increase to
//! 1, speeds decrease to 0, and `a` is chosen so that the total momentum
//! vanishes; the central cluster then slows down to rest at the barycenter
//! `ȳ = Σ m_k x_k`. The recursion for the `k`-th collision is evaluated
//! exactly, and the energy gap `e(t_k)` is summed with a certified bound on
//! the neglected tail.

use serde::{Deserialize, Serialize};

use crate::asymptotics::{decay_fit, ExponentFit};
use crate::domain::Domain;
use crate::engine::simulate;
use crate::error::{Error, Result};
use crate::quantile::{Atom, ParticleState};
use crate::scalar::{Rational, Scalar};

/// Tail mass below which the energy-gap series is truncated.
const TAIL_TARGET: f64 = 1e-40;

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// `x_k = 1 − p^{k+1}`, `m_k = (1 − q) q^k`, `b_k = r^k`.
    Geometric { p: Rational, q: Rational, r: Rational },
    /// Finite lists (`speeds[0]` is ignored) plus the value of
    /// `Σ_{i > K} m_i b_i` for the atoms beyond the list.
    Explicit {
        positions: Vec<Rational>,
        masses: Vec<Rational>,
        speeds: Vec<Rational>,
        momentum_tail: Rational,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BombardmentSpec {
    pub family: Family,
    /// Index of the last collision computed.
    pub truncation: usize,
}

fn r(n: i64, d: i64) -> Rational {
    Rational::ratio(n, d)
}

fn pow(x: &Rational, k: usize) -> Rational {
    (0..k).fold(Rational::one(), |acc, _| acc * x.clone())
}

impl BombardmentSpec {
    /// `x_k = 1 − 2^{−k−1}`, `m_k = 2^{−k−1}`, `b_k = 2^{−k}`.
    pub fn reference(truncation: usize) -> Self {
        Self::speed_family(2, truncation)
    }

    /// Reference positions and masses with incoming speeds `b_k = n^{−k}`.
    pub fn speed_family(n: i64, truncation: usize) -> Self {
        Self {
            family: Family::Geometric {
                p: r(1, 2),
                q: r(1, 2),
                r: r(1, n),
            },
            truncation,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::Bombardment(msg.to_string()));
        let zero = Rational::zero();
        let one = Rational::one();
        match &self.family {
            Family::Geometric { p, q, r } => {
                if !(zero < *p && *p < one && zero < *q && *q < one) {
                    return fail("p and q must lie in (0, 1)");
                }
                if !(zero <= *r && *r < one) {
                    return fail("r must lie in [0, 1)");
                }
            }
            Family::Explicit {
                positions,
                masses,
                speeds,
                momentum_tail,
            } => {
                let n = positions.len();
                if n < 2 || masses.len() != n || speeds.len() != n {
                    return fail("positions, masses and speeds need the same length >= 2");
                }
                if self.truncation >= n {
                    return fail("truncation exceeds the explicit lists");
                }
                if positions.windows(2).any(|w| w[0] >= w[1]) || positions[n - 1] >= one {
                    return fail("positions must increase strictly and stay below 1");
                }
                if masses.iter().any(|m| *m <= zero) || masses.windows(2).skip(1).any(|w| w[0] < w[1]) {
                    return fail("masses must be positive and nonincreasing after the first");
                }
                if masses.iter().fold(zero.clone(), |a, m| a + m.clone()) > one {
                    return fail("masses sum above 1");
                }
                if speeds[1..].iter().any(|b| *b < zero) || speeds[1..].windows(2).any(|w| w[0] < w[1]) {
                    return fail("speeds must be nonnegative and nonincreasing");
                }
                if *momentum_tail < zero {
                    return fail("momentum tail must be nonnegative");
                }
            }
        }
        Ok(())
    }

    /// `(x_k, m_k, b_k)` for `k = 0..=len`.
    fn terms(&self, len: usize) -> Vec<(Rational, Rational, Rational)> {
        match &self.family {
            Family::Geometric { p, q, r } => (0..=len)
                .map(|k| {
                    (
                        Rational::one() - pow(p, k + 1),
                        (Rational::one() - q.clone()) * pow(q, k),
                        pow(r, k),
                    )
                })
                .collect(),
            Family::Explicit {
                positions,
                masses,
                speeds,
                ..
            } => (0..=len.min(positions.len() - 1))
                .map(|k| (positions[k].clone(), masses[k].clone(), speeds[k].clone()))
                .collect(),
        }
    }
}

/// `a = (1/m₀) Σ_{i >= 1} m_i b_i`, which makes the total momentum vanish.
pub fn admissible_speed(spec: &BombardmentSpec) -> Result<Rational> {
    spec.validate()?;
    match &spec.family {
        Family::Geometric { q, r, .. } => {
            let qr = q.clone() * r.clone();
            Ok(qr.clone() / (Rational::one() - qr))
        }
        Family::Explicit {
            masses,
            speeds,
            momentum_tail,
            ..
        } => {
            let sum = masses[1..]
                .iter()
                .zip(&speeds[1..])
                .fold(momentum_tail.clone(), |acc, (m, b)| acc + m.clone() * b.clone());
            Ok(sum / masses[0].clone())
        }
    }
}

#[derive(Debug, Clone)]
pub struct BombardmentRun<T> {
    pub a: T,
    /// Cumulative masses `M_k`.
    pub cumulative: Vec<T>,
    pub v: Vec<T>,
    pub t: Vec<T>,
    pub y: Vec<T>,
    /// Largest `|M_k v_k − a m₀ + Σ_{i<=k} m_i b_i|`.
    pub momentum_residual: T,
}

impl<T: Scalar> BombardmentRun<T> {
    /// `t`, `y` strictly increasing, `v` strictly decreasing and positive.
    pub fn is_monotone(&self) -> bool {
        self.t.windows(2).all(|w| w[0] < w[1])
            && self.y.windows(2).all(|w| w[0] < w[1])
            && self.v.windows(2).all(|w| w[0] > w[1])
            && self.v.iter().all(|v| *v > T::zero())
    }
}

/// Runs the collision recursion up to the spec's truncation index, starting
/// from `t₀ = 0`, `v₀ = a`, `y₀ = x₀`.
pub fn run_recursion<T: Scalar>(spec: &BombardmentSpec, a: &Rational) -> Result<BombardmentRun<T>> {
    spec.validate()?;
    let terms: Vec<(T, T, T)> = spec
        .terms(spec.truncation)
        .iter()
        .map(|(x, m, b)| (T::from_rational(x), T::from_rational(m), T::from_rational(b)))
        .collect();
    let a = T::from_rational(a);
    let (x0, m0, _) = terms[0].clone();
    let initial_momentum = a.clone() * m0.clone();
    let mut run = BombardmentRun {
        a: a.clone(),
        cumulative: vec![m0],
        v: vec![a],
        t: vec![T::zero()],
        y: vec![x0],
        momentum_residual: T::zero(),
    };
    let mut absorbed = T::zero();
    for (k, (x, m, b)) in terms.into_iter().enumerate().skip(1) {
        let (v_prev, t_prev, y_prev, big_m_prev) = (
            run.v[k - 1].clone(),
            run.t[k - 1].clone(),
            run.y[k - 1].clone(),
            run.cumulative[k - 1].clone(),
        );
        let closing = v_prev.clone() + b.clone();
        if closing <= T::zero() {
            return Err(Error::Bombardment(format!("no collision at step {k}: closing speed is zero")));
        }
        let big_m = big_m_prev.clone() + m.clone();
        let v = (big_m_prev * v_prev.clone() - m.clone() * b.clone()) / big_m.clone();
        let t = (x.clone() - y_prev.clone() + t_prev.clone() * v_prev.clone()) / closing.clone();
        let y = (x * v_prev.clone() + b.clone() * y_prev - t_prev * v_prev * b.clone()) / closing;
        if v <= T::zero() && k < spec.truncation {
            // in binary64 the momentum tail falls below the rounding error
            // of M_k v_k long before the truncation of geometric families
            let cause = if T::EXACT {
                "initial speed is not admissible"
            } else {
                "lost to rounding; use rational arithmetic"
            };
            return Err(Error::Bombardment(format!("speed became nonpositive at step {k}: {cause}")));
        }
        absorbed = absorbed + m * b;
        let residual = (big_m.clone() * v.clone() - initial_momentum.clone() + absorbed.clone()).abs();
        run.momentum_residual = run.momentum_residual.max_of(residual);
        run.cumulative.push(big_m);
        run.v.push(v);
        run.t.push(t);
        run.y.push(y);
    }
    Ok(run)
}

/// Rest point `ȳ` with a bound on its uncertainty (zero for closed forms).
///
/// With zero total momentum the barycenter `Σ m_k x_k` never moves, and all
/// mass ends up at the cluster's limit position.
pub fn limit_point(spec: &BombardmentSpec) -> Result<(Rational, Rational)> {
    spec.validate()?;
    match &spec.family {
        Family::Geometric { p, q, .. } => {
            let one = Rational::one();
            let y = one.clone() - (one.clone() - q.clone()) * p.clone() / (one - q.clone() * p.clone());
            Ok((y, Rational::zero()))
        }
        Family::Explicit {
            positions, masses, ..
        } => {
            let listed = positions
                .iter()
                .zip(masses)
                .fold(Rational::zero(), |acc, (x, m)| acc + x.clone() * m.clone());
            let rest = Rational::one() - masses.iter().fold(Rational::zero(), |acc, m| acc + m.clone());
            // unlisted mass sits somewhere in [x_K, 1]
            let last = positions.last().expect("validated").clone();
            let lo = listed.clone() + rest.clone() * last;
            let hi = listed + rest;
            let two = Rational::from_int(2);
            Ok(((lo.clone() + hi.clone()) / two.clone(), (hi - lo) / two))
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GapRow {
    pub k: usize,
    pub t: f64,
    pub y: f64,
    pub v: f64,
    pub e: f64,
    /// Upper bound on `e(t_k)` minus the reported `e`.
    pub tail_bound: f64,
}

/// `e(t_k) = M_k (ȳ − y_k)² + Σ_{j>k} m_j (ȳ − x_j + t_k b_j)²`, summed
/// exactly up to the index where the remaining mass drops below `1e-40`.
///
/// Every neglected term is at most `m_j`: atom `j` has not been hit yet, so
/// it sits in `(y_k, 1)` like `ȳ`.
pub fn energy_gap_series(spec: &BombardmentSpec, run: &BombardmentRun<Rational>) -> Result<Vec<GapRow>> {
    let (ybar, ybar_err) = limit_point(spec)?;
    let horizon = match &spec.family {
        Family::Geometric { q, .. } => {
            let qf = q.to_f64();
            let j = (TAIL_TARGET.ln() / qf.ln()).ceil() as usize;
            j.max(spec.truncation + 1)
        }
        Family::Explicit { positions, .. } => positions.len() - 1,
    };
    let terms = spec.terms(horizon);
    let listed_mass = terms.iter().fold(Rational::zero(), |acc, (_, m, _)| acc + m.clone());
    let tail_mass = Rational::one() - listed_mass;
    let mut rows = Vec::with_capacity(run.t.len());
    for k in 0..run.t.len() {
        let (t, y) = (&run.t[k], &run.y[k]);
        let mut e = run.cumulative[k].clone() * (ybar.clone() - y.clone()).square();
        for (x, m, b) in &terms[k + 1..] {
            e += m.clone() * (ybar.clone() - x.clone() + t.clone() * b.clone()).square();
        }
        // uncertainty in ȳ moves every term by at most 2·err (all distances <= 1)
        let bound = tail_mass.clone() + Rational::from_int(4) * ybar_err.clone();
        rows.push(GapRow {
            k,
            t: t.to_f64(),
            y: y.to_f64(),
            v: run.v[k].to_f64(),
            e: e.to_f64(),
            tail_bound: bound.to_f64(),
        });
    }
    Ok(rows)
}

/// Power-law fit of `e(t_k)` over `k` in `ks`.
pub fn fit_gap_decay(rows: &[GapRow], ks: (usize, usize)) -> Result<ExponentFit> {
    let window: Vec<&GapRow> = rows.iter().filter(|r| r.k >= ks.0 && r.k <= ks.1).collect();
    let (Some(first), Some(last)) = (window.first(), window.last()) else {
        return Err(Error::DecayFit("empty window".into()));
    };
    let times: Vec<f64> = window.iter().map(|r| r.t).collect();
    let values: Vec<f64> = window.iter().map(|r| r.e).collect();
    decay_fit(&times, &values, (first.t, last.t))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrossValidation {
    pub atoms: usize,
    pub events: usize,
    /// Largest deviations over the compared collisions.
    pub max_time_error: f64,
    pub max_position_error: f64,
    pub max_velocity_error: f64,
    /// First collision index whose time, position or (before the last
    /// atom) velocity disagrees with the recursion.
    pub first_mismatch: Option<usize>,
}

/// Simulates the first `K + 1` atoms with the last mass enlarged to make the
/// total 1, and compares each merge with the recursion. The enlarged last
/// atom changes only the final velocity, which is not compared.
pub fn engine_cross_validation<T: Scalar>(spec: &BombardmentSpec, tol: f64) -> Result<CrossValidation> {
    let k_max = spec.truncation;
    if k_max == 0 {
        return Err(Error::Bombardment("truncation must be at least 1".into()));
    }
    let a = admissible_speed(spec)?;
    let terms = spec.terms(k_max);
    let mut atoms = Vec::with_capacity(k_max + 1);
    let mut used = Rational::zero();
    for (k, (x, m, b)) in terms.iter().enumerate() {
        let mass = if k == k_max { Rational::one() - used.clone() } else { m.clone() };
        used += mass.clone();
        let v = if k == 0 { a.clone() } else { -b.clone() };
        atoms.push(Atom::new(T::from_rational(&mass), T::from_rational(x), T::from_rational(&v)));
    }
    let log = simulate(&ParticleState::new(atoms)?, &Domain::line(), None)?;
    if a.is_zero() && terms[1..].iter().all(|(_, _, b)| b.is_zero()) {
        return Ok(CrossValidation {
            atoms: k_max + 1,
            events: log.events.len(),
            max_time_error: 0.0,
            max_position_error: 0.0,
            max_velocity_error: 0.0,
            first_mismatch: if log.events.is_empty() { None } else { Some(1) },
        });
    }
    let run: BombardmentRun<T> = run_recursion(spec, &a)?;
    let mut report = CrossValidation {
        atoms: k_max + 1,
        events: log.events.len(),
        max_time_error: 0.0,
        max_position_error: 0.0,
        max_velocity_error: 0.0,
        first_mismatch: None,
    };
    for k in 1..=k_max {
        let Some(ev) = log.events.get(k - 1) else {
            report.first_mismatch.get_or_insert(k);
            break;
        };
        let dt = (ev.time.clone() - run.t[k].clone()).abs().to_f64();
        let dy = (ev.position.clone() - run.y[k].clone()).abs().to_f64();
        report.max_time_error = report.max_time_error.max(dt);
        report.max_position_error = report.max_position_error.max(dy);
        let mut ok = ev.time.near(&run.t[k], tol) && ev.position.near(&run.y[k], tol);
        if k < k_max {
            let v = ev.resulting.velocity();
            report.max_velocity_error = report
                .max_velocity_error
                .max((v.clone() - run.v[k].clone()).abs().to_f64());
            ok &= v.near(&run.v[k], tol);
        }
        if !ok {
            report.first_mismatch.get_or_insert(k);
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: i64,
    pub gamma: f64,
    pub residual: f64,
}

/// Decay exponent of `e(t_k)` over `k ∈ [20, K]` for `b_k = n^{−k}`.
pub fn exponent_sweep(ns: &[i64], truncation: usize) -> Result<Vec<SweepRow>> {
    if truncation < 40 {
        return Err(Error::Bombardment("sweep needs a truncation of at least 40".into()));
    }
    ns.iter()
        .map(|&n| {
            let spec = BombardmentSpec::speed_family(n, truncation);
            let a = admissible_speed(&spec)?;
            let run = run_recursion::<Rational>(&spec, &a)?;
            let fit = fit_gap_decay(&energy_gap_series(&spec, &run)?, (20, truncation))?;
            Ok(SweepRow {
                n,
                gamma: fit.gamma,
                residual: fit.residual,
            })
        })
        .collect()
}
