//! Scenario pipeline: simulate, sample, run the requested checks.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use stickyflow::asymptotics::{
    auto_times, normalization_probe, identity_suite, inequality_suite, limit_profile, sample_series,
    AsymptoticProfile, DiagnosticsReport, SeriesPoint, DIAGNOSTIC_TOL,
};
use stickyflow::engine::{simulate, EventKind, EventLog};
use stickyflow::lagrangian::{
    confinement_equivalence, dual_oracle_gap, flow_identity_check, oleinik_check_log,
    EQUIVALENCE_TOL, INEQUALITY_TOL,
};
use stickyflow::{Atom, Component, Domain, Error, ParticleState, Rational, Scalar};

use crate::scenario::{Arithmetic, Check, Scenario, Times};

/// Default tolerance of the dual-oracle comparison.
pub const DUAL_ORACLE_TOL: f64 = 1e-9;
/// Grid points of the automatic time list (halvings of the horizon).
const AUTO_GRID: usize = 16;
/// Sampled times of the confinement comparison.
const EQUIVALENCE_SAMPLES: usize = 64;
/// Times drawn from the series for the flow identity (all pairs `s <= t`).
const FLOW_IDENTITY_TIMES: usize = 16;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub arithmetic: Option<Arithmetic>,
    pub horizon: Option<Rational>,
    /// Overrides every check tolerance.
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    /// The check does not apply to this flow in a way worth reporting,
    /// e.g. identities of a divergent flow. Not a failure.
    Flagged,
    /// The check does not apply to this domain.
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub status: Status,
    /// Largest residual or margin; compared with `tolerance`.
    pub residual: Option<f64>,
    pub tolerance: Option<f64>,
    pub detail: Option<String>,
    pub values: BTreeMap<String, f64>,
}

impl CheckResult {
    fn measured(residual: f64, tolerance: f64, values: BTreeMap<String, f64>) -> Self {
        Self {
            status: if residual <= tolerance { Status::Pass } else { Status::Fail },
            residual: Some(residual),
            tolerance: Some(tolerance),
            detail: None,
            values,
        }
    }

    fn without_value(status: Status, detail: impl Into<String>) -> Self {
        Self {
            status,
            residual: None,
            tolerance: None,
            detail: Some(detail.into()),
            values: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LongTime {
    /// Every cluster has come to rest.
    AtRest,
    /// Some cluster moves forever.
    Divergent,
    /// The horizon ended the run before equilibrium.
    HorizonReached,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub atoms: usize,
    pub events: usize,
    pub interior_merges: usize,
    pub wall_absorptions: usize,
    pub final_clusters: usize,
    pub last_event_time: f64,
    pub long_time: LongTime,
    pub initial_energy: f64,
    pub final_energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub time: f64,
    pub position: f64,
    pub kind: EventKind,
    /// Initial atoms in the resulting cluster.
    pub members: Vec<usize>,
    pub mass: f64,
    pub velocity: f64,
    /// Exact time as `p/q` in rational mode.
    pub exact_time: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultBundle {
    pub name: String,
    /// File the scenario was read from, if any (file name only).
    pub source_file: Option<String>,
    pub scenario: Value,
    pub arithmetic: Arithmetic,
    pub seed: Option<u64>,
    pub summary: RunSummary,
    pub events: Vec<EventRecord>,
    pub series: Vec<SeriesPoint>,
    pub diagnostics: DiagnosticsReport,
    pub checks: BTreeMap<String, CheckResult>,
    pub passed: bool,
}

impl ResultBundle {
    pub fn count(&self, status: Status) -> usize {
        self.checks.values().filter(|c| c.status == status).count()
    }

    pub fn failing_checks(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|(_, c)| c.status == Status::Fail)
            .map(|(k, _)| k.as_str())
            .collect()
    }
}

/// Pipeline failure that is not a check failure (bad times, domain errors, ...).
#[derive(Debug, thiserror::Error)]
#[error("scenario {name}: {source}")]
pub struct RunError {
    pub name: String,
    pub source: Error,
}

pub fn run(scenario: &Scenario, opts: &RunOptions) -> Result<ResultBundle, RunError> {
    let arithmetic = opts.arithmetic.unwrap_or(scenario.arithmetic);
    let wrap = |source| RunError {
        name: scenario.name.clone(),
        source,
    };
    match arithmetic {
        Arithmetic::Float64 => run_in::<f64>(scenario, opts, arithmetic).map_err(wrap),
        Arithmetic::Rational => run_in::<Rational>(scenario, opts, arithmetic).map_err(wrap),
    }
}

pub fn state_in<T: Scalar>(scenario: &Scenario) -> stickyflow::Result<ParticleState<T>> {
    ParticleState::new(
        scenario
            .atoms
            .iter()
            .map(|a| Atom::new(T::from_rational(&a.m), T::from_rational(&a.x), T::from_rational(&a.v)))
            .collect(),
    )
}

pub fn domain_in<T: Scalar>(domain: &Domain<Rational>) -> stickyflow::Result<Domain<T>> {
    if domain.is_line() {
        return Ok(Domain::line());
    }
    Domain::union(
        domain
            .components()
            .iter()
            .map(|c| Component {
                lo: c.lo.as_ref().map(T::from_rational),
                hi: c.hi.as_ref().map(T::from_rational),
            })
            .collect(),
    )
}

fn is_unit_interval(domain: &Domain<Rational>) -> bool {
    *domain == Domain::unit_interval()
}

fn run_in<T: Scalar>(
    scenario: &Scenario,
    opts: &RunOptions,
    arithmetic: Arithmetic,
) -> stickyflow::Result<ResultBundle> {
    let state = state_in::<T>(scenario)?;
    let domain = domain_in::<T>(&scenario.domain)?;
    let horizon = opts.horizon.as_ref().or(scenario.horizon.as_ref()).map(T::from_rational);
    let log = simulate(&state, &domain, horizon)?;

    let profile = limit_profile(&log);
    let long_time = match &profile {
        Ok(_) => LongTime::AtRest,
        Err(Error::Divergent) => LongTime::Divergent,
        Err(Error::NotAtEquilibrium) => LongTime::HorizonReached,
        Err(e) => return Err(e.clone()),
    };
    let profile = profile.ok();

    let times: Vec<T> = match &scenario.times {
        Times::Auto => auto_times(&log, AUTO_GRID),
        Times::List(ts) => ts.iter().map(T::from_rational).collect(),
    };
    let series = sample_series(&log, profile.as_ref(), &times)?;

    let mut diagnostics = DiagnosticsReport::default();
    let mut checks = BTreeMap::new();
    let ctx = Context {
        scenario,
        log: &log,
        profile: profile.as_ref(),
        long_time,
        times: &times,
        tolerance: opts.tolerance.or(scenario.tolerance),
    };
    for check in &scenario.checks {
        checks.insert(check.name().to_string(), ctx.run_check(*check, &mut diagnostics)?);
    }

    let final_state = log.state_at(&log.last_event_time())?;
    let summary = RunSummary {
        atoms: state.len(),
        events: log.events.len(),
        interior_merges: log.events.iter().filter(|e| e.kind == EventKind::InteriorMerge).count(),
        wall_absorptions: log.events.iter().filter(|e| e.kind == EventKind::WallAbsorption).count(),
        final_clusters: log.final_clusters().len(),
        last_event_time: log.last_event_time().to_f64(),
        long_time,
        initial_energy: state.kinetic_energy().to_f64() / 2.0,
        final_energy: final_state.kinetic_energy().to_f64() / 2.0,
    };
    let events = log
        .events
        .iter()
        .map(|e| EventRecord {
            time: e.time.to_f64(),
            position: e.position.to_f64(),
            kind: e.kind,
            members: e.resulting.members.clone(),
            mass: e.resulting.mass.to_f64(),
            velocity: e.resulting.velocity().to_f64(),
            exact_time: T::EXACT.then(|| e.time.to_string()),
        })
        .collect();
    let passed = checks.values().all(|c: &CheckResult| c.status != Status::Fail);
    Ok(ResultBundle {
        name: scenario.name.clone(),
        source_file: None,
        scenario: scenario.source.clone(),
        arithmetic,
        seed: scenario.seed,
        summary,
        events,
        series,
        diagnostics,
        checks,
        passed,
    })
}

struct Context<'a, T: Scalar> {
    scenario: &'a Scenario,
    log: &'a EventLog<T>,
    profile: Option<&'a AsymptoticProfile<T>>,
    long_time: LongTime,
    times: &'a [T],
    tolerance: Option<f64>,
}

fn finite_values(map: &BTreeMap<String, f64>) -> BTreeMap<String, f64> {
    map.iter()
        .filter(|(_, v)| v.is_finite())
        .map(|(k, v)| (k.clone(), *v))
        .collect()
}

fn largest(map: &BTreeMap<String, f64>) -> f64 {
    map.values().copied().filter(|v| v.is_finite()).fold(f64::NEG_INFINITY, f64::max)
}

impl<T: Scalar> Context<'_, T> {
    fn tol(&self, default: f64) -> f64 {
        self.tolerance.unwrap_or(default)
    }

    fn line_only(&self) -> Option<CheckResult> {
        (!self.scenario.domain.is_line()).then(|| {
            CheckResult::without_value(Status::Skipped, "applies to the free line only; the domain has walls")
        })
    }

    /// Profile needed by the long-time checks, or the flag explaining its absence.
    fn profile_or_flag(&self) -> Result<&AsymptoticProfile<T>, CheckResult> {
        match (self.profile, self.long_time) {
            (Some(p), _) => Ok(p),
            (None, LongTime::Divergent) => Err(CheckResult::without_value(
                Status::Flagged,
                "divergent: clusters keep moving, so there is no limit profile",
            )),
            _ => Err(CheckResult::without_value(
                Status::Flagged,
                "horizon reached before equilibrium, so the limit profile is unknown",
            )),
        }
    }

    fn positive_times(&self) -> Vec<T> {
        self.times.iter().filter(|t| **t > T::zero()).cloned().collect()
    }

    fn run_check(&self, check: Check, diagnostics: &mut DiagnosticsReport) -> stickyflow::Result<CheckResult> {
        Ok(match check {
            Check::DualOracle => {
                if let Some(skip) = self.line_only() {
                    return Ok(skip);
                }
                let gap = dual_oracle_gap(&self.log.initial, self.times)?;
                CheckResult::measured(gap, self.tol(DUAL_ORACLE_TOL), BTreeMap::from([("max_l2_gap".into(), gap)]))
            }
            Check::Identities => {
                if let Some(skip) = self.line_only() {
                    return Ok(skip);
                }
                let profile = match self.profile_or_flag() {
                    Ok(p) => p,
                    Err(flag) => return Ok(flag),
                };
                let residuals = identity_suite(self.log, profile)?;
                let probe = normalization_probe(self.log, profile)?;
                let worst = largest(&residuals).max(0.0);
                let mut result = CheckResult::measured(worst, self.tol(DIAGNOSTIC_TOL), finite_values(&residuals));
                result.detail = Some(match probe.winner() {
                    Some(w) => format!("dissipation normalization that holds: {w}"),
                    None if probe.plain_holds => "both dissipation normalizations hold (no motion)".into(),
                    None => "neither dissipation normalization holds".into(),
                });
                diagnostics.identities = residuals;
                diagnostics.normalization = Some(probe);
                result
            }
            Check::Shapes => {
                if let Some(skip) = self.line_only() {
                    return Ok(skip);
                }
                let profile = match self.profile_or_flag() {
                    Ok(p) => p,
                    Err(flag) => return Ok(flag),
                };
                let margins = inequality_suite(self.log, profile)?;
                let worst = largest(&margins);
                let result = CheckResult::measured(worst, self.tol(DIAGNOSTIC_TOL), finite_values(&margins));
                diagnostics.inequalities = margins;
                result
            }
            Check::Oleinik => {
                let unit = is_unit_interval(&self.scenario.domain);
                let mut quotient = f64::NEG_INFINITY;
                let mut two_sided = f64::NEG_INFINITY;
                let mut uniform = f64::NEG_INFINITY;
                let times = self.positive_times();
                for t in &times {
                    let r = oleinik_check_log(self.log, t, unit)?;
                    quotient = quotient.max(if r.max_quotient.is_finite() {
                        r.max_quotient - r.bound
                    } else {
                        -r.bound
                    });
                    two_sided = two_sided.max(r.two_sided_margin.unwrap_or(f64::NEG_INFINITY));
                    uniform = uniform.max(r.uniform_margin.unwrap_or(f64::NEG_INFINITY));
                }
                if times.is_empty() {
                    return Ok(CheckResult::without_value(Status::Skipped, "no positive sample time"));
                }
                let mut values = BTreeMap::from([("oleinik".to_string(), quotient)]);
                if unit {
                    values.insert("two_sided_velocity_bound".into(), two_sided);
                    values.insert("uniform_velocity_bound".into(), uniform);
                }
                CheckResult::measured(largest(&values), self.tol(INEQUALITY_TOL), values)
            }
            Check::ConfinementEquivalence => {
                let rep = confinement_equivalence(&self.log.initial, &self.log.domain, EQUIVALENCE_SAMPLES)?;
                let mut values = BTreeMap::from([("max_w2".to_string(), rep.max_w2)]);
                if let Some(t) = rep.first_divergence {
                    values.insert("first_divergence".into(), t);
                }
                CheckResult::measured(rep.max_w2, self.tol(EQUIVALENCE_TOL), values)
            }
            Check::FlowIdentity => {
                if let Some(skip) = self.line_only() {
                    return Ok(skip);
                }
                let times = thin(self.times, FLOW_IDENTITY_TIMES);
                let mut worst = 0.0f64;
                let mut pairs = 0usize;
                for (i, s) in times.iter().enumerate() {
                    for t in &times[i..] {
                        worst = worst.max(flow_identity_check(self.log, s, t)?);
                        pairs += 1;
                    }
                }
                CheckResult::measured(
                    worst,
                    self.tol(DIAGNOSTIC_TOL),
                    BTreeMap::from([("max_residual".into(), worst), ("pairs".into(), pairs as f64)]),
                )
            }
        })
    }
}

/// At most `count` evenly strided entries, always keeping the last.
fn thin<T: Clone>(items: &[T], count: usize) -> Vec<T> {
    if items.len() <= count {
        return items.to_vec();
    }
    let last = items.len() - 1;
    (0..count).map(|k| items[k * last / (count - 1)].clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::parse_scenario;

    const PAIR: &str = r#"{"name": "pair", "atoms": [{"m": "1/2", "x": "1/4", "v": 1}, {"m": "1/2", "x": "3/4", "v": -1}],
        "checks": ["dual_oracle", "identities", "shapes", "oleinik", "confinement_equivalence", "flow_identity"]}"#;

    #[test]
    fn symmetric_pair_passes_everything() {
        let s = parse_scenario(PAIR, "mem").unwrap();
        for arithmetic in [Arithmetic::Float64, Arithmetic::Rational] {
            let opts = RunOptions {
                arithmetic: Some(arithmetic),
                ..Default::default()
            };
            let b = run(&s, &opts).unwrap();
            assert!(b.passed, "{:?}", b.checks);
            assert_eq!(b.count(Status::Pass), 6);
            assert_eq!(b.summary.events, 1);
            assert_eq!(b.summary.long_time, LongTime::AtRest);
        }
    }

    #[test]
    fn drifting_dirac_flags_identities() {
        let s = parse_scenario(
            r#"{"name": "d", "atoms": [{"m": 1, "x": "1/2", "v": 1}], "checks": ["dual_oracle", "identities"]}"#,
            "mem",
        )
        .unwrap();
        let b = run(&s, &RunOptions::default()).unwrap();
        assert_eq!(b.checks["dual_oracle"].status, Status::Pass);
        assert_eq!(b.checks["identities"].status, Status::Flagged);
        assert!(b.passed);
    }

    #[test]
    fn thinning_keeps_ends() {
        let v: Vec<usize> = (0..100).collect();
        let t = thin(&v, 5);
        assert_eq!(t, vec![0, 24, 49, 74, 99]);
        assert_eq!(thin(&v[..3], 5), vec![0, 1, 2]);
    }
}
