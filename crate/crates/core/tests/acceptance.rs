//! Acceptance criteria, one PASS/FAIL line each.

use std::process::ExitCode;
use std::time::Instant;

use rand::Rng;
use stickyflow::asymptotics::{
    normalization_probe, identity_suite, inequality_suite, limit_profile, limit_surrogate,
    DIAGNOSTIC_TOL,
};
use stickyflow::bombardment::{
    admissible_speed, energy_gap_series, fit_gap_decay, run_recursion, BombardmentRun,
    BombardmentSpec,
};
use stickyflow::cone::project_monotone;
use stickyflow::engine::simulate;
use stickyflow::lagrangian::{confinement_equivalence, dual_oracle_gap, LagrangianSolution};
use stickyflow::quantile::{DiscreteMeasure, StepFunction};
use stickyflow::scenario::{self, convert};
use stickyflow::{Domain, ParticleState, Rational, Scalar};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn dual_oracle() -> Outcome {
    let mut rng = scenario::rng(1001);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = rng.random_range(2..=16);
        let s = scenario::random_free_line(&mut rng, n);
        let log = simulate(&s, &Domain::line(), None).expect("valid data");
        let span = 1.5 * log.last_event_time().max(0.1);
        let times: Vec<f64> = (0..100).map(|_| rng.random_range(0.0..span)).collect();
        worst = worst.max(dual_oracle_gap(&s, &times).expect("valid data"));
    }
    outcome(worst <= 1e-9, format!("200 scenarios x 100 times, max L2 gap {worst:.3e}"))
}

fn confinement() -> Outcome {
    let mut rng = scenario::rng(2002);
    let mut worst = 0.0f64;
    let mut failures = 0;
    for i in 0..100 {
        let n = rng.random_range(1..=16);
        // alternate strictly interior data with data touching the walls
        let s = if i % 2 == 0 {
            scenario::random_box(&mut rng, n)
        } else {
            scenario::random_free_line(&mut rng, n)
        };
        let rep = confinement_equivalence(&s, &Domain::unit_interval(), 64).expect("valid data");
        worst = worst.max(rep.max_w2);
        failures += usize::from(!rep.passes);
    }
    outcome(
        failures == 0,
        format!("100 scenarios x 64 times, max W2 {worst:.3e}, {failures} failing"),
    )
}

/// Best block-constant candidate over every split into consecutive runs.
fn brute_force_projection(values: &[f64], widths: &[f64]) -> (Vec<f64>, f64) {
    let n = values.len();
    let mut best: Option<(Vec<f64>, f64)> = None;
    for mask in 0u32..(1 << (n - 1)) {
        let mut candidate = Vec::with_capacity(n);
        let mut start = 0;
        for k in 0..n {
            if k + 1 == n || mask & (1 << k) != 0 {
                let w: f64 = widths[start..=k].iter().sum();
                let s: f64 = (start..=k).map(|i| widths[i] * values[i]).sum();
                candidate.extend(std::iter::repeat_n(s / w, k + 1 - start));
                start = k + 1;
            }
        }
        if candidate.windows(2).any(|p| p[0] > p[1]) {
            continue;
        }
        let cost: f64 = (0..n).map(|i| widths[i] * (values[i] - candidate[i]).powi(2)).sum();
        if best.as_ref().is_none_or(|b| cost < b.1) {
            best = Some((candidate, cost));
        }
    }
    best.expect("one block is always monotone")
}

fn projection_optimality() -> Outcome {
    let mut cases = 0usize;
    let mut worst = 0.0f64;
    for n in 1..=6usize {
        let total = (n * (n + 1) / 2) as f64;
        let widths: Vec<f64> = (1..=n).map(|k| k as f64 / total).collect();
        let mut digits = vec![0usize; n];
        loop {
            let values: Vec<f64> = digits.iter().map(|&d| d as f64 - 3.0).collect();
            let f = StepFunction::from_widths(&widths, values.clone()).expect("valid cells");
            let got = project_monotone(&f).projection;
            let (want, _) = brute_force_projection(&values, &widths);
            let err: f64 = (0..n)
                .map(|i| widths[i] * (got.values()[i] - want[i]).powi(2))
                .sum::<f64>()
                .sqrt();
            worst = worst.max(err);
            cases += 1;
            let mut k = 0;
            while k < n && digits[k] == 6 {
                digits[k] = 0;
                k += 1;
            }
            if k == n {
                break;
            }
            digits[k] += 1;
        }
    }
    outcome(worst <= 1e-10, format!("{cases} cases, max L2 deviation {worst:.3e}"))
}

fn confined_scenarios() -> Vec<ParticleState<f64>> {
    let mut rng = scenario::rng(4004);
    (0..50)
        .map(|_| {
            let n = rng.random_range(2..=16);
            scenario::random_confined(&mut rng, n)
        })
        .collect()
}

struct SuiteSummary {
    worst_identity: (String, f64),
    worst_inequality: (String, f64),
    /// `(plain_holds, doubled_holds)` per run.
    winners: Vec<(bool, bool)>,
    surrogate_ok: bool,
}

fn run_suite<T: Scalar>(states: &[ParticleState<f64>]) -> SuiteSummary {
    let mut summary = SuiteSummary {
        worst_identity: (String::new(), f64::NEG_INFINITY),
        worst_inequality: (String::new(), f64::NEG_INFINITY),
        winners: Vec::new(),
        surrogate_ok: true,
    };
    for (i, s) in states.iter().enumerate() {
        let s: ParticleState<T> = convert(s);
        let log = simulate(&s, &Domain::line(), None).expect("valid data");
        let profile = limit_profile(&log).expect("confined data comes to rest");
        for (k, v) in identity_suite(&log, &profile).expect("free line") {
            if v > summary.worst_identity.1 {
                summary.worst_identity = (k, v);
            }
        }
        for (k, v) in inequality_suite(&log, &profile).expect("free line") {
            if v > summary.worst_inequality.1 {
                summary.worst_inequality = (k, v);
            }
        }
        let probe = normalization_probe(&log, &profile).expect("finite");
        summary.winners.push((probe.plain_holds, probe.doubled_holds));
        let sur = limit_surrogate(&log, &profile, [17 + i as u64, 9001 + i as u64], 12).expect("finite");
        summary.surrogate_ok &= sur.same_limit && sur.gaps_vanish;
    }
    summary
}

fn instability_pair() -> Outcome {
    let rest = simulate(&scenario::rest_pair::<Rational>(), &Domain::line(), None).expect("valid");
    let rest_limit = limit_profile(&rest).expect("at rest").limit_measure;
    let unperturbed = rest_limit.points().len() == 2;
    let half = DiscreteMeasure::dirac(Rational::ratio(1, 2));
    let mut all_collapse = true;
    for n in 2..=32 {
        let log = simulate(&scenario::perturbed_rest_pair::<Rational>(n), &Domain::line(), None)
            .expect("valid");
        all_collapse &= limit_profile(&log).expect("comes to rest").limit_measure == half;
    }
    outcome(
        unperturbed && all_collapse,
        format!("rest pair keeps two atoms: {unperturbed}; perturbed pairs n = 2..32 collapse to a Dirac at 1/2: {all_collapse}"),
    )
}

fn equality_case() -> Outcome {
    let sol = LagrangianSolution::from_state(&scenario::drifting_dirac()).expect("valid");
    let mut worst_shape = 0.0f64;
    let mut worst_equality = 0.0f64;
    for k in 1..=20 {
        let t = k as f64 * 0.37;
        let q = sol.solve_quantile(&t).expect("t >= 0");
        worst_shape = q.values().iter().fold(worst_shape, |acc, v| acc.max((v - (0.5 + t)).abs()));
        let c = sol.generic_decay_check(&t).expect("t > 0");
        worst_equality = worst_equality.max((c.lhs - c.rhs).abs());
    }
    outcome(
        worst_shape <= 1e-12 && worst_equality <= 1e-12,
        format!("20 times, |N(t) - (1/2 + t)| <= {worst_shape:.3e}, |lhs - rhs| <= {worst_equality:.3e}"),
    )
}

fn bombardment_reference() -> Outcome {
    let spec = BombardmentSpec::reference(60);
    let a = admissible_speed(&spec).expect("valid spec");
    let run: BombardmentRun<Rational> = run_recursion(&spec, &a).expect("admissible");
    let r = Rational::ratio;
    let exact_a = a == r(1, 3);
    let first = (run.v[1].clone(), run.t[1].clone(), run.y[1].clone()) == (r(1, 18), r(3, 10), r(3, 5));
    let momentum = run.momentum_residual.is_zero();
    let rows = energy_gap_series(&spec, &run).expect("valid run");
    let fit = fit_gap_decay(&rows, (20, 60)).expect("positive gaps");
    let gamma_ok = (fit.gamma - 1.0).abs() <= 0.1;
    outcome(
        exact_a && first && momentum && gamma_ok && run.is_monotone(),
        format!(
            "a = {a}, (v1, t1, y1) = ({}, {}, {}), momentum identity exact: {momentum}, gamma = {:.6} over k in [20, 60]",
            run.v[1], run.t[1], run.y[1], fit.gamma
        ),
    )
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |id: &str, title: &str, f: &dyn Fn() -> Outcome| {
        let start = Instant::now();
        let o = f();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!o.pass);
        println!(
            "{verdict} [{id}] {title}: {} ({:.2} s)",
            o.detail,
            start.elapsed().as_secs_f64()
        );
    };

    report("1", "dual-oracle equivalence", &dual_oracle);
    report("2", "confinement equivalence", &confinement);
    report("3", "projection optimality", &projection_optimality);

    let states = confined_scenarios();
    let start = Instant::now();
    let float = run_suite::<f64>(&states);
    let exact = run_suite::<Rational>(&states);
    let suite_time = start.elapsed().as_secs_f64();

    report("4", "identity suite", &|| {
        let pass = float.worst_identity.1 <= DIAGNOSTIC_TOL && exact.worst_identity.1 == 0.0;
        outcome(
            pass,
            format!(
                "50 confined scenarios, worst float residual {} = {:.3e}, worst rational residual {:.3e} (both modes {suite_time:.2} s)",
                float.worst_identity.0, float.worst_identity.1, exact.worst_identity.1
            ),
        )
    });
    report("5", "inequality suite", &|| {
        let pass = float.worst_inequality.1 <= DIAGNOSTIC_TOL && exact.worst_inequality.1 <= DIAGNOSTIC_TOL;
        outcome(
            pass,
            format!(
                "largest float margin {} = {:.3e}, largest rational margin {} = {:.3e}",
                float.worst_inequality.0,
                float.worst_inequality.1,
                exact.worst_inequality.0,
                exact.worst_inequality.1
            ),
        )
    });
    report("6", "decay bound equality case", &equality_case);
    report("7", "bombardment reference instance", &bombardment_reference);
    report("8", "dissipation normalization probe", &|| {
        let winners: Vec<_> = float.winners.iter().chain(&exact.winners).collect();
        let plain = winners.iter().all(|w| w.0);
        let doubled = winners.iter().all(|w| w.1);
        let degenerate = winners.iter().filter(|w| w.0 && w.1).count();
        let winner = match (plain, doubled) {
            (true, false) => "integral of |rho'|^2 = -<V0, N0>",
            (false, true) => "2 x integral of |rho'|^2 = -<V0, N0>",
            (true, true) => "both (no motion anywhere)",
            (false, false) => "neither",
        };
        outcome(
            plain != doubled,
            format!(
                "{} runs ({degenerate} without motion satisfy both), uniform winner: {winner}",
                winners.len()
            ),
        )
    });
    report("9", "asymptotic surrogate and instability", &|| {
        let inst = instability_pair();
        let sur = float.surrogate_ok && exact.surrogate_ok;
        outcome(
            sur && inst.pass,
            format!("two seeded sequences reach the same limit in all 100 runs: {sur}; {}", inst.detail),
        )
    });

    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
