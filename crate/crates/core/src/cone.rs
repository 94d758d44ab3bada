//! Metric projection in `L²(0,1)` onto the cone of nondecreasing functions.
//!
//! The production route is weighted pool-adjacent-violators on the cells of
//! the input step function. The second, independent route differentiates
//! the greatest convex minorant of the antiderivative; both must agree cell
//! by cell.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::quantile::{antiderivative, l2_inner, PiecewiseLinear, StepFunction};
use crate::scalar::{Scalar, FLOAT_TOL};

/// Residual tolerance for the cone variational inequalities.
pub const CERTIFICATE_TOL: f64 = 1e-10;

/// Contiguous run of cells `start..end` pooled to a common value.
#[derive(Debug, Clone, PartialEq)]
pub struct Block<T> {
    pub start: usize,
    pub end: usize,
    pub weight: T,
    pub weighted_sum: T,
}

impl<T: Scalar> Block<T> {
    pub fn mean(&self) -> T {
        self.weighted_sum.clone() / self.weight.clone()
    }
}

/// Weighted pool-adjacent-violators. Weights must be positive.
///
/// Adjacent blocks with equal means are pooled as well, so the block
/// decomposition is canonical.
pub fn pava<T: Scalar>(values: &[T], weights: &[T]) -> Vec<Block<T>> {
    assert_eq!(values.len(), weights.len());
    let mut blocks: Vec<Block<T>> = Vec::with_capacity(values.len());
    for (k, (v, w)) in values.iter().zip(weights).enumerate() {
        let mut cur = Block {
            start: k,
            end: k + 1,
            weight: w.clone(),
            weighted_sum: w.clone() * v.clone(),
        };
        while let Some(prev) = blocks.last() {
            // prev.mean >= cur.mean, cross-multiplied (weights > 0)
            let lhs = prev.weighted_sum.clone() * cur.weight.clone();
            let rhs = cur.weighted_sum.clone() * prev.weight.clone();
            if lhs < rhs {
                break;
            }
            let prev = blocks.pop().expect("checked above");
            cur = Block {
                start: prev.start,
                end: cur.end,
                weight: prev.weight + cur.weight,
                weighted_sum: prev.weighted_sum + cur.weighted_sum,
            };
        }
        blocks.push(cur);
    }
    blocks
}

/// Largest convex function below `f` that agrees with it at both endpoints
/// (lower convex hull of the knots).
pub fn convex_envelope<T: Scalar>(f: &PiecewiseLinear<T>) -> PiecewiseLinear<T> {
    let mut hull: Vec<(T, T)> = Vec::with_capacity(f.knots().len());
    for p in f.knots() {
        while hull.len() >= 2 {
            let o = &hull[hull.len() - 2];
            let a = &hull[hull.len() - 1];
            let cross = (a.0.clone() - o.0.clone()) * (p.1.clone() - o.1.clone())
                - (a.1.clone() - o.1.clone()) * (p.0.clone() - o.0.clone());
            if cross > T::zero() {
                break;
            }
            hull.pop();
        }
        hull.push(p.clone());
    }
    PiecewiseLinear::new(hull).expect("hull keeps both endpoints")
}

#[derive(Debug, Clone)]
pub struct ConeProjectionResult<T: Scalar> {
    /// Nondecreasing projection, on the partition of the input.
    pub projection: StepFunction<T>,
    /// Convex envelope of the input primitive.
    pub envelope: PiecewiseLinear<T>,
    /// Mass-coordinate intervals where the envelope touches the primitive
    /// (degenerate intervals are isolated contact points).
    pub contact_set: Vec<(T, T)>,
    pub blocks: Vec<Block<T>>,
}

pub fn project_monotone<T: Scalar>(f: &StepFunction<T>) -> ConeProjectionResult<T> {
    let widths = f.widths();
    let blocks = pava(f.values(), &widths);
    let mut values = Vec::with_capacity(f.n_cells());
    for b in &blocks {
        let m = b.mean();
        values.extend(std::iter::repeat_n(m, b.end - b.start));
    }
    let projection =
        StepFunction::new(f.breaks().to_vec(), values).expect("same partition as input");
    let envelope = antiderivative(&projection);
    let primitive = antiderivative(f);
    let contact_set = contact_intervals(&primitive, &envelope);
    ConeProjectionResult {
        projection,
        envelope,
        contact_set,
        blocks,
    }
}

/// Second route: derivative of the convex envelope of the antiderivative.
pub fn project_monotone_via_envelope<T: Scalar>(f: &StepFunction<T>) -> StepFunction<T> {
    convex_envelope(&antiderivative(f)).derivative()
}

fn contact_intervals<T: Scalar>(
    primitive: &PiecewiseLinear<T>,
    envelope: &PiecewiseLinear<T>,
) -> Vec<(T, T)> {
    let mut out: Vec<(T, T)> = Vec::new();
    let mut run: Option<(T, T)> = None;
    for (x, fx) in primitive.knots() {
        if envelope.eval(x).near(fx, FLOAT_TOL) {
            run = Some(match run {
                Some((start, _)) => (start, x.clone()),
                None => (x.clone(), x.clone()),
            });
        } else if let Some(r) = run.take() {
            out.push(r);
        }
    }
    out.extend(run);
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateEntry {
    pub label: String,
    pub value: f64,
}

/// Variational-inequality residuals `⟨f − proj f, κ⟩` for test elements `κ` of the cone.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateReport {
    pub entries: Vec<CertificateEntry>,
    /// Largest `⟨f − proj f, κ⟩` over the family (must be `<= CERTIFICATE_TOL`).
    pub max_pairing: f64,
    /// `|⟨f − proj f, proj f⟩|`.
    pub orthogonality: f64,
    pub passes: bool,
}

fn random_monotone<T: Scalar>(rng: &mut ChaCha8Rng, base: &StepFunction<T>) -> StepFunction<T> {
    let mut breaks: Vec<f64> = base.breaks().iter().map(Scalar::to_f64).collect();
    for _ in 0..rng.random_range(0..4) {
        // dyadic cut points keep the rational route exact
        breaks.push(f64::from(rng.random_range(1u32..1024)) / 1024.0);
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let mut values: Vec<f64> = (0..breaks.len() - 1)
        .map(|_| f64::from(rng.random_range(-1024i32..=1024)) / 512.0)
        .collect();
    values.sort_by(f64::total_cmp);
    let mut exact_breaks: Vec<T> = breaks.into_iter().map(T::from_f64).collect();
    // keep the base partition's exact endpoints
    exact_breaks[0] = T::zero();
    *exact_breaks.last_mut().expect("nonempty") = T::one();
    let mut merged: Vec<T> = Vec::with_capacity(exact_breaks.len());
    for b in exact_breaks {
        if merged.last().is_none_or(|l| *l < b) {
            merged.push(b);
        }
    }
    let n = merged.len() - 1;
    values.truncate(n);
    StepFunction::new(merged, values.into_iter().map(T::from_f64).collect())
        .expect("sorted dyadic partition")
}

pub fn cone_certificates<T: Scalar>(
    f: &StepFunction<T>,
    r: &ConeProjectionResult<T>,
    seed: u64,
) -> CertificateReport {
    let residual = f.sub(&r.projection);
    let mut entries = Vec::new();
    let mut push = |label: String, value: T| {
        entries.push(CertificateEntry {
            label,
            value: value.to_f64(),
        })
    };
    push("+1".into(), l2_inner(&residual, &StepFunction::constant(T::one())));
    push("-1".into(), l2_inner(&residual, &StepFunction::constant(-T::one())));
    for x in &f.breaks()[1..] {
        let kappa = if *x == T::one() {
            StepFunction::constant(-T::one())
        } else {
            StepFunction::new(
                vec![T::zero(), x.clone(), T::one()],
                vec![-T::one(), T::zero()],
            )
            .expect("0 < x < 1")
        };
        push(format!("-1[0,{}]", x.to_f64()), l2_inner(&residual, &kappa));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 0..32 {
        let kappa = random_monotone(&mut rng, f);
        push(format!("random#{k}"), l2_inner(&residual, &kappa));
    }
    let orthogonality = l2_inner(&residual, &r.projection).to_f64().abs();
    let max_pairing = entries
        .iter()
        .map(|e| e.value)
        .fold(f64::NEG_INFINITY, f64::max);
    CertificateReport {
        passes: max_pairing <= CERTIFICATE_TOL && orthogonality <= CERTIFICATE_TOL,
        entries,
        max_pairing,
        orthogonality,
    }
}

/// Whether an initial Lagrangian velocity profile is compatible with a flow
/// staying inside the hull of its initial support.
#[derive(Debug, Clone)]
pub struct ConfinementCheck<T> {
    pub consistent: bool,
    /// `∫₀¹ V₀`
    pub total: T,
    /// Minimizer and minimum of the primitive of `V₀`; the witness on failure.
    pub witness: (T, T),
    /// Second route: the monotone projection of `V₀` vanishes.
    pub projection_vanishes: bool,
}

impl<T: Scalar> ConfinementCheck<T> {
    pub fn routes_agree(&self) -> bool {
        self.consistent == self.projection_vanishes
    }
}

pub fn is_confinement_consistent<T: Scalar>(v0: &StepFunction<T>) -> ConfinementCheck<T> {
    let primitive = antiderivative(v0);
    let total = primitive.knots().last().expect("two knots").1.clone();
    let witness = primitive.argmin();
    let consistent = total.negligible(FLOAT_TOL) && (-witness.1.clone()).le_tol(&T::zero(), FLOAT_TOL);
    let projection_vanishes = project_monotone(v0)
        .projection
        .values()
        .iter()
        .all(|v| v.negligible(FLOAT_TOL));
    ConfinementCheck {
        consistent,
        total,
        witness,
        projection_vanishes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn cells(values: &[f64]) -> StepFunction<f64> {
        let n = values.len();
        let widths = vec![1.0 / n as f64; n];
        StepFunction::from_widths(&widths, values.to_vec()).unwrap()
    }

    #[test]
    fn tent_envelope_is_zero() {
        let tent = PiecewiseLinear::new(vec![(0.0, 0.0), (0.5, 0.5), (1.0, 0.0)]).unwrap();
        let env = convex_envelope(&tent);
        assert_eq!(env.knots(), &[(0.0, 0.0), (1.0, 0.0)]);
        // brute force: the envelope dominates every chord-feasible value on a grid
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            assert!(env.eval(&x) <= tent.eval(&x));
        }
    }

    #[test]
    fn convex_input_unchanged() {
        let valley = PiecewiseLinear::new(vec![(0.0, 0.0), (0.5, -0.5), (1.0, 0.0)]).unwrap();
        assert_eq!(convex_envelope(&valley), valley);
    }

    #[test]
    fn projection_examples() {
        let r = project_monotone(&cells(&[1.0, -1.0]));
        assert_eq!(r.projection.values(), &[0.0, 0.0]);
        assert_eq!(r.contact_set, vec![(0.0, 0.0), (1.0, 1.0)]);

        let f = cells(&[-1.0, 1.0]);
        let r = project_monotone(&f);
        assert_eq!(r.projection, f);
        assert_eq!(r.contact_set, vec![(0.0, 1.0)]);

        let r = project_monotone(&cells(&[3.0, 1.0, 2.0]));
        for v in r.projection.values() {
            assert!((v - 2.0).abs() < 1e-15);
        }
        assert_eq!(r.blocks.len(), 1);
    }

    #[test]
    fn ties_pool_eagerly() {
        let blocks = pava(&[1.0, 1.0, 2.0], &[1.0, 1.0, 1.0]);
        assert_eq!(blocks.len(), 2);
        assert_eq!((blocks[0].start, blocks[0].end), (0, 2));
    }

    #[test]
    fn routes_agree_exactly_in_rationals() {
        let r = |n, d| Rational::ratio(n, d);
        let f = StepFunction::new(
            vec![r(0, 1), r(1, 8), r(1, 2), r(5, 8), r(1, 1)],
            vec![r(3, 1), r(-2, 1), r(1, 1), r(-1, 3)],
        )
        .unwrap();
        let pava_route = project_monotone(&f).projection;
        let hull_route = project_monotone_via_envelope(&f);
        assert!(pava_route.approx_eq(&hull_route, 0.0));
    }

    #[test]
    fn certificates() {
        let f = cells(&[0.25, 0.75]);
        let rep = cone_certificates(&f, &project_monotone(&f), 7);
        assert!(rep.entries.iter().all(|e| e.value == 0.0));
        assert!(rep.passes);

        let f = cells(&[1.0, -1.0]);
        let rep = cone_certificates(&f, &project_monotone(&f), 7);
        let half = rep.entries.iter().find(|e| e.label == "-1[0,0.5]").unwrap();
        assert_eq!(half.value, -0.5);
        assert_eq!(rep.orthogonality, 0.0);
        assert!(rep.passes);
        assert_eq!(rep.entries.len(), 2 + 2 + 32);
    }

    #[test]
    fn certificates_flag_a_wrong_projection() {
        let f = cells(&[1.0, -1.0]);
        let mut bogus = project_monotone(&f);
        bogus.projection = cells(&[-1.0, -1.0]);
        assert!(!cone_certificates(&f, &bogus, 1).passes);
    }

    #[test]
    fn confinement_examples() {
        let c = is_confinement_consistent(&cells(&[1.0, -1.0]));
        assert!(c.consistent && c.routes_agree());

        let c = is_confinement_consistent(&cells(&[-1.0, 1.0]));
        assert!(!c.consistent && c.routes_agree());
        assert_eq!(c.witness, (0.5, -0.5));

        let c = is_confinement_consistent(&StepFunction::constant(1.0));
        assert!(!c.consistent && c.routes_agree());
        assert_eq!(c.total, 1.0);
    }
}
