//! Seeded random initial data and a few named configurations.
//!
//! All generated values are dyadic rationals with few significant bits, so
//! the same data is exact in binary64 and converts losslessly to
//! [`Rational`](crate::Rational).

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::quantile::{Atom, ParticleState};
use crate::scalar::Scalar;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n` positive masses `kᵢ / 2^bits` summing to one.
pub fn dyadic_masses(rng: &mut impl Rng, n: usize, bits: u32) -> Vec<f64> {
    let total = 1usize << bits;
    assert!(n >= 1 && n <= total);
    let mut cuts: Vec<usize> = sample(rng, total - 1, n - 1)
        .into_iter()
        .map(|c| c + 1)
        .collect();
    cuts.sort_unstable();
    let mut prev = 0;
    let mut out = Vec::with_capacity(n);
    for c in cuts.into_iter().chain(std::iter::once(total)) {
        out.push((c - prev) as f64 / total as f64);
        prev = c;
    }
    out
}

/// `n` masses that are each a power of two, obtained by repeated halving.
pub fn binary_split_masses(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let mut masses = vec![1.0f64];
    while masses.len() < n {
        let i = rng.random_range(0..masses.len());
        let half = masses[i] / 2.0;
        masses[i] = half;
        masses.insert(i + 1, half);
    }
    masses
}

/// `n` distinct sorted positions `k / 2^bits` with `k` in `lo..=hi`.
fn dyadic_positions(rng: &mut impl Rng, n: usize, bits: u32, lo: usize, hi: usize) -> Vec<f64> {
    let mut ks: Vec<usize> = sample(rng, hi - lo + 1, n).into_iter().map(|k| k + lo).collect();
    ks.sort_unstable();
    let scale = (1u64 << bits) as f64;
    ks.into_iter().map(|k| k as f64 / scale).collect()
}

fn dyadic_velocity(rng: &mut impl Rng, max: f64) -> f64 {
    let steps = (max * 256.0) as i64;
    rng.random_range(-steps..=steps) as f64 / 256.0
}

fn assemble(masses: Vec<f64>, positions: Vec<f64>, velocities: Vec<f64>) -> ParticleState<f64> {
    ParticleState::new(
        masses
            .into_iter()
            .zip(positions)
            .zip(velocities)
            .map(|((m, x), v)| Atom::new(m, x, v))
            .collect(),
    )
    .expect("generated data is valid")
}

/// Free-line data: `n` atoms in `[0, 1]`, velocities in `[-2, 2]`.
pub fn random_free_line(rng: &mut impl Rng, n: usize) -> ParticleState<f64> {
    let masses = dyadic_masses(rng, n, 10);
    let positions = dyadic_positions(rng, n, 10, 0, 1024);
    let velocities = (0..n).map(|_| dyadic_velocity(rng, 2.0)).collect();
    assemble(masses, positions, velocities)
}

/// Data strictly inside `(0, 1)` with velocities in `[-2, 2]`.
pub fn random_box(rng: &mut impl Rng, n: usize) -> ParticleState<f64> {
    let masses = dyadic_masses(rng, n, 10);
    let positions = dyadic_positions(rng, n, 10, 1, 1023);
    let velocities = (0..n).map(|_| dyadic_velocity(rng, 2.0)).collect();
    assemble(masses, positions, velocities)
}

/// Data in `[0, 1]` whose free flow never leaves the hull of its support:
/// the primitive of the Lagrangian velocity is nonnegative and vanishes at
/// both ends. Velocities stay within `[-2, 2]`, and every quantity the
/// dynamics needs is exact in binary64.
pub fn random_confined(rng: &mut impl Rng, n: usize) -> ParticleState<f64> {
    let masses = binary_split_masses(rng, n);
    let positions = dyadic_positions(rng, n, 10, 0, 1024);
    let mut velocities = Vec::with_capacity(n);
    let mut primitive = 0.0f64;
    let mut cumulative = 0.0f64;
    for (k, &m) in masses.iter().enumerate() {
        cumulative += m;
        let v = if k + 1 == n {
            -primitive / m
        } else {
            let lo = (-primitive / m).max(-2.0);
            let hi = ((2.0 * (1.0 - cumulative) - primitive) / m).min(2.0);
            dyadic_velocity(rng, 2.0).clamp(lo, hi)
        };
        primitive += m * v;
        velocities.push(v);
    }
    debug_assert_eq!(primitive, 0.0);
    assemble(masses, positions, velocities)
}

/// `½δ_{1/4} + ½δ_{3/4}` approaching with speeds `±1`.
pub fn symmetric_pair() -> ParticleState<f64> {
    assemble(vec![0.5, 0.5], vec![0.25, 0.75], vec![1.0, -1.0])
}

/// `½δ_{1/4} + ½δ_{3/4}` separating with speeds `∓1`.
pub fn outward_pair() -> ParticleState<f64> {
    assemble(vec![0.5, 0.5], vec![0.25, 0.75], vec![-1.0, 1.0])
}

/// `δ_{1/2}` moving with unit speed: no asymptotic profile on the line.
pub fn drifting_dirac() -> ParticleState<f64> {
    assemble(vec![1.0], vec![0.5], vec![1.0])
}

/// `(δ_{1/n} + δ_{1-1/n}) / 2` with velocities `±1/n`, arbitrarily close to
/// the rest state `(δ₀ + δ₁)/2` yet converging to `δ_{1/2}`.
pub fn perturbed_rest_pair<T: Scalar>(n: i64) -> ParticleState<T> {
    ParticleState::new(vec![
        Atom::new(T::ratio(1, 2), T::ratio(1, n), T::ratio(1, n)),
        Atom::new(T::ratio(1, 2), T::ratio(n - 1, n), T::ratio(-1, n)),
    ])
    .expect("valid pair")
}

/// `(δ₀ + δ₁)/2` at rest.
pub fn rest_pair<T: Scalar>() -> ParticleState<T> {
    ParticleState::new(vec![
        Atom::new(T::ratio(1, 2), T::zero(), T::zero()),
        Atom::new(T::ratio(1, 2), T::one(), T::zero()),
    ])
    .expect("valid pair")
}

/// Exact conversion of generated binary64 data into another scalar type.
pub fn convert<T: Scalar>(state: &ParticleState<f64>) -> ParticleState<T> {
    ParticleState::new(
        state
            .atoms()
            .iter()
            .map(|a| Atom::new(T::from_f64(a.mass), T::from_f64(a.position), T::from_f64(a.velocity)))
            .collect(),
    )
    .expect("conversion preserves validity")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::is_confinement_consistent;
    use crate::lagrangian::LagrangianSolution;
    use crate::scalar::Rational;

    #[test]
    fn masses_sum_to_one_exactly() {
        let mut r = rng(3);
        for n in 1..=16 {
            assert_eq!(dyadic_masses(&mut r, n, 10).iter().sum::<f64>(), 1.0);
            let b = binary_split_masses(&mut r, n);
            assert_eq!(b.len(), n);
            assert_eq!(b.iter().sum::<f64>(), 1.0);
        }
    }

    #[test]
    fn confined_generator_is_confinement_consistent() {
        let mut r = rng(11);
        for _ in 0..50 {
            let n = r.random_range(2..=16);
            let s: ParticleState<Rational> = convert(&random_confined(&mut r, n));
            let sol = LagrangianSolution::from_state(&s).unwrap();
            let check = is_confinement_consistent(&sol.v0);
            assert!(check.consistent && check.routes_agree());
            assert!(s.atoms().iter().all(|a| Scalar::to_f64(&a.velocity).abs() <= 2.0));
        }
    }

    #[test]
    fn generators_are_deterministic() {
        let a = random_free_line(&mut rng(5), 9);
        let b = random_free_line(&mut rng(5), 9);
        assert_eq!(a, b);
    }
}
