//! Finitely supported measures, their quantile and distribution functions,
//! and the quadratic Wasserstein distance between them.

use serde::{Deserialize, Serialize};

use super::step::{l2_dist_sq, StepFunction};
use crate::error::{Error, Result};
use crate::scalar::{Scalar, FLOAT_TOL};

/// Point mass carrying a velocity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom<T> {
    pub mass: T,
    pub position: T,
    pub velocity: T,
}

impl<T: Scalar> Atom<T> {
    pub fn new(mass: T, position: T, velocity: T) -> Self {
        Self {
            mass,
            position,
            velocity,
        }
    }
}

/// Sorts by position and merges atoms whose positions coincide
/// (within [`FLOAT_TOL`] in float mode), conserving mass and momentum.
fn normalize_atoms<T: Scalar>(mut atoms: Vec<Atom<T>>) -> Result<Vec<Atom<T>>> {
    for (index, a) in atoms.iter().enumerate() {
        if !T::EXACT
            && [&a.mass, &a.position, &a.velocity]
                .iter()
                .any(|v| !v.to_f64().is_finite())
        {
            return Err(Error::NonFinite { what: "atom" });
        }
        if a.mass <= T::zero() {
            return Err(Error::NonPositiveMass {
                index,
                mass: a.mass.to_f64(),
            });
        }
    }
    atoms.sort_by(|a, b| a.position.total_cmp(&b.position));
    let mut out: Vec<Atom<T>> = Vec::with_capacity(atoms.len());
    for a in atoms {
        match out.last_mut() {
            Some(prev) if prev.position.near(&a.position, FLOAT_TOL) => {
                let mass = prev.mass.clone() + a.mass.clone();
                let momentum = prev.mass.clone() * prev.velocity.clone()
                    + a.mass.clone() * a.velocity.clone();
                let moment = prev.mass.clone() * prev.position.clone()
                    + a.mass.clone() * a.position.clone();
                prev.position = moment / mass.clone();
                prev.velocity = momentum / mass.clone();
                prev.mass = mass;
            }
            _ => out.push(a),
        }
    }
    Ok(out)
}

/// Finite collection of atoms sorted strictly by position.
///
/// Total mass is arbitrary (restrictions to domain components are not
/// probability measures); use [`ParticleState::measure`] for the normalized view.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleState<T: Scalar> {
    atoms: Vec<Atom<T>>,
}

impl<T: Scalar> ParticleState<T> {
    pub fn new(atoms: Vec<Atom<T>>) -> Result<Self> {
        Ok(Self {
            atoms: normalize_atoms(atoms)?,
        })
    }

    /// Builds from `(mass, position, velocity)` triples given as floats.
    pub fn from_f64(triples: &[(f64, f64, f64)]) -> Result<Self> {
        Self::new(
            triples
                .iter()
                .map(|&(m, x, v)| Atom::new(T::from_f64(m), T::from_f64(x), T::from_f64(v)))
                .collect(),
        )
    }

    pub fn atoms(&self) -> &[Atom<T>] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> T {
        self.atoms
            .iter()
            .fold(T::zero(), |acc, a| acc + a.mass.clone())
    }

    pub fn momentum(&self) -> T {
        self.atoms
            .iter()
            .fold(T::zero(), |acc, a| acc + a.mass.clone() * a.velocity.clone())
    }

    pub fn kinetic_energy(&self) -> T {
        self.atoms.iter().fold(T::zero(), |acc, a| {
            acc + a.mass.clone() * a.velocity.square()
        })
    }

    pub fn measure(&self) -> Result<DiscreteMeasure<T>> {
        DiscreteMeasure::new(
            self.atoms
                .iter()
                .map(|a| PointMass::new(a.mass.clone(), a.position.clone()))
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointMass<T> {
    pub mass: T,
    pub position: T,
}

impl<T: Scalar> PointMass<T> {
    pub fn new(mass: T, position: T) -> Self {
        Self { mass, position }
    }
}

/// Probability measure with finitely many atoms, strictly increasing positions.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure<T: Scalar> {
    points: Vec<PointMass<T>>,
}

impl<T: Scalar> DiscreteMeasure<T> {
    pub fn new(points: Vec<PointMass<T>>) -> Result<Self> {
        let atoms = points
            .into_iter()
            .map(|p| Atom::new(p.mass, p.position, T::zero()))
            .collect();
        let atoms = normalize_atoms(atoms)?;
        let total = atoms.iter().fold(T::zero(), |acc, a| acc + a.mass.clone());
        if !total.near(&T::one(), FLOAT_TOL) {
            return Err(Error::MassNotNormalized {
                total: total.to_f64(),
            });
        }
        Ok(Self {
            points: atoms
                .into_iter()
                .map(|a| PointMass::new(a.mass, a.position))
                .collect(),
        })
    }

    pub fn dirac(position: T) -> Self {
        Self {
            points: vec![PointMass::new(T::one(), position)],
        }
    }

    pub fn points(&self) -> &[PointMass<T>] {
        &self.points
    }

    pub fn mean(&self) -> T {
        self.points.iter().fold(T::zero(), |acc, p| {
            acc + p.mass.clone() * p.position.clone()
        })
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.points.len() == other.points.len()
            && self.points.iter().zip(&other.points).all(|(a, b)| {
                a.mass.near(&b.mass, tol) && a.position.near(&b.position, tol)
            })
    }
}

/// Quantile (optimal) map: the right-continuous nondecreasing step function on
/// `(0, 1)` pushing Lebesgue measure forward to `measure`.
pub fn quantile_of<T: Scalar>(measure: &DiscreteMeasure<T>) -> StepFunction<T> {
    let widths: Vec<T> = measure.points.iter().map(|p| p.mass.clone()).collect();
    let values = measure.points.iter().map(|p| p.position.clone()).collect();
    StepFunction::from_widths(&widths, values).expect("validated probability measure")
}

/// Reconstructs the measure from a quantile function (cell widths become masses).
pub fn measure_of_quantile<T: Scalar>(quantile: &StepFunction<T>) -> Result<DiscreteMeasure<T>> {
    DiscreteMeasure::new(
        quantile
            .widths()
            .into_iter()
            .zip(quantile.values())
            .map(|(w, v)| PointMass::new(w, v.clone()))
            .collect(),
    )
}

/// Right-continuous cumulative distribution function.
#[derive(Debug, Clone)]
pub struct Cdf<T: Scalar> {
    positions: Vec<T>,
    cumulative: Vec<T>,
}

impl<T: Scalar> Cdf<T> {
    /// Total mass at positions `<= y`.
    pub fn eval(&self, y: &T) -> T {
        let idx = self.positions.partition_point(|p| p <= y);
        if idx == 0 {
            T::zero()
        } else {
            self.cumulative[idx - 1].clone()
        }
    }
}

pub fn cdf_of<T: Scalar>(measure: &DiscreteMeasure<T>) -> Cdf<T> {
    let mut acc = T::zero();
    let mut cumulative = Vec::with_capacity(measure.points.len());
    for p in &measure.points {
        acc = acc + p.mass.clone();
        cumulative.push(acc.clone());
    }
    if let Some(last) = cumulative.last_mut() {
        *last = T::one();
    }
    Cdf {
        positions: measure.points.iter().map(|p| p.position.clone()).collect(),
        cumulative,
    }
}

/// Image measure under a map applied to every atom position.
pub fn pushforward<T: Scalar>(
    measure: &DiscreteMeasure<T>,
    map: impl Fn(&T) -> T,
) -> DiscreteMeasure<T> {
    DiscreteMeasure::new(
        measure
            .points
            .iter()
            .map(|p| PointMass::new(p.mass.clone(), map(&p.position)))
            .collect(),
    )
    .expect("pushforward preserves mass")
}

/// Squared quadratic Wasserstein distance, exact in the scalar type.
pub fn wasserstein2_sq<T: Scalar>(mu: &DiscreteMeasure<T>, nu: &DiscreteMeasure<T>) -> T {
    l2_dist_sq(&quantile_of(mu), &quantile_of(nu))
}

pub fn wasserstein2<T: Scalar>(mu: &DiscreteMeasure<T>, nu: &DiscreteMeasure<T>) -> f64 {
    wasserstein2_sq(mu, nu).to_f64().max(0.0).sqrt()
}
