//! Lagrangian description of the flow.
//!
//! On the free line the quantile function at time `t` is the monotone
//! projection of `N₀ + t V₀`, evaluated statelessly for any `t`. On a
//! closed domain the flow is obtained from the free flow by freezing every
//! trajectory at the first boundary point it reaches; [`confinement_equivalence`]
//! checks that construction against the wall-aware event engine.

use serde::{Deserialize, Serialize};

use crate::cone::project_monotone;
use crate::domain::{Component, Domain};
use crate::engine::{simulate, ClusterView, EventLog};
use crate::error::{Error, Result};
use crate::quantile::{
    l2_dist, l2_norm_sq, quantile_of, wasserstein2, Atom, ParticleState, StepFunction,
};
use crate::scalar::{Scalar, FLOAT_TOL};

/// Tolerance for the one-sided Lipschitz and decay inequalities.
pub const INEQUALITY_TOL: f64 = 1e-10;

/// Initial data in mass coordinates: `N₀` (positions) and `V₀ = v₀ ∘ N₀`
/// on the partition given by the cumulative masses.
#[derive(Debug, Clone)]
pub struct LagrangianSolution<T: Scalar> {
    pub n0: StepFunction<T>,
    pub v0: StepFunction<T>,
    pub domain: Domain<T>,
}

impl<T: Scalar> LagrangianSolution<T> {
    /// Free-line solution for a probability state.
    pub fn from_state(state: &ParticleState<T>) -> Result<Self> {
        Self::with_domain(state, Domain::line())
    }

    pub fn with_domain(state: &ParticleState<T>, domain: Domain<T>) -> Result<Self> {
        let measure = state.measure()?;
        let n0 = quantile_of(&measure);
        let v0 = StepFunction::new(
            n0.breaks().to_vec(),
            state.atoms().iter().map(|a| a.velocity.clone()).collect(),
        )?;
        for (index, x) in n0.values().iter().enumerate() {
            if !domain.contains(x) {
                return Err(Error::OutsideDomain {
                    index,
                    position: x.to_f64(),
                });
            }
        }
        Ok(Self { n0, v0, domain })
    }

    /// `N(t, ·) = proj(N₀ + t V₀)`.
    pub fn solve_quantile(&self, t: &T) -> Result<StepFunction<T>> {
        Ok(self.solve_blocks(t)?.0)
    }

    /// Quantile at `t` together with the clusters formed by the pooled blocks.
    pub fn solve_blocks(&self, t: &T) -> Result<(StepFunction<T>, Vec<BlockCluster<T>>)> {
        if *t < T::zero() {
            return Err(Error::NegativeTime(t.to_f64()));
        }
        if !self.domain.is_line() {
            return Err(Error::RequiresFreeLine);
        }
        let r = project_monotone(&self.n0.axpy(t, &self.v0));
        let widths = self.v0.widths();
        let clusters = r
            .blocks
            .iter()
            .map(|b| {
                let momentum = (b.start..b.end).fold(T::zero(), |acc, k| {
                    acc + widths[k].clone() * self.v0.values()[k].clone()
                });
                (b.weight.clone(), b.mean(), momentum / b.weight.clone())
            })
            .collect();
        Ok((r.projection, clusters))
    }

    pub fn generic_decay_check(&self, t: &T) -> Result<DecayCheck> {
        if *t <= T::zero() {
            return Err(Error::NegativeTime(t.to_f64()));
        }
        let n_t = self.solve_quantile(t)?;
        let limit_velocity = project_monotone(&self.v0).projection;
        let scaled = n_t.scale(&(T::one() / t.clone()));
        let lhs = l2_dist(&scaled, &limit_velocity);
        let rhs = l2_norm_sq(&self.n0).to_f64().sqrt() / t.to_f64();
        Ok(DecayCheck {
            t: t.to_f64(),
            lhs,
            rhs,
            holds: lhs <= rhs + INEQUALITY_TOL,
        })
    }
}

/// `‖N(t)/t − proj V₀‖₂ <= ‖N₀‖₂ / t`
/// `(mass, position, velocity)` of one pooled block.
pub type BlockCluster<T> = (T, T, T);

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayCheck {
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Largest `L²` gap between the event engine and the projection formula
/// over `times`, for a free-line probability state.
pub fn dual_oracle_gap<T: Scalar>(state: &ParticleState<T>, times: &[T]) -> Result<f64> {
    let log = simulate(state, &Domain::line(), None)?;
    let sol = LagrangianSolution::from_state(state)?;
    let mut worst = 0.0f64;
    for t in times {
        let engine_q = quantile_of(&log.state_at(t)?.measure()?);
        let projected = sol.solve_quantile(t)?;
        worst = worst.max(l2_dist(&engine_q, &projected));
    }
    Ok(worst)
}

/// Free flow frozen at the boundary of one domain component.
#[derive(Debug, Clone)]
pub struct ConfinedFlow<T: Scalar> {
    pub free: EventLog<T>,
    pub component: Component<T>,
    /// First time each atom's free trajectory reaches the boundary.
    pub hit_times: Vec<Option<T>>,
    pub hit_points: Vec<Option<T>>,
}

impl<T: Scalar> ConfinedFlow<T> {
    pub fn position(&self, atom: usize, t: &T) -> Result<T> {
        match (&self.hit_times[atom], &self.hit_points[atom]) {
            (Some(h), Some(p)) if h <= t => Ok(p.clone()),
            _ => Ok(self.free.atom_positions_at(t)?[atom].clone()),
        }
    }

    /// `Y(t, ·)` and the confined velocity (zero on the boundary) per atom.
    pub fn trajectories_at(&self, t: &T) -> Result<Vec<(T, T)>> {
        let free_x = self.free.atom_positions_at(t)?;
        let free_v = self.free.atom_velocities_at(t)?;
        Ok((0..free_x.len())
            .map(|i| match (&self.hit_times[i], &self.hit_points[i]) {
                (Some(h), Some(p)) if h <= t => (p.clone(), T::zero()),
                _ => (free_x[i].clone(), free_v[i].clone()),
            })
            .collect())
    }

    pub fn state_at(&self, t: &T) -> Result<ParticleState<T>> {
        let atoms = self
            .free
            .initial
            .atoms()
            .iter()
            .zip(self.trajectories_at(t)?)
            .map(|(a, (y, v))| Atom::new(a.mass.clone(), y, v))
            .collect();
        ParticleState::new(atoms)
    }
}

/// First boundary hit of every atom along the free flow.
pub fn confine_flow<T: Scalar>(free: &EventLog<T>, component: &Component<T>) -> Result<ConfinedFlow<T>> {
    if !free.domain.is_line() {
        return Err(Error::RequiresFreeLine);
    }
    if free.initial.atoms().iter().any(|a| !component.contains(&a.position)) {
        return Err(Error::SupportNotInComponent);
    }
    let n = free.initial.len();
    let mut hit_times: Vec<Option<T>> = vec![None; n];
    let mut hit_points: Vec<Option<T>> = vec![None; n];
    for (i, a) in free.initial.atoms().iter().enumerate() {
        if let Some(b) = component.boundary_at(&a.position) {
            hit_times[i] = Some(T::zero());
            hit_points[i] = Some(b);
        }
    }
    for (j, epoch) in free.epochs.iter().enumerate() {
        let end = free.epochs.get(j + 1).map(|e| e.time.clone());
        for c in &epoch.clusters {
            if c.members.iter().all(|&i| hit_times[i].is_some()) {
                continue;
            }
            let hit = first_hit(c.position_at(&epoch.time), c.velocity(), &epoch.time, component);
            if let Some((t, b)) = hit {
                if end.as_ref().is_none_or(|e| t <= *e) {
                    for &i in &c.members {
                        if hit_times[i].is_none() {
                            hit_times[i] = Some(t.clone());
                            hit_points[i] = Some(b.clone());
                        }
                    }
                }
            }
        }
    }
    Ok(ConfinedFlow {
        free: free.clone(),
        component: component.clone(),
        hit_times,
        hit_points,
    })
}

/// Time at which `x + v (s - start)` reaches the boundary, for `s >= start`.
fn first_hit<T: Scalar>(x: T, v: T, start: &T, comp: &Component<T>) -> Option<(T, T)> {
    if let Some(b) = comp.boundary_at(&x) {
        return Some((start.clone(), b));
    }
    if v < T::zero() {
        let lo = comp.lo.clone()?;
        Some((start.clone() + (lo.clone() - x) / v, lo))
    } else if v > T::zero() {
        let hi = comp.hi.clone()?;
        Some((start.clone() + (hi.clone() - x) / v, hi))
    } else {
        None
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub samples: usize,
    pub max_w2: f64,
    pub first_divergence: Option<f64>,
    pub passes: bool,
}

/// Tolerance on `W₂` between the frozen free flow and the wall-aware engine.
pub const EQUIVALENCE_TOL: f64 = 1e-10;

/// Compares the frozen free flow (per component) with native sticky walls
/// at `samples` evenly spaced times covering all events.
///
/// Velocities of atoms sitting on a boundary point are set to zero before
/// the free flow is run, as the construction requires data vanishing on
/// the boundary; the wall-aware engine absorbs such atoms at `t = 0` anyway.
pub fn confinement_equivalence<T: Scalar>(
    initial: &ParticleState<T>,
    domain: &Domain<T>,
    samples: usize,
) -> Result<EquivalenceReport> {
    let native = simulate(initial, domain, None)?;
    let mut flows = Vec::new();
    for (c, comp) in domain.components().iter().enumerate() {
        let atoms: Vec<Atom<T>> = initial
            .atoms()
            .iter()
            .zip(&native.atom_components)
            .filter(|(_, &k)| k == c)
            .map(|(a, _)| {
                let v = if comp.boundary_at(&a.position).is_some() {
                    T::zero()
                } else {
                    a.velocity.clone()
                };
                Atom::new(a.mass.clone(), a.position.clone(), v)
            })
            .collect();
        if atoms.is_empty() {
            continue;
        }
        let free = simulate(&ParticleState::new(atoms)?, &Domain::line(), None)?;
        flows.push(confine_flow(&free, comp)?);
    }
    let mut end = native.last_event_time();
    for f in &flows {
        end = end.max_of(f.free.last_event_time());
        for h in f.hit_times.iter().flatten() {
            end = end.max_of(h.clone());
        }
    }
    if end.is_zero() {
        end = T::one();
    }
    let horizon = end * T::ratio(5, 4);
    let mut max_w2 = 0.0f64;
    let mut first_divergence = None;
    for j in 0..samples {
        let t = horizon.clone() * T::ratio(j as i64, (samples.max(2) - 1) as i64);
        let mut atoms = Vec::new();
        for f in &flows {
            atoms.extend(f.state_at(&t)?.atoms().iter().cloned());
        }
        let confined = ParticleState::new(atoms)?.measure()?;
        let w = wasserstein2(&confined, &native.state_at(&t)?.measure()?);
        if w > EQUIVALENCE_TOL && first_divergence.is_none() {
            first_divergence = Some(t.to_f64());
        }
        max_w2 = max_w2.max(w);
    }
    Ok(EquivalenceReport {
        samples,
        max_w2,
        first_divergence,
        passes: first_divergence.is_none(),
    })
}

/// One-sided Lipschitz bound on the velocity and, for flows in `[0, 1]`,
/// the two-sided and uniform velocity bounds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OleinikReport {
    pub t: f64,
    /// Largest difference quotient over cluster pairs in one component
    /// (`-inf` with fewer than two clusters).
    pub max_quotient: f64,
    pub bound: f64,
    /// Largest violation of `(y - 1)/t <= v <= y/t` (nonpositive when satisfied).
    pub two_sided_margin: Option<f64>,
    /// Largest `|v| - 1/t`.
    pub uniform_margin: Option<f64>,
    pub passes: bool,
}

/// `clusters`: `(position, velocity, component)` sorted by position.
pub fn oleinik_check<T: Scalar>(clusters: &[(T, T, usize)], t: &T, unit_interval: bool) -> OleinikReport {
    let tf = t.to_f64();
    let mut max_quotient = f64::NEG_INFINITY;
    for i in 0..clusters.len() {
        for j in i + 1..clusters.len() {
            let (y1, v1, c1) = &clusters[i];
            let (y2, v2, c2) = &clusters[j];
            if c1 != c2 || y2.near(y1, FLOAT_TOL) {
                continue;
            }
            let q = ((v2.clone() - v1.clone()) / (y2.clone() - y1.clone())).to_f64();
            max_quotient = max_quotient.max(q);
        }
    }
    let bound = 1.0 / tf;
    let mut passes = max_quotient <= bound + INEQUALITY_TOL;
    let (two_sided_margin, uniform_margin) = if unit_interval {
        let mut two = f64::NEG_INFINITY;
        let mut uni = f64::NEG_INFINITY;
        for (y, v, _) in clusters {
            let (y, v) = (y.to_f64(), v.to_f64());
            two = two.max((y - 1.0) / tf - v).max(v - y / tf);
            uni = uni.max(v.abs() - bound);
        }
        passes &= two <= INEQUALITY_TOL && uni <= INEQUALITY_TOL;
        (Some(two), Some(uni))
    } else {
        (None, None)
    };
    OleinikReport {
        t: tf,
        max_quotient,
        bound,
        two_sided_margin,
        uniform_margin,
        passes,
    }
}

pub fn oleinik_check_log<T: Scalar>(log: &EventLog<T>, t: &T, unit_interval: bool) -> Result<OleinikReport> {
    let clusters: Vec<(T, T, usize)> = log
        .clusters_at(t)?
        .into_iter()
        .map(|c: ClusterView<T>| (c.position, c.velocity, c.component))
        .collect();
    Ok(oleinik_check(&clusters, t, unit_interval))
}

pub fn oleinik_check_solution<T: Scalar>(
    sol: &LagrangianSolution<T>,
    t: &T,
    unit_interval: bool,
) -> Result<OleinikReport> {
    let (_, blocks) = sol.solve_blocks(t)?;
    let clusters: Vec<(T, T, usize)> = blocks.into_iter().map(|(_, y, v)| (y, v, 0)).collect();
    Ok(oleinik_check(&clusters, t, unit_interval))
}

/// Residual of `∫ X(t,y) X(s,y) ρ₀(dy) = ∫ X(t,y) [y + s v₀(y)] ρ₀(dy)` for `s <= t`.
pub fn flow_identity_check<T: Scalar>(log: &EventLog<T>, s: &T, t: &T) -> Result<f64> {
    let xs = log.atom_positions_at(s)?;
    let xt = log.atom_positions_at(t)?;
    let mut lhs = T::zero();
    let mut rhs = T::zero();
    for (k, a) in log.initial.atoms().iter().enumerate() {
        lhs = lhs + a.mass.clone() * xt[k].clone() * xs[k].clone();
        rhs = rhs
            + a.mass.clone()
                * xt[k].clone()
                * (a.position.clone() + s.clone() * a.velocity.clone());
    }
    Ok((lhs - rhs).abs().to_f64())
}
