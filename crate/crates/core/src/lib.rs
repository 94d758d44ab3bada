//! One-dimensional sticky-particle dynamics.
//!
//! Two independent solvers for the pressureless Euler system on the line
//! or on a closed domain with absorbing walls:
//!
//! * [`engine`] runs the discrete dynamics event by event (free flight,
//!   momentum-conserving merges, wall absorption);
//! * [`lagrangian`] evaluates the quantile function at any time as the
//!   monotone projection of `N₀ + t V₀` ([`cone`]).
//!
//! [`asymptotics`] measures the long-time behaviour of confined flows and
//! checks the energy identities and inequalities they satisfy, and
//! [`bombardment`] studies the countable collision cascades used to probe
//! decay rates. Everything is generic over [`Scalar`], so the same code runs
//! in binary64 or in exact rational arithmetic.

pub mod asymptotics;
pub mod bombardment;
pub mod cone;
pub mod domain;
pub mod engine;
pub mod error;
pub mod lagrangian;
pub mod quantile;
pub mod scalar;
pub mod scenario;

pub use domain::{Component, Domain};
pub use error::{Error, Result};
pub use quantile::{Atom, DiscreteMeasure, ParticleState, PiecewiseLinear, StepFunction};
pub use scalar::{Rational, Scalar};
