//! Piecewise-constant and piecewise-linear functions on the unit interval
//! of mass coordinates.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Right-continuous step function on `[0, 1)`.
///
/// `values[k]` holds on `[breaks[k], breaks[k + 1])`; by convention the
/// last value is also returned at `x = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction<T: Scalar> {
    breaks: Vec<T>,
    values: Vec<T>,
}

impl<T: Scalar> StepFunction<T> {
    pub fn new(breaks: Vec<T>, values: Vec<T>) -> Result<Self> {
        if values.is_empty() || breaks.len() != values.len() + 1 {
            return Err(Error::InvalidStepFunction("need one more breakpoint than values"));
        }
        if !breaks[0].is_zero() || breaks[breaks.len() - 1] != T::one() {
            return Err(Error::InvalidStepFunction("breakpoints must run from 0 to 1"));
        }
        if breaks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidStepFunction("breakpoints must be strictly increasing"));
        }
        if !T::EXACT
            && breaks
                .iter()
                .chain(values.iter())
                .any(|v| !v.to_f64().is_finite())
        {
            return Err(Error::NonFinite { what: "step function" });
        }
        Ok(Self { breaks, values })
    }

    pub fn constant(c: T) -> Self {
        Self {
            breaks: vec![T::zero(), T::one()],
            values: vec![c],
        }
    }

    /// Step function on cells of the given widths (which must sum to 1).
    pub fn from_widths(widths: &[T], values: Vec<T>) -> Result<Self> {
        let mut breaks = Vec::with_capacity(widths.len() + 1);
        let mut acc = T::zero();
        breaks.push(acc.clone());
        for w in widths {
            acc = acc + w.clone();
            breaks.push(acc.clone());
        }
        if let Some(last) = breaks.last_mut() {
            if !last.near(&T::one(), 1e-12) {
                return Err(Error::MassNotNormalized { total: last.to_f64() });
            }
            *last = T::one();
        }
        Self::new(breaks, values)
    }

    pub fn breaks(&self) -> &[T] {
        &self.breaks
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn n_cells(&self) -> usize {
        self.values.len()
    }

    pub fn widths(&self) -> Vec<T> {
        self.breaks
            .windows(2)
            .map(|w| w[1].clone() - w[0].clone())
            .collect()
    }

    /// Index of the cell containing `x` (half-open cells, `x = 1` maps to the last cell).
    pub fn cell_of(&self, x: &T) -> usize {
        let n = self.values.len();
        // first break strictly greater than x, minus one
        let idx = self.breaks.partition_point(|b| b <= x);
        idx.saturating_sub(1).min(n - 1)
    }

    pub fn eval(&self, x: &T) -> T {
        self.values[self.cell_of(x)].clone()
    }

    pub fn map(&self, f: impl Fn(&T) -> T) -> Self {
        Self {
            breaks: self.breaks.clone(),
            values: self.values.iter().map(f).collect(),
        }
    }

    pub fn scale(&self, c: &T) -> Self {
        self.map(|v| v.clone() * c.clone())
    }

    /// Both functions expressed on the union of their breakpoints.
    pub fn refine(&self, other: &Self) -> (Vec<T>, Vec<T>, Vec<T>) {
        let mut breaks = Vec::with_capacity(self.breaks.len() + other.breaks.len());
        let mut a = Vec::new();
        let mut b = Vec::new();
        let (mut i, mut j) = (1usize, 1usize);
        breaks.push(T::zero());
        while i < self.breaks.len() && j < other.breaks.len() {
            a.push(self.values[i - 1].clone());
            b.push(other.values[j - 1].clone());
            match self.breaks[i].total_cmp(&other.breaks[j]) {
                std::cmp::Ordering::Less => {
                    breaks.push(self.breaks[i].clone());
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    breaks.push(other.breaks[j].clone());
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    breaks.push(self.breaks[i].clone());
                    i += 1;
                    j += 1;
                }
            }
        }
        (breaks, a, b)
    }

    /// Pointwise combination on the common refinement.
    pub fn zip_with(&self, other: &Self, f: impl Fn(&T, &T) -> T) -> Self {
        let (breaks, a, b) = self.refine(other);
        let values = a.iter().zip(&b).map(|(x, y)| f(x, y)).collect();
        Self { breaks, values }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a.clone() + b.clone())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a.clone() - b.clone())
    }

    /// `self + t * other`
    pub fn axpy(&self, t: &T, other: &Self) -> Self {
        self.zip_with(other, |a, b| a.clone() + t.clone() * b.clone())
    }

    pub fn integral(&self) -> T {
        self.widths()
            .into_iter()
            .zip(&self.values)
            .fold(T::zero(), |acc, (w, v)| acc + w * v.clone())
    }

    /// Merges adjacent cells carrying equal values.
    pub fn simplify(&self) -> Self {
        let mut breaks = vec![T::zero()];
        let mut values: Vec<T> = Vec::new();
        for (k, v) in self.values.iter().enumerate() {
            if values.last() == Some(v) {
                *breaks.last_mut().unwrap() = self.breaks[k + 1].clone();
            } else {
                values.push(v.clone());
                breaks.push(self.breaks[k + 1].clone());
            }
        }
        Self { breaks, values }
    }

    pub fn is_nondecreasing(&self, tol: f64) -> bool {
        self.values.windows(2).all(|w| w[0].le_tol(&w[1], tol))
    }

    /// Cell-wise comparison after refinement to the common partition.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        let (_, a, b) = self.refine(other);
        a.iter().zip(&b).all(|(x, y)| x.near(y, tol))
    }

    pub fn to_f64(&self) -> StepFunction<f64> {
        StepFunction {
            breaks: self.breaks.iter().map(Scalar::to_f64).collect(),
            values: self.values.iter().map(Scalar::to_f64).collect(),
        }
    }
}

/// Exact `∫₀¹ f g dx` by summation over the common partition.
pub fn l2_inner<T: Scalar>(f: &StepFunction<T>, g: &StepFunction<T>) -> T {
    let (breaks, a, b) = f.refine(g);
    breaks
        .windows(2)
        .zip(a.iter().zip(&b))
        .fold(T::zero(), |acc, (w, (x, y))| {
            acc + (w[1].clone() - w[0].clone()) * x.clone() * y.clone()
        })
}

pub fn l2_norm_sq<T: Scalar>(f: &StepFunction<T>) -> T {
    l2_inner(f, f)
}

pub fn l2_dist_sq<T: Scalar>(f: &StepFunction<T>, g: &StepFunction<T>) -> T {
    let (breaks, a, b) = f.refine(g);
    breaks
        .windows(2)
        .zip(a.iter().zip(&b))
        .fold(T::zero(), |acc, (w, (x, y))| {
            acc + (w[1].clone() - w[0].clone()) * (x.clone() - y.clone()).square()
        })
}

pub fn l2_dist<T: Scalar>(f: &StepFunction<T>, g: &StepFunction<T>) -> f64 {
    l2_dist_sq(f, g).to_f64().max(0.0).sqrt()
}

/// Continuous piecewise-linear function on `[0, 1]` given by its knots.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear<T: Scalar> {
    knots: Vec<(T, T)>,
}

impl<T: Scalar> PiecewiseLinear<T> {
    pub fn new(knots: Vec<(T, T)>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::InvalidPiecewiseLinear("need at least two knots"));
        }
        if !knots[0].0.is_zero() || knots[knots.len() - 1].0 != T::one() {
            return Err(Error::InvalidPiecewiseLinear("knots must span [0, 1]"));
        }
        if knots.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::InvalidPiecewiseLinear("knot abscissae must be strictly increasing"));
        }
        Ok(Self { knots })
    }

    pub fn knots(&self) -> &[(T, T)] {
        &self.knots
    }

    pub fn eval(&self, x: &T) -> T {
        let idx = self.knots.partition_point(|(k, _)| k <= x);
        if idx == 0 {
            return self.knots[0].1.clone();
        }
        if idx == self.knots.len() {
            return self.knots[idx - 1].1.clone();
        }
        let (x0, y0) = &self.knots[idx - 1];
        let (x1, y1) = &self.knots[idx];
        y0.clone() + (y1.clone() - y0.clone()) * (x.clone() - x0.clone()) / (x1.clone() - x0.clone())
    }

    pub fn slopes(&self) -> Vec<T> {
        self.knots
            .windows(2)
            .map(|w| (w[1].1.clone() - w[0].1.clone()) / (w[1].0.clone() - w[0].0.clone()))
            .collect()
    }

    pub fn derivative(&self) -> StepFunction<T> {
        StepFunction {
            breaks: self.knots.iter().map(|(x, _)| x.clone()).collect(),
            values: self.slopes(),
        }
    }

    pub fn is_convex(&self, tol: f64) -> bool {
        self.slopes().windows(2).all(|w| w[0].le_tol(&w[1], tol))
    }

    /// Knot of smallest value (the minimum of a piecewise-linear function is attained at a knot).
    pub fn argmin(&self) -> (T, T) {
        self.knots
            .iter()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .cloned()
            .expect("at least two knots")
    }

    /// `self(x) <= other(x)` on the union of knot sets (sufficient for piecewise-linear functions).
    pub fn below(&self, other: &Self, tol: f64) -> bool {
        self.knots
            .iter()
            .chain(other.knots.iter())
            .all(|(x, _)| self.eval(x).le_tol(&other.eval(x), tol))
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.knots
            .iter()
            .chain(other.knots.iter())
            .all(|(x, _)| self.eval(x).near(&other.eval(x), tol))
    }
}

/// `x ↦ ∫₀ˣ f`
pub fn antiderivative<T: Scalar>(f: &StepFunction<T>) -> PiecewiseLinear<T> {
    let mut knots = Vec::with_capacity(f.breaks.len());
    let mut acc = T::zero();
    knots.push((T::zero(), T::zero()));
    for (k, v) in f.values.iter().enumerate() {
        let w = f.breaks[k + 1].clone() - f.breaks[k].clone();
        acc = acc + w * v.clone();
        knots.push((f.breaks[k + 1].clone(), acc.clone()));
    }
    PiecewiseLinear { knots }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn half_split(a: f64, b: f64) -> StepFunction<f64> {
        StepFunction::new(vec![0.0, 0.5, 1.0], vec![a, b]).unwrap()
    }

    #[test]
    fn rejects_bad_partitions() {
        assert!(StepFunction::new(vec![0.0, 1.0], vec![1.0, 2.0]).is_err());
        assert!(StepFunction::new(vec![0.1, 1.0], vec![1.0]).is_err());
        assert!(StepFunction::new(vec![0.0, 0.5, 0.5, 1.0], vec![1.0, 2.0, 3.0]).is_err());
        assert!(StepFunction::new(vec![0.0, 1.0], vec![f64::NAN]).is_err());
    }

    #[test]
    fn right_continuous_evaluation() {
        let f = half_split(1.0, -1.0);
        assert_eq!(f.eval(&0.0), 1.0);
        assert_eq!(f.eval(&0.4999), 1.0);
        assert_eq!(f.eval(&0.5), -1.0);
        assert_eq!(f.eval(&1.0), -1.0);
    }

    #[test]
    fn inner_product_examples() {
        let c = StepFunction::constant(3.0);
        assert_eq!(l2_inner(&c, &c), 9.0);
        assert_eq!(l2_inner(&half_split(1.0, -1.0), &StepFunction::constant(1.0)), 0.0);
        assert_eq!(l2_inner(&half_split(0.25, 0.75), &half_split(1.0, -1.0)), -0.25);
    }

    #[test]
    fn inner_product_on_mismatched_partitions() {
        let f = StepFunction::new(vec![0.0, 0.25, 1.0], vec![2.0, 0.0]).unwrap();
        let g = half_split(1.0, 5.0);
        // only [0, 0.25) contributes: 0.25 * 2 * 1
        assert_eq!(l2_inner(&f, &g), 0.5);
    }

    #[test]
    fn antiderivative_examples() {
        let line = antiderivative(&StepFunction::constant(1.0));
        assert_eq!(line.knots(), &[(0.0, 0.0), (1.0, 1.0)]);
        let tent = antiderivative(&half_split(1.0, -1.0));
        assert_eq!(tent.knots(), &[(0.0, 0.0), (0.5, 0.5), (1.0, 0.0)]);
        let valley = antiderivative(&half_split(-1.0, 1.0));
        assert_eq!(valley.knots(), &[(0.0, 0.0), (0.5, -0.5), (1.0, 0.0)]);
        assert_eq!(valley.derivative(), half_split(-1.0, 1.0));
    }

    #[test]
    fn equality_after_refinement() {
        let a = StepFunction::constant(2.0);
        let b = half_split(2.0, 2.0);
        assert!(a.approx_eq(&b, 0.0));
        assert_eq!(b.simplify(), a);
    }

    #[test]
    fn exact_mode_integrals() {
        let third = Rational::ratio(1, 3);
        let f = StepFunction::new(
            vec![Rational::zero(), third.clone(), Rational::one()],
            vec![Rational::from_int(3), Rational::from_int(-1)],
        )
        .unwrap();
        assert_eq!(f.integral(), Rational::ratio(1, 3));
        assert_eq!(l2_norm_sq(&f), Rational::ratio(11, 3));
    }

    #[test]
    fn piecewise_linear_eval_and_min() {
        let valley = antiderivative(&half_split(-1.0, 1.0));
        assert_eq!(valley.eval(&0.25), -0.25);
        assert_eq!(valley.argmin(), (0.5, -0.5));
        assert!(valley.is_convex(0.0));
        let tent = antiderivative(&half_split(1.0, -1.0));
        assert!(!tent.is_convex(0.0));
        assert!(valley.below(&tent, 0.0));
    }
}
