//! Closed spatial domains: the line, rays, compact intervals and finite
//! unions of them with pairwise disjoint closures.

use crate::error::{Error, Result};
use crate::scalar::{Scalar, FLOAT_TOL};

/// Connected closed component; `None` endpoints are infinite.
#[derive(Debug, Clone, PartialEq)]
pub struct Component<T> {
    pub lo: Option<T>,
    pub hi: Option<T>,
}

impl<T: Scalar> Component<T> {
    pub fn contains(&self, x: &T) -> bool {
        self.lo.as_ref().is_none_or(|lo| lo <= x) && self.hi.as_ref().is_none_or(|hi| x <= hi)
    }

    /// Boundary point equal to `x`, if any.
    pub fn boundary_at(&self, x: &T) -> Option<T> {
        [&self.lo, &self.hi]
            .into_iter()
            .flatten()
            .find(|b| b.near(x, FLOAT_TOL))
            .cloned()
    }

    pub fn is_line(&self) -> bool {
        self.lo.is_none() && self.hi.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Domain<T> {
    components: Vec<Component<T>>,
}

impl<T: Scalar> Domain<T> {
    pub fn line() -> Self {
        Self {
            components: vec![Component { lo: None, hi: None }],
        }
    }

    pub fn interval(a: T, b: T) -> Result<Self> {
        Self::union(vec![Component {
            lo: Some(a),
            hi: Some(b),
        }])
    }

    pub fn unit_interval() -> Self {
        Self::interval(T::zero(), T::one()).expect("0 < 1")
    }

    /// `(-∞, b]`
    pub fn left_ray(b: T) -> Self {
        Self {
            components: vec![Component { lo: None, hi: Some(b) }],
        }
    }

    /// `[a, ∞)`
    pub fn right_ray(a: T) -> Self {
        Self {
            components: vec![Component { lo: Some(a), hi: None }],
        }
    }

    pub fn union(mut components: Vec<Component<T>>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidDomain("no components".into()));
        }
        for c in &components {
            if let (Some(a), Some(b)) = (&c.lo, &c.hi) {
                if a >= b {
                    return Err(Error::InvalidDomain(format!(
                        "interval endpoints must satisfy a < b (got [{a}, {b}])"
                    )));
                }
            }
        }
        components.sort_by(|x, y| match (&x.lo, &y.lo) {
            (None, None) => std::cmp::Ordering::Equal,
            (None, Some(_)) => std::cmp::Ordering::Less,
            (Some(_), None) => std::cmp::Ordering::Greater,
            (Some(a), Some(b)) => a.total_cmp(b),
        });
        for w in components.windows(2) {
            let disjoint = match (&w[0].hi, &w[1].lo) {
                (Some(h), Some(l)) => h < l,
                _ => false,
            };
            if !disjoint {
                return Err(Error::InvalidDomain(
                    "components must have pairwise disjoint closures".into(),
                ));
            }
        }
        Ok(Self { components })
    }

    pub fn components(&self) -> &[Component<T>] {
        &self.components
    }

    pub fn is_line(&self) -> bool {
        self.components.len() == 1 && self.components[0].is_line()
    }

    pub fn component_of(&self, x: &T) -> Option<usize> {
        self.components.iter().position(|c| c.contains(x))
    }

    pub fn contains(&self, x: &T) -> bool {
        self.component_of(x).is_some()
    }

    pub fn to_f64(&self) -> Domain<f64> {
        Domain {
            components: self
                .components
                .iter()
                .map(|c| Component {
                    lo: c.lo.as_ref().map(Scalar::to_f64),
                    hi: c.hi.as_ref().map(Scalar::to_f64),
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn membership() {
        let d = Domain::union(vec![
            Component { lo: Some(2.0), hi: Some(3.0) },
            Component { lo: Some(0.0), hi: Some(1.0) },
        ])
        .unwrap();
        assert_eq!(d.component_of(&0.5), Some(0));
        assert_eq!(d.component_of(&3.0), Some(1));
        assert_eq!(d.component_of(&1.5), None);
        assert!(Domain::<f64>::line().contains(&-1e300));
        assert!(Domain::left_ray(1.0).contains(&-5.0));
        assert!(!Domain::right_ray(1.0).contains(&0.0));
    }

    #[test]
    fn rejects_invalid() {
        assert!(Domain::interval(1.0, 1.0).is_err());
        assert!(Domain::union(vec![
            Component { lo: Some(0.0), hi: Some(1.0) },
            Component { lo: Some(1.0), hi: Some(2.0) },
        ])
        .is_err());
        assert!(Domain::union(vec![
            Component { lo: None, hi: Some(1.0) },
            Component { lo: None, hi: Some(3.0) },
        ])
        .is_err());
        assert!(Domain::<f64>::union(vec![]).is_err());
    }

    #[test]
    fn boundary_detection() {
        let d = Domain::unit_interval();
        assert_eq!(d.components()[0].boundary_at(&0.0), Some(0.0));
        assert_eq!(d.components()[0].boundary_at(&1.0), Some(1.0));
        assert_eq!(d.components()[0].boundary_at(&0.5), None);
    }
}
