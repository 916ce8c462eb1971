//! Variable exponents p ∈ P(Ω) on an interval, their conjugates, and Sobolev conjugates.

use std::cmp::Ordering;
use std::ops::Sub;
use std::sync::Arc;

use thiserror::Error;

use crate::scalar::Real;

/// Sampling density used wherever an exponent has to be scanned over the closed domain.
pub const DENSE_SAMPLES: usize = 10_000;

/// Strict inequalities must hold with at least this margin to count.
pub const STRICT_MARGIN: f64 = 1e-9;

const CONJUGATE_GUARD: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExponentError {
    #[error("domain requires left < right, got [{left}, {right}]")]
    EmptyDomain { left: f64, right: f64 },
    #[error("exponent must be finite and at least 1, found {value} at z = {at}")]
    OutOfRange { value: f64, at: f64 },
    #[error("tabulated exponent: {0}")]
    InvalidTable(String),
    #[error("conjugate exponent is unbounded: p_minus = {p_minus} is not above 1")]
    UnboundedConjugate { p_minus: f64 },
    #[error("exponent defined on a different domain")]
    DomainMismatch,
}

/// Bounded open interval Ω = (left, right).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain<T> {
    left: T,
    right: T,
}

impl<T: Real> Domain<T> {
    pub fn new(left: T, right: T) -> Result<Self, ExponentError> {
        if !(left.is_finite() && right.is_finite() && left < right) {
            return Err(ExponentError::EmptyDomain {
                left: left.to_f64_lossy(),
                right: right.to_f64_lossy(),
            });
        }
        Ok(Self { left, right })
    }

    /// The unit interval (0, 1).
    pub fn unit() -> Self {
        Self {
            left: T::zero(),
            right: T::one(),
        }
    }

    pub fn left(&self) -> T {
        self.left
    }

    pub fn right(&self) -> T {
        self.right
    }

    pub fn measure(&self) -> T {
        self.right - self.left
    }

    pub fn clamp(&self, z: T) -> T {
        z.max(self.left).min(self.right)
    }

    /// `count + 1` equispaced points covering the closed interval, endpoints included.
    pub fn grid(&self, count: usize) -> impl Iterator<Item = T> + '_ {
        let step = self.measure() / T::lit(count as f64);
        (0..=count).map(move |i| {
            if i == count {
                self.right
            } else {
                self.left + step * T::lit(i as f64)
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExponentKind {
    Constant,
    Affine,
    Tabulated,
    /// Pointwise conjugate p/(p − 1) of another field.
    Conjugate,
}

#[derive(Debug, Clone)]
enum Repr<T> {
    Constant(T),
    Affine { intercept: T, slope: T },
    Tabulated { nodes: Arc<[T]>, values: Arc<[T]> },
    Conjugate(Arc<ExponentField<T>>),
}

/// A continuous exponent z ↦ p(z) on the closure of a [`Domain`], with cached
/// essential bounds `p_minus ≤ p(z) ≤ p_plus`.
///
/// Values must lie in [1, ∞). The stricter requirement `p_minus > 1` needed for a
/// growth exponent is enforced by [`ExponentField::ensure_superlinear`].
#[derive(Debug, Clone)]
pub struct ExponentField<T> {
    domain: Domain<T>,
    repr: Repr<T>,
    p_minus: T,
    p_plus: T,
}

impl<T: Real> ExponentField<T> {
    pub fn constant(domain: Domain<T>, value: T) -> Result<Self, ExponentError> {
        check_value(value, domain.left)?;
        Ok(Self {
            domain,
            repr: Repr::Constant(value),
            p_minus: value,
            p_plus: value,
        })
    }

    /// p(z) = intercept + slope·z.
    pub fn affine(domain: Domain<T>, intercept: T, slope: T) -> Result<Self, ExponentError> {
        let at_left = intercept + slope * domain.left;
        let at_right = intercept + slope * domain.right;
        check_value(at_left, domain.left)?;
        check_value(at_right, domain.right)?;
        Ok(Self {
            domain,
            repr: Repr::Affine { intercept, slope },
            p_minus: at_left.min(at_right),
            p_plus: at_left.max(at_right),
        })
    }

    /// Piecewise-linear interpolation of `values` at `nodes`. The nodes must be strictly
    /// increasing and span the domain exactly.
    pub fn tabulated(domain: Domain<T>, nodes: Vec<T>, values: Vec<T>) -> Result<Self, ExponentError> {
        if nodes.len() < 2 || nodes.len() != values.len() {
            return Err(ExponentError::InvalidTable(format!(
                "need at least two nodes with matching values, got {} nodes and {} values",
                nodes.len(),
                values.len()
            )));
        }
        if nodes.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(ExponentError::InvalidTable("nodes must be strictly increasing".into()));
        }
        if nodes[0] != domain.left || nodes[nodes.len() - 1] != domain.right {
            return Err(ExponentError::InvalidTable("nodes must start and end at the domain endpoints".into()));
        }
        for (&z, &v) in nodes.iter().zip(&values) {
            check_value(v, z)?;
        }
        let p_minus = values.iter().copied().fold(T::infinity(), T::min);
        let p_plus = values.iter().copied().fold(T::neg_infinity(), T::max);
        Ok(Self {
            domain,
            repr: Repr::Tabulated {
                nodes: nodes.into(),
                values: values.into(),
            },
            p_minus,
            p_plus,
        })
    }

    pub fn domain(&self) -> &Domain<T> {
        &self.domain
    }

    pub fn kind(&self) -> ExponentKind {
        match self.repr {
            Repr::Constant(_) => ExponentKind::Constant,
            Repr::Affine { .. } => ExponentKind::Affine,
            Repr::Tabulated { .. } => ExponentKind::Tabulated,
            Repr::Conjugate(_) => ExponentKind::Conjugate,
        }
    }

    pub fn p_minus(&self) -> T {
        self.p_minus
    }

    pub fn p_plus(&self) -> T {
        self.p_plus
    }

    pub fn is_constant(&self) -> bool {
        self.p_minus == self.p_plus
    }

    /// Evaluates p(z); points outside the closed domain are clamped onto it.
    pub fn eval(&self, z: T) -> T {
        let z = self.domain.clamp(z);
        match &self.repr {
            Repr::Constant(v) => *v,
            Repr::Affine { intercept, slope } => (*intercept + *slope * z).max(self.p_minus).min(self.p_plus),
            Repr::Tabulated { nodes, values } => {
                let idx = match nodes.binary_search_by(|n| n.partial_cmp(&z).unwrap_or(Ordering::Less)) {
                    Ok(i) => return values[i],
                    Err(i) => i.clamp(1, nodes.len() - 1),
                };
                let (z0, z1) = (nodes[idx - 1], nodes[idx]);
                let t = (z - z0) / (z1 - z0);
                values[idx - 1] + (values[idx] - values[idx - 1]) * t
            }
            Repr::Conjugate(inner) => {
                let p = inner.eval(z);
                p / (p - T::one())
            }
        }
    }

    /// Rejects exponents whose lower bound does not exceed 1.
    pub fn ensure_superlinear(&self) -> Result<(), ExponentError> {
        if self.p_minus <= T::one() + T::lit(CONJUGATE_GUARD) {
            return Err(ExponentError::UnboundedConjugate {
                p_minus: self.p_minus.to_f64_lossy(),
            });
        }
        Ok(())
    }

    /// Conjugate exponent q with 1/p + 1/q = 1 pointwise.
    pub fn conjugate(&self) -> Result<Self, ExponentError> {
        self.ensure_superlinear()?;
        let dual = |v: T| v / (v - T::one());
        Ok(match &self.repr {
            Repr::Constant(v) => Self {
                domain: self.domain,
                repr: Repr::Constant(dual(*v)),
                p_minus: dual(*v),
                p_plus: dual(*v),
            },
            Repr::Conjugate(inner) => (**inner).clone(),
            _ => Self {
                domain: self.domain,
                repr: Repr::Conjugate(Arc::new(self.clone())),
                p_minus: dual(self.p_plus),
                p_plus: dual(self.p_minus),
            },
        })
    }

    /// Sobolev conjugate p* for spatial dimension `dim`.
    pub fn sobolev_conjugate(&self, dim: u32) -> BoundField<T> {
        BoundField::SobolevConjugate {
            base: self.clone(),
            dim: dim.max(1),
        }
    }

    /// The quotient p*/q, the critical bound for lower-order growth in the flux.
    pub fn sobolev_over_conjugate(&self, dim: u32) -> Result<BoundField<T>, ExponentError> {
        self.ensure_superlinear()?;
        Ok(BoundField::SobolevOverConjugate {
            base: self.clone(),
            dim: dim.max(1),
        })
    }
}

fn check_value<T: Real>(value: T, at: T) -> Result<(), ExponentError> {
    if value.is_finite() && value >= T::one() {
        Ok(())
    } else {
        Err(ExponentError::OutOfRange {
            value: value.to_f64_lossy(),
            at: at.to_f64_lossy(),
        })
    }
}

/// A real number or +∞. Variant order makes the derived ordering total on
/// non-NaN payloads: every finite value is below `Infinity`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub enum Extended<T> {
    Finite(T),
    Infinity,
}

impl<T: Real> Extended<T> {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Extended::Infinity)
    }

    pub fn finite(&self) -> Option<T> {
        match self {
            Extended::Finite(v) => Some(*v),
            Extended::Infinity => None,
        }
    }
}

impl<T: Real> Sub<T> for Extended<T> {
    type Output = Extended<T>;

    fn sub(self, rhs: T) -> Self::Output {
        match self {
            Extended::Finite(v) => Extended::Finite(v - rhs),
            Extended::Infinity => Extended::Infinity,
        }
    }
}

/// An exponent that may take the value +∞.
#[derive(Debug, Clone)]
pub enum BoundField<T> {
    Finite(ExponentField<T>),
    SobolevConjugate { base: ExponentField<T>, dim: u32 },
    SobolevOverConjugate { base: ExponentField<T>, dim: u32 },
}

impl<T: Real> BoundField<T> {
    pub fn domain(&self) -> &Domain<T> {
        match self {
            BoundField::Finite(p) => p.domain(),
            BoundField::SobolevConjugate { base, .. } | BoundField::SobolevOverConjugate { base, .. } => base.domain(),
        }
    }

    pub fn eval(&self, z: T) -> Extended<T> {
        match self {
            BoundField::Finite(p) => Extended::Finite(p.eval(z)),
            BoundField::SobolevConjugate { base, dim } => {
                let n = T::lit(f64::from(*dim));
                let p = base.eval(z);
                if p < n {
                    Extended::Finite(n * p / (n - p))
                } else {
                    Extended::Infinity
                }
            }
            BoundField::SobolevOverConjugate { base, dim } => {
                // p*/q = N p/(N − p) · (p − 1)/p
                let n = T::lit(f64::from(*dim));
                let p = base.eval(z);
                if p < n {
                    Extended::Finite(n * (p - T::one()) / (n - p))
                } else {
                    Extended::Infinity
                }
            }
        }
    }
}

/// Outcome of [`strict_bound_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck<T> {
    pub holds: bool,
    /// Minimum of bound(z) − r(z) over the sampling grid.
    pub margin: Extended<T>,
    /// Grid point attaining the minimal margin (the failure witness when `holds` is false).
    pub witness: Option<T>,
}

/// Checks r(z) < bound(z) with margin at least [`STRICT_MARGIN`] on a dense grid of the closed domain.
pub fn strict_bound_check<T: Real>(
    r: &ExponentField<T>,
    bound: &BoundField<T>,
) -> Result<BoundCheck<T>, ExponentError> {
    if r.domain() != bound.domain() {
        return Err(ExponentError::DomainMismatch);
    }
    let mut margin = Extended::Infinity;
    let mut witness = None;
    for z in r.domain().grid(DENSE_SAMPLES) {
        let gap = bound.eval(z) - r.eval(z);
        if gap < margin {
            margin = gap;
            witness = Some(z);
        }
    }
    let holds = match margin {
        Extended::Infinity => true,
        Extended::Finite(m) => m > T::lit(STRICT_MARGIN),
    };
    Ok(BoundCheck { holds, margin, witness })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit() -> Domain<f64> {
        Domain::unit()
    }

    #[test]
    fn rejects_empty_domain() {
        assert!(Domain::new(1.0, 1.0).is_err());
        assert!(Domain::new(2.0, 1.0).is_err());
        assert_eq!(Domain::new(-1.0, 3.0).unwrap().measure(), 4.0);
    }

    #[test]
    fn conjugate_examples() {
        let two = ExponentField::constant(unit(), 2.0).unwrap().conjugate().unwrap();
        assert_eq!(two.eval(0.3), 2.0);
        let three = ExponentField::constant(unit(), 3.0).unwrap().conjugate().unwrap();
        assert_abs_diff_eq!(three.eval(0.7), 1.5, epsilon = 1e-15);
        let p = ExponentField::affine(unit(), 2.0, 1.0).unwrap();
        let q = p.conjugate().unwrap();
        assert_abs_diff_eq!(q.eval(0.5), 5.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(q.p_minus(), 3.0 / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(q.p_plus(), 2.0, epsilon = 1e-15);
    }

    #[test]
    fn conjugate_rejects_p_near_one() {
        let p = ExponentField::constant(unit(), 1.0).unwrap();
        assert!(matches!(p.conjugate(), Err(ExponentError::UnboundedConjugate { .. })));
        let p = ExponentField::affine(unit(), 1.0 + 1e-13, 1.0).unwrap();
        assert!(p.conjugate().is_err());
    }

    #[test]
    fn rejects_exponents_below_one() {
        assert!(ExponentField::constant(unit(), 0.5).is_err());
        assert!(ExponentField::affine(unit(), 1.5, -1.0).is_err());
        assert!(ExponentField::constant(unit(), f64::INFINITY).is_err());
    }

    #[test]
    fn tabulated_interpolates_and_validates() {
        let p = ExponentField::tabulated(unit(), vec![0.0, 0.5, 1.0], vec![2.0, 4.0, 3.0]).unwrap();
        assert_eq!(p.eval(0.25), 3.0);
        assert_eq!(p.eval(0.75), 3.5);
        assert_eq!(p.eval(1.0), 3.0);
        assert_eq!((p.p_minus(), p.p_plus()), (2.0, 4.0));
        assert!(ExponentField::tabulated(unit(), vec![0.0, 0.7], vec![2.0, 2.0]).is_err());
        assert!(ExponentField::tabulated(unit(), vec![0.0, 0.0, 1.0], vec![2.0, 2.0, 2.0]).is_err());
    }

    #[test]
    fn sobolev_conjugate_examples() {
        let two = ExponentField::constant(unit(), 2.0).unwrap();
        assert_eq!(two.sobolev_conjugate(3).eval(0.1), Extended::Finite(6.0));
        assert_eq!(two.sobolev_conjugate(1).eval(0.1), Extended::Infinity);
        let p = ExponentField::affine(unit(), 2.0, 1.0).unwrap();
        let star = p.sobolev_conjugate(1);
        assert!(unit().grid(100).all(|z| star.eval(z).is_infinite()));
    }

    #[test]
    fn extended_ordering_is_total() {
        assert!(Extended::Finite(1e300) < Extended::Infinity);
        assert!(Extended::Finite(-1.0) < Extended::Finite(1.0));
        assert_eq!(Extended::<f64>::Infinity.partial_cmp(&Extended::Infinity), Some(Ordering::Equal));
    }

    #[test]
    fn strict_bound_examples() {
        let one = ExponentField::constant(unit(), 1.0).unwrap();
        let p = ExponentField::constant(unit(), 2.0).unwrap();
        let check = strict_bound_check(&one, &p.sobolev_conjugate(1)).unwrap();
        assert!(check.holds);
        assert_eq!(check.margin, Extended::Infinity);

        let check = strict_bound_check(&p, &BoundField::Finite(p.clone())).unwrap();
        assert!(!check.holds);
        assert!(check.witness.is_some());

        // min over [0,1] of 2 − (1 + z/2) is 1/2, attained at z = 1.
        let r = ExponentField::affine(unit(), 1.0, 0.5).unwrap();
        let check = strict_bound_check(&r, &BoundField::Finite(p)).unwrap();
        assert!(check.holds);
        assert_abs_diff_eq!(check.margin.finite().unwrap(), 0.5, epsilon = 1e-12);
        assert_eq!(check.witness, Some(1.0));
    }

    #[test]
    fn sobolev_ordering_in_three_dimensions() {
        // p ∈ [1.2, 2.5] < N = 3 keeps p* finite; p*/q = p*·(p − 1)/p lies below p*.
        let p = ExponentField::affine(unit(), 1.2, 1.3).unwrap();
        let star = p.sobolev_conjugate(3);
        let ratio = p.sobolev_over_conjugate(3).unwrap();
        for z in unit().grid(1000) {
            let (s, r) = (star.eval(z).finite().unwrap(), ratio.eval(z).finite().unwrap());
            let pz = p.eval(z);
            assert!(s > r, "z = {z}: {s} {r}");
            assert_abs_diff_eq!(r, s * (pz - 1.0) / pz, epsilon = 1e-12);
        }
    }

    #[test]
    fn domain_mismatch_is_reported() {
        let other = Domain::new(0.0, 2.0).unwrap();
        let r = ExponentField::constant(other, 1.0).unwrap();
        let p = ExponentField::constant(unit(), 2.0).unwrap();
        assert_eq!(
            strict_bound_check(&r, &p.sobolev_conjugate(1)),
            Err(ExponentError::DomainMismatch)
        );
    }
}
