//! Semimodulars ρ_{p(·)} and Luxemburg norms on L^{p(·)} and W^{1,p(·)}.
//!
//! Every routine works on values tabulated at quadrature points, so the same code
//! serves P1 functions, their broken gradients, and closed-form reference solutions.
//! Sums are accumulated in fixed element order, which keeps results bit-reproducible.

use thiserror::Error;

use crate::exponent::{ExponentError, ExponentField};
use crate::fem::{MeshedFunction, Samples};
use crate::quadrature::QuadratureRule;
use crate::scalar::Real;

/// Modulars below this value identify the zero function.
pub const ZERO_MODULAR: f64 = 1e-15;
/// Relative bracket width at which bisection stops.
pub const BISECTION_RTOL: f64 = 1e-11;
/// Geometric growth of the bisection bracket.
pub const BRACKET_GROWTH: f64 = 4.0;
/// Absolute slack granted to the inequality checks.
pub const INEQUALITY_SLACK: f64 = 1e-9;

const MAX_BISECTIONS: usize = 400;

#[derive(Debug, Error)]
pub enum ModularError {
    #[error("fields are tabulated on different quadrature points")]
    PointMismatch,
    #[error(transparent)]
    Exponent(#[from] ExponentError),
}

/// Scalar values with their quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarSamples<T> {
    pub points: Vec<T>,
    pub weights: Vec<T>,
    pub values: Vec<T>,
}

/// Anything that can be tabulated at the quadrature points of a rule.
pub trait ScalarField<T: Real> {
    fn scalar_samples(&self, rule: &QuadratureRule<T>) -> ScalarSamples<T>;
}

impl<T: Real> ScalarField<T> for MeshedFunction<T> {
    fn scalar_samples(&self, rule: &QuadratureRule<T>) -> ScalarSamples<T> {
        self.sample(rule).value_field()
    }
}

/// The broken (piecewise-constant) gradient of a P1 function, viewed as a field.
#[derive(Debug, Clone, Copy)]
pub struct Gradient<'a, T>(pub &'a MeshedFunction<T>);

impl<T: Real> ScalarField<T> for Gradient<'_, T> {
    fn scalar_samples(&self, rule: &QuadratureRule<T>) -> ScalarSamples<T> {
        self.0.sample(rule).gradient_field()
    }
}

/// Pre-tabulated samples ignore the rule argument.
impl<T: Real> ScalarField<T> for ScalarSamples<T> {
    fn scalar_samples(&self, _rule: &QuadratureRule<T>) -> ScalarSamples<T> {
        self.clone()
    }
}

impl<T: Real> Samples<T> {
    pub fn value_field(&self) -> ScalarSamples<T> {
        ScalarSamples {
            points: self.points.clone(),
            weights: self.weights.clone(),
            values: self.values.clone(),
        }
    }

    pub fn gradient_field(&self) -> ScalarSamples<T> {
        ScalarSamples {
            points: self.points.clone(),
            weights: self.weights.clone(),
            values: self.gradients.clone(),
        }
    }
}

/// ρ_{p(·)}(u) ≥ 0.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Modular<T>(pub T);

impl<T: Real> Modular<T> {
    pub fn value(self) -> T {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LuxemburgNorm<T> {
    pub value: T,
    pub iterations: usize,
    /// ρ(u/value) − 1; zero for the zero function.
    pub residual: T,
    /// Set when the modular fell below [`ZERO_MODULAR`] and the norm was reported as 0.
    pub below_zero_threshold: bool,
}

/// Terms w·|v|^{p} of a discrete modular. Several fields can be concatenated
/// (the Sobolev modular is the sum of the value and gradient modulars).
#[derive(Debug, Clone)]
pub struct ModularTerms<T> {
    weights: Vec<T>,
    magnitudes: Vec<T>,
    exponents: Vec<T>,
}

impl<T: Real> ModularTerms<T> {
    pub fn new(field: &ScalarSamples<T>, p: &ExponentField<T>) -> Self {
        let mut terms = Self { weights: Vec::new(), magnitudes: Vec::new(), exponents: Vec::new() };
        terms.extend(field, p);
        terms
    }

    pub fn extend(&mut self, field: &ScalarSamples<T>, p: &ExponentField<T>) {
        for ((&z, &w), &v) in field.points.iter().zip(&field.weights).zip(&field.values) {
            self.weights.push(w);
            self.magnitudes.push(v.abs());
            self.exponents.push(p.eval(z));
        }
    }

    /// ρ(u/λ).
    pub fn at_scale(&self, lambda: T) -> T {
        self.weights
            .iter()
            .zip(&self.magnitudes)
            .zip(&self.exponents)
            .filter(|((_, &m), _)| m > T::zero())
            .map(|((&w, &m), &p)| w * (m / lambda).powf(p))
            .sum()
    }

    fn active_exponent_range(&self) -> (T, T) {
        self.magnitudes
            .iter()
            .zip(&self.exponents)
            .filter(|(&m, _)| m > T::zero())
            .fold((T::infinity(), T::neg_infinity()), |(lo, hi), (_, &p)| (lo.min(p), hi.max(p)))
    }

    /// inf{λ > 0 : ρ(u/λ) ≤ 1} by bisection on the decreasing map λ ↦ ρ(u/λ).
    pub fn luxemburg_norm(&self) -> LuxemburgNorm<T> {
        let modular = self.at_scale(T::one());
        if !(modular >= T::lit(ZERO_MODULAR)) {
            return LuxemburgNorm {
                value: T::zero(),
                iterations: 0,
                residual: T::zero(),
                below_zero_threshold: true,
            };
        }
        // For m = ρ(u): min(m^{1/p−}, m^{1/p+}) ≤ ‖u‖ ≤ max(m^{1/p−}, m^{1/p+}).
        let (p_lo, p_hi) = self.active_exponent_range();
        let (a, b) = (modular.powf(p_lo.recip()), modular.powf(p_hi.recip()));
        let growth = T::lit(BRACKET_GROWTH);
        let mut lo = a.min(b) / growth;
        let mut hi = a.max(b).max(T::min_positive_value());
        let mut iterations = 0;
        while self.at_scale(hi) > T::one() && iterations < MAX_BISECTIONS {
            hi *= growth;
            iterations += 1;
        }
        while self.at_scale(lo) <= T::one() && lo > T::min_positive_value() && iterations < MAX_BISECTIONS {
            lo /= growth;
            iterations += 1;
        }
        // Absolute width below 1 keeps large norms accurate to the same digits as small ones;
        // the midpoint guard stops once the bracket reaches machine resolution.
        let rtol = T::tol(BISECTION_RTOL);
        while hi - lo > rtol * hi.min(T::one()) && iterations < MAX_BISECTIONS {
            let mid = lo + (hi - lo) * T::lit(0.5);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.at_scale(mid) <= T::one() {
                hi = mid;
            } else {
                lo = mid;
            }
            iterations += 1;
        }
        LuxemburgNorm {
            value: hi,
            iterations,
            residual: self.at_scale(hi) - T::one(),
            below_zero_threshold: false,
        }
    }
}

/// ∫ |u(z)|^{p(z)} dz by quadrature.
pub fn modular<T: Real, F: ScalarField<T> + ?Sized>(u: &F, p: &ExponentField<T>, rule: &QuadratureRule<T>) -> Modular<T> {
    Modular(ModularTerms::new(&u.scalar_samples(rule), p).at_scale(T::one()))
}

pub fn luxemburg_norm<T: Real, F: ScalarField<T> + ?Sized>(
    u: &F,
    p: &ExponentField<T>,
    rule: &QuadratureRule<T>,
) -> LuxemburgNorm<T> {
    ModularTerms::new(&u.scalar_samples(rule), p).luxemburg_norm()
}

fn sobolev_terms<T: Real>(samples: &Samples<T>, p: &ExponentField<T>) -> ModularTerms<T> {
    let mut terms = ModularTerms::new(&samples.value_field(), p);
    terms.extend(&samples.gradient_field(), p);
    terms
}

/// ρ(u) + ρ(∇u).
pub fn sobolev_modular<T: Real>(u: &MeshedFunction<T>, p: &ExponentField<T>, rule: &QuadratureRule<T>) -> Modular<T> {
    Modular(sobolev_terms(&u.sample(rule), p).at_scale(T::one()))
}

/// Luxemburg norm induced by ρ(u) + ρ(∇u).
pub fn sobolev_norm<T: Real>(u: &MeshedFunction<T>, p: &ExponentField<T>, rule: &QuadratureRule<T>) -> LuxemburgNorm<T> {
    sobolev_norm_of_samples(&u.sample(rule), p)
}

/// Same as [`sobolev_norm`] for values and gradients already tabulated.
pub fn sobolev_norm_of_samples<T: Real>(samples: &Samples<T>, p: &ExponentField<T>) -> LuxemburgNorm<T> {
    sobolev_terms(samples, p).luxemburg_norm()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderCheck<T> {
    /// ∫ |u||v|.
    pub lhs: T,
    /// 2‖u‖_{p(·)}‖v‖_{q(·)}.
    pub rhs: T,
    pub holds: bool,
}

/// Hölder's inequality with constant 2 for u ∈ L^{p(·)}, v ∈ L^{q(·)}, q the conjugate of p.
pub fn holder_pairing_bound<T: Real, U: ScalarField<T> + ?Sized, V: ScalarField<T> + ?Sized>(
    u: &U,
    v: &V,
    p: &ExponentField<T>,
    rule: &QuadratureRule<T>,
) -> Result<HolderCheck<T>, ModularError> {
    let q = p.conjugate()?;
    let (us, vs) = (u.scalar_samples(rule), v.scalar_samples(rule));
    if us.points != vs.points {
        return Err(ModularError::PointMismatch);
    }
    let lhs = us
        .weights
        .iter()
        .zip(us.values.iter().zip(&vs.values))
        .map(|(&w, (&a, &b))| w * a.abs() * b.abs())
        .sum::<T>();
    let rhs = T::lit(2.0) * luxemburg_norm(&us, p, rule).value * luxemburg_norm(&vs, &q, rule).value;
    Ok(HolderCheck {
        lhs,
        rhs,
        holds: lhs <= rhs + T::lit(INEQUALITY_SLACK),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormModularReport<T> {
    pub norm: T,
    pub modular: T,
    pub p_minus: T,
    pub p_plus: T,
    /// `true` when ‖u‖ ≥ 1, selecting ‖u‖^{p−} ≤ ρ ≤ ‖u‖^{p+}; otherwise the exponents swap.
    pub norm_at_least_one: bool,
    /// ρ − (lower bound).
    pub lower_slack: T,
    /// (upper bound) − ρ.
    pub upper_slack: T,
    pub holds: bool,
}

/// Evaluates the two-sided comparison between ‖u‖_{p(·)} and ρ_{p(·)}(u) for the applicable branch.
pub fn norm_modular_relations<T: Real, F: ScalarField<T> + ?Sized>(
    u: &F,
    p: &ExponentField<T>,
    rule: &QuadratureRule<T>,
) -> NormModularReport<T> {
    let terms = ModularTerms::new(&u.scalar_samples(rule), p);
    let rho = terms.at_scale(T::one());
    let norm = terms.luxemburg_norm().value;
    let (p_minus, p_plus) = (p.p_minus(), p.p_plus());
    let norm_at_least_one = norm >= T::one();
    let (low_exp, high_exp) = if norm_at_least_one { (p_minus, p_plus) } else { (p_plus, p_minus) };
    let lower_slack = rho - norm.powf(low_exp);
    let upper_slack = norm.powf(high_exp) - rho;
    let slack = -T::lit(INEQUALITY_SLACK);
    NormModularReport {
        norm,
        modular: rho,
        p_minus,
        p_plus,
        norm_at_least_one,
        lower_slack,
        upper_slack,
        holds: lower_slack >= slack && upper_slack >= slack,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponent::Domain;
    use crate::fem::{BoundaryTag, Mesh};
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use std::sync::Arc;

    fn mesh(level: u32) -> Arc<Mesh<f64>> {
        Arc::new(Mesh::dyadic(Domain::unit(), level))
    }

    fn constant(p: f64) -> ExponentField<f64> {
        ExponentField::constant(Domain::unit(), p).unwrap()
    }

    fn two_plus_z() -> ExponentField<f64> {
        ExponentField::affine(Domain::unit(), 2.0, 1.0).unwrap()
    }

    #[test]
    fn modular_examples() {
        let rule = QuadratureRule::default();
        let m = mesh(4);
        let one = MeshedFunction::interpolate(m.clone(), BoundaryTag::Free, |_| 1.0);
        assert_abs_diff_eq!(modular(&one, &two_plus_z(), &rule).value(), 1.0, epsilon = 1e-14);
        let z = MeshedFunction::interpolate(m.clone(), BoundaryTag::Free, |z| z);
        assert_abs_diff_eq!(modular(&z, &constant(2.0), &rule).value(), 1.0 / 3.0, epsilon = 1e-14);
        let two = MeshedFunction::interpolate(m, BoundaryTag::Free, |_| 2.0);
        // ∫ 4·2^z dz = 4/ln 2
        assert_abs_diff_eq!(
            modular(&two, &two_plus_z(), &rule).value(),
            4.0 / std::f64::consts::LN_2,
            epsilon = 1e-12
        );
    }

    #[test]
    fn norm_examples() {
        let rule = QuadratureRule::default();
        let m = mesh(3);
        let c = MeshedFunction::interpolate(m.clone(), BoundaryTag::Free, |_| -2.5);
        assert_abs_diff_eq!(luxemburg_norm(&c, &two_plus_z(), &rule).value, 2.5, epsilon = 1e-10);
        let z = MeshedFunction::interpolate(m.clone(), BoundaryTag::Free, |z| z);
        let n = luxemburg_norm(&z, &constant(2.0), &rule);
        assert_abs_diff_eq!(n.value, (1.0f64 / 3.0).sqrt(), epsilon = 1e-10);
        assert!(n.residual.abs() <= 1e-10);
        let zero = MeshedFunction::zeros(m, BoundaryTag::Free);
        let n = luxemburg_norm(&zero, &two_plus_z(), &rule);
        assert_eq!(n.value, 0.0);
        assert!(n.below_zero_threshold);
    }

    #[test]
    fn sobolev_norm_examples() {
        let rule = QuadratureRule::default();
        let m = mesh(3);
        let p = constant(2.0);
        assert_eq!(sobolev_norm(&MeshedFunction::zeros(m.clone(), BoundaryTag::Free), &p, &rule).value, 0.0);
        let c = MeshedFunction::interpolate(m.clone(), BoundaryTag::Free, |_| 0.7);
        assert_abs_diff_eq!(sobolev_norm(&c, &p, &rule).value, 0.7, epsilon = 1e-10);
        // ρ(u/λ) = (1/3 + 1)/λ² = 1
        let z = MeshedFunction::interpolate(m, BoundaryTag::Free, |z| z);
        assert_abs_diff_eq!(sobolev_norm(&z, &p, &rule).value, (4.0f64 / 3.0).sqrt(), epsilon = 1e-10);
        assert_abs_diff_eq!(sobolev_modular(&z, &p, &rule).value(), 4.0 / 3.0, epsilon = 1e-13);
    }

    #[test]
    fn gradient_field_norm() {
        let rule = QuadratureRule::default();
        let u = MeshedFunction::interpolate(mesh(2), BoundaryTag::Free, |z| 3.0 * z);
        assert_abs_diff_eq!(luxemburg_norm(&Gradient(&u), &two_plus_z(), &rule).value, 3.0, epsilon = 1e-10);
    }

    #[test]
    fn holder_examples() {
        let rule = QuadratureRule::default();
        let m = mesh(4);
        let one = MeshedFunction::interpolate(m.clone(), BoundaryTag::Free, |_| 1.0);
        let check = holder_pairing_bound(&one, &one, &constant(2.0), &rule).unwrap();
        assert_abs_diff_eq!(check.lhs, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(check.rhs, 2.0, epsilon = 1e-9);
        assert!(check.holds);

        let u = MeshedFunction::interpolate(m.clone(), BoundaryTag::Free, |z| z);
        let v = MeshedFunction::interpolate(m, BoundaryTag::Free, |z| 1.0 - z);
        let check = holder_pairing_bound(&u, &v, &constant(2.0), &rule).unwrap();
        assert_abs_diff_eq!(check.lhs, 1.0 / 6.0, epsilon = 1e-14);
        assert_abs_diff_eq!(check.rhs, 2.0 / 3.0, epsilon = 1e-9);
        assert!(check.holds);
    }

    #[test]
    fn holder_rejects_mismatched_points() {
        let rule = QuadratureRule::default();
        let u = MeshedFunction::interpolate(mesh(2), BoundaryTag::Free, |z| z);
        let v = MeshedFunction::interpolate(mesh(3), BoundaryTag::Free, |z| z);
        assert!(matches!(
            holder_pairing_bound(&u, &v, &constant(2.0), &rule),
            Err(ModularError::PointMismatch)
        ));
    }

    #[test]
    fn norm_modular_examples() {
        let rule = QuadratureRule::default();
        let m = mesh(4);
        let one = MeshedFunction::interpolate(m.clone(), BoundaryTag::Free, |_| 1.0);
        let r = norm_modular_relations(&one, &two_plus_z(), &rule);
        assert!(r.holds && r.norm_at_least_one);
        assert_abs_diff_eq!(r.lower_slack, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(r.upper_slack, 0.0, epsilon = 1e-9);

        let three = MeshedFunction::interpolate(m.clone(), BoundaryTag::Free, |_| 3.0);
        let r = norm_modular_relations(&three, &two_plus_z(), &rule);
        assert_relative_eq!(r.modular, 18.0 / 3.0f64.ln(), max_relative = 1e-12);
        assert_abs_diff_eq!(r.norm, 3.0, epsilon = 1e-9);
        assert!(r.holds && r.modular > 9.0 && r.modular < 27.0);

        let half = MeshedFunction::interpolate(m, BoundaryTag::Free, |_| 0.5);
        let r = norm_modular_relations(&half, &constant(2.0), &rule);
        assert!(!r.norm_at_least_one && r.holds);
        assert_abs_diff_eq!(r.modular, 0.25, epsilon = 1e-14);
    }

    #[test]
    fn single_precision_norm() {
        let rule = QuadratureRule::<f32>::default();
        let m = Arc::new(Mesh::<f32>::dyadic(Domain::unit(), 3));
        let z = MeshedFunction::interpolate(m, BoundaryTag::Free, |z| z);
        let p = ExponentField::constant(Domain::unit(), 2.0f32).unwrap();
        assert!((luxemburg_norm(&z, &p, &rule).value - (1.0f32 / 3.0).sqrt()).abs() < 1e-5);
    }
}
