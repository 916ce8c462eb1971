//! Built-in kernels, plus three deliberately defective ones used to exercise the checkers.

use crate::exponent::{Domain, ExponentError, ExponentField};
use crate::scalar::Real;

use super::kernel::{CaratheodoryKernel, Coefficient, CoercivityBound, GrowthBound, KernelError};

pub const LAPLACIAN: &str = "laplacian";
pub const P_LAPLACIAN: &str = "p-laplacian";
pub const PX_LAPLACIAN: &str = "px-laplacian";
pub const PERTURBED_PX_LAPLACIAN: &str = "perturbed-px-laplacian";
pub const CUBIC: &str = "cubic";
pub const NEGATED: &str = "negated";
pub const ZERO: &str = "zero";

pub const LABELS: [&str; 7] = [LAPLACIAN, P_LAPLACIAN, PX_LAPLACIAN, PERTURBED_PX_LAPLACIAN, CUBIC, NEGATED, ZERO];

/// sign(ξ)|ξ|^{p−1}, which equals |ξ|^{p−2}ξ and is 0 at ξ = 0 for every p > 1.
pub fn power_flux<T: Real>(xi: T, p: T) -> T {
    if xi == T::zero() {
        T::zero()
    } else {
        xi.signum() * xi.abs().powf(p - T::one())
    }
}

fn unit_data<T: Real>(domain: Domain<T>, c0: T) -> Result<(GrowthBound<T>, CoercivityBound<T>), ExponentError> {
    let one = ExponentField::constant(domain, T::one())?;
    Ok((
        GrowthBound {
            c0,
            k0: Coefficient::Zero,
            r1: one.clone(),
        },
        CoercivityBound {
            c1: T::one(),
            c2: T::one(),
            r2: one,
            k1: Coefficient::Zero,
        },
    ))
}

/// a = ξ.
pub fn laplacian<T: Real>(domain: Domain<T>) -> Result<CaratheodoryKernel<T>, KernelError> {
    let (growth, coercivity) = unit_data(domain, T::one())?;
    Ok(CaratheodoryKernel::new(LAPLACIAN, |_, _, xi| xi, growth, coercivity))
}

/// a = |ξ|^{p−2}ξ with a constant exponent.
pub fn p_laplacian<T: Real>(domain: Domain<T>, p: T) -> Result<CaratheodoryKernel<T>, KernelError> {
    ExponentField::constant(domain, p)?.ensure_superlinear()?;
    let (growth, coercivity) = unit_data(domain, T::one())?;
    Ok(CaratheodoryKernel::new(
        P_LAPLACIAN,
        move |_, _, [xi]| [power_flux(xi, p)],
        growth,
        coercivity,
    ))
}

/// a = |ξ|^{p(z)−2}ξ.
pub fn px_laplacian<T: Real>(p: &ExponentField<T>) -> Result<CaratheodoryKernel<T>, KernelError> {
    p.ensure_superlinear()?;
    let (growth, coercivity) = unit_data(*p.domain(), T::one())?;
    let p = p.clone();
    Ok(CaratheodoryKernel::new(
        PX_LAPLACIAN,
        move |z, _, [xi]| [power_flux(xi, p.eval(z))],
        growth,
        coercivity,
    ))
}

/// a = (1 + 1/(1 + s²))|ξ|^{p(z)−2}ξ. The factor lies in (1, 2], so c₀ = 2 and c₁ = 1.
pub fn perturbed_px_laplacian<T: Real>(p: &ExponentField<T>) -> Result<CaratheodoryKernel<T>, KernelError> {
    p.ensure_superlinear()?;
    let (growth, coercivity) = unit_data(*p.domain(), T::lit(2.0))?;
    let p = p.clone();
    Ok(CaratheodoryKernel::new(
        PERTURBED_PX_LAPLACIAN,
        move |z, s, [xi]| {
            let factor = T::one() + (T::one() + s * s).recip();
            [factor * power_flux(xi, p.eval(z))]
        },
        growth,
        coercivity,
    ))
}

/// a = ξ³, declared with quadratic-growth data. Fails the growth bound for p = 2.
pub fn cubic<T: Real>(domain: Domain<T>) -> Result<CaratheodoryKernel<T>, KernelError> {
    let (growth, coercivity) = unit_data(domain, T::one())?;
    Ok(CaratheodoryKernel::new(CUBIC, |_, _, [xi]| [xi * xi * xi], growth, coercivity))
}

/// a = −ξ. Fails monotonicity.
pub fn negated<T: Real>(domain: Domain<T>) -> Result<CaratheodoryKernel<T>, KernelError> {
    let (growth, coercivity) = unit_data(domain, T::one())?;
    Ok(CaratheodoryKernel::new(NEGATED, |_, _, [xi]| [-xi], growth, coercivity))
}

/// a = 0 declared with c₁ = 1. Fails coercivity.
pub fn zero<T: Real>(domain: Domain<T>) -> Result<CaratheodoryKernel<T>, KernelError> {
    let (growth, coercivity) = unit_data(domain, T::one())?;
    Ok(CaratheodoryKernel::new(ZERO, |_, _, _| [T::zero()], growth, coercivity))
}

/// Looks up a built-in kernel. `p` is the problem exponent; `p-laplacian` takes its
/// constant exponent from `constant_p` and falls back to `p` when that is constant.
pub fn by_label<T: Real>(
    label: &str,
    p: &ExponentField<T>,
    constant_p: Option<T>,
) -> Result<CaratheodoryKernel<T>, KernelError> {
    let domain = *p.domain();
    match label {
        LAPLACIAN => laplacian(domain),
        P_LAPLACIAN => {
            let value = match constant_p {
                Some(v) => v,
                None if p.is_constant() => p.p_minus(),
                None => {
                    return Err(KernelError::InvalidData {
                        label: label.into(),
                        what: "needs a constant exponent parameter `p`".into(),
                    })
                }
            };
            p_laplacian(domain, value)
        }
        PX_LAPLACIAN => px_laplacian(p),
        PERTURBED_PX_LAPLACIAN => perturbed_px_laplacian(p),
        CUBIC => cubic(domain),
        NEGATED => negated(domain),
        ZERO => zero(domain),
        other => Err(KernelError::UnknownLabel(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_flux_is_odd_and_zero_at_origin() {
        assert_eq!(power_flux(0.0, 1.5), 0.0);
        assert_eq!(power_flux(2.0, 3.0), 4.0);
        assert_eq!(power_flux(-2.0, 3.0), -4.0);
    }

    #[test]
    fn lookup_by_label() {
        let p = ExponentField::affine(Domain::unit(), 2.0, 1.0).unwrap();
        for label in LABELS {
            if label == P_LAPLACIAN {
                assert!(by_label(label, &p, None).is_err());
                assert_eq!(by_label(label, &p, Some(4.0)).unwrap().label(), label);
            } else {
                assert_eq!(by_label(label, &p, None).unwrap().label(), label);
            }
        }
        assert!(matches!(by_label("nope", &p, None), Err(KernelError::UnknownLabel(_))));
    }

    #[test]
    fn builtins_register_against_their_exponent() {
        let p = ExponentField::affine(Domain::unit(), 2.0, 1.0).unwrap();
        perturbed_px_laplacian(&p).unwrap().register(&p, 1).unwrap();
        px_laplacian(&p).unwrap().register(&p, 1).unwrap();
        // In three dimensions with p ≡ 1.2: p* = 3·1.2/1.8 = 2, p*/q = 2/6 = 1/3 < r₁ = 1.
        let low = ExponentField::constant(Domain::unit(), 1.2).unwrap();
        let err = p_laplacian(Domain::unit(), 1.2).unwrap().register(&low, 3).unwrap_err();
        assert!(matches!(err, KernelError::ExponentBound { exponent: "r1", .. }));
    }

    #[test]
    fn perturbation_factor_range() {
        let p = ExponentField::constant(Domain::unit(), 2.0).unwrap();
        let k: CaratheodoryKernel<f64> = perturbed_px_laplacian(&p).unwrap();
        assert_eq!(k.flux_1d(0.5, 0.0, 1.0), 2.0);
        assert!((k.flux_1d(0.5, 1e4, 1.0) - 1.0_f64).abs() < 1e-7);
    }
}
