use std::fmt;
use std::sync::Arc;

use crate::fem::{Mesh, MeshError, MeshedFunction, Samples};
use crate::linalg::Tridiagonal;
use crate::quadrature::QuadratureRule;
use crate::scalar::Real;

use super::kernel::CaratheodoryKernel;

/// Right-hand side functional f ∈ (W₀^{1,p(·)})*.
#[derive(Clone)]
pub enum Rhs<T> {
    /// An L² density, paired as ∫ f φ_i.
    Density(Arc<dyn Fn(T) -> T + Send + Sync>),
    /// Precomputed values ⟨f, φ_i⟩ for every node of one specific mesh.
    Functional(Vec<T>),
}

impl<T: Real> Rhs<T> {
    pub fn density(f: impl Fn(T) -> T + Send + Sync + 'static) -> Self {
        Rhs::Density(Arc::new(f))
    }

    pub fn zero() -> Self {
        Rhs::density(|_| T::zero())
    }
}

impl<T> fmt::Debug for Rhs<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rhs::Density(_) => f.write_str("Rhs::Density(..)"),
            Rhs::Functional(v) => write!(f, "Rhs::Functional({} values)", v.len()),
        }
    }
}

/// ⟨f, φ_i⟩ for every node i.
pub fn load_vector<T: Real>(mesh: &Mesh<T>, rhs: &Rhs<T>, rule: &QuadratureRule<T>) -> Result<Vec<T>, MeshError> {
    match rhs {
        Rhs::Functional(values) => {
            if values.len() != mesh.node_count() {
                return Err(MeshError::CoefficientCount {
                    expected: mesh.node_count(),
                    found: values.len(),
                });
            }
            Ok(values.clone())
        }
        Rhs::Density(f) => {
            let mut load = vec![T::zero(); mesh.node_count()];
            for q in mesh.quadrature_points(rule) {
                let fw = f(q.z) * q.weight;
                load[q.element] += fw * (T::one() - q.local);
                load[q.element + 1] += fw * q.local;
            }
            Ok(load)
        }
    }
}

/// ⟨A(u), φ_i⟩ = ∫ a(z, u, u′) φ_i′ for every node i.
pub fn apply<T: Real>(u: &MeshedFunction<T>, kernel: &CaratheodoryKernel<T>, rule: &QuadratureRule<T>) -> Vec<T> {
    let mesh = u.mesh();
    let mut out = vec![T::zero(); mesh.node_count()];
    for e in 0..mesh.element_count() {
        let (a, b) = mesh.element(e);
        let h = b - a;
        let slope = u.slope(e);
        // φ_e′ = −1/h and φ_{e+1}′ = 1/h, so the weight h cancels.
        let flux: T = rule
            .iter()
            .map(|(t, w)| w * kernel.flux_1d(a + h * t, u.value_in(e, t), slope))
            .sum();
        out[e] -= flux;
        out[e + 1] += flux;
    }
    out
}

/// F_i = ⟨A(u), φ_i⟩ − ⟨f, φ_i⟩ over the free nodes of `u`.
pub fn assemble_residual<T: Real>(
    u: &MeshedFunction<T>,
    kernel: &CaratheodoryKernel<T>,
    rhs: &Rhs<T>,
    rule: &QuadratureRule<T>,
) -> Result<Vec<T>, MeshError> {
    let load = load_vector(u.mesh(), rhs, rule)?;
    let applied = apply(u, kernel, rule);
    Ok(u.free_nodes().map(|i| applied[i] - load[i]).collect())
}

/// Default finite-difference step 1e−7·(1 + ‖c‖_∞).
pub fn default_fd_step<T: Real>(u: &MeshedFunction<T>) -> T {
    let sup = u.coefficients().iter().fold(T::zero(), |m, c| m.max(c.abs()));
    T::lit(1e-7) * (T::one() + sup)
}

/// Central-difference Jacobian of the residual with respect to the free coefficients.
///
/// Row i only couples to columns i−1, i, i+1, so the columns are split into three
/// colour classes and each class is perturbed at once: six residual evaluations in total.
pub fn assemble_jacobian_fd<T: Real>(
    u: &MeshedFunction<T>,
    kernel: &CaratheodoryKernel<T>,
    rule: &QuadratureRule<T>,
    step: Option<T>,
) -> Tridiagonal<T> {
    let step = step.unwrap_or_else(|| default_fd_step(u));
    let free = u.free_nodes();
    let n = free.len();
    let mut jac = Tridiagonal::zeros(n);
    for colour in 0..3.min(n) {
        let perturbed = |sign: T| {
            let mut c = u.coefficients().to_vec();
            for j in (colour..n).step_by(3) {
                c[free.start + j] += sign * step;
            }
            let shifted = MeshedFunction::new(Arc::clone(u.mesh()), c, u.tag()).expect("free nodes only");
            apply(&shifted, kernel, rule)
        };
        let (plus, minus) = (perturbed(T::one()), perturbed(-T::one()));
        for i in 0..n {
            let diff = (plus[free.start + i] - minus[free.start + i]) / (step + step);
            // Exactly one of i−1, i, i+1 belongs to this colour.
            let lo = i.saturating_sub(1);
            if let Some(j) = (lo..=(i + 1).min(n - 1)).find(|j| j % 3 == colour) {
                jac.set(i, j, diff);
            }
        }
    }
    jac
}

/// ⟨A(u_a), v⟩ = ∫ a(z, u_a, u_a′) v′.
pub fn pairing<T: Real>(
    u_a: &MeshedFunction<T>,
    v: &MeshedFunction<T>,
    kernel: &CaratheodoryKernel<T>,
    rule: &QuadratureRule<T>,
) -> Result<T, MeshError> {
    if !u_a.shares_mesh(v) {
        return Err(MeshError::MeshMismatch);
    }
    pairing_of_samples(&u_a.sample(rule), &v.sample(rule), kernel)
}

/// The pairing evaluated from tabulated values and gradients at shared quadrature points.
pub fn pairing_of_samples<T: Real>(
    argument: &Samples<T>,
    test: &Samples<T>,
    kernel: &CaratheodoryKernel<T>,
) -> Result<T, MeshError> {
    if argument.points != test.points {
        return Err(MeshError::MeshMismatch);
    }
    Ok((0..argument.len())
        .map(|k| {
            let a = kernel.flux_1d(argument.points[k], argument.values[k], argument.gradients[k]);
            argument.weights[k] * a * test.gradients[k]
        })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::super::builtin;
    use super::*;
    use crate::exponent::{Domain, ExponentField};
    use crate::fem::BoundaryTag;
    use approx::assert_abs_diff_eq;

    fn mesh(level: u32) -> Arc<Mesh<f64>> {
        Arc::new(Mesh::dyadic(Domain::unit(), level))
    }

    #[test]
    fn hat_function_stiffness() {
        let k = builtin::laplacian(Domain::unit()).unwrap();
        let hat = MeshedFunction::new(mesh(1), vec![0.0, 1.0, 0.0], BoundaryTag::DirichletZero).unwrap();
        let f = assemble_residual(&hat, &k, &Rhs::zero(), &QuadratureRule::default()).unwrap();
        assert_eq!(f.len(), 1);
        assert_abs_diff_eq!(f[0], 4.0, epsilon = 1e-14);
    }

    #[test]
    fn zero_function_zero_residual() {
        let k = builtin::laplacian(Domain::unit()).unwrap();
        let u = MeshedFunction::zeros(mesh(3), BoundaryTag::DirichletZero);
        let f = assemble_residual(&u, &k, &Rhs::zero(), &QuadratureRule::default()).unwrap();
        assert!(f.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn interpolant_solves_poisson_nodally() {
        let k = builtin::laplacian(Domain::unit()).unwrap();
        let u = MeshedFunction::interpolate(mesh(1), BoundaryTag::DirichletZero, |z| z * (1.0 - z));
        let f = assemble_residual(&u, &k, &Rhs::density(|_| 2.0), &QuadratureRule::default()).unwrap();
        assert_abs_diff_eq!(f[0], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn functional_rhs_length_checked() {
        let k = builtin::laplacian(Domain::unit()).unwrap();
        let u = MeshedFunction::zeros(mesh(2), BoundaryTag::DirichletZero);
        let rule = QuadratureRule::default();
        assert!(assemble_residual(&u, &k, &Rhs::Functional(vec![0.0; 3]), &rule).is_err());
        let r = assemble_residual(&u, &k, &Rhs::Functional(vec![1.0; 5]), &rule).unwrap();
        assert_eq!(r, vec![-1.0; 3]);
    }

    #[test]
    fn laplacian_jacobian_is_stiffness() {
        let k = builtin::laplacian(Domain::unit()).unwrap();
        let m = mesh(4);
        let h = 1.0 / 16.0;
        let u = MeshedFunction::interpolate(m, BoundaryTag::DirichletZero, |z| (3.0 * z).sin());
        let jac = assemble_jacobian_fd(&u, &k, &QuadratureRule::default(), None);
        assert_eq!(jac.dim(), 15);
        for i in 0..15 {
            assert_abs_diff_eq!(jac.diag[i], 2.0 / h, epsilon = 1e-6);
        }
        for i in 0..14 {
            assert_abs_diff_eq!(jac.lower[i], -1.0 / h, epsilon = 1e-6);
            assert_abs_diff_eq!(jac.upper[i], -1.0 / h, epsilon = 1e-6);
        }
    }

    #[test]
    fn jacobian_symmetric_without_s_dependence() {
        let p = ExponentField::affine(Domain::unit(), 2.0, 1.0).unwrap();
        let k = builtin::px_laplacian(&p).unwrap();
        let u = MeshedFunction::interpolate(mesh(5), BoundaryTag::DirichletZero, |z| z * (1.0 - z) * (1.0 + z));
        let jac = assemble_jacobian_fd(&u, &k, &QuadratureRule::default(), None);
        assert!(jac.asymmetry() <= 1e-6, "asymmetry {}", jac.asymmetry());
    }

    #[test]
    fn pairing_examples() {
        let rule = QuadratureRule::default();
        let k = builtin::laplacian(Domain::unit()).unwrap();
        let m = mesh(3);
        let z = MeshedFunction::interpolate(m.clone(), BoundaryTag::Free, |z| z);
        let c = MeshedFunction::interpolate(m.clone(), BoundaryTag::Free, |_| 4.0);
        assert_eq!(pairing(&z, &c, &k, &rule).unwrap(), 0.0);
        assert_abs_diff_eq!(pairing(&z, &z, &k, &rule).unwrap(), 1.0, epsilon = 1e-14);
        let v = MeshedFunction::interpolate(m, BoundaryTag::Free, |z| (2.0 * z).cos());
        let base = pairing(&z, &v, &k, &rule).unwrap();
        assert_abs_diff_eq!(pairing(&z, &v.scaled(-3.5), &k, &rule).unwrap(), -3.5 * base, epsilon = 1e-12);
        let other = MeshedFunction::interpolate(mesh(2), BoundaryTag::Free, |z| z);
        assert!(pairing(&z, &other, &k, &rule).is_err());
    }
}
