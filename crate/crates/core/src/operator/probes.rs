//! Numerical shadows of boundedness and coercivity of the operator.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::exponent::ExponentField;
use crate::fem::{BoundaryTag, Mesh, MeshedFunction};
use crate::modular::sobolev_norm;
use crate::quadrature::QuadratureRule;
use crate::scalar::Real;

use super::assembly::{apply, pairing};
use super::kernel::CaratheodoryKernel;

/// Largest dual-norm surrogate max_i |⟨A(u), φ_i⟩| / ‖φ_i‖_{W^{1,p(·)}} over `samples`
/// random Dirichlet functions with ‖u‖_{W^{1,p(·)}} ≤ `radius`.
pub fn boundedness_probe<T: Real>(
    kernel: &CaratheodoryKernel<T>,
    p: &ExponentField<T>,
    mesh: &Arc<Mesh<T>>,
    radius: T,
    samples: usize,
    seed: u64,
    rule: &QuadratureRule<T>,
) -> T {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tag = BoundaryTag::DirichletZero;
    let free = 1..mesh.node_count().saturating_sub(1);
    let hat_norms: Vec<T> = free
        .clone()
        .map(|i| {
            let mut c = vec![T::zero(); mesh.node_count()];
            c[i] = T::one();
            let hat = MeshedFunction::new(Arc::clone(mesh), c, tag).expect("interior hat");
            sobolev_norm(&hat, p, rule).value
        })
        .collect();
    let mut worst = T::zero();
    for _ in 0..samples {
        let mut c = vec![T::zero(); mesh.node_count()];
        for i in free.clone() {
            c[i] = T::lit(rng.gen_range(-1.0..=1.0));
        }
        let u = MeshedFunction::new(Arc::clone(mesh), c, tag).expect("interior coefficients");
        let norm = sobolev_norm(&u, p, rule).value;
        if norm == T::zero() {
            continue;
        }
        let scale: f64 = rng.gen_range(f64::EPSILON..=1.0);
        let u = u.scaled(radius * T::lit(scale) / norm);
        let applied = apply(&u, kernel, rule);
        for (k, i) in free.clone().enumerate() {
            worst = worst.max(applied[i].abs() / hat_norms[k]);
        }
    }
    worst
}

/// ⟨A(t·u₀), t·u₀⟩ / ‖t·u₀‖_{W^{1,p(·)}} for each scale t.
pub fn coercivity_probe<T: Real>(
    kernel: &CaratheodoryKernel<T>,
    p: &ExponentField<T>,
    u0: &MeshedFunction<T>,
    scales: &[T],
    rule: &QuadratureRule<T>,
) -> Vec<T> {
    scales
        .iter()
        .map(|&t| {
            let u = u0.scaled(t);
            let norm = sobolev_norm(&u, p, rule).value;
            pairing(&u, &u, kernel, rule).expect("same mesh") / norm
        })
        .collect()
}
