//! Carathéodory kernels a(z, s, ξ), sample-based checks of their structure
//! conditions, and assembly of the weak form ⟨A(u), v⟩ = ∫ a(z, u, ∇u)·∇v.

mod assembly;
pub mod builtin;
mod checks;
mod kernel;
mod probes;

pub use assembly::{
    apply, assemble_jacobian_fd, assemble_residual, default_fd_step, load_vector, pairing, pairing_of_samples, Rhs,
};
pub use checks::{check_a1, check_a2, check_a3, Condition, KernelCheckReport, KernelSampler, Violation};
pub use kernel::{CaratheodoryKernel, Coefficient, CoercivityBound, GrowthBound, KernelError, Vector, DIM};
pub use probes::{boundedness_probe, coercivity_probe};
