//! Variable-exponent Lebesgue and Sobolev spaces on an interval, quasilinear
//! operators u ↦ −div a(z, u, ∇u) with p(z)-growth, and a nested-mesh Galerkin solver
//! for studying how weak convergence with a vanishing pairing upgrades to strong
//! convergence in the Luxemburg norm.
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`); the `*64` aliases below
//! fix the scalar to `f64`, which is what the command-line front-end uses.

// `!(x >= bound)` is used on purpose so that NaN lands on the failing branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod exponent;
pub mod fem;
pub mod galerkin;
pub mod linalg;
pub mod modular;
pub mod operator;
pub mod quadrature;
pub mod scalar;
pub mod splus;

pub use exponent::{BoundCheck, BoundField, Domain, ExponentError, ExponentField, ExponentKind, Extended};
pub use fem::{BoundaryTag, Mesh, MeshError, MeshedFunction, Samples};
pub use galerkin::{ConvergenceReport, GalerkinError, GalerkinProblem, LevelRecord, SolveStats, SolverSettings};
pub use modular::{LuxemburgNorm, Modular};
pub use operator::{CaratheodoryKernel, KernelCheckReport, Rhs};
pub use quadrature::QuadratureRule;
pub use scalar::Real;
pub use splus::{ProbeVerdict, SPlusProbeReport, SequenceSpec};

pub type Domain64 = Domain<f64>;
pub type ExponentField64 = ExponentField<f64>;
pub type Mesh64 = Mesh<f64>;
pub type MeshedFunction64 = MeshedFunction<f64>;
pub type QuadratureRule64 = QuadratureRule<f64>;
pub type Kernel64 = CaratheodoryKernel<f64>;
pub type GalerkinProblem64 = GalerkinProblem<f64>;
pub type ConvergenceReport64 = ConvergenceReport<f64>;
pub type SPlusProbeReport64 = SPlusProbeReport<f64>;

pub type Domain32 = Domain<f32>;
pub type ExponentField32 = ExponentField<f32>;
pub type Mesh32 = Mesh<f32>;
pub type MeshedFunction32 = MeshedFunction<f32>;
pub type Kernel32 = CaratheodoryKernel<f32>;
