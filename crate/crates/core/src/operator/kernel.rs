use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::exponent::{strict_bound_check, BoundField, ExponentError, ExponentField};
use crate::fem::MeshedFunction;
use crate::scalar::Real;

/// Spatial dimension of the discretization. The flux interface keeps ξ a vector
/// so the N-dimensional contract stays visible.
pub const DIM: usize = 1;

pub type Vector<T> = [T; DIM];

type FluxFn<T> = dyn Fn(T, T, Vector<T>) -> Vector<T> + Send + Sync;

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("unknown kernel label `{0}`")]
    UnknownLabel(String),
    #[error("kernel `{label}`: {what}")]
    InvalidData { label: String, what: String },
    #[error("kernel `{label}`: {exponent} violates its admissible bound (margin {margin}, at z = {witness:?})")]
    ExponentBound {
        label: String,
        exponent: &'static str,
        margin: String,
        witness: Option<f64>,
    },
    #[error(transparent)]
    Exponent(#[from] ExponentError),
}

/// A z-dependent coefficient such as k₀ or k₁; only |k(z)| enters the bounds.
#[derive(Debug, Clone)]
pub enum Coefficient<T> {
    Zero,
    Constant(T),
    Meshed(MeshedFunction<T>),
}

impl<T: Real> Coefficient<T> {
    pub fn abs_at(&self, z: T) -> T {
        match self {
            Coefficient::Zero => T::zero(),
            Coefficient::Constant(c) => c.abs(),
            Coefficient::Meshed(f) => f.eval(z).abs(),
        }
    }
}

/// Declared growth: |a(z, s, ξ)| ≤ |k₀(z)| + c₀(|s|^{r₁(z)} + |ξ|^{p(z)−1}).
#[derive(Debug, Clone)]
pub struct GrowthBound<T> {
    pub c0: T,
    pub k0: Coefficient<T>,
    pub r1: ExponentField<T>,
}

/// Declared coercivity: a(z, s, ξ)·ξ ≥ c₁|ξ|^{p(z)} − c₂|s|^{r₂(z)} − |k₁(z)|.
#[derive(Debug, Clone)]
pub struct CoercivityBound<T> {
    pub c1: T,
    pub c2: T,
    pub r2: ExponentField<T>,
    pub k1: Coefficient<T>,
}

/// The flux a(z, s, ξ) together with the constants its author declares for it.
#[derive(Clone)]
pub struct CaratheodoryKernel<T> {
    label: String,
    flux: Arc<FluxFn<T>>,
    growth: GrowthBound<T>,
    coercivity: CoercivityBound<T>,
}

impl<T: Real> CaratheodoryKernel<T> {
    pub fn new(
        label: impl Into<String>,
        flux: impl Fn(T, T, Vector<T>) -> Vector<T> + Send + Sync + 'static,
        growth: GrowthBound<T>,
        coercivity: CoercivityBound<T>,
    ) -> Self {
        Self {
            label: label.into(),
            flux: Arc::new(flux),
            growth,
            coercivity,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn growth(&self) -> &GrowthBound<T> {
        &self.growth
    }

    pub fn coercivity(&self) -> &CoercivityBound<T> {
        &self.coercivity
    }

    pub fn flux(&self, z: T, s: T, xi: Vector<T>) -> Vector<T> {
        (self.flux)(z, s, xi)
    }

    /// The flux in one dimension, unwrapped.
    pub fn flux_1d(&self, z: T, s: T, xi: T) -> T {
        (self.flux)(z, s, [xi])[0]
    }

    /// Validates the declared data against the growth exponent `p`: positive constants,
    /// 1 ≤ r₁ < p*/q and 1 ≤ r₂ < p* with strict margin.
    pub fn register(&self, p: &ExponentField<T>, dim: u32) -> Result<(), KernelError> {
        let invalid = |what: &str| KernelError::InvalidData {
            label: self.label.clone(),
            what: what.to_string(),
        };
        if !(self.growth.c0 > T::zero()) {
            return Err(invalid("c0 must be positive"));
        }
        if !(self.coercivity.c1 > T::zero() && self.coercivity.c2 > T::zero()) {
            return Err(invalid("c1 and c2 must be positive"));
        }
        self.check_exponent("r1", &self.growth.r1, &p.sobolev_over_conjugate(dim)?)?;
        self.check_exponent("r2", &self.coercivity.r2, &p.sobolev_conjugate(dim))
    }

    fn check_exponent(&self, name: &'static str, r: &ExponentField<T>, bound: &BoundField<T>) -> Result<(), KernelError> {
        let check = strict_bound_check(r, bound)?;
        if check.holds {
            return Ok(());
        }
        Err(KernelError::ExponentBound {
            label: self.label.clone(),
            exponent: name,
            margin: format!("{:?}", check.margin),
            witness: check.witness.map(Real::to_f64_lossy),
        })
    }
}

impl<T: fmt::Debug> fmt::Debug for CaratheodoryKernel<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CaratheodoryKernel")
            .field("label", &self.label)
            .field("growth", &self.growth)
            .field("coercivity", &self.coercivity)
            .finish_non_exhaustive()
    }
}
