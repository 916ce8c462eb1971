//! Falsification checks for the structure conditions. Each condition quantifies
//! over all (s, ξ), so sampling can only find counterexamples, never prove one.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::exponent::{Domain, ExponentField};
use crate::scalar::Real;

use super::builtin::power_flux;
use super::kernel::CaratheodoryKernel;

const LOG10_MIN: f64 = -3.0;
const LOG10_MAX: f64 = 3.0;
const ZERO_PROBABILITY: f64 = 0.125;
/// Relative slack for the growth and coercivity inequalities.
const RELATIVE_SLACK: f64 = 1e-9;
/// Monotonicity threshold relative to |ξ − ξ′|².
const MONOTONE_FLOOR: f64 = 1e-12;
const MIN_SEPARATION: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Condition {
    /// Growth bound.
    A1,
    /// Strict monotonicity in ξ.
    A2,
    /// Coercivity from below.
    A3,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::A1 => "A1",
            Condition::A2 => "A2",
            Condition::A3 => "A3",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation<T> {
    pub z: T,
    pub s: T,
    pub xi: T,
    pub xi_prime: Option<T>,
    /// Negative: how far the inequality fails.
    pub slack: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelCheckReport<T> {
    pub condition: Condition,
    pub samples: usize,
    pub violations: Vec<Violation<T>>,
}

impl<T> KernelCheckReport<T> {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Seeded draws of (z, s, ξ): z uniform on the closed domain, s and ξ log-uniform in
/// magnitude on [1e−3, 1e3] with random sign, and exactly zero with probability 1/8.
#[derive(Debug, Clone)]
pub struct KernelSampler<T> {
    domain: Domain<T>,
    rng: ChaCha8Rng,
}

impl<T: Real> KernelSampler<T> {
    pub fn new(domain: Domain<T>, seed: u64) -> Self {
        Self {
            domain,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn point(&mut self) -> T {
        let t: f64 = self.rng.gen();
        self.domain.clamp(self.domain.left() + self.domain.measure() * T::lit(t))
    }

    pub fn magnitude(&mut self) -> T {
        if self.rng.gen_bool(ZERO_PROBABILITY) {
            return T::zero();
        }
        let exponent = self.rng.gen_range(LOG10_MIN..=LOG10_MAX);
        let sign = if self.rng.gen_bool(0.5) { -1.0 } else { 1.0 };
        T::lit(sign * 10f64.powf(exponent))
    }
}

fn relative_floor<T: Real>(scales: &[T]) -> T {
    -T::lit(RELATIVE_SLACK) * scales.iter().fold(T::one(), |m, &v| m.max(v.abs()))
}

/// |a(z, s, ξ)| ≤ |k₀(z)| + c₀(|s|^{r₁(z)} + |ξ|^{p(z)−1}).
pub fn check_a1<T: Real>(
    kernel: &CaratheodoryKernel<T>,
    p: &ExponentField<T>,
    sampler: &mut KernelSampler<T>,
    n: usize,
) -> KernelCheckReport<T> {
    let growth = kernel.growth();
    let mut violations = Vec::new();
    for _ in 0..n {
        let (z, s, xi) = (sampler.point(), sampler.magnitude(), sampler.magnitude());
        let lhs = kernel.flux_1d(z, s, xi).abs();
        let rhs = growth.k0.abs_at(z) + growth.c0 * (s.abs().powf(growth.r1.eval(z)) + power_flux(xi.abs(), p.eval(z)));
        let slack = rhs - lhs;
        if !(slack >= relative_floor(&[lhs, rhs])) {
            violations.push(Violation {
                z,
                s,
                xi,
                xi_prime: None,
                slack,
            });
        }
    }
    KernelCheckReport {
        condition: Condition::A1,
        samples: n,
        violations,
    }
}

/// (a(z, s, ξ) − a(z, s, ξ′))(ξ − ξ′) > 0 for ξ ≠ ξ′, tested as > 1e−12·|ξ − ξ′|².
pub fn check_a2<T: Real>(kernel: &CaratheodoryKernel<T>, sampler: &mut KernelSampler<T>, n: usize) -> KernelCheckReport<T> {
    let mut violations = Vec::new();
    for _ in 0..n {
        let (z, s, xi) = (sampler.point(), sampler.magnitude(), sampler.magnitude());
        let mut xi_prime = sampler.magnitude();
        while (xi - xi_prime).abs() < T::lit(MIN_SEPARATION) {
            xi_prime = sampler.magnitude();
        }
        let gap = xi - xi_prime;
        let product = (kernel.flux_1d(z, s, xi) - kernel.flux_1d(z, s, xi_prime)) * gap;
        let floor = T::lit(MONOTONE_FLOOR) * gap * gap;
        if !(product > floor) {
            violations.push(Violation {
                z,
                s,
                xi,
                xi_prime: Some(xi_prime),
                slack: product - floor,
            });
        }
    }
    KernelCheckReport {
        condition: Condition::A2,
        samples: n,
        violations,
    }
}

/// a(z, s, ξ)·ξ ≥ c₁|ξ|^{p(z)} − c₂|s|^{r₂(z)} − |k₁(z)|.
pub fn check_a3<T: Real>(
    kernel: &CaratheodoryKernel<T>,
    p: &ExponentField<T>,
    sampler: &mut KernelSampler<T>,
    n: usize,
) -> KernelCheckReport<T> {
    let c = kernel.coercivity();
    let mut violations = Vec::new();
    for _ in 0..n {
        let (z, s, xi) = (sampler.point(), sampler.magnitude(), sampler.magnitude());
        let lhs = kernel.flux_1d(z, s, xi) * xi;
        let leading = c.c1 * xi.abs().powf(p.eval(z));
        let lower = c.c2 * s.abs().powf(c.r2.eval(z));
        let rhs = leading - lower - c.k1.abs_at(z);
        let slack = lhs - rhs;
        if !(slack >= relative_floor(&[lhs, leading, lower])) {
            violations.push(Violation {
                z,
                s,
                xi,
                xi_prime: None,
                slack,
            });
        }
    }
    KernelCheckReport {
        condition: Condition::A3,
        samples: n,
        violations,
    }
}
