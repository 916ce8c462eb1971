//! Gauss–Legendre rules on the reference element [0, 1].

use thiserror::Error;

use crate::scalar::Real;

pub const DEFAULT_POINTS: usize = 5;
pub const MIN_POINTS: usize = 2;
pub const MAX_POINTS: usize = 10;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("Gauss-Legendre rule needs between {MIN_POINTS} and {MAX_POINTS} points, got {0}")]
pub struct QuadratureError(pub usize);

/// Nodes and positive weights on [0, 1]; the weights sum to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> QuadratureRule<T> {
    pub fn gauss_legendre(points: usize) -> Result<Self, QuadratureError> {
        if !(MIN_POINTS..=MAX_POINTS).contains(&points) {
            return Err(QuadratureError(points));
        }
        let (nodes, weights) = legendre_roots(points)
            .into_iter()
            .map(|(x, w)| (T::lit(0.5 * (x + 1.0)), T::lit(0.5 * w)))
            .unzip();
        Ok(Self { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (T, T)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// ∫_a^b f by the mapped rule.
    pub fn integrate(&self, a: T, b: T, mut f: impl FnMut(T) -> T) -> T {
        let h = b - a;
        self.iter().map(|(t, w)| w * f(a + h * t)).sum::<T>() * h
    }
}

impl<T: Real> Default for QuadratureRule<T> {
    fn default() -> Self {
        Self::gauss_legendre(DEFAULT_POINTS).expect("default rule is in range")
    }
}

/// Roots of P_n on [-1, 1] with their Gauss weights, ascending.
fn legendre_roots(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = -(std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut derivative = 0.0;
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            derivative = dp;
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        if dp != 0.0 {
            derivative = dp;
        }
        out.push((x, 2.0 / ((1.0 - x * x) * derivative * derivative)));
    }
    out
}

/// (P_n(x), P_n'(x)) by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = n as f64;
    (p1, n * (x * p1 - p0) / (x * x - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn weights_positive_and_normalized() {
        for n in MIN_POINTS..=MAX_POINTS {
            let rule = QuadratureRule::<f64>::gauss_legendre(n).unwrap();
            assert!(rule.weights().iter().all(|&w| w > 0.0));
            assert_abs_diff_eq!(rule.weights().iter().sum::<f64>(), 1.0, epsilon = 1e-14);
            assert!(rule.nodes().windows(2).all(|w| w[0] < w[1]));
            assert!(rule.nodes().iter().all(|&t| t > 0.0 && t < 1.0));
        }
    }

    #[test]
    fn exact_for_degree_2n_minus_1() {
        for n in MIN_POINTS..=MAX_POINTS {
            let rule = QuadratureRule::<f64>::gauss_legendre(n).unwrap();
            for degree in 0..2 * n {
                let approx = rule.integrate(0.0, 1.0, |z| z.powi(degree as i32));
                assert_abs_diff_eq!(approx, 1.0 / (degree as f64 + 1.0), epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn out_of_range_point_counts() {
        assert_eq!(QuadratureRule::<f64>::gauss_legendre(1), Err(QuadratureError(1)));
        assert!(QuadratureRule::<f64>::gauss_legendre(11).is_err());
    }

    #[test]
    fn single_precision_rule() {
        let rule = QuadratureRule::<f32>::default();
        assert!((rule.integrate(0.0, 2.0, |z| z * z) - 8.0 / 3.0).abs() < 1e-5);
    }
}
