//! Tridiagonal systems.

use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("tridiagonal elimination hit pivot {pivot:e} at row {row}")]
pub struct SingularPivot {
    pub row: usize,
    pub pivot: f64,
}

/// Square tridiagonal matrix: `lower[i]` sits at (i+1, i), `upper[i]` at (i, i+1).
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal<T> {
    pub lower: Vec<T>,
    pub diag: Vec<T>,
    pub upper: Vec<T>,
}

impl<T: Real> Tridiagonal<T> {
    pub fn zeros(n: usize) -> Self {
        let off = n.saturating_sub(1);
        Self {
            lower: vec![T::zero(); off],
            diag: vec![T::zero(); n],
            upper: vec![T::zero(); off],
        }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        match j as isize - i as isize {
            0 => self.diag[i],
            1 => self.upper[i],
            -1 => self.lower[j],
            _ => T::zero(),
        }
    }

    /// Writes entry (i, j); entries outside the band are ignored.
    pub fn set(&mut self, i: usize, j: usize, value: T) {
        match j as isize - i as isize {
            0 => self.diag[i] = value,
            1 => self.upper[i] = value,
            -1 => self.lower[j] = value,
            _ => {}
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let n = self.dim();
        (0..n).map(|i| (0..n).map(|j| self.get(i, j)).collect()).collect()
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut acc = self.diag[i] * x[i];
                if i > 0 {
                    acc += self.lower[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    acc += self.upper[i] * x[i + 1];
                }
                acc
            })
            .collect()
    }

    /// Largest |A_ij − A_ji|.
    pub fn asymmetry(&self) -> T {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(&l, &u)| (l - u).abs())
            .fold(T::zero(), T::max)
    }

    /// Thomas algorithm without pivoting; fails when a pivot magnitude drops below `pivot_tol`.
    pub fn solve(&self, rhs: &[T], pivot_tol: T) -> Result<Vec<T>, SingularPivot> {
        let n = self.dim();
        assert_eq!(rhs.len(), n, "rhs length must match matrix dimension");
        if n == 0 {
            return Ok(Vec::new());
        }
        let mut upper = vec![T::zero(); n];
        let mut x = vec![T::zero(); n];
        let mut pivot = self.diag[0];
        for i in 0..n {
            if i > 0 {
                pivot = self.diag[i] - self.lower[i - 1] * upper[i - 1];
            }
            if !(pivot.abs() >= pivot_tol) {
                return Err(SingularPivot {
                    row: i,
                    pivot: pivot.to_f64_lossy(),
                });
            }
            if i + 1 < n {
                upper[i] = self.upper[i] / pivot;
            }
            let carried = if i > 0 { self.lower[i - 1] * x[i - 1] } else { T::zero() };
            x[i] = (rhs[i] - carried) / pivot;
        }
        for i in (0..n - 1).rev() {
            let next = x[i + 1];
            x[i] -= upper[i] * next;
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn solves_stiffness_system() {
        let n = 7;
        let mut a = Tridiagonal::zeros(n);
        for i in 0..n {
            a.set(i, i, 2.0);
            if i + 1 < n {
                a.set(i, i + 1, -1.0);
                a.set(i + 1, i, -1.0);
            }
        }
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let b = a.mul_vec(&x);
        let solved = a.solve(&b, 1e-14).unwrap();
        for (s, e) in solved.iter().zip(&x) {
            assert_abs_diff_eq!(s, e, epsilon = 1e-13);
        }
        assert_eq!(a.asymmetry(), 0.0);
    }

    #[test]
    fn reports_singular_pivot() {
        let a = Tridiagonal {
            lower: vec![1.0],
            diag: vec![1.0, 1.0],
            upper: vec![1.0],
        };
        let err = a.solve(&[1.0, 2.0], 1e-14).unwrap_err();
        assert_eq!(err.row, 1);
    }

    #[test]
    fn dense_view_matches_band() {
        let a = Tridiagonal {
            lower: vec![4.0, 5.0],
            diag: vec![1.0, 2.0, 3.0],
            upper: vec![6.0, 7.0],
        };
        assert_eq!(a.to_dense(), vec![vec![1.0, 6.0, 0.0], vec![4.0, 2.0, 7.0], vec![0.0, 5.0, 3.0]]);
        assert_eq!(a.get(0, 2), 0.0);
    }
}
