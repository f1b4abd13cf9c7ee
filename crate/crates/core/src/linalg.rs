//! Dense Gaussian elimination with partial pivoting for small fixed-size systems.

#![allow(clippy::needless_range_loop)]

use crate::{Error, Result};

/// LU factors of an `N x N` matrix, `P A = L U`, stored packed.
#[derive(Debug, Clone)]
pub struct Lu<const N: usize> {
    lu: [[f64; N]; N],
    perm: [usize; N],
    norm1: f64,
}

impl<const N: usize> Lu<N> {
    /// Factorizes `a`. Fails when a pivot vanishes exactly.
    pub fn new(a: &[[f64; N]; N]) -> Result<Self> {
        let norm1 = norm1(a);
        let mut lu = *a;
        let mut perm = [0usize; N];
        for (i, p) in perm.iter_mut().enumerate() {
            *p = i;
        }
        for k in 0..N {
            let mut piv = k;
            let mut best = libm::fabs(lu[k][k]);
            for i in k + 1..N {
                let v = libm::fabs(lu[i][k]);
                if v > best {
                    best = v;
                    piv = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::SingularSystem { condition: f64::INFINITY });
            }
            if piv != k {
                lu.swap(piv, k);
                perm.swap(piv, k);
            }
            for i in k + 1..N {
                let m = lu[i][k] / lu[k][k];
                lu[i][k] = m;
                for j in k + 1..N {
                    lu[i][j] -= m * lu[k][j];
                }
            }
        }
        Ok(Lu { lu, perm, norm1 })
    }

    pub fn solve(&self, rhs: &[f64; N]) -> [f64; N] {
        let mut y = [0.0; N];
        for i in 0..N {
            let mut s = rhs[self.perm[i]];
            for j in 0..i {
                s -= self.lu[i][j] * y[j];
            }
            y[i] = s;
        }
        for i in (0..N).rev() {
            let mut s = y[i];
            for j in i + 1..N {
                s -= self.lu[i][j] * y[j];
            }
            y[i] = s / self.lu[i][i];
        }
        y
    }

    /// 1-norm condition number, computed from the explicit inverse.
    pub fn condition(&self) -> f64 {
        let mut inv_norm = 0.0_f64;
        for j in 0..N {
            let mut e = [0.0; N];
            e[j] = 1.0;
            let col = self.solve(&e);
            let s: f64 = col.iter().map(|v| libm::fabs(*v)).sum();
            inv_norm = inv_norm.max(s);
        }
        self.norm1 * inv_norm
    }
}

fn norm1<const N: usize>(a: &[[f64; N]; N]) -> f64 {
    (0..N)
        .map(|j| a.iter().map(|row| libm::fabs(row[j])).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Solves `a x = rhs`, rejecting systems whose condition number exceeds `max_condition`.
pub fn solve_checked<const N: usize>(
    a: &[[f64; N]; N],
    rhs: &[f64; N],
    max_condition: f64,
) -> Result<[f64; N]> {
    let lu = Lu::new(a)?;
    let condition = lu.condition();
    if !(condition <= max_condition) {
        return Err(Error::SingularSystem { condition });
    }
    Ok(lu.solve(rhs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_with_row_swaps() {
        let a = [[0.0, 2.0, 1.0], [1.0, 1.0, 0.0], [3.0, 0.0, 1.0]];
        let x_true = [1.0, -2.0, 0.5];
        let mut b = [0.0; 3];
        for i in 0..3 {
            b[i] = (0..3).map(|j| a[i][j] * x_true[j]).sum();
        }
        let x = solve_checked(&a, &b, 1e14).unwrap();
        for i in 0..3 {
            assert!((x[i] - x_true[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn identity_condition_is_one() {
        let a = [[1.0, 0.0], [0.0, 1.0]];
        assert_eq!(Lu::new(&a).unwrap().condition(), 1.0);
    }

    #[test]
    fn rejects_singular() {
        let a = [[1.0, 2.0], [2.0, 4.0]];
        assert!(matches!(
            solve_checked(&a, &[1.0, 2.0], 1e14),
            Err(Error::SingularSystem { .. })
        ));
        let near = [[1.0, 1.0], [1.0, 1.0 + 1e-15]];
        assert!(matches!(
            solve_checked(&near, &[1.0, 2.0], 1e14),
            Err(Error::SingularSystem { .. })
        ));
    }
}
