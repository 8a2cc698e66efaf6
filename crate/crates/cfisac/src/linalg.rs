//! Small complex dense linear-algebra helpers used across the crate.

use ndarray::{Array2, ArrayView1, ArrayView2};
use num_complex::Complex64;

/// Hermitian inner product `a^H b` of two complex vectors.
pub(crate) fn herm_dot(a: ArrayView1<'_, Complex64>, b: ArrayView1<'_, Complex64>) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Frobenius norm of a complex matrix.
pub(crate) fn fro_norm(m: &ArrayView2<'_, Complex64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Solves the square complex system `A X = B` by LU with partial pivoting.
///
/// Returns `None` when a pivot is negligible relative to the matrix scale,
/// which callers report as a rank-deficiency error. Intended for the small
/// per-AP Gram systems (K x K); not tuned for large matrices.
pub(crate) fn solve_square(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Option<Array2<Complex64>> {
    let n = a.nrows();
    assert_eq!(a.ncols(), n, "matrix must be square");
    assert_eq!(b.nrows(), n, "right-hand side height mismatch");
    let mut lu = a.clone();
    let mut x = b.clone();
    let scale = a.iter().map(|z| z.norm()).fold(0.0f64, f64::max).max(f64::MIN_POSITIVE);

    for col in 0..n {
        let mut pivot_row = col;
        let mut pivot_mag = lu[[col, col]].norm();
        for r in col + 1..n {
            let mag = lu[[r, col]].norm();
            if mag > pivot_mag {
                pivot_mag = mag;
                pivot_row = r;
            }
        }
        if pivot_mag <= scale * 1e-13 {
            return None;
        }
        if pivot_row != col {
            for c in 0..n {
                lu.swap([col, c], [pivot_row, c]);
            }
            for c in 0..x.ncols() {
                x.swap([col, c], [pivot_row, c]);
            }
        }
        let pivot = lu[[col, col]];
        for r in col + 1..n {
            let factor = lu[[r, col]] / pivot;
            if factor.norm_sqr() == 0.0 {
                continue;
            }
            for c in col..n {
                let sub = factor * lu[[col, c]];
                lu[[r, c]] -= sub;
            }
            for c in 0..x.ncols() {
                let sub = factor * x[[col, c]];
                x[[r, c]] -= sub;
            }
        }
    }
    for col in (0..n).rev() {
        let pivot = lu[[col, col]];
        for c in 0..x.ncols() {
            let mut acc = x[[col, c]];
            for r in col + 1..n {
                acc -= lu[[col, r]] * x[[r, c]];
            }
            x[[col, c]] = acc / pivot;
        }
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn solves_small_system() {
        let a = array![[c(2.0, 0.0), c(0.0, 1.0)], [c(0.0, -1.0), c(3.0, 0.0)]];
        let b = array![[c(1.0, 0.0)], [c(0.0, 0.0)]];
        let x = solve_square(&a, &b).unwrap();
        // residual check
        let r0 = a[[0, 0]] * x[[0, 0]] + a[[0, 1]] * x[[1, 0]] - b[[0, 0]];
        let r1 = a[[1, 0]] * x[[0, 0]] + a[[1, 1]] * x[[1, 0]] - b[[1, 0]];
        assert!(r0.norm() < 1e-14 && r1.norm() < 1e-14);
    }

    #[test]
    fn detects_singularity() {
        let a = array![[c(1.0, 0.0), c(2.0, 0.0)], [c(2.0, 0.0), c(4.0, 0.0)]];
        let b = Array2::eye(2).mapv(|x: f64| c(x, 0.0));
        assert!(solve_square(&a, &b).is_none());
    }

    #[test]
    fn herm_dot_conjugates_left() {
        let a = array![c(0.0, 1.0)];
        let b = array![c(0.0, 1.0)];
        let d = herm_dot(a.view(), b.view());
        assert!((d - c(1.0, 0.0)).norm() < 1e-15);
    }
}
