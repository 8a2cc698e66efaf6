//! Geometry of the complex oblique manifold: complex matrices with
//! unit-norm columns, one sphere per column.
//!
//! The metric is the real part of the Euclidean Hermitian inner product.
//! Projection, retraction, and transport all act column-wise, so every
//! operation is O(rows x cols).

use ndarray::{Array2, ArrayView1};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// A point on the manifold: every column has unit Euclidean norm.
#[derive(Clone, Debug, PartialEq)]
pub struct ManifoldPoint(pub Array2<Complex64>);

/// A tangent vector at some base point: per column, the real part of the
/// Hermitian inner product with the base column vanishes.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentVector(pub Array2<Complex64>);

impl ManifoldPoint {
    pub fn shape(&self) -> (usize, usize) {
        (self.0.nrows(), self.0.ncols())
    }

    /// Largest deviation of any column norm from 1.
    pub fn feasibility_error(&self) -> f64 {
        self.0
            .columns()
            .into_iter()
            .map(|c| (column_norm(&c) - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

impl TangentVector {
    pub fn norm(&self) -> f64 {
        inner(self, self).sqrt()
    }

    pub fn scaled(&self, factor: f64) -> TangentVector {
        TangentVector(self.0.mapv(|z| z * factor))
    }
}

fn column_norm(col: &ArrayView1<'_, Complex64>) -> f64 {
    col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn real_inner_col(a: &ArrayView1<'_, Complex64>, b: &ArrayView1<'_, Complex64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

/// Random point: i.i.d. complex Gaussian entries, columns normalized.
pub fn random_point<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ManifoldPoint {
    assert!(rows > 0 && cols > 0, "manifold shape must be nonempty");
    let mut x = Array2::from_shape_fn((rows, cols), |_| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    for mut col in x.columns_mut() {
        let norm = column_norm(&col.view());
        col.mapv_inplace(|z| z / norm);
    }
    ManifoldPoint(x)
}

/// Orthogonal projection of an ambient matrix onto the tangent space at
/// `x`: per column, removes the radial component.
pub fn project_to_tangent(x: &ManifoldPoint, ambient: &Array2<Complex64>) -> TangentVector {
    assert_eq!(x.0.shape(), ambient.shape(), "shape mismatch");
    let mut z = ambient.clone();
    for (mut zc, xc) in z.columns_mut().into_iter().zip(x.0.columns()) {
        let radial = real_inner_col(&xc, &zc.view());
        for (zi, xi) in zc.iter_mut().zip(xc.iter()) {
            *zi -= xi * radial;
        }
    }
    TangentVector(z)
}

/// Riemannian metric: `Re(sum conj(z1) .* z2)`.
pub fn inner(z1: &TangentVector, z2: &TangentVector) -> f64 {
    assert_eq!(z1.0.shape(), z2.0.shape(), "shape mismatch");
    z1.0.iter()
        .zip(z2.0.iter())
        .map(|(a, b)| (a.conj() * b).re)
        .sum()
}

/// Retraction: column-wise normalization of `x + alpha * z`.
pub fn retract(x: &ManifoldPoint, z: &TangentVector, alpha: f64) -> Result<ManifoldPoint> {
    assert_eq!(x.0.shape(), z.0.shape(), "shape mismatch");
    assert!(alpha.is_finite(), "step size must be finite");
    let mut out = Array2::zeros(x.0.raw_dim());
    for (m, (xc, zc)) in x.0.columns().into_iter().zip(z.0.columns()).enumerate() {
        let mut col = out.column_mut(m);
        for ((o, xi), zi) in col.iter_mut().zip(xc.iter()).zip(zc.iter()) {
            *o = xi + zi * alpha;
        }
        let norm = column_norm(&col.view());
        if norm == 0.0 {
            return Err(Error::ZeroColumn { column: m });
        }
        col.mapv_inplace(|v| v / norm);
    }
    Ok(ManifoldPoint(out))
}

/// Vector transport by projection onto the tangent space at the
/// destination point.
pub fn transport(to: &ManifoldPoint, z: &TangentVector) -> TangentVector {
    project_to_tangent(to, &z.0)
}

/// Largest per-column tangency defect of `z` at `x`.
pub fn tangency_error(x: &ManifoldPoint, z: &TangentVector) -> f64 {
    x.0.columns()
        .into_iter()
        .zip(z.0.columns())
        .map(|(xc, zc)| real_inner_col(&xc, &zc).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_ambient<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Array2<Complex64> {
        Array2::from_shape_fn((rows, cols), |_| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        })
    }

    #[test]
    fn random_point_unit_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random_point(10, 4, &mut rng);
        assert!(x.feasibility_error() < 1e-12);
    }

    #[test]
    fn random_point_deterministic() {
        let a = random_point(6, 3, &mut ChaCha8Rng::seed_from_u64(9));
        let b = random_point(6, 3, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a.0, b.0);
    }

    #[test]
    fn random_scalar_point_has_zero_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut acc = Complex64::default();
        let draws = 10_000;
        for _ in 0..draws {
            acc += random_point(1, 1, &mut rng).0[[0, 0]];
        }
        assert!((acc / draws as f64).norm() < 0.05);
    }

    #[test]
    fn projection_annihilates_radial_direction() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_point(8, 2, &mut rng);
        let z = project_to_tangent(&x, &x.0);
        assert!(z.norm() < 1e-12);
    }

    #[test]
    fn projection_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = random_point(8, 3, &mut rng);
        let g = random_ambient(8, 3, &mut rng);
        let z1 = project_to_tangent(&x, &g);
        let z2 = project_to_tangent(&x, &z1.0);
        let diff: f64 = z1
            .0
            .iter()
            .zip(z2.0.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(diff < 1e-12 * z1.norm().max(1.0));
        assert!(tangency_error(&x, &z1) < 1e-10);
    }

    #[test]
    fn projection_self_adjoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = random_point(7, 2, &mut rng);
        let g1 = random_ambient(7, 2, &mut rng);
        let g2 = random_ambient(7, 2, &mut rng);
        let p1 = project_to_tangent(&x, &g1);
        let p2 = project_to_tangent(&x, &g2);
        let lhs = inner(&p1, &TangentVector(g2.clone()));
        let rhs = inner(&TangentVector(g1), &p2);
        assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0));
    }

    #[test]
    fn inner_metric_axioms() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = random_point(5, 2, &mut rng);
        let z1 = project_to_tangent(&x, &random_ambient(5, 2, &mut rng));
        let z2 = project_to_tangent(&x, &random_ambient(5, 2, &mut rng));
        assert!(inner(&z1, &z1) > 0.0);
        assert!((inner(&z1, &z2) - inner(&z2, &z1)).abs() < 1e-12);
        let j = Complex64::new(0.0, 1.0);
        let jz = TangentVector(z1.0.mapv(|v| v * j));
        assert!((inner(&jz, &jz) - inner(&z1, &z1)).abs() < 1e-12 * inner(&z1, &z1));
        let zero = TangentVector(Array2::zeros((5, 2)));
        assert_eq!(inner(&zero, &zero), 0.0);
    }

    #[test]
    fn retract_zero_step_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = random_point(6, 2, &mut rng);
        let z = project_to_tangent(&x, &random_ambient(6, 2, &mut rng));
        let y = retract(&x, &z, 0.0).unwrap();
        let diff: f64 = x
            .0
            .iter()
            .zip(y.0.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        assert!(diff.sqrt() < 1e-14);
    }

    #[test]
    fn retract_output_on_manifold() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x = random_point(6, 3, &mut rng);
        let z = project_to_tangent(&x, &random_ambient(6, 3, &mut rng));
        for &alpha in &[1e-3, 0.5, 10.0, -4.0] {
            let y = retract(&x, &z, alpha).unwrap();
            assert!(y.feasibility_error() < 1e-12);
        }
    }

    #[test]
    fn retract_zero_column_is_error() {
        // x + alpha z with alpha = -1 and z = x's column (radial, not tangent,
        // but retract only requires shapes) zeroes the column
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = random_point(4, 1, &mut rng);
        let z = TangentVector(x.0.clone());
        assert!(matches!(
            retract(&x, &z, -1.0),
            Err(Error::ZeroColumn { column: 0 })
        ));
    }

    #[test]
    fn retract_first_order_accuracy() {
        // || R(x, alpha z) - (x + alpha z) || = O(alpha^2)
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let x = random_point(6, 2, &mut rng);
        let mut z = project_to_tangent(&x, &random_ambient(6, 2, &mut rng));
        z = z.scaled(1.0 / z.norm());
        let deviation = |alpha: f64| -> f64 {
            let y = retract(&x, &z, alpha).unwrap();
            y.0.iter()
                .zip(x.0.iter().zip(z.0.iter()))
                .map(|(yi, (xi, zi))| (yi - (xi + zi * alpha)).norm_sqr())
                .sum::<f64>()
                .sqrt()
        };
        let (d2, d3, d4) = (deviation(1e-2), deviation(1e-3), deviation(1e-4));
        // each tenfold step reduction should shrink the deviation ~100x
        assert!(d2 / d3 > 50.0 && d2 / d3 < 200.0, "ratio {}", d2 / d3);
        assert!(d3 / d4 > 50.0 && d3 / d4 < 200.0, "ratio {}", d3 / d4);
    }

    #[test]
    fn transport_identity_at_same_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = random_point(5, 2, &mut rng);
        let z = project_to_tangent(&x, &random_ambient(5, 2, &mut rng));
        let t = transport(&x, &z);
        let diff: f64 = z
            .0
            .iter()
            .zip(t.0.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        assert!(diff.sqrt() < 1e-12 * z.norm());
    }

    #[test]
    fn transport_tangent_and_nonexpansive() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let x = random_point(6, 3, &mut rng);
        let y = random_point(6, 3, &mut rng);
        let z = project_to_tangent(&x, &random_ambient(6, 3, &mut rng));
        let t = transport(&y, &z);
        assert!(tangency_error(&y, &t) < 1e-10);
        assert!(t.norm() <= z.norm() * (1.0 + 1e-12));
    }

    #[test]
    fn directional_derivative_matches_projected_gradient() {
        // phi(X) = Re<C, X> + |<B, X>|^2 has ambient gradient C + 2 <B,X> B
        // (with <A, X> = sum conj(A) .* X); check d/da phi(R_x(a Z)) at 0.
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let x = random_point(5, 2, &mut rng);
        let c = random_ambient(5, 2, &mut rng);
        let b = random_ambient(5, 2, &mut rng);
        let phi = |p: &ManifoldPoint| -> f64 {
            let lin: f64 = c.iter().zip(p.0.iter()).map(|(a, v)| (a.conj() * v).re).sum();
            let quad: Complex64 = b.iter().zip(p.0.iter()).map(|(a, v)| a.conj() * v).sum();
            lin + quad.norm_sqr()
        };
        let quad: Complex64 = b.iter().zip(x.0.iter()).map(|(a, v)| a.conj() * v).sum();
        let ambient_grad = &c + &b.mapv(|bi| bi * quad * 2.0);
        let grad = project_to_tangent(&x, &ambient_grad);

        let mut z = project_to_tangent(&x, &random_ambient(5, 2, &mut rng));
        z = z.scaled(1.0 / z.norm());
        let h = 1e-6;
        let fd = (phi(&retract(&x, &z, h).unwrap()) - phi(&retract(&x, &z, -h).unwrap())) / (2.0 * h);
        let dd = inner(&grad, &z);
        assert!(
            (dd - fd).abs() <= 1e-6 * dd.abs().max(1.0),
            "dd {dd} vs fd {fd}"
        );
    }

    proptest! {
        #[test]
        fn prop_projection_tangency(seed in 0u64..1000, rows in 1usize..8, cols in 1usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = random_point(rows, cols, &mut rng);
            let g = random_ambient(rows, cols, &mut rng);
            let z = project_to_tangent(&x, &g);
            prop_assert!(tangency_error(&x, &z) < 1e-10);
        }

        #[test]
        fn prop_retraction_feasible(seed in 0u64..1000, alpha in -10.0f64..10.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = random_point(5, 2, &mut rng);
            let z = project_to_tangent(&x, &random_ambient(5, 2, &mut rng));
            if let Ok(y) = retract(&x, &z, alpha) {
                prop_assert!(y.feasibility_error() < 1e-12);
            }
        }
    }
}
