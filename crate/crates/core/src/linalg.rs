//! Small dense complex linear-algebra helpers on top of nalgebra.

use alloc::vec::Vec;

use nalgebra::linalg::SymmetricTridiagonal;
use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float;

use crate::{CMatrix, Complex64};

pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

pub fn sigma_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
}

pub fn sigma_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)])
}

pub fn sigma_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)])
}

/// Two-level density matrix `(1 + r·σ)/2` for a Bloch vector `r`.
pub fn density_from_bloch(x: f64, y: f64, z: f64) -> CMatrix {
    let mut rho = identity(2) * c(0.5, 0.0);
    rho += sigma_x() * c(0.5 * x, 0.0);
    rho += sigma_y() * c(0.5 * y, 0.0);
    rho += sigma_z() * c(0.5 * z, 0.0);
    rho
}

pub fn dagger(m: &CMatrix) -> CMatrix {
    m.adjoint()
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.trace()
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest entrywise deviation of `m` from its adjoint.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    m.is_square() && hermiticity_defect(m) <= tol
}

/// Hermitian eigendecomposition with eigenvalues sorted ascending.
///
/// Householder reduction to a real tridiagonal matrix followed by implicit
/// QL iterations with Wilkinson-type shifts.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    let sym = (m + m.adjoint()) * c(0.5, 0.0);
    let (q, diag, off) = SymmetricTridiagonal::new(sym).unpack();
    let mut d: Vec<f64> = diag.iter().copied().collect();
    let mut e: Vec<f64> = off.iter().copied().chain(core::iter::once(0.0)).collect();
    let mut z = DMatrix::<f64>::identity(n, n);
    tridiagonal_ql(&mut d, &mut e, &mut z);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let values = order.iter().map(|&i| d[i]).collect();
    let z_sorted = CMatrix::from_fn(n, n, |r, col| c(z[(r, order[col])], 0.0));
    (values, q * z_sorted)
}

/// Diagonalizes the symmetric tridiagonal matrix with diagonal `d` and
/// sub-diagonal `e[..n-1]`, rotating the columns of `z` along.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64], z: &mut DMatrix<f64>) {
    let n = d.len();
    for l in 0..n {
        let mut iterations = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iterations += 1;
            if iterations > 100 {
                break;
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + if g >= 0.0 { r } else { -r });
            let (mut s, mut cs, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = cs * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                cs = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * cs * b;
                p = s * r;
                d[i + 1] = g + p;
                g = cs * r - b;
                for k in 0..n {
                    let f = z[(k, i + 1)];
                    z[(k, i + 1)] = s * z[(k, i)] + cs * f;
                    z[(k, i)] = cs * z[(k, i)] - s * f;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
}

/// Applies a real function to a Hermitian matrix through its eigenbasis.
pub fn hermitian_map(m: &CMatrix, f: impl Fn(f64) -> Complex64) -> CMatrix {
    let (values, vectors) = hermitian_eigen(m);
    let n = m.nrows();
    let mut scaled = vectors.clone();
    for (j, &v) in values.iter().enumerate() {
        let fv = f(v);
        for i in 0..n {
            scaled[(i, j)] *= fv;
        }
    }
    scaled * vectors.adjoint()
}

/// `e^{-iHt}` for Hermitian `H`.
pub fn unitary_propagator(h: &CMatrix, t: f64) -> CMatrix {
    hermitian_map(h, |e| Complex64::from_polar(1.0, -e * t))
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Traces out the second factor of a `d_a * d_b` dimensional operator.
pub fn partial_trace_second(m: &CMatrix, d_a: usize, d_b: usize) -> CMatrix {
    let mut out = CMatrix::zeros(d_a, d_a);
    for i in 0..d_a {
        for j in 0..d_a {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..d_b {
                acc += m[(i * d_b + k, j * d_b + k)];
            }
            out[(i, j)] = acc;
        }
    }
    out
}

/// `½‖a − b‖₁` for Hermitian arguments.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    let (values, _) = hermitian_eigen(&(a - b));
    0.5 * values.iter().map(|v| v.abs()).sum::<f64>()
}

/// Eigenvalues of a general complex square matrix.
pub fn eigenvalues(m: &CMatrix) -> Option<Vec<Complex64>> {
    let schur = nalgebra::linalg::Schur::new(m.clone());
    schur.eigenvalues().map(|v| v.iter().copied().collect())
}

/// Minimum-norm least-squares solution of `a x ≈ b` with the relative
/// singular-value cutoff `rcond`. Returns the solution and the ratio
/// `σ_min / σ_max`.
pub fn least_squares(a: &CMatrix, b: &DVector<Complex64>, rcond: f64) -> Option<(DVector<Complex64>, f64)> {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let smin = svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
    if smax == 0.0 {
        return None;
    }
    let x = svd.solve(b, rcond * smax).ok()?;
    Some((x, smin / smax))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reconstruct(values: &[f64], v: &CMatrix) -> CMatrix {
        let d = DVector::from_iterator(values.len(), values.iter().map(|&x| c(x, 0.0)));
        v * CMatrix::from_diagonal(&d) * v.adjoint()
    }

    #[test]
    fn eigen_handles_graded_banded_matrix() {
        // Oscillator ladder plus a nearly decoupled spin, the shape that
        // exposes early termination in a QR sweep.
        let n = 60;
        let m = CMatrix::from_fn(n, n, |i, j| {
            let (a, b) = (i / 2, j / 2);
            let mut v = if i == j { c(a as f64 + if i % 2 == 0 { 1.0 } else { -1.0 }, 0.0) } else { c(0.0, 0.0) };
            if i % 2 == j % 2 && a.abs_diff(b) == 1 {
                v += c(0.2 * (a.max(b) as f64 / 2.0).sqrt(), 0.0);
            }
            if a == b && i != j {
                v += c(1.0, 0.0);
            }
            if i % 2 == j % 2 && a.abs_diff(b) == 2 {
                v += c(1e-9, if i < j { 3e-10 } else { -3e-10 });
            }
            v
        });
        let (values, v) = hermitian_eigen(&m);
        assert!(frobenius(&(reconstruct(&values, &v) - &m)) < 1e-11);
        assert!(frobenius(&(v.adjoint() * &v - identity(n))) < 1e-12);
        assert!(values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn eigen_of_pauli_matrices() {
        for s in [sigma_x(), sigma_y(), sigma_z()] {
            let (values, v) = hermitian_eigen(&s);
            assert!((values[0] + 1.0).abs() < 1e-15 && (values[1] - 1.0).abs() < 1e-15);
            assert!(frobenius(&(reconstruct(&values, &v) - &s)) < 1e-14);
        }
        let (values, _) = hermitian_eigen(&CMatrix::from_element(1, 1, c(2.5, 0.0)));
        assert_eq!(values, [2.5]);
    }

    #[test]
    fn partial_trace_of_product_state() {
        let a = density_from_bloch(0.3, 0.0, 0.4);
        let b = density_from_bloch(0.0, 0.5, 0.0);
        let r = partial_trace_second(&kron(&a, &b), 2, 2);
        assert!(frobenius(&(r - a)) < 1e-15);
    }
}
