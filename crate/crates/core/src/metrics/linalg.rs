//! Minimal dense Hermitian linear algebra on 4x4 complex matrices: a
//! phase-aware Jacobi eigensolver and the PSD square root built on it.

use num_complex::Complex64;

use crate::{Error, Result};

pub type Matrix4 = [[Complex64; 4]; 4];

pub fn zero() -> Matrix4 {
    [[Complex64::new(0.0, 0.0); 4]; 4]
}

pub fn identity() -> Matrix4 {
    let mut m = zero();
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = Complex64::new(1.0, 0.0);
    }
    m
}

pub fn matmul(a: &Matrix4, b: &Matrix4) -> Matrix4 {
    let mut out = zero();
    for i in 0..4 {
        for k in 0..4 {
            let aik = a[i][k];
            if aik == Complex64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..4 {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

pub fn adjoint(a: &Matrix4) -> Matrix4 {
    let mut out = zero();
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = a[j][i].conj();
        }
    }
    out
}

fn off_diagonal_weight(a: &Matrix4) -> f64 {
    let mut w = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            if i != j {
                w += a[i][j].norm_sqr();
            }
        }
    }
    w
}

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations with
/// a phase factor absorbing the complex off-diagonal elements.
///
/// Returns eigenvalues in ascending order and the matching orthonormal
/// eigenvectors as the columns of the second output.
pub fn hermitian_eigen(m: &Matrix4) -> Result<([f64; 4], Matrix4)> {
    // Work on the explicitly Hermitized matrix so tiny asymmetries from
    // rounding cannot feed the iteration.
    let mut a = zero();
    for i in 0..4 {
        for j in 0..4 {
            a[i][j] = 0.5 * (m[i][j] + m[j][i].conj());
        }
    }
    let scale: f64 = (0..4)
        .map(|i| (0..4).map(|j| a[i][j].norm_sqr()).sum::<f64>())
        .sum::<f64>()
        .sqrt()
        .max(1e-300);
    let mut v = identity();
    let tol = (1e-15 * scale) * (1e-15 * scale);
    let mut converged = false;
    for _sweep in 0..60 {
        if off_diagonal_weight(&a) <= tol {
            converged = true;
            break;
        }
        for p in 0..3 {
            for q in (p + 1)..4 {
                let apq = a[p][q];
                let r = apq.norm();
                if r <= 1e-300 * scale {
                    continue;
                }
                let phase = apq / r;
                let theta = 0.5 * (2.0 * r).atan2(a[p][p].re - a[q][q].re);
                let (s, c) = theta.sin_cos();
                let sp = s * phase;
                // Column update  A <- A U,  V <- V U.
                for k in 0..4 {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp + sp.conj() * akq;
                    a[k][q] = -sp * akp + c * akq;
                    let vkp = v[k][p];
                    let vkq = v[k][q];
                    v[k][p] = c * vkp + sp.conj() * vkq;
                    v[k][q] = -sp * vkp + c * vkq;
                }
                // Row update  A <- U^dagger A.
                for k in 0..4 {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk + sp * aqk;
                    a[q][k] = -sp.conj() * apk + c * aqk;
                }
            }
        }
    }
    if !converged && off_diagonal_weight(&a) > tol {
        return Err(Error::Numerics(
            "Jacobi eigensolver failed to converge in 60 sweeps".into(),
        ));
    }
    let mut order = [0usize, 1, 2, 3];
    order.sort_by(|&i, &j| a[i][i].re.partial_cmp(&a[j][j].re).unwrap());
    let mut values = [0.0; 4];
    let mut vectors = zero();
    for (slot, &idx) in order.iter().enumerate() {
        values[slot] = a[idx][idx].re;
        for k in 0..4 {
            vectors[k][slot] = v[k][idx];
        }
    }
    Ok((values, vectors))
}

/// Singular values of a general complex matrix, descending.
///
/// One-sided Jacobi: columns are rotated in pairs until mutually
/// orthogonal, leaving the column norms as the singular values. Small
/// values are never squared on the way, so they keep the accuracy of the
/// column-scaled problem, and an all-zero column stays an exact zero.
pub fn singular_values(m: &Matrix4) -> Result<[f64; 4]> {
    let mut a = *m;
    let mut converged = false;
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..3 {
            for q in (p + 1)..4 {
                let mut app = 0.0;
                let mut aqq = 0.0;
                let mut apq = Complex64::new(0.0, 0.0);
                for k in 0..4 {
                    app += a[k][p].norm_sqr();
                    aqq += a[k][q].norm_sqr();
                    apq += a[k][p].conj() * a[k][q];
                }
                let r = apq.norm();
                if r <= 1e-300 || r <= 1e-15 * (app * aqq).sqrt() {
                    continue;
                }
                rotated = true;
                // Diagonalize the 2x2 Gram block, as in hermitian_eigen.
                let phase = apq / r;
                let theta = 0.5 * (2.0 * r).atan2(app - aqq);
                let (s, c) = theta.sin_cos();
                let sp = s * phase;
                for k in 0..4 {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp + sp.conj() * akq;
                    a[k][q] = -sp * akp + c * akq;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Numerics(
            "one-sided Jacobi failed to converge in 60 sweeps".into(),
        ));
    }
    let mut sv = [0.0; 4];
    for (j, out) in sv.iter_mut().enumerate() {
        *out = (0..4).map(|k| a[k][j].norm_sqr()).sum::<f64>().sqrt();
    }
    sv.sort_by(|x, y| y.partial_cmp(x).unwrap());
    Ok(sv)
}

/// Hermitian square root of a positive semi-definite matrix; eigenvalues
/// below zero by more than `neg_tol` are rejected, smaller ones clamped.
pub fn sqrt_psd(m: &Matrix4, neg_tol: f64) -> Result<Matrix4> {
    let (values, vectors) = hermitian_eigen(m)?;
    let mut out = zero();
    for (slot, &lam) in values.iter().enumerate() {
        if lam < -neg_tol {
            return Err(Error::Numerics(format!(
                "matrix is not positive semi-definite (eigenvalue {lam:.3e})"
            )));
        }
        let root = lam.max(0.0).sqrt();
        for i in 0..4 {
            for j in 0..4 {
                out[i][j] += root * vectors[i][slot] * vectors[j][slot].conj();
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn frob_diff(a: &Matrix4, b: &Matrix4) -> f64 {
        let mut acc = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                acc += (a[i][j] - b[i][j]).norm_sqr();
            }
        }
        acc.sqrt()
    }

    fn test_matrix() -> Matrix4 {
        // Hand-picked dense Hermitian matrix with non-trivial phases.
        [
            [c(2.0, 0.0), c(0.5, 0.3), c(-0.2, 0.1), c(0.0, -0.4)],
            [c(0.5, -0.3), c(1.0, 0.0), c(0.7, 0.0), c(0.1, 0.2)],
            [c(-0.2, -0.1), c(0.7, 0.0), c(-0.5, 0.0), c(0.3, -0.3)],
            [c(0.0, 0.4), c(0.1, -0.2), c(0.3, 0.3), c(0.8, 0.0)],
        ]
    }

    #[test]
    fn eigen_reconstructs_the_matrix() {
        let m = test_matrix();
        let (vals, vecs) = hermitian_eigen(&m).unwrap();
        let mut recon = zero();
        for slot in 0..4 {
            for i in 0..4 {
                for j in 0..4 {
                    recon[i][j] += vals[slot] * vecs[i][slot] * vecs[j][slot].conj();
                }
            }
        }
        assert!(frob_diff(&recon, &m) < 1e-13);
        // Ascending order and trace conservation.
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        let trace: f64 = (0..4).map(|i| m[i][i].re).sum();
        assert_relative_eq!(vals.iter().sum::<f64>(), trace, max_relative = 1e-12);
    }

    #[test]
    fn eigenvectors_are_orthonormal() {
        let (_, vecs) = hermitian_eigen(&test_matrix()).unwrap();
        let gram = matmul(&adjoint(&vecs), &vecs);
        assert!(frob_diff(&gram, &identity()) < 1e-13);
    }

    #[test]
    fn diagonal_input_is_returned_sorted() {
        let mut m = zero();
        for (i, lam) in [3.0, -1.0, 2.0, 0.5].iter().enumerate() {
            m[i][i] = c(*lam, 0.0);
        }
        let (vals, _) = hermitian_eigen(&m).unwrap();
        assert_eq!(vals, [-1.0, 0.5, 2.0, 3.0]);
    }

    #[test]
    fn sqrt_squares_back() {
        // Make a PSD matrix as B^dagger B from the test matrix.
        let b = test_matrix();
        let psd = matmul(&adjoint(&b), &b);
        let root = sqrt_psd(&psd, 1e-10).unwrap();
        let squared = matmul(&root, &root);
        assert!(frob_diff(&squared, &psd) < 1e-12 * 10.0);
        // The root is Hermitian.
        assert!(frob_diff(&root, &adjoint(&root)) < 1e-13);
    }

    #[test]
    fn singular_values_square_to_gram_eigenvalues() {
        let b = test_matrix();
        let sv = singular_values(&b).unwrap();
        let (gram_eigs, _) = hermitian_eigen(&matmul(&adjoint(&b), &b)).unwrap();
        for (s, lam) in sv.iter().zip(gram_eigs.iter().rev()) {
            assert_relative_eq!(s * s, lam, max_relative = 1e-12);
        }
        assert!(sv.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn rank_deficient_matrix_has_exact_zero_singular_values() {
        // Two identical columns and a zero column leave rank 2.
        let mut m = test_matrix();
        for k in 0..4 {
            m[k][1] = m[k][0];
            m[k][3] = c(0.0, 0.0);
        }
        let sv = singular_values(&m).unwrap();
        assert!(sv[0] > 1.0);
        // The dependent column collapses to rounding level, the zero
        // column stays an exact zero.
        assert!(sv[2] <= 1e-15 * sv[0]);
        assert_eq!(sv[3], 0.0);
    }

    #[test]
    fn sqrt_rejects_indefinite_input() {
        let mut m = zero();
        m[0][0] = c(1.0, 0.0);
        m[1][1] = c(-0.5, 0.0);
        assert!(sqrt_psd(&m, 1e-10).is_err());
        // Tiny negatives inside the tolerance are clamped instead.
        m[1][1] = c(-1e-14, 0.0);
        let root = sqrt_psd(&m, 1e-10).unwrap();
        assert_abs_diff_eq!(root[1][1].norm(), 0.0, epsilon = 1e-7);
    }
}
