//! Dense linear-algebra helpers shared by the estimators.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen, SVD};
use num_complex::Complex;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Eigenpairs of a real symmetric matrix, eigenvalues nonincreasing.
///
/// Each eigenvector is signed so that its largest-magnitude entry is positive.
pub fn sym_eigen_desc(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = DMatrix::zeros(m.nrows(), order.len());
    for (dst, &src) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).into_owned();
        fix_sign(&mut col);
        vectors.set_column(dst, &col);
    }
    (values, vectors)
}

/// Flips `v` so its largest-magnitude entry is positive.
pub fn fix_sign(v: &mut DVector<f64>) {
    if v.is_empty() {
        return;
    }
    let k = v.iamax();
    if v[k] < 0.0 {
        v.neg_mut();
    }
}

/// Scales `v` to unit norm and rotates its largest-modulus entry onto the
/// positive real axis.
pub fn normalize_phase(v: &mut DVector<C64>) {
    let norm = v.norm();
    if norm == 0.0 {
        return;
    }
    let mut k = 0;
    let mut best = -1.0;
    for (idx, z) in v.iter().enumerate() {
        let m = z.norm();
        // first index wins near-ties so conjugate vectors pick the same pivot
        if m > best * (1.0 + 1e-12) {
            best = m;
            k = idx;
        }
    }
    let pivot = v[k];
    let phase = pivot.conj() / pivot.norm();
    v.apply(|z| *z = *z * phase / norm);
    v[k] = C64::new(v[k].re, 0.0);
}

pub fn to_complex(m: &DMatrix<f64>) -> DMatrix<C64> {
    m.map(|x| C64::new(x, 0.0))
}

/// Moore-Penrose inverse through the SVD, with relative cut-off
/// `max(rows, cols) * eps * sigma_max`. Also returns the numerical rank.
pub fn pinv_complex(m: &DMatrix<C64>) -> (DMatrix<C64>, usize) {
    let (r, c) = m.shape();
    let svd = SVD::new(m.clone(), true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let tol = r.max(c) as f64 * f64::EPSILON * smax;
    let rank = svd.singular_values.iter().filter(|s| **s > tol).count();
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v_t requested");
    let mut out = DMatrix::zeros(c, r);
    for (k, s) in svd.singular_values.iter().enumerate() {
        if *s > tol {
            let vk = vt.row(k).adjoint();
            let uk = u.column(k).adjoint();
            out += (vk * uk) / C64::new(*s, 0.0);
        }
    }
    (out, rank)
}

/// Real-matrix Moore-Penrose inverse with the same cut-off rule.
pub fn pinv_real(m: &DMatrix<f64>) -> (DMatrix<f64>, usize) {
    let (r, c) = m.shape();
    let svd = SVD::new(m.clone(), true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let tol = r.max(c) as f64 * f64::EPSILON * smax;
    let rank = svd.singular_values.iter().filter(|s| **s > tol).count();
    let pinv = svd.pseudo_inverse(tol).expect("u and v_t were computed");
    (pinv, rank)
}

/// Kronecker product `b ⊗ a` of two column vectors, i.e. `vec(a b^T)`.
pub fn kron_vec(b: &DVector<C64>, a: &DVector<C64>) -> DVector<C64> {
    let p = a.len();
    DVector::from_fn(b.len() * p, |k, _| b[k / p] * a[k % p])
}

/// One eigenpair of a real square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: C64,
    /// Unit-norm right eigenvector, largest-modulus entry real positive.
    pub vector: DVector<C64>,
}

/// Right eigenpairs of a real (generally nonsymmetric) square matrix.
///
/// Eigenvalues with `|Im| <= tol * (1 + |λ|)` are treated as real and get
/// real eigenvectors. Complex eigenvalues are emitted in exact conjugate
/// pairs with conjugate eigenvectors. Output is sorted by (real part,
/// imaginary part) descending. Errors when two eigenvalues are closer than
/// `1e-8` times the spectral radius.
pub fn real_eigen(m: &DMatrix<f64>, tol: f64) -> Result<Vec<EigenPair>> {
    let d = m.nrows();
    assert_eq!(d, m.ncols(), "eigenproblem needs a square matrix");
    let raw = Schur::new(m.clone()).complex_eigenvalues();
    let mut values: Vec<C64> = Vec::with_capacity(d);
    let mut used = alloc::vec![false; d];
    for k in 0..d {
        if used[k] {
            continue;
        }
        let z = raw[k];
        used[k] = true;
        if z.im.abs() <= tol * (1.0 + z.norm()) {
            values.push(C64::new(z.re, 0.0));
            continue;
        }
        // Schur of a real matrix yields exact conjugates; match the nearest.
        let partner = (0..d)
            .filter(|&j| !used[j])
            .min_by(|&a, &b| (raw[a] - z.conj()).norm().total_cmp(&(raw[b] - z.conj()).norm()));
        match partner {
            Some(j) if (raw[j] - z.conj()).norm() <= tol * (1.0 + z.norm()) => {
                used[j] = true;
                let up = if z.im > 0.0 { z } else { z.conj() };
                values.push(up);
                values.push(up.conj());
            }
            _ => return Err(Error::UnmatchedComplexEigenvalue { index: k }),
        }
    }
    values.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    check_distinct(&values)?;

    let mut pairs: Vec<EigenPair> = Vec::with_capacity(d);
    for value in values.iter() {
        let vector = if value.im == 0.0 {
            let shifted = m - DMatrix::identity(d, d) * value.re;
            let mut v = to_complex_vec(&null_vector_real(&shifted));
            normalize_phase(&mut v);
            v.apply(|z| *z = C64::new(z.re, 0.0));
            v
        } else if value.im < 0.0 {
            let partner = pairs
                .iter()
                .find(|p| p.value == value.conj())
                .expect("upper member of a conjugate pair sorts first");
            partner.vector.map(|z| z.conj())
        } else {
            let shifted = to_complex(m) - DMatrix::<C64>::identity(d, d) * *value;
            let mut v = null_vector_complex(&shifted);
            normalize_phase(&mut v);
            v
        };
        pairs.push(EigenPair { value: *value, vector });
    }
    Ok(pairs)
}

fn check_distinct(values: &[C64]) -> Result<()> {
    let radius = values.iter().map(|z| z.norm()).fold(0.0, f64::max);
    for a in 0..values.len() {
        for b in a + 1..values.len() {
            let gap = (values[a] - values[b]).norm();
            if gap <= 1e-8 * radius || radius == 0.0 {
                return Err(Error::EigenvalueCollision {
                    first: a,
                    second: b,
                    gap,
                });
            }
        }
    }
    Ok(())
}

fn to_complex_vec(v: &DVector<f64>) -> DVector<C64> {
    v.map(|x| C64::new(x, 0.0))
}

/// Right singular vector for the smallest singular value.
fn null_vector_real(m: &DMatrix<f64>) -> DVector<f64> {
    let svd = SVD::new(m.clone(), false, true);
    let k = argmin(svd.singular_values.as_slice());
    svd.v_t.expect("v_t requested").row(k).transpose()
}

fn null_vector_complex(m: &DMatrix<C64>) -> DVector<C64> {
    let svd = SVD::new(m.clone(), false, true);
    let k = argmin(svd.singular_values.as_slice());
    svd.v_t.expect("v_t requested").row(k).adjoint()
}

fn argmin(xs: &[f64]) -> usize {
    let mut k = 0;
    for (i, x) in xs.iter().enumerate() {
        if *x < xs[k] {
            k = i;
        }
    }
    k
}

/// Largest absolute deviation of `m^T m` from the identity.
pub fn orthonormality_defect(m: &DMatrix<f64>) -> f64 {
    let g = m.transpose() * m;
    (g - DMatrix::identity(m.ncols(), m.ncols())).amax()
}
