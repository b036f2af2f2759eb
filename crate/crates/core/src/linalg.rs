//! Dense helpers: generic constructions plus float-only spectral routines.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::scalar::{Field, C64};

pub type Mat<S> = DMatrix<S>;
pub type Vector<S> = DVector<S>;

/// Conjugate transpose.
pub fn adjoint<S: Field>(m: &Mat<S>) -> Mat<S> {
    m.transpose().map(|x| x.conj())
}

pub fn conj_vec<S: Field>(v: &Vector<S>) -> Vector<S> {
    v.map(|x| x.conj())
}

/// `m^{⊗n}`; the empty power is the 1×1 identity.
pub fn kron_power<S: Field>(m: &Mat<S>, n: usize) -> Mat<S> {
    let mut acc = Mat::<S>::identity(1, 1);
    for _ in 0..n {
        acc = acc.kronecker(m);
    }
    acc
}

pub fn kron_vecs<S: Field>(legs: &[Vector<S>]) -> Vector<S> {
    let mut acc = Vector::<S>::from_element(1, S::one());
    for leg in legs {
        acc = acc.kronecker(leg);
    }
    acc
}

pub fn block_diag<S: Field>(blocks: &[Mat<S>]) -> Mat<S> {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Mat::<S>::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), (b.nrows(), b.ncols())).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

pub fn max_abs_diff<S: Field>(a: &Mat<S>, b: &Mat<S>) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch");
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x.clone() - y.clone()).abs_f64())
        .fold(0.0, f64::max)
}

pub fn max_abs<S: Field>(a: &Mat<S>) -> f64 {
    a.iter().map(|x| x.abs_f64()).fold(0.0, f64::max)
}

pub fn vec_max_abs_diff<S: Field>(a: &Vector<S>, b: &Vector<S>) -> f64 {
    assert_eq!(a.len(), b.len(), "length mismatch");
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x.clone() - y.clone()).abs_f64())
        .fold(0.0, f64::max)
}

/// `u* G v`.
pub fn sesquilinear<S: Field>(u: &Vector<S>, g: &Mat<S>, v: &Vector<S>) -> S {
    let gv = g * v;
    let mut acc = S::zero();
    for (a, b) in u.iter().zip(gv.iter()) {
        acc += a.conj() * b.clone();
    }
    acc
}

/// Pivots of an LDL* factorisation without pivoting; a Hermitian matrix is positive
/// definite exactly when every pivot is real and positive.
pub fn ldl_pivots<S: Field>(m: &Mat<S>) -> Vec<S> {
    let n = m.nrows();
    let mut a = m.clone();
    let mut pivots = Vec::with_capacity(n);
    for k in 0..n {
        let p = a[(k, k)].clone();
        pivots.push(p.clone());
        if p.is_zero() {
            break;
        }
        for i in k + 1..n {
            let factor = a[(i, k)].clone() / p.clone();
            if factor.is_zero() {
                continue;
            }
            for j in k + 1..n {
                let t = factor.clone() * a[(k, j)].clone();
                a[(i, j)] -= t;
            }
        }
    }
    pivots
}

pub fn to_c64_mat<S: Field>(m: &Mat<S>) -> Mat<C64> {
    m.map(|x| x.to_c64())
}

pub fn hermitian_part(m: &Mat<C64>) -> Mat<C64> {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// Lower-triangular `L` with `L L* = m`.
pub fn cholesky(m: &Mat<C64>) -> Result<Mat<C64>> {
    Cholesky::new(hermitian_part(m))
        .map(|c| c.l())
        .ok_or_else(|| Error::Numerical("Cholesky factorisation failed: matrix not positive definite".into()))
}

/// Ascending eigenvalues of the Hermitian part of `m`.
pub fn hermitian_eigenvalues(m: &Mat<C64>) -> Vec<f64> {
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| a.total_cmp(b));
    vals
}

pub fn lower_inverse(l: &Mat<C64>) -> Result<Mat<C64>> {
    let n = l.nrows();
    l.solve_lower_triangular(&Mat::<C64>::identity(n, n))
        .ok_or_else(|| Error::Numerical("singular triangular factor".into()))
}

/// Ascending eigenvalues of the pencil `a v = μ b v` with `b` positive definite and
/// `a` self-adjoint with respect to `b`'s geometry after symmetrisation.
pub fn generalized_eigenvalues(a: &Mat<C64>, b: &Mat<C64>) -> Result<Vec<f64>> {
    let l = cholesky(b)?;
    let li = lower_inverse(&l)?;
    Ok(hermitian_eigenvalues(&(&li * a * li.adjoint())))
}

pub fn spectral_norm(m: &Mat<C64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

/// Norm of `x: (in, G_in) → (out, G_out)` given Cholesky factors of both Grams.
pub fn operator_norm(x: &Mat<C64>, l_in: &Mat<C64>, l_out: &Mat<C64>) -> Result<f64> {
    let li = lower_inverse(l_in)?;
    Ok(spectral_norm(&(l_out.adjoint() * x * li.adjoint())))
}
