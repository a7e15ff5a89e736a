//! Dense Hermitian helpers on top of nalgebra.

use std::cmp::Ordering;

use nalgebra::{Cholesky, Complex, ComplexField, DVector, Dyn};

use crate::error::{Error, Result};
use crate::scalar::{cr, CMat, Real};

/// `(M + M^H) / 2`.
pub fn hermitian_part<T: Real>(m: &CMat<T>) -> CMat<T> {
    (m + m.adjoint()) * cr(T::lit(0.5))
}

/// Largest entrywise deviation from Hermitian symmetry.
pub fn hermitian_defect<T: Real>(m: &CMat<T>) -> T {
    (m - m.adjoint())
        .iter()
        .fold(T::zero(), |acc, z| acc.max(z.modulus()))
}

/// Cholesky factorization of the Hermitian part of `m`, or `None` when it is
/// not positive definite.
///
/// nalgebra's complex factorization takes complex square roots of the pivots
/// and therefore never fails on its own; a pivot is accepted only if its root
/// is real and positive.
pub fn hpd_cholesky<T: Real>(m: &CMat<T>) -> Option<Cholesky<Complex<T>, Dyn>> {
    let chol = hermitian_part(m).cholesky()?;
    let l = chol.l_dirty();
    let ok = (0..m.nrows()).all(|i| {
        let d = l[(i, i)];
        d.re > T::zero() && d.re.is_finite() && d.im.abs() <= d.re * T::lit(1e-6)
    });
    ok.then_some(chol)
}

/// Inverse of a Hermitian positive-definite matrix via Cholesky.
pub fn hpd_inverse<T: Real>(m: &CMat<T>, context: &'static str) -> Result<CMat<T>> {
    hpd_cholesky(m)
        .map(|c| c.inverse())
        .ok_or(Error::NotPositiveDefinite(context))
}

/// Solves `M X = B` for Hermitian positive-definite `M`.
pub fn hpd_solve<T: Real>(m: &CMat<T>, b: &CMat<T>, context: &'static str) -> Result<CMat<T>> {
    hpd_cholesky(m)
        .map(|c| c.solve(b))
        .ok_or(Error::NotPositiveDefinite(context))
}

/// Natural log-determinant of a Hermitian positive-definite matrix.
pub fn hpd_ln_det<T: Real>(m: &CMat<T>, context: &'static str) -> Result<T> {
    let chol = hpd_cholesky(m).ok_or(Error::NotPositiveDefinite(context))?;
    let l = chol.l_dirty();
    Ok((0..m.nrows()).fold(T::zero(), |acc, i| acc + l[(i, i)].re.ln()) * T::lit(2.0))
}

/// `Re tr(A B)` without forming the product.
pub fn re_trace_product<T: Real>(a: &CMat<T>, b: &CMat<T>) -> T {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut acc = T::zero();
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            let x = a[(i, j)];
            let y = b[(j, i)];
            acc += x.re * y.re - x.im * y.im;
        }
    }
    acc
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues sorted in
/// descending order.
#[derive(Debug, Clone)]
pub struct HermitianEigen<T: Real> {
    pub values: DVector<T>,
    /// Columns are the unit-norm eigenvectors matching `values`.
    pub vectors: CMat<T>,
}

impl<T: Real> HermitianEigen<T> {
    pub fn new(m: &CMat<T>) -> Self {
        let eig = hermitian_part(m).symmetric_eigen();
        let n = eig.eigenvalues.len();
        let mut order: Vec<usize> = (0..n).collect();
        // Descending eigenvalue, ties broken lexicographically on the
        // eigenvector entries so the choice is reproducible.
        order.sort_by(|&a, &b| {
            let (la, lb) = (eig.eigenvalues[a], eig.eigenvalues[b]);
            match lb.partial_cmp(&la).unwrap_or(Ordering::Equal) {
                Ordering::Equal => lex_cmp(
                    eig.eigenvectors.column(a).iter(),
                    eig.eigenvectors.column(b).iter(),
                ),
                ord => ord,
            }
        });
        let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
        let mut vectors = CMat::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            vectors.set_column(dst, &eig.eigenvectors.column(src));
        }
        Self { values, vectors }
    }

    pub fn max(&self) -> T {
        self.values[0]
    }

    pub fn min(&self) -> T {
        self.values[self.values.len() - 1]
    }

    pub fn top_vector(&self) -> DVector<Complex<T>> {
        self.vectors.column(0).into_owned()
    }
}

fn lex_cmp<'a, T: Real>(
    a: impl Iterator<Item = &'a Complex<T>>,
    b: impl Iterator<Item = &'a Complex<T>>,
) -> Ordering {
    for (x, y) in a.zip(b) {
        let ord = x
            .re
            .partial_cmp(&y.re)
            .unwrap_or(Ordering::Equal)
            .then(x.im.partial_cmp(&y.im).unwrap_or(Ordering::Equal));
        if ord != Ordering::Equal {
            return ord;
        }
    }
    Ordering::Equal
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue<T: Real>(m: &CMat<T>) -> T {
    hermitian_part(m)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(T::max_value().unwrap(), |acc, x| acc.min(x))
}

/// `‖V‖_* − ‖V‖_2` for a Hermitian matrix: zero iff `V` has rank at most one
/// (for PSD `V`).
pub fn rank_one_violation<T: Real>(v: &CMat<T>) -> T {
    let ev = hermitian_part(v).symmetric_eigenvalues();
    let nuclear = ev.iter().fold(T::zero(), |acc, x| acc + x.abs());
    let spectral = ev.iter().fold(T::zero(), |acc, x| acc.max(x.abs()));
    nuclear - spectral
}

/// Singular values sorted in descending order.
pub fn singular_values<T: Real>(m: &CMat<T>) -> Vec<T> {
    let mut sv: Vec<T> = m.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
    sv
}

/// Squared Frobenius norm.
pub fn frobenius_sq<T: Real>(m: &CMat<T>) -> T {
    m.iter().fold(T::zero(), |acc, z| acc + z.modulus_squared())
}
