//! Dense decompositions computed in `f64` through faer.

use faer::Mat;
use nalgebra::{DMatrix, DVector};

use crate::Real;

fn to_faer<T: Real>(m: &DMatrix<T>) -> Mat<f64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)].as_f64())
}

fn from_faer<T: Real>(m: faer::MatRef<'_, f64>) -> DMatrix<T> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| T::of(m[(i, j)]))
}

/// Thin SVD `m = U diag(s) V^T` with `s` in descending order.
///
/// Returns `(U, s, V)`; `U` is `n x q`, `V` is `J x q` with `q = min(n, J)`.
pub fn thin_svd<T: Real>(m: &DMatrix<T>) -> (DMatrix<T>, DVector<T>, DMatrix<T>) {
    let q = m.nrows().min(m.ncols());
    if q == 0 {
        return (DMatrix::zeros(m.nrows(), 0), DVector::zeros(0), DMatrix::zeros(m.ncols(), 0));
    }
    let svd = to_faer(m).thin_svd().expect("svd of a finite matrix");
    let s = svd.S().column_vector();
    let mut order: Vec<usize> = (0..q).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));
    let (u, v) = (svd.U(), svd.V());
    let u = DMatrix::from_fn(m.nrows(), q, |i, k| T::of(u[(i, order[k])]));
    let v = DMatrix::from_fn(m.ncols(), q, |i, k| T::of(v[(i, order[k])]));
    let s = DVector::from_fn(q, |k, _| T::of(s[order[k]]));
    (u, s, v)
}

/// Eigendecomposition of a symmetric matrix, eigenvalues descending.
///
/// Columns of the returned matrix are the matching unit eigenvectors.
pub fn symmetric_eigen<T: Real>(m: &DMatrix<T>) -> (DVector<T>, DMatrix<T>) {
    let n = m.nrows();
    let evd = to_faer(m)
        .self_adjoint_eigen(faer::Side::Lower)
        .expect("eigendecomposition of a finite matrix");
    let w = evd.S().column_vector();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| w[b].total_cmp(&w[a]).then(a.cmp(&b)));
    let vecs = from_faer::<T>(evd.U());
    let vals = DVector::from_fn(n, |k, _| T::of(w[order[k]]));
    let vecs = DMatrix::from_fn(n, n, |i, k| vecs[(i, order[k])]);
    (vals, vecs)
}
