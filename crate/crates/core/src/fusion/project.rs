//! Best rank-r approximation: exact (QR + SVD) and randomized range finder.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::Real;

/// How the rank-r projection is computed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Projector {
    /// Thin QR followed by an SVD of the triangular factor.
    Exact,
    /// Gaussian sketch with power (subspace) iterations.
    ///
    /// At least `power_iters` iterations run; further iterations continue
    /// until the rank-r approximation changes by less than `tol` (relative),
    /// or `max_iters` is reached.
    Randomized {
        oversample: usize,
        power_iters: usize,
        max_iters: usize,
        tol: f64,
    },
}

impl Default for Projector {
    fn default() -> Self {
        Projector::Randomized { oversample: 10, power_iters: 2, max_iters: 300, tol: 1e-13 }
    }
}

/// Top-`r` factors `(U_r * diag(s_r), V_r^T)` of a small dense SVD.
fn truncated_factors<T: Real>(m: DMatrix<T>, r: usize) -> (DMatrix<T>, DMatrix<T>) {
    let (u, s, v) = crate::linalg::thin_svd(&m);
    let r = r.min(s.len());
    let mut us = DMatrix::<T>::zeros(u.nrows(), r);
    let mut vt = DMatrix::<T>::zeros(r, v.nrows());
    for k in 0..r {
        us.set_column(k, &(u.column(k) * s[k]));
        vt.set_row(k, &v.column(k).transpose());
    }
    (us, vt)
}

/// Exact best rank-`r` approximation; `r` is clamped to `min(n, J)`.
pub fn rank_r_exact<T: Real>(m: &DMatrix<T>, r: usize) -> DMatrix<T> {
    let (n, j) = m.shape();
    let r = r.max(1).min(n.min(j));
    if n >= j {
        let qr = m.clone().qr();
        let (q, rf) = (qr.q(), qr.r());
        let (us, vt) = truncated_factors(rf, r);
        q * us * vt
    } else {
        let (us, vt) = truncated_factors(m.clone(), r);
        us * vt
    }
}

fn orthonormal_basis<T: Real>(y: DMatrix<T>) -> DMatrix<T> {
    y.qr().q()
}

/// Randomized best rank-`r` approximation.
pub fn rank_r_randomized<T: Real, R: Rng>(
    m: &DMatrix<T>,
    r: usize,
    oversample: usize,
    power_iters: usize,
    max_iters: usize,
    tol: f64,
    rng: &mut R,
) -> DMatrix<T> {
    let (n, j) = m.shape();
    let r = r.max(1).min(n.min(j));
    let l = (r + oversample).min(n.min(j));
    if l == n.min(j) {
        // The sketch would span the full column space.
        return rank_r_exact(m, r);
    }
    let omega = DMatrix::<T>::from_fn(j, l, |_, _| T::of(rng.sample::<f64, _>(StandardNormal)));
    let mut q = orthonormal_basis(m * omega);
    let approx = |q: &DMatrix<T>| {
        let b = q.transpose() * m;
        let (us, vt) = truncated_factors(b, r);
        q * us * vt
    };
    for _ in 0..power_iters {
        let z = orthonormal_basis(m.transpose() * &q);
        q = orthonormal_basis(m * z);
    }
    let mut current = approx(&q);
    let tol = T::of(tol);
    for _ in power_iters..max_iters {
        let z = orthonormal_basis(m.transpose() * &q);
        q = orthonormal_basis(m * z);
        let next = approx(&q);
        let scale = next.norm();
        let delta = (&next - &current).norm();
        current = next;
        if scale == T::zero() || delta <= tol * scale {
            break;
        }
    }
    current
}

/// Best rank-`r` approximation in Frobenius norm with the chosen projector.
pub fn rank_r_project<T: Real, R: Rng>(m: &DMatrix<T>, r: usize, projector: &Projector, rng: &mut R) -> DMatrix<T> {
    match *projector {
        Projector::Exact => rank_r_exact(m, r),
        Projector::Randomized { oversample, power_iters, max_iters, tol } => {
            rank_r_randomized(m, r, oversample, power_iters, max_iters, tol, rng)
        }
    }
}

/// Keeps the `k` largest-magnitude entries (ties: smaller column-major index)
/// and zeroes the rest.
pub fn hard_threshold_card<T: Real>(m: &DMatrix<T>, k: usize) -> DMatrix<T> {
    let vals = m.as_slice();
    let mut out = DMatrix::<T>::zeros(m.nrows(), m.ncols());
    if k == 0 {
        return out;
    }
    if k >= vals.len() {
        return m.clone();
    }
    let mut idx: Vec<usize> = (0..vals.len()).collect();
    let cmp = |a: &usize, b: &usize| {
        vals[*b]
            .abs()
            .partial_cmp(&vals[*a].abs())
            .unwrap()
            .then(a.cmp(b))
    };
    idx.select_nth_unstable_by(k - 1, cmp);
    let dst = out.as_mut_slice();
    for &i in &idx[..k] {
        dst[i] = vals[i];
    }
    out
}
