//! Sorted decompositions on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::scalar::Real;

/// SVD `m = u · diag(s) · vᵀ` with singular values in descending order.
pub(crate) fn svd_desc<T: Real>(m: &DMatrix<T>) -> (DMatrix<T>, DVector<T>, DMatrix<T>) {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let k = svd.singular_values.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let s = DVector::from_iterator(k, order.iter().map(|&i| svd.singular_values[i]));
    let u_sorted = DMatrix::from_fn(u.nrows(), k, |r, c| u[(r, order[c])]);
    let v_sorted = DMatrix::from_fn(v_t.ncols(), k, |r, c| v_t[(order[c], r)]);
    (u_sorted, s, v_sorted)
}

/// Eigendecomposition of the symmetric part of `m`, eigenvalues descending.
pub(crate) fn sym_eigen_desc<T: Real>(m: &DMatrix<T>) -> (DVector<T>, DMatrix<T>) {
    let sym = symmetric_part(m);
    let eig = sym.symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let vals = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vecs = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    sign_fix_columns(&mut vecs);
    (vals, vecs)
}

pub(crate) fn symmetric_part<T: Real>(m: &DMatrix<T>) -> DMatrix<T> {
    (m + m.transpose()) * crate::scalar::lit::<T>(0.5)
}

pub(crate) fn skew_part<T: Real>(m: &DMatrix<T>) -> DMatrix<T> {
    (m - m.transpose()) * crate::scalar::lit::<T>(0.5)
}

/// Makes the first non-negligible entry of every column positive.
pub(crate) fn sign_fix_columns<T: Real>(m: &mut DMatrix<T>) {
    let tiny = T::default_epsilon() * crate::scalar::lit(1.0e3);
    for mut col in m.column_iter_mut() {
        if let Some(first) = col.iter().find(|x| x.abs() > tiny).copied() {
            if first < T::zero() {
                col.neg_mut();
            }
        }
    }
}

/// Thin orthonormalization by polar factor: returns `u·vᵀ` of the SVD.
pub(crate) fn polar_orthonormal<T: Real>(m: &DMatrix<T>) -> (DMatrix<T>, DVector<T>) {
    let (u, s, v) = svd_desc(m);
    (&u * v.transpose(), s)
}

pub(crate) fn frobenius_dot<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>) -> T {
    a.iter().zip(b.iter()).fold(T::zero(), |acc, (x, y)| acc + *x * *y)
}
