//! Dense least squares via Householder QR.

use crate::scalar::Scalar;

/// Solves `min ‖A x − b‖²` for a row-major `rows × cols` matrix `a`.
///
/// Returns `None` when `A` is numerically rank deficient (a diagonal entry of
/// `R` falls below `rcond` times the largest one) or `rows < cols`.
pub fn lstsq<T: Scalar>(a: &[T], rows: usize, cols: usize, b: &[T], rcond: T) -> Option<Vec<T>> {
    assert_eq!(a.len(), rows * cols);
    assert_eq!(b.len(), rows);
    if rows < cols || cols == 0 {
        return None;
    }
    // column-major working copy
    let mut q: Vec<Vec<T>> = (0..cols)
        .map(|j| (0..rows).map(|i| a[i * cols + j]).collect())
        .collect();
    let mut rhs = b.to_vec();
    let mut diag = vec![T::zero(); cols];

    for j in 0..cols {
        let norm = q[j][j..].iter().fold(T::zero(), |s, &v| s + v * v).sqrt();
        if norm == T::zero() {
            diag[j] = T::zero();
            continue;
        }
        let alpha = if q[j][j] > T::zero() { -norm } else { norm };
        // v = x - alpha e1, stored in place of column j
        q[j][j] = q[j][j] - alpha;
        let vnorm2 = q[j][j..].iter().fold(T::zero(), |s, &v| s + v * v);
        diag[j] = alpha;
        if vnorm2 == T::zero() {
            continue;
        }
        let (done, rest) = q.split_at_mut(j + 1);
        let v = &done[j][j..];
        for col in rest.iter_mut() {
            let dot = v.iter().zip(&col[j..]).fold(T::zero(), |s, (&a, &b)| s + a * b);
            let f = (dot + dot) / vnorm2;
            for (c, &vi) in col[j..].iter_mut().zip(v) {
                *c = *c - f * vi;
            }
        }
        let dot = v.iter().zip(&rhs[j..]).fold(T::zero(), |s, (&a, &b)| s + a * b);
        let f = (dot + dot) / vnorm2;
        for (r, &vi) in rhs[j..].iter_mut().zip(v) {
            *r = *r - f * vi;
        }
    }

    let max_diag = diag.iter().fold(T::zero(), |m, d| m.max(d.abs()));
    if max_diag == T::zero() || diag.iter().any(|d| d.abs() <= rcond * max_diag) {
        return None;
    }
    // back substitution on R (upper triangle lives in q[col][row] for row < col)
    let mut x = vec![T::zero(); cols];
    for i in (0..cols).rev() {
        let mut s = rhs[i];
        for j in i + 1..cols {
            s = s - q[j][i] * x[j];
        }
        x[i] = s / diag[i];
    }
    Some(x)
}
