//! Dense linear algebra kernels (Householder QR, Jacobi SVD and symmetric
//! eigendecomposition, Cholesky) written against [`Scalar`] so that every
//! routine runs in `f32` or `f64`.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::scalar::Scalar;

const MAX_SWEEPS: usize = 80;

/// Thin singular value decomposition `A = U diag(s) Vᵀ`, singular values
/// sorted in decreasing order.
#[derive(Debug, Clone)]
pub struct Svd<T> {
    pub u: Array2<T>,
    pub s: Array1<T>,
    pub v: Array2<T>,
}

pub fn dot<T: Scalar>(a: ArrayView1<T>, b: ArrayView1<T>) -> T {
    a.iter().zip(b.iter()).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

pub fn norm2<T: Scalar>(a: ArrayView1<T>) -> T {
    // scaled to avoid overflow on large entries
    let scale = a.iter().fold(T::zero(), |m, &x| m.max(x.abs()));
    if scale == T::zero() {
        return T::zero();
    }
    let ss = a.iter().fold(T::zero(), |acc, &x| {
        let y = x / scale;
        acc + y * y
    });
    scale * ss.sqrt()
}

/// `Aᵀ B` without materialising the transpose.
pub fn at_b<T: Scalar>(a: ArrayView2<T>, b: ArrayView2<T>) -> Array2<T> {
    assert_eq!(a.nrows(), b.nrows());
    let mut out = Array2::zeros((a.ncols(), b.ncols()));
    for i in 0..a.ncols() {
        let ai = a.column(i);
        for j in 0..b.ncols() {
            out[(i, j)] = dot(ai, b.column(j));
        }
    }
    out
}

/// One-sided (Hestenes) Jacobi rotations applied to the columns of `work`
/// until they are mutually orthogonal. Returns the accumulated rotation.
fn orthogonalize_columns<T: Scalar>(work: &mut Array2<T>) -> Array2<T> {
    let n = work.ncols();
    let mut v = Array2::<T>::eye(n);
    let eps = T::epsilon();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let (alpha, beta, gamma) = {
                    let cp = work.column(p);
                    let cq = work.column(q);
                    (dot(cp, cp), dot(cq, cq), dot(cp, cq))
                };
                if gamma == T::zero() || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let two = T::lit(2.0);
                let zeta = (beta - alpha) / (two * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let sn = c * t;
                rotate_columns(work, p, q, c, sn);
                rotate_columns(&mut v, p, q, c, sn);
            }
        }
        if !rotated {
            break;
        }
    }
    v
}

fn rotate_columns<T: Scalar>(m: &mut Array2<T>, p: usize, q: usize, c: T, sn: T) {
    for r in 0..m.nrows() {
        let xp = m[(r, p)];
        let xq = m[(r, q)];
        m[(r, p)] = c * xp - sn * xq;
        m[(r, q)] = sn * xp + c * xq;
    }
}

/// Thin SVD by one-sided Jacobi. Works for any shape.
pub fn svd<T: Scalar>(a: ArrayView2<T>) -> Svd<T> {
    let (m, n) = a.dim();
    if m < n {
        let t = svd(a.t());
        return Svd { u: t.v, s: t.s, v: t.u };
    }
    let mut work = a.to_owned();
    let v = orthogonalize_columns(&mut work);
    let norms: Vec<T> = (0..n).map(|j| norm2(work.column(j))).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap().then(i.cmp(&j)));
    let mut u = Array2::zeros((m, n));
    let mut vs = Array2::zeros((n, n));
    let mut sv = Array1::zeros(n);
    for (dst, &src) in order.iter().enumerate() {
        let sigma = norms[src];
        sv[dst] = sigma;
        if sigma > T::zero() {
            u.column_mut(dst).assign(&work.column(src).mapv(|x| x / sigma));
        }
        vs.column_mut(dst).assign(&v.column(src));
    }
    Svd { u, s: sv, v: vs }
}

pub fn singular_values<T: Scalar>(a: ArrayView2<T>) -> Array1<T> {
    let (m, n) = a.dim();
    let mut work = if m >= n { a.to_owned() } else { a.t().to_owned() };
    orthogonalize_columns(&mut work);
    let mut s: Vec<T> = (0..work.ncols()).map(|j| norm2(work.column(j))).collect();
    s.sort_by(|x, y| y.partial_cmp(x).unwrap());
    Array1::from(s)
}

/// Numerical rank with a cutoff relative to the largest singular value.
pub fn rank<T: Scalar>(a: ArrayView2<T>, rel_tol: T) -> usize {
    let s = singular_values(a);
    match s.first() {
        Some(&top) if top > T::zero() => s.iter().filter(|&&x| x > rel_tol * top).count(),
        _ => 0,
    }
}

/// Householder QR of a tall matrix, returning thin `Q` (m×n) and `R` (n×n).
pub fn qr<T: Scalar>(a: ArrayView2<T>) -> (Array2<T>, Array2<T>) {
    let (m, n) = a.dim();
    assert!(m >= n, "qr expects a tall matrix");
    let mut r = a.to_owned();
    let mut reflectors: Vec<Array1<T>> = Vec::with_capacity(n);
    for k in 0..n {
        let x = r.slice(s![k.., k]).to_owned();
        let alpha = norm2(x.view());
        let mut v = x;
        if alpha == T::zero() {
            reflectors.push(v.mapv(|_| T::zero()));
            continue;
        }
        let sign = if v[0] >= T::zero() { T::one() } else { -T::one() };
        v[0] = v[0] + sign * alpha;
        let vn = norm2(v.view());
        v.mapv_inplace(|e| e / vn);
        for j in k..n {
            let proj = dot(v.view(), r.slice(s![k.., j]));
            let two = T::lit(2.0);
            for (i, vi) in v.iter().enumerate() {
                r[(k + i, j)] = r[(k + i, j)] - two * proj * *vi;
            }
        }
        reflectors.push(v);
    }
    let mut q = Array2::<T>::zeros((m, n));
    for j in 0..n {
        q[(j, j)] = T::one();
    }
    for k in (0..n).rev() {
        let v = &reflectors[k];
        for j in 0..n {
            let proj = dot(v.view(), q.slice(s![k.., j]));
            if proj == T::zero() {
                continue;
            }
            let two = T::lit(2.0);
            for (i, vi) in v.iter().enumerate() {
                q[(k + i, j)] = q[(k + i, j)] - two * proj * *vi;
            }
        }
    }
    let r = r.slice(s![..n, ..]).to_owned();
    let mut r_upper = Array2::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            r_upper[(i, j)] = r[(i, j)];
        }
    }
    (q, r_upper)
}

/// Orthonormal basis of the column span of `a` together with the retained
/// singular values. Directions whose singular value falls below
/// `rel_tol · σ_max` are discarded.
///
/// The basis is orthonormal to working precision even when the retained
/// singular values span many orders of magnitude: `Q` comes from Householder
/// QR and the rotation applied to it is a product of Jacobi rotations.
pub fn orthonormal_basis<T: Scalar>(a: ArrayView2<T>, rel_tol: T) -> (Array2<T>, Array1<T>) {
    let (m, n) = a.dim();
    let (q, r) = if m >= n {
        qr(a)
    } else {
        // more columns than rows: the span is at most m-dimensional
        let s = svd(a);
        return truncate_basis(s.u, s.s, rel_tol);
    };
    // left singular vectors of R are the accumulated rotations of Rᵀ
    let mut rt = r.t().to_owned();
    let rot = orthogonalize_columns(&mut rt);
    let norms: Vec<T> = (0..n).map(|j| norm2(rt.column(j))).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap().then(i.cmp(&j)));
    let mut left = Array2::zeros((n, n));
    let mut sv = Array1::zeros(n);
    for (dst, &src) in order.iter().enumerate() {
        left.column_mut(dst).assign(&rot.column(src));
        sv[dst] = norms[src];
    }
    let u = q.dot(&left);
    truncate_basis(u, sv, rel_tol)
}

fn truncate_basis<T: Scalar>(u: Array2<T>, s: Array1<T>, rel_tol: T) -> (Array2<T>, Array1<T>) {
    let top = s.first().copied().unwrap_or(T::zero());
    let keep = if top > T::zero() {
        s.iter().filter(|&&x| x > rel_tol * top).count()
    } else {
        0
    };
    (u.slice(s![.., ..keep]).to_owned(), s.slice(s![..keep]).to_owned())
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi. Eigenvalues are
/// returned in decreasing order with eigenvectors as columns.
pub fn symmetric_eigen<T: Scalar>(a: ArrayView2<T>) -> (Array1<T>, Array2<T>) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "symmetric_eigen expects a square matrix");
    let mut m = a.to_owned();
    let mut v = Array2::<T>::eye(n);
    let eps = T::epsilon();
    for _ in 0..MAX_SWEEPS {
        let off: T = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .fold(T::zero(), |acc, (i, j)| acc + m[(i, j)] * m[(i, j)]);
        let diag: T = (0..n).fold(T::zero(), |acc, i| acc + m[(i, i)] * m[(i, i)]);
        if off <= eps * eps * diag || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (T::one() + theta * theta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - sn * mkq;
                    m[(k, q)] = sn * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - sn * mqk;
                    m[(q, k)] = sn * mpk + c * mqk;
                }
                rotate_columns(&mut v, p, q, c, sn);
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].partial_cmp(&m[(i, i)]).unwrap().then(i.cmp(&j)));
    let values = Array1::from_iter(order.iter().map(|&i| m[(i, i)]));
    let vectors = v.select(Axis(1), &order);
    (values, vectors)
}

/// Lower Cholesky factor, or `None` when the matrix is not numerically
/// positive definite.
pub fn cholesky<T: Scalar>(a: ArrayView2<T>) -> Option<Array2<T>> {
    let n = a.nrows();
    let mut l = Array2::<T>::zeros((n, n));
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d = d - l[(j, k)] * l[(j, k)];
        }
        if !(d > T::zero()) || !d.is_finite() {
            return None;
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in (j + 1)..n {
            let mut x = a[(i, j)];
            for k in 0..j {
                x = x - l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = x / djj;
        }
    }
    Some(l)
}

/// Solves `L y = b` for lower-triangular `L`.
pub fn forward_substitute<T: Scalar>(l: ArrayView2<T>, b: ArrayView1<T>) -> Array1<T> {
    let n = l.nrows();
    let mut y = Array1::zeros(n);
    for i in 0..n {
        let mut x = b[i];
        for k in 0..i {
            x = x - l[(i, k)] * y[k];
        }
        y[i] = x / l[(i, i)];
    }
    y
}

/// Solves `Lᵀ x = y` for lower-triangular `L`.
pub fn backward_substitute_transposed<T: Scalar>(l: ArrayView2<T>, y: ArrayView1<T>) -> Array1<T> {
    let n = l.nrows();
    let mut x = Array1::zeros(n);
    for i in (0..n).rev() {
        let mut v = y[i];
        for k in (i + 1)..n {
            v = v - l[(k, i)] * x[k];
        }
        x[i] = v / l[(i, i)];
    }
    x
}

pub fn cholesky_solve<T: Scalar>(l: ArrayView2<T>, b: ArrayView1<T>) -> Array1<T> {
    let y = forward_substitute(l, b);
    backward_substitute_transposed(l, y.view())
}

/// Minimum-norm least-squares solution of `A x ≈ b` through the SVD with a
/// relative singular value cutoff.
pub fn lstsq<T: Scalar>(a: ArrayView2<T>, b: ArrayView1<T>) -> Array1<T> {
    let (m, n) = a.dim();
    let dec = svd(a);
    let top = dec.s.first().copied().unwrap_or(T::zero());
    let cutoff = T::epsilon() * T::from_count(m.max(n)) * top;
    let mut x = Array1::zeros(n);
    for (j, &sigma) in dec.s.iter().enumerate() {
        if sigma <= cutoff || sigma == T::zero() {
            continue;
        }
        let coef = dot(dec.u.column(j), b) / sigma;
        x.scaled_add(coef, &dec.v.column(j));
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn max_abs<T: Scalar>(a: &Array2<T>) -> T {
        a.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
    }

    #[test]
    fn svd_reconstructs_tall_and_wide() {
        let a = array![[1.0, 2.0, 0.5], [0.0, -1.0, 3.0], [4.0, 0.0, 1.0], [2.0, 2.0, 2.0]];
        for m in [a.clone(), a.t().to_owned()] {
            let d = svd(m.view());
            let rec = d.u.dot(&Array2::from_diag(&d.s)).dot(&d.v.t());
            assert!(max_abs(&(rec - &m)) < 1e-12);
            assert!(d.s.windows(2).into_iter().all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn svd_in_single_precision() {
        let a: Array2<f32> = array![[3.0, 0.0], [0.0, 2.0], [0.0, 0.0]];
        let s = singular_values(a.view());
        assert_abs_diff_eq!(s[0], 3.0, epsilon = 1e-6);
        assert_abs_diff_eq!(s[1], 2.0, epsilon = 1e-6);
    }

    #[test]
    fn qr_is_orthonormal_and_reconstructs() {
        let a = array![[2.0, 1.0], [1.0, 3.0], [0.0, 1.0], [1.0, -1.0]];
        let (q, r) = qr(a.view());
        assert!(max_abs(&(q.t().dot(&q) - Array2::<f64>::eye(2))) < 1e-14);
        assert!(max_abs(&(q.dot(&r) - &a)) < 1e-14);
    }

    #[test]
    fn basis_drops_dependent_columns() {
        let a = array![[1.0, 2.0, 0.0], [0.0, 0.0, 1.0], [1.0, 2.0, 1.0], [0.0, 0.0, 0.0]];
        let (b, s) = orthonormal_basis(a.view(), 1e-10);
        assert_eq!(b.ncols(), 2);
        assert_eq!(s.len(), 2);
        assert!(max_abs(&(b.t().dot(&b) - Array2::<f64>::eye(2))) < 1e-14);
        assert_eq!(rank(a.view(), 1e-10), 2);
    }

    #[test]
    fn symmetric_eigen_sorted_descending() {
        let a = array![[4.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 2.0]];
        let (w, v) = symmetric_eigen(a.view());
        assert!(w[0] >= w[1] && w[1] >= w[2]);
        let rec = v.dot(&Array2::from_diag(&w)).dot(&v.t());
        assert!(max_abs(&(rec - &a)) < 1e-12);
    }

    #[test]
    fn cholesky_solves_spd_and_rejects_indefinite() {
        let a = array![[4.0, 2.0], [2.0, 3.0]];
        let l = cholesky(a.view()).unwrap();
        let x = cholesky_solve(l.view(), array![2.0, 1.0].view());
        let r = a.dot(&x) - array![2.0, 1.0];
        assert!(r.iter().all(|v: &f64| v.abs() < 1e-14));
        assert!(cholesky(array![[1.0, 2.0], [2.0, 1.0]].view()).is_none());
    }

    #[test]
    fn lstsq_minimum_norm_for_rank_deficient() {
        let a = array![[1.0, 1.0], [1.0, 1.0]];
        let x = lstsq(a.view(), array![2.0, 2.0].view());
        assert_abs_diff_eq!(x[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(x[1], 1.0, epsilon = 1e-12);
    }
}
