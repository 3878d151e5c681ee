//! Nonnegative least squares and convex-hull purity tests.

use std::collections::BTreeSet;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::index;

use crate::error::{invalid, Error, Result};
use crate::linalg;
use crate::scalar::Scalar;
use crate::synth::stream_rng;

#[derive(Debug, Clone, PartialEq)]
pub struct NnlsSolution<T> {
    pub weights: Array1<T>,
    pub residual_norm: T,
    pub iterations: usize,
}

/// Lawson–Hanson active-set NNLS: `min ‖A w − b‖₂` subject to `w ≥ 0`.
///
/// On return the gradient `Aᵀ(A w − b)` vanishes to within `tol` on the
/// positive components and is `≥ −tol` on the zero ones. `max_iter` bounds the
/// total number of least-squares solves.
pub fn nnls<T: Scalar>(a: ArrayView2<T>, b: ArrayView1<T>, tol: T, max_iter: usize) -> Result<NnlsSolution<T>> {
    let (m, n) = a.dim();
    if b.len() != m {
        return invalid(format!("right-hand side has {} entries for {m} rows", b.len()));
    }
    if max_iter == 0 {
        return invalid("max_iter must be at least 1");
    }
    if a.iter().chain(b.iter()).any(|x| !x.is_finite()) {
        return invalid("nnls input contains non-finite entries");
    }
    let mut w = Array1::<T>::zeros(n);
    let mut passive = vec![false; n];
    let mut iterations = 0;
    // indices whose admission produced a nonpositive solve; cleared on progress
    let mut blocked = vec![false; n];

    let residual = |w: &Array1<T>| &b - &a.dot(w);
    loop {
        let g = a.t().dot(&residual(&w));
        let mut pick: Option<usize> = None;
        for j in 0..n {
            if passive[j] || blocked[j] || g[j] <= tol {
                continue;
            }
            if pick.is_none_or(|p| g[j] > g[p]) {
                pick = Some(j);
            }
        }
        let Some(t) = pick else { break };
        passive[t] = true;
        let mut first = true;
        loop {
            iterations += 1;
            if iterations > max_iter {
                let r = linalg::norm2(residual(&w).view()).as_f64();
                return Err(Error::NonConvergence {
                    iterations: max_iter,
                    residual: r,
                    best: w.iter().map(|x| x.as_f64()).collect(),
                });
            }
            let z = solve_passive(a, b, &passive);
            if first && z[t] <= T::zero() {
                passive[t] = false;
                blocked[t] = true;
                break;
            }
            first = false;
            if (0..n).filter(|&j| passive[j]).all(|j| z[j] > T::zero()) {
                w = z;
                blocked.iter_mut().for_each(|x| *x = false);
                break;
            }
            let mut alpha = T::infinity();
            let mut leaving = 0;
            for j in (0..n).filter(|&j| passive[j] && z[j] <= T::zero()) {
                let step = w[j] / (w[j] - z[j]);
                if step < alpha {
                    alpha = step;
                    leaving = j;
                }
            }
            for j in 0..n {
                if passive[j] {
                    w[j] = w[j] + alpha * (z[j] - w[j]);
                }
            }
            w[leaving] = T::zero();
            for j in 0..n {
                if passive[j] && w[j] <= T::zero() {
                    passive[j] = false;
                    w[j] = T::zero();
                }
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
    }
    let residual_norm = linalg::norm2(residual(&w).view());
    Ok(NnlsSolution { weights: w, residual_norm, iterations })
}

fn solve_passive<T: Scalar>(a: ArrayView2<T>, b: ArrayView1<T>, passive: &[bool]) -> Array1<T> {
    let cols: Vec<usize> = (0..passive.len()).filter(|&j| passive[j]).collect();
    let sub = a.select(Axis(1), &cols);
    let x = linalg::lstsq(sub.view(), b);
    let mut z = Array1::zeros(passive.len());
    for (k, &j) in cols.iter().enumerate() {
        z[j] = x[k];
    }
    z
}

/// Points as columns with a row of ones appended.
pub fn build_augmented_matrix<T: Scalar>(points: &[ArrayView1<T>]) -> Result<Array2<T>> {
    let Some(first) = points.first() else {
        return invalid("at least one point is required");
    };
    let d = first.len();
    if d == 0 {
        return invalid("points must have at least one coordinate");
    }
    if let Some(p) = points.iter().position(|p| p.len() != d) {
        return invalid(format!("point {p} has {} coordinates, expected {d}", points[p].len()));
    }
    let mut m = Array2::<T>::ones((d + 1, points.len()));
    for (j, p) in points.iter().enumerate() {
        m.slice_mut(ndarray::s![..d, j]).assign(p);
    }
    Ok(m)
}

fn nnls_budget(n: usize) -> usize {
    50 + 5 * n
}

/// `true` when the candidate lies in the convex hull of `set_points` up to a
/// relative residual `eps`.
pub fn hull_membership_test<T: Scalar>(candidate: ArrayView1<T>, set_points: &[ArrayView1<T>], eps: T) -> Result<bool> {
    let a = build_augmented_matrix(set_points)?;
    if candidate.len() + 1 != a.nrows() {
        return invalid("candidate and set points differ in dimension");
    }
    hull_residual_test(&a, candidate, eps)
}

fn hull_residual_test<T: Scalar>(a: &Array2<T>, candidate: ArrayView1<T>, eps: T) -> Result<bool> {
    let mut rhs = Array1::ones(candidate.len() + 1);
    rhs.slice_mut(ndarray::s![..candidate.len()]).assign(&candidate);
    let scale = linalg::norm2(rhs.view());
    let tol = T::lit(1e-12) * (T::one() + scale);
    let sol = nnls(a.view(), rhs.view(), tol, nnls_budget(a.ncols()))?;
    Ok(sol.residual_norm < eps * scale)
}

/// Purity of a same-class set under random `d`-feature projections.
///
/// Up to `p_max` distinct masks are tried; the set is declared pure on the
/// first mask under which no training point of another class falls inside
/// the projected hull. Points outside the projected bounding box are outside
/// the hull and skip the residual test.
#[allow(clippy::too_many_arguments)]
pub fn projected_purity_test<T: Scalar>(
    set_indices: &[usize],
    class: usize,
    features: ArrayView2<T>,
    labels: &[usize],
    d: usize,
    p_max: usize,
    eps_da: T,
    rng_seed: u64,
) -> Result<bool> {
    let p = features.ncols();
    if set_indices.is_empty() {
        return invalid("purity test needs a nonempty set");
    }
    if d == 0 || d > p {
        return invalid(format!("mask dimension {d} must lie in [1, {p}]"));
    }
    if p_max == 0 {
        return invalid("p_max must be positive");
    }
    if labels.len() != features.nrows() {
        return invalid("labels and features disagree in length");
    }
    if let Some(&i) = set_indices.iter().find(|&&i| i >= labels.len() || labels[i] != class) {
        return invalid(format!("index {i} is not a member of class {class}"));
    }
    let foreign: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] != class).collect();
    for mask in random_masks(p, d, p_max, rng_seed) {
        let proj = features.select(Axis(1), &mask);
        let set = proj.select(Axis(0), set_indices);
        let lo = set.fold_axis(Axis(0), T::infinity(), |a, &b| a.min(b));
        let hi = set.fold_axis(Axis(0), T::neg_infinity(), |a, &b| a.max(b));
        let cols: Vec<ArrayView1<T>> = set.rows().into_iter().collect();
        let a = build_augmented_matrix(&cols)?;
        let mut pure = true;
        for &f in &foreign {
            let x = proj.row(f);
            let outside = x.iter().zip(lo.iter().zip(hi.iter())).any(|(&v, (&l, &h))| v < l || v > h);
            if outside {
                continue;
            }
            if hull_residual_test(&a, x, eps_da)? {
                pure = false;
                break;
            }
        }
        if pure {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Up to `count` distinct sorted `d`-subsets of `0..p`, seeded.
pub fn random_masks(p: usize, d: usize, count: usize, rng_seed: u64) -> Vec<Vec<usize>> {
    let total = n_choose_k(p, d);
    let want = count.min(total.unwrap_or(usize::MAX));
    let mut rng = stream_rng(rng_seed, 0x6d61736b);
    let mut seen = BTreeSet::new();
    let mut masks = Vec::with_capacity(want);
    while masks.len() < want {
        let mut m = index::sample(&mut rng, p, d).into_vec();
        m.sort_unstable();
        if seen.insert(m.clone()) {
            masks.push(m);
        }
    }
    masks
}

fn n_choose_k(n: usize, k: usize) -> Option<usize> {
    let k = k.min(n - k);
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}
