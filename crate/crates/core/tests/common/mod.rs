//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::io::Write;

use ndarray::{Array1, Array2};
use num::{BigRational, Signed, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Prints one status line past the test harness capture.
pub fn status(line: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
    let _ = out.flush();
}

/// Exact convex-hull membership: phase one of the simplex method over the
/// rationals for `Σ λ_j p_j = x, Σ λ_j = 1, λ ≥ 0`, with Bland's rule.
pub fn in_convex_hull(x: &[f64], points: &[Vec<f64>]) -> bool {
    if points.is_empty() {
        return false;
    }
    let d = x.len();
    for c in 0..d {
        let lo = points.iter().map(|p| p[c]).fold(f64::INFINITY, f64::min);
        let hi = points.iter().map(|p| p[c]).fold(f64::NEG_INFINITY, f64::max);
        if x[c] < lo || x[c] > hi {
            return false;
        }
    }
    let q = |v: f64| BigRational::from_float(v).expect("finite value");
    let m = points.len();
    let rows = d + 1;
    let width = m + rows;
    let mut t: Vec<Vec<BigRational>> = Vec::with_capacity(rows);
    let mut rhs: Vec<BigRational> = Vec::with_capacity(rows);
    for r in 0..rows {
        let mut row: Vec<BigRational> = (0..m)
            .map(|j| if r < d { q(points[j][r]) } else { BigRational::from_integer(1.into()) })
            .collect();
        let mut b = if r < d { q(x[r]) } else { BigRational::from_integer(1.into()) };
        if b.is_negative() {
            row.iter_mut().for_each(|v| *v = -v.clone());
            b = -b;
        }
        row.extend((0..rows).map(|k| if k == r { BigRational::from_integer(1.into()) } else { BigRational::zero() }));
        t.push(row);
        rhs.push(b);
    }
    let mut basis: Vec<usize> = (m..width).collect();
    // reduced costs of the artificial-sum objective
    let mut cost: Vec<BigRational> = (0..width)
        .map(|j| if j < m { -t.iter().fold(BigRational::zero(), |acc, row| acc + &row[j]) } else { BigRational::zero() })
        .collect();
    let mut value: BigRational = rhs.iter().fold(BigRational::zero(), |acc, b| acc + b);
    loop {
        let Some(enter) = (0..width).find(|&j| cost[j].is_negative()) else { break };
        let mut leave: Option<(usize, BigRational)> = None;
        for r in 0..rows {
            if t[r][enter].is_positive() {
                let ratio = &rhs[r] / &t[r][enter];
                let better = match &leave {
                    None => true,
                    Some((lr, lv)) => ratio < *lv || (ratio == *lv && basis[r] < basis[*lr]),
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
        }
        let Some((pr, _)) = leave else { break };
        let pivot = t[pr][enter].clone();
        t[pr].iter_mut().for_each(|v| *v = &*v / &pivot);
        rhs[pr] = &rhs[pr] / &pivot;
        for r in 0..rows {
            if r != pr && !t[r][enter].is_zero() {
                let f = t[r][enter].clone();
                for j in 0..width {
                    let delta = &f * &t[pr][j];
                    t[r][j] -= delta;
                }
                let delta = &f * &rhs[pr];
                rhs[r] -= delta;
            }
        }
        let f = cost[enter].clone();
        for j in 0..width {
            let delta = &f * &t[pr][j];
            cost[j] -= delta;
        }
        value += &f * &rhs[pr];
        basis[pr] = enter;
    }
    value.is_zero()
}

/// Least squares on a column subset by modified Gram–Schmidt; `None` when
/// the columns are numerically dependent.
fn subset_lstsq(a: &Array2<f64>, b: &Array1<f64>, cols: &[usize]) -> Option<Vec<f64>> {
    let m = a.nrows();
    let k = cols.len();
    let mut q: Vec<Vec<f64>> = cols.iter().map(|&c| a.column(c).to_vec()).collect();
    let mut r = vec![vec![0.0; k]; k];
    for j in 0..k {
        for i in 0..j {
            let dot: f64 = (0..m).map(|t| q[i][t] * q[j][t]).sum();
            r[i][j] = dot;
            for t in 0..m {
                q[j][t] -= dot * q[i][t];
            }
        }
        let norm = q[j].iter().map(|v| v * v).sum::<f64>().sqrt();
        let scale = a.column(cols[j]).iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= 1e-10 * scale.max(1e-300) {
            return None;
        }
        r[j][j] = norm;
        q[j].iter_mut().for_each(|v| *v /= norm);
    }
    let qtb: Vec<f64> = (0..k).map(|j| (0..m).map(|t| q[j][t] * b[t]).sum()).collect();
    let mut x = vec![0.0; k];
    for j in (0..k).rev() {
        let s: f64 = ((j + 1)..k).map(|i| r[j][i] * x[i]).sum();
        x[j] = (qtb[j] - s) / r[j][j];
    }
    Some(x)
}

/// Smallest residual `‖A w − b‖` over all supports whose unconstrained
/// least-squares solution is nonnegative.
pub fn nnls_by_enumeration(a: &Array2<f64>, b: &Array1<f64>) -> f64 {
    let (m, n) = a.dim();
    let mut best = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    for mask in 1u32..(1u32 << n) {
        let cols: Vec<usize> = (0..n).filter(|&j| mask & (1 << j) != 0).collect();
        if cols.len() > m {
            continue;
        }
        let Some(x) = subset_lstsq(a, b, &cols) else { continue };
        if x.iter().any(|&v| v < 0.0) {
            continue;
        }
        let mut w = Array1::zeros(n);
        for (&c, &v) in cols.iter().zip(&x) {
            w[c] = v;
        }
        let r = (a.dot(&w) - b).iter().map(|v| v * v).sum::<f64>().sqrt();
        best = best.min(r);
    }
    best
}

/// Adjusted Rand index between two labelings.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len());
    let ka = a.iter().max().map_or(0, |m| m + 1);
    let kb = b.iter().max().map_or(0, |m| m + 1);
    let mut table = vec![vec![0u64; kb]; ka];
    for (&x, &y) in a.iter().zip(b) {
        table[x][y] += 1;
    }
    let c2 = |n: u64| (n * n.saturating_sub(1) / 2) as f64;
    let sum_cells: f64 = table.iter().flatten().map(|&n| c2(n)).sum();
    let rows: f64 = table.iter().map(|r| c2(r.iter().sum())).sum();
    let cols: f64 = (0..kb).map(|j| c2(table.iter().map(|r| r[j]).sum())).sum();
    let total = c2(a.len() as u64);
    let expected = rows * cols / total;
    let max = 0.5 * (rows + cols);
    if max == expected {
        return 1.0;
    }
    (sum_cells - expected) / (max - expected)
}

/// Greedy mRMR recomputed from scratch at every step: the candidate with the
/// largest `relevance − mean redundancy to the chosen set` wins, lowest index
/// on ties.
pub fn brute_force_mrmr(scores: &[f64], mi: &Array2<f64>, count: usize) -> Vec<usize> {
    let n = scores.len();
    let mut chosen: Vec<usize> = Vec::new();
    while chosen.len() < count.min(n) {
        let mut best: Option<(usize, f64)> = None;
        for j in (0..n).filter(|j| !chosen.contains(j)) {
            let v = if chosen.is_empty() {
                scores[j]
            } else {
                let red: f64 = chosen.iter().map(|&i| mi[(j, i)]).sum();
                scores[j] - red / chosen.len() as f64
            };
            if best.is_none_or(|(_, bv)| v > bv) {
                best = Some((j, v));
            }
        }
        chosen.push(best.expect("candidate").0);
    }
    chosen
}

/// `−½ ln(1 − r²)` from a textbook sample correlation.
pub fn gaussian_mi_of_columns(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let r = (cov / (vx * vy).sqrt()).clamp(-1.0, 1.0);
    -0.5 * (1.0 - r * r).max(1e-12).ln()
}
