//! Alternating k-medoids on a precomputed dissimilarity matrix.

use serde::{Deserialize, Serialize};

use super::grassmann::DissimilarityMatrix;
use crate::error::{invalid, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringResult {
    /// Medoid sample index of cluster `c` (label `c + 1`).
    #[serde(rename = "medoids")]
    pub medoid_indices: Vec<usize>,
    /// Cluster label of every sample, in `1..=K`.
    pub assignments: Vec<usize>,
    pub objective: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub objective_trace: Vec<f64>,
}

impl ClusteringResult {
    pub fn k(&self) -> usize {
        self.medoid_indices.len()
    }
}

/// Nearest medoid for one row of dissimilarities; ties go to the lowest
/// cluster index.
pub fn nearest_medoid<T: Scalar>(dist_to_medoid: impl Fn(usize) -> T, k: usize) -> (usize, T) {
    let mut best = (0, dist_to_medoid(0));
    for c in 1..k {
        let d = dist_to_medoid(c);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn assign<T: Scalar>(delta: &DissimilarityMatrix<T>, medoids: &[usize]) -> (Vec<usize>, T) {
    let mut total = T::zero();
    let assignment = (0..delta.len())
        .map(|i| {
            let (c, d) = nearest_medoid(|c| delta.get(i, medoids[c]), medoids.len());
            total = total + d;
            c
        })
        .collect();
    (assignment, total)
}

/// Deterministic greedy spread: the most central point, then maximin.
fn initial_medoids<T: Scalar>(delta: &DissimilarityMatrix<T>, k: usize) -> Vec<usize> {
    let n = delta.len();
    let row_sum = |i: usize| (0..n).fold(T::zero(), |acc, j| acc + delta.get(i, j));
    let mut first = 0;
    let mut best = row_sum(0);
    for i in 1..n {
        let s = row_sum(i);
        if s < best {
            best = s;
            first = i;
        }
    }
    let mut medoids = vec![first];
    let mut min_dist: Vec<T> = (0..n).map(|i| delta.get(i, first)).collect();
    while medoids.len() < k {
        let mut pick = None::<(usize, T)>;
        for i in (0..n).filter(|i| !medoids.contains(i)) {
            if pick.is_none_or(|(_, d)| min_dist[i] > d) {
                pick = Some((i, min_dist[i]));
            }
        }
        let (next, _) = pick.expect("k <= n leaves a candidate");
        medoids.push(next);
        for (i, m) in min_dist.iter_mut().enumerate() {
            *m = m.min(delta.get(i, next));
        }
    }
    medoids
}

/// Alternating k-medoids: assign every point to its nearest medoid, then move
/// each medoid to the member minimising the in-cluster dissimilarity sum,
/// until the medoids no longer change or `max_iter` is reached.
///
/// Initialisation is deterministic; `_rng_seed` is accepted for interface
/// stability of the labeling stage. Clusters are renumbered by increasing
/// medoid index so labels do not depend on the initialisation order.
pub fn k_medoids<T: Scalar>(delta: &DissimilarityMatrix<T>, k: usize, _rng_seed: u64, max_iter: usize) -> Result<ClusteringResult> {
    let n = delta.len();
    if k < 1 || k > n {
        return invalid(format!("k = {k} must lie in [1, {n}]"));
    }
    if max_iter == 0 {
        return invalid("max_iter must be positive");
    }
    let mut medoids = initial_medoids(delta, k);
    let (mut assignment, mut objective) = assign(delta, &medoids);
    let mut trace = vec![objective.as_f64()];
    for _ in 0..max_iter {
        let mut next = medoids.clone();
        for (c, medoid) in next.iter_mut().enumerate() {
            let members: Vec<usize> = (0..n).filter(|&i| assignment[i] == c).collect();
            if members.is_empty() {
                continue;
            }
            let cost = |m: usize| members.iter().fold(T::zero(), |acc, &i| acc + delta.get(m, i));
            let mut best = (*medoid, cost(*medoid));
            for &m in &members {
                let v = cost(m);
                if v < best.1 || (v == best.1 && m < best.0) {
                    best = (m, v);
                }
            }
            *medoid = best.0;
        }
        if next == medoids {
            break;
        }
        let (a, obj) = assign(delta, &next);
        debug_assert!(obj <= objective + T::lit(1e-12) * (T::one() + objective.abs()));
        medoids = next;
        assignment = a;
        objective = obj;
        trace.push(objective.as_f64());
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by_key(|&c| medoids[c]);
    let mut relabel = vec![0; k];
    for (new, &old) in order.iter().enumerate() {
        relabel[old] = new;
    }
    Ok(ClusteringResult {
        medoid_indices: order.iter().map(|&c| medoids[c]).collect(),
        assignments: assignment.iter().map(|&c| relabel[c] + 1).collect(),
        objective: objective.as_f64(),
        objective_trace: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn from_points(xs: &[f64]) -> DissimilarityMatrix<f64> {
        let n = xs.len();
        DissimilarityMatrix::new(Array2::from_shape_fn((n, n), |(i, j)| (xs[i] - xs[j]).abs())).unwrap()
    }

    fn brute_force(delta: &DissimilarityMatrix<f64>) -> f64 {
        let n = delta.len();
        let mut best = f64::INFINITY;
        for a in 0..n {
            for b in (a + 1)..n {
                let cost: f64 = (0..n).map(|i| delta.get(i, a).min(delta.get(i, b))).sum();
                best = best.min(cost);
            }
        }
        best
    }

    #[test]
    fn separable_blocks() {
        let n = 6;
        let v = Array2::from_shape_fn((n, n), |(i, j)| if (i < 3) == (j < 3) { 0.0 } else { 5.0 });
        let r = k_medoids(&DissimilarityMatrix::new(v).unwrap(), 2, 0, 100).unwrap();
        assert_eq!(r.assignments[..3], [r.assignments[0]; 3]);
        assert_eq!(r.assignments[3..], [r.assignments[3]; 3]);
        assert_ne!(r.assignments[0], r.assignments[3]);
        assert_eq!(r.objective, 0.0);
    }

    #[test]
    fn k_equals_n_has_zero_objective() {
        let d = from_points(&[0.0, 1.0, 3.0, 7.0]);
        let r = k_medoids(&d, 4, 0, 100).unwrap();
        assert_eq!(r.objective, 0.0);
        let mut m = r.medoid_indices.clone();
        m.sort_unstable();
        assert_eq!(m, vec![0, 1, 2, 3]);
    }

    #[test]
    fn six_points_reach_exhaustive_minimum() {
        let d = from_points(&[0.0, 0.4, 1.1, 5.0, 5.3, 6.8]);
        let r = k_medoids(&d, 2, 0, 100).unwrap();
        assert!((r.objective - brute_force(&d)).abs() < 1e-12);
        assert!((r.objective - 2.9).abs() < 1e-12);
    }

    #[test]
    fn objective_trace_nonincreasing() {
        let xs: Vec<f64> = (0..40).map(|i| ((i * 37) % 23) as f64 + 0.1 * i as f64).collect();
        let r = k_medoids(&from_points(&xs), 4, 0, 100).unwrap();
        assert!(r.objective_trace.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        // every point sits with its nearest medoid
        let d = from_points(&xs);
        for (i, &c) in r.assignments.iter().enumerate() {
            let own = d.get(i, r.medoid_indices[c - 1]);
            assert!(r.medoid_indices.iter().all(|&m| own <= d.get(i, m)));
        }
    }

    #[test]
    fn rejects_k_above_n() {
        assert!(k_medoids(&from_points(&[0.0, 1.0]), 3, 0, 10).is_err());
    }

    #[test]
    fn identical_points_share_a_label() {
        let d = DissimilarityMatrix::new(Array2::<f64>::zeros((5, 5))).unwrap();
        let r = k_medoids(&d, 3, 0, 10).unwrap();
        assert!(r.assignments.iter().all(|&y| y == r.assignments[0]));
    }
}
