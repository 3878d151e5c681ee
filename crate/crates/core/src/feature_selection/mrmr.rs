//! Greedy relevance/redundancy selection and the baseline selectors.

use ndarray::{Array2, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::redundancy::RedundancyModel;
use crate::error::{invalid, Result};
use crate::mutual_info::{mi_feature_feature_exact, mi_feature_label};
use crate::scalar::Scalar;
use crate::synth::{stream_rng, Mesh};

/// Ordered, duplicate-free feature (mesh node) indices, 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSet {
    pub indices: Vec<usize>,
}

impl FeatureSet {
    pub fn new(indices: Vec<usize>, n_features: usize) -> Result<Self> {
        let mut seen = vec![false; n_features];
        for &i in &indices {
            if i >= n_features {
                return invalid(format!("feature index {i} out of range 0..{n_features}"));
            }
            if std::mem::replace(&mut seen[i], true) {
                return invalid(format!("feature index {i} repeated"));
            }
        }
        Ok(FeatureSet { indices })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Columns of `x` in selection order.
    pub fn project<T: Scalar>(&self, x: ArrayView2<T>) -> Array2<T> {
        x.select(ndarray::Axis(1), &self.indices)
    }
}

/// `I(X^i, Y)` for every column of the training matrix.
pub fn relevance_scores<T: Scalar>(x: ArrayView2<T>, labels: &[usize], k_neighbors: usize, rng_seed: u64) -> Result<Vec<f64>> {
    (0..x.ncols())
        .map(|i| {
            let col: Vec<T> = x.column(i).to_vec();
            mi_feature_label(&col, labels, k_neighbors, rng_seed).map(|v| v.as_f64())
        })
        .collect()
}

/// `D(S, Y)`: mean relevance over the set.
pub fn relevance(scores: &[f64], s: &FeatureSet) -> Result<f64> {
    if s.is_empty() {
        return invalid("relevance of an empty set");
    }
    Ok(s.indices.iter().map(|&i| scores[i]).sum::<f64>() / s.len() as f64)
}

/// `R(S)` with Gaussian MI between columns, diagonal included.
pub fn redundancy_exact<T: Scalar>(x: ArrayView2<T>, s: &FeatureSet) -> Result<f64> {
    if s.is_empty() {
        return invalid("redundancy of an empty set");
    }
    let cols: Vec<Vec<T>> = s.indices.iter().map(|&i| x.column(i).to_vec()).collect();
    let mut total = 0.0;
    for a in 0..cols.len() {
        total += mi_feature_feature_exact(&cols[a], &cols[a])?.as_f64();
        for b in (a + 1)..cols.len() {
            total += 2.0 * mi_feature_feature_exact(&cols[a], &cols[b])?.as_f64();
        }
    }
    Ok(total / (s.len() * s.len()) as f64)
}

/// `R̃(S)` with the metamodel evaluated at node distances, `Ĩ(0)` on the
/// diagonal.
pub fn redundancy_model<T: Scalar>(model: &RedundancyModel, mesh: &Mesh<T>, s: &FeatureSet) -> Result<f64> {
    if s.is_empty() {
        return invalid("redundancy of an empty set");
    }
    let mut total = 0.0;
    for &i in &s.indices {
        for &j in &s.indices {
            total += model.evaluate(mesh.distance(i, j).as_f64());
        }
    }
    Ok(total / (s.len() * s.len()) as f64)
}

/// Pairwise redundancy used by the greedy update.
pub trait PairRedundancy {
    fn pair(&self, i: usize, j: usize) -> f64;
}

/// `Ĩ(‖ξ_i − ξ_j‖)`.
pub struct ModelRedundancy<'a, T> {
    pub model: &'a RedundancyModel,
    pub mesh: &'a Mesh<T>,
}

impl<T: Scalar> PairRedundancy for ModelRedundancy<'_, T> {
    fn pair(&self, i: usize, j: usize) -> f64 {
        self.model.evaluate(self.mesh.distance(i, j).as_f64())
    }
}

/// Precomputed pairwise MI table.
pub struct TableRedundancy(pub Array2<f64>);

impl TableRedundancy {
    /// Gaussian MI between all column pairs; quadratic in the column count.
    pub fn exact<T: Scalar>(x: ArrayView2<T>) -> Result<Self> {
        let p = x.ncols();
        let cols: Vec<Vec<T>> = (0..p).map(|i| x.column(i).to_vec()).collect();
        let mut t = Array2::zeros((p, p));
        for a in 0..p {
            for b in a..p {
                let v = mi_feature_feature_exact(&cols[a], &cols[b])?.as_f64();
                t[(a, b)] = v;
                t[(b, a)] = v;
            }
        }
        Ok(TableRedundancy(t))
    }
}

impl PairRedundancy for TableRedundancy {
    fn pair(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoppingConfig {
    /// Sliding window length over the objective trace.
    pub window: usize,
    /// Stop when the window range falls below `tau_stop` times the range of
    /// the whole trace.
    pub tau_stop: f64,
    pub max_features: usize,
    /// Candidates whose relevance is below this floor are never added.
    pub relevance_floor: f64,
}

impl Default for StoppingConfig {
    fn default() -> Self {
        StoppingConfig { window: 10, tau_stop: 1e-3, max_features: 128, relevance_floor: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Plateau,
    RelevanceFloor,
    Cap,
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub features: FeatureSet,
    /// Value of the maximised criterion at each step (the first entry is the
    /// head feature's relevance).
    pub objective_trace: Vec<f64>,
    pub stop: StopReason,
}

fn plateau(trace: &[f64], window: usize, tau: f64) -> bool {
    if window < 2 || trace.len() < window {
        return false;
    }
    let range = |v: &[f64]| {
        let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &x| (l.min(x), h.max(x)));
        hi - lo
    };
    range(&trace[trace.len() - window..]) < tau * range(trace)
}

fn argmax_lowest(values: impl Iterator<Item = (usize, f64)>) -> Option<(usize, f64)> {
    values.fold(None, |best, (i, v)| match best {
        Some((_, bv)) if v <= bv => best,
        _ => Some((i, v)),
    })
}

/// Greedy mRMR: start from the most relevant feature, then repeatedly add
/// `argmax_i I(X^i, Y) − (1/m) Σ_{j∈S_m} r(i, j)` until the stopping rule
/// fires. Ties go to the lowest index.
pub fn greedy_mrmr(scores: &[f64], redundancy: &dyn PairRedundancy, stop: &StoppingConfig) -> Result<Selection> {
    let n = scores.len();
    if n == 0 {
        return invalid("no candidate features");
    }
    if stop.max_features == 0 {
        return invalid("max_features must be positive");
    }
    let Some((head, head_rel)) = argmax_lowest(scores.iter().copied().enumerate()) else {
        unreachable!()
    };
    if head_rel < stop.relevance_floor {
        return invalid("no feature reaches the relevance floor");
    }
    let mut chosen = vec![false; n];
    chosen[head] = true;
    let mut selected = vec![head];
    let mut trace = vec![head_rel];
    let mut red_sum: Vec<f64> = (0..n).map(|i| redundancy.pair(i, head)).collect();
    let reason = loop {
        if selected.len() >= stop.max_features {
            break StopReason::Cap;
        }
        let m = selected.len() as f64;
        let pick = argmax_lowest((0..n).filter(|&i| !chosen[i]).map(|i| (i, scores[i] - red_sum[i] / m)));
        let Some((next, value)) = pick else {
            break StopReason::Exhausted;
        };
        if scores[next] < stop.relevance_floor {
            break StopReason::RelevanceFloor;
        }
        chosen[next] = true;
        selected.push(next);
        trace.push(value);
        for (i, acc) in red_sum.iter_mut().enumerate() {
            if !chosen[i] {
                *acc += redundancy.pair(i, next);
            }
        }
        if plateau(&trace, stop.window, stop.tau_stop) {
            break StopReason::Plateau;
        }
    };
    Ok(Selection { features: FeatureSet { indices: selected }, objective_trace: trace, stop: reason })
}

/// Geostatistical mRMR: greedy mRMR with the distance metamodel.
pub fn geostatistical_mrmr<T: Scalar>(scores: &[f64], mesh: &Mesh<T>, model: &RedundancyModel, stop: &StoppingConfig) -> Result<Selection> {
    if scores.len() != mesh.len() {
        return invalid(format!("{} relevance scores for {} mesh nodes", scores.len(), mesh.len()));
    }
    greedy_mrmr(scores, &ModelRedundancy { model, mesh }, stop)
}

/// Top-`n_f` features by relevance, ties by lowest index.
pub fn mi_filter(scores: &[f64], n_f: usize) -> Result<FeatureSet> {
    if n_f == 0 || n_f > scores.len() {
        return invalid(format!("n_f = {n_f} must lie in [1, {}]", scores.len()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(n_f);
    Ok(FeatureSet { indices: order })
}

/// Maximin node selection from a seeded random start.
pub fn geometric_filter<T: Scalar>(mesh: &Mesh<T>, n_f: usize, rng_seed: u64) -> Result<FeatureSet> {
    let start = stream_rng(rng_seed, 0x67656f).random_range(0..mesh.len());
    geometric_filter_from(mesh, n_f, start)
}

pub fn geometric_filter_from<T: Scalar>(mesh: &Mesh<T>, n_f: usize, start: usize) -> Result<FeatureSet> {
    let n = mesh.len();
    if n_f == 0 || n_f > n {
        return invalid(format!("n_f = {n_f} must lie in [1, {n}]"));
    }
    if start >= n {
        return invalid(format!("start node {start} out of range"));
    }
    let mut chosen = vec![false; n];
    chosen[start] = true;
    let mut selected = vec![start];
    let mut min_d: Vec<f64> = (0..n).map(|i| mesh.distance(i, start).as_f64()).collect();
    while selected.len() < n_f {
        let (next, _) = argmax_lowest((0..n).filter(|&i| !chosen[i]).map(|i| (i, min_d[i]))).expect("candidates remain");
        chosen[next] = true;
        selected.push(next);
        for (i, d) in min_d.iter_mut().enumerate() {
            *d = d.min(mesh.distance(i, next).as_f64());
        }
    }
    Ok(FeatureSet { indices: selected })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectorMetrics {
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "R_exact")]
    pub r_exact: f64,
    #[serde(rename = "R_model")]
    pub r_model: f64,
}

/// Persisted selector output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectorReport {
    pub method: String,
    pub indices: Vec<usize>,
    pub objective_trace: Vec<f64>,
    pub metrics: SelectorMetrics,
}

pub fn selector_metrics<T: Scalar>(
    x: ArrayView2<T>,
    scores: &[f64],
    mesh: &Mesh<T>,
    model: &RedundancyModel,
    s: &FeatureSet,
) -> Result<SelectorMetrics> {
    Ok(SelectorMetrics {
        d: relevance(scores, s)?,
        r_exact: redundancy_exact(x, s)?,
        r_model: redundancy_model(model, mesh, s)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mutual_info::RHO_SQ_CLAMP;
    use crate::synth::build_rectangular_mesh;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    struct Const(f64);
    impl PairRedundancy for Const {
        fn pair(&self, _: usize, _: usize) -> f64 {
            self.0
        }
    }

    #[test]
    fn cap_one_returns_head() {
        let scores = [0.2, 0.5, 0.1, 0.5];
        let stop = StoppingConfig { max_features: 1, ..Default::default() };
        let s = greedy_mrmr(&scores, &Const(0.0), &stop).unwrap();
        assert_eq!(s.features.indices, vec![1]);
        assert_eq!(s.objective_trace, vec![0.5]);
        assert_eq!(s.stop, StopReason::Cap);
    }

    #[test]
    fn equal_scores_pick_lowest_indices() {
        let stop = StoppingConfig { max_features: 4, window: 100, ..Default::default() };
        let s = greedy_mrmr(&[0.3; 7], &Const(0.2), &stop).unwrap();
        assert_eq!(s.features.indices, vec![0, 1, 2, 3]);
    }

    #[test]
    fn plateau_rule_fires_on_flat_trace() {
        let mut scores = vec![1.0];
        scores.extend(std::iter::repeat_n(0.5, 30));
        let stop = StoppingConfig { window: 5, tau_stop: 1e-3, max_features: 30, relevance_floor: 0.0 };
        let s = greedy_mrmr(&scores, &Const(0.0), &stop).unwrap();
        assert_eq!(s.stop, StopReason::Plateau);
        assert_eq!(s.features.len(), 6);
        let floor = StoppingConfig { relevance_floor: 0.8, ..stop };
        let s = greedy_mrmr(&scores, &Const(0.0), &floor).unwrap();
        assert_eq!((s.features.indices.clone(), s.stop), (vec![0], StopReason::RelevanceFloor));
    }

    #[test]
    fn mi_filter_sorts() {
        assert_eq!(mi_filter(&[0.3, 0.1, 0.2], 2).unwrap().indices, vec![0, 2]);
        assert_eq!(mi_filter(&[0.3, 0.1, 0.2], 3).unwrap().len(), 3);
        assert!(mi_filter(&[0.3], 2).is_err());
    }

    #[test]
    fn geometric_filter_cases() {
        let seg = build_rectangular_mesh(5, 1, 4.0, 1.0).unwrap();
        assert_eq!(geometric_filter_from(&seg, 2, 1).unwrap().indices, vec![1, 4]);
        let sq = build_rectangular_mesh(3, 3, 1.0, 1.0).unwrap();
        let s = geometric_filter_from(&sq, 4, 0).unwrap();
        let mut tail = s.indices[1..].to_vec();
        tail.sort();
        assert_eq!(tail, vec![2, 6, 8]);
        let mut all = geometric_filter(&sq, 9, 5).unwrap().indices;
        all.sort();
        assert_eq!(all, (0..9).collect::<Vec<_>>());
        assert!(geometric_filter(&sq, 10, 5).is_err());
    }

    #[test]
    fn relevance_and_redundancy_definitions() {
        let scores = [0.4, 0.1, 0.25, 0.7];
        let s = FeatureSet::new(vec![0, 2, 3], 4).unwrap();
        assert_abs_diff_eq!(relevance(&scores, &s).unwrap(), (0.4 + 0.25 + 0.7) / 3.0, epsilon = 1e-15);
        let one = FeatureSet::new(vec![1], 4).unwrap();
        assert_eq!(relevance(&scores, &one).unwrap(), 0.1);

        let x = array![[1.0, 2.0, 0.3], [2.0, 1.0, -0.2], [3.0, 4.0, 0.9], [4.0, 3.5, 0.1], [5.0, 4.0, 0.5]];
        let single = FeatureSet::new(vec![1], 3).unwrap();
        assert_abs_diff_eq!(redundancy_exact(x.view(), &single).unwrap(), -0.5 * RHO_SQ_CLAMP.ln(), epsilon = 1e-12);
        let all = FeatureSet::new(vec![0, 1, 2], 3).unwrap();
        let mut direct = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let (a, b) = (x.column(i).to_vec(), x.column(j).to_vec());
                direct += mi_feature_feature_exact(&a, &b).unwrap();
            }
        }
        assert_abs_diff_eq!(redundancy_exact(x.view(), &all).unwrap(), direct / 9.0, epsilon = 1e-12);
        assert!(redundancy_exact(x.view(), &FeatureSet { indices: vec![] }).is_err());
    }

    #[test]
    fn model_redundancy_far_pair() {
        let mesh = build_rectangular_mesh(6, 2, 5.0, 1.0).unwrap();
        let m = RedundancyModel { i_inf: 0.1, gamma1: 0.5, gamma2: 0.2, r1: 1.5, r2: 2.0, alpha1: 1.0, alpha2: 2.0 };
        let s = FeatureSet::new(vec![0, 5], 12).unwrap();
        let expect = (2.0 * m.evaluate(0.0) + 2.0 * m.i_inf) / 4.0;
        assert_abs_diff_eq!(redundancy_model(&m, &mesh, &s).unwrap(), expect, epsilon = 1e-15);
    }

    #[test]
    fn feature_set_validation() {
        assert!(FeatureSet::new(vec![0, 0], 3).is_err());
        assert!(FeatureSet::new(vec![3], 3).is_err());
    }
}
