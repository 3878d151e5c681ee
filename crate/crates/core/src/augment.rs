//! Pure-set data augmentation: seed selection on the dissimilarity matrix,
//! pure-set growth by nearest-neighbour accretion, and random convex
//! combinations inside each pure set.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::convex::projected_purity_test;
use crate::error::{invalid, Error, Result};
use crate::labeling::{field_basis, relabel, DissimilarityMatrix, LabelingConfig, SubspaceBasis};
use crate::scalar::Scalar;
use crate::synth::{stream_rng, Mesh};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    /// Seeds per class, the medoid included.
    pub n_seeds: usize,
    pub p_max: usize,
    pub d: usize,
    /// Number of generated samples; `None` means nine times the training size.
    pub n_augmented: Option<usize>,
    pub eps1: f64,
    pub eps2: f64,
    pub eps_da: f64,
    pub rng_seed: u64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig { n_seeds: 60, p_max: 10, d: 5, n_augmented: None, eps1: 0.3, eps2: 1.0, eps_da: 1e-6, rng_seed: 0 }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_seeds == 0 || self.p_max == 0 || self.d == 0 || self.n_augmented == Some(0) {
            return invalid("n_seeds, p_max, d and n_augmented must be positive");
        }
        if !(0.0..=1.0).contains(&self.eps1) || !(0.0..=1.0).contains(&self.eps2) {
            return invalid("eps1 and eps2 must lie in [0, 1]");
        }
        if !(self.eps_da > 0.0) {
            return invalid("eps_da must be positive");
        }
        Ok(())
    }

    pub fn n_augmented_for(&self, n_train: usize) -> usize {
        self.n_augmented.unwrap_or(9 * n_train)
    }
}

/// Training point of class `k` minimising the in-class dissimilarity sum;
/// ties go to the lowest index.
pub fn class_medoid<T: Scalar>(delta: &DissimilarityMatrix<T>, labels: &[usize], k: usize) -> Option<usize> {
    let members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == k).collect();
    let cost = |m: usize| members.iter().fold(T::zero(), |acc, &i| acc + delta.get(m, i));
    members.iter().copied().fold(None, |best: Option<(usize, T)>, m| {
        let c = cost(m);
        match best {
            Some((_, bc)) if c >= bc => best,
            _ => Some((m, c)),
        }
    })
    .map(|(m, _)| m)
}

/// Seeds of class `k`: filter out points near a foreign point or isolated,
/// then spread seeds by maximin dissimilarity starting from the medoid.
///
/// With `δ_ref` the smallest dissimilarity between the medoid and a foreign
/// point, a class member is dropped when a foreign point lies strictly within
/// `eps1 · δ_ref`, or when no other point lies within `eps2 · δ_ref`. At most
/// `n_seeds` seeds are returned.
pub fn select_seeds<T: Scalar>(
    delta: &DissimilarityMatrix<T>,
    labels: &[usize],
    k: usize,
    medoid: usize,
    cfg: &AugmentConfig,
) -> Result<Vec<usize>> {
    let n = labels.len();
    if delta.len() != n {
        return invalid("dissimilarity matrix and labels disagree in size");
    }
    if medoid >= n || labels[medoid] != k {
        return invalid(format!("medoid {medoid} is not a member of class {k}"));
    }
    let members: Vec<usize> = (0..n).filter(|&i| labels[i] == k).collect();
    let foreign: Vec<usize> = (0..n).filter(|&i| labels[i] != k).collect();
    let d = |i: usize, j: usize| delta.get(i, j).as_f64();
    let delta_ref = foreign.iter().map(|&j| d(medoid, j)).fold(f64::INFINITY, f64::min);
    let near_foreign = cfg.eps1 * delta_ref;
    let isolation = cfg.eps2 * delta_ref;
    let survivors: Vec<usize> = members
        .iter()
        .copied()
        .filter(|&i| !foreign.iter().any(|&j| d(i, j) < near_foreign))
        .filter(|&i| (0..n).any(|j| j != i && d(i, j) <= isolation))
        .collect();
    if survivors.is_empty() {
        return Err(Error::EmptySeeds { class: k });
    }
    let first = if survivors.contains(&medoid) {
        medoid
    } else {
        *survivors.iter().min_by(|&&a, &&b| d(medoid, a).total_cmp(&d(medoid, b)).then(a.cmp(&b))).unwrap()
    };
    let mut seeds = vec![first];
    let mut min_d: Vec<f64> = survivors.iter().map(|&i| d(i, first)).collect();
    let mut taken: Vec<bool> = survivors.iter().map(|&i| i == first).collect();
    while seeds.len() < cfg.n_seeds.min(survivors.len()) {
        let mut pick: Option<usize> = None;
        for (p, &dist) in min_d.iter().enumerate() {
            if !taken[p] && pick.is_none_or(|q| dist > min_d[q]) {
                pick = Some(p);
            }
        }
        let p = pick.expect("survivors remain");
        taken[p] = true;
        let next = survivors[p];
        seeds.push(next);
        for (q, m) in min_d.iter_mut().enumerate() {
            *m = m.min(d(survivors[q], next));
        }
    }
    Ok(seeds)
}

fn mix_seed(base: u64, a: u64, b: u64) -> u64 {
    // splitmix64 finaliser over the combined words
    let mut z = base ^ a.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ b.wrapping_mul(0xc2b2_ae3d_27d4_eb4f);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Grows a pure set from `seed` by appending its nearest neighbours under δ
/// (ties by lowest index) and keeps the longest prefix that passes the
/// projected purity test. A foreign neighbour ends the growth.
pub fn grow_pure_set<T: Scalar>(
    seed: usize,
    delta: &DissimilarityMatrix<T>,
    features: ArrayView2<T>,
    labels: &[usize],
    cfg: &AugmentConfig,
) -> Result<Vec<usize>> {
    let n = labels.len();
    if seed >= n || features.nrows() != n || delta.len() != n {
        return invalid("seed, features, labels and dissimilarities disagree");
    }
    let k = labels[seed];
    let mut order: Vec<usize> = (0..n).filter(|&j| j != seed).collect();
    order.sort_by(|&a, &b| delta.get(seed, a).as_f64().total_cmp(&delta.get(seed, b).as_f64()).then(a.cmp(&b)));
    let mut set = vec![seed];
    for (step, &next) in order.iter().enumerate() {
        if labels[next] != k {
            break;
        }
        set.push(next);
        let seed_for_test = mix_seed(cfg.rng_seed, seed as u64, step as u64);
        if !projected_purity_test(&set, k, features, labels, cfg.d, cfg.p_max, T::lit(cfg.eps_da), seed_for_test)? {
            set.pop();
            break;
        }
    }
    Ok(set)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PureSetEntry {
    pub class: usize,
    pub slot: usize,
    /// Sample indices in growth order.
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PureSetRegistry {
    pub entries: Vec<PureSetEntry>,
    /// Classes for which no pure set could be built.
    pub empty_classes: Vec<usize>,
}

impl PureSetRegistry {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Copy with member indices mapped through `rows` (e.g. from positions in
    /// the training split to dataset indices).
    pub fn remap(&self, rows: &[usize]) -> PureSetRegistry {
        PureSetRegistry {
            entries: self
                .entries
                .iter()
                .map(|e| PureSetEntry { class: e.class, slot: e.slot, members: e.members.iter().map(|&m| rows[m]).collect() })
                .collect(),
            empty_classes: self.empty_classes.clone(),
        }
    }
}

/// Drops every set contained in another set of the same class; among equal
/// sets the first is kept.
pub fn merge_by_inclusion(sets: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    let sorted: Vec<Vec<usize>> = sets
        .iter()
        .map(|s| {
            let mut v = s.clone();
            v.sort_unstable();
            v
        })
        .collect();
    let contains = |big: &[usize], small: &[usize]| small.iter().all(|x| big.binary_search(x).is_ok());
    let mut keep = Vec::new();
    for (a, set) in sets.into_iter().enumerate() {
        let absorbed = (0..sorted.len()).any(|b| {
            b != a
                && contains(&sorted[b], &sorted[a])
                && (sorted[b].len() > sorted[a].len() || b < a)
        });
        if !absorbed {
            keep.push(set);
        }
    }
    keep
}

/// Seeds, growth and merging for every class `1..=n_classes`.
/// `medoids[k-1]` is the medoid of class `k` among the given rows.
pub fn build_registry<T: Scalar>(
    features: ArrayView2<T>,
    labels: &[usize],
    delta: &DissimilarityMatrix<T>,
    medoids: &[usize],
    cfg: &AugmentConfig,
) -> Result<PureSetRegistry> {
    cfg.validate()?;
    let mut entries = Vec::new();
    let mut empty_classes = Vec::new();
    for (c, &medoid) in medoids.iter().enumerate() {
        let k = c + 1;
        let seeds = match select_seeds(delta, labels, k, medoid, cfg) {
            Ok(s) => s,
            Err(Error::EmptySeeds { class }) => {
                log::warn!("class {class}: every candidate seed was filtered out");
                empty_classes.push(class);
                continue;
            }
            Err(e) => return Err(e),
        };
        let grown = seeds
            .iter()
            .map(|&s| grow_pure_set(s, delta, features, labels, cfg))
            .collect::<Result<Vec<_>>>()?;
        let merged = merge_by_inclusion(grown);
        log::info!("class {k}: {} seeds, {} pure sets after merging", seeds.len(), merged.len());
        for (slot, members) in merged.into_iter().enumerate() {
            entries.push(PureSetEntry { class: k, slot, members });
        }
    }
    Ok(PureSetRegistry { entries, empty_classes })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub entry: usize,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedDataset<T> {
    pub samples: Array2<T>,
    pub labels: Vec<usize>,
    pub provenance: Vec<Provenance>,
}

/// Flat Dirichlet weights: normalised unit exponentials.
fn dirichlet_weights(n: usize, seed: u64, sample: u64) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    let mut rng = stream_rng(seed, sample);
    let raw: Vec<f64> = (0..n).map(|_| Exp1.sample(&mut rng)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

/// `Σ_j w_j · rows[members[j]]`.
pub fn convex_combination<T: Scalar>(rows: ArrayView2<T>, members: &[usize], weights: &[f64]) -> Array1<T> {
    let mut out = Array1::zeros(rows.ncols());
    for (&m, &w) in members.iter().zip(weights) {
        out.scaled_add(T::lit(w), &rows.row(m));
    }
    out
}

/// Distributes `n_augmented` samples round-robin over the registry entries
/// and draws each as a random convex combination of the entry's members.
/// Member indices refer to rows of `features`.
pub fn generate_augmented<T: Scalar>(
    registry: &PureSetRegistry,
    features: ArrayView2<T>,
    n_augmented: usize,
    rng_seed: u64,
) -> Result<AugmentedDataset<T>> {
    if registry.is_empty() {
        return Err(Error::InvalidState("the pure-set registry is empty".into()));
    }
    if let Some(m) = registry.entries.iter().flat_map(|e| e.members.iter()).find(|&&m| m >= features.nrows()) {
        return invalid(format!("registry member {m} is out of range"));
    }
    let mut samples = Array2::zeros((n_augmented, features.ncols()));
    let mut labels = Vec::with_capacity(n_augmented);
    let mut provenance = Vec::with_capacity(n_augmented);
    for i in 0..n_augmented {
        let e = i % registry.len();
        let entry = &registry.entries[e];
        let weights = dirichlet_weights(entry.members.len(), rng_seed, i as u64);
        samples.row_mut(i).assign(&convex_combination(features, &entry.members, &weights));
        labels.push(entry.class);
        provenance.push(Provenance { entry: e, weights });
    }
    Ok(AugmentedDataset { samples, labels, provenance })
}

/// Replays the recorded convex combinations on another representation of
/// the same samples (e.g. full fields), whose rows are indexed like the
/// registry members.
pub fn replay_provenance<T: Scalar>(registry: &PureSetRegistry, provenance: &[Provenance], rows: ArrayView2<T>) -> Array2<T> {
    let mut out = Array2::zeros((provenance.len(), rows.ncols()));
    for (i, p) in provenance.iter().enumerate() {
        out.row_mut(i)
            .assign(&convex_combination(rows, &registry.entries[p.entry].members, &p.weights));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub n_audited: usize,
    pub n_agree: usize,
    pub fidelity: f64,
    /// `(augmented sample index, assigned label, recomputed label)`.
    pub mismatches: Vec<(usize, usize, usize)>,
}

/// Recomputes the label of augmented full fields by nearest medoid under the
/// subspace dissimilarity and reports the agreement rate.
pub fn audit_relabel<T: Scalar>(
    fields: ArrayView2<T>,
    assigned: &[usize],
    sample_ids: &[usize],
    mesh: &Mesh<T>,
    medoid_fields: ArrayView2<T>,
    cfg: &LabelingConfig,
) -> Result<AuditReport> {
    if fields.nrows() != assigned.len() {
        return invalid("one assigned label per audited field is required");
    }
    if sample_ids.is_empty() {
        return invalid("audit sample is empty");
    }
    let bases: Vec<SubspaceBasis<T>> = medoid_fields
        .rows()
        .into_iter()
        .map(|row| field_basis(row, mesh, cfg))
        .collect::<Result<_>>()?;
    let mut mismatches = Vec::new();
    for &i in sample_ids {
        let got = relabel(&field_basis(fields.row(i), mesh, cfg)?, &bases);
        if got != assigned[i] {
            mismatches.push((i, assigned[i], got));
        }
    }
    let n_agree = sample_ids.len() - mismatches.len();
    Ok(AuditReport {
        n_audited: sample_ids.len(),
        n_agree,
        fidelity: n_agree as f64 / sample_ids.len() as f64,
        mismatches,
    })
}

/// Seeded choice of `size` distinct indices in `0..n`, sorted.
pub fn audit_sample(n: usize, size: usize, rng_seed: u64) -> Vec<usize> {
    let mut v = rand::seq::index::sample(&mut stream_rng(rng_seed, 0x6175), n, size.min(n)).into_vec();
    v.sort_unstable();
    v
}

/// Per-feature bounding box check used by invariants and tests.
pub fn within_bounding_box<T: Scalar>(x: ArrayView1<T>, rows: ArrayView2<T>, members: &[usize], tol: T) -> bool {
    (0..x.len()).all(|c| {
        let (lo, hi) = members
            .iter()
            .fold((T::infinity(), T::neg_infinity()), |(l, h), &m| (l.min(rows[(m, c)]), h.max(rows[(m, c)])));
        x[c] >= lo - tol && x[c] <= hi + tol
    })
}
