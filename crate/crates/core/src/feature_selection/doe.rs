//! Design of experiments: node pairs sampled at prescribed distances.

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::Scalar;
use crate::synth::{stream_rng, Mesh};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodePair {
    pub i: usize,
    pub j: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoeBin {
    pub target: f64,
    pub requested: usize,
    pub pairs: Vec<NodePair>,
    /// Number of requested pairs the mesh could not supply.
    pub shortfall: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoePlan {
    pub probe_nodes: Vec<usize>,
    pub bin_tol: f64,
    pub bins: Vec<DoeBin>,
}

impl DoePlan {
    pub fn pairs(&self) -> impl Iterator<Item = &NodePair> {
        self.bins.iter().flat_map(|b| b.pairs.iter())
    }

    pub fn n_pairs(&self) -> usize {
        self.bins.iter().map(|b| b.pairs.len()).sum()
    }

    /// Bins that returned fewer pairs than requested.
    pub fn shortfalls(&self) -> Vec<(f64, usize)> {
        self.bins.iter().filter(|b| b.shortfall > 0).map(|b| (b.target, b.shortfall)).collect()
    }
}

/// Geometrically spaced distances from the smallest node spacing to half the
/// mesh diameter; pair counts shrink from `n_max` to `n_min` as the distance
/// grows.
pub fn default_bins<T: Scalar>(mesh: &Mesh<T>, n_bins: usize, n_max: usize, n_min: usize) -> Vec<(f64, usize)> {
    let h = match mesh.grid() {
        Some(g) => {
            let mut h = f64::INFINITY;
            if g.nx > 1 {
                h = h.min(g.dx.as_f64());
            }
            if g.ny > 1 {
                h = h.min(g.dy.as_f64());
            }
            h
        }
        None => (1..mesh.len()).map(|j| mesh.distance(0, j).as_f64()).fold(f64::INFINITY, f64::min),
    };
    let far = 0.5 * mesh.diameter_bound().as_f64();
    if n_bins == 0 || !(far > h) {
        return vec![(h, n_max)];
    }
    (0..n_bins)
        .map(|b| {
            let t = if n_bins == 1 { 0.0 } else { b as f64 / (n_bins - 1) as f64 };
            let r = h * (far / h).powf(t);
            let n = (n_max as f64 + t * (n_min as f64 - n_max as f64)).round() as usize;
            (r, n.max(1))
        })
        .collect()
}

/// Draws node pairs at each target distance. Only the distance rows of
/// `n_probe_nodes` random nodes are evaluated; a pair qualifies for bin
/// `(r, n)` when its length is within `bin_tol · r` of `r`.
pub fn build_doe<T: Scalar>(mesh: &Mesh<T>, n_probe_nodes: usize, bins: &[(f64, usize)], bin_tol: f64, rng_seed: u64) -> Result<DoePlan> {
    if bins.is_empty() {
        return invalid("at least one distance bin is required");
    }
    if bins.iter().any(|&(r, n)| !(r > 0.0) || n == 0) {
        return invalid("bin distances and counts must be positive");
    }
    if bins.windows(2).any(|w| w[1].0 <= w[0].0) {
        return invalid("bin distances must be increasing");
    }
    if n_probe_nodes == 0 || !(bin_tol > 0.0) {
        return invalid("n_probe_nodes and bin_tol must be positive");
    }
    let n = mesh.len();
    let mut rng = stream_rng(rng_seed, 0);
    let mut probes = index::sample(&mut rng, n, n_probe_nodes.min(n)).into_vec();
    probes.sort_unstable();

    let mut rows: Vec<(usize, usize, f64)> = Vec::new();
    for &p in &probes {
        for j in 0..n {
            if j == p || (probes.binary_search(&j).is_ok() && j < p) {
                continue;
            }
            rows.push((p.min(j), p.max(j), mesh.distance(p, j).as_f64()));
        }
    }
    rows.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    rows.dedup_by(|a, b| a.0 == b.0 && a.1 == b.1);

    let out_bins = bins
        .iter()
        .enumerate()
        .map(|(b, &(r, want))| {
            let candidates: Vec<&(usize, usize, f64)> = rows.iter().filter(|(_, _, d)| (d - r).abs() <= bin_tol * r).collect();
            let take = want.min(candidates.len());
            let mut rng = stream_rng(rng_seed, 1 + b as u64);
            let mut chosen = index::sample(&mut rng, candidates.len(), take).into_vec();
            chosen.sort_unstable();
            DoeBin {
                target: r,
                requested: want,
                pairs: chosen
                    .into_iter()
                    .map(|c| {
                        let &(i, j, d) = candidates[c];
                        NodePair { i, j, distance: d }
                    })
                    .collect(),
                shortfall: want - take,
            }
        })
        .collect();
    Ok(DoePlan { probe_nodes: probes, bin_tol, bins: out_bins })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::build_rectangular_mesh;

    #[test]
    fn spacing_bin_gives_adjacent_nodes() {
        let mesh = build_rectangular_mesh(10, 8, 9.0f64, 7.0).unwrap();
        let plan = build_doe(&mesh, 4, &[(1.0, 5)], 0.05, 1).unwrap();
        assert_eq!(plan.bins[0].pairs.len(), 5);
        for p in plan.pairs() {
            let (a, b) = (mesh.node(p.i), mesh.node(p.j));
            let manhattan = (a[0] - b[0]).abs() + (a[1] - b[1]).abs();
            assert!((manhattan - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn bins_beyond_diameter_report_shortfall() {
        let mesh = build_rectangular_mesh(5, 5, 4.0, 4.0).unwrap();
        let plan = build_doe(&mesh, 3, &[(1.0, 2), (100.0, 3), (200.0, 1)], 0.1, 1).unwrap();
        assert_eq!(plan.bins[0].shortfall, 0);
        assert_eq!(plan.shortfalls(), vec![(100.0, 3), (200.0, 1)]);
    }

    #[test]
    fn realized_distances_within_tolerance() {
        let mesh = build_rectangular_mesh(50, 40, 49.0f64, 39.0).unwrap();
        let bins: Vec<(f64, usize)> = (1..=10).map(|r| (r as f64, 20)).collect();
        let plan = build_doe(&mesh, 8, &bins, 0.05, 3).unwrap();
        for bin in &plan.bins {
            assert!(!bin.pairs.is_empty());
            for p in &bin.pairs {
                let (a, b) = (mesh.node(p.i), mesh.node(p.j));
                let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
                assert_eq!(d, p.distance);
                assert!((d - bin.target).abs() <= 0.05 * bin.target);
            }
        }
        assert_eq!(plan, build_doe(&mesh, 8, &bins, 0.05, 3).unwrap());
    }

    #[test]
    fn rejects_unsorted_bins() {
        let mesh = build_rectangular_mesh(5, 5, 4.0, 4.0).unwrap();
        assert!(build_doe(&mesh, 3, &[(2.0, 2), (1.0, 2)], 0.1, 1).is_err());
        assert!(build_doe(&mesh, 3, &[], 0.1, 1).is_err());
    }

    #[test]
    fn default_bins_shrink_counts() {
        let mesh = build_rectangular_mesh(50, 40, 1.0, 0.8).unwrap();
        let bins = default_bins(&mesh, 12, 120, 20);
        assert_eq!(bins.len(), 12);
        assert!((bins[0].0 - 1.0 / 49.0).abs() < 1e-12);
        assert!(bins.windows(2).all(|w| w[1].0 > w[0].0 && w[1].1 <= w[0].1));
    }
}
