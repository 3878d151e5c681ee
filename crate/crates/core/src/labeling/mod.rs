//! Physics-informed labeling: simplified simulation, subspace dissimilarity
//! and k-medoids clustering.

pub mod grassmann;
pub mod kmedoids;
pub mod simulation;

pub use grassmann::{
    basis_distance, build_dissimilarity_matrix, grassmann_dissimilarity, principal_angles, DissimilarityMatrix,
    SubspaceBasis,
};
pub use kmedoids::{k_medoids, nearest_medoid, ClusteringResult};
pub use simulation::{run_toy_simulation, SimulationConfig, SnapshotSet};

use ndarray::ArrayView1;

use crate::error::{invalid, Result};
use crate::scalar::Scalar;
use crate::synth::{FieldDataset, Mesh};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelingConfig {
    pub k: usize,
    pub simulation: SimulationConfig,
    pub rank_tol: f64,
    pub max_iter: usize,
    pub rng_seed: u64,
}

impl Default for LabelingConfig {
    fn default() -> Self {
        LabelingConfig { k: 4, simulation: SimulationConfig::default(), rank_tol: 1e-10, max_iter: 100, rng_seed: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct LabelingOutcome<T> {
    pub dataset: FieldDataset<T>,
    pub dissimilarity: DissimilarityMatrix<T>,
    pub clustering: ClusteringResult,
}

/// Snapshot-span basis of one input field.
pub fn field_basis<T: Scalar>(sample: ArrayView1<T>, mesh: &Mesh<T>, cfg: &LabelingConfig) -> Result<SubspaceBasis<T>> {
    let snaps = run_toy_simulation(sample, mesh, &cfg.simulation)?;
    SubspaceBasis::from_snapshots(&snaps, T::lit(cfg.rank_tol))
}

/// Labels every sample with the index of its k-medoids cluster.
pub fn label_dataset<T: Scalar>(ds: &FieldDataset<T>, mesh: &Mesh<T>, cfg: &LabelingConfig) -> Result<LabelingOutcome<T>> {
    if ds.n_features() != mesh.len() {
        return invalid(format!("dataset has {} features for {} mesh nodes", ds.n_features(), mesh.len()));
    }
    let sets = ds
        .samples
        .rows()
        .into_iter()
        .map(|row| run_toy_simulation(row, mesh, &cfg.simulation))
        .collect::<Result<Vec<_>>>()?;
    let dissimilarity = build_dissimilarity_matrix(&sets, T::lit(cfg.rank_tol))?;
    let clustering = k_medoids(&dissimilarity, cfg.k, cfg.rng_seed, cfg.max_iter)?;
    let dataset = ds.clone().with_labels(clustering.assignments.clone(), cfg.k)?;
    Ok(LabelingOutcome { dataset, dissimilarity, clustering })
}

/// Label of a new field: nearest medoid under the subspace dissimilarity.
pub fn relabel<T: Scalar>(basis: &SubspaceBasis<T>, medoid_bases: &[SubspaceBasis<T>]) -> usize {
    let (c, _) = nearest_medoid(|c| basis_distance(basis, &medoid_bases[c]), medoid_bases.len());
    c + 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{build_field_model, build_rectangular_mesh, sample_fields};
    use ndarray::Array2;

    #[test]
    fn identical_samples_share_one_label() {
        let mesh = build_rectangular_mesh(8, 6, 1.0, 0.8).unwrap();
        let row = ndarray::Array1::from_iter((0..48).map(|i| 1.0 + 0.01 * i as f64));
        let samples = Array2::from_shape_fn((5, 48), |(_, j)| row[j]);
        let out = label_dataset(&FieldDataset::new(samples), &mesh, &LabelingConfig { k: 2, ..Default::default() }).unwrap();
        let labels = out.dataset.labels.unwrap();
        assert!(labels.iter().all(|&y| y == labels[0]));
    }

    #[test]
    fn medoids_relabel_to_their_cluster() {
        let mesh = build_rectangular_mesh(12, 10, 1.0, 0.8).unwrap();
        let model = build_field_model(&mesh, 4, 0.3, 2).unwrap();
        let ds = sample_fields(&model, 24, 3).unwrap();
        let cfg = LabelingConfig { k: 3, ..Default::default() };
        let out = label_dataset(&ds, &mesh, &cfg).unwrap();
        let bases: Vec<_> = out
            .clustering
            .medoid_indices
            .iter()
            .map(|&m| field_basis(ds.samples.row(m), &mesh, &cfg).unwrap())
            .collect();
        for (c, &m) in out.clustering.medoid_indices.iter().enumerate() {
            assert_eq!(relabel(&bases[c], &bases), c + 1);
            assert_eq!(out.clustering.assignments[m], c + 1);
        }
        let again = label_dataset(&ds, &mesh, &cfg).unwrap();
        assert_eq!(again.clustering, out.clustering);
    }
}
