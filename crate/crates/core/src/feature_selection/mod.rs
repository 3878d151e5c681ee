//! Geostatistical mRMR feature selection and the baseline selectors.

pub mod doe;
pub mod mrmr;
pub mod redundancy;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

pub use doe::{build_doe, default_bins, DoeBin, DoePlan, NodePair};
pub use mrmr::{
    geometric_filter, geometric_filter_from, geostatistical_mrmr, greedy_mrmr, mi_filter, redundancy_exact,
    redundancy_model, relevance, relevance_scores, selector_metrics, FeatureSet, ModelRedundancy, PairRedundancy,
    Selection, SelectorMetrics, SelectorReport, StopReason, StoppingConfig, TableRedundancy,
};
pub use redundancy::{fit_redundancy_model, fit_to_samples, FitGrid, FittedModel, RedundancyModel};

use crate::error::{invalid, Result};
use crate::mutual_info::{mi_feature_feature_exact, DEFAULT_K_NEIGHBORS};
use crate::scalar::Scalar;
use crate::synth::Mesh;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSelectionConfig {
    pub k_neighbors: usize,
    pub n_probe_nodes: usize,
    pub n_bins: usize,
    pub pairs_near: usize,
    pub pairs_far: usize,
    pub bin_tol: f64,
    pub stopping: StoppingConfig,
    pub manual_model: Option<RedundancyModel>,
    pub rng_seed: u64,
}

impl Default for FeatureSelectionConfig {
    fn default() -> Self {
        FeatureSelectionConfig {
            k_neighbors: DEFAULT_K_NEIGHBORS,
            n_probe_nodes: 8,
            n_bins: 12,
            pairs_near: 120,
            pairs_far: 20,
            bin_tol: 0.1,
            stopping: StoppingConfig::default(),
            manual_model: None,
            rng_seed: 0,
        }
    }
}

/// Everything produced by the selection stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSelectionOutcome {
    pub relevance: Vec<f64>,
    pub doe: DoePlan,
    pub doe_mi: Vec<f64>,
    pub model: FittedModel,
    pub geostatistical: Selection,
    pub reports: Vec<SelectorReport>,
}

impl FeatureSelectionOutcome {
    pub fn selected(&self) -> &FeatureSet {
        &self.geostatistical.features
    }

    pub fn report(&self, method: &str) -> Option<&SelectorReport> {
        self.reports.iter().find(|r| r.method == method)
    }
}

/// Gaussian MI between the field values at the two nodes of every DOE pair.
pub fn doe_mutual_information<T: Scalar>(x: ArrayView2<T>, plan: &DoePlan) -> Result<Vec<f64>> {
    plan.pairs()
        .map(|p| {
            let a = x.column(p.i).to_vec();
            let b = x.column(p.j).to_vec();
            mi_feature_feature_exact(&a, &b).map(|v| v.as_f64())
        })
        .collect()
}

/// Runs the four stages (DOE, metamodel, relevance, greedy selection) on the
/// training rows and evaluates the MI filter and the geometric filter at the
/// same cardinality.
pub fn run_feature_selection<T: Scalar>(
    x_train: ArrayView2<T>,
    labels: &[usize],
    mesh: &Mesh<T>,
    cfg: &FeatureSelectionConfig,
) -> Result<FeatureSelectionOutcome> {
    if x_train.ncols() != mesh.len() {
        return invalid(format!("{} features for {} mesh nodes", x_train.ncols(), mesh.len()));
    }
    let bins = default_bins(mesh, cfg.n_bins, cfg.pairs_near, cfg.pairs_far);
    let doe = build_doe(mesh, cfg.n_probe_nodes, &bins, cfg.bin_tol, cfg.rng_seed)?;
    for (r, missing) in doe.shortfalls() {
        log::warn!("DOE bin r = {r:.4} is short of {missing} pairs");
    }
    let doe_mi = doe_mutual_information(x_train, &doe)?;
    let model = fit_redundancy_model(&doe, &doe_mi, cfg.manual_model, None)?;
    log::info!("redundancy model {:?} (rss {:.3e})", model.model, model.rss);

    let relevance = relevance_scores(x_train, labels, cfg.k_neighbors, cfg.rng_seed)?;
    let geostatistical = geostatistical_mrmr(&relevance, mesh, &model.model, &cfg.stopping)?;
    let n_f = geostatistical.features.len();
    log::info!("selected {n_f} features ({:?})", geostatistical.stop);

    let mi = mi_filter(&relevance, n_f)?;
    let geo = geometric_filter(mesh, n_f, cfg.rng_seed)?;
    let mut reports = Vec::with_capacity(3);
    for (method, set, trace) in [
        ("geostatistical_mrmr", &geostatistical.features, geostatistical.objective_trace.clone()),
        ("mi_filter", &mi, Vec::new()),
        ("geometric_filter", &geo, Vec::new()),
    ] {
        reports.push(SelectorReport {
            method: method.to_string(),
            indices: set.indices.clone(),
            objective_trace: trace,
            metrics: selector_metrics(x_train, &relevance, mesh, &model.model, set)?,
        });
    }
    Ok(FeatureSelectionOutcome { relevance, doe, doe_mi, model, geostatistical, reports })
}
