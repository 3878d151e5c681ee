//! End-to-end stages on `f64` data, shared by the command-line tool and the
//! acceptance tests.

use ndarray::{Array2, Axis};

use crate::augment::{
    audit_relabel, audit_sample, build_registry, class_medoid, generate_augmented, replay_provenance, AuditReport,
    AugmentedDataset, PureSetRegistry,
};
use crate::classify::{run_matrix_evaluation, EvaluationConfig, EvaluationReport};
use crate::config::{stage_seed, Config};
use crate::error::{Error, Result};
use crate::feature_selection::{run_feature_selection, FeatureSelectionOutcome, FeatureSet};
use crate::labeling::{label_dataset, DissimilarityMatrix, LabelingOutcome};
use crate::synth::{build_field_model_with, build_rectangular_mesh, sample_fields, split_dataset, FieldDataset, Mesh, SplitTag};

#[derive(Debug, Clone)]
pub struct Generated {
    pub mesh: Mesh<f64>,
    /// Samples with split tags, training rows first.
    pub dataset: FieldDataset<f64>,
}

pub fn generate(cfg: &Config) -> Result<Generated> {
    let m = &cfg.mesh;
    let mesh = build_rectangular_mesh(m.nx, m.ny, m.lx, m.ly)?;
    let model = build_field_model_with(&mesh, &cfg.field, stage_seed(cfg.seed, "field_model"))?;
    let raw = sample_fields(&model, cfg.data.n_samples, stage_seed(cfg.seed, "samples"))?;
    let dataset = split_dataset(&raw, cfg.data.ratios, stage_seed(cfg.seed, "split"))?;
    Ok(Generated { mesh, dataset })
}

pub fn label(cfg: &Config, mesh: &Mesh<f64>, ds: &FieldDataset<f64>) -> Result<LabelingOutcome<f64>> {
    label_dataset(ds, mesh, &cfg.labeling)
}

fn labels(ds: &FieldDataset<f64>) -> Result<&[usize]> {
    ds.labels.as_deref().ok_or_else(|| Error::InvalidState("dataset is unlabeled".into()))
}

fn train_part(ds: &FieldDataset<f64>) -> Result<(Vec<usize>, Array2<f64>, Vec<usize>)> {
    let rows = ds.split_indices(SplitTag::Train);
    let all = labels(ds)?;
    let y = rows.iter().map(|&i| all[i]).collect();
    let x = ds.samples.select(Axis(0), &rows);
    Ok((rows, x, y))
}

/// Feature selection on the training rows only.
pub fn select_features(cfg: &Config, mesh: &Mesh<f64>, ds: &FieldDataset<f64>) -> Result<FeatureSelectionOutcome> {
    let (_, x, y) = train_part(ds)?;
    run_feature_selection(x.view(), &y, mesh, &cfg.feature_selection)
}

#[derive(Debug, Clone)]
pub struct Augmentation {
    /// Pure sets with members given as dataset row indices.
    pub registry: PureSetRegistry,
    /// Per-class medoid of the training rows, as dataset row indices.
    pub class_medoids: Vec<usize>,
    /// Generated samples in the selected-feature space.
    pub augmented: AugmentedDataset<f64>,
}

/// Seeds, pure sets and generation, using training rows only.
pub fn augment(
    cfg: &Config,
    ds: &FieldDataset<f64>,
    delta: &DissimilarityMatrix<f64>,
    selected: &FeatureSet,
) -> Result<Augmentation> {
    let (rows, x, y) = train_part(ds)?;
    let delta_tr = delta.restrict(&rows);
    let features_tr = selected.project(x.view());
    let k = ds.n_classes();
    let local_medoids = (1..=k)
        .map(|c| {
            class_medoid(&delta_tr, &y, c)
                .ok_or_else(|| Error::DegenerateInput(format!("class {c} has no training sample")))
        })
        .collect::<Result<Vec<_>>>()?;
    let registry = build_registry(features_tr.view(), &y, &delta_tr, &local_medoids, &cfg.augment)?.remap(&rows);
    let features = selected.project(ds.samples.view());
    let n_aug = cfg.augment.n_augmented_for(rows.len());
    let augmented = generate_augmented(&registry, features.view(), n_aug, stage_seed(cfg.seed, "generate"))?;
    Ok(Augmentation { registry, class_medoids: local_medoids.iter().map(|&m| rows[m]).collect(), augmented })
}

pub fn evaluate(cfg: &Config, ds: &FieldDataset<f64>, selected: &FeatureSet, aug: &Augmentation) -> Result<EvaluationReport> {
    let eval_cfg = EvaluationConfig {
        pca_components: cfg.pca_components,
        stack_penalty: cfg.stack_penalty,
        seed: cfg.seed,
        config_hash: cfg.hash(),
    };
    run_matrix_evaluation(ds, selected, &aug.registry, &aug.augmented.provenance, &aug.augmented.labels, &eval_cfg)
}

/// Relabels a seeded sample of augmented full fields against the clustering
/// medoids (dataset row indices) and reports the agreement.
pub fn audit(
    cfg: &Config,
    mesh: &Mesh<f64>,
    ds: &FieldDataset<f64>,
    aug: &Augmentation,
    medoids: &[usize],
) -> Result<AuditReport> {
    let fields = replay_provenance(&aug.registry, &aug.augmented.provenance, ds.samples.view());
    let ids = audit_sample(fields.nrows(), cfg.audit_sample_size, stage_seed(cfg.seed, "audit"));
    let medoid_fields = ds.samples.select(Axis(0), medoids);
    audit_relabel(fields.view(), &aug.augmented.labels, &ids, mesh, medoid_fields.view(), &cfg.labeling)
}

/// Every stage in order.
#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub mesh: Mesh<f64>,
    pub labeling: LabelingOutcome<f64>,
    pub selection: FeatureSelectionOutcome,
    pub augmentation: Augmentation,
    pub report: EvaluationReport,
    pub audit: AuditReport,
}

impl PipelineRun {
    pub fn dataset(&self) -> &FieldDataset<f64> {
        &self.labeling.dataset
    }
}

pub fn run_all(cfg: &Config) -> Result<PipelineRun> {
    let g = generate(cfg)?;
    let labeling = label(cfg, &g.mesh, &g.dataset)?;
    let ds = &labeling.dataset;
    let selection = select_features(cfg, &g.mesh, ds)?;
    let augmentation = augment(cfg, ds, &labeling.dissimilarity, selection.selected())?;
    let report = evaluate(cfg, ds, selection.selected(), &augmentation)?;
    let audit = audit(cfg, &g.mesh, ds, &augmentation, &labeling.clustering.medoid_indices)?;
    Ok(PipelineRun { mesh: g.mesh, labeling, selection, augmentation, report, audit })
}
