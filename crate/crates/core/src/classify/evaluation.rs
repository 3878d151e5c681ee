//! Factorial evaluation: classifiers × reducers × with/without augmentation.

use std::fmt::Write as _;

use ndarray::{concatenate, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::ensemble::{ensemble_average, stack};
use super::models::{tune_classifier, ClassifierKind, ClassifierModel, Labeled};
use super::pca::Pca;
use crate::augment::{replay_provenance, Provenance, PureSetRegistry};
use crate::error::{invalid, Result};
use crate::feature_selection::FeatureSet;
use crate::scalar::Scalar;
use crate::synth::{FieldDataset, SplitTag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReducerKind {
    Pca,
    FeatureSelection,
}

impl ReducerKind {
    pub const ALL: [ReducerKind; 2] = [ReducerKind::Pca, ReducerKind::FeatureSelection];

    pub fn name(self) -> &'static str {
        match self {
            ReducerKind::Pca => "pca",
            ReducerKind::FeatureSelection => "feature_selection",
        }
    }
}

/// Reducer fitted on the training split and applied unchanged elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub enum Reducer<T> {
    Pca(Pca<T>),
    Select(FeatureSet),
}

impl<T: Scalar> Reducer<T> {
    pub fn apply(&self, x: ArrayView2<T>) -> Array2<T> {
        match self {
            Reducer::Pca(p) => p.transform(x),
            Reducer::Select(s) => s.project(x),
        }
    }
}

/// Reduced features and labels with the reducer that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedDataset<T> {
    pub features: Array2<T>,
    pub labels: Vec<usize>,
    pub reducer: ReducerKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationConfig {
    pub pca_components: usize,
    pub stack_penalty: f64,
    pub seed: u64,
    pub config_hash: String,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        EvaluationConfig { pca_components: 10, stack_penalty: 1e-2, seed: 0, config_hash: String::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub classifier: String,
    pub reducer: String,
    pub augmented: bool,
    pub accuracy: Option<f64>,
    pub validation_accuracy: Option<f64>,
    pub hyper: Option<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainRow {
    pub classifier: String,
    pub reducer: String,
    pub gain: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleRow {
    pub method: String,
    pub reducer: String,
    pub augmented: bool,
    pub accuracy: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub seed: u64,
    pub config_hash: String,
    pub n_train: usize,
    pub n_validation: usize,
    pub n_test: usize,
    pub n_augmented: usize,
    pub pca_components: usize,
    pub n_selected_features: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub metadata: ReportMetadata,
    pub rows: Vec<ReportRow>,
    pub gains: Vec<GainRow>,
    pub mean_gain: Option<f64>,
    pub nonnegative_gains: usize,
    pub ensembles: Vec<EnsembleRow>,
}

impl EvaluationReport {
    /// `classifier,reducer,augmented,accuracy`; failed cells read `failed`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("classifier,reducer,augmented,accuracy\n");
        for r in &self.rows {
            let acc = r.accuracy.map_or_else(|| "failed".to_string(), |a| format!("{a:.6}"));
            let _ = writeln!(out, "{},{},{},{}", r.classifier, r.reducer, r.augmented, acc);
        }
        out
    }

    pub fn accuracy(&self, classifier: &str, reducer: &str, augmented: bool) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.classifier == classifier && r.reducer == reducer && r.augmented == augmented)
            .and_then(|r| r.accuracy)
    }
}

struct Splits<T> {
    train: Array2<T>,
    validation: Array2<T>,
    test: Array2<T>,
}

fn labels_of<T: Scalar>(ds: &FieldDataset<T>, rows: &[usize]) -> Result<Vec<usize>> {
    let labels = ds.labels.as_ref().ok_or_else(|| crate::error::Error::InvalidState("dataset is unlabeled".into()))?;
    Ok(rows.iter().map(|&i| labels[i]).collect())
}

/// Runs every classifier of the menu on both reducers, with and without the
/// augmented samples, plus the averaging and stacking ensembles.
pub fn run_matrix_evaluation<T: Scalar>(
    ds: &FieldDataset<T>,
    selected: &FeatureSet,
    registry: &PureSetRegistry,
    provenance: &[Provenance],
    augmented_labels: &[usize],
    cfg: &EvaluationConfig,
) -> Result<EvaluationReport> {
    if provenance.len() != augmented_labels.len() {
        return invalid("one label per augmented sample is required");
    }
    let idx = |t| ds.split_indices(t);
    let (tr, va, te) = (idx(SplitTag::Train), idx(SplitTag::Validation), idx(SplitTag::Test));
    if tr.is_empty() || va.is_empty() || te.is_empty() {
        return invalid("train, validation and test splits must be nonempty");
    }
    let (y_tr, y_va, y_te) = (labels_of(ds, &tr)?, labels_of(ds, &va)?, labels_of(ds, &te)?);
    let full = |rows: &[usize]| ds.samples.select(Axis(0), rows);
    let train_full = full(&tr);
    // registry members index dataset rows
    let aug_full = replay_provenance(registry, provenance, ds.samples.view());
    let mut y_da = y_tr.clone();
    y_da.extend_from_slice(augmented_labels);

    let mut rows = Vec::new();
    let mut ensembles = Vec::new();
    for reducer_kind in ReducerKind::ALL {
        let reducer = match reducer_kind {
            ReducerKind::Pca => Reducer::Pca(Pca::fit(train_full.view(), cfg.pca_components, SplitTag::Train)?),
            ReducerKind::FeatureSelection => Reducer::Select(selected.clone()),
        };
        let s = Splits {
            train: reducer.apply(train_full.view()),
            validation: reducer.apply(full(&va).view()),
            test: reducer.apply(full(&te).view()),
        };
        let x_da = concatenate(Axis(0), &[s.train.view(), reducer.apply(aug_full.view()).view()]).expect("equal widths");
        let validation = Labeled::new(s.validation.view(), &y_va, SplitTag::Validation)?;
        for augmented in [false, true] {
            let train = if augmented {
                Labeled::new(x_da.view(), &y_da, SplitTag::Train)?
            } else {
                Labeled::new(s.train.view(), &y_tr, SplitTag::Train)?
            };
            let mut fitted: Vec<ClassifierModel<T>> = Vec::new();
            for kind in ClassifierKind::ALL {
                let row = match tune_classifier(kind, &train, &validation) {
                    Ok((model, hyper, val_acc)) => {
                        let acc = model.accuracy(s.test.view(), &y_te);
                        fitted.push(model);
                        ReportRow {
                            classifier: kind.name().into(),
                            reducer: reducer_kind.name().into(),
                            augmented,
                            accuracy: Some(acc),
                            validation_accuracy: Some(val_acc),
                            hyper: Some(hyper.to_string()),
                            error: None,
                        }
                    }
                    Err(e) => {
                        log::warn!("{} / {} / augmented={augmented} failed: {e}", kind.name(), reducer_kind.name());
                        ReportRow {
                            classifier: kind.name().into(),
                            reducer: reducer_kind.name().into(),
                            augmented,
                            accuracy: None,
                            validation_accuracy: None,
                            hyper: None,
                            error: Some(e.to_string()),
                        }
                    }
                };
                rows.push(row);
            }
            let averaged = ensemble_average(fitted.clone(), None);
            let stacked = stack(fitted, cfg.stack_penalty, &validation);
            for (method, model) in [("average", averaged), ("stacking", stacked)] {
                let (accuracy, error) = match model {
                    Ok(m) => (Some(m.accuracy(s.test.view(), &y_te)), None),
                    Err(e) => (None, Some(e.to_string())),
                };
                ensembles.push(EnsembleRow { method: method.into(), reducer: reducer_kind.name().into(), augmented, accuracy, error });
            }
        }
    }

    let mut gains = Vec::new();
    for reducer_kind in ReducerKind::ALL {
        for kind in ClassifierKind::ALL {
            let find = |aug: bool| {
                rows.iter()
                    .find(|r: &&ReportRow| r.classifier == kind.name() && r.reducer == reducer_kind.name() && r.augmented == aug)
                    .and_then(|r| r.accuracy)
            };
            let gain = match (find(true), find(false)) {
                (Some(a), Some(b)) => Some(a - b),
                _ => None,
            };
            gains.push(GainRow { classifier: kind.name().into(), reducer: reducer_kind.name().into(), gain });
        }
    }
    let valid: Vec<f64> = gains.iter().filter_map(|g| g.gain).collect();
    let mean_gain = (!valid.is_empty()).then(|| valid.iter().sum::<f64>() / valid.len() as f64);
    let nonnegative_gains = valid.iter().filter(|&&g| g >= 0.0).count();
    Ok(EvaluationReport {
        metadata: ReportMetadata {
            seed: cfg.seed,
            config_hash: cfg.config_hash.clone(),
            n_train: tr.len(),
            n_validation: va.len(),
            n_test: te.len(),
            n_augmented: provenance.len(),
            pca_components: cfg.pca_components,
            n_selected_features: selected.len(),
        },
        rows,
        gains,
        mean_gain,
        nonnegative_gains,
        ensembles,
    })
}
