//! Classifier menu, PCA baseline, ensembles and the evaluation harness.

pub mod ensemble;
pub mod evaluation;
pub mod models;
pub mod pca;

pub use ensemble::{ensemble_average, stack};
pub use evaluation::{
    run_matrix_evaluation, EnsembleRow, EvaluationConfig, EvaluationReport, GainRow, ReducedDataset, Reducer, ReducerKind,
    ReportMetadata, ReportRow,
};
pub use models::{
    accuracy, rows_fitted, train_classifier, tune_classifier, ClassifierKind, ClassifierModel, Hyper, Labeled,
};
pub use pca::Pca;
