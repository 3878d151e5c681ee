//! Simulation-field classification: physics-informed labeling, geostatistical
//! feature selection, pure-set data augmentation and classifier evaluation.

pub mod augment;
pub mod classify;
pub mod cli;
pub mod config;
pub mod convex;
pub mod error;
pub mod feature_selection;
pub mod io;
pub mod labeling;
pub mod linalg;
pub mod mutual_info;
pub mod pipeline;
pub mod scalar;
pub mod synth;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Mesh64 = synth::Mesh<f64>;
pub type Mesh32 = synth::Mesh<f32>;
pub type FieldDataset64 = synth::FieldDataset<f64>;
pub type FieldDataset32 = synth::FieldDataset<f32>;
pub type DissimilarityMatrix64 = labeling::DissimilarityMatrix<f64>;
pub type DissimilarityMatrix32 = labeling::DissimilarityMatrix<f32>;
pub type ClassifierModel64 = classify::ClassifierModel<f64>;
pub type ClassifierModel32 = classify::ClassifierModel<f32>;
