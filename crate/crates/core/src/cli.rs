//! Command-line stages. Every stage reads its inputs from the output
//! directory and records what it writes in `manifest.json`, together with the
//! hash of the producing configuration and the SHA-256 of the file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::augment::{AugmentedDataset, Provenance, PureSetRegistry};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::feature_selection::FeatureSelectionOutcome;
use crate::io;
use crate::labeling::{ClusteringResult, DissimilarityMatrix};
use crate::pipeline::{self, Augmentation};
use crate::synth::{FieldDataset, Mesh, SplitTag};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Parser)]
#[command(name = "simclass", version, about = "Simulation-field classification pipeline")]
pub struct Cli {
    /// Configuration file (`key = value` lines).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Overrides the seed of the configuration file.
    #[arg(long, global = true, value_name = "INT")]
    pub seed: Option<u64>,
    /// Artifact directory.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
    /// Accept artifacts written under another configuration or modified since.
    #[arg(long, global = true)]
    pub force: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mesh, field samples and split tags.
    Generate,
    /// Simulation, dissimilarity matrix and clustering labels.
    Label,
    /// Geostatistical mRMR and the baseline selectors.
    SelectFeatures,
    /// Pure sets and augmented samples.
    Augment,
    /// Classifier matrix with and without augmentation.
    Evaluate,
    /// Relabels a sample of the augmented fields.
    AuditAugmentation {
        /// Number of audited samples (default from the configuration).
        #[arg(long)]
        sample_size: Option<usize>,
    },
}

/// Process exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => 2,
        Error::Artifact(_) | Error::Parse { .. } => 3,
        Error::NonConvergence { .. }
        | Error::SingularCovariance { .. }
        | Error::Fit(_)
        | Error::DegenerateInput(_)
        | Error::EmptySeeds { .. } => 4,
        _ => 1,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactRecord {
    pub config_hash: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub artifacts: BTreeMap<String, ArtifactRecord>,
}

/// Augmentation output besides the generated samples themselves.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct AugmentRecord {
    registry: PureSetRegistry,
    class_medoids: Vec<usize>,
    labels: Vec<usize>,
    provenance: Vec<Provenance>,
}

struct Workspace {
    dir: PathBuf,
    cfg: Config,
    hash: String,
    force: bool,
    manifest: Manifest,
}

impl Workspace {
    fn open(dir: &Path, cfg: Config, force: bool, fresh: bool) -> Result<Self> {
        let path = dir.join(MANIFEST);
        let manifest = if fresh {
            std::fs::create_dir_all(dir)?;
            Manifest::default()
        } else if path.exists() {
            io::read_json(&path).map_err(|e| Error::Artifact(e.to_string()))?
        } else {
            return Err(Error::Artifact(format!("no {MANIFEST} in {}; run `generate` first", dir.display())));
        };
        let hash = cfg.hash();
        Ok(Workspace { dir: dir.to_path_buf(), cfg, hash, force, manifest })
    }

    /// Path of a recorded input after the hash checks.
    fn input(&self, name: &str) -> Result<PathBuf> {
        let record = self
            .manifest
            .artifacts
            .get(name)
            .ok_or_else(|| Error::Artifact(format!("`{name}` is missing; run the stage that produces it")))?;
        let path = self.dir.join(name);
        if record.config_hash != self.hash && !self.force {
            return Err(Error::Artifact(format!(
                "`{name}` was produced by config {} but the current config is {} (use --force to accept)",
                record.config_hash, self.hash
            )));
        }
        let sha = io::sha256_file(&path).map_err(|e| Error::Artifact(format!("`{name}`: {e}")))?;
        if sha != record.sha256 && !self.force {
            return Err(Error::Artifact(format!("`{name}` was modified after it was written")));
        }
        Ok(path)
    }

    fn output(&mut self, name: &str, write: impl FnOnce(&Path) -> Result<()>) -> Result<()> {
        let path = self.dir.join(name);
        write(&path)?;
        let record = ArtifactRecord { config_hash: self.hash.clone(), sha256: io::sha256_file(&path)? };
        self.manifest.artifacts.insert(name.to_string(), record);
        Ok(())
    }

    fn save(&self) -> Result<()> {
        io::write_json(&self.dir.join(MANIFEST), &self.manifest)
    }

    fn mesh(&self) -> Result<Mesh<f64>> {
        io::read_mesh(&self.input("mesh.txt")?)
    }

    fn dataset(&self, labeled: bool) -> Result<FieldDataset<f64>> {
        let samples = io::read_matrix(&self.input("dataset.txt")?)?;
        let tags = io::read_splits(&self.input("splits.txt")?)?;
        let mut ds = FieldDataset::new(samples)
            .with_split_tags(tags)
            .map_err(|e| Error::Artifact(format!("splits.txt: {e}")))?;
        if labeled {
            let labels = io::read_labels(&self.input("labels.txt")?)?;
            ds = ds
                .with_labels(labels, self.cfg.labeling.k)
                .map_err(|e| Error::Artifact(format!("labels.txt: {e}")))?;
        }
        Ok(ds)
    }

    fn features(&self) -> Result<FeatureSelectionOutcome> {
        io::read_json(&self.input("features.json")?)
    }

    fn augmentation(&self) -> Result<Augmentation> {
        let record: AugmentRecord = io::read_json(&self.input("augmented.json")?)?;
        let samples = io::read_matrix(&self.input("augmented.txt")?)?;
        if samples.nrows() != record.labels.len() || record.provenance.len() != record.labels.len() {
            return Err(Error::Artifact("augmented.txt and augmented.json disagree on the sample count".into()));
        }
        Ok(Augmentation {
            registry: record.registry,
            class_medoids: record.class_medoids,
            augmented: AugmentedDataset { samples, labels: record.labels, provenance: record.provenance },
        })
    }
}

fn class_counts(labels: &[usize], k: usize) -> Vec<usize> {
    let mut counts = vec![0; k];
    for &y in labels {
        counts[y - 1] += 1;
    }
    counts
}

/// Runs one subcommand; the caller maps errors through [`exit_code`].
pub fn run(cli: &Cli) -> Result<()> {
    let path = cli.config.as_ref().ok_or_else(|| Error::Config("--config is required".into()))?;
    let cfg = Config::load(path, cli.seed)?;
    let fresh = matches!(cli.command, Command::Generate);
    let mut ws = Workspace::open(&cli.out, cfg, cli.force, fresh)?;
    let hash = ws.hash.clone();
    let short = &hash[..12];
    match &cli.command {
        Command::Generate => {
            let g = pipeline::generate(&ws.cfg)?;
            let tags = g.dataset.split_tags.clone().unwrap_or_default();
            ws.output("mesh.txt", |p| io::write_mesh(p, &g.mesh))?;
            ws.output("dataset.txt", |p| io::write_matrix(p, &g.dataset.samples))?;
            ws.output("splits.txt", |p| io::write_splits(p, &tags))?;
            let count = |t| g.dataset.split_indices(t).len();
            println!(
                "generate: {} samples x {} nodes (train {}, validation {}, test {}), config {short}",
                g.dataset.len(),
                g.dataset.n_features(),
                count(SplitTag::Train),
                count(SplitTag::Validation),
                count(SplitTag::Test)
            );
        }
        Command::Label => {
            let mesh = ws.mesh()?;
            let ds = ws.dataset(false)?;
            let out = pipeline::label(&ws.cfg, &mesh, &ds)?;
            let c = &out.clustering;
            ws.output("labels.txt", |p| io::write_labels(p, &c.assignments))?;
            ws.output("dissimilarity.txt", |p| io::write_matrix(p, out.dissimilarity.values()))?;
            ws.output("clustering.json", |p| io::write_json(p, c))?;
            println!(
                "label: class sizes {:?}, objective {:.6}, config {short}",
                class_counts(&c.assignments, ws.cfg.labeling.k),
                c.objective
            );
        }
        Command::SelectFeatures => {
            let mesh = ws.mesh()?;
            let ds = ws.dataset(true)?;
            let out = pipeline::select_features(&ws.cfg, &mesh, &ds)?;
            ws.output("features.json", |p| io::write_json(p, &out))?;
            println!(
                "select-features: {} features ({:?}), config {short}",
                out.selected().len(),
                out.geostatistical.stop
            );
        }
        Command::Augment => {
            let ds = ws.dataset(true)?;
            let delta = DissimilarityMatrix::new(io::read_matrix(&ws.input("dissimilarity.txt")?)?)
                .map_err(|e| Error::Artifact(format!("dissimilarity.txt: {e}")))?;
            let features = ws.features()?;
            let aug = pipeline::augment(&ws.cfg, &ds, &delta, features.selected())?;
            let record = AugmentRecord {
                registry: aug.registry.clone(),
                class_medoids: aug.class_medoids.clone(),
                labels: aug.augmented.labels.clone(),
                provenance: aug.augmented.provenance.clone(),
            };
            ws.output("augmented.txt", |p| io::write_matrix(p, &aug.augmented.samples))?;
            ws.output("augmented.json", |p| io::write_json(p, &record))?;
            println!(
                "augment: {} pure sets, {} samples, config {short}",
                aug.registry.len(),
                aug.augmented.labels.len()
            );
        }
        Command::Evaluate => {
            let ds = ws.dataset(true)?;
            let features = ws.features()?;
            let aug = ws.augmentation()?;
            let report = pipeline::evaluate(&ws.cfg, &ds, features.selected(), &aug)?;
            ws.output("report.csv", |p| Ok(std::fs::write(p, report.to_csv())?))?;
            ws.output("report.json", |p| io::write_json(p, &report))?;
            let gain = report.mean_gain.map_or_else(|| "n/a".to_string(), |g| format!("{g:+.4}"));
            println!(
                "evaluate: mean gain {gain}, {} of {} cells nonnegative, config {short}",
                report.nonnegative_gains,
                report.gains.len()
            );
        }
        Command::AuditAugmentation { sample_size } => {
            let mesh = ws.mesh()?;
            let ds = ws.dataset(false)?;
            let clustering: ClusteringResult = io::read_json(&ws.input("clustering.json")?)?;
            let aug = ws.augmentation()?;
            let mut cfg = ws.cfg.clone();
            if let Some(n) = sample_size {
                cfg.audit_sample_size = *n;
            }
            let report = pipeline::audit(&cfg, &mesh, &ds, &aug, &clustering.medoid_indices)?;
            ws.output("audit.json", |p| io::write_json(p, &report))?;
            println!(
                "audit-augmentation: fidelity {:.4} ({} of {}), config {short}",
                report.fidelity, report.n_agree, report.n_audited
            );
        }
    }
    ws.save()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Config("x".into())), 2);
        assert_eq!(exit_code(&Error::Artifact("x".into())), 3);
        assert_eq!(exit_code(&Error::Fit("x".into())), 4);
        assert_eq!(exit_code(&Error::InvalidArgument("x".into())), 1);
    }

    #[test]
    fn arguments_parse() {
        let cli = Cli::try_parse_from(["simclass", "--config", "a.conf", "audit-augmentation", "--sample-size", "5", "--force"]).unwrap();
        assert!(cli.force);
        assert!(matches!(cli.command, Command::AuditAugmentation { sample_size: Some(5) }));
        assert!(Cli::try_parse_from(["simclass", "frobnicate"]).is_err());
    }
}
