//! Flat `key = value` configuration with dotted section keys.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::augment::AugmentConfig;
use crate::error::{Error, Result};
use crate::feature_selection::{FeatureSelectionConfig, RedundancyModel, StoppingConfig};
use crate::labeling::{LabelingConfig, SimulationConfig};
use crate::synth::FieldModelConfig;

/// Every recognised key with its default; `None` marks a required key.
const KEYS: &[(&str, Option<&str>)] = &[
    ("seed", None),
    ("mesh.nx", Some("50")),
    ("mesh.ny", Some("40")),
    ("mesh.lx", Some("1.0")),
    ("mesh.ly", Some("0.8")),
    ("field.n_modes", Some("10")),
    ("field.smoothness", Some("0.25")),
    ("field.reference_mean", Some("1.0")),
    ("field.reference_amplitude", Some("0.5")),
    ("field.coefficient_scale", Some("0.3")),
    ("field.coefficient_decay", Some("1.0")),
    ("data.n_samples", Some("300")),
    ("data.split_train", Some("0.6")),
    ("data.split_validation", Some("0.2")),
    ("data.split_test", Some("0.2")),
    ("labeling.k", Some("4")),
    ("labeling.n_t", Some("5")),
    ("labeling.diffusivity", Some("0.001")),
    ("labeling.reaction", Some("1.0")),
    ("labeling.cfl", Some("0.9")),
    ("labeling.max_step", Some("0.05")),
    ("labeling.rank_tol", Some("1e-10")),
    ("labeling.max_iter", Some("100")),
    ("feature_selection.k_neighbors", Some("3")),
    ("feature_selection.n_probe_nodes", Some("8")),
    ("feature_selection.n_bins", Some("12")),
    ("feature_selection.pairs_near", Some("120")),
    ("feature_selection.pairs_far", Some("20")),
    ("feature_selection.bin_tol", Some("0.1")),
    ("feature_selection.window", Some("10")),
    ("feature_selection.tau_stop", Some("0.001")),
    ("feature_selection.max_features", Some("24")),
    ("feature_selection.relevance_floor", Some("0.0")),
    ("feature_selection.model.i_inf", Some("")),
    ("feature_selection.model.gamma1", Some("")),
    ("feature_selection.model.gamma2", Some("")),
    ("feature_selection.model.r1", Some("")),
    ("feature_selection.model.r2", Some("")),
    ("feature_selection.model.alpha1", Some("")),
    ("feature_selection.model.alpha2", Some("")),
    ("augment.n_seeds", Some("60")),
    ("augment.p_max", Some("10")),
    ("augment.d", Some("5")),
    ("augment.n_augmented", Some("")),
    ("augment.eps1", Some("0.3")),
    ("augment.eps2", Some("1.0")),
    ("augment.eps_da", Some("1e-6")),
    ("evaluate.pca_components", Some("10")),
    ("evaluate.stack_penalty", Some("0.01")),
    ("audit.sample_size", Some("200")),
];

const MODEL_KEYS: [&str; 7] = ["i_inf", "gamma1", "gamma2", "r1", "r2", "alpha1", "alpha2"];

#[derive(Debug, Clone, PartialEq)]
pub struct MeshConfig {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataConfig {
    pub n_samples: usize,
    pub ratios: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub seed: u64,
    pub mesh: MeshConfig,
    pub field: FieldModelConfig,
    pub data: DataConfig,
    pub labeling: LabelingConfig,
    pub feature_selection: FeatureSelectionConfig,
    pub augment: AugmentConfig,
    pub pca_components: usize,
    pub stack_penalty: f64,
    pub audit_sample_size: usize,
    values: BTreeMap<String, String>,
}

/// Seed of one pipeline stage, derived from the master seed.
pub fn stage_seed(seed: u64, stage: &str) -> u64 {
    let digest = Sha256::digest(format!("{seed}/{stage}").as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

fn parse_lines(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Config(format!("line {}: expected `key = value`", n + 1)));
        };
        let key = key.trim().to_string();
        if KEYS.iter().all(|(k, _)| *k != key) {
            return Err(Error::Config(format!("unknown key `{key}` (line {})", n + 1)));
        }
        if map.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(Error::Config(format!("key `{key}` given twice")));
        }
    }
    Ok(map)
}

struct Reader<'a>(&'a BTreeMap<String, String>);

impl Reader<'_> {
    fn raw(&self, key: &str) -> &str {
        self.0.get(key).map(String::as_str).unwrap_or("")
    }

    fn get<V: FromStr>(&self, key: &str) -> Result<V> {
        self.raw(key)
            .parse()
            .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{}`", self.raw(key))))
    }

    fn opt<V: FromStr>(&self, key: &str) -> Result<Option<V>> {
        if self.raw(key).is_empty() {
            Ok(None)
        } else {
            self.get(key).map(Some)
        }
    }
}

impl Config {
    pub fn from_file(path: &Path) -> Result<Self> {
        Self::load(path, None)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_map(parse_lines(text)?)
    }

    /// Reads a config file, with `seed` replaced (or supplied) when given.
    pub fn load(path: &Path, seed: Option<u64>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut map = parse_lines(&text)?;
        if let Some(seed) = seed {
            map.insert("seed".into(), seed.to_string());
        }
        Self::from_map(map)
    }

    /// Default configuration with the given seed.
    pub fn with_seed(seed: u64) -> Self {
        Self::parse(&format!("seed = {seed}")).expect("defaults are valid")
    }

    fn from_map(given: BTreeMap<String, String>) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (key, default) in KEYS {
            let v = match (given.get(*key), default) {
                (Some(v), _) => v.clone(),
                (None, Some(d)) => d.to_string(),
                (None, None) => return Err(Error::Config(format!("missing required key `{key}`"))),
            };
            values.insert(key.to_string(), v);
        }
        let r = Reader(&values);
        let model_given: Vec<Option<f64>> =
            MODEL_KEYS.iter().map(|k| r.opt(&format!("feature_selection.model.{k}"))).collect::<Result<_>>()?;
        let manual_model = match model_given.iter().filter(|v| v.is_some()).count() {
            0 => None,
            7 => {
                let v: Vec<f64> = model_given.into_iter().flatten().collect();
                let m = RedundancyModel { i_inf: v[0], gamma1: v[1], gamma2: v[2], r1: v[3], r2: v[4], alpha1: v[5], alpha2: v[6] };
                m.validate().map_err(|e| Error::Config(format!("`feature_selection.model`: {e}")))?;
                Some(m)
            }
            _ => {
                let missing = MODEL_KEYS
                    .iter()
                    .zip(&model_given)
                    .find(|(_, v)| v.is_none())
                    .map(|(k, _)| *k)
                    .expect("some key missing");
                return Err(Error::Config(format!("missing required key `feature_selection.model.{missing}`")));
            }
        };
        let seed: u64 = r.get("seed")?;
        let cfg = Config {
            seed,
            mesh: MeshConfig { nx: r.get("mesh.nx")?, ny: r.get("mesh.ny")?, lx: r.get("mesh.lx")?, ly: r.get("mesh.ly")? },
            field: FieldModelConfig {
                n_modes: r.get("field.n_modes")?,
                smoothness: r.get("field.smoothness")?,
                reference_mean: r.get("field.reference_mean")?,
                reference_amplitude: r.get("field.reference_amplitude")?,
                coefficient_scale: r.get("field.coefficient_scale")?,
                coefficient_decay: r.get("field.coefficient_decay")?,
            },
            data: DataConfig {
                n_samples: r.get("data.n_samples")?,
                ratios: [r.get("data.split_train")?, r.get("data.split_validation")?, r.get("data.split_test")?],
            },
            labeling: LabelingConfig {
                k: r.get("labeling.k")?,
                simulation: SimulationConfig {
                    n_t: r.get("labeling.n_t")?,
                    diffusivity: r.get("labeling.diffusivity")?,
                    reaction: r.get("labeling.reaction")?,
                    cfl: r.get("labeling.cfl")?,
                    max_step: r.get("labeling.max_step")?,
                },
                rank_tol: r.get("labeling.rank_tol")?,
                max_iter: r.get("labeling.max_iter")?,
                rng_seed: stage_seed(seed, "labeling"),
            },
            feature_selection: FeatureSelectionConfig {
                k_neighbors: r.get("feature_selection.k_neighbors")?,
                n_probe_nodes: r.get("feature_selection.n_probe_nodes")?,
                n_bins: r.get("feature_selection.n_bins")?,
                pairs_near: r.get("feature_selection.pairs_near")?,
                pairs_far: r.get("feature_selection.pairs_far")?,
                bin_tol: r.get("feature_selection.bin_tol")?,
                stopping: StoppingConfig {
                    window: r.get("feature_selection.window")?,
                    tau_stop: r.get("feature_selection.tau_stop")?,
                    max_features: r.get("feature_selection.max_features")?,
                    relevance_floor: r.get("feature_selection.relevance_floor")?,
                },
                manual_model,
                rng_seed: stage_seed(seed, "feature_selection"),
            },
            augment: AugmentConfig {
                n_seeds: r.get("augment.n_seeds")?,
                p_max: r.get("augment.p_max")?,
                d: r.get("augment.d")?,
                n_augmented: r.opt("augment.n_augmented")?,
                eps1: r.get("augment.eps1")?,
                eps2: r.get("augment.eps2")?,
                eps_da: r.get("augment.eps_da")?,
                rng_seed: stage_seed(seed, "augment"),
            },
            pca_components: r.get("evaluate.pca_components")?,
            stack_penalty: r.get("evaluate.stack_penalty")?,
            audit_sample_size: r.get("audit.sample_size")?,
            values,
        };
        cfg.augment.validate().map_err(|e| Error::Config(format!("augment: {e}")))?;
        if cfg.labeling.k < 2 {
            return Err(Error::Config("`labeling.k` must be at least 2".into()));
        }
        Ok(cfg)
    }

    /// Replaces the master seed and every derived stage seed.
    pub fn override_seed(&self, seed: u64) -> Self {
        let mut values = self.values.clone();
        values.insert("seed".into(), seed.to_string());
        Self::from_map(values).expect("only the seed changed")
    }

    /// Effective configuration, one `key = value` line per key in sorted
    /// order, defaults included.
    pub fn canonical(&self) -> String {
        self.values.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// SHA-256 of the canonical form, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_hash() {
        let a = Config::parse("seed = 7\n# comment\nmesh.nx = 50  # trailing\n").unwrap();
        let b = Config::with_seed(7);
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.mesh.nx, 50);
        assert_eq!(a.feature_selection.manual_model, None);
        assert_ne!(a.hash(), Config::with_seed(8).hash());
        assert_eq!(a.override_seed(8).hash(), Config::with_seed(8).hash());
        assert_ne!(a.augment.rng_seed, a.feature_selection.rng_seed);
    }

    #[test]
    fn errors_name_the_key() {
        let missing = Config::parse("mesh.nx = 4").unwrap_err().to_string();
        assert!(missing.contains("`seed`"), "{missing}");
        let unknown = Config::parse("seed = 1\nmesh.nz = 3").unwrap_err().to_string();
        assert!(unknown.contains("mesh.nz"));
        let bad = Config::parse("seed = 1\nlabeling.k = four").unwrap_err().to_string();
        assert!(bad.contains("labeling.k"));
        let partial = Config::parse("seed = 1\nfeature_selection.model.i_inf = 0.1").unwrap_err().to_string();
        assert!(partial.contains("feature_selection.model.gamma1"), "{partial}");
    }

    #[test]
    fn manual_model_override() {
        let text = "seed = 1\nfeature_selection.model.i_inf = 0.1\nfeature_selection.model.gamma1 = 1\n\
                    feature_selection.model.gamma2 = 0\nfeature_selection.model.r1 = 0.2\nfeature_selection.model.r2 = 0.1\n\
                    feature_selection.model.alpha1 = 1\nfeature_selection.model.alpha2 = 2\n";
        let m = Config::parse(text).unwrap().feature_selection.manual_model.unwrap();
        assert_eq!(m.r1, 0.2);
    }
}
