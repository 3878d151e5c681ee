//! Synthetic meshes, Gaussian field models and field datasets.
//!
//! Fields are a deterministic reference field plus a random combination of
//! smooth fluctuation modes, each mode a product of sinusoids in the node
//! coordinates. Coefficients are independent zero-mean Gaussians so every
//! nodal value is Gaussian and the whole feature vector is jointly Gaussian.

use std::collections::HashSet;
use std::f64::consts::PI;

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg;
use crate::scalar::Scalar;

/// Per-stream RNG derived from a seed and a stream index.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Regular grid layout of a mesh, when the node ordering is row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridShape<T> {
    pub nx: usize,
    pub ny: usize,
    pub dx: T,
    pub dy: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh<T> {
    nodes: Array2<T>,
    grid: Option<GridShape<T>>,
}

impl<T: Scalar> Mesh<T> {
    /// Builds a mesh from node coordinates (one row per node).
    pub fn new(nodes: Array2<T>) -> Result<Self> {
        let (n, dim) = nodes.dim();
        if n < 2 {
            return invalid(format!("a mesh needs at least 2 nodes, got {n}"));
        }
        if !(dim == 2 || dim == 3) {
            return invalid(format!("mesh dimension must be 2 or 3, got {dim}"));
        }
        if nodes.iter().any(|x| !x.is_finite()) {
            return invalid("non-finite node coordinate");
        }
        let mut seen = HashSet::with_capacity(n);
        for row in nodes.rows() {
            let key: Vec<u64> = row.iter().map(|x| (x.as_f64() + 0.0).to_bits()).collect();
            if !seen.insert(key) {
                return invalid(format!("duplicate node coordinates {:?}", row.to_vec()));
            }
        }
        let mut mesh = Mesh { nodes, grid: None };
        mesh.grid = mesh.infer_grid();
        Ok(mesh)
    }

    pub fn len(&self) -> usize {
        self.nodes.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.nodes.ncols()
    }

    pub fn nodes(&self) -> &Array2<T> {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> ArrayView1<'_, T> {
        self.nodes.row(i)
    }

    pub fn grid(&self) -> Option<&GridShape<T>> {
        self.grid.as_ref()
    }

    pub fn distance(&self, i: usize, j: usize) -> T {
        self.nodes
            .row(i)
            .iter()
            .zip(self.nodes.row(j).iter())
            .fold(T::zero(), |acc, (&a, &b)| acc + (a - b) * (a - b))
            .sqrt()
    }

    /// Per-axis (min, max) of node coordinates.
    pub fn bounding_box(&self) -> Vec<(T, T)> {
        self.nodes
            .axis_iter(Axis(1))
            .map(|c| {
                c.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), &x| (lo.min(x), hi.max(x)))
            })
            .collect()
    }

    pub fn diameter_bound(&self) -> T {
        self.bounding_box()
            .iter()
            .fold(T::zero(), |acc, &(lo, hi)| acc + (hi - lo) * (hi - lo))
            .sqrt()
    }

    /// Recognises the row-major planar grid produced by
    /// [`build_rectangular_mesh`] (x varies fastest).
    fn infer_grid(&self) -> Option<GridShape<T>> {
        if self.dim() != 2 {
            return None;
        }
        let n = self.len();
        let y0 = self.nodes[(0, 1)];
        let nx = (0..n).take_while(|&i| self.nodes[(i, 1)] == y0).count();
        if nx == 0 || n % nx != 0 {
            return None;
        }
        let ny = n / nx;
        let x = |i: usize| self.nodes[(i, 0)];
        let y = |j: usize| self.nodes[(j * nx, 1)];
        let dx = if nx > 1 { x(1) - x(0) } else { T::one() };
        let dy = if ny > 1 { y(1) - y(0) } else { T::one() };
        if !(dx > T::zero()) || !(dy > T::zero()) {
            return None;
        }
        let tol = T::lit(1e-9);
        for j in 0..ny {
            for i in 0..nx {
                let k = j * nx + i;
                let ex = x(0) + T::from_count(i) * dx;
                let ey = y(0) + T::from_count(j) * dy;
                if (self.nodes[(k, 0)] - ex).abs() > tol * (T::one() + ex.abs())
                    || (self.nodes[(k, 1)] - ey).abs() > tol * (T::one() + ey.abs())
                {
                    return None;
                }
            }
        }
        Some(GridShape { nx, ny, dx, dy })
    }
}

/// Regular `nx × ny` grid over `[0, lx] × [0, ly]`, row-major with x fastest.
pub fn build_rectangular_mesh<T: Scalar>(nx: usize, ny: usize, lx: T, ly: T) -> Result<Mesh<T>> {
    if nx == 0 || ny == 0 || nx * ny < 2 {
        return invalid(format!("grid {nx}x{ny} must contain at least 2 nodes"));
    }
    if !(lx > T::zero()) || !(ly > T::zero()) || !lx.is_finite() || !ly.is_finite() {
        return invalid("mesh extents must be positive and finite");
    }
    let step = |len: T, count: usize| if count > 1 { len / T::from_count(count - 1) } else { T::zero() };
    let (dx, dy) = (step(lx, nx), step(ly, ny));
    let mut nodes = Array2::zeros((nx * ny, 2));
    for j in 0..ny {
        for i in 0..nx {
            let k = j * nx + i;
            nodes[(k, 0)] = T::from_count(i) * dx;
            nodes[(k, 1)] = T::from_count(j) * dy;
        }
    }
    Mesh::new(nodes)
}

/// Sinusoid product `Π_a sin(freq_a · ξ_a + phase_a)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinusoidMode {
    pub frequencies: Vec<f64>,
    pub phases: Vec<f64>,
}

impl SinusoidMode {
    fn draw(rng: &mut impl Rng, dim: usize, max_freq: &[f64]) -> Self {
        let frequencies = (0..dim).map(|a| max_freq[a] * rng.random_range(0.25..1.0)).collect();
        let phases = (0..dim).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
        SinusoidMode { frequencies, phases }
    }

    pub fn eval<T: Scalar>(&self, x: ArrayView1<T>) -> T {
        let v = x
            .iter()
            .zip(self.frequencies.iter().zip(&self.phases))
            .fold(1.0, |acc, (&xa, (&f, &p))| acc * (f * xa.as_f64() + p).sin());
        T::lit(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldModel<T> {
    pub reference: Array1<T>,
    /// One mode per row.
    pub modes: Array2<T>,
    pub coefficient_scale: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldModelConfig {
    pub n_modes: usize,
    pub smoothness: f64,
    pub reference_mean: f64,
    pub reference_amplitude: f64,
    /// Standard deviation of the first mode coefficient.
    pub coefficient_scale: f64,
    /// Ratio between the scales of consecutive modes (1 for a flat spectrum).
    pub coefficient_decay: f64,
}

impl Default for FieldModelConfig {
    fn default() -> Self {
        FieldModelConfig {
            n_modes: 10,
            smoothness: 0.25,
            reference_mean: 1.0,
            reference_amplitude: 0.5,
            coefficient_scale: 0.3,
            coefficient_decay: 1.0,
        }
    }
}

/// Builds a reference field and `n_modes` fluctuation modes on the mesh.
/// Wavelengths along each axis are at least `smoothness` times the domain
/// extent on that axis.
pub fn build_field_model<T: Scalar>(mesh: &Mesh<T>, n_modes: usize, smoothness: f64, rng_seed: u64) -> Result<FieldModel<T>> {
    build_field_model_with(mesh, &FieldModelConfig { n_modes, smoothness, ..Default::default() }, rng_seed)
}

pub fn build_field_model_with<T: Scalar>(mesh: &Mesh<T>, cfg: &FieldModelConfig, rng_seed: u64) -> Result<FieldModel<T>> {
    let n = mesh.len();
    if cfg.n_modes == 0 {
        return invalid("n_modes must be positive");
    }
    if cfg.n_modes > n {
        return invalid(format!("n_modes = {} exceeds the node count {n}", cfg.n_modes));
    }
    if !(cfg.smoothness > 0.0) {
        return invalid("smoothness must be positive");
    }
    if !(cfg.coefficient_scale >= 0.0) || !(cfg.coefficient_decay > 0.0) || !cfg.coefficient_decay.is_finite() {
        return invalid("coefficient scale must be nonnegative and decay positive");
    }
    let max_freq: Vec<f64> = mesh
        .bounding_box()
        .iter()
        .map(|&(lo, hi)| {
            let extent = (hi - lo).as_f64();
            let extent = if extent > 0.0 { extent } else { 1.0 };
            2.0 * PI / (cfg.smoothness * extent)
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let reference_shape = SinusoidMode::draw(&mut rng, mesh.dim(), &max_freq);
    let reference = Array1::from_iter(mesh.nodes().rows().into_iter().map(|x| {
        T::lit(cfg.reference_mean) + T::lit(cfg.reference_amplitude) * reference_shape.eval(x)
    }));
    let shapes: Vec<SinusoidMode> = (0..cfg.n_modes).map(|_| SinusoidMode::draw(&mut rng, mesh.dim(), &max_freq)).collect();
    let mut modes = Array2::zeros((cfg.n_modes, n));
    for (m, shape) in shapes.iter().enumerate() {
        for (i, x) in mesh.nodes().rows().into_iter().enumerate() {
            modes[(m, i)] = shape.eval(x);
        }
    }
    let r = linalg::rank(modes.view(), T::lit(1e-10));
    if r < cfg.n_modes {
        return Err(Error::DegenerateInput(format!(
            "mode matrix has rank {r} < {} on this mesh",
            cfg.n_modes
        )));
    }
    Ok(FieldModel {
        reference,
        modes,
        coefficient_scale: (0..cfg.n_modes).map(|m| T::lit(cfg.coefficient_scale * cfg.coefficient_decay.powi(m as i32))).collect(),
    })
}

impl<T: Scalar> FieldModel<T> {
    pub fn n_modes(&self) -> usize {
        self.modes.nrows()
    }

    pub fn n_nodes(&self) -> usize {
        self.reference.len()
    }

    pub fn with_coefficient_scales(mut self, scales: Vec<T>) -> Result<Self> {
        if scales.len() != self.n_modes() {
            return invalid("one coefficient scale per mode is required");
        }
        if scales.iter().any(|s| *s < T::zero() || !s.is_finite()) {
            return invalid("coefficient scales must be nonnegative");
        }
        self.coefficient_scale = scales;
        Ok(self)
    }

    /// Field for an explicit coefficient vector.
    pub fn field(&self, coefficients: &[T]) -> Array1<T> {
        let mut out = self.reference.clone();
        for (m, &c) in coefficients.iter().enumerate() {
            out.scaled_add(c, &self.modes.row(m));
        }
        out
    }
}

/// Train/validation/test membership.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitTag {
    Train,
    Validation,
    Test,
}

impl SplitTag {
    pub fn as_str(self) -> &'static str {
        match self {
            SplitTag::Train => "train",
            SplitTag::Validation => "validation",
            SplitTag::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "train" => Some(SplitTag::Train),
            "validation" => Some(SplitTag::Validation),
            "test" => Some(SplitTag::Test),
            _ => None,
        }
    }
}

/// `N × 𝒩` field samples with optional class labels (`1..=K`) and split tags.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldDataset<T> {
    pub samples: Array2<T>,
    pub labels: Option<Vec<usize>>,
    pub split_tags: Option<Vec<SplitTag>>,
}

impl<T: Scalar> FieldDataset<T> {
    pub fn new(samples: Array2<T>) -> Self {
        FieldDataset { samples, labels: None, split_tags: None }
    }

    pub fn len(&self) -> usize {
        self.samples.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.nrows() == 0
    }

    pub fn n_features(&self) -> usize {
        self.samples.ncols()
    }

    pub fn with_labels(mut self, labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        if labels.len() != self.len() {
            return invalid(format!("{} labels for {} samples", labels.len(), self.len()));
        }
        if let Some(bad) = labels.iter().find(|&&y| y == 0 || y > n_classes) {
            return invalid(format!("label {bad} outside [1, {n_classes}]"));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn with_split_tags(mut self, tags: Vec<SplitTag>) -> Result<Self> {
        if tags.len() != self.len() {
            return invalid(format!("{} split tags for {} samples", tags.len(), self.len()));
        }
        self.split_tags = Some(tags);
        Ok(self)
    }

    /// Row indices carrying the given split tag, ascending.
    pub fn split_indices(&self, tag: SplitTag) -> Vec<usize> {
        match &self.split_tags {
            Some(tags) => tags.iter().enumerate().filter(|(_, &t)| t == tag).map(|(i, _)| i).collect(),
            None if tag == SplitTag::Train => (0..self.len()).collect(),
            None => Vec::new(),
        }
    }

    /// Restriction to a set of rows (labels and tags follow).
    pub fn subset(&self, rows: &[usize]) -> FieldDataset<T> {
        FieldDataset {
            samples: self.samples.select(Axis(0), rows),
            labels: self.labels.as_ref().map(|l| rows.iter().map(|&i| l[i]).collect()),
            split_tags: self.split_tags.as_ref().map(|t| rows.iter().map(|&i| t[i]).collect()),
        }
    }

    pub fn n_classes(&self) -> usize {
        self.labels.as_ref().and_then(|l| l.iter().max().copied()).unwrap_or(0)
    }
}

/// Draws `n_samples` realisations `reference + Σ c_m mode_m` with
/// `c_m ~ N(0, scale_m²)`. Sample `i` uses its own RNG stream derived from
/// `(rng_seed, i)`.
pub fn sample_fields<T: Scalar>(model: &FieldModel<T>, n_samples: usize, rng_seed: u64) -> Result<FieldDataset<T>> {
    if n_samples == 0 {
        return invalid("n_samples must be at least 1");
    }
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut samples = Array2::zeros((n_samples, model.n_nodes()));
    for (i, mut row) in samples.rows_mut().into_iter().enumerate() {
        let mut rng = stream_rng(rng_seed, i as u64);
        let coefs: Vec<T> = model
            .coefficient_scale
            .iter()
            .map(|&s| s * T::lit(std_normal.sample(&mut rng)))
            .collect();
        row.assign(&model.field(&coefs));
    }
    Ok(FieldDataset::new(samples))
}

/// Split sizes: floor each share, leftovers go to train.
pub fn split_counts(n: usize, ratios: [f64; 3]) -> Result<[usize; 3]> {
    if ratios.iter().any(|r| !(*r >= 0.0) || !r.is_finite()) {
        return invalid("split ratios must be nonnegative");
    }
    let sum: f64 = ratios.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return invalid(format!("split ratios sum to {sum}, expected 1"));
    }
    let mut counts = ratios.map(|r| ((n as f64) * r + 1e-9).floor() as usize);
    let assigned: usize = counts.iter().sum();
    counts[0] += n.saturating_sub(assigned);
    Ok(counts)
}

/// Shuffles the rows with a seeded permutation and renumbers them so that
/// the training rows come first, then validation, then test.
pub fn split_dataset<T: Scalar>(ds: &FieldDataset<T>, ratios: [f64; 3], rng_seed: u64) -> Result<FieldDataset<T>> {
    let counts = split_counts(ds.len(), ratios)?;
    let mut perm: Vec<usize> = (0..ds.len()).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(rng_seed));
    let mut order = Vec::with_capacity(ds.len());
    let mut tags = Vec::with_capacity(ds.len());
    let mut start = 0;
    for (tag, &count) in [SplitTag::Train, SplitTag::Validation, SplitTag::Test].iter().zip(&counts) {
        let mut block = perm[start..start + count].to_vec();
        block.sort_unstable();
        order.extend(block);
        tags.extend(std::iter::repeat_n(*tag, count));
        start += count;
    }
    let mut out = ds.subset(&order);
    out.split_tags = Some(tags);
    Ok(out)
}
