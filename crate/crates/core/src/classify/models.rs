//! Shallow probabilistic classifiers on reduced features.

use std::cell::Cell;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg;
use crate::scalar::Scalar;
use crate::synth::SplitTag;

thread_local! {
    static ROWS_FITTED: [Cell<usize>; 3] = const { [Cell::new(0), Cell::new(0), Cell::new(0)] };
}

fn split_slot(tag: SplitTag) -> usize {
    match tag {
        SplitTag::Train => 0,
        SplitTag::Validation => 1,
        SplitTag::Test => 2,
    }
}

/// Rows of the given split consumed by fitting or tuning on this thread.
pub fn rows_fitted(tag: SplitTag) -> usize {
    ROWS_FITTED.with(|c| c[split_slot(tag)].get())
}

/// Labelled rows together with the split they come from.
#[derive(Debug, Clone, Copy)]
pub struct Labeled<'a, T> {
    pub x: ArrayView2<'a, T>,
    pub y: &'a [usize],
    pub split: SplitTag,
}

impl<'a, T: Scalar> Labeled<'a, T> {
    pub fn new(x: ArrayView2<'a, T>, y: &'a [usize], split: SplitTag) -> Result<Self> {
        if x.nrows() != y.len() {
            return invalid(format!("{} rows for {} labels", x.nrows(), y.len()));
        }
        if y.contains(&0) {
            return invalid("labels are 1-based");
        }
        Ok(Labeled { x, y, split })
    }

    /// Guard used by every fitting routine.
    pub(crate) fn for_fitting(&self) -> Result<()> {
        if self.split == SplitTag::Test {
            return Err(Error::InvalidState("refusing to fit on test-split rows".into()));
        }
        ROWS_FITTED.with(|c| {
            let slot = &c[split_slot(self.split)];
            slot.set(slot.get() + self.y.len());
        });
        Ok(())
    }

    pub fn n_classes(&self) -> usize {
        self.y.iter().copied().max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    Lda,
    Qda,
    NaiveBayes,
    Knn,
    Logistic,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 5] =
        [ClassifierKind::Lda, ClassifierKind::Qda, ClassifierKind::NaiveBayes, ClassifierKind::Knn, ClassifierKind::Logistic];

    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::Lda => "lda",
            ClassifierKind::Qda => "qda",
            ClassifierKind::NaiveBayes => "naive_bayes",
            ClassifierKind::Knn => "knn",
            ClassifierKind::Logistic => "logistic",
        }
    }

    /// Hyperparameter grid searched on the validation split; the first
    /// entry is the default and wins ties.
    pub fn grid(self) -> Vec<Hyper> {
        match self {
            ClassifierKind::Lda | ClassifierKind::Qda => [1e-6, 1e-4, 1e-2, 1e-1].map(Hyper::Ridge).to_vec(),
            ClassifierKind::NaiveBayes => vec![Hyper::None],
            ClassifierKind::Knn => [5, 1, 3, 9, 15].map(Hyper::Neighbors).to_vec(),
            ClassifierKind::Logistic => [1e-2, 1e-4, 1e-3, 1e-1, 1.0].map(Hyper::Penalty).to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hyper {
    None,
    /// Covariance ridge relative to the mean variance.
    Ridge(f64),
    Neighbors(usize),
    /// L2 penalty of the logistic weights.
    Penalty(f64),
}

impl std::fmt::Display for Hyper {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Hyper::None => write!(f, "-"),
            Hyper::Ridge(l) => write!(f, "ridge={l:e}"),
            Hyper::Neighbors(k) => write!(f, "k={k}"),
            Hyper::Penalty(l) => write!(f, "l2={l:e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian<T> {
    pub mean: Array1<T>,
    /// Lower Cholesky factor of the covariance.
    pub chol: Array2<T>,
    log_det_half: T,
}

impl<T: Scalar> Gaussian<T> {
    fn new(mean: Array1<T>, cov: Array2<T>, class: &str) -> Result<Self> {
        let chol = linalg::cholesky(cov.view()).ok_or_else(|| Error::SingularCovariance { class: class.to_string() })?;
        Ok(Self::from_chol(mean, chol))
    }

    fn from_chol(mean: Array1<T>, chol: Array2<T>) -> Self {
        let log_det_half = chol.diag().iter().fold(T::zero(), |acc, &d| acc + d.ln());
        Gaussian { mean, chol, log_det_half }
    }

    fn log_density(&self, x: ArrayView1<T>) -> T {
        let diff = &x - &self.mean;
        let z = linalg::forward_substitute(self.chol.view(), diff.view());
        let p = T::from_count(x.len());
        -T::lit(0.5) * linalg::dot(z.view(), z.view()) - self.log_det_half - T::lit(0.5) * p * T::lit(std::f64::consts::TAU).ln()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Knn<T> {
    pub x: Array2<T>,
    pub y: Vec<usize>,
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Logistic<T> {
    pub shift: Array1<T>,
    pub scale: Array1<T>,
    /// `K × (p + 1)`, last column the intercept.
    pub weights: Array2<T>,
    pub iterations: usize,
}

/// Stacking meta-learner: per-model weights on clipped log-probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedModel<T> {
    pub bases: Vec<ClassifierModel<T>>,
    pub weights: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClassifierModel<T> {
    /// Gaussian class densities with log priors; a single shared density for
    /// LDA.
    Gaussian { densities: Vec<Gaussian<T>>, shared: bool, log_priors: Vec<T> },
    NaiveBayes { means: Array2<T>, vars: Array2<T>, log_priors: Vec<T> },
    Knn(Knn<T>),
    Logistic(Logistic<T>),
    Average { models: Vec<ClassifierModel<T>>, weights: Vec<T> },
    Stacked(StackedModel<T>),
}

fn class_rows<T: Scalar>(data: &Labeled<T>, c: usize) -> Array2<T> {
    let rows: Vec<usize> = (0..data.y.len()).filter(|&i| data.y[i] == c).collect();
    data.x.select(Axis(0), &rows)
}

fn column_means<T: Scalar>(x: ArrayView2<T>) -> Array1<T> {
    let n = T::from_count(x.nrows());
    x.sum_axis(Axis(0)).mapv(|s| s / n)
}

/// Scatter matrix `Σ (x − μ)(x − μ)ᵀ`.
fn scatter<T: Scalar>(x: ArrayView2<T>, mean: &Array1<T>) -> Array2<T> {
    let centered = &x - &mean.view().insert_axis(Axis(0));
    linalg::at_b(centered.view(), centered.view())
}

fn ridge<T: Scalar>(mut cov: Array2<T>, lambda: f64) -> Array2<T> {
    let p = cov.nrows();
    let mean_var = cov.diag().iter().copied().sum::<T>() / T::from_count(p);
    let add = T::lit(lambda) * if mean_var > T::zero() { mean_var } else { T::one() };
    for i in 0..p {
        cov[(i, i)] = cov[(i, i)] + add;
    }
    cov
}

fn check_classes<T: Scalar>(data: &Labeled<T>) -> Result<usize> {
    data.for_fitting()?;
    let k = data.n_classes();
    let present = (1..=k).filter(|c| data.y.contains(c)).count();
    if present < 2 {
        return invalid("at least two classes are required");
    }
    Ok(k)
}

fn log_priors<T: Scalar>(data: &Labeled<T>, k: usize) -> Vec<T> {
    (1..=k)
        .map(|c| {
            let count = data.y.iter().filter(|&&y| y == c).count();
            // absent classes get a vanishing prior
            T::lit((count.max(1) as f64 / data.y.len() as f64).ln() - if count == 0 { 50.0 } else { 0.0 })
        })
        .collect()
}

pub fn fit_lda<T: Scalar>(data: &Labeled<T>, lambda: f64) -> Result<ClassifierModel<T>> {
    let k = check_classes(data)?;
    let p = data.x.ncols();
    let mut pooled = Array2::<T>::zeros((p, p));
    let mut means = Vec::with_capacity(k);
    for c in 1..=k {
        let xc = class_rows(data, c);
        let mean = if xc.nrows() > 0 { column_means(xc.view()) } else { Array1::zeros(p) };
        if xc.nrows() > 0 {
            pooled = pooled + scatter(xc.view(), &mean);
        }
        means.push(mean);
    }
    let dof = (data.y.len() as f64 - k as f64).max(1.0);
    let cov = ridge(pooled.mapv(|v| v / T::lit(dof)), lambda);
    let chol = linalg::cholesky(cov.view()).ok_or_else(|| Error::SingularCovariance { class: "pooled".into() })?;
    let densities = means.into_iter().map(|mean| Gaussian::from_chol(mean, chol.clone())).collect();
    Ok(ClassifierModel::Gaussian { densities, shared: true, log_priors: log_priors(data, k) })
}

pub fn fit_qda<T: Scalar>(data: &Labeled<T>, lambda: f64) -> Result<ClassifierModel<T>> {
    let k = check_classes(data)?;
    let p = data.x.ncols();
    let mut densities = Vec::with_capacity(k);
    for c in 1..=k {
        let xc = class_rows(data, c);
        if xc.nrows() == 0 {
            // placeholder density, its prior is negligible
            densities.push(Gaussian::new(Array1::zeros(p), Array2::eye(p), &c.to_string())?);
            continue;
        }
        let mean = column_means(xc.view());
        let dof = (xc.nrows() as f64 - 1.0).max(1.0);
        let cov = ridge(scatter(xc.view(), &mean).mapv(|v| v / T::lit(dof)), lambda);
        densities.push(Gaussian::new(mean, cov, &c.to_string())?);
    }
    Ok(ClassifierModel::Gaussian { densities, shared: false, log_priors: log_priors(data, k) })
}

pub fn fit_naive_bayes<T: Scalar>(data: &Labeled<T>) -> Result<ClassifierModel<T>> {
    let k = check_classes(data)?;
    let p = data.x.ncols();
    let overall = column_means(data.x);
    let max_var = (0..p)
        .map(|j| data.x.column(j).iter().map(|&v| (v - overall[j]).powi(2)).sum::<T>() / T::from_count(data.y.len()))
        .fold(T::zero(), T::max);
    let smoothing = T::lit(1e-9) * if max_var > T::zero() { max_var } else { T::one() };
    let mut means = Array2::zeros((k, p));
    let mut vars = Array2::from_elem((k, p), T::one());
    for c in 1..=k {
        let xc = class_rows(data, c);
        if xc.nrows() == 0 {
            continue;
        }
        let m = column_means(xc.view());
        for j in 0..p {
            let v = xc.column(j).iter().map(|&x| (x - m[j]).powi(2)).sum::<T>() / T::from_count(xc.nrows());
            vars[(c - 1, j)] = v + smoothing;
        }
        means.row_mut(c - 1).assign(&m);
    }
    Ok(ClassifierModel::NaiveBayes { means, vars, log_priors: log_priors(data, k) })
}

pub fn fit_knn<T: Scalar>(data: &Labeled<T>, k: usize) -> Result<ClassifierModel<T>> {
    check_classes(data)?;
    if k == 0 {
        return invalid("k must be positive");
    }
    Ok(ClassifierModel::Knn(Knn { x: data.x.to_owned(), y: data.y.to_vec(), k: k.min(data.y.len()) }))
}

fn softmax_rows<T: Scalar>(mut z: Array2<T>) -> Array2<T> {
    for mut row in z.rows_mut() {
        let m = row.iter().copied().fold(T::neg_infinity(), T::max);
        row.mapv_inplace(|v| (v - m).exp());
        let s = row.sum();
        row.mapv_inplace(|v| v / s);
    }
    z
}

fn standardize<T: Scalar>(x: ArrayView2<T>, shift: &Array1<T>, scale: &Array1<T>) -> Array2<T> {
    let mut z = Array2::ones((x.nrows(), x.ncols() + 1));
    for (i, row) in x.rows().into_iter().enumerate() {
        for j in 0..x.ncols() {
            z[(i, j)] = (row[j] - shift[j]) / scale[j];
        }
    }
    z
}

/// Mean multinomial negative log-likelihood plus `½λ‖W‖²` (intercepts
/// unpenalised), with its gradient.
fn logistic_objective<T: Scalar>(z: &Array2<T>, y: &[usize], w: &Array2<T>, lambda: T) -> (T, Array2<T>) {
    let n = T::from_count(y.len());
    let p1 = w.ncols();
    let scores = z.dot(&w.t());
    let mut loss = T::zero();
    let mut resid = Array2::zeros(scores.dim());
    for (i, row) in scores.rows().into_iter().enumerate() {
        let m = row.iter().copied().fold(T::neg_infinity(), T::max);
        let lse = m + row.iter().map(|&v| (v - m).exp()).sum::<T>().ln();
        loss = loss + lse - row[y[i] - 1];
        for c in 0..row.len() {
            resid[(i, c)] = (row[c] - lse).exp();
        }
        resid[(i, y[i] - 1)] = resid[(i, y[i] - 1)] - T::one();
    }
    let mut grad = resid.t().dot(z).mapv(|v| v / n);
    let mut penalty = T::zero();
    for c in 0..w.nrows() {
        for j in 0..p1 - 1 {
            penalty = penalty + w[(c, j)] * w[(c, j)];
            grad[(c, j)] = grad[(c, j)] + lambda * w[(c, j)];
        }
    }
    (loss / n + T::lit(0.5) * lambda * penalty, grad)
}

pub const LOGISTIC_TOL: f64 = 1e-6;
pub const LOGISTIC_MAX_ITER: usize = 3000;

/// Ridge multinomial logistic regression on standardised features, fitted by
/// full-batch gradient descent with Armijo backtracking.
pub fn fit_logistic<T: Scalar>(data: &Labeled<T>, lambda: f64) -> Result<ClassifierModel<T>> {
    let k = check_classes(data)?;
    let p = data.x.ncols();
    let shift = column_means(data.x);
    let scale = Array1::from_iter((0..p).map(|j| {
        let s = (data.x.column(j).iter().map(|&v| (v - shift[j]).powi(2)).sum::<T>() / T::from_count(data.y.len())).sqrt();
        if s > T::zero() { s } else { T::one() }
    }));
    let z = standardize(data.x, &shift, &scale);
    let (weights, iterations) = gradient_descent(Array2::zeros((k, p + 1)), |w| logistic_objective(&z, data.y, w, T::lit(lambda)));
    Ok(ClassifierModel::Logistic(Logistic { shift, scale, weights, iterations }))
}

/// Deterministic gradient descent with backtracking; stops when the largest
/// gradient entry falls below [`LOGISTIC_TOL`].
fn gradient_descent<T: Scalar>(mut w: Array2<T>, f: impl Fn(&Array2<T>) -> (T, Array2<T>)) -> (Array2<T>, usize) {
    let mut step = T::one();
    let (mut value, mut grad) = f(&w);
    for it in 0..LOGISTIC_MAX_ITER {
        let gmax = grad.iter().fold(T::zero(), |m, &g| m.max(g.abs()));
        if gmax < T::lit(LOGISTIC_TOL) {
            return (w, it);
        }
        let gg = grad.iter().fold(T::zero(), |acc, &g| acc + g * g);
        step = step * T::lit(2.0);
        loop {
            let trial = &w - &grad.mapv(|g| g * step);
            let (tv, tg) = f(&trial);
            if tv <= value - T::lit(1e-4) * step * gg || step < T::lit(1e-12) {
                w = trial;
                value = tv;
                grad = tg;
                break;
            }
            step = step * T::lit(0.5);
        }
    }
    (w, LOGISTIC_MAX_ITER)
}

/// Meta weights for stacking: `argmin_w` mean NLL of
/// `softmax_c(Σ_m w_m log p_{m,c})` plus `½λ‖w‖²`.
pub(crate) fn fit_stack_weights<T: Scalar>(log_probs: &[Array2<T>], y: &[usize], lambda: f64) -> Vec<T> {
    let m = log_probs.len();
    let n = T::from_count(y.len());
    let lam = T::lit(lambda);
    let f = |w: &Array2<T>| {
        let mut loss = T::zero();
        let mut grad = Array2::zeros((1, m));
        let k = log_probs[0].ncols();
        for i in 0..y.len() {
            let s: Vec<T> = (0..k).map(|c| (0..m).fold(T::zero(), |acc, b| acc + w[(0, b)] * log_probs[b][(i, c)])).collect();
            let mx = s.iter().copied().fold(T::neg_infinity(), T::max);
            let lse = mx + s.iter().map(|&v| (v - mx).exp()).sum::<T>().ln();
            loss = loss + lse - s[y[i] - 1];
            for b in 0..m {
                let expected = (0..k).fold(T::zero(), |acc, c| acc + (s[c] - lse).exp() * log_probs[b][(i, c)]);
                grad[(0, b)] = grad[(0, b)] + expected - log_probs[b][(i, y[i] - 1)];
            }
        }
        let mut penalty = T::zero();
        for b in 0..m {
            grad[(0, b)] = grad[(0, b)] / n + lam * w[(0, b)];
            penalty = penalty + w[(0, b)] * w[(0, b)];
        }
        (loss / n + T::lit(0.5) * lam * penalty, grad)
    };
    let init = Array2::from_elem((1, m), T::one() / T::from_count(m));
    let (w, _) = gradient_descent(init, f);
    w.row(0).to_vec()
}

/// Floor applied to probabilities before taking logarithms.
pub const LOG_PROB_FLOOR: f64 = 1e-12;

pub(crate) fn clipped_log<T: Scalar>(p: &Array2<T>) -> Array2<T> {
    p.mapv(|v| v.max(T::lit(LOG_PROB_FLOOR)).ln())
}

impl<T: Scalar> ClassifierModel<T> {
    pub fn n_classes(&self) -> usize {
        match self {
            ClassifierModel::Gaussian { log_priors, .. } | ClassifierModel::NaiveBayes { log_priors, .. } => log_priors.len(),
            ClassifierModel::Knn(m) => m.y.iter().copied().max().unwrap_or(0),
            ClassifierModel::Logistic(m) => m.weights.nrows(),
            ClassifierModel::Average { models, .. } => models[0].n_classes(),
            ClassifierModel::Stacked(s) => s.bases[0].n_classes(),
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            ClassifierModel::Gaussian { densities, .. } => densities[0].mean.len(),
            ClassifierModel::NaiveBayes { means, .. } => means.ncols(),
            ClassifierModel::Knn(m) => m.x.ncols(),
            ClassifierModel::Logistic(m) => m.shift.len(),
            ClassifierModel::Average { models, .. } => models[0].n_features(),
            ClassifierModel::Stacked(s) => s.bases[0].n_features(),
        }
    }

    /// Membership probabilities, one row per sample, columns for classes
    /// `1..=K`.
    pub fn predict_proba(&self, x: ArrayView2<T>) -> Array2<T> {
        let k = self.n_classes();
        match self {
            ClassifierModel::Gaussian { densities, log_priors, .. } => {
                let mut z = Array2::zeros((x.nrows(), k));
                for (i, row) in x.rows().into_iter().enumerate() {
                    for c in 0..k {
                        z[(i, c)] = log_priors[c] + densities[c].log_density(row);
                    }
                }
                softmax_rows(z)
            }
            ClassifierModel::NaiveBayes { means, vars, log_priors } => {
                let half_log_tau = T::lit(0.5 * std::f64::consts::TAU.ln());
                let mut z = Array2::zeros((x.nrows(), k));
                for (i, row) in x.rows().into_iter().enumerate() {
                    for c in 0..k {
                        let mut acc = log_priors[c];
                        for j in 0..row.len() {
                            let v = vars[(c, j)];
                            acc = acc - half_log_tau - T::lit(0.5) * v.ln() - (row[j] - means[(c, j)]).powi(2) / (v + v);
                        }
                        z[(i, c)] = acc;
                    }
                }
                softmax_rows(z)
            }
            ClassifierModel::Knn(m) => {
                let mut out = Array2::zeros((x.nrows(), k));
                for (i, row) in x.rows().into_iter().enumerate() {
                    let mut d: Vec<(T, usize)> = m
                        .x
                        .rows()
                        .into_iter()
                        .enumerate()
                        .map(|(j, r)| (r.iter().zip(row.iter()).fold(T::zero(), |acc, (&a, &b)| acc + (a - b) * (a - b)), j))
                        .collect();
                    d.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
                    for &(_, j) in &d[..m.k] {
                        out[(i, m.y[j] - 1)] = out[(i, m.y[j] - 1)] + T::one();
                    }
                    out.row_mut(i).mapv_inplace(|v| v / T::from_count(m.k));
                }
                out
            }
            ClassifierModel::Logistic(m) => softmax_rows(standardize(x, &m.shift, &m.scale).dot(&m.weights.t())),
            ClassifierModel::Average { models, weights } => {
                let total = weights.iter().copied().sum::<T>();
                let mut acc = Array2::zeros((x.nrows(), k));
                for (model, &w) in models.iter().zip(weights) {
                    acc = acc + model.predict_proba(x).mapv(|v| v * w / total);
                }
                acc
            }
            ClassifierModel::Stacked(s) => {
                let mut z = Array2::zeros((x.nrows(), k));
                for (model, &w) in s.bases.iter().zip(&s.weights) {
                    z = z + clipped_log(&model.predict_proba(x)).mapv(|v| v * w);
                }
                softmax_rows(z)
            }
        }
    }

    /// Hard labels in `1..=K`; ties go to the lowest class.
    pub fn predict(&self, x: ArrayView2<T>) -> Vec<usize> {
        argmax_rows(&self.predict_proba(x))
    }

    pub fn accuracy(&self, x: ArrayView2<T>, y: &[usize]) -> f64 {
        accuracy(&self.predict(x), y)
    }
}

pub fn argmax_rows<T: Scalar>(p: &Array2<T>) -> Vec<usize> {
    p.rows()
        .into_iter()
        .map(|row| {
            let mut best = 0;
            for c in 1..row.len() {
                if row[c] > row[best] {
                    best = c;
                }
            }
            best + 1
        })
        .collect()
}

pub fn accuracy(pred: &[usize], y: &[usize]) -> f64 {
    if y.is_empty() {
        return 0.0;
    }
    pred.iter().zip(y).filter(|(a, b)| a == b).count() as f64 / y.len() as f64
}

pub fn train_classifier<T: Scalar>(kind: ClassifierKind, data: &Labeled<T>, hyper: Hyper) -> Result<ClassifierModel<T>> {
    match (kind, hyper) {
        (ClassifierKind::Lda, Hyper::Ridge(l)) => fit_lda(data, l),
        (ClassifierKind::Qda, Hyper::Ridge(l)) => fit_qda(data, l),
        (ClassifierKind::NaiveBayes, Hyper::None) => fit_naive_bayes(data),
        (ClassifierKind::Knn, Hyper::Neighbors(k)) => fit_knn(data, k),
        (ClassifierKind::Logistic, Hyper::Penalty(l)) => fit_logistic(data, l),
        _ => invalid(format!("hyperparameter {hyper} does not apply to {}", kind.name())),
    }
}

/// Fits every grid point on `train` and keeps the best validation accuracy
/// (first grid point on ties).
pub fn tune_classifier<T: Scalar>(
    kind: ClassifierKind,
    train: &Labeled<T>,
    validation: &Labeled<T>,
) -> Result<(ClassifierModel<T>, Hyper, f64)> {
    validation.for_fitting()?;
    let mut best: Option<(ClassifierModel<T>, Hyper, f64)> = None;
    let mut last_err = None;
    for h in kind.grid() {
        match train_classifier(kind, train, h) {
            Ok(model) => {
                let acc = model.accuracy(validation.x, validation.y);
                if best.as_ref().is_none_or(|b| acc > b.2) {
                    best = Some((model, h, acc));
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.expect("nonempty grid"))
}
