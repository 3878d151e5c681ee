//! Distance-based redundancy metamodel
//! `Ĩ(r) = I∞ + γ₁ (r₁ − r)^α₁ H(r₁ − r) + γ₂ (r₂ − r)^α₂ H(r₂ − r)`.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::doe::DoePlan;
use crate::convex::nnls;
use crate::error::{invalid, Error, Result};

/// Minimum number of distinct pair distances needed to fit the metamodel.
pub const MIN_DISTINCT_DISTANCES: usize = 8;

/// A gated term is fitted only when this many distinct distances lie below
/// `SUPPORT_FRACTION` of its cutoff; otherwise its amplitude is pinned to 0.
const MIN_TERM_SUPPORT: usize = 2;
const SUPPORT_FRACTION: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RedundancyModel {
    pub i_inf: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub r1: f64,
    pub r2: f64,
    pub alpha1: f64,
    pub alpha2: f64,
}

fn gated_power(cutoff: f64, alpha: f64, r: f64) -> f64 {
    // H(0) = 0: the term vanishes at r = cutoff
    if r < cutoff {
        (cutoff - r).powf(alpha)
    } else {
        0.0
    }
}

impl RedundancyModel {
    pub fn validate(&self) -> Result<()> {
        let nonneg = [self.i_inf, self.gamma1, self.gamma2];
        let pos = [self.r1, self.r2, self.alpha1, self.alpha2];
        if nonneg.iter().any(|v| !(*v >= 0.0 && v.is_finite())) || pos.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return invalid(format!("redundancy model parameters out of range: {self:?}"));
        }
        Ok(())
    }

    /// `Ĩ(r)` for `r ≥ 0`.
    pub fn evaluate(&self, r: f64) -> f64 {
        self.i_inf + self.gamma1 * gated_power(self.r1, self.alpha1, r) + self.gamma2 * gated_power(self.r2, self.alpha2, r)
    }
}

/// Candidate nonlinear parameters scanned by [`fit_redundancy_model`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitGrid {
    pub radii: Vec<f64>,
    pub exponents: Vec<f64>,
}

impl FitGrid {
    pub const DEFAULT_EXPONENTS: [f64; 5] = [0.5, 1.0, 1.5, 2.0, 3.0];

    /// Radii at the bin targets of the plan plus one beyond the largest
    /// realised distance.
    pub fn for_plan(plan: &DoePlan) -> FitGrid {
        let mut radii: Vec<f64> = plan.bins.iter().map(|b| b.target).collect();
        let far = plan.pairs().map(|p| p.distance).fold(0.0, f64::max);
        radii.push(1.25 * far);
        radii.sort_by(f64::total_cmp);
        radii.dedup();
        FitGrid { radii, exponents: Self::DEFAULT_EXPONENTS.to_vec() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub model: RedundancyModel,
    pub rss: f64,
}

/// Least-squares fit of the metamodel to MI values observed at the DOE pairs.
///
/// A supplied override is returned unchanged. Otherwise every grid point
/// `(r₁ ≤ r₂, α₁, α₂)` is visited in a fixed order and `(I∞, γ₁, γ₂)` are
/// found by nonnegative least squares; the first grid point with the smallest
/// residual sum of squares wins.
pub fn fit_redundancy_model(
    plan: &DoePlan,
    mi_values: &[f64],
    manual_override: Option<RedundancyModel>,
    grid: Option<&FitGrid>,
) -> Result<FittedModel> {
    let distances: Vec<f64> = plan.pairs().map(|p| p.distance).collect();
    if let Some(model) = manual_override {
        model.validate()?;
        let rss = distances.iter().zip(mi_values).map(|(&r, &y)| (model.evaluate(r) - y).powi(2)).sum();
        return Ok(FittedModel { model, rss });
    }
    if distances.len() != mi_values.len() {
        return invalid(format!("{} MI values for {} DOE pairs", mi_values.len(), distances.len()));
    }
    fit_to_samples(&distances, mi_values, grid.cloned().unwrap_or_else(|| FitGrid::for_plan(plan)))
}

/// Grid-search fit on raw `(distance, value)` samples.
pub fn fit_to_samples(distances: &[f64], values: &[f64], grid: FitGrid) -> Result<FittedModel> {
    let mut distinct = distances.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < MIN_DISTINCT_DISTANCES {
        return Err(Error::Fit(format!(
            "only {} distinct pair distances (need {MIN_DISTINCT_DISTANCES}); supply a manual redundancy model override",
            distinct.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return invalid("MI values must be finite");
    }
    if grid.radii.is_empty() || grid.exponents.is_empty() {
        return invalid("fit grid must contain radii and exponents");
    }
    let n = distances.len();
    let b = Array1::from(values.to_vec());
    // near-zero columns would let the amplitude (and Ĩ(0)) grow without bound
    let supported = |cutoff: f64| distinct.iter().filter(|&&r| r < SUPPORT_FRACTION * cutoff).count() >= MIN_TERM_SUPPORT;
    let mut best: Option<FittedModel> = None;
    for (a, &r1) in grid.radii.iter().enumerate() {
        for &r2 in &grid.radii[a..] {
            for &alpha1 in &grid.exponents {
                for &alpha2 in &grid.exponents {
                    let mut design = Array2::<f64>::ones((n, 3));
                    let (use1, use2) = (supported(r1), supported(r2));
                    for (row, &r) in distances.iter().enumerate() {
                        design[(row, 1)] = if use1 { gated_power(r1, alpha1, r) } else { 0.0 };
                        design[(row, 2)] = if use2 { gated_power(r2, alpha2, r) } else { 0.0 };
                    }
                    let sol = nnls(design.view(), b.view(), 1e-12 * (1.0 + n as f64), 200)?;
                    let rss = sol.residual_norm * sol.residual_norm;
                    if best.is_none_or(|m| rss < m.rss) {
                        let w = &sol.weights;
                        best = Some(FittedModel {
                            model: RedundancyModel { i_inf: w[0], gamma1: w[1], gamma2: w[2], r1, r2, alpha1, alpha2 },
                            rss,
                        });
                    }
                }
            }
        }
    }
    Ok(best.expect("grid is nonempty"))
}
