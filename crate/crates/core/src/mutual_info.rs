//! Mutual information: Pearson correlation, the bivariate Gaussian closed
//! form, and a nearest-neighbour estimator between a continuous feature and a
//! discrete label.

use std::collections::BTreeMap;

use rand_distr::{Distribution, Normal};
use statrs::function::gamma::digamma;

use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;
use crate::synth::stream_rng;

/// Clamp applied to `ρ²` so that the Gaussian MI stays finite.
pub const RHO_SQ_CLAMP: f64 = 1e-12;

pub const DEFAULT_K_NEIGHBORS: usize = 3;

pub fn pearson_correlation<T: Scalar>(xs: &[T], ys: &[T]) -> Result<T> {
    if xs.len() != ys.len() {
        return invalid(format!("length mismatch {} vs {}", xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return invalid("correlation needs at least two observations");
    }
    let n = T::from_count(xs.len());
    let mx = xs.iter().copied().sum::<T>() / n;
    let my = ys.iter().copied().sum::<T>() / n;
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&x, &y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy = sxy + dx * dy;
        sxx = sxx + dx * dx;
        syy = syy + dy * dy;
    }
    if sxx == T::zero() || syy == T::zero() {
        return Err(Error::DegenerateInput("constant input vector".into()));
    }
    let r = sxy / (sxx.sqrt() * syy.sqrt());
    Ok(r.max(-T::one()).min(T::one()))
}

/// `−½ ln(1 − ρ²)` in nats, with `ρ²` clamped to `1 − 1e-12`.
pub fn gaussian_mi<T: Scalar>(rho: T) -> T {
    let gap = (T::one() - rho * rho).max(T::lit(RHO_SQ_CLAMP));
    -T::lit(0.5) * gap.ln()
}

/// Feature–feature MI under the joint Gaussian model.
pub fn mi_feature_feature_exact<T: Scalar>(xs: &[T], ys: &[T]) -> Result<T> {
    Ok(gaussian_mi(pearson_correlation(xs, ys)?))
}

/// Nearest-neighbour MI between a continuous variable and class labels.
///
/// For each sample the distance `d` to its `k`-th nearest neighbour within
/// its own class is found (with `k` capped by the class size), then the
/// number `m` of samples of any class strictly closer than `d` is counted,
/// the sample itself included. The estimate is
/// `ψ(N) − ⟨ψ(N_c)⟩ + ⟨ψ(k)⟩ − ⟨ψ(m)⟩`, clamped at zero. A seeded jitter of
/// relative size 1e-10 breaks ties between repeated values.
pub fn mi_feature_label<T: Scalar>(xs: &[T], labels: &[usize], k_neighbors: usize, rng_seed: u64) -> Result<T> {
    let n = xs.len();
    if labels.len() != n {
        return invalid(format!("{} labels for {n} observations", labels.len()));
    }
    if k_neighbors == 0 {
        return invalid("k_neighbors must be positive");
    }
    let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &y) in labels.iter().enumerate() {
        classes.entry(y).or_default().push(i);
    }
    if classes.len() < 2 {
        return Err(Error::DegenerateInput("at least two classes are required".into()));
    }
    if let Some((c, members)) = classes.iter().find(|(_, m)| m.len() < 2) {
        return Err(Error::DegenerateInput(format!("class {c} has {} member(s)", members.len())));
    }
    if n < classes.len() * (k_neighbors + 1) {
        return invalid(format!("{n} samples are too few for {} classes and k = {k_neighbors}", classes.len()));
    }

    let raw: Vec<f64> = xs.iter().map(|x| x.as_f64()).collect();
    let mean = raw.iter().sum::<f64>() / n as f64;
    let std = (raw.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    let amp = 1e-10 * if std > 0.0 { std } else { 1.0 };
    let noise = Normal::new(0.0, 1.0).expect("unit normal");
    let mut rng = stream_rng(rng_seed, 0x6d69);
    let x: Vec<f64> = raw.iter().map(|v| v + amp * noise.sample(&mut rng)).collect();

    let mut sorted_all = x.clone();
    sorted_all.sort_by(f64::total_cmp);

    let mut sum_k = 0.0;
    let mut sum_m = 0.0;
    let mut sum_nc = 0.0;
    for members in classes.values() {
        let mut vals: Vec<f64> = members.iter().map(|&i| x[i]).collect();
        vals.sort_by(f64::total_cmp);
        let k = k_neighbors.min(vals.len() - 1);
        for (pos, &v) in vals.iter().enumerate() {
            let d = kth_neighbor_distance(&vals, pos, k);
            // strictly inside the radius, self included
            let lo = sorted_all.partition_point(|&y| y <= v - d);
            let hi = sorted_all.partition_point(|&y| y < v + d);
            let m = (hi - lo).max(1);
            sum_k += digamma(k as f64);
            sum_m += digamma(m as f64);
            sum_nc += digamma(vals.len() as f64);
        }
    }
    let nf = n as f64;
    let mi = digamma(nf) + (sum_k - sum_nc - sum_m) / nf;
    Ok(T::lit(mi.max(0.0)))
}

/// Distance from `vals[pos]` to its `k`-th nearest neighbour in the sorted
/// slice, excluding itself.
fn kth_neighbor_distance(vals: &[f64], pos: usize, k: usize) -> f64 {
    let v = vals[pos];
    let (mut left, mut right) = (pos, pos + 1);
    let mut d = 0.0;
    for _ in 0..k {
        let dl = if left > 0 { v - vals[left - 1] } else { f64::INFINITY };
        let dr = if right < vals.len() { vals[right] - v } else { f64::INFINITY };
        if dl <= dr {
            d = dl;
            left -= 1;
        } else {
            d = dr;
            right += 1;
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gaussian(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = Normal::new(0.0, 1.0).unwrap();
        (0..n).map(|_| d.sample(&mut rng)).collect()
    }

    #[test]
    fn pearson_cases() {
        let xs = [1.0, 2.0, 3.0];
        assert_abs_diff_eq!(pearson_correlation(&xs, &xs).unwrap(), 1.0, epsilon = 1e-15);
        let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
        assert_abs_diff_eq!(pearson_correlation(&xs, &neg).unwrap(), -1.0, epsilon = 1e-15);
        // cov = 1.5, var_x = 1, var_y = 7/3 (sums of squares 2 and 14/3)
        let expected = 3.0 / (2.0f64 * 14.0 / 3.0).sqrt();
        assert_abs_diff_eq!(pearson_correlation(&xs, &[1.0, 2.0, 4.0]).unwrap(), expected, epsilon = 1e-14);
        assert!((expected - 0.98198).abs() < 1e-5);
        assert!(matches!(pearson_correlation(&[1.0, 1.0], &[0.0, 1.0]), Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn gaussian_mi_closed_form() {
        assert_eq!(gaussian_mi(0.0), 0.0);
        assert_abs_diff_eq!(gaussian_mi(0.5), -0.5 * 0.75f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(gaussian_mi(0.5), 0.14384, epsilon = 1e-5);
        let rho = (1.0 - (-2.0f64).exp()).sqrt();
        assert_abs_diff_eq!(gaussian_mi(rho), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(gaussian_mi(1.0), -0.5 * RHO_SQ_CLAMP.ln(), epsilon = 1e-12);
    }

    #[test]
    fn duplicated_feature_hits_clamp() {
        let xs = gaussian(100, 1);
        let v = mi_feature_feature_exact(&xs, &xs).unwrap();
        assert_abs_diff_eq!(v, -0.5 * RHO_SQ_CLAMP.ln(), epsilon = 1e-12);
    }

    #[test]
    fn independent_gaussians_have_small_mi() {
        let xs = gaussian(10_000, 2);
        let ys = gaussian(10_000, 3);
        assert!(mi_feature_feature_exact(&xs, &ys).unwrap() < 0.01);
    }

    #[test]
    fn noisy_linear_matches_theory() {
        let xs = gaussian(10_000, 4);
        let noise = gaussian(10_000, 5);
        let ys: Vec<f64> = xs.iter().zip(&noise).map(|(x, e)| 2.0 * x + 1.5 * e).collect();
        // var(y) = 4 + 2.25, cov = 2
        let rho = 2.0 / 6.25f64.sqrt();
        let theory = -0.5 * (1.0 - rho * rho).ln();
        assert!((mi_feature_feature_exact(&xs, &ys).unwrap() - theory).abs() < 0.02);
    }

    #[test]
    fn label_mi_independent_is_small() {
        let xs = gaussian(10_000, 6);
        let mut labels: Vec<usize> = (0..10_000).map(|i| 1 + i % 2).collect();
        labels.shuffle(&mut ChaCha8Rng::seed_from_u64(7));
        assert!(mi_feature_label(&xs, &labels, 3, 0).unwrap() < 0.02);
    }

    #[test]
    fn label_mi_separated_is_ln2() {
        let xs = gaussian(10_000, 8);
        let labels: Vec<usize> = (0..10_000).map(|i| 1 + i % 2).collect();
        let shifted: Vec<f64> = xs
            .iter()
            .zip(&labels)
            .map(|(x, &y)| if y == 1 { x.abs() + 0.1 } else { -x.abs() - 0.1 })
            .collect();
        let mi = mi_feature_label(&shifted, &labels, 3, 0).unwrap();
        assert!((mi - std::f64::consts::LN_2).abs() < 0.05, "{mi}");
    }

    #[test]
    fn label_mi_monotone_invariance() {
        let xs = gaussian(10_000, 9);
        let labels: Vec<usize> = xs.iter().map(|&x| if x + 0.8 * gaussian_one(x) > 0.0 { 1 } else { 2 }).collect();
        let cubed: Vec<f64> = xs.iter().map(|x| x * x * x).collect();
        let a = mi_feature_label(&xs, &labels, 3, 0).unwrap();
        let b = mi_feature_label(&cubed, &labels, 3, 0).unwrap();
        assert!((a - b).abs() < 0.02, "{a} vs {b}");
    }

    fn gaussian_one(x: f64) -> f64 {
        // deterministic pseudo-noise derived from x
        ((x * 12_345.678).sin() * 43_758.545).fract() * 2.0
    }

    #[test]
    fn label_mi_errors() {
        let xs = [0.1, 0.2, 0.3, 0.4];
        assert!(mi_feature_label(&xs, &[1, 1, 1, 1], 1, 0).is_err());
        assert!(matches!(mi_feature_label(&xs, &[1, 1, 1, 2], 1, 0), Err(Error::DegenerateInput(_))));
    }
}
