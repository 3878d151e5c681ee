//! Soft-vote averaging and stacking of fitted classifiers.

use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;
use crate::synth::SplitTag;

use super::models::{clipped_log, fit_stack_weights, ClassifierModel, Labeled, StackedModel};

fn check_compatible<T: Scalar>(models: &[ClassifierModel<T>]) -> Result<()> {
    let Some(first) = models.first() else {
        return invalid("at least one model is required");
    };
    if models.iter().any(|m| m.n_classes() != first.n_classes() || m.n_features() != first.n_features()) {
        return invalid("models disagree on classes or input dimension");
    }
    Ok(())
}

/// Weighted mean of membership probabilities (equal weights by default).
pub fn ensemble_average<T: Scalar>(models: Vec<ClassifierModel<T>>, weights: Option<Vec<T>>) -> Result<ClassifierModel<T>> {
    check_compatible(&models)?;
    let weights = weights.unwrap_or_else(|| vec![T::one(); models.len()]);
    if weights.len() != models.len() || weights.iter().any(|w| *w < T::zero()) || weights.iter().all(|w| *w == T::zero()) {
        return invalid("one nonnegative weight per model is required, not all zero");
    }
    Ok(ClassifierModel::Average { models, weights })
}

/// Stacking: the meta-learner combines the bases' log-probabilities with one
/// ridge-penalised weight per base, fitted on validation rows only.
pub fn stack<T: Scalar>(models: Vec<ClassifierModel<T>>, penalty: f64, validation: &Labeled<T>) -> Result<ClassifierModel<T>> {
    if models.len() < 2 {
        return invalid("stacking needs at least two base models");
    }
    check_compatible(&models)?;
    if validation.split != SplitTag::Validation {
        return Err(Error::InvalidState("the stacking meta-learner is fitted on the validation split only".into()));
    }
    validation.for_fitting()?;
    let k = models[0].n_classes();
    if let Some(c) = (1..=k).find(|c| !validation.y.contains(c)) {
        return Err(Error::InvalidState(format!("validation split has no sample of class {c}")));
    }
    let log_probs: Vec<_> = models.iter().map(|m| clipped_log(&m.predict_proba(validation.x))).collect();
    let weights = fit_stack_weights(&log_probs, validation.y, penalty);
    Ok(ClassifierModel::Stacked(StackedModel { bases: models, weights }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::models::{fit_lda, Logistic};
    use ndarray::{array, Array1, Array2};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    /// Model returning the same probabilities for every input.
    fn constant(probs: &[f64]) -> ClassifierModel<f64> {
        let k = probs.len();
        let mut weights = Array2::zeros((k, 2));
        for c in 0..k {
            weights[(c, 1)] = probs[c].ln();
        }
        ClassifierModel::Logistic(Logistic { shift: Array1::zeros(1), scale: Array1::ones(1), weights, iterations: 0 })
    }

    #[test]
    fn averaging_rules() {
        let x = array![[0.0], [1.0]];
        let a = constant(&[0.9, 0.1]);
        let single = ensemble_average(vec![a.clone()], None).unwrap();
        assert_eq!(single.predict(x.view()), a.predict(x.view()));
        let b = constant(&[0.4, 0.6]);
        let avg = ensemble_average(vec![a.clone(), b], None).unwrap();
        assert_eq!(avg.predict(x.view()), vec![1, 1]);
        let tie = ensemble_average(vec![constant(&[0.7, 0.3]), constant(&[0.3, 0.7])], None).unwrap();
        assert_eq!(tie.predict(x.view()), vec![1, 1]);
        assert!(ensemble_average(vec![a, constant(&[0.2, 0.3, 0.5])], None).is_err());
        assert!(ensemble_average::<f64>(vec![], None).is_err());
    }

    fn blobs(n: usize, seed: u64) -> (Array2<f64>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = Normal::new(0.0, 1.0).unwrap();
        let x = Array2::from_shape_fn((n, 1), |(i, _)| if i % 2 == 0 { -2.0 } else { 2.0 } + g.sample(&mut rng));
        let y = (0..n).map(|i| 1 + i % 2).collect();
        (x, y)
    }

    #[test]
    fn stacking_identical_bases_keeps_predictions() {
        let (xt, yt) = blobs(200, 1);
        let (xv, yv) = blobs(100, 2);
        let (xs, ys) = blobs(300, 3);
        let train = Labeled::new(xt.view(), &yt, SplitTag::Train).unwrap();
        let base = fit_lda(&train, 1e-6).unwrap();
        let val = Labeled::new(xv.view(), &yv, SplitTag::Validation).unwrap();
        let stacked = stack(vec![base.clone(), base.clone(), base.clone()], 1e-2, &val).unwrap();
        assert_eq!(stacked.predict(xs.view()), base.predict(xs.view()));
        assert_eq!(stacked.accuracy(xs.view(), &ys), base.accuracy(xs.view(), &ys));
    }

    #[test]
    fn stacking_prefers_the_informative_base() {
        let (xt, yt) = blobs(200, 4);
        let (xv, yv) = blobs(200, 5);
        let (xs, ys) = blobs(400, 6);
        let good = fit_lda(&Labeled::new(xt.view(), &yt, SplitTag::Train).unwrap(), 1e-6).unwrap();
        let noise = [constant(&[0.55, 0.45]), constant(&[0.3, 0.7])];
        let val = Labeled::new(xv.view(), &yv, SplitTag::Validation).unwrap();
        let stacked = stack(vec![noise[0].clone(), good.clone(), noise[1].clone()], 1e-2, &val).unwrap();
        let ClassifierModel::Stacked(s) = &stacked else { unreachable!() };
        assert!(s.weights[1] > s.weights[0].abs() && s.weights[1] > s.weights[2].abs(), "{:?}", s.weights);
        assert!(stacked.accuracy(xs.view(), &ys) >= good.accuracy(xs.view(), &ys) - 0.01);
    }

    #[test]
    fn stacking_preconditions() {
        let (xv, yv) = blobs(20, 7);
        let val = Labeled::new(xv.view(), &yv, SplitTag::Validation).unwrap();
        assert!(stack::<f64>(vec![], 1e-2, &val).is_err());
        let a = constant(&[0.5, 0.5]);
        let train_tagged = Labeled::new(xv.view(), &yv, SplitTag::Train).unwrap();
        assert!(matches!(stack(vec![a.clone(), a.clone()], 1e-2, &train_tagged), Err(Error::InvalidState(_))));
        let ones = vec![1; 20];
        let missing = Labeled::new(xv.view(), &ones, SplitTag::Validation).unwrap();
        assert!(matches!(stack(vec![a.clone(), a], 1e-2, &missing), Err(Error::InvalidState(_))));
    }
}
