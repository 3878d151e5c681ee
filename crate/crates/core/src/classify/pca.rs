//! Principal component analysis fitted on training rows.

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::error::{invalid, Error, Result};
use crate::linalg;
use crate::scalar::Scalar;
use crate::synth::SplitTag;

#[derive(Debug, Clone, PartialEq)]
pub struct Pca<T> {
    pub mean: Array1<T>,
    /// Orthonormal components, one per row.
    pub components: Array2<T>,
    pub explained_variance: Array1<T>,
}

impl<T: Scalar> Pca<T> {
    /// Centred PCA of `x` with `k` components. The largest-magnitude entry of
    /// every component is made positive.
    pub fn fit(x: ArrayView2<T>, k: usize, split: SplitTag) -> Result<Self> {
        if split == SplitTag::Test {
            return Err(Error::InvalidState("refusing to fit PCA on test-split rows".into()));
        }
        let (n, p) = x.dim();
        if k == 0 || k > n.min(p) {
            return invalid(format!("k_components = {k} must lie in [1, {}]", n.min(p)));
        }
        let mean = x.mean_axis(Axis(0)).expect("nonempty");
        let xc = &x - &mean.view().insert_axis(Axis(0));
        let denom = T::from_count(n.saturating_sub(1).max(1));
        let mut comps = Array2::<T>::zeros((k, p));
        let mut var = Array1::<T>::zeros(k);
        if p <= n {
            let cov = linalg::at_b(xc.view(), xc.view());
            let (w, v) = linalg::symmetric_eigen(cov.view());
            for c in 0..k {
                comps.row_mut(c).assign(&v.column(c));
                var[c] = w[c].max(T::zero()) / denom;
            }
        } else {
            // Gram route: right singular vectors from the n × n eigenproblem
            let gram = linalg::at_b(xc.t(), xc.t());
            let (w, u) = linalg::symmetric_eigen(gram.view());
            for c in 0..k {
                let lam = w[c].max(T::zero());
                var[c] = lam / denom;
                if lam > T::zero() {
                    let v = xc.t().dot(&u.column(c)).mapv(|e| e / lam.sqrt());
                    comps.row_mut(c).assign(&v);
                }
            }
        }
        orthonormalize_rows(&mut comps);
        for mut row in comps.rows_mut() {
            let mut lead = 0;
            for j in 1..row.len() {
                if row[j].abs() > row[lead].abs() {
                    lead = j;
                }
            }
            if row[lead] < T::zero() {
                row.mapv_inplace(|e| -e);
            }
        }
        Ok(Pca { mean, components: comps, explained_variance: var })
    }

    pub fn n_components(&self) -> usize {
        self.components.nrows()
    }

    pub fn transform(&self, x: ArrayView2<T>) -> Array2<T> {
        (&x - &self.mean.view().insert_axis(Axis(0))).dot(&self.components.t())
    }

    pub fn inverse_transform(&self, z: ArrayView2<T>) -> Array2<T> {
        z.dot(&self.components) + &self.mean.view().insert_axis(Axis(0))
    }
}

/// Modified Gram–Schmidt, twice, on the rows; null rows are replaced by the
/// first coordinate direction that is independent of the previous rows.
fn orthonormalize_rows<T: Scalar>(m: &mut Array2<T>) {
    let (k, p) = m.dim();
    for c in 0..k {
        for _ in 0..2 {
            for prev in 0..c {
                let proj = linalg::dot(m.row(c), m.row(prev));
                let prev_row = m.row(prev).to_owned();
                m.row_mut(c).scaled_add(-proj, &prev_row);
            }
        }
        let mut norm = linalg::norm2(m.row(c));
        let mut axis = 0;
        while norm <= T::lit(1e-10) && axis < p {
            m.row_mut(c).fill(T::zero());
            m[(c, axis)] = T::one();
            for prev in 0..c {
                let proj = linalg::dot(m.row(c), m.row(prev));
                let prev_row = m.row(prev).to_owned();
                m.row_mut(c).scaled_add(-proj, &prev_row);
            }
            norm = linalg::norm2(m.row(c));
            axis += 1;
        }
        m.row_mut(c).mapv_inplace(|e| e / norm);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn low_rank(n: usize, p: usize, r: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = Normal::new(0.0, 1.0).unwrap();
        let a = Array2::from_shape_fn((n, r), |_| g.sample(&mut rng));
        let b = Array2::from_shape_fn((r, p), |_| g.sample(&mut rng));
        a.dot(&b) + 3.0
    }

    fn check_orthonormal(p: &Pca<f64>) {
        let g = p.components.dot(&p.components.t());
        for i in 0..g.nrows() {
            for j in 0..g.ncols() {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((g[(i, j)] - e).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn exact_rank_is_reconstructed() {
        for (n, p) in [(60, 25), (30, 80)] {
            let x = low_rank(n, p, 10, 1);
            let pca = Pca::fit(x.view(), 10, SplitTag::Train).unwrap();
            check_orthonormal(&pca);
            let back = pca.inverse_transform(pca.transform(x.view()).view());
            let err = (&back - &x).iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(err < 1e-8, "{n}x{p}: {err}");
        }
    }

    #[test]
    fn one_dimensional_variation() {
        let dir = [0.6, -0.8, 0.0];
        let x = Array2::from_shape_fn((20, 3), |(i, j)| 1.0 + (i as f64 - 7.0) * dir[j]);
        let pca = Pca::fit(x.view(), 1, SplitTag::Train).unwrap();
        let c = pca.components.row(0);
        assert!((c[0].abs() - 0.6).abs() < 1e-12 && (c[1].abs() - 0.8).abs() < 1e-12);
        assert!(c[1] > 0.0);
    }

    #[test]
    fn deterministic_signs_and_guards() {
        let x = low_rank(40, 30, 5, 2);
        let a = Pca::fit(x.view(), 8, SplitTag::Train).unwrap();
        let b = Pca::fit(x.view(), 8, SplitTag::Train).unwrap();
        assert_eq!(a, b);
        check_orthonormal(&a);
        assert!(Pca::fit(x.view(), 31, SplitTag::Train).is_err());
        assert!(Pca::fit(x.view(), 3, SplitTag::Test).is_err());
    }
}
