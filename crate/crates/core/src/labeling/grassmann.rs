//! Principal-angle distance between snapshot spans.

use std::cmp::Ordering;
use std::f64::consts::FRAC_PI_2;

use ndarray::{Array2, ArrayView2};
use super::simulation::SnapshotSet;
use crate::error::{invalid, Error, Result};
use crate::linalg;
use crate::scalar::Scalar;

/// Orthonormal basis (columns) of the span of a snapshot set.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBasis<T> {
    pub q: Array2<T>,
}

impl<T: Scalar> SubspaceBasis<T> {
    pub fn from_snapshots(set: &SnapshotSet<T>, rank_tol: T) -> Result<Self> {
        let (q, _) = linalg::orthonormal_basis(set.snapshots.t(), rank_tol);
        if q.ncols() == 0 {
            return Err(Error::DegenerateInput("snapshot span has rank zero".into()));
        }
        Ok(SubspaceBasis { q })
    }

    pub fn dim(&self) -> usize {
        self.q.ncols()
    }

    /// Total order used to fix the argument order of a pairwise distance,
    /// which makes the distance bitwise symmetric.
    fn canonical_cmp(&self, other: &Self) -> Ordering {
        self.q
            .dim()
            .cmp(&other.q.dim())
            .then_with(|| {
                self.q
                    .iter()
                    .zip(other.q.iter())
                    .map(|(a, b)| a.as_f64().total_cmp(&b.as_f64()))
                    .find(|o| *o != Ordering::Equal)
                    .unwrap_or(Ordering::Equal)
            })
    }
}

/// Principal angles between two orthonormal bases, in increasing order.
///
/// Cosines come from the singular values of `QaᵀQb` and sines from the
/// residual `Qb − Qa(QaᵀQb)`; each angle is taken from whichever of the two is
/// better conditioned. Missing angles for unequal dimensions are `π/2`.
pub fn principal_angles<T: Scalar>(a: ArrayView2<T>, b: ArrayView2<T>) -> Vec<T> {
    let (big, small) = if a.ncols() >= b.ncols() { (a, b) } else { (b, a) };
    let m = linalg::at_b(big, small);
    let cosines: Vec<T> = linalg::singular_values(m.view())
        .iter()
        .map(|&c| c.max(T::zero()).min(T::one()))
        .collect();
    let residual = &small - &big.dot(&m);
    let gram = linalg::at_b(residual.view(), residual.view());
    let (w, _) = linalg::symmetric_eigen(gram.view());
    // eigenvalues come in decreasing order, sines are paired increasing
    let sines: Vec<T> = w.iter().rev().map(|&x| x.max(T::zero()).sqrt().min(T::one())).collect();
    let half = T::lit(0.5);
    let mut angles: Vec<T> = cosines
        .iter()
        .zip(&sines)
        .map(|(&c, &s)| if c * c > half { s.asin() } else { c.acos() })
        .collect();
    angles.extend(std::iter::repeat_n(T::lit(FRAC_PI_2), big.ncols() - small.ncols()));
    angles
}

fn angle_norm<T: Scalar>(angles: &[T]) -> T {
    angles.iter().fold(T::zero(), |acc, &t| acc + t * t).sqrt()
}

/// Distance between two precomputed bases, symmetric bit for bit.
pub fn basis_distance<T: Scalar>(a: &SubspaceBasis<T>, b: &SubspaceBasis<T>) -> T {
    if a.q == b.q {
        return T::zero();
    }
    let (first, second) = match a.canonical_cmp(b) {
        Ordering::Greater => (b, a),
        _ => (a, b),
    };
    angle_norm(&principal_angles(first.q.view(), second.q.view()))
}

/// `sqrt(Σ θ_k²)` over the principal angles between the spans of two snapshot
/// sets, after rank truncation at `rank_tol · σ_max`.
pub fn grassmann_dissimilarity<T: Scalar>(a: &SnapshotSet<T>, b: &SnapshotSet<T>, rank_tol: T) -> Result<T> {
    if a.n_nodes() != b.n_nodes() {
        return invalid("snapshot sets live on different meshes");
    }
    let ba = SubspaceBasis::from_snapshots(a, rank_tol)?;
    let bb = SubspaceBasis::from_snapshots(b, rank_tol)?;
    Ok(basis_distance(&ba, &bb))
}

/// Symmetric `N × N` matrix of pairwise dissimilarities.
#[derive(Debug, Clone, PartialEq)]
pub struct DissimilarityMatrix<T> {
    values: Array2<T>,
}

impl<T: Scalar> DissimilarityMatrix<T> {
    /// Validates symmetry (1e-12), zero diagonal and nonnegativity.
    pub fn new(values: Array2<T>) -> Result<Self> {
        let n = values.nrows();
        if n != values.ncols() {
            return invalid("dissimilarity matrix must be square");
        }
        let tol = T::lit(1e-12);
        for i in 0..n {
            if values[(i, i)] != T::zero() {
                return invalid(format!("nonzero diagonal at {i}"));
            }
            for j in 0..n {
                let v = values[(i, j)];
                if !(v >= T::zero()) || !v.is_finite() {
                    return invalid(format!("invalid dissimilarity at ({i}, {j})"));
                }
                if (v - values[(j, i)]).abs() > tol {
                    return invalid(format!("asymmetric entries at ({i}, {j})"));
                }
            }
        }
        Ok(DissimilarityMatrix { values })
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[(i, j)]
    }

    pub fn values(&self) -> &Array2<T> {
        &self.values
    }

    /// Principal submatrix on `rows` (in the given order).
    pub fn restrict(&self, rows: &[usize]) -> DissimilarityMatrix<T> {
        let sub = Array2::from_shape_fn((rows.len(), rows.len()), |(a, b)| self.values[(rows[a], rows[b])]);
        DissimilarityMatrix { values: sub }
    }
}

/// Orthonormal bases for every snapshot set; the error names the offending
/// index.
pub fn snapshot_bases<T: Scalar>(sets: &[SnapshotSet<T>], rank_tol: T) -> Result<Vec<SubspaceBasis<T>>> {
    sets.iter()
        .enumerate()
        .map(|(i, s)| {
            SubspaceBasis::from_snapshots(s, rank_tol)
                .map_err(|e| Error::DegenerateInput(format!("snapshot set {i}: {e}")))
        })
        .collect()
}

pub fn build_dissimilarity_matrix<T: Scalar>(sets: &[SnapshotSet<T>], rank_tol: T) -> Result<DissimilarityMatrix<T>> {
    if sets.len() < 2 {
        return invalid("need at least two snapshot sets");
    }
    if sets.iter().any(|s| s.n_nodes() != sets[0].n_nodes()) {
        return invalid("snapshot sets live on different meshes");
    }
    let bases = snapshot_bases(sets, rank_tol)?;
    Ok(dissimilarity_from_bases(&bases))
}

pub fn dissimilarity_from_bases<T: Scalar>(bases: &[SubspaceBasis<T>]) -> DissimilarityMatrix<T> {
    let n = bases.len();
    let mut values = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let d = basis_distance(&bases[i], &bases[j]);
            values[(i, j)] = d;
            values[(j, i)] = d;
        }
    }
    DissimilarityMatrix { values }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    fn set(rows: Array2<f64>) -> SnapshotSet<f64> {
        SnapshotSet::new(rows).unwrap()
    }

    #[test]
    fn identical_spans_have_zero_distance() {
        let a = set(array![[1.0, 2.0, 0.0, 1.0], [0.0, 1.0, 1.0, 3.0]]);
        let b = set(array![[1.0, 3.0, 1.0, 4.0], [2.0, 4.0, 0.0, 2.0]]);
        assert!(grassmann_dissimilarity(&a, &a, 1e-10).unwrap() < 1e-10);
        assert!(grassmann_dissimilarity(&a, &b, 1e-10).unwrap() < 1e-10);
    }

    #[test]
    fn orthogonal_lines() {
        let a = set(array![[1.0, 0.0, 0.0]]);
        let b = set(array![[0.0, 2.0, 0.0]]);
        let d = grassmann_dissimilarity(&a, &b, 1e-10).unwrap();
        assert!((d - FRAC_PI_2).abs() < 1e-14);
    }

    #[test]
    fn unequal_dimensions_pad_with_right_angles() {
        // span{e1, e2} against span{e1, e2, e3}
        let a = set(array![[1.0, 1.0, 0.0, 0.0], [1.0, -1.0, 0.0, 0.0]]);
        let b = set(array![[0.0, 1.0, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]]);
        let d = grassmann_dissimilarity(&a, &b, 1e-10).unwrap();
        assert!((d - FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn zero_span_is_degenerate() {
        let z = set(Array2::zeros((2, 3)));
        let a = set(array![[1.0, 0.0, 0.0]]);
        assert!(matches!(grassmann_dissimilarity(&z, &a, 1e-10), Err(Error::DegenerateInput(_))));
        let err = build_dissimilarity_matrix(&[a.clone(), z], 1e-10).unwrap_err();
        assert!(err.to_string().contains("snapshot set 1"));
    }

    #[test]
    fn identical_sets_give_zero_matrix() {
        let a = set(array![[1.0, 2.0, 3.0], [0.0, 1.0, 0.5]]);
        let m = build_dissimilarity_matrix(&[a.clone(), a.clone(), a], 1e-10).unwrap();
        assert!(m.values().iter().all(|&x| x < 1e-10));
    }

    #[test]
    fn rotated_lines_in_plane() {
        // lines at angles 0, 0.3, 1.1 rad in the plane: pairwise distance is the angle gap
        let line = |t: f64| set(array![[t.cos(), t.sin(), 0.0]]);
        let sets = [line(0.0), line(0.3), line(1.1)];
        let m = build_dissimilarity_matrix(&sets, 1e-10).unwrap();
        assert!((m.get(0, 1) - 0.3).abs() < 1e-12);
        assert!((m.get(0, 2) - 1.1).abs() < 1e-12);
        assert!((m.get(1, 2) - 0.8).abs() < 1e-12);
        assert!(DissimilarityMatrix::new(m.values().clone()).is_ok());
    }

    #[test]
    fn works_in_single_precision() {
        let a = SnapshotSet::new(array![[1.0f32, 0.0, 0.0]]).unwrap();
        let b = SnapshotSet::new(array![[0.0f32, 1.0, 0.0]]).unwrap();
        let d = grassmann_dissimilarity(&a, &b, 1e-6).unwrap();
        assert!((d - std::f32::consts::FRAC_PI_2).abs() < 1e-6);
    }
}
