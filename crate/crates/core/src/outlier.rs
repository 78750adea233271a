//! Local Outlier Factor over latent vectors.
//!
//! Standard definitions: the k-distance of `p` is the distance to its k-th
//! nearest reference point (itself excluded), its neighborhood is every
//! point within that distance (ties included), the reachability distance
//! of `p` from `o` is `max(k-distance(o), d(p, o))`, and the local
//! reachability density is the inverse mean reachability distance over the
//! neighborhood. LOF is the mean neighbor density divided by the point's
//! own density. Queries are scored against the reference set without being
//! inserted.
//!
//! Distances are clamped below by [`DISTANCE_FLOOR`] so duplicated points
//! keep finite densities.

use crate::error::{invalid, shape, Error, Result};
use crate::scalar::Scalar;

pub const DISTANCE_FLOOR: f64 = 1e-12;
pub const DEFAULT_K: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct LofIndex<T> {
    dim: usize,
    k: usize,
    points: Vec<T>,
    k_distance: Vec<T>,
    lrd: Vec<T>,
    neighbors: Vec<Vec<usize>>,
}

fn distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    let d2: T = a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum();
    d2.sqrt().max(T::of(DISTANCE_FLOOR))
}

/// Distance to the k-th nearest entry (1-based) of `dists`.
fn kth_smallest<T: Scalar>(dists: &[T], k: usize, scratch: &mut Vec<T>) -> T {
    scratch.clear();
    scratch.extend_from_slice(dists);
    let (_, kth, _) = scratch.select_nth_unstable_by(k - 1, |a, b| a.partial_cmp(b).expect("finite distances"));
    *kth
}

impl<T: Scalar> LofIndex<T> {
    /// Builds the index from `n` points of dimension `dim` stored row-major.
    pub fn build(points: Vec<T>, dim: usize, k: usize) -> Result<Self> {
        if dim == 0 || !points.len().is_multiple_of(dim) {
            return Err(shape(format!("{} coordinates do not form points of dimension {}", points.len(), dim)));
        }
        let n = points.len() / dim;
        if k == 0 || k >= n {
            return Err(invalid(format!("k must satisfy 1 <= k < {n}, got {k}")));
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("LOF reference points".into()));
        }
        let distinct = {
            let mut rows: Vec<&[T]> = points.chunks_exact(dim).collect();
            rows.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
            rows.dedup();
            rows.len()
        };
        if distinct < k + 1 {
            return Err(invalid(format!("LOF with k={k} needs at least {} distinct points, got {distinct}", k + 1)));
        }

        let row = |i: usize| &points[i * dim..(i + 1) * dim];
        let mut k_distance = Vec::with_capacity(n);
        let mut neighbors = Vec::with_capacity(n);
        let mut dists = Vec::with_capacity(n);
        let mut scratch = Vec::with_capacity(n);
        let mut all_dists: Vec<Vec<(usize, T)>> = Vec::with_capacity(n);
        for i in 0..n {
            dists.clear();
            dists.extend((0..n).filter(|&j| j != i).map(|j| distance(row(i), row(j))));
            let kd = kth_smallest(&dists, k, &mut scratch);
            let nb: Vec<(usize, T)> = (0..n)
                .filter(|&j| j != i)
                .zip(dists.iter().copied())
                .filter(|&(_, d)| d <= kd)
                .collect();
            k_distance.push(kd);
            neighbors.push(nb.iter().map(|&(j, _)| j).collect());
            all_dists.push(nb);
        }
        let lrd = all_dists
            .iter()
            .map(|nb| {
                let sum: T = nb.iter().map(|&(j, d)| k_distance[j].max(d)).sum();
                T::of(nb.len() as f64) / sum
            })
            .collect();
        Ok(Self { dim, k, points, k_distance, lrd, neighbors })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[T] {
        &self.points
    }

    pub fn k_distances(&self) -> &[T] {
        &self.k_distance
    }

    pub fn local_reachability_densities(&self) -> &[T] {
        &self.lrd
    }

    /// LOF of a reference point with respect to the rest of the set.
    pub fn reference_lof(&self, i: usize) -> T {
        let nb = &self.neighbors[i];
        let mean: T = nb.iter().map(|&j| self.lrd[j]).sum::<T>() / T::of(nb.len() as f64);
        mean / self.lrd[i]
    }

    /// LOF of a query point; values near one are inliers.
    pub fn score(&self, query: &[T]) -> Result<T> {
        if query.len() != self.dim {
            return Err(shape(format!("query has dimension {}, index has {}", query.len(), self.dim)));
        }
        if query.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("LOF query".into()));
        }
        let dists: Vec<T> = self.points.chunks_exact(self.dim).map(|p| distance(query, p)).collect();
        let mut scratch = Vec::with_capacity(dists.len());
        let kd = kth_smallest(&dists, self.k, &mut scratch);
        let (mut reach, mut dens, mut count) = (T::zero(), T::zero(), 0usize);
        for (j, &d) in dists.iter().enumerate() {
            if d <= kd {
                reach += self.k_distance[j].max(d);
                dens += self.lrd[j];
                count += 1;
            }
        }
        let c = T::of(count as f64);
        let lrd_q = c / reach;
        Ok((dens / c) / lrd_q)
    }
}

/// Builds an index over row-major points; see [`LofIndex::build`].
pub fn build_index<T: Scalar>(points: Vec<T>, dim: usize, k: usize) -> Result<LofIndex<T>> {
    LofIndex::build(points, dim, k)
}

/// LOF of `query` against the index.
pub fn lof_score<T: Scalar>(index: &LofIndex<T>, query: &[T]) -> Result<T> {
    index.score(query)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collinear_interior_symmetry() {
        let pts: Vec<f64> = (0..5).map(|i| i as f64).collect();
        let idx = build_index(pts, 1, 2).unwrap();
        let lrd = idx.local_reachability_densities();
        assert!((lrd[1] - lrd[3]).abs() < 1e-15);
        assert!((lrd[0] - lrd[4]).abs() < 1e-15);
    }

    #[test]
    fn duplicates_stay_finite() {
        let mut pts = vec![0.0f64, 0.0];
        for _ in 0..6 {
            pts.extend([1.0, 1.0]);
        }
        pts.extend([2.0, 0.5, -1.0, 3.0, 0.3, 0.2]);
        let idx = build_index(pts, 2, 3).unwrap();
        assert!(idx.local_reachability_densities().iter().all(|v| v.is_finite() && *v > 0.0));
        assert!((0..idx.len()).all(|i| idx.reference_lof(i).is_finite()));
        assert!(idx.score(&[1.0, 1.0]).unwrap().is_finite());
    }

    #[test]
    fn argument_errors() {
        assert!(build_index(vec![0.0f64, 1.0, 2.0], 1, 3).is_err());
        assert!(build_index(vec![0.0f64, 1.0, 2.0], 1, 0).is_err());
        assert!(build_index(vec![0.0f64, 1.0, 2.0], 2, 1).is_err());
        assert!(build_index(vec![1.0f64, 1.0, 1.0, 2.0], 1, 2).is_err());
        let idx = build_index(vec![0.0f64, 1.0, 2.0, 4.0], 1, 2).unwrap();
        assert!(matches!(idx.score(&[0.0, 0.0]), Err(Error::Shape(_))));
    }
}
