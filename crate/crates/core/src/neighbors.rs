//! Exact nearest-neighbor queries by brute force.
//!
//! Conventions shared by every caller in the crate:
//!
//! - a point is never its own neighbor in [`PointSet::kth_neighbor`];
//! - [`PointSet::count_strictly_within`] counts the center itself (distance 0)
//!   whenever the radius is positive;
//! - equal distances are ordered by ascending sample index.
//!
//! Duplicate points are allowed and give zero distances. Callers that need
//! strictly positive neighbor distances should jitter the data first
//! (see [`crate::dataset::Dataset::jittered`]).

use crate::{Error, Matrix, Result};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    /// Maximum absolute coordinate difference.
    Chebyshev,
    #[default]
    Euclidean,
}

impl Norm {
    #[inline]
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        if a.len() == 1 {
            return (a[0] - b[0]).abs();
        }
        match self {
            Norm::Chebyshev => a
                .iter()
                .zip(b)
                .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).abs())),
            Norm::Euclidean => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeighborQueryResult {
    pub kth_distance: f64,
    pub kth_index: usize,
}

/// Orders `(distance, index)` pairs by distance, then by index.
#[inline]
pub(crate) fn by_distance_then_index(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// A borrowed set of points together with the norm used to compare them.
#[derive(Debug, Clone, Copy)]
pub struct PointSet<'a> {
    points: &'a Matrix,
    norm: Norm,
}

impl<'a> PointSet<'a> {
    pub fn new(points: &'a Matrix, norm: Norm) -> Self {
        PointSet { points, norm }
    }

    pub fn len(&self) -> usize {
        self.points.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.cols()
    }

    pub fn norm(&self) -> Norm {
        self.norm
    }

    #[inline]
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.norm.distance(self.points.row(i), self.points.row(j))
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.len() {
            return Err(Error::invalid(format!(
                "sample index {i} out of range for {} points",
                self.len()
            )));
        }
        Ok(())
    }

    /// The K-th closest other point to `query` (K is 1-based).
    pub fn kth_neighbor(&self, query: usize, k: usize) -> Result<NeighborQueryResult> {
        self.check_index(query)?;
        let n = self.len();
        if k == 0 || k >= n {
            return Err(Error::KOutOfRange {
                k,
                max: n.saturating_sub(1),
            });
        }
        let mut cand: Vec<(f64, usize)> = (0..n)
            .filter(|&m| m != query)
            .map(|m| (self.distance(query, m), m))
            .collect();
        let (_, kth, _) = cand.select_nth_unstable_by(k - 1, by_distance_then_index);
        Ok(NeighborQueryResult {
            kth_distance: kth.0,
            kth_index: kth.1,
        })
    }

    pub fn nearest_neighbor(&self, query: usize) -> Result<NeighborQueryResult> {
        if self.len() < 2 {
            return Err(Error::TooFewSamples {
                needed: 2,
                found: self.len(),
            });
        }
        self.kth_neighbor(query, 1)
    }

    /// Number of points (center included) at distance strictly below `radius`.
    pub fn count_strictly_within(&self, center: usize, radius: f64) -> Result<usize> {
        self.check_index(center)?;
        if radius.is_nan() || radius < 0.0 {
            return Err(Error::invalid(format!(
                "radius must be nonnegative, got {radius}"
            )));
        }
        Ok((0..self.len())
            .filter(|&m| self.distance(center, m) < radius)
            .count())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(v: &[f64]) -> Matrix {
        Matrix::column_vector(v).unwrap()
    }

    #[test]
    fn kth_on_three_points() {
        let m = line(&[0.0, 1.0, 3.0]);
        let ps = PointSet::new(&m, Norm::Euclidean);
        let r1 = ps.kth_neighbor(0, 1).unwrap();
        assert_eq!((r1.kth_distance, r1.kth_index), (1.0, 1));
        let r2 = ps.kth_neighbor(0, 2).unwrap();
        assert_eq!((r2.kth_distance, r2.kth_index), (3.0, 2));
        assert!(matches!(
            ps.kth_neighbor(0, 3),
            Err(Error::KOutOfRange { .. })
        ));
        assert!(matches!(
            ps.kth_neighbor(0, 0),
            Err(Error::KOutOfRange { .. })
        ));
    }

    #[test]
    fn strict_counts() {
        let m = line(&[0.0, 1.0, 3.0]);
        let ps = PointSet::new(&m, Norm::Chebyshev);
        assert_eq!(ps.count_strictly_within(0, 0.0).unwrap(), 0);
        assert_eq!(ps.count_strictly_within(0, f64::INFINITY).unwrap(), 3);
        assert_eq!(ps.count_strictly_within(0, 1.5).unwrap(), 2);
        // the neighbor at exactly 1.0 is excluded
        assert_eq!(ps.count_strictly_within(0, 1.0).unwrap(), 1);
        assert!(ps.count_strictly_within(0, -1.0).is_err());
    }

    #[test]
    fn nearest_neighbor_ties_and_pairs() {
        let two = line(&[5.0, 2.0]);
        let ps = PointSet::new(&two, Norm::Euclidean);
        assert_eq!(ps.nearest_neighbor(0).unwrap().kth_index, 1);
        assert_eq!(ps.nearest_neighbor(1).unwrap().kth_index, 0);

        let col = line(&[0.0, 1.0, 2.0]);
        let ps = PointSet::new(&col, Norm::Euclidean);
        // both neighbors of the middle point sit at distance 1; lower index wins
        assert_eq!(ps.nearest_neighbor(1).unwrap().kth_index, 0);

        let one = line(&[1.0]);
        assert!(PointSet::new(&one, Norm::Euclidean)
            .nearest_neighbor(0)
            .is_err());
    }

    #[test]
    fn norms() {
        let a = [0.0, 0.0];
        let b = [3.0, 4.0];
        assert_eq!(Norm::Chebyshev.distance(&a, &b), 4.0);
        assert_eq!(Norm::Euclidean.distance(&a, &b), 5.0);
    }
}
