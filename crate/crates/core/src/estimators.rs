//! k-nearest-neighbor estimators of differential entropy and mutual
//! information, plus the digamma function they are written in.
//!
//! For random variables X and Y with joint density, the mutual information is
//! MI(X, Y) = H(Y) - H(Y | X) = H(X) + H(Y) - H(X, Y). Neither estimator here
//! touches densities; both work from neighbor distances alone.
//!
//! **Entropy** (Kozachenko-Leonenko):
//!
//! ```text
//! H(X) ~ -psi(K) + psi(N) + ln c_D + (D/N) * sum_n ln eps(n, K)
//! ```
//!
//! with `eps(n, K)` twice the Euclidean distance from `x_n` to its K-th
//! neighbor. Since `eps` is a diameter, `c_D` is the volume of the Euclidean
//! ball of unit *diameter*, `pi^(D/2) / Gamma(D/2 + 1) / 2^D`.
//!
//! **Mutual information** (Kraskov):
//!
//! ```text
//! MI(X, Y) ~ psi(K) + psi(N) - (1/N) * sum_n [psi(tau_x(n)) + psi(tau_y(n))]
//! ```
//!
//! where distances in the joint space are `max(|x_n - x_m|, |y_n - y_m|)`,
//! `eps_n` is the (undoubled) joint distance to the K-th neighbor, and
//! `tau_x(n)` counts the points whose X-distance to `x_n` is strictly below
//! `eps_n`, `x_n` itself included. Including the center makes `tau` equal to
//! Kraskov's `n_x + 1` and keeps every digamma argument at least 1.
//!
//! Estimates are in nats and are not clamped; small negative values are
//! normal for independent variables.
//!
//! The final digamma average is accumulated through a histogram of the
//! integer counts, summed in ascending count order. This makes the result
//! bit-identical under any reordering of the samples, under swapping X and
//! Y, and under any thread schedule.

use crate::neighbors::{by_distance_then_index, Norm, PointSet};
use crate::{par, Error, Matrix, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::{LN_2, PI};

/// Per-sample loops below this size run sequentially.
const PAR_MIN_SAMPLES: usize = 256;

/// Digamma `psi(t) = Gamma'(t) / Gamma(t)` for `t > 0`.
///
/// Shifts the argument upward with `psi(t) = psi(t + 1) - 1/t` until it is at
/// least 6, then applies the asymptotic expansion. Absolute error is below
/// 1e-12 for `t >= 1e-3`.
pub fn digamma(t: f64) -> Result<f64> {
    if !t.is_finite() || t <= 0.0 {
        return Err(Error::invalid(format!(
            "digamma needs a positive finite argument, got {t}"
        )));
    }
    Ok(psi(t))
}

pub(crate) fn psi(mut x: f64) -> f64 {
    let mut shift = 0.0;
    while x < 6.0 {
        shift += 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // Bernoulli terms B_2k / (2k x^2k), k = 1..7
    let series = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2
                        * (1.0 / 252.0
                            - inv2
                                * (1.0 / 240.0
                                    - inv2
                                        * (1.0 / 132.0
                                            - inv2 * (691.0 / 32760.0 - inv2 / 12.0))))));
    x.ln() - 0.5 * inv - series - shift
}

/// `ln Gamma(D/2 + 1)` for a positive integer D, by exact recurrence.
fn ln_gamma_half_dim_plus_one(dim: usize) -> f64 {
    if dim.is_multiple_of(2) {
        (1..=dim / 2).map(|i| (i as f64).ln()).sum()
    } else {
        // Gamma(m + 1/2) = sqrt(pi) * prod_{i<m} (i + 1/2), m = (D + 1) / 2
        let m = dim.div_ceil(2);
        0.5 * PI.ln() + (0..m).map(|i| (i as f64 + 0.5).ln()).sum::<f64>()
    }
}

/// Log-volume of the Euclidean ball of unit radius in `dim` dimensions.
pub fn ln_unit_ball_volume(dim: usize) -> f64 {
    0.5 * dim as f64 * PI.ln() - ln_gamma_half_dim_plus_one(dim)
}

/// Kozachenko-Leonenko differential entropy (nats) of the rows of `points`.
pub fn entropy_kl(points: &Matrix, k: usize) -> Result<f64> {
    let n = points.rows();
    if k == 0 || k >= n {
        return Err(Error::KOutOfRange {
            k,
            max: n.saturating_sub(1),
        });
    }
    let dim = points.cols();
    let ps = PointSet::new(points, Norm::Euclidean);
    let dists = par::try_map_range(n, |i| ps.kth_neighbor(i, k).map(|r| r.kth_distance))?;
    if let Some(index) = dists.iter().position(|&d| d == 0.0) {
        return Err(Error::DuplicatePoints { index });
    }
    let sum_ln: f64 = dists.iter().map(|d| (2.0 * d).ln()).sum();
    let ln_c = ln_unit_ball_volume(dim) - dim as f64 * LN_2;
    Ok(-psi(k as f64) + psi(n as f64) + ln_c + dim as f64 * sum_ln / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub k: usize,
    /// Norm inside the X space and inside the Y space. The joint space always
    /// combines the two with a maximum.
    pub within_space_norm: Norm,
}

impl EstimatorConfig {
    pub fn new(k: usize) -> Self {
        EstimatorConfig {
            k,
            within_space_norm: Norm::Euclidean,
        }
    }

    pub fn with_norm(mut self, norm: Norm) -> Self {
        self.within_space_norm = norm;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiEstimate {
    /// Estimate in nats.
    pub value: f64,
    pub k: usize,
    pub n: usize,
}

impl MiEstimate {
    pub fn bits(&self) -> f64 {
        self.value / LN_2
    }
}

fn check_pair(x: &Matrix, y: &Matrix) -> Result<usize> {
    let n = x.rows();
    if y.rows() != n {
        return Err(Error::invalid(format!(
            "x has {n} samples but y has {}",
            y.rows()
        )));
    }
    Ok(n)
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if k == 0 || k + 1 > n {
        return Err(Error::KOutOfRange {
            k,
            max: n.saturating_sub(1),
        });
    }
    Ok(())
}

/// `psi(K) + psi(N) - (1/N) sum_t hist[t] psi(t)`, summed in ascending `t`.
fn kraskov_value(k: usize, n: usize, hist: &[u32]) -> f64 {
    let total: f64 = hist
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, &c)| c > 0)
        .map(|(t, &c)| c as f64 * psi(t as f64))
        .sum();
    psi(k as f64) + psi(n as f64) - total / n as f64
}

/// Kraskov mutual information between the rows of `x` and `y`.
pub fn mi_knn(x: &Matrix, y: &Matrix, config: &EstimatorConfig) -> Result<MiEstimate> {
    let n = check_pair(x, y)?;
    let k = config.k;
    check_k(k, n)?;
    let norm = config.within_space_norm;

    let counts = par::map_range_min(n, PAR_MIN_SAMPLES, |i| -> Result<(u32, u32)> {
        let (xi, yi) = (x.row(i), y.row(i));
        let mut dx = Vec::with_capacity(n - 1);
        let mut dy = Vec::with_capacity(n - 1);
        let mut dz = Vec::with_capacity(n - 1);
        for m in (0..n).filter(|&m| m != i) {
            let a = norm.distance(xi, x.row(m));
            let b = norm.distance(yi, y.row(m));
            dx.push(a);
            dy.push(b);
            dz.push(a.max(b));
        }
        let (_, eps, _) = dz.select_nth_unstable_by(k - 1, |a, b| a.total_cmp(b));
        let eps = *eps;
        if eps == 0.0 {
            return Err(Error::DuplicatePoints { index: i });
        }
        let tx = 1 + dx.iter().filter(|&&d| d < eps).count() as u32;
        let ty = 1 + dy.iter().filter(|&&d| d < eps).count() as u32;
        Ok((tx, ty))
    });

    let mut hist = vec![0u32; n + 1];
    for c in counts {
        let (tx, ty) = c?;
        hist[tx as usize] += 1;
        hist[ty as usize] += 1;
    }
    Ok(MiEstimate {
        value: kraskov_value(k, n, &hist),
        k,
        n,
    })
}

/// [`mi_knn`] for several K at once, sharing the distance computations.
///
/// Each returned estimate is bit-identical to calling [`mi_knn`] with that K.
pub fn mi_knn_multi_k(x: &Matrix, y: &Matrix, ks: &[usize], norm: Norm) -> Result<Vec<MiEstimate>> {
    let n = check_pair(x, y)?;
    for &k in ks {
        check_k(k, n)?;
    }
    let per_sample = par::map_range_min(n, PAR_MIN_SAMPLES, |i| -> Result<Vec<(u32, u32)>> {
        let (xi, yi) = (x.row(i), y.row(i));
        let mut dx = Vec::with_capacity(n - 1);
        let mut dy = Vec::with_capacity(n - 1);
        let mut dz = Vec::with_capacity(n - 1);
        for m in (0..n).filter(|&m| m != i) {
            let a = norm.distance(xi, x.row(m));
            let b = norm.distance(yi, y.row(m));
            dx.push(a);
            dy.push(b);
            dz.push(a.max(b));
        }
        dx.sort_unstable_by(f64::total_cmp);
        dy.sort_unstable_by(f64::total_cmp);
        dz.sort_unstable_by(f64::total_cmp);
        ks.iter()
            .map(|&k| {
                let eps = dz[k - 1];
                if eps == 0.0 {
                    return Err(Error::DuplicatePoints { index: i });
                }
                let tx = 1 + dx.partition_point(|&d| d < eps) as u32;
                let ty = 1 + dy.partition_point(|&d| d < eps) as u32;
                Ok((tx, ty))
            })
            .collect()
    });

    let mut hists = vec![vec![0u32; n + 1]; ks.len()];
    for counts in per_sample {
        for (hist, (tx, ty)) in hists.iter_mut().zip(counts?) {
            hist[tx as usize] += 1;
            hist[ty as usize] += 1;
        }
    }
    Ok(ks
        .iter()
        .zip(&hists)
        .map(|(&k, hist)| MiEstimate {
            value: kraskov_value(k, n, hist),
            k,
            n,
        })
        .collect())
}

/// Reference implementation of [`mi_knn`] written directly against the
/// neighbor queries. Quadratic per sample; intended for cross-checking.
pub fn mi_knn_reference(x: &Matrix, y: &Matrix, config: &EstimatorConfig) -> Result<MiEstimate> {
    let n = check_pair(x, y)?;
    let k = config.k;
    check_k(k, n)?;
    let (px, py) = (
        PointSet::new(x, config.within_space_norm),
        PointSet::new(y, config.within_space_norm),
    );
    let mut hist = vec![0u32; n + 1];
    for i in 0..n {
        let mut joint: Vec<(f64, usize)> = (0..n)
            .filter(|&m| m != i)
            .map(|m| (px.distance(i, m).max(py.distance(i, m)), m))
            .collect();
        joint.sort_by(by_distance_then_index);
        let eps = joint[k - 1].0;
        if eps == 0.0 {
            return Err(Error::DuplicatePoints { index: i });
        }
        hist[px.count_strictly_within(i, eps)?] += 1;
        hist[py.count_strictly_within(i, eps)?] += 1;
    }
    Ok(MiEstimate {
        value: kraskov_value(k, n, &hist),
        k,
        n,
    })
}
