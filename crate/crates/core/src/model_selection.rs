//! Resampling procedures around the MI estimator: the t statistic, the
//! cross-validation/permutation choice of K, and the permutation p-value used
//! to stop greedy selection.
//!
//! All random objects (fold partition, permutations) are drawn from the seed
//! before any parallel work starts, so reports are identical for every
//! thread count.

use crate::dataset::{make_cv_partition, make_permutation, mean_std, Dataset, Permutation};
use crate::estimators::{mi_knn, mi_knn_multi_k, EstimatorConfig};
use crate::neighbors::Norm;
use crate::tvalue::TValue;
use crate::{par, rng, Error, Matrix, Result};
use serde::{Deserialize, Serialize};

/// Default number of permutations in the stopping test.
pub const DEFAULT_PERMUTATIONS: usize = 100;
/// Default significance threshold for the stopping test.
pub const DEFAULT_ALPHA: f64 = 0.05;

/// `(mean_a - mean_b) / sqrt(var_a + var_b)` with sample variances.
///
/// When both variances vanish the result is 0 for equal means and a signed
/// infinity otherwise (maximal significance).
pub fn t_statistic(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::invalid(
            "t statistic needs at least two values per sample",
        ));
    }
    let (ma, sa) = mean_std(a);
    let (mb, sb) = mean_std(b);
    Ok(t_from_moments(ma, sa, mb, sb))
}

fn t_from_moments(ma: f64, sa: f64, mb: f64, sb: f64) -> f64 {
    let diff = ma - mb;
    let denom = (sa * sa + sb * sb).sqrt();
    if denom > 0.0 {
        diff / denom
    } else if diff == 0.0 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    }
}

/// How per-feature t curves are combined into one score per K.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    #[default]
    Max,
    Mean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureTCurve {
    pub feature: usize,
    pub name: String,
    /// One entry per K of the grid.
    pub t: Vec<TValue>,
    pub mean_true: Vec<f64>,
    pub sd_true: Vec<f64>,
    pub mean_permuted: Vec<f64>,
    pub sd_permuted: Vec<f64>,
}

impl FeatureTCurve {
    /// The K maximising this feature's t, ties to the smallest K.
    pub fn best_k(&self, grid: &[usize]) -> usize {
        grid[argmax_first(&self.t)]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSelectionReport {
    pub k_grid: Vec<usize>,
    pub folds: usize,
    pub seed: u64,
    pub aggregation: Aggregation,
    pub per_feature: Vec<FeatureTCurve>,
    /// Aggregated score per K.
    pub aggregate: Vec<TValue>,
    pub chosen_k: usize,
}

impl KSelectionReport {
    pub fn curve(&self, feature: usize) -> Option<&FeatureTCurve> {
        self.per_feature.iter().find(|c| c.feature == feature)
    }
}

fn argmax_first(v: &[TValue]) -> usize {
    let mut best = 0;
    for (i, t) in v.iter().enumerate().skip(1) {
        if t.0 > v[best].0 {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChooseKOptions {
    pub aggregation: Aggregation,
    pub norm: Norm,
}

impl Default for ChooseKOptions {
    fn default() -> Self {
        ChooseKOptions {
            aggregation: Aggregation::Max,
            norm: Norm::Euclidean,
        }
    }
}

/// Largest K usable on every leave-one-fold-out subset of `n` samples.
pub fn max_k_for_folds(n: usize, folds: usize) -> usize {
    (n - n.div_ceil(folds.max(1))).saturating_sub(1)
}

/// Picks the estimator's K by contrasting leave-one-fold-out estimates of
/// MI(X_j, Y) with estimates of MI(X_j, pi(Y)) for one random permutation pi.
///
/// One partition and one permutation are drawn for the whole grid. For every
/// K and candidate feature the t statistic between the two sets of fold
/// estimates is computed; the per-K scores are aggregated across features and
/// the chosen K maximises the aggregate, ties going to the smallest K.
pub fn choose_k(
    d: &Dataset,
    candidate_features: &[usize],
    k_min: usize,
    k_max: usize,
    folds: usize,
    seed: u64,
    options: ChooseKOptions,
) -> Result<KSelectionReport> {
    if candidate_features.is_empty() {
        return Err(Error::invalid("no candidate features for choosing K"));
    }
    for &j in candidate_features {
        d.check_feature(j)?;
    }
    if k_min == 0 || k_min > k_max {
        return Err(Error::invalid(format!("empty K grid {k_min}..={k_max}")));
    }
    let n = d.n_samples();
    let partition = make_cv_partition(n, folds, seed)?;
    let bound = max_k_for_folds(n, folds);
    if k_max > bound {
        return Err(Error::KOutOfRange {
            k: k_max,
            max: bound,
        });
    }
    let permutation = make_permutation(n, seed)?;
    let grid: Vec<usize> = (k_min..=k_max).collect();

    let y = d.target();
    let y_perm = permutation.apply(y);
    let training: Vec<Vec<usize>> = (0..folds).map(|s| partition.training_indices(s)).collect();

    // (feature, fold) tasks -> (true estimates, permuted estimates) per K
    let tasks = candidate_features.len() * folds;
    let results = par::try_map_range(tasks, |task| -> Result<(Vec<f64>, Vec<f64>)> {
        let (fi, s) = (task / folds, task % folds);
        let j = candidate_features[fi];
        let rows = &training[s];
        let pick = |v: &[f64]| rows.iter().map(|&i| v[i]).collect::<Vec<f64>>();
        let x = Matrix::column_vector(&pick(d.feature(j)))?;
        let yt = Matrix::column_vector(&pick(y))?;
        let yp = Matrix::column_vector(&pick(&y_perm))?;
        let name = &d.feature_names()[j];
        let t = mi_knn_multi_k(&x, &yt, &grid, options.norm).map_err(|e| e.for_feature(name))?;
        let p = mi_knn_multi_k(&x, &yp, &grid, options.norm).map_err(|e| e.for_feature(name))?;
        Ok((
            t.into_iter().map(|m| m.value).collect(),
            p.into_iter().map(|m| m.value).collect(),
        ))
    })?;

    let per_feature: Vec<FeatureTCurve> = candidate_features
        .iter()
        .enumerate()
        .map(|(fi, &j)| {
            let mut curve = FeatureTCurve {
                feature: j,
                name: d.feature_names()[j].clone(),
                t: Vec::with_capacity(grid.len()),
                mean_true: Vec::with_capacity(grid.len()),
                sd_true: Vec::with_capacity(grid.len()),
                mean_permuted: Vec::with_capacity(grid.len()),
                sd_permuted: Vec::with_capacity(grid.len()),
            };
            for ki in 0..grid.len() {
                let fold_vals = |perm: bool| -> Vec<f64> {
                    (0..folds)
                        .map(|s| {
                            let (t, p) = &results[fi * folds + s];
                            if perm {
                                p[ki]
                            } else {
                                t[ki]
                            }
                        })
                        .collect()
                };
                let (mt, st) = mean_std(&fold_vals(false));
                let (mp, sp) = mean_std(&fold_vals(true));
                curve.t.push(TValue(t_from_moments(mt, st, mp, sp)));
                curve.mean_true.push(mt);
                curve.sd_true.push(st);
                curve.mean_permuted.push(mp);
                curve.sd_permuted.push(sp);
            }
            curve
        })
        .collect();

    let aggregate: Vec<TValue> = (0..grid.len())
        .map(|ki| {
            let vals = per_feature.iter().map(|c| c.t[ki].0);
            TValue(match options.aggregation {
                Aggregation::Max => vals.fold(f64::NEG_INFINITY, f64::max),
                Aggregation::Mean => vals.sum::<f64>() / per_feature.len() as f64,
            })
        })
        .collect();
    let chosen_k = grid[argmax_first(&aggregate)];

    Ok(KSelectionReport {
        k_grid: grid,
        folds,
        seed,
        aggregation: options.aggregation,
        per_feature,
        aggregate,
        chosen_k,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationTestResult {
    pub candidate: usize,
    pub selected: Vec<usize>,
    pub reference_mi: f64,
    pub permuted_mi: Vec<f64>,
    pub p_value: f64,
    pub seed: u64,
}

/// Fraction of permuted values at or above the reference.
pub fn permutation_p_value(reference: f64, permuted: &[f64]) -> f64 {
    let hits = permuted.iter().filter(|&&v| v >= reference).count();
    hits as f64 / permuted.len() as f64
}

/// Column matrix for a feature subset, columns in ascending index order so the
/// estimate does not depend on the order the subset was assembled in.
pub(crate) fn subset_matrix(d: &Dataset, subset: &[usize]) -> Result<Matrix> {
    let mut cols = subset.to_vec();
    cols.sort_unstable();
    if cols.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::invalid("feature subset has duplicates"));
    }
    d.feature_matrix(&cols)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopTestOptions {
    pub norm: Norm,
    /// Replace the single estimates with means over this many
    /// leave-one-fold-out estimates.
    pub cv_folds: Option<usize>,
}

impl Default for StopTestOptions {
    fn default() -> Self {
        StopTestOptions {
            norm: Norm::Euclidean,
            cv_folds: None,
        }
    }
}

/// p-value for "the candidate adds nothing to `selected`": the fraction of
/// `permutations` random reorderings of the candidate column whose
/// MI(selected + permuted candidate, Y) reaches the unpermuted reference.
pub fn permutation_stop_test(
    d: &Dataset,
    selected: &[usize],
    candidate: usize,
    k: usize,
    permutations: usize,
    seed: u64,
    options: StopTestOptions,
) -> Result<PermutationTestResult> {
    d.check_feature(candidate)?;
    for &j in selected {
        d.check_feature(j)?;
    }
    if selected.contains(&candidate) {
        return Err(Error::invalid(format!(
            "candidate {candidate} is already selected"
        )));
    }
    if permutations == 0 {
        return Err(Error::invalid("need at least one permutation"));
    }
    let n = d.n_samples();
    let mut subset = selected.to_vec();
    subset.push(candidate);
    let cfg = EstimatorConfig::new(k).with_norm(options.norm);
    let name = &d.feature_names()[candidate];

    let folds = match options.cv_folds {
        Some(s) => Some(make_cv_partition(n, s, seed)?),
        None => None,
    };
    let estimate = |data: &Dataset| -> Result<f64> {
        let x = subset_matrix(data, &subset)?;
        let y = data.target_matrix();
        match &folds {
            None => Ok(mi_knn(&x, &y, &cfg)?.value),
            Some(part) => {
                let mut total = 0.0;
                for s in 0..part.folds {
                    let rows = part.training_indices(s);
                    total += mi_knn(&x.select_rows(&rows), &y.select_rows(&rows), &cfg)?.value;
                }
                Ok(total / part.folds as f64)
            }
        }
    };

    let reference_mi = estimate(d).map_err(|e| e.for_feature(name))?;
    let perms: Vec<Permutation> = (0..permutations)
        .map(|p| make_permutation(n, rng::derive_seed(seed, p as u64)))
        .collect::<Result<_>>()?;
    let permuted_mi = par::try_map_range(permutations, |p| {
        let shuffled = d.with_permuted_feature(candidate, &perms[p])?;
        estimate(&shuffled)
    })
    .map_err(|e| e.for_feature(name))?;
    let p_value = permutation_p_value(reference_mi, &permuted_mi);

    Ok(PermutationTestResult {
        candidate,
        selected: selected.to_vec(),
        reference_mi,
        permuted_mi,
        p_value,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::generate_friedman;

    #[test]
    fn t_statistic_hand_values() {
        let t = t_statistic(&[1.0, 1.0, 3.0, 3.0], &[0.0, 0.0, 2.0, 2.0]).unwrap();
        // means 2 and 1, sample variances 4/3 each
        let expect = 1.0 / (8.0f64 / 3.0).sqrt();
        assert!((t - expect).abs() < 1e-15);
        assert!((t - 0.6124).abs() < 1e-4);
        let a = [0.3, 1.7, -2.0];
        assert_eq!(t_statistic(&a, &a).unwrap(), 0.0);
        assert_eq!(
            t_statistic(&[5.0, 5.0], &[1.0, 1.0]).unwrap(),
            f64::INFINITY
        );
        assert_eq!(
            t_statistic(&[1.0, 1.0], &[5.0, 5.0]).unwrap(),
            f64::NEG_INFINITY
        );
        assert_eq!(t_statistic(&[2.0, 2.0], &[2.0, 2.0]).unwrap(), 0.0);
        assert!(t_statistic(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn k_bound_for_folds() {
        assert_eq!(max_k_for_folds(100, 20), 94);
        assert_eq!(max_k_for_folds(7, 3), 3);
    }

    #[test]
    fn choose_k_validation() {
        let d = generate_friedman(40, 1).unwrap();
        let opts = ChooseKOptions::default();
        assert!(choose_k(&d, &[], 2, 5, 4, 0, opts).is_err());
        assert!(choose_k(&d, &[0], 6, 5, 4, 0, opts).is_err());
        assert!(choose_k(&d, &[0], 0, 5, 4, 0, opts).is_err());
        assert!(choose_k(&d, &[11], 2, 5, 4, 0, opts).is_err());
        match choose_k(&d, &[0], 2, 30, 4, 0, opts) {
            Err(Error::KOutOfRange { max, .. }) => assert_eq!(max, 29),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn choose_k_report_shape() {
        let d = generate_friedman(60, 2).unwrap().standardize().unwrap().0;
        let r = choose_k(&d, &[0, 3], 2, 8, 5, 11, ChooseKOptions::default()).unwrap();
        assert_eq!(r.k_grid, (2..=8).collect::<Vec<_>>());
        assert_eq!(r.per_feature.len(), 2);
        assert!(r.per_feature.iter().all(|c| c.t.len() == 7));
        assert!(r.k_grid.contains(&r.chosen_k));
        let ki = r.k_grid.iter().position(|&k| k == r.chosen_k).unwrap();
        assert!(r.aggregate.iter().all(|t| t.0 <= r.aggregate[ki].0));
        for ki in 0..7 {
            let m = r.per_feature[0].t[ki].0.max(r.per_feature[1].t[ki].0);
            assert_eq!(r.aggregate[ki].0, m);
        }
    }

    #[test]
    fn stop_test_validation() {
        let d = generate_friedman(30, 1).unwrap();
        let o = StopTestOptions::default();
        assert!(permutation_stop_test(&d, &[1], 1, 3, 10, 0, o).is_err());
        assert!(permutation_stop_test(&d, &[1], 2, 3, 0, 0, o).is_err());
        assert!(permutation_stop_test(&d, &[1], 12, 3, 10, 0, o).is_err());
        assert!(permutation_stop_test(&d, &[1], 2, 40, 10, 0, o).is_err());
    }

    #[test]
    fn constant_candidate_gives_p_one() {
        let base = generate_friedman(50, 4).unwrap();
        let mut cols: Vec<Vec<f64>> = (0..3).map(|j| base.feature(j).to_vec()).collect();
        cols.push(vec![0.25; 50]);
        let names = vec!["a".into(), "b".into(), "c".into(), "flat".into()];
        let d = Dataset::new(names, cols, "y", base.target().to_vec()).unwrap();
        let r = permutation_stop_test(&d, &[0], 3, 4, 20, 9, StopTestOptions::default()).unwrap();
        assert_eq!(r.p_value, 1.0);
        assert!(r.permuted_mi.iter().all(|&v| v == r.reference_mi));
    }

    #[test]
    fn p_value_counts() {
        assert_eq!(permutation_p_value(1.0, &[0.1, 0.2, 0.3]), 0.0);
        assert_eq!(permutation_p_value(0.2, &[0.1, 0.2, 0.3, 0.0]), 0.5);
    }

    #[test]
    fn cv_variant_runs() {
        let d = generate_friedman(60, 8).unwrap().standardize().unwrap().0;
        let o = StopTestOptions {
            cv_folds: Some(5),
            ..Default::default()
        };
        let r = permutation_stop_test(&d, &[], 3, 5, 10, 2, o).unwrap();
        assert_eq!(r.permuted_mi.len(), 10);
        assert!(r.p_value <= 0.1);
    }
}
