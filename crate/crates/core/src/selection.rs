//! Greedy forward and forward-backward feature selection.
//!
//! Each forward step scores MI(selected + X_j, Y) for every unselected j and
//! takes the best candidate (lowest index on ties). The winner is admitted only
//! if the permutation test finds its contribution significant. The search
//! never stops merely because an estimate went down: estimates in spaces of
//! different dimension are not comparable, and the true MI can only grow as
//! features are added. The old stop-at-first-decrease rule is available as
//! [`StopRule::FirstDecrease`] for comparison only.
//!
//! The forward-backward variant additionally tries, after every admission
//! with at least three features selected, to drop one earlier feature when
//! that strictly raises the estimate. No feature set is ever visited twice,
//! which bounds the number of steps.

use crate::dataset::Dataset;
use crate::estimators::{mi_knn, EstimatorConfig};
use crate::model_selection::{
    permutation_stop_test, subset_matrix, StopTestOptions, DEFAULT_ALPHA, DEFAULT_PERMUTATIONS,
};
use crate::neighbors::Norm;
use crate::{par, rng, Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Add,
    Remove,
    Stop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepReason {
    Significant,
    NotSignificant,
    MiIncreasedOnRemoval,
    CandidatesExhausted,
    MaxSizeReached,
    /// Legacy rule: the best augmented set scored below the current set.
    MiDecreased,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionStep {
    pub action: Action,
    pub feature: Option<usize>,
    /// Estimate for the selected set after the action.
    pub mi_value: Option<f64>,
    /// Permutation p-value of the tested candidate.
    pub p_value: Option<f64>,
    pub reason: StepReason,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopRule {
    /// Admit a candidate only when its permutation p-value is at most alpha.
    #[default]
    Permutation,
    /// Stop as soon as the best augmented estimate falls below the current one.
    FirstDecrease,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Forward,
    ForwardBackward,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub k: usize,
    pub alpha: f64,
    pub permutations: usize,
    /// Cap on the number of selected features; `None` means all of them.
    pub max_size: Option<usize>,
    pub seed: u64,
    pub norm: Norm,
    pub stop_rule: StopRule,
    /// Use means of leave-one-fold-out estimates inside the stopping test.
    pub cv_folds: Option<usize>,
}

impl SelectionConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        SelectionConfig {
            k,
            alpha: DEFAULT_ALPHA,
            permutations: DEFAULT_PERMUTATIONS,
            max_size: None,
            seed,
            norm: Norm::Euclidean,
            stop_rule: StopRule::Permutation,
            cv_folds: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionTrace {
    pub method: Method,
    pub steps: Vec<SelectionStep>,
    pub final_set: Vec<usize>,
    pub config: SelectionConfig,
}

impl SelectionTrace {
    /// Applies the steps to the empty set.
    pub fn replay(&self) -> Vec<usize> {
        let mut set = Vec::new();
        for step in &self.steps {
            match (step.action, step.feature) {
                (Action::Add, Some(j)) => set.push(j),
                (Action::Remove, Some(j)) => set.retain(|&f| f != j),
                _ => {}
            }
        }
        set
    }

    /// One line per step, e.g. `add x4  mi=0.4213  p=0`.
    pub fn step_log(&self, names: &[String]) -> String {
        let mut out = String::new();
        for (i, s) in self.steps.iter().enumerate() {
            let action = match s.action {
                Action::Add => "add",
                Action::Remove => "remove",
                Action::Stop => "stop",
            };
            let mut line = format!("{:>3} {action:<6}", i + 1);
            if let Some(j) = s.feature {
                line.push_str(&format!(" {}", names.get(j).map_or("?", String::as_str)));
            }
            if let Some(mi) = s.mi_value {
                line.push_str(&format!("  mi={mi:.6}"));
            }
            if let Some(p) = s.p_value {
                line.push_str(&format!("  p={p}"));
            }
            line.push_str(&format!("  ({:?})\n", s.reason));
            out.push_str(&line);
        }
        out
    }
}

/// MI between the columns `subset` of `d` and the target.
pub fn evaluate_subset(d: &Dataset, subset: &[usize], config: &EstimatorConfig) -> Result<f64> {
    let x = subset_matrix(d, subset)?;
    Ok(mi_knn(&x, &d.target_matrix(), config)?.value)
}

fn sorted_with(set: &[usize], extra: Option<usize>, without: Option<usize>) -> Vec<usize> {
    let mut v: Vec<usize> = set
        .iter()
        .copied()
        .filter(|&f| Some(f) != without)
        .collect();
    v.extend(extra);
    v.sort_unstable();
    v
}

/// Index of the first maximum.
fn best_of(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

pub fn forward_select(d: &Dataset, config: &SelectionConfig) -> Result<SelectionTrace> {
    greedy(d, config, Method::Forward)
}

pub fn forward_backward_select(d: &Dataset, config: &SelectionConfig) -> Result<SelectionTrace> {
    greedy(d, config, Method::ForwardBackward)
}

fn greedy(d: &Dataset, config: &SelectionConfig, method: Method) -> Result<SelectionTrace> {
    let m = d.n_features();
    let max_size = config.max_size.unwrap_or(m);
    if max_size == 0 || max_size > m {
        return Err(Error::invalid(format!(
            "max size must be between 1 and {m}, got {max_size}"
        )));
    }
    if !(0.0..=1.0).contains(&config.alpha) {
        return Err(Error::invalid(format!(
            "alpha must lie in [0, 1], got {}",
            config.alpha
        )));
    }
    let est = EstimatorConfig::new(config.k).with_norm(config.norm);
    let test_opts = StopTestOptions {
        norm: config.norm,
        cv_folds: config.cv_folds,
    };
    let names = d.feature_names();

    let mut selected: Vec<usize> = Vec::new();
    let mut current_mi: Option<f64> = None;
    let mut visited: BTreeSet<Vec<usize>> = BTreeSet::new();
    visited.insert(Vec::new());
    let mut steps = Vec::new();
    let mut round = 0u64;

    let stop = |reason, mi, p| SelectionStep {
        action: Action::Stop,
        feature: None,
        mi_value: mi,
        p_value: p,
        reason,
    };

    loop {
        if selected.len() >= max_size {
            steps.push(stop(StepReason::MaxSizeReached, current_mi, None));
            break;
        }
        let candidates: Vec<usize> = (0..m)
            .filter(|j| !selected.contains(j))
            .filter(|&j| !visited.contains(&sorted_with(&selected, Some(j), None)))
            .collect();
        if candidates.is_empty() {
            steps.push(stop(StepReason::CandidatesExhausted, current_mi, None));
            break;
        }
        let scores = par::try_map_range(candidates.len(), |c| {
            let j = candidates[c];
            evaluate_subset(d, &sorted_with(&selected, Some(j), None), &est)
                .map_err(|e| e.for_feature(&names[j]))
        })?;
        let w = best_of(&scores);
        let (winner, winner_mi) = (candidates[w], scores[w]);

        let p_value = match config.stop_rule {
            StopRule::Permutation => {
                let test = permutation_stop_test(
                    d,
                    &selected,
                    winner,
                    config.k,
                    config.permutations,
                    rng::derive_seed(config.seed, round),
                    test_opts,
                )?;
                if test.p_value > config.alpha {
                    steps.push(stop(
                        StepReason::NotSignificant,
                        current_mi,
                        Some(test.p_value),
                    ));
                    break;
                }
                Some(test.p_value)
            }
            StopRule::FirstDecrease => {
                if current_mi.is_some_and(|mi| winner_mi < mi) {
                    steps.push(stop(StepReason::MiDecreased, current_mi, None));
                    break;
                }
                None
            }
        };
        round += 1;
        selected.push(winner);
        visited.insert(sorted_with(&selected, None, None));
        current_mi = Some(winner_mi);
        steps.push(SelectionStep {
            action: Action::Add,
            feature: Some(winner),
            mi_value: current_mi,
            p_value,
            reason: StepReason::Significant,
        });

        if method == Method::ForwardBackward && selected.len() >= 3 {
            let removable: Vec<usize> = selected
                .iter()
                .copied()
                .filter(|&f| f != winner)
                .filter(|&f| !visited.contains(&sorted_with(&selected, None, Some(f))))
                .collect();
            if removable.is_empty() {
                continue;
            }
            let reduced = par::try_map_range(removable.len(), |r| {
                evaluate_subset(d, &sorted_with(&selected, None, Some(removable[r])), &est)
            })?;
            // lowest feature index among equal scores
            let mut order: Vec<usize> = (0..removable.len()).collect();
            order.sort_by_key(|&r| removable[r]);
            let ranked: Vec<f64> = order.iter().map(|&r| reduced[r]).collect();
            let b = order[best_of(&ranked)];
            if reduced[b] > winner_mi {
                let gone = removable[b];
                selected.retain(|&f| f != gone);
                visited.insert(sorted_with(&selected, None, None));
                current_mi = Some(reduced[b]);
                steps.push(SelectionStep {
                    action: Action::Remove,
                    feature: Some(gone),
                    mi_value: current_mi,
                    p_value: None,
                    reason: StepReason::MiIncreasedOnRemoval,
                });
            }
        }
    }

    Ok(SelectionTrace {
        method,
        steps,
        final_set: selected,
        config: config.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::generate_friedman;

    fn friedman(seed: u64) -> Dataset {
        generate_friedman(100, seed)
            .unwrap()
            .standardize()
            .unwrap()
            .0
    }

    #[test]
    fn max_size_one() {
        let d = friedman(1);
        let mut cfg = SelectionConfig::new(6, 3);
        cfg.max_size = Some(1);
        cfg.permutations = 30;
        let t = forward_select(&d, &cfg).unwrap();
        assert_eq!(t.steps.len(), 2);
        assert_eq!(t.steps[0].action, Action::Add);
        assert_eq!(t.steps[1].reason, StepReason::MaxSizeReached);
        assert_eq!(t.final_set.len(), 1);
    }

    #[test]
    fn bad_config() {
        let d = friedman(1);
        let mut cfg = SelectionConfig::new(6, 3);
        cfg.max_size = Some(11);
        assert!(forward_select(&d, &cfg).is_err());
        cfg.max_size = Some(0);
        assert!(forward_select(&d, &cfg).is_err());
        let mut cfg = SelectionConfig::new(200, 3);
        cfg.permutations = 5;
        match forward_select(&d, &cfg) {
            Err(Error::Feature { feature, .. }) => assert_eq!(feature, "x1"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn replay_and_no_duplicates() {
        let d = friedman(5);
        let mut cfg = SelectionConfig::new(8, 5);
        cfg.permutations = 40;
        for t in [
            forward_select(&d, &cfg).unwrap(),
            forward_backward_select(&d, &cfg).unwrap(),
        ] {
            assert_eq!(t.replay(), t.final_set);
            let set: BTreeSet<_> = t.final_set.iter().collect();
            assert_eq!(set.len(), t.final_set.len());
            assert_eq!(t.steps.last().unwrap().action, Action::Stop);
            assert!(t.steps.len() <= 2 * 10 * 10);
        }
    }

    #[test]
    fn evaluate_subset_is_projection() {
        let d = friedman(2);
        let cfg = EstimatorConfig::new(5);
        let direct = mi_knn(
            &crate::Matrix::column_vector(d.feature(3)).unwrap(),
            &d.target_matrix(),
            &cfg,
        )
        .unwrap()
        .value;
        assert_eq!(evaluate_subset(&d, &[3], &cfg).unwrap(), direct);
        assert_eq!(
            evaluate_subset(&d, &[3, 0], &cfg).unwrap(),
            evaluate_subset(&d, &[0, 3], &cfg).unwrap()
        );
        assert!(evaluate_subset(&d, &[], &cfg).is_err());
        assert!(evaluate_subset(&d, &[10], &cfg).is_err());
    }

    #[test]
    fn legacy_stop_has_no_p_values() {
        let d = friedman(3);
        let mut cfg = SelectionConfig::new(8, 1);
        cfg.stop_rule = StopRule::FirstDecrease;
        let t = forward_select(&d, &cfg).unwrap();
        assert!(t.steps.iter().all(|s| s.p_value.is_none()));
        assert!(!t.final_set.is_empty());
    }
}
