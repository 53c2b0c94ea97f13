//! Supervised feature clustering.
//!
//! Two features are similar when they help predict Y in the same places. For
//! a feature X and each sample n, take the nearest neighbor m of n in the
//! standardized (X, Y) plane and count the samples strictly closer to n than
//! m along X alone: the local "false neighbors" of n. The similarity of two
//! features is the Pearson correlation of their count vectors.
//!
//! Clustering is agglomerative: the two most similar items are merged, a
//! representative original feature is elected for the merged cluster, and
//! the representative stands in for the cluster in later similarity
//! computations.

use crate::dataset::{mean_std, Dataset};
use crate::estimators::{mi_knn, EstimatorConfig};
use crate::{par, Error, Matrix, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FalseNeighborVector {
    pub feature: usize,
    pub counts: Vec<u32>,
}

fn zscore(v: &[f64]) -> Vec<f64> {
    let (mean, sd) = mean_std(v);
    let sd = if sd > 0.0 { sd } else { 1.0 };
    v.iter().map(|x| (x - mean) / sd).collect()
}

/// False-neighbor counts of feature `xi` with respect to the target `y`.
///
/// Both columns are standardized first. `counts[n]` is the number of samples
/// `j != n` with `|x_j - x_n| < |x_m - x_n|`, where `m` is the Euclidean
/// nearest neighbor of `n` in the (x, y) plane (ties to the lower index).
pub fn false_neighbor_counts(xi: &[f64], y: &[f64]) -> Result<Vec<u32>> {
    let n = xi.len();
    if y.len() != n {
        return Err(Error::invalid("feature and target lengths differ"));
    }
    if n < 3 {
        return Err(Error::TooFewSamples {
            needed: 3,
            found: n,
        });
    }
    let x = zscore(xi);
    let y = zscore(y);
    Ok(par::map_range_min(n, 512, |i| {
        let mut nn = usize::MAX;
        let mut best = f64::INFINITY;
        for j in (0..n).filter(|&j| j != i) {
            let (dx, dy) = (x[j] - x[i], y[j] - y[i]);
            let d2 = dx * dx + dy * dy;
            if d2 < best {
                best = d2;
                nn = j;
            }
        }
        let radius = (x[nn] - x[i]).abs();
        (0..n)
            .filter(|&j| j != i && (x[j] - x[i]).abs() < radius)
            .count() as u32
    }))
}

/// Pearson correlation with the degenerate cases pinned: two constant
/// vectors score 1 when equal and 0 otherwise; one constant vector scores 0.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    if a == b {
        let constant = a.windows(2).all(|w| w[0] == w[1]);
        return if constant || a.len() > 1 { 1.0 } else { 0.0 };
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (u, v) = (x - ma, y - mb);
        sab += u * v;
        saa += u * u;
        sbb += v * v;
    }
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0)
}

fn counts_similarity(a: &[u32], b: &[u32]) -> f64 {
    let fa: Vec<f64> = a.iter().map(|&c| c as f64).collect();
    let fb: Vec<f64> = b.iter().map(|&c| c as f64).collect();
    pearson(&fa, &fb)
}

/// Similarity of two features for predicting `y`.
pub fn similarity(xi: &[f64], xj: &[f64], y: &[f64]) -> Result<f64> {
    let a = false_neighbor_counts(xi, y)?;
    let b = false_neighbor_counts(xj, y)?;
    Ok(counts_similarity(&a, &b))
}

/// Symmetric M x M similarity matrix with a unit diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityMatrix {
    pub values: Vec<Vec<f64>>,
}

impl SimilarityMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i][j]
    }
}

/// Pairwise similarities of all features, each unordered pair computed once.
/// With `unsupervised` the target is ignored and plain column correlations
/// are used instead.
pub fn similarity_matrix(d: &Dataset, unsupervised: bool) -> Result<SimilarityMatrix> {
    let m = d.n_features();
    let items = initial_items(d, unsupervised)?;
    let pairs: Vec<(usize, usize)> = (0..m)
        .flat_map(|i| (i + 1..m).map(move |j| (i, j)))
        .collect();
    let sims = par::map_slice(&pairs, |&(i, j)| {
        items[i].similarity(&items[j], unsupervised)
    });
    let mut values = vec![vec![0.0; m]; m];
    for (i, row) in values.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for (&(i, j), s) in pairs.iter().zip(sims) {
        values[i][j] = s;
        values[j][i] = s;
    }
    Ok(SimilarityMatrix { values })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterStop {
    /// Merge until exactly this many clusters remain.
    TargetCount(usize),
    /// Merge while the best pair similarity is at least this value.
    MinSimilarity(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepresentativeRule {
    /// The member with the largest single-feature MI with the target.
    #[default]
    MaxMi,
    /// The average of the standardized member columns stands in for the
    /// cluster; the reported representative is the member most correlated
    /// with that average.
    MemberAverage,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterOptions {
    pub stop: ClusterStop,
    pub rule: RepresentativeRule,
    /// Neighbor count for the MI used in representative election.
    pub k: usize,
    /// Ignore the target and use raw column correlation as similarity.
    pub unsupervised: bool,
}

impl ClusterOptions {
    pub fn target_count(count: usize, k: usize) -> Self {
        ClusterOptions {
            stop: ClusterStop::TargetCount(count),
            rule: RepresentativeRule::MaxMi,
            k,
            unsupervised: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    /// Id of the new cluster. Original features have ids `0..M`, merged
    /// clusters get `M, M+1, ...` in merge order.
    pub id: usize,
    pub item_a: usize,
    pub item_b: usize,
    pub similarity: f64,
    pub representative: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub id: usize,
    pub members: Vec<usize>,
    pub representative: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDendrogram {
    pub merges: Vec<Merge>,
    pub clusters: Vec<Cluster>,
}

impl FeatureDendrogram {
    pub fn representatives(&self) -> Vec<usize> {
        self.clusters.iter().map(|c| c.representative).collect()
    }

    /// Cluster position of every original feature.
    pub fn labels(&self, n_features: usize) -> Vec<usize> {
        let mut labels = vec![usize::MAX; n_features];
        for (c, cluster) in self.clusters.iter().enumerate() {
            for &f in &cluster.members {
                labels[f] = c;
            }
        }
        labels
    }
}

type IdPair = (usize, usize);

struct Item {
    id: usize,
    members: Vec<usize>,
    representative: usize,
    column: Vec<f64>,
    counts: Vec<u32>,
}

impl Item {
    fn similarity(&self, other: &Item, unsupervised: bool) -> f64 {
        if unsupervised {
            pearson(&self.column, &other.column)
        } else {
            counts_similarity(&self.counts, &other.counts)
        }
    }
}

fn initial_items(d: &Dataset, unsupervised: bool) -> Result<Vec<Item>> {
    let y = d.target();
    par::try_map_range(d.n_features(), |j| {
        let column = zscore(d.feature(j));
        let counts = if unsupervised {
            Vec::new()
        } else {
            false_neighbor_counts(&column, y)?
        };
        Ok(Item {
            id: j,
            members: vec![j],
            representative: j,
            column,
            counts,
        })
    })
}

/// Agglomerative clustering of the features of `d`.
pub fn cluster_features(d: &Dataset, options: &ClusterOptions) -> Result<FeatureDendrogram> {
    let m = d.n_features();
    if m < 2 {
        return Err(Error::invalid("clustering needs at least two features"));
    }
    match options.stop {
        ClusterStop::TargetCount(c) if c == 0 || c > m => {
            return Err(Error::invalid(format!(
                "target cluster count must be between 1 and {m}, got {c}"
            )))
        }
        ClusterStop::MinSimilarity(t) if !t.is_finite() => {
            return Err(Error::invalid("similarity threshold must be finite"))
        }
        _ => {}
    }
    let y = d.target();
    let unsup = options.unsupervised;

    let single_mi: Vec<f64> = match options.rule {
        RepresentativeRule::MaxMi => {
            let cfg = EstimatorConfig::new(options.k);
            let ym = d.target_matrix();
            par::try_map_range(m, |j| {
                let x = Matrix::column_vector(d.feature(j))?;
                mi_knn(&x, &ym, &cfg)
                    .map(|e| e.value)
                    .map_err(|e| e.for_feature(&d.feature_names()[j]))
            })?
        }
        RepresentativeRule::MemberAverage => Vec::new(),
    };

    let mut items = initial_items(d, unsup)?;
    // sims[a][b] for active positions a < b
    let mut sims: Vec<Vec<f64>> = vec![vec![f64::NAN; m]; m];
    let pairs: Vec<(usize, usize)> = (0..m)
        .flat_map(|i| (i + 1..m).map(move |j| (i, j)))
        .collect();
    let values = par::map_slice(&pairs, |&(i, j)| items[i].similarity(&items[j], unsup));
    for (&(i, j), s) in pairs.iter().zip(values) {
        sims[i][j] = s;
        sims[j][i] = s;
    }

    let mut merges = Vec::new();
    let mut next_id = m;
    loop {
        if items.len() < 2 {
            break;
        }
        if let ClusterStop::TargetCount(c) = options.stop {
            if items.len() <= c {
                break;
            }
        }
        // best pair; ties go to the lexicographically smallest id pair
        let mut best: Option<(f64, IdPair, (usize, usize))> = None;
        for a in 0..items.len() {
            for b in a + 1..items.len() {
                let s = sims[a][b];
                let ids = ordered(items[a].id, items[b].id);
                let better = match best {
                    None => true,
                    Some((bs, bids, _)) => s > bs || (s == bs && ids < bids),
                };
                if better {
                    best = Some((s, ids, (a, b)));
                }
            }
        }
        let (s, (id_a, id_b), (a, b)) = best.expect("at least one pair");
        if let ClusterStop::MinSimilarity(t) = options.stop {
            if s < t {
                break;
            }
        }

        let item_b = items.remove(b);
        let item_a = items.remove(a);
        let mut members: Vec<usize> = item_a
            .members
            .iter()
            .chain(&item_b.members)
            .copied()
            .collect();
        members.sort_unstable();
        let merged = match options.rule {
            RepresentativeRule::MaxMi => {
                let mut rep = members[0];
                for &f in &members[1..] {
                    if single_mi[f] > single_mi[rep] {
                        rep = f;
                    }
                }
                let from = if item_a.members.contains(&rep) {
                    &item_a
                } else {
                    &item_b
                };
                let (column, counts) = if from.representative == rep {
                    (from.column.clone(), from.counts.clone())
                } else {
                    let column = zscore(d.feature(rep));
                    let counts = if unsup {
                        Vec::new()
                    } else {
                        false_neighbor_counts(&column, y)?
                    };
                    (column, counts)
                };
                Item {
                    id: next_id,
                    members,
                    representative: rep,
                    column,
                    counts,
                }
            }
            RepresentativeRule::MemberAverage => {
                let cols: Vec<Vec<f64>> = members.iter().map(|&f| zscore(d.feature(f))).collect();
                let n = y.len();
                let avg: Vec<f64> = (0..n)
                    .map(|i| cols.iter().map(|c| c[i]).sum::<f64>() / cols.len() as f64)
                    .collect();
                let mut rep = 0;
                let corr: Vec<f64> = cols.iter().map(|c| pearson(c, &avg)).collect();
                for (r, &c) in corr.iter().enumerate().skip(1) {
                    if c > corr[rep] {
                        rep = r;
                    }
                }
                let counts = if unsup {
                    Vec::new()
                } else {
                    false_neighbor_counts(&avg, y)?
                };
                Item {
                    id: next_id,
                    members: members.clone(),
                    representative: members[rep],
                    column: avg,
                    counts,
                }
            }
        };
        merges.push(Merge {
            id: next_id,
            item_a: id_a,
            item_b: id_b,
            similarity: s,
            representative: merged.representative,
        });
        next_id += 1;

        // drop rows/cols a and b, append the new item
        for row in sims.iter_mut() {
            row.remove(b);
            row.remove(a);
        }
        sims.remove(b);
        sims.remove(a);
        let fresh = par::map_slice(&items, |other| merged.similarity(other, unsup));
        for (row, &s) in sims.iter_mut().zip(&fresh) {
            row.push(s);
        }
        let mut last = fresh;
        last.push(1.0);
        sims.push(last);
        items.push(merged);
    }

    let mut clusters: Vec<Cluster> = items
        .into_iter()
        .map(|it| Cluster {
            id: it.id,
            members: it.members,
            representative: it.representative,
        })
        .collect();
    clusters.sort_by_key(|c| c.members[0]);
    Ok(FeatureDendrogram { merges, clusters })
}

fn ordered(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}
