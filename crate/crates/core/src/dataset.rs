//! Tabular regression data: N samples of M named real features and a real
//! target.

use crate::{rng, Error, Matrix, Result};
use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

const STREAM_FRIEDMAN: u64 = 0x11;
const STREAM_PARTITION: u64 = 0x22;
const STREAM_PERMUTATION: u64 = 0x33;
const STREAM_JITTER: u64 = 0x44;

/// Relative magnitude of the optional tie-breaking jitter.
pub const JITTER_SCALE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    feature_names: Vec<String>,
    /// Column-major: `features[j][n]`.
    features: Vec<Vec<f64>>,
    target: Vec<f64>,
    target_name: String,
}

/// Which CSV column holds the target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TargetColumn {
    Name(String),
    /// 1-based column position.
    Index(usize),
    Last,
}

impl FromStr for TargetColumn {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => TargetColumn::Index(i),
            Err(_) => TargetColumn::Name(s.to_string()),
        })
    }
}

impl Dataset {
    pub fn new(
        feature_names: Vec<String>,
        features: Vec<Vec<f64>>,
        target_name: impl Into<String>,
        target: Vec<f64>,
    ) -> Result<Self> {
        let n = target.len();
        if features.is_empty() {
            return Err(Error::invalid("dataset needs at least one feature"));
        }
        if feature_names.len() != features.len() {
            return Err(Error::invalid(format!(
                "{} names for {} feature columns",
                feature_names.len(),
                features.len()
            )));
        }
        if n < 2 {
            return Err(Error::TooFewSamples {
                needed: 2,
                found: n,
            });
        }
        let mut seen = HashSet::new();
        for name in &feature_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::invalid(format!("duplicate feature name '{name}'")));
            }
        }
        for (j, col) in features.iter().enumerate() {
            if col.len() != n {
                return Err(Error::invalid(format!(
                    "feature '{}' has {} values, target has {n}",
                    feature_names[j],
                    col.len()
                )));
            }
            if let Some(i) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::Cell {
                    row: i + 1,
                    column: j + 1,
                    message: format!("non-finite value {}", col[i]),
                });
            }
        }
        if let Some(i) = target.iter().position(|v| !v.is_finite()) {
            return Err(Error::Cell {
                row: i + 1,
                column: features.len() + 1,
                message: format!("non-finite target {}", target[i]),
            });
        }
        Ok(Dataset {
            feature_names,
            features,
            target,
            target_name: target_name.into(),
        })
    }

    pub fn n_samples(&self) -> usize {
        self.target.len()
    }

    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn target_name(&self) -> &str {
        &self.target_name
    }

    pub fn feature(&self, j: usize) -> &[f64] {
        &self.features[j]
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    pub(crate) fn check_feature(&self, j: usize) -> Result<()> {
        if j >= self.n_features() {
            return Err(Error::FeatureIndex {
                index: j,
                count: self.n_features(),
            });
        }
        Ok(())
    }

    /// N x |subset| matrix of the chosen feature columns.
    pub fn feature_matrix(&self, subset: &[usize]) -> Result<Matrix> {
        if subset.is_empty() {
            return Err(Error::invalid("feature subset is empty"));
        }
        for &j in subset {
            self.check_feature(j)?;
        }
        let cols: Vec<&[f64]> = subset.iter().map(|&j| self.feature(j)).collect();
        Matrix::from_columns(&cols)
    }

    pub fn target_matrix(&self) -> Matrix {
        Matrix::column_vector(&self.target).expect("dataset invariants guarantee a valid target")
    }

    /// Sub-dataset restricted to `rows`, in that order.
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        let pick = |v: &[f64]| rows.iter().map(|&i| v[i]).collect::<Vec<_>>();
        Dataset {
            feature_names: self.feature_names.clone(),
            features: self.features.iter().map(|c| pick(c)).collect(),
            target: pick(&self.target),
            target_name: self.target_name.clone(),
        }
    }

    /// Copy with the target reordered by `perm`.
    pub fn with_permuted_target(&self, perm: &Permutation) -> Dataset {
        let mut d = self.clone();
        d.target = perm.apply(&self.target);
        d
    }

    /// Copy with one feature column reordered by `perm`.
    pub fn with_permuted_feature(&self, j: usize, perm: &Permutation) -> Result<Dataset> {
        self.check_feature(j)?;
        let mut d = self.clone();
        d.features[j] = perm.apply(&self.features[j]);
        Ok(d)
    }

    /// Copy with every feature and the target multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Dataset {
        let mut d = self.clone();
        d.features.iter_mut().flatten().for_each(|v| *v *= c);
        d.target.iter_mut().for_each(|v| *v *= c);
        d
    }

    /// Adds uniform noise of relative size [`JITTER_SCALE`] to every column,
    /// breaking ties between repeated values deterministically.
    pub fn jittered(&self, seed: u64) -> Dataset {
        let mut r = rng::stream(seed, STREAM_JITTER);
        let mut jitter = |col: &mut Vec<f64>| {
            let (_, sd) = mean_std(col);
            let scale = if sd > 0.0 {
                sd
            } else {
                col.iter().fold(1.0_f64, |a, v| a.max(v.abs()))
            };
            for v in col.iter_mut() {
                *v += JITTER_SCALE * scale * r.random_range(-1.0..1.0);
            }
        };
        let mut d = self.clone();
        d.features.iter_mut().for_each(&mut jitter);
        jitter(&mut d.target);
        d
    }

    pub fn load_csv(path: &Path, has_header: bool, target: &TargetColumn) -> Result<Dataset> {
        let file = std::fs::File::open(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::read_csv(file, has_header, target)
    }

    /// Parses comma-separated numeric data with an optional single header
    /// line. Header-less files get feature names `x1..xM`.
    pub fn read_csv<R: Read>(
        reader: R,
        has_header: bool,
        target: &TargetColumn,
    ) -> Result<Dataset> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut records = rdr.records();

        let header: Option<Vec<String>> = if has_header {
            match records.next() {
                Some(rec) => Some(
                    rec.map_err(|e| Error::Csv(e.to_string()))?
                        .iter()
                        .map(str::to_string)
                        .collect(),
                ),
                None => {
                    return Err(Error::TooFewSamples {
                        needed: 2,
                        found: 0,
                    })
                }
            }
        } else {
            None
        };

        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut width = header.as_ref().map(Vec::len);
        let first_data_line = if has_header { 2 } else { 1 };
        for (i, rec) in records.enumerate() {
            let line = first_data_line + i;
            let rec = rec.map_err(|e| Error::Csv(e.to_string()))?;
            if rec.len() == 1 && rec.get(0) == Some("") {
                continue;
            }
            let expected = *width.get_or_insert(rec.len());
            if rec.len() != expected {
                return Err(Error::RaggedRow {
                    row: line,
                    found: rec.len(),
                    expected,
                });
            }
            let mut row = Vec::with_capacity(expected);
            for (c, cell) in rec.iter().enumerate() {
                let v: f64 = cell.parse().map_err(|_| Error::Cell {
                    row: line,
                    column: c + 1,
                    message: format!("'{cell}' is not a number"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Cell {
                        row: line,
                        column: c + 1,
                        message: format!("'{cell}' is not a finite number"),
                    });
                }
                row.push(v);
            }
            rows.push(row);
        }

        let width = width.unwrap_or(0);
        if width < 2 {
            return Err(Error::invalid(
                "need at least one feature column and a target column",
            ));
        }
        let names: Vec<String> =
            header.unwrap_or_else(|| (1..=width).map(|j| format!("x{j}")).collect());
        let target_col = match target {
            TargetColumn::Index(i) if (1..=width).contains(i) => i - 1,
            TargetColumn::Index(i) => return Err(Error::MissingTarget(format!("#{i}"))),
            TargetColumn::Last => width - 1,
            TargetColumn::Name(name) => names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| Error::MissingTarget(format!("'{name}'")))?,
        };
        if rows.len() < 2 {
            return Err(Error::TooFewSamples {
                needed: 2,
                found: rows.len(),
            });
        }

        let mut feature_names = Vec::with_capacity(width - 1);
        let mut features = Vec::with_capacity(width - 1);
        for c in (0..width).filter(|&c| c != target_col) {
            feature_names.push(if has_header {
                names[c].clone()
            } else {
                format!("x{}", feature_names.len() + 1)
            });
            features.push(rows.iter().map(|r| r[c]).collect());
        }
        let target_name = if has_header {
            names[target_col].clone()
        } else {
            "y".to_string()
        };
        let target = rows.iter().map(|r| r[target_col]).collect();
        Dataset::new(feature_names, features, target_name, target)
    }

    /// Writes the dataset as CSV with a header line, features first and the
    /// target last. Values use the shortest representation that parses back
    /// to the same `f64`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let header: Vec<&str> = self
            .feature_names
            .iter()
            .map(String::as_str)
            .chain(std::iter::once(self.target_name.as_str()))
            .collect();
        writeln!(out, "{}", header.join(","))?;
        let mut line = String::new();
        for i in 0..self.n_samples() {
            line.clear();
            for col in &self.features {
                line.push_str(&format!("{:?},", col[i]));
            }
            line.push_str(&format!("{:?}", self.target[i]));
            writeln!(out, "{line}")?;
        }
        out.flush()
    }

    /// Centers every feature and the target to mean 0 and scales them to
    /// sample standard deviation 1 (divisor N - 1).
    pub fn standardize(&self) -> Result<(Dataset, Standardization)> {
        let scale = |name: &str, col: &[f64]| -> Result<(Vec<f64>, f64, f64)> {
            let (mean, sd) = mean_std(col);
            if sd.is_nan() || sd <= 0.0 {
                return Err(Error::ZeroVariance(name.to_string()));
            }
            Ok((col.iter().map(|v| (v - mean) / sd).collect(), mean, sd))
        };
        let mut features = Vec::with_capacity(self.n_features());
        let mut means = Vec::with_capacity(self.n_features());
        let mut stds = Vec::with_capacity(self.n_features());
        for (name, col) in self.feature_names.iter().zip(&self.features) {
            let (z, m, s) = scale(name, col)?;
            features.push(z);
            means.push(m);
            stds.push(s);
        }
        let (target, target_mean, target_std) = scale(&self.target_name, &self.target)?;
        Ok((
            Dataset {
                feature_names: self.feature_names.clone(),
                features,
                target,
                target_name: self.target_name.clone(),
            },
            Standardization {
                feature_means: means,
                feature_stds: stds,
                target_mean,
                target_std,
            },
        ))
    }
}

/// Sample mean and sample standard deviation (divisor N - 1).
pub(crate) fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = v.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Per-column affine maps applied by [`Dataset::standardize`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub feature_means: Vec<f64>,
    pub feature_stds: Vec<f64>,
    pub target_mean: f64,
    pub target_std: f64,
}

impl Standardization {
    /// Maps standardized data back to the original units.
    pub fn invert(&self, d: &Dataset) -> Dataset {
        let mut out = d.clone();
        for ((col, m), s) in out
            .features
            .iter_mut()
            .zip(&self.feature_means)
            .zip(&self.feature_stds)
        {
            col.iter_mut().for_each(|v| *v = *v * s + m);
        }
        out.target
            .iter_mut()
            .for_each(|v| *v = *v * self.target_std + self.target_mean);
        out
    }
}

/// Noise-free Friedman response `10 sin(x1 x2) + 20 (x3 - 0.5)^2 + 10 x4 + 5 x5`.
/// Only the first five entries of `x` are read.
pub fn friedman_response(x: &[f64]) -> f64 {
    10.0 * (x[0] * x[1]).sin() + 20.0 * (x[2] - 0.5).powi(2) + 10.0 * x[3] + 5.0 * x[4]
}

/// Ten i.i.d. U(0,1) features `x1..x10` and target
/// `y = friedman_response(x) + e`, `e ~ N(0, 1)`. Features `x6..x10` do not
/// enter the response.
pub fn generate_friedman(n: usize, seed: u64) -> Result<Dataset> {
    if n < 1 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    let mut r = rng::stream(seed, STREAM_FRIEDMAN);
    let mut features: Vec<Vec<f64>> = (0..10).map(|_| Vec::with_capacity(n)).collect();
    let mut target = Vec::with_capacity(n);
    let mut x = [0.0; 10];
    for _ in 0..n {
        for (j, v) in x.iter_mut().enumerate() {
            *v = r.random::<f64>();
            features[j].push(*v);
        }
        let noise: f64 = r.sample(StandardNormal);
        target.push(friedman_response(&x) + noise);
    }
    let names = (1..=10).map(|j| format!("x{j}")).collect();
    let d = Dataset {
        feature_names: names,
        features,
        target,
        target_name: "y".to_string(),
    };
    Ok(d)
}

/// Assignment of N samples to S disjoint folds of near-equal size.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CvPartition {
    /// `fold_assignment[i]` is the 0-based fold of sample `i`.
    pub fold_assignment: Vec<usize>,
    pub folds: usize,
}

impl CvPartition {
    pub fn fold_members(&self, s: usize) -> Vec<usize> {
        (0..self.fold_assignment.len())
            .filter(|&i| self.fold_assignment[i] == s)
            .collect()
    }

    /// Every sample not in fold `s`, ascending.
    pub fn training_indices(&self, s: usize) -> Vec<usize> {
        (0..self.fold_assignment.len())
            .filter(|&i| self.fold_assignment[i] != s)
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.folds];
        for &f in &self.fold_assignment {
            sizes[f] += 1;
        }
        sizes
    }
}

pub fn make_cv_partition(n: usize, folds: usize, seed: u64) -> Result<CvPartition> {
    if folds < 2 || folds > n {
        return Err(Error::invalid(format!(
            "fold count must satisfy 2 <= S <= N = {n}, got {folds}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(seed, STREAM_PARTITION));
    let mut fold_assignment = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        fold_assignment[i] = pos % folds;
    }
    Ok(CvPartition {
        fold_assignment,
        folds,
    })
}

/// A bijection on `0..N`. Applying it to `v` yields `v[mapping[i]]` at `i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Permutation {
    pub mapping: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation {
            mapping: (0..n).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.mapping.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.mapping.iter().map(|&i| v[i]).collect()
    }
}

/// Uniform random permutation (Fisher-Yates over a ChaCha8 stream).
pub fn make_permutation(n: usize, seed: u64) -> Result<Permutation> {
    if n < 1 {
        return Err(Error::invalid("permutation length must be at least 1"));
    }
    let mut mapping: Vec<usize> = (0..n).collect();
    mapping.shuffle(&mut rng::stream(seed, STREAM_PERMUTATION));
    Ok(Permutation { mapping })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Dataset {
        Dataset::new(
            vec!["a".into(), "b".into()],
            vec![vec![1.0, 2.0, 3.0], vec![2.0, 0.0, 7.0]],
            "y",
            vec![0.5, 0.1, 0.9],
        )
        .unwrap()
    }

    #[test]
    fn csv_with_header() {
        let text = "a,b,y\n1,2,3\n4,5,6\n7,8,9\n";
        let d = Dataset::read_csv(text.as_bytes(), true, &"y".parse().unwrap()).unwrap();
        assert_eq!(d.n_features(), 2);
        assert_eq!(d.feature_names(), &["a", "b"]);
        assert_eq!(d.target(), &[3.0, 6.0, 9.0]);
        assert_eq!(d.feature(1), &[2.0, 5.0, 8.0]);
    }

    #[test]
    fn csv_target_in_middle_and_by_index() {
        let text = "1,2,3\n4,5,6\n";
        let d = Dataset::read_csv(text.as_bytes(), false, &TargetColumn::Index(2)).unwrap();
        assert_eq!(d.target(), &[2.0, 5.0]);
        assert_eq!(d.feature_names(), &["x1", "x2"]);
        assert_eq!(d.feature(1), &[3.0, 6.0]);
    }

    #[test]
    fn csv_errors() {
        let nan = "a,y\n1,2\nNaN,3\n";
        match Dataset::read_csv(nan.as_bytes(), true, &"y".parse().unwrap()) {
            Err(Error::Cell {
                row: 3, column: 1, ..
            }) => {}
            other => panic!("unexpected {other:?}"),
        }
        let word = "a,y\n1,2\nfoo,3\n";
        assert!(matches!(
            Dataset::read_csv(word.as_bytes(), true, &"y".parse().unwrap()),
            Err(Error::Cell {
                row: 3,
                column: 1,
                ..
            })
        ));
        let ragged = "a,y\n1,2\n3\n";
        assert!(matches!(
            Dataset::read_csv(ragged.as_bytes(), true, &"y".parse().unwrap()),
            Err(Error::RaggedRow {
                row: 3,
                found: 1,
                expected: 2
            })
        ));
        let missing = "a,b\n1,2\n3,4\n";
        assert!(matches!(
            Dataset::read_csv(missing.as_bytes(), true, &"y".parse().unwrap()),
            Err(Error::MissingTarget(_))
        ));
        let short = "a,y\n1,2\n";
        assert!(matches!(
            Dataset::read_csv(short.as_bytes(), true, &"y".parse().unwrap()),
            Err(Error::TooFewSamples { .. })
        ));
        assert!(matches!(
            Dataset::load_csv(
                Path::new("/nonexistent/x.csv"),
                true,
                &TargetColumn::Index(1)
            ),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn standardize_three_points() {
        let d = Dataset::new(
            vec!["a".into()],
            vec![vec![1.0, 2.0, 3.0]],
            "y",
            vec![1.0, 2.0, 3.0],
        )
        .unwrap();
        let (z, rec) = d.standardize().unwrap();
        assert_eq!(z.feature(0), &[-1.0, 0.0, 1.0]);
        assert_eq!(rec.feature_stds, vec![1.0]);
        assert_eq!(rec.feature_means, vec![2.0]);
        let (zz, _) = z.standardize().unwrap();
        for (a, b) in zz.feature(0).iter().zip(z.feature(0)) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn standardize_rejects_constant() {
        let d = Dataset::new(
            vec!["flat".into()],
            vec![vec![0.0, 0.0, 0.0]],
            "y",
            vec![1.0, 2.0, 3.0],
        )
        .unwrap();
        match d.standardize() {
            Err(Error::ZeroVariance(name)) => assert_eq!(name, "flat"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn friedman_formula() {
        let x = [1.0, 1.0, 0.5, 0.0, 0.0, 0.3, 0.3, 0.3, 0.3, 0.3];
        assert!((friedman_response(&x) - 10.0 * 1f64.sin()).abs() < 1e-15);
        assert!((friedman_response(&x) - 8.414_709_848_078_965).abs() < 1e-12);
    }

    #[test]
    fn friedman_shape_and_determinism() {
        let a = generate_friedman(100, 3).unwrap();
        assert_eq!((a.n_samples(), a.n_features()), (100, 10));
        assert_eq!(a, generate_friedman(100, 3).unwrap());
        assert_ne!(a, generate_friedman(100, 4).unwrap());
        assert!(generate_friedman(0, 3).is_err());
    }

    #[test]
    fn partitions() {
        assert_eq!(
            make_cv_partition(6, 3, 1).unwrap().fold_sizes(),
            vec![2, 2, 2]
        );
        let mut s = make_cv_partition(7, 3, 1).unwrap().fold_sizes();
        s.sort();
        assert_eq!(s, vec![2, 2, 3]);
        let p = make_cv_partition(100, 20, 9).unwrap();
        assert!(p.fold_sizes().iter().all(|&s| s == 5));
        assert_eq!(p.training_indices(0).len(), 95);
        assert!(make_cv_partition(5, 1, 0).is_err());
        assert!(make_cv_partition(5, 6, 0).is_err());
    }

    #[test]
    fn permutations() {
        assert_eq!(make_permutation(1, 5).unwrap(), Permutation::identity(1));
        let mut m = make_permutation(50, 5).unwrap().mapping;
        m.sort();
        assert_eq!(m, (0..50).collect::<Vec<_>>());
        assert!(make_permutation(0, 5).is_err());
    }

    #[test]
    fn row_selection_and_permuted_columns() {
        let d = tiny();
        let s = d.select_rows(&[2, 0]);
        assert_eq!(s.feature(0), &[3.0, 1.0]);
        let p = Permutation {
            mapping: vec![1, 2, 0],
        };
        assert_eq!(d.with_permuted_target(&p).target(), &[0.1, 0.9, 0.5]);
        assert_eq!(
            d.with_permuted_feature(1, &p).unwrap().feature(1),
            &[0.0, 7.0, 2.0]
        );
        assert!(d.with_permuted_feature(2, &p).is_err());
    }

    #[test]
    fn jitter_is_tiny_and_seeded() {
        let d = tiny();
        let j = d.jittered(1);
        assert_eq!(j, d.jittered(1));
        assert_ne!(j, d);
        for (a, b) in j.feature(0).iter().zip(d.feature(0)) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_duplicate_names() {
        let r = Dataset::new(
            vec!["a".into(), "a".into()],
            vec![vec![1.0, 2.0]; 2],
            "y",
            vec![0.0, 1.0],
        );
        assert!(r.is_err());
    }
}
