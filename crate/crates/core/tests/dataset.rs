mod common;

use mifs_core::dataset::{
    generate_friedman, make_cv_partition, make_permutation, Dataset, TargetColumn,
};
use proptest::prelude::*;
use std::io::Write;

#[test]
fn headerless_fixture_round_trip() {
    let d = generate_friedman(100, 21).unwrap();
    let mut file = tempfile::NamedTempFile::new().unwrap();
    for i in 0..100 {
        let row: Vec<String> = (0..10)
            .map(|j| format!("{:?}", d.feature(j)[i]))
            .chain(std::iter::once(format!("{:?}", d.target()[i])))
            .collect();
        writeln!(file, "{}", row.join(",")).unwrap();
    }
    file.flush().unwrap();
    let back = Dataset::load_csv(file.path(), false, &TargetColumn::Index(11)).unwrap();
    assert_eq!(back.n_features(), 10);
    let names: Vec<String> = (1..=10).map(|j| format!("x{j}")).collect();
    assert_eq!(back.feature_names(), names.as_slice());
    for j in 0..10 {
        assert_eq!(back.feature(j), d.feature(j));
    }
    assert_eq!(back.target(), d.target());
}

#[test]
fn written_csv_reloads_identically() {
    let d = generate_friedman(50, 2).unwrap();
    let mut buf = Vec::new();
    d.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("x1,x2,x3,x4,x5,x6,x7,x8,x9,x10,y\n"));
    let back = Dataset::read_csv(buf.as_slice(), true, &"y".parse().unwrap()).unwrap();
    assert_eq!(back, d);
}

/// Chi-square statistic of position-by-value counts over 10000 permutations
/// of length 5 (25 cells, 16 degrees of freedom).
#[test]
fn permutations_are_uniform_over_positions() {
    let n = 5;
    let draws = 10_000;
    let mut counts = vec![vec![0u32; n]; n];
    for s in 0..draws {
        let p = make_permutation(n, s).unwrap();
        for (pos, &v) in p.mapping.iter().enumerate() {
            counts[pos][v] += 1;
        }
    }
    let expected = draws as f64 / n as f64;
    let chi2: f64 = counts
        .iter()
        .flatten()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let critical = ChiSquared::new(16.0).unwrap().inverse_cdf(0.99);
    assert!(chi2 < critical, "chi2 {chi2} >= {critical}");
}

#[test]
fn friedman_features_are_uniform() {
    let d = generate_friedman(10_000, 99).unwrap();
    let n = 10_000f64;
    // asymptotic Kolmogorov critical value at alpha = 0.01
    let critical = 1.6276 / n.sqrt();
    for j in 0..10 {
        let mut v = d.feature(j).to_vec();
        v.sort_by(f64::total_cmp);
        let ks = v
            .iter()
            .enumerate()
            .map(|(i, &x)| ((i + 1) as f64 / n - x).max(x - i as f64 / n))
            .fold(0.0, f64::max);
        assert!(ks < critical, "feature {j}: D = {ks}");
        assert!(v[0] >= 0.0 && v[v.len() - 1] < 1.0);
    }
}

#[test]
fn friedman_noise_has_unit_variance() {
    let d = generate_friedman(20_000, 5).unwrap();
    let resid: Vec<f64> = (0..d.n_samples())
        .map(|i| {
            let x: Vec<f64> = (0..5).map(|j| d.feature(j)[i]).collect();
            d.target()[i] - mifs_core::dataset::friedman_response(&x)
        })
        .collect();
    assert!(common::mean(&resid).abs() < 0.03);
    assert!((common::variance(&resid) - 1.0).abs() < 0.04);
}

proptest! {
    #[test]
    fn partition_covers_and_balances(n in 2usize..300, s_frac in 0.0..1.0f64, seed in any::<u64>()) {
        let folds = 2 + ((n - 2) as f64 * s_frac) as usize;
        let p = make_cv_partition(n, folds, seed).unwrap();
        let sizes = p.fold_sizes();
        prop_assert!(sizes.iter().all(|&s| s >= 1));
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        let mut all: Vec<usize> = (0..folds).flat_map(|s| p.fold_members(s)).collect();
        all.sort();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        prop_assert_eq!(p.clone(), make_cv_partition(n, folds, seed).unwrap());
    }

    #[test]
    fn permutation_is_bijection(n in 1usize..200, seed in any::<u64>()) {
        let mut m = make_permutation(n, seed).unwrap().mapping;
        m.sort();
        prop_assert_eq!(m, (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn standardization_inverts(cols in prop::collection::vec(prop::collection::vec(-1e3..1e3f64, 12), 1..5), y in prop::collection::vec(-50.0..50.0f64, 12)) {
        let names: Vec<String> = (0..cols.len()).map(|j| format!("f{j}")).collect();
        let d = Dataset::new(names, cols, "y", y).unwrap();
        let (z, rec) = d.standardize().unwrap();
        for j in 0..z.n_features() {
            prop_assert!(common::mean(z.feature(j)).abs() < 1e-9);
            prop_assert!((common::variance(z.feature(j)).sqrt() - 1.0).abs() < 1e-9);
        }
        let back = rec.invert(&z);
        for j in 0..d.n_features() {
            for (a, b) in back.feature(j).iter().zip(d.feature(j)) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
        for (a, b) in back.target().iter().zip(d.target()) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }
}
