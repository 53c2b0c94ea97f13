#![allow(dead_code)]

use mifs_core::dataset::Dataset;
use mifs_core::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ 0xA5A5_0000)
}

pub fn normals(r: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| r.sample(StandardNormal)).collect()
}

pub fn uniforms(r: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| r.random::<f64>()).collect()
}

/// Bivariate standard normal with correlation `rho`.
pub fn gaussian_pair(n: usize, rho: f64, seed: u64) -> (Matrix, Matrix) {
    let mut r = rng(seed);
    let a = normals(&mut r, n);
    let b = normals(&mut r, n);
    let y: Vec<f64> = a
        .iter()
        .zip(&b)
        .map(|(u, v)| rho * u + (1.0 - rho * rho).sqrt() * v)
        .collect();
    (
        Matrix::column_vector(&a).unwrap(),
        Matrix::column_vector(&y).unwrap(),
    )
}

pub fn random_matrix(r: &mut ChaCha8Rng, n: usize, d: usize) -> Matrix {
    let cols: Vec<Vec<f64>> = (0..d).map(|_| normals(r, n)).collect();
    Matrix::from_columns(&cols).unwrap()
}

pub fn dataset(names: &[&str], cols: Vec<Vec<f64>>, y: Vec<f64>) -> Dataset {
    Dataset::new(names.iter().map(|s| s.to_string()).collect(), cols, "y", y).unwrap()
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() as f64 - 1.0)
}

/// Adjusted Rand index between two labelings.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    let ka = a.iter().max().unwrap() + 1;
    let kb = b.iter().max().unwrap() + 1;
    let mut table = vec![vec![0u64; kb]; ka];
    for (&i, &j) in a.iter().zip(b) {
        table[i][j] += 1;
    }
    let c2 = |x: u64| (x * x.saturating_sub(1) / 2) as f64;
    let sum_ij: f64 = table.iter().flatten().map(|&x| c2(x)).sum();
    let sum_a: f64 = table.iter().map(|r| c2(r.iter().sum())).sum();
    let sum_b: f64 = (0..kb).map(|j| c2(table.iter().map(|r| r[j]).sum())).sum();
    let total = c2(a.len() as u64);
    let expected = sum_a * sum_b / total;
    let max = 0.5 * (sum_a + sum_b);
    if max == expected {
        return 1.0;
    }
    (sum_ij - expected) / (max - expected)
}

/// Three independent uniform signals driving y, each observed through ten
/// noisy copies. Feature `g * 10 + c` is copy `c` of signal `g`.
pub fn planted_groups(n: usize, noise: f64, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let signals: Vec<Vec<f64>> = (0..3).map(|_| uniforms(&mut r, n)).collect();
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let e: f64 = r.sample(StandardNormal);
            signals[0][i] + (3.0 * signals[1][i]).sin() + signals[2][i] * signals[2][i] + 0.05 * e
        })
        .collect();
    let mut cols = Vec::new();
    let mut names = Vec::new();
    for (g, s) in signals.iter().enumerate() {
        for c in 0..10 {
            let e = normals(&mut r, n);
            cols.push(s.iter().zip(&e).map(|(v, e)| v + noise * e).collect());
            names.push(format!("g{g}c{c}"));
        }
    }
    Dataset::new(names, cols, "y", y).unwrap()
}

/// y uniform on [0, 1]; the first feature tracks y on the lower half of its
/// range and is noise elsewhere, the second does the same on the upper half.
pub fn complementary_pair(n: usize, seed: u64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut r = rng(seed);
    let y = uniforms(&mut r, n);
    let lo: Vec<f64> = y
        .iter()
        .map(|&v| if v < 0.5 { v } else { r.random::<f64>() })
        .collect();
    let hi: Vec<f64> = y
        .iter()
        .map(|&v| if v >= 0.5 { v } else { r.random::<f64>() })
        .collect();
    (lo, hi, y)
}
