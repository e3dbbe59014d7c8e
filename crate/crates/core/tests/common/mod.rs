//! Brute-force reference implementations and fixtures shared by the test
//! targets. They use pairwise formulations on purpose, so they share no code
//! path with the library.

#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn d(x: &DMatrix<f64>, i: usize, j: usize) -> f64 {
    (x.row(i) - x.row(j)).norm()
}

pub fn distinct(labels: &[usize]) -> Vec<usize> {
    let mut l = labels.to_vec();
    l.sort();
    l.dedup();
    l
}

/// Mean silhouette; samples alone in their cluster score 0.
pub fn silhouette(x: &DMatrix<f64>, labels: &[usize]) -> f64 {
    let n = labels.len();
    let ks = distinct(labels);
    let mut total = 0.0;
    for i in 0..n {
        let own: Vec<usize> = (0..n).filter(|&j| j != i && labels[j] == labels[i]).collect();
        if own.is_empty() {
            continue;
        }
        let a = own.iter().map(|&j| d(x, i, j)).sum::<f64>() / own.len() as f64;
        let mut b = f64::INFINITY;
        for &k in &ks {
            if k == labels[i] {
                continue;
            }
            let other: Vec<usize> = (0..n).filter(|&j| labels[j] == k).collect();
            b = b.min(other.iter().map(|&j| d(x, i, j)).sum::<f64>() / other.len() as f64);
        }
        let m = a.max(b);
        if m > 0.0 {
            total += (b - a) / m;
        }
    }
    total / n as f64
}

/// Sum of squared deviations from the mean, via half the mean pairwise
/// squared distance.
fn pair_ss(x: &DMatrix<f64>, members: &[usize]) -> f64 {
    let mut s = 0.0;
    for &i in members {
        for &j in members {
            s += d(x, i, j).powi(2);
        }
    }
    s / (2.0 * members.len() as f64)
}

pub fn calinski_harabasz(x: &DMatrix<f64>, labels: &[usize]) -> f64 {
    let n = labels.len();
    let ks = distinct(labels);
    let all: Vec<usize> = (0..n).collect();
    let total = pair_ss(x, &all);
    let within: f64 = ks
        .iter()
        .map(|&k| pair_ss(x, &all.iter().copied().filter(|&i| labels[i] == k).collect::<Vec<_>>()))
        .sum();
    let k = ks.len() as f64;
    ((total - within) / (k - 1.0)) / (within / (n as f64 - k))
}

pub fn davies_bouldin(x: &DMatrix<f64>, labels: &[usize]) -> f64 {
    let ks = distinct(labels);
    let cents: Vec<DMatrix<f64>> = ks
        .iter()
        .map(|&k| {
            let idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == k).collect();
            let mut c = DMatrix::zeros(1, x.ncols());
            for &i in &idx {
                c += x.rows(i, 1);
            }
            c / idx.len() as f64
        })
        .collect();
    let scat: Vec<f64> = ks
        .iter()
        .zip(&cents)
        .map(|(&k, c)| {
            let idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == k).collect();
            idx.iter().map(|&i| (x.rows(i, 1) - c).norm()).sum::<f64>() / idx.len() as f64
        })
        .collect();
    let mut total = 0.0;
    for a in 0..ks.len() {
        let mut worst = f64::NEG_INFINITY;
        for b in 0..ks.len() {
            if a != b {
                worst = worst.max((scat[a] + scat[b]) / (&cents[a] - &cents[b]).norm());
            }
        }
        total += worst;
    }
    total / ks.len() as f64
}

/// Fraction of samples whose label differs from the most common label of
/// their subject.
pub fn ics(labels: &[usize], subjects: &[String]) -> f64 {
    let mut names = subjects.to_vec();
    names.sort();
    names.dedup();
    let mut bad = 0;
    for s in &names {
        let mine: Vec<usize> = (0..labels.len()).filter(|&i| &subjects[i] == s).map(|i| labels[i]).collect();
        let top = mine.iter().map(|l| mine.iter().filter(|m| *m == l).count()).max().unwrap();
        bad += mine.len() - top;
    }
    bad as f64 / labels.len() as f64
}

/// Random metric instance: n > k points in `dim` dimensions, labels drawn
/// from 0..k with every label present.
pub fn metric_instance(rng: &mut ChaCha8Rng, n: usize, k: usize, dim: usize) -> (DMatrix<f64>, Vec<usize>) {
    assert!(n > k);
    let x = DMatrix::from_fn(n, dim, |_, _| rng.random_range(-5.0..5.0));
    let mut labels: Vec<usize> = (0..k).collect();
    labels.extend((k..n).map(|_| rng.random_range(0..k)));
    for i in (1..n).rev() {
        labels.swap(i, rng.random_range(0..=i));
    }
    (x, labels)
}

/// Subject ids with `per` consecutive samples each.
pub fn subjects(n_subjects: usize, per: usize) -> Vec<String> {
    (0..n_subjects * per).map(|i| format!("p{}", i / per)).collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Whether `found` equals `truth` after some relabeling.
pub fn same_partition(truth: &[usize], found: &[usize]) -> bool {
    use std::collections::HashMap;
    let mut fwd = HashMap::new();
    let mut back = HashMap::new();
    truth.len() == found.len()
        && truth.iter().zip(found).all(|(t, f)| {
            *fwd.entry(*t).or_insert(*f) == *f && *back.entry(*f).or_insert(*t) == *t
        })
}
