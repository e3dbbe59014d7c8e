mod common;

use nalgebra::DMatrix;
use rand::Rng;

use somcluster::consensus::{kmeans, kmeans_fit};
use somcluster::dataset::{generate_synthetic, SampleMatrix, SyntheticSpec};
use somcluster::ensemble::run_ensemble;
use somcluster::lle::{lle, LleConfig};
use somcluster::pipeline::{prepare, stability_study, InputSource, PipelineConfig};
use somcluster::som::{best_matching_unit, partition_from_som, train_som, SomConfig, SomModel};

/// Best within-cluster SS over every 2-partition, by enumeration.
fn best_two_split(x: &[f64]) -> f64 {
    let n = x.len();
    let ss = |idx: &[f64]| {
        let m = idx.iter().sum::<f64>() / idx.len() as f64;
        idx.iter().map(|v| (v - m).powi(2)).sum::<f64>()
    };
    (1..(1u32 << n) - 1)
        .map(|mask| {
            let (a, b): (Vec<f64>, Vec<f64>) = (0..n).map(|i| (mask >> i & 1 == 1, x[i])).fold(
                (vec![], vec![]),
                |(mut a, mut b), (left, v)| {
                    if left { a.push(v) } else { b.push(v) }
                    (a, b)
                },
            );
            ss(&a) + ss(&b)
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn kmeans_matches_enumeration() {
    let pts = [0.0, 1.0, 2.0, 10.0, 11.0, 12.0];
    let x = DMatrix::from_column_slice(6, 1, &pts);
    let fit = kmeans_fit(&x, 2, 0, 10).unwrap();
    assert_eq!(fit.partition.labels(), &[0, 0, 0, 1, 1, 1]);
    assert!((fit.inertia - 4.0).abs() < 1e-12);
    assert!((best_two_split(&pts) - 4.0).abs() < 1e-12);

    let mut rng = common::rng(4);
    for _ in 0..30 {
        let pts: Vec<f64> = (0..9).map(|_| rng.random_range(-10.0..10.0)).collect();
        let x = DMatrix::from_column_slice(9, 1, &pts);
        let fit = kmeans_fit(&x, 2, 1, 10).unwrap();
        assert!((fit.inertia - best_two_split(&pts)).abs() < 1e-9, "{pts:?}");
    }
}

#[test]
fn kmeans_recovers_synthetic_subject_means() {
    for seed in 0..5 {
        let cohort = generate_synthetic(&SyntheticSpec {
            n_subjects: 20,
            n_true_clusters: 4,
            cluster_separation: 10.0,
            seed,
            ..Default::default()
        })
        .unwrap();
        let p = kmeans(&cohort.subject_means, 4, seed, 10).unwrap();
        assert!(common::same_partition(&cohort.true_labels, p.labels()), "seed {seed}");
    }
}

#[test]
fn bmu_matches_linear_scan() {
    let mut rng = common::rng(5);
    let cfg = SomConfig { grid_rows: 3, grid_cols: 5, ..Default::default() };
    for _ in 0..200 {
        let dim = rng.random_range(1..5);
        let w: Vec<f64> = (0..15 * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let model = SomModel::from_weights(cfg, dim, w).unwrap();
        let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let dists: Vec<f64> = (0..15)
            .map(|j| model.node(j).iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum())
            .collect();
        let min = dists.iter().copied().fold(f64::INFINITY, f64::min);
        let want = dists.iter().position(|&d| d == min).unwrap();
        assert_eq!(best_matching_unit(&model, &x).unwrap(), want);
    }
}

#[test]
fn som_two_far_clusters() {
    let mut rng = common::rng(6);
    let vals: Vec<f64> = (0..60)
        .map(|i| if i % 2 == 0 { 0.0 } else { 100.0 } + rng.random_range(-1.0..1.0))
        .collect();
    let x = DMatrix::from_column_slice(60, 1, &vals);
    let mean = |odd: usize| {
        let v: Vec<f64> = vals.iter().skip(odd).step_by(2).copied().collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    let (ma, mb) = (mean(0), mean(1));
    // the last neighbor weight the schedule applies is exp(-1 / (2 * 0.5^2))
    let h = (-2.0f64).exp();
    let bias = h / (1.0 + h) * (mb - ma);
    for seed in 0..5 {
        let cfg = SomConfig { grid_rows: 1, grid_cols: 2, iter_max: 10_000, seed, ..Default::default() };
        let model = train_som(&x, &cfg).unwrap();
        let (lo, hi) = {
            let (a, b) = (model.node(0)[0], model.node(1)[0]);
            (a.min(b), a.max(b))
        };
        assert!((lo - ma).abs() <= bias + 2.0, "seed {seed}: {lo} vs {ma}");
        assert!((hi - mb).abs() <= bias + 2.0, "seed {seed}: {hi} vs {mb}");
        let p = partition_from_som(&model, &x).unwrap();
        let truth: Vec<usize> = (0..60).map(|i| i % 2).collect();
        assert!(common::same_partition(&truth, p.labels()));
    }
}

#[test]
fn som_same_input_same_weights() {
    let cohort = generate_synthetic(&SyntheticSpec { n_subjects: 10, n_features: 5, ..Default::default() }).unwrap();
    let cfg = SomConfig { seed: 9, ..Default::default() };
    let a = train_som(cohort.samples.values(), &cfg).unwrap();
    let b = train_som(cohort.samples.values(), &cfg).unwrap();
    assert_eq!(a, b);
}

#[test]
fn tight_subjects_pass_filter() {
    let cohort = generate_synthetic(&SyntheticSpec { seed: 3, ..Default::default() }).unwrap();
    let x = cohort.samples.standardized();
    let e = lle(&x, &LleConfig::default()).unwrap();
    let set = run_ensemble(&e.values, x.subject_ids(), 50, 0.099, &SomConfig::default(), 1).unwrap();
    assert_eq!(set.len(), 50);
    assert_eq!(set.run_indices, (0..50).collect::<Vec<_>>());
}

#[test]
fn ensemble_independent_of_thread_count() {
    let cohort = generate_synthetic(&SyntheticSpec { n_subjects: 12, n_features: 6, ..Default::default() }).unwrap();
    let x = cohort.samples.values();
    let run = |threads| {
        somcluster::pipeline::with_threads(threads, || {
            run_ensemble(x, cohort.samples.subject_ids(), 16, 0.5, &SomConfig::default(), 3)
        })
        .unwrap()
        .unwrap()
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn stability_of_degenerate_data_is_zero() {
    // two groups of exactly identical samples: every method returns the same split each rerun
    let n = 12;
    let values = DMatrix::from_fn(n, 3, |i, j| if i < n / 2 { j as f64 } else { 10.0 + j as f64 });
    let ids = (0..n).map(|i| format!("s{i}")).collect();
    let subj = (0..n).map(|i| format!("p{}", i / 3)).collect();
    let samples = SampleMatrix::new(values, ids, subj).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    samples.save_csv(&path).unwrap();

    let mut cfg = PipelineConfig {
        input: InputSource::Csv { path },
        standardize: false,
        n_stability_reruns: 2,
        ..Default::default()
    };
    cfg.lle = LleConfig { k_neighbors: 3, dim: 2, reg: 1e-3 };
    cfg.som.grid_rows = 1;
    cfg.som.grid_cols = 2;
    cfg.ensemble.n_p = 10;
    cfg.consensus.k_max = 4;
    let data = prepare(&cfg).unwrap();
    let (block, _) = stability_study(&cfg, &data).unwrap();
    assert_eq!(block.methods.len(), 2);
    for m in &block.methods {
        assert_eq!((m.std_sc, m.std_ch, m.std_db), (0.0, 0.0, 0.0), "{}", m.method);
    }
}
