//! Online self-organizing map on a rectangular grid.
//!
//! One iteration is one sample presentation. Samples are visited in seeded
//! shuffled epochs. The learning rate and the Gaussian neighborhood width
//! decay exponentially:
//!
//! ```text
//! lr(t)    = lr_init    * (lr_threshold / lr_init)    ^ (t / iter_max)
//! sigma(t) = radius_init * (0.5 / radius_init)        ^ (t / iter_max)
//! ```
//!
//! Training stops once `t == iter_max` or `lr(t) <= lr_threshold`.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ensemble::Partition;
use crate::error::{Error, Result};
use crate::linalg::{rows_of, sq_dist};

/// Final neighborhood width of the decay schedule.
pub const SIGMA_FINAL: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SomConfig {
    pub grid_rows: usize,
    pub grid_cols: usize,
    pub lr_init: f64,
    pub lr_threshold: f64,
    pub radius_init: f64,
    pub iter_max: usize,
    pub seed: u64,
}

impl Default for SomConfig {
    fn default() -> Self {
        SomConfig {
            grid_rows: 4,
            grid_cols: 4,
            lr_init: 0.5,
            lr_threshold: 0.01,
            radius_init: 2.0,
            iter_max: 10_000,
            seed: 0,
        }
    }
}

impl SomConfig {
    pub fn n_nodes(&self) -> usize {
        self.grid_rows * self.grid_cols
    }

    /// Full invariant check, including `lr_threshold < lr_init`.
    pub fn validate(&self) -> Result<()> {
        self.validate_trainable()?;
        if self.lr_threshold >= self.lr_init {
            return Err(Error::ConfigInvalid("som.lr_threshold must be below som.lr_init".into()));
        }
        Ok(())
    }

    /// Checks that `train_som` can run. A threshold at or above the initial
    /// rate is allowed here and yields an untrained map.
    fn validate_trainable(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::ConfigInvalid(format!("som: {m}")));
        if self.n_nodes() < 2 {
            return bad("grid needs at least 2 nodes");
        }
        if !(self.lr_init > 0.0 && self.lr_init <= 1.0) {
            return bad("lr_init must be in (0, 1]");
        }
        if !(self.lr_threshold > 0.0 && self.lr_threshold.is_finite()) {
            return bad("lr_threshold must be > 0");
        }
        if !(self.radius_init > 0.0 && self.radius_init.is_finite()) {
            return bad("radius_init must be > 0");
        }
        if self.iter_max == 0 {
            return bad("iter_max must be >= 1");
        }
        Ok(())
    }

    pub fn learning_rate(&self, t: usize) -> f64 {
        let frac = t as f64 / self.iter_max as f64;
        self.lr_init * (self.lr_threshold / self.lr_init).powf(frac)
    }

    pub fn sigma(&self, t: usize) -> f64 {
        let frac = t as f64 / self.iter_max as f64;
        self.radius_init * (SIGMA_FINAL / self.radius_init).powf(frac)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SomModel {
    pub config: SomConfig,
    pub dim: usize,
    /// Row-major `n_nodes x dim`.
    pub weights: Vec<f64>,
    pub node_coords: Vec<(usize, usize)>,
    pub iterations_run: usize,
}

impl SomModel {
    /// Wraps explicit node weights (row-major, `n_nodes x dim`).
    pub fn from_weights(config: SomConfig, dim: usize, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 || weights.len() != config.n_nodes() * dim {
            return Err(Error::DimMismatch {
                expected: config.n_nodes() * dim,
                found: weights.len(),
            });
        }
        Ok(SomModel {
            node_coords: grid_coords(&config),
            config,
            dim,
            weights,
            iterations_run: 0,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.node_coords.len()
    }

    pub fn node(&self, j: usize) -> &[f64] {
        &self.weights[j * self.dim..(j + 1) * self.dim]
    }

    fn bmu_unchecked(&self, x: &[f64]) -> usize {
        let mut best = (0, f64::INFINITY);
        for j in 0..self.n_nodes() {
            let d = sq_dist(self.node(j), x);
            if d < best.1 {
                best = (j, d);
            }
        }
        best.0
    }

    /// Presents one sample: finds its best matching unit and pulls every node
    /// toward `x` by `lr * h`, with `h = exp(-grid_dist^2 / (2 sigma^2))`.
    /// Returns the BMU.
    pub fn present(&mut self, x: &[f64], lr: f64, sigma: f64) -> Result<usize> {
        self.check_dim(x.len())?;
        Ok(self.present_unchecked(x, lr, sigma))
    }

    fn present_unchecked(&mut self, x: &[f64], lr: f64, sigma: f64) -> usize {
        let bmu = self.bmu_unchecked(x);
        let (br, bc) = self.node_coords[bmu];
        let denom = 2.0 * sigma * sigma;
        for j in 0..self.n_nodes() {
            let (r, c) = self.node_coords[j];
            let g2 = (r as f64 - br as f64).powi(2) + (c as f64 - bc as f64).powi(2);
            let step = lr * (-g2 / denom).exp();
            if step == 0.0 {
                continue;
            }
            for (w, xv) in self.weights[j * self.dim..(j + 1) * self.dim].iter_mut().zip(x) {
                *w += step * (xv - *w);
            }
        }
        bmu
    }

    fn check_dim(&self, found: usize) -> Result<()> {
        if found != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                found,
            });
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn grid_coords(cfg: &SomConfig) -> Vec<(usize, usize)> {
    (0..cfg.grid_rows)
        .flat_map(|r| (0..cfg.grid_cols).map(move |c| (r, c)))
        .collect()
}

/// Trains a map on the rows of `data`. Identical inputs give bit-identical
/// models.
pub fn train_som(data: &DMatrix<f64>, cfg: &SomConfig) -> Result<SomModel> {
    if data.nrows() == 0 || data.ncols() == 0 {
        return Err(Error::EmptyInput);
    }
    cfg.validate_trainable()?;
    let rows = rows_of(data);
    let dim = data.ncols();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    // uniform within the per-dimension bounding box
    let lo: Vec<f64> = (0..dim).map(|c| data.column(c).min()).collect();
    let hi: Vec<f64> = (0..dim).map(|c| data.column(c).max()).collect();
    let mut weights = Vec::with_capacity(cfg.n_nodes() * dim);
    for _ in 0..cfg.n_nodes() {
        for c in 0..dim {
            let u: f64 = rng.random();
            weights.push(lo[c] + u * (hi[c] - lo[c]));
        }
    }
    let mut model = SomModel::from_weights(*cfg, dim, weights)?;

    let mut order: Vec<usize> = (0..rows.len()).collect();
    let mut t = 0;
    'epochs: while t < cfg.iter_max {
        order.shuffle(&mut rng);
        for &i in &order {
            let lr = cfg.learning_rate(t);
            if t >= cfg.iter_max || lr <= cfg.lr_threshold {
                break 'epochs;
            }
            model.present_unchecked(&rows[i], lr, cfg.sigma(t));
            t += 1;
        }
    }
    model.iterations_run = t;
    Ok(model)
}

/// Index of the node nearest to `x`; ties go to the lowest index.
pub fn best_matching_unit(model: &SomModel, x: &[f64]) -> Result<usize> {
    model.check_dim(x.len())?;
    Ok(model.bmu_unchecked(x))
}

/// Labels each row with its BMU index (not canonicalized).
pub fn partition_from_som(model: &SomModel, data: &DMatrix<f64>) -> Result<Partition> {
    model.check_dim(data.ncols())?;
    let labels = rows_of(data).iter().map(|r| model.bmu_unchecked(r)).collect();
    Ok(Partition::new(labels))
}
