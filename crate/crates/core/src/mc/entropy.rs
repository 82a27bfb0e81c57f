use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::function::gamma::{digamma, ln_gamma};

use super::{KdTree, McError, SampleEnsemble};
use crate::index_set::IndexSet;
use crate::info::{EntropyOracle, InfoError, Provenance};
use crate::numeric::pairwise_sum;

/// Default neighbor order for the Kozachenko–Leonenko estimator.
pub const DEFAULT_K: usize = 4;

const JITTER_SCALE: f64 = 1e-12;

/// Kozachenko–Leonenko differential entropy (nats) of row-major points:
/// `psi(N) - psi(k) + log V_d + (d/N) sum log r_i`, where `r_i` is the
/// Euclidean distance to the `k`-th neighbor and `V_d` the unit-ball volume.
pub fn knn_entropy_points(points: &[f64], dim: usize, k: usize) -> Result<f64, McError> {
    if dim == 0 || !points.len().is_multiple_of(dim) {
        return Err(McError::BadIndexSet);
    }
    let n = points.len() / dim;
    if k < 1 || n <= k {
        return Err(McError::TooFewSamples { n, k });
    }
    let radii = kth_distances(points, dim, k);
    let duplicates = radii.iter().filter(|&&r| r <= 0.0).count();
    let radii = if duplicates > 0 {
        log::warn!("{duplicates} points have a zero {k}-NN distance; jittering at {JITTER_SCALE:e} scale");
        let mut rng = ChaCha8Rng::seed_from_u64(0x6a17);
        let jittered: Vec<f64> = points
            .iter()
            .map(|&v| v + JITTER_SCALE * (1.0 + v.abs()) * rng.gen_range(-1.0..1.0))
            .collect();
        kth_distances(&jittered, dim, k)
    } else {
        radii
    };
    let logs: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let d = dim as f64;
    let log_unit_ball = 0.5 * d * PI.ln() - ln_gamma(0.5 * d + 1.0);
    Ok(digamma(n as f64) - digamma(k as f64) + log_unit_ball + d * pairwise_sum(&logs) / n as f64)
}

fn kth_distances(points: &[f64], dim: usize, k: usize) -> Vec<f64> {
    let tree = KdTree::new(points, dim);
    (0..tree.len())
        .into_par_iter()
        .map(|i| tree.kth_neighbor_distance(i, k))
        .collect()
}

/// Kozachenko–Leonenko entropy of the `idx`-margin of an ensemble.
///
/// Each coordinate is divided by its sample standard deviation before the
/// neighbor search and `sum log sd` is added back. The Euclidean metric is
/// then not dominated by the widest species, which cuts the bias on strongly
/// anisotropic margins; constant coordinates are left unscaled.
pub fn knn_entropy(ens: &SampleEnsemble, idx: &IndexSet, k: usize) -> Result<f64, McError> {
    if idx.is_empty() || idx.max_index().is_some_and(|m| m >= ens.dim) {
        return Err(McError::BadIndexSet);
    }
    let n = ens.len();
    let scales: Vec<f64> = idx
        .iter()
        .map(|i| {
            let col: Vec<f64> = ens.rows().map(|r| r[i]).collect();
            let mean = pairwise_sum(&col) / n.max(1) as f64;
            let dev: Vec<f64> = col.iter().map(|v| (v - mean) * (v - mean)).collect();
            let sd = (pairwise_sum(&dev) / n.max(1) as f64).sqrt();
            if sd > 0.0 && sd.is_finite() {
                sd
            } else {
                1.0
            }
        })
        .collect();
    let margin: Vec<f64> = ens
        .rows()
        .flat_map(|r| idx.iter().zip(&scales).map(move |(i, s)| r[i] / s))
        .collect();
    let shift: f64 = scales.iter().map(|s| s.ln()).sum();
    Ok(knn_entropy_points(&margin, idx.len(), k)? + shift)
}

/// Memoizing entropy oracle over an ensemble.
pub struct EmpiricalOracle<'a> {
    ens: &'a SampleEnsemble,
    k: usize,
    cache: Mutex<HashMap<IndexSet, f64>>,
}

impl<'a> EmpiricalOracle<'a> {
    pub fn new(ens: &'a SampleEnsemble, k: usize) -> Result<Self, McError> {
        if k < 1 || ens.len() <= k {
            return Err(McError::TooFewSamples { n: ens.len(), k });
        }
        Ok(Self {
            ens,
            k,
            cache: Mutex::new(HashMap::new()),
        })
    }

    /// Fills the cache for the given sets.
    pub fn precompute(&self, sets: &[IndexSet]) -> Result<(), McError> {
        for s in sets {
            self.entropy(s).map_err(|e| match e {
                InfoError::Estimator(m) => McError::Format(m),
                other => McError::Format(other.to_string()),
            })?;
        }
        Ok(())
    }

    pub fn ensemble(&self) -> &SampleEnsemble {
        self.ens
    }
}

impl EntropyOracle for EmpiricalOracle<'_> {
    fn entropy(&self, idx: &IndexSet) -> Result<f64, InfoError> {
        if idx.is_empty() {
            return Ok(0.0);
        }
        if let Some(&h) = self.cache.lock().unwrap().get(idx) {
            return Ok(h);
        }
        let h = knn_entropy(self.ens, idx, self.k).map_err(|e| InfoError::Estimator(e.to_string()))?;
        self.cache.lock().unwrap().insert(idx.clone(), h);
        Ok(h)
    }

    fn provenance(&self) -> Provenance {
        Provenance::Empirical
    }
}
