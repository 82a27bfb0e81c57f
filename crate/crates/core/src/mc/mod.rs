//! Sampling-based ground truth: Euler–Maruyama simulation of
//! `dX = f(X) dt + eps sigma(X) dW`, nonparametric entropy estimation and
//! quadrature of explicit densities.

mod entropy;
mod kdtree;
mod persistence;
mod quadrature;

use std::io::{self, BufRead, Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dynamics::{Equilibrium, VectorField};
use crate::lyapunov::NoiseModel;

pub use entropy::{knn_entropy, knn_entropy_points, EmpiricalOracle, DEFAULT_K};
pub use kdtree::KdTree;
pub use persistence::{persistence_probe, PersistenceRow, PersistenceTable};
pub use quadrature::{quadrature_entropy, Normalization, QuadratureEntropy};

/// Chains whose state leaves this sup-norm bound are discarded.
pub const OVERFLOW_GUARD: f64 = 1e8;

#[derive(Debug, Error)]
pub enum McError {
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error("all {0} chains diverged")]
    AllChainsDiverged(usize),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("need more than k = {k} samples, have {n}")]
    TooFewSamples { n: usize, k: usize },
    #[error("index set is empty or out of range")]
    BadIndexSet,
    #[error("quadrature box misses mass: {0}")]
    MassDeficit(String),
    #[error("ensemble file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    /// Discarded time before sampling starts.
    pub burn_in: f64,
    /// Sampled time per chain.
    pub horizon: f64,
    /// Steps between retained states.
    pub thin: usize,
    pub chains: usize,
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), McError> {
        let bad = |m: &str| Err(McError::Config(m.to_string()));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be positive");
        }
        if !(self.burn_in > 0.0 && self.burn_in.is_finite()) {
            return bad("burn_in must be positive");
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad("horizon must be positive");
        }
        if self.thin < 1 {
            return bad("thin must be at least 1");
        }
        if self.chains < 1 {
            return bad("chains must be at least 1");
        }
        Ok(())
    }

    /// Steps per chain after burn-in.
    pub fn sample_steps(&self) -> usize {
        (self.horizon / self.dt + 1e-9).floor() as usize
    }

    pub fn burn_in_steps(&self) -> usize {
        (self.burn_in / self.dt).round() as usize
    }

    /// Retained states per chain.
    pub fn samples_per_chain(&self) -> usize {
        self.sample_steps() / self.thin
    }

    /// Defaults at a known stable equilibrium: `dt = min(1e-3, 0.1/||J||)`,
    /// burn-in of ten relaxation times, and roughly `samples` states spaced
    /// `spacing` time units apart spread over `chains` chains.
    pub fn for_equilibrium(eq: &Equilibrium, samples: usize, spacing: f64, chains: usize, seed: u64) -> Self {
        let jnorm = eq
            .jacobian
            .row_iter()
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        let dt = if jnorm > 0.0 { (0.1 / jnorm).min(1e-3) } else { 1e-3 };
        let burn_in = if eq.spectral_abscissa < 0.0 {
            10.0 / eq.spectral_abscissa.abs()
        } else {
            10.0
        };
        Self::with_spacing(dt, burn_in, samples, spacing, chains, seed)
    }

    /// A config retaining `samples` states, `spacing` time units apart.
    pub fn with_spacing(dt: f64, burn_in: f64, samples: usize, spacing: f64, chains: usize, seed: u64) -> Self {
        let thin = ((spacing / dt).round() as usize).max(1);
        let per_chain = samples.div_ceil(chains.max(1));
        Self {
            dt,
            burn_in,
            horizon: (per_chain * thin) as f64 * dt,
            thin,
            chains: chains.max(1),
            seed,
        }
    }
}

/// Stationary samples of the perturbed system at one noise level.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleEnsemble {
    pub dim: usize,
    /// Row-major `len() x dim`.
    pub points: Vec<f64>,
    pub eps: f64,
    pub config: SimConfig,
    pub fingerprint: String,
    pub discarded_chains: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    n: usize,
    #[serde(rename = "N")]
    count: usize,
    eps: f64,
    seed: u64,
    fingerprint: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    config: Option<SimConfig>,
    #[serde(default)]
    discarded_chains: usize,
}

impl SampleEnsemble {
    /// Wraps externally produced samples.
    pub fn from_points(dim: usize, points: Vec<f64>, eps: f64, fingerprint: impl Into<String>) -> Self {
        assert!(dim > 0 && points.len().is_multiple_of(dim), "points must be a whole number of rows");
        let count = points.len() / dim;
        Self {
            dim,
            points,
            eps,
            config: SimConfig {
                dt: 1.0,
                burn_in: 1.0,
                horizon: count.max(1) as f64,
                thin: 1,
                chains: 1,
                seed: 0,
            },
            fingerprint: fingerprint.into(),
            discarded_chains: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.points.chunks_exact(self.dim)
    }

    /// Column-wise mean.
    pub fn mean(&self) -> Vec<f64> {
        (0..self.dim)
            .map(|j| {
                let col: Vec<f64> = self.rows().map(|r| r[j]).collect();
                crate::numeric::pairwise_sum(&col) / col.len() as f64
            })
            .collect()
    }

    /// Writes the JSON header line followed by little-endian `f64` rows.
    pub fn write_to(&self, mut w: impl Write) -> Result<(), McError> {
        let header = Header {
            n: self.dim,
            count: self.len(),
            eps: self.eps,
            seed: self.config.seed,
            fingerprint: self.fingerprint.clone(),
            config: Some(self.config.clone()),
            discarded_chains: self.discarded_chains,
        };
        let line = serde_json::to_string(&header).map_err(|e| McError::Format(e.to_string()))?;
        w.write_all(line.as_bytes())?;
        w.write_all(b"\n")?;
        let mut buf = Vec::with_capacity(self.points.len() * 8);
        for v in &self.points {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from(r: impl Read) -> Result<Self, McError> {
        let mut r = io::BufReader::new(r);
        let mut line = String::new();
        r.read_line(&mut line)?;
        let header: Header =
            serde_json::from_str(line.trim_end()).map_err(|e| McError::Format(format!("bad header: {e}")))?;
        if header.n == 0 {
            return Err(McError::Format("dimension must be positive".into()));
        }
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        let expected = header.n * header.count * 8;
        if bytes.len() != expected {
            return Err(McError::Format(format!(
                "expected {expected} payload bytes for {} x {}, found {}",
                header.count,
                header.n,
                bytes.len()
            )));
        }
        let points = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        let config = header.config.unwrap_or(SimConfig {
            dt: 1.0,
            burn_in: 1.0,
            horizon: header.count.max(1) as f64,
            thin: 1,
            chains: 1,
            seed: header.seed,
        });
        Ok(Self {
            dim: header.n,
            points,
            eps: header.eps,
            config,
            fingerprint: header.fingerprint,
            discarded_chains: header.discarded_chains,
        })
    }
}

/// Short hex digest identifying a system description.
pub fn fingerprint(description: &str) -> String {
    let digest = Sha256::digest(description.as_bytes());
    digest[..16].iter().map(|b| format!("{b:02x}")).collect()
}

fn run_chain<F: VectorField + ?Sized>(
    field: &F,
    noise: &dyn NoiseModel,
    eps: f64,
    start: &[f64],
    cfg: &SimConfig,
    chain: usize,
) -> Option<Vec<f64>> {
    let n = field.dim();
    let m = noise.noise_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(chain as u64);
    let sqrt_dt = cfg.dt.sqrt();
    let clamp = field.nonnegative_domain();

    let mut x = start.to_vec();
    let mut drift = vec![0.0; n];
    let mut dw = vec![0.0; m];
    let mut kick = vec![0.0; n];
    let burn = cfg.burn_in_steps();
    let steps = cfg.sample_steps();
    let mut out = Vec::with_capacity(cfg.samples_per_chain() * n);

    for step in 0..burn + steps {
        field.eval_into(&x, &mut drift);
        if eps > 0.0 {
            for w in dw.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *w = z * sqrt_dt;
            }
            noise.apply(&x, &dw, &mut kick);
        }
        let mut sup = 0.0f64;
        for i in 0..n {
            let mut xi = x[i] + drift[i] * cfg.dt;
            if eps > 0.0 {
                xi += eps * kick[i];
            }
            if clamp && xi < 0.0 {
                xi = -xi;
            }
            x[i] = xi;
            sup = sup.max(xi.abs());
        }
        if !(sup <= OVERFLOW_GUARD) {
            return None;
        }
        if step >= burn && (step - burn + 1).is_multiple_of(cfg.thin) {
            out.extend_from_slice(&x);
        }
    }
    Some(out)
}

/// Euler–Maruyama ensemble: `cfg.chains` independent chains started at
/// `start`, each with its own ChaCha stream keyed by `(seed, chain)`.
pub fn simulate<F: VectorField + ?Sized>(
    field: &F,
    noise: &dyn NoiseModel,
    eps: f64,
    start: &[f64],
    cfg: &SimConfig,
    fingerprint: &str,
) -> Result<SampleEnsemble, McError> {
    cfg.validate()?;
    let n = field.dim();
    if start.len() != n {
        return Err(McError::Dimension {
            expected: n,
            found: start.len(),
        });
    }
    if noise.dim() != n {
        return Err(McError::Dimension {
            expected: n,
            found: noise.dim(),
        });
    }
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(McError::Config(format!("eps must be nonnegative, got {eps}")));
    }
    let chains: Vec<Option<Vec<f64>>> = (0..cfg.chains)
        .into_par_iter()
        .map(|c| run_chain(field, noise, eps, start, cfg, c))
        .collect();
    let discarded = chains.iter().filter(|c| c.is_none()).count();
    if discarded == cfg.chains {
        return Err(McError::AllChainsDiverged(cfg.chains));
    }
    if discarded > 0 {
        log::warn!("{discarded} of {} chains diverged and were discarded", cfg.chains);
    }
    let points = chains.into_iter().flatten().flatten().collect();
    Ok(SampleEnsemble {
        dim: n,
        points,
        eps,
        config: cfg.clone(),
        fingerprint: fingerprint.to_string(),
        discarded_chains: discarded,
    })
}
