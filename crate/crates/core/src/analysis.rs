//! Equilibrium-to-measure pipeline and parameter sweeps over reaction networks.

use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsl::{mass_action_field, BindError, ReactionNetwork};
use crate::dynamics::{find_equilibrium, DynamicsError, Equilibrium, VectorField};
use crate::index_set::IndexSet;
use crate::info::{gaussian_multivariate_mi, InfoError};
use crate::lyapunov::{IdentityNoise, LyapunovError, NoiseModel, StationaryShape};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("equilibrium search failed: {0}")]
    Equilibrium(#[from] DynamicsError),
    #[error("equilibrium is not stable (spectral abscissa {0:.6e})")]
    Unstable(f64),
    #[error(transparent)]
    Lyapunov(LyapunovError),
    #[error(transparent)]
    Info(#[from] InfoError),
    #[error(transparent)]
    Bind(#[from] BindError),
    #[error("noise model has dimension {noise}, field has {field}")]
    NoiseDimension { noise: usize, field: usize },
}

impl From<LyapunovError> for AnalysisError {
    fn from(e: LyapunovError) -> Self {
        match e {
            LyapunovError::Unstable(a) => AnalysisError::Unstable(a),
            other => AnalysisError::Lyapunov(other),
        }
    }
}

/// Finds the equilibrium near `x_init`, checks stability and solves for the
/// Gaussian shape under `noise`.
pub fn gaussian_shape<F: VectorField + ?Sized>(
    field: &F,
    noise: &dyn NoiseModel,
    x_init: &[f64],
    tol: f64,
) -> Result<(Equilibrium, StationaryShape), AnalysisError> {
    if noise.dim() != field.dim() {
        return Err(AnalysisError::NoiseDimension {
            noise: noise.dim(),
            field: field.dim(),
        });
    }
    let eq = find_equilibrium(field, x_init, tol)?;
    if !eq.is_stable() {
        return Err(AnalysisError::Unstable(eq.spectral_abscissa));
    }
    let shape = StationaryShape::at_equilibrium(&eq, noise)?;
    Ok((eq, shape))
}

/// A named parameter and the values it takes in a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamRange {
    pub name: String,
    pub values: Vec<f64>,
}

impl ParamRange {
    /// `count` evenly spaced values from `start` to `stop` inclusive.
    pub fn linspace(name: impl Into<String>, start: f64, stop: f64, count: usize) -> Self {
        let values = match count {
            0 => Vec::new(),
            1 => vec![start],
            _ => (0..count)
                .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
                .collect(),
        };
        Self {
            name: name.into(),
            values,
        }
    }
}

/// Parses `name=start:stop:count`.
impl FromStr for ParamRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, spec) = s
            .split_once('=')
            .ok_or_else(|| format!("expected name=start:stop:count, got `{s}`"))?;
        let parts: Vec<&str> = spec.split(':').collect();
        let [start, stop, count] = parts.as_slice() else {
            return Err(format!("expected start:stop:count, got `{spec}`"));
        };
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("bad number `{t}`"));
        let count: usize = count
            .trim()
            .parse()
            .map_err(|_| format!("bad count `{count}`"))?;
        if count == 0 {
            return Err("count must be at least 1".into());
        }
        Ok(Self::linspace(name.trim(), num(start)?, num(stop)?, count))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Ok,
    EquilibriumLost,
    Unstable,
    Failed,
}

impl CellStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            CellStatus::Ok => "ok",
            CellStatus::EquilibriumLost => "equilibrium_lost",
            CellStatus::Unstable => "unstable",
            CellStatus::Failed => "failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    /// One value per swept parameter, in axis order.
    pub values: Vec<f64>,
    pub mi: Option<f64>,
    pub status: CellStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub params: Vec<String>,
    pub cells: Vec<SweepCell>,
}

impl SweepResult {
    pub fn invalid_count(&self) -> usize {
        self.cells.iter().filter(|c| c.status != CellStatus::Ok).count()
    }
}

/// Gaussian-limit `MI(ik; ikc; o)` at every point of the Cartesian product of
/// `grid` (first axis outermost). Each cell rebinds the rates, re-finds the
/// equilibrium from the all-ones state (falling back to the last good
/// equilibrium) and re-solves the Lyapunov equation with `sigma = Id`.
pub fn mi_sweep(
    base: &ReactionNetwork,
    grid: &[ParamRange],
    ik: &IndexSet,
    ikc: &IndexSet,
    o: &IndexSet,
) -> Result<SweepResult, AnalysisError> {
    for axis in grid {
        if base.param(&axis.name).is_none() {
            return Err(BindError::UnknownParam(axis.name.clone()).into());
        }
    }
    let n = base.dim();
    let noise = IdentityNoise(n);
    let ones = vec![1.0; n];
    let mut last_good: Option<Vec<f64>> = None;
    let mut cells = Vec::new();

    let total: usize = grid.iter().map(|a| a.values.len()).product();
    for flat in 0..total {
        let mut rem = flat;
        let mut values = vec![0.0; grid.len()];
        for (a, axis) in grid.iter().enumerate().rev() {
            values[a] = axis.values[rem % axis.values.len()];
            rem /= axis.values.len();
        }
        let mut net = base.clone();
        for (axis, &v) in grid.iter().zip(&values) {
            net = net.with_param(&axis.name, v)?;
        }
        let field = mass_action_field(&net);

        let mut attempt = gaussian_shape(&field, &noise, &ones, crate::dynamics::DEFAULT_EQUILIBRIUM_TOL);
        if matches!(attempt, Err(AnalysisError::Equilibrium(_))) {
            if let Some(prev) = &last_good {
                attempt = gaussian_shape(&field, &noise, prev, crate::dynamics::DEFAULT_EQUILIBRIUM_TOL);
            }
        }
        let cell = match attempt {
            Ok((eq, shape)) => match gaussian_multivariate_mi(&shape.s, ik, ikc, o) {
                Ok(mi) if mi.is_finite() => {
                    last_good = Some(eq.point);
                    SweepCell {
                        values,
                        mi: Some(mi),
                        status: CellStatus::Ok,
                    }
                }
                Ok(_) => SweepCell {
                    values,
                    mi: None,
                    status: CellStatus::Failed,
                },
                Err(InfoError::Overlap(a, b)) => return Err(InfoError::Overlap(a, b).into()),
                Err(InfoError::OutOfRange(a, d)) => return Err(InfoError::OutOfRange(a, d).into()),
                Err(_) => SweepCell {
                    values,
                    mi: None,
                    status: CellStatus::Failed,
                },
            },
            Err(AnalysisError::Unstable(_)) => SweepCell {
                values,
                mi: None,
                status: CellStatus::Unstable,
            },
            Err(AnalysisError::Equilibrium(_)) => SweepCell {
                values,
                mi: None,
                status: CellStatus::EquilibriumLost,
            },
            Err(_) => SweepCell {
                values,
                mi: None,
                status: CellStatus::Failed,
            },
        };
        cells.push(cell);
    }

    Ok(SweepResult {
        params: grid.iter().map(|a| a.name.clone()).collect(),
        cells,
    })
}
