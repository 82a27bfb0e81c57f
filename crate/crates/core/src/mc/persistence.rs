use serde::{Deserialize, Serialize};

use crate::analysis::{gaussian_shape, AnalysisError};
use crate::dynamics::{PerturbedField, VectorField, DEFAULT_EQUILIBRIUM_TOL};
use crate::index_set::IndexSet;
use crate::info::{degeneracy_output, CachedOracle, GaussianOracle, InfoError, DEFAULT_ENUMERATION_CAP};
use crate::lyapunov::NoiseModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersistenceRow {
    pub delta: f64,
    pub degeneracy: Option<f64>,
    /// Set when the equilibrium was lost or turned unstable at this `delta`.
    pub flagged: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersistenceTable {
    pub eps: f64,
    pub output: IndexSet,
    pub rows: Vec<PersistenceRow>,
    /// Largest `|D(δ_{i+1}) - D(δ_i)|` over consecutive valid rows.
    pub max_successive_difference: f64,
}

/// `D(O)` of `f + δ g` for each `δ` in `deltas`, continuing the equilibrium
/// from one row to the next.
pub fn persistence_probe<F: VectorField, G: VectorField>(
    field: &F,
    perturbation: &G,
    deltas: &[f64],
    eps: f64,
    output: &IndexSet,
    noise: &dyn NoiseModel,
    x_init: &[f64],
) -> Result<PersistenceTable, InfoError> {
    let n = field.dim();
    let mut seed = x_init.to_vec();
    let mut rows = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let perturbed = PerturbedField {
            base: field,
            perturbation,
            delta,
        };
        let row = match gaussian_shape(&perturbed, noise, &seed, DEFAULT_EQUILIBRIUM_TOL) {
            Ok((eq, shape)) => {
                seed = eq.point;
                let oracle = CachedOracle::new(GaussianOracle::from_shape(&shape, eps)?);
                PersistenceRow {
                    delta,
                    degeneracy: Some(degeneracy_output(&oracle, output, n, DEFAULT_ENUMERATION_CAP)?),
                    flagged: None,
                }
            }
            Err(AnalysisError::Info(e)) => return Err(e),
            Err(e) => PersistenceRow {
                delta,
                degeneracy: None,
                flagged: Some(e.to_string()),
            },
        };
        rows.push(row);
    }
    let valid: Vec<f64> = rows.iter().filter_map(|r| r.degeneracy).collect();
    let max_successive_difference = valid
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .fold(0.0, f64::max);
    Ok(PersistenceTable {
        eps,
        output: output.clone(),
        rows,
        max_successive_difference,
    })
}
