use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::McError;

/// Largest tensor grid evaluated in one pass.
const MAX_GRID_POINTS: usize = 200_000_000;
const MASS_TOLERANCE: f64 = 1e-6;

/// Whether the supplied density already integrates to one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// Checked: the box integral must be within `1e-6` of one.
    Normalized,
    /// Normalized numerically; checked by the mass in the outermost cell layer.
    Unnormalized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureEntropy {
    /// Entropy at the fine resolution.
    pub entropy: f64,
    /// Entropy at half the resolution.
    pub coarse: f64,
    /// `|entropy - coarse|`.
    pub resolution_delta: f64,
    /// Box integral of the density as supplied (fine grid).
    pub mass: f64,
    pub resolution: usize,
}

struct Pass {
    mass: f64,
    u_log_u: f64,
    boundary_mass: f64,
}

fn midpoint_pass(density: &(dyn Fn(&[f64]) -> f64 + Sync), bounds: &[(f64, f64)], res: usize) -> Pass {
    let d = bounds.len();
    let h: Vec<f64> = bounds.iter().map(|(a, b)| (b - a) / res as f64).collect();
    let cell: f64 = h.iter().product();
    let inner = res.pow(d as u32 - 1);
    // one slab per index of the first axis, reduced in order
    let slabs: Vec<(f64, f64, f64)> = (0..res)
        .into_par_iter()
        .map(|i0| {
            let mut x = vec![0.0; d];
            x[0] = bounds[0].0 + (i0 as f64 + 0.5) * h[0];
            let (mut m, mut ul, mut bm) = (0.0, 0.0, 0.0);
            for flat in 0..inner {
                let mut rem = flat;
                let mut on_edge = i0 == 0 || i0 == res - 1;
                for k in 1..d {
                    let ik = rem % res;
                    rem /= res;
                    on_edge |= ik == 0 || ik == res - 1;
                    x[k] = bounds[k].0 + (ik as f64 + 0.5) * h[k];
                }
                let u = density(&x);
                if u > 0.0 {
                    m += u;
                    ul += u * u.ln();
                    if on_edge {
                        bm += u;
                    }
                }
            }
            (m, ul, bm)
        })
        .collect();
    let (m, ul, bm) = slabs
        .iter()
        .fold((0.0, 0.0, 0.0), |(a, b, c), &(x, y, z)| (a + x, b + y, c + z));
    Pass {
        mass: m * cell,
        u_log_u: ul * cell,
        boundary_mass: bm * cell,
    }
}

fn entropy_of(pass: &Pass) -> f64 {
    // -∫ (u/Z) log(u/Z) = log Z - (1/Z) ∫ u log u
    pass.mass.ln() - pass.u_log_u / pass.mass
}

/// `-∫ u log u` over a box by tensor midpoint quadrature at `resolution`
/// cells per axis, cross-checked against half the resolution.
pub fn quadrature_entropy(
    density: &(dyn Fn(&[f64]) -> f64 + Sync),
    bounds: &[(f64, f64)],
    resolution: usize,
    normalization: Normalization,
) -> Result<QuadratureEntropy, McError> {
    if bounds.is_empty() || bounds.iter().any(|(a, b)| !(b > a)) {
        return Err(McError::Config("quadrature box needs nonempty increasing bounds".into()));
    }
    if resolution < 4 {
        return Err(McError::Config("quadrature resolution must be at least 4".into()));
    }
    let total = (resolution as f64).powi(bounds.len() as i32);
    if total > MAX_GRID_POINTS as f64 {
        return Err(McError::Config(format!(
            "quadrature grid of {total:.3e} points exceeds the {MAX_GRID_POINTS:e} limit"
        )));
    }
    let fine = midpoint_pass(density, bounds, resolution);
    let coarse = midpoint_pass(density, bounds, resolution / 2);
    if !(fine.mass > 0.0 && fine.mass.is_finite()) {
        return Err(McError::MassDeficit("density integrates to zero on the box".into()));
    }
    match normalization {
        Normalization::Normalized if (fine.mass - 1.0).abs() > MASS_TOLERANCE => {
            return Err(McError::MassDeficit(format!(
                "box integral {:.9} differs from 1 by more than {MASS_TOLERANCE:e}",
                fine.mass
            )))
        }
        Normalization::Unnormalized if fine.boundary_mass > MASS_TOLERANCE * fine.mass => {
            return Err(McError::MassDeficit(format!(
                "{:.3e} of the mass sits in the boundary layer",
                fine.boundary_mass / fine.mass
            )))
        }
        _ => {}
    }
    let entropy = entropy_of(&fine);
    let coarse_entropy = entropy_of(&coarse);
    Ok(QuadratureEntropy {
        entropy,
        coarse: coarse_entropy,
        resolution_delta: (entropy - coarse_entropy).abs(),
        mass: fine.mass,
        resolution,
    })
}
