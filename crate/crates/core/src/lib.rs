//! Degeneracy, complexity and robustness of networked dynamical systems.
//!
//! The exact path linearizes a drift field at a stable equilibrium, solves the
//! Lyapunov equation for the small-noise Gaussian shape and evaluates every
//! measure from principal log-determinants. The empirical path simulates the
//! noisy system and feeds nearest-neighbor entropy estimates through the same
//! measure code.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub use nalgebra;

pub mod analysis;
pub mod builtin;
pub mod dsl;
pub mod dynamics;
pub mod index_set;
pub mod info;
pub mod lyapunov;
pub mod mc;
pub mod numeric;
pub mod robustness;

pub use analysis::{gaussian_shape, mi_sweep, AnalysisError, ParamRange, SweepResult};
pub use dsl::{mass_action_field, parse_network, MassActionField, ParseError, ReactionNetwork};
pub use dynamics::{find_equilibrium, jacobian, spectral_abscissa, Equilibrium, FnField, VectorField};
pub use index_set::IndexSet;
pub use info::{
    complexity_output, degeneracy_output, eps_sigma_measures, gaussian_entropy, multivariate_mi,
    mutual_information, DecompositionMeasures, EntropyOracle, GaussianOracle, OutputSelection,
};
pub use lyapunov::{principal_logdet, solve_lyapunov, IdentityNoise, NoiseModel, StationaryShape};
pub use mc::{simulate, SampleEnsemble, SimConfig};
