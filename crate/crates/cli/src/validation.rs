//! Empirical cross-checks of the Gaussian limit and of explicit densities.

use netmeasure_core::info::{measures_with_oracle, CachedOracle, MeasureOptions};
use netmeasure_core::mc::{knn_entropy, quadrature_entropy, EmpiricalOracle, Normalization};
use netmeasure_core::robustness::{functional_robustness, mean_square_displacement, GaussianPerformance};
use netmeasure_core::{
    builtin, multivariate_mi, EntropyOracle, mutual_information, simulate, Equilibrium, GaussianOracle, IndexSet, NoiseModel,
    OutputSelection, SampleEnsemble, SimConfig, StationaryShape,
};

use crate::error::{CliError, CliResult};
use crate::report::{Check, ValidationBlock};
use crate::system::System;

/// Sampling knobs shared by `simulate`, `validate` and `analyze --validate`.
#[derive(Debug, Clone, clap::Args)]
pub struct SampleArgs {
    /// Retained states across all chains.
    #[arg(long, default_value_t = 20_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 16)]
    pub chains: usize,
    /// Time between retained states [default: two relaxation times].
    #[arg(long)]
    pub spacing: Option<f64>,
    /// Euler–Maruyama step [default: min(1e-3, 0.1/||J||)].
    #[arg(long)]
    pub dt: Option<f64>,
    /// Discarded time per chain [default: ten relaxation times].
    #[arg(long)]
    pub burn_in: Option<f64>,
}

impl SampleArgs {
    pub fn config_at(&self, eq: &Equilibrium, seed: u64) -> SimConfig {
        let relax = 1.0 / eq.spectral_abscissa.abs().max(1e-12);
        let mut cfg = SimConfig::for_equilibrium(eq, self.samples, self.spacing.unwrap_or(2.0 * relax), self.chains, seed);
        self.override_steps(&mut cfg);
        cfg
    }

    /// Defaults for systems without a stable equilibrium.
    pub fn config_free(&self, seed: u64) -> SimConfig {
        let mut cfg = SimConfig::with_spacing(1e-3, 10.0, self.samples, self.spacing.unwrap_or(1.0), self.chains, seed);
        self.override_steps(&mut cfg);
        cfg
    }

    fn override_steps(&self, cfg: &mut SimConfig) {
        if self.dt.is_some() || self.burn_in.is_some() {
            let spacing = cfg.thin as f64 * cfg.dt;
            *cfg = SimConfig::with_spacing(
                self.dt.unwrap_or(cfg.dt),
                self.burn_in.unwrap_or(cfg.burn_in),
                self.samples,
                spacing,
                self.chains,
                cfg.seed,
            );
        }
    }
}

const MSD_REL: f64 = 0.05;
const RF_REL: f64 = 0.01;
const ENTROPY_ABS: f64 = 0.05;
const MI_REL: f64 = 0.15;
const MI_FLOOR: f64 = 0.02;
const QUADRATURE_REL: f64 = 0.05;
pub const QUADRATURE_RESOLUTION: usize = 200;

fn label(sys: &System, set: &IndexSet) -> String {
    sys.set_names(set).join(",")
}

/// Gaussian-limit predictions at `ens.eps` against the ensemble.
pub fn equilibrium_checks(
    sys: &System,
    shape: &StationaryShape,
    ens: &SampleEnsemble,
    triples: &[(IndexSet, IndexSet, IndexSet)],
    k: usize,
) -> CliResult<Vec<Check>> {
    let eps = ens.eps;
    let n = sys.dim();
    let mut checks = Vec::new();

    let msd = mean_square_displacement(ens, &shape.x0)?;
    checks.push(Check::relative("V(eps)/eps^2", shape.s.trace(), msd.v_over_eps2, MSD_REL, 0.0));

    let p = GaussianPerformance::standard(&shape.x0);
    checks.push(Check::relative(
        "R_f",
        p.gaussian_expectation(&shape.s, eps),
        functional_robustness(ens, &p, eps)?,
        RF_REL,
        0.0,
    ));

    let gauss = CachedOracle::new(GaussianOracle::new(shape.s.clone(), eps)?);
    let emp = EmpiricalOracle::new(ens, k)?;
    for i in 0..n {
        let idx = IndexSet::from([i]);
        checks.push(Check::absolute(
            format!("H({})", sys.names[i]),
            gauss.entropy(&idx)?,
            emp.entropy(&idx)?,
            ENTROPY_ABS,
        ));
    }
    if n >= 2 {
        let (a, b) = (IndexSet::from([0]), IndexSet::from([1]));
        checks.push(Check::relative(
            format!("MI({};{})", sys.names[0], sys.names[1]),
            mutual_information(&gauss, &a, &b)?,
            mutual_information(&emp, &a, &b)?,
            MI_REL,
            MI_FLOOR,
        ));
    }
    for (a, b, o) in triples {
        checks.push(Check::relative(
            format!("MI({};{};{})", label(sys, a), label(sys, b), label(sys, o)),
            multivariate_mi(&gauss, a, b, o)?,
            multivariate_mi(&emp, a, b, o)?,
            MI_REL,
            MI_FLOOR / 2.0,
        ));
    }
    Ok(checks)
}

/// Joint entropy of the limit-cycle ensemble against quadrature of its
/// explicit stationary density.
pub fn limit_cycle_checks(ens: &SampleEnsemble, k: usize) -> CliResult<Vec<Check>> {
    let q = quadrature_entropy(
        &builtin::limit_cycle_density(ens.eps),
        &builtin::limit_cycle_box(ens.eps),
        QUADRATURE_RESOLUTION,
        Normalization::Unnormalized,
    )?;
    let h = knn_entropy(ens, &IndexSet::from([0, 1, 2]), k)?;
    Ok(vec![
        Check::relative("H(x,y,z)", q.entropy, h, QUADRATURE_REL, 0.0),
        Check::absolute("quadrature resolution delta", 0.0, q.resolution_delta, 1e-3),
    ])
}

/// Simulates at `eps` from `shape.x0` and checks the Gaussian limit.
#[allow(clippy::too_many_arguments)]
pub fn validate_at(
    sys: &System,
    noise: &dyn NoiseModel,
    eq: &Equilibrium,
    shape: &StationaryShape,
    eps: f64,
    sampling: &SampleArgs,
    seed: u64,
    k: usize,
    triples: &[(IndexSet, IndexSet, IndexSet)],
    selection: Option<&OutputSelection>,
    cap: usize,
) -> CliResult<ValidationBlock> {
    if !(eps > 0.0) {
        return Err(CliError::parse(format!("validation needs eps > 0, got {eps}")));
    }
    let cfg = sampling.config_at(eq, seed);
    let ens = simulate(&*sys.field, noise, eps, &eq.point, &cfg, &sys.fingerprint(noise))?;
    let checks = equilibrium_checks(sys, shape, &ens, triples, k)?;
    let empirical_measures = match selection {
        Some(sel) => {
            let oracle = EmpiricalOracle::new(&ens, k)?;
            let opts = MeasureOptions {
                enumeration_cap: cap,
                keep_decompositions: false,
                triples: Vec::new(),
            };
            Some(measures_with_oracle(&oracle, sys.dim(), sel, &opts)?)
        }
        None => None,
    };
    Ok(ValidationBlock {
        eps,
        samples: ens.len(),
        discarded_chains: ens.discarded_chains,
        all_pass: checks.iter().all(|c| c.pass),
        checks,
        empirical_measures,
    })
}
