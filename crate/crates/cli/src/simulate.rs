use std::fs::File;
use std::io::{BufWriter, Write};

use serde::Serialize;

use netmeasure_core::dynamics::DEFAULT_EQUILIBRIUM_TOL;
use netmeasure_core::mc::DEFAULT_K;
use netmeasure_core::{gaussian_shape, simulate, SampleEnsemble, SimConfig};

use crate::error::{CliError, CliResult};
use crate::report::{Check, ValidationBlock, SCHEMA_VERSION};
use crate::system::{Kind, System};
use crate::validation::{equilibrium_checks, limit_cycle_checks, SampleArgs};

#[derive(Debug, clap::Args)]
pub struct SimulateArgs {
    /// Network file, builtin:ou[:n] or builtin:limitcycle.
    pub system: String,
    #[arg(long)]
    pub eps: f64,
    /// JSON simulation config (dt, burn_in, horizon, thin, chains, seed);
    /// overrides the sampling flags and --seed.
    #[arg(long, value_name = "FILE")]
    pub config: Option<String>,
    #[arg(long, value_name = "FILE")]
    pub out: String,
    #[arg(long, default_value = "identity")]
    pub sigma: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub sampling: SampleArgs,
}

#[derive(Debug, Serialize)]
pub struct SimulateSummary {
    pub out: String,
    pub n: usize,
    #[serde(rename = "N")]
    pub count: usize,
    pub eps: f64,
    pub fingerprint: String,
    pub discarded_chains: usize,
    pub start: Vec<f64>,
    pub config: SimConfig,
}

const LIMIT_CYCLE_START: [f64; 3] = [1.0, 0.0, 0.0];

pub fn run_simulate(args: &SimulateArgs) -> CliResult<SimulateSummary> {
    if !(args.eps >= 0.0 && args.eps.is_finite()) {
        return Err(CliError::parse(format!("--eps must be a nonnegative number, got {}", args.eps)));
    }
    let sys = System::load(&args.system)?;
    let noise = sys.noise(&args.sigma)?;
    let (start, mut cfg) = match sys.kind {
        Kind::LimitCycle => (LIMIT_CYCLE_START.to_vec(), args.sampling.config_free(args.seed)),
        _ => {
            let (eq, _) = gaussian_shape(&*sys.field, &*noise, &sys.initial_guess(), DEFAULT_EQUILIBRIUM_TOL)?;
            let cfg = args.sampling.config_at(&eq, args.seed);
            (eq.point, cfg)
        }
    };
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::parse(format!("{path}: {e}")))?;
        cfg = serde_json::from_str(&text).map_err(|e| CliError::parse(format!("{path}: {e}")))?;
    }
    let fp = sys.fingerprint(&*noise);
    let ens = simulate(&*sys.field, &*noise, args.eps, &start, &cfg, &fp)?;
    let mut w = BufWriter::new(File::create(&args.out).map_err(|e| CliError::parse(format!("{}: {e}", args.out)))?);
    ens.write_to(&mut w)?;
    w.flush()?;
    Ok(SimulateSummary {
        out: args.out.clone(),
        n: ens.dim,
        count: ens.len(),
        eps: ens.eps,
        fingerprint: fp,
        discarded_chains: ens.discarded_chains,
        start,
        config: cfg,
    })
}

#[derive(Debug, clap::Args)]
pub struct ValidateArgs {
    /// Ensemble file written by `simulate`.
    pub ensemble: String,
    /// The system the ensemble was drawn from.
    pub system: String,
    #[arg(long, default_value = "identity")]
    pub sigma: String,
    /// Interaction triple `I1;I2;O` to check as well. Repeatable.
    #[arg(long = "mi", value_name = "I1;I2;O")]
    pub triples: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_K)]
    pub k: usize,
}

#[derive(Debug, Serialize)]
pub struct ValidationReport {
    pub schema_version: &'static str,
    pub source: String,
    pub fingerprint: String,
    pub seed: u64,
    #[serde(flatten)]
    pub block: ValidationBlock,
}

pub fn run_validate(args: &ValidateArgs) -> CliResult<ValidationReport> {
    let file = File::open(&args.ensemble).map_err(|e| CliError::parse(format!("{}: {e}", args.ensemble)))?;
    let ens = SampleEnsemble::read_from(file).map_err(|e| CliError::from(e).context(&args.ensemble))?;
    let sys = System::load(&args.system)?;
    let noise = sys.noise(&args.sigma)?;
    let fp = sys.fingerprint(&*noise);
    if ens.fingerprint != fp {
        return Err(CliError::mismatch(format!(
            "ensemble fingerprint {} does not match system fingerprint {fp}",
            ens.fingerprint
        )));
    }
    if ens.dim != sys.dim() {
        return Err(CliError::mismatch(format!(
            "ensemble has {} coordinates, system has {}",
            ens.dim,
            sys.dim()
        )));
    }
    if !(ens.eps > 0.0) {
        return Err(CliError::mismatch("noiseless ensemble has no stationary spread to validate"));
    }
    let checks: Vec<Check> = match sys.kind {
        Kind::LimitCycle => limit_cycle_checks(&ens, args.k)?,
        _ => {
            let (_, shape) = gaussian_shape(&*sys.field, &*noise, &sys.initial_guess(), DEFAULT_EQUILIBRIUM_TOL)?;
            let triples = args.triples.iter().map(|t| sys.triple(t)).collect::<CliResult<Vec<_>>>()?;
            equilibrium_checks(&sys, &shape, &ens, &triples, args.k)?
        }
    };
    Ok(ValidationReport {
        schema_version: SCHEMA_VERSION,
        source: args.system.clone(),
        fingerprint: fp,
        seed: ens.config.seed,
        block: ValidationBlock {
            eps: ens.eps,
            samples: ens.len(),
            discarded_chains: ens.discarded_chains,
            all_pass: checks.iter().all(|c| c.pass),
            checks,
            empirical_measures: None,
        },
    })
}
