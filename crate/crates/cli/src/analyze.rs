use netmeasure_core::dynamics::DEFAULT_EQUILIBRIUM_TOL;
use netmeasure_core::info::{MeasureOptions, DEFAULT_ENUMERATION_CAP};
use netmeasure_core::lyapunov::residual_tolerance;
use netmeasure_core::mc::DEFAULT_K;
use netmeasure_core::robustness::{
    functional_robustness_gaussian, uniform_robustness_index, wasserstein_robustness, FunctionalPoint,
    GaussianPerformance, QuadraticLyapunov, RobustnessReport,
};
use netmeasure_core::{eps_sigma_measures, gaussian_shape, IndexSet, OutputSelection};

use crate::error::{CliError, CliResult};
use crate::report::{
    AnalysisReport, EquilibriumBlock, InputBlock, LyapunovBlock, MeasuresBlock, Provenance, SCHEMA_VERSION,
};
use crate::system::System;
use crate::validation::{validate_at, SampleArgs};

#[derive(Debug, clap::Args)]
pub struct AnalyzeArgs {
    /// Network file or builtin:ou[:n].
    pub system: String,
    /// Output set as comma-separated species names. Repeatable.
    #[arg(long = "output-set", value_name = "NAMES")]
    pub output_sets: Vec<String>,
    /// Evaluate every proper nonempty output set (the default when no
    /// --output-set is given).
    #[arg(long, conflicts_with = "output_sets")]
    pub all_outputs: bool,
    /// Noise model: identity, scalar:c or diag:v1,...,vn.
    #[arg(long, default_value = "identity")]
    pub sigma: String,
    /// Noise levels for R_f and the empirical cross-check.
    #[arg(long, value_delimiter = ',', default_value = "0.05,0.1,0.2")]
    pub eps_ladder: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the report here instead of stdout.
    #[arg(long, value_name = "FILE")]
    pub json: Option<String>,
    /// Leave the generation time out of the provenance block.
    #[arg(long)]
    pub no_timestamp: bool,
    /// Interaction triple `I1;I2;O`. Repeatable. Without it, every pair of
    /// single input species is reported for each explicit output set.
    #[arg(long = "mi", value_name = "I1;I2;O")]
    pub triples: Vec<String>,
    /// Include the per-decomposition table for ALL runs too.
    #[arg(long)]
    pub decompositions: bool,
    /// Largest input-subset size enumerated per output set.
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    pub enumeration_cap: usize,
    /// Outer radius of the shell used for the uniform-robustness index
    /// [default: 0.1 max(1, |x0|_inf)].
    #[arg(long)]
    pub alpha_radius: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub alpha_points: usize,
    /// Simulate at every ladder level and embed Gaussian-vs-empirical deltas.
    #[arg(long)]
    pub validate: bool,
    #[arg(long, default_value_t = DEFAULT_K)]
    pub k: usize,
    #[command(flatten)]
    pub sampling: SampleArgs,
}

fn single_pairs(input: &IndexSet, o: &IndexSet) -> Vec<(IndexSet, IndexSet, IndexSet)> {
    let v: Vec<usize> = input.iter().collect();
    let mut out = Vec::new();
    for (a, &i) in v.iter().enumerate() {
        for &j in &v[a + 1..] {
            out.push((IndexSet::from([i]), IndexSet::from([j]), o.clone()));
        }
    }
    out
}

pub fn run(args: &AnalyzeArgs) -> CliResult<AnalysisReport> {
    if args.eps_ladder.is_empty() || args.eps_ladder.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(CliError::parse("--eps-ladder needs positive finite values"));
    }
    let sys = System::load(&args.system)?;
    if matches!(sys.kind, crate::system::Kind::LimitCycle) {
        return Err(CliError::new(
            crate::error::Status::Unstable,
            "builtin:limitcycle has no stable equilibrium; use simulate/validate",
        ));
    }
    let noise = sys.noise(&args.sigma)?;
    let (eq, shape) = gaussian_shape(&*sys.field, &*noise, &sys.initial_guess(), DEFAULT_EQUILIBRIUM_TOL)?;
    let n = sys.dim();

    let explicit: Vec<IndexSet> = args
        .output_sets
        .iter()
        .map(|s| sys.index_set(s))
        .collect::<CliResult<_>>()?;
    for o in &explicit {
        if o.len() == n {
            return Err(CliError::mismatch(format!(
                "output set {} leaves no inputs",
                sys.set_names(o).join(",")
            )));
        }
    }
    let selection = if explicit.is_empty() {
        OutputSelection::All
    } else {
        OutputSelection::Sets(explicit.clone())
    };
    let triples = if args.triples.is_empty() {
        explicit.iter().flat_map(|o| single_pairs(&o.complement(n), o)).collect()
    } else {
        args.triples.iter().map(|t| sys.triple(t)).collect::<CliResult<Vec<_>>>()?
    };
    let opts = MeasureOptions {
        enumeration_cap: args.enumeration_cap,
        keep_decompositions: !explicit.is_empty() || args.decompositions,
        triples: triples.clone(),
    };
    // The Gaussian-limit measures do not depend on eps.
    let table = eps_sigma_measures(&shape, args.eps_ladder[0], &selection, &opts)?;
    let output_names = table.outputs.iter().map(|m| sys.set_names(&m.output)).collect();

    let p = GaussianPerformance::standard(&shape.x0);
    let functional = args
        .eps_ladder
        .iter()
        .map(|&eps| FunctionalPoint {
            eps,
            value: functional_robustness_gaussian(&shape.s, eps, &p),
        })
        .collect();
    let radius = args
        .alpha_radius
        .unwrap_or_else(|| 0.1 * shape.x0.iter().fold(1.0f64, |m, v| m.max(v.abs())));
    let u = QuadraticLyapunov::for_jacobian(&shape.x0, &shape.jacobian)?;
    let robustness = RobustnessReport {
        wasserstein: wasserstein_robustness(&shape.s)?,
        functional,
        uniform_index: uniform_robustness_index(&*sys.field, &shape.x0, &u, radius, args.alpha_points)?,
    };

    let mut validation = Vec::new();
    if args.validate {
        for (i, &eps) in args.eps_ladder.iter().enumerate() {
            log::info!("validating at eps = {eps}");
            validation.push(validate_at(
                &sys,
                &*noise,
                &eq,
                &shape,
                eps,
                &args.sampling,
                args.seed.wrapping_add(i as u64),
                args.k,
                &triples,
                Some(&selection),
                args.enumeration_cap,
            )?);
        }
    }

    Ok(AnalysisReport {
        schema_version: SCHEMA_VERSION,
        input: InputBlock {
            source: args.system.clone(),
            fingerprint: sys.fingerprint(&*noise),
            species: sys.names.clone(),
            noise: noise.describe(),
        },
        equilibrium: EquilibriumBlock {
            x0: eq.point.clone(),
            spectral_abscissa: eq.spectral_abscissa,
            residual: eq.residual,
            iterations: eq.iterations,
        },
        lyapunov: LyapunovBlock {
            s: shape.s.row_iter().map(|r| r.iter().copied().collect()).collect(),
            residual: shape.residual,
            tolerance: residual_tolerance(&shape.diffusion),
        },
        measures: MeasuresBlock { output_names, table },
        robustness,
        validation,
        provenance: Provenance::new(args.seed, args.eps_ladder.clone(), !args.no_timestamp),
    })
}
