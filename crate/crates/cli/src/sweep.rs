use std::fmt::Write as _;

use netmeasure_core::analysis::CellStatus;
use netmeasure_core::numeric::format_significant;
use netmeasure_core::{mi_sweep, ParamRange};

use crate::error::{CliError, CliResult};
use crate::system::System;

pub const CSV_DIGITS: usize = 10;

#[derive(Debug, clap::Args)]
pub struct SweepArgs {
    /// Network file with a param block.
    pub system: String,
    /// Axis `name=start:stop:count`. Repeatable or comma-separated; the
    /// first axis varies slowest.
    #[arg(long = "vary", value_name = "NAME=A:B:N", required = true, value_delimiter = ',')]
    pub axes: Vec<ParamRange>,
    /// Interaction triple `I1;I2;O`.
    #[arg(long = "mi", value_name = "I1;I2;O")]
    pub triple: String,
    /// Write the grid here instead of stdout.
    #[arg(long, value_name = "FILE")]
    pub csv: Option<String>,
}

/// Runs the sweep and renders it as CSV: one column per axis, then `MI`
/// and `status`. Invalid cells leave `MI` empty.
pub fn run(args: &SweepArgs) -> CliResult<String> {
    let sys = System::load(&args.system)?;
    let net = sys
        .network()
        .ok_or_else(|| CliError::mismatch("sweep needs a network file with named parameters"))?;
    let (a, b, o) = sys.triple(&args.triple)?;
    let result = mi_sweep(net, &args.axes, &a, &b, &o)?;

    let mut out = String::new();
    for p in &result.params {
        out.push_str(p);
        out.push(',');
    }
    out.push_str("MI,status\n");
    for cell in &result.cells {
        for v in &cell.values {
            out.push_str(&format_significant(*v, CSV_DIGITS));
            out.push(',');
        }
        if let (CellStatus::Ok, Some(mi)) = (cell.status, cell.mi) {
            out.push_str(&format_significant(mi, CSV_DIGITS));
        }
        let _ = writeln!(out, ",{}", cell.status.as_str());
    }
    let bad = result.invalid_count();
    if bad > 0 {
        log::warn!("{bad} of {} cells invalid", result.cells.len());
    }
    Ok(out)
}
