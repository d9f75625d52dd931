//! Experiment runners that persist results as CSV.
//!
//! Every file starts with one `#` line naming the config digest and seed,
//! followed by a header row. Rows are computed in parallel but written in a
//! fixed order by one writer, and no wall-clock values are written, so the
//! same config and seed give byte-identical files.

mod heatmap;
mod run;
mod sweep;
mod validate;

use std::fs::File;
use std::io::Write;
use std::path::Path;

pub use heatmap::{activation_heatmap, interior_grid_indices, HeatmapRow};
pub use run::{bruteforce, run_single, BruteforceOutput, RunOptions, RunOutput};
pub use sweep::{run_sweep, summarize, SummaryRow, SweepRow, SweepSpec, SweepVar};
pub use validate::{validate, Check, ValidationReport};

use crate::ci::SymbolSpec;
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::precoder::{fixed_t_solve, sca_solve, PrecoderSolution, Variant};
use crate::scenario::ChannelSet;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

/// Process exit status for an error that aborted a run.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::ConfigLine { .. }
        | Error::Config(_)
        | Error::UnsupportedConstellation { .. }
        | Error::InvalidProbability { .. }
        | Error::Dimension(_)
        | Error::Io(_) => EXIT_CONFIG,
        Error::Program(_)
        | Error::NumericalTrouble { .. }
        | Error::Infeasible { .. }
        | Error::FallbackAllOn(_)
        | Error::Oracle(_)
        | Error::Csv(_) => EXIT_SOLVER,
    }
}

/// How a trial ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrialStatus {
    Optimal,
    /// The rounded selection stayed infeasible after repair; all-on was solved instead.
    FallbackAllOn,
    Infeasible,
    NumericalTrouble,
}

impl TrialStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            TrialStatus::Optimal => "optimal",
            TrialStatus::FallbackAllOn => "fallback_all_on",
            TrialStatus::Infeasible => "infeasible",
            TrialStatus::NumericalTrouble => "numerical_trouble",
        }
    }
}

/// Runs the selection loop, or a single all-on solve when `no_as` is set.
///
/// A failed rounding falls back to the all-on selection. Infeasibility and
/// backend failures come back as a status; other errors propagate.
pub fn solve_trial(
    variant: Variant,
    ch: &ChannelSet,
    cfg: &ScenarioConfig,
    sym: &SymbolSpec,
    no_as: bool,
) -> Result<(TrialStatus, Option<PrecoderSolution>)> {
    let all_on = vec![true; ch.n()];
    let first = if no_as {
        fixed_t_solve(variant, ch, cfg, sym, &all_on)
    } else {
        sca_solve(variant, ch, cfg, sym)
    };
    let (status, res) = match first {
        Err(Error::FallbackAllOn(_)) => {
            (TrialStatus::FallbackAllOn, fixed_t_solve(variant, ch, cfg, sym, &all_on))
        }
        other => (TrialStatus::Optimal, other),
    };
    match res {
        Ok(sol) => Ok((status, Some(sol))),
        Err(Error::Infeasible { .. }) => Ok((TrialStatus::Infeasible, None)),
        Err(Error::NumericalTrouble { .. }) => Ok((TrialStatus::NumericalTrouble, None)),
        Err(e) => Err(e),
    }
}

/// Opens `path`, writes the provenance line and the header row.
pub(crate) fn csv_writer(path: &Path, cfg: &ScenarioConfig, header: &[&str]) -> Result<csv::Writer<File>> {
    let mut f = File::create(path)?;
    writeln!(f, "# sdap config_digest={} seed={}", cfg.digest(), cfg.seed)?;
    let mut w = csv::Writer::from_writer(f);
    w.write_record(header)?;
    Ok(w)
}

/// Shortest round-trip form; empty for a missing value.
pub(crate) fn num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x:?}")
    }
}

pub(crate) fn opt_num(x: Option<f64>) -> String {
    x.map_or_else(String::new, num)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Config("x".into())), EXIT_CONFIG);
        assert_eq!(exit_code(&Error::Infeasible { iteration: 1 }), EXIT_SOLVER);
    }

    #[test]
    fn number_format_round_trips() {
        for x in [0.1, 1.0, 1e-20, 316.227_766_016_837_9, -2.5e300] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(f64::NAN), "");
        assert_eq!(opt_num(None), "");
    }
}
