use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::ci::SymbolSpec;
use crate::config::{Layout, ScenarioConfig};
use crate::error::{Error, Result};
use crate::oracle::mc_validate;
use crate::precoder::Variant;
use crate::scenario::{draw_instance, rng_for, streams, trial_seed};

use super::{csv_writer, num, solve_trial, TrialStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVar {
    GammaD,
    GammaK,
    EdgeFraction,
    NumEves,
    SigmaE,
}

impl SweepVar {
    pub const ALL: [SweepVar; 5] =
        [SweepVar::GammaD, SweepVar::GammaK, SweepVar::EdgeFraction, SweepVar::NumEves, SweepVar::SigmaE];

    /// The config key the variable overrides.
    pub fn as_str(self) -> &'static str {
        match self {
            SweepVar::GammaD => "gamma_d_db",
            SweepVar::GammaK => "gamma_k_db",
            SweepVar::EdgeFraction => "edge_fraction",
            SweepVar::NumEves => "n_eves",
            SweepVar::SigmaE => "sigma_e",
        }
    }

    /// `cfg` with this variable set to `value`.
    pub fn apply(self, cfg: &ScenarioConfig, value: f64) -> Result<ScenarioConfig> {
        let mut c = cfg.clone();
        match self {
            SweepVar::GammaD => c.gamma_d_db = value,
            SweepVar::GammaK => c.gamma_k_db = value,
            SweepVar::EdgeFraction => c.edge_fraction = value,
            SweepVar::SigmaE => c.sigma_e = value,
            SweepVar::NumEves => {
                if value < 0.0 || value.fract() != 0.0 {
                    return Err(Error::Config(format!("n_eves sweep value {value} is not a count")));
                }
                c.n_eves = value as usize;
            }
        }
        c.validate()?;
        Ok(c)
    }
}

impl fmt::Display for SweepVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepVar {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        SweepVar::ALL
            .into_iter()
            .find(|v| v.as_str() == s || v.as_str().trim_end_matches("_db") == s)
            .ok_or_else(|| Error::Config(format!("unknown sweep variable '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub sweep_var: SweepVar,
    pub values: Vec<f64>,
    /// Independent channel draws per point.
    pub n_trials: usize,
    pub variants: Vec<Variant>,
    pub layouts: Vec<Layout>,
    /// Keep every antenna on (no selection).
    pub no_as: bool,
    /// Monte Carlo draws per trial for `ir_ci_prob`; zero skips it.
    pub samples: usize,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Config("sweep needs at least one value".into()));
        }
        if self.values.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Config("sweep values must be strictly increasing".into()));
        }
        if self.n_trials == 0 {
            return Err(Error::Config("sweep needs at least one trial".into()));
        }
        if self.variants.is_empty() || self.layouts.is_empty() {
            return Err(Error::Config("sweep needs at least one variant and one layout".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub layout: Layout,
    pub variant: Variant,
    pub trial: usize,
    pub status: TrialStatus,
    pub total_mw: f64,
    pub tx_mw: f64,
    pub circuit_mw: f64,
    pub active_antennas: usize,
    pub iterations: usize,
    /// `NaN` when no Monte Carlo run was requested or the trial failed.
    pub ir_ci_prob: f64,
}

impl SweepRow {
    pub fn solved(&self) -> bool {
        matches!(self.status, TrialStatus::Optimal | TrialStatus::FallbackAllOn)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub value: f64,
    pub layout: Layout,
    pub variant: Variant,
    pub n_trials: usize,
    pub n_solved: usize,
    /// `(mean, sample std)` over solved trials, in the order of [`STAT_COLUMNS`].
    pub stats: Vec<(f64, f64)>,
}

/// Per-trial quantities averaged in the summary.
pub const STAT_COLUMNS: [&str; 6] = ["total_mw", "tx_mw", "circuit_mw", "active_antennas", "iterations", "ir_ci_prob"];

impl SummaryRow {
    pub fn mean(&self, column: &str) -> Option<f64> {
        STAT_COLUMNS.iter().position(|c| *c == column).map(|i| self.stats[i].0)
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let std = if xs.len() < 2 {
        0.0
    } else {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    (mean, std)
}

/// Mean and spread per `(value, layout, variant)` over solved trials.
pub fn summarize(rows: &[SweepRow]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(usize, u8, Variant), Vec<&SweepRow>> = BTreeMap::new();
    let mut values: Vec<f64> = Vec::new();
    for r in rows {
        let vi = match values.iter().position(|&v| v == r.value) {
            Some(i) => i,
            None => {
                values.push(r.value);
                values.len() - 1
            }
        };
        groups.entry((vi, r.layout as u8, r.variant)).or_default().push(r);
    }
    groups
        .into_values()
        .map(|g| {
            let ok: Vec<&&SweepRow> = g.iter().filter(|r| r.solved()).collect();
            let col = |f: &dyn Fn(&SweepRow) -> f64| {
                let xs: Vec<f64> = ok.iter().map(|r| f(r)).filter(|x| !x.is_nan()).collect();
                mean_std(&xs)
            };
            SummaryRow {
                value: g[0].value,
                layout: g[0].layout,
                variant: g[0].variant,
                n_trials: g.len(),
                n_solved: ok.len(),
                stats: vec![
                    col(&|r| r.total_mw),
                    col(&|r| r.tx_mw),
                    col(&|r| r.circuit_mw),
                    col(&|r| r.active_antennas as f64),
                    col(&|r| r.iterations as f64),
                    col(&|r| r.ir_ci_prob),
                ],
            }
        })
        .collect()
}

/// Solves every `(value, layout, variant, trial)` combination.
///
/// Trial `i` uses the same seed at every sweep value, layout and variant,
/// so points differ only in the swept parameter. Writes `sweep.csv` and
/// `sweep_summary.csv` into `out_dir` when one is given.
pub fn run_sweep(
    cfg: &ScenarioConfig,
    spec: &SweepSpec,
    out_dir: Option<&Path>,
) -> Result<(Vec<SweepRow>, Vec<SummaryRow>, Vec<PathBuf>)> {
    cfg.validate()?;
    spec.validate()?;
    let mut jobs = Vec::new();
    for &value in &spec.values {
        for &layout in &spec.layouts {
            let mut c = spec.sweep_var.apply(cfg, value)?;
            c.layout = layout;
            for &variant in &spec.variants {
                for trial in 0..spec.n_trials {
                    jobs.push((value, c.clone(), variant, trial));
                }
            }
        }
    }
    let rows: Vec<SweepRow> = jobs
        .into_par_iter()
        .map(|(value, c, variant, trial)| {
            let sym = SymbolSpec::from_config(&c);
            let (_, ch) = draw_instance(&c, trial as u64);
            let (status, sol) = solve_trial(variant, &ch, &c, &sym, spec.no_as)?;
            let mut row = SweepRow {
                value,
                layout: c.layout,
                variant,
                trial,
                status,
                total_mw: f64::NAN,
                tx_mw: f64::NAN,
                circuit_mw: f64::NAN,
                active_antennas: 0,
                iterations: 0,
                ir_ci_prob: f64::NAN,
            };
            if let Some(sol) = sol {
                row.total_mw = sol.power.total_mw;
                row.tx_mw = sol.power.tx_mw;
                row.circuit_mw = sol.power.circuit_mw;
                row.active_antennas = sol.selection.active();
                row.iterations = sol.iterations;
                if spec.samples > 0 {
                    let mut rng = rng_for(trial_seed(c.seed, trial as u64), streams::MONTE_CARLO);
                    row.ir_ci_prob = mc_validate(&sol, &ch, &c, &sym, spec.samples, &mut rng)?.ir_ci_prob;
                }
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    let summary = summarize(&rows);

    let mut files = Vec::new();
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        let var = spec.sweep_var.as_str();
        let path = dir.join("sweep.csv");
        let mut w = csv_writer(
            &path,
            cfg,
            &[
                var,
                "layout",
                "variant",
                "no_as",
                "trial",
                "status",
                "total_mw",
                "tx_mw",
                "circuit_mw",
                "active_antennas",
                "iterations",
                "ir_ci_prob",
            ],
        )?;
        for r in &rows {
            let ok = r.solved();
            w.write_record([
                num(r.value),
                r.layout.as_str().to_string(),
                r.variant.as_str().to_string(),
                (spec.no_as as u8).to_string(),
                r.trial.to_string(),
                r.status.as_str().to_string(),
                num(r.total_mw),
                num(r.tx_mw),
                num(r.circuit_mw),
                if ok { r.active_antennas.to_string() } else { String::new() },
                if ok { r.iterations.to_string() } else { String::new() },
                num(r.ir_ci_prob),
            ])?;
        }
        w.flush()?;
        files.push(path);

        let path = dir.join("sweep_summary.csv");
        let mut header = vec![var.to_string(), "layout".into(), "variant".into(), "n_trials".into(), "n_solved".into()];
        for c in STAT_COLUMNS {
            header.push(format!("mean_{c}"));
            header.push(format!("std_{c}"));
        }
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        let mut w = csv_writer(&path, cfg, &header)?;
        for s in &summary {
            let mut rec = vec![
                num(s.value),
                s.layout.as_str().to_string(),
                s.variant.as_str().to_string(),
                s.n_trials.to_string(),
                s.n_solved.to_string(),
            ];
            for &(m, sd) in &s.stats {
                rec.push(num(m));
                rec.push(num(sd));
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        files.push(path);
    }
    Ok((rows, summary, files))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> SweepSpec {
        SweepSpec {
            sweep_var: SweepVar::GammaD,
            values: vec![0.0, 10.0],
            n_trials: 2,
            variants: vec![Variant::ImperfectProb],
            layouts: vec![Layout::DaGrid],
            no_as: false,
            samples: 0,
        }
    }

    #[test]
    fn spec_validation() {
        assert!(spec().validate().is_ok());
        let mut s = spec();
        s.values = vec![10.0, 0.0];
        assert!(s.validate().is_err());
        s.values.clear();
        assert!(s.validate().is_err());
        let mut s = spec();
        s.n_trials = 0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn variables_parse_and_apply() {
        for v in SweepVar::ALL {
            assert_eq!(v.as_str().parse::<SweepVar>().unwrap(), v);
        }
        assert_eq!("gamma_d".parse::<SweepVar>().unwrap(), SweepVar::GammaD);
        let cfg = ScenarioConfig::default();
        assert_eq!(SweepVar::NumEves.apply(&cfg, 3.0).unwrap().n_eves, 3);
        assert!(SweepVar::NumEves.apply(&cfg, 2.5).is_err());
        assert!(SweepVar::EdgeFraction.apply(&cfg, 1.5).is_err());
    }

    #[test]
    fn summary_statistics() {
        let row = |value: f64, total: f64, status: TrialStatus| SweepRow {
            value,
            layout: Layout::DaGrid,
            variant: Variant::ImperfectDet,
            trial: 0,
            status,
            total_mw: total,
            tx_mw: 1.0,
            circuit_mw: total - 1.0,
            active_antennas: 2,
            iterations: 3,
            ir_ci_prob: f64::NAN,
        };
        let rows = vec![
            row(0.0, 10.0, TrialStatus::Optimal),
            row(0.0, 14.0, TrialStatus::Optimal),
            row(0.0, f64::NAN, TrialStatus::Infeasible),
            row(5.0, 20.0, TrialStatus::FallbackAllOn),
        ];
        let s = summarize(&rows);
        assert_eq!(s.len(), 2);
        assert_eq!((s[0].n_trials, s[0].n_solved), (3, 2));
        assert_eq!(s[0].stats[0], (12.0, 8f64.sqrt()));
        assert_eq!(s[1].stats[0], (20.0, 0.0));
        assert_eq!(s[1].mean("active_antennas"), Some(2.0));
        assert!(s[0].stats[5].0.is_nan());
    }
}
