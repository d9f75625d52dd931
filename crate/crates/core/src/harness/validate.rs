use std::fmt::Write as _;

use crate::ci::SymbolSpec;
use crate::config::{ScenarioConfig, BINARY_TOL};
use crate::error::Result;
use crate::oracle::{brute_force_selection, mc_validate};
use crate::precoder::{PrecoderSolution, Variant};
use crate::scenario::{draw_instance, rng_for, streams, trial_seed};

use super::{solve_trial, TrialStatus};

/// Slack below `eta` accepted for Monte Carlo rates.
const MC_SLACK: f64 = 0.02;
/// Accepted relative gap of the selection loop to the enumerated optimum.
const GAP_TOL: f64 = 0.05;
/// Relative increase tolerated between successive trace values.
const TRACE_TOL: f64 = 1e-6;
const AUDIT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    fn push(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.into(), passed, detail: detail.into() });
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// One aligned line per check.
    pub fn table(&self) -> String {
        let w = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
        let mut s = String::new();
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            let _ = writeln!(s, "{tag}  {:<w$}  {}", c.name, c.detail);
        }
        s
    }
}

/// Largest relative increase between successive trace values.
pub(crate) fn worst_trace_increase(trace: &[f64]) -> f64 {
    trace
        .windows(2)
        .map(|w| (w[1] - w[0]) / w[0].abs().max(1.0))
        .fold(0.0, f64::max)
}

fn solution_checks(r: &mut ValidationReport, v: Variant, sol: &PrecoderSolution, cfg: &ScenarioConfig) {
    let inc = worst_trace_increase(&sol.trace);
    r.push(format!("{v} trace non-increasing"), inc <= TRACE_TOL, format!("worst relative increase {inc:.2e}"));
    r.push(
        format!("{v} iterations"),
        sol.iterations <= cfg.max_sca_iters,
        format!("{} of at most {}", sol.iterations, cfg.max_sca_iters),
    );
    let frac = sol.relaxed.max_fraction();
    r.push(format!("{v} binary selection"), frac <= BINARY_TOL, format!("max fraction {frac:.2e}"));
    r.push(
        format!("{v} constraint audit"),
        sol.audit_violation <= AUDIT_TOL,
        format!("max violation {:.2e}", sol.audit_violation),
    );
    if !v.knows_eves() {
        let an = sol.z_norm_sq().unwrap_or(0.0);
        let floor = cfg.p_an_mw();
        r.push(format!("{v} AN floor"), an >= floor - 1e-4, format!("||z||^2 = {an:.4} mW, floor {floor:.4} mW"));
    }
}

/// Runs the invariant suite on trial 0 of `cfg` for each variant, plus the
/// brute-force comparison on a 4-antenna, at most 2-Eve copy of it.
pub fn validate(cfg: &ScenarioConfig, variants: &[Variant], samples: usize) -> Result<ValidationReport> {
    cfg.validate()?;
    let sym = SymbolSpec::from_config(cfg);
    let (_, ch) = draw_instance(cfg, 0);
    let mut r = ValidationReport::default();

    for &v in variants {
        let (status, sol) = solve_trial(v, &ch, cfg, &sym, false)?;
        r.push(format!("{v} solve"), status == TrialStatus::Optimal, status.as_str());
        let Some(sol) = sol else { continue };
        solution_checks(&mut r, v, &sol, cfg);
        if samples == 0 {
            continue;
        }
        let mut rng = rng_for(trial_seed(cfg.seed, 0), streams::MONTE_CARLO);
        let mc = mc_validate(&sol, &ch, cfg, &sym, samples, &mut rng)?;
        let eve_min = mc.min_eve_destr_prob().unwrap_or(1.0);
        if v.is_probabilistic() {
            let bar = cfg.eta_d - MC_SLACK;
            r.push(format!("{v} IR chance"), mc.ir_ci_prob >= bar, format!("{:.4} >= {bar:.4}", mc.ir_ci_prob));
            if v.knows_eves() {
                let bar = cfg.eta_k - MC_SLACK;
                r.push(format!("{v} Eve chance"), eve_min >= bar, format!("min {eve_min:.4} >= {bar:.4}"));
            }
        } else {
            r.push(
                format!("{v} IR worst case"),
                mc.ir_violations == 0,
                format!("{} violations in {} ball draws", mc.ir_violations, mc.n_samples),
            );
            if v.knows_eves() {
                r.push(format!("{v} Eve worst case"), eve_min == 1.0, format!("min destructive rate {eve_min:.4}"));
            }
        }
    }

    let mut small = cfg.clone();
    small.n_das = 4;
    small.n_eves = cfg.n_eves.min(2);
    let (_, ch4) = draw_instance(&small, 0);
    for &v in variants {
        let bf = brute_force_selection(v, &ch4, &small, &sym)?;
        let (_, sol) = solve_trial(v, &ch4, &small, &sym, false)?;
        match (bf.has_solution(), sol) {
            (true, Some(sol)) => {
                let total = sol.power.total_mw;
                let gap = (total - bf.best_total_mw) / bf.best_total_mw;
                r.push(format!("{v} N=4 gap"), gap <= GAP_TOL, format!("{:.3}%", 100.0 * gap));
                r.push(
                    format!("{v} N=4 brute force dominates"),
                    bf.best_total_mw <= total + 1e-6,
                    format!("{:.4} <= {total:.4}", bf.best_total_mw),
                );
            }
            (has, sol) => r.push(
                format!("{v} N=4 brute force"),
                !has && sol.is_none(),
                format!("enumeration feasible: {has}, selection loop solved: {}", sol.is_some()),
            ),
        }
    }
    Ok(r)
}
