use std::path::{Path, PathBuf};

use crate::ci::SymbolSpec;
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::oracle::{
    brute_force_selection, conventional_sinr_report, mc_validate, sample_points, BruteForceResult, ErrorModel,
    McReport,
};
use crate::precoder::{PrecoderSolution, Variant};
use crate::scenario::{draw_instance, rng_for, streams, trial_seed, Deployment};

use super::{csv_writer, num, opt_num, solve_trial, TrialStatus};

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub variant: Variant,
    /// Monte Carlo draws for the report; zero skips it.
    pub samples: usize,
    /// Solve with every antenna on instead of running the selection loop.
    pub no_as: bool,
    /// Draws per user written to `constellation.csv`.
    pub points: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { variant: Variant::ImperfectProb, samples: 10_000, no_as: false, points: 500 }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub status: TrialStatus,
    pub deployment: Deployment,
    pub solution: PrecoderSolution,
    pub report: Option<McReport>,
    pub files: Vec<PathBuf>,
}

/// Solves trial 0 of `cfg` and writes `solution.csv`, `summary.csv`,
/// `trace.csv`, `mc_report.csv` and `constellation.csv` into `out_dir`.
pub fn run_single(cfg: &ScenarioConfig, opts: &RunOptions, out_dir: &Path) -> Result<RunOutput> {
    cfg.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let sym = SymbolSpec::from_config(cfg);
    let (dep, ch) = draw_instance(cfg, 0);
    let (status, sol) = solve_trial(opts.variant, &ch, cfg, &sym, opts.no_as)?;
    let sol = sol.ok_or_else(|| match status {
        TrialStatus::Infeasible => Error::Infeasible { iteration: 0 },
        _ => Error::NumericalTrouble { iteration: 0, detail: status.as_str().into() },
    })?;
    let mut files = Vec::new();

    let path = out_dir.join("solution.csv");
    let mut w = csv_writer(
        &path,
        cfg,
        &["antenna", "x_m", "y_m", "u_re", "u_im", "w_re", "w_im", "z_re", "z_im", "t_relaxed", "t", "power_mw"],
    )?;
    let powers = sol.antenna_powers();
    for a in 0..sol.n() {
        let z = sol.z.as_ref().map(|z| z[a]);
        w.write_record([
            a.to_string(),
            num(dep.da_positions[a].x),
            num(dep.da_positions[a].y),
            num(sol.u[a].re),
            num(sol.u[a].im),
            num(sol.w[a].re),
            num(sol.w[a].im),
            opt_num(z.map(|z| z.re)),
            opt_num(z.map(|z| z.im)),
            num(sol.relaxed.t[a]),
            (sol.selection.t_rounded[a] as u8).to_string(),
            num(powers[a] / cfg.alpha),
        ])?;
    }
    w.flush()?;
    files.push(path);

    let path = out_dir.join("summary.csv");
    let mut w = csv_writer(
        &path,
        cfg,
        &[
            "variant",
            "status",
            "total_mw",
            "tx_mw",
            "circuit_mw",
            "penalty_term",
            "active_antennas",
            "iterations",
            "repairs",
            "refine_moves",
            "max_fraction",
            "rank1_gap",
            "audit_violation",
            "an_power_mw",
        ],
    )?;
    w.write_record([
        opts.variant.as_str().to_string(),
        status.as_str().to_string(),
        num(sol.power.total_mw),
        num(sol.power.tx_mw),
        num(sol.power.circuit_mw),
        num(sol.power.penalty_term),
        sol.selection.active().to_string(),
        sol.iterations.to_string(),
        sol.repairs.to_string(),
        sol.refine_moves.to_string(),
        num(sol.relaxed.max_fraction()),
        num(sol.rank1_gap),
        num(sol.audit_violation),
        opt_num(sol.z_norm_sq()),
    ])?;
    w.flush()?;
    files.push(path);

    let path = out_dir.join("trace.csv");
    let mut w = csv_writer(&path, cfg, &["iteration", "objective"])?;
    for (i, v) in sol.trace.iter().enumerate() {
        w.write_record([(i + 1).to_string(), num(*v)])?;
    }
    w.flush()?;
    files.push(path);

    let seed = trial_seed(cfg.seed, 0);
    let report = if opts.samples > 0 {
        let report = mc_validate(&sol, &ch, cfg, &sym, opts.samples, &mut rng_for(seed, streams::MONTE_CARLO))?;
        let path = out_dir.join("mc_report.csv");
        write_report(&path, cfg, &sol, &ch, &report)?;
        files.push(path);
        Some(report)
    } else {
        None
    };

    if opts.points > 0 {
        let model = ErrorModel::for_solution(&sol, &ch, cfg);
        let pts = sample_points(&sol.u, &ch, &sym, model, opts.points, &mut rng_for(seed, streams::SYMBOLS));
        let path = out_dir.join("constellation.csv");
        let mut w = csv_writer(&path, cfg, &["user", "role", "gamma_lin", "theta", "re", "im"])?;
        for (user, r) in pts {
            let (role, gamma) = if user == 0 { ("ir", cfg.gamma_d()) } else { ("eve", cfg.gamma_k()) };
            w.write_record([user.to_string(), role.into(), num(gamma), num(sym.theta), num(r.re), num(r.im)])?;
        }
        w.flush()?;
        files.push(path);
    }

    Ok(RunOutput { status, deployment: dep, solution: sol, report, files })
}

fn write_report(
    path: &Path,
    cfg: &ScenarioConfig,
    sol: &PrecoderSolution,
    ch: &crate::scenario::ChannelSet,
    r: &McReport,
) -> Result<()> {
    let mut w = csv_writer(
        path,
        cfg,
        &[
            "user",
            "role",
            "gamma_db",
            "region",
            "region_prob",
            "sinr_exceed_prob",
            "conventional_sinr",
            "mean_margin",
            "worst_violation",
            "n_samples",
        ],
    )?;
    let (ir_sinr, eve_sinr) = conventional_sinr_report(sol, ch, cfg);
    w.write_record([
        "0".to_string(),
        "ir".into(),
        num(cfg.gamma_d_db),
        "constructive".into(),
        num(r.ir_ci_prob),
        String::new(),
        num(ir_sinr),
        num(r.mean_margin),
        num(r.worst_violation),
        r.n_samples.to_string(),
    ])?;
    for k in 0..r.eve_destr_prob.len() {
        w.write_record([
            (k + 1).to_string(),
            "eve".into(),
            num(cfg.gamma_k_db),
            "destructive".into(),
            num(r.eve_destr_prob[k]),
            num(r.eve_sinr_exceed_prob[k]),
            num(eve_sinr[k]),
            String::new(),
            String::new(),
            r.n_samples.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct BruteforceOutput {
    pub result: BruteForceResult,
    /// Total of the selection loop on the same instance, when it found a solution.
    pub sca_total_mw: Option<f64>,
    pub files: Vec<PathBuf>,
}

/// Enumerates every selection of trial 0 and writes `bruteforce.csv`.
pub fn bruteforce(cfg: &ScenarioConfig, opts: &RunOptions, out_dir: &Path) -> Result<BruteforceOutput> {
    cfg.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let sym = SymbolSpec::from_config(cfg);
    let (_, ch) = draw_instance(cfg, 0);
    let result = brute_force_selection(opts.variant, &ch, cfg, &sym)?;
    let (_, sca) = solve_trial(opts.variant, &ch, cfg, &sym, false)?;
    let sca_total_mw = sca.map(|s| s.power.total_mw);

    let path = out_dir.join("bruteforce.csv");
    let mut w = csv_writer(&path, cfg, &["selection", "active_antennas", "feasible", "total_mw", "is_best"])?;
    for e in &result.table {
        let bits: String = e.t.iter().map(|&b| if b { '1' } else { '0' }).collect();
        let best = result.best_t.as_ref() == Some(&e.t);
        w.write_record([
            bits,
            e.t.iter().filter(|&&b| b).count().to_string(),
            (e.total_mw.is_some() as u8).to_string(),
            opt_num(e.total_mw),
            (best as u8).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(BruteforceOutput { result, sca_total_mw, files: vec![path] })
}
