//! Penalized selection loop, rounding repair and selection search.
//!
//! Each iteration solves the convex program with the concave penalty
//! `phi (sum t - sum t^2)` linearized at the previous selection, then
//! replaces `t` by the exact minimizer of the penalized objective for the
//! solved antenna powers. That minimizer sits at an endpoint of
//! `[P_n / p_DA, 1]` because the per-antenna cost is concave in `t_n`, so the
//! recorded penalized objective never increases.
//!
//! The relaxation lets an antenna carry a little power at a tiny fractional
//! `t_n`, which rounding removes. When the polish solve at the rounded
//! selection is infeasible, antennas are switched back on in order of their
//! relaxed power until it is feasible. The selection search then tries
//! dropping, swapping and adding single antennas with fixed-selection solves
//! and keeps every strict improvement.

use std::collections::HashSet;

use num_complex::Complex64;

use super::assemble::{assemble, Assembled, Selection};
use super::{power_report, PrecoderSolution, SelectionVector, Variant};
use crate::ci::SymbolSpec;
use crate::config::ScenarioConfig;
use crate::conic::{audit, solve, SolveResult, SolveStatus};
use crate::error::{Error, Result};
use crate::robust::StackedReal;
use crate::scenario::ChannelSet;

/// Relative decrease a search move must achieve to be accepted.
const MOVE_TOL: f64 = 1e-7;

/// Per-antenna cost `p_off + (p_on - p_off) t + phi (t - t^2)`.
fn antenna_cost(t: f64, cfg: &ScenarioConfig, phi: f64) -> f64 {
    cfg.p_off_mw + (cfg.p_on_mw - cfg.p_off_mw) * t + phi * (t - t * t)
}

/// Exact minimizer of the penalized per-antenna cost over `[P_n / p_DA, 1]`; ties go to 1.
pub fn t_step(powers: &[f64], cfg: &ScenarioConfig, phi: f64) -> Vec<f64> {
    powers
        .iter()
        .map(|&p| {
            let lo = (p / cfg.p_da_mw).clamp(0.0, 1.0);
            if antenna_cost(lo, cfg, phi) < antenna_cost(1.0, cfg, phi) { lo } else { 1.0 }
        })
        .collect()
}

/// `t_n -> on` iff `t_n >= 0.5`.
pub fn rounding(t: &[f64]) -> Vec<bool> {
    t.iter().map(|&v| v >= 0.5).collect()
}

fn penalized(u_trace: f64, t: &[f64], cfg: &ScenarioConfig, phi: f64) -> f64 {
    u_trace / cfg.alpha + t.iter().map(|&t| antenna_cost(t, cfg, phi)).sum::<f64>()
}

fn status_error(res: &SolveResult, iteration: usize) -> Error {
    match res.status {
        SolveStatus::Infeasible => Error::Infeasible { iteration },
        _ => Error::NumericalTrouble { iteration, detail: format!("{}: {}", res.status.as_str(), res.detail) },
    }
}

/// Turns a solved program into a solution. In unknown-CSI variants the AN
/// vector is read off its lift's antenna powers, phase-aligned with `u`, and
/// the lift is replaced by its outer product; both keep every constraint.
fn extract(
    variant: Variant,
    asm: &Assembled,
    res: &SolveResult,
    selection: SelectionVector,
    sym: &SymbolSpec,
    cfg: &ScenarioConfig,
) -> PrecoderSolution {
    let lay = &asm.layout;
    let mut v = res.v.clone();
    let x = StackedReal::from_vec(v[lay.x.clone()].to_vec()).expect("even length");
    let u = x.to_complex();
    let u_lift = lay.u_lift.matrix(&v, &lay.x);

    let (z, z_lift) = match (&lay.z, &lay.z_lift) {
        (Some(zr), Some(zl)) => {
            let z: Vec<Complex64> = zl
                .antenna_powers(&v)
                .iter()
                .zip(&u)
                .map(|(&p, u)| {
                    let phase = if u.norm() > 0.0 { u.arg() } else { 0.0 };
                    Complex64::from_polar(p.max(0.0).sqrt(), phase)
                })
                .collect();
            let zs = StackedReal::from_complex(&z).into_vec();
            v[zr.clone()].copy_from_slice(&zs);
            zl.set_outer(&mut v, &zs);
            (Some(z), Some(zl.matrix(&v, zr)))
        }
        _ => (None, None),
    };

    let w = match &z {
        Some(z) => crate::ci::CompositePrecoder::from_u_and_an(u.clone(), z.clone(), sym).w.expect("set"),
        None => u.clone(),
    };
    let u_sq: f64 = u.iter().map(|c| c.norm_sqr()).sum();
    let rank1_gap = (u_lift.trace() - u_sq) / u_sq.max(1.0);
    let mut sol = PrecoderSolution {
        variant,
        u,
        z,
        w,
        u_lift,
        z_lift,
        relaxed: selection.clone(),
        selection,
        repairs: 0,
        refine_moves: 0,
        multipliers: lay.multipliers.iter().map(|&i| v[i]).collect(),
        power: super::PowerBreakdown { tx_mw: 0.0, circuit_mw: 0.0, penalty_term: 0.0, total_mw: 0.0 },
        iterations: 0,
        trace: Vec::new(),
        status: res.status,
        objective: res.objective_value,
        rank1_gap,
        audit_violation: audit(&asm.prog, &v).max_violation,
        solve_time_s: res.solve_time_s,
    };
    sol.power = power_report(&sol, cfg);
    sol
}

fn check_selection(ch: &ChannelSet, on: &[bool]) -> Result<()> {
    if on.len() != ch.n() {
        return Err(Error::Dimension(format!("{} selection entries for {} antennas", on.len(), ch.n())));
    }
    Ok(())
}

fn solve_fixed(
    variant: Variant,
    ch: &ChannelSet,
    cfg: &ScenarioConfig,
    sym: &SymbolSpec,
    on: &[bool],
) -> Result<(Assembled, SolveResult)> {
    let t: Vec<f64> = on.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let asm = assemble(variant, ch, cfg, sym, Selection::Fixed(&t))?;
    let res = solve(&asm.prog);
    Ok((asm, res))
}

/// Solves `variant` with the selection fixed to `on`; no penalty.
pub fn fixed_t_solve(
    variant: Variant,
    ch: &ChannelSet,
    cfg: &ScenarioConfig,
    sym: &SymbolSpec,
    on: &[bool],
) -> Result<PrecoderSolution> {
    check_selection(ch, on)?;
    let (asm, res) = solve_fixed(variant, ch, cfg, sym, on)?;
    if res.status != SolveStatus::Optimal {
        return Err(status_error(&res, 0));
    }
    Ok(extract(variant, &asm, &res, SelectionVector::from_binary(on), sym, cfg))
}

/// Fixed-selection solves for the repair and the search; each selection is
/// solved at most once.
struct Evaluator<'a> {
    variant: Variant,
    ch: &'a ChannelSet,
    cfg: &'a ScenarioConfig,
    sym: &'a SymbolSpec,
    seen: HashSet<Vec<bool>>,
    elapsed: f64,
}

impl Evaluator<'_> {
    fn raw(&mut self, on: &[bool]) -> Result<(Assembled, SolveResult)> {
        self.seen.insert(on.to_vec());
        let (asm, res) = solve_fixed(self.variant, self.ch, self.cfg, self.sym, on)?;
        self.elapsed += res.solve_time_s;
        Ok((asm, res))
    }

    /// The solution at `on`, or `None` when it was tried before or has no optimum.
    fn candidate(&mut self, on: &[bool]) -> Result<Option<PrecoderSolution>> {
        if self.seen.contains(on) {
            return Ok(None);
        }
        let (asm, res) = self.raw(on)?;
        Ok((res.status == SolveStatus::Optimal)
            .then(|| extract(self.variant, &asm, &res, SelectionVector::from_binary(on), self.sym, self.cfg)))
    }
}

/// First-improvement search over single drops, swaps and additions.
///
/// Drops try the weakest active antennas first; swaps and additions bring in
/// inactive antennas in order of their IR channel gain.
fn refine(eval: &mut Evaluator<'_>, mut best: PrecoderSolution) -> Result<(PrecoderSolution, usize)> {
    let n = best.n();
    let gain: Vec<f64> = eval.ch.h_d_hat.iter().map(|h| h.norm_sqr()).collect();
    let mut moves = 0;
    'search: loop {
        let on = best.selection.t_rounded.clone();
        let powers = best.antenna_powers();
        let mut active: Vec<usize> = (0..n).filter(|&a| on[a]).collect();
        active.sort_by(|&a, &b| powers[a].total_cmp(&powers[b]));
        let mut idle: Vec<usize> = (0..n).filter(|&a| !on[a]).collect();
        idle.sort_by(|&a, &b| gain[b].total_cmp(&gain[a]));

        let flip = |outs: &[usize], ins: &[usize]| {
            let mut c = on.clone();
            outs.iter().for_each(|&a| c[a] = false);
            ins.iter().for_each(|&a| c[a] = true);
            c
        };
        let candidates = active
            .iter()
            .map(|&a| flip(&[a], &[]))
            .chain(active.iter().flat_map(|&a| idle.iter().map(move |&b| (a, b))).map(|(a, b)| flip(&[a], &[b])))
            .chain(idle.iter().map(|&b| flip(&[], &[b])));
        for cand in candidates {
            if let Some(sol) = eval.candidate(&cand)? {
                if sol.power.total_mw < best.power.total_mw * (1.0 - MOVE_TOL) {
                    best = sol;
                    moves += 1;
                    continue 'search;
                }
            }
        }
        return Ok((best, moves));
    }
}

/// Penalized loop from the all-on start, polish at the rounded selection,
/// feasibility repair, then the selection search when `cfg.refine` is set.
pub fn sca_solve(
    variant: Variant,
    ch: &ChannelSet,
    cfg: &ScenarioConfig,
    sym: &SymbolSpec,
) -> Result<PrecoderSolution> {
    cfg.validate()?;
    ch.check_lengths()?;
    let n = ch.n();
    let phi = cfg.penalty();
    let mut t_lin = vec![1.0; n];
    let mut powers = vec![0.0; n];
    let mut trace: Vec<f64> = Vec::new();
    let mut relaxed = None;
    let mut elapsed = 0.0;

    for it in 1..=cfg.max_sca_iters {
        let asm = assemble(variant, ch, cfg, sym, Selection::Relaxed { t_prev: &t_lin, phi })?;
        let res = solve(&asm.prog);
        elapsed += res.solve_time_s;
        if res.status != SolveStatus::Optimal {
            return Err(status_error(&res, it));
        }
        powers = asm.layout.u_lift.antenna_powers(&res.v);
        t_lin = t_step(&powers, cfg, phi);
        let obj = penalized(powers.iter().sum(), &t_lin, cfg, phi);
        let done = trace
            .last()
            .is_some_and(|&prev: &f64| (obj - prev).abs() <= cfg.conv_tol * obj.abs().max(1.0));
        trace.push(obj);
        relaxed = Some((asm, res));
        if done {
            break;
        }
    }

    let iterations = trace.len();
    let (asm, res) = relaxed.expect("at least one iteration");
    let relaxed_sel = SelectionVector::from_relaxed(t_lin);
    let mut on = relaxed_sel.t_rounded.clone();
    let mut eval = Evaluator { variant, ch, cfg, sym, seen: HashSet::new(), elapsed: 0.0 };

    let (pasm, pres) = eval.raw(&on)?;
    let mut repairs = 0;
    let mut sol = match pres.status {
        SolveStatus::Optimal => extract(variant, &pasm, &pres, SelectionVector::from_binary(&on), sym, cfg),
        SolveStatus::Infeasible => {
            let mut idle: Vec<usize> = (0..n).filter(|&a| !on[a]).collect();
            idle.sort_by(|&a, &b| powers[b].total_cmp(&powers[a]));
            let mut found = None;
            for a in idle {
                on[a] = true;
                repairs += 1;
                if let Some(s) = eval.candidate(&on)? {
                    found = Some(s);
                    break;
                }
            }
            match found {
                Some(s) => s,
                None => {
                    let mut s = extract(variant, &asm, &res, relaxed_sel.clone(), sym, cfg);
                    s.iterations = iterations;
                    s.trace = trace;
                    s.solve_time_s = elapsed + eval.elapsed;
                    return Err(Error::FallbackAllOn(Box::new(s)));
                }
            }
        }
        _ => return Err(status_error(&pres, iterations + 1)),
    };

    let mut moves = 0;
    if cfg.refine {
        (sol, moves) = refine(&mut eval, sol)?;
    }
    sol.relaxed = relaxed_sel;
    sol.repairs = repairs;
    sol.refine_moves = moves;
    sol.iterations = iterations;
    sol.trace = trace;
    sol.solve_time_s = elapsed + eval.elapsed;
    sol.power = power_report(&sol, cfg);
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn t_step_picks_endpoints() {
        let cfg = ScenarioConfig::default();
        // with a zero penalty the fractional endpoint always wins
        assert_eq!(t_step(&[100.0, 0.0], &cfg, 0.0), vec![0.1, 0.0]);
        // with a large penalty anything carrying real power switches fully on
        let t = t_step(&[100.0, 1e-9, 2000.0], &cfg, 9000.0);
        assert_eq!(t[0], 1.0);
        assert!(t[1] < 1e-9);
        assert_eq!(t[2], 1.0);
        // equal on/off power makes full activation free
        let mut flat = cfg.clone();
        flat.p_off_mw = flat.p_on_mw;
        assert_eq!(t_step(&[0.0, 10.0], &flat, 100.0), vec![1.0, 1.0]);
    }

    #[test]
    fn default_penalty_bounds_the_fraction() {
        let cfg = ScenarioConfig::default();
        let phi = cfg.penalty();
        for k in 0..=2000 {
            let p = k as f64 * 0.5;
            let t = t_step(&[p], &cfg, phi)[0];
            assert!(t.min(1.0 - t) <= crate::config::BINARY_TOL, "power {p} gives t = {t}");
        }
    }

    #[test]
    fn t_step_never_raises_cost() {
        let cfg = ScenarioConfig::default();
        for phi in [0.0, 100.0, 2000.0] {
            for p in [0.0, 1.0, 50.0, 300.0, 999.0] {
                let t = t_step(&[p], &cfg, phi)[0];
                let lo = p / cfg.p_da_mw;
                for cand in [lo, 0.5 * (lo + 1.0), 1.0] {
                    assert!(antenna_cost(t, &cfg, phi) <= antenna_cost(cand, &cfg, phi) + 1e-12);
                }
            }
        }
    }

    #[test]
    fn rounding_rule() {
        assert_eq!(rounding(&[0.0, 0.4999, 0.5, 1.0]), vec![false, false, true, true]);
    }

    #[test]
    fn penalized_objective_matches_breakdown_on_binary_t() {
        let cfg = ScenarioConfig::default();
        let v = penalized(40.0, &[1.0, 0.0, 1.0], &cfg, 123.0);
        assert_relative_eq!(v, 100.0 + 2.0 * cfg.p_on_mw + cfg.p_off_mw);
    }
}
