//! The four secure-precoding problems and the selection loop around them.
//!
//! Every variant minimizes `Tr(U)/alpha` plus circuit power over the stacked
//! composite precoder `x`, its lift `U` and the relaxed selection `t`.
//! Imperfect-CSI variants add keep-out constraints for every Eve; the
//! unknown-CSI variants drop them and instead force an AN component `z`
//! whose power is at least `p_AN` and, per antenna, at most the composite
//! power. Probabilistic variants compile the IR wedge through chance
//! constraints, deterministic ones through the bounded-error blocks.

mod assemble;
mod sca;

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;

pub use assemble::{assemble, Assembled, Lift, ProgramLayout, Selection};
pub use sca::{fixed_t_solve, rounding, sca_solve, t_step};

use crate::ci::SymbolSpec;
use crate::config::ScenarioConfig;
use crate::conic::SolveStatus;
use crate::error::{Error, Result};
use crate::robust::StackedReal;
use crate::scenario::{CVec, ChannelSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    ImperfectProb,
    ImperfectDet,
    UnknownProb,
    UnknownDet,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::ImperfectProb,
        Variant::ImperfectDet,
        Variant::UnknownProb,
        Variant::UnknownDet,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::ImperfectProb => "imperfect-prob",
            Variant::ImperfectDet => "imperfect-det",
            Variant::UnknownProb => "unknown-prob",
            Variant::UnknownDet => "unknown-det",
        }
    }

    /// Eve channel estimates are available.
    pub fn knows_eves(self) -> bool {
        matches!(self, Variant::ImperfectProb | Variant::ImperfectDet)
    }

    pub fn is_probabilistic(self) -> bool {
        matches!(self, Variant::ImperfectProb | Variant::UnknownProb)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown variant '{s}'")))
    }
}

/// Relaxed selection and its rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionVector {
    pub t: Vec<f64>,
    pub t_rounded: Vec<bool>,
}

impl SelectionVector {
    pub fn from_relaxed(t: Vec<f64>) -> Self {
        let t: Vec<f64> = t.into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
        let t_rounded = t.iter().map(|&v| v >= 0.5).collect();
        Self { t, t_rounded }
    }

    pub fn from_binary(on: &[bool]) -> Self {
        Self { t: on.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(), t_rounded: on.to_vec() }
    }

    /// `max_n |t_n - round(t_n)|`.
    pub fn max_fraction(&self) -> f64 {
        self.t
            .iter()
            .zip(&self.t_rounded)
            .map(|(&t, &r)| (t - if r { 1.0 } else { 0.0 }).abs())
            .fold(0.0, f64::max)
    }

    pub fn active(&self) -> usize {
        self.t_rounded.iter().filter(|&&b| b).count()
    }

    pub fn rounded_values(&self) -> Vec<f64> {
        self.t_rounded.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
    }
}

/// Power split of a solution; `total_mw` excludes the penalty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerBreakdown {
    pub tx_mw: f64,
    pub circuit_mw: f64,
    pub penalty_term: f64,
    pub total_mw: f64,
}

#[derive(Debug, Clone)]
pub struct PrecoderSolution {
    pub variant: Variant,
    pub u: CVec,
    pub z: Option<CVec>,
    pub w: CVec,
    pub u_lift: DMatrix<f64>,
    pub z_lift: Option<DMatrix<f64>>,
    /// Binary selection of the returned precoder.
    pub selection: SelectionVector,
    /// Relaxed selection at the end of the penalized loop and its rounding;
    /// equal to `selection` for fixed-selection solves.
    pub relaxed: SelectionVector,
    /// Antennas switched on after rounding to restore feasibility.
    pub repairs: usize,
    /// Improving moves accepted by the selection search.
    pub refine_moves: usize,
    pub multipliers: Vec<f64>,
    pub power: PowerBreakdown,
    pub iterations: usize,
    /// Penalized objective after each selection iteration.
    pub trace: Vec<f64>,
    pub status: SolveStatus,
    /// Objective of the final convex solve.
    pub objective: f64,
    /// `(Tr(U) - ||u||^2) / max(1, ||u||^2)`.
    pub rank1_gap: f64,
    /// Largest normalized constraint violation at the returned point.
    pub audit_violation: f64,
    pub solve_time_s: f64,
}

impl PrecoderSolution {
    /// A solution with outer-product lifts and a binary selection, for
    /// evaluating externally supplied precoders.
    pub fn from_precoder(
        variant: Variant,
        u: CVec,
        z: Option<CVec>,
        on: &[bool],
        sym: &SymbolSpec,
        cfg: &ScenarioConfig,
    ) -> Self {
        let outer = |v: &[Complex64]| {
            let s = StackedReal::from_complex(v);
            let x = nalgebra::DVector::from_column_slice(s.as_slice());
            &x * x.transpose()
        };
        let w = match &z {
            Some(z) => crate::ci::CompositePrecoder::from_u_and_an(u.clone(), z.clone(), sym).w.unwrap(),
            None => u.clone(),
        };
        let mut sol = Self {
            variant,
            u_lift: outer(&u),
            z_lift: z.as_deref().map(outer),
            u,
            z,
            w,
            selection: SelectionVector::from_binary(on),
            relaxed: SelectionVector::from_binary(on),
            repairs: 0,
            refine_moves: 0,
            multipliers: Vec::new(),
            power: PowerBreakdown { tx_mw: 0.0, circuit_mw: 0.0, penalty_term: 0.0, total_mw: 0.0 },
            iterations: 0,
            trace: Vec::new(),
            status: SolveStatus::Optimal,
            objective: f64::NAN,
            rank1_gap: 0.0,
            audit_violation: f64::NAN,
            solve_time_s: 0.0,
        };
        sol.power = power_report(&sol, cfg);
        sol.objective = sol.power.total_mw;
        sol
    }

    pub fn n(&self) -> usize {
        self.u.len()
    }

    /// `Tr(U F_n)` for every antenna.
    pub fn antenna_powers(&self) -> Vec<f64> {
        antenna_powers(&self.u_lift)
    }

    pub fn u_norm_sq(&self) -> f64 {
        self.u.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn z_norm_sq(&self) -> Option<f64> {
        self.z.as_ref().map(|z| z.iter().map(|c| c.norm_sqr()).sum())
    }
}

/// Diagonal pair sums of a stacked lift.
pub fn antenna_powers(lift: &DMatrix<f64>) -> Vec<f64> {
    let n = lift.nrows() / 2;
    (0..n).map(|i| lift[(i, i)] + lift[(n + i, n + i)]).collect()
}

/// Power split: transmit power from the lift, circuit power from the binary
/// selection, penalty from the relaxed selection.
pub fn power_report(sol: &PrecoderSolution, cfg: &ScenarioConfig) -> PowerBreakdown {
    let tx_mw = sol.u_lift.trace().max(0.0) / cfg.alpha;
    let circuit_mw = sol
        .selection
        .t_rounded
        .iter()
        .map(|&on| if on { cfg.p_on_mw } else { cfg.p_off_mw })
        .sum();
    let penalty_term = cfg.penalty() * sol.relaxed.t.iter().map(|t| t - t * t).sum::<f64>();
    PowerBreakdown { tx_mw, circuit_mw, penalty_term: penalty_term.max(0.0), total_mw: tx_mw + circuit_mw }
}

/// Channels rotated into the symbol's reference frame, `h exp(-j phi_d)`.
pub(crate) fn rotate(h: &[Complex64], sym: &SymbolSpec) -> CVec {
    let r = Complex64::from_polar(1.0, -sym.phi_d);
    h.iter().map(|h| h * r).collect()
}

pub(crate) fn check_channels(ch: &ChannelSet) -> Result<()> {
    ch.check_lengths()
}
