use rayon::prelude::*;

use crate::ci::SymbolSpec;
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::precoder::{fixed_t_solve, Variant};
use crate::scenario::ChannelSet;

/// Largest array the enumeration accepts (`2^N` fixed-selection solves).
pub const MAX_BRUTE_FORCE_N: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceEntry {
    pub t: Vec<bool>,
    /// Total power of the fixed-selection optimum; `None` when it has none.
    pub total_mw: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceResult {
    /// Minimizing selection; `None` when every entry is infeasible.
    pub best_t: Option<Vec<bool>>,
    /// `+inf` when every entry is infeasible.
    pub best_total_mw: f64,
    /// Every selection in counting order, antenna 0 as the lowest bit.
    pub table: Vec<BruteForceEntry>,
}

impl BruteForceResult {
    pub fn has_solution(&self) -> bool {
        self.best_t.is_some()
    }

    pub fn feasible_count(&self) -> usize {
        self.table.iter().filter(|e| e.total_mw.is_some()).count()
    }
}

fn selection(mask: u32, n: usize) -> Vec<bool> {
    (0..n).map(|a| mask >> a & 1 == 1).collect()
}

/// Solves every binary selection and returns the best one.
///
/// Selections whose solve ends infeasible or without an optimum are recorded
/// as infeasible; ties keep the first selection in counting order.
pub fn brute_force_selection(
    variant: Variant,
    ch: &ChannelSet,
    cfg: &ScenarioConfig,
    sym: &SymbolSpec,
) -> Result<BruteForceResult> {
    cfg.validate()?;
    ch.check_lengths()?;
    let n = ch.n();
    if n > MAX_BRUTE_FORCE_N {
        return Err(Error::Oracle(format!("brute force needs N <= {MAX_BRUTE_FORCE_N}, got {n}")));
    }
    let table: Vec<BruteForceEntry> = (0..1u32 << n)
        .into_par_iter()
        .map(|mask| {
            let t = selection(mask, n);
            let total_mw = match fixed_t_solve(variant, ch, cfg, sym, &t) {
                Ok(sol) => Some(sol.power.total_mw),
                Err(Error::Infeasible { .. } | Error::NumericalTrouble { .. }) => None,
                Err(e) => return Err(e),
            };
            Ok(BruteForceEntry { t, total_mw })
        })
        .collect::<Result<_>>()?;

    let best = table
        .iter()
        .filter_map(|e| e.total_mw.map(|p| (p, &e.t)))
        .fold(None::<(f64, &Vec<bool>)>, |acc, (p, t)| match acc {
            Some((b, _)) if b <= p => acc,
            _ => Some((p, t)),
        });
    Ok(BruteForceResult {
        best_t: best.map(|(_, t)| t.clone()),
        best_total_mw: best.map_or(f64::INFINITY, |(p, _)| p),
        table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counting_order() {
        assert_eq!(selection(0b101, 3), vec![true, false, true]);
        assert_eq!(selection(0, 2), vec![false, false]);
    }

    #[test]
    fn refuses_large_arrays() {
        let mut cfg = ScenarioConfig::default();
        cfg.n_das = 13;
        cfg.n_eves = 1;
        let (_, ch) = crate::scenario::draw_instance(&cfg, 0);
        let r = brute_force_selection(Variant::ImperfectProb, &ch, &cfg, &SymbolSpec::new(4));
        assert!(matches!(r, Err(Error::Oracle(_))));
    }
}
