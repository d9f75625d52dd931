use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::ci::SymbolSpec;
use crate::config::ScenarioConfig;
use crate::error::Result;
use crate::precoder::Variant;
use crate::scenario::{da_positions, draw_instance};

use super::{csv_writer, num, solve_trial};

#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapRow {
    pub antenna: usize,
    pub x_m: f64,
    pub y_m: f64,
    /// Fraction of solved trials with the antenna switched on.
    pub activation: f64,
    /// Mean radiated power over solved trials.
    pub mean_power_mw: f64,
}

/// Indices of grid antennas not on the grid's outer ring, for a full square
/// grid of side at least 3; empty otherwise.
pub fn interior_grid_indices(n_das: usize) -> Vec<usize> {
    let side = (n_das as f64).sqrt().round() as usize;
    if side * side != n_das || side < 3 {
        return Vec::new();
    }
    (0..n_das)
        .filter(|&i| {
            let (r, c) = (i / side, i % side);
            r > 0 && c > 0 && r + 1 < side && c + 1 < side
        })
        .collect()
}

/// Per-antenna activation frequency over `n_trials` random user placements.
///
/// Placements follow `cfg.edge_fraction`; trials that end without a
/// solution are left out. Writes `heatmap.csv` into `out_dir` when given.
pub fn activation_heatmap(
    cfg: &ScenarioConfig,
    variant: Variant,
    n_trials: usize,
    out_dir: Option<&Path>,
) -> Result<(Vec<HeatmapRow>, usize, Vec<PathBuf>)> {
    cfg.validate()?;
    let sym = SymbolSpec::from_config(cfg);
    let sols: Vec<_> = (0..n_trials)
        .into_par_iter()
        .map(|trial| {
            let (_, ch) = draw_instance(cfg, trial as u64);
            solve_trial(variant, &ch, cfg, &sym, false).map(|(_, s)| s)
        })
        .collect::<Result<_>>()?;
    let solved: Vec<_> = sols.into_iter().flatten().collect();
    let n = cfg.n_das;
    let denom = solved.len().max(1) as f64;
    let mut on = vec![0usize; n];
    let mut power = vec![0.0; n];
    for s in &solved {
        let p = s.antenna_powers();
        for a in 0..n {
            on[a] += s.selection.t_rounded[a] as usize;
            power[a] += p[a] / cfg.alpha;
        }
    }
    let pos = da_positions(cfg);
    let rows: Vec<HeatmapRow> = (0..n)
        .map(|a| HeatmapRow {
            antenna: a,
            x_m: pos[a].x,
            y_m: pos[a].y,
            activation: on[a] as f64 / denom,
            mean_power_mw: power[a] / denom,
        })
        .collect();

    let mut files = Vec::new();
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        let path = dir.join("heatmap.csv");
        let mut w = csv_writer(&path, cfg, &["antenna", "x_m", "y_m", "activation", "mean_power_mw", "n_solved"])?;
        for r in &rows {
            w.write_record([
                r.antenna.to_string(),
                num(r.x_m),
                num(r.y_m),
                num(r.activation),
                num(r.mean_power_mw),
                solved.len().to_string(),
            ])?;
        }
        w.flush()?;
        files.push(path);
    }
    Ok((rows, solved.len(), files))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interior_of_grids() {
        assert_eq!(interior_grid_indices(16), vec![5, 6, 9, 10]);
        assert_eq!(interior_grid_indices(9), vec![4]);
        assert!(interior_grid_indices(4).is_empty());
        assert!(interior_grid_indices(12).is_empty());
    }
}
