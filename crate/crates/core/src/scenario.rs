//! Deployments, path loss and imperfect-CSI channel draws.
//!
//! Channels are stored in noise-normalized units: an entry `h` here is the
//! physical amplitude divided by the receiver noise std, so `|h^T u|^2` with
//! `u` in sqrt(mW) is directly an SNR. The CSI error std `sigma_e` lives in the
//! same unitless scale.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::config::{Layout, ScenarioConfig};

pub type CVec = Vec<Complex64>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Deployment {
    pub da_positions: Vec<Point>,
    pub ir_position: Point,
    pub eve_positions: Vec<Point>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub h_d_hat: CVec,
    pub h_k_hat: Vec<CVec>,
    pub h_d_true: Option<CVec>,
    pub h_k_true: Option<Vec<CVec>>,
    pub sigma_e: f64,
    /// Physical noise power (mW) the channels were normalized by.
    pub noise_mw: f64,
}

impl ChannelSet {
    pub fn n(&self) -> usize {
        self.h_d_hat.len()
    }

    pub fn k(&self) -> usize {
        self.h_k_hat.len()
    }

    /// Noise std in the channel scale; always one after normalization.
    pub fn sigma_n(&self) -> f64 {
        1.0
    }

    /// Estimated channels only, with the given error std (for hand-built instances).
    pub fn from_estimates(h_d_hat: CVec, h_k_hat: Vec<CVec>, sigma_e: f64) -> Self {
        Self {
            h_d_hat,
            h_k_hat,
            h_d_true: None,
            h_k_true: None,
            sigma_e,
            noise_mw: 1.0,
        }
    }

    pub fn check_lengths(&self) -> crate::Result<()> {
        let n = self.n();
        let bad = self.h_k_hat.iter().any(|h| h.len() != n)
            || self.h_d_true.as_ref().is_some_and(|h| h.len() != n)
            || self
                .h_k_true
                .as_ref()
                .is_some_and(|hs| hs.len() != self.k() || hs.iter().any(|h| h.len() != n));
        if n == 0 || bad {
            return Err(crate::Error::Dimension(format!(
                "channel vectors must all have length N = {n} > 0"
            )));
        }
        Ok(())
    }
}

/// Seeded generator for one named stream of one experiment.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream ids used by the experiment runners.
pub mod streams {
    pub const DEPLOYMENT: u64 = 1;
    pub const CHANNELS: u64 = 2;
    pub const MONTE_CARLO: u64 = 3;
    pub const SYMBOLS: u64 = 4;
}

/// Width of the boundary ring users are placed in when sent to the edge.
pub fn edge_ring_width(cfg: &ScenarioConfig) -> f64 {
    0.1 * cfg.cell_side_m
}

pub fn in_edge_ring(p: &Point, cfg: &ScenarioConfig) -> bool {
    let s = cfg.cell_side_m;
    let margin = p.x.min(p.y).min(s - p.x).min(s - p.y);
    (0.0..=edge_ring_width(cfg)).contains(&margin)
}

/// Equal-margin grid coordinate `side * (2i + 1) / (2g)`.
fn grid_coord(side: f64, i: usize, g: usize) -> f64 {
    side * (2 * i + 1) as f64 / (2 * g) as f64
}

pub fn da_positions(cfg: &ScenarioConfig) -> Vec<Point> {
    let n = cfg.n_das;
    let s = cfg.cell_side_m;
    match cfg.layout {
        Layout::CaCenter => vec![Point::new(s / 2.0, s / 2.0); n],
        Layout::DaGrid => {
            let g = (n as f64).sqrt().ceil() as usize;
            (0..g)
                .flat_map(|row| (0..g).map(move |col| (row, col)))
                .take(n)
                .map(|(row, col)| Point::new(grid_coord(s, col, g), grid_coord(s, row, g)))
                .collect()
        }
    }
}

fn sample_ring(rng: &mut impl Rng, cfg: &ScenarioConfig) -> Point {
    let s = cfg.cell_side_m;
    loop {
        let p = Point::new(rng.random_range(0.0..=s), rng.random_range(0.0..=s));
        if in_edge_ring(&p, cfg) {
            return p;
        }
    }
}

fn sample_interior(rng: &mut impl Rng, cfg: &ScenarioConfig) -> Point {
    let w = edge_ring_width(cfg);
    let s = cfg.cell_side_m;
    Point::new(rng.random_range(w..s - w), rng.random_range(w..s - w))
}

/// Places DAs, the IR and the Eves. Users are ordered IR first, then Eves;
/// the first `round(edge_fraction * (K + 1))` of them go to the boundary ring.
pub fn make_deployment(cfg: &ScenarioConfig) -> Deployment {
    let mut rng = rng_for(cfg.seed, streams::DEPLOYMENT);
    make_deployment_with(cfg, &mut rng)
}

pub fn make_deployment_with(cfg: &ScenarioConfig, rng: &mut impl Rng) -> Deployment {
    let users = cfg.n_eves + 1;
    let n_edge = (cfg.edge_fraction * users as f64).round() as usize;
    let mut positions: Vec<Point> = (0..users)
        .map(|i| {
            if i < n_edge {
                sample_ring(rng, cfg)
            } else {
                sample_interior(rng, cfg)
            }
        })
        .collect();
    let eve_positions = positions.split_off(1);
    Deployment {
        da_positions: da_positions(cfg),
        ir_position: positions[0],
        eve_positions,
    }
}

/// Log-distance path loss in dB; distances below the reference distance are clamped to it.
pub fn path_loss_db(d: f64, cfg: &ScenarioConfig) -> f64 {
    let d = d.max(cfg.pl_d0_m);
    cfg.pl0_db + 10.0 * cfg.pl_exponent * (d / cfg.pl_d0_m).log10()
}

/// Linear power gain of the path, `10^(-PL/10)`.
pub fn path_gain(d: f64, cfg: &ScenarioConfig) -> f64 {
    10f64.powf(-path_loss_db(d, cfg) / 10.0)
}

/// Receiver noise power `10^(psd/10) * bandwidth` in mW.
pub fn noise_power(cfg: &ScenarioConfig) -> f64 {
    10f64.powf(cfg.noise_psd_dbm_hz / 10.0) * cfg.bandwidth_hz
}

/// One draw of `CN(0, var)`.
pub fn complex_normal(rng: &mut impl Rng, var: f64) -> Complex64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

fn user_channel(dep: &Deployment, user: &Point, cfg: &ScenarioConfig, rng: &mut impl Rng) -> CVec {
    let noise = noise_power(cfg);
    dep.da_positions
        .iter()
        .map(|da| {
            let amp = (path_gain(da.dist(user), cfg) / noise).sqrt();
            complex_normal(rng, 1.0) * amp
        })
        .collect()
}

fn estimate(h_true: &[Complex64], sigma_e: f64, rng: &mut impl Rng) -> CVec {
    h_true
        .iter()
        .map(|h| h - complex_normal(rng, sigma_e * sigma_e))
        .collect()
}

/// Draws true Rayleigh-faded channels and their estimates `h_hat = h_true - e`.
pub fn draw_channels(dep: &Deployment, cfg: &ScenarioConfig, rng: &mut impl Rng) -> ChannelSet {
    let h_d_true = user_channel(dep, &dep.ir_position, cfg, rng);
    let h_k_true: Vec<CVec> = dep
        .eve_positions
        .iter()
        .map(|p| user_channel(dep, p, cfg, rng))
        .collect();
    let h_d_hat = estimate(&h_d_true, cfg.sigma_e, rng);
    let h_k_hat = h_k_true
        .iter()
        .map(|h| estimate(h, cfg.sigma_e, rng))
        .collect();
    ChannelSet {
        h_d_hat,
        h_k_hat,
        h_d_true: Some(h_d_true),
        h_k_true: Some(h_k_true),
        sigma_e: cfg.sigma_e,
        noise_mw: noise_power(cfg),
    }
}

/// Seed of trial `trial` of an experiment seeded by `seed`.
pub fn trial_seed(seed: u64, trial: u64) -> u64 {
    seed.wrapping_add(trial.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Deployment plus channels for trial `trial` of the experiment seeded by `cfg.seed`.
pub fn draw_instance(cfg: &ScenarioConfig, trial: u64) -> (Deployment, ChannelSet) {
    let seed = trial_seed(cfg.seed, trial);
    let mut dep_rng = rng_for(seed, streams::DEPLOYMENT);
    let dep = make_deployment_with(cfg, &mut dep_rng);
    let mut ch_rng = rng_for(seed, streams::CHANNELS);
    let ch = draw_channels(&dep, cfg, &mut ch_rng);
    (dep, ch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn grid_of_sixteen_has_equal_margins() {
        let cfg = ScenarioConfig::default();
        let pts = da_positions(&cfg);
        assert_eq!(pts.len(), 16);
        let coords = [12.5, 37.5, 62.5, 87.5];
        for (i, p) in pts.iter().enumerate() {
            assert_relative_eq!(p.x, coords[i % 4]);
            assert_relative_eq!(p.y, coords[i / 4]);
        }
    }

    #[test]
    fn truncated_grid_keeps_first_points() {
        let cfg = ScenarioConfig { n_das: 8, ..Default::default() };
        let pts = da_positions(&cfg);
        assert_eq!(pts.len(), 8);
        let third = 100.0 / 6.0;
        assert_relative_eq!(pts[0].x, third);
        assert_relative_eq!(pts[7].x, 3.0 * third);
        assert_relative_eq!(pts[7].y, 5.0 * third);
    }

    #[test]
    fn co_located_layout_is_centered() {
        let cfg = ScenarioConfig { layout: Layout::CaCenter, ..Default::default() };
        assert!(make_deployment(&cfg)
            .da_positions
            .iter()
            .all(|p| *p == Point::new(50.0, 50.0)));
    }

    #[test]
    fn edge_fraction_one_puts_everyone_on_the_ring() {
        let cfg = ScenarioConfig { edge_fraction: 1.0, ..Default::default() };
        for trial in 0..20 {
            let (dep, _) = draw_instance(&cfg, trial);
            assert!(in_edge_ring(&dep.ir_position, &cfg));
            assert!(dep.eve_positions.iter().all(|p| in_edge_ring(p, &cfg)));
        }
    }

    #[test]
    fn edge_fraction_zero_keeps_users_inside() {
        let cfg = ScenarioConfig::default();
        let dep = make_deployment(&cfg);
        let all = std::iter::once(&dep.ir_position).chain(&dep.eve_positions);
        for p in all {
            assert!(!in_edge_ring(p, &cfg) || {
                // the closed ring boundary itself has measure zero
                let w = edge_ring_width(&cfg);
                (p.x - w).abs() < 1e-12 || (p.y - w).abs() < 1e-12
            });
        }
    }

    #[test]
    fn noise_power_values() {
        let cfg = ScenarioConfig::default();
        assert_relative_eq!(noise_power(&cfg), 10f64.powf(-11.4), max_relative = 1e-12);
        let wide = ScenarioConfig { bandwidth_hz: 2e6, ..Default::default() };
        assert_relative_eq!(noise_power(&wide), 2.0 * noise_power(&cfg), max_relative = 1e-12);
        let unit = ScenarioConfig { bandwidth_hz: 1.0, ..Default::default() };
        assert_relative_eq!(noise_power(&unit), 10f64.powf(-17.4), max_relative = 1e-12);
    }

    #[test]
    fn zero_error_estimates_are_exact() {
        let cfg = ScenarioConfig { sigma_e: 0.0, n_eves: 2, ..Default::default() };
        let (_, ch) = draw_instance(&cfg, 0);
        assert_eq!(Some(&ch.h_d_hat), ch.h_d_true.as_ref());
        assert_eq!(Some(&ch.h_k_hat), ch.h_k_true.as_ref());
    }

    #[test]
    fn path_loss_depends_on_distance_only_and_clamps() {
        let cfg = ScenarioConfig::default();
        let da = Point::new(50.0, 50.0);
        let a = Point::new(60.0, 50.0);
        let b = Point::new(50.0, 40.0);
        assert_eq!(path_gain(da.dist(&a), &cfg), path_gain(da.dist(&b), &cfg));
        assert_eq!(path_loss_db(0.0, &cfg), cfg.pl0_db);
        assert!(path_loss_db(0.0, &cfg).is_finite());
    }

    #[test]
    fn error_variance_matches_sigma_e() {
        let cfg = ScenarioConfig { sigma_e: 0.05, ..Default::default() };
        let mut rng = rng_for(11, 0);
        let n = 100_000;
        let mean: f64 = (0..n)
            .map(|_| complex_normal(&mut rng, cfg.sigma_e * cfg.sigma_e).norm_sqr())
            .sum::<f64>()
            / n as f64;
        assert_relative_eq!(mean, 0.0025, max_relative = 0.01);
    }

    #[test]
    fn seeded_instances_are_reproducible() {
        let cfg = ScenarioConfig { n_eves: 3, edge_fraction: 0.5, ..Default::default() };
        assert_eq!(draw_instance(&cfg, 4), draw_instance(&cfg, 4));
        assert_ne!(draw_instance(&cfg, 4).1, draw_instance(&cfg, 5).1);
    }
}
