use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::ci::{ci_sinr, margin_of_point, rotated_rx, SymbolSpec};
use crate::config::ScenarioConfig;
use crate::conic::SolveStatus;
use crate::error::{Error, Result};
use crate::precoder::PrecoderSolution;
use crate::scenario::{complex_normal, ChannelSet, CVec};

/// Smallest sample count a report must have to back an acceptance decision.
pub const MIN_ACCEPTED_SAMPLES: usize = 1000;

/// Samples per batch; each batch owns one generator stream.
const BATCH: usize = 4096;

/// How channel errors are drawn around the estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ErrorModel {
    /// Independent `CN(0, sigma_e^2)` per entry.
    Gaussian { sigma_e: f64 },
    /// `||[e_R; e_I]|| <= radius` per user; even samples on the sphere, odd
    /// samples uniform in the ball.
    Ball { radius: f64 },
}

impl ErrorModel {
    /// Gaussian errors for chance-constrained variants, ball errors otherwise.
    pub fn for_solution(sol: &PrecoderSolution, ch: &ChannelSet, cfg: &ScenarioConfig) -> Self {
        if sol.variant.is_probabilistic() {
            ErrorModel::Gaussian { sigma_e: ch.sigma_e }
        } else {
            ErrorModel::Ball { radius: cfg.ball_radius() }
        }
    }

    fn perturb(&self, h: &[Complex64], sample: usize, rng: &mut ChaCha8Rng) -> CVec {
        match *self {
            ErrorModel::Gaussian { sigma_e } => {
                let var = sigma_e * sigma_e;
                h.iter().map(|h| h + complex_normal(rng, var)).collect()
            }
            ErrorModel::Ball { radius } => {
                let dim = 2 * h.len();
                let g: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
                let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
                let r = if sample % 2 == 0 {
                    radius
                } else {
                    radius * rng.random::<f64>().powf(1.0 / dim as f64)
                };
                let s = if norm > 0.0 { r / norm } else { 0.0 };
                let n = h.len();
                h.iter()
                    .enumerate()
                    .map(|(i, h)| h + Complex64::new(s * g[i], s * g[n + i]))
                    .collect()
            }
        }
    }
}

/// Empirical region and SINR statistics under channel errors.
#[derive(Debug, Clone, PartialEq)]
pub struct McReport {
    pub n_samples: usize,
    /// Fraction of draws with the IR in its constructive wedge at `gamma_d`.
    pub ir_ci_prob: f64,
    /// Per Eve, fraction of draws in the destructive region at `gamma_k`.
    pub eve_destr_prob: Vec<f64>,
    /// Per Eve, fraction of draws with CI SINR above `gamma_k`.
    pub eve_sinr_exceed_prob: Vec<f64>,
    /// Mean IR wedge margin.
    pub mean_margin: f64,
    /// Largest IR wedge violation `max(0, -margin)` over all draws.
    pub worst_violation: f64,
    /// Number of draws with the IR outside its wedge.
    pub ir_violations: usize,
}

impl McReport {
    pub fn accepted(&self) -> bool {
        self.n_samples >= MIN_ACCEPTED_SAMPLES
    }

    /// Binomial standard error of `ir_ci_prob`.
    pub fn ir_ci_std_error(&self) -> f64 {
        let p = self.ir_ci_prob;
        (p * (1.0 - p) / self.n_samples as f64).sqrt()
    }

    pub fn min_eve_destr_prob(&self) -> Option<f64> {
        self.eve_destr_prob.iter().copied().reduce(f64::min)
    }
}

#[derive(Clone)]
struct Tally {
    ir_ok: usize,
    destr: Vec<usize>,
    exceed: Vec<usize>,
    margin_sum: f64,
    worst: f64,
}

impl Tally {
    fn new(k: usize) -> Self {
        Self { ir_ok: 0, destr: vec![0; k], exceed: vec![0; k], margin_sum: 0.0, worst: 0.0 }
    }

    fn merge(mut self, o: &Tally) -> Self {
        self.ir_ok += o.ir_ok;
        self.destr.iter_mut().zip(&o.destr).for_each(|(a, b)| *a += b);
        self.exceed.iter_mut().zip(&o.exceed).for_each(|(a, b)| *a += b);
        self.margin_sum += o.margin_sum;
        self.worst = self.worst.max(o.worst);
        self
    }
}

/// Monte Carlo check of a solution with the error model matching its variant.
///
/// Errors are drawn around `ch.h_d_hat` and `ch.h_k_hat`; the seed for the
/// batch streams is taken from `rng`.
pub fn mc_validate(
    sol: &PrecoderSolution,
    ch: &ChannelSet,
    cfg: &ScenarioConfig,
    sym: &SymbolSpec,
    n_samples: usize,
    rng: &mut impl Rng,
) -> Result<McReport> {
    require_optimal(sol)?;
    let model = ErrorModel::for_solution(sol, ch, cfg);
    mc_validate_with(&sol.u, ch, cfg, sym, model, n_samples, rng)
}

/// Monte Carlo check of a composite precoder under an explicit error model.
///
/// Batches run in parallel, each on its own stream of a generator seeded
/// once from `rng`, and are reduced in batch order, so the report depends
/// only on the seed.
pub fn mc_validate_with(
    u: &[Complex64],
    ch: &ChannelSet,
    cfg: &ScenarioConfig,
    sym: &SymbolSpec,
    model: ErrorModel,
    n_samples: usize,
    rng: &mut impl Rng,
) -> Result<McReport> {
    ch.check_lengths()?;
    if u.len() != ch.n() {
        return Err(Error::Dimension(format!("precoder has {} entries, channels {}", u.len(), ch.n())));
    }
    if n_samples == 0 {
        return Err(Error::Oracle("at least one Monte Carlo sample is required".into()));
    }
    let base: u64 = rng.random();
    let (gd, gk, sn) = (cfg.gamma_d(), cfg.gamma_k(), ch.sigma_n());
    let k = ch.k();
    let n_batches = n_samples.div_ceil(BATCH);

    let tallies: Vec<Tally> = (0..n_batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(base);
            rng.set_stream(b as u64);
            let mut t = Tally::new(k);
            let lo = b * BATCH;
            for s in lo..(lo + BATCH).min(n_samples) {
                let hd = model.perturb(&ch.h_d_hat, s, &mut rng);
                let m = margin_of_point(rotated_rx(&hd, u, sym), sym, sn, gd);
                if m >= 0.0 {
                    t.ir_ok += 1;
                }
                t.margin_sum += m;
                t.worst = t.worst.max(-m);
                for (e, h) in ch.h_k_hat.iter().enumerate() {
                    let he = model.perturb(h, s, &mut rng);
                    if margin_of_point(rotated_rx(&he, u, sym), sym, sn, gk) < 0.0 {
                        t.destr[e] += 1;
                    }
                    if ci_sinr(&he, u, sn) > gk {
                        t.exceed[e] += 1;
                    }
                }
            }
            t
        })
        .collect();
    let total = tallies.iter().fold(Tally::new(k), |acc, t| acc.merge(t));

    let frac = |c: usize| c as f64 / n_samples as f64;
    Ok(McReport {
        n_samples,
        ir_ci_prob: frac(total.ir_ok),
        eve_destr_prob: total.destr.iter().map(|&c| frac(c)).collect(),
        eve_sinr_exceed_prob: total.exceed.iter().map(|&c| frac(c)).collect(),
        mean_margin: total.margin_sum / n_samples as f64,
        worst_violation: total.worst,
        ir_violations: n_samples - total.ir_ok,
    })
}

/// Rotated received points of the first `n` draws, IR first then each Eve;
/// user 0 is the IR and user `k + 1` is Eve `k`.
pub fn sample_points(
    u: &[Complex64],
    ch: &ChannelSet,
    sym: &SymbolSpec,
    model: ErrorModel,
    n: usize,
    rng: &mut impl Rng,
) -> Vec<(usize, Complex64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng.random());
    let mut out = Vec::with_capacity(n * (ch.k() + 1));
    for s in 0..n {
        let users = std::iter::once(&ch.h_d_hat).chain(&ch.h_k_hat);
        for (user, h) in users.enumerate() {
            let hp = model.perturb(h, s, &mut rng);
            out.push((user, rotated_rx(&hp, u, sym)));
        }
    }
    out
}

fn require_optimal(sol: &PrecoderSolution) -> Result<()> {
    if sol.status != SolveStatus::Optimal {
        return Err(Error::Oracle(format!("solution status is {:?}, not optimal", sol.status)));
    }
    Ok(())
}
