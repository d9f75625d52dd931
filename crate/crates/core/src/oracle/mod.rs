//! Independent checks of solver output.
//!
//! Nothing here calls into the program assembly except [`brute_force_selection`],
//! which only uses fixed-selection solves. Every other check works on the
//! returned precoder and fresh channel draws.

mod brute;
mod mc;
mod ser;

pub use brute::{brute_force_selection, BruteForceEntry, BruteForceResult, MAX_BRUTE_FORCE_N};
pub use mc::{mc_validate, mc_validate_with, sample_points, ErrorModel, McReport, MIN_ACCEPTED_SAMPLES};
pub use ser::{
    nearest_phase_index, per_symbol_margins, q_function, qpsk_awgn_ser, ser_sim,
    ser_with_noise, PrecoderSource,
};

use crate::ci::conventional_sinr;
use crate::config::ScenarioConfig;
use crate::precoder::PrecoderSolution;
use crate::scenario::ChannelSet;

/// SINRs with AN counted as interference, at the estimated channels.
///
/// Reporting only; without an explicit AN part the whole composite precoder
/// is treated as the information signal.
pub fn conventional_sinr_report(sol: &PrecoderSolution, ch: &ChannelSet, _cfg: &ScenarioConfig) -> (f64, Vec<f64>) {
    let zero = vec![num_complex::Complex64::new(0.0, 0.0); sol.n()];
    let z = sol.z.as_deref().unwrap_or(&zero);
    let sn = ch.sigma_n();
    let ir = conventional_sinr(&ch.h_d_hat, &sol.w, z, sn);
    let eves = ch.h_k_hat.iter().map(|h| conventional_sinr(h, &sol.w, z, sn)).collect();
    (ir, eves)
}
