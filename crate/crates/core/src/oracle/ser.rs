use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use statrs::function::erf::erfc;

use crate::ci::{ci_margin, noiseless_rx, SymbolSpec};
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::scenario::{complex_normal, ChannelSet, CVec};

/// Where the precoder for each constellation point comes from.
pub enum PrecoderSource<'a> {
    /// Rotate one reference solution designed for `sym` onto every phase.
    Rotate { u: &'a [Complex64], sym: SymbolSpec },
    /// Call the builder once per constellation point.
    Resolve(&'a dyn Fn(&SymbolSpec) -> Result<CVec>),
}

impl PrecoderSource<'_> {
    /// One precoder per standard phase of an `m_psk` constellation, in index order.
    pub fn precoders(&self, m_psk: usize) -> Result<Vec<CVec>> {
        (0..m_psk)
            .map(|i| {
                let target = SymbolSpec::with_index(m_psk, i);
                match self {
                    PrecoderSource::Rotate { u, sym } => {
                        let r = Complex64::from_polar(1.0, target.phi_d - sym.phi_d);
                        Ok(u.iter().map(|u| u * r).collect())
                    }
                    PrecoderSource::Resolve(build) => build(&target),
                }
            })
            .collect()
    }
}

/// Index of the standard phase `(2i + 1) pi / M` whose decision sector holds `y`.
pub fn nearest_phase_index(y: Complex64, m_psk: usize) -> usize {
    let a = y.arg().rem_euclid(2.0 * PI);
    ((a * m_psk as f64 / (2.0 * PI)).floor() as usize).min(m_psk - 1)
}

/// Wedge margin of every constellation point under its own precoder.
pub fn per_symbol_margins(h: &[Complex64], precoders: &[CVec], sigma_n: f64, gamma_lin: f64) -> Vec<f64> {
    let m = precoders.len();
    precoders
        .iter()
        .enumerate()
        .map(|(i, u)| ci_margin(h, u, &SymbolSpec::with_index(m, i), sigma_n, gamma_lin))
        .collect()
}

/// Symbol error rate of nearest-phase detection over `h` with noise std
/// `sigma_n`; `precoders[i]` carries symbol `i` and symbols are uniform.
pub fn ser_with_noise(
    h: &[Complex64],
    precoders: &[CVec],
    sigma_n: f64,
    n_symbols: usize,
    rng: &mut impl Rng,
) -> f64 {
    let m = precoders.len();
    let rx: Vec<Complex64> = precoders.iter().map(|u| noiseless_rx(h, u)).collect();
    let var = sigma_n * sigma_n;
    let errors = (0..n_symbols)
        .filter(|_| {
            let i = rng.random_range(0..m);
            nearest_phase_index(rx[i] + complex_normal(rng, var), m) != i
        })
        .count();
    errors as f64 / n_symbols.max(1) as f64
}

/// IR symbol error rate of the configured constellation.
///
/// The IR sees its true channel when the set carries one, otherwise the
/// estimate.
pub fn ser_sim(
    source: &PrecoderSource<'_>,
    ch: &ChannelSet,
    cfg: &ScenarioConfig,
    n_symbols: usize,
    rng: &mut impl Rng,
) -> Result<f64> {
    if n_symbols == 0 {
        return Err(Error::Oracle("at least one symbol is required".into()));
    }
    let precoders = source.precoders(cfg.m_psk)?;
    let h = ch.h_d_true.as_ref().unwrap_or(&ch.h_d_hat);
    if precoders.iter().any(|u| u.len() != h.len()) {
        return Err(Error::Dimension("precoder and channel lengths differ".into()));
    }
    Ok(ser_with_noise(h, &precoders, ch.sigma_n(), n_symbols, rng))
}

/// Gaussian tail `Q(x) = erfc(x / sqrt 2) / 2`.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Symbol error rate of QPSK detection in AWGN at symbol SNR
/// `snr_lin`: `2Q(sqrt snr) - Q(sqrt snr)^2`.
pub fn qpsk_awgn_ser(snr_lin: f64) -> f64 {
    let q = q_function(snr_lin.sqrt());
    2.0 * q - q * q
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::rng_for;
    use approx::assert_relative_eq;

    #[test]
    fn decision_sectors() {
        for m in [2, 4, 8, 16] {
            for i in 0..m {
                let s = SymbolSpec::with_index(m, i);
                assert_eq!(nearest_phase_index(s.rotation() * 3.0, m), i);
            }
        }
        assert_eq!(nearest_phase_index(Complex64::new(1.0, -1e-9), 4), 3);
    }

    #[test]
    fn q_function_values() {
        assert_relative_eq!(q_function(0.0), 0.5, max_relative = 1e-14);
        // Q(1.96) = 0.0249979
        assert_relative_eq!(q_function(1.96), 0.024_997_895, max_relative = 1e-6);
        assert_relative_eq!(qpsk_awgn_ser(0.0), 0.75, max_relative = 1e-14);
    }

    #[test]
    fn qpsk_reference_matches_simulation() {
        // Unit channel, amplitude sqrt(snr) at phase pi/4: exactly the AWGN setup.
        let snr: f64 = 4.0;
        let h = vec![Complex64::new(1.0, 0.0)];
        let sym = SymbolSpec::new(4);
        let u = vec![sym.rotation() * snr.sqrt()];
        let pre = PrecoderSource::Rotate { u: &u, sym }.precoders(4).unwrap();
        let n = 200_000;
        let ser = ser_with_noise(&h, &pre, 1.0, n, &mut rng_for(3, 4));
        let p = qpsk_awgn_ser(snr);
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((ser - p).abs() < 4.0 * se, "ser {ser} vs {p}");
    }

    #[test]
    fn silent_precoder_guesses() {
        let h = vec![Complex64::new(1.0, 0.0); 2];
        for m in [2, 4, 8] {
            let pre = vec![vec![Complex64::new(0.0, 0.0); 2]; m];
            let ser = ser_with_noise(&h, &pre, 1.0, 40_000, &mut rng_for(7, 4));
            let expect = (m - 1) as f64 / m as f64;
            assert!((ser - expect).abs() < 0.015, "M={m}: {ser}");
        }
    }

    #[test]
    fn noiseless_feasible_point_never_errs() {
        let h = vec![Complex64::new(0.4, 0.3), Complex64::new(-0.2, 1.0)];
        let sym = SymbolSpec::new(8);
        let g: f64 = h.iter().map(|h| h.norm_sqr()).sum();
        let u: CVec = h.iter().map(|h| h.conj() * sym.rotation() * (2.0 / g)).collect();
        let pre = PrecoderSource::Rotate { u: &u, sym }.precoders(8).unwrap();
        assert!(per_symbol_margins(&h, &pre, 1.0, 1.0).iter().all(|&m| m > 0.0));
        assert_eq!(ser_with_noise(&h, &pre, 1e-6, 10_000, &mut rng_for(1, 4)), 0.0);
    }

    #[test]
    fn rotation_preserves_margins_exactly() {
        let h = vec![Complex64::new(0.9, -0.3), Complex64::new(0.1, 0.6), Complex64::new(-0.5, 0.2)];
        let sym = SymbolSpec::with_index(4, 2);
        let u = vec![Complex64::new(0.3, 0.7), Complex64::new(-1.1, 0.2), Complex64::new(0.4, 0.4)];
        let base = ci_margin(&h, &u, &sym, 1.0, 2.0);
        let pre = PrecoderSource::Rotate { u: &u, sym }.precoders(4).unwrap();
        for m in per_symbol_margins(&h, &pre, 1.0, 2.0) {
            assert!((m - base).abs() <= 1e-12 * base.abs().max(1.0));
        }
    }
}
