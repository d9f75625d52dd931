//! Constructive-interference geometry for M-PSK.
//!
//! All region tests work on the received point rotated back by the symbol
//! phase, `r = h^T u * exp(-j phi_d)`, so one reference precoder serves every
//! symbol by rotation. SINR thresholds are linear here; convert dB values at
//! the call site.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::scenario::CVec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolSpec {
    pub m_psk: usize,
    pub phi_d: f64,
    pub theta: f64,
}

impl SymbolSpec {
    /// First standard PSK phase `pi / M`.
    pub fn new(m_psk: usize) -> Self {
        Self::with_index(m_psk, 0)
    }

    /// Standard phase `(2i + 1) pi / M`.
    pub fn with_index(m_psk: usize, i: usize) -> Self {
        let m = m_psk as f64;
        Self {
            m_psk,
            phi_d: (2 * (i % m_psk) + 1) as f64 * PI / m,
            theta: PI / m,
        }
    }

    pub fn with_phase(m_psk: usize, phi_d: f64) -> Self {
        Self { phi_d, ..Self::new(m_psk) }
    }

    pub fn from_config(cfg: &crate::ScenarioConfig) -> Self {
        match cfg.symbol_phase {
            Some(phi) => Self::with_phase(cfg.m_psk, phi),
            None => Self::new(cfg.m_psk),
        }
    }

    pub fn tan_theta(&self) -> f64 {
        self.theta.tan()
    }

    pub fn rotation(&self) -> Complex64 {
        Complex64::from_polar(1.0, self.phi_d)
    }

    /// All M standard phases of this constellation.
    pub fn phases(&self) -> Vec<f64> {
        (0..self.m_psk)
            .map(|i| Self::with_index(self.m_psk, i).phi_d)
            .collect()
    }
}

/// `u = w + z exp(-j phi_d)`; `w` and `z` are absent when only `u` is optimized.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositePrecoder {
    pub u: CVec,
    pub w: Option<CVec>,
    pub z: Option<CVec>,
}

impl CompositePrecoder {
    pub fn from_u(u: CVec) -> Self {
        Self { u, w: None, z: None }
    }

    /// Builds `u` from the precoder and AN parts.
    pub fn from_parts(w: CVec, z: CVec, sym: &SymbolSpec) -> Self {
        let rot = Complex64::from_polar(1.0, -sym.phi_d);
        let u = w.iter().zip(&z).map(|(w, z)| w + z * rot).collect();
        Self { u, w: Some(w), z: Some(z) }
    }

    /// Recovers `w = u - z exp(-j phi_d)`.
    pub fn from_u_and_an(u: CVec, z: CVec, sym: &SymbolSpec) -> Self {
        let rot = Complex64::from_polar(1.0, -sym.phi_d);
        let w = u.iter().zip(&z).map(|(u, z)| u - z * rot).collect();
        Self { u, w: Some(w), z: Some(z) }
    }

    /// Largest `|u - (w + z exp(-j phi_d))|` entry, zero when a part is missing.
    pub fn consistency_error(&self, sym: &SymbolSpec) -> f64 {
        match (&self.w, &self.z) {
            (Some(w), Some(z)) => {
                let rot = Complex64::from_polar(1.0, -sym.phi_d);
                self.u
                    .iter()
                    .zip(w.iter().zip(z))
                    .map(|(u, (w, z))| (u - w - z * rot).norm())
                    .fold(0.0, f64::max)
            }
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Constructive,
    Destructive,
}

/// Unconjugated inner product `h^T u`.
pub fn noiseless_rx(h: &[Complex64], u: &[Complex64]) -> Complex64 {
    debug_assert_eq!(h.len(), u.len());
    h.iter().zip(u).map(|(h, u)| h * u).sum()
}

/// Received point rotated into the reference frame of the symbol.
pub fn rotated_rx(h: &[Complex64], u: &[Complex64], sym: &SymbolSpec) -> Complex64 {
    noiseless_rx(h, u) * Complex64::from_polar(1.0, -sym.phi_d)
}

/// Wedge margin of an already-rotated point.
pub fn margin_of_point(r: Complex64, sym: &SymbolSpec, sigma_n: f64, gamma_lin: f64) -> f64 {
    (r.re - sigma_n * gamma_lin.sqrt()) * sym.tan_theta() - r.im.abs()
}

/// `(Re r - sigma_n sqrt(gamma)) tan(theta) - |Im r|`; nonnegative inside the
/// constructive wedge for SINR target `gamma_lin`.
pub fn ci_margin(
    h: &[Complex64],
    u: &[Complex64],
    sym: &SymbolSpec,
    sigma_n: f64,
    gamma_lin: f64,
) -> f64 {
    margin_of_point(rotated_rx(h, u, sym), sym, sigma_n, gamma_lin)
}

pub fn classify(
    h: &[Complex64],
    u: &[Complex64],
    sym: &SymbolSpec,
    sigma_n: f64,
    gamma_lin: f64,
) -> Region {
    classify_point(rotated_rx(h, u, sym), sym, sigma_n, gamma_lin)
}

/// Boundary points are constructive.
pub fn classify_point(r: Complex64, sym: &SymbolSpec, sigma_n: f64, gamma_lin: f64) -> Region {
    if margin_of_point(r, sym, sigma_n, gamma_lin) >= 0.0 {
        Region::Constructive
    } else {
        Region::Destructive
    }
}

/// CI-aware SINR `|h^T u|^2 / sigma_n^2`, counting AN as useful signal.
pub fn ci_sinr(h: &[Complex64], u: &[Complex64], sigma_n: f64) -> f64 {
    noiseless_rx(h, u).norm_sqr() / (sigma_n * sigma_n)
}

/// Conventional SINR with AN treated as interference.
pub fn conventional_sinr(h: &[Complex64], w: &[Complex64], z: &[Complex64], sigma_n: f64) -> f64 {
    noiseless_rx(h, w).norm_sqr() / (sigma_n * sigma_n + noiseless_rx(h, z).norm_sqr())
}
