//! Scenario configuration and the flat `key = value` file format.
//!
//! Every field of [`ScenarioConfig`] is addressable by its exact name. Lines
//! starting with `#` are comments; a `#` after a value starts a trailing
//! comment. Unknown keys are rejected so typos never silently fall back to a
//! default.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    /// Antennas on a uniform grid across the cell.
    DaGrid,
    /// All antennas co-located at the cell center.
    CaCenter,
}

/// Inverse-CDF used to turn an outage probability into a cone scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuantileKind {
    /// Standard normal quantile.
    Normal,
    /// Inverse of `erf`, i.e. `(2/sqrt(pi)) * int_0^x exp(-t^2) dt` read literally as a CDF.
    ErfLiteral,
}

/// Diagonal covariance used for the Gaussian chance constraints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovarianceMode {
    /// `(1 + tan theta)^2 sigma_e^2` on every diagonal entry.
    PaperVerbatim,
    /// `(sigma_e^2 / 2)(1 + tan^2 theta)`, the exact variance of the linear form.
    DerivedExact,
}

/// Worst-case compilation of the deterministic (bounded-error) constraints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SprocMode {
    /// Block-diagonal S-procedure LMIs with one multiplier per half-plane.
    PaperFaithful,
    /// Exact worst case over the error ball `||[e_R; e_I]|| <= sigma`, as an SOC.
    NormRobust,
}

/// How the outage budget of one wedge is shared between its two half-planes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChanceSplit {
    /// Each half-plane at `(1 + eta) / 2`; the union bound gives the wedge `eta`.
    Joint,
    /// Each half-plane at `eta`; the wedge itself may fall below `eta`.
    PerSide,
}

/// Cone used to hand the probabilistic IR/Eve constraints to the backend.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockForm {
    Soc,
    /// Schur-complement arrow LMI of size `2N + 1`.
    Lmi,
}

/// Storage of the precoder and AN lifts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LiftForm {
    /// Full symmetric `2N x 2N` lift tied to its vector by a Schur LMI.
    Full,
    /// One power variable per antenna bounded below by that antenna's
    /// squared amplitude. Only per-antenna powers of a lift enter any
    /// constraint or the objective, so both forms have the same optimum.
    Diagonal,
}

macro_rules! keyword_enum {
    ($ty:ident { $($text:literal => $variant:ident),+ $(,)? }) => {
        impl FromStr for $ty {
            type Err = String;
            fn from_str(s: &str) -> std::result::Result<Self, String> {
                match s.trim().to_ascii_lowercase().as_str() {
                    $($text => Ok($ty::$variant),)+
                    other => Err(format!(
                        "unknown {} `{}` (expected one of: {})",
                        stringify!($ty),
                        other,
                        [$($text),+].join(", ")
                    )),
                }
            }
        }

        impl $ty {
            pub fn as_str(&self) -> &'static str {
                match self {
                    $($ty::$variant => $text,)+
                }
            }
        }

        impl std::fmt::Display for $ty {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

keyword_enum!(Layout { "da_grid" => DaGrid, "ca_center" => CaCenter });
keyword_enum!(QuantileKind { "normal" => Normal, "erf_literal" => ErfLiteral });
keyword_enum!(CovarianceMode { "paper_verbatim" => PaperVerbatim, "derived_exact" => DerivedExact });
keyword_enum!(SprocMode { "paper_faithful" => PaperFaithful, "norm_robust" => NormRobust });
keyword_enum!(ChanceSplit { "joint" => Joint, "per_side" => PerSide });
keyword_enum!(BlockForm { "soc" => Soc, "lmi" => Lmi });
keyword_enum!(LiftForm { "full" => Full, "diagonal" => Diagonal });

/// Geometry, power, constellation, robustness and solver parameters of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub cell_side_m: f64,
    pub n_das: usize,
    pub n_eves: usize,
    pub layout: Layout,
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub noise_psd_dbm_hz: f64,
    /// CSI error std per complex entry, in noise-normalized channel units.
    pub sigma_e: f64,
    pub alpha: f64,
    pub p_on_mw: f64,
    pub p_off_mw: f64,
    pub p_da_mw: f64,
    pub gamma_d_db: f64,
    pub gamma_k_db: f64,
    pub eta_d: f64,
    pub eta_k: f64,
    pub p_an_dbm: f64,
    pub m_psk: usize,
    /// SCA penalty weight; `None` selects [`ScenarioConfig::default_penalty`].
    pub penalty_phi: Option<f64>,
    /// Squared radius of the deterministic uncertainty ball.
    pub sigma_ball: f64,
    pub edge_fraction: f64,
    pub seed: u64,
    pub max_sca_iters: usize,
    pub conv_tol: f64,

    pub quantile: QuantileKind,
    pub covariance: CovarianceMode,
    pub sproc: SprocMode,
    pub chance_split: ChanceSplit,
    pub block_form: BlockForm,
    pub lift: LiftForm,
    /// Run the single-flip and swap search over fixed selections after the polish solve.
    pub refine: bool,
    /// Path loss at the reference distance (dB).
    pub pl0_db: f64,
    pub pl_exponent: f64,
    pub pl_d0_m: f64,
    /// Symbol phase override; `None` uses the first standard PSK phase `pi / M`.
    pub symbol_phase: Option<f64>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            cell_side_m: 100.0,
            n_das: 16,
            n_eves: 14,
            layout: Layout::DaGrid,
            carrier_hz: 2.0e9,
            bandwidth_hz: 1.0e6,
            noise_psd_dbm_hz: -174.0,
            sigma_e: 0.01,
            alpha: 0.4,
            p_on_mw: 500.0,
            p_off_mw: 50.0,
            p_da_mw: 1000.0,
            gamma_d_db: 20.0,
            gamma_k_db: -10.0,
            eta_d: 0.95,
            eta_k: 0.95,
            p_an_dbm: 25.0,
            m_psk: 4,
            penalty_phi: None,
            sigma_ball: 4.0e-4,
            edge_fraction: 0.0,
            seed: 1,
            max_sca_iters: 30,
            conv_tol: 1e-4,
            quantile: QuantileKind::Normal,
            covariance: CovarianceMode::PaperVerbatim,
            sproc: SprocMode::NormRobust,
            chance_split: ChanceSplit::Joint,
            block_form: BlockForm::Soc,
            lift: LiftForm::Full,
            refine: true,
            pl0_db: 75.0,
            pl_exponent: 3.0,
            pl_d0_m: 1.0,
            symbol_phase: None,
        }
    }
}

/// Largest distance of a converged relaxed selection from its rounding.
pub const BINARY_TOL: f64 = 1e-3;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

impl ScenarioConfig {
    pub fn gamma_d(&self) -> f64 {
        db_to_linear(self.gamma_d_db)
    }

    pub fn gamma_k(&self) -> f64 {
        db_to_linear(self.gamma_k_db)
    }

    pub fn p_an_mw(&self) -> f64 {
        dbm_to_mw(self.p_an_dbm)
    }

    /// Penalty weight used when `penalty_phi` is unset: the smallest weight
    /// for which the exact selection step never keeps a fraction above
    /// [`BINARY_TOL`], namely `(p_on - p_off) / BINARY_TOL`.
    pub fn default_penalty(&self) -> f64 {
        (self.p_on_mw - self.p_off_mw) / BINARY_TOL
    }

    pub fn penalty(&self) -> f64 {
        self.penalty_phi.unwrap_or_else(|| self.default_penalty())
    }

    /// Radius of the deterministic uncertainty ball.
    pub fn ball_radius(&self) -> f64 {
        self.sigma_ball.sqrt()
    }

    /// Admissible open interval for `eta` under the configured quantile.
    pub fn eta_range(&self) -> (f64, f64, &'static str) {
        match self.quantile {
            QuantileKind::Normal => (0.5, 1.0, "(0.5, 1)"),
            QuantileKind::ErfLiteral => (0.0, 1.0, "(0, 1)"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.n_das == 0 {
            return fail("n_das must be at least 1".into());
        }
        if !(self.cell_side_m > 0.0) {
            return fail("cell_side_m must be positive".into());
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return fail(format!("alpha = {} must lie in (0, 1]", self.alpha));
        }
        if self.p_off_mw > self.p_on_mw {
            return fail("p_off_mw must not exceed p_on_mw".into());
        }
        if self.p_off_mw < 0.0 || !(self.p_da_mw > 0.0) {
            return fail("powers must be nonnegative and p_da_mw positive".into());
        }
        if ![2, 4, 8, 16].contains(&self.m_psk) {
            return fail(format!("m_psk = {} must be one of 2, 4, 8, 16", self.m_psk));
        }
        let (lo, hi, range) = self.eta_range();
        for eta in [self.eta_d, self.eta_k] {
            if !(eta > lo && eta < hi) {
                return Err(Error::InvalidProbability { eta, range });
            }
        }
        if self.sigma_e < 0.0 {
            return fail("sigma_e must be nonnegative".into());
        }
        if self.sigma_ball < self.sigma_e * self.sigma_e {
            return fail(format!(
                "sigma_ball = {} must be at least sigma_e^2 = {}",
                self.sigma_ball,
                self.sigma_e * self.sigma_e
            ));
        }
        if !(0.0..=1.0).contains(&self.edge_fraction) {
            return fail("edge_fraction must lie in [0, 1]".into());
        }
        if self.max_sca_iters == 0 || !(self.conv_tol > 0.0) {
            return fail("max_sca_iters must be >= 1 and conv_tol > 0".into());
        }
        if !(self.bandwidth_hz > 0.0) || !(self.pl_d0_m > 0.0) || self.pl_exponent < 0.0 {
            return fail("bandwidth_hz and pl_d0_m must be positive, pl_exponent nonnegative".into());
        }
        if let Some(phi) = self.penalty_phi {
            if phi < 0.0 {
                return fail("penalty_phi must be nonnegative".into());
            }
        }
        Ok(())
    }

    /// Parses the flat text format, starting from defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::ConfigLine {
                line: idx + 1,
                msg: format!("expected `key = value`, got `{line}`"),
            })?;
            cfg.set(key.trim(), value.trim())
                .map_err(|msg| Error::ConfigLine { line: idx + 1, msg })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    /// Sets one field from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: FromStr>(key: &str, v: &str) -> std::result::Result<T, String> {
            v.parse::<T>()
                .map_err(|_| format!("cannot parse value `{v}` for `{key}`"))
        }
        fn opt(key: &str, v: &str) -> std::result::Result<Option<f64>, String> {
            match v.to_ascii_lowercase().as_str() {
                "auto" | "default" | "none" => Ok(None),
                _ => num(key, v).map(Some),
            }
        }
        match key {
            "cell_side_m" => self.cell_side_m = num(key, value)?,
            "n_das" => self.n_das = num(key, value)?,
            "n_eves" => self.n_eves = num(key, value)?,
            "layout" => self.layout = value.parse()?,
            "carrier_hz" => self.carrier_hz = num(key, value)?,
            "bandwidth_hz" => self.bandwidth_hz = num(key, value)?,
            "noise_psd_dbm_hz" => self.noise_psd_dbm_hz = num(key, value)?,
            "sigma_e" => self.sigma_e = num(key, value)?,
            "alpha" => self.alpha = num(key, value)?,
            "p_on_mw" => self.p_on_mw = num(key, value)?,
            "p_off_mw" => self.p_off_mw = num(key, value)?,
            "p_da_mw" => self.p_da_mw = num(key, value)?,
            "gamma_d_db" => self.gamma_d_db = num(key, value)?,
            "gamma_k_db" => self.gamma_k_db = num(key, value)?,
            "eta_d" => self.eta_d = num(key, value)?,
            "eta_k" => self.eta_k = num(key, value)?,
            "p_an_dbm" => self.p_an_dbm = num(key, value)?,
            "m_psk" => self.m_psk = num(key, value)?,
            "penalty_phi" => self.penalty_phi = opt(key, value)?,
            "sigma_ball" => self.sigma_ball = num(key, value)?,
            "edge_fraction" => self.edge_fraction = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "max_sca_iters" => self.max_sca_iters = num(key, value)?,
            "conv_tol" => self.conv_tol = num(key, value)?,
            "quantile" => self.quantile = value.parse()?,
            "covariance" => self.covariance = value.parse()?,
            "sproc" => self.sproc = value.parse()?,
            "chance_split" => self.chance_split = value.parse()?,
            "block_form" => self.block_form = value.parse()?,
            "lift" => self.lift = value.parse()?,
            "refine" => self.refine = num(key, value)?,
            "pl0_db" => self.pl0_db = num(key, value)?,
            "pl_exponent" => self.pl_exponent = num(key, value)?,
            "pl_d0_m" => self.pl_d0_m = num(key, value)?,
            "symbol_phase" => self.symbol_phase = opt(key, value)?,
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }

    /// Canonical text form; parsing it back yields an identical config.
    pub fn to_text(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "auto".to_string(), |x| format!("{x:?}"));
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("cell_side_m", format!("{:?}", self.cell_side_m));
        kv("n_das", self.n_das.to_string());
        kv("n_eves", self.n_eves.to_string());
        kv("layout", self.layout.to_string());
        kv("carrier_hz", format!("{:?}", self.carrier_hz));
        kv("bandwidth_hz", format!("{:?}", self.bandwidth_hz));
        kv("noise_psd_dbm_hz", format!("{:?}", self.noise_psd_dbm_hz));
        kv("sigma_e", format!("{:?}", self.sigma_e));
        kv("alpha", format!("{:?}", self.alpha));
        kv("p_on_mw", format!("{:?}", self.p_on_mw));
        kv("p_off_mw", format!("{:?}", self.p_off_mw));
        kv("p_da_mw", format!("{:?}", self.p_da_mw));
        kv("gamma_d_db", format!("{:?}", self.gamma_d_db));
        kv("gamma_k_db", format!("{:?}", self.gamma_k_db));
        kv("eta_d", format!("{:?}", self.eta_d));
        kv("eta_k", format!("{:?}", self.eta_k));
        kv("p_an_dbm", format!("{:?}", self.p_an_dbm));
        kv("m_psk", self.m_psk.to_string());
        kv("penalty_phi", opt(self.penalty_phi));
        kv("sigma_ball", format!("{:?}", self.sigma_ball));
        kv("edge_fraction", format!("{:?}", self.edge_fraction));
        kv("seed", self.seed.to_string());
        kv("max_sca_iters", self.max_sca_iters.to_string());
        kv("conv_tol", format!("{:?}", self.conv_tol));
        kv("quantile", self.quantile.to_string());
        kv("covariance", self.covariance.to_string());
        kv("sproc", self.sproc.to_string());
        kv("chance_split", self.chance_split.to_string());
        kv("block_form", self.block_form.to_string());
        kv("lift", self.lift.to_string());
        kv("refine", self.refine.to_string());
        kv("pl0_db", format!("{:?}", self.pl0_db));
        kv("pl_exponent", format!("{:?}", self.pl_exponent));
        kv("pl_d0_m", format!("{:?}", self.pl_d0_m));
        kv("symbol_phase", opt(self.symbol_phase));
        s
    }

    /// Short stable digest of the canonical text, used in CSV provenance lines.
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        let hash = Sha256::digest(self.to_text().as_bytes());
        hash.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        ScenarioConfig::default().validate().unwrap();
    }

    #[test]
    fn parses_keys_comments_and_enums() {
        let text = "\
# experiment
n_das = 8
layout = ca_center   # co-located
gamma_d_db=10
quantile = erf_literal
penalty_phi = 123.5
";
        let cfg = ScenarioConfig::parse(text).unwrap();
        assert_eq!(cfg.n_das, 8);
        assert_eq!(cfg.layout, Layout::CaCenter);
        assert_eq!(cfg.gamma_d_db, 10.0);
        assert_eq!(cfg.quantile, QuantileKind::ErfLiteral);
        assert_eq!(cfg.penalty_phi, Some(123.5));
    }

    #[test]
    fn unknown_key_reports_line() {
        let err = ScenarioConfig::parse("n_das = 4\nbogus = 1\n").unwrap_err();
        match err {
            Error::ConfigLine { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn text_round_trip() {
        let mut cfg = ScenarioConfig::default();
        cfg.sigma_e = 0.0123456789012345;
        cfg.symbol_phase = Some(0.3);
        cfg.sproc = SprocMode::PaperFaithful;
        cfg.lift = LiftForm::Diagonal;
        cfg.refine = false;
        let back = ScenarioConfig::parse(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.digest(), cfg.digest());
    }

    #[test]
    fn invariants_enforced() {
        let bad = [
            "eta_d = 0.5",
            "eta_k = 1.0",
            "alpha = 0",
            "m_psk = 3",
            "p_off_mw = 600",
            "sigma_e = 0.1\nsigma_ball = 0.001",
            "n_das = 0",
        ];
        for text in bad {
            assert!(ScenarioConfig::parse(text).is_err(), "{text} should be rejected");
        }
        // the erf reading admits eta = 0.5 because erf^-1(0.5) > 0
        ScenarioConfig::parse("quantile = erf_literal\neta_d = 0.5\neta_k = 0.5").unwrap();
    }
}
