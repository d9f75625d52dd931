//! Compiles the robust constructive/destructive constraints into cone blocks.
//!
//! Everything is expressed over the stacked real precoder `x = [u_R; u_I]`.
//! For a channel `h`, the two half-planes bounding the constructive wedge of
//! the IR are `abar_1^T x <= rhs` and `abar_2^T x <= rhs` with
//! `rhs = -sigma_n sqrt(gamma) tan(theta)`; the Eve keep-out wedge uses the
//! mirrored sign pattern and `rhs = +sigma_n sqrt(gamma_k) tan(theta)`.
//! Gaussian CSI errors turn each half-plane into an SOC through the quantile
//! of the outage probability; bounded errors turn it into either an exact
//! norm-robust SOC or the block-diagonal S-procedure LMI.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::ci::SymbolSpec;
use crate::config::{ChanceSplit, CovarianceMode, QuantileKind, ScenarioConfig, SprocMode};
use crate::error::{Error, Result};
use crate::scenario::CVec;

/// Stacked real form `[re; im]` of a complex vector.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedReal(Vec<f64>);

impl StackedReal {
    pub fn from_complex(v: &[Complex64]) -> Self {
        Self(v.iter().map(|c| c.re).chain(v.iter().map(|c| c.im)).collect())
    }

    pub fn from_vec(x: Vec<f64>) -> Result<Self> {
        if x.len() % 2 != 0 {
            return Err(Error::Dimension(format!("stacked length {} is odd", x.len())));
        }
        Ok(Self(x))
    }

    pub fn to_complex(&self) -> CVec {
        let (re, im) = self.halves();
        re.iter().zip(im).map(|(&r, &i)| Complex64::new(r, i)).collect()
    }

    /// Complex dimension N.
    pub fn n(&self) -> usize {
        self.0.len() / 2
    }

    pub fn halves(&self) -> (&[f64], &[f64]) {
        self.0.split_at(self.n())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

fn tan_checked(theta: f64) -> Result<f64> {
    if theta >= FRAC_PI_2 - 1e-6 {
        return Err(Error::UnsupportedConstellation { theta });
    }
    Ok(theta.tan())
}

/// Mean coefficient vectors of the IR's two wedge half-planes.
pub fn abar_ir(h_hat: &StackedReal, theta: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let t = tan_checked(theta)?;
    let (hr, hi) = h_hat.halves();
    let a1 = hi.iter().zip(hr).map(|(i, r)| i - r * t)
        .chain(hr.iter().zip(hi).map(|(r, i)| r + i * t))
        .collect();
    let a2 = hi.iter().zip(hr).map(|(i, r)| -i - r * t)
        .chain(hr.iter().zip(hi).map(|(r, i)| -r + i * t))
        .collect();
    Ok((a1, a2))
}

/// Mean coefficient vectors of an Eve's two keep-out half-planes.
pub fn abar_eve(h_hat: &StackedReal, theta: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let t = tan_checked(theta)?;
    let (hr, hi) = h_hat.halves();
    let a1 = hi.iter().zip(hr).map(|(i, r)| i + r * t)
        .chain(hr.iter().zip(hi).map(|(r, i)| r - i * t))
        .collect();
    let a2 = hi.iter().zip(hr).map(|(i, r)| -i + r * t)
        .chain(hr.iter().zip(hi).map(|(r, i)| -r - i * t))
        .collect();
    Ok((a1, a2))
}

/// Diagonal of `Theta^{1/2}` (length 2N).
pub fn cov_sqrt(theta: f64, sigma_e: f64, n: usize, mode: CovarianceMode) -> Vec<f64> {
    let t = theta.tan();
    let entry = match mode {
        CovarianceMode::PaperVerbatim => (1.0 + t) * sigma_e,
        CovarianceMode::DerivedExact => (0.5 * sigma_e * sigma_e * (1.0 + t * t)).sqrt(),
    };
    vec![entry; 2 * n]
}

/// Inverse CDF used for the chance-constraint scale.
pub fn quantile(kind: QuantileKind, eta: f64) -> f64 {
    match kind {
        QuantileKind::Normal => Normal::standard().inverse_cdf(eta),
        QuantileKind::ErfLiteral => statrs::function::erf::erf_inv(eta),
    }
}

/// Per-half-plane probability for a wedge target `eta`.
pub fn side_probability(eta: f64, split: ChanceSplit) -> f64 {
    match split {
        ChanceSplit::Joint => 0.5 * (1.0 + eta),
        ChanceSplit::PerSide => eta,
    }
}

/// `a_bar^T x + scale * ||Theta^{1/2} x||_2 <= rhs` with diagonal `Theta^{1/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SocBlock {
    pub a_bar: Vec<f64>,
    pub theta_sqrt: Vec<f64>,
    pub scale: f64,
    pub rhs: f64,
}

impl SocBlock {
    pub fn dim(&self) -> usize {
        self.a_bar.len()
    }

    pub fn norm_term(&self, x: &[f64]) -> f64 {
        self.theta_sqrt
            .iter()
            .zip(x)
            .map(|(t, x)| (t * x) * (t * x))
            .sum::<f64>()
            .sqrt()
    }

    pub fn lhs(&self, x: &[f64]) -> f64 {
        dot(&self.a_bar, x) + self.scale * self.norm_term(x)
    }

    /// `rhs - lhs`; nonnegative when satisfied.
    pub fn slack(&self, x: &[f64]) -> f64 {
        self.rhs - self.lhs(x)
    }

    /// True when the norm part vanishes identically and the block is a plain half-plane.
    pub fn is_linear(&self) -> bool {
        self.scale == 0.0 || self.theta_sqrt.iter().all(|&t| t == 0.0)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(a, b)| a * b).sum()
}

/// Builds the SOC form of `Pr{a^T x <= rhs} >= eta` for Gaussian `a`.
pub fn chance_to_soc(
    a_bar: Vec<f64>,
    cov_sqrt: Vec<f64>,
    eta: f64,
    rhs: f64,
    kind: QuantileKind,
) -> Result<SocBlock> {
    if a_bar.len() != cov_sqrt.len() {
        return Err(Error::Dimension("a_bar and cov_sqrt lengths differ".into()));
    }
    let scale = quantile(kind, eta);
    if !(eta < 1.0 && scale > 0.0 && scale.is_finite()) {
        let range = match kind {
            QuantileKind::Normal => "(0.5, 1)",
            QuantileKind::ErfLiteral => "(0, 1)",
        };
        return Err(Error::InvalidProbability { eta, range });
    }
    Ok(SocBlock { a_bar, theta_sqrt: cov_sqrt, scale, rhs })
}

/// Symmetric matrix affine in a local variable vector `v`:
/// `M(v) = M_0 + sum_i v_i M_i`, stored as upper-triangle triplets.
#[derive(Debug, Clone, PartialEq)]
pub struct LmiBlock {
    size: usize,
    constant: Vec<(usize, usize, f64)>,
    coeffs: Vec<Vec<(usize, usize, f64)>>,
}

impl LmiBlock {
    pub fn new(size: usize, n_local: usize) -> Self {
        Self { size, constant: Vec::new(), coeffs: vec![Vec::new(); n_local] }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn n_local(&self) -> usize {
        self.coeffs.len()
    }

    fn upper(i: usize, j: usize) -> (usize, usize) {
        if i <= j { (i, j) } else { (j, i) }
    }

    /// Adds `val` to entry `(i, j)` and its mirror of the constant part.
    pub fn add_const(&mut self, i: usize, j: usize, val: f64) {
        assert!(i < self.size && j < self.size);
        let (i, j) = Self::upper(i, j);
        self.constant.push((i, j, val));
    }

    /// Adds `val * v_var` to entry `(i, j)` and its mirror.
    pub fn add_coeff(&mut self, var: usize, i: usize, j: usize, val: f64) {
        assert!(i < self.size && j < self.size);
        let (i, j) = Self::upper(i, j);
        self.coeffs[var].push((i, j, val));
    }

    pub fn constant_terms(&self) -> &[(usize, usize, f64)] {
        &self.constant
    }

    pub fn coeff_terms(&self, var: usize) -> &[(usize, usize, f64)] {
        &self.coeffs[var]
    }

    /// Dense symmetric matrix at the local assignment `v`.
    pub fn assemble(&self, v: &[f64]) -> DMatrix<f64> {
        assert_eq!(v.len(), self.n_local());
        let mut m = DMatrix::zeros(self.size, self.size);
        let mut put = |i: usize, j: usize, val: f64| {
            m[(i, j)] += val;
            if i != j {
                m[(j, i)] += val;
            }
        };
        for &(i, j, c) in &self.constant {
            put(i, j, c);
        }
        for (var, terms) in self.coeffs.iter().enumerate() {
            if v[var] != 0.0 {
                for &(i, j, c) in terms {
                    put(i, j, c * v[var]);
                }
            }
        }
        m
    }

    pub fn min_eigenvalue(&self, v: &[f64]) -> f64 {
        min_eigenvalue(self.assemble(v))
    }
}

pub fn min_eigenvalue(m: DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Schur-complement arrow form `[[s I, Theta^{1/2} x], [(Theta^{1/2} x)^T, s]]`
/// with `s = (rhs - a_bar^T x) / scale`, over local variables `x`.
pub fn soc_to_lmi(soc: &SocBlock) -> LmiBlock {
    let n2 = soc.dim();
    let size = n2 + 1;
    let mut lmi = LmiBlock::new(size, n2);
    let s0 = soc.rhs / soc.scale;
    for d in 0..size {
        lmi.add_const(d, d, s0);
    }
    for j in 0..n2 {
        let a = -soc.a_bar[j] / soc.scale;
        if a != 0.0 {
            for d in 0..size {
                lmi.add_coeff(j, d, d, a);
            }
        }
        if soc.theta_sqrt[j] != 0.0 {
            lmi.add_coeff(j, j, n2, soc.theta_sqrt[j]);
        }
    }
    lmi
}

/// One robust half-plane, ready to be bound to program variables.
#[derive(Debug, Clone, PartialEq)]
pub enum RobustBlock {
    /// Over local variables `x`.
    Soc(SocBlock),
    /// Over local variables `[x, lambda]`; `lambda` is an S-procedure multiplier.
    Lmi(LmiBlock),
}

impl RobustBlock {
    pub fn needs_multiplier(&self) -> bool {
        matches!(self, RobustBlock::Lmi(_))
    }
}

fn half_planes(
    h_hat: &[Complex64],
    sym: &SymbolSpec,
    eve: bool,
) -> Result<[Vec<f64>; 2]> {
    let stacked = StackedReal::from_complex(h_hat);
    let (a1, a2) = if eve {
        abar_eve(&stacked, sym.theta)?
    } else {
        abar_ir(&stacked, sym.theta)?
    };
    Ok([a1, a2])
}

pub fn ir_rhs(cfg: &ScenarioConfig, sym: &SymbolSpec, sigma_n: f64) -> f64 {
    -sigma_n * cfg.gamma_d().sqrt() * sym.theta.tan()
}

pub fn eve_rhs(cfg: &ScenarioConfig, sym: &SymbolSpec, sigma_n: f64) -> f64 {
    sigma_n * cfg.gamma_k().sqrt() * sym.theta.tan()
}

fn chance_blocks(
    h_hat: &[Complex64],
    cfg: &ScenarioConfig,
    sym: &SymbolSpec,
    eta: f64,
    rhs: f64,
    eve: bool,
) -> Result<[SocBlock; 2]> {
    let [a1, a2] = half_planes(h_hat, sym, eve)?;
    let cov = cov_sqrt(sym.theta, cfg.sigma_e, h_hat.len(), cfg.covariance);
    let eta = side_probability(eta, cfg.chance_split);
    Ok([
        chance_to_soc(a1, cov.clone(), eta, rhs, cfg.quantile)?,
        chance_to_soc(a2, cov, eta, rhs, cfg.quantile)?,
    ])
}

/// The IR's two probabilistic half-plane constraints.
pub fn ir_chance_blocks(
    h_hat: &[Complex64],
    cfg: &ScenarioConfig,
    sym: &SymbolSpec,
    sigma_n: f64,
) -> Result<[SocBlock; 2]> {
    chance_blocks(h_hat, cfg, sym, cfg.eta_d, ir_rhs(cfg, sym, sigma_n), false)
}

/// One Eve's two probabilistic keep-out constraints.
pub fn eve_chance_blocks(
    h_hat_k: &[Complex64],
    cfg: &ScenarioConfig,
    sym: &SymbolSpec,
    sigma_n: f64,
) -> Result<[SocBlock; 2]> {
    chance_blocks(h_hat_k, cfg, sym, cfg.eta_k, eve_rhs(cfg, sym, sigma_n), true)
}

/// `[[lambda I - diag(x), 0], [0, -lambda sigma^2 - rho]]` with
/// `rho = a_bar^T x - rhs`, over local variables `[x, lambda]`.
pub fn sproc_lmi(a_bar: &[f64], rhs: f64, sigma_sq: f64) -> LmiBlock {
    let n2 = a_bar.len();
    let last = n2;
    let mut lmi = LmiBlock::new(n2 + 1, n2 + 1);
    lmi.add_const(last, last, rhs);
    for (i, &a) in a_bar.iter().enumerate() {
        lmi.add_coeff(i, i, i, -1.0);
        if a != 0.0 {
            lmi.add_coeff(i, last, last, -a);
        }
        lmi.add_coeff(n2, i, i, 1.0);
    }
    lmi.add_coeff(n2, last, last, -sigma_sq);
    lmi
}

/// Exact worst case of `a^T x <= rhs` over `||[e_R; e_I]||_2 <= radius`.
///
/// The error enters each half-plane through a scaled rotation of the error
/// stack, whose gain is `sqrt(1 + tan^2 theta)`.
pub fn norm_robust_soc(a_bar: Vec<f64>, rhs: f64, radius: f64, theta: f64) -> SocBlock {
    let gain = radius * (1.0 + theta.tan().powi(2)).sqrt();
    let n2 = a_bar.len();
    SocBlock { a_bar, theta_sqrt: vec![gain; n2], scale: 1.0, rhs }
}

fn sproc_blocks(
    h_hat: &[Complex64],
    cfg: &ScenarioConfig,
    sym: &SymbolSpec,
    rhs: f64,
    eve: bool,
    mode: SprocMode,
) -> Result<[RobustBlock; 2]> {
    let [a1, a2] = half_planes(h_hat, sym, eve)?;
    let make = |a: Vec<f64>| match mode {
        SprocMode::PaperFaithful => RobustBlock::Lmi(sproc_lmi(&a, rhs, cfg.sigma_ball)),
        SprocMode::NormRobust => {
            RobustBlock::Soc(norm_robust_soc(a, rhs, cfg.ball_radius(), sym.theta))
        }
    };
    Ok([make(a1), make(a2)])
}

/// The IR's two worst-case constraints.
pub fn ir_sproc_lmis(
    h_hat: &[Complex64],
    cfg: &ScenarioConfig,
    sym: &SymbolSpec,
    sigma_n: f64,
    mode: SprocMode,
) -> Result<[RobustBlock; 2]> {
    sproc_blocks(h_hat, cfg, sym, ir_rhs(cfg, sym, sigma_n), false, mode)
}

/// One Eve's two worst-case keep-out constraints.
pub fn eve_sproc_lmis(
    h_hat_k: &[Complex64],
    cfg: &ScenarioConfig,
    sym: &SymbolSpec,
    sigma_n: f64,
    mode: SprocMode,
) -> Result<[RobustBlock; 2]> {
    sproc_blocks(h_hat_k, cfg, sym, eve_rhs(cfg, sym, sigma_n), true, mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;
    use std::f64::consts::PI;

    use crate::ci::noiseless_rx;
    use crate::scenario::{complex_normal, rng_for};

    fn random_c(rng: &mut impl Rng, n: usize) -> CVec {
        (0..n).map(|_| complex_normal(rng, 1.0)).collect()
    }

    #[test]
    fn stacking_round_trips() {
        let mut rng = rng_for(1, 0);
        let v = random_c(&mut rng, 5);
        let s = StackedReal::from_complex(&v);
        assert_eq!(s.as_slice().len(), 10);
        assert_eq!(s.to_complex(), v);
        assert!(StackedReal::from_vec(vec![1.0; 3]).is_err());
    }

    #[test]
    fn qpsk_abar_formulas() {
        let h = vec![Complex64::new(0.3, -1.2), Complex64::new(2.0, 0.5)];
        let s = StackedReal::from_complex(&h);
        let (hr, hi) = s.halves();
        let (a1, _) = abar_ir(&s, PI / 4.0).unwrap();
        for n in 0..2 {
            assert_relative_eq!(a1[n], hi[n] - hr[n], epsilon = 1e-12);
            assert_relative_eq!(a1[n + 2], hr[n] + hi[n], epsilon = 1e-12);
        }
        let (k1, _) = abar_eve(&s, PI / 4.0).unwrap();
        for n in 0..2 {
            assert_relative_eq!(k1[n], hi[n] + hr[n], epsilon = 1e-12);
            assert_relative_eq!(k1[n + 2], hr[n] - hi[n], epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_channel_gives_zero_vectors() {
        let s = StackedReal::from_complex(&[Complex64::new(0.0, 0.0); 3]);
        let (a1, a2) = abar_ir(&s, PI / 8.0).unwrap();
        let (k1, k2) = abar_eve(&s, PI / 8.0).unwrap();
        for v in [a1, a2, k1, k2] {
            assert!(v.iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn bpsk_is_rejected() {
        let s = StackedReal::from_complex(&[Complex64::new(1.0, 0.0)]);
        assert!(matches!(abar_ir(&s, PI / 2.0), Err(Error::UnsupportedConstellation { .. })));
        assert!(matches!(abar_eve(&s, PI / 2.0), Err(Error::UnsupportedConstellation { .. })));
    }

    // The second Eve half-plane is the first one evaluated on the conjugate
    // channel, with the imaginary half of the result negated.
    #[test]
    fn eve_second_half_plane_is_conjugate_mirror() {
        let mut rng = rng_for(2, 0);
        let h = random_c(&mut rng, 4);
        let conj: CVec = h.iter().map(|c| c.conj()).collect();
        let theta = PI / 8.0;
        let (_, k2) = abar_eve(&StackedReal::from_complex(&h), theta).unwrap();
        let (k1c, _) = abar_eve(&StackedReal::from_complex(&conj), theta).unwrap();
        for i in 0..8 {
            let mirrored = if i < 4 { k1c[i] } else { -k1c[i] };
            assert_relative_eq!(k2[i], mirrored, epsilon = 1e-12);
        }
    }

    // Oracle: the IR half-planes are Im r - tan (Re r) and -Im r - tan (Re r)
    // of the received point r = h^T u, computed with complex arithmetic.
    #[test]
    fn half_planes_match_complex_geometry() {
        let mut rng = rng_for(3, 0);
        let theta = PI / 8.0;
        let t = theta.tan();
        for _ in 0..100 {
            let h = random_c(&mut rng, 3);
            let u = random_c(&mut rng, 3);
            let x = StackedReal::from_complex(&u);
            let r = noiseless_rx(&h, &u);
            let (a1, a2) = abar_ir(&StackedReal::from_complex(&h), theta).unwrap();
            assert_relative_eq!(dot(&a1, x.as_slice()), r.im - t * r.re, epsilon = 1e-10);
            assert_relative_eq!(dot(&a2, x.as_slice()), -r.im - t * r.re, epsilon = 1e-10);
            let (k1, k2) = abar_eve(&StackedReal::from_complex(&h), theta).unwrap();
            assert_relative_eq!(dot(&k1, x.as_slice()), r.im + t * r.re, epsilon = 1e-10);
            assert_relative_eq!(dot(&k2, x.as_slice()), -r.im + t * r.re, epsilon = 1e-10);
        }
    }

    #[test]
    fn covariance_modes() {
        let verbatim = cov_sqrt(PI / 4.0, 0.01, 3, CovarianceMode::PaperVerbatim);
        assert_eq!(verbatim.len(), 6);
        verbatim.iter().for_each(|&v| assert_relative_eq!(v, 0.02, epsilon = 1e-15));
        let exact = cov_sqrt(PI / 4.0, 0.01, 3, CovarianceMode::DerivedExact);
        exact.iter().for_each(|&v| assert_relative_eq!(v * v, 1e-4, max_relative = 1e-12));
        assert!(cov_sqrt(PI / 4.0, 0.0, 2, CovarianceMode::DerivedExact).iter().all(|&v| v == 0.0));
    }

    // Oracle: the variance of a_1^T x under CN(0, sigma_e^2) errors, sampled directly.
    #[test]
    fn exact_covariance_matches_sampled_variance() {
        let mut rng = rng_for(4, 0);
        let theta = PI / 4.0;
        let sigma_e = 0.01;
        let u = random_c(&mut rng, 4);
        let x = StackedReal::from_complex(&u);
        let t = theta.tan();
        let n = 1_000_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let e: CVec = (0..4).map(|_| complex_normal(&mut rng, sigma_e * sigma_e)).collect();
            let r = noiseless_rx(&e, &u);
            let v = r.im - t * r.re;
            sum += v;
            sum_sq += v * v;
        }
        let var = sum_sq / n as f64 - (sum / n as f64).powi(2);
        let theta_sqrt = cov_sqrt(theta, sigma_e, 4, CovarianceMode::DerivedExact);
        let block = SocBlock { a_bar: vec![0.0; 8], theta_sqrt, scale: 1.0, rhs: 0.0 };
        let predicted = block.norm_term(x.as_slice()).powi(2);
        assert_relative_eq!(var, predicted, max_relative = 0.01);
    }

    // Independent normal-quantile oracle: Simpson quadrature of the density
    // for the CDF, inverted by bisection.
    fn normal_cdf_quadrature(x: f64) -> f64 {
        let steps = 20_000;
        let h = x / steps as f64;
        let pdf = |t: f64| (-0.5 * t * t).exp() / (2.0 * PI).sqrt();
        let mut s = pdf(0.0) + pdf(x);
        for i in 1..steps {
            s += pdf(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        0.5 + s * h / 3.0
    }

    fn bisect(f: impl Fn(f64) -> f64, target: f64, mut lo: f64, mut hi: f64) -> f64 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < target { lo = mid } else { hi = mid }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn normal_quantile_matches_quadrature_oracle() {
        let oracle = bisect(normal_cdf_quadrature, 0.95, 0.0, 5.0);
        assert_relative_eq!(oracle, 1.6448536269514722, epsilon = 1e-9);
        assert_relative_eq!(quantile(QuantileKind::Normal, 0.95), oracle, epsilon = 1e-9);
        assert_relative_eq!(quantile(QuantileKind::Normal, 0.975), bisect(normal_cdf_quadrature, 0.975, 0.0, 5.0), epsilon = 1e-9);
    }

    #[test]
    fn erf_literal_quantile_inverts_erf() {
        let erf = |x: f64| 2.0 * normal_cdf_quadrature(x * 2f64.sqrt()) - 1.0;
        let oracle = bisect(erf, 0.5, 0.0, 5.0);
        assert_relative_eq!(quantile(QuantileKind::ErfLiteral, 0.5), oracle, epsilon = 1e-9);
        assert_relative_eq!(oracle, 0.4769362762044699, epsilon = 1e-9);
    }

    #[test]
    fn chance_to_soc_scales_and_rejects() {
        let soc = chance_to_soc(vec![1.0, 0.0], vec![0.1, 0.1], 0.95, 2.0, QuantileKind::Normal).unwrap();
        assert_relative_eq!(soc.scale, 1.6448536269514722, epsilon = 1e-9);
        for eta in [0.5, 0.3, 1.0] {
            assert!(chance_to_soc(vec![1.0], vec![0.1], eta, 0.0, QuantileKind::Normal).is_err());
        }
        let flat = chance_to_soc(vec![1.0, -2.0], vec![0.0, 0.0], 0.9, 1.0, QuantileKind::Normal).unwrap();
        assert!(flat.is_linear());
        assert_relative_eq!(flat.slack(&[3.0, 1.0]), 1.0 - (3.0 - 2.0));
    }

    #[test]
    fn lmi_at_origin_is_scaled_identity() {
        let soc = SocBlock { a_bar: vec![0.3, -0.2, 0.1, 0.4], theta_sqrt: vec![0.2; 4], scale: 1.5, rhs: 3.0 };
        let m = soc_to_lmi(&soc).assemble(&[0.0; 4]);
        assert_eq!(m, DMatrix::identity(5, 5) * 2.0);
    }

    #[test]
    fn lmi_boundary_point_is_singular() {
        let mut rng = rng_for(6, 0);
        let a_bar: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
        let theta_sqrt: Vec<f64> = (0..6).map(|_| rng.random_range(0.1..0.5)).collect();
        let mut soc = SocBlock { a_bar, theta_sqrt, scale: 1.3, rhs: 0.0 };
        let x: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
        soc.rhs = soc.lhs(&x);
        let lmi = soc_to_lmi(&soc);
        assert!(lmi.min_eigenvalue(&x).abs() < 1e-10);
    }

    #[test]
    fn sproc_lmi_diagonal_conditions() {
        let mut rng = rng_for(7, 0);
        let a: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let sigma_sq = 0.04;
        let lmi = sproc_lmi(&a, -0.5, sigma_sq);
        for _ in 0..500 {
            let x: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let lambda = rng.random_range(0.0..2.0);
            let mut v = x.clone();
            v.push(lambda);
            let psd = lmi.min_eigenvalue(&v) >= -1e-12;
            let rho = dot(&a, &x) + 0.5;
            let max_x = x.iter().copied().fold(f64::MIN, f64::max);
            let diag = lambda >= max_x && lambda * sigma_sq <= -rho;
            assert_eq!(psd, diag);
        }
        // large multiplier, small x, very negative rho
        let mut v = vec![0.01; 4];
        v.push(100.0);
        let far = sproc_lmi(&[0.0; 4], 10.0, 0.01);
        assert!(far.min_eigenvalue(&v) > 0.0);
    }

    #[test]
    fn norm_robust_reduces_to_nominal_without_uncertainty() {
        let soc = norm_robust_soc(vec![1.0, 2.0], 0.5, 0.0, PI / 4.0);
        assert!(soc.is_linear());
        assert_relative_eq!(soc.slack(&[0.1, 0.1]), 0.5 - 0.3, epsilon = 1e-15);
    }

    fn random_soc(rng: &mut impl Rng, n2: usize) -> SocBlock {
        SocBlock {
            a_bar: (0..n2).map(|_| rng.random_range(-1.0..1.0)).collect(),
            theta_sqrt: (0..n2).map(|_| rng.random_range(0.0..0.6)).collect(),
            scale: rng.random_range(0.2..2.5),
            rhs: rng.random_range(-1.0..2.0),
        }
    }

    #[test]
    fn soc_and_lmi_agree_on_random_points() {
        let mut rng = rng_for(8, 0);
        let mut disagreements = 0;
        for _ in 0..1000 {
            let soc = random_soc(&mut rng, 6);
            let x: Vec<f64> = (0..6).map(|_| rng.random_range(-1.5..1.5)).collect();
            let soc_ok = soc.slack(&x) >= 0.0;
            let lmi_ok = soc_to_lmi(&soc).min_eigenvalue(&x) >= -1e-8;
            if soc_ok != lmi_ok && soc.slack(&x).abs() > 1e-8 {
                disagreements += 1;
            }
        }
        assert_eq!(disagreements, 0);
    }

    proptest! {
        #[test]
        fn assembled_lmis_are_symmetric(seed in 0u64..500) {
            let mut rng = rng_for(seed, 1);
            let soc = random_soc(&mut rng, 4);
            let x: Vec<f64> = (0..4).map(|_| rng.random_range(-3.0..3.0)).collect();
            let m = soc_to_lmi(&soc).assemble(&x);
            prop_assert_eq!(m.transpose(), m);
            let mut v = x.clone();
            v.push(rng.random_range(0.0..3.0));
            let s = sproc_lmi(&soc.a_bar, soc.rhs, 0.1).assemble(&v);
            prop_assert_eq!(s.transpose(), s);
        }
    }
}
