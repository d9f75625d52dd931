use std::ops::Range;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{check_channels, rotate, Variant};
use crate::ci::SymbolSpec;
use crate::config::{BlockForm, LiftForm, ScenarioConfig};
use crate::conic::{ConicProgram, Sense, SymVar};
use crate::error::Result;
use crate::robust::{
    eve_chance_blocks, eve_sproc_lmis, ir_chance_blocks, ir_sproc_lmis, soc_to_lmi, LmiBlock,
    RobustBlock, SocBlock,
};
use crate::scenario::ChannelSet;

/// How the selection vector enters a program.
#[derive(Debug, Clone, Copy)]
pub enum Selection<'a> {
    /// `t` is a variable in `[0, 1]`; the penalty is linearized at `t_prev`.
    Relaxed { t_prev: &'a [f64], phi: f64 },
    /// `t` is a constant and no penalty is added.
    Fixed(&'a [f64]),
}

/// Lift of a stacked vector `v` of `N` complex entries.
#[derive(Debug, Clone)]
pub enum Lift {
    /// `L` with `[[L, v], [v^T, 1]] >= 0`.
    Full(SymVar),
    /// Per-antenna powers `p_n` with `p_n >= v_n^2 + v_{N+n}^2`.
    Diagonal(Range<usize>),
}

impl Lift {
    fn add(prog: &mut ConicProgram, label: &str, vec: &Range<usize>, form: LiftForm) -> Result<Self> {
        let dim = vec.len();
        let n = dim / 2;
        match form {
            LiftForm::Full => {
                let lift = prog.add_sym_block(dim);
                let (vars, lmi) = schur_link(lift, vec);
                prog.add_psd(label, vars, lmi)?;
                Ok(Lift::Full(lift))
            }
            LiftForm::Diagonal => {
                let p = prog.add_var_block(n, 0.0, f64::INFINITY);
                for a in 0..n {
                    // [[p, v_a, v_{N+a}], [v_a, 1, 0], [v_{N+a}, 0, 1]] over locals [p, v_a, v_{N+a}]
                    let mut lmi = LmiBlock::new(3, 3);
                    lmi.add_coeff(0, 0, 0, 1.0);
                    lmi.add_coeff(1, 0, 1, 1.0);
                    lmi.add_coeff(2, 0, 2, 1.0);
                    lmi.add_const(1, 1, 1.0);
                    lmi.add_const(2, 2, 1.0);
                    let vars = vec![p.start + a, vec.start + a, vec.start + n + a];
                    prog.add_psd(&format!("{label}{a}"), vars, lmi)?;
                }
                Ok(Lift::Diagonal(p))
            }
        }
    }

    /// Terms of antenna `a`'s power `Tr(L F_a)`, scaled.
    pub fn antenna_terms(&self, n: usize, a: usize, scale: f64) -> Vec<(usize, f64)> {
        match self {
            Lift::Full(l) => vec![(l.idx(a, a), scale), (l.idx(n + a, n + a), scale)],
            Lift::Diagonal(p) => vec![(p.start + a, scale)],
        }
    }

    /// Terms of `Tr(L)`, scaled.
    pub fn trace_terms(&self, scale: f64) -> Vec<(usize, f64)> {
        match self {
            Lift::Full(l) => l.diag().map(|d| (d, scale)).collect(),
            Lift::Diagonal(p) => p.clone().map(|i| (i, scale)).collect(),
        }
    }

    /// Per-antenna powers at `v`.
    pub fn antenna_powers(&self, v: &[f64]) -> Vec<f64> {
        match self {
            Lift::Full(l) => super::antenna_powers(&l.extract(v)),
            Lift::Diagonal(p) => v[p.clone()].to_vec(),
        }
    }

    /// The lift as a matrix. The diagonal form is completed to
    /// `v v^T + diag(s)` with each antenna's slack split evenly between its
    /// real and imaginary rows, which keeps its powers and trace.
    pub fn matrix(&self, v: &[f64], vec: &Range<usize>) -> DMatrix<f64> {
        match self {
            Lift::Full(l) => l.extract(v),
            Lift::Diagonal(p) => {
                let x = nalgebra::DVector::from_column_slice(&v[vec.clone()]);
                let n = p.len();
                let mut m = &x * x.transpose();
                for a in 0..n {
                    let slack = 0.5 * (v[p.start + a] - x[a] * x[a] - x[n + a] * x[n + a]);
                    m[(a, a)] += slack;
                    m[(n + a, n + a)] += slack;
                }
                m
            }
        }
    }

    /// Overwrites the lift at `v` with the outer product of the stacked vector `s`.
    pub(crate) fn set_outer(&self, v: &mut [f64], s: &[f64]) {
        match self {
            Lift::Full(l) => {
                for i in 0..l.dim {
                    for j in i..l.dim {
                        v[l.idx(i, j)] = s[i] * s[j];
                    }
                }
            }
            Lift::Diagonal(p) => {
                let n = p.len();
                for a in 0..n {
                    v[p.start + a] = s[a] * s[a] + s[n + a] * s[n + a];
                }
            }
        }
    }
}

/// Where each quantity lives in the program's variable vector.
#[derive(Debug, Clone)]
pub struct ProgramLayout {
    pub n: usize,
    pub x: Range<usize>,
    pub u_lift: Lift,
    pub t: Option<Range<usize>>,
    pub z: Option<Range<usize>>,
    pub z_lift: Option<Lift>,
    pub multipliers: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Assembled {
    pub prog: ConicProgram,
    pub layout: ProgramLayout,
}

/// `[[L, v], [v^T, 1]]` over locals `[L entries (upper, row-major), v]`.
fn schur_link(lift: SymVar, vec: &Range<usize>) -> (Vec<usize>, LmiBlock) {
    let d = lift.dim;
    let n_lift = SymVar::len(d);
    let mut lmi = LmiBlock::new(d + 1, n_lift + d);
    lmi.add_const(d, d, 1.0);
    for i in 0..d {
        for j in i..d {
            lmi.add_coeff(lift.idx(i, j) - lift.start, i, j, 1.0);
        }
        lmi.add_coeff(n_lift + i, i, d, 1.0);
    }
    let vars = (lift.start..lift.start + n_lift).chain(vec.clone()).collect();
    (vars, lmi)
}

fn add_soc_block(
    prog: &mut ConicProgram,
    label: &str,
    x: &Range<usize>,
    soc: SocBlock,
    form: BlockForm,
) -> Result<()> {
    match form {
        BlockForm::Lmi if !soc.is_linear() => prog.add_psd(label, x.clone().collect(), soc_to_lmi(&soc)),
        _ => prog.add_soc(label, x.clone().collect(), soc),
    }
}

fn add_robust_block(
    prog: &mut ConicProgram,
    label: &str,
    x: &Range<usize>,
    block: RobustBlock,
    form: BlockForm,
    multipliers: &mut Vec<usize>,
) -> Result<()> {
    match block {
        RobustBlock::Soc(soc) => add_soc_block(prog, label, x, soc, form),
        RobustBlock::Lmi(lmi) => {
            let lambda = prog.add_var_block(1, 0.0, f64::INFINITY).start;
            multipliers.push(lambda);
            let vars = x.clone().chain(std::iter::once(lambda)).collect();
            prog.add_psd(label, vars, lmi)
        }
    }
}

/// Builds the convex program of `variant` for one symbol.
///
/// Channels are rotated by `exp(-j phi_d)` so the wedge constraints apply in
/// the reference frame while `x` stays the actual composite precoder.
pub fn assemble(
    variant: Variant,
    ch: &ChannelSet,
    cfg: &ScenarioConfig,
    sym: &SymbolSpec,
    sel: Selection<'_>,
) -> Result<Assembled> {
    check_channels(ch)?;
    let n = ch.n();
    let sigma_n = ch.sigma_n();
    let mut prog = ConicProgram::new();
    let inf = f64::INFINITY;

    // U >= x x^T; in the full form U >= 0 follows from the same block
    let x = prog.add_var_block(2 * n, -inf, inf);
    let u_lift = Lift::add(&mut prog, "schur_u", &x, cfg.lift)?;
    for (d, c) in u_lift.trace_terms(1.0 / cfg.alpha) {
        prog.add_objective(d, c);
    }

    // selection: circuit power, penalty and per-antenna cap (C1)
    let delta = cfg.p_on_mw - cfg.p_off_mw;
    prog.add_objective_offset(n as f64 * cfg.p_off_mw);
    let t = match sel {
        Selection::Relaxed { t_prev, phi } => {
            let t = prog.add_var_block(n, 0.0, 1.0);
            for (a, &tp) in t_prev.iter().enumerate() {
                prog.add_objective(t.start + a, delta + phi * (1.0 - 2.0 * tp));
                prog.add_objective_offset(phi * tp * tp);
                let mut row = u_lift.antenna_terms(n, a, 1.0);
                row.push((t.start + a, -cfg.p_da_mw));
                prog.add_ineq(&format!("cap{a}"), row, Sense::Le, 0.0);
            }
            Some(t)
        }
        Selection::Fixed(t_fixed) => {
            for (a, &tf) in t_fixed.iter().enumerate() {
                prog.add_objective_offset(delta * tf);
                let row = u_lift.antenna_terms(n, a, 1.0);
                prog.add_ineq(&format!("cap{a}"), row, Sense::Le, tf * cfg.p_da_mw);
            }
            None
        }
    };

    let h_d = rotate(&ch.h_d_hat, sym);
    let mut multipliers = Vec::new();
    let form = cfg.block_form;
    if variant.is_probabilistic() {
        for (s, soc) in ir_chance_blocks(&h_d, cfg, sym, sigma_n)?.into_iter().enumerate() {
            add_soc_block(&mut prog, &format!("ir{s}"), &x, soc, form)?;
        }
    } else {
        for (s, b) in ir_sproc_lmis(&h_d, cfg, sym, sigma_n, cfg.sproc)?.into_iter().enumerate() {
            add_robust_block(&mut prog, &format!("ir{s}"), &x, b, form, &mut multipliers)?;
        }
    }

    let mut z = None;
    let mut z_lift = None;
    if variant.knows_eves() {
        for (k, h_k) in ch.h_k_hat.iter().enumerate() {
            let h_k: Vec<Complex64> = rotate(h_k, sym);
            if variant.is_probabilistic() {
                for (s, soc) in eve_chance_blocks(&h_k, cfg, sym, sigma_n)?.into_iter().enumerate() {
                    add_soc_block(&mut prog, &format!("eve{k}_{s}"), &x, soc, form)?;
                }
            } else {
                let blocks = eve_sproc_lmis(&h_k, cfg, sym, sigma_n, cfg.sproc)?;
                for (s, b) in blocks.into_iter().enumerate() {
                    add_robust_block(&mut prog, &format!("eve{k}_{s}"), &x, b, form, &mut multipliers)?;
                }
            }
        }
    } else {
        let zr = prog.add_var_block(2 * n, -inf, inf);
        let zl = Lift::add(&mut prog, "schur_z", &zr, cfg.lift)?;
        prog.add_ineq("an_floor", zl.trace_terms(1.0), Sense::Ge, cfg.p_an_mw());
        for a in 0..n {
            let mut row = zl.antenna_terms(n, a, 1.0);
            row.extend(u_lift.antenna_terms(n, a, -1.0));
            prog.add_ineq(&format!("an_share{a}"), row, Sense::Le, 0.0);
        }
        z = Some(zr);
        z_lift = Some(zl);
    }

    Ok(Assembled {
        prog,
        layout: ProgramLayout { n, x, u_lift, t, z, z_lift, multipliers },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SprocMode;
    use crate::scenario::draw_instance;

    fn small_cfg() -> ScenarioConfig {
        let mut cfg = ScenarioConfig::default();
        cfg.n_das = 4;
        cfg.n_eves = 2;
        cfg
    }

    #[test]
    fn variable_counts() {
        let cfg = small_cfg();
        let (_, ch) = draw_instance(&cfg, 0);
        let sym = SymbolSpec::new(4);
        let ones = vec![1.0; 4];
        let lift = SymVar::len(8);
        let mut diag = cfg.clone();
        diag.lift = LiftForm::Diagonal;
        let a = assemble(Variant::UnknownDet, &ch, &diag, &sym, Selection::Fixed(&ones)).unwrap();
        assert_eq!(a.prog.n_vars(), 2 * (8 + 4));
        assert_eq!(a.prog.psd_blocks().len(), 2 * 4);
        let a = assemble(Variant::ImperfectProb, &ch, &cfg, &sym, Selection::Relaxed { t_prev: &ones, phi: 1.0 }).unwrap();
        assert_eq!(a.prog.n_vars(), 8 + lift + 4);
        assert_eq!(a.prog.soc_blocks().len(), 2 + 2 * 2);
        let a = assemble(Variant::UnknownProb, &ch, &cfg, &sym, Selection::Fixed(&ones)).unwrap();
        assert_eq!(a.prog.n_vars(), 2 * (8 + lift));
        assert_eq!(a.prog.soc_blocks().len(), 2);
        assert_eq!(a.prog.psd_blocks().len(), 2);
    }

    #[test]
    fn lmi_mode_adds_multipliers() {
        let mut cfg = small_cfg();
        cfg.sproc = SprocMode::PaperFaithful;
        let (_, ch) = draw_instance(&cfg, 0);
        let sym = SymbolSpec::new(4);
        let a = assemble(Variant::ImperfectDet, &ch, &cfg, &sym, Selection::Fixed(&[1.0; 4])).unwrap();
        assert_eq!(a.layout.multipliers.len(), 2 + 2 * 2);
        for &l in &a.layout.multipliers {
            assert_eq!(a.prog.bounds(l).0, 0.0);
        }
        let a = assemble(Variant::UnknownDet, &ch, &cfg, &sym, Selection::Fixed(&[1.0; 4])).unwrap();
        assert_eq!(a.layout.multipliers.len(), 2);
    }

    #[test]
    fn schur_link_holds_at_outer_product() {
        let mut prog = ConicProgram::new();
        let x = prog.add_var_block(3, -10.0, 10.0);
        let l = prog.add_sym_block(3);
        let (vars, lmi) = schur_link(l, &x);
        let xv = [0.3, -1.2, 2.0];
        let mut v = vec![0.0; prog.n_vars()];
        v[..3].copy_from_slice(&xv);
        for i in 0..3 {
            for j in i..3 {
                v[l.idx(i, j)] = xv[i] * xv[j];
            }
        }
        let local: Vec<f64> = vars.iter().map(|&i| v[i]).collect();
        assert!(lmi.min_eigenvalue(&local).abs() < 1e-12);
        v[l.idx(0, 0)] -= 0.01;
        let local: Vec<f64> = vars.iter().map(|&i| v[i]).collect();
        assert!(lmi.min_eigenvalue(&local) < 0.0);
    }
}
