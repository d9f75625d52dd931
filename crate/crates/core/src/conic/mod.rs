//! Solver-agnostic conic programs over a real variable vector.
//!
//! A [`ConicProgram`] minimizes `c^T v + offset` subject to linear
//! equalities and inequalities, per-variable bounds, second-order cones
//! built from [`SocBlock`]s and PSD constraints built from [`LmiBlock`]s.
//! Each cone block is written over its own local variables and bound to
//! program variables by an index list.
//!
//! ```
//! use sdap::conic::{ConicProgram, Sense, SolveStatus};
//!
//! let mut prog = ConicProgram::new();
//! let x = prog.add_var_block(1, f64::NEG_INFINITY, f64::INFINITY);
//! prog.add_objective(x.start, 1.0);
//! prog.add_ineq("floor", vec![(x.start, 1.0)], Sense::Ge, 1.0);
//! let res = sdap::conic::solve(&prog);
//! assert_eq!(res.status, SolveStatus::Optimal);
//! assert!((res.v[0] - 1.0).abs() < 1e-7);
//! ```

mod audit;
mod backend;
mod text;

use std::ops::Range;

pub use audit::{audit, Audit};
pub use backend::{solve, solve_with, SolveResult, SolveStatus, SolverOptions};

use crate::error::{Error, Result};
use crate::robust::{LmiBlock, SocBlock};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
}

impl Sense {
    fn as_str(self) -> &'static str {
        match self {
            Sense::Le => "le",
            Sense::Ge => "ge",
        }
    }
}

/// Sparse row `sum coeffs_i v_i` against a scalar; coefficients sorted by index, no zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearRow {
    pub label: String,
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl LinearRow {
    fn new(label: &str, mut coeffs: Vec<(usize, f64)>, rhs: f64) -> Self {
        coeffs.sort_by_key(|&(i, _)| i);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(coeffs.len());
        for (i, c) in coeffs {
            match merged.last_mut() {
                Some((j, acc)) if *j == i => *acc += c,
                _ => merged.push((i, c)),
            }
        }
        merged.retain(|&(_, c)| c != 0.0);
        Self { label: sanitize(label), coeffs: merged, rhs }
    }

    pub fn eval(&self, v: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(i, c)| c * v[i]).sum()
    }

    /// Largest absolute term, used to normalize violations.
    pub fn magnitude(&self, v: &[f64]) -> f64 {
        self.coeffs
            .iter()
            .map(|&(i, c)| (c * v[i]).abs())
            .fold(self.rhs.abs(), f64::max)
    }
}

fn sanitize(label: &str) -> String {
    let s: String = label.chars().map(|c| if c.is_whitespace() { '_' } else { c }).collect();
    if s.is_empty() { "_".into() } else { s }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Inequality {
    pub row: LinearRow,
    pub sense: Sense,
}

impl Inequality {
    /// Signed violation; positive when broken.
    pub fn violation(&self, v: &[f64]) -> f64 {
        let lhs = self.row.eval(v);
        match self.sense {
            Sense::Le => lhs - self.row.rhs,
            Sense::Ge => self.row.rhs - lhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundSoc {
    pub label: String,
    pub vars: Vec<usize>,
    pub block: SocBlock,
}

impl BoundSoc {
    pub fn local(&self, v: &[f64]) -> Vec<f64> {
        self.vars.iter().map(|&i| v[i]).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundLmi {
    pub label: String,
    pub vars: Vec<usize>,
    pub block: LmiBlock,
}

impl BoundLmi {
    pub fn local(&self, v: &[f64]) -> Vec<f64> {
        self.vars.iter().map(|&i| v[i]).collect()
    }
}

/// Real symmetric matrix variable stored as its upper triangle, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymVar {
    pub start: usize,
    pub dim: usize,
}

impl SymVar {
    pub fn len(dim: usize) -> usize {
        dim * (dim + 1) / 2
    }

    /// Program index of entry `(i, j)` in either order.
    pub fn idx(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        debug_assert!(j < self.dim);
        self.start + i * self.dim - i * (i + 1) / 2 + j
    }

    pub fn diag(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.dim).map(|i| self.idx(i, i))
    }

    pub fn extract(&self, v: &[f64]) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.dim, self.dim, |i, j| v[self.idx(i, j)])
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConicProgram {
    objective: Vec<f64>,
    objective_offset: f64,
    lb: Vec<f64>,
    ub: Vec<f64>,
    eq: Vec<LinearRow>,
    ineq: Vec<Inequality>,
    soc: Vec<BoundSoc>,
    psd: Vec<BoundLmi>,
}

impl ConicProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    /// Appends `count` variables sharing the bounds `[lb, ub]`.
    pub fn add_var_block(&mut self, count: usize, lb: f64, ub: f64) -> Range<usize> {
        let start = self.n_vars();
        self.objective.resize(start + count, 0.0);
        self.lb.resize(start + count, lb);
        self.ub.resize(start + count, ub);
        start..start + count
    }

    /// Appends an unbounded symmetric `dim x dim` matrix variable.
    pub fn add_sym_block(&mut self, dim: usize) -> SymVar {
        let r = self.add_var_block(SymVar::len(dim), f64::NEG_INFINITY, f64::INFINITY);
        SymVar { start: r.start, dim }
    }

    pub fn set_bounds(&mut self, var: usize, lb: f64, ub: f64) {
        self.lb[var] = lb;
        self.ub[var] = ub;
    }

    pub fn bounds(&self, var: usize) -> (f64, f64) {
        (self.lb[var], self.ub[var])
    }

    pub fn add_objective(&mut self, var: usize, coef: f64) {
        self.objective[var] += coef;
    }

    pub fn add_objective_offset(&mut self, c: f64) {
        self.objective_offset += c;
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn objective_offset(&self) -> f64 {
        self.objective_offset
    }

    pub fn objective_value(&self, v: &[f64]) -> f64 {
        self.objective.iter().zip(v).map(|(c, x)| c * x).sum::<f64>() + self.objective_offset
    }

    pub fn add_eq(&mut self, label: &str, coeffs: Vec<(usize, f64)>, rhs: f64) {
        self.eq.push(LinearRow::new(label, coeffs, rhs));
    }

    pub fn add_ineq(&mut self, label: &str, coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        self.ineq.push(Inequality { row: LinearRow::new(label, coeffs, rhs), sense });
    }

    /// Binds `block` to program variables `vars`; a block without a norm part becomes a row.
    pub fn add_soc(&mut self, label: &str, vars: Vec<usize>, block: SocBlock) -> Result<()> {
        if vars.len() != block.dim() || block.theta_sqrt.len() != block.dim() {
            return Err(Error::Program(format!("SOC {label}: {} vars for dim {}", vars.len(), block.dim())));
        }
        if block.is_linear() {
            let coeffs = vars.iter().copied().zip(block.a_bar.iter().copied()).collect();
            self.add_ineq(label, coeffs, Sense::Le, block.rhs);
        } else {
            self.soc.push(BoundSoc { label: sanitize(label), vars, block });
        }
        Ok(())
    }

    pub fn add_psd(&mut self, label: &str, vars: Vec<usize>, block: LmiBlock) -> Result<()> {
        if vars.len() != block.n_local() {
            return Err(Error::Program(format!("PSD {label}: {} vars for {} locals", vars.len(), block.n_local())));
        }
        self.psd.push(BoundLmi { label: sanitize(label), vars, block });
        Ok(())
    }

    pub fn eq_rows(&self) -> &[LinearRow] {
        &self.eq
    }

    pub fn ineq_rows(&self) -> &[Inequality] {
        &self.ineq
    }

    pub fn soc_blocks(&self) -> &[BoundSoc] {
        &self.soc
    }

    pub fn psd_blocks(&self) -> &[BoundLmi] {
        &self.psd
    }

    /// Checks that every constraint references only existing variables.
    pub fn validate(&self) -> Result<()> {
        let n = self.n_vars();
        let bad = |label: &str| Err(Error::Program(format!("{label} references a variable >= {n}")));
        for row in self.eq.iter().chain(self.ineq.iter().map(|q| &q.row)) {
            if row.coeffs.iter().any(|&(i, _)| i >= n) {
                return bad(&row.label);
            }
        }
        for b in &self.soc {
            if b.vars.iter().any(|&i| i >= n) {
                return bad(&b.label);
            }
        }
        for b in &self.psd {
            if b.vars.iter().any(|&i| i >= n) {
                return bad(&b.label);
            }
        }
        if self.lb.iter().zip(&self.ub).any(|(l, u)| l > u || l.is_nan() || u.is_nan()) {
            return Err(Error::Program("variable with empty bound interval".into()));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        text::write(self)
    }

    pub fn from_text(s: &str) -> Result<Self> {
        text::read(s)
    }
}
