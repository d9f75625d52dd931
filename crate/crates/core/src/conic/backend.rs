use std::collections::BTreeMap;
use std::f64::consts::SQRT_2;
use std::time::Instant;

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettings, DefaultSolver, IPSolver, NonnegativeConeT, PSDTriangleConeT,
    SecondOrderConeT, SolverStatus, SupportedConeT, ZeroConeT,
};

use super::{ConicProgram, Sense, SymVar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalTrouble,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::NumericalTrouble => "numerical_trouble",
        }
    }
}

/// `v` is non-empty iff `status == Optimal`.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub v: Vec<f64>,
    pub objective_value: f64,
    pub solve_time_s: f64,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub tol_feas: f64,
    pub tol_gap: f64,
    pub max_iter: u32,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol_feas: 1e-8, tol_gap: 1e-8, max_iter: 200 }
    }
}

pub fn solve(prog: &ConicProgram) -> SolveResult {
    solve_with(prog, &SolverOptions::default())
}

/// Accumulates `A` in `A v + s = b` by (row, col).
#[derive(Default)]
struct Rows {
    entries: BTreeMap<(usize, usize), f64>,
    b: Vec<f64>,
}

impl Rows {
    fn push(&mut self, coeffs: impl IntoIterator<Item = (usize, f64)>, b: f64) -> usize {
        let r = self.b.len();
        self.b.push(b);
        for (c, v) in coeffs {
            *self.entries.entry((r, c)).or_insert(0.0) += v;
        }
        r
    }

    fn add(&mut self, row: usize, col: usize, v: f64) {
        *self.entries.entry((row, col)).or_insert(0.0) += v;
    }

    fn into_csc(self, n: usize) -> (CscMatrix<f64>, Vec<f64>) {
        let m = self.b.len();
        let mut by_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for ((r, c), v) in self.entries {
            if v != 0.0 {
                by_col[c].push((r, v));
            }
        }
        let mut colptr = Vec::with_capacity(n + 1);
        let mut rowval = Vec::new();
        let mut nzval = Vec::new();
        colptr.push(0);
        for col in by_col {
            for (r, v) in col {
                rowval.push(r);
                nzval.push(v);
            }
            colptr.push(rowval.len());
        }
        (CscMatrix::new(m, n, colptr, rowval, nzval), self.b)
    }
}

fn svec_index(i: usize, j: usize) -> usize {
    j * (j + 1) / 2 + i
}

fn failure(status: SolveStatus, detail: String, started: Instant) -> SolveResult {
    SolveResult {
        status,
        v: Vec::new(),
        objective_value: f64::NAN,
        solve_time_s: started.elapsed().as_secs_f64(),
        detail,
    }
}

pub fn solve_with(prog: &ConicProgram, opts: &SolverOptions) -> SolveResult {
    let started = Instant::now();
    if let Err(e) = prog.validate() {
        return failure(SolveStatus::NumericalTrouble, e.to_string(), started);
    }
    let n = prog.n_vars();
    let mut rows = Rows::default();
    let mut cones: Vec<SupportedConeT<f64>> = Vec::new();

    for r in prog.eq_rows() {
        rows.push(r.coeffs.iter().copied(), r.rhs);
    }
    if !prog.eq_rows().is_empty() {
        cones.push(ZeroConeT(prog.eq_rows().len()));
    }

    let before = rows.b.len();
    for q in prog.ineq_rows() {
        match q.sense {
            Sense::Le => rows.push(q.row.coeffs.iter().copied(), q.row.rhs),
            Sense::Ge => rows.push(q.row.coeffs.iter().map(|&(i, c)| (i, -c)), -q.row.rhs),
        };
    }
    for var in 0..n {
        let (lb, ub) = prog.bounds(var);
        if lb.is_finite() {
            rows.push([(var, -1.0)], -lb);
        }
        if ub.is_finite() {
            rows.push([(var, 1.0)], ub);
        }
    }
    if rows.b.len() > before {
        cones.push(NonnegativeConeT(rows.b.len() - before));
    }

    for soc in prog.soc_blocks() {
        let blk = &soc.block;
        rows.push(soc.vars.iter().copied().zip(blk.a_bar.iter().copied()), blk.rhs);
        let mut dim = 1;
        for (k, &t) in blk.theta_sqrt.iter().enumerate() {
            if t != 0.0 {
                rows.push([(soc.vars[k], -blk.scale * t)], 0.0);
                dim += 1;
            }
        }
        cones.push(SecondOrderConeT(dim));
    }

    for psd in prog.psd_blocks() {
        let blk = &psd.block;
        let size = blk.size();
        let base = rows.b.len();
        for _ in 0..SymVar::len(size) {
            rows.push(std::iter::empty(), 0.0);
        }
        let w = |i: usize, j: usize| if i == j { 1.0 } else { SQRT_2 };
        for &(i, j, c) in blk.constant_terms() {
            rows.b[base + svec_index(i, j)] += c * w(i, j);
        }
        for (local, &var) in psd.vars.iter().enumerate() {
            for &(i, j, c) in blk.coeff_terms(local) {
                rows.add(base + svec_index(i, j), var, -c * w(i, j));
            }
        }
        cones.push(PSDTriangleConeT(size));
    }

    let p = CscMatrix::<f64>::zeros((n, n));
    let (a, b) = rows.into_csc(n);
    let settings = DefaultSettings {
        verbose: false,
        tol_gap_abs: opts.tol_gap,
        tol_gap_rel: opts.tol_gap,
        tol_feas: opts.tol_feas,
        max_iter: opts.max_iter,
        ..Default::default()
    };
    let mut solver = match DefaultSolver::new(&p, prog.objective(), &a, &b, &cones, settings) {
        Ok(s) => s,
        Err(e) => return failure(SolveStatus::NumericalTrouble, format!("backend setup: {e}"), started),
    };
    solver.solve();
    let sol = &solver.solution;
    let status = match sol.status {
        SolverStatus::Solved | SolverStatus::AlmostSolved => SolveStatus::Optimal,
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => SolveStatus::Infeasible,
        SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => SolveStatus::Unbounded,
        _ => SolveStatus::NumericalTrouble,
    };
    let detail = format!("{:?} after {} iterations", sol.status, sol.iterations);
    if status != SolveStatus::Optimal {
        return failure(status, detail, started);
    }
    SolveResult {
        status,
        objective_value: prog.objective_value(&sol.x),
        v: sol.x.clone(),
        solve_time_s: started.elapsed().as_secs_f64(),
        detail,
    }
}
