use super::ConicProgram;
use crate::robust::min_eigenvalue;

/// Largest normalized violation found at a point.
///
/// Each violation is divided by `max(1, magnitude)` where the magnitude is
/// the largest term of the row, the cone's scalar parts, or the Frobenius
/// norm of the assembled LMI.
#[derive(Debug, Clone, PartialEq)]
pub struct Audit {
    pub max_violation: f64,
    pub worst: String,
}

impl Audit {
    fn record(&mut self, label: &str, raw: f64, magnitude: f64) {
        let v = raw / magnitude.max(1.0);
        if v > self.max_violation || v.is_nan() {
            self.max_violation = if v.is_nan() { f64::INFINITY } else { v };
            self.worst = label.to_string();
        }
    }
}

/// Checks every constraint of `prog` at `v` without involving the backend.
pub fn audit(prog: &ConicProgram, v: &[f64]) -> Audit {
    let mut a = Audit { max_violation: 0.0, worst: String::new() };
    if v.len() != prog.n_vars() {
        a.max_violation = f64::INFINITY;
        a.worst = "dimension".into();
        return a;
    }
    for (i, &x) in v.iter().enumerate() {
        let (lb, ub) = prog.bounds(i);
        if lb.is_finite() {
            a.record("bound", lb - x, lb.abs());
        }
        if ub.is_finite() {
            a.record("bound", x - ub, ub.abs());
        }
    }
    for r in prog.eq_rows() {
        a.record(&r.label, (r.eval(v) - r.rhs).abs(), r.magnitude(v));
    }
    for q in prog.ineq_rows() {
        a.record(&q.row.label, q.violation(v), q.row.magnitude(v));
    }
    for s in prog.soc_blocks() {
        let x = s.local(v);
        let lin = crate::robust::dot(&s.block.a_bar, &x);
        let norm = s.block.scale * s.block.norm_term(&x);
        let mag = lin.abs().max(norm).max(s.block.rhs.abs());
        a.record(&s.label, lin + norm - s.block.rhs, mag);
    }
    for p in prog.psd_blocks() {
        let m = p.block.assemble(&p.local(v));
        let mag = m.norm();
        a.record(&p.label, -min_eigenvalue(m), mag);
    }
    a
}
