//! Line-oriented dump format. Floats use 17 significant digits so every
//! value parses back to the same bits.
//!
//! ```text
//! conic-program 1
//! vars <n>
//! offset <f>
//! objective <f> x n
//! lower <f> x n
//! upper <f> x n
//! eq <count>
//! <label> <rhs> <dense row>
//! ineq <count>
//! <label> <le|ge> <rhs> <dense row>
//! soc <count>
//! <label> <dim> <scale> <rhs> <vars> <a_bar> <theta_sqrt>
//! psd <count>
//! <label> <size> <n_local> <vars>
//! c <i> <j> <value>
//! k <local> <i> <j> <value>
//! end
//! ```

use std::fmt::Write;

use super::{ConicProgram, Sense};
use crate::error::{Error, Result};
use crate::robust::{LmiBlock, SocBlock};

fn f(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

fn join_f(xs: impl IntoIterator<Item = f64>) -> String {
    xs.into_iter().map(f).collect::<Vec<_>>().join(" ")
}

fn join_u(xs: &[usize]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn dense(n: usize, coeffs: &[(usize, f64)]) -> Vec<f64> {
    let mut row = vec![0.0; n];
    for &(i, c) in coeffs {
        row[i] = c;
    }
    row
}

pub(super) fn write(p: &ConicProgram) -> String {
    let n = p.n_vars();
    let mut s = String::new();
    let _ = writeln!(s, "conic-program 1");
    let _ = writeln!(s, "vars {n}");
    let _ = writeln!(s, "offset {}", f(p.objective_offset));
    let _ = writeln!(s, "objective {}", join_f(p.objective.iter().copied()));
    let _ = writeln!(s, "lower {}", join_f(p.lb.iter().copied()));
    let _ = writeln!(s, "upper {}", join_f(p.ub.iter().copied()));
    let _ = writeln!(s, "eq {}", p.eq.len());
    for r in &p.eq {
        let _ = writeln!(s, "{} {} {}", r.label, f(r.rhs), join_f(dense(n, &r.coeffs)));
    }
    let _ = writeln!(s, "ineq {}", p.ineq.len());
    for q in &p.ineq {
        let r = &q.row;
        let _ = writeln!(s, "{} {} {} {}", r.label, q.sense.as_str(), f(r.rhs), join_f(dense(n, &r.coeffs)));
    }
    let _ = writeln!(s, "soc {}", p.soc.len());
    for b in &p.soc {
        let blk = &b.block;
        let _ = writeln!(
            s,
            "{} {} {} {} {} {} {}",
            b.label,
            blk.dim(),
            f(blk.scale),
            f(blk.rhs),
            join_u(&b.vars),
            join_f(blk.a_bar.iter().copied()),
            join_f(blk.theta_sqrt.iter().copied())
        );
    }
    let _ = writeln!(s, "psd {}", p.psd.len());
    for b in &p.psd {
        let blk = &b.block;
        let _ = writeln!(s, "{} {} {} {}", b.label, blk.size(), blk.n_local(), join_u(&b.vars));
        for &(i, j, c) in blk.constant_terms() {
            let _ = writeln!(s, "c {i} {j} {}", f(c));
        }
        for k in 0..blk.n_local() {
            for &(i, j, c) in blk.coeff_terms(k) {
                let _ = writeln!(s, "k {k} {i} {j} {}", f(c));
            }
        }
    }
    let _ = writeln!(s, "end");
    s
}

struct Lines<'a> {
    it: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Program(format!("dump line {}: {}", line + 1, msg.into()))
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<(usize, Vec<&'a str>)> {
        match self.it.next() {
            Some((i, l)) => Ok((i, l.split_whitespace().collect())),
            None => Err(Error::Program("dump truncated".into())),
        }
    }

    fn peek_tag(&mut self) -> Option<&'a str> {
        self.it.peek().and_then(|(_, l)| l.split_whitespace().next())
    }

    fn header(&mut self, tag: &str) -> Result<(usize, Vec<&'a str>)> {
        let (i, toks) = self.next()?;
        if toks.first() != Some(&tag) {
            return Err(perr(i, format!("expected '{tag}'")));
        }
        Ok((i, toks[1..].to_vec()))
    }

    fn count(&mut self, tag: &str) -> Result<usize> {
        let (i, toks) = self.header(tag)?;
        toks.first().ok_or_else(|| perr(i, "missing count"))?.parse().map_err(|_| perr(i, "bad count"))
    }
}

fn pf(line: usize, tok: &str) -> Result<f64> {
    match tok {
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => tok.parse().map_err(|_| perr(line, format!("bad float '{tok}'"))),
    }
}

fn pu(line: usize, tok: &str) -> Result<usize> {
    tok.parse().map_err(|_| perr(line, format!("bad index '{tok}'")))
}

fn floats(line: usize, toks: &[&str], n: usize) -> Result<Vec<f64>> {
    if toks.len() != n {
        return Err(perr(line, format!("expected {n} values, found {}", toks.len())));
    }
    toks.iter().map(|t| pf(line, t)).collect()
}

fn sparse(row: Vec<f64>) -> Vec<(usize, f64)> {
    row.into_iter().enumerate().filter(|&(_, c)| c != 0.0).collect()
}

pub(super) fn read(text: &str) -> Result<ConicProgram> {
    let mut lines = Lines { it: text.lines().enumerate().peekable() };
    let (i, magic) = lines.header("conic-program")?;
    if magic != ["1"] {
        return Err(perr(i, "unsupported version"));
    }
    let n = lines.count("vars")?;
    let mut p = ConicProgram::new();
    let (i, t) = lines.header("offset")?;
    p.objective_offset = floats(i, &t, 1)?[0];
    let (i, t) = lines.header("objective")?;
    p.objective = floats(i, &t, n)?;
    let (i, t) = lines.header("lower")?;
    p.lb = floats(i, &t, n)?;
    let (i, t) = lines.header("upper")?;
    p.ub = floats(i, &t, n)?;

    for _ in 0..lines.count("eq")? {
        let (i, t) = lines.next()?;
        if t.len() != n + 2 {
            return Err(perr(i, "malformed equality row"));
        }
        let rhs = pf(i, t[1])?;
        p.add_eq(t[0], sparse(floats(i, &t[2..], n)?), rhs);
    }
    for _ in 0..lines.count("ineq")? {
        let (i, t) = lines.next()?;
        if t.len() != n + 3 {
            return Err(perr(i, "malformed inequality row"));
        }
        let sense = match t[1] {
            "le" => Sense::Le,
            "ge" => Sense::Ge,
            other => return Err(perr(i, format!("bad sense '{other}'"))),
        };
        let rhs = pf(i, t[2])?;
        p.add_ineq(t[0], sparse(floats(i, &t[3..], n)?), sense, rhs);
    }
    for _ in 0..lines.count("soc")? {
        let (i, t) = lines.next()?;
        let dim = pu(i, t.get(1).ok_or_else(|| perr(i, "missing dim"))?)?;
        if t.len() != 4 + 3 * dim {
            return Err(perr(i, "malformed SOC block"));
        }
        let vars = t[4..4 + dim].iter().map(|x| pu(i, x)).collect::<Result<Vec<_>>>()?;
        let block = SocBlock {
            a_bar: floats(i, &t[4 + dim..4 + 2 * dim], dim)?,
            theta_sqrt: floats(i, &t[4 + 2 * dim..], dim)?,
            scale: pf(i, t[2])?,
            rhs: pf(i, t[3])?,
        };
        p.soc.push(super::BoundSoc { label: t[0].to_string(), vars, block });
    }
    for _ in 0..lines.count("psd")? {
        let (i, t) = lines.next()?;
        if t.len() < 3 {
            return Err(perr(i, "malformed PSD header"));
        }
        let size = pu(i, t[1])?;
        let n_local = pu(i, t[2])?;
        if t.len() != 3 + n_local {
            return Err(perr(i, "PSD variable list length"));
        }
        let vars = t[3..].iter().map(|x| pu(i, x)).collect::<Result<Vec<_>>>()?;
        let mut block = LmiBlock::new(size, n_local);
        while let Some(tag @ ("c" | "k")) = lines.peek_tag() {
            let (i, t) = lines.next()?;
            let idx = |k: usize| -> Result<usize> {
                let v = pu(i, t.get(k).ok_or_else(|| perr(i, "short entry"))?)?;
                Ok(v)
            };
            if tag == "c" {
                let (a, b) = (idx(1)?, idx(2)?);
                if a >= size || b >= size || t.len() != 4 {
                    return Err(perr(i, "bad constant entry"));
                }
                block.add_const(a, b, pf(i, t[3])?);
            } else {
                let (k, a, b) = (idx(1)?, idx(2)?, idx(3)?);
                if k >= n_local || a >= size || b >= size || t.len() != 5 {
                    return Err(perr(i, "bad coefficient entry"));
                }
                block.add_coeff(k, a, b, pf(i, t[4])?);
            }
        }
        p.psd.push(super::BoundLmi { label: t[0].to_string(), vars, block });
    }
    lines.header("end")?;
    p.validate()?;
    Ok(p)
}
