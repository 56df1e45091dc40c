//! DIMACS CNF reading and writing, plus the comment-line formats for
//! markings (`c mark v <idx> <M|A|C>`) and partial assignments
//! (`v <idx> <0|1>`). Variable indices in those two formats are 0-based.
//!
//! The clause width of a formula without clauses cannot be inferred, so
//! the writer emits a `c width <k>` comment that the reader honours.

use std::fmt::Write as _;

use crate::engine::PartialAssignment;
use crate::formula::{Formula, Literal};
use crate::marking::{Marking, Role};
use crate::{Error, Result};

fn malformed(line: usize, msg: impl Into<String>) -> Error {
    Error::MalformedInput {
        line,
        msg: msg.into(),
    }
}

pub fn read_dimacs(text: &str) -> Result<Formula> {
    let mut header: Option<(usize, usize)> = None;
    let mut width_hint: Option<usize> = None;
    let mut clauses: Vec<(usize, Vec<Literal>)> = Vec::new();
    let mut current: Vec<Literal> = Vec::new();
    let mut current_line = 0;

    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('c') {
            let mut toks = rest.split_whitespace();
            if toks.next() == Some("width") {
                let k = toks
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| malformed(lineno, "bad width comment"))?;
                width_hint = Some(k);
            }
            continue;
        }
        if line.starts_with('%') {
            break;
        }
        if line.starts_with('p') {
            if header.is_some() {
                return Err(malformed(lineno, "duplicate header"));
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 4 || toks[0] != "p" || toks[1] != "cnf" {
                return Err(malformed(lineno, "expected `p cnf <vars> <clauses>`"));
            }
            let n = toks[2]
                .parse()
                .map_err(|_| malformed(lineno, "bad variable count"))?;
            let m = toks[3]
                .parse()
                .map_err(|_| malformed(lineno, "bad clause count"))?;
            header = Some((n, m));
            continue;
        }
        let Some((n, _)) = header else {
            return Err(malformed(lineno, "clause before header"));
        };
        for tok in line.split_whitespace() {
            let x: i64 = tok
                .parse()
                .map_err(|_| malformed(lineno, format!("bad literal `{tok}`")))?;
            if x == 0 {
                clauses.push((current_line, std::mem::take(&mut current)));
                continue;
            }
            if x.unsigned_abs() as usize > n {
                return Err(malformed(lineno, format!("variable {} out of range", x.abs())));
            }
            if current.is_empty() {
                current_line = lineno;
            }
            current.push(Literal::new(x.unsigned_abs() as usize - 1, x < 0));
        }
    }

    let Some((n, m)) = header else {
        return Err(malformed(0, "missing header"));
    };
    if !current.is_empty() {
        return Err(malformed(current_line, "clause missing 0 terminator"));
    }
    if clauses.len() != m {
        return Err(malformed(0, format!("header declares {m} clauses, found {}", clauses.len())));
    }
    let k = match clauses.first() {
        Some((_, c)) => c.len(),
        None => width_hint.unwrap_or(1),
    };
    if k == 0 {
        return Err(malformed(clauses[0].0, "empty clause"));
    }
    let mut lits = Vec::with_capacity(m * k);
    for (i, (_, c)) in clauses.into_iter().enumerate() {
        if c.len() != k {
            return Err(Error::NonUniformWidth {
                clause: i,
                width: c.len(),
                expected: k,
            });
        }
        lits.extend(c);
    }
    Formula::from_literals(n, k, lits)
}

pub fn write_dimacs(f: &Formula) -> String {
    let mut out = String::with_capacity(f.m() * f.k() * 6 + 32);
    let _ = writeln!(out, "c width {}", f.k());
    let _ = writeln!(out, "p cnf {} {}", f.n(), f.m());
    for c in f.clauses() {
        for l in c.literals {
            let _ = write!(out, "{} ", l.to_dimacs());
        }
        out.push_str("0\n");
    }
    out
}

pub fn write_marking(m: &Marking) -> String {
    let mut out = String::new();
    for (v, r) in m.role.iter().enumerate() {
        let _ = writeln!(out, "c mark v {v} {}", r.letter());
    }
    out
}

/// Collect `c mark` lines. Returns `None` when the text has none; every
/// variable must be listed otherwise.
pub fn read_marking(text: &str, n: usize) -> Result<Option<Marking>> {
    let mut role: Vec<Option<Role>> = vec![None; n];
    let mut any = false;
    for (i, line) in text.lines().enumerate() {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() < 2 || toks[0] != "c" || toks[1] != "mark" {
            continue;
        }
        any = true;
        let bad = || malformed(i + 1, "expected `c mark v <idx> <M|A|C>`");
        if toks.len() != 5 || toks[2] != "v" {
            return Err(bad());
        }
        let v: usize = toks[3].parse().map_err(|_| bad())?;
        let r = toks[4]
            .chars()
            .next()
            .and_then(Role::from_letter)
            .filter(|_| toks[4].len() == 1)
            .ok_or_else(bad)?;
        if v >= n {
            return Err(malformed(i + 1, format!("variable {v} out of range")));
        }
        role[v] = Some(r);
    }
    if !any {
        return Ok(None);
    }
    let role: Option<Vec<Role>> = role.into_iter().collect();
    role.map(|role| Some(Marking { role }))
        .ok_or_else(|| malformed(0, "marking does not cover every variable"))
}

pub fn write_partial(a: &PartialAssignment) -> String {
    let mut out = String::new();
    for (v, b) in a.iter() {
        let _ = writeln!(out, "v {v} {}", b as u8);
    }
    out
}

/// Parse `v <idx> <0|1>` lines; blank lines and lines starting with `c` are
/// skipped.
pub fn read_partial(text: &str, n: usize) -> Result<PartialAssignment> {
    let mut a = PartialAssignment::new(n);
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        let bad = || malformed(i + 1, "expected `v <idx> <0|1>`");
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 3 || toks[0] != "v" {
            return Err(bad());
        }
        let v: usize = toks[1].parse().map_err(|_| bad())?;
        let b = match toks[2] {
            "0" => false,
            "1" => true,
            _ => return Err(bad()),
        };
        if v >= n {
            return Err(malformed(i + 1, format!("variable {v} out of range")));
        }
        if a.set(v, b).is_some() {
            return Err(malformed(i + 1, format!("variable {v} assigned twice")));
        }
    }
    Ok(a)
}
