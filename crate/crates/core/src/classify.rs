//! High-degree, bad and good variables and clauses.
//!
//! A variable is high-degree when it has at least Δ literal occurrences.
//! The bad variables are the least set containing the high-degree ones and
//! closed under "a clause with three or more bad variables makes all of its
//! variables bad"; such clauses are bad.

use serde::{Deserialize, Serialize};

use crate::formula::Formula;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierParams {
    pub r0: f64,
    pub delta: f64,
    pub r: f64,
    /// Replaces the default degree threshold Δ when set.
    pub override_delta: Option<u64>,
}

impl Default for ClassifierParams {
    fn default() -> Self {
        ClassifierParams {
            r0: 0.117841,
            delta: 0.00001,
            r: 0.1178,
            override_delta: None,
        }
    }
}

impl ClassifierParams {
    pub fn with_delta(delta_threshold: u64) -> Self {
        ClassifierParams {
            override_delta: Some(delta_threshold),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.r && self.r < self.r0 && self.r0 < 0.5) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < r < r0 < 1/2, got r = {}, r0 = {}",
                self.r, self.r0
            )));
        }
        if self.override_delta == Some(0) {
            return Err(Error::InvalidParameter("degree threshold must be at least 1".into()));
        }
        Ok(())
    }

    /// 2^{(r0 − 2δ)k}.
    fn base(&self, k: usize) -> f64 {
        ((self.r0 - 2.0 * self.delta) * k as f64).exp2()
    }

    /// The degree threshold Δ = ⌈2^{(r0 − 2δ)k}⌉ unless overridden.
    pub fn degree_threshold(&self, k: usize) -> u64 {
        self.override_delta.unwrap_or_else(|| {
            let d = self.base(k).ceil();
            if d >= u64::MAX as f64 {
                u64::MAX
            } else {
                d.max(1.0) as u64
            }
        })
    }

    /// α0 = 2^{(r0 − 2δ)k} / k³.
    pub fn alpha0(&self, k: usize) -> f64 {
        self.base(k) / (k as f64).powi(3)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    /// Literal occurrences per variable, repetitions included.
    pub degree: Vec<u32>,
    pub bad_var: Vec<bool>,
    pub bad_clause: Vec<bool>,
    /// The threshold Δ used.
    pub delta: u64,
}

impl Classification {
    pub fn is_bad_var(&self, v: usize) -> bool {
        self.bad_var[v]
    }

    pub fn is_bad_clause(&self, c: usize) -> bool {
        self.bad_clause[c]
    }

    pub fn bad_vars(&self) -> Vec<usize> {
        (0..self.bad_var.len()).filter(|&v| self.bad_var[v]).collect()
    }

    pub fn good_vars(&self) -> Vec<usize> {
        (0..self.bad_var.len()).filter(|&v| !self.bad_var[v]).collect()
    }

    pub fn bad_clauses(&self) -> Vec<usize> {
        (0..self.bad_clause.len()).filter(|&c| self.bad_clause[c]).collect()
    }

    pub fn good_clauses(&self) -> Vec<usize> {
        (0..self.bad_clause.len()).filter(|&c| !self.bad_clause[c]).collect()
    }

    pub fn bad_var_count(&self) -> usize {
        self.bad_var.iter().filter(|&&b| b).count()
    }

    pub fn bad_clause_count(&self) -> usize {
        self.bad_clause.iter().filter(|&&b| b).count()
    }

    pub fn max_degree(&self) -> u32 {
        self.degree.iter().copied().max().unwrap_or(0)
    }

    /// `histogram[d]` = number of variables of degree `d`.
    pub fn degree_histogram(&self) -> Vec<usize> {
        let mut h = vec![0; self.max_degree() as usize + 1];
        for &d in &self.degree {
            h[d as usize] += 1;
        }
        h
    }

    /// Descriptions of every violated classification invariant.
    pub fn violations(&self, f: &Formula) -> Vec<String> {
        let mut out = Vec::new();
        for c in 0..f.m() {
            let bad = f.vars_of(c).iter().filter(|&&v| self.bad_var[v as usize]).count();
            if self.bad_clause[c] {
                if bad != f.vars_of(c).len() {
                    out.push(format!("bad clause {c} has a good variable"));
                }
            } else if bad > 2 {
                out.push(format!("good clause {c} has {bad} bad variables"));
            }
        }
        for v in 0..f.n() {
            if !self.bad_var[v] && u64::from(self.degree[v]) >= self.delta {
                out.push(format!("good variable {v} has degree {}", self.degree[v]));
            }
        }
        out
    }
}

pub fn degree_table(f: &Formula) -> Vec<u32> {
    let mut deg = vec![0u32; f.n()];
    for l in f.all_literals() {
        deg[l.var()] += 1;
    }
    deg
}

/// Stack-and-counter fixpoint in O(n + mk).
pub fn classify(f: &Formula, p: &ClassifierParams) -> Classification {
    let degree = degree_table(f);
    let delta = p.degree_threshold(f.k());
    let mut bad_var = vec![false; f.n()];
    let mut bad_clause = vec![false; f.m()];
    let mut bad_count = vec![0u32; f.m()];
    let mut stack: Vec<usize> = Vec::new();
    for v in 0..f.n() {
        if u64::from(degree[v]) >= delta {
            bad_var[v] = true;
            stack.push(v);
        }
    }
    while let Some(v) = stack.pop() {
        for &c in f.occurrences(v) {
            let c = c as usize;
            bad_count[c] += 1;
            if bad_count[c] >= 3 && !bad_clause[c] {
                bad_clause[c] = true;
                for &w in f.vars_of(c) {
                    let w = w as usize;
                    if !bad_var[w] {
                        bad_var[w] = true;
                        stack.push(w);
                    }
                }
            }
        }
    }
    Classification {
        degree,
        bad_var,
        bad_clause,
        delta,
    }
}

/// Repeated-scan fixpoint; slow, used as a cross-check.
pub fn classify_naive(f: &Formula, p: &ClassifierParams) -> Classification {
    let degree = degree_table(f);
    let delta = p.degree_threshold(f.k());
    let mut bad_var: Vec<bool> = degree.iter().map(|&d| u64::from(d) >= delta).collect();
    let mut bad_clause = vec![false; f.m()];
    loop {
        let mut changed = false;
        for (c, bad) in bad_clause.iter_mut().enumerate() {
            let vs = f.vars_of(c);
            if !*bad && vs.iter().filter(|&&v| bad_var[v as usize]).count() >= 3 {
                *bad = true;
                changed = true;
                for &v in vs {
                    bad_var[v as usize] = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    Classification {
        degree,
        bad_var,
        bad_clause,
        delta,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::generate_random;

    #[test]
    fn degrees_count_repeats() {
        let f = Formula::from_dimacs_clauses(2, 3, &[&[1, 1, 2]]).unwrap();
        assert_eq!(degree_table(&f), vec![2, 1]);
        let empty = Formula::from_literals(3, 3, vec![]).unwrap();
        assert_eq!(degree_table(&empty), vec![0, 0, 0]);
    }

    #[test]
    fn low_degrees_give_nothing_bad() {
        let f = Formula::from_dimacs_clauses(6, 3, &[&[1, 2, 3], &[4, 5, 6]]).unwrap();
        let c = classify(&f, &ClassifierParams::with_delta(2));
        assert!(c.bad_vars().is_empty());
        assert!(c.bad_clauses().is_empty());
    }

    #[test]
    fn propagation_reaches_low_degree_variable() {
        // x1..x3 start bad; the first clause drags in x5, and then the
        // last clause (x5, x6, x7 bad) drags in x8, which has degree 1.
        let f = Formula::from_dimacs_clauses(
            8,
            4,
            &[&[1, 2, 3, 5], &[1, 2, 3, 6], &[1, 2, 3, 7], &[5, 6, 7, 8]],
        )
        .unwrap();
        let c = classify(&f, &ClassifierParams::with_delta(3));
        assert_eq!(c.degree, vec![3, 3, 3, 0, 2, 2, 2, 1]);
        assert_eq!(c.bad_vars(), vec![0, 1, 2, 4, 5, 6, 7]);
        assert_eq!(c.bad_clauses(), vec![0, 1, 2, 3]);
        assert_eq!(c, classify_naive(&f, &ClassifierParams::with_delta(3)));
    }

    #[test]
    fn default_constants() {
        let p = ClassifierParams::default();
        assert_eq!(p.degree_threshold(10), (1.17821f64).exp2().ceil() as u64);
        assert!((p.alpha0(10) - (1.17821f64).exp2() / 1000.0).abs() < 1e-12);
        assert!(p.validate().is_ok());
        assert!(ClassifierParams::with_delta(0).validate().is_err());
    }

    #[test]
    fn matches_naive_fixpoint() {
        for seed in 0..200 {
            let k = 3 + (seed as usize % 5);
            let f = generate_random(k, 40, 2.0, seed).unwrap();
            let p = ClassifierParams::with_delta(4 + seed % 6);
            let c = classify(&f, &p);
            assert_eq!(c, classify_naive(&f, &p));
            assert!(c.violations(&f).is_empty());
        }
    }
}
