//! Incrementally maintained Φ^Λ.
//!
//! Each clause carries two counters: literal slots made true by the current
//! pinning and literal slots on unpinned variables. Pinning or unpinning a
//! variable touches only the clauses it occurs in, and component searches use
//! epoch-stamped marks, so no step does work proportional to `n`.

use std::collections::HashMap;

use crate::formula::{Formula, Literal};
use crate::{Error, Result};

use super::sample::{Marginal, SampleCaps};
use super::{PartialAssignment, ResidualClause};

const MEMO_LIMIT: usize = 1 << 20;

type MemoKey = (u64, u64, usize, SampleCaps);

/// Marginals keyed on the complete pinning, for formulas with at most 64
/// variables.
#[derive(Clone, Default)]
struct Memo {
    assigned: u64,
    ones: u64,
    table: HashMap<MemoKey, (Marginal, usize)>,
}

const UNSET: u8 = 2;

/// The clauses and free variables of one connected component of G_{Φ^Λ}.
#[derive(Debug, Clone, Default)]
pub struct LocalComponent {
    pub clauses: Vec<ResidualClause>,
    /// Free variables of the clauses, ascending.
    pub vars: Vec<usize>,
}

#[derive(Clone)]
pub struct ResidualState<'f> {
    f: &'f Formula,
    value: Vec<u8>,
    true_slots: Vec<u32>,
    free_slots: Vec<u32>,
    empty: usize,
    pinned: usize,
    clause_mark: Vec<u32>,
    var_mark: Vec<u32>,
    epoch: u32,
    memo: Option<Box<Memo>>,
}

impl<'f> ResidualState<'f> {
    pub fn new(f: &'f Formula) -> Self {
        ResidualState {
            f,
            value: vec![UNSET; f.n()],
            true_slots: vec![0; f.m()],
            free_slots: vec![f.k() as u32; f.m()],
            empty: 0,
            pinned: 0,
            clause_mark: vec![0; f.m()],
            var_mark: vec![0; f.n()],
            epoch: 0,
            memo: None,
        }
    }

    pub fn from_assignment(f: &'f Formula, lam: &PartialAssignment) -> Self {
        let mut s = Self::new(f);
        for (v, b) in lam.iter() {
            s.pin(v, b);
        }
        s
    }

    pub fn formula(&self) -> &'f Formula {
        self.f
    }

    #[inline]
    pub fn value(&self, v: usize) -> Option<bool> {
        match self.value[v] {
            UNSET => None,
            b => Some(b == 1),
        }
    }

    /// Number of clauses with every literal falsified.
    pub fn empty_clauses(&self) -> usize {
        self.empty
    }

    pub fn pinned_count(&self) -> usize {
        self.pinned
    }

    #[inline]
    pub fn is_satisfied(&self, c: usize) -> bool {
        self.true_slots[c] > 0
    }

    /// Remember computed marginals by pinning. Only possible when n ≤ 64;
    /// returns whether the memo is active.
    pub fn enable_memo(&mut self) -> bool {
        if self.memo.is_none() && self.f.n() <= 64 {
            let mut memo = Memo::default();
            for v in 0..self.value.len() {
                if self.value[v] != UNSET {
                    memo.assigned |= 1 << v;
                    memo.ones |= u64::from(self.value[v]) << v;
                }
            }
            self.memo = Some(Box::new(memo));
        }
        self.memo.is_some()
    }

    pub(crate) fn memo_get(&self, v: usize, caps: SampleCaps) -> Option<(Marginal, usize)> {
        let m = self.memo.as_ref()?;
        m.table.get(&(m.assigned, m.ones, v, caps)).cloned()
    }

    pub(crate) fn memo_put(&mut self, v: usize, caps: SampleCaps, entry: (Marginal, usize)) {
        if let Some(m) = self.memo.as_mut() {
            if m.table.len() >= MEMO_LIMIT {
                m.table.clear();
            }
            m.table.insert((m.assigned, m.ones, v, caps), entry);
        }
    }

    pub fn pin(&mut self, v: usize, b: bool) {
        assert_eq!(self.value[v], UNSET, "variable {v} pinned twice");
        self.value[v] = b as u8;
        if let Some(m) = self.memo.as_mut() {
            m.assigned |= 1 << v;
            m.ones |= u64::from(b) << v;
        }
        self.pinned += 1;
        let f = self.f;
        for &c in f.occurrences(v) {
            let c = c as usize;
            for l in f.literals(c) {
                if l.var() == v {
                    self.free_slots[c] -= 1;
                    if l.eval(b) {
                        self.true_slots[c] += 1;
                    }
                }
            }
            if self.true_slots[c] == 0 && self.free_slots[c] == 0 {
                self.empty += 1;
            }
        }
    }

    pub fn unpin(&mut self, v: usize) -> bool {
        let b = self.value(v).expect("unpinning a free variable");
        self.value[v] = UNSET;
        if let Some(m) = self.memo.as_mut() {
            m.assigned &= !(1 << v);
            m.ones &= !(1 << v);
        }
        self.pinned -= 1;
        let f = self.f;
        for &c in f.occurrences(v) {
            let c = c as usize;
            if self.true_slots[c] == 0 && self.free_slots[c] == 0 {
                self.empty -= 1;
            }
            for l in f.literals(c) {
                if l.var() == v {
                    self.free_slots[c] += 1;
                    if l.eval(b) {
                        self.true_slots[c] -= 1;
                    }
                }
            }
        }
        b
    }

    /// Unpin every variable.
    pub fn clear(&mut self) {
        for v in 0..self.value.len() {
            if self.value[v] != UNSET {
                self.unpin(v);
            }
        }
    }

    pub fn assignment(&self) -> PartialAssignment {
        let mut a = PartialAssignment::new(self.value.len());
        for v in 0..self.value.len() {
            if let Some(b) = self.value(v) {
                a.set(v, b);
            }
        }
        a
    }

    /// Surviving literals of clause `c` (meaningful when unsatisfied).
    pub fn residual_literals(&self, c: usize) -> impl Iterator<Item = Literal> + '_ {
        self.f
            .literals(c)
            .iter()
            .copied()
            .filter(move |l| self.value[l.var()] == UNSET)
    }

    pub fn residual_clause(&self, c: usize) -> ResidualClause {
        ResidualClause {
            index: c,
            literals: self.residual_literals(c).collect(),
        }
    }

    /// Whether `v` is free and occurs in some unsatisfied clause.
    pub fn is_constrained(&self, v: usize) -> bool {
        self.value[v] == UNSET
            && self
                .f
                .occurrences(v)
                .iter()
                .any(|&c| !self.is_satisfied(c as usize))
    }

    fn next_epoch(&mut self) -> u32 {
        if self.epoch == u32::MAX {
            self.clause_mark.fill(0);
            self.var_mark.fill(0);
            self.epoch = 0;
        }
        self.epoch += 1;
        self.epoch
    }

    /// The component of G_{Φ^Λ} containing the free variable `v`: every
    /// unsatisfied clause reachable from `v` through free variables. Returns
    /// an empty component when `v` is in no unsatisfied clause, and
    /// `ComponentTooLarge` as soon as more than `cap` clauses are found.
    pub fn component_of(&mut self, v: usize, cap: usize) -> Result<LocalComponent> {
        debug_assert_eq!(self.value[v], UNSET);
        if !self.is_constrained(v) {
            return Ok(LocalComponent::default());
        }
        let epoch = self.next_epoch();
        let f = self.f;
        let mut clauses = Vec::new();
        let mut vars = vec![v];
        self.var_mark[v] = epoch;
        let mut head = 0;
        while head < vars.len() {
            let x = vars[head];
            head += 1;
            for &c in f.occurrences(x) {
                let c = c as usize;
                if self.clause_mark[c] == epoch || self.is_satisfied(c) {
                    continue;
                }
                self.clause_mark[c] = epoch;
                if clauses.len() == cap {
                    return Err(Error::ComponentTooLarge {
                        size: cap + 1,
                        cap,
                    });
                }
                let rc = self.residual_clause(c);
                for l in &rc.literals {
                    let y = l.var();
                    if self.var_mark[y] != epoch {
                        self.var_mark[y] = epoch;
                        vars.push(y);
                    }
                }
                clauses.push(rc);
            }
        }
        vars.sort_unstable();
        Ok(LocalComponent { clauses, vars })
    }

    /// Sizes (in clauses) of all components of G_{Φ^Λ}.
    pub fn component_sizes(&mut self) -> Vec<usize> {
        let f = self.f;
        let epoch = self.next_epoch();
        let mut sizes = Vec::new();
        let mut stack = Vec::new();
        for start in 0..f.m() {
            if self.clause_mark[start] == epoch || self.is_satisfied(start) {
                continue;
            }
            self.clause_mark[start] = epoch;
            stack.push(start);
            let mut size = 0;
            while let Some(c) = stack.pop() {
                size += 1;
                for &x in f.vars_of(c) {
                    let x = x as usize;
                    if self.value[x] != UNSET || self.var_mark[x] == epoch {
                        continue;
                    }
                    self.var_mark[x] = epoch;
                    for &d in f.occurrences(x) {
                        let d = d as usize;
                        if self.clause_mark[d] != epoch && !self.is_satisfied(d) {
                            self.clause_mark[d] = epoch;
                            stack.push(d);
                        }
                    }
                }
            }
            sizes.push(size);
        }
        sizes
    }
}
