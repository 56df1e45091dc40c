//! Exact model counting on residual clause lists.
//!
//! A component whose clause graph is a tree is counted by a rooted dynamic
//! program: each clause keeps a table over assignments of its own variables,
//! children send messages indexed by the variables they share with their
//! parent. Components with cycles are reduced to forests by enumerating the
//! variables shared along non-tree edges.

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::formula::Formula;
use crate::{Error, Result};

use super::{components_of, condition_all, covered_vars, simplify, Component, PartialAssignment, ResidualClause};

/// Default limit on the number of cycle-breaking variables per component.
pub const DEFAULT_EXCESS_CAP: usize = 24;

/// Components with at most this many variables are counted in `u128`.
pub const SMALL_COUNT_VARS: usize = 120;

/// Nonnegative integer arithmetic used by the counters.
pub trait Tally: Clone + PartialEq + std::fmt::Debug {
    fn nil() -> Self;
    fn unit() -> Self;
    fn is_nil(&self) -> bool;
    fn add_assign(&mut self, other: &Self);
    fn mul(&self, other: &Self) -> Self;
    fn pow2(bits: usize) -> Self;
    fn into_big(self) -> BigUint;
}

impl Tally for u128 {
    fn nil() -> Self {
        0
    }
    fn unit() -> Self {
        1
    }
    fn is_nil(&self) -> bool {
        *self == 0
    }
    fn add_assign(&mut self, other: &Self) {
        *self = self.checked_add(*other).expect("count overflows u128");
    }
    fn mul(&self, other: &Self) -> Self {
        self.checked_mul(*other).expect("count overflows u128")
    }
    fn pow2(bits: usize) -> Self {
        assert!(bits < 128, "count overflows u128");
        1u128 << bits
    }
    fn into_big(self) -> BigUint {
        BigUint::from(self)
    }
}

impl Tally for BigUint {
    fn nil() -> Self {
        Zero::zero()
    }
    fn unit() -> Self {
        One::one()
    }
    fn is_nil(&self) -> bool {
        Zero::is_zero(self)
    }
    fn add_assign(&mut self, other: &Self) {
        *self += other;
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn pow2(bits: usize) -> Self {
        <BigUint as One>::one() << bits
    }
    fn into_big(self) -> BigUint {
        self
    }
}

fn bits_of(sigma: usize, positions: &[usize]) -> usize {
    positions
        .iter()
        .enumerate()
        .fold(0, |acc, (j, &p)| acc | (((sigma >> p) & 1) << j))
}

/// Count the satisfying assignments of the variables of an acyclic
/// component (`tree_excess == 0`).
pub fn tree_count<T: Tally>(comp: &Component) -> Result<T> {
    if comp.tree_excess != 0 {
        let var = comp.cycle_vars.first().copied().unwrap_or(comp.vars[0]);
        let occurrences = comp
            .clauses
            .iter()
            .filter(|c| c.literals.iter().any(|l| l.var() == var))
            .count();
        return Err(Error::NotAForest { var, occurrences });
    }
    let len = comp.clauses.len();
    let vars: Vec<Vec<usize>> = comp.clauses.iter().map(ResidualClause::vars).collect();
    if let Some(w) = vars.iter().map(Vec::len).max() {
        if w >= usize::BITS as usize - 1 {
            return Err(Error::InvalidParameter(format!("clause with {w} free variables")));
        }
    }

    let mut children: Vec<Vec<usize>> = vec![Vec::new(); len];
    for (p, parent) in comp.parent.iter().enumerate() {
        if let Some(q) = parent {
            children[*q].push(p);
        }
    }

    // Positions of each child's separator variables inside the child's and
    // the parent's variable lists.
    let mut sep_child: Vec<Vec<usize>> = vec![Vec::new(); len];
    let mut sep_parent: Vec<Vec<usize>> = vec![Vec::new(); len];
    for p in 0..len {
        if let Some(q) = comp.parent[p] {
            for (i, v) in vars[p].iter().enumerate() {
                if let Ok(j) = vars[q].binary_search(v) {
                    sep_child[p].push(i);
                    sep_parent[p].push(j);
                }
            }
        }
    }

    let mut messages: Vec<Vec<T>> = vec![Vec::new(); len];
    let mut total = T::nil();
    for p in (0..len).rev() {
        let w = vars[p].len();
        let (mut pos, mut neg) = (0usize, 0usize);
        for l in &comp.clauses[p].literals {
            let bit = 1 << vars[p].binary_search(&l.var()).expect("literal var listed");
            if l.is_negated() {
                neg |= bit;
            } else {
                pos |= bit;
            }
        }
        let full = (1usize << w) - 1;
        let mut msg = match comp.parent[p] {
            Some(_) => vec![T::nil(); 1 << sep_child[p].len()],
            None => Vec::new(),
        };
        for sigma in 0..=full {
            if sigma & pos == 0 && (!sigma & full) & neg == 0 {
                continue;
            }
            let mut val = T::unit();
            for &ch in &children[p] {
                let m = &messages[ch][bits_of(sigma, &sep_parent[ch])];
                if m.is_nil() {
                    val = T::nil();
                    break;
                }
                val = val.mul(m);
            }
            if val.is_nil() {
                continue;
            }
            match comp.parent[p] {
                Some(_) => msg[bits_of(sigma, &sep_child[p])].add_assign(&val),
                None => total.add_assign(&val),
            }
        }
        for &ch in &children[p] {
            messages[ch] = Vec::new();
        }
        messages[p] = msg;
    }
    Ok(total)
}

/// Count assignments of the variables of `clauses` satisfying all of them.
pub fn count_covered<T: Tally>(clauses: &[ResidualClause], excess_cap: usize) -> Result<T> {
    if clauses.iter().any(ResidualClause::is_empty) {
        return Ok(T::nil());
    }
    // Cycle variables are a subset of the variables, so a small enough
    // clause list can never exceed the cap.
    let vars = covered_vars(clauses);
    if vars.len() <= excess_cap.min(64) {
        return Ok(mask_count(clauses, &vars));
    }
    let mut prod = T::unit();
    for comp in components_of(clauses) {
        let c = count_component_with::<T>(&comp, excess_cap)?;
        if c.is_nil() {
            return Ok(c);
        }
        prod = prod.mul(&c);
    }
    Ok(prod)
}

/// Count satisfying assignments of `comp.vars`, enumerating cycle variables
/// when the component has non-tree edges.
pub fn count_component_with<T: Tally>(comp: &Component, excess_cap: usize) -> Result<T> {
    if comp.cycle_vars.is_empty() {
        return tree_count(comp);
    }
    if comp.cycle_vars.len() > excess_cap {
        return Err(Error::ExcessBudgetExceeded {
            cycle_vars: comp.cycle_vars.len(),
            cap: excess_cap,
        });
    }
    if comp.vars.len() <= 64 {
        let mut vars = comp.vars.clone();
        vars.sort_unstable();
        return Ok(mask_count(&comp.clauses, &vars));
    }
    let rest = comp.vars.len() - comp.cycle_vars.len();
    enumerate_cycle(&comp.clauses, &comp.cycle_vars, rest)
}

fn enumerate_cycle<T: Tally>(clauses: &[ResidualClause], cycle: &[usize], rest: usize) -> Result<T> {
    let Some((&v, tail)) = cycle.split_first() else {
        let covered = covered_vars(clauses).len();
        let mut prod = T::pow2(rest - covered);
        for sub in components_of(clauses) {
            if sub.tree_excess != 0 {
                // Pinning every variable of every non-tree edge leaves a
                // forest; reaching this means that invariant broke.
                return tree_count(&sub);
            }
            let c = tree_count::<T>(&sub)?;
            if c.is_nil() {
                return Ok(c);
            }
            prod = prod.mul(&c);
        }
        return Ok(prod);
    };
    let mut total = T::nil();
    for b in [false, true] {
        if let Some(next) = condition_all(clauses, v, b) {
            total.add_assign(&enumerate_cycle::<T>(&next, tail, rest)?);
        }
    }
    Ok(total)
}

/// A clause over at most 64 local variables: bit sets of its positive and
/// negative literals.
#[derive(Clone, Copy)]
struct MaskClause {
    pos: u64,
    neg: u64,
}

impl MaskClause {
    fn vars(self) -> u64 {
        self.pos | self.neg
    }
}

fn to_masks(clauses: &[ResidualClause], vars: &[usize]) -> Vec<MaskClause> {
    clauses
        .iter()
        .map(|c| {
            let mut m = MaskClause { pos: 0, neg: 0 };
            for l in &c.literals {
                let bit = 1u64 << vars.binary_search(&l.var()).expect("literal var listed");
                if l.is_negated() {
                    m.neg |= bit;
                } else {
                    m.pos |= bit;
                }
            }
            m
        })
        // A clause holding both x and ¬x is always satisfied.
        .filter(|m| m.pos & m.neg == 0)
        .collect()
}

fn full_mask(len: usize) -> u64 {
    if len == 64 {
        u64::MAX
    } else {
        (1u64 << len) - 1
    }
}

/// Count over `vars` (ascending, at most 64, covering every literal).
fn mask_count<T: Tally>(clauses: &[ResidualClause], vars: &[usize]) -> T {
    mask_dpll(&to_masks(clauses, vars), full_mask(vars.len()))
}

/// Counts over `vars` minus `v` with `v` set to F and to T, or `None` when
/// `vars` is too wide for the bit-set counter.
pub(crate) fn mask_marginal<T: Tally>(clauses: &[ResidualClause], vars: &[usize], v: usize) -> Option<(T, T)> {
    if vars.len() > 64 {
        return None;
    }
    let masks = to_masks(clauses, vars);
    let bit = 1u64 << vars.binary_search(&v).expect("variable in its component");
    let free = full_mask(vars.len()) & !bit;
    let mut next = Vec::with_capacity(masks.len());
    let mut side = |value: bool| -> T {
        if condition_masks(&masks, bit, value, &mut next) {
            mask_dpll(&next, free)
        } else {
            T::nil()
        }
    };
    let t0 = side(false);
    let t1 = side(true);
    Some((t0, t1))
}

/// Condition on the variable at `bit`; false when a clause is falsified.
fn condition_masks(clauses: &[MaskClause], bit: u64, value: bool, out: &mut Vec<MaskClause>) -> bool {
    out.clear();
    for &c in clauses {
        let sat = if value { c.pos & bit != 0 } else { c.neg & bit != 0 };
        if sat {
            continue;
        }
        let r = MaskClause {
            pos: c.pos & !bit,
            neg: c.neg & !bit,
        };
        if r.vars() == 0 {
            return false;
        }
        out.push(r);
    }
    true
}

/// Model count over the variables in `free` by branching with component
/// splitting. Every clause must be non-empty and lie inside `free`.
fn mask_dpll<T: Tally>(clauses: &[MaskClause], free: u64) -> T {
    let covered = clauses.iter().fold(0u64, |a, c| a | c.vars());
    let mut prod = T::pow2((free & !covered).count_ones() as usize);
    if clauses.is_empty() {
        return prod;
    }
    let mut vars = clauses[0].vars();
    loop {
        let grown = clauses.iter().filter(|c| c.vars() & vars != 0).fold(vars, |a, c| a | c.vars());
        if grown == vars {
            break;
        }
        vars = grown;
    }
    if vars == covered {
        return prod.mul(&mask_branch::<T>(clauses, vars));
    }
    let (comp, rest): (Vec<MaskClause>, Vec<MaskClause>) = clauses.iter().partition(|c| c.vars() & vars != 0);
    let c = mask_branch::<T>(&comp, vars);
    if c.is_nil() {
        return c;
    }
    prod = prod.mul(&c);
    let r = mask_dpll::<T>(&rest, covered & !vars);
    prod.mul(&r)
}

fn mask_branch<T: Tally>(clauses: &[MaskClause], vars: u64) -> T {
    if let [only] = clauses {
        // 2^w − 1 as a sum of powers, since `Tally` has no subtraction.
        let mut t = T::nil();
        for i in 0..only.vars().count_ones() as usize {
            t.add_assign(&T::pow2(i));
        }
        return t;
    }
    // Branch on the variable occurring in the most clauses.
    let mut best = 0u32;
    let mut best_occ = 0usize;
    let mut rem = vars;
    while rem != 0 {
        let i = rem.trailing_zeros();
        rem &= rem - 1;
        let occ = clauses.iter().filter(|c| c.vars() >> i & 1 == 1).count();
        if occ > best_occ {
            best_occ = occ;
            best = i;
        }
    }
    let bit = 1u64 << best;
    let mut total = T::nil();
    let mut next = Vec::with_capacity(clauses.len());
    for value in [false, true] {
        if condition_masks(clauses, bit, value, &mut next) {
            total.add_assign(&mask_dpll::<T>(&next, vars & !bit));
        }
    }
    total
}

fn count_component_dispatch(comp: &Component, excess_cap: usize) -> Result<BigUint> {
    if comp.vars.len() <= SMALL_COUNT_VARS {
        Ok(count_component_with::<u128>(comp, excess_cap)?.into_big())
    } else {
        count_component_with::<BigUint>(comp, excess_cap)
    }
}

/// Count the acyclic component `comp` after additionally pinning `pinned`.
/// The count is over the component's variables outside `pinned`.
pub fn count_tree(comp: &Component, pinned: &PartialAssignment) -> Result<BigUint> {
    count_restricted(comp, pinned, None)
}

/// Count `comp` after additionally pinning `base`; exact, with cycle
/// variables enumerated up to `excess_cap`.
pub fn count_component(comp: &Component, base: &PartialAssignment, excess_cap: usize) -> Result<BigUint> {
    count_restricted(comp, base, Some(excess_cap))
}

/// With `excess_cap == None` every sub-component must already be a forest.
fn count_restricted(
    comp: &Component,
    base: &PartialAssignment,
    excess_cap: Option<usize>,
) -> Result<BigUint> {
    let mut clauses = comp.clauses.clone();
    let mut universe = comp.vars.len();
    for &v in &comp.vars {
        if let Some(b) = base.get(v) {
            universe -= 1;
            match condition_all(&clauses, v, b) {
                Some(next) => clauses = next,
                None => return Ok(<BigUint as Zero>::zero()),
            }
        }
    }
    let covered = covered_vars(&clauses).len();
    let mut prod = <BigUint as One>::one() << (universe - covered);
    for sub in components_of(&clauses) {
        prod *= match excess_cap {
            Some(cap) => count_component_dispatch(&sub, cap)?,
            None => tree_count::<BigUint>(&sub)?,
        };
        if Zero::is_zero(&prod) {
            break;
        }
    }
    Ok(prod)
}

/// Number of satisfying assignments of Φ^Λ over all variables outside
/// dom(Λ).
pub fn count(f: &Formula, lam: &PartialAssignment) -> Result<BigUint> {
    count_with_cap(f, lam, DEFAULT_EXCESS_CAP)
}

pub fn count_with_cap(f: &Formula, lam: &PartialAssignment, excess_cap: usize) -> Result<BigUint> {
    let sf = simplify(f, lam);
    if sf.empty_clause_present {
        return Ok(<BigUint as Zero>::zero());
    }
    let covered = covered_vars(&sf.residuals).len();
    let mut prod = <BigUint as One>::one() << (sf.free_vars.len() - covered);
    for comp in components_of(&sf.residuals) {
        prod *= count_component_dispatch(&comp, excess_cap)?;
        if Zero::is_zero(&prod) {
            break;
        }
    }
    Ok(prod)
}

/// Count assignments of the variables in `universe` satisfying `clauses`,
/// whose variables must all lie in `universe`.
pub fn count_over<T: Tally>(clauses: &[ResidualClause], universe: usize, excess_cap: usize) -> Result<T> {
    let covered = covered_vars(clauses).len();
    debug_assert!(covered <= universe);
    let c = count_covered::<T>(clauses, excess_cap)?;
    Ok(c.mul(&T::pow2(universe - covered)))
}

/// The tree-excess lemma's component cap k·(c+1) with
/// c = max{1, 2b·ln(e·k²·α)} and b = 2k⁴(1+ξ).
pub fn theory_excess_cap(k: usize, alpha: f64, xi: f64) -> usize {
    let k_f = k as f64;
    let b = 2.0 * k_f.powi(4) * (1.0 + xi);
    let c = (2.0 * b * (std::f64::consts::E * k_f * k_f * alpha).ln()).max(1.0);
    (k_f * (c.ceil() + 1.0)).min(usize::MAX as f64) as usize
}
