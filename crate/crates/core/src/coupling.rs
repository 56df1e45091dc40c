//! The coupling process on auxiliary variables, and exact and Monte-Carlo
//! influences.
//!
//! Two partial assignments X̂ and Ŷ start from Λ and differ only at `u`.
//! Clauses touching a disagreement or a failed clause are processed in
//! index order; auxiliary variables are extended one at a time under the
//! monotone coupling of the two exact conditional marginals. Nothing here
//! is used by the sampler itself.

use std::collections::BTreeSet;

use num_bigint::{BigInt, BigUint, RandBigInt};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::classify::Classification;
use crate::engine::{count, marginal, PartialAssignment, ResidualState, SampleCaps};
use crate::exec::{map_indexed, Exec};
use crate::formula::Formula;
use crate::marking::{Marking, Role};
use crate::{rng, Error, Result};

/// One monotone-coupled draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoupledDraw {
    pub var: usize,
    pub x: bool,
    pub y: bool,
    /// Pr(v ↦ T) under X̂ and under Ŷ.
    pub px: f64,
    pub py: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingRun {
    pub u: usize,
    pub xhat: PartialAssignment,
    pub yhat: PartialAssignment,
    /// Ascending.
    pub v_set: Vec<usize>,
    pub v_d: Vec<usize>,
    pub f_d: Vec<usize>,
    pub f_u: Vec<usize>,
    pub c_rem: Vec<usize>,
    pub trace: Vec<CoupledDraw>,
}

/// Draw a pair (X, Y) from the monotone coupling of two marginals: a single
/// uniform U and X = T iff U < Pr_X(T), Y = T iff U < Pr_Y(T). Done in exact
/// integer arithmetic.
fn monotone_pair<R: Rng>(
    (x0, x1): (BigUint, BigUint),
    (y0, y1): (BigUint, BigUint),
    rng: &mut R,
) -> (bool, bool) {
    let tx = &x0 + &x1;
    let ty = &y0 + &y1;
    let w = rng.gen_biguint_below(&(&tx * &ty));
    (w < &x1 * &ty, w < &y1 * &tx)
}

fn prob_true((t0, t1): &(BigUint, BigUint)) -> f64 {
    let total = t0 + t1;
    BigRational::new(BigInt::from(t1.clone()), BigInt::from(total))
        .to_f64()
        .unwrap_or(f64::NAN)
}

fn satisfied_by(f: &Formula, c: usize, a: &PartialAssignment) -> bool {
    f.literals(c).iter().any(|l| a.get(l.var()).is_some_and(|b| l.eval(b)))
}

struct Pair<'f> {
    x: ResidualState<'f>,
    y: ResidualState<'f>,
    caps: SampleCaps,
}

impl Pair<'_> {
    fn draw<R: Rng>(&mut self, v: usize, rng: &mut R) -> Result<CoupledDraw> {
        let (mx, _) = marginal(&mut self.x, v, self.caps)?;
        let (my, _) = marginal(&mut self.y, v, self.caps)?;
        if mx.is_degenerate() || my.is_degenerate() {
            return Err(Error::UndefinedConditional(format!(
                "variable {v} has no satisfying extension under X̂ or Ŷ"
            )));
        }
        let (cx, cy) = (mx.counts(), my.counts());
        let (px, py) = (prob_true(&cx), prob_true(&cy));
        let (x, y) = monotone_pair(cx, cy, rng);
        self.x.pin(v, x);
        self.y.pin(v, y);
        Ok(CoupledDraw { var: v, x, y, px, py })
    }
}

fn check_start(f: &Formula, marking: &Marking, u: usize, lam: &PartialAssignment) -> Result<()> {
    if marking.n() != f.n() || lam.n() != f.n() {
        return Err(Error::MarkingInvalid { violations: 1 });
    }
    if u >= f.n() || marking.role[u] != Role::Marked {
        return Err(Error::InvalidParameter(format!("u = {u} is not a marked variable")));
    }
    if lam.is_assigned(u) {
        return Err(Error::UndefinedConditional(format!("u = {u} is pinned")));
    }
    if let Some(v) = lam.domain().find(|&v| marking.role[v] != Role::Marked) {
        return Err(Error::InvalidParameter(format!("pinned variable {v} is not marked")));
    }
    Ok(())
}

fn coupling_core<'f, R: Rng>(
    f: &'f Formula,
    cls: &Classification,
    marking: &Marking,
    u: usize,
    lam: &PartialAssignment,
    caps: SampleCaps,
    rng: &mut R,
) -> Result<(CouplingRun, Pair<'f>)> {
    check_start(f, marking, u, lam)?;
    let mut xhat = lam.clone();
    let mut yhat = lam.clone();
    xhat.set(u, true);
    yhat.set(u, false);
    let mut pair = Pair {
        x: ResidualState::from_assignment(f, &xhat),
        y: ResidualState::from_assignment(f, &yhat),
        caps,
    };

    let mut in_set = vec![false; f.n()];
    for v in xhat.domain() {
        in_set[v] = true;
    }
    let mut in_d = vec![false; f.n()];
    let mut in_fu_vars = vec![false; f.n()];
    let mut c_rem = vec![true; f.m()];
    let mut f_u: Vec<usize> = Vec::new();
    let mut f_d: BTreeSet<usize> = BTreeSet::new();
    let mut v_d = vec![u];
    let mut frontier: BTreeSet<usize> = BTreeSet::new();
    let mut trace = Vec::new();

    in_d[u] = true;
    for &c in f.occurrences(u) {
        f_d.insert(c as usize);
        frontier.insert(c as usize);
    }

    let add_fu_vars = |c: usize, in_fu_vars: &mut Vec<bool>, frontier: &mut BTreeSet<usize>, c_rem: &Vec<bool>| {
        for &w in f.vars_of(c) {
            let w = w as usize;
            if !in_fu_vars[w] {
                in_fu_vars[w] = true;
                frontier.extend(f.occurrences(w).iter().map(|&d| d as usize).filter(|&d| c_rem[d]));
            }
        }
    };

    while let Some(&c) = frontier.first() {
        if !c_rem[c] {
            frontier.remove(&c);
            continue;
        }
        if cls.is_bad_clause(c) {
            c_rem[c] = false;
            frontier.remove(&c);
            f_u.push(c);
            add_fu_vars(c, &mut in_fu_vars, &mut frontier, &c_rem);
            continue;
        }
        let next = f
            .vars_of(c)
            .iter()
            .map(|&v| v as usize)
            .filter(|&v| marking.role[v] == Role::Auxiliary && !in_set[v])
            .min();
        match next {
            None => {
                c_rem[c] = false;
                frontier.remove(&c);
                if !satisfied_by(f, c, &xhat) || !satisfied_by(f, c, &yhat) {
                    f_u.push(c);
                    add_fu_vars(c, &mut in_fu_vars, &mut frontier, &c_rem);
                }
            }
            Some(v) => {
                let d = pair.draw(v, rng)?;
                in_set[v] = true;
                xhat.set(v, d.x);
                yhat.set(v, d.y);
                if d.x != d.y {
                    in_d[v] = true;
                    v_d.push(v);
                    for &e in f.occurrences(v) {
                        f_d.insert(e as usize);
                        if c_rem[e as usize] {
                            frontier.insert(e as usize);
                        }
                    }
                }
                trace.push(d);
            }
        }
    }

    v_d.sort_unstable();
    f_u.sort_unstable();
    let run = CouplingRun {
        u,
        v_set: (0..f.n()).filter(|&v| in_set[v]).collect(),
        xhat,
        yhat,
        v_d,
        f_d: f_d.into_iter().collect(),
        f_u,
        c_rem: (0..f.m()).filter(|&c| c_rem[c]).collect(),
        trace,
    };
    Ok((run, pair))
}

/// Run the coupling process once with the given generator.
pub fn run_coupling_with<R: Rng>(
    f: &Formula,
    cls: &Classification,
    marking: &Marking,
    u: usize,
    lam: &PartialAssignment,
    caps: SampleCaps,
    rng: &mut R,
) -> Result<CouplingRun> {
    coupling_core(f, cls, marking, u, lam, caps, rng).map(|(r, _)| r)
}

/// Run the coupling process from `u` under Λ.
pub fn run_coupling(
    f: &Formula,
    cls: &Classification,
    marking: &Marking,
    u: usize,
    lam: &PartialAssignment,
    caps: SampleCaps,
    seed: u64,
) -> Result<CouplingRun> {
    run_coupling_with(f, cls, marking, u, lam, caps, &mut rng::seeded(seed))
}

/// Per-property verdicts for a finished run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyCheck {
    pub sets: bool,
    pub failed_clauses: bool,
    pub remaining_clauses: bool,
    pub removed_clauses: bool,
    pub connected: bool,
    pub structure: bool,
}

impl PropertyCheck {
    pub fn all(&self) -> bool {
        self.sets
            && self.failed_clauses
            && self.remaining_clauses
            && self.removed_clauses
            && self.connected
            && self.structure
    }
}

/// Evaluate the five coupling properties and the residual-structure claim
/// directly on the final state.
pub fn check_properties(
    f: &Formula,
    marking: &Marking,
    lam: &PartialAssignment,
    run: &CouplingRun,
) -> PropertyCheck {
    let n = f.n();
    let mut in_set = vec![false; n];
    for &v in &run.v_set {
        in_set[v] = true;
    }
    let base: Vec<usize> = lam.domain().chain([run.u]).collect();

    // Property 1.
    let set_bounds = base.iter().all(|&v| in_set[v])
        && run
            .v_set
            .iter()
            .all(|&v| marking.role[v] == Role::Auxiliary || base.contains(&v));
    let disagreeing: Vec<usize> = run
        .v_set
        .iter()
        .copied()
        .filter(|&v| run.xhat.get(v) != run.yhat.get(v))
        .collect();
    let touching: Vec<usize> = (0..f.m())
        .filter(|&c| f.vars_of(c).iter().any(|&v| disagreeing.contains(&(v as usize))))
        .collect();
    let domains_match = run.xhat.domain().collect::<Vec<_>>() == run.v_set
        && run.yhat.domain().collect::<Vec<_>>() == run.v_set;
    let sets = set_bounds && domains_match && disagreeing == run.v_d && touching == run.f_d;

    let aux_set = |c: usize| {
        f.vars_of(c)
            .iter()
            .all(|&v| marking.role[v as usize] != Role::Auxiliary || in_set[v as usize])
    };
    let mut hot = vec![false; n];
    for &v in &run.v_d {
        hot[v] = true;
    }
    for &c in &run.f_u {
        for &v in f.vars_of(c) {
            hot[v as usize] = true;
        }
    }
    let touches_hot = |c: usize| f.vars_of(c).iter().any(|&v| hot[v as usize]);
    let sat_x = |c: usize| satisfied_by(f, c, &run.xhat);
    let sat_y = |c: usize| satisfied_by(f, c, &run.yhat);

    // Property 2.
    let failed_clauses = run.f_u.iter().all(|&c| aux_set(c) && (!sat_x(c) || !sat_y(c)));
    // Property 3.
    let remaining_clauses = run.c_rem.iter().all(|&c| !touches_hot(c));
    // Property 4.
    let mut kept = vec![false; f.m()];
    for &c in run.c_rem.iter().chain(&run.f_u) {
        kept[c] = true;
    }
    let removed_clauses = (0..f.m())
        .filter(|&c| !kept[c])
                .all(|c| touches_hot(c) && aux_set(c) && sat_x(c) && sat_y(c));
    // Property 5.
    let mut union: Vec<usize> = run.f_d.iter().chain(&run.f_u).copied().collect();
    union.sort_unstable();
    union.dedup();
    let connected = f.dependency_graph().is_connected_set(&union);

    // Structure: the clauses left unsatisfied outside F_u coincide under
    // X̂ and Ŷ, lie in C_rem, and have identical residual literals.
    let mut in_fu = vec![false; f.m()];
    for &c in &run.f_u {
        in_fu[c] = true;
    }
    let residual = |c: usize, a: &PartialAssignment| -> Vec<i64> {
        f.literals(c)
            .iter()
            .filter(|l| a.get(l.var()).is_none())
            .map(|l| l.to_dimacs())
            .collect()
    };
    let open_x: Vec<usize> = (0..f.m()).filter(|&c| !in_fu[c] && !sat_x(c)).collect();
    let open_y: Vec<usize> = (0..f.m()).filter(|&c| !in_fu[c] && !sat_y(c)).collect();
    let structure = open_x == open_y
        && open_x.iter().all(|c| run.c_rem.binary_search(c).is_ok())
        && open_x.iter().all(|&c| residual(c, &run.xhat) == residual(c, &run.yhat));

    PropertyCheck {
        sets,
        failed_clauses,
        remaining_clauses,
        removed_clauses,
        connected,
        structure,
    }
}

/// A completed coupling extended to all of V_m ∪ V_a.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedCoupling {
    pub run: CouplingRun,
    /// Marked variables outside dom(Λ) where X and Y differ, ascending.
    pub disagreements: Vec<usize>,
}

/// Run the coupling and extend (X̂, Ŷ) over the remaining marked and
/// auxiliary variables in index order with the same monotone coupling.
pub fn run_extended<R: Rng>(
    f: &Formula,
    cls: &Classification,
    marking: &Marking,
    u: usize,
    lam: &PartialAssignment,
    caps: SampleCaps,
    rng: &mut R,
) -> Result<ExtendedCoupling> {
    let (run, mut pair) = coupling_core(f, cls, marking, u, lam, caps, rng)?;
    let mut x = run.xhat.clone();
    let mut y = run.yhat.clone();
    for v in 0..f.n() {
        if marking.role[v] == Role::Control || x.is_assigned(v) {
            continue;
        }
        let d = pair.draw(v, rng)?;
        x.set(v, d.x);
        y.set(v, d.y);
    }
    let disagreements = marking
        .marked()
        .into_iter()
        .filter(|&v| !lam.is_assigned(v) && x.get(v) != y.get(v))
        .collect();
    Ok(ExtendedCoupling { run, disagreements })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfluenceEstimate {
    pub u: usize,
    pub v: usize,
    /// Estimated Pr(X(v) ≠ Y(v)).
    pub estimate: f64,
    pub std_error: f64,
    pub samples: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfluenceSummary {
    pub u: usize,
    pub runs: u64,
    pub completed: u64,
    pub aborted: u64,
    pub errors: Vec<String>,
    pub per_var: Vec<InfluenceEstimate>,
    /// Mean over completed runs of Σ_v 1[X(v) ≠ Y(v)].
    pub sum: f64,
    pub sum_std_error: f64,
    pub mean_failed_clauses: f64,
    /// 2k⁴ ln n, for comparison with the failed-clause count.
    pub failed_clause_reference: f64,
}

/// Monte-Carlo estimate of Σ_v Pr(X(v) ≠ Y(v)) over the unpinned marked
/// variables. Run `i` uses stream `i` of `seed`.
#[allow(clippy::too_many_arguments)]
pub fn influence_sum_estimate(
    f: &Formula,
    cls: &Classification,
    marking: &Marking,
    u: usize,
    lam: &PartialAssignment,
    runs: u64,
    seed: u64,
    caps: SampleCaps,
    exec: Exec,
) -> Result<InfluenceSummary> {
    check_start(f, marking, u, lam)?;
    let targets: Vec<usize> = marking.marked().into_iter().filter(|&v| !lam.is_assigned(v)).collect();
    let outcomes = map_indexed(exec, runs as usize, |i| {
        let mut r = rng::stream(seed, i as u64);
        run_extended(f, cls, marking, u, lam, caps, &mut r)
    });

    let mut hits = vec![0u64; targets.len()];
    let (mut completed, mut sum, mut sum_sq, mut fu) = (0u64, 0.0, 0.0, 0.0);
    let mut errors = Vec::new();
    for o in outcomes {
        match o {
            Ok(ext) => {
                completed += 1;
                let d = ext.disagreements.len() as f64;
                sum += d;
                sum_sq += d * d;
                fu += ext.run.f_u.len() as f64;
                for v in ext.disagreements {
                    if let Ok(i) = targets.binary_search(&v) {
                        hits[i] += 1;
                    }
                }
            }
            Err(e) => {
                if errors.len() < 16 {
                    errors.push(e.to_string());
                }
            }
        }
    }
    let c = completed.max(1) as f64;
    let mean = sum / c;
    let var = if completed > 1 {
        ((sum_sq - c * mean * mean) / (c - 1.0)).max(0.0)
    } else {
        0.0
    };
    let per_var = targets
        .iter()
        .zip(&hits)
        .map(|(&v, &h)| {
            let p = h as f64 / c;
            InfluenceEstimate {
                u,
                v,
                estimate: p,
                std_error: (p * (1.0 - p) / c).sqrt(),
                samples: completed,
            }
        })
        .collect();
    Ok(InfluenceSummary {
        u,
        runs,
        completed,
        aborted: runs - completed,
        errors,
        per_var,
        sum: mean,
        sum_std_error: (var / c).sqrt(),
        mean_failed_clauses: fu / c,
        failed_clause_reference: 2.0 * (f.k() as f64).powi(4) * (f.n().max(1) as f64).ln(),
    })
}

fn with(lam: &PartialAssignment, pins: &[(usize, bool)]) -> PartialAssignment {
    let mut a = lam.clone();
    for &(v, b) in pins {
        a.set(v, b);
    }
    a
}

fn frac(num: BigUint, den: &BigUint) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den.clone()))
}

/// I^Λ(u → v) = Pr(v ↦ T | u ↦ T, Λ) − Pr(v ↦ T | u ↦ F, Λ), exactly.
pub fn influence_exact_rational(f: &Formula, u: usize, v: usize, lam: &PartialAssignment) -> Result<BigRational> {
    if lam.is_assigned(u) {
        return Err(Error::UndefinedConditional(format!("u = {u} is pinned")));
    }
    let nt = count(f, &with(lam, &[(u, true)]))?;
    let nf = count(f, &with(lam, &[(u, false)]))?;
    if nt.is_zero() || nf.is_zero() {
        return Err(Error::UndefinedConditional(format!(
            "Pr(u ↦ T | Λ) is {} for u = {u}",
            if nt.is_zero() { 0 } else { 1 }
        )));
    }
    if v == u {
        return Ok(BigRational::one());
    }
    if lam.is_assigned(v) {
        return Ok(BigRational::zero());
    }
    let tt = count(f, &with(lam, &[(u, true), (v, true)]))?;
    let ft = count(f, &with(lam, &[(u, false), (v, true)]))?;
    Ok(frac(tt, &nt) - frac(ft, &nf))
}

pub fn influence_exact(f: &Formula, u: usize, v: usize, lam: &PartialAssignment) -> Result<f64> {
    influence_exact_rational(f, u, v, lam).map(|q| q.to_f64().unwrap_or(f64::NAN))
}

/// The influence matrix over the candidates with non-degenerate marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceMatrix {
    pub vars: Vec<usize>,
    pub frozen: Vec<usize>,
    /// Pr(v ↦ T | Λ) for each of `vars`.
    pub marginals: Vec<BigRational>,
    pub entries: Vec<Vec<BigRational>>,
}

pub fn influence_matrix(f: &Formula, candidates: &[usize], lam: &PartialAssignment) -> Result<InfluenceMatrix> {
    let total = count(f, lam)?;
    if total.is_zero() {
        return Err(Error::UndefinedConditional("Λ has no satisfying extension".into()));
    }
    let mut vars = Vec::new();
    let mut frozen = Vec::new();
    let mut marginals = Vec::new();
    let mut split = Vec::new();
    for &v in candidates {
        let t = count(f, &with(lam, &[(v, true)]))?;
        if t.is_zero() || t == total {
            frozen.push(v);
        } else {
            marginals.push(frac(t.clone(), &total));
            split.push((t.clone(), &total - t));
            vars.push(v);
        }
    }
    let mut entries = Vec::with_capacity(vars.len());
    for (i, &u) in vars.iter().enumerate() {
        let (nt, nf) = &split[i];
        let mut row = Vec::with_capacity(vars.len());
        for &v in &vars {
            if v == u {
                row.push(BigRational::one());
                continue;
            }
            let tt = count(f, &with(lam, &[(u, true), (v, true)]))?;
            let ft = count(f, &with(lam, &[(u, false), (v, true)]))?;
            row.push(frac(tt, nt) - frac(ft, nf));
        }
        entries.push(row);
    }
    Ok(InfluenceMatrix {
        vars,
        frozen,
        marginals,
        entries,
    })
}
