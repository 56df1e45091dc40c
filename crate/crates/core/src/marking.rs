//! Marked / auxiliary / control partitions of the variables.
//!
//! Good variables draw a role independently; every good clause must then
//! hold at least r(k−3) marked, r(k−3) auxiliary and 2r(k−3) good control
//! variables. Violated clauses are repaired Moser–Tardos style by redrawing
//! the roles of their good variables, lowest clause index first.

use std::collections::BTreeSet;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::classify::Classification;
use crate::formula::Formula;
use crate::{rng, Error, Result};

/// Default per-class probability for marked and auxiliary variables. It
/// maximizes the smaller of the two Chernoff margins at r = 0.117841.
pub const DEFAULT_BETA: f64 = 0.2855135;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Marked,
    Auxiliary,
    Control,
}

impl Role {
    pub fn letter(self) -> char {
        match self {
            Role::Marked => 'M',
            Role::Auxiliary => 'A',
            Role::Control => 'C',
        }
    }

    pub fn from_letter(c: char) -> Option<Role> {
        match c {
            'M' => Some(Role::Marked),
            'A' => Some(Role::Auxiliary),
            'C' => Some(Role::Control),
            _ => None,
        }
    }

    fn slot(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkingParams {
    pub beta_marked: f64,
    pub beta_aux: f64,
    pub r: f64,
    pub max_resample_rounds: usize,
    pub seed: u64,
    /// Round the per-clause bounds down instead of up, so bounds below one
    /// become vacuous at small k.
    pub desk: bool,
}

impl Default for MarkingParams {
    fn default() -> Self {
        MarkingParams {
            beta_marked: DEFAULT_BETA,
            beta_aux: DEFAULT_BETA,
            r: 0.117841,
            max_resample_rounds: 1_000_000,
            seed: 0,
            desk: false,
        }
    }
}

impl MarkingParams {
    pub fn beta_control(&self) -> f64 {
        1.0 - self.beta_marked - self.beta_aux
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.beta_marked > 0.0
            && self.beta_aux > 0.0
            && self.beta_marked + self.beta_aux < 1.0
            && self.r > 0.0
            && self.r < 0.5;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "need β_m, β_a > 0, β_m + β_a < 1 and r ∈ (0, 1/2); got {:?}",
                (self.beta_marked, self.beta_aux, self.r)
            )))
        }
    }

    /// Integer lower bounds `[marked, auxiliary, good control]` per good
    /// clause.
    pub fn thresholds(&self, k: usize) -> [usize; 3] {
        bounds(self.r, k, self.desk)
    }
}

/// Integer versions of r(k−3), r(k−3), 2r(k−3). Theory rounding takes the
/// ceiling (the exact meaning of `count ≥ x`); desk rounding takes the floor.
pub fn bounds(r: f64, k: usize, desk: bool) -> [usize; 3] {
    let x = r * k.saturating_sub(3) as f64;
    let round = |y: f64| {
        if desk {
            (y + 1e-9).floor() as usize
        } else {
            (y - 1e-9).ceil().max(0.0) as usize
        }
    };
    [round(x), round(x), round(2.0 * x)]
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Marking {
    pub role: Vec<Role>,
}

impl Marking {
    /// All variables control.
    pub fn all_control(n: usize) -> Self {
        Marking {
            role: vec![Role::Control; n],
        }
    }

    fn with(&self, r: Role) -> Vec<usize> {
        (0..self.role.len()).filter(|&v| self.role[v] == r).collect()
    }

    pub fn marked(&self) -> Vec<usize> {
        self.with(Role::Marked)
    }

    pub fn auxiliary(&self) -> Vec<usize> {
        self.with(Role::Auxiliary)
    }

    pub fn control(&self) -> Vec<usize> {
        self.with(Role::Control)
    }

    pub fn n(&self) -> usize {
        self.role.len()
    }

    pub fn sizes(&self) -> [usize; 3] {
        let mut s = [0; 3];
        for r in &self.role {
            s[r.slot()] += 1;
        }
        s
    }
}

/// D(x, y) = x ln(x/y) + (1−x) ln((1−x)/(1−y)).
pub fn kl_divergence(x: f64, y: f64) -> Result<f64> {
    for z in [x, y] {
        if !(z > 0.0 && z < 1.0) {
            return Err(Error::Domain(z));
        }
    }
    Ok(x * (x / y).ln() + (1.0 - x) * ((1.0 - x) / (1.0 - y)).ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub marked_ok: bool,
    pub aux_ok: bool,
    pub control_ok: bool,
    /// D(r, β_m) − r ln 2.
    pub marked_margin: f64,
    /// D(r, β_a) − r ln 2.
    pub aux_margin: f64,
    /// D(2r, 1 − β_m − β_a) − r ln 2.
    pub control_margin: f64,
    /// Chernoff bound on the probability that a fixed good clause violates
    /// one of its bounds.
    pub clause_failure_bound: f64,
    /// The local-lemma budget 3·2^{−r(k−3)}.
    pub lll_budget: f64,
}

impl FeasibilityReport {
    pub fn all_ok(&self) -> bool {
        self.marked_ok && self.aux_ok && self.control_ok
    }
}

/// Evaluate the Chernoff conditions D(r, β) ≥ r ln 2 (for β_m and β_a, with
/// r < β) and D(2r, q) ≥ r ln 2 (for the control probability q, with
/// 2r < q).
pub fn check_feasibility(p: &MarkingParams, k: usize) -> Result<FeasibilityReport> {
    p.validate()?;
    let q = p.beta_control();
    let target = p.r * std::f64::consts::LN_2;
    let marked_margin = kl_divergence(p.r, p.beta_marked)? - target;
    let aux_margin = kl_divergence(p.r, p.beta_aux)? - target;
    let control_margin = if 2.0 * p.r < 1.0 {
        kl_divergence(2.0 * p.r, q)? - target
    } else {
        f64::NEG_INFINITY
    };
    let kk = k.saturating_sub(3) as f64;
    let tail = |x: f64, y: f64, lower: bool| -> f64 {
        if lower {
            (-kl_divergence(x, y).unwrap_or(0.0) * kk).exp()
        } else {
            1.0
        }
    };
    let clause_failure_bound = (tail(p.r, p.beta_marked, p.r < p.beta_marked)
        + tail(p.r, p.beta_aux, p.r < p.beta_aux)
        + tail(2.0 * p.r, q, 2.0 * p.r < q))
    .min(1.0);
    Ok(FeasibilityReport {
        marked_ok: p.r < p.beta_marked && marked_margin >= 0.0,
        aux_ok: p.r < p.beta_aux && aux_margin >= 0.0,
        control_ok: 2.0 * p.r < q && control_margin >= 0.0,
        marked_margin,
        aux_margin,
        control_margin,
        clause_failure_bound,
        lll_budget: 3.0 * (-p.r * kk).exp2(),
    })
}

fn good_vars_of<'a>(f: &'a Formula, cls: &'a Classification, c: usize) -> impl Iterator<Item = usize> + 'a {
    f.vars_of(c).iter().map(|&v| v as usize).filter(|&v| !cls.is_bad_var(v))
}

/// Whether every good clause has at least `need[0] + need[1] + need[2]`
/// good variables. Without this no valid marking exists.
pub fn has_room(f: &Formula, cls: &Classification, need: [usize; 3]) -> bool {
    let total: usize = need.iter().sum();
    (0..f.m())
        .filter(|&c| !cls.is_bad_clause(c))
        .all(|c| good_vars_of(f, cls, c).count() >= total)
}

/// Probability that `good` independently drawn roles miss one of the
/// bounds `need`.
pub fn clause_failure_probability(p: &MarkingParams, good: usize, need: [usize; 3]) -> f64 {
    let (bm, ba, bc) = (p.beta_marked, p.beta_aux, p.beta_control());
    let mut binom = vec![vec![1.0f64; good + 1]; good + 1];
    for i in 1..=good {
        for j in 1..i {
            binom[i][j] = binom[i - 1][j - 1] + binom[i - 1][j];
        }
    }
    let mut ok = 0.0;
    for a in need[0]..=good {
        for b in need[1]..=good - a {
            let c = good - a - b;
            if c >= need[2] {
                ok += binom[good][a] * binom[good - a][b] * bm.powi(a as i32) * ba.powi(b as i32) * bc.powi(c as i32);
            }
        }
    }
    (1.0 - ok).clamp(0.0, 1.0)
}

/// The symmetric local-lemma condition e·p·(D + 1) ≤ 1 for the marking
/// events of `f`, where p is the largest clause failure probability and D
/// the largest number of other good clauses sharing a good variable with
/// a good clause. When it holds, Moser–Tardos converges in expected
/// O(m) rounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalLemmaReport {
    pub max_failure: f64,
    pub max_dependency: usize,
    pub holds: bool,
}

pub fn local_lemma(f: &Formula, cls: &Classification, p: &MarkingParams) -> LocalLemmaReport {
    let need = p.thresholds(f.k());
    let mut failure = vec![None; f.k() + 1];
    let mut stamp = vec![usize::MAX; f.m()];
    let (mut max_failure, mut max_dependency) = (0.0f64, 0);
    for c in (0..f.m()).filter(|&c| !cls.is_bad_clause(c)) {
        let good = good_vars_of(f, cls, c).count();
        let q = *failure[good].get_or_insert_with(|| clause_failure_probability(p, good, need));
        max_failure = max_failure.max(q);
        let mut deg = 0;
        for v in good_vars_of(f, cls, c) {
            for &d in f.occurrences(v) {
                let d = d as usize;
                if d != c && stamp[d] != c && !cls.is_bad_clause(d) {
                    stamp[d] = c;
                    deg += 1;
                }
            }
        }
        max_dependency = max_dependency.max(deg);
    }
    LocalLemmaReport {
        max_failure,
        max_dependency,
        holds: std::f64::consts::E * max_failure * (max_dependency + 1) as f64 <= 1.0,
    }
}

/// Role counts `[marked, auxiliary, good control]` of a good clause.
fn clause_counts(f: &Formula, cls: &Classification, role: &[Role], c: usize) -> [usize; 3] {
    let mut cnt = [0; 3];
    for &v in f.vars_of(c) {
        let v = v as usize;
        if !cls.is_bad_var(v) {
            cnt[role[v].slot()] += 1;
        }
    }
    cnt
}

fn satisfies(cnt: [usize; 3], need: [usize; 3]) -> bool {
    cnt.iter().zip(need).all(|(&c, n)| c >= n)
}

fn draw_role(p: &MarkingParams, r: &mut rng::Rng) -> Role {
    let u: f64 = r.gen();
    if u < p.beta_marked {
        Role::Marked
    } else if u < p.beta_marked + p.beta_aux {
        Role::Auxiliary
    } else {
        Role::Control
    }
}

pub fn compute_marking(f: &Formula, cls: &Classification, p: &MarkingParams) -> Result<Marking> {
    compute_marking_with_stats(f, cls, p).map(|(m, _)| m)
}

/// As [`compute_marking`], also returning the number of resampling rounds.
pub fn compute_marking_with_stats(
    f: &Formula,
    cls: &Classification,
    p: &MarkingParams,
) -> Result<(Marking, usize)> {
    p.validate()?;
    if f.m() > 0 && cls.bad_clause.iter().all(|&b| b) {
        return Ok((Marking::all_control(f.n()), 0));
    }
    let need = p.thresholds(f.k());
    let mut r = rng::seeded(p.seed);
    let mut role: Vec<Role> = (0..f.n())
        .map(|v| {
            if cls.is_bad_var(v) {
                Role::Control
            } else {
                draw_role(p, &mut r)
            }
        })
        .collect();

    let mut violating: BTreeSet<usize> = (0..f.m())
        .filter(|&c| !cls.is_bad_clause(c) && !satisfies(clause_counts(f, cls, &role, c), need))
        .collect();
    let mut rounds = 0;
    while let Some(&c) = violating.first() {
        if rounds == p.max_resample_rounds {
            return Err(Error::ResampleBudgetExceeded { rounds });
        }
        rounds += 1;
        for &v in f.vars_of(c) {
            let v = v as usize;
            if cls.is_bad_var(v) {
                continue;
            }
            role[v] = draw_role(p, &mut r);
        }
        for &v in f.vars_of(c) {
            for &d in f.occurrences(v as usize) {
                let d = d as usize;
                if cls.is_bad_clause(d) {
                    continue;
                }
                if satisfies(clause_counts(f, cls, &role, d), need) {
                    violating.remove(&d);
                } else {
                    violating.insert(d);
                }
            }
        }
    }
    Ok((Marking { role }, rounds))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum MarkingViolation {
    WrongSize { expected: usize, got: usize },
    BadNotControl { var: usize },
    ShortClause { clause: usize, role: Role, have: usize, need: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkingCheck {
    pub ok: bool,
    pub violations: Vec<MarkingViolation>,
}

impl MarkingCheck {
    /// Indices of clauses with at least one short bound.
    pub fn clauses(&self) -> Vec<usize> {
        let mut cs: Vec<usize> = self
            .violations
            .iter()
            .filter_map(|v| match v {
                MarkingViolation::ShortClause { clause, .. } => Some(*clause),
                _ => None,
            })
            .collect();
        cs.dedup();
        cs
    }
}

/// Check the partition, bad-variable containment and the three per-clause
/// bounds with ceiling rounding of r(k−3).
pub fn verify_marking(f: &Formula, cls: &Classification, m: &Marking, r: f64) -> MarkingCheck {
    verify_marking_with(f, cls, m, bounds(r, f.k(), false))
}

pub fn verify_marking_with(
    f: &Formula,
    cls: &Classification,
    m: &Marking,
    need: [usize; 3],
) -> MarkingCheck {
    let mut violations = Vec::new();
    if m.n() != f.n() {
        violations.push(MarkingViolation::WrongSize {
            expected: f.n(),
            got: m.n(),
        });
        return MarkingCheck { ok: false, violations };
    }
    for v in 0..f.n() {
        if cls.is_bad_var(v) && m.role[v] != Role::Control {
            violations.push(MarkingViolation::BadNotControl { var: v });
        }
    }
    for c in 0..f.m() {
        if cls.is_bad_clause(c) {
            continue;
        }
        let cnt = clause_counts(f, cls, &m.role, c);
        for (slot, role) in [Role::Marked, Role::Auxiliary, Role::Control].into_iter().enumerate() {
            if cnt[slot] < need[slot] {
                violations.push(MarkingViolation::ShortClause {
                    clause: c,
                    role,
                    have: cnt[slot],
                    need: need[slot],
                });
            }
        }
    }
    MarkingCheck {
        ok: violations.is_empty(),
        violations,
    }
}
