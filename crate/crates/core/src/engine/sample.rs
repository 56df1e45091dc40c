//! Exact conditional sampling from μ_{Ω^Λ} restricted to a variable set.
//!
//! Variables are drawn one at a time in index order. For each, the
//! component of the current residual formula containing it is located and
//! counted twice, once per value; the value is then drawn with probability
//! proportional to the counts and pinned.

use num_bigint::{BigUint, RandBigInt};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;

use crate::formula::Formula;
use crate::{Error, Result};

use super::count::{count_over, Tally, DEFAULT_EXCESS_CAP, SMALL_COUNT_VARS};
use super::{condition_all, PartialAssignment, ResidualState};

/// Component-size and cycle-variable limits for the exact sampler.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SampleCaps {
    /// Largest component (in clauses) the sampler will count.
    pub component: usize,
    /// Largest number of cycle-breaking variables per component.
    pub excess: usize,
}

impl Default for SampleCaps {
    fn default() -> Self {
        SampleCaps {
            component: usize::MAX,
            excess: DEFAULT_EXCESS_CAP,
        }
    }
}

impl SampleCaps {
    pub fn with_component(component: usize) -> Self {
        SampleCaps {
            component,
            ..Self::default()
        }
    }
}

/// Counts of satisfying extensions with a variable set to F (`t0`) and T
/// (`t1`), over the same set of remaining variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Marginal {
    Small { t0: u128, t1: u128 },
    Big { t0: BigUint, t1: BigUint },
}

impl Marginal {
    pub const FAIR: Marginal = Marginal::Small { t0: 1, t1: 1 };

    pub fn counts(&self) -> (BigUint, BigUint) {
        match self {
            Marginal::Small { t0, t1 } => (BigUint::from(*t0), BigUint::from(*t1)),
            Marginal::Big { t0, t1 } => (t0.clone(), t1.clone()),
        }
    }

    pub fn is_degenerate(&self) -> bool {
        match self {
            Marginal::Small { t0, t1 } => *t0 == 0 && *t1 == 0,
            Marginal::Big { t0, t1 } => t0.is_zero() && t1.is_zero(),
        }
    }

    /// Pr(T) as an exact rational.
    pub fn prob_true(&self) -> BigRational {
        let (t0, t1) = self.counts();
        BigRational::new((t1.clone()).into(), (t0 + t1).into())
    }

    pub fn prob_true_f64(&self) -> f64 {
        match self {
            Marginal::Small { t0, t1 } => *t1 as f64 / (*t0 as f64 + *t1 as f64),
            Marginal::Big { .. } => {
                use num_traits::ToPrimitive;
                self.prob_true().to_f64().unwrap_or(f64::NAN)
            }
        }
    }
}

/// Source of the value decisions made by the sampler.
pub trait Chooser {
    /// Return `true` to set the variable to F. A faithful chooser does so
    /// with probability `t0 / (t0 + t1)`; the total is never zero.
    fn pick_false(&mut self, m: &Marginal) -> bool;
}

/// Draws `t` uniformly from `[0, t0 + t1)` and picks F iff `t < t0`.
pub struct RngChooser<'a, R: Rng>(pub &'a mut R);

impl<R: Rng> Chooser for RngChooser<'_, R> {
    fn pick_false(&mut self, m: &Marginal) -> bool {
        match m {
            Marginal::Small { t0, t1 } => self.0.gen_range(0..t0 + t1) < *t0,
            Marginal::Big { t0, t1 } => &self.0.gen_biguint_below(&(t0 + t1)) < t0,
        }
    }
}

fn marginal_with<T: Tally>(
    clauses: &[super::ResidualClause],
    v: usize,
    universe: usize,
    excess: usize,
) -> Result<(T, T)> {
    if universe <= excess.min(64) {
        let vars = super::covered_vars(clauses);
        if vars.len() == universe {
            if let Some(pair) = super::count::mask_marginal(clauses, &vars, v) {
                return Ok(pair);
            }
        }
    }
    let side = |b: bool| -> Result<T> {
        match condition_all(clauses, v, b) {
            Some(next) => count_over::<T>(&next, universe - 1, excess),
            None => Ok(T::nil()),
        }
    };
    Ok((side(false)?, side(true)?))
}

/// The exact conditional marginal of the free variable `v` under the
/// current pinning, and the size of its component.
pub fn marginal(state: &mut ResidualState<'_>, v: usize, caps: SampleCaps) -> Result<(Marginal, usize)> {
    if let Some(hit) = state.memo_get(v, caps) {
        return Ok(hit);
    }
    let out = compute_marginal(state, v, caps)?;
    state.memo_put(v, caps, out.clone());
    Ok(out)
}

fn compute_marginal(state: &mut ResidualState<'_>, v: usize, caps: SampleCaps) -> Result<(Marginal, usize)> {
    let comp = state.component_of(v, caps.component)?;
    if comp.clauses.is_empty() {
        return Ok((Marginal::FAIR, 0));
    }
    let size = comp.clauses.len();
    let universe = comp.vars.len();
    let m = if universe <= SMALL_COUNT_VARS {
        let (t0, t1) = marginal_with::<u128>(&comp.clauses, v, universe, caps.excess)?;
        Marginal::Small { t0, t1 }
    } else {
        let (t0, t1) = marginal_with::<BigUint>(&comp.clauses, v, universe, caps.excess)?;
        Marginal::Big { t0, t1 }
    };
    Ok((m, size))
}

/// Sample `vars` (in the given order) into `state`, pinning each drawn
/// value. Returns the largest component met. On error the variables drawn
/// so far remain pinned.
pub fn sample_into(
    state: &mut ResidualState<'_>,
    vars: &[usize],
    caps: SampleCaps,
    chooser: &mut impl Chooser,
) -> Result<usize> {
    let mut largest = 0;
    for &v in vars {
        let (m, size) = marginal(state, v, caps)?;
        largest = largest.max(size);
        if m.is_degenerate() {
            return Err(Error::UnsatisfiableResidual { var: v });
        }
        let value = !chooser.pick_false(&m);
        state.pin(v, value);
    }
    Ok(largest)
}

fn checked_targets(f: &Formula, lam: &PartialAssignment, s: &[usize]) -> Result<Vec<usize>> {
    let mut vars = s.to_vec();
    vars.sort_unstable();
    vars.dedup();
    if vars.len() != s.len() {
        return Err(Error::InvalidParameter("sample set has repeated variables".into()));
    }
    if let Some(&v) = vars.iter().find(|&&v| v >= f.n() || lam.is_assigned(v)) {
        return Err(Error::InvalidParameter(format!(
            "variable {v} is out of range or already pinned"
        )));
    }
    Ok(vars)
}

/// Draw an assignment of `s` from μ_{Ω^Λ} restricted to `s`.
pub fn sample_marginals<R: Rng>(
    f: &Formula,
    lam: &PartialAssignment,
    s: &[usize],
    cap: usize,
    rng: &mut R,
) -> Result<PartialAssignment> {
    sample_marginals_with(f, lam, s, SampleCaps::with_component(cap), &mut RngChooser(rng))
}

pub fn sample_marginals_with(
    f: &Formula,
    lam: &PartialAssignment,
    s: &[usize],
    caps: SampleCaps,
    chooser: &mut impl Chooser,
) -> Result<PartialAssignment> {
    let vars = checked_targets(f, lam, s)?;
    let mut state = ResidualState::from_assignment(f, lam);
    if state.empty_clauses() > 0 {
        return Err(Error::UnsatisfiableResidual {
            var: vars.first().copied().unwrap_or(0),
        });
    }
    sample_into(&mut state, &vars, caps, chooser)?;
    Ok(state.assignment().restrict(&vars))
}

struct Decision {
    chose_false: bool,
    prob: BigRational,
    alternative: bool,
}

/// Replays a fixed prefix of decisions, then takes F whenever possible,
/// recording the probability of every decision.
struct Scripted {
    prefix: Vec<bool>,
    taken: Vec<Decision>,
}

impl Chooser for Scripted {
    fn pick_false(&mut self, m: &Marginal) -> bool {
        let (t0, t1) = m.counts();
        let i = self.taken.len();
        let chose_false = if i < self.prefix.len() {
            self.prefix[i]
        } else {
            !t0.is_zero()
        };
        let total = &t0 + &t1;
        let hit = if chose_false { t0 } else { t1.clone() };
        debug_assert!(!hit.is_zero());
        self.taken.push(Decision {
            chose_false,
            prob: BigRational::new(hit.into(), total.into()),
            alternative: chose_false && !t1.is_zero(),
        });
        chose_false
    }
}

/// The exact output law of [`sample_marginals`]: every reachable
/// assignment of `s` (as values in ascending variable order) with its
/// probability, obtained by following every random branch.
pub fn sample_law(
    f: &Formula,
    lam: &PartialAssignment,
    s: &[usize],
    caps: SampleCaps,
) -> Result<Vec<(Vec<bool>, BigRational)>> {
    let vars = checked_targets(f, lam, s)?;
    let mut state = ResidualState::from_assignment(f, lam);
    if state.empty_clauses() > 0 {
        return Err(Error::UnsatisfiableResidual {
            var: vars.first().copied().unwrap_or(0),
        });
    }
    let mut law = Vec::new();
    let mut prefix = Vec::new();
    loop {
        let mut script = Scripted {
            prefix,
            taken: Vec::with_capacity(vars.len()),
        };
        let res = sample_into(&mut state, &vars, caps, &mut script);
        let values: Vec<bool> = vars.iter().filter_map(|&v| state.value(v)).collect();
        for &v in &vars {
            if state.value(v).is_some() {
                state.unpin(v);
            }
        }
        res?;
        let p = script
            .taken
            .iter()
            .fold(BigRational::one(), |acc, d| acc * &d.prob);
        law.push((values, p));
        match script.taken.iter().rposition(|d| d.alternative) {
            Some(i) => {
                prefix = script.taken[..i].iter().map(|d| d.chose_false).collect();
                prefix.push(false);
            }
            None => break,
        }
    }
    Ok(law)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn free_variable_is_fair() {
        let f = Formula::from_dimacs_clauses(3, 2, &[&[1, 2]]).unwrap();
        let law = sample_law(&f, &PartialAssignment::new(3), &[2], SampleCaps::default()).unwrap();
        let half = BigRational::new(1.into(), 2.into());
        assert_eq!(law, vec![(vec![false], half.clone()), (vec![true], half)]);
    }

    #[test]
    fn single_clause_marginal() {
        let f = Formula::from_dimacs_clauses(2, 2, &[&[1, 2]]).unwrap();
        let mut state = ResidualState::new(&f);
        let (m, size) = marginal(&mut state, 0, SampleCaps::default()).unwrap();
        assert_eq!(m, Marginal::Small { t0: 1, t1: 2 });
        assert_eq!(size, 1);
        let law = sample_law(&f, &PartialAssignment::new(2), &[0, 1], SampleCaps::default()).unwrap();
        let third = BigRational::new(1.into(), 3.into());
        assert_eq!(law.len(), 3);
        assert!(law.iter().all(|(_, p)| *p == third));
    }

    #[test]
    fn unsatisfiable_component_errors() {
        let f = Formula::from_dimacs_clauses(1, 1, &[&[1], &[-1]]).unwrap();
        let mut r = rng::seeded(1);
        assert_eq!(
            sample_marginals(&f, &PartialAssignment::new(1), &[0], 10, &mut r),
            Err(Error::UnsatisfiableResidual { var: 0 })
        );
    }

    #[test]
    fn pinned_targets_rejected() {
        let f = Formula::from_dimacs_clauses(2, 2, &[&[1, 2]]).unwrap();
        let lam = PartialAssignment::from_pairs(2, [(0, true)]).unwrap();
        let mut r = rng::seeded(1);
        assert!(sample_marginals(&f, &lam, &[0], 10, &mut r).is_err());
        assert!(sample_marginals(&f, &PartialAssignment::new(2), &[1, 1], 10, &mut r).is_err());
    }

    #[test]
    fn seeded_runs_replay() {
        let f = crate::formula::generate_random(3, 14, 2.0, 5).unwrap();
        let s: Vec<usize> = (0..14).collect();
        let lam = PartialAssignment::new(14);
        let a = sample_marginals(&f, &lam, &s, 100, &mut rng::seeded(9));
        let b = sample_marginals(&f, &lam, &s, 100, &mut rng::seeded(9));
        assert_eq!(a, b);
    }
}
