use crate::formula::{Formula, Literal};

use super::PartialAssignment;

/// A clause of Φ^Λ: the original clause index and its surviving literals.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ResidualClause {
    pub index: usize,
    pub literals: Vec<Literal>,
}

impl ResidualClause {
    /// Distinct variables, ascending.
    pub fn vars(&self) -> Vec<usize> {
        let mut vs: Vec<usize> = self.literals.iter().map(|l| l.var()).collect();
        vs.sort_unstable();
        vs.dedup();
        vs
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }

    /// Condition on `var = value`: `None` if the clause becomes satisfied.
    pub fn condition(&self, var: usize, value: bool) -> Option<ResidualClause> {
        if self.literals.iter().any(|l| l.var() == var && l.eval(value)) {
            return None;
        }
        Some(ResidualClause {
            index: self.index,
            literals: self.literals.iter().copied().filter(|l| l.var() != var).collect(),
        })
    }
}

/// Φ^Λ together with its free variables V^Λ.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimplifiedFormula {
    /// Clauses not satisfied by Λ, in clause order, with falsified literals
    /// removed. Clauses whose literals are all falsified appear with an
    /// empty literal list.
    pub residuals: Vec<ResidualClause>,
    /// Every variable not assigned by Λ, ascending.
    pub free_vars: Vec<usize>,
    pub empty_clause_present: bool,
}

pub fn simplify(f: &Formula, lam: &PartialAssignment) -> SimplifiedFormula {
    assert_eq!(lam.n(), f.n(), "assignment and formula disagree on n");
    let mut residuals = Vec::new();
    let mut empty_clause_present = false;
    for c in 0..f.m() {
        let lits = f.literals(c);
        if lits.iter().any(|l| lam.get(l.var()).is_some_and(|b| l.eval(b))) {
            continue;
        }
        let literals: Vec<Literal> = lits
            .iter()
            .copied()
            .filter(|l| !lam.is_assigned(l.var()))
            .collect();
        empty_clause_present |= literals.is_empty();
        residuals.push(ResidualClause { index: c, literals });
    }
    SimplifiedFormula {
        residuals,
        free_vars: lam.unassigned().collect(),
        empty_clause_present,
    }
}

/// Condition a residual clause list on `var = value`. Returns `None` when an
/// empty clause appears.
pub fn condition_all(
    clauses: &[ResidualClause],
    var: usize,
    value: bool,
) -> Option<Vec<ResidualClause>> {
    let mut out = Vec::with_capacity(clauses.len());
    for c in clauses {
        if let Some(r) = c.condition(var, value) {
            if r.is_empty() {
                return None;
            }
            out.push(r);
        }
    }
    Some(out)
}

/// Distinct variables of a clause list, ascending.
pub fn covered_vars(clauses: &[ResidualClause]) -> Vec<usize> {
    let mut vs: Vec<usize> = clauses
        .iter()
        .flat_map(|c| c.literals.iter().map(|l| l.var()))
        .collect();
    vs.sort_unstable();
    vs.dedup();
    vs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_assignment_keeps_everything() {
        let f = Formula::from_dimacs_clauses(3, 2, &[&[1, -2], &[2, 3]]).unwrap();
        let sf = simplify(&f, &PartialAssignment::new(3));
        assert_eq!(sf.residuals.len(), 2);
        assert_eq!(sf.residuals[0].literals, f.literals(0));
        assert_eq!(sf.free_vars, vec![0, 1, 2]);
        assert!(!sf.empty_clause_present);
    }

    #[test]
    fn satisfied_clause_removed() {
        let f = Formula::from_dimacs_clauses(2, 2, &[&[1, -2]]).unwrap();
        let lam = PartialAssignment::from_pairs(2, [(0, true)]).unwrap();
        assert!(simplify(&f, &lam).residuals.is_empty());
    }

    #[test]
    fn falsified_clause_is_empty() {
        let f = Formula::from_dimacs_clauses(2, 2, &[&[1, 2]]).unwrap();
        let lam = PartialAssignment::from_pairs(2, [(0, false), (1, false)]).unwrap();
        let sf = simplify(&f, &lam);
        assert!(sf.empty_clause_present);
        assert!(sf.free_vars.is_empty());
    }

    #[test]
    fn false_literals_dropped() {
        let f = Formula::from_dimacs_clauses(3, 3, &[&[1, 2, -3]]).unwrap();
        let lam = PartialAssignment::from_pairs(3, [(2, true)]).unwrap();
        let sf = simplify(&f, &lam);
        assert_eq!(sf.residuals[0].literals, vec![Literal::positive(0), Literal::positive(1)]);
    }
}
