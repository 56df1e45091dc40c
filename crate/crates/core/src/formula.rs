//! k-CNF formulas, the random formula model and the clause dependency graph.

use serde::{Deserialize, Serialize};

use crate::{rng, Error, Result};

/// A literal packed as `var << 1 | negated`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Literal(u32);

impl Literal {
    pub fn new(var: usize, negated: bool) -> Self {
        debug_assert!(var < (u32::MAX >> 1) as usize);
        Literal(((var as u32) << 1) | negated as u32)
    }

    pub fn positive(var: usize) -> Self {
        Self::new(var, false)
    }

    pub fn negative(var: usize) -> Self {
        Self::new(var, true)
    }

    #[inline]
    pub fn var(self) -> usize {
        (self.0 >> 1) as usize
    }

    #[inline]
    pub fn is_negated(self) -> bool {
        self.0 & 1 == 1
    }

    /// The truth value of this literal when its variable takes `value`.
    #[inline]
    pub fn eval(self, value: bool) -> bool {
        value != self.is_negated()
    }

    /// The value of the variable that makes this literal true.
    #[inline]
    pub fn satisfying_value(self) -> bool {
        !self.is_negated()
    }

    /// Signed 1-based DIMACS encoding.
    pub fn to_dimacs(self) -> i64 {
        let v = self.var() as i64 + 1;
        if self.is_negated() {
            -v
        } else {
            v
        }
    }
}

impl std::fmt::Debug for Literal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_negated() {
            write!(f, "¬x{}", self.var())
        } else {
            write!(f, "x{}", self.var())
        }
    }
}

/// An owned clause, used when building formulas by hand.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clause {
    pub literals: Vec<Literal>,
}

impl Clause {
    pub fn new(literals: Vec<Literal>) -> Self {
        Clause { literals }
    }

    /// Build from signed 1-based DIMACS integers.
    pub fn from_dimacs(lits: &[i64]) -> Self {
        Clause::new(
            lits.iter()
                .map(|&l| Literal::new(l.unsigned_abs() as usize - 1, l < 0))
                .collect(),
        )
    }

    /// Distinct variables, ascending.
    pub fn varset(&self) -> Vec<usize> {
        let mut vs: Vec<usize> = self.literals.iter().map(|l| l.var()).collect();
        vs.sort_unstable();
        vs.dedup();
        vs
    }
}

/// Borrowed view of one clause of a [`Formula`].
#[derive(Debug, Clone, Copy)]
pub struct ClauseRef<'a> {
    pub literals: &'a [Literal],
    /// Distinct variables, ascending.
    pub vars: &'a [u32],
}

impl ClauseRef<'_> {
    pub fn satisfied_by(&self, assignment: &[bool]) -> bool {
        self.literals.iter().any(|l| l.eval(assignment[l.var()]))
    }

    pub fn contains_var(&self, v: usize) -> bool {
        self.vars.binary_search(&(v as u32)).is_ok()
    }
}

/// An immutable k-CNF formula over variables `0..n`.
///
/// Clauses are stored flat: literal slots in one array, the per-clause
/// variable sets and the variable → clause incidence lists in CSR form.
#[derive(Clone, PartialEq, Eq)]
pub struct Formula {
    n: usize,
    k: usize,
    lits: Vec<Literal>,
    var_start: Vec<u32>,
    vars: Vec<u32>,
    occ_start: Vec<u32>,
    occ: Vec<u32>,
}

impl std::fmt::Debug for Formula {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Formula")
            .field("n", &self.n)
            .field("k", &self.k)
            .field("m", &self.m())
            .finish()
    }
}

impl Formula {
    /// Build a formula from `m * k` literal slots.
    pub fn from_literals(n: usize, k: usize, lits: Vec<Literal>) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("clause width k must be positive".into()));
        }
        if !lits.len().is_multiple_of(k) {
            return Err(Error::InvalidParameter(format!(
                "{} literal slots is not a multiple of k = {k}",
                lits.len()
            )));
        }
        if let Some(l) = lits.iter().find(|l| l.var() >= n) {
            return Err(Error::InvalidParameter(format!(
                "literal {l:?} out of range for n = {n}"
            )));
        }
        let m = lits.len() / k;

        let mut var_start = Vec::with_capacity(m + 1);
        let mut vars = Vec::with_capacity(lits.len());
        var_start.push(0u32);
        let mut scratch: Vec<u32> = Vec::with_capacity(k);
        for chunk in lits.chunks_exact(k) {
            scratch.clear();
            scratch.extend(chunk.iter().map(|l| l.var() as u32));
            scratch.sort_unstable();
            scratch.dedup();
            vars.extend_from_slice(&scratch);
            var_start.push(vars.len() as u32);
        }

        let mut occ_start = vec![0u32; n + 1];
        for &v in &vars {
            occ_start[v as usize + 1] += 1;
        }
        for i in 0..n {
            occ_start[i + 1] += occ_start[i];
        }
        let mut fill = occ_start.clone();
        let mut occ = vec![0u32; vars.len()];
        for c in 0..m {
            for &v in &vars[var_start[c] as usize..var_start[c + 1] as usize] {
                occ[fill[v as usize] as usize] = c as u32;
                fill[v as usize] += 1;
            }
        }

        Ok(Formula {
            n,
            k,
            lits,
            var_start,
            vars,
            occ_start,
            occ,
        })
    }

    /// Build from owned clauses; every clause must have exactly `k` literals.
    pub fn new(n: usize, k: usize, clauses: Vec<Clause>) -> Result<Self> {
        let mut lits = Vec::with_capacity(clauses.len() * k);
        for (i, c) in clauses.into_iter().enumerate() {
            if c.literals.len() != k {
                return Err(Error::NonUniformWidth {
                    clause: i,
                    width: c.literals.len(),
                    expected: k,
                });
            }
            lits.extend(c.literals);
        }
        Self::from_literals(n, k, lits)
    }

    /// Convenience constructor from DIMACS-style signed literals.
    pub fn from_dimacs_clauses(n: usize, k: usize, clauses: &[&[i64]]) -> Result<Self> {
        Self::new(n, k, clauses.iter().map(|c| Clause::from_dimacs(c)).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.lits.len() / self.k
    }

    /// Clause density m / n.
    pub fn density(&self) -> f64 {
        self.m() as f64 / self.n as f64
    }

    #[inline]
    pub fn literals(&self, c: usize) -> &[Literal] {
        &self.lits[c * self.k..(c + 1) * self.k]
    }

    /// Distinct variables of clause `c`, ascending.
    #[inline]
    pub fn vars_of(&self, c: usize) -> &[u32] {
        &self.vars[self.var_start[c] as usize..self.var_start[c + 1] as usize]
    }

    /// Clauses containing variable `v`, ascending and without repeats.
    #[inline]
    pub fn occurrences(&self, v: usize) -> &[u32] {
        &self.occ[self.occ_start[v] as usize..self.occ_start[v + 1] as usize]
    }

    pub fn clause(&self, c: usize) -> ClauseRef<'_> {
        ClauseRef {
            literals: self.literals(c),
            vars: self.vars_of(c),
        }
    }

    pub fn clauses(&self) -> impl ExactSizeIterator<Item = ClauseRef<'_>> + '_ {
        (0..self.m()).map(move |c| self.clause(c))
    }

    pub fn all_literals(&self) -> &[Literal] {
        &self.lits
    }

    /// Whether a total assignment satisfies every clause.
    pub fn is_satisfied_by(&self, assignment: &[bool]) -> bool {
        assert_eq!(assignment.len(), self.n);
        self.clauses().all(|c| c.satisfied_by(assignment))
    }

    /// Indices of clauses violated by a total assignment.
    pub fn violated_clauses(&self, assignment: &[bool]) -> Vec<usize> {
        (0..self.m())
            .filter(|&c| !self.clause(c).satisfied_by(assignment))
            .collect()
    }

    /// The formula restricted to a subset of its clauses (same variable set).
    pub fn subformula(&self, clauses: &[usize]) -> Formula {
        let mut lits = Vec::with_capacity(clauses.len() * self.k);
        for &c in clauses {
            lits.extend_from_slice(self.literals(c));
        }
        Formula::from_literals(self.n, self.k, lits).expect("subformula of a valid formula")
    }
}

/// Number of clauses ⌊αn⌋, robust to products that land a hair below an
/// integer in floating point.
pub fn clause_count(n: usize, alpha: f64) -> usize {
    let x = alpha * n as f64;
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r as usize
    } else {
        x.floor() as usize
    }
}

/// Draw Φ(k, n, ⌊αn⌋): every literal slot independently picks a uniform
/// variable and a uniform sign.
pub fn generate_random(k: usize, n: usize, alpha: f64, seed: u64) -> Result<Formula> {
    generate_random_with(k, n, alpha, &mut rng::seeded(seed))
}

pub fn generate_random_with(
    k: usize,
    n: usize,
    alpha: f64,
    rng: &mut impl rand::Rng,
) -> Result<Formula> {
    if k == 0 || n == 0 {
        return Err(Error::InvalidParameter("k and n must be positive".into()));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!("density must be positive, got {alpha}")));
    }
    let m = clause_count(n, alpha);
    let lits = (0..m * k)
        .map(|_| Literal::new(rng.gen_range(0..n), rng.gen_bool(0.5)))
        .collect();
    Formula::from_literals(n, k, lits)
}

/// The graph on clauses where two clauses are adjacent iff they share a
/// variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependencyGraph {
    pub adjacency: Vec<Vec<u32>>,
}

impl DependencyGraph {
    pub fn neighbors(&self, c: usize) -> &[u32] {
        &self.adjacency[c]
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    /// Whether the clause set is connected in this graph (empty sets count
    /// as connected).
    pub fn is_connected_set(&self, clauses: &[usize]) -> bool {
        let Some(&start) = clauses.first() else {
            return true;
        };
        let inside: std::collections::HashSet<usize> = clauses.iter().copied().collect();
        let mut seen = std::collections::HashSet::from([start]);
        let mut stack = vec![start];
        while let Some(c) = stack.pop() {
            for &d in &self.adjacency[c] {
                let d = d as usize;
                if inside.contains(&d) && seen.insert(d) {
                    stack.push(d);
                }
            }
        }
        seen.len() == inside.len()
    }
}

/// Build the dependency graph through the variable → clause incidence
/// lists.
pub fn build_dependency_graph(f: &Formula) -> DependencyGraph {
    let m = f.m();
    let mut stamp = vec![u32::MAX; m];
    let mut adjacency = Vec::with_capacity(m);
    for c in 0..m {
        let mut nbrs = Vec::new();
        stamp[c] = c as u32;
        for &v in f.vars_of(c) {
            for &d in f.occurrences(v as usize) {
                if stamp[d as usize] != c as u32 {
                    stamp[d as usize] = c as u32;
                    nbrs.push(d);
                }
            }
        }
        nbrs.sort_unstable();
        adjacency.push(nbrs);
    }
    DependencyGraph { adjacency }
}

impl Formula {
    pub fn dependency_graph(&self) -> DependencyGraph {
        build_dependency_graph(self)
    }
}
