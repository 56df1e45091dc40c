//! Brute-force ground truth and exact-distribution machinery.

use std::collections::{BTreeMap, HashMap};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::engine::{sample_law, PartialAssignment, SampleCaps};
use crate::formula::Formula;
use crate::marking::Marking;
use crate::{Error, Result};

/// Most free variables [`brute_count`] will enumerate.
pub const BRUTE_LIMIT: usize = 30;
/// Most marked variables for the exact block-chain kernel.
pub const KERNEL_LIMIT: usize = 12;
/// Most variables in an exact influence matrix.
pub const SPECTRAL_LIMIT: usize = 64;

/// Satisfying assignments of Φ^Λ as bitmasks over the free variables.
struct Enumeration {
    free: Vec<usize>,
    masks: Vec<u64>,
}

fn enumerate(f: &Formula, lam: &PartialAssignment) -> Result<Enumeration> {
    let free: Vec<usize> = lam.unassigned().collect();
    if free.len() > BRUTE_LIMIT {
        return Err(Error::TooLarge {
            vars: free.len(),
            limit: BRUTE_LIMIT,
        });
    }
    let mut bit = vec![u64::MAX; f.n()];
    for (i, &v) in free.iter().enumerate() {
        bit[v] = i as u64;
    }
    // Each open clause is satisfied by x iff x & pos != 0 or !x & neg != 0.
    let mut open: Vec<(u64, u64)> = Vec::new();
    for c in 0..f.m() {
        let (mut pos, mut neg, mut sat) = (0u64, 0u64, false);
        for l in f.literals(c) {
            match lam.get(l.var()) {
                Some(b) => sat |= l.eval(b),
                None if l.is_negated() => neg |= 1 << bit[l.var()],
                None => pos |= 1 << bit[l.var()],
            }
        }
        if !sat {
            if pos == 0 && neg == 0 {
                return Ok(Enumeration { free, masks: Vec::new() });
            }
            open.push((pos, neg));
        }
    }
    open.sort_unstable();
    open.dedup();
    let masks = (0..1u64 << free.len())
        .filter(|&x| open.iter().all(|&(p, q)| x & p != 0 || !x & q != 0))
        .collect();
    Ok(Enumeration { free, masks })
}

/// |Ω^Λ| by exhaustive enumeration of the free variables.
pub fn brute_count(f: &Formula, lam: &PartialAssignment) -> Result<BigUint> {
    Ok(BigUint::from(enumerate(f, lam)?.masks.len()))
}

/// Every satisfying total assignment extending Λ, in lexicographic order of
/// the free variables (lowest index least significant).
pub fn brute_enumerate(f: &Formula, lam: &PartialAssignment) -> Result<Vec<Vec<bool>>> {
    let e = enumerate(f, lam)?;
    let base: Vec<bool> = (0..f.n()).map(|v| lam.get(v).unwrap_or(false)).collect();
    Ok(e
        .masks
        .iter()
        .map(|&x| {
            let mut a = base.clone();
            for (i, &v) in e.free.iter().enumerate() {
                a[v] = x >> i & 1 == 1;
            }
            a
        })
        .collect())
}

/// Pack the values of `vars` (bit i holds `vars[i]`) from a total
/// assignment.
pub fn key_of(vars: &[usize], assignment: &[bool]) -> u64 {
    vars.iter()
        .enumerate()
        .fold(0, |acc, (i, &v)| acc | (u64::from(assignment[v]) << i))
}

fn rational_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

fn ratio(num: &BigUint, den: &BigUint) -> BigRational {
    BigRational::new(BigInt::from(num.clone()), BigInt::from(den.clone()))
}

/// A distribution over assignments of `vars` with exact rational masses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactDistribution {
    vars: Vec<usize>,
    mass: BTreeMap<u64, BigRational>,
}

impl ExactDistribution {
    /// Masses must be positive and sum to exactly 1.
    pub fn new(vars: Vec<usize>, mass: BTreeMap<u64, BigRational>) -> Result<Self> {
        if vars.len() > 64 {
            return Err(Error::TooLarge { vars: vars.len(), limit: 64 });
        }
        let mut total = BigRational::zero();
        for p in mass.values() {
            if !p.is_positive() {
                return Err(Error::InvalidParameter("masses must be positive".into()));
            }
            total += p;
        }
        if !total.is_one() {
            return Err(Error::InvalidParameter(format!("masses sum to {total}, not 1")));
        }
        Ok(ExactDistribution { vars, mass })
    }

    /// Masses proportional to positive integer weights.
    pub fn from_weights(vars: Vec<usize>, weights: BTreeMap<u64, BigUint>) -> Result<Self> {
        let total: BigUint = weights.values().sum();
        if total.is_zero() {
            return Err(Error::InvalidParameter("empty support".into()));
        }
        let mass = weights
            .into_iter()
            .filter(|(_, w)| !w.is_zero())
            .map(|(x, w)| (x, ratio(&w, &total)))
            .collect();
        Self::new(vars, mass)
    }

    pub fn uniform(vars: Vec<usize>, support: impl IntoIterator<Item = u64>) -> Result<Self> {
        Self::from_weights(vars, support.into_iter().map(|x| (x, BigUint::one())).collect())
    }

    pub fn point(vars: Vec<usize>, x: u64) -> Self {
        ExactDistribution {
            vars,
            mass: BTreeMap::from([(x, BigRational::one())]),
        }
    }

    pub fn vars(&self) -> &[usize] {
        &self.vars
    }

    pub fn mass(&self, x: u64) -> BigRational {
        self.mass.get(&x).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn masses(&self) -> &BTreeMap<u64, BigRational> {
        &self.mass
    }

    pub fn support_size(&self) -> usize {
        self.mass.len()
    }

    /// The law of the sub-assignment on `sub` (which must be a subset of
    /// `vars`), keyed in `sub` order.
    pub fn marginal(&self, sub: &[usize]) -> Result<ExactDistribution> {
        let pos: Vec<usize> = sub
            .iter()
            .map(|v| {
                self.vars
                    .iter()
                    .position(|w| w == v)
                    .ok_or(Error::SupportMismatch)
            })
            .collect::<Result<_>>()?;
        let mut mass: BTreeMap<u64, BigRational> = BTreeMap::new();
        for (&x, p) in &self.mass {
            let y = pos
                .iter()
                .enumerate()
                .fold(0u64, |acc, (i, &j)| acc | ((x >> j & 1) << i));
            *mass.entry(y).or_insert_with(BigRational::zero) += p;
        }
        Ok(ExactDistribution { vars: sub.to_vec(), mass })
    }
}

/// μ_{Ω^Λ} projected onto `vars`, from exhaustive enumeration.
pub fn uniform_satisfying(f: &Formula, lam: &PartialAssignment, vars: &[usize]) -> Result<ExactDistribution> {
    let mut weights: BTreeMap<u64, BigUint> = BTreeMap::new();
    for a in brute_enumerate(f, lam)? {
        *weights.entry(key_of(vars, &a)).or_default() += 1u32;
    }
    ExactDistribution::from_weights(vars.to_vec(), weights)
}

/// Sample counts over assignments of `vars`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Empirical {
    vars: Vec<usize>,
    counts: BTreeMap<u64, u64>,
    samples: u64,
}

impl Empirical {
    pub fn new(vars: Vec<usize>) -> Self {
        Empirical {
            vars,
            ..Self::default()
        }
    }

    pub fn vars(&self) -> &[usize] {
        &self.vars
    }

    pub fn samples(&self) -> u64 {
        self.samples
    }

    pub fn counts(&self) -> &BTreeMap<u64, u64> {
        &self.counts
    }

    /// Record the projection of a total assignment.
    pub fn record(&mut self, assignment: &[bool]) {
        self.record_key(key_of(&self.vars, assignment));
    }

    pub fn record_key(&mut self, x: u64) {
        *self.counts.entry(x).or_insert(0) += 1;
        self.samples += 1;
    }

    pub fn merge(&mut self, other: &Empirical) -> Result<()> {
        if self.vars != other.vars {
            return Err(Error::SupportMismatch);
        }
        for (&x, &c) in &other.counts {
            *self.counts.entry(x).or_insert(0) += c;
        }
        self.samples += other.samples;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TVReport {
    pub tv: f64,
    /// Sample count for a plug-in estimate.
    pub samples: Option<u64>,
    /// Atoms in the union of both supports.
    pub support: usize,
    /// `δ` of the confidence statements.
    pub delta: Option<f64>,
    /// With probability ≥ 1 − δ, the plug-in TV exceeds the true TV by at
    /// most this much: ½√(N/n) + √(ln(1/δ)/2n).
    pub radius: Option<f64>,
    /// Simultaneous L1 deviation bound over all N atoms, halved:
    /// √((N ln 2 + ln(1/δ))/2n).
    pub dkw_radius: Option<f64>,
}

/// Exact TV between two exact distributions over the same variables.
pub fn tv_exact(p: &ExactDistribution, q: &ExactDistribution) -> Result<BigRational> {
    if p.vars != q.vars {
        return Err(Error::SupportMismatch);
    }
    let mut sum = BigRational::zero();
    for (x, a) in &p.mass {
        sum += (a - q.mass(*x)).abs();
    }
    for (x, b) in &q.mass {
        if !p.mass.contains_key(x) {
            sum += b;
        }
    }
    Ok(sum / BigRational::from_integer(2.into()))
}

pub fn tv_distance(p: &ExactDistribution, q: &ExactDistribution) -> Result<TVReport> {
    let tv = tv_exact(p, q)?;
    let support = p.mass.keys().chain(q.mass.keys()).collect::<std::collections::BTreeSet<_>>().len();
    Ok(TVReport {
        tv: rational_f64(&tv),
        samples: None,
        support,
        delta: None,
        radius: None,
        dkw_radius: None,
    })
}

/// Plug-in TV between an exact law and a sample histogram, with confidence
/// radii at level `delta`.
pub fn tv_empirical(p: &ExactDistribution, h: &Empirical, delta: f64) -> Result<TVReport> {
    if p.vars != h.vars {
        return Err(Error::SupportMismatch);
    }
    if h.samples == 0 {
        return Err(Error::InvalidParameter("no samples".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("δ must lie in (0, 1), got {delta}")));
    }
    let n = h.samples as f64;
    let mut sum = 0.0;
    for (x, a) in &p.mass {
        let e = h.counts.get(x).copied().unwrap_or(0) as f64 / n;
        sum += (rational_f64(a) - e).abs();
    }
    let mut support = p.mass.len();
    for (x, &c) in &h.counts {
        if !p.mass.contains_key(x) {
            sum += c as f64 / n;
            support += 1;
        }
    }
    let big_n = support as f64;
    let log = (1.0 / delta).ln();
    Ok(TVReport {
        tv: (sum / 2.0).clamp(0.0, 1.0),
        samples: Some(h.samples),
        support,
        delta: Some(delta),
        radius: Some(0.5 * (big_n / n).sqrt() + (log / (2.0 * n)).sqrt()),
        dkw_radius: Some(((big_n * std::f64::consts::LN_2 + log) / (2.0 * n)).sqrt()),
    })
}

/// Calls `visit` with every `rho`-subset of `0..len` in lexicographic order.
pub fn for_each_subset(len: usize, rho: usize, mut visit: impl FnMut(&[usize])) {
    if rho > len {
        return;
    }
    let mut idx: Vec<usize> = (0..rho).collect();
    loop {
        visit(&idx);
        let Some(i) = (0..rho).rev().find(|&i| idx[i] != i + len - rho) else {
            return;
        };
        idx[i] += 1;
        for j in i + 1..rho {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn binomial(n: usize, k: usize) -> BigUint {
    (0..k).fold(BigUint::one(), |acc, i| acc * (n - i) / (i + 1))
}

/// Exact conditional laws of the block update, keyed by (block, rest of
/// the chain state). `None` marks a rest configuration with no satisfying
/// extension.
type Law = Vec<(u64, BigRational)>;

struct BlockLaws<'f> {
    f: &'f Formula,
    marked: Vec<usize>,
    cache: HashMap<(u64, u64), Option<Law>>,
}

impl<'f> BlockLaws<'f> {
    fn new(f: &'f Formula, marking: &Marking) -> Result<Self> {
        if marking.n() != f.n() {
            return Err(Error::MarkingInvalid { violations: 1 });
        }
        let marked = marking.marked();
        if marked.len() > KERNEL_LIMIT {
            return Err(Error::TooLarge {
                vars: marked.len(),
                limit: KERNEL_LIMIT,
            });
        }
        Ok(BlockLaws {
            f,
            marked,
            cache: HashMap::new(),
        })
    }

    /// Law of the block (as bits in chain-state position) given `rest`.
    fn law(&mut self, block: &[usize], rest: u64) -> Result<Option<&[(u64, BigRational)]>> {
        let bmask = block.iter().fold(0u64, |acc, &p| acc | 1 << p);
        let key = (bmask, rest);
        if !self.cache.contains_key(&key) {
            let mut lam = PartialAssignment::new(self.f.n());
            for (p, &v) in self.marked.iter().enumerate() {
                if bmask >> p & 1 == 0 {
                    lam.set(v, rest >> p & 1 == 1);
                }
            }
            let vars: Vec<usize> = block.iter().map(|&p| self.marked[p]).collect();
            let entry = match sample_law(self.f, &lam, &vars, SampleCaps::default()) {
                Ok(law) => Some(
                    law.into_iter()
                        .map(|(vals, q)| {
                            let bits = block
                                .iter()
                                .zip(&vals)
                                .fold(0u64, |acc, (&p, &b)| acc | (u64::from(b) << p));
                            (bits, q)
                        })
                        .collect(),
                ),
                Err(Error::UnsatisfiableResidual { .. }) => None,
                Err(e) => return Err(e),
            };
            self.cache.insert(key, entry);
        }
        Ok(self.cache[&key].as_deref())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarityReport {
    pub marked: usize,
    pub rho: usize,
    /// Assignments of V_m with positive mass under μ.
    pub support: usize,
    pub blocks: String,
    /// max_x |μP(x) − μ(x)|.
    pub residual: f64,
    pub exact_zero: bool,
}

/// Build the exact ρ-block transition kernel from the sampler's own
/// conditional laws and measure how far μ|V_m (from enumeration) is from
/// being stationary for it.
pub fn stationarity_check(f: &Formula, marking: &Marking, rho: usize) -> Result<StationarityReport> {
    let mut laws = BlockLaws::new(f, marking)?;
    let len = laws.marked.len();
    if rho == 0 || rho > len {
        return Err(Error::InvalidParameter(format!("ρ = {rho} outside 1..={len}")));
    }
    let mu = uniform_satisfying(f, &PartialAssignment::new(f.n()), &laws.marked)?;
    let blocks = binomial(len, rho);
    let scale = BigRational::new(1.into(), BigInt::from(blocks.clone()));

    let mut pushed: BTreeMap<u64, BigRational> = BTreeMap::new();
    let mut failure = None;
    for_each_subset(len, rho, |block| {
        if failure.is_some() {
            return;
        }
        let bmask = block.iter().fold(0u64, |acc, &p| acc | 1 << p);
        // Mass of μ on each configuration of the complement of the block.
        let mut rest_mass: BTreeMap<u64, BigRational> = BTreeMap::new();
        for (&x, p) in mu.masses() {
            *rest_mass.entry(x & !bmask).or_insert_with(BigRational::zero) += p;
        }
        for (rest, m) in rest_mass {
            match laws.law(block, rest) {
                Ok(Some(law)) => {
                    for (bits, q) in law {
                        *pushed.entry(rest | bits).or_insert_with(BigRational::zero) += &m * q * &scale;
                    }
                }
                Ok(None) => {
                    failure = Some(Error::UndefinedConditional(format!(
                        "rest configuration {rest:#x} has positive mass but no extension"
                    )))
                }
                Err(e) => failure = Some(e),
            }
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let mut worst = BigRational::zero();
    for (&x, p) in mu.masses() {
        let d = (pushed.get(&x).cloned().unwrap_or_else(BigRational::zero) - p).abs();
        worst = worst.max(d);
    }
    for (x, q) in &pushed {
        if !mu.masses().contains_key(x) {
            worst = worst.max(q.abs());
        }
    }
    Ok(StationarityReport {
        marked: len,
        rho,
        support: mu.support_size(),
        blocks: blocks.to_string(),
        residual: rational_f64(&worst),
        exact_zero: worst.is_zero(),
    })
}

/// The dense ρ-block transition matrix over all 2^{|V_m|} chain states,
/// in floating point. Rows whose rest configurations cannot be extended
/// (for some block) are `None`: the sampler errors from such states.
#[derive(Debug, Clone)]
pub struct BlockKernel {
    pub marked: Vec<usize>,
    pub rho: usize,
    pub rows: Vec<Option<Vec<f64>>>,
}

pub fn block_kernel(f: &Formula, marking: &Marking, rho: usize) -> Result<BlockKernel> {
    let mut laws = BlockLaws::new(f, marking)?;
    let len = laws.marked.len();
    if rho == 0 || rho > len {
        return Err(Error::InvalidParameter(format!("ρ = {rho} outside 1..={len}")));
    }
    let states = 1usize << len;
    let weight = 1.0 / binomial(len, rho).to_f64().unwrap_or(f64::INFINITY);
    let mut blocks = Vec::new();
    for_each_subset(len, rho, |b| blocks.push(b.to_vec()));
    let mut rows = Vec::with_capacity(states);
    for x in 0..states as u64 {
        let mut row = vec![0.0; states];
        let mut ok = true;
        for block in &blocks {
            let bmask = block.iter().fold(0u64, |acc, &p| acc | 1 << p);
            let rest = x & !bmask;
            match laws.law(block, rest)? {
                Some(law) => {
                    for (bits, q) in law {
                        row[(rest | bits) as usize] += weight * rational_f64(q);
                    }
                }
                None => {
                    ok = false;
                    break;
                }
            }
        }
        rows.push(ok.then_some(row));
    }
    Ok(BlockKernel {
        marked: laws.marked,
        rho,
        rows,
    })
}

impl BlockKernel {
    pub fn states(&self) -> usize {
        self.rows.len()
    }

    /// One step of the chain law. Mass sitting on an undefined row is
    /// returned separately as the probability of a failed step.
    pub fn step(&self, dist: &[f64]) -> (Vec<f64>, f64) {
        let mut out = vec![0.0; dist.len()];
        let mut lost = 0.0;
        for (x, &p) in dist.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            match &self.rows[x] {
                Some(row) => {
                    for (y, &q) in row.iter().enumerate() {
                        out[y] += p * q;
                    }
                }
                None => lost += p,
            }
        }
        (out, lost)
    }

    /// The law after `t` steps from independent fair coins, and the total
    /// mass lost to failed steps.
    pub fn evolve_from_uniform(&self, t: u64) -> (Vec<f64>, f64) {
        let s = self.states();
        let mut dist = vec![1.0 / s as f64; s];
        let mut lost = 0.0;
        for _ in 0..t {
            let (next, l) = self.step(&dist);
            dist = next;
            lost += l;
        }
        (dist, lost)
    }

    /// TV between a floating-point law over chain states and an exact one.
    pub fn tv_to(&self, dist: &[f64], target: &ExactDistribution) -> f64 {
        let sum: f64 = dist
            .iter()
            .enumerate()
            .map(|(x, &p)| (p - rational_f64(&target.mass(x as u64))).abs())
            .sum();
        sum / 2.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    /// Unpinned marked variables with a non-degenerate marginal.
    pub vars: Vec<usize>,
    /// Unpinned marked variables whose marginal is 0 or 1.
    pub frozen: Vec<usize>,
    /// I^Λ(u → v), rows indexed by u.
    pub matrix: Vec<Vec<f64>>,
    pub lambda1: f64,
    pub max_row_sum: f64,
    /// λ₁ ≤ max row sum (up to 1e−9).
    pub holds: bool,
    /// 2^{−r₀k} ln n, for comparison only.
    pub reference: f64,
    pub iterations: usize,
}

/// Largest eigenvalue of a symmetric positive semidefinite matrix by power
/// iteration, to a residual of `tol`.
pub fn power_iteration(a: &[Vec<f64>], tol: f64, max_iter: usize) -> (f64, usize) {
    let n = a.len();
    if n == 0 {
        return (0.0, 0);
    }
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + i as f64 / (7.0 * n as f64)).collect();
    let norm = |v: &[f64]| v.iter().map(|y| y * y).sum::<f64>().sqrt();
    let nx = norm(&x);
    x.iter_mut().for_each(|y| *y /= nx);
    let mut lambda = 0.0;
    for it in 1..=max_iter {
        let y: Vec<f64> = a.iter().map(|row| row.iter().zip(&x).map(|(p, q)| p * q).sum()).collect();
        lambda = x.iter().zip(&y).map(|(p, q)| p * q).sum::<f64>();
        let res = norm(&y.iter().zip(&x).map(|(p, q)| p - lambda * q).collect::<Vec<_>>());
        let ny = norm(&y);
        if ny == 0.0 {
            return (0.0, it);
        }
        if res <= tol {
            return (lambda, it);
        }
        x = y.iter().map(|p| p / ny).collect();
    }
    (lambda, max_iter)
}

/// λ₁ of the influence matrix on the unpinned marked variables against
/// the maximum absolute row sum.
pub fn spectral_check(f: &Formula, marking: &Marking, lam: &PartialAssignment) -> Result<SpectralReport> {
    use crate::coupling::influence_matrix;

    if marking.n() != f.n() {
        return Err(Error::MarkingInvalid { violations: 1 });
    }
    let candidates: Vec<usize> = marking.marked().into_iter().filter(|&v| !lam.is_assigned(v)).collect();
    if candidates.len() > SPECTRAL_LIMIT {
        return Err(Error::TooLarge {
            vars: candidates.len(),
            limit: SPECTRAL_LIMIT,
        });
    }
    let m = influence_matrix(f, &candidates, lam)?;
    let k = f.k() as f64;
    let reference = (-crate::classify::ClassifierParams::default().r0 * k).exp2() * (f.n().max(1) as f64).ln();

    let len = m.vars.len();
    let matrix: Vec<Vec<f64>> = m.entries.iter().map(|r| r.iter().map(rational_f64).collect()).collect();
    let max_row_sum = matrix
        .iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    // I = D⁻¹C with D = diag(Var); D^{1/2} I D^{−1/2} is symmetric.
    let sd: Vec<f64> = m.marginals.iter().map(|p| (rational_f64(p) * (1.0 - rational_f64(p))).sqrt()).collect();
    let sym: Vec<Vec<f64>> = (0..len)
        .map(|i| (0..len).map(|j| matrix[i][j] * sd[i] / sd[j]).collect())
        .collect();
    let (lambda1, iterations) = power_iteration(&sym, 1e-9, 1_000_000);
    Ok(SpectralReport {
        holds: lambda1 <= max_row_sum + 1e-9,
        vars: m.vars,
        frozen: m.frozen,
        matrix,
        lambda1,
        max_row_sum,
        reference,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marking::Role;

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn brute_examples() {
        let f = Formula::from_literals(5, 3, vec![]).unwrap();
        assert_eq!(brute_count(&f, &PartialAssignment::new(5)).unwrap(), BigUint::from(32u32));
        let f = Formula::from_dimacs_clauses(1, 1, &[&[1], &[-1]]).unwrap();
        assert!(brute_count(&f, &PartialAssignment::new(1)).unwrap().is_zero());
        let f = Formula::from_dimacs_clauses(3, 2, &[&[1, 2], &[-1, 3]]).unwrap();
        assert_eq!(brute_count(&f, &PartialAssignment::new(3)).unwrap(), BigUint::from(4u32));
        let f = Formula::from_literals(31, 3, vec![]).unwrap();
        assert!(matches!(
            brute_count(&f, &PartialAssignment::new(31)),
            Err(Error::TooLarge { vars: 31, limit: 30 })
        ));
    }

    #[test]
    fn enumeration_respects_pinning() {
        let f = Formula::from_dimacs_clauses(3, 2, &[&[1, 2], &[-1, 3]]).unwrap();
        let lam = PartialAssignment::from_pairs(3, [(0, true)]).unwrap();
        let all = brute_enumerate(&f, &lam).unwrap();
        assert_eq!(all, vec![vec![true, false, true], vec![true, true, true]]);
    }

    #[test]
    fn tv_examples() {
        let vars = vec![0, 1];
        let u = ExactDistribution::uniform(vars.clone(), 0..4).unwrap();
        assert!(tv_exact(&u, &u).unwrap().is_zero());
        let a = ExactDistribution::point(vars.clone(), 0);
        let b = ExactDistribution::point(vars.clone(), 3);
        assert!(tv_exact(&a, &b).unwrap().is_one());
        let p = ExactDistribution::new(
            vars.clone(),
            BTreeMap::from([(0, q(2, 5)), (1, q(1, 5)), (2, q(1, 5)), (3, q(1, 5))]),
        )
        .unwrap();
        assert_eq!(tv_exact(&u, &p).unwrap(), q(3, 20));
        let other = ExactDistribution::point(vec![1, 0], 0);
        assert_eq!(tv_exact(&a, &other), Err(Error::SupportMismatch));
    }

    #[test]
    fn empirical_radii() {
        let u = ExactDistribution::uniform(vec![0], 0..2).unwrap();
        let mut h = Empirical::new(vec![0]);
        for _ in 0..60 {
            h.record_key(0);
        }
        for _ in 0..40 {
            h.record_key(1);
        }
        let r = tv_empirical(&u, &h, 0.01).unwrap();
        assert!((r.tv - 0.1).abs() < 1e-12);
        assert!((r.radius.unwrap() - (0.5 * 0.02f64.sqrt() + (100f64.ln() / 200.0).sqrt())).abs() < 1e-12);
        assert!((r.dkw_radius.unwrap() - ((2.0 * 2f64.ln() + 100f64.ln()) / 200.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn subsets_in_order() {
        let mut all = Vec::new();
        for_each_subset(4, 2, |s| all.push(s.to_vec()));
        assert_eq!(all.len(), 6);
        assert_eq!(all[0], vec![0, 1]);
        assert_eq!(all[5], vec![2, 3]);
        assert_eq!(binomial(12, 6), BigUint::from(924u32));
    }

    #[test]
    fn empty_formula_is_exactly_stationary() {
        let f = Formula::from_literals(4, 3, vec![]).unwrap();
        let m = Marking {
            role: vec![Role::Marked, Role::Marked, Role::Marked, Role::Auxiliary],
        };
        for rho in 1..=3 {
            let r = stationarity_check(&f, &m, rho).unwrap();
            assert!(r.exact_zero);
        }
    }

    #[test]
    fn full_block_rows_equal_target() {
        let f = Formula::from_dimacs_clauses(4, 2, &[&[1, 2], &[-2, 3], &[3, 4]]).unwrap();
        let m = Marking {
            role: vec![Role::Marked, Role::Marked, Role::Marked, Role::Control],
        };
        let k = block_kernel(&f, &m, 3).unwrap();
        let mu = uniform_satisfying(&f, &PartialAssignment::new(4), &[0, 1, 2]).unwrap();
        for row in k.rows.iter().flatten() {
            assert!(k.tv_to(row, &mu) < 1e-15);
        }
        assert!(stationarity_check(&f, &m, 3).unwrap().exact_zero);
        assert!(stationarity_check(&f, &m, 1).unwrap().exact_zero);
    }

    #[test]
    fn power_iteration_on_diagonal() {
        let a = vec![vec![3.0, 0.0], vec![0.0, 1.0]];
        let (l, _) = power_iteration(&a, 1e-12, 10_000);
        assert!((l - 3.0).abs() < 1e-9);
    }
}
