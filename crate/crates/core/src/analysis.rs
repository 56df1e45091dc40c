//! Experiment harnesses: structural statistics of random formulas, the
//! pinning experiment, the bad-formula count and pipeline scaling.
//!
//! Every report is a deterministic function of its grid and seeds. Cell
//! `(k, n, α)` with replicate `i` uses instance seed `base_seed + i`; all
//! randomness inside a replicate is drawn from streams of that seed.

use std::collections::BTreeMap;
use std::time::Instant;

use num_bigint::BigUint;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::classify::{classify, Classification, ClassifierParams};
use crate::engine::{count::count_over, sample_marginals, PartialAssignment, ResidualClause, ResidualState, SampleCaps};
use crate::exec::{map_indexed, Exec};
use crate::formula::{generate_random, Formula};
use crate::glauber::{init_chain_with, mixing_params, Chain, ChainState};
use crate::marking::{compute_marking_with_stats, Marking, MarkingParams};
use crate::{rng, Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    TreeExcess,
    Linearity,
    BadFraction,
    Pinning,
    Scaling,
    Z0,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::TreeExcess => "tree-excess",
            Experiment::Linearity => "linearity",
            Experiment::BadFraction => "bad-fraction",
            Experiment::Pinning => "pinning",
            Experiment::Scaling => "scaling",
            Experiment::Z0 => "z0",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentGrid {
    pub experiment: Experiment,
    pub ks: Vec<usize>,
    pub ns: Vec<usize>,
    pub alphas: Vec<f64>,
    /// Replicates per cell.
    pub seeds: u64,
    pub base_seed: u64,
    pub output: Option<String>,
}

impl ExperimentGrid {
    pub fn validate(&self) -> Result<()> {
        if self.ks.is_empty() || self.ns.is_empty() || self.alphas.is_empty() || self.seeds == 0 {
            return Err(Error::InvalidParameter("experiment grids must be nonempty".into()));
        }
        if self.ks.iter().any(|&k| k < 2) || self.alphas.iter().any(|&a| !(a >= 0.0 && a.is_finite())) {
            return Err(Error::InvalidParameter("need k ≥ 2 and finite α ≥ 0".into()));
        }
        Ok(())
    }

    /// Cells in (k, n, α) lexicographic order.
    pub fn cells(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for &k in &self.ks {
            for &n in &self.ns {
                for &a in &self.alphas {
                    out.push((k, n, a));
                }
            }
        }
        out
    }
}

/// A documented theoretical target for one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub k: usize,
    pub n: usize,
    pub alpha: f64,
    pub name: String,
    pub value: f64,
    pub note: String,
}

/// One aggregate statistic for one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub k: usize,
    pub n: usize,
    pub alpha: f64,
    pub metric: String,
    pub value: f64,
}

/// Flat table view of a report row.
pub trait Tabular {
    fn header() -> Vec<&'static str>;
    fn row(&self) -> Vec<String>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report<R> {
    pub schema: String,
    pub schema_version: u32,
    pub grid: ExperimentGrid,
    pub targets: Vec<Target>,
    pub summaries: Vec<Summary>,
    pub rows: Vec<R>,
}

impl<R> Report<R> {
    fn new(grid: &ExperimentGrid) -> Self {
        Report {
            schema: format!("ksat.analysis.{}", grid.experiment.name()),
            schema_version: SCHEMA_VERSION,
            grid: grid.clone(),
            targets: Vec::new(),
            summaries: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn summary(&self, k: usize, n: usize, alpha: f64, metric: &str) -> Option<f64> {
        self.summaries
            .iter()
            .find(|s| s.k == k && s.n == n && s.alpha == alpha && s.metric == metric)
            .map(|s| s.value)
    }
}

impl<R: Tabular> Report<R> {
    pub fn table(&self) -> (Vec<&'static str>, Vec<Vec<String>>) {
        (R::header(), self.rows.iter().map(Tabular::row).collect())
    }
}

fn push_summary<R>(rep: &mut Report<R>, (k, n, alpha): (usize, usize, f64), metric: &str, value: f64) {
    rep.summaries.push(Summary {
        k,
        n,
        alpha,
        metric: metric.into(),
        value,
    });
}

fn push_target<R>(rep: &mut Report<R>, (k, n, alpha): (usize, usize, f64), name: &str, value: f64, note: &str) {
    rep.targets.push(Target {
        k,
        n,
        alpha,
        name: name.into(),
        value,
        note: note.into(),
    });
}

/// A grid cell `(k, n, α)`.
type Cell = (usize, usize, f64);

/// Run `job(cell, instance_seed)` over every cell and replicate.
fn over_grid<T: Send>(
    grid: &ExperimentGrid,
    exec: Exec,
    job: impl Fn(Cell, u64) -> T + Sync + Send,
) -> Result<Vec<(Cell, Vec<T>)>> {
    grid.validate()?;
    let cells = grid.cells();
    let per = grid.seeds as usize;
    let flat = map_indexed(exec, cells.len() * per, |i| {
        let cell = cells[i / per];
        job(cell, grid.base_seed + (i % per) as u64)
    });
    let mut it = flat.into_iter();
    Ok(cells
        .into_iter()
        .map(|c| (c, it.by_ref().take(per).collect()))
        .collect())
}

fn fmt_hist(h: &BTreeMap<usize, u64>) -> String {
    h.iter().map(|(s, c)| format!("{s}:{c}")).collect::<Vec<_>>().join(";")
}

/// Distinct variables of clause `c`, ascending.
fn distinct_vars(f: &Formula, c: usize) -> Vec<usize> {
    let mut vs: Vec<usize> = f.vars_of(c).iter().map(|&v| v as usize).collect();
    vs.sort_unstable();
    vs.dedup();
    vs
}

// ---------------------------------------------------------------- linearity

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearityStats {
    /// Largest |var(c) ∩ var(c′)| over distinct clauses.
    pub max_intersection: usize,
    /// Clause pairs sharing three or more variables.
    pub pairs_over_two: u64,
    /// Smallest |var(c)|.
    pub min_distinct_vars: usize,
    /// Clauses with |var(c)| < k − 1.
    pub short_clauses: u64,
    pub violated: bool,
}

pub fn linearity_stats(f: &Formula) -> LinearityStats {
    let mut shared = vec![0u32; f.m()];
    let mut stamp = vec![usize::MAX; f.m()];
    let (mut max_intersection, mut pairs_over_two) = (0usize, 0u64);
    let (mut min_vars, mut short) = (usize::MAX, 0u64);
    let mut touched = Vec::new();
    for c in 0..f.m() {
        let vs = distinct_vars(f, c);
        min_vars = min_vars.min(vs.len());
        if vs.len() + 1 < f.k() {
            short += 1;
        }
        touched.clear();
        for &v in &vs {
            let mut last = usize::MAX;
            for &d in f.occurrences(v) {
                let d = d as usize;
                if d <= c || d == last {
                    continue;
                }
                last = d;
                if stamp[d] != c {
                    stamp[d] = c;
                    shared[d] = 0;
                    touched.push(d);
                }
                shared[d] += 1;
            }
        }
        for &d in &touched {
            let s = shared[d] as usize;
            max_intersection = max_intersection.max(s);
            if s > 2 {
                pairs_over_two += 1;
            }
        }
    }
    let min_distinct_vars = if f.m() == 0 { f.k() } else { min_vars };
    LinearityStats {
        max_intersection,
        pairs_over_two,
        min_distinct_vars,
        short_clauses: short,
        violated: pairs_over_two > 0 || short > 0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearityRow {
    pub k: usize,
    pub n: usize,
    pub alpha: f64,
    pub seed: u64,
    #[serde(flatten)]
    pub stats: LinearityStats,
}

impl Tabular for LinearityRow {
    fn header() -> Vec<&'static str> {
        vec!["k", "n", "alpha", "seed", "max_intersection", "pairs_over_two", "min_distinct_vars", "short_clauses", "violated"]
    }
    fn row(&self) -> Vec<String> {
        let s = &self.stats;
        vec![
            self.k.to_string(),
            self.n.to_string(),
            self.alpha.to_string(),
            self.seed.to_string(),
            s.max_intersection.to_string(),
            s.pairs_over_two.to_string(),
            s.min_distinct_vars.to_string(),
            s.short_clauses.to_string(),
            s.violated.to_string(),
        ]
    }
}

pub fn run_linearity(grid: &ExperimentGrid, exec: Exec) -> Result<Report<LinearityRow>> {
    let cells = over_grid(grid, exec, |(k, n, alpha), seed| {
        generate_random(k, n, alpha, seed).map(|f| LinearityRow {
            k,
            n,
            alpha,
            seed,
            stats: linearity_stats(&f),
        })
    })?;
    let mut rep = Report::new(grid);
    for (cell, rows) in cells {
        let rows: Vec<LinearityRow> = rows.into_iter().collect::<Result<_>>()?;
        let freq = rows.iter().filter(|r| r.stats.violated).count() as f64 / rows.len() as f64;
        let mean_pairs = rows.iter().map(|r| r.stats.pairs_over_two as f64).sum::<f64>() / rows.len() as f64;
        push_summary(&mut rep, cell, "violation_frequency", freq);
        push_summary(&mut rep, cell, "mean_pairs_over_two", mean_pairs);
        push_target(&mut rep, cell, "violation_frequency", 0.0, "tends to 0 as n grows (O(1/n))");
        push_target(&mut rep, cell, "max_intersection", 2.0, "distinct clauses share at most 2 variables");
        rep.rows.extend(rows);
    }
    Ok(rep)
}

// -------------------------------------------------------------- tree excess

/// Grow a connected clause set of up to `size` clauses from a random start
/// by repeatedly adding a uniformly random adjacent clause.
fn random_connected_set<R: Rng>(f: &Formula, size: usize, rng: &mut R) -> Vec<usize> {
    if f.m() == 0 || size == 0 {
        return Vec::new();
    }
    let mut set = vec![rng.gen_range(0..f.m())];
    let mut frontier = Vec::new();
    let grow = |c: usize, frontier: &mut Vec<usize>| {
        for &v in f.vars_of(c) {
            frontier.extend(f.occurrences(v as usize).iter().map(|&d| d as usize));
        }
    };
    grow(set[0], &mut frontier);
    while set.len() < size && !frontier.is_empty() {
        let i = rng.gen_range(0..frontier.len());
        let c = frontier.swap_remove(i);
        if set.contains(&c) {
            continue;
        }
        set.push(c);
        grow(c, &mut frontier);
    }
    set
}

/// Edges of G_Φ inside `set` minus (|set| − 1).
pub fn tree_excess_of(f: &Formula, set: &[usize]) -> i64 {
    let vars: Vec<Vec<usize>> = set.iter().map(|&c| distinct_vars(f, c)).collect();
    let mut edges = 0i64;
    for i in 0..set.len() {
        for j in i + 1..set.len() {
            if vars[i].iter().any(|v| vars[j].binary_search(v).is_ok()) {
                edges += 1;
            }
        }
    }
    edges - (set.len() as i64 - 1)
}

/// c = max{1, 2b ln(e k² α)}.
pub fn tree_excess_target(k: usize, alpha: f64, b: f64) -> f64 {
    let k = k as f64;
    (2.0 * b * (std::f64::consts::E * k * k * alpha).ln()).max(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeExcessRow {
    pub k: usize,
    pub n: usize,
    pub alpha: f64,
    pub seed: u64,
    /// ⌊b ln n⌋.
    pub size_limit: usize,
    pub samples: usize,
    pub max_excess: i64,
    pub mean_excess: f64,
    pub target: f64,
    pub exceeded: bool,
}

impl Tabular for TreeExcessRow {
    fn header() -> Vec<&'static str> {
        vec!["k", "n", "alpha", "seed", "size_limit", "samples", "max_excess", "mean_excess", "target", "exceeded"]
    }
    fn row(&self) -> Vec<String> {
        vec![
            self.k.to_string(),
            self.n.to_string(),
            self.alpha.to_string(),
            self.seed.to_string(),
            self.size_limit.to_string(),
            self.samples.to_string(),
            self.max_excess.to_string(),
            format!("{:.6}", self.mean_excess),
            format!("{:.6}", self.target),
            self.exceeded.to_string(),
        ]
    }
}

/// Tree-excess of randomly grown connected sets of size ⌊b ln n⌋. The
/// maximum over samples is a lower bound on the maximum over all such sets.
pub fn run_tree_excess(grid: &ExperimentGrid, b: f64, samples: usize, exec: Exec) -> Result<Report<TreeExcessRow>> {
    if b.is_nan() || b <= 0.0 || samples == 0 {
        return Err(Error::InvalidParameter("need b > 0 and at least one sample".into()));
    }
    let cells = over_grid(grid, exec, |(k, n, alpha), seed| -> Result<TreeExcessRow> {
        let f = generate_random(k, n, alpha, seed)?;
        let size = (b * (n.max(1) as f64).ln()).floor() as usize;
        let mut r = rng::stream(seed, 1);
        let ex: Vec<i64> = (0..samples)
            .map(|_| tree_excess_of(&f, &random_connected_set(&f, size, &mut r)))
            .collect();
        let target = tree_excess_target(k, alpha, b);
        let max_excess = ex.iter().copied().max().unwrap_or(0);
        Ok(TreeExcessRow {
            k,
            n,
            alpha,
            seed,
            size_limit: size,
            samples,
            max_excess,
            mean_excess: ex.iter().sum::<i64>() as f64 / samples as f64,
            target,
            exceeded: max_excess as f64 > target,
        })
    })?;
    let mut rep = Report::new(grid);
    for (cell, rows) in cells {
        let rows: Vec<TreeExcessRow> = rows.into_iter().collect::<Result<_>>()?;
        let max = rows.iter().map(|r| r.max_excess).max().unwrap_or(0);
        push_summary(&mut rep, cell, "max_excess", max as f64);
        push_summary(
            &mut rep,
            cell,
            "exceed_frequency",
            rows.iter().filter(|r| r.exceeded).count() as f64 / rows.len() as f64,
        );
        push_target(
            &mut rep,
            cell,
            "tree_excess",
            tree_excess_target(cell.0, cell.2, b),
            "connected sets of at most b ln n clauses have tree-excess ≤ max{1, 2b ln(e k² α)}",
        );
        rep.rows.extend(rows);
    }
    Ok(rep)
}

// ------------------------------------------------------------- bad fraction

/// Connected components of G_Φ restricted to clauses with `keep(c)`, as a
/// label per clause (`usize::MAX` for dropped clauses) and the member lists.
pub fn clause_components(f: &Formula, keep: impl Fn(usize) -> bool) -> (Vec<usize>, Vec<Vec<usize>>) {
    let mut label = vec![usize::MAX; f.m()];
    let mut var_seen = vec![false; f.n()];
    let mut comps = Vec::new();
    for start in 0..f.m() {
        if label[start] != usize::MAX || !keep(start) {
            continue;
        }
        let id = comps.len();
        label[start] = id;
        let mut members = vec![start];
        let mut head = 0;
        while head < members.len() {
            let c = members[head];
            head += 1;
            for &v in f.vars_of(c) {
                let v = v as usize;
                if var_seen[v] {
                    continue;
                }
                var_seen[v] = true;
                for &d in f.occurrences(v) {
                    let d = d as usize;
                    if label[d] == usize::MAX && keep(d) {
                        label[d] = id;
                        members.push(d);
                    }
                }
            }
        }
        comps.push(members);
    }
    (label, comps)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BadFractionRow {
    pub k: usize,
    pub n: usize,
    pub alpha: f64,
    pub seed: u64,
    pub delta: u64,
    pub bad_var_fraction: f64,
    pub bad_clause_fraction: f64,
    pub largest_component_clauses: usize,
    pub largest_component_vars: usize,
    pub largest_component_bad_fraction: f64,
    /// 2k⁴ ln n.
    pub var_threshold: f64,
    /// Whether the largest component reaches the variable threshold, so that
    /// the 1/k bound speaks about it at all.
    pub applicable: bool,
}

impl Tabular for BadFractionRow {
    fn header() -> Vec<&'static str> {
        vec![
            "k", "n", "alpha", "seed", "delta", "bad_var_fraction", "bad_clause_fraction",
            "largest_component_clauses", "largest_component_vars", "largest_component_bad_fraction",
            "var_threshold", "applicable",
        ]
    }
    fn row(&self) -> Vec<String> {
        vec![
            self.k.to_string(),
            self.n.to_string(),
            self.alpha.to_string(),
            self.seed.to_string(),
            self.delta.to_string(),
            format!("{:.6}", self.bad_var_fraction),
            format!("{:.6}", self.bad_clause_fraction),
            self.largest_component_clauses.to_string(),
            self.largest_component_vars.to_string(),
            format!("{:.6}", self.largest_component_bad_fraction),
            format!("{:.1}", self.var_threshold),
            self.applicable.to_string(),
        ]
    }
}

pub fn bad_fraction_stats(f: &Formula, cls: &Classification, seed: u64) -> BadFractionRow {
    let (_, comps) = clause_components(f, |_| true);
    let largest = comps.iter().max_by_key(|c| c.len()).cloned().unwrap_or_default();
    let mut vars: Vec<usize> = largest.iter().flat_map(|&c| distinct_vars(f, c)).collect();
    vars.sort_unstable();
    vars.dedup();
    let bad_in = largest.iter().filter(|&&c| cls.is_bad_clause(c)).count();
    let threshold = 2.0 * (f.k() as f64).powi(4) * (f.n().max(1) as f64).ln();
    BadFractionRow {
        k: f.k(),
        n: f.n(),
        alpha: f.density(),
        seed,
        delta: cls.delta,
        bad_var_fraction: cls.bad_var_count() as f64 / f.n().max(1) as f64,
        bad_clause_fraction: cls.bad_clause_count() as f64 / f.m().max(1) as f64,
        largest_component_clauses: largest.len(),
        largest_component_vars: vars.len(),
        largest_component_bad_fraction: bad_in as f64 / largest.len().max(1) as f64,
        var_threshold: threshold,
        applicable: vars.len() as f64 >= threshold,
    }
}

pub fn run_bad_fraction(grid: &ExperimentGrid, params: &ClassifierParams, exec: Exec) -> Result<Report<BadFractionRow>> {
    params.validate()?;
    let cells = over_grid(grid, exec, |(k, n, alpha), seed| -> Result<BadFractionRow> {
        let f = generate_random(k, n, alpha, seed)?;
        let mut row = bad_fraction_stats(&f, &classify(&f, params), seed);
        row.alpha = alpha;
        Ok(row)
    })?;
    let mut rep = Report::new(grid);
    for (cell, rows) in cells {
        let rows: Vec<BadFractionRow> = rows.into_iter().collect::<Result<_>>()?;
        let c = rows.len() as f64;
        push_summary(&mut rep, cell, "mean_bad_clause_fraction", rows.iter().map(|r| r.bad_clause_fraction).sum::<f64>() / c);
        push_summary(
            &mut rep,
            cell,
            "mean_largest_component_bad_fraction",
            rows.iter().map(|r| r.largest_component_bad_fraction).sum::<f64>() / c,
        );
        push_summary(&mut rep, cell, "applicable_fraction", rows.iter().filter(|r| r.applicable).count() as f64 / c);
        push_target(
            &mut rep,
            cell,
            "bad_fraction",
            1.0 / cell.0 as f64,
            "connected sets with at least 2k⁴ ln n variables have at most a 1/k fraction of bad clauses (α ≤ α₀); vacuous when no set reaches the threshold",
        );
        push_target(&mut rep, cell, "alpha0", params.alpha0(cell.0), "density bound under which the statement is claimed");
        rep.rows.extend(rows);
    }
    Ok(rep)
}

// ------------------------------------------------------------------ pinning

/// Law of the pinning Λ on V \ S.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "law")]
pub enum PinningLaw {
    /// Independent fair coins.
    Uniform,
    /// The block chain on V started from fair coins, after `steps` steps.
    Chain { steps: u64 },
}

pub const DEFAULT_CHAIN_STEPS: u64 = 16;

impl Default for PinningLaw {
    fn default() -> Self {
        PinningLaw::Chain {
            steps: DEFAULT_CHAIN_STEPS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PinningConfig {
    pub rho: usize,
    pub law: PinningLaw,
    pub draws: u64,
    pub seed: u64,
    /// Component cap for the chain's exact updates.
    pub cap: usize,
}

/// Per-draw structure after pinning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureStats {
    /// Largest connected set (in G_Φ) of clauses unsatisfied by Λ.
    pub largest_unsatisfied: usize,
    /// Component sizes of G_{Φ^Λ}, in clauses: size → count.
    pub residual_histogram: BTreeMap<usize, u64>,
    pub residual_components: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PinningReport {
    pub schema: String,
    pub schema_version: u32,
    pub k: usize,
    pub n: usize,
    pub set_size: usize,
    pub rho: usize,
    /// Whether ρ ≤ |V|/2^k.
    pub rho_in_range: bool,
    pub law: PinningLaw,
    /// ⌈2k⁴ ln n⌉.
    pub l: usize,
    /// 2^{−δkL}.
    pub target: f64,
    pub draws: u64,
    pub completed: u64,
    pub errors: Vec<String>,
    pub exceed_frequency: f64,
    pub max_largest_unsatisfied: usize,
    pub mean_largest_unsatisfied: f64,
    pub residual_histogram: BTreeMap<usize, u64>,
    pub stats: Vec<StructureStats>,
}

fn structure_after(f: &Formula, lam: &PartialAssignment) -> StructureStats {
    let unsat = |c: usize| !f.literals(c).iter().any(|l| lam.get(l.var()).is_some_and(|b| l.eval(b)));
    let (_, comps) = clause_components(f, unsat);
    let mut state = ResidualState::from_assignment(f, lam);
    let mut residual_histogram = BTreeMap::new();
    let sizes = state.component_sizes();
    for &s in &sizes {
        *residual_histogram.entry(s).or_insert(0) += 1;
    }
    StructureStats {
        largest_unsatisfied: comps.iter().map(Vec::len).max().unwrap_or(0),
        residual_histogram,
        residual_components: sizes.len() as u64,
    }
}

fn pinning_draw(f: &Formula, set: &[usize], cfg: &PinningConfig, draw: u64) -> Result<StructureStats> {
    let mut r = rng::stream(cfg.seed, draw);
    let values: Vec<bool> = match cfg.law {
        PinningLaw::Uniform => set.iter().map(|_| r.gen_bool(0.5)).collect(),
        PinningLaw::Chain { steps } => {
            let mut role = vec![crate::marking::Role::Control; f.n()];
            for &v in set {
                role[v] = crate::marking::Role::Marked;
            }
            let start: ChainState = init_chain_with(&Marking { role }, &mut r);
            let rho = set.len().div_ceil(1usize << (f.k() + 1).min(usize::BITS as usize - 1)).max(1);
            let mut chain = Chain::new(f, start, rho, SampleCaps::with_component(cfg.cap));
            for _ in 0..steps {
                chain.step(&mut r)?;
            }
            chain.state().values.clone()
        }
    };
    let mut positions: Vec<usize> = (0..set.len()).collect();
    let (chosen, _) = positions.partial_shuffle(&mut r, cfg.rho.min(set.len()));
    let mut in_s = vec![false; set.len()];
    for &p in chosen.iter() {
        in_s[p] = true;
    }
    let mut lam = PartialAssignment::new(f.n());
    for (p, (&v, &b)) in set.iter().zip(&values).enumerate() {
        if !in_s[p] {
            lam.set(v, b);
        }
    }
    Ok(structure_after(f, &lam))
}

/// Draw S and Λ as in the connected-set lemma and record the structure of
/// what Λ leaves unsatisfied. `set` plays the role of V (normally V_m).
pub fn pinning_experiment(f: &Formula, set: &[usize], cfg: &PinningConfig, exec: Exec) -> Result<PinningReport> {
    let mut set = set.to_vec();
    set.sort_unstable();
    set.dedup();
    if set.iter().any(|&v| v >= f.n()) {
        return Err(Error::InvalidParameter("pinning set out of range".into()));
    }
    if cfg.rho > set.len() {
        return Err(Error::InvalidParameter(format!("ρ = {} exceeds |V| = {}", cfg.rho, set.len())));
    }
    let k = f.k();
    let n = f.n().max(2) as f64;
    let l = (2.0 * (k as f64).powi(4) * n.ln()).ceil() as usize;
    let delta = ClassifierParams::default().delta;
    let outcomes = map_indexed(exec, cfg.draws as usize, |d| pinning_draw(f, &set, cfg, d as u64));

    let mut stats = Vec::new();
    let mut errors = Vec::new();
    let mut hist = BTreeMap::new();
    for o in outcomes {
        match o {
            Ok(s) => {
                for (&size, &c) in &s.residual_histogram {
                    *hist.entry(size).or_insert(0) += c;
                }
                stats.push(s);
            }
            Err(e) if errors.len() < 16 => errors.push(e.to_string()),
            Err(_) => {}
        }
    }
    let completed = stats.len() as u64;
    let c = completed.max(1) as f64;
    Ok(PinningReport {
        schema: "ksat.analysis.pinning-run".into(),
        schema_version: SCHEMA_VERSION,
        k,
        n: f.n(),
        set_size: set.len(),
        rho: cfg.rho,
        rho_in_range: (cfg.rho as f64) <= set.len() as f64 / (k as f64).exp2(),
        law: cfg.law,
        l,
        target: (-delta * k as f64 * l as f64).exp2(),
        draws: cfg.draws,
        completed,
        errors,
        exceed_frequency: stats.iter().filter(|s| s.largest_unsatisfied >= l).count() as f64 / c,
        max_largest_unsatisfied: stats.iter().map(|s| s.largest_unsatisfied).max().unwrap_or(0),
        mean_largest_unsatisfied: stats.iter().map(|s| s.largest_unsatisfied as f64).sum::<f64>() / c,
        residual_histogram: hist,
        stats,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PinningRow {
    pub k: usize,
    pub n: usize,
    pub alpha: f64,
    pub seed: u64,
    pub marked: usize,
    pub rho: usize,
    pub marking_rounds: usize,
    pub l: usize,
    pub draws: u64,
    pub completed: u64,
    pub exceed_frequency: f64,
    pub max_largest_unsatisfied: usize,
    pub mean_largest_unsatisfied: f64,
    pub residual_histogram: BTreeMap<usize, u64>,
    pub error: Option<String>,
}

impl Tabular for PinningRow {
    fn header() -> Vec<&'static str> {
        vec![
            "k", "n", "alpha", "seed", "marked", "rho", "marking_rounds", "l", "draws", "completed",
            "exceed_frequency", "max_largest_unsatisfied", "mean_largest_unsatisfied", "residual_histogram", "error",
        ]
    }
    fn row(&self) -> Vec<String> {
        vec![
            self.k.to_string(),
            self.n.to_string(),
            self.alpha.to_string(),
            self.seed.to_string(),
            self.marked.to_string(),
            self.rho.to_string(),
            self.marking_rounds.to_string(),
            self.l.to_string(),
            self.draws.to_string(),
            self.completed.to_string(),
            format!("{:.6}", self.exceed_frequency),
            self.max_largest_unsatisfied.to_string(),
            format!("{:.3}", self.mean_largest_unsatisfied),
            fmt_hist(&self.residual_histogram),
            self.error.clone().unwrap_or_default(),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PinningSetup {
    pub classifier: ClassifierParams,
    pub marking: MarkingParams,
    /// Block size; ⌈|V_m|/2^k⌉ rounded down to the lemma's range when unset.
    pub rho: Option<usize>,
    pub law: PinningLaw,
    pub draws: u64,
    pub cap: usize,
}

impl Default for PinningSetup {
    fn default() -> Self {
        PinningSetup {
            classifier: ClassifierParams::default(),
            marking: MarkingParams::default(),
            rho: None,
            law: PinningLaw::default(),
            draws: 100,
            cap: 100_000,
        }
    }
}

/// One formula per replicate; `draws` pinning draws on each.
pub fn run_pinning(grid: &ExperimentGrid, setup: &PinningSetup, exec: Exec) -> Result<Report<PinningRow>> {
    setup.classifier.validate()?;
    setup.marking.validate()?;
    let cells = over_grid(grid, exec, |(k, n, alpha), seed| -> Result<PinningRow> {
        let f = generate_random(k, n, alpha, seed)?;
        let cls = classify(&f, &setup.classifier);
        let mut row = PinningRow {
            k,
            n,
            alpha,
            seed,
            marked: 0,
            rho: 0,
            marking_rounds: 0,
            l: 0,
            draws: setup.draws,
            completed: 0,
            exceed_frequency: 0.0,
            max_largest_unsatisfied: 0,
            mean_largest_unsatisfied: 0.0,
            residual_histogram: BTreeMap::new(),
            error: None,
        };
        let mp = MarkingParams { seed, ..setup.marking };
        let (m, rounds) = match compute_marking_with_stats(&f, &cls, &mp) {
            Ok(x) => x,
            Err(e) => {
                row.error = Some(e.to_string());
                return Ok(row);
            }
        };
        let set = m.marked();
        let rho = setup
            .rho
            .unwrap_or_else(|| (set.len() as f64 / (k as f64).exp2()).floor() as usize)
            .min(set.len());
        let cfg = PinningConfig {
            rho,
            law: setup.law,
            draws: setup.draws,
            seed,
            cap: setup.cap,
        };
        // Replicates already run in parallel; draws stay sequential.
        let r = pinning_experiment(&f, &set, &cfg, Exec::Sequential)?;
        row.marked = set.len();
        row.rho = rho;
        row.marking_rounds = rounds;
        row.l = r.l;
        row.completed = r.completed;
        row.exceed_frequency = r.exceed_frequency;
        row.max_largest_unsatisfied = r.max_largest_unsatisfied;
        row.mean_largest_unsatisfied = r.mean_largest_unsatisfied;
        row.residual_histogram = r.residual_histogram;
        row.error = r.errors.first().cloned();
        Ok(row)
    })?;
    let mut rep = Report::new(grid);
    let delta = setup.classifier.delta;
    for (cell, rows) in cells {
        let rows: Vec<PinningRow> = rows.into_iter().collect::<Result<_>>()?;
        let done: Vec<&PinningRow> = rows.iter().filter(|r| r.completed > 0).collect();
        let freq = done.iter().map(|r| r.exceed_frequency).sum::<f64>() / done.len().max(1) as f64;
        push_summary(&mut rep, cell, "exceed_frequency", freq);
        push_summary(
            &mut rep,
            cell,
            "max_largest_unsatisfied",
            rows.iter().map(|r| r.max_largest_unsatisfied).max().unwrap_or(0) as f64,
        );
        let l = (2.0 * (cell.0 as f64).powi(4) * (cell.1.max(2) as f64).ln()).ceil();
        push_target(&mut rep, cell, "l", l, "L = ⌈2k⁴ ln n⌉, the smallest set size the lemma speaks about");
        push_target(
            &mut rep,
            cell,
            "exceed_probability",
            (-delta * cell.0 as f64 * l).exp2(),
            "Pr(F) ≤ 2^{−δkL} for most S",
        );
        rep.rows.extend(rows);
    }
    Ok(rep)
}

// ----------------------------------------------------------------------- z0

/// Z(0): assignments of V_bad satisfying every bad clause, counted by the
/// component engine on Φ_bad.
pub fn count_bad_formula(f: &Formula, cls: &Classification, excess_cap: usize) -> Result<BigUint> {
    let bad_vars = cls.bad_vars();
    let clauses: Vec<ResidualClause> = cls
        .bad_clauses()
        .into_iter()
        .map(|c| ResidualClause {
            index: c,
            literals: f.literals(c).to_vec(),
        })
        .collect();
    count_over::<BigUint>(&clauses, bad_vars.len(), excess_cap)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Z0Row {
    pub k: usize,
    pub n: usize,
    pub alpha: f64,
    pub seed: u64,
    pub bad_vars: usize,
    pub bad_clauses: usize,
    /// Decimal.
    pub z0: Option<String>,
    pub log2_z0: Option<f64>,
    pub error: Option<String>,
}

impl Tabular for Z0Row {
    fn header() -> Vec<&'static str> {
        vec!["k", "n", "alpha", "seed", "bad_vars", "bad_clauses", "z0", "log2_z0", "error"]
    }
    fn row(&self) -> Vec<String> {
        vec![
            self.k.to_string(),
            self.n.to_string(),
            self.alpha.to_string(),
            self.seed.to_string(),
            self.bad_vars.to_string(),
            self.bad_clauses.to_string(),
            self.z0.clone().unwrap_or_default(),
            self.log2_z0.map(|x| format!("{x:.6}")).unwrap_or_default(),
            self.error.clone().unwrap_or_default(),
        ]
    }
}

fn log2_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 52 {
        return (x.to_u64_digits().first().copied().unwrap_or(0) as f64).log2();
    }
    let shift = bits - 52;
    let top: BigUint = x >> shift;
    (top.to_u64_digits()[0] as f64).log2() + shift as f64
}

pub fn run_z0(grid: &ExperimentGrid, params: &ClassifierParams, excess_cap: usize, exec: Exec) -> Result<Report<Z0Row>> {
    params.validate()?;
    let cells = over_grid(grid, exec, |(k, n, alpha), seed| -> Result<Z0Row> {
        let f = generate_random(k, n, alpha, seed)?;
        let cls = classify(&f, params);
        let (z0, error) = match count_bad_formula(&f, &cls, excess_cap) {
            Ok(z) => (Some(z), None),
            Err(e) => (None, Some(e.to_string())),
        };
        Ok(Z0Row {
            k,
            n,
            alpha,
            seed,
            bad_vars: cls.bad_var_count(),
            bad_clauses: cls.bad_clause_count(),
            log2_z0: z0.as_ref().map(log2_big),
            z0: z0.map(|z| z.to_string()),
            error,
        })
    })?;
    let mut rep = Report::new(grid);
    for (cell, rows) in cells {
        let rows: Vec<Z0Row> = rows.into_iter().collect::<Result<_>>()?;
        let ok: Vec<f64> = rows.iter().filter_map(|r| r.log2_z0).collect();
        push_summary(&mut rep, cell, "mean_log2_z0", ok.iter().sum::<f64>() / ok.len().max(1) as f64);
        push_summary(&mut rep, cell, "failures", (rows.len() - ok.len()) as f64);
        rep.rows.extend(rows);
    }
    Ok(rep)
}

/// Naive self-reducibility estimate of |Ω| (not from the sampling analysis):
/// fix variables in index order to their majority value among `samples`
/// conditional draws and multiply the inverse empirical frequencies. Exact
/// conditional draws make this consistent but not unbiased.
pub fn naive_count_estimate(f: &Formula, samples: u32, seed: u64) -> Result<f64> {
    if samples == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    let mut r = rng::seeded(seed);
    let mut lam = PartialAssignment::new(f.n());
    let mut log2 = 0.0;
    for v in 0..f.n() {
        let mut trues = 0u32;
        for _ in 0..samples {
            let a = sample_marginals(f, &lam, &[v], usize::MAX, &mut r)?;
            trues += u32::from(a.get(v) == Some(true));
        }
        let b = 2 * trues >= samples;
        let hits = if b { trues } else { samples - trues };
        log2 -= (f64::from(hits) / f64::from(samples)).log2();
        lam.set(v, b);
    }
    Ok(log2.exp2())
}

// ------------------------------------------------------------------ scaling

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingConfig {
    pub k: usize,
    pub alpha: f64,
    pub ns: Vec<usize>,
    pub theta: f64,
    /// Timed repetitions per n; the median is reported.
    pub reps: usize,
    pub seed: u64,
    pub classifier: ClassifierParams,
    pub marking: MarkingParams,
    /// Block size override; ⌈|V_m|/2^{k+1}⌉ when unset.
    pub rho: Option<usize>,
    /// Component cap; ⌈2k⁴(1+ξ) ln n⌉ with ξ = 1 when unset.
    pub cap: Option<usize>,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        ScalingConfig {
            k: 10,
            alpha: 0.02,
            ns: vec![10_000, 100_000, 1_000_000],
            theta: 0.2,
            reps: 3,
            seed: 1,
            classifier: ClassifierParams::default(),
            marking: MarkingParams {
                desk: true,
                ..MarkingParams::default()
            },
            rho: None,
            cap: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub n: usize,
    pub m: usize,
    /// T = ⌈n^θ ln n⌉.
    pub steps: u64,
    pub rho: usize,
    pub cap: usize,
    pub marked: usize,
    pub marking_rounds: usize,
    pub classify_secs: f64,
    pub mark_secs: f64,
    pub steps_secs: f64,
    pub extend_secs: f64,
    /// classify + mark + steps.
    pub pipeline_secs: f64,
    pub errors: Vec<String>,
}

impl Tabular for ScalingRow {
    fn header() -> Vec<&'static str> {
        vec![
            "n", "m", "steps", "rho", "cap", "marked", "marking_rounds", "classify_secs", "mark_secs", "steps_secs",
            "extend_secs", "pipeline_secs", "errors",
        ]
    }
    fn row(&self) -> Vec<String> {
        vec![
            self.n.to_string(),
            self.m.to_string(),
            self.steps.to_string(),
            self.rho.to_string(),
            self.cap.to_string(),
            self.marked.to_string(),
            self.marking_rounds.to_string(),
            format!("{:.6}", self.classify_secs),
            format!("{:.6}", self.mark_secs),
            format!("{:.6}", self.steps_secs),
            format!("{:.6}", self.extend_secs),
            format!("{:.6}", self.pipeline_secs),
            self.errors.join(" | "),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub schema: String,
    pub schema_version: u32,
    pub config: ScalingConfig,
    pub rows: Vec<ScalingRow>,
    /// Least-squares slopes of ln(time) against ln(n).
    pub exponent_pipeline: f64,
    pub exponent_classify: f64,
    pub exponent_mark: f64,
    pub exponent_steps: f64,
}

/// Slope of the least-squares line through (ln x, ln y).
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let c = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / c;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / c;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let h = v.len() / 2;
    if v.len() % 2 == 1 {
        v[h]
    } else {
        (v[h - 1] + v[h]) / 2.0
    }
}

/// Time classify, mark and T block steps (plus the final extension,
/// reported separately) for each n. Runs are sequential so timings do not
/// interfere.
pub fn scaling_bench(cfg: &ScalingConfig) -> Result<ScalingReport> {
    if cfg.ns.is_empty() || cfg.reps == 0 {
        return Err(Error::InvalidParameter("scaling needs at least one n and one repetition".into()));
    }
    if !(cfg.theta > 0.0 && cfg.theta < 1.0) {
        return Err(Error::InvalidParameter(format!("θ must lie in (0, 1), got {}", cfg.theta)));
    }
    cfg.classifier.validate()?;
    cfg.marking.validate()?;
    let mut rows = Vec::new();
    for &n in &cfg.ns {
        let f = generate_random(cfg.k, n, cfg.alpha, cfg.seed)?;
        let nf = n.max(2) as f64;
        let steps = (nf.powf(cfg.theta) * nf.ln()).ceil() as u64;
        let mut times = [Vec::new(), Vec::new(), Vec::new(), Vec::new()];
        let mut errors = Vec::new();
        let mut info = (0, 0, 0, 0);
        for rep in 0..cfg.reps {
            let t0 = Instant::now();
            let cls = classify(&f, &cfg.classifier);
            let t1 = Instant::now();
            let mp = MarkingParams {
                seed: cfg.seed,
                ..cfg.marking
            };
            let (m, rounds) = compute_marking_with_stats(&f, &cls, &mp)?;
            let t2 = Instant::now();
            let base = mixing_params(cfg.k, n, m.sizes()[0], 0.5, 1, None);
            let rho = cfg.rho.unwrap_or(base.rho).min(m.sizes()[0]);
            let cap = cfg.cap.unwrap_or(base.cap);
            let caps = SampleCaps::with_component(cap);
            let mut r = rng::stream(cfg.seed, rep as u64);
            let start = init_chain_with(&m, &mut r);
            let mut chain = Chain::new(&f, start, rho, caps);
            if rho > 0 {
                for t in 0..steps {
                    if let Err(e) = chain.step(&mut r) {
                        errors.push(format!("n={n} rep={rep} step={t}: {e}"));
                        break;
                    }
                }
            }
            let t3 = Instant::now();
            let (mut residual, _) = chain.into_parts();
            let mut rest = m.auxiliary();
            rest.extend(m.control());
            rest.sort_unstable();
            if let Err(e) = crate::engine::sample_into(&mut residual, &rest, caps, &mut crate::engine::RngChooser(&mut r)) {
                errors.push(format!("n={n} rep={rep} extension: {e}"));
            }
            let t4 = Instant::now();
            times[0].push((t1 - t0).as_secs_f64());
            times[1].push((t2 - t1).as_secs_f64());
            times[2].push((t3 - t2).as_secs_f64());
            times[3].push((t4 - t3).as_secs_f64());
            info = (rho, cap, m.sizes()[0], rounds);
        }
        let pipeline: Vec<f64> = (0..cfg.reps).map(|i| times[0][i] + times[1][i] + times[2][i]).collect();
        let [c, mk, st, ex] = times;
        rows.push(ScalingRow {
            n,
            m: f.m(),
            steps,
            rho: info.0,
            cap: info.1,
            marked: info.2,
            marking_rounds: info.3,
            classify_secs: median(c),
            mark_secs: median(mk),
            steps_secs: median(st),
            extend_secs: median(ex),
            pipeline_secs: median(pipeline),
            errors,
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let slope = |g: fn(&ScalingRow) -> f64| loglog_slope(&xs, &rows.iter().map(g).collect::<Vec<_>>());
    Ok(ScalingReport {
        schema: "ksat.analysis.scaling".into(),
        schema_version: SCHEMA_VERSION,
        config: cfg.clone(),
        exponent_pipeline: slope(|r| r.pipeline_secs),
        exponent_classify: slope(|r| r.classify_secs),
        exponent_mark: slope(|r| r.mark_secs),
        exponent_steps: slope(|r| r.steps_secs),
        rows,
    })
}
