//! Uniform-block Glauber dynamics on the marked variables.
//!
//! The chain starts from independent fair coins on V_m. Each step picks a
//! uniformly random ρ-subset S of V_m and redraws it from the exact
//! conditional law given the rest of the chain state. After T steps the
//! assignment is extended to V_a ∪ V_c with the same exact sampler.

use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::exec::{map_indexed, Exec};
use crate::engine::{sample_into, PartialAssignment, ResidualState, RngChooser, SampleCaps};
use crate::formula::Formula;
use crate::marking::Marking;
use crate::{rng, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Parameters exactly as derived from (k, n, θ, ξ, ε); a component over
    /// the cap aborts the run.
    Theory,
    /// Explicit ρ, T and cap may be supplied, and a step that meets an
    /// oversized component may be retried with a fresh block.
    Desk,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlauberConfig {
    pub theta: f64,
    pub xi: u32,
    /// Target total-variation error; `n^{−ξ}` when unset.
    pub epsilon: Option<f64>,
    pub mode: Mode,
    pub rho: Option<usize>,
    pub steps: Option<u64>,
    pub cap: Option<usize>,
    /// Desk mode only: retries per step after an oversized component.
    pub max_retries: usize,
    /// Cycle-variable limit handed to the counter.
    pub excess_cap: usize,
    pub seed: u64,
}

impl Default for GlauberConfig {
    fn default() -> Self {
        GlauberConfig {
            theta: 0.5,
            xi: 1,
            epsilon: None,
            mode: Mode::Theory,
            rho: None,
            steps: None,
            cap: None,
            max_retries: 0,
            excess_cap: crate::engine::DEFAULT_EXCESS_CAP,
            seed: 0,
        }
    }
}

impl GlauberConfig {
    /// Desk configuration with explicit block size, step count and cap.
    pub fn desk(rho: usize, steps: u64, cap: usize, seed: u64) -> Self {
        GlauberConfig {
            mode: Mode::Desk,
            rho: Some(rho),
            steps: Some(steps),
            cap: Some(cap),
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(Error::InvalidParameter(format!("θ must lie in (0, 1), got {}", self.theta)));
        }
        if self.xi == 0 {
            return Err(Error::InvalidParameter("ξ must be a positive integer".into()));
        }
        if let Some(e) = self.epsilon {
            if !(e > 0.0 && e < 1.0) {
                return Err(Error::InvalidParameter(format!("ε must lie in (0, 1), got {e}")));
            }
        }
        if self.mode == Mode::Theory
            && (self.rho.is_some() || self.steps.is_some() || self.cap.is_some() || self.max_retries > 0)
        {
            return Err(Error::InvalidParameter(
                "ρ, T, cap overrides and retries need desk mode".into(),
            ));
        }
        if self.steps == Some(0) {
            return Err(Error::InvalidParameter("T must be at least 1".into()));
        }
        Ok(())
    }

    /// Resolve ρ, T and the cap for a formula with `marked` marked
    /// variables.
    pub fn resolve(&self, k: usize, n: usize, marked: usize) -> Result<MixingParams> {
        self.validate()?;
        let mut p = mixing_params(k, n, marked, self.theta, self.xi, self.epsilon);
        if let Some(r) = self.rho {
            if r == 0 || r > marked {
                return Err(Error::InvalidParameter(format!(
                    "ρ = {r} outside 1..={marked}"
                )));
            }
            p.rho = r;
        }
        if let Some(t) = self.steps {
            p.steps = t;
        }
        if let Some(c) = self.cap {
            p.cap = c;
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixingParams {
    pub rho: usize,
    pub steps: u64,
    pub cap: usize,
}

/// ρ = ⌈2^{−k−1}|V_m|⌉, T = ⌈2^{2k+3} n^θ ln(2n/ε²)⌉ and
/// cap = ⌈2k⁴(1+ξ) ln n⌉, with ε = n^{−ξ} by default. T saturates at
/// `u64::MAX`.
pub fn mixing_params(
    k: usize,
    n: usize,
    marked: usize,
    theta: f64,
    xi: u32,
    epsilon: Option<f64>,
) -> MixingParams {
    let n_f = n as f64;
    let eps = epsilon.unwrap_or_else(|| n_f.powf(-f64::from(xi)));
    let rho = if k + 1 >= usize::BITS as usize {
        usize::from(marked > 0)
    } else {
        marked.div_ceil(1usize << (k + 1))
    };
    let t = ((2 * k + 3) as f64).exp2() * n_f.powf(theta) * (2.0 * n_f / (eps * eps)).ln();
    let steps = if t.ceil() >= u64::MAX as f64 { u64::MAX } else { t.ceil().max(1.0) as u64 };
    let cap = 2.0 * (k as f64).powi(4) * (1.0 + f64::from(xi)) * n_f.ln();
    MixingParams {
        rho,
        steps,
        cap: cap.ceil().max(0.0) as usize,
    }
}

/// The chain state X_t on the marked variables.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainState {
    /// V_m, ascending.
    pub vars: Vec<usize>,
    /// X_t(v) for each `v` in `vars`.
    pub values: Vec<bool>,
    pub t: u64,
}

impl ChainState {
    pub fn to_partial(&self, n: usize) -> PartialAssignment {
        let mut a = PartialAssignment::new(n);
        for (&v, &b) in self.vars.iter().zip(&self.values) {
            a.set(v, b);
        }
        a
    }
}

/// Independent fair coins on V_m.
pub fn init_chain(marking: &Marking, seed: u64) -> ChainState {
    init_chain_with(marking, &mut rng::seeded(seed))
}

pub fn init_chain_with<R: Rng>(marking: &Marking, rng: &mut R) -> ChainState {
    let vars = marking.marked();
    let values = vars.iter().map(|_| rng.gen_bool(0.5)).collect();
    ChainState { vars, values, t: 0 }
}

/// A running chain with its residual formula kept in sync with X_t.
pub struct Chain<'f> {
    residual: ResidualState<'f>,
    order: Vec<usize>,
    state: ChainState,
    rho: usize,
    caps: SampleCaps,
}

impl<'f> Chain<'f> {
    pub fn new(f: &'f Formula, state: ChainState, rho: usize, caps: SampleCaps) -> Self {
        let mut residual = ResidualState::new(f);
        for (&v, &b) in state.vars.iter().zip(&state.values) {
            residual.pin(v, b);
        }
        Chain {
            residual,
            order: (0..state.vars.len()).collect(),
            state,
            rho,
            caps,
        }
    }

    pub fn state(&self) -> &ChainState {
        &self.state
    }

    pub fn into_parts(self) -> (ResidualState<'f>, ChainState) {
        (self.residual, self.state)
    }

    /// One block update. Returns the largest component met. On error the
    /// chain state is left unchanged.
    pub fn step<R: Rng>(&mut self, rng: &mut R) -> Result<usize> {
        let len = self.order.len();
        let rho = self.rho.min(len);
        for i in 0..rho {
            let j = rng.gen_range(i..len);
            self.order.swap(i, j);
        }
        let mut block: Vec<usize> = self.order[..rho].to_vec();
        block.sort_unstable();
        let vars: Vec<usize> = block.iter().map(|&p| self.state.vars[p]).collect();
        for &v in &vars {
            self.residual.unpin(v);
        }
        match sample_into(&mut self.residual, &vars, self.caps, &mut RngChooser(rng)) {
            Ok(size) => {
                for (&p, &v) in block.iter().zip(&vars) {
                    self.state.values[p] = self.residual.value(v).expect("sampled");
                }
                self.state.t += 1;
                Ok(size)
            }
            Err(e) => {
                for (&p, &v) in block.iter().zip(&vars) {
                    if self.residual.value(v).is_some() {
                        self.residual.unpin(v);
                    }
                    self.residual.pin(v, self.state.values[p]);
                }
                Err(e)
            }
        }
    }
}

/// One chain step from `state` as a standalone transition.
pub fn step(
    f: &Formula,
    state: &ChainState,
    rho: usize,
    caps: SampleCaps,
    rng: &mut impl Rng,
) -> Result<ChainState> {
    let mut chain = Chain::new(f, state.clone(), rho, caps);
    chain.step(rng)?;
    Ok(chain.state)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub seed: u64,
    pub mode: Mode,
    pub status: Status,
    pub rho: usize,
    pub steps_planned: u64,
    pub steps: u64,
    pub cap: usize,
    /// Largest component (in clauses) met by each completed step.
    pub max_component_per_step: Vec<usize>,
    /// Largest component met while extending to V_a ∪ V_c.
    pub final_max_component: usize,
    pub errors: Vec<String>,
    /// Steps redrawn after an oversized component (desk mode only).
    pub retries: usize,
    pub wall_time_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    /// Total assignment, present only when `report.status` is ok.
    pub assignment: Option<Vec<bool>>,
    pub report: RunReport,
}

/// Reusable driver for many independent runs on one formula and marking.
pub struct Sampler<'f> {
    f: &'f Formula,
    marked: Vec<usize>,
    rest: Vec<usize>,
    params: MixingParams,
    mode: Mode,
    max_retries: usize,
    caps: SampleCaps,
    residual: Option<ResidualState<'f>>,
}

impl<'f> Sampler<'f> {
    pub fn new(f: &'f Formula, marking: &Marking, cfg: &GlauberConfig) -> Result<Self> {
        if marking.n() != f.n() {
            return Err(Error::MarkingInvalid { violations: 1 });
        }
        let marked = marking.marked();
        let mut rest = marking.auxiliary();
        rest.extend(marking.control());
        rest.sort_unstable();
        let params = cfg.resolve(f.k(), f.n(), marked.len())?;
        Ok(Sampler {
            f,
            marked,
            rest,
            params,
            mode: cfg.mode,
            max_retries: if cfg.mode == Mode::Desk { cfg.max_retries } else { 0 },
            caps: SampleCaps {
                component: params.cap,
                excess: cfg.excess_cap,
            },
            residual: Some(Self::fresh_residual(f)),
        })
    }

    fn fresh_residual(f: &'f Formula) -> ResidualState<'f> {
        let mut r = ResidualState::new(f);
        r.enable_memo();
        r
    }

    pub fn params(&self) -> MixingParams {
        self.params
    }

    pub fn run(&mut self, seed: u64) -> RunOutcome {
        let start = Instant::now();
        let mut rng = rng::seeded(seed);
        let mut residual = self.residual.take().unwrap_or_else(|| Self::fresh_residual(self.f));
        residual.clear();

        let values = self.marked.iter().map(|_| rng.gen_bool(0.5)).collect();
        let state = ChainState {
            vars: self.marked.clone(),
            values,
            t: 0,
        };
        for (&v, &b) in state.vars.iter().zip(&state.values) {
            residual.pin(v, b);
        }
        let mut chain = Chain {
            residual,
            order: (0..self.marked.len()).collect(),
            state,
            rho: self.params.rho,
            caps: self.caps,
        };

        let mut report = RunReport {
            seed,
            mode: self.mode,
            status: Status::Ok,
            rho: self.params.rho,
            steps_planned: self.params.steps,
            steps: 0,
            cap: self.params.cap,
            max_component_per_step: Vec::new(),
            final_max_component: 0,
            errors: Vec::new(),
            retries: 0,
            wall_time_secs: 0.0,
        };

        let mut failed = false;
        if self.params.rho > 0 {
            'steps: for _ in 0..self.params.steps {
                let mut attempt = 0;
                loop {
                    match chain.step(&mut rng) {
                        Ok(size) => {
                            report.max_component_per_step.push(size);
                            report.steps += 1;
                            break;
                        }
                        Err(e @ Error::ComponentTooLarge { .. }) if attempt < self.max_retries => {
                            attempt += 1;
                            report.retries += 1;
                            report.errors.push(format!("step {}: {e} (retried)", report.steps));
                        }
                        Err(e) => {
                            report.errors.push(format!("step {}: {e}", report.steps));
                            failed = true;
                            break 'steps;
                        }
                    }
                }
            }
        }

        let (mut residual, _) = chain.into_parts();
        let mut assignment = None;
        if !failed {
            match sample_into(&mut residual, &self.rest, self.caps, &mut RngChooser(&mut rng)) {
                Ok(size) => {
                    report.final_max_component = size;
                    assignment = Some(
                        (0..self.f.n())
                            .map(|v| residual.value(v).expect("every variable sampled"))
                            .collect(),
                    );
                }
                Err(e) => {
                    report.errors.push(format!("extension: {e}"));
                    failed = true;
                }
            }
        }
        if failed {
            report.status = Status::Error;
        }
        self.residual = Some(residual);
        report.wall_time_secs = start.elapsed().as_secs_f64();
        RunOutcome { assignment, report }
    }
}

/// One full sampler run: T block steps, then the extension to V_a ∪ V_c.
pub fn run(f: &Formula, marking: &Marking, cfg: &GlauberConfig) -> Result<RunOutcome> {
    Ok(Sampler::new(f, marking, cfg)?.run(cfg.seed))
}

const RUNS_PER_CHUNK: usize = 1024;

/// `runs` independent runs with seeds `cfg.seed`, `cfg.seed + 1`, …, in
/// seed order. Each worker reuses one sampler for a chunk of seeds.
pub fn run_many(
    f: &Formula,
    marking: &Marking,
    cfg: &GlauberConfig,
    runs: usize,
    exec: Exec,
) -> Result<Vec<RunOutcome>> {
    Sampler::new(f, marking, cfg)?;
    let chunks = runs.div_ceil(RUNS_PER_CHUNK);
    let out = map_indexed(exec, chunks, |c| {
        let mut s = Sampler::new(f, marking, cfg).expect("validated above");
        let lo = c * RUNS_PER_CHUNK;
        let hi = runs.min(lo + RUNS_PER_CHUNK);
        (lo..hi)
            .map(|i| s.run(cfg.seed.wrapping_add(i as u64)))
            .collect::<Vec<_>>()
    });
    Ok(out.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marking::Role;

    #[test]
    fn mixing_examples() {
        let p = mixing_params(3, 100, 16, 0.5, 1, None);
        assert_eq!(p.rho, 1);
        let p = mixing_params(10, 10_000, 0, 0.5, 1, Some(1e-4));
        let expected = (8_388_608.0f64 * 100.0 * (2e4f64 / 1e-8).ln()).ceil() as u64;
        assert_eq!(p.steps, expected);
        let p = mixing_params(3, 1000, 0, 0.5, 1, None);
        assert_eq!(p.cap, (2.0 * 81.0 * 2.0 * 1000f64.ln()).ceil() as usize);
        assert_eq!(mixing_params(3, 100, 17, 0.5, 1, None).rho, 2);
    }

    #[test]
    fn theory_mode_rejects_overrides() {
        let cfg = GlauberConfig {
            rho: Some(1),
            ..GlauberConfig::default()
        };
        assert!(cfg.validate().is_err());
        assert!(GlauberConfig { theta: 1.0, ..GlauberConfig::default() }.validate().is_err());
    }

    #[test]
    fn init_is_seeded() {
        let m = Marking {
            role: vec![Role::Marked, Role::Control, Role::Marked],
        };
        let s = init_chain(&m, 4);
        assert_eq!(s.vars, vec![0, 2]);
        assert_eq!(s, init_chain(&m, 4));
        assert!(init_chain(&Marking::all_control(3), 1).vars.is_empty());
    }

    #[test]
    fn runs_are_reproducible_and_satisfying() {
        let f = crate::formula::generate_random(3, 12, 1.5, 8).unwrap();
        let m = Marking {
            role: (0..12).map(|v| if v % 2 == 0 { Role::Marked } else { Role::Control }).collect(),
        };
        let cfg = GlauberConfig::desk(3, 10, 50, 77);
        let a = run(&f, &m, &cfg).unwrap();
        let b = run(&f, &m, &cfg).unwrap();
        assert_eq!(a.assignment, b.assignment);
        if let Some(x) = &a.assignment {
            assert!(f.is_satisfied_by(x));
        }
    }
}
