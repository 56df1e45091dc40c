use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use ksat_core::analysis::{self, Experiment, ExperimentGrid, PinningLaw, PinningSetup, Report, ScalingConfig, Tabular};
use ksat_core::coupling::{check_properties, influence_sum_estimate, run_coupling_with};
use ksat_core::dimacs::{read_dimacs, read_marking, read_partial, write_dimacs, write_marking, write_partial};
use ksat_core::engine::{count_with_cap, SampleCaps, DEFAULT_EXCESS_CAP};
use ksat_core::exec::Exec;
use ksat_core::glauber::{run_many, GlauberConfig, Mode, Sampler, Status};
use ksat_core::marking::{compute_marking_with_stats, verify_marking_with, DEFAULT_BETA};
use ksat_core::oracle::{self, block_kernel, spectral_check, stationarity_check, tv_empirical, Empirical};
use ksat_core::{classify, formula, rng, ClassifierParams, Formula, Marking, MarkingParams, PartialAssignment};

const SCHEMA_VERSION: u32 = 1;

#[derive(Parser)]
#[command(name = "ksat", version, about = "Sample satisfying assignments of random k-CNF formulas")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random k-CNF formula in DIMACS format.
    Generate(GenerateArgs),
    /// Split variables and clauses into bad and good.
    Classify(ClassifyArgs),
    /// Compute a marking and append it to the formula file.
    Mark(MarkArgs),
    /// Count satisfying assignments exactly.
    Count(CountArgs),
    /// Run the block Glauber sampler.
    Sample(SampleArgs),
    /// Run the coupling process and estimate influence sums.
    Couple(CoupleArgs),
    /// Check the implementation against exhaustive ground truth.
    Verify(VerifyArgs),
    /// Structural statistics and scaling experiments.
    Analyze(AnalyzeArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    k: usize,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct ClassifierOpts {
    /// Replace the degree threshold Δ.
    #[arg(long = "delta-override")]
    delta_override: Option<u64>,
}

impl ClassifierOpts {
    fn params(&self) -> ClassifierParams {
        match self.delta_override {
            Some(d) => ClassifierParams::with_delta(d),
            None => ClassifierParams::default(),
        }
    }
}

#[derive(Args, Clone)]
struct MarkingOpts {
    #[arg(long, default_value_t = 0.117841)]
    r: f64,
    #[arg(long = "beta-marked", default_value_t = DEFAULT_BETA)]
    beta_marked: f64,
    #[arg(long = "beta-aux", default_value_t = DEFAULT_BETA)]
    beta_aux: f64,
    /// Round per-clause bounds down (bounds below one become vacuous).
    #[arg(long = "desk-bounds")]
    desk_bounds: bool,
    #[arg(long = "max-rounds", default_value_t = 1_000_000)]
    max_rounds: usize,
}

impl MarkingOpts {
    fn params(&self, seed: u64) -> MarkingParams {
        MarkingParams {
            beta_marked: self.beta_marked,
            beta_aux: self.beta_aux,
            r: self.r,
            max_resample_rounds: self.max_rounds,
            seed,
            desk: self.desk_bounds,
        }
    }
}

#[derive(Args)]
struct ClassifyArgs {
    file: PathBuf,
    /// Expected clause width; checked against the file.
    #[arg(long)]
    k: Option<usize>,
    #[command(flatten)]
    classifier: ClassifierOpts,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct MarkArgs {
    file: PathBuf,
    #[command(flatten)]
    marking: MarkingOpts,
    #[command(flatten)]
    classifier: ClassifierOpts,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write formula and marking here instead of appending to FILE.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct CountArgs {
    file: PathBuf,
    /// Partial assignment file with `v <idx> <0|1>` lines.
    #[arg(long, alias = "partial")]
    assign: Option<PathBuf>,
    #[arg(long = "excess-cap", default_value_t = DEFAULT_EXCESS_CAP)]
    excess_cap: usize,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Theory,
    Desk,
}

#[derive(Args, Clone)]
struct ChainOpts {
    #[arg(long, default_value_t = 0.5)]
    theta: f64,
    #[arg(long, default_value_t = 1)]
    xi: u32,
    #[arg(long, value_enum, default_value_t = ModeArg::Theory)]
    mode: ModeArg,
    #[arg(long)]
    rho: Option<usize>,
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long)]
    cap: Option<usize>,
    /// Desk mode: retries per step after an oversized component.
    #[arg(long, default_value_t = 0)]
    retries: usize,
    #[arg(long = "excess-cap", default_value_t = DEFAULT_EXCESS_CAP)]
    excess_cap: usize,
}

impl ChainOpts {
    fn config(&self, seed: u64) -> GlauberConfig {
        GlauberConfig {
            theta: self.theta,
            xi: self.xi,
            epsilon: None,
            mode: match self.mode {
                ModeArg::Theory => Mode::Theory,
                ModeArg::Desk => Mode::Desk,
            },
            rho: self.rho,
            steps: self.steps,
            cap: self.cap,
            max_retries: self.retries,
            excess_cap: self.excess_cap,
            seed,
        }
    }
}

#[derive(Args)]
struct SampleArgs {
    file: PathBuf,
    #[command(flatten)]
    chain: ChainOpts,
    #[command(flatten)]
    marking: MarkingOpts,
    #[command(flatten)]
    classifier: ClassifierOpts,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Independent runs; run i uses seed + i.
    #[arg(long, default_value_t = 1)]
    runs: u64,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct CoupleArgs {
    file: PathBuf,
    #[arg(long)]
    u: usize,
    /// Pinning of marked variables, `v <idx> <0|1>` lines.
    #[arg(long)]
    pin: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    runs: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    cap: Option<usize>,
    /// Also evaluate the coupling properties on every run.
    #[arg(long)]
    check: bool,
    /// Also compute exact influences for comparison.
    #[arg(long)]
    exact: bool,
    #[command(flatten)]
    marking: MarkingOpts,
    #[command(flatten)]
    classifier: ClassifierOpts,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Count,
    Stationarity,
    Tv,
    Spectral,
}

#[derive(Args)]
struct VerifyArgs {
    file: PathBuf,
    #[arg(long, value_enum)]
    suite: Suite,
    /// Block sizes for the stationarity suite; defaults to 1, 2 and |V_m|.
    #[arg(long, value_delimiter = ',')]
    rho: Vec<usize>,
    /// Runs for the tv suite.
    #[arg(long, default_value_t = 10_000)]
    runs: u64,
    /// Desk steps for the tv suite.
    #[arg(long, default_value_t = 50)]
    steps: u64,
    #[arg(long, default_value_t = 0.05)]
    confidence: f64,
    #[arg(long)]
    pin: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    marking: MarkingOpts,
    #[command(flatten)]
    classifier: ClassifierOpts,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExperimentArg {
    TreeExcess,
    Linearity,
    BadFraction,
    Pinning,
    Scaling,
    Z0,
}

#[derive(Clone, Copy, ValueEnum)]
enum LawArg {
    Uniform,
    Chain,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long, value_enum)]
    experiment: ExperimentArg,
    #[arg(long, value_delimiter = ',', required = true)]
    k: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    alpha: Vec<f64>,
    /// Replicates per grid cell.
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    /// First instance seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    classifier: ClassifierOpts,
    /// Tree-excess: connected sets have at most b ln n clauses.
    #[arg(long, default_value_t = 1.0)]
    b: f64,
    /// Tree-excess: connected sets sampled per instance.
    #[arg(long, default_value_t = 200)]
    samples: usize,
    /// Pinning: draws of (S, Λ) per instance.
    #[arg(long, default_value_t = 100)]
    draws: u64,
    #[arg(long)]
    rho: Option<usize>,
    #[arg(long, value_enum, default_value_t = LawArg::Chain)]
    law: LawArg,
    #[arg(long = "chain-steps", default_value_t = analysis::DEFAULT_CHAIN_STEPS)]
    chain_steps: u64,
    #[arg(long, default_value_t = 100_000)]
    cap: usize,
    /// Scaling: θ in T = ⌈n^θ ln n⌉.
    #[arg(long, default_value_t = 0.2)]
    theta: f64,
    /// Scaling: timed repetitions per n.
    #[arg(long, default_value_t = 3)]
    reps: usize,
    #[arg(long, conflicts_with = "csv")]
    json: bool,
    #[arg(long)]
    csv: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> Result<()> {
    if let Ok(t) = std::env::var("KSAT_THREADS") {
        let threads: usize = t.parse().context("KSAT_THREADS must be a positive integer")?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let result = match cli.command {
        Command::Generate(a) => generate(a, &mut out),
        Command::Classify(a) => classify_cmd(a, &mut out),
        Command::Mark(a) => mark(a, &mut out),
        Command::Count(a) => count(a, &mut out),
        Command::Sample(a) => sample(a, &mut out),
        Command::Couple(a) => couple(a, &mut out),
        Command::Verify(a) => verify(a, &mut out),
        Command::Analyze(a) => analyze(a, &mut out),
    };
    // A closed stdout (`ksat sample ... | head`) is not a failure.
    match result {
        Err(e) if is_broken_pipe(&e) => Ok(()),
        r => r,
    }
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.downcast_ref::<io::Error>()
            .map(io::Error::kind)
            .or_else(|| c.downcast_ref::<serde_json::Error>().and_then(serde_json::Error::io_error_kind))
            == Some(io::ErrorKind::BrokenPipe)
    })
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load(path: &Path) -> Result<(Formula, String)> {
    let text = read_text(path)?;
    let f = read_dimacs(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok((f, text))
}

fn load_partial(path: Option<&PathBuf>, n: usize) -> Result<PartialAssignment> {
    match path {
        Some(p) => read_partial(&read_text(p)?, n).with_context(|| format!("parsing {}", p.display())),
        None => Ok(PartialAssignment::new(n)),
    }
}

/// The marking stored in the file, or a freshly computed one.
fn marking_for(
    f: &Formula,
    text: &str,
    classifier: &ClassifierOpts,
    opts: &MarkingOpts,
    seed: u64,
) -> Result<(Marking, Option<usize>)> {
    if let Some(m) = read_marking(text, f.n())? {
        return Ok((m, None));
    }
    let cls = classify(f, &classifier.params());
    let (m, rounds) = compute_marking_with_stats(f, &cls, &opts.params(seed))?;
    Ok((m, Some(rounds)))
}

fn envelope(schema: &str, body: impl Serialize) -> Result<Value> {
    let mut v = serde_json::to_value(body)?;
    let obj = v.as_object_mut().context("report is not a JSON object")?;
    obj.insert("schema".into(), json!(format!("ksat.{schema}")));
    obj.insert("schema_version".into(), json!(SCHEMA_VERSION));
    Ok(v)
}

fn emit(out: &mut impl Write, v: &Value) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, v)?;
    writeln!(out)?;
    Ok(())
}

fn generate(a: GenerateArgs, out: &mut impl Write) -> Result<()> {
    let f = formula::generate_random(a.k, a.n, a.alpha, a.seed)?;
    let text = write_dimacs(&f);
    match a.out {
        Some(p) => fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn classify_cmd(a: ClassifyArgs, out: &mut impl Write) -> Result<()> {
    let (f, _) = load(&a.file)?;
    if let Some(k) = a.k {
        ensure!(k == f.k(), "--k {k} does not match the file's clause width {}", f.k());
    }
    let params = a.classifier.params();
    params.validate()?;
    let c = classify(&f, &params);
    let v = envelope(
        "classify",
        json!({
            "n": f.n(),
            "m": f.m(),
            "k": f.k(),
            "delta": c.delta,
            "bad_var_count": c.bad_var_count(),
            "bad_clause_count": c.bad_clause_count(),
            "max_degree": c.max_degree(),
            "histogram": c.degree_histogram(),
        }),
    )?;
    if a.json {
        emit(out, &v)
    } else {
        writeln!(
            out,
            "n={} m={} k={} delta={} bad_vars={} bad_clauses={} max_degree={}",
            f.n(),
            f.m(),
            f.k(),
            c.delta,
            c.bad_var_count(),
            c.bad_clause_count(),
            c.max_degree()
        )?;
        Ok(())
    }
}

fn strip_marks(text: &str) -> String {
    text.lines()
        .filter(|l| !l.trim_start().starts_with("c mark"))
        .map(|l| format!("{l}\n"))
        .collect()
}

fn mark(a: MarkArgs, out: &mut impl Write) -> Result<()> {
    let (f, text) = load(&a.file)?;
    let cls = classify(&f, &a.classifier.params());
    let p = a.marking.params(a.seed);
    let (m, rounds) = compute_marking_with_stats(&f, &cls, &p)?;
    let need = p.thresholds(f.k());
    let check = verify_marking_with(&f, &cls, &m, need);
    ensure!(check.ok, "computed marking failed verification ({} violations)", check.violations.len());
    let body = strip_marks(&text) + &write_marking(&m);
    let target = a.out.as_ref().unwrap_or(&a.file);
    fs::write(target, body).with_context(|| format!("writing {}", target.display()))?;
    let [vm, va, vc] = m.sizes();
    let v = envelope(
        "mark",
        json!({
            "marked": vm,
            "auxiliary": va,
            "control": vc,
            "rounds": rounds,
            "thresholds": need,
            "verified": check.ok,
            "file": target.display().to_string(),
        }),
    )?;
    if a.json {
        emit(out, &v)
    } else {
        writeln!(out, "marked={vm} auxiliary={va} control={vc} rounds={rounds}")?;
        Ok(())
    }
}

fn count(a: CountArgs, out: &mut impl Write) -> Result<()> {
    let (f, _) = load(&a.file)?;
    let lam = load_partial(a.assign.as_ref(), f.n())?;
    let c = count_with_cap(&f, &lam, a.excess_cap)?;
    if a.json {
        let v = envelope(
            "count",
            json!({
                "count": c.to_string(),
                "n": f.n(),
                "free_vars": f.n() - lam.len(),
            }),
        )?;
        emit(out, &v)
    } else {
        writeln!(out, "{c}")?;
        Ok(())
    }
}

fn sample(a: SampleArgs, out: &mut impl Write) -> Result<()> {
    let (f, text) = load(&a.file)?;
    let (m, rounds) = marking_for(&f, &text, &a.classifier, &a.marking, a.seed)?;
    let cfg = a.chain.config(a.seed);
    let params = Sampler::new(&f, &m, &cfg)?.params();
    let outcomes = run_many(&f, &m, &cfg, a.runs as usize, Exec::Parallel)?;
    let mut reports = Vec::with_capacity(outcomes.len());
    let mut assignments = Vec::with_capacity(outcomes.len());
    for (i, o) in outcomes.into_iter().enumerate() {
        let lines = match &o.assignment {
            Some(x) => {
                ensure!(f.is_satisfied_by(x), "run {i} produced a non-satisfying assignment");
                Some(write_partial(&PartialAssignment::total(x)))
            }
            None => None,
        };
        if !a.json {
            let status = match o.report.status {
                Status::Ok => "ok",
                Status::Error => "error",
            };
            writeln!(out, "c run {i} seed {} status {status}", o.report.seed)?;
            if let Some(text) = &lines {
                write!(out, "{text}")?;
            }
        }
        assignments.push(lines);
        reports.push(o.report);
    }
    let ok = reports.iter().filter(|r| r.status == Status::Ok).count();
    if a.json {
        // Each assignment is kept in its `v <idx> <0|1>` text form.
        let v = envelope(
            "sample",
            json!({
                "runs": a.runs,
                "ok": ok,
                "rho": params.rho,
                "steps": params.steps,
                "cap": params.cap,
                "marking_sizes": m.sizes(),
                "marking_rounds": rounds,
                "assignments": assignments,
                "reports": reports,
            }),
        )?;
        emit(out, &v)
    } else {
        writeln!(out, "c {ok}/{} runs ok, rho={} steps={} cap={}", a.runs, params.rho, params.steps, params.cap)?;
        Ok(())
    }
}

fn couple(a: CoupleArgs, out: &mut impl Write) -> Result<()> {
    let (f, text) = load(&a.file)?;
    let cls = classify(&f, &a.classifier.params());
    let (m, _) = marking_for(&f, &text, &a.classifier, &a.marking, a.seed)?;
    let lam = load_partial(a.pin.as_ref(), f.n())?;
    let caps = a.cap.map(SampleCaps::with_component).unwrap_or_default();
    let summary = influence_sum_estimate(&f, &cls, &m, a.u, &lam, a.runs, a.seed, caps, Exec::Parallel)?;
    let mut v = envelope("couple", &summary)?;
    if a.check {
        let checks = ksat_core::exec::map_indexed(Exec::Parallel, a.runs as usize, |i| {
            let mut r = rng::stream(a.seed, i as u64);
            run_coupling_with(&f, &cls, &m, a.u, &lam, caps, &mut r).map(|run| check_properties(&f, &m, &lam, &run).all())
        });
        let passed = checks.iter().filter(|c| matches!(c, Ok(true))).count();
        let failed = checks.iter().filter(|c| matches!(c, Ok(false))).count();
        v["property_checks"] = json!({ "passed": passed, "failed": failed, "aborted": checks.len() - passed - failed });
    }
    if a.exact {
        let exact: f64 = m
            .marked()
            .into_iter()
            .filter(|&w| !lam.is_assigned(w))
            .map(|w| ksat_core::coupling::influence_exact(&f, a.u, w, &lam).map(f64::abs))
            .sum::<ksat_core::Result<f64>>()?;
        v["exact_sum"] = json!(exact);
    }
    if a.json {
        emit(out, &v)
    } else {
        writeln!(
            out,
            "u={} runs={} sum={:.6} ± {:.6} mean|F_u|={:.3}",
            a.u, summary.completed, summary.sum, summary.sum_std_error, summary.mean_failed_clauses
        )?;
        Ok(())
    }
}

fn verify(a: VerifyArgs, out: &mut impl Write) -> Result<()> {
    let (f, text) = load(&a.file)?;
    let v = match a.suite {
        Suite::Count => {
            let lam = load_partial(a.pin.as_ref(), f.n())?;
            let brute = oracle::brute_count(&f, &lam)?;
            let engine = count_with_cap(&f, &lam, DEFAULT_EXCESS_CAP)?;
            envelope(
                "verify.count",
                json!({ "brute": brute.to_string(), "engine": engine.to_string(), "pass": brute == engine }),
            )?
        }
        Suite::Stationarity => {
            let (m, _) = marking_for(&f, &text, &a.classifier, &a.marking, a.seed)?;
            let vm = m.sizes()[0];
            ensure!(vm > 0, "the marking has no marked variables");
            let mut rhos = if a.rho.is_empty() { vec![1, 2, vm] } else { a.rho.clone() };
            rhos.retain(|&r| r >= 1 && r <= vm);
            rhos.sort_unstable();
            rhos.dedup();
            let reports = rhos
                .iter()
                .map(|&r| stationarity_check(&f, &m, r))
                .collect::<ksat_core::Result<Vec<_>>>()?;
            let pass = reports.iter().all(|r| r.residual <= 1e-10);
            envelope("verify.stationarity", json!({ "reports": reports, "pass": pass }))?
        }
        Suite::Tv => {
            let (m, _) = marking_for(&f, &text, &a.classifier, &a.marking, a.seed)?;
            let vm = m.sizes()[0];
            ensure!(vm > 0, "the marking has no marked variables");
            let rho = a.rho.first().copied().unwrap_or(vm.div_ceil(2));
            let cfg = GlauberConfig::desk(rho, a.steps, usize::MAX, a.seed);
            let all: Vec<usize> = (0..f.n()).collect();
            let target = oracle::uniform_satisfying(&f, &PartialAssignment::new(f.n()), &all)?;
            let outcomes = run_many(&f, &m, &cfg, a.runs as usize, Exec::Parallel)?;
            let mut h = Empirical::new(all);
            let (mut failed, mut unsatisfied) = (0u64, 0u64);
            for o in outcomes {
                match o.assignment {
                    Some(x) => {
                        unsatisfied += u64::from(!f.is_satisfied_by(&x));
                        h.record(&x);
                    }
                    None => failed += 1,
                }
            }
            let report = tv_empirical(&target, &h, a.confidence)?;
            let chain_tv = if vm <= oracle::KERNEL_LIMIT {
                let k = block_kernel(&f, &m, rho)?;
                let mu = oracle::uniform_satisfying(&f, &PartialAssignment::new(f.n()), &k.marked)?;
                let (law, lost) = k.evolve_from_uniform(a.steps);
                Some(json!({ "tv": k.tv_to(&law, &mu), "failure_mass": lost }))
            } else {
                None
            };
            envelope(
                "verify.tv",
                json!({
                    "report": report,
                    "rho": rho,
                    "steps": a.steps,
                    "failed_runs": failed,
                    "unsatisfied_outputs": unsatisfied,
                    "exact_chain": chain_tv,
                    "pass": unsatisfied == 0 && report.tv <= 0.05,
                }),
            )?
        }
        Suite::Spectral => {
            let (m, _) = marking_for(&f, &text, &a.classifier, &a.marking, a.seed)?;
            let lam = load_partial(a.pin.as_ref(), f.n())?;
            let r = spectral_check(&f, &m, &lam)?;
            let pass = r.holds;
            envelope("verify.spectral", json!({ "report": r, "pass": pass }))?
        }
    };
    if a.json {
        emit(out, &v)
    } else {
        writeln!(out, "pass={}", v["pass"])?;
        Ok(())
    }
}

fn write_table<R: Tabular>(rep: &Report<R>, out: &mut impl Write) -> Result<()> {
    let (header, rows) = rep.table();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

fn finish<R: Tabular + Serialize>(rep: Report<R>, a: &AnalyzeArgs, out: &mut impl Write) -> Result<()> {
    let mut buf = Vec::new();
    if a.csv {
        write_table(&rep, &mut buf)?;
    } else {
        serde_json::to_writer_pretty(&mut buf, &rep)?;
        buf.push(b'\n');
    }
    match &a.out {
        Some(p) => fs::write(p, buf).with_context(|| format!("writing {}", p.display()))?,
        None => out.write_all(&buf)?,
    }
    Ok(())
}

fn analyze(a: AnalyzeArgs, out: &mut impl Write) -> Result<()> {
    let experiment = match a.experiment {
        ExperimentArg::TreeExcess => Experiment::TreeExcess,
        ExperimentArg::Linearity => Experiment::Linearity,
        ExperimentArg::BadFraction => Experiment::BadFraction,
        ExperimentArg::Pinning => Experiment::Pinning,
        ExperimentArg::Scaling => Experiment::Scaling,
        ExperimentArg::Z0 => Experiment::Z0,
    };
    let grid = ExperimentGrid {
        experiment,
        ks: a.k.clone(),
        ns: a.n.clone(),
        alphas: a.alpha.clone(),
        seeds: a.seeds,
        base_seed: a.seed,
        output: a.out.as_ref().map(|p| p.display().to_string()),
    };
    let exec = Exec::Parallel;
    let params = a.classifier.params();
    match experiment {
        Experiment::Linearity => finish(analysis::run_linearity(&grid, exec)?, &a, out),
        Experiment::TreeExcess => finish(analysis::run_tree_excess(&grid, a.b, a.samples, exec)?, &a, out),
        Experiment::BadFraction => finish(analysis::run_bad_fraction(&grid, &params, exec)?, &a, out),
        Experiment::Z0 => finish(analysis::run_z0(&grid, &params, DEFAULT_EXCESS_CAP, exec)?, &a, out),
        Experiment::Pinning => {
            let setup = PinningSetup {
                classifier: params,
                rho: a.rho,
                law: match a.law {
                    LawArg::Uniform => PinningLaw::Uniform,
                    LawArg::Chain => PinningLaw::Chain { steps: a.chain_steps },
                },
                draws: a.draws,
                cap: a.cap,
                ..PinningSetup::default()
            };
            finish(analysis::run_pinning(&grid, &setup, exec)?, &a, out)
        }
        Experiment::Scaling => {
            if a.k.len() != 1 || a.alpha.len() != 1 {
                bail!("scaling takes a single k and a single alpha");
            }
            let cfg = ScalingConfig {
                k: a.k[0],
                alpha: a.alpha[0],
                ns: a.n.clone(),
                theta: a.theta,
                reps: a.reps,
                seed: a.seed,
                classifier: params,
                rho: a.rho,
                ..ScalingConfig::default()
            };
            let rep = analysis::scaling_bench(&cfg)?;
            let mut buf = Vec::new();
            if a.csv {
                let mut w = csv::Writer::from_writer(&mut buf);
                w.write_record(analysis::ScalingRow::header())?;
                for r in &rep.rows {
                    w.write_record(r.row())?;
                }
                w.flush()?;
            } else {
                serde_json::to_writer_pretty(&mut buf, &rep)?;
                buf.push(b'\n');
            }
            match &a.out {
                Some(p) => fs::write(p, buf).with_context(|| format!("writing {}", p.display()))?,
                None => out.write_all(&buf)?,
            }
            Ok(())
        }
    }
}
