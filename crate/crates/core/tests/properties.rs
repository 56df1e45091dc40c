use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

use ksat_core::analysis::{
    count_bad_formula, pinning_experiment, run_linearity, Experiment, ExperimentGrid, PinningConfig, PinningLaw,
};
use ksat_core::classify::classify_naive;
use ksat_core::coupling::{check_properties, influence_exact_rational, run_coupling};
use ksat_core::dimacs::{read_dimacs, read_marking, read_partial, write_dimacs, write_marking, write_partial};
use ksat_core::engine::{count, decompose, sample_law, sample_marginals, simplify, SampleCaps};
use ksat_core::exec::Exec;
use ksat_core::formula::{build_dependency_graph, clause_count, generate_random};
use ksat_core::glauber::{init_chain_with, run, step, GlauberConfig, Status};
use ksat_core::marking::{compute_marking_with_stats, verify_marking_with};
use ksat_core::oracle::{brute_count, stationarity_check, tv_exact, uniform_satisfying, ExactDistribution};
use ksat_core::{
    classify, compute_marking, rng, ClassifierParams, Formula, Literal, Marking, MarkingParams, PartialAssignment,
    Role,
};

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

/// A k-CNF with at most `max_n` variables and `max_m` clauses, literals
/// drawn freely (repeats and tautologies included).
fn small_formula(max_n: usize, max_m: usize) -> impl Strategy<Value = Formula> {
    (3usize..=5, 0usize..=max_m).prop_flat_map(move |(k, m)| {
        (k..=max_n).prop_flat_map(move |n| {
            prop::collection::vec((0..n, any::<bool>()), m * k).prop_map(move |slots| {
                let lits = slots.into_iter().map(|(v, neg)| Literal::new(v, neg)).collect();
                Formula::from_literals(n, k, lits).unwrap()
            })
        })
    })
}

/// A formula paired with a partial assignment on it.
fn pinned_formula(max_n: usize, max_m: usize) -> impl Strategy<Value = (Formula, PartialAssignment)> {
    small_formula(max_n, max_m).prop_flat_map(|f| {
        let n = f.n();
        prop::collection::vec(prop::option::weighted(0.3, any::<bool>()), n).prop_map(move |vals| {
            let lam = PartialAssignment::from_pairs(n, vals.iter().enumerate().filter_map(|(v, b)| b.map(|b| (v, b))))
                .unwrap();
            (f.clone(), lam)
        })
    })
}

fn desk_marking(f: &Formula, seed: u64) -> Option<(ksat_core::Classification, Marking)> {
    let cls = classify(f, &ClassifierParams::with_delta(1_000));
    let p = MarkingParams {
        desk: true,
        seed,
        ..MarkingParams::default()
    };
    let m = compute_marking(f, &cls, &p).ok()?;
    Some((cls, m))
}

fn satisfiable(f: &Formula) -> bool {
    brute_count(f, &PartialAssignment::new(f.n())).unwrap() > BigUint::zero()
}

/// A distribution over two variables from four nonnegative weights.
fn dist_of(w: [u32; 4]) -> ExactDistribution {
    let weights: BTreeMap<u64, BigUint> = w
        .iter()
        .enumerate()
        .filter(|(_, &x)| x > 0)
        .map(|(i, &x)| (i as u64, BigUint::from(x)))
        .collect();
    ExactDistribution::from_weights(vec![0, 1], weights).unwrap()
}

fn weights() -> impl Strategy<Value = [u32; 4]> {
    prop::array::uniform4(0u32..20).prop_filter("some mass", |w| w.iter().any(|&x| x > 0))
}

proptest! {
    #![proptest_config(config(1_000))]

    #[test]
    fn classification_invariants_hold(k in 3usize..=10, n in 10usize..300, alpha in 0.1f64..3.0, delta in 1u64..8, seed in any::<u64>()) {
        let f = generate_random(k, n, alpha, seed).unwrap();
        for p in [ClassifierParams::default(), ClassifierParams::with_delta(delta)] {
            let cls = classify(&f, &p);
            prop_assert!(cls.violations(&f).is_empty(), "{:?}", cls.violations(&f));
            for c in cls.good_clauses() {
                prop_assert!(f.vars_of(c).iter().filter(|&&v| cls.is_bad_var(v as usize)).count() <= 2);
            }
            for c in cls.bad_clauses() {
                prop_assert!(f.vars_of(c).iter().all(|&v| cls.is_bad_var(v as usize)));
            }
            for v in cls.good_vars() {
                prop_assert!(u64::from(cls.degree[v]) < cls.delta);
            }
        }
    }
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn generated_formulas_have_exact_shape(k in 2usize..=10, n in 1usize..400, alpha in 0.01f64..6.0, seed in any::<u64>()) {
        let f = generate_random(k, n, alpha, seed).unwrap();
        prop_assert_eq!(f.m(), clause_count(n, alpha));
        prop_assert_eq!(f.m(), (alpha * n as f64 + 1e-9).floor() as usize);
        for c in 0..f.m() {
            prop_assert_eq!(f.literals(c).len(), k);
            prop_assert!(f.literals(c).iter().all(|l| l.var() < n));
        }
    }

    #[test]
    fn dependency_graph_is_symmetric_and_exact(f in small_formula(14, 30)) {
        let g = build_dependency_graph(&f);
        for a in 0..f.m() {
            for b in 0..f.m() {
                let shares = a != b && f.vars_of(a).iter().any(|v| f.vars_of(b).contains(v));
                let ab = g.neighbors(a).contains(&(b as u32));
                let ba = g.neighbors(b).contains(&(a as u32));
                prop_assert_eq!(ab, ba);
                prop_assert_eq!(ab, shares);
            }
        }
    }

    #[test]
    fn dimacs_round_trips(f in small_formula(14, 20), seed in any::<u64>()) {
        let back = read_dimacs(&write_dimacs(&f)).unwrap();
        prop_assert_eq!(&back, &f);
        if let Some((_, m)) = desk_marking(&f, seed) {
            prop_assert_eq!(read_marking(&write_marking(&m), f.n()).unwrap(), Some(m));
        }
    }

    #[test]
    fn partial_assignments_round_trip((f, lam) in pinned_formula(14, 4)) {
        prop_assert_eq!(read_partial(&write_partial(&lam), f.n()).unwrap(), lam);
    }

    #[test]
    fn classification_is_the_least_fixpoint(k in 3usize..=6, n in 10usize..200, alpha in 0.5f64..4.0, delta in 1u64..6, seed in any::<u64>()) {
        let f = generate_random(k, n, alpha, seed).unwrap();
        let p = ClassifierParams::with_delta(delta);
        prop_assert_eq!(classify(&f, &p), classify_naive(&f, &p));
    }

    #[test]
    fn markings_pass_verification(k in 3usize..=8, n in 10usize..120, alpha in 0.2f64..2.0, seed in any::<u64>()) {
        let f = generate_random(k, n, alpha, seed).unwrap();
        let cls = classify(&f, &ClassifierParams::with_delta(4));
        let p = MarkingParams { desk: true, seed, max_resample_rounds: 20_000, ..MarkingParams::default() };
        if let Ok((m, _)) = compute_marking_with_stats(&f, &cls, &p) {
            prop_assert!(verify_marking_with(&f, &cls, &m, p.thresholds(k)).ok);
            prop_assert_eq!(m.sizes().iter().sum::<usize>(), f.n());
            for v in cls.bad_vars() {
                prop_assert_eq!(m.role[v], Role::Control);
            }
        }
    }

    #[test]
    fn simplification_removes_pinned_literals((f, lam) in pinned_formula(14, 25)) {
        let sf = simplify(&f, &lam);
        let kept: Vec<usize> = sf.residuals.iter().map(|r| r.index).collect();
        for r in &sf.residuals {
            prop_assert!(r.literals.iter().all(|l| !lam.is_assigned(l.var())));
        }
        for c in 0..f.m() {
            if !kept.contains(&c) {
                prop_assert!(f.literals(c).iter().any(|l| lam.get(l.var()).is_some_and(|b| l.eval(b))));
            }
        }
        prop_assert_eq!(sf.free_vars, lam.unassigned().collect::<Vec<_>>());
    }

    #[test]
    fn components_partition_residual_clauses((f, lam) in pinned_formula(14, 25)) {
        let sf = simplify(&f, &lam);
        if let Ok(d) = decompose(&sf) {
            let mut seen: Vec<usize> = d.components.iter().flat_map(|c| c.clause_indices()).collect();
            seen.sort_unstable();
            let mut all: Vec<usize> = sf.residuals.iter().map(|r| r.index).collect();
            all.sort_unstable();
            prop_assert_eq!(seen, all);
            for comp in &d.components {
                let vars: Vec<Vec<usize>> = comp.clauses.iter().map(|c| c.vars()).collect();
                let mut edges = 0;
                for i in 0..vars.len() {
                    for j in i + 1..vars.len() {
                        edges += usize::from(vars[i].iter().any(|v| vars[j].contains(v)));
                    }
                }
                prop_assert_eq!(comp.tree_excess, edges + 1 - comp.len());
                prop_assert!(comp.cycle_vars.iter().all(|v| comp.vars.binary_search(v).is_ok()));
            }
        }
    }

    #[test]
    fn count_matches_brute_force((f, lam) in pinned_formula(16, 40)) {
        let c = count(&f, &lam).unwrap();
        prop_assert_eq!(&c, &brute_count(&f, &lam).unwrap());
        prop_assert!(c <= BigUint::one() << lam.unassigned().count());
    }

    #[test]
    fn counts_are_self_reducible((f, lam) in pinned_formula(16, 40), pick in any::<prop::sample::Index>()) {
        let free: Vec<usize> = lam.unassigned().collect();
        prop_assume!(!free.is_empty());
        let v = free[pick.index(free.len())];
        let mut lf = lam.clone();
        lf.set(v, false);
        let mut lt = lam.clone();
        lt.set(v, true);
        prop_assert_eq!(count(&f, &lam).unwrap(), count(&f, &lf).unwrap() + count(&f, &lt).unwrap());
    }

    #[test]
    fn sampler_law_is_the_conditional_uniform_law((f, lam) in pinned_formula(10, 20), take in 1usize..5) {
        prop_assume!(brute_count(&f, &lam).unwrap() > BigUint::zero());
        let s: Vec<usize> = lam.unassigned().take(take).collect();
        prop_assume!(!s.is_empty());
        let mut mass = BTreeMap::new();
        for (values, p) in sample_law(&f, &lam, &s, SampleCaps::default()).unwrap() {
            let key = values.iter().enumerate().fold(0u64, |acc, (i, &b)| acc | (u64::from(b) << i));
            *mass.entry(key).or_insert_with(BigRational::zero) += p;
        }
        let law = ExactDistribution::new(s.clone(), mass).unwrap();
        let target = uniform_satisfying(&f, &lam, &s).unwrap();
        prop_assert!(tv_exact(&law, &target).unwrap().is_zero());
    }

    #[test]
    fn sampling_is_deterministic_per_seed((f, lam) in pinned_formula(14, 20), seed in any::<u64>()) {
        prop_assume!(brute_count(&f, &lam).unwrap() > BigUint::zero());
        let s: Vec<usize> = lam.unassigned().collect();
        let a = sample_marginals(&f, &lam, &s, usize::MAX, &mut rng::seeded(seed)).unwrap();
        let b = sample_marginals(&f, &lam, &s, usize::MAX, &mut rng::seeded(seed)).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn tv_is_a_metric(p in weights(), q in weights(), r in weights()) {
        let (p, q, r) = (dist_of(p), dist_of(q), dist_of(r));
        let pq = tv_exact(&p, &q).unwrap();
        prop_assert_eq!(&pq, &tv_exact(&q, &p).unwrap());
        prop_assert!(pq >= BigRational::zero() && pq <= BigRational::one());
        prop_assert!(pq <= tv_exact(&p, &r).unwrap() + tv_exact(&r, &q).unwrap());
        let total: BigRational = p.masses().values().sum();
        prop_assert!(total.is_one());
    }

    #[test]
    fn influence_is_bounded_and_one_on_the_diagonal((f, lam) in pinned_formula(10, 16), pick in any::<prop::sample::Index>()) {
        let free: Vec<usize> = lam.unassigned().collect();
        prop_assume!(!free.is_empty());
        let u = free[pick.index(free.len())];
        if let Ok(d) = influence_exact_rational(&f, u, u, &lam) {
            prop_assert!(d.is_one());
            for v in 0..f.n() {
                let i = influence_exact_rational(&f, u, v, &lam).unwrap();
                prop_assert!(i >= -BigRational::one() && i <= BigRational::one());
            }
        }
    }

    #[test]
    fn bad_formula_count_is_exact(k in 3usize..=4, n in 6usize..14, alpha in 1.0f64..4.0, delta in 2u64..5, seed in any::<u64>()) {
        let f = generate_random(k, n, alpha, seed).unwrap();
        let cls = classify(&f, &ClassifierParams::with_delta(delta));
        let z0 = count_bad_formula(&f, &cls, 64).unwrap();
        let sub = f.subformula(&cls.bad_clauses());
        let brute = brute_count(&sub, &PartialAssignment::new(n)).unwrap();
        prop_assert_eq!(z0 << (n - cls.bad_var_count()), brute);
    }
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn chain_outputs_satisfy_and_replay(n in 8usize..14, alpha in 0.5f64..2.0, seed in any::<u64>()) {
        let f = generate_random(3, n, alpha, seed).unwrap();
        prop_assume!(satisfiable(&f));
        let Some((_, m)) = desk_marking(&f, seed) else { return Ok(()) };
        prop_assume!(m.sizes()[0] > 0);
        let cfg = GlauberConfig::desk(2.min(m.sizes()[0]), 20, 64, seed);
        let a = run(&f, &m, &cfg).unwrap();
        let b = run(&f, &m, &cfg).unwrap();
        prop_assert_eq!(&a.assignment, &b.assignment);
        prop_assert_eq!(a.report.max_component_per_step, b.report.max_component_per_step);
        if a.report.status == Status::Ok {
            prop_assert!(f.is_satisfied_by(a.assignment.as_ref().unwrap()));
        }
    }

    #[test]
    fn chain_state_lives_on_marked_variables(n in 8usize..14, alpha in 0.5f64..2.0, seed in any::<u64>()) {
        let f = generate_random(3, n, alpha, seed).unwrap();
        prop_assume!(satisfiable(&f));
        let Some((_, m)) = desk_marking(&f, seed) else { return Ok(()) };
        let mut r = rng::seeded(seed);
        let s0 = init_chain_with(&m, &mut r);
        prop_assert_eq!(&s0.vars, &m.marked());
        if let Ok(s1) = step(&f, &s0, 1, SampleCaps::default(), &mut r) {
            prop_assert_eq!(s1.vars, m.marked());
            prop_assert_eq!(s1.t, 1);
        }
    }

    #[test]
    fn block_dynamics_is_stationary(n in 8usize..12, alpha in 0.5f64..2.0, seed in any::<u64>()) {
        let f = generate_random(3, n, alpha, seed).unwrap();
        prop_assume!(satisfiable(&f));
        let Some((_, m)) = desk_marking(&f, seed) else { return Ok(()) };
        let vm = m.sizes()[0];
        prop_assume!((1..=8).contains(&vm));
        for rho in [1, 2.min(vm), vm] {
            let rep = stationarity_check(&f, &m, rho).unwrap();
            prop_assert!(rep.residual <= 1e-10, "ρ = {}: {}", rho, rep.residual);
        }
    }

    #[test]
    fn coupling_runs_satisfy_their_properties(n in 10usize..20, alpha in 0.5f64..1.5, seed in any::<u64>()) {
        let f = generate_random(4, n, alpha, seed).unwrap();
        prop_assume!(satisfiable(&f));
        let Some((cls, m)) = desk_marking(&f, seed) else { return Ok(()) };
        let marked = m.marked();
        prop_assume!(!marked.is_empty());
        let lam = PartialAssignment::new(n);
        let u = marked[seed as usize % marked.len()];
        if let Ok(run) = run_coupling(&f, &cls, &m, u, &lam, SampleCaps::default(), seed) {
            prop_assert!(check_properties(&f, &m, &lam, &run).all());
            prop_assert!(run.v_set.contains(&u));
            for &v in &run.v_set {
                prop_assert!(v == u || m.role[v] != Role::Control);
            }
            for &v in &run.v_d {
                prop_assert_ne!(run.xhat.get(v), run.yhat.get(v));
            }
        }
    }

    #[test]
    fn structure_histograms_match_component_counts(n in 30usize..80, seed in any::<u64>()) {
        let f = generate_random(4, n, 1.0, seed).unwrap();
        let set: Vec<usize> = (0..n).collect();
        let cfg = PinningConfig { rho: 1, law: PinningLaw::Uniform, draws: 5, seed, cap: 1_000 };
        let rep = pinning_experiment(&f, &set[..n / 2], &cfg, Exec::Sequential).unwrap();
        for s in &rep.stats {
            prop_assert_eq!(s.residual_histogram.values().sum::<u64>(), s.residual_components);
        }
        prop_assert_eq!(rep.residual_histogram.values().sum::<u64>(), rep.stats.iter().map(|s| s.residual_components).sum::<u64>());
    }

    #[test]
    fn reports_are_deterministic(k in 3usize..=6, n in 50usize..500, seeds in 1u64..6, base in any::<u32>()) {
        let grid = ExperimentGrid {
            experiment: Experiment::Linearity,
            ks: vec![k],
            ns: vec![n],
            alphas: vec![1.0, 2.0],
            seeds,
            base_seed: u64::from(base),
            output: None,
        };
        let a = run_linearity(&grid, Exec::Parallel).unwrap();
        let b = run_linearity(&grid, Exec::Sequential).unwrap();
        prop_assert_eq!(&a, &b);
        for row in &a.rows {
            prop_assert!(row.stats.max_intersection <= k);
        }
    }
}
