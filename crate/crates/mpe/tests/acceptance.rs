//! Release gate. Prints one PASS/FAIL line per criterion and exits non-zero
//! if any criterion fails.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use mpe::parse_network;
use mpe_core::factoring::{build_factoring, Plan};
use mpe_core::map::sums_precede_maxes;
use mpe_core::network::apply_evidence;
use mpe_core::oracle::{oracle_map, oracle_map_ranked, oracle_top_l};
use mpe_core::random::{random_evidence, random_network, random_polytree, random_query, NetworkShape};
use mpe_core::{find_l_mpe, find_map, find_mpe, Assignment, Engine, Evidence, Network, Space, Strategy};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FIG1: &str = include_str!("../fixtures/fig1.json");

type Outcome = Result<String, String>;
/// (assignment, probability) sequences, kept for the log-space comparison.
type Runs = Vec<Vec<(Assignment, f64)>>;

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs())
}

fn engine(space: Space) -> Engine {
    Engine::with_space(space)
}

fn fig1() -> Network {
    parse_network(FIG1).expect("fixture parses")
}

fn reference_plan() -> Strategy {
    use Plan as P;
    Strategy::Explicit(P::product(
        P::product(P::product(P::leaf(0), P::leaf(2)), P::product(P::leaf(1), P::leaf(3))),
        P::product(P::leaf(4), P::leaf(5)),
    ))
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fig1_golden(space: Space) -> Outcome {
    let start = Instant::now();
    let net = fig1();
    let (r, trace) = find_mpe(&net, &Evidence::new(), &reference_plan(), engine(space)).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let d = trace.root().before_reduction();
    ensure(d.scope() == [2, 3], || format!("final table over {:?}", d.scope()))?;
    let expected = [
        ([1, 1], 0.0224, [1, 0, 1, 0]),
        ([1, 0], 0.0753, [0, 0, 1, 1]),
        ([0, 1], 0.0403, [0, 1, 1, 0]),
        ([0, 0], 0.1537, [0, 0, 0, 1]),
    ];
    for (cd, value, tb) in expected {
        let i = d.index_of(&cd);
        let got = space.to_prob(d.value(i));
        ensure((got - value).abs() <= 5e-5, || format!("d(c={},d={}) = {got}", cd[0], cd[1]))?;
        let want = Assignment::from_pairs([(0, tb[0]), (1, tb[1]), (4, tb[2]), (5, tb[3])]);
        ensure(d.traceback(i) == want, || format!("d(c={},d={}) traceback {:?}", cd[0], cd[1], d.traceback(i)))?;
    }
    ensure((r.probability - 0.153664).abs() <= 1e-12, || format!("MPE value {}", r.probability))?;
    let mpe = Assignment::from_pairs([(0, 0), (1, 0), (2, 0), (3, 0), (4, 0), (5, 1)]);
    ensure(r.assignment == mpe, || format!("MPE {:?}", r.assignment))?;
    ensure(elapsed < Duration::from_millis(10), || format!("took {elapsed:?}"))?;
    Ok(format!("D(c,d) and tracebacks match, MPE {:.6}, {elapsed:?}", r.probability))
}

fn step1_reduction() -> Outcome {
    let net = fig1();
    let f = net.cpt_factor(net.cpt(5), Space::Linear).reduce_max(&[5]).map_err(|e| e.to_string())?;
    ensure(f.scope() == [3], || format!("scope {:?}", f.scope()))?;
    ensure(f.value(0) == 0.7 && f.traceback(0) == Assignment::from_pairs([(5, 1)]), || "d=0 entry".into())?;
    ensure(f.value(1) == 0.8 && f.traceback(1) == Assignment::from_pairs([(5, 0)]), || "d=1 entry".into())?;
    Ok("d=0: 0.7 with f=1; d=1: 0.8 with f=0".into())
}

fn random_mpe(space: Space) -> (Outcome, Runs) {
    let start = Instant::now();
    let mut runs = Vec::new();
    let mut unique = 0;
    let mut run = || -> Result<(), String> {
        for seed in 0..200u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.random_range(1..=12);
            let net = random_network(&mut rng, NetworkShape { variables: n, max_cardinality: 3, max_parents: 3 });
            let top = oracle_top_l(&net, &Evidence::new(), 2).map_err(|e| e.to_string())?;
            let is_unique = top.len() < 2 || !close(top[0].1, top[1].1, 1e-9);
            unique += is_unique as usize;
            for s in Strategy::builtin() {
                let (r, _) =
                    find_mpe(&net, &Evidence::new(), &s, engine(space)).map_err(|e| format!("seed {seed} {s}: {e}"))?;
                ensure(close(r.probability, top[0].1, 1e-9), || {
                    format!("seed {seed} {s}: {} vs {}", r.probability, top[0].1)
                })?;
                ensure(!is_unique || r.assignment == top[0].0, || format!("seed {seed} {s}: argmax differs"))?;
                runs.push(vec![(r.assignment, r.probability)]);
            }
        }
        Ok(())
    };
    let outcome = run().and_then(|()| {
        let elapsed = start.elapsed();
        ensure(elapsed < Duration::from_secs(30), || format!("took {elapsed:?}"))?;
        Ok(format!("200 networks x 4 strategies agree with the oracle ({unique} unique argmax), {elapsed:.2?}"))
    });
    (outcome, runs)
}

fn fig1_kbest(space: Space, worst_visits: &mut (usize, usize)) -> (Outcome, Runs) {
    let net = fig1();
    let mut run = || -> Result<(String, Vec<(Assignment, f64)>), String> {
        let k =
            find_l_mpe(&net, &Evidence::new(), 64, &Strategy::MinDegree, engine(space)).map_err(|e| e.to_string())?;
        let ex = &k.explanations;
        for e in ex {
            track(worst_visits, e.visits, 2 * net.len() - 1);
        }
        ensure(ex.len() == 64 && k.exhausted, || format!("{} results", ex.len()))?;
        let distinct: BTreeSet<_> = ex.iter().map(|e| &e.assignment).collect();
        ensure(distinct.len() == 64, || "duplicate assignments".into())?;
        ensure(ex.windows(2).all(|w| w[0].probability >= w[1].probability * (1.0 - 1e-12)), || {
            "not non-increasing".into()
        })?;
        let total: f64 = ex.iter().map(|e| e.probability).sum();
        ensure((total - 1.0).abs() <= 1e-9, || format!("sum {total}"))?;
        let oracle = oracle_top_l(&net, &Evidence::new(), 64).map_err(|e| e.to_string())?;
        for (e, (a, p)) in ex.iter().zip(&oracle) {
            ensure(close(e.probability, *p, 1e-9) && &e.assignment == a, || {
                format!("rank {} differs from the oracle", e.rank)
            })?;
        }
        ensure((ex[1].probability - 0.075264).abs() <= 1e-12, || format!("second {}", ex[1].probability))?;
        Ok((
            format!("64 distinct, non-increasing, sum {total:.12}, second {:.6}", ex[1].probability),
            ex.iter().map(|e| (e.assignment.clone(), e.probability)).collect(),
        ))
    };
    match run() {
        Ok((msg, seq)) => (Ok(msg), vec![seq]),
        Err(e) => (Err(e), Vec::new()),
    }
}

fn track(worst: &mut (usize, usize), visits: usize, bound: usize) {
    if visits as f64 / bound.max(1) as f64 >= worst.0 as f64 / worst.1.max(1) as f64 {
        *worst = (visits, bound);
    }
}

fn visit_bound(worst: &mut (usize, usize)) -> Outcome {
    let mut calls = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let n = rng.random_range(1..=10);
        let net = random_network(&mut rng, NetworkShape { variables: n, max_cardinality: 3, max_parents: 3 });
        let ev = random_evidence(&mut rng, &net, 0.2);
        if ev.len() == n {
            continue;
        }
        let bound = 2 * (n - ev.len()) - 1;
        let k = find_l_mpe(&net, &ev, 200, &Strategy::MinFill, Engine::default()).map_err(|e| e.to_string())?;
        for e in &k.explanations {
            calls += 1;
            track(worst, e.visits, bound);
            ensure(e.visits <= bound, || format!("seed {seed}: {} visits, bound {bound}", e.visits))?;
        }
        if let Some(q) = random_query(&mut rng, &net, &ev) {
            let bound = 2 * q.len() - 1;
            let k = mpe_core::find_l_map(&net, &ev, &q, 50, &Strategy::MinDegree, Engine::default())
                .map_err(|e| e.to_string())?;
            for e in &k.explanations {
                calls += 1;
                track(worst, e.visits, bound);
                ensure(e.visits <= bound, || format!("seed {seed} (subset): {} visits, bound {bound}", e.visits))?;
            }
        }
    }
    ensure(worst.0 <= worst.1, || format!("{} visits against a bound of {}", worst.0, worst.1))?;
    Ok(format!("{calls} calls, tightest {} of {}", worst.0, worst.1))
}

fn map_queries(space: Space) -> (Outcome, Runs) {
    let mut runs = Vec::new();
    let mut run = || -> Result<String, String> {
        for seed in 0..100u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(5000 + seed);
            let n = rng.random_range(1..=10);
            let net = random_network(&mut rng, NetworkShape { variables: n, max_cardinality: 3, max_parents: 3 });
            let mut ev = random_evidence(&mut rng, &net, 0.25);
            let q = match random_query(&mut rng, &net, &ev) {
                Some(q) => q,
                None => {
                    ev = Evidence::new();
                    random_query(&mut rng, &net, &ev).expect("non-empty network")
                }
            };
            let ranked = oracle_map_ranked(&net, &ev, &q).map_err(|e| e.to_string())?;
            let unique = ranked.len() < 2 || !close(ranked[0].1, ranked[1].1, 1e-9);
            let (r, trace) = find_map(&net, &ev, &q, &Strategy::MinDegree, engine(space))
                .map_err(|e| format!("seed {seed}: {e}"))?;
            ensure(close(r.probability, ranked[0].1, 1e-9), || {
                format!("seed {seed}: {} vs {}", r.probability, ranked[0].1)
            })?;
            ensure(!unique || r.assignment == ranked[0].0, || format!("seed {seed}: argmax differs"))?;
            ensure(sums_precede_maxes(&trace), || format!("seed {seed}: a maximization preceded a pending sum"))?;
            runs.push(vec![(r.assignment, r.probability)]);
        }
        let net = fig1();
        let query = BTreeSet::from([2, 3, 4]);
        use Plan as P;
        let plan =
            P::product(P::product(P::product(P::leaf(0), P::leaf(2)), P::product(P::leaf(1), P::leaf(3))), P::leaf(4));
        let (r, trace) = find_map(&net, &Evidence::new(), &query, &Strategy::Explicit(plan), engine(space))
            .map_err(|e| e.to_string())?;
        let leaf = |i: usize| {
            let cpt = &net.cpts()[r.tables[i]];
            let name = |v: usize| net.variable(v).name.clone();
            if cpt.parents.is_empty() {
                format!("p({})", name(cpt.child))
            } else {
                format!("p({}|{})", name(cpt.child), cpt.parents.iter().map(|&p| name(p)).collect::<Vec<_>>().join(","))
            }
        };
        let shape = trace.tree().render(&leaf, &|v| net.variable(v).name.clone());
        let want = "max{c,d}(sum{a}((p(a) * p(c|a)) * sum{b}(p(b) * p(d|a,b))) * max{e}(p(e|c,d)))";
        ensure(shape == want, || format!("shape {shape}"))?;
        let (oa, op) = oracle_map(&net, &Evidence::new(), &query).map_err(|e| e.to_string())?;
        ensure(r.assignment == oa && close(r.probability, op, 1e-9), || {
            format!("six-variable example subset answer {}", r.probability)
        })?;
        ensure(sums_precede_maxes(&trace), || "six-variable example ordering".into())?;
        runs.push(vec![(r.assignment, r.probability)]);
        Ok(format!(
            "100 random subset queries agree with the oracle; six-variable example shape {shape} = {:.5}",
            r.probability
        ))
    };
    (run(), runs)
}

fn polytrees() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut largest = 0;
    for k in 0..50 {
        let n = rng.random_range(1..=40);
        let max_parents = rng.random_range(1..=3);
        let net = random_polytree(&mut rng, n, 3, max_parents);
        let factors = apply_evidence(&net, &Evidence::new(), Space::Linear).map_err(|e| e.to_string())?;
        let tree = build_factoring(&factors, &(0..n).collect(), &Strategy::MinDegree).map_err(|e| e.to_string())?;
        let (dim, fam) = (tree.predict_max_dimensionality(), net.max_family_size());
        ensure(dim == fam, || format!("polytree {k}: dimensionality {dim}, largest family {fam}"))?;
        largest = largest.max(fam);
    }
    Ok(format!("50 polytrees, max dimensionality = largest family (up to {largest})"))
}

fn same_runs(lin: &Runs, log: &Runs) -> Result<(), String> {
    ensure(lin.len() == log.len(), || "different number of runs".into())?;
    for (i, (a, b)) in lin.iter().zip(log).enumerate() {
        ensure(a.len() == b.len(), || format!("run {i}: lengths differ"))?;
        for ((x, p), (y, q)) in a.iter().zip(b) {
            ensure(x == y, || format!("run {i}: argmax sequences differ"))?;
            ensure(close(*p, *q, 1e-9), || format!("run {i}: {p} vs {q}"))?;
        }
    }
    Ok(())
}

fn main() {
    let mut failed = 0;
    let mut report = |n: usize, name: &str, outcome: Outcome| match outcome {
        Ok(detail) => println!("PASS criterion {n}: {name} ({detail})"),
        Err(reason) => {
            failed += 1;
            println!("FAIL criterion {n}: {name} ({reason})");
        }
    };
    let mut worst = (0, 1);

    report(1, "six-variable example golden", fig1_golden(Space::Linear));
    report(2, "step-1 reduction golden", step1_reduction());
    let (c3, lin3) = random_mpe(Space::Linear);
    report(3, "oracle equivalence (MPE)", c3);
    let (c4, lin4) = fig1_kbest(Space::Linear, &mut worst);
    report(4, "k-best completeness", c4);
    let (c6, lin6) = map_queries(Space::Linear);
    let (log6_outcome, log6) = map_queries(Space::Log);
    let (log4_outcome, log4) = fig1_kbest(Space::Log, &mut worst);
    report(5, "linear next-MPE bound", visit_bound(&mut worst));
    report(6, "subset-query correctness", c6);
    report(7, "polytree cost", polytrees());

    let (log3_outcome, log3) = random_mpe(Space::Log);
    let log = (|| -> Outcome {
        fig1_golden(Space::Log).map_err(|e| format!("criterion 1: {e}"))?;
        log3_outcome.map_err(|e| format!("criterion 3: {e}"))?;
        same_runs(&lin3, &log3).map_err(|e| format!("criterion 3: {e}"))?;
        log4_outcome.map_err(|e| format!("criterion 4: {e}"))?;
        same_runs(&lin4, &log4).map_err(|e| format!("criterion 4: {e}"))?;
        log6_outcome.map_err(|e| format!("criterion 6: {e}"))?;
        same_runs(&lin6, &log6).map_err(|e| format!("criterion 6: {e}"))?;
        Ok("criteria 1, 3, 4, 6 rerun with identical argmax sequences".into())
    })();
    report(8, "log-space equivalence", log);

    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
