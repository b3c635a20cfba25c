//! One line per acceptance criterion. Exits non-zero if any fails.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use nipol_cli::crosscheck::{self, Settings};
use nipol_cli::run_cli;
use nipol_core::intransitive::{
    bounded_oracle_cost, check_i_security, check_i_security_uniform, check_ip_security,
    find_intransitively_useless_edges, i_security_bounded_oracle, i_similarity, ipurge, ipurge_leslie,
    is_intransitively_uniform, normalize_i, Budget, SubsetGuard,
};
use nipol_core::oracle::{generate_random_system, i_similarity_oracle, GeneratorConfig};
use nipol_core::reduction::{brute_force_3coloring, generate_3col_system, has_hiding_path, Graph};
use nipol_core::transitive::{
    check_t_from_initial, check_t_security, find_useless_edges_t, is_uniform_t, normalize_t, purge,
};
use nipol_core::{fixtures, io, ActionId, AgentId, AnalysisError, LocalPolicy, PolicyEdge, StateId, System};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn cli(args: &[&str]) -> (i32, Value) {
    let o = run_cli(std::iter::once("nipol").chain(args.iter().copied()));
    let v = serde_json::from_str(&o.stdout).unwrap_or(Value::Null);
    (o.code, v)
}

fn fuzzed(seed: u64) -> System {
    generate_random_system(&GeneratorConfig::default().with_seed(seed))
}

fn flow(v: &Value) -> (String, String, String, String) {
    let w = &v["witness"];
    let s = |k: &str| w[k].as_str().unwrap_or("?").to_string();
    (s("agent"), s("state"), s("action"), s("alpha"))
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn criterion_1() -> Outcome {
    let expected = ("L".to_string(), "e".to_string(), "a".to_string(), "h".to_string());
    let mut slowest = Duration::ZERO;
    let mut step = |args: &[&str], code: i32| -> Result<Value, String> {
        let ((c, v), t) = timed(|| cli(args));
        slowest = slowest.max(t);
        ensure(t < Duration::from_secs(1), || format!("{args:?} took {t:?}"))?;
        ensure(c == code, || format!("{args:?} exited {c}, expected {code}"))?;
        Ok(v)
    };
    let t1 = step(&["check", "--mode", "t", &fixture("fig1.nipol")], 1)?;
    ensure(flow(&t1) == expected, || {
        format!("FIG1 t witness {:?}", flow(&t1))
    })?;
    let i1 = step(&["check", "--mode", "i", &fixture("fig1.nipol")], 1)?;
    ensure(flow(&i1) == expected, || {
        format!("FIG1 i witness {:?}", flow(&i1))
    })?;
    step(&["check", "--mode", "t", &fixture("fig2.nipol")], 0)?;
    step(&["check", "--mode", "i", &fixture("fig3.nipol")], 0)?;
    let u3 = step(&["uniform", "--mode", "i", &fixture("fig3.nipol")], 1)?;
    ensure(u3["result"]["verdict"] == "not uniform", || {
        "FIG3 uniformity".into()
    })?;
    step(&["check", "--mode", "t", &fixture("fig4.nipol")], 1)?;
    let (initial, t) = timed(|| check_t_from_initial(&fixtures::fig4()));
    slowest = slowest.max(t);
    ensure(matches!(initial, Err(AnalysisError::NonUniformPolicy(_))), || {
        format!("FIG4 initial-state check returned {initial:?}")
    })?;
    Ok(format!(
        "FIG1 t/i witness (L, e, a, \"h\"), FIG2 t-secure, FIG3 i-secure and not uniform, FIG4 t-insecure with NonUniformPolicy; slowest {slowest:?}"
    ))
}

fn labels(sys: &System, u: AgentId) -> Vec<StateId> {
    let p = i_similarity(sys, u, SubsetGuard::default()).unwrap();
    sys.states()
        .map(|s| p.classes().iter().find(|c| c.contains(&s)).unwrap()[0])
        .collect()
}

fn criterion_2() -> Outcome {
    let fig1 = fixtures::fig1();
    let edge = |sys: &System, s: &str, v: &str, u: &str| PolicyEdge {
        state: sys.state_by_name(s).unwrap(),
        from: sys.agent_by_name(v).unwrap(),
        to: sys.agent_by_name(u).unwrap(),
    };
    let expected = vec![edge(&fig1, "e", "H", "L"), edge(&fig1, "h", "H", "L")];
    ensure(find_useless_edges_t(&fig1) == expected, || {
        "FIG1 useless set".into()
    })?;
    ensure(
        check_t_security(&normalize_t(&fig1)).holds == check_t_security(&fig1).holds,
        || "normalize_t changed the FIG1 verdict".into(),
    )?;

    let fig3 = fixtures::fig3();
    let e = edge(&fig3, "h1", "H", "L");
    let useless = find_intransitively_useless_edges(&fig3, SubsetGuard::default()).unwrap();
    let computed = useless.contains(&e);
    let reduced = fig3.without_edge(e);
    let l = fig3.agent_by_name("L").unwrap();
    let oracle_useless = fig3.agents().all(|u| {
        i_similarity_oracle(&fig3, u, 8, Budget::DEFAULT).unwrap()
            == i_similarity_oracle(&reduced, u, 8, Budget::DEFAULT).unwrap()
    });
    ensure(computed == oracle_useless, || {
        "definitional and oracle uselessness differ".into()
    })?;
    ensure(
        labels(&fig3, l) == i_similarity_oracle(&fig3, l, 8, Budget::DEFAULT).unwrap(),
        || "i-similarity oracle mismatch".into(),
    )?;
    let before = i_security_bounded_oracle(&fig3, 10, Budget::DEFAULT)
        .unwrap()
        .holds;
    let after = i_security_bounded_oracle(&reduced, 10, Budget::DEFAULT)
        .unwrap()
        .holds;
    ensure(
        after == check_i_security(&reduced, SubsetGuard::default()).unwrap().holds,
        || "checker and oracle disagree after removal".into(),
    )?;
    let claim = if computed {
        "agrees with the published claim that H ⤳_h1 L is intransitively useless".to_string()
    } else {
        format!(
            "documented disagreement with the published claim: H ⤳_h1 L is not intransitively useless (L's classes change; oracle verdict {} before removal, {} after)",
            if before { "secure" } else { "insecure" },
            if after { "secure" } else { "insecure" }
        )
    };
    Ok(format!(
        "FIG1 useless set exact, normalize_t verdict kept; FIG3 {claim}"
    ))
}

fn criterion_3() -> Outcome {
    let settings = Settings {
        shape: GeneratorConfig::default(),
        bound: 6,
        budget: Budget::DEFAULT,
    };
    let (outcomes, t) = timed(|| crosscheck::run(&settings, 0..1000, 1));
    let bad: Vec<String> = outcomes
        .iter()
        .flat_map(|o| {
            o.disagreements
                .iter()
                .map(move |d| format!("seed {}: {d}", o.seed))
        })
        .collect();
    let skipped: usize = outcomes.iter().map(|o| o.skipped.len()).sum();
    ensure(bad.is_empty(), || bad.join("; "))?;
    ensure(skipped == 0, || format!("{skipped} oracle runs skipped"))?;
    ensure(t <= Duration::from_secs(60), || format!("took {t:?}"))?;
    let t_ins = outcomes.iter().filter(|o| o.t_insecure).count();
    let i_ins = outcomes.iter().filter(|o| o.i_insecure).count();
    Ok(format!(
        "1000 systems, 0 disagreements (t: {t_ins} insecure, i: {i_ins} insecure), {:.1}s",
        t.as_secs_f64()
    ))
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut n = 0;
    for seed in 0..1000 {
        let sys = fuzzed(seed);
        for _ in 0..100 {
            let len = rng.gen_range(0..=8);
            let alpha: Vec<ActionId> = (0..len)
                .map(|_| ActionId::from_index(rng.gen_range(0..sys.n_actions())))
                .collect();
            let u = AgentId::from_index(rng.gen_range(0..sys.n_agents()));
            let s = StateId::from_index(rng.gen_range(0..sys.n_states()));
            let p = purge(&sys, &alpha, u, s);
            ensure(purge(&sys, &p, u, s) == p, || format!("idempotence, seed {seed}"))?;
            let (head, tail) = alpha.split_at(rng.gen_range(0..=len));
            let ph = purge(&sys, head, u, s);
            let mut joined = ph.clone();
            joined.extend(purge(&sys, tail, u, sys.run(s, &ph)));
            ensure(joined == p, || format!("concatenation, seed {seed}"))?;
            n += 1;
        }
    }
    Ok(format!("{n} triples, |α| ≤ 8, 0 failures"))
}

fn sequences(n_actions: usize, max_len: usize) -> Vec<Vec<ActionId>> {
    let mut out = vec![Vec::new()];
    let mut layer: Vec<Vec<ActionId>> = vec![Vec::new()];
    for _ in 0..max_len {
        layer = layer
            .iter()
            .flat_map(|p| {
                (0..n_actions).map(move |b| {
                    let mut q = p.clone();
                    q.push(ActionId::from_index(b));
                    q
                })
            })
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}

fn criterion_5() -> Outcome {
    let (mut i_hits, mut t_hits) = (0, 0);
    for seed in 0..1000 {
        let sys = fuzzed(seed);
        if is_intransitively_uniform(&sys).holds {
            i_hits += 1;
            for alpha in sequences(sys.n_actions(), 6) {
                for u in sys.agents() {
                    for s in sys.states() {
                        ensure(
                            ipurge(&sys, &alpha, u, s) == ipurge_leslie(&sys, &alpha, u, s),
                            || format!("ipurge differs, seed {seed}"),
                        )?;
                    }
                }
            }
            let full = check_i_security(&sys, SubsetGuard::default()).unwrap().holds;
            let fast = check_i_security_uniform(&sys).map_err(|e| e.to_string())?.holds;
            ensure(full == fast, || format!("uniform i-check differs, seed {seed}"))?;
        }
        if is_uniform_t(&sys).holds {
            t_hits += 1;
            let init = check_t_from_initial(&sys).map_err(|e| e.to_string())?.holds;
            ensure(init == check_t_security(&sys).holds, || {
                format!("initial t-check differs, seed {seed}")
            })?;
        }
    }
    ensure(i_hits >= 50, || {
        format!("only {i_hits} intransitively uniform instances")
    })?;
    Ok(format!(
        "{i_hits} intransitively uniform and {t_hits} transitively uniform of 1000, 0 disagreements"
    ))
}

fn criterion_6() -> Outcome {
    let mut n = 0;
    for seed in 0..1000 {
        let sys = fuzzed(seed);
        ensure(
            check_t_security(&normalize_t(&sys)).holds == check_t_security(&sys).holds,
            || format!("normalize_t, seed {seed}"),
        )?;
        let guard = SubsetGuard::default();
        if guard.check(&sys).is_err() {
            continue;
        }
        let ni = normalize_i(&sys, guard).unwrap();
        ensure(
            check_i_security(&ni, guard).unwrap().holds == check_i_security(&sys, guard).unwrap().holds,
            || format!("normalize_i, seed {seed}"),
        )?;
        n += 1;
    }
    Ok(format!(
        "normalize_t on 1000 and normalize_i on {n} systems, 0 violations"
    ))
}

fn criterion_7() -> Outcome {
    let dir = std::env::temp_dir().join(format!("nipol-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let start = Instant::now();
    for (name, colorable) in [("single", true), ("k3", true), ("k4", false)] {
        let out = dir.join(format!("{name}.nipol"));
        let out = out.to_str().unwrap();
        let (code, _) = cli(&["gen-3col", &fixture(&format!("{name}.graph")), "-o", out]);
        ensure(code == 0, || format!("gen-3col {name} exited {code}"))?;
        let (code, report) = cli(&["check", "--mode", "i", out]);
        ensure(code == if colorable { 1 } else { 0 }, || {
            format!("check {name} exited {code}")
        })?;
        if !colorable {
            ensure(report["result"]["method"] == "hiding-path", || {
                format!("{name}: no fallback")
            })?;
        }
        let g = nipol_core::reduction::parse_graph(
            &std::fs::read_to_string(fixture(&format!("{name}.graph"))).unwrap(),
        )
        .unwrap();
        ensure(brute_force_3coloring(&g).unwrap().is_some() == colorable, || {
            format!("{name} brute force")
        })?;
    }
    let fixed = start.elapsed();
    ensure(fixed <= Duration::from_secs(30), || {
        format!("fixtures took {fixed:?}")
    })?;
    let mut colorable = 0;
    for seed in 0..50 {
        let g = Graph::random(6, 0.9, seed);
        let c = brute_force_3coloring(&g).unwrap();
        let p = has_hiding_path(&generate_3col_system(&g)).map_err(|e| e.to_string())?;
        ensure(c.is_some() == p.is_some(), || format!("graph seed {seed}"))?;
        colorable += usize::from(c.is_some());
    }
    Ok(format!(
        "single/K3 insecure, K4 secure via hiding-path ({:.2}s); 50 random graphs ({colorable} colorable), 0 disagreements",
        fixed.as_secs_f64()
    ))
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut exact = 0;
    for seed in 0..200 {
        let base = fuzzed(seed);
        let n = base.n_agents();
        let mut policy = LocalPolicy::reflexive(n);
        for a in base.agents() {
            for b in base.agents() {
                if a != b && rng.gen_bool(0.4) {
                    policy.add_edge(a, b);
                }
            }
        }
        let sys = base.with_global_policy(policy);
        let ip = check_ip_security(&sys).map_err(|e| e.to_string())?;
        let i = check_i_security(&sys, SubsetGuard::default()).unwrap();
        ensure(ip.holds == i.holds, || format!("ip vs i, seed {seed}"))?;
        let square = sys.n_states() * sys.n_states();
        let bound = Budget::DEFAULT
            .largest_feasible(|b| bounded_oracle_cost(&sys, b))
            .unwrap_or(0)
            .min(square);
        let oracle = i_security_bounded_oracle(&sys, bound, Budget::DEFAULT).unwrap();
        if bound == square {
            exact += 1;
            ensure(oracle.holds == i.holds, || format!("oracle, seed {seed}"))?;
        } else {
            ensure(oracle.holds || !i.holds, || {
                format!("unsound oracle, seed {seed}")
            })?;
        }
    }
    Ok(format!("200 global-policy systems, 0 disagreements ({exact} with oracle at |S|², rest at the largest feasible bound)"))
}

fn criterion_9() -> Outcome {
    for sys in fixtures::all() {
        let text = io::serialize(&sys);
        ensure(io::parse(&text).map(|v| v.system) == Ok(sys.clone()), || {
            "fixture round trip".into()
        })?;
    }
    for seed in 0..1000 {
        let sys = fuzzed(seed);
        let text = io::serialize(&sys);
        let back = io::parse(&text).map_err(|e| e.to_string())?.system;
        ensure(back == sys && io::serialize(&back) == text, || {
            format!("round trip, seed {seed}")
        })?;
    }
    let mut runs = 0;
    for f in [
        "fig1.nipol",
        "fig2.nipol",
        "fig3.nipol",
        "fig4.nipol",
        "global_dg.nipol",
    ] {
        let path = fixture(f);
        for args in [
            vec!["check", "--mode", "t", &path],
            vec!["check", "--mode", "i", &path],
            vec!["oracle", "--mode", "i", "--bound", "6", &path],
            vec!["useless", "--mode", "i", &path],
            vec!["uniform", "--mode", "i", &path],
            vec!["export-dot", "--annotate", "useless-t,useless-i", &path],
        ] {
            let a = run_cli(std::iter::once("nipol").chain(args.iter().copied()));
            let b = run_cli(std::iter::once("nipol").chain(args.iter().copied()));
            ensure(a == b, || format!("{args:?} not deterministic"))?;
            runs += 1;
        }
    }
    Ok(format!(
        "7 fixtures and 1000 fuzzed systems round-trip; {runs} repeated CLI runs byte-identical"
    ))
}

fn main() {
    let criteria: [(u8, fn() -> Outcome); 9] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
    ];
    let mut failed = 0;
    for (n, f) in criteria {
        match f() {
            Ok(detail) => println!("criterion {n}: PASS: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n}: FAIL: {detail}");
            }
        }
    }
    println!("{} of 9 criteria passed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
