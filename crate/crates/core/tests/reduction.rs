use std::time::Instant;

use nipol_core::intransitive::{check_i_security, sources, SubsetGuard};
use nipol_core::reduction::{
    brute_force_3coloring, expected_agent_count, expected_state_count, generate_3col_system, has_hiding_path,
    parse_graph, Graph,
};
use nipol_core::{fixtures, io, validate};

#[test]
fn hiding_path_iff_colorable_on_random_graphs() {
    let mut colorable = 0;
    for seed in 0..50 {
        let g = Graph::random(6, 0.9, seed);
        let sys = generate_3col_system(&g);
        assert_eq!(sys.n_states(), expected_state_count(&g));
        assert_eq!(sys.n_agents(), expected_agent_count(&g));
        let coloring = brute_force_3coloring(&g).unwrap();
        let path = has_hiding_path(&sys).unwrap();
        assert_eq!(coloring.is_some(), path.is_some(), "seed {seed}: {g:?}");
        if let Some(p) = path {
            colorable += 1;
            assert!(g.is_proper_coloring(&p.coloring), "seed {seed}");
            assert_eq!(sys.state_name(sys.run(sys.initial(), &p.path)), "last");
            let l = sys.agent_by_name("L").unwrap();
            let h = sys.agent_by_name("h").unwrap();
            assert!(!sources(&sys, &p.path, l, sys.initial()).contains(h));
        }
        if g.vertices().len() <= 3 {
            let v = check_i_security(&sys, SubsetGuard::default()).unwrap();
            assert_eq!(v.holds, coloring.is_none(), "seed {seed}");
        }
    }
    assert!(colorable > 0 && colorable < 50, "{colorable} colorable");
}

#[test]
fn fixture_graphs() {
    let start = Instant::now();
    for (text, colorable) in [
        (fixtures::GRAPH_SINGLE, true),
        (fixtures::GRAPH_K3, true),
        (fixtures::GRAPH_K4, false),
    ] {
        let g = parse_graph(text).unwrap();
        let sys = generate_3col_system(&g);
        assert!(validate(&sys.to_raw()).unwrap().warnings.is_empty());
        assert_eq!(io::parse(&io::serialize(&sys)).unwrap().system, sys);
        assert_eq!(brute_force_3coloring(&g).unwrap().is_some(), colorable);
        assert_eq!(has_hiding_path(&sys).unwrap().is_some(), colorable);
    }
    assert!(start.elapsed().as_secs() < 30);
}

#[test]
fn generation_is_deterministic() {
    let g = parse_graph(fixtures::GRAPH_K4).unwrap();
    assert_eq!(
        io::serialize(&generate_3col_system(&g)),
        io::serialize(&generate_3col_system(&g))
    );
    assert_eq!(Graph::random(6, 0.5, 3), Graph::random(6, 0.5, 3));
}
