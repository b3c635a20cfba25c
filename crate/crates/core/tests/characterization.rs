use nipol_core::intransitive::{check_i_security, i_security_bounded_oracle, Budget, SubsetGuard};
use nipol_core::oracle::{
    generate_random_system, ipurge_equality_oracle, purge_equality_oracle, t_definition_oracle,
    GeneratorConfig,
};
use nipol_core::transitive::{check_t_security, t_security_pair_oracle};
use nipol_core::{System, Verdict};

const BOUND: usize = 6;

fn shortest(v: &Verdict) -> Option<usize> {
    v.flow_witness().map(|w| w.alpha.len())
}

/// Enumerating oracles only see witnesses up to their bound: the definition
/// oracle finds `α` with `|α| ≤ B`, the equality oracles compare `aα` with
/// `α`, so they need `|α| ≤ B - 1`.
fn agree(sys: &System, seed: u64, checker: &Verdict, definition: &Verdict, equality: &Verdict) {
    let len = shortest(checker);
    assert_eq!(checker.holds, len.is_none(), "seed {seed}");
    let in_def = len.is_some_and(|l| l <= BOUND);
    let in_eq = len.is_some_and(|l| l < BOUND);
    assert_eq!(
        !definition.holds,
        in_def,
        "seed {seed}: definition oracle\n{}",
        nipol_core::io::serialize(sys)
    );
    if in_def {
        assert_eq!(definition.witness, checker.witness, "seed {seed}: witness");
    }
    assert_eq!(
        !equality.holds,
        in_eq,
        "seed {seed}: equality oracle\n{}",
        nipol_core::io::serialize(sys)
    );
}

#[test]
fn transitive_characterizations_agree() {
    let b = Budget::DEFAULT;
    for seed in 0..1000 {
        let sys = generate_random_system(&GeneratorConfig::default().with_seed(seed));
        let checker = check_t_security(&sys);
        assert_eq!(
            t_security_pair_oracle(&sys).witness,
            checker.witness,
            "seed {seed}"
        );
        let definition = t_definition_oracle(&sys, BOUND, b).unwrap();
        let equality = purge_equality_oracle(&sys, BOUND, b).unwrap();
        agree(&sys, seed, &checker, &definition, &equality);
    }
}

#[test]
fn intransitive_characterizations_agree() {
    let b = Budget::DEFAULT;
    for seed in 0..1000 {
        let sys = generate_random_system(&GeneratorConfig::default().with_seed(seed));
        let checker = check_i_security(&sys, SubsetGuard::default()).unwrap();
        let definition = i_security_bounded_oracle(&sys, BOUND, b).unwrap();
        let equality = ipurge_equality_oracle(&sys, BOUND, b).unwrap();
        agree(&sys, seed, &checker, &definition, &equality);
    }
}

#[test]
fn bounded_oracle_complete_at_square_bound() {
    let cfg = GeneratorConfig {
        max_states: 3,
        max_actions: 2,
        ..GeneratorConfig::default()
    };
    for seed in 0..300 {
        let sys = generate_random_system(&cfg.with_seed(seed));
        let bound = sys.n_states() * sys.n_states();
        let checker = check_i_security(&sys, SubsetGuard::default()).unwrap();
        let oracle = i_security_bounded_oracle(&sys, bound, Budget::DEFAULT).unwrap();
        assert_eq!(oracle.witness, checker.witness, "seed {seed}");
        let t_oracle = t_definition_oracle(&sys, bound, Budget::DEFAULT).unwrap();
        assert_eq!(t_oracle.witness, check_t_security(&sys).witness, "seed {seed}");
    }
}
