//! Brute-force reference checks and a random system generator.
//!
//! Nothing here reuses the analysis modules: purge, sources and ipurge are
//! re-implemented as literal recursions over the definitions.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::budget::Budget;
use crate::error::AnalysisError;
use crate::model::{ActionId, AgentId, AgentSet, RawSystem, StateId, System};
use crate::verdict::{EquivalenceWitness, FlowWitness, Property, Stats, Verdict, Witness};

fn purge_rec(sys: &System, alpha: &[ActionId], u: AgentId, s: StateId) -> Vec<ActionId> {
    match alpha.split_first() {
        None => Vec::new(),
        Some((&a, rest)) => {
            if sys.policy(s).allows(sys.dom(a), u) {
                let mut out = vec![a];
                out.extend(purge_rec(sys, rest, u, sys.step(s, a)));
                out
            } else {
                purge_rec(sys, rest, u, s)
            }
        }
    }
}

fn sources_rec(sys: &System, alpha: &[ActionId], u: AgentId, s: StateId) -> AgentSet {
    match alpha.split_first() {
        None => AgentSet::singleton(u),
        Some((&a, rest)) => {
            let mut inner = sources_rec(sys, rest, u, sys.step(s, a));
            if inner.iter().any(|v| sys.policy(s).allows(sys.dom(a), v)) {
                inner.insert(sys.dom(a));
            }
            inner
        }
    }
}

fn ipurge_rec(sys: &System, alpha: &[ActionId], u: AgentId, s: StateId) -> Vec<ActionId> {
    match alpha.split_first() {
        None => Vec::new(),
        Some((&a, rest)) => {
            if sources_rec(sys, alpha, u, s).contains(sys.dom(a)) {
                let mut out = vec![a];
                out.extend(ipurge_rec(sys, rest, u, sys.step(s, a)));
                out
            } else {
                ipurge_rec(sys, rest, u, s)
            }
        }
    }
}

/// Number of action sequences of length at most `bound`.
fn sequences_up_to(n_actions: usize, bound: usize) -> u128 {
    let m = n_actions as u128;
    let mut layer = 1u128;
    let mut total = 0u128;
    for _ in 0..=bound {
        total = total.saturating_add(layer);
        layer = layer.saturating_mul(m);
    }
    total
}

/// All sequences of length at most `bound`, shortest first, then in
/// lexicographic order.
fn shortlex(n_actions: usize, bound: usize) -> impl Iterator<Item = Vec<ActionId>> {
    let mut layer: Vec<Vec<ActionId>> = vec![Vec::new()];
    let mut len = 0;
    std::iter::from_fn(move || {
        if layer.is_empty() {
            return None;
        }
        let out = std::mem::take(&mut layer);
        if len < bound && n_actions > 0 {
            layer = out
                .iter()
                .flat_map(|p| {
                    (0..n_actions).map(move |b| {
                        let mut q = p.clone();
                        q.push(ActionId::from_index(b));
                        q
                    })
                })
                .collect();
        }
        len += 1;
        Some(out)
    })
    .flatten()
}

fn t_definition_cost(sys: &System, bound: usize) -> u128 {
    sequences_up_to(sys.n_actions(), bound)
        .saturating_mul(sys.n_states() as u128)
        .saturating_mul(sys.n_actions() as u128)
}

struct DefinitionSearch<'a> {
    sys: &'a System,
    bound: usize,
    best: Option<FlowWitness>,
    evaluations: u64,
    alpha: Vec<ActionId>,
}

impl DefinitionSearch<'_> {
    fn visit(&mut self, s: StateId, a: ActionId, hidden: AgentSet) {
        if self
            .best
            .as_ref()
            .is_some_and(|b| self.alpha.len() >= b.alpha.len())
        {
            return;
        }
        self.evaluations += 1;
        let with = self.sys.run(s, &[&[a][..], &self.alpha].concat());
        let without = self.sys.run(s, &self.alpha);
        if let Some(u) = hidden
            .iter()
            .find(|&u| self.sys.obs(with, u) != self.sys.obs(without, u))
        {
            self.best = Some(FlowWitness::new(self.sys, u, s, a, self.alpha.clone()));
            return;
        }
        if self.alpha.len() == self.bound {
            return;
        }
        for b in self.sys.actions() {
            self.alpha.push(b);
            self.visit(s, a, hidden);
            self.alpha.pop();
        }
    }
}

/// Definition of t-security by enumeration: for every `u`, `s`, `a` with
/// `dom(a)` not allowed to interfere with `u` in `s`, and every `α` with
/// `|α| ≤ bound`, compares `obs_u(s·aα)` with `obs_u(s·α)`.
pub fn t_definition_oracle(sys: &System, bound: usize, budget: Budget) -> Result<Verdict, AnalysisError> {
    budget.admit(bound, |b| t_definition_cost(sys, b))?;
    let mut search = DefinitionSearch {
        sys,
        bound,
        best: None,
        evaluations: 0,
        alpha: Vec::new(),
    };
    for s in sys.states() {
        for a in sys.actions() {
            let hidden: AgentSet = sys
                .agents()
                .filter(|&u| !sys.policy(s).allows(sys.dom(a), u))
                .collect();
            if !hidden.is_empty() {
                search.visit(s, a, hidden);
            }
        }
    }
    let stats = Stats {
        evaluations: search.evaluations,
        ..Stats::default()
    };
    Ok(match search.best {
        Some(w) => Verdict::violated(Property::TSecurity, Witness::Flow(w), stats),
        None => Verdict::holds(Property::TSecurity, stats),
    })
}

fn equality_cost(sys: &System, bound: usize) -> u128 {
    sequences_up_to(sys.n_actions(), bound)
        .saturating_mul(sys.n_states() as u128)
        .saturating_mul(sys.n_agents() as u128)
}

type PurgeFn = fn(&System, &[ActionId], AgentId, StateId) -> Vec<ActionId>;

fn equality_oracle(
    sys: &System,
    bound: usize,
    budget: Budget,
    property: Property,
    purge: PurgeFn,
) -> Result<Verdict, AnalysisError> {
    budget.admit(bound, |b| equality_cost(sys, b))?;
    let mut stats = Stats::default();
    for s in sys.states() {
        for u in sys.agents() {
            let mut groups: HashMap<Vec<ActionId>, Vec<ActionId>> = HashMap::new();
            for alpha in shortlex(sys.n_actions(), bound) {
                stats.evaluations += 1;
                let key = purge(sys, &alpha, u, s);
                match groups.get(&key) {
                    None => {
                        groups.insert(key, alpha);
                    }
                    Some(first) => {
                        let (x, y) = (sys.run(s, first), sys.run(s, &alpha));
                        if sys.obs(x, u) != sys.obs(y, u) {
                            let w = EquivalenceWitness {
                                agent: u,
                                state: s,
                                alpha: first.clone(),
                                beta: alpha,
                                obs_alpha: sys.obs(x, u).to_string(),
                                obs_beta: sys.obs(y, u).to_string(),
                            };
                            return Ok(Verdict::violated(property, Witness::Equivalence(w), stats));
                        }
                    }
                }
            }
        }
    }
    Ok(Verdict::holds(property, stats))
}

/// Sequences of length at most `bound` with equal purge from the same state
/// must yield equal observations.
pub fn purge_equality_oracle(sys: &System, bound: usize, budget: Budget) -> Result<Verdict, AnalysisError> {
    equality_oracle(sys, bound, budget, Property::PurgeEquality, purge_rec)
}

/// As [`purge_equality_oracle`] with the intransitive purge.
pub fn ipurge_equality_oracle(sys: &System, bound: usize, budget: Budget) -> Result<Verdict, AnalysisError> {
    equality_oracle(sys, bound, budget, Property::IpurgeEquality, ipurge_rec)
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while parent[r] != r {
        r = parent[r];
    }
    parent[x] = r;
    r
}

/// i-similarity for `u` generated by the pairs `(s·aα, s·α)` with
/// `dom(a) ∉ sources(aα, u, s)` and `|α| < bound`. Returns, per state, the
/// smallest state of its class. Exact once `bound` reaches `|S|²`.
pub fn i_similarity_oracle(
    sys: &System,
    u: AgentId,
    bound: usize,
    budget: Budget,
) -> Result<Vec<StateId>, AnalysisError> {
    budget.admit(bound, |b| t_definition_cost(sys, b))?;
    let mut parent: Vec<usize> = (0..sys.n_states()).collect();
    for s in sys.states() {
        for a in sys.actions() {
            for alpha in shortlex(sys.n_actions(), bound.saturating_sub(1)) {
                let mut full = vec![a];
                full.extend_from_slice(&alpha);
                if !sources_rec(sys, &full, u, s).contains(sys.dom(a)) {
                    let x = find(&mut parent, sys.run(s, &full).index());
                    let y = find(&mut parent, sys.run(s, &alpha).index());
                    let (lo, hi) = (x.min(y), x.max(y));
                    parent[hi] = lo;
                }
            }
        }
    }
    Ok((0..sys.n_states())
        .map(|x| StateId::from_index(find(&mut parent, x)))
        .collect())
}

/// Shape of randomly generated systems. Counts are drawn uniformly from
/// `1..=max`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeneratorConfig {
    pub max_states: usize,
    pub max_actions: usize,
    pub max_agents: usize,
    pub edge_density: f64,
    pub obs_alphabet_size: usize,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            max_states: 6,
            max_actions: 4,
            max_agents: 3,
            edge_density: 0.4,
            obs_alphabet_size: 2,
            seed: 0,
        }
    }
}

impl GeneratorConfig {
    pub fn with_seed(self, seed: u64) -> Self {
        GeneratorConfig { seed, ..self }
    }

    fn assert_valid(&self) {
        assert!(self.max_states >= 1 && self.max_actions >= 1 && self.max_agents >= 1);
        assert!(self.obs_alphabet_size >= 1);
        assert!(
            (0.0..=1.0).contains(&self.edge_density),
            "edge density out of range"
        );
        assert!(self.max_agents <= crate::model::MAX_AGENTS);
    }
}

/// A random system, deterministic in the configuration. Every state is
/// reachable: each state after the first is entered from an earlier one
/// through a dedicated transition.
pub fn generate_random_system(cfg: &GeneratorConfig) -> System {
    cfg.assert_valid();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n_states = rng.gen_range(1..=cfg.max_states);
    let n_actions = rng.gen_range(1..=cfg.max_actions);
    let n_agents = rng.gen_range(1..=cfg.max_agents);
    let agent = |i: usize| format!("D{i}");
    let action = |i: usize| format!("a{i}");
    let state = |i: usize| format!("s{i}");

    let mut raw = RawSystem::new();
    for d in 0..n_agents {
        raw.agent(&agent(d));
    }
    for a in 0..n_actions {
        raw.action(&action(a), &agent(rng.gen_range(0..n_agents)));
    }
    raw.init_state(&state(0));
    for s in 1..n_states {
        raw.state(&state(s));
    }

    let mut target: Vec<Option<usize>> = vec![None; n_states * n_actions];
    for s in 1..n_states {
        let free: Vec<usize> = (0..s * n_actions).filter(|&i| target[i].is_none()).collect();
        target[free[rng.gen_range(0..free.len())]] = Some(s);
    }
    for (i, t) in target.iter_mut().enumerate() {
        let t = *t.get_or_insert_with(|| rng.gen_range(0..n_states));
        let (s, a) = (i / n_actions, i % n_actions);
        if t != s {
            raw.step(&state(s), &action(a), &state(t));
        }
    }
    for s in 0..n_states {
        for d in 0..n_agents {
            let label = rng.gen_range(0..cfg.obs_alphabet_size);
            if label != 0 {
                raw.obs(&state(s), &agent(d), &label.to_string());
            }
        }
    }
    for s in 0..n_states {
        for v in 0..n_agents {
            for u in 0..n_agents {
                if v != u && rng.gen_bool(cfg.edge_density) {
                    raw.edge(&state(s), &agent(v), &agent(u));
                }
            }
        }
    }
    raw.build().expect("generated description is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn eq_witness(sys: &System, v: &Verdict) -> (String, String, String, String) {
        let Some(Witness::Equivalence(w)) = &v.witness else {
            panic!("equivalence witness")
        };
        (
            sys.agent_name(w.agent).into(),
            sys.state_name(w.state).into(),
            sys.format_actions(&w.alpha),
            sys.format_actions(&w.beta),
        )
    }

    #[test]
    fn definition_oracle_examples() {
        let b = Budget::DEFAULT;
        let sys = fixtures::fig1();
        let v = t_definition_oracle(&sys, 2, b).unwrap();
        let w = v.flow_witness().unwrap();
        assert_eq!(sys.format_actions(&w.alpha), "h");
        assert_eq!(sys.state_name(w.state), "e");
        assert!(t_definition_oracle(&fixtures::fig2(), 9, b).unwrap().holds);
        let v = t_definition_oracle(&fixtures::fig4(), 0, b).unwrap();
        assert!(v.flow_witness().unwrap().alpha.is_empty());
    }

    #[test]
    fn equality_oracle_examples() {
        let b = Budget::DEFAULT;
        let sys = fixtures::fig1();
        let expected = ("L".into(), "e".into(), "h".into(), "a h".into());
        assert_eq!(
            eq_witness(&sys, &purge_equality_oracle(&sys, 2, b).unwrap()),
            expected
        );
        assert_eq!(
            eq_witness(&sys, &ipurge_equality_oracle(&sys, 2, b).unwrap()),
            expected
        );
        assert!(purge_equality_oracle(&fixtures::fig2(), 3, b).unwrap().holds);
        assert!(ipurge_equality_oracle(&fixtures::fig3(), 3, b).unwrap().holds);
        assert!(purge_equality_oracle(&sys, 0, b).unwrap().holds);
        assert!(ipurge_equality_oracle(&sys, 0, b).unwrap().holds);
    }

    #[test]
    fn recursions_match_examples() {
        let sys = fixtures::fig1();
        let (l, e) = (sys.agent_by_name("L").unwrap(), sys.state_by_name("e").unwrap());
        let ah = sys.actions_from_names("a h").unwrap();
        assert_eq!(sys.format_actions(&purge_rec(&sys, &ah, l, e)), "h");
        assert_eq!(sys.format_actions(&ipurge_rec(&sys, &ah, l, e)), "h");
        assert_eq!(sources_rec(&sys, &ah, l, e), AgentSet::singleton(l));
    }

    #[test]
    fn shortlex_order() {
        let all: Vec<Vec<ActionId>> = shortlex(2, 2).collect();
        assert_eq!(all.len() as u128, sequences_up_to(2, 2));
        assert!(all[0].is_empty());
        assert_eq!(all[1], vec![ActionId(0)]);
        assert_eq!(all[3], vec![ActionId(0), ActionId(0)]);
        assert_eq!(shortlex(3, 0).count(), 1);
    }

    #[test]
    fn generator_is_deterministic() {
        let trivial = GeneratorConfig {
            max_states: 1,
            max_actions: 1,
            max_agents: 1,
            edge_density: 0.5,
            obs_alphabet_size: 1,
            seed: 0,
        };
        let sys = generate_random_system(&trivial);
        assert_eq!((sys.n_states(), sys.n_actions(), sys.n_agents()), (1, 1, 1));

        let cfg = GeneratorConfig {
            max_states: 6,
            max_actions: 4,
            max_agents: 3,
            edge_density: 0.4,
            obs_alphabet_size: 2,
            seed: 7,
        };
        assert_eq!(generate_random_system(&cfg), generate_random_system(&cfg));
        for seed in 0..200 {
            let c = cfg.with_seed(seed);
            let sys = generate_random_system(&c);
            assert!(sys.n_states() <= 6 && sys.n_actions() <= 4 && sys.n_agents() <= 3);
        }
    }
}
