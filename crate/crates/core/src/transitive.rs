//! Transitive noninterference: purge, t-security, t-similarity, useless
//! edges and uniformity.

use std::collections::VecDeque;

use crate::error::AnalysisError;
use crate::model::{ActionId, AgentId, PolicyEdge, StateId, System};
use crate::partition::StatePartition;
use crate::verdict::{EquivalenceWitness, FlowWitness, PolicyWitness, Property, Stats, Verdict, Witness};

/// Removes from `alpha` the actions that may not influence `u`, tracking the
/// state reached by the kept actions.
pub fn purge(sys: &System, alpha: &[ActionId], u: AgentId, s: StateId) -> Vec<ActionId> {
    let mut state = s;
    let mut kept = Vec::new();
    for &a in alpha {
        if sys.allows(state, sys.dom(a), u) {
            kept.push(a);
            state = sys.step(state, a);
        }
    }
    kept
}

/// `s·a` for every action whose agent may not interfere with `u` in `s`.
fn local_respect_seeds(sys: &System, u: AgentId) -> impl Iterator<Item = (StateId, StateId)> + '_ {
    sys.states().flat_map(move |s| {
        sys.actions()
            .filter(move |&a| !sys.allows(s, sys.dom(a), u))
            .map(move |a| (s, sys.step(s, a)))
    })
}

fn t_similarity_counted(sys: &System, u: AgentId, stats: &mut Stats) -> StatePartition {
    let actions: Vec<ActionId> = sys.actions().collect();
    let partition = StatePartition::closure(
        sys,
        u,
        local_respect_seeds(sys, u),
        &actions,
        &mut stats.iterations,
    );
    stats.relations += 1;
    stats.pairs += partition.generators.len() as u64;
    partition
}

/// The least equivalence `≈_u` with `s ≈_u s·a` whenever `dom(a)` may not
/// interfere with `u` in `s`, closed under stepping both sides.
pub fn t_similarity(sys: &System, u: AgentId) -> StatePartition {
    t_similarity_counted(sys, u, &mut Stats::default())
}

/// Predecessors per (action, state), for backward search over state pairs.
struct ReverseSteps {
    offsets: Vec<usize>,
    sources: Vec<StateId>,
}

impl ReverseSteps {
    fn new(sys: &System) -> Self {
        let (n, m) = (sys.n_states(), sys.n_actions());
        let mut counts = vec![0usize; m * n + 1];
        for s in sys.states() {
            for a in sys.actions() {
                counts[a.index() * n + sys.step(s, a).index() + 1] += 1;
            }
        }
        for i in 1..counts.len() {
            counts[i] += counts[i - 1];
        }
        let mut fill = counts.clone();
        let mut sources = vec![StateId(0); n * m];
        for s in sys.states() {
            for a in sys.actions() {
                let slot = &mut fill[a.index() * n + sys.step(s, a).index()];
                sources[*slot] = s;
                *slot += 1;
            }
        }
        ReverseSteps {
            offsets: counts,
            sources,
        }
    }

    fn preds(&self, n: usize, a: ActionId, t: StateId) -> &[StateId] {
        let i = a.index() * n + t.index();
        &self.sources[self.offsets[i]..self.offsets[i + 1]]
    }
}

/// For agent `u`, the length of the shortest `α` with
/// `obs_u(x·α) ≠ obs_u(y·α)`, indexed by `x * |S| + y`.
fn distance_to_violation(sys: &System, rev: &ReverseSteps, u: AgentId) -> Vec<u32> {
    let n = sys.n_states();
    let mut dist = vec![u32::MAX; n * n];
    let mut queue = VecDeque::new();
    for x in sys.states() {
        for y in sys.states() {
            if !sys.same_obs(x, y, u) {
                dist[x.index() * n + y.index()] = 0;
                queue.push_back((x, y));
            }
        }
    }
    while let Some((x, y)) = queue.pop_front() {
        let d = dist[x.index() * n + y.index()] + 1;
        for b in sys.actions() {
            for &px in rev.preds(n, b, x) {
                for &py in rev.preds(n, b, y) {
                    let slot = &mut dist[px.index() * n + py.index()];
                    if *slot == u32::MAX {
                        *slot = d;
                        queue.push_back((px, py));
                    }
                }
            }
        }
    }
    dist
}

/// Lexicographically least shortest path from `(x, y)` to a pair with
/// differing observations.
fn greedy_path(sys: &System, dist: &[u32], mut x: StateId, mut y: StateId) -> Vec<ActionId> {
    let n = sys.n_states();
    let mut alpha = Vec::new();
    let mut d = dist[x.index() * n + y.index()];
    while d > 0 {
        let b = sys
            .actions()
            .find(|&b| dist[sys.step(x, b).index() * n + sys.step(y, b).index()] == d - 1)
            .expect("distance decreases along some action");
        alpha.push(b);
        x = sys.step(x, b);
        y = sys.step(y, b);
        d -= 1;
    }
    alpha
}

/// The canonical minimal witness of transitive insecurity, if any: shortest
/// `α`, then smallest state, action, `α` and agent.
fn minimal_t_witness(sys: &System) -> Option<FlowWitness> {
    let rev = ReverseSteps::new(sys);
    let n = sys.n_states();
    let mut best: Option<FlowWitness> = None;
    for u in sys.agents() {
        let dist = distance_to_violation(sys, &rev, u);
        for s in sys.states() {
            for a in sys.actions() {
                if sys.allows(s, sys.dom(a), u) {
                    continue;
                }
                let sa = sys.step(s, a);
                let d = dist[sa.index() * n + s.index()];
                if d == u32::MAX {
                    continue;
                }
                if let Some(b) = &best {
                    if (d as usize, s, a) > (b.alpha.len(), b.state, b.action) {
                        continue;
                    }
                }
                let w = FlowWitness::new(sys, u, s, a, greedy_path(sys, &dist, sa, s));
                if best.as_ref().is_none_or(|b| w.order_key() < b.order_key()) {
                    best = Some(w);
                }
            }
        }
    }
    best
}

/// Decides t-security through t-similarity: secure iff every agent's
/// observation is constant on each of its t-similarity classes.
pub fn check_t_security(sys: &System) -> Verdict {
    let mut stats = Stats::default();
    let mut secure = true;
    for u in sys.agents() {
        let p = t_similarity_counted(sys, u, &mut stats);
        if p.first_disagreement(|s| sys.obs_class(s, u)).is_some() {
            secure = false;
        }
    }
    if secure {
        return Verdict::holds(Property::TSecurity, stats);
    }
    let w = minimal_t_witness(sys).expect("a violated output condition yields a witness");
    Verdict::violated(Property::TSecurity, Witness::Flow(w), stats)
}

/// Decides t-security directly from the definition: for every hidden step
/// `s -a-> s·a`, explores the pairs `(s·aα, s·α)` breadth-first.
pub fn t_security_pair_oracle(sys: &System) -> Verdict {
    let n = sys.n_states();
    let mut stats = Stats::default();
    let mut best: Option<FlowWitness> = None;
    let mut parent: Vec<Option<(usize, ActionId)>> = vec![None; n * n];
    let mut seen = vec![false; n * n];
    for u in sys.agents() {
        for s in sys.states() {
            for a in sys.actions() {
                if sys.allows(s, sys.dom(a), u) {
                    continue;
                }
                stats.relations += 1;
                seen.iter_mut().for_each(|v| *v = false);
                let start = sys.step(s, a).index() * n + s.index();
                seen[start] = true;
                parent[start] = None;
                let mut queue = VecDeque::from([start]);
                while let Some(p) = queue.pop_front() {
                    stats.iterations += 1;
                    let (x, y) = (StateId::from_index(p / n), StateId::from_index(p % n));
                    if !sys.same_obs(x, y, u) {
                        let mut alpha = Vec::new();
                        let mut cur = p;
                        while let Some((prev, b)) = parent[cur] {
                            alpha.push(b);
                            cur = prev;
                        }
                        alpha.reverse();
                        let w = FlowWitness::new(sys, u, s, a, alpha);
                        if best.as_ref().is_none_or(|b| w.order_key() < b.order_key()) {
                            best = Some(w);
                        }
                        break;
                    }
                    for b in sys.actions() {
                        let q = sys.step(x, b).index() * n + sys.step(y, b).index();
                        if !seen[q] {
                            seen[q] = true;
                            parent[q] = Some((p, b));
                            stats.pairs += 1;
                            queue.push_back(q);
                        }
                    }
                }
            }
        }
    }
    match best {
        Some(w) => Verdict::violated(Property::TSecurity, Witness::Flow(w), stats),
        None => Verdict::holds(Property::TSecurity, stats),
    }
}

/// Edges `v ⤳_s u` contradicted by some `s' ≈_u s` lacking them, in
/// (state, source, target) order.
pub fn find_useless_edges_t(sys: &System) -> Vec<PolicyEdge> {
    let partitions: Vec<StatePartition> = sys.agents().map(|u| t_similarity(sys, u)).collect();
    sys.policy_edges()
        .into_iter()
        .filter(|e| {
            partitions[e.to.index()]
                .class_of(e.state)
                .iter()
                .any(|&t| !sys.allows(t, e.from, e.to))
        })
        .collect()
}

/// Removes every useless edge at once.
pub fn normalize_t(sys: &System) -> System {
    let mut policies = sys.policies().to_vec();
    for e in find_useless_edges_t(sys) {
        policies[e.state.index()].remove_edge(e.from, e.to);
    }
    sys.with_policies(policies)
}

/// Uniform iff each agent's interfering set is constant on its
/// t-similarity classes.
pub fn is_uniform_t(sys: &System) -> Verdict {
    let mut stats = Stats::default();
    for u in sys.agents() {
        let p = t_similarity_counted(sys, u, &mut stats);
        if let Some((s, t)) = p.first_disagreement(|s| sys.interfering_set(u, s)) {
            let w = PolicyWitness {
                agent: u,
                state: s,
                other: t,
                interfering: sys.interfering_set(u, s),
                other_interfering: sys.interfering_set(u, t),
            };
            return Verdict::violated(Property::TUniformity, Witness::Policy(w), stats);
        }
    }
    Verdict::holds(Property::TUniformity, stats)
}

/// Checks `obs_u(s0·α) = obs_u(s0·purge(α, u, s0))` for all `α`, by search
/// over the pairs `(s0·α, s0·purge(α))`. Only meaningful for uniform
/// policies; see [`check_t_from_initial`].
fn initial_purge_check(sys: &System) -> Verdict {
    let n = sys.n_states();
    let s0 = sys.initial();
    let mut stats = Stats::default();
    for u in sys.agents() {
        stats.relations += 1;
        let mut parent: Vec<Option<(usize, ActionId)>> = vec![None; n * n];
        let mut seen = vec![false; n * n];
        let start = s0.index() * n + s0.index();
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(p) = queue.pop_front() {
            stats.iterations += 1;
            let (x, y) = (StateId::from_index(p / n), StateId::from_index(p % n));
            if !sys.same_obs(x, y, u) {
                let mut alpha = Vec::new();
                let mut cur = p;
                while let Some((prev, b)) = parent[cur] {
                    alpha.push(b);
                    cur = prev;
                }
                alpha.reverse();
                let beta = purge(sys, &alpha, u, s0);
                let w = EquivalenceWitness {
                    agent: u,
                    state: s0,
                    obs_alpha: sys.obs(x, u).to_string(),
                    obs_beta: sys.obs(y, u).to_string(),
                    alpha,
                    beta,
                };
                return Verdict::violated(Property::TSecurityFromInitial, Witness::Equivalence(w), stats);
            }
            for b in sys.actions() {
                let y2 = if sys.allows(y, sys.dom(b), u) {
                    sys.step(y, b)
                } else {
                    y
                };
                let q = sys.step(x, b).index() * n + y2.index();
                if !seen[q] {
                    seen[q] = true;
                    parent[q] = Some((p, b));
                    stats.pairs += 1;
                    queue.push_back(q);
                }
            }
        }
    }
    Verdict::holds(Property::TSecurityFromInitial, stats)
}

/// t-security checked from the initial state only, which is sound and
/// complete for uniform policies.
///
/// Non-uniform policies are refused: there the initial-state test can pass
/// on an insecure system. The error message reports both answers.
pub fn check_t_from_initial(sys: &System) -> Result<Verdict, AnalysisError> {
    let uniform = is_uniform_t(sys);
    if let Some(Witness::Policy(w)) = &uniform.witness {
        let initial = initial_purge_check(sys);
        let full = check_t_security(sys);
        let verdict = |holds| if holds { "secure" } else { "insecure" };
        return Err(AnalysisError::NonUniformPolicy(format!(
            "agent {} has interfering sets {} in {} and {} in t-similar state {}; \
             the initial-state purge test alone reports {}, t-security is {}",
            sys.agent_name(w.agent),
            sys.format_agents(w.interfering),
            sys.state_name(w.state),
            sys.format_agents(w.other_interfering),
            sys.state_name(w.other),
            verdict(initial.holds),
            verdict(full.holds),
        )));
    }
    let mut verdict = initial_purge_check(sys);
    verdict.stats += uniform.stats;
    Ok(verdict)
}
