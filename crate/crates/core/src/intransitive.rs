//! Intransitive noninterference with local policies: sources, ipurge,
//! i-security, i-similarity, intransitively useless edges, uniformity and
//! IP-security.

use std::collections::{HashMap, HashSet, VecDeque};

pub use crate::budget::Budget;
use crate::error::AnalysisError;
use crate::model::{ActionId, AgentId, AgentSet, PolicyEdge, StateId, System};
use crate::partition::{StatePartition, UnionFind};
use crate::verdict::{FlowWitness, PolicyWitness, Property, Stats, Verdict, Witness};

/// Agents that may learn, after `alpha` is run from `s`, something `u` will
/// eventually observe. Always contains `u`.
pub fn sources(sys: &System, alpha: &[ActionId], u: AgentId, s: StateId) -> AgentSet {
    let mut states = Vec::with_capacity(alpha.len());
    let mut cur = s;
    for &a in alpha {
        states.push(cur);
        cur = sys.step(cur, a);
    }
    let mut set = AgentSet::singleton(u);
    for (&a, &at) in alpha.iter().zip(&states).rev() {
        if sys.policy(at).targets(sys.dom(a)).intersects(set) {
            set.insert(sys.dom(a));
        }
    }
    set
}

fn ipurge_with(
    sys: &System,
    alpha: &[ActionId],
    u: AgentId,
    s: StateId,
    advance_on_drop: bool,
) -> Vec<ActionId> {
    let mut kept = Vec::new();
    let mut cur = s;
    for (i, &a) in alpha.iter().enumerate() {
        let keep = sources(sys, &alpha[i..], u, cur).contains(sys.dom(a));
        if keep {
            kept.push(a);
        }
        if keep || advance_on_drop {
            cur = sys.step(cur, a);
        }
    }
    kept
}

/// Intransitive purge: an action is kept (and the state advanced) iff its
/// agent is among the sources of the remaining sequence; a dropped action
/// leaves the state unchanged.
pub fn ipurge(sys: &System, alpha: &[ActionId], u: AgentId, s: StateId) -> Vec<ActionId> {
    ipurge_with(sys, alpha, u, s, false)
}

/// Variant of [`ipurge`] in which a dropped action still advances the state.
pub fn ipurge_leslie(sys: &System, alpha: &[ActionId], u: AgentId, s: StateId) -> Vec<ActionId> {
    ipurge_with(sys, alpha, u, s, true)
}

/// Limit on the number of agents for the subset-indexed unwinding, whose
/// size is exponential in the number of agents.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SubsetGuard {
    pub limit: usize,
    pub force: bool,
}

impl SubsetGuard {
    pub const DEFAULT_LIMIT: usize = 16;

    pub fn forced() -> Self {
        SubsetGuard {
            force: true,
            ..Self::default()
        }
    }

    pub fn check(&self, sys: &System) -> Result<(), AnalysisError> {
        if !self.force && sys.n_agents() > self.limit {
            return Err(AnalysisError::SubsetGuardExceeded {
                agents: sys.n_agents(),
                limit: self.limit,
            });
        }
        Ok(())
    }
}

impl Default for SubsetGuard {
    fn default() -> Self {
        SubsetGuard {
            limit: Self::DEFAULT_LIMIT,
            force: false,
        }
    }
}

/// Worst-case size in bytes of the subset-indexed unwinding of `sys`.
pub fn fpt_memory_estimate(sys: &System) -> u128 {
    let subsets = 1u128.checked_shl(sys.n_agents() as u32).unwrap_or(u128::MAX);
    let pairs = (sys.n_states() as u128).pow(2);
    let per_entry =
        (std::mem::size_of::<Triple>() + std::mem::size_of::<(AgentSet, u32, u32, u32)>() * 2) as u128;
    subsets.saturating_mul(pairs).saturating_mul(per_entry)
}

#[derive(Clone, Copy, Debug)]
struct Triple {
    set: AgentSet,
    with: StateId,
    without: StateId,
    parent: u32,
    action: ActionId,
}

const NO_PARENT: u32 = u32::MAX;

/// The least intransitive unwinding: triples `(D', s, t)` where `s = r·aα`
/// and `t = r·α` for some state `r`, action `a` and sequence `α`, and `D'`
/// is the set of agents `u` with `dom(a) ∉ sources(aα, u, r)`.
///
/// Triples with empty `D'` carry no obligation and are not stored. Pairs
/// with `s = t` are stored but not expanded.
#[derive(Clone, Debug, Default)]
pub struct SubsetRelationFamily {
    entries: Vec<Triple>,
    index: HashMap<(AgentSet, u32, u32), u32>,
}

impl SubsetRelationFamily {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, set: AgentSet, s: StateId, t: StateId) -> bool {
        self.index.contains_key(&(set, s.0, t.0))
    }

    /// All stored `(D', s, t)` in discovery order.
    pub fn triples(&self) -> impl Iterator<Item = (AgentSet, StateId, StateId)> + '_ {
        self.entries.iter().map(|e| (e.set, e.with, e.without))
    }

    /// The distinct agent subsets that were reached, in increasing bit order.
    pub fn subsets(&self) -> Vec<AgentSet> {
        let mut sets: Vec<AgentSet> = self
            .entries
            .iter()
            .map(|e| e.set)
            .collect::<HashSet<_>>()
            .into_iter()
            .collect();
        sets.sort();
        sets
    }

    /// Pairs related for `set`, in discovery order.
    pub fn pairs(&self, set: AgentSet) -> Vec<(StateId, StateId)> {
        self.entries
            .iter()
            .filter(|e| e.set == set)
            .map(|e| (e.with, e.without))
            .collect()
    }

    fn insert(&mut self, t: Triple) -> bool {
        let key = (t.set, t.with.0, t.without.0);
        if self.index.contains_key(&key) {
            return false;
        }
        self.index.insert(key, self.entries.len() as u32);
        self.entries.push(t);
        true
    }

    /// `(r, a, α)` generating entry `i`.
    fn origin(&self, mut i: u32) -> (StateId, ActionId, Vec<ActionId>) {
        let mut alpha = Vec::new();
        loop {
            let e = &self.entries[i as usize];
            if e.parent == NO_PARENT {
                alpha.reverse();
                return (e.without, e.action, alpha);
            }
            alpha.push(e.action);
            i = e.parent;
        }
    }
}

/// Breadth-first construction of the unwinding. Seeds are visited in
/// (state, action) order and actions in declaration order, so the first
/// violation dequeued carries the canonical minimal witness.
fn explore(
    sys: &System,
    stop_at_violation: bool,
    stats: &mut Stats,
) -> (SubsetRelationFamily, Option<(u32, AgentId)>) {
    let mut family = SubsetRelationFamily::default();
    for s in sys.states() {
        for a in sys.actions() {
            let set = sys.all_agents().difference(sys.policy(s).targets(sys.dom(a)));
            if !set.is_empty() {
                family.insert(Triple {
                    set,
                    with: sys.step(s, a),
                    without: s,
                    parent: NO_PARENT,
                    action: a,
                });
            }
        }
    }
    let mut violation = None;
    let mut next = 0usize;
    while next < family.entries.len() {
        let i = next as u32;
        let Triple {
            set, with, without, ..
        } = family.entries[next];
        next += 1;
        stats.iterations += 1;
        if violation.is_none() {
            if let Some(u) = sys.obs_difference(with, without).intersection(set).iter().next() {
                violation = Some((i, u));
                if stop_at_violation {
                    break;
                }
            }
        }
        if with == without {
            continue;
        }
        let policy = sys.policy(with);
        for b in sys.actions() {
            let actor = sys.dom(b);
            let set2 = if set.contains(actor) {
                set
            } else {
                set.difference(policy.targets(actor))
            };
            if set2.is_empty() {
                continue;
            }
            family.insert(Triple {
                set: set2,
                with: sys.step(with, b),
                without: sys.step(without, b),
                parent: i,
                action: b,
            });
        }
    }
    stats.pairs += family.len() as u64;
    stats.relations += family.subsets().len() as u64;
    (family, violation)
}

/// Builds the complete subset-indexed unwinding.
pub fn fpt_unwinding(sys: &System, guard: SubsetGuard) -> Result<SubsetRelationFamily, AnalysisError> {
    guard.check(sys)?;
    Ok(explore(sys, false, &mut Stats::default()).0)
}

/// Decides i-security with the subset-indexed unwinding. The witness is the
/// canonical minimal one: shortest `α`, then state, action, `α`, agent.
pub fn check_i_security(sys: &System, guard: SubsetGuard) -> Result<Verdict, AnalysisError> {
    guard.check(sys)?;
    let mut stats = Stats::default();
    let (family, violation) = explore(sys, true, &mut stats);
    Ok(match violation {
        None => Verdict::holds(Property::ISecurity, stats),
        Some((i, u)) => {
            let (s, a, alpha) = family.origin(i);
            let w = FlowWitness::new(sys, u, s, a, alpha);
            Verdict::violated(Property::ISecurity, Witness::Flow(w), stats)
        }
    })
}

/// Number of `(s, a, α)` with `|α| ≤ bound`.
pub fn bounded_oracle_cost(sys: &System, bound: usize) -> u128 {
    let m = sys.n_actions() as u128;
    let mut layer = 1u128;
    let mut total = 0u128;
    for _ in 0..=bound {
        total = total.saturating_add(layer);
        layer = layer.saturating_mul(m);
    }
    total.saturating_mul(sys.n_states() as u128).saturating_mul(m)
}

struct BoundedSearch<'a> {
    sys: &'a System,
    bound: usize,
    best: Option<FlowWitness>,
    evaluations: u64,
    alpha: Vec<ActionId>,
}

impl BoundedSearch<'_> {
    /// `know` holds the agents that may have learnt of the hidden action.
    fn visit(&mut self, s: StateId, a: ActionId, with: StateId, without: StateId, know: AgentSet) {
        let depth = self.alpha.len();
        if self.best.as_ref().is_some_and(|b| depth >= b.alpha.len()) {
            return;
        }
        self.evaluations += 1;
        let unaware = self.sys.all_agents().difference(know);
        if let Some(u) = self
            .sys
            .obs_difference(with, without)
            .intersection(unaware)
            .iter()
            .next()
        {
            self.best = Some(FlowWitness::new(self.sys, u, s, a, self.alpha.clone()));
            return;
        }
        if depth == self.bound || unaware.is_empty() {
            return;
        }
        for b in self.sys.actions() {
            let actor = self.sys.dom(b);
            let know2 = if know.contains(actor) {
                know.union(self.sys.policy(with).targets(actor))
            } else {
                know
            };
            self.alpha.push(b);
            self.visit(s, a, self.sys.step(with, b), self.sys.step(without, b), know2);
            self.alpha.pop();
        }
    }
}

/// Enumerates every `(s, a, α)` with `|α| ≤ bound` and tests the definition
/// of i-security directly. Sound for every bound, complete once
/// `bound ≥ |S|²`. Reports the canonical minimal witness within the bound.
pub fn i_security_bounded_oracle(
    sys: &System,
    bound: usize,
    budget: Budget,
) -> Result<Verdict, AnalysisError> {
    budget.admit(bound, |b| bounded_oracle_cost(sys, b))?;
    let mut search = BoundedSearch {
        sys,
        bound,
        best: None,
        evaluations: 0,
        alpha: Vec::new(),
    };
    for s in sys.states() {
        for a in sys.actions() {
            let know = sys.policy(s).targets(sys.dom(a));
            search.visit(s, a, sys.step(s, a), s, know);
        }
    }
    let stats = Stats {
        evaluations: search.evaluations,
        ..Stats::default()
    };
    Ok(match search.best {
        Some(w) => Verdict::violated(Property::ISecurity, Witness::Flow(w), stats),
        None => Verdict::holds(Property::ISecurity, stats),
    })
}

fn partitions_from(sys: &System, family: &SubsetRelationFamily) -> Vec<StatePartition> {
    sys.agents()
        .map(|u| {
            let mut uf = UnionFind::new(sys.n_states());
            let mut generators = Vec::new();
            for (set, s, t) in family.triples() {
                if set.contains(u) && uf.union(s.index(), t.index()) {
                    generators.push((s, t));
                }
            }
            StatePartition::from_union_find(u, &mut uf, generators)
        })
        .collect()
}

/// i-similarity of every agent, in agent order.
pub fn i_similarities(sys: &System, guard: SubsetGuard) -> Result<Vec<StatePartition>, AnalysisError> {
    let family = fpt_unwinding(sys, guard)?;
    Ok(partitions_from(sys, &family))
}

/// The least equivalence relating `s·aα` and `s·α` whenever
/// `dom(a) ∉ sources(aα, u, s)`.
pub fn i_similarity(sys: &System, u: AgentId, guard: SubsetGuard) -> Result<StatePartition, AnalysisError> {
    Ok(i_similarities(sys, guard)?.swap_remove(u.index()))
}

fn is_intransitively_useless(sys: &System, base: &[StatePartition], edge: PolicyEdge) -> bool {
    let reduced = sys.without_edge(edge);
    let family = explore(&reduced, false, &mut Stats::default()).0;
    partitions_from(&reduced, &family) == base
}

/// Edges whose removal leaves every agent's i-similarity unchanged, in
/// (state, source, target) order.
pub fn find_intransitively_useless_edges(
    sys: &System,
    guard: SubsetGuard,
) -> Result<Vec<PolicyEdge>, AnalysisError> {
    let base = i_similarities(sys, guard)?;
    Ok(sys
        .policy_edges()
        .into_iter()
        .filter(|&e| is_intransitively_useless(sys, &base, e))
        .collect())
}

/// Removes intransitively useless edges one at a time, always the first in
/// (state, source, target) order, recomputing after each removal.
pub fn normalize_i(sys: &System, guard: SubsetGuard) -> Result<System, AnalysisError> {
    guard.check(sys)?;
    let mut cur = sys.clone();
    loop {
        let base = i_similarities(&cur, guard)?;
        match cur
            .policy_edges()
            .into_iter()
            .find(|&e| is_intransitively_useless(&cur, &base, e))
        {
            Some(e) => cur = cur.without_edge(e),
            None => return Ok(cur),
        }
    }
}

/// One relation `∼^{anchor,source}_agent` of the uniform unwinding.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UniformMember {
    pub anchor: StateId,
    pub source: AgentId,
    pub agent: AgentId,
    pub partition: StatePartition,
}

/// The least uniform intransitive unwinding. Members equal to the identity
/// are not stored.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct UniformUnwindingFamily {
    members: Vec<UniformMember>,
}

impl UniformUnwindingFamily {
    /// Non-identity members in (anchor, source, agent) order.
    pub fn members(&self) -> &[UniformMember] {
        &self.members
    }

    pub fn get(&self, anchor: StateId, source: AgentId, agent: AgentId) -> Option<&StatePartition> {
        self.members
            .iter()
            .find(|m| (m.anchor, m.source, m.agent) == (anchor, source, agent))
            .map(|m| &m.partition)
    }
}

/// Actions whose agent `source` may not interfere with in `anchor`.
fn unaffected_actions(sys: &System, anchor: StateId, source: AgentId) -> Vec<ActionId> {
    sys.actions()
        .filter(|&b| !sys.allows(anchor, source, sys.dom(b)))
        .collect()
}

fn members_for_anchor(sys: &System, anchor: StateId, iterations: &mut u64) -> Vec<UniformMember> {
    let mut out = Vec::new();
    for v in sys.agents() {
        let steps = unaffected_actions(sys, anchor, v);
        for u in sys.agents() {
            if sys.allows(anchor, v, u) {
                continue;
            }
            let seeds = sys.actions_of(v).map(|a| (anchor, sys.step(anchor, a)));
            let partition = StatePartition::closure(sys, u, seeds, &steps, iterations);
            if !partition.is_identity() {
                out.push(UniformMember {
                    anchor,
                    source: v,
                    agent: u,
                    partition,
                });
            }
        }
    }
    out
}

fn build_uniform(sys: &System, jobs: usize, stats: &mut Stats) -> UniformUnwindingFamily {
    let anchors: Vec<StateId> = sys.states().collect();
    let jobs = jobs.clamp(1, anchors.len().max(1));
    let mut parts: Vec<(Vec<UniformMember>, u64)> = Vec::new();
    if jobs == 1 {
        let mut it = 0;
        let members = anchors
            .iter()
            .flat_map(|&s| members_for_anchor(sys, s, &mut it))
            .collect();
        parts.push((members, it));
    } else {
        let chunk = anchors.len().div_ceil(jobs);
        std::thread::scope(|scope| {
            let handles: Vec<_> = anchors
                .chunks(chunk)
                .map(|slice| {
                    scope.spawn(move || {
                        let mut it = 0;
                        let members: Vec<UniformMember> = slice
                            .iter()
                            .flat_map(|&s| members_for_anchor(sys, s, &mut it))
                            .collect();
                        (members, it)
                    })
                })
                .collect();
            parts = handles
                .into_iter()
                .map(|h| h.join().expect("worker panicked"))
                .collect();
        });
    }
    let mut members = Vec::new();
    for (m, it) in parts {
        stats.iterations += it;
        members.extend(m);
    }
    stats.relations += members.len() as u64;
    stats.pairs += members
        .iter()
        .map(|m| m.partition.generators.len() as u64)
        .sum::<u64>();
    UniformUnwindingFamily { members }
}

/// Builds the least uniform unwinding.
pub fn uniform_unwinding(sys: &System) -> UniformUnwindingFamily {
    build_uniform(sys, 1, &mut Stats::default())
}

/// [`uniform_unwinding`] with anchors split across `jobs` threads; the
/// result does not depend on `jobs`.
pub fn uniform_unwinding_parallel(sys: &System, jobs: usize) -> UniformUnwindingFamily {
    build_uniform(sys, jobs, &mut Stats::default())
}

fn uniformity_verdict(sys: &System, family: &UniformUnwindingFamily, stats: Stats) -> Verdict {
    for m in family.members() {
        let u = m.agent;
        if let Some((s, t)) = m.partition.first_disagreement(|s| sys.interfering_set(u, s)) {
            let w = PolicyWitness {
                agent: u,
                state: s,
                other: t,
                interfering: sys.interfering_set(u, s),
                other_interfering: sys.interfering_set(u, t),
            };
            return Verdict::violated(Property::IUniformity, Witness::Policy(w), stats);
        }
    }
    Verdict::holds(Property::IUniformity, stats)
}

/// Intransitively uniform iff every member of the uniform unwinding keeps
/// the interfering sets of its agent constant on each class.
pub fn is_intransitively_uniform(sys: &System) -> Verdict {
    is_intransitively_uniform_parallel(sys, 1)
}

pub fn is_intransitively_uniform_parallel(sys: &System, jobs: usize) -> Verdict {
    let mut stats = Stats::default();
    let family = build_uniform(sys, jobs, &mut stats);
    uniformity_verdict(sys, &family, stats)
}

/// Shortest witness inside one member whose output condition fails: search
/// from each seed over the actions the member's source cannot influence.
fn member_witness(sys: &System, m: &UniformMember) -> Option<FlowWitness> {
    let n = sys.n_states();
    let steps = unaffected_actions(sys, m.anchor, m.source);
    let mut best: Option<FlowWitness> = None;
    for a in sys.actions_of(m.source) {
        let start = sys.step(m.anchor, a).index() * n + m.anchor.index();
        let mut parent: Vec<Option<(usize, ActionId)>> = vec![None; n * n];
        let mut seen = vec![false; n * n];
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(p) = queue.pop_front() {
            let (x, y) = (StateId::from_index(p / n), StateId::from_index(p % n));
            if !sys.same_obs(x, y, m.agent) {
                let mut alpha = Vec::new();
                let mut cur = p;
                while let Some((prev, b)) = parent[cur] {
                    alpha.push(b);
                    cur = prev;
                }
                alpha.reverse();
                let w = FlowWitness::new(sys, m.agent, m.anchor, a, alpha);
                if best.as_ref().is_none_or(|b| w.order_key() < b.order_key()) {
                    best = Some(w);
                }
                break;
            }
            for &b in &steps {
                let q = sys.step(x, b).index() * n + sys.step(y, b).index();
                if !seen[q] {
                    seen[q] = true;
                    parent[q] = Some((p, b));
                    queue.push_back(q);
                }
            }
        }
    }
    best
}

/// i-security through the uniform unwinding; refuses policies that are not
/// intransitively uniform.
pub fn check_i_security_uniform(sys: &System) -> Result<Verdict, AnalysisError> {
    check_i_security_uniform_parallel(sys, 1)
}

pub fn check_i_security_uniform_parallel(sys: &System, jobs: usize) -> Result<Verdict, AnalysisError> {
    let mut stats = Stats::default();
    let family = build_uniform(sys, jobs, &mut stats);
    let uniform = uniformity_verdict(sys, &family, stats);
    if let Some(Witness::Policy(w)) = &uniform.witness {
        return Err(AnalysisError::NonUniformPolicy(format!(
            "agent {} has interfering sets {} in {} and {} in related state {}",
            sys.agent_name(w.agent),
            sys.format_agents(w.interfering),
            sys.state_name(w.state),
            sys.format_agents(w.other_interfering),
            sys.state_name(w.other),
        )));
    }
    let best = family
        .members()
        .iter()
        .filter(|m| {
            m.partition
                .first_disagreement(|s| sys.obs_class(s, m.agent))
                .is_some()
        })
        .filter_map(|m| member_witness(sys, m))
        .min_by(|x, y| x.order_key().cmp(&y.order_key()));
    Ok(match best {
        Some(w) => Verdict::violated(Property::ISecurity, Witness::Flow(w), stats),
        None => Verdict::holds(Property::ISecurity, stats),
    })
}

/// IP-security of a system with one policy for all states.
pub fn check_ip_security(sys: &System) -> Result<Verdict, AnalysisError> {
    check_ip_security_parallel(sys, 1)
}

pub fn check_ip_security_parallel(sys: &System, jobs: usize) -> Result<Verdict, AnalysisError> {
    if let Some(t) = sys.states().find(|&t| sys.policy(t) != sys.policy(sys.initial())) {
        return Err(AnalysisError::NotGlobalPolicy(
            sys.state_name(sys.initial()).to_string(),
            sys.state_name(t).to_string(),
        ));
    }
    let mut v = check_i_security_uniform_parallel(sys, jobs)?;
    v.property = Property::IpSecurity;
    Ok(v)
}
