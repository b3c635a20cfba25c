//! The validated system representation: a deterministic automaton whose
//! actions belong to agents, with per-state observations and a reflexive
//! local policy attached to every state.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use crate::error::{ModelError, ModelErrorKind, SourceSpan, ValidationErrors, Warning};

macro_rules! index_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $name(pub u32);

        impl $name {
            #[inline]
            pub fn index(self) -> usize {
                self.0 as usize
            }

            #[inline]
            pub fn from_index(index: usize) -> Self {
                $name(index as u32)
            }
        }
    };
}

index_type!(
    /// Index of an agent (security domain) in declaration order.
    AgentId
);
index_type!(
    /// Index of an action in declaration order.
    ActionId
);
index_type!(
    /// Index of a state in declaration order.
    StateId
);

/// Upper bound on the number of agents a [`System`] may declare.
pub const MAX_AGENTS: usize = 128;

/// Observation label used for every (state, agent) pair the input leaves open.
pub const DEFAULT_OBSERVATION: &str = "0";

/// A set of agents, stored as a bitmask over agent indices.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct AgentSet(u128);

impl AgentSet {
    pub const fn empty() -> Self {
        AgentSet(0)
    }

    /// All agents with index below `n`.
    pub fn full(n: usize) -> Self {
        debug_assert!(n <= MAX_AGENTS);
        if n == MAX_AGENTS {
            AgentSet(u128::MAX)
        } else {
            AgentSet((1u128 << n) - 1)
        }
    }

    pub fn singleton(agent: AgentId) -> Self {
        AgentSet(1u128 << agent.0)
    }

    pub fn bits(self) -> u128 {
        self.0
    }

    #[inline]
    pub fn contains(self, agent: AgentId) -> bool {
        self.0 & (1u128 << agent.0) != 0
    }

    #[inline]
    pub fn insert(&mut self, agent: AgentId) {
        self.0 |= 1u128 << agent.0;
    }

    #[inline]
    pub fn remove(&mut self, agent: AgentId) {
        self.0 &= !(1u128 << agent.0);
    }

    #[inline]
    pub fn union(self, other: AgentSet) -> AgentSet {
        AgentSet(self.0 | other.0)
    }

    #[inline]
    pub fn intersection(self, other: AgentSet) -> AgentSet {
        AgentSet(self.0 & other.0)
    }

    #[inline]
    pub fn difference(self, other: AgentSet) -> AgentSet {
        AgentSet(self.0 & !other.0)
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub fn intersects(self, other: AgentSet) -> bool {
        self.0 & other.0 != 0
    }

    pub fn is_subset(self, other: AgentSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    /// Members in increasing index order.
    pub fn iter(self) -> impl Iterator<Item = AgentId> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let tz = bits.trailing_zeros();
                bits &= bits - 1;
                Some(AgentId(tz))
            }
        })
    }
}

impl fmt::Debug for AgentSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter().map(|a| a.0)).finish()
    }
}

impl FromIterator<AgentId> for AgentSet {
    fn from_iter<I: IntoIterator<Item = AgentId>>(iter: I) -> Self {
        let mut set = AgentSet::empty();
        for a in iter {
            set.insert(a);
        }
        set
    }
}

/// A reflexive interference relation over agents, attached to one state.
///
/// `incoming[u]` holds every `v` with `v ⤳ u`; `outgoing[v]` is the
/// transpose. Both always contain the diagonal.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LocalPolicy {
    incoming: Vec<AgentSet>,
    outgoing: Vec<AgentSet>,
}

impl LocalPolicy {
    /// The policy that only contains the reflexive edges.
    pub fn reflexive(n_agents: usize) -> Self {
        let diag: Vec<AgentSet> = (0..n_agents)
            .map(|u| AgentSet::singleton(AgentId::from_index(u)))
            .collect();
        LocalPolicy {
            incoming: diag.clone(),
            outgoing: diag,
        }
    }

    /// The policy in which every agent may interfere with every agent.
    pub fn complete(n_agents: usize) -> Self {
        let full = AgentSet::full(n_agents);
        LocalPolicy {
            incoming: vec![full; n_agents],
            outgoing: vec![full; n_agents],
        }
    }

    /// Builds a policy from `(from, to)` edges; reflexive edges are implied.
    pub fn from_edges(n_agents: usize, edges: impl IntoIterator<Item = (AgentId, AgentId)>) -> Self {
        let mut policy = LocalPolicy::reflexive(n_agents);
        for (v, u) in edges {
            policy.add_edge(v, u);
        }
        policy
    }

    pub fn n_agents(&self) -> usize {
        self.incoming.len()
    }

    /// Whether `from ⤳ to`.
    #[inline]
    pub fn allows(&self, from: AgentId, to: AgentId) -> bool {
        self.incoming[to.index()].contains(from)
    }

    /// `{ v | v ⤳ to }`.
    #[inline]
    pub fn interfering(&self, to: AgentId) -> AgentSet {
        self.incoming[to.index()]
    }

    /// `{ u | from ⤳ u }`.
    #[inline]
    pub fn targets(&self, from: AgentId) -> AgentSet {
        self.outgoing[from.index()]
    }

    pub fn add_edge(&mut self, from: AgentId, to: AgentId) {
        self.incoming[to.index()].insert(from);
        self.outgoing[from.index()].insert(to);
    }

    /// Removes a non-reflexive edge. Reflexive edges cannot be removed.
    pub fn remove_edge(&mut self, from: AgentId, to: AgentId) {
        if from == to {
            return;
        }
        self.incoming[to.index()].remove(from);
        self.outgoing[from.index()].remove(to);
    }

    /// Non-reflexive edges ordered by (source, target).
    pub fn edges(&self) -> impl Iterator<Item = (AgentId, AgentId)> + '_ {
        self.outgoing.iter().enumerate().flat_map(|(v, targets)| {
            let v = AgentId::from_index(v);
            targets.iter().filter(move |&u| u != v).map(move |u| (v, u))
        })
    }

    pub fn is_reflexive_only(&self) -> bool {
        self.edges().next().is_none()
    }
}

/// A non-reflexive policy edge `from ⤳_state to`. Ordering follows
/// (state, source agent, target agent) declaration order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PolicyEdge {
    pub state: StateId,
    pub from: AgentId,
    pub to: AgentId,
}

/// A validated system `(S, s0, A, step, obs, dom)` with local policies.
///
/// Immutable once built; every state is reachable from the initial state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct System {
    agents: Vec<String>,
    actions: Vec<String>,
    dom: Vec<AgentId>,
    states: Vec<String>,
    initial: StateId,
    step: Vec<StateId>,
    labels: Vec<String>,
    obs: Vec<u32>,
    policies: Vec<LocalPolicy>,
}

impl System {
    pub fn n_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn n_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn agents(&self) -> impl Iterator<Item = AgentId> + Clone {
        (0..self.agents.len()).map(AgentId::from_index)
    }

    pub fn actions(&self) -> impl Iterator<Item = ActionId> + Clone {
        (0..self.actions.len()).map(ActionId::from_index)
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> + Clone {
        (0..self.states.len()).map(StateId::from_index)
    }

    pub fn all_agents(&self) -> AgentSet {
        AgentSet::full(self.n_agents())
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn agent_name(&self, agent: AgentId) -> &str {
        &self.agents[agent.index()]
    }

    pub fn action_name(&self, action: ActionId) -> &str {
        &self.actions[action.index()]
    }

    pub fn state_name(&self, state: StateId) -> &str {
        &self.states[state.index()]
    }

    pub fn agent_by_name(&self, name: &str) -> Option<AgentId> {
        self.agents
            .iter()
            .position(|n| n == name)
            .map(AgentId::from_index)
    }

    pub fn action_by_name(&self, name: &str) -> Option<ActionId> {
        self.actions
            .iter()
            .position(|n| n == name)
            .map(ActionId::from_index)
    }

    pub fn state_by_name(&self, name: &str) -> Option<StateId> {
        self.states
            .iter()
            .position(|n| n == name)
            .map(StateId::from_index)
    }

    /// Parses a whitespace-separated list of action names.
    pub fn actions_from_names(&self, text: &str) -> Option<Vec<ActionId>> {
        text.split_whitespace().map(|n| self.action_by_name(n)).collect()
    }

    /// Renders an action sequence as space-separated names (empty for ε).
    pub fn format_actions(&self, alpha: &[ActionId]) -> String {
        alpha
            .iter()
            .map(|&a| self.action_name(a))
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn format_agents(&self, set: AgentSet) -> String {
        let names: Vec<&str> = set.iter().map(|a| self.agent_name(a)).collect();
        format!("{{{}}}", names.join(", "))
    }

    #[inline]
    pub fn dom(&self, action: ActionId) -> AgentId {
        self.dom[action.index()]
    }

    /// Actions owned by `agent`, in declaration order.
    pub fn actions_of(&self, agent: AgentId) -> impl Iterator<Item = ActionId> + '_ {
        self.actions().filter(move |&a| self.dom(a) == agent)
    }

    #[inline]
    pub fn step(&self, state: StateId, action: ActionId) -> StateId {
        self.step[state.index() * self.actions.len() + action.index()]
    }

    /// `s·α`, folding `step` from left to right.
    pub fn run(&self, state: StateId, alpha: &[ActionId]) -> StateId {
        alpha.iter().fold(state, |s, &a| self.step(s, a))
    }

    /// Observation label of `agent` in `state`.
    pub fn obs(&self, state: StateId, agent: AgentId) -> &str {
        &self.labels[self.obs_class(state, agent) as usize]
    }

    /// Interned observation: equal classes iff equal labels.
    #[inline]
    pub fn obs_class(&self, state: StateId, agent: AgentId) -> u32 {
        self.obs[state.index() * self.agents.len() + agent.index()]
    }

    #[inline]
    pub fn same_obs(&self, s: StateId, t: StateId, agent: AgentId) -> bool {
        self.obs_class(s, agent) == self.obs_class(t, agent)
    }

    /// Agents whose observation differs between `s` and `t`.
    pub fn obs_difference(&self, s: StateId, t: StateId) -> AgentSet {
        self.agents().filter(|&u| !self.same_obs(s, t, u)).collect()
    }

    /// Whether `agent` observes the same label in every state.
    pub fn has_constant_obs(&self, agent: AgentId) -> bool {
        let first = self.obs_class(self.initial, agent);
        self.states().all(|s| self.obs_class(s, agent) == first)
    }

    pub fn policy(&self, state: StateId) -> &LocalPolicy {
        &self.policies[state.index()]
    }

    pub fn policies(&self) -> &[LocalPolicy] {
        &self.policies
    }

    /// Whether `from ⤳_state to`.
    #[inline]
    pub fn allows(&self, state: StateId, from: AgentId, to: AgentId) -> bool {
        self.policies[state.index()].allows(from, to)
    }

    /// The set of agents that may interfere with `agent` in `state`.
    pub fn interfering_set(&self, agent: AgentId, state: StateId) -> AgentSet {
        self.policies[state.index()].interfering(agent)
    }

    /// All non-reflexive edges, in (state, source, target) order.
    pub fn policy_edges(&self) -> Vec<PolicyEdge> {
        self.states()
            .flat_map(|s| {
                self.policy(s)
                    .edges()
                    .map(move |(from, to)| PolicyEdge { state: s, from, to })
            })
            .collect()
    }

    /// Whether every state carries the same local policy.
    pub fn is_global_policy(&self) -> bool {
        self.policies.windows(2).all(|w| w[0] == w[1])
    }

    /// The same system with a different policy; all policies must be over the
    /// same agents and reflexive (guaranteed by [`LocalPolicy`]).
    pub fn with_policies(&self, policies: Vec<LocalPolicy>) -> System {
        assert_eq!(policies.len(), self.n_states(), "one policy per state");
        assert!(policies.iter().all(|p| p.n_agents() == self.n_agents()));
        System {
            policies,
            ..self.clone()
        }
    }

    /// The same system with one non-reflexive edge removed.
    pub fn without_edge(&self, edge: PolicyEdge) -> System {
        let mut policies = self.policies.clone();
        policies[edge.state.index()].remove_edge(edge.from, edge.to);
        self.with_policies(policies)
    }

    /// The same system with `policy` installed in every state.
    pub fn with_global_policy(&self, policy: LocalPolicy) -> System {
        self.with_policies(vec![policy; self.n_states()])
    }

    /// Converts back into an unchecked description (used by serialization
    /// and for building variants of a system).
    pub fn to_raw(&self) -> RawSystem {
        let mut raw = RawSystem::default();
        for name in &self.agents {
            raw.agent(name);
        }
        for a in self.actions() {
            raw.action(self.action_name(a), self.agent_name(self.dom(a)));
        }
        for s in self.states() {
            if s == self.initial {
                raw.init_state(self.state_name(s));
            } else {
                raw.state(self.state_name(s));
            }
        }
        for s in self.states() {
            for a in self.actions() {
                let t = self.step(s, a);
                if t != s {
                    raw.step(self.state_name(s), self.action_name(a), self.state_name(t));
                }
            }
        }
        for s in self.states() {
            for u in self.agents() {
                let label = self.obs(s, u);
                if label != DEFAULT_OBSERVATION {
                    raw.obs(self.state_name(s), self.agent_name(u), label);
                }
            }
        }
        for e in self.policy_edges() {
            raw.edge(
                self.state_name(e.state),
                self.agent_name(e.from),
                self.agent_name(e.to),
            );
        }
        raw
    }
}

/// A declaration in an unchecked description, optionally tied to its
/// position in a source file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Spanned<T> {
    pub item: T,
    pub span: Option<SourceSpan>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawAction {
    pub name: String,
    pub agent: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawState {
    pub name: String,
    pub initial: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawStep {
    pub from: String,
    pub action: String,
    pub to: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawObs {
    pub state: String,
    pub agent: String,
    pub label: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawEdge {
    pub state: String,
    pub from: String,
    pub to: String,
}

/// An unchecked system description referring to everything by name.
///
/// Built by the parser or programmatically; [`validate`] turns it into a
/// [`System`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RawSystem {
    pub agents: Vec<Spanned<String>>,
    pub actions: Vec<Spanned<RawAction>>,
    pub states: Vec<Spanned<RawState>>,
    pub steps: Vec<Spanned<RawStep>>,
    pub obs: Vec<Spanned<RawObs>>,
    pub edges: Vec<Spanned<RawEdge>>,
}

impl RawSystem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn agent(&mut self, name: &str) -> &mut Self {
        self.agents.push(Spanned {
            item: name.to_string(),
            span: None,
        });
        self
    }

    pub fn action(&mut self, name: &str, agent: &str) -> &mut Self {
        self.actions.push(Spanned {
            item: RawAction {
                name: name.to_string(),
                agent: agent.to_string(),
            },
            span: None,
        });
        self
    }

    pub fn state(&mut self, name: &str) -> &mut Self {
        self.push_state(name, false)
    }

    pub fn init_state(&mut self, name: &str) -> &mut Self {
        self.push_state(name, true)
    }

    fn push_state(&mut self, name: &str, initial: bool) -> &mut Self {
        self.states.push(Spanned {
            item: RawState {
                name: name.to_string(),
                initial,
            },
            span: None,
        });
        self
    }

    pub fn step(&mut self, from: &str, action: &str, to: &str) -> &mut Self {
        self.steps.push(Spanned {
            item: RawStep {
                from: from.to_string(),
                action: action.to_string(),
                to: to.to_string(),
            },
            span: None,
        });
        self
    }

    pub fn obs(&mut self, state: &str, agent: &str, label: &str) -> &mut Self {
        self.obs.push(Spanned {
            item: RawObs {
                state: state.to_string(),
                agent: agent.to_string(),
                label: label.to_string(),
            },
            span: None,
        });
        self
    }

    pub fn edge(&mut self, state: &str, from: &str, to: &str) -> &mut Self {
        self.edges.push(Spanned {
            item: RawEdge {
                state: state.to_string(),
                from: from.to_string(),
                to: to.to_string(),
            },
            span: None,
        });
        self
    }

    /// Shorthand for [`validate`] that drops warnings.
    pub fn build(&self) -> Result<System, ValidationErrors> {
        validate(self).map(|v| v.system)
    }
}

/// A validated system together with non-fatal findings.
#[derive(Clone, Debug)]
pub struct Validated {
    pub system: System,
    pub warnings: Vec<Warning>,
}

fn declare<'a>(
    names: impl Iterator<Item = (&'a str, Option<SourceSpan>)>,
    category: &'static str,
    errors: &mut Vec<ModelError>,
) -> (Vec<String>, HashMap<String, usize>) {
    let mut list = Vec::new();
    let mut index = HashMap::new();
    for (name, span) in names {
        if index.contains_key(name) {
            errors.push(ModelError::new(
                ModelErrorKind::Duplicate {
                    category,
                    name: name.to_string(),
                },
                span,
            ));
            continue;
        }
        index.insert(name.to_string(), list.len());
        list.push(name.to_string());
    }
    (list, index)
}

fn resolve(
    index: &HashMap<String, usize>,
    name: &str,
    category: &'static str,
    span: Option<SourceSpan>,
    errors: &mut Vec<ModelError>,
) -> Option<usize> {
    let found = index.get(name).copied();
    if found.is_none() {
        errors.push(ModelError::new(
            ModelErrorKind::Unknown {
                category,
                name: name.to_string(),
            },
            span,
        ));
    }
    found
}

/// Checks an unchecked description and builds the [`System`].
///
/// Reflexive policy edges are implied, unspecified transitions are
/// self-loops and unspecified observations are [`DEFAULT_OBSERVATION`].
/// Unreachable states are dropped with a warning.
pub fn validate(raw: &RawSystem) -> Result<Validated, ValidationErrors> {
    let mut errors = Vec::new();
    let mut warnings = Vec::new();

    let (agents, agent_index) = declare(
        raw.agents.iter().map(|d| (d.item.as_str(), d.span)),
        "agent",
        &mut errors,
    );
    if agents.len() > MAX_AGENTS {
        errors.push(ModelError::new(
            ModelErrorKind::TooManyAgents {
                count: agents.len(),
                limit: MAX_AGENTS,
            },
            raw.agents.get(MAX_AGENTS).and_then(|d| d.span),
        ));
    }
    let (actions, action_index) = declare(
        raw.actions.iter().map(|d| (d.item.name.as_str(), d.span)),
        "action",
        &mut errors,
    );
    let mut dom = Vec::with_capacity(actions.len());
    let mut seen_action = vec![false; actions.len()];
    for d in &raw.actions {
        let Some(&a) = action_index.get(&d.item.name) else {
            continue;
        };
        if std::mem::replace(&mut seen_action[a], true) {
            continue;
        }
        match agent_index.get(&d.item.agent) {
            Some(&u) => dom.push(Some(AgentId::from_index(u))),
            None => {
                errors.push(ModelError::new(
                    ModelErrorKind::Unknown {
                        category: "agent",
                        name: d.item.agent.clone(),
                    },
                    d.span,
                ));
                dom.push(None);
            }
        }
    }

    let (states, state_index) = declare(
        raw.states.iter().map(|d| (d.item.name.as_str(), d.span)),
        "state",
        &mut errors,
    );
    let inits: Vec<&Spanned<RawState>> = raw.states.iter().filter(|d| d.item.initial).collect();
    let initial = match inits.len() {
        0 => {
            errors.push(ModelError::new(ModelErrorKind::NoInitialState, None));
            None
        }
        1 => state_index.get(&inits[0].item.name).copied(),
        _ => {
            errors.push(ModelError::new(
                ModelErrorKind::MultipleInitialStates,
                inits[1].span,
            ));
            None
        }
    };

    let (n_s, n_a, n_d) = (states.len(), actions.len(), agents.len());
    let mut step: Vec<Option<(usize, Option<SourceSpan>)>> = vec![None; n_s * n_a];
    for d in &raw.steps {
        let from = resolve(&state_index, &d.item.from, "state", d.span, &mut errors);
        let action = resolve(&action_index, &d.item.action, "action", d.span, &mut errors);
        let to = resolve(&state_index, &d.item.to, "state", d.span, &mut errors);
        let (Some(from), Some(action), Some(to)) = (from, action, to) else {
            continue;
        };
        let slot = &mut step[from * n_a + action];
        match slot {
            None => *slot = Some((to, d.span)),
            Some((prev, _)) if *prev == to => warnings.push(Warning::new(
                format!("duplicate step {} {} {}", d.item.from, d.item.action, d.item.to),
                d.span,
            )),
            Some(_) => errors.push(ModelError::new(
                ModelErrorKind::ConflictingStep {
                    state: d.item.from.clone(),
                    action: d.item.action.clone(),
                },
                d.span,
            )),
        }
    }

    let mut obs: Vec<Option<String>> = vec![None; n_s * n_d];
    for d in &raw.obs {
        let state = resolve(&state_index, &d.item.state, "state", d.span, &mut errors);
        let agent = resolve(&agent_index, &d.item.agent, "agent", d.span, &mut errors);
        let (Some(state), Some(agent)) = (state, agent) else {
            continue;
        };
        let slot = &mut obs[state * n_d + agent];
        match slot {
            None => *slot = Some(d.item.label.clone()),
            Some(prev) if *prev == d.item.label => warnings.push(Warning::new(
                format!("duplicate obs {} {} {}", d.item.state, d.item.agent, d.item.label),
                d.span,
            )),
            Some(_) => errors.push(ModelError::new(
                ModelErrorKind::ConflictingObs {
                    state: d.item.state.clone(),
                    agent: d.item.agent.clone(),
                },
                d.span,
            )),
        }
    }

    let mut edges: Vec<Vec<(AgentId, AgentId)>> = vec![Vec::new(); n_s];
    let mut seen_edges = std::collections::HashSet::new();
    for d in &raw.edges {
        let state = resolve(&state_index, &d.item.state, "state", d.span, &mut errors);
        let from = resolve(&agent_index, &d.item.from, "agent", d.span, &mut errors);
        let to = resolve(&agent_index, &d.item.to, "agent", d.span, &mut errors);
        let (Some(state), Some(from), Some(to)) = (state, from, to) else {
            continue;
        };
        if from == to {
            continue;
        }
        if !seen_edges.insert((state, from, to)) {
            warnings.push(Warning::new(
                format!("duplicate edge {} {} {}", d.item.state, d.item.from, d.item.to),
                d.span,
            ));
            continue;
        }
        edges[state].push((AgentId::from_index(from), AgentId::from_index(to)));
    }

    if !errors.is_empty() || agents.len() > MAX_AGENTS {
        return Err(ValidationErrors(errors));
    }
    let initial = initial.expect("initial state resolved when no errors were reported");
    let dom: Vec<AgentId> = dom.into_iter().map(|d| d.expect("resolved")).collect();

    // Reachability from the initial state, over the completed step function.
    let target = |s: usize, a: usize| step[s * n_a + a].map_or(s, |(t, _)| t);
    let mut reachable = vec![false; n_s];
    let mut queue = VecDeque::from([initial]);
    reachable[initial] = true;
    while let Some(s) = queue.pop_front() {
        for a in 0..n_a {
            let t = target(s, a);
            if !reachable[t] {
                reachable[t] = true;
                queue.push_back(t);
            }
        }
    }
    let removed: Vec<&str> = (0..n_s)
        .filter(|&s| !reachable[s])
        .map(|s| states[s].as_str())
        .collect();
    if !removed.is_empty() {
        warnings.push(Warning::new(
            format!("removed unreachable states: {}", removed.join(", ")),
            None,
        ));
    }
    let mut renumber = vec![usize::MAX; n_s];
    let mut kept = Vec::new();
    for s in (0..n_s).filter(|&s| reachable[s]) {
        renumber[s] = kept.len();
        kept.push(s);
    }

    let mut flat_step = Vec::with_capacity(kept.len() * n_a);
    for &s in &kept {
        for a in 0..n_a {
            flat_step.push(StateId::from_index(renumber[target(s, a)]));
        }
    }
    let mut raw_obs = Vec::with_capacity(kept.len() * n_d);
    for &s in &kept {
        for u in 0..n_d {
            raw_obs.push(
                obs[s * n_d + u]
                    .clone()
                    .unwrap_or_else(|| DEFAULT_OBSERVATION.to_string()),
            );
        }
    }
    let policies = kept
        .iter()
        .map(|&s| LocalPolicy::from_edges(n_d, edges[s].iter().copied()))
        .collect();

    let system = assemble(
        agents,
        actions,
        dom,
        kept.iter().map(|&s| states[s].clone()).collect(),
        StateId::from_index(renumber[initial]),
        flat_step,
        raw_obs,
        policies,
    );
    Ok(Validated { system, warnings })
}

/// Interns observation labels in (state, agent) scan order so that equal
/// systems compare equal regardless of how they were built.
#[allow(clippy::too_many_arguments)]
fn assemble(
    agents: Vec<String>,
    actions: Vec<String>,
    dom: Vec<AgentId>,
    states: Vec<String>,
    initial: StateId,
    step: Vec<StateId>,
    raw_obs: Vec<String>,
    policies: Vec<LocalPolicy>,
) -> System {
    let mut labels: Vec<String> = Vec::new();
    let mut lookup: HashMap<String, u32> = HashMap::new();
    let obs = raw_obs
        .into_iter()
        .map(|label| {
            *lookup.entry(label.clone()).or_insert_with(|| {
                labels.push(label);
                (labels.len() - 1) as u32
            })
        })
        .collect();
    System {
        agents,
        actions,
        dom,
        states,
        initial,
        step,
        labels,
        obs,
        policies,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn fig2_shape() {
        let sys = fixtures::fig2();
        assert_eq!((sys.n_states(), sys.n_actions(), sys.n_agents()), (3, 2, 3));
    }

    #[test]
    fn run_follows_transitions() {
        let sys = fixtures::fig1();
        let eps = sys.state_by_name("e").unwrap();
        let ah = sys.state_by_name("ah").unwrap();
        assert_eq!(sys.run(eps, &sys.actions_from_names("a h").unwrap()), ah);
        for s in sys.states() {
            assert_eq!(sys.run(s, &[]), s);
        }
        let fig2 = fixtures::fig2();
        let q0 = fig2.state_by_name("q0").unwrap();
        assert_eq!(
            fig2.run(q0, &fig2.actions_from_names("b b").unwrap()),
            fig2.state_by_name("q2").unwrap()
        );
    }

    #[test]
    fn interfering_sets_follow_local_policy() {
        let sys = fixtures::fig1();
        let l = sys.agent_by_name("L").unwrap();
        let h = sys.agent_by_name("H").unwrap();
        let eps = sys.state_by_name("e").unwrap();
        let a = sys.state_by_name("a").unwrap();
        assert_eq!(sys.interfering_set(l, eps), [l, h].into_iter().collect());
        assert_eq!(sys.interfering_set(l, a), AgentSet::singleton(l));
        for s in sys.states() {
            for u in sys.agents() {
                assert!(sys.interfering_set(u, s).contains(u));
            }
        }
    }

    #[test]
    fn identity_edge_is_normalized_away() {
        let mut raw = RawSystem::new();
        raw.agent("L")
            .action("l", "L")
            .init_state("s")
            .edge("s", "L", "L");
        let sys = raw.build().unwrap();
        assert!(sys.policy(sys.initial()).is_reflexive_only());
    }

    #[test]
    fn unknown_state_is_reported() {
        let mut raw = RawSystem::new();
        raw.agent("L")
            .action("l", "L")
            .init_state("s")
            .step("s", "l", "q9");
        let err = raw.build().unwrap_err();
        assert_eq!(err.0.len(), 1);
        assert_eq!(err.0[0].to_string(), "unknown state q9");
    }

    #[test]
    fn duplicates_and_conflicts() {
        let mut raw = RawSystem::new();
        raw.agent("L")
            .agent("L")
            .action("l", "L")
            .init_state("s")
            .state("t")
            .step("s", "l", "t")
            .step("s", "l", "s")
            .obs("t", "L", "1")
            .obs("t", "L", "2");
        let err = raw.build().unwrap_err();
        let kinds: Vec<String> = err.0.iter().map(|e| e.to_string()).collect();
        assert_eq!(
            kinds,
            vec![
                "duplicate agent L",
                "conflicting step declarations for state s, action l",
                "conflicting obs declarations for state t, agent L",
            ]
        );
    }

    #[test]
    fn identical_duplicates_are_warnings() {
        let mut raw = RawSystem::new();
        raw.agent("L")
            .action("l", "L")
            .init_state("s")
            .state("t")
            .step("s", "l", "t")
            .step("s", "l", "t");
        let v = validate(&raw).unwrap();
        assert_eq!(v.warnings.len(), 1);
    }

    #[test]
    fn initial_state_errors() {
        let mut raw = RawSystem::new();
        raw.agent("L").state("s");
        assert!(matches!(
            raw.build().unwrap_err().0[0].kind,
            ModelErrorKind::NoInitialState
        ));
        raw.init_state("t").init_state("u");
        assert!(matches!(
            raw.build().unwrap_err().0[0].kind,
            ModelErrorKind::MultipleInitialStates
        ));
    }

    #[test]
    fn unreachable_states_are_stripped() {
        let mut raw = RawSystem::new();
        raw.agent("L")
            .action("l", "L")
            .init_state("s")
            .state("orphan")
            .state("t")
            .step("s", "l", "t")
            .step("orphan", "l", "t")
            .obs("t", "L", "x");
        let v = validate(&raw).unwrap();
        assert_eq!(v.system.n_states(), 2);
        assert_eq!(v.system.state_name(StateId(1)), "t");
        assert_eq!(v.system.obs(StateId(1), AgentId(0)), "x");
        assert!(v.warnings[0].message.contains("orphan"));
    }

    #[test]
    fn agent_set_ops() {
        let s: AgentSet = [AgentId(0), AgentId(5), AgentId(127)].into_iter().collect();
        assert_eq!(s.len(), 3);
        assert_eq!(
            s.iter().collect::<Vec<_>>(),
            vec![AgentId(0), AgentId(5), AgentId(127)]
        );
        assert!(AgentSet::full(128).contains(AgentId(127)));
        assert_eq!(
            AgentSet::full(3).difference(s),
            AgentSet::from_iter([AgentId(1), AgentId(2)])
        );
    }
}
