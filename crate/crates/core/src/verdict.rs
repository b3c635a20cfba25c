//! Verdicts and the witnesses that back negative answers.

use std::fmt;

use crate::model::{ActionId, AgentId, AgentSet, StateId, System};

/// Which notion a verdict or witness talks about.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Property {
    TSecurity,
    TSecurityFromInitial,
    TUniformity,
    ISecurity,
    IUniformity,
    IpSecurity,
    PurgeEquality,
    IpurgeEquality,
}

impl Property {
    pub fn name(self) -> &'static str {
        match self {
            Property::TSecurity => "t-security",
            Property::TSecurityFromInitial => "t-security-from-initial",
            Property::TUniformity => "t-uniformity",
            Property::ISecurity => "i-security",
            Property::IUniformity => "i-uniformity",
            Property::IpSecurity => "ip-security",
            Property::PurgeEquality => "purge-equality",
            Property::IpurgeEquality => "ipurge-equality",
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `dom(action)` must stay hidden from `agent` on `action·alpha` started in
/// `state`, yet `obs_agent(state·action·alpha) ≠ obs_agent(state·alpha)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FlowWitness {
    pub agent: AgentId,
    pub state: StateId,
    pub action: ActionId,
    pub alpha: Vec<ActionId>,
    pub obs_with: String,
    pub obs_without: String,
}

impl FlowWitness {
    pub fn new(sys: &System, agent: AgentId, state: StateId, action: ActionId, alpha: Vec<ActionId>) -> Self {
        let with = sys.run(sys.step(state, action), &alpha);
        let without = sys.run(state, &alpha);
        FlowWitness {
            agent,
            state,
            action,
            obs_with: sys.obs(with, agent).to_string(),
            obs_without: sys.obs(without, agent).to_string(),
            alpha,
        }
    }

    /// Sort key of the canonical minimal witness: shortest `alpha`, then
    /// state, action, `alpha` and agent in declaration order.
    pub fn order_key(&self) -> (usize, StateId, ActionId, &[ActionId], AgentId) {
        (self.alpha.len(), self.state, self.action, &self.alpha, self.agent)
    }
}

/// Two sequences from `state` that the purge function under test identifies,
/// but that lead to different observations for `agent`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EquivalenceWitness {
    pub agent: AgentId,
    pub state: StateId,
    pub alpha: Vec<ActionId>,
    pub beta: Vec<ActionId>,
    pub obs_alpha: String,
    pub obs_beta: String,
}

/// Two states that must look alike to `agent` but carry different sets of
/// interfering agents.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PolicyWitness {
    pub agent: AgentId,
    pub state: StateId,
    pub other: StateId,
    pub interfering: AgentSet,
    pub other_interfering: AgentSet,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Witness {
    Flow(FlowWitness),
    Equivalence(EquivalenceWitness),
    Policy(PolicyWitness),
}

impl Witness {
    pub fn as_flow(&self) -> Option<&FlowWitness> {
        match self {
            Witness::Flow(w) => Some(w),
            _ => None,
        }
    }

    /// One-line human-readable rendering using the system's names.
    pub fn describe(&self, sys: &System) -> String {
        match self {
            Witness::Flow(w) => format!(
                "agent {} in state {}: action {} followed by [{}] gives obs {} but [{}] alone gives obs {}",
                sys.agent_name(w.agent),
                sys.state_name(w.state),
                sys.action_name(w.action),
                sys.format_actions(&w.alpha),
                w.obs_with,
                sys.format_actions(&w.alpha),
                w.obs_without
            ),
            Witness::Equivalence(w) => format!(
                "agent {} from state {}: [{}] and [{}] purge alike but give obs {} and {}",
                sys.agent_name(w.agent),
                sys.state_name(w.state),
                sys.format_actions(&w.alpha),
                sys.format_actions(&w.beta),
                w.obs_alpha,
                w.obs_beta
            ),
            Witness::Policy(w) => format!(
                "agent {} must not distinguish {} and {}, but its interfering sets are {} and {}",
                sys.agent_name(w.agent),
                sys.state_name(w.state),
                sys.state_name(w.other),
                sys.format_agents(w.interfering),
                sys.format_agents(w.other_interfering)
            ),
        }
    }
}

/// Work counters reported alongside a verdict.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Stats {
    /// Worklist items popped (fixpoints) or search nodes expanded.
    pub iterations: u64,
    /// Relations (partitions, subset entries, unwinding members) built.
    pub relations: u64,
    /// State pairs or triples stored.
    pub pairs: u64,
    /// Sequence evaluations performed by enumerating oracles.
    pub evaluations: u64,
}

impl std::ops::AddAssign for Stats {
    fn add_assign(&mut self, rhs: Stats) {
        self.iterations += rhs.iterations;
        self.relations += rhs.relations;
        self.pairs += rhs.pairs;
        self.evaluations += rhs.evaluations;
    }
}

/// Outcome of a check. `witness` is present exactly when `holds` is false.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub property: Property,
    pub holds: bool,
    pub witness: Option<Witness>,
    pub stats: Stats,
}

impl Verdict {
    pub fn holds(property: Property, stats: Stats) -> Self {
        Verdict {
            property,
            holds: true,
            witness: None,
            stats,
        }
    }

    pub fn violated(property: Property, witness: Witness, stats: Stats) -> Self {
        Verdict {
            property,
            holds: false,
            witness: Some(witness),
            stats,
        }
    }

    pub fn flow_witness(&self) -> Option<&FlowWitness> {
        self.witness.as_ref().and_then(Witness::as_flow)
    }
}
