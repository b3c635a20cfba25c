//! The JSON document printed on standard output.

use nipol_core::{AgentSet, PolicyEdge, Stats, System, Verdict, Warning, Witness};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

pub const TOOL: &str = "nipol";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Fields are emitted in a fixed order: tool, version, command,
/// input_digest, [timestamp,] result, witness, stats, warnings.
#[derive(Clone, Debug)]
pub struct Report {
    pub command: String,
    pub input_digest: Option<String>,
    pub timestamp: Option<u64>,
    pub result: Map<String, Value>,
    pub witness: Option<Value>,
    pub stats: Option<Stats>,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn new(command: impl Into<String>) -> Self {
        Report {
            command: command.into(),
            input_digest: None,
            timestamp: None,
            result: Map::new(),
            witness: None,
            stats: None,
            warnings: Vec::new(),
        }
    }

    pub fn input(mut self, bytes: &[u8]) -> Self {
        self.input_digest = Some(digest(bytes));
        self
    }

    pub fn set(&mut self, key: &str, value: impl Into<Value>) {
        self.result.insert(key.to_string(), value.into());
    }

    pub fn warnings(&mut self, warnings: &[Warning]) {
        self.warnings.extend(warnings.iter().map(|w| w.to_string()));
    }

    /// Records property, verdict, witness and stats of `v`.
    pub fn verdict(&mut self, sys: &System, v: &Verdict) {
        self.set("property", v.property.name());
        self.set("holds", v.holds);
        self.set("verdict", verdict_word(v));
        self.witness = v.witness.as_ref().map(|w| witness_json(sys, w));
        self.stats = Some(v.stats);
    }

    pub fn to_json(&self) -> Value {
        let mut doc = Map::new();
        doc.insert("tool".into(), TOOL.into());
        doc.insert("version".into(), VERSION.into());
        doc.insert("command".into(), self.command.clone().into());
        doc.insert(
            "input_digest".into(),
            self.input_digest.clone().map_or(Value::Null, Value::from),
        );
        if let Some(t) = self.timestamp {
            doc.insert("timestamp".into(), t.into());
        }
        doc.insert("result".into(), Value::Object(self.result.clone()));
        doc.insert("witness".into(), self.witness.clone().unwrap_or(Value::Null));
        doc.insert("stats".into(), self.stats.map_or(Value::Null, stats_json));
        doc.insert("warnings".into(), self.warnings.clone().into());
        Value::Object(doc)
    }

    pub fn render(&self) -> String {
        let mut text = serde_json::to_string_pretty(&self.to_json()).expect("report serializes");
        text.push('\n');
        text
    }
}

pub fn digest(bytes: &[u8]) -> String {
    format!("sha256:{}", hex::encode(Sha256::digest(bytes)))
}

fn verdict_word(v: &Verdict) -> &'static str {
    use nipol_core::Property::*;
    match (v.property, v.holds) {
        (TUniformity | IUniformity, true) => "uniform",
        (TUniformity | IUniformity, false) => "not uniform",
        (_, true) => "secure",
        (_, false) => "insecure",
    }
}

pub fn stats_json(s: Stats) -> Value {
    json!({
        "iterations": s.iterations,
        "relations": s.relations,
        "pairs": s.pairs,
        "evaluations": s.evaluations,
    })
}

fn agents_json(sys: &System, set: AgentSet) -> Value {
    set.iter()
        .map(|a| sys.agent_name(a).to_string())
        .collect::<Vec<_>>()
        .into()
}

pub fn witness_json(sys: &System, w: &Witness) -> Value {
    match w {
        Witness::Flow(f) => json!({
            "kind": "flow",
            "agent": sys.agent_name(f.agent),
            "state": sys.state_name(f.state),
            "action": sys.action_name(f.action),
            "alpha": sys.format_actions(&f.alpha),
            "obs_with": f.obs_with,
            "obs_without": f.obs_without,
            "description": w.describe(sys),
        }),
        Witness::Equivalence(e) => json!({
            "kind": "equivalence",
            "agent": sys.agent_name(e.agent),
            "state": sys.state_name(e.state),
            "alpha": sys.format_actions(&e.alpha),
            "beta": sys.format_actions(&e.beta),
            "obs_alpha": e.obs_alpha,
            "obs_beta": e.obs_beta,
            "description": w.describe(sys),
        }),
        Witness::Policy(p) => json!({
            "kind": "policy",
            "agent": sys.agent_name(p.agent),
            "state": sys.state_name(p.state),
            "other": sys.state_name(p.other),
            "interfering": agents_json(sys, p.interfering),
            "other_interfering": agents_json(sys, p.other_interfering),
            "description": w.describe(sys),
        }),
    }
}

pub fn edges_json(sys: &System, edges: &[PolicyEdge]) -> Value {
    edges
        .iter()
        .map(|e| {
            json!({
                "state": sys.state_name(e.state),
                "from": sys.agent_name(e.from),
                "to": sys.agent_name(e.to),
            })
        })
        .collect::<Vec<_>>()
        .into()
}
