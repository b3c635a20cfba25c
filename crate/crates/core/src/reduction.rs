//! Systems whose i-security encodes graph 3-colorability.
//!
//! For a graph `G` the system `M^G` has agents `h`, `L` and, per vertex `u`,
//! an agent `u` with actions `u=0`, `u=1`, `u=2` plus agents `u!0`, `u!1`,
//! `u!2` with one action each (named like the agent). From the initial
//! state, `h` leads into a chain of gadgets with restrictive policies; any
//! other action leads into a copy of the same chain where every agent may
//! interfere with every other. `L` observes `1` only at the end of the
//! copy. The system is insecure iff `G` is 3-colorable.
//!
//! State names: `H.j{k}` / `P.j{k}` for the junctions between gadgets (the
//! final ones are `last` and `last'`), `{B}.{u}.pick{i}` for color choices,
//! and `{B}.e{k}.{u}={i}[.mid|.ok]`, `{B}.e{k}.{u}={i}.{v}={j}[.mid]` inside
//! the gadget of the `k`-th edge `(u, v)`.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{AnalysisError, ModelError, ModelErrorKind, SourceSpan, ValidationErrors};
use crate::model::{ActionId, AgentSet, RawSystem, StateId, System};

pub const MAX_BRUTE_FORCE_VERTICES: usize = 20;

const HIDE: &str = "hide";
const LAST: &str = "last";
const LAST_PRIME: &str = "last'";

/// A simple undirected graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    vertices: Vec<String>,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Panics on self-loops, repeated edges or out-of-range endpoints.
    pub fn new(vertices: Vec<String>, edges: Vec<(usize, usize)>) -> Self {
        let mut seen = HashSet::new();
        for &(u, v) in &edges {
            assert!(
                u < vertices.len() && v < vertices.len(),
                "edge endpoint out of range"
            );
            assert_ne!(u, v, "self-loop");
            assert!(seen.insert((u.min(v), u.max(v))), "repeated edge");
        }
        Graph { vertices, edges }
    }

    /// Complete graph on vertices `k0..k{n-1}`.
    pub fn complete(n: usize) -> Self {
        let vertices = (0..n).map(|i| format!("k{i}")).collect();
        let edges = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        Graph::new(vertices, edges)
    }

    /// `1..=max_vertices` vertices named `v0..`, each possible edge present
    /// with probability `density`.
    pub fn random(max_vertices: usize, density: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=max_vertices.max(1));
        let vertices = (0..n).map(|i| format!("v{i}")).collect();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.gen_bool(density) {
                    edges.push((i, j));
                }
            }
        }
        Graph::new(vertices, edges)
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn is_proper_coloring(&self, colors: &[u8]) -> bool {
        colors.len() == self.vertices.len()
            && colors.iter().all(|&c| c < 3)
            && self.edges.iter().all(|&(u, v)| colors[u] != colors[v])
    }
}

fn graph_error(message: String, span: SourceSpan) -> ModelError {
    ModelError::new(ModelErrorKind::Syntax(message), Some(span))
}

/// Reads `vertex NAME` and `edge NAME NAME` lines; `#` starts a comment.
pub fn parse_graph(text: &str) -> Result<Graph, ValidationErrors> {
    let mut vertices: Vec<String> = Vec::new();
    let mut raw_edges = Vec::new();
    let mut errors = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        let words: Vec<&str> = line.split_whitespace().collect();
        if words.is_empty() {
            continue;
        }
        let start = line.find(words[0]).unwrap_or(0) + 1;
        let span = SourceSpan::new(i + 1, start, line.trim_end().chars().count().max(start));
        match words.as_slice() {
            ["vertex", name] => {
                if ["h", "L"].contains(name) || name.contains(['!', '=', '.']) {
                    errors.push(graph_error(format!("reserved vertex name {name}"), span));
                } else if vertices.iter().any(|v| v == name) {
                    errors.push(graph_error(format!("duplicate vertex {name}"), span));
                } else {
                    vertices.push(name.to_string());
                }
            }
            ["edge", u, v] => raw_edges.push((u.to_string(), v.to_string(), span)),
            [head, ..] if *head == "vertex" || *head == "edge" => {
                errors.push(graph_error(format!("malformed {head} line"), span))
            }
            [head, ..] => errors.push(graph_error(format!("unknown directive `{head}`"), span)),
            [] => unreachable!(),
        }
    }
    let mut edges = Vec::new();
    let mut seen = HashSet::new();
    for (u, v, span) in raw_edges {
        let find = |name: &str| vertices.iter().position(|x| x == name);
        match (find(&u), find(&v)) {
            (Some(a), Some(b)) if a == b => errors.push(graph_error(format!("self-loop on {u}"), span)),
            (Some(a), Some(b)) => {
                if seen.insert((a.min(b), a.max(b))) {
                    edges.push((a, b));
                } else {
                    errors.push(graph_error(format!("duplicate edge {u} {v}"), span));
                }
            }
            (a, _) => {
                let missing = if a.is_none() { u } else { v };
                errors.push(graph_error(format!("unknown vertex {missing}"), span));
            }
        }
    }
    if errors.is_empty() {
        Ok(Graph { vertices, edges })
    } else {
        errors.truncate(crate::io::MAX_REPORTED_ERRORS);
        Err(ValidationErrors(errors))
    }
}

/// Number of states of `M^G`.
pub fn expected_state_count(g: &Graph) -> usize {
    8 * g.vertices.len() + 50 * g.edges.len() + 4
}

/// Number of agents of `M^G`.
pub fn expected_agent_count(g: &Graph) -> usize {
    4 * g.vertices.len() + 2
}

fn eq(u: &str, i: usize) -> String {
    format!("{u}={i}")
}

fn ne(u: &str, i: usize) -> String {
    format!("{u}!{i}")
}

fn others(i: usize) -> [usize; 2] {
    match i {
        0 => [1, 2],
        1 => [0, 2],
        _ => [0, 1],
    }
}

/// One of the two gadget chains: `H` (restrictive policies) or `P`
/// (complete policies).
struct Branch<'a> {
    raw: &'a mut RawSystem,
    prefix: &'static str,
    restrictive: bool,
    all_agents: &'a [String],
}

impl Branch<'_> {
    fn junction(&self, k: usize, last: usize) -> String {
        match (k == last, self.prefix) {
            (true, "H") => LAST.to_string(),
            (true, _) => LAST_PRIME.to_string(),
            (false, p) => format!("{p}.j{k}"),
        }
    }

    fn state(&mut self, name: &str, edges: &[(String, String)]) {
        self.raw.state(name);
        if self.restrictive {
            for (from, to) in edges {
                self.raw.edge(name, from, to);
            }
        } else {
            for from in self.all_agents {
                for to in self.all_agents {
                    if from != to {
                        self.raw.edge(name, from, to);
                    }
                }
            }
        }
    }

    fn build(&mut self, g: &Graph) {
        let last = g.vertices.len() + g.edges.len();
        for k in 0..=last {
            let name = self.junction(k, last);
            self.state(&name, &[]);
        }
        let p = self.prefix;
        for (k, u) in g.vertices.iter().enumerate() {
            let (from, to) = (self.junction(k, last), self.junction(k + 1, last));
            for i in 0..3 {
                let pick = format!("{p}.{u}.pick{i}");
                self.state(&pick, &[("h".into(), ne(u, i))]);
                self.raw.step(&from, &eq(u, i), &pick);
                self.raw.step(&pick, "h", &to);
            }
        }
        for (e, &(ui, vi)) in g.edges.iter().enumerate() {
            let k = g.vertices.len() + e;
            let (from, to) = (self.junction(k, last), self.junction(k + 1, last));
            let (u, v) = (&g.vertices[ui], &g.vertices[vi]);
            for i in 0..3 {
                let [j, k2] = others(i);
                let base = format!("{p}.e{e}.{}", eq(u, i));
                let guard = [(ne(u, j), "L".to_string()), (ne(u, k2), "L".to_string())];
                self.state(&base, &guard);
                self.state(&format!("{base}.mid"), &guard);
                self.state(&format!("{base}.ok"), &[]);
                self.raw.step(&from, &eq(u, i), &base);
                self.raw.step(&base, &ne(u, j), &format!("{base}.mid"));
                self.raw
                    .step(&format!("{base}.mid"), &ne(u, k2), &format!("{base}.ok"));
                for jv in 0..3 {
                    let target = format!("{base}.{}", eq(v, jv));
                    self.raw.step(&format!("{base}.ok"), &eq(v, jv), &target);
                    if jv == i {
                        self.state(&target, &[]);
                        continue;
                    }
                    let [x, y] = others(jv);
                    let guard = [(ne(v, x), "L".to_string()), (ne(v, y), "L".to_string())];
                    self.state(&target, &guard);
                    self.state(&format!("{target}.mid"), &guard);
                    self.raw.step(&target, &ne(v, x), &format!("{target}.mid"));
                    self.raw.step(&format!("{target}.mid"), &ne(v, y), &to);
                }
            }
        }
    }
}

/// Builds `M^G`.
pub fn generate_3col_system(g: &Graph) -> System {
    let mut raw = RawSystem::new();
    let mut agents = vec!["h".to_string(), "L".to_string()];
    for u in &g.vertices {
        agents.push(u.clone());
        agents.extend((0..3).map(|i| ne(u, i)));
    }
    for a in &agents {
        raw.agent(a);
    }
    let mut actions = vec![("h".to_string(), "h".to_string()), ("L".into(), "L".into())];
    for u in &g.vertices {
        actions.extend((0..3).map(|i| (eq(u, i), u.clone())));
        actions.extend((0..3).map(|i| (ne(u, i), ne(u, i))));
    }
    for (a, d) in &actions {
        raw.action(a, d);
    }

    raw.init_state("s0");
    for a in agents.iter().filter(|a| *a != "h" && *a != "L") {
        raw.edge("s0", a, "L");
    }
    raw.state(HIDE);
    raw.step("s0", "h", HIDE);
    let (h_start, p_start) = if g.vertices.is_empty() && g.edges.is_empty() {
        (LAST.to_string(), LAST_PRIME.to_string())
    } else {
        ("H.j0".to_string(), "P.j0".to_string())
    };
    for (a, _) in actions.iter().filter(|(a, _)| a != "h") {
        raw.step(HIDE, a, &h_start);
        raw.step("s0", a, &p_start);
    }
    raw.obs(LAST_PRIME, "L", "1");

    for (prefix, restrictive) in [("H", true), ("P", false)] {
        Branch {
            raw: &mut raw,
            prefix,
            restrictive,
            all_agents: &agents,
        }
        .build(g);
    }
    raw.build().expect("reduction output is a valid system")
}

/// A path from the initial state to `last` along which `L` never learns of
/// the initial `h`, and the coloring read off it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HidingPath {
    /// Starts with `h`.
    pub path: Vec<ActionId>,
    /// Color per vertex, in vertex order.
    pub coloring: Vec<u8>,
}

fn required<T>(found: Option<T>, what: &str) -> Result<T, AnalysisError> {
    found.ok_or_else(|| AnalysisError::NotAReductionInstance(format!("missing {what}")))
}

/// Whether `sys` has the shape produced by [`generate_3col_system`].
pub fn is_reduction_instance(sys: &System) -> bool {
    check_shape(sys).is_ok()
}

struct Shape {
    h: ActionId,
    hide: StateId,
    last: StateId,
}

fn check_shape(sys: &System) -> Result<Shape, AnalysisError> {
    let h = required(sys.action_by_name("h"), "action h")?;
    let h_agent = required(sys.agent_by_name("h"), "agent h")?;
    required(sys.agent_by_name("L"), "agent L")?;
    let hide = required(sys.state_by_name(HIDE), "state hide")?;
    let last = required(sys.state_by_name(LAST), "state last")?;
    required(sys.state_by_name(LAST_PRIME), "state last'")?;
    if sys.dom(h) != h_agent || sys.step(sys.initial(), h) != hide {
        return Err(AnalysisError::NotAReductionInstance(
            "action h does not lead from the initial state to hide".into(),
        ));
    }
    if !(sys.n_agents() - 2).is_multiple_of(4) || sys.n_actions() != 6 * ((sys.n_agents() - 2) / 4) + 2 {
        return Err(AnalysisError::NotAReductionInstance(
            "agent and action counts do not match the gadget layout".into(),
        ));
    }
    Ok(Shape { h, hide, last })
}

/// Depth-first search for a hiding path over (state, agents that know of
/// `h`), abandoning branches where `L` has learnt of it.
pub fn has_hiding_path(sys: &System) -> Result<Option<HidingPath>, AnalysisError> {
    let shape = check_shape(sys)?;
    let l = sys.agent_by_name("L").expect("checked");
    let start_know = sys.policy(sys.initial()).targets(sys.dom(shape.h));
    if start_know.contains(l) {
        return Ok(None);
    }
    let mut visited: HashSet<(StateId, AgentSet)> = HashSet::new();
    let mut path = vec![shape.h];
    let mut stack: Vec<(StateId, AgentSet, usize)> = vec![(shape.hide, start_know, 0)];
    visited.insert((shape.hide, start_know));
    while let Some(top) = stack.last_mut() {
        let (x, know, next) = *top;
        if x == shape.last {
            return Ok(Some(HidingPath {
                coloring: decode_coloring(sys, &path),
                path,
            }));
        }
        if next == sys.n_actions() {
            stack.pop();
            path.pop();
            continue;
        }
        top.2 += 1;
        let b = ActionId::from_index(next);
        let y = sys.step(x, b);
        if y == x {
            continue;
        }
        let actor = sys.dom(b);
        let know2 = if know.contains(actor) {
            know.union(sys.policy(x).targets(actor))
        } else {
            know
        };
        if know2.contains(l) || !visited.insert((y, know2)) {
            continue;
        }
        path.push(b);
        stack.push((y, know2, 0));
    }
    Ok(None)
}

/// Color of each vertex as chosen in its color gadget of the `H` chain.
fn decode_coloring(sys: &System, path: &[ActionId]) -> Vec<u8> {
    let mut colors = Vec::new();
    let mut state = sys.initial();
    for &a in path {
        state = sys.step(state, a);
        let name = sys.state_name(state);
        if let Some(rest) = name.strip_prefix("H.") {
            if let Some(pos) = rest.rfind(".pick") {
                if !rest[..pos].contains('.') {
                    colors.push(rest[pos + 5..].parse().expect("pick index"));
                }
            }
        }
    }
    colors
}

/// Exhaustive search for a proper 3-coloring, assigning vertices in order
/// and backtracking on conflicts.
pub fn brute_force_3coloring(g: &Graph) -> Result<Option<Vec<u8>>, AnalysisError> {
    let n = g.vertices.len();
    if n > MAX_BRUTE_FORCE_VERTICES {
        return Err(AnalysisError::TooLarge {
            vertices: n,
            limit: MAX_BRUTE_FORCE_VERTICES,
        });
    }
    let mut earlier: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(u, v) in &g.edges {
        earlier[u.max(v)].push(u.min(v));
    }
    let mut colors = vec![0u8; n];
    fn assign(k: usize, colors: &mut [u8], earlier: &[Vec<usize>]) -> bool {
        if k == colors.len() {
            return true;
        }
        for c in 0..3 {
            if earlier[k].iter().all(|&w| colors[w] != c) {
                colors[k] = c;
                if assign(k + 1, colors, earlier) {
                    return true;
                }
            }
        }
        false
    }
    Ok(assign(0, &mut colors, &earlier).then_some(colors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn graph_parsing() {
        let g = parse_graph(fixtures::GRAPH_K3).unwrap();
        assert_eq!(g.vertices().len(), 3);
        assert_eq!(g.edges().len(), 3);
        let err = parse_graph("vertex a\nedge a b\nedge a a\nvertex h\n").unwrap_err();
        let msgs: Vec<String> = err.0.iter().map(|e| e.to_string()).collect();
        assert!(msgs.contains(&"unknown vertex b".to_string()), "{msgs:?}");
        assert!(msgs.contains(&"self-loop on a".to_string()), "{msgs:?}");
        assert!(msgs.contains(&"reserved vertex name h".to_string()), "{msgs:?}");
    }

    #[test]
    fn structure_matches_closed_form() {
        for text in [fixtures::GRAPH_SINGLE, fixtures::GRAPH_K3, fixtures::GRAPH_K4] {
            let g = parse_graph(text).unwrap();
            let sys = generate_3col_system(&g);
            assert_eq!(sys.n_states(), expected_state_count(&g));
            assert_eq!(sys.n_agents(), expected_agent_count(&g));
            assert_eq!(sys.n_actions(), 6 * g.vertices().len() + 2);
            assert!(is_reduction_instance(&sys));
        }
        let sys = generate_3col_system(&parse_graph(fixtures::GRAPH_SINGLE).unwrap());
        assert_eq!((sys.n_states(), sys.n_agents()), (12, 6));
    }

    #[test]
    fn brute_force_examples() {
        let k3 = Graph::complete(3);
        let c = brute_force_3coloring(&k3).unwrap().unwrap();
        assert!(k3.is_proper_coloring(&c));
        assert_eq!(c.iter().collect::<HashSet<_>>().len(), 3);
        assert_eq!(brute_force_3coloring(&Graph::complete(4)).unwrap(), None);
        let edge = Graph::new(vec!["a".into(), "b".into()], vec![(0, 1)]);
        let c = brute_force_3coloring(&edge).unwrap().unwrap();
        assert_ne!(c[0], c[1]);
        assert!(matches!(
            brute_force_3coloring(&Graph::complete(21)),
            Err(AnalysisError::TooLarge { vertices: 21, .. })
        ));
    }

    #[test]
    fn hiding_paths() {
        let k3 = parse_graph(fixtures::GRAPH_K3).unwrap();
        let found = has_hiding_path(&generate_3col_system(&k3)).unwrap().unwrap();
        assert!(k3.is_proper_coloring(&found.coloring));
        let k4 = parse_graph(fixtures::GRAPH_K4).unwrap();
        assert_eq!(has_hiding_path(&generate_3col_system(&k4)).unwrap(), None);
        let single = parse_graph(fixtures::GRAPH_SINGLE).unwrap();
        assert!(has_hiding_path(&generate_3col_system(&single)).unwrap().is_some());
        assert!(matches!(
            has_hiding_path(&fixtures::fig1()),
            Err(AnalysisError::NotAReductionInstance(_))
        ));
    }

    #[test]
    fn hiding_path_reaches_last_without_transmission() {
        let k3 = parse_graph(fixtures::GRAPH_K3).unwrap();
        let sys = generate_3col_system(&k3);
        let found = has_hiding_path(&sys).unwrap().unwrap();
        assert_eq!(sys.state_name(sys.run(sys.initial(), &found.path)), "last");
        let l = sys.agent_by_name("L").unwrap();
        let h = sys.agent_by_name("h").unwrap();
        let src = crate::intransitive::sources(&sys, &found.path, l, sys.initial());
        assert!(!src.contains(h));
    }

    #[test]
    fn checker_agrees_with_hiding_path() {
        use crate::intransitive::{check_i_security, SubsetGuard};
        for text in [fixtures::GRAPH_SINGLE, fixtures::GRAPH_K3] {
            let g = parse_graph(text).unwrap();
            let sys = generate_3col_system(&g);
            let v = check_i_security(&sys, SubsetGuard::default()).unwrap();
            let w = v
                .flow_witness()
                .expect("colorable graph gives an insecure system");
            assert_eq!(sys.agent_name(w.agent), "L");
        }
        let k4 = generate_3col_system(&parse_graph(fixtures::GRAPH_K4).unwrap());
        assert!(matches!(
            check_i_security(&k4, SubsetGuard::default()),
            Err(AnalysisError::SubsetGuardExceeded { agents: 18, .. })
        ));
    }
}
