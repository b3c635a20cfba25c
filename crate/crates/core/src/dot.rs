//! Graphviz export. Each state is one node whose label is a rounded table
//! holding its non-default observations and its policy edges; transitions
//! are labelled edges between those nodes. Self-loops are left out.

use std::collections::BTreeSet;
use std::fmt::Write;

use crate::intransitive::{find_intransitively_useless_edges, SubsetGuard};
use crate::model::{PolicyEdge, System, DEFAULT_OBSERVATION};
use crate::transitive::find_useless_edges_t;

/// Overlays drawn on top of the plain export.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Annotation {
    /// Transitively useless policy edges are drawn dashed.
    UselessT,
    /// Intransitively useless policy edges are drawn dotted.
    UselessI,
}

impl Annotation {
    pub fn name(self) -> &'static str {
        match self {
            Annotation::UselessT => "useless-t",
            Annotation::UselessI => "useless-i",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "useless-t" => Some(Annotation::UselessT),
            "useless-i" => Some(Annotation::UselessI),
            _ => None,
        }
    }
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(c),
        }
    }
    out
}

fn quoted(text: &str) -> String {
    format!("\"{}\"", text.replace('\\', "\\\\").replace('"', "\\\""))
}

/// DOT text for `sys`. An annotation whose analysis cannot run (the
/// intransitive one beyond the subset guard) is skipped with a comment.
pub fn to_dot(sys: &System, annotate: &BTreeSet<Annotation>) -> String {
    let mut out = String::new();
    let mut dashed: BTreeSet<PolicyEdge> = BTreeSet::new();
    let mut dotted: BTreeSet<PolicyEdge> = BTreeSet::new();
    for &a in annotate {
        match a {
            Annotation::UselessT => dashed.extend(find_useless_edges_t(sys)),
            Annotation::UselessI => match find_intransitively_useless_edges(sys, SubsetGuard::default()) {
                Ok(edges) => dotted.extend(edges),
                Err(e) => writeln!(out, "// {} skipped: {e}", a.name()).unwrap(),
            },
        }
    }

    out.push_str("digraph system {\n");
    out.push_str("  node [shape=plain fontname=\"Helvetica\"];\n");
    out.push_str("  edge [fontname=\"Helvetica\"];\n");
    out.push_str("  __start [shape=point label=\"\"];\n");
    for s in sys.states() {
        let mut label =
            String::from("<TABLE STYLE=\"rounded\" BORDER=\"1\" CELLBORDER=\"0\" CELLSPACING=\"2\">");
        let title = escape(sys.state_name(s));
        write!(label, "<TR><TD><B>{title}</B></TD></TR>").unwrap();
        for u in sys.agents() {
            let o = sys.obs(s, u);
            if o != DEFAULT_OBSERVATION {
                write!(
                    label,
                    "<TR><TD>obs {} = {}</TD></TR>",
                    escape(sys.agent_name(u)),
                    escape(o)
                )
                .unwrap();
            }
        }
        for (from, to) in sys.policy(s).edges() {
            let e = PolicyEdge { state: s, from, to };
            let style = if dashed.contains(&e) {
                " BORDER=\"1\" STYLE=\"dashed\""
            } else if dotted.contains(&e) {
                " BORDER=\"1\" STYLE=\"dotted\""
            } else {
                ""
            };
            write!(
                label,
                "<TR><TD{style}>{} &#8669; {}</TD></TR>",
                escape(sys.agent_name(from)),
                escape(sys.agent_name(to))
            )
            .unwrap();
        }
        label.push_str("</TABLE>");
        writeln!(out, "  s{} [label=<{label}>];", s.index()).unwrap();
    }
    writeln!(out, "  __start -> s{};", sys.initial().index()).unwrap();
    for s in sys.states() {
        for a in sys.actions() {
            let t = sys.step(s, a);
            if t != s {
                writeln!(
                    out,
                    "  s{} -> s{} [label={}];",
                    s.index(),
                    t.index(),
                    quoted(sys.action_name(a))
                )
                .unwrap();
            }
        }
    }
    out.push_str("}\n");
    out
}
