//! The line-oriented `.nipol` system format.
//!
//! ```text
//! agents NAME+
//! action NAME AGENT
//! state NAME [init]
//! step STATE ACTION STATE
//! obs STATE AGENT LABEL
//! edge STATE AGENT AGENT
//! ```
//!
//! `#` starts a comment. Lines may appear in any order; names may be used
//! before they are declared.

use std::fmt::Write as _;

use crate::error::{ModelError, ModelErrorKind, SourceSpan, ValidationErrors};
use crate::model::{
    validate, RawAction, RawEdge, RawObs, RawState, RawStep, RawSystem, Spanned, System, Validated,
};

/// At most this many errors are reported for one file.
pub const MAX_REPORTED_ERRORS: usize = 20;

struct Token<'a> {
    text: &'a str,
    span: SourceSpan,
}

fn tokenize(line_no: usize, line: &str) -> Vec<Token<'_>> {
    let line = line.split('#').next().unwrap_or("");
    let mut tokens = Vec::new();
    let mut start: Option<(usize, usize)> = None;
    for (col, (byte, ch)) in line.char_indices().enumerate() {
        match (ch.is_whitespace(), start) {
            (false, None) => start = Some((byte, col + 1)),
            (true, Some((b, c))) => {
                tokens.push(Token {
                    text: &line[b..byte],
                    span: SourceSpan::new(line_no, c, col),
                });
                start = None;
            }
            _ => {}
        }
    }
    if let Some((b, c)) = start {
        let end = c + line[b..].chars().count() - 1;
        tokens.push(Token {
            text: &line[b..],
            span: SourceSpan::new(line_no, c, end),
        });
    }
    tokens
}

fn syntax(message: String, span: SourceSpan) -> ModelError {
    ModelError::new(ModelErrorKind::Syntax(message), Some(span))
}

/// Reads the description without checking references.
pub fn parse_raw(text: &str) -> Result<RawSystem, ValidationErrors> {
    let mut raw = RawSystem::default();
    let mut errors = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let tokens = tokenize(i + 1, line.strip_suffix('\r').unwrap_or(line));
        let Some(head) = tokens.first() else { continue };
        let line_span = SourceSpan::new(
            i + 1,
            head.span.start,
            tokens.last().map_or(head.span.end, |t| t.span.end),
        );
        let span = Some(line_span);
        let args: Vec<String> = tokens[1..].iter().map(|t| t.text.to_string()).collect();
        let arity = |expected: &str, ok: bool, errors: &mut Vec<ModelError>| {
            if !ok {
                errors.push(syntax(format!("expected `{} {expected}`", head.text), line_span));
            }
            ok
        };
        match head.text {
            "agents" => {
                if arity("NAME+", !args.is_empty(), &mut errors) {
                    for t in &tokens[1..] {
                        raw.agents.push(Spanned {
                            item: t.text.to_string(),
                            span: Some(t.span),
                        });
                    }
                }
            }
            "action" => {
                if arity("NAME AGENT", args.len() == 2, &mut errors) {
                    raw.actions.push(Spanned {
                        item: RawAction {
                            name: args[0].clone(),
                            agent: args[1].clone(),
                        },
                        span,
                    });
                }
            }
            "state" => {
                let ok = args.len() == 1 || (args.len() == 2 && args[1] == "init");
                if arity("NAME [init]", ok, &mut errors) {
                    raw.states.push(Spanned {
                        item: RawState {
                            name: args[0].clone(),
                            initial: args.len() == 2,
                        },
                        span,
                    });
                }
            }
            "step" => {
                if arity("STATE ACTION STATE", args.len() == 3, &mut errors) {
                    raw.steps.push(Spanned {
                        item: RawStep {
                            from: args[0].clone(),
                            action: args[1].clone(),
                            to: args[2].clone(),
                        },
                        span,
                    });
                }
            }
            "obs" => {
                if arity("STATE AGENT LABEL", args.len() == 3, &mut errors) {
                    raw.obs.push(Spanned {
                        item: RawObs {
                            state: args[0].clone(),
                            agent: args[1].clone(),
                            label: args[2].clone(),
                        },
                        span,
                    });
                }
            }
            "edge" => {
                if arity("STATE AGENT AGENT", args.len() == 3, &mut errors) {
                    raw.edges.push(Spanned {
                        item: RawEdge {
                            state: args[0].clone(),
                            from: args[1].clone(),
                            to: args[2].clone(),
                        },
                        span,
                    });
                }
            }
            other => errors.push(syntax(format!("unknown directive `{other}`"), head.span)),
        }
    }
    if errors.is_empty() {
        Ok(raw)
    } else {
        errors.truncate(MAX_REPORTED_ERRORS);
        Err(ValidationErrors(errors))
    }
}

/// Parses and validates a `.nipol` document.
pub fn parse(text: &str) -> Result<Validated, ValidationErrors> {
    let raw = parse_raw(text)?;
    validate(&raw).map_err(|mut e| {
        e.0.sort_by_key(|err| err.span);
        e.0.truncate(MAX_REPORTED_ERRORS);
        e
    })
}

/// Canonical text: sections in fixed order, declaration order within each,
/// self-loop steps, `0` observations and reflexive edges omitted.
pub fn serialize(sys: &System) -> String {
    let raw = sys.to_raw();
    let mut out = String::new();
    if !raw.agents.is_empty() {
        let names: Vec<&str> = raw.agents.iter().map(|a| a.item.as_str()).collect();
        writeln!(out, "agents {}", names.join(" ")).unwrap();
    }
    for a in &raw.actions {
        writeln!(out, "action {} {}", a.item.name, a.item.agent).unwrap();
    }
    for s in &raw.states {
        if s.item.initial {
            writeln!(out, "state {} init", s.item.name).unwrap();
        } else {
            writeln!(out, "state {}", s.item.name).unwrap();
        }
    }
    for s in &raw.steps {
        writeln!(out, "step {} {} {}", s.item.from, s.item.action, s.item.to).unwrap();
    }
    for o in &raw.obs {
        writeln!(out, "obs {} {} {}", o.item.state, o.item.agent, o.item.label).unwrap();
    }
    for e in &raw.edges {
        writeln!(out, "edge {} {} {}", e.item.state, e.item.from, e.item.to).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn fig2_file_matches_hand_built_system() {
        let mut raw = RawSystem::new();
        raw.agent("A")
            .agent("B")
            .agent("L")
            .action("a", "A")
            .action("b", "B")
            .init_state("q0")
            .state("q1")
            .state("q2")
            .step("q0", "b", "q1")
            .step("q0", "a", "q2")
            .step("q1", "b", "q2")
            .step("q2", "a", "q1")
            .obs("q1", "L", "1")
            .obs("q2", "L", "2")
            .edge("q0", "A", "L")
            .edge("q0", "B", "L")
            .edge("q1", "B", "L")
            .edge("q2", "A", "L");
        assert_eq!(raw.build().unwrap(), fixtures::fig2());
    }

    #[test]
    fn two_initial_states_rejected_with_position() {
        let err = parse("agents L\nstate s init\nstate t init\n").unwrap_err();
        assert_eq!(err.0[0].to_string(), "multiple initial states");
        assert_eq!(err.0[0].span.unwrap().line, 3);
    }

    #[test]
    fn unknown_reference_positioned() {
        let err = parse("agents L\naction l L\nstate s init\n  step s l q9 # bad\n").unwrap_err();
        assert_eq!(err.0.len(), 1);
        assert_eq!(err.0[0].positioned(), "4:3-13: unknown state q9");
    }

    #[test]
    fn syntax_errors_are_collected() {
        let err = parse("agents\nfrob x\naction a\nstate s maybe\n").unwrap_err();
        let lines: Vec<usize> = err.0.iter().map(|e| e.span.unwrap().line).collect();
        assert_eq!(lines, vec![1, 2, 3, 4]);
        assert_eq!(err.0[1].to_string(), "unknown directive `frob`");
    }

    #[test]
    fn error_list_is_capped() {
        let mut text = String::from("agents L\nstate s init\n");
        for i in 0..30 {
            text.push_str(&format!("obs s{i} L 1\n"));
        }
        assert_eq!(parse(&text).unwrap_err().0.len(), MAX_REPORTED_ERRORS);
    }

    #[test]
    fn crlf_accepted() {
        let text = fixtures::FIG2.replace('\n', "\r\n");
        assert_eq!(parse(&text).unwrap().system, fixtures::fig2());
    }

    #[test]
    fn trivial_system_serializes_to_three_lines() {
        let mut raw = RawSystem::new();
        raw.agent("u").action("a", "u").init_state("s");
        let text = serialize(&raw.build().unwrap());
        assert_eq!(text, "agents u\naction a u\nstate s init\n");
    }

    #[test]
    fn fig1_serialization_omits_self_loops() {
        let text = serialize(&fixtures::fig1());
        let steps: Vec<&str> = text.lines().filter(|l| l.starts_with("step")).collect();
        assert_eq!(steps, vec!["step e a a", "step e h h", "step a h ah"]);
        assert_eq!(serialize(&parse(&text).unwrap().system), text);
    }

    #[test]
    fn fixtures_round_trip() {
        for sys in fixtures::all() {
            let text = serialize(&sys);
            assert_eq!(parse(&text).unwrap().system, sys);
        }
    }
}
