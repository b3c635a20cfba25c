//! Command-line front end. [`run_cli`] does all the work and returns what
//! the binary should print, so tests can drive it in-process.

pub mod crosscheck;
pub mod report;

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};
use nipol_core::dot::{to_dot, Annotation};
use nipol_core::intransitive::{
    check_i_security, check_i_security_uniform_parallel, check_ip_security_parallel,
    find_intransitively_useless_edges, fpt_memory_estimate, i_security_bounded_oracle, i_similarity,
    is_intransitively_uniform_parallel, normalize_i, Budget, SubsetGuard,
};
use nipol_core::oracle::{
    ipurge_equality_oracle, purge_equality_oracle, t_definition_oracle, GeneratorConfig,
};
use nipol_core::reduction::{generate_3col_system, has_hiding_path, is_reduction_instance, parse_graph};
use nipol_core::transitive::{
    check_t_security, find_useless_edges_t, is_uniform_t, normalize_t, t_similarity,
};
use nipol_core::{io, AnalysisError, FlowWitness, Property, Stats, System, Verdict, Witness};
use serde_json::{json, Value};

use crate::report::{edges_json, Report};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATED: i32 = 1;
pub const EXIT_ERROR: i32 = 2;
pub const EXIT_GUARD: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "nipol",
    version,
    about = "Noninterference checks for systems with local policies"
)]
struct Cli {
    /// Add a `timestamp` field (seconds since the epoch) to the report.
    #[arg(long, global = true)]
    timestamp: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum CheckMode {
    T,
    I,
    IUniform,
    Ip,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    T,
    I,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum OracleKind {
    /// Enumerate hidden actions and continuations.
    Definition,
    /// Compare sequences with equal (i)purge.
    Equality,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
enum AnnotateArg {
    UselessT,
    UselessI,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide a security property.
    Check {
        #[arg(long, value_enum)]
        mode: CheckMode,
        file: PathBuf,
        /// Lift the subset guard of the intransitive checker.
        #[arg(long)]
        force: bool,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Bounded brute-force check.
    Oracle {
        #[arg(long, value_enum)]
        mode: Mode,
        file: PathBuf,
        /// Defaults to |S|², or the largest bound the budget allows.
        #[arg(long)]
        bound: Option<usize>,
        #[arg(long, value_enum, default_value = "definition")]
        kind: OracleKind,
    },
    /// Similarity classes of one agent.
    Similarity {
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long)]
        agent: String,
        file: PathBuf,
        #[arg(long)]
        force: bool,
    },
    /// List useless policy edges.
    Useless {
        #[arg(long, value_enum)]
        mode: Mode,
        file: PathBuf,
        #[arg(long)]
        force: bool,
    },
    /// Remove useless policy edges.
    Normalize {
        #[arg(long, value_enum)]
        mode: Mode,
        file: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
    /// Decide whether the policy is uniform.
    Uniform {
        #[arg(long, value_enum)]
        mode: Mode,
        file: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Compare checkers and oracles on random systems.
    Crosscheck {
        #[arg(long, default_value_t = 1000)]
        seeds: u64,
        #[arg(long, default_value_t = 0)]
        start: u64,
        /// Maximum states, actions and agents.
        #[arg(long, default_value = "6,4,3", value_parser = parse_shape)]
        shape: (usize, usize, usize),
        #[arg(long, default_value_t = 6)]
        bound: usize,
        #[arg(long, default_value_t = 0.4)]
        density: f64,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Build the system of a graph's 3-coloring reduction.
    #[command(name = "gen-3col")]
    Gen3col {
        graph: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Search a reduction instance for a hiding path.
    HidingPath { file: PathBuf },
    /// Print the system as Graphviz DOT.
    ExportDot {
        file: PathBuf,
        #[arg(long, value_enum, value_delimiter = ',')]
        annotate: Vec<AnnotateArg>,
    },
}

fn parse_shape(text: &str) -> Result<(usize, usize, usize), String> {
    let parts: Vec<usize> = text
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("{p}: {e}")))
        .collect::<Result<_, _>>()?;
    match parts.as_slice() {
        &[s, a, d] if s > 0 && a > 0 && d > 0 => Ok((s, a, d)),
        _ => Err("expected three positive numbers STATES,ACTIONS,AGENTS".into()),
    }
}

/// Exit code and the text for both output streams.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn error(message: impl std::fmt::Display) -> Self {
        Outcome {
            code: EXIT_ERROR,
            stdout: String::new(),
            stderr: format!("error: {message}\n"),
        }
    }
}

struct Loaded {
    sys: System,
    report: Report,
}

fn read(path: &Path) -> Result<Vec<u8>, Outcome> {
    std::fs::read(path).map_err(|e| Outcome::error(format!("cannot read {}: {e}", path.display())))
}

fn load(path: &Path, command: String, stderr: &mut String) -> Result<Loaded, Outcome> {
    let bytes = read(path)?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| Outcome::error(format!("{} is not UTF-8", path.display())))?;
    let validated = io::parse(&text).map_err(|errs| {
        let mut msg = String::new();
        for e in &errs.0 {
            writeln!(msg, "{}:{}", path.display(), e.positioned()).unwrap();
        }
        Outcome {
            code: EXIT_ERROR,
            stdout: String::new(),
            stderr: msg,
        }
    })?;
    for w in &validated.warnings {
        writeln!(stderr, "warning: {}:{w}", path.display()).unwrap();
    }
    let mut report = Report::new(command).input(&bytes);
    report.warnings(&validated.warnings);
    Ok(Loaded {
        sys: validated.system,
        report,
    })
}

fn analysis_code(e: &AnalysisError) -> i32 {
    match e {
        AnalysisError::SubsetGuardExceeded { .. } | AnalysisError::BudgetExceeded { .. } => EXIT_GUARD,
        _ => EXIT_ERROR,
    }
}

fn guard_for(sys: &System, force: bool, stderr: &mut String) -> SubsetGuard {
    if !force {
        return SubsetGuard::default();
    }
    writeln!(
        stderr,
        "memory estimate: {} bytes for 2^{} agent subsets over {} states",
        fpt_memory_estimate(sys),
        sys.n_agents(),
        sys.n_states()
    )
    .unwrap();
    SubsetGuard::forced()
}

fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::T => "t",
        Mode::I => "i",
    }
}

fn check_mode_name(mode: CheckMode) -> &'static str {
    match mode {
        CheckMode::T => "t",
        CheckMode::I => "i",
        CheckMode::IUniform => "i-uniform",
        CheckMode::Ip => "ip",
    }
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run_cli<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let text = e.render().to_string();
            return if e.use_stderr() {
                Outcome {
                    code,
                    stdout: String::new(),
                    stderr: text,
                }
            } else {
                Outcome {
                    code,
                    stdout: text,
                    stderr: String::new(),
                }
            };
        }
    };
    let timestamp = cli.timestamp.then(|| {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs())
    });
    let mut stderr = String::new();
    let result = dispatch(cli.command, &mut stderr);
    let mut outcome = match result {
        Ok(Emit::Report(mut report, code)) => {
            report.timestamp = timestamp;
            Outcome {
                code,
                stdout: report.render(),
                stderr: String::new(),
            }
        }
        Ok(Emit::Text(text)) => Outcome {
            code: EXIT_OK,
            stdout: text,
            stderr: String::new(),
        },
        Err(o) => o,
    };
    outcome.stderr = stderr + &outcome.stderr;
    outcome
}

enum Emit {
    Report(Box<Report>, i32),
    Text(String),
}

fn emit(report: Report, code: i32) -> Emit {
    Emit::Report(Box::new(report), code)
}

fn verdict_code(v: &Verdict) -> i32 {
    if v.holds {
        EXIT_OK
    } else {
        EXIT_VIOLATED
    }
}

/// Report for an analysis that could not run; the diagnostic also goes to
/// standard error.
fn failed(mut report: Report, e: &AnalysisError, stderr: &mut String) -> Emit {
    writeln!(stderr, "error: {e}").unwrap();
    report.set("error", e.to_string());
    emit(report, analysis_code(e))
}

fn dispatch(command: Command, stderr: &mut String) -> Result<Emit, Outcome> {
    match command {
        Command::Check {
            mode,
            file,
            force,
            jobs,
        } => {
            let Loaded { sys, mut report } =
                load(&file, format!("check --mode {}", check_mode_name(mode)), stderr)?;
            let result = match mode {
                CheckMode::T => Ok(check_t_security(&sys)),
                CheckMode::I => {
                    let guard = guard_for(&sys, force, stderr);
                    match check_i_security(&sys, guard) {
                        Err(AnalysisError::SubsetGuardExceeded { agents, limit })
                            if is_reduction_instance(&sys) =>
                        {
                            writeln!(
                                stderr,
                                "note: {agents} agents exceed the subset guard of {limit}; deciding by hiding-path search"
                            )
                            .unwrap();
                            report.set("method", "hiding-path");
                            hiding_path_verdict(&sys)
                        }
                        other => {
                            if other.is_ok() {
                                report.set("method", "subset-unwinding");
                            }
                            other
                        }
                    }
                }
                CheckMode::IUniform => check_i_security_uniform_parallel(&sys, jobs),
                CheckMode::Ip => check_ip_security_parallel(&sys, jobs),
            };
            match result {
                Ok(v) => {
                    report.verdict(&sys, &v);
                    Ok(emit(report, verdict_code(&v)))
                }
                Err(e) => Ok(failed(report, &e, stderr)),
            }
        }
        Command::Oracle {
            mode,
            file,
            bound,
            kind,
        } => {
            let kind_name = match kind {
                OracleKind::Definition => "definition",
                OracleKind::Equality => "equality",
            };
            let Loaded { sys, mut report } = load(
                &file,
                format!("oracle --mode {} --kind {kind_name}", mode_name(mode)),
                stderr,
            )?;
            let budget = Budget::from_env();
            let run = |b: usize| match (mode, kind) {
                (Mode::T, OracleKind::Definition) => t_definition_oracle(&sys, b, budget),
                (Mode::T, OracleKind::Equality) => purge_equality_oracle(&sys, b, budget),
                (Mode::I, OracleKind::Definition) => i_security_bounded_oracle(&sys, b, budget),
                (Mode::I, OracleKind::Equality) => ipurge_equality_oracle(&sys, b, budget),
            };
            let square = sys.n_states() * sys.n_states();
            let (result, used, source) = match bound {
                Some(b) => (run(b), b, "explicit"),
                None => match run(square) {
                    Err(AnalysisError::BudgetExceeded {
                        largest_feasible: Some(b),
                        ..
                    }) => {
                        writeln!(
                            stderr,
                            "note: bound |S|^2 = {square} exceeds the budget; using {b}"
                        )
                        .unwrap();
                        (run(b), b, "budget")
                    }
                    r => (r, square, "square"),
                },
            };
            report.set("bound", used);
            report.set("bound_source", source);
            report.set("budget", budget.0);
            match result {
                Ok(v) => {
                    report.verdict(&sys, &v);
                    Ok(emit(report, verdict_code(&v)))
                }
                Err(e) => Ok(failed(report, &e, stderr)),
            }
        }
        Command::Similarity {
            mode,
            agent,
            file,
            force,
        } => {
            let Loaded { sys, mut report } = load(
                &file,
                format!("similarity --mode {} --agent {agent}", mode_name(mode)),
                stderr,
            )?;
            let u = sys
                .agent_by_name(&agent)
                .ok_or_else(|| Outcome::error(format!("unknown agent {agent}")))?;
            let partition = match mode {
                Mode::T => Ok(t_similarity(&sys, u)),
                Mode::I => i_similarity(&sys, u, guard_for(&sys, force, stderr)),
            };
            match partition {
                Ok(p) => {
                    let classes: Vec<Vec<&str>> = p
                        .classes()
                        .iter()
                        .map(|c| c.iter().map(|&s| sys.state_name(s)).collect())
                        .collect();
                    report.set("agent", agent);
                    report.set("classes", json!(classes));
                    Ok(emit(report, EXIT_OK))
                }
                Err(e) => Ok(failed(report, &e, stderr)),
            }
        }
        Command::Useless { mode, file, force } => {
            let Loaded { sys, mut report } =
                load(&file, format!("useless --mode {}", mode_name(mode)), stderr)?;
            let edges = match mode {
                Mode::T => Ok(find_useless_edges_t(&sys)),
                Mode::I => find_intransitively_useless_edges(&sys, guard_for(&sys, force, stderr)),
            };
            match edges {
                Ok(edges) => {
                    report.set("count", edges.len());
                    report.set("edges", edges_json(&sys, &edges));
                    Ok(emit(report, EXIT_OK))
                }
                Err(e) => Ok(failed(report, &e, stderr)),
            }
        }
        Command::Normalize {
            mode,
            file,
            output,
            force,
        } => {
            let Loaded { sys, mut report } =
                load(&file, format!("normalize --mode {}", mode_name(mode)), stderr)?;
            let normal = match mode {
                Mode::T => Ok(normalize_t(&sys)),
                Mode::I => normalize_i(&sys, guard_for(&sys, force, stderr)),
            };
            let normal = match normal {
                Ok(n) => n,
                Err(e) => return Ok(failed(report, &e, stderr)),
            };
            let text = io::serialize(&normal);
            let Some(out) = output else {
                return Ok(Emit::Text(text));
            };
            std::fs::write(&out, &text)
                .map_err(|e| Outcome::error(format!("cannot write {}: {e}", out.display())))?;
            let kept: BTreeSet<_> = normal.policy_edges().into_iter().collect();
            let removed: Vec<_> = sys
                .policy_edges()
                .into_iter()
                .filter(|e| !kept.contains(e))
                .collect();
            report.set("removed", edges_json(&sys, &removed));
            report.set("output_digest", report::digest(text.as_bytes()));
            Ok(emit(report, EXIT_OK))
        }
        Command::Uniform { mode, file, jobs } => {
            let Loaded { sys, mut report } =
                load(&file, format!("uniform --mode {}", mode_name(mode)), stderr)?;
            let v = match mode {
                Mode::T => is_uniform_t(&sys),
                Mode::I => is_intransitively_uniform_parallel(&sys, jobs),
            };
            report.verdict(&sys, &v);
            Ok(emit(report, verdict_code(&v)))
        }
        Command::Crosscheck {
            seeds,
            start,
            shape,
            bound,
            density,
            jobs,
        } => {
            if !(0.0..=1.0).contains(&density) {
                return Err(Outcome::error("density must lie in [0, 1]"));
            }
            let settings = crosscheck::Settings {
                shape: GeneratorConfig {
                    max_states: shape.0,
                    max_actions: shape.1,
                    max_agents: shape.2,
                    edge_density: density,
                    ..GeneratorConfig::default()
                },
                bound,
                budget: Budget::from_env(),
            };
            let outcomes = crosscheck::run(&settings, start..start + seeds, jobs);
            let mut report = Report::new(format!(
                "crosscheck --seeds {seeds} --start {start} --shape {},{},{} --bound {bound} --density {density}",
                shape.0, shape.1, shape.2
            ));
            let count = |f: fn(&crosscheck::SeedOutcome) -> bool| outcomes.iter().filter(|o| f(o)).count();
            let disagreements: Vec<Value> = outcomes
                .iter()
                .flat_map(|o| {
                    o.disagreements
                        .iter()
                        .map(move |d| json!({"seed": o.seed, "message": d}))
                })
                .collect();
            let skipped: Vec<Value> = outcomes
                .iter()
                .flat_map(|o| {
                    o.skipped
                        .iter()
                        .map(move |d| json!({"seed": o.seed, "message": d}))
                })
                .collect();
            report.set("seeds", seeds);
            report.set("t_insecure", count(|o| o.t_insecure));
            report.set("i_insecure", count(|o| o.i_insecure));
            report.set("i_uniform", count(|o| o.i_uniform));
            report.set("skipped", skipped);
            let code = if disagreements.is_empty() {
                EXIT_OK
            } else {
                EXIT_VIOLATED
            };
            report.set("disagreements", disagreements);
            Ok(emit(report, code))
        }
        Command::Gen3col { graph, output } => {
            let bytes = read(&graph)?;
            let text = String::from_utf8_lossy(&bytes);
            let g = parse_graph(&text).map_err(|errs| {
                let mut msg = String::new();
                for e in &errs.0 {
                    writeln!(msg, "{}:{}", graph.display(), e.positioned()).unwrap();
                }
                Outcome {
                    code: EXIT_ERROR,
                    stdout: String::new(),
                    stderr: msg,
                }
            })?;
            let sys = generate_3col_system(&g);
            let text = io::serialize(&sys);
            let Some(out) = output else {
                return Ok(Emit::Text(text));
            };
            std::fs::write(&out, &text)
                .map_err(|e| Outcome::error(format!("cannot write {}: {e}", out.display())))?;
            let mut report = Report::new("gen-3col").input(&bytes);
            report.set("vertices", g.vertices().len());
            report.set("edges", g.edges().len());
            report.set("states", sys.n_states());
            report.set("agents", sys.n_agents());
            report.set("actions", sys.n_actions());
            report.set("output_digest", report::digest(text.as_bytes()));
            Ok(emit(report, EXIT_OK))
        }
        Command::HidingPath { file } => {
            let Loaded { sys, mut report } = load(&file, "hiding-path".into(), stderr)?;
            match has_hiding_path(&sys) {
                Ok(found) => {
                    report.set("found", found.is_some());
                    let code = match found {
                        Some(p) => {
                            let vertices = sys
                                .agents()
                                .map(|a| sys.agent_name(a))
                                .filter(|n| *n != "h" && *n != "L" && !n.contains('!'));
                            let coloring: serde_json::Map<String, Value> = vertices
                                .zip(&p.coloring)
                                .map(|(v, &c)| (v.to_string(), c.into()))
                                .collect();
                            report.set("path", sys.format_actions(&p.path));
                            report.set("coloring", Value::Object(coloring));
                            EXIT_VIOLATED
                        }
                        None => EXIT_OK,
                    };
                    Ok(emit(report, code))
                }
                Err(e) => Ok(failed(report, &e, stderr)),
            }
        }
        Command::ExportDot { file, annotate } => {
            let Loaded { sys, .. } = load(&file, "export-dot".into(), stderr)?;
            let set: BTreeSet<Annotation> = annotate
                .iter()
                .map(|a| match a {
                    AnnotateArg::UselessT => Annotation::UselessT,
                    AnnotateArg::UselessI => Annotation::UselessI,
                })
                .collect();
            Ok(Emit::Text(to_dot(&sys, &set)))
        }
    }
}

/// i-security of a reduction instance from the reduction shape: a hiding
/// path `hα` yields the witness (L, s0, h, α), no path means secure.
fn hiding_path_verdict(sys: &System) -> Result<Verdict, AnalysisError> {
    let found = has_hiding_path(sys)?;
    let stats = Stats {
        iterations: 1,
        ..Stats::default()
    };
    Ok(match found {
        None => Verdict::holds(Property::ISecurity, stats),
        Some(p) => {
            let l = sys.agent_by_name("L").expect("reduction instance has L");
            let w = FlowWitness::new(sys, l, sys.initial(), p.path[0], p.path[1..].to_vec());
            Verdict::violated(Property::ISecurity, Witness::Flow(w), stats)
        }
    })
}
