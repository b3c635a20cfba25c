use std::fmt;

use thiserror::Error;

/// A 1-based position range within one line of a source file.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SourceSpan {
    pub line: usize,
    pub start: usize,
    pub end: usize,
}

impl SourceSpan {
    pub fn new(line: usize, start: usize, end: usize) -> Self {
        debug_assert!(line >= 1 && start >= 1 && end >= start);
        SourceSpan { line, start, end }
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}-{}", self.line, self.start, self.end)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ModelErrorKind {
    #[error("unknown {category} {name}")]
    Unknown { category: &'static str, name: String },
    #[error("duplicate {category} {name}")]
    Duplicate { category: &'static str, name: String },
    #[error("no initial state")]
    NoInitialState,
    #[error("multiple initial states")]
    MultipleInitialStates,
    #[error("conflicting step declarations for state {state}, action {action}")]
    ConflictingStep { state: String, action: String },
    #[error("conflicting obs declarations for state {state}, agent {agent}")]
    ConflictingObs { state: String, agent: String },
    #[error("{count} agents declared, at most {limit} supported")]
    TooManyAgents { count: usize, limit: usize },
    #[error("{0}")]
    Syntax(String),
}

/// A validation or parse failure, positioned when it came from a file.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{kind}")]
pub struct ModelError {
    pub kind: ModelErrorKind,
    pub span: Option<SourceSpan>,
}

impl ModelError {
    pub fn new(kind: ModelErrorKind, span: Option<SourceSpan>) -> Self {
        ModelError { kind, span }
    }

    /// `line:col-col: message`, or just the message when unpositioned.
    pub fn positioned(&self) -> String {
        match self.span {
            Some(span) => format!("{span}: {}", self.kind),
            None => self.kind.to_string(),
        }
    }
}

/// Every error found while checking one description.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub struct ValidationErrors(pub Vec<ModelError>);

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lines: Vec<String> = self.0.iter().map(ModelError::positioned).collect();
        f.write_str(&lines.join("\n"))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Warning {
    pub message: String,
    pub span: Option<SourceSpan>,
}

impl Warning {
    pub fn new(message: impl Into<String>, span: Option<SourceSpan>) -> Self {
        Warning {
            message: message.into(),
            span,
        }
    }
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.span {
            Some(span) => write!(f, "{span}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

/// Failures of the analyses themselves (not of the input format).
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error(
        "{agents} agents exceed the subset guard of {limit} (2^{agents} agent subsets); use force to lift it"
    )]
    SubsetGuardExceeded { agents: usize, limit: usize },
    #[error("enumeration to bound {bound} needs {required} evaluations, budget is {budget}; {}", feasible_note(*.largest_feasible))]
    BudgetExceeded {
        bound: usize,
        required: u128,
        budget: u64,
        largest_feasible: Option<usize>,
    },
    #[error("the policy is not uniform: {0}")]
    NonUniformPolicy(String),
    #[error("the system does not have a global policy: local policies of {0} and {1} differ")]
    NotGlobalPolicy(String, String),
    #[error("not a reduction instance: {0}")]
    NotAReductionInstance(String),
    #[error("graph has {vertices} vertices, at most {limit} supported")]
    TooLarge { vertices: usize, limit: usize },
}

fn feasible_note(bound: Option<usize>) -> String {
    match bound {
        Some(b) => format!("largest feasible bound is {b}"),
        None => "no bound is feasible".to_string(),
    }
}
