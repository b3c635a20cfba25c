//! Noninterference analysis for finite deterministic systems whose security
//! policy may change from state to state.
//!
//! A [`System`] is read from the `.nipol` text format ([`io::parse`]) or built
//! with [`RawSystem`]. The [`transitive`] and [`intransitive`] modules decide
//! the two security notions and their uniform variants, [`oracle`] holds
//! brute-force reference implementations, and [`reduction`] builds the
//! graph-coloring instances on which intransitive checking is hard.
//!
//! ```
//! use nipol_core::{fixtures, transitive};
//!
//! let sys = fixtures::fig1();
//! let verdict = transitive::check_t_security(&sys);
//! let w = verdict.flow_witness().unwrap();
//! assert_eq!(sys.agent_name(w.agent), "L");
//! assert_eq!(sys.format_actions(&w.alpha), "h");
//! ```

pub mod budget;
pub mod dot;
pub mod error;
pub mod fixtures;
pub mod intransitive;
pub mod io;
pub mod model;
pub mod oracle;
pub mod partition;
pub mod reduction;
pub mod transitive;
pub mod verdict;

pub use error::{AnalysisError, ModelError, ModelErrorKind, SourceSpan, ValidationErrors, Warning};
pub use model::{
    validate, ActionId, AgentId, AgentSet, LocalPolicy, PolicyEdge, RawSystem, StateId, System, Validated,
    DEFAULT_OBSERVATION, MAX_AGENTS,
};
pub use partition::{StatePartition, UnionFind};
pub use verdict::{EquivalenceWitness, FlowWitness, PolicyWitness, Property, Stats, Verdict, Witness};
