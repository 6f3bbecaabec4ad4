//! Graph-of-thought reasoning engine.
//!
//! Builds a thought graph backward from a target, promotes returnable
//! nodes into a growing condition set under a multi-inspector checker,
//! and extracts checker-passed derivations of the target. Generation and
//! inspection are pluggable: a live chat-completions client with
//! record/replay, deterministic task oracles for desk-scale verification,
//! and a seeded noisy simulator.

pub mod backends;
pub mod builder;
pub mod error;
pub mod expr;
pub mod graph;
pub mod inspection;
pub mod tasks;
pub mod updater;

pub use error::{BackendError, ExprError, GraphError, TaskError};
pub use graph::{
    AndPath, CheckState, ConditionSet, GraphDocument, NodeId, NodeKind, Provenance, ThoughtGraph,
    ThoughtNode, ValidPath,
};
