//! Backward graph construction: starting from the target, a generation
//! backend is asked twice per expanded node — once for candidate steps
//! into the node, once for each step's prerequisite thoughts — and the
//! recursion continues depth-first into the new prerequisites until they
//! are conditions, nothing new is proposed, or the budget runs out.

use crate::backends::{
    GenerationBackend, GenerationRequest, GenerationResponse, TaskContext,
};
use crate::error::{BackendError, GraphError};
use crate::graph::{AndPath, ConditionSet, NodeId, NodeKind, Provenance, ThoughtGraph, ThoughtNode};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

/// Hard bounds on one build.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildBudget {
    pub max_nodes: usize,
    pub max_depth: usize,
    pub max_paths_per_node: usize,
}

impl Default for BuildBudget {
    fn default() -> Self {
        BuildBudget {
            max_nodes: 64,
            max_depth: 8,
            max_paths_per_node: 3,
        }
    }
}

impl BuildBudget {
    pub fn validate(&self) -> Result<(), BuildError> {
        if self.max_nodes == 0 || self.max_depth == 0 || self.max_paths_per_node == 0 {
            return Err(BuildError::Contract(
                "budget bounds must be strictly positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("backend failure: {0}")]
    Backend(#[from] BackendError),

    #[error(transparent)]
    Graph(#[from] GraphError),

    #[error("contract violation: {0}")]
    Contract(String),
}

/// One backend exchange in the build trace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceRecord {
    pub request: GenerationRequest,
    pub response: Option<GenerationResponse>,
    pub discarded: bool,
    pub created: Vec<NodeId>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct BuildReport {
    pub expansions: usize,
    pub backend_calls: usize,
    pub budget_exhausted: bool,
    pub trace: Vec<TraceRecord>,
}

impl BuildReport {
    /// One JSONL record per backend call.
    pub fn trace_jsonl(&self) -> String {
        let mut out = String::new();
        for record in &self.trace {
            out.push_str(&serde_json::to_string(record).expect("trace record serializes"));
            out.push('\n');
        }
        out
    }
}

struct Builder<'a> {
    backend: &'a dyn GenerationBackend,
    budget: &'a BuildBudget,
    task: &'a TaskContext,
    graph: ThoughtGraph,
    visited: BTreeSet<NodeId>,
    report: BuildReport,
}

impl Builder<'_> {
    fn condition_payloads(&self) -> Vec<String> {
        let mut payloads: Vec<String> = self
            .graph
            .conditions()
            .members()
            .iter()
            .map(|id| self.graph.payload(id).to_string())
            .collect();
        payloads.sort();
        payloads
    }

    /// Expands one node: call 1 proposes steps, call 2 per step proposes
    /// prerequisites, then recursion continues into the new nodes.
    fn expand(&mut self, node_id: &NodeId, depth: usize) -> Result<(), BuildError> {
        if self.graph.conditions().contains(node_id) {
            return Ok(());
        }
        if self.report.expansions >= self.budget.max_nodes || depth >= self.budget.max_depth {
            self.report.budget_exhausted = true;
            return Ok(());
        }
        if !self.visited.insert(node_id.clone()) {
            return Ok(());
        }
        self.report.expansions += 1;

        let node_payload = self.graph.payload(node_id).to_string();
        let conditions = self.condition_payloads();
        let paths_request = GenerationRequest::Paths {
            node: node_payload.clone(),
            conditions: conditions.clone(),
            task: self.task.clone(),
        };
        let annotations = match self.call(&paths_request)? {
            Some(GenerationResponse::Annotations(a)) => a,
            Some(GenerationResponse::Payloads(_)) => {
                return Err(BuildError::Contract(
                    "backend answered a paths request with payloads".into(),
                ))
            }
            None => Vec::new(), // unparseable response discarded
        };

        for annotation in annotations.into_iter().take(self.budget.max_paths_per_node) {
            let prereqs_request = GenerationRequest::Prereqs {
                node: node_payload.clone(),
                annotation: annotation.clone(),
                conditions: conditions.clone(),
                task: self.task.clone(),
            };
            let payloads = match self.call(&prereqs_request)? {
                Some(GenerationResponse::Payloads(p)) => p,
                Some(GenerationResponse::Annotations(_)) => {
                    return Err(BuildError::Contract(
                        "backend answered a prereqs request with annotations".into(),
                    ))
                }
                None => Vec::new(),
            };
            if payloads.is_empty() {
                continue; // nothing proposable for this step
            }
            let mut prereq_ids: Vec<NodeId> = Vec::new();
            let mut new_ids: Vec<NodeId> = Vec::new();
            for payload in payloads {
                let candidate = ThoughtNode::new(&payload, NodeKind::Intermediate, Provenance::Generated);
                let id = candidate.id.clone();
                if prereq_ids.contains(&id) {
                    continue; // prerequisite tuples are duplicate-free
                }
                if self.graph.node(&id).is_none() {
                    self.graph.add_node(candidate)?;
                    new_ids.push(id.clone());
                }
                prereq_ids.push(id);
            }
            if let Some(record) = self.report.trace.last_mut() {
                record.created = new_ids.clone();
            }
            self.graph
                .add_path(node_id, AndPath::new(prereq_ids.clone(), annotation))?;
            for prereq in &prereq_ids {
                self.expand(prereq, depth + 1)?;
            }
        }
        Ok(())
    }

    /// One backend call plus trace bookkeeping. Unparseable output is
    /// discarded (never partially ingested); other failures abort the
    /// build.
    fn call(&mut self, request: &GenerationRequest) -> Result<Option<GenerationResponse>, BuildError> {
        self.report.backend_calls += 1;
        match self.backend.generate(request) {
            Ok(response) => {
                self.report.trace.push(TraceRecord {
                    request: request.clone(),
                    response: Some(response.clone()),
                    discarded: false,
                    created: Vec::new(),
                });
                Ok(Some(response))
            }
            Err(BackendError::Parse { .. }) => {
                self.report.trace.push(TraceRecord {
                    request: request.clone(),
                    response: None,
                    discarded: true,
                    created: Vec::new(),
                });
                Ok(None)
            }
            Err(e) => Err(BuildError::Backend(e)),
        }
    }
}

/// Expands every frontier node depth-first into `graph`. Frontier nodes
/// must already exist in the graph; condition nodes are skipped.
pub fn create_graph(
    graph: ThoughtGraph,
    frontier: &[NodeId],
    backend: &dyn GenerationBackend,
    budget: &BuildBudget,
    task: &TaskContext,
) -> Result<(ThoughtGraph, BuildReport), BuildError> {
    budget.validate()?;
    for id in frontier {
        if graph.node(id).is_none() {
            return Err(BuildError::Contract(format!(
                "frontier node {id} is not in the graph"
            )));
        }
    }
    let mut builder = Builder {
        backend,
        budget,
        task,
        graph,
        visited: BTreeSet::new(),
        report: BuildReport::default(),
    };
    for id in frontier {
        builder.expand(id, 0)?;
    }
    builder.graph.validate()?;
    Ok((builder.graph, builder.report))
}

/// Seeds a fresh graph from a target payload and given condition payloads.
pub fn seed_graph(
    target_payload: &str,
    condition_payloads: &[String],
) -> Result<ThoughtGraph, GraphError> {
    let mut graph = ThoughtGraph::new(target_payload);
    for payload in condition_payloads {
        graph.add_node(ThoughtNode::new(payload, NodeKind::Condition, Provenance::Given))?;
    }
    Ok(graph)
}

/// Builds a full graph backward from the target.
pub fn build_from_target(
    target_payload: &str,
    condition_payloads: &[String],
    backend: &dyn GenerationBackend,
    budget: &BuildBudget,
    task: &TaskContext,
) -> Result<(ThoughtGraph, BuildReport), BuildError> {
    let graph = seed_graph(target_payload, condition_payloads)?;
    let frontier = vec![graph.target().clone()];
    create_graph(graph, &frontier, backend, budget, task)
}

/// Rebuilds from scratch with the enriched condition set of an earlier
/// round; nothing from the prior graph except the conditions (and their
/// payloads) is consulted.
pub fn rebuild_with_updated_conditions(
    prior_conditions: &ConditionSet,
    condition_nodes: &[ThoughtNode],
    target_payload: &str,
    backend: &dyn GenerationBackend,
    budget: &BuildBudget,
    task: &TaskContext,
) -> Result<(ThoughtGraph, BuildReport), BuildError> {
    let graph = ThoughtGraph::seed_from_conditions(target_payload, prior_conditions, condition_nodes)?;
    let frontier = vec![graph.target().clone()];
    create_graph(graph, &frontier, backend, budget, task)
}
