//! Deterministic task oracles: generation backends that enumerate the
//! task's exhaustive move set instead of sampling a model, so graph
//! construction and updating are verifiable at desk scale.

use super::{
    BackendDescriptor, GenerationBackend, GenerationRequest, GenerationResponse,
};
use crate::error::BackendError;
use crate::graph::normalize_payload;
use crate::tasks::{game24, recurrence::DerivationStep, Problem};
use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

/// Oracle generation for one problem. For the 24 game it inverts the
/// forward-reachable move graph, so every proposed step extends backward
/// to the initial numbers; for polynomials it proposes the constructed
/// factorization; for recurrences it serves the problem's derivation
/// table.
/// Inverted move graph: `to payload -> {(annotation, from payload)}`.
type InboundEdges = BTreeMap<String, BTreeSet<(String, String)>>;

pub struct OracleGeneration {
    problem: Problem,
    game24_inbound: OnceLock<InboundEdges>,
}

impl OracleGeneration {
    pub fn new(problem: Problem) -> Self {
        OracleGeneration {
            problem,
            game24_inbound: OnceLock::new(),
        }
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    fn check_task(&self, request: &GenerationRequest) -> Result<(), BackendError> {
        let requested = &request.task().task;
        if requested != self.problem.task_name() {
            return Err(BackendError::UnsupportedTask(requested.clone()));
        }
        Ok(())
    }

    fn game24_edges(&self) -> Result<&InboundEdges, BackendError> {
        let Problem::Game24(p) = &self.problem else {
            return Err(BackendError::UnsupportedTask(self.problem.task_name().into()));
        };
        if self.game24_inbound.get().is_none() {
            let values = p
                .values()
                .map_err(|e| BackendError::UnsupportedTask(e.to_string()))?;
            let _ = self.game24_inbound.set(game24::forward_edges(&values));
        }
        Ok(self.game24_inbound.get().expect("just initialized"))
    }

    fn polynomial_parts(&self) -> Result<(String, String, Vec<String>, Option<String>), BackendError> {
        let Problem::Polynomial(p) = &self.problem else {
            return Err(BackendError::UnsupportedTask(self.problem.task_name().into()));
        };
        let target = self
            .problem
            .target_payload()
            .map_err(|e| BackendError::UnsupportedTask(e.to_string()))?;
        let equation = format!("equation: {}", p.statement());
        let roots: Vec<String> = p.integer_roots.iter().map(|r| format!("x = {r}")).collect();
        let quad_payload = match (p.polynomial(), p.roots()) {
            (Ok(poly), Ok(root_values)) if p.quadratic_factor.is_some() => {
                let mut work = poly;
                for r in &root_values {
                    work = match work.deflate(r) {
                        Some(next) => next,
                        None => return Err(BackendError::UnsupportedTask(format!(
                            "problem {} roots do not divide its polynomial",
                            p.id
                        ))),
                    };
                }
                Some(format!("remaining factor: {} = 0", work.render()))
            }
            _ => None,
        };
        Ok((target, equation, roots, quad_payload))
    }

    fn recurrence_steps(&self, conditions: &[String]) -> Vec<(DerivationStep, String)> {
        let Problem::Recurrence(p) = &self.problem else {
            return vec![];
        };
        let established: BTreeSet<String> =
            conditions.iter().map(|c| normalize_payload(c)).collect();
        let mut matching: Vec<(DerivationStep, String)> = p
            .derivation_steps()
            .into_iter()
            .filter(|step| {
                step.requires
                    .iter()
                    .all(|r| established.contains(&p.resolve_placeholder(r)))
            })
            .map(|step| {
                let node = p.resolve_placeholder(&step.node);
                (step, node)
            })
            .collect();
        // Most specific first so capped path proposals keep the steps that
        // just became available.
        matching.sort_by_key(|(step, _)| std::cmp::Reverse(step.requires.len()));
        matching
    }
}

impl GenerationBackend for OracleGeneration {
    fn descriptor(&self) -> BackendDescriptor {
        BackendDescriptor::oracle()
    }

    fn generate(&self, request: &GenerationRequest) -> Result<GenerationResponse, BackendError> {
        self.check_task(request)?;
        match (&self.problem, request) {
            (Problem::Game24(_), GenerationRequest::Paths { node, .. }) => {
                let edges = self.game24_edges()?;
                let mut annotations: Vec<String> = Vec::new();
                if let Some(inbound) = edges.get(&normalize_payload(node)) {
                    for (annotation, _) in inbound {
                        if !annotations.contains(annotation) {
                            annotations.push(annotation.clone());
                        }
                    }
                }
                Ok(GenerationResponse::Annotations(annotations))
            }
            (Problem::Game24(_), GenerationRequest::Prereqs { node, annotation, .. }) => {
                let edges = self.game24_edges()?;
                let source = edges
                    .get(&normalize_payload(node))
                    .and_then(|inbound| {
                        inbound
                            .iter()
                            .find(|(a, _)| a == annotation)
                            .map(|(_, from)| from.clone())
                    });
                Ok(GenerationResponse::Payloads(source.into_iter().collect()))
            }
            (Problem::Polynomial(_), GenerationRequest::Paths { node, .. }) => {
                let (target, _, roots, quad) = self.polynomial_parts()?;
                let node = normalize_payload(node);
                let annotations = if node == target {
                    if roots.is_empty() && quad.is_none() {
                        vec![]
                    } else {
                        vec!["combine the verified roots into the complete factorization".into()]
                    }
                } else if node.starts_with("x = ") {
                    vec![format!(
                        "substitute {node} into the equation; it evaluates to 0"
                    )]
                } else if node.starts_with("remaining factor: ") {
                    vec!["divide the equation by the verified linear factors".into()]
                } else {
                    vec![]
                };
                Ok(GenerationResponse::Annotations(annotations))
            }
            (Problem::Polynomial(_), GenerationRequest::Prereqs { node, .. }) => {
                let (target, equation, roots, quad) = self.polynomial_parts()?;
                let node = normalize_payload(node);
                let payloads = if node == target {
                    let mut all = roots.clone();
                    all.extend(quad.clone());
                    all.push(equation);
                    all
                } else if node.starts_with("x = ") || node.starts_with("remaining factor: ") {
                    vec![equation]
                } else {
                    vec![]
                };
                Ok(GenerationResponse::Payloads(payloads))
            }
            (Problem::Recurrence(p), GenerationRequest::Paths { node, conditions, .. }) => {
                let node = normalize_payload(node);
                let mut annotations = Vec::new();
                for (step, step_node) in self.recurrence_steps(conditions) {
                    if step_node == node && !annotations.contains(&step.via) {
                        annotations.push(step.via.clone());
                    }
                }
                let _ = p;
                Ok(GenerationResponse::Annotations(annotations))
            }
            (
                Problem::Recurrence(p),
                GenerationRequest::Prereqs {
                    node, annotation, conditions, ..
                },
            ) => {
                let node = normalize_payload(node);
                // Among matching steps, prefer the most specific (largest
                // requires set already satisfied).
                let step = self
                    .recurrence_steps(conditions)
                    .into_iter()
                    .find(|(step, step_node)| step_node == &node && &step.via == annotation);
                let payloads = match step {
                    Some((step, _)) => step
                        .prereqs
                        .iter()
                        .map(|q| p.resolve_placeholder(q))
                        .collect(),
                    None => vec![],
                };
                Ok(GenerationResponse::Payloads(payloads))
            }
        }
    }
}
