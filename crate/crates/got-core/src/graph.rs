//! The directed thought graph and its returnability semantics.
//!
//! Nodes are lines of thought; a node's adjacency entry holds AND-paths:
//! tuples of prerequisite nodes that jointly yield it. A node can be
//! returned (derived) through a path only when every prerequisite in the
//! tuple is itself returnable, which makes returnability a least fixed
//! point over the condition set.
//!
//! Graph values are plain data; every mutation goes through `&mut self`
//! methods under a single-writer contract and no method here performs I/O.

use crate::error::GraphError;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Stable node identity: hash of the whitespace-normalized payload, so two
/// generations of the same thought collapse onto one node.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(String);

impl NodeId {
    pub fn from_payload(payload: &str) -> Self {
        let normalized = normalize_payload(payload);
        let digest = Sha256::digest(normalized.as_bytes());
        let hex: String = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
        NodeId(hex)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Used only by deserialization; ids in documents are trusted after
    /// they re-verify against their payload.
    pub(crate) fn from_raw(raw: String) -> Self {
        NodeId(raw)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Collapses whitespace runs and trims; the canonical payload form that
/// node identity is computed over.
pub fn normalize_payload(payload: &str) -> String {
    payload.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Target,
    Condition,
    Intermediate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Given,
    Generated,
    Promoted,
}

/// One line of thought.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThoughtNode {
    pub id: NodeId,
    pub kind: NodeKind,
    pub payload: String,
    pub provenance: Provenance,
}

impl ThoughtNode {
    pub fn new(payload: &str, kind: NodeKind, provenance: Provenance) -> Self {
        let payload = normalize_payload(payload);
        ThoughtNode {
            id: NodeId::from_payload(&payload),
            kind,
            payload,
            provenance,
        }
    }
}

/// Result of a checker examination of a path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckState {
    Unchecked,
    Passed,
    Failed,
}

/// A hyperedge: this node is yielded by the joint prerequisites in
/// `prereqs` via the step described by `annotation`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AndPath {
    pub prereqs: Vec<NodeId>,
    pub annotation: String,
    pub checked: CheckState,
}

impl AndPath {
    pub fn new(prereqs: Vec<NodeId>, annotation: impl Into<String>) -> Self {
        AndPath {
            prereqs,
            annotation: annotation.into(),
            checked: CheckState::Unchecked,
        }
    }

    /// Identity of a path ignores its checked state.
    pub fn same_edge(&self, other: &AndPath) -> bool {
        self.prereqs == other.prereqs && self.annotation == other.annotation
    }
}

/// One promotion event: at `round`, `node` became a condition.
pub type PromotionEvent = (u32, NodeId);

/// The growing set of established facts, with its append-only history.
/// Given conditions enter at round 0; promotions at the round that
/// accepted them.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ConditionSet {
    members: BTreeSet<NodeId>,
    history: Vec<PromotionEvent>,
}

impl ConditionSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn contains(&self, id: &NodeId) -> bool {
        self.members.contains(id)
    }

    pub fn members(&self) -> &BTreeSet<NodeId> {
        &self.members
    }

    pub fn history(&self) -> &[PromotionEvent] {
        &self.history
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Inserts a member, recording the event. No-op if already present.
    pub fn insert(&mut self, id: NodeId, round: u32) {
        if self.members.insert(id.clone()) {
            self.history.push((round, id));
        }
    }

    /// History must replay exactly to the member set.
    pub fn replays_consistently(&self) -> bool {
        let replayed: BTreeSet<&NodeId> = self.history.iter().map(|(_, id)| id).collect();
        replayed.len() == self.history.len()
            && replayed.into_iter().cloned().collect::<BTreeSet<_>>() == self.members
    }
}

/// A derivation from conditions to the target: ordered steps, each step
/// firing one AND-path to produce one node, the last being the target.
/// The target already being a condition yields the zero-step path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidPath {
    pub steps: Vec<(AndPath, NodeId)>,
}

impl ValidPath {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Sequence of produced node ids, used for deterministic ordering.
    fn produced(&self) -> Vec<&NodeId> {
        self.steps.iter().map(|(_, id)| id).collect()
    }
}

/// The thought graph: pending adjacency from node to its AND-paths, one
/// target, and the condition set. When a node is promoted its paths move
/// from `adjacency` into `fired`, keeping pending adjacency disjoint from
/// the conditions while preserving checked paths for path finding.
#[derive(Debug, Clone, PartialEq)]
pub struct ThoughtGraph {
    nodes: BTreeMap<NodeId, ThoughtNode>,
    adjacency: BTreeMap<NodeId, Vec<AndPath>>,
    fired: BTreeMap<NodeId, Vec<AndPath>>,
    target: NodeId,
    conditions: ConditionSet,
}

impl ThoughtGraph {
    /// Fresh graph holding only the target node. Conditions are added via
    /// `add_node`. The target may later be promoted into the conditions,
    /// but can never start there.
    pub fn new(target_payload: &str) -> Self {
        let node = ThoughtNode::new(target_payload, NodeKind::Target, Provenance::Given);
        let target = node.id.clone();
        let mut nodes = BTreeMap::new();
        nodes.insert(target.clone(), node);
        ThoughtGraph {
            nodes,
            adjacency: BTreeMap::new(),
            fired: BTreeMap::new(),
            target,
            conditions: ConditionSet::new(),
        }
    }

    pub fn target(&self) -> &NodeId {
        &self.target
    }

    pub fn conditions(&self) -> &ConditionSet {
        &self.conditions
    }

    pub fn node(&self, id: &NodeId) -> Option<&ThoughtNode> {
        self.nodes.get(id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &ThoughtNode> {
        self.nodes.values()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Pending paths of a node (empty once the node has been promoted).
    pub fn paths(&self, id: &NodeId) -> &[AndPath] {
        self.adjacency.get(id).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Pending or fired paths of a node; a node's paths live in exactly
    /// one of the two maps.
    pub fn all_paths(&self, id: &NodeId) -> &[AndPath] {
        self.adjacency
            .get(id)
            .or_else(|| self.fired.get(id))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn adjacency(&self) -> &BTreeMap<NodeId, Vec<AndPath>> {
        &self.adjacency
    }

    pub fn fired(&self) -> &BTreeMap<NodeId, Vec<AndPath>> {
        &self.fired
    }

    pub fn payload(&self, id: &NodeId) -> &str {
        self.nodes.get(id).map(|n| n.payload.as_str()).unwrap_or("")
    }

    /// A node is given when it entered the condition set at round 0, i.e.
    /// it was handed to this graph rather than promoted during updating.
    pub fn is_given(&self, id: &NodeId) -> bool {
        self.conditions
            .history()
            .iter()
            .any(|(round, member)| *round == 0 && member == id)
    }

    /// Adds a node. Idempotent for identical payloads; adding a node whose
    /// id is already bound to a different payload is an id collision.
    /// Condition nodes are recorded in the condition set (round 0).
    pub fn add_node(&mut self, node: ThoughtNode) -> Result<(), GraphError> {
        let node = ThoughtNode {
            payload: normalize_payload(&node.payload),
            ..node
        };
        if let Some(existing) = self.nodes.get(&node.id) {
            if existing.payload != node.payload {
                return Err(GraphError::IdCollision {
                    id: node.id.to_string(),
                });
            }
            // Same thought resubmitted: keep the established record.
            return Ok(());
        }
        if node.kind == NodeKind::Target && node.id != self.target {
            return Err(GraphError::Contract(format!(
                "graph already has target {}; cannot add second target {}",
                self.target, node.id
            )));
        }
        if node.kind == NodeKind::Condition {
            if node.id == self.target {
                return Err(GraphError::Contract(
                    "target cannot be a given condition".into(),
                ));
            }
            self.conditions.insert(node.id.clone(), 0);
        }
        self.nodes.insert(node.id.clone(), node);
        Ok(())
    }

    /// Inserts an AND-path under `node`. Prereqs must be known nodes,
    /// non-empty and duplicate-free. Duplicate edges are ignored.
    pub fn add_path(&mut self, node: &NodeId, path: AndPath) -> Result<(), GraphError> {
        if !self.nodes.contains_key(node) {
            return Err(GraphError::Contract(format!("unknown node {node}")));
        }
        if path.prereqs.is_empty() {
            return Err(GraphError::Contract("path with no prerequisites".into()));
        }
        let mut seen = BTreeSet::new();
        for p in &path.prereqs {
            if !seen.insert(p) {
                return Err(GraphError::Contract(format!(
                    "duplicate prerequisite {p} in path"
                )));
            }
            if !self.nodes.contains_key(p) {
                return Err(GraphError::Contract(format!(
                    "path references unknown node {p}"
                )));
            }
        }
        let entry = self.adjacency.entry(node.clone()).or_default();
        if !entry.iter().any(|e| e.same_edge(&path)) {
            entry.push(path);
        }
        Ok(())
    }

    /// Marks the checked state of an existing path.
    pub fn set_checked(&mut self, node: &NodeId, path: &AndPath, state: CheckState) {
        for map in [&mut self.adjacency, &mut self.fired] {
            if let Some(paths) = map.get_mut(node) {
                for p in paths.iter_mut() {
                    if p.same_edge(path) {
                        p.checked = state;
                    }
                }
            }
        }
    }

    /// Promotes a node into the condition set at `round`; its pending
    /// paths move into the fired ledger. Intermediate nodes become
    /// condition nodes; the target keeps its kind.
    pub fn promote(&mut self, id: &NodeId, round: u32) -> Result<(), GraphError> {
        let node = self
            .nodes
            .get_mut(id)
            .ok_or_else(|| GraphError::Contract(format!("unknown node {id}")))?;
        if node.kind == NodeKind::Intermediate {
            node.kind = NodeKind::Condition;
            node.provenance = Provenance::Promoted;
        }
        self.conditions.insert(id.clone(), round.max(1));
        if let Some(paths) = self.adjacency.remove(id) {
            self.fired.entry(id.clone()).or_default().extend(paths);
        }
        Ok(())
    }

    /// Least fixed point of returnability: start from the conditions and
    /// keep adding any node with some trusted path whose prerequisites are
    /// all already returnable. Terminates in at most `node_count` sweeps.
    pub fn returnable_set(
        &self,
        trusted: &dyn Fn(&NodeId, &AndPath) -> bool,
    ) -> BTreeSet<NodeId> {
        let mut reached: BTreeSet<NodeId> = self.conditions.members().clone();
        loop {
            let mut grew = false;
            for (node, paths) in &self.adjacency {
                if reached.contains(node) {
                    continue;
                }
                let fires = paths.iter().any(|p| {
                    p.prereqs.iter().all(|q| reached.contains(q)) && trusted(node, p)
                });
                if fires {
                    reached.insert(node.clone());
                    grew = true;
                }
            }
            if !grew {
                return reached;
            }
        }
    }

    /// Only checker-passed paths are traversable for path finding; an
    /// unexamined or failed path is an obstacle.
    fn traversable(&self, path: &AndPath) -> bool {
        path.checked == CheckState::Passed
    }

    /// Enumerates derivations of the target through traversable paths,
    /// grounded in the given (round-0) conditions: shortest first, ties
    /// broken by the produced-node id sequence. Capped at `limit`
    /// results; unreachable target yields an empty list.
    pub fn find_valid_paths_limited(&self, limit: usize) -> Vec<ValidPath> {
        if self.is_given(&self.target) {
            return vec![ValidPath { steps: Vec::new() }];
        }
        let mut results = Vec::new();
        let mut stack = BTreeSet::new();
        self.derive(&self.target, &mut stack, &mut results, limit);
        let mut out: Vec<ValidPath> = Vec::new();
        for r in results {
            if !out.contains(&r) {
                out.push(r);
            }
        }
        out.sort_by(|a, b| {
            a.len()
                .cmp(&b.len())
                .then_with(|| a.produced().cmp(&b.produced()))
        });
        out.truncate(limit);
        out
    }

    pub fn find_valid_paths(&self) -> Vec<ValidPath> {
        self.find_valid_paths_limited(64)
    }

    /// All derivations of `id` (each a step list ending by producing
    /// `id`), found backward over traversable paths. `stack` guards
    /// against cyclic support.
    fn derive(
        &self,
        id: &NodeId,
        stack: &mut BTreeSet<NodeId>,
        results: &mut Vec<ValidPath>,
        limit: usize,
    ) {
        if !stack.insert(id.clone()) {
            return;
        }
        for path in self.all_paths(id) {
            if !self.traversable(path) {
                continue;
            }
            // Derivations for each prerequisite that is not given.
            let mut partials: Vec<Vec<(AndPath, NodeId)>> = vec![Vec::new()];
            let mut dead = false;
            for prereq in &path.prereqs {
                if self.is_given(prereq) {
                    continue;
                }
                let mut sub = Vec::new();
                self.derive(prereq, stack, &mut sub, limit);
                if sub.is_empty() {
                    dead = true;
                    break;
                }
                let mut next: Vec<Vec<(AndPath, NodeId)>> = Vec::new();
                for base in &partials {
                    for alt in &sub {
                        if next.len() + results.len() > limit * 4 {
                            break;
                        }
                        let mut merged = base.clone();
                        for step in &alt.steps {
                            if !merged.iter().any(|(_, n)| n == &step.1) {
                                merged.push(step.clone());
                            }
                        }
                        next.push(merged);
                    }
                }
                partials = next;
                if partials.is_empty() {
                    dead = true;
                    break;
                }
            }
            if dead {
                continue;
            }
            for mut steps in partials {
                steps.push((path.clone(), id.clone()));
                results.push(ValidPath { steps });
                if results.len() > limit * 4 {
                    break;
                }
            }
        }
        stack.remove(id);
    }

    /// Re-validates a candidate derivation step by step: every step's
    /// prerequisites must be given conditions or earlier-produced nodes,
    /// and the final step must produce the target. Independent of the
    /// enumeration above so tests can cross-check emitted paths.
    pub fn revalidate_path(&self, path: &ValidPath) -> bool {
        if path.steps.is_empty() {
            return self.is_given(&self.target);
        }
        let mut produced: BTreeSet<&NodeId> = BTreeSet::new();
        for (and_path, node) in &path.steps {
            if and_path.prereqs.is_empty() {
                return false;
            }
            for p in &and_path.prereqs {
                if !self.is_given(p) && !produced.contains(p) {
                    return false;
                }
            }
            produced.insert(node);
        }
        path.steps.last().map(|(_, n)| n) == Some(&self.target)
    }

    /// Structural well-formedness: path targets and prerequisites resolve,
    /// node kinds agree with the condition set, exactly one target exists,
    /// and condition history replays to its members.
    pub fn validate(&self) -> Result<(), GraphError> {
        let mut targets = 0;
        for (id, node) in &self.nodes {
            if id != &node.id {
                return Err(GraphError::schema(
                    format!("nodes.{id}"),
                    "node stored under a different id",
                ));
            }
            if NodeId::from_payload(&node.payload) != node.id {
                return Err(GraphError::schema(
                    format!("nodes.{id}.payload"),
                    "id does not hash from payload",
                ));
            }
            match node.kind {
                NodeKind::Target => targets += 1,
                NodeKind::Condition => {
                    if !self.conditions.contains(id) {
                        return Err(GraphError::schema(
                            format!("nodes.{id}.kind"),
                            "condition node missing from the condition set",
                        ));
                    }
                }
                NodeKind::Intermediate => {
                    if self.conditions.contains(id) {
                        return Err(GraphError::schema(
                            format!("nodes.{id}.kind"),
                            "intermediate node present in the condition set",
                        ));
                    }
                }
            }
        }
        if targets != 1 {
            return Err(GraphError::schema("nodes", "exactly one target required"));
        }
        if !self.nodes.contains_key(&self.target) {
            return Err(GraphError::schema("target", "target not among nodes"));
        }
        for id in self.conditions.members() {
            if !self.nodes.contains_key(id) {
                return Err(GraphError::schema(
                    format!("conditions.{id}"),
                    "condition id not among nodes",
                ));
            }
        }
        for (map_name, map) in [("adjacency", &self.adjacency), ("fired", &self.fired)] {
            for (node, paths) in map {
                if !self.nodes.contains_key(node) {
                    return Err(GraphError::schema(
                        format!("{map_name}.{node}"),
                        "path key not among nodes",
                    ));
                }
                for (i, path) in paths.iter().enumerate() {
                    if path.prereqs.is_empty() {
                        return Err(GraphError::schema(
                            format!("{map_name}.{node}[{i}]"),
                            "empty prerequisite tuple",
                        ));
                    }
                    let distinct: BTreeSet<_> = path.prereqs.iter().collect();
                    if distinct.len() != path.prereqs.len() {
                        return Err(GraphError::schema(
                            format!("{map_name}.{node}[{i}]"),
                            "duplicate prerequisites",
                        ));
                    }
                    for p in &path.prereqs {
                        if !self.nodes.contains_key(p) {
                            return Err(GraphError::schema(
                                format!("{map_name}.{node}[{i}]"),
                                format!("unknown prerequisite {p}"),
                            ));
                        }
                    }
                }
            }
        }
        // Pending adjacency never overlaps the conditions; fired entries
        // belong to promoted nodes only.
        for node in self.adjacency.keys() {
            if self.conditions.contains(node) {
                return Err(GraphError::schema(
                    format!("adjacency.{node}"),
                    "pending path under a condition node",
                ));
            }
        }
        for node in self.fired.keys() {
            if !self.conditions.contains(node) {
                return Err(GraphError::schema(
                    format!("fired.{node}"),
                    "fired paths under a non-promoted node",
                ));
            }
        }
        if !self.conditions.replays_consistently() {
            return Err(GraphError::schema(
                "history",
                "condition history does not replay to the member set",
            ));
        }
        Ok(())
    }

    /// Condition nodes with payloads, for carrying into a rebuild.
    pub fn condition_nodes(&self) -> Vec<ThoughtNode> {
        self.conditions
            .members()
            .iter()
            .filter_map(|id| self.nodes.get(id))
            .cloned()
            .collect()
    }

    /// Rebuild seed: fresh graph with the same target and the carried
    /// (possibly enriched) conditions, nothing else. The carried set is
    /// rebased to round 0 — everything established so far is a given of
    /// the new build (per-round audit lives in the prior snapshots).
    pub fn seed_from_conditions(
        target_payload: &str,
        conditions: &ConditionSet,
        condition_nodes: &[ThoughtNode],
    ) -> Result<ThoughtGraph, GraphError> {
        let mut graph = ThoughtGraph::new(target_payload);
        for node in condition_nodes {
            if !conditions.contains(&node.id) {
                continue;
            }
            if node.id == *graph.target() {
                // Target already established in an earlier round: it stays
                // a member so the zero-step valid path is immediately
                // available, but keeps its Target kind.
                continue;
            }
            graph.add_node(ThoughtNode {
                id: node.id.clone(),
                kind: NodeKind::Condition,
                payload: node.payload.clone(),
                provenance: Provenance::Given,
            })?;
        }
        let mut rebased = ConditionSet::new();
        for id in conditions.members() {
            if !graph.nodes.contains_key(id) {
                return Err(GraphError::Contract(format!(
                    "carried condition {id} has no node payload"
                )));
            }
            rebased.insert(id.clone(), 0);
        }
        graph.conditions = rebased;
        Ok(graph)
    }
}

// ---------------------------------------------------------------------------
// Document format
// ---------------------------------------------------------------------------

/// Serialized path: `[[prereq ids], annotation, checked]`.
type PathRecord = (Vec<String>, String, CheckState);

/// The graph document. Field order is stable for golden tests.
#[derive(Debug, Serialize, Deserialize)]
pub struct GraphDocument {
    pub nodes: Vec<ThoughtNode>,
    pub adjacency: BTreeMap<String, Vec<PathRecord>>,
    pub target: String,
    pub conditions: Vec<String>,
    pub history: Vec<(u32, String)>,
}

impl ThoughtGraph {
    pub fn to_document(&self) -> GraphDocument {
        // Pending and fired paths serialize into one adjacency map (their
        // key sets are disjoint); deserialization splits them back by
        // condition membership.
        let mut adjacency: BTreeMap<String, Vec<PathRecord>> = BTreeMap::new();
        for map in [&self.adjacency, &self.fired] {
            for (id, paths) in map {
                adjacency.insert(
                    id.to_string(),
                    paths
                        .iter()
                        .map(|p| {
                            (
                                p.prereqs.iter().map(|q| q.to_string()).collect(),
                                p.annotation.clone(),
                                p.checked,
                            )
                        })
                        .collect(),
                );
            }
        }
        GraphDocument {
            nodes: self.nodes.values().cloned().collect(),
            adjacency,
            target: self.target.to_string(),
            conditions: self.conditions.members().iter().map(|c| c.to_string()).collect(),
            history: self
                .conditions
                .history()
                .iter()
                .map(|(r, id)| (*r, id.to_string()))
                .collect(),
        }
    }

    pub fn from_document(doc: &GraphDocument) -> Result<ThoughtGraph, GraphError> {
        let mut nodes = BTreeMap::new();
        for (i, node) in doc.nodes.iter().enumerate() {
            if NodeId::from_payload(&node.payload) != node.id {
                return Err(GraphError::schema(
                    format!("nodes[{i}].id"),
                    "id does not hash from payload",
                ));
            }
            if nodes.insert(node.id.clone(), node.clone()).is_some() {
                return Err(GraphError::schema(
                    format!("nodes[{i}].id"),
                    "duplicate node id",
                ));
            }
        }
        let mut conditions = ConditionSet::new();
        for (round, id) in &doc.history {
            conditions.insert(NodeId::from_raw(id.clone()), *round);
        }
        let declared: BTreeSet<NodeId> = doc
            .conditions
            .iter()
            .map(|c| NodeId::from_raw(c.clone()))
            .collect();
        if &declared != conditions.members() {
            return Err(GraphError::schema(
                "conditions",
                "condition list does not match replayed history",
            ));
        }
        let mut adjacency: BTreeMap<NodeId, Vec<AndPath>> = BTreeMap::new();
        let mut fired: BTreeMap<NodeId, Vec<AndPath>> = BTreeMap::new();
        for (key, paths) in &doc.adjacency {
            let id = NodeId::from_raw(key.clone());
            let mut list = Vec::new();
            for (i, (prereqs, annotation, checked)) in paths.iter().enumerate() {
                if prereqs.is_empty() {
                    return Err(GraphError::schema(
                        format!("adjacency.{key}[{i}]"),
                        "empty prerequisite tuple",
                    ));
                }
                list.push(AndPath {
                    prereqs: prereqs.iter().map(|p| NodeId::from_raw(p.clone())).collect(),
                    annotation: annotation.clone(),
                    checked: *checked,
                });
            }
            if conditions.contains(&id) {
                fired.insert(id, list);
            } else {
                adjacency.insert(id, list);
            }
        }
        let graph = ThoughtGraph {
            nodes,
            adjacency,
            fired,
            target: NodeId::from_raw(doc.target.clone()),
            conditions,
        };
        graph.validate()?;
        Ok(graph)
    }

    /// Stable JSON rendering of the graph.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("graph document serializes")
    }

    pub fn from_json(text: &str) -> Result<ThoughtGraph, GraphError> {
        let mut de = serde_json::Deserializer::from_str(text);
        let doc: GraphDocument = serde_path_to_error::deserialize(&mut de).map_err(|e| {
            GraphError::schema(e.path().to_string(), e.inner().to_string())
        })?;
        ThoughtGraph::from_document(&doc)
    }

    /// Content hash of the serialized graph, for replay-equality checks.
    pub fn content_hash(&self) -> String {
        let digest = Sha256::digest(self.to_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn node(payload: &str, kind: NodeKind) -> ThoughtNode {
        ThoughtNode::new(payload, kind, Provenance::Given)
    }

    pub(crate) fn id_of(payload: &str) -> NodeId {
        NodeId::from_payload(&normalize_payload(payload))
    }

    /// The toy graph: target A; conditions 1..5; adjacency
    /// A: {(B,C),(D,E),(F)}, B: {(2,3)}, C: {(1,2)}, D: {(C,G)},
    /// E: {(F,H)}, F: {(5)}, G: {(1,I)}, H: {}, I: {}.
    pub(crate) fn toy_graph() -> ThoughtGraph {
        let mut g = ThoughtGraph::new("A");
        for c in ["1", "2", "3", "4", "5"] {
            g.add_node(node(c, NodeKind::Condition)).unwrap();
        }
        for v in ["B", "C", "D", "E", "F", "G", "H", "I"] {
            g.add_node(node(v, NodeKind::Intermediate)).unwrap();
        }
        let edges: &[(&str, &[&str])] = &[
            ("A", &["B", "C"]),
            ("A", &["D", "E"]),
            ("A", &["F"]),
            ("B", &["2", "3"]),
            ("C", &["1", "2"]),
            ("D", &["C", "G"]),
            ("E", &["F", "H"]),
            ("F", &["5"]),
            ("G", &["1", "I"]),
        ];
        for (to, from) in edges {
            let prereqs = from.iter().map(|p| id_of(p)).collect::<Vec<_>>();
            let annotation = format!("({}) -> {}", from.join(","), to);
            g.add_path(&id_of(to), AndPath::new(prereqs, annotation)).unwrap();
        }
        g.validate().unwrap();
        g
    }

    #[test]
    fn add_target_to_empty_graph() {
        let g = ThoughtGraph::new("A");
        assert_eq!(g.node_count(), 1);
        assert_eq!(g.target(), &id_of("A"));
        assert!(g.conditions().is_empty());
    }

    #[test]
    fn add_condition_node_updates_condition_set() {
        let mut g = ThoughtGraph::new("A");
        g.add_node(node("5", NodeKind::Condition)).unwrap();
        assert!(g.conditions().contains(&id_of("5")));
        assert_eq!(g.conditions().len(), 1);
    }

    #[test]
    fn add_node_is_idempotent() {
        let mut g = ThoughtGraph::new("A");
        g.add_node(node("B", NodeKind::Intermediate)).unwrap();
        let before = g.clone();
        g.add_node(node("B", NodeKind::Intermediate)).unwrap();
        assert_eq!(g, before);
    }

    #[test]
    fn payload_normalization_dedupes() {
        let mut g = ThoughtGraph::new("A");
        g.add_node(node("some  thought", NodeKind::Intermediate)).unwrap();
        g.add_node(node("  some thought ", NodeKind::Intermediate)).unwrap();
        assert_eq!(g.node_count(), 2); // target + one thought
    }

    #[test]
    fn toy_returnable_set_trusting_everything() {
        let g = toy_graph();
        let returnable = g.returnable_set(&|_, _| true);
        let expect: BTreeSet<NodeId> = ["1", "2", "3", "4", "5", "F", "C", "B", "A"]
            .iter()
            .map(|p| id_of(p))
            .collect();
        assert_eq!(returnable, expect);
        for excluded in ["D", "E", "G", "H", "I"] {
            assert!(!returnable.contains(&id_of(excluded)), "{excluded} leaked in");
        }
    }

    #[test]
    fn returnable_set_empty_conditions() {
        let mut g = ThoughtGraph::new("A");
        g.add_node(node("B", NodeKind::Intermediate)).unwrap();
        g.add_path(&id_of("A"), AndPath::new(vec![id_of("B")], "B -> A")).unwrap();
        assert!(g.returnable_set(&|_, _| true).is_empty());
    }

    #[test]
    fn returnable_set_trusting_nothing() {
        let g = toy_graph();
        let returnable = g.returnable_set(&|_, _| false);
        assert_eq!(&returnable, g.conditions().members());
    }

    #[test]
    fn returnable_set_monotone_in_trust_and_conditions() {
        let g = toy_graph();
        let none = g.returnable_set(&|_, _| false);
        let some = g.returnable_set(&|_, p| p.prereqs.len() == 1);
        let all = g.returnable_set(&|_, _| true);
        assert!(none.is_subset(&some));
        assert!(some.is_subset(&all));

        let mut enriched = g.clone();
        enriched.promote(&id_of("B"), 1).unwrap();
        let enriched_all = enriched.returnable_set(&|_, _| true);
        assert!(all.is_subset(&enriched_all));
    }

    #[test]
    fn find_valid_paths_toy_graph() {
        let mut g = toy_graph();
        // Mark the promising paths as checker-passed.
        for (to, from) in [("F", vec!["5"]), ("C", vec!["1", "2"]), ("B", vec!["2", "3"])] {
            let path = g.paths(&id_of(to))[0].clone();
            let _ = from;
            g.set_checked(&id_of(to), &path, CheckState::Passed);
        }
        let a_paths: Vec<AndPath> = g.paths(&id_of("A")).to_vec();
        for p in &a_paths {
            if p.prereqs.len() == 1 || p.prereqs.contains(&id_of("B")) {
                g.set_checked(&id_of("A"), p, CheckState::Passed);
            }
        }
        let found = g.find_valid_paths();
        assert_eq!(found.len(), 2);
        // Shortest first: [(5)->F, (F)->A] has 2 steps.
        assert_eq!(found[0].len(), 2);
        assert_eq!(found[0].steps[0].1, id_of("F"));
        assert_eq!(found[0].steps[1].1, id_of("A"));
        assert_eq!(found[1].len(), 3);
        let produced: Vec<&NodeId> = found[1].steps.iter().map(|(_, n)| n).collect();
        assert!(produced.contains(&&id_of("B")));
        assert!(produced.contains(&&id_of("C")));
        assert_eq!(produced[2], &id_of("A"));
        for p in &found {
            assert!(g.revalidate_path(p));
        }
    }

    #[test]
    fn find_valid_paths_unreachable() {
        let g = toy_graph(); // nothing checker-passed
        assert!(g.find_valid_paths().is_empty());
    }

    #[test]
    fn zero_step_path_when_target_is_condition() {
        let g = toy_graph();
        let nodes = g.condition_nodes();
        let mut conditions = g.conditions().clone();
        conditions.insert(id_of("A"), 3);
        let mut carried = nodes;
        carried.push(g.node(&id_of("A")).unwrap().clone());
        let reused = ThoughtGraph::seed_from_conditions("A", &conditions, &carried).unwrap();
        let paths = reused.find_valid_paths();
        assert_eq!(paths.len(), 1);
        assert!(paths[0].is_empty());
        assert!(reused.revalidate_path(&paths[0]));
    }

    #[test]
    fn id_collision_reported() {
        let mut g = ThoughtGraph::new("A");
        g.add_node(node("B", NodeKind::Intermediate)).unwrap();
        let fake = ThoughtNode {
            id: id_of("B"),
            kind: NodeKind::Intermediate,
            payload: "not B".into(),
            provenance: Provenance::Generated,
        };
        assert!(matches!(
            g.add_node(fake),
            Err(GraphError::IdCollision { .. })
        ));
    }

    #[test]
    fn document_round_trip_toy_graph() {
        let mut g = toy_graph();
        let path = g.paths(&id_of("F"))[0].clone();
        g.set_checked(&id_of("F"), &path, CheckState::Passed);
        g.promote(&id_of("F"), 1).unwrap();
        let json = g.to_json();
        let back = ThoughtGraph::from_json(&json).unwrap();
        assert_eq!(g, back);
        assert_eq!(json, back.to_json());
    }

    #[test]
    fn empty_graph_round_trip() {
        let g = ThoughtGraph::new("A");
        let back = ThoughtGraph::from_json(&g.to_json()).unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn truncated_document_is_schema_violation() {
        let g = toy_graph();
        let json = g.to_json();
        let truncated = &json[..json.len() / 2];
        match ThoughtGraph::from_json(truncated) {
            Err(GraphError::SchemaViolation { .. }) => {}
            other => panic!("expected SchemaViolation, got {other:?}"),
        }
    }

    #[test]
    fn tampered_id_is_schema_violation_with_path() {
        let g = toy_graph();
        let mut doc = g.to_document();
        doc.nodes[0].payload = format!("{} tampered", doc.nodes[0].payload);
        let json = serde_json::to_string(&doc).unwrap();
        match ThoughtGraph::from_json(&json) {
            Err(GraphError::SchemaViolation { path, .. }) => {
                assert!(path.contains("nodes"), "path was {path}");
            }
            other => panic!("expected SchemaViolation, got {other:?}"),
        }
    }

    #[test]
    fn promote_keeps_history_and_clears_adjacency() {
        let mut g = toy_graph();
        g.promote(&id_of("F"), 1).unwrap();
        assert!(g.conditions().contains(&id_of("F")));
        assert!(g.paths(&id_of("F")).is_empty());
        assert_eq!(g.node(&id_of("F")).unwrap().kind, NodeKind::Condition);
        assert_eq!(g.node(&id_of("F")).unwrap().provenance, Provenance::Promoted);
        assert!(g.conditions().replays_consistently());
        // Monotone: promoting again is a no-op.
        let before = g.clone();
        g.promote(&id_of("F"), 2).unwrap();
        assert_eq!(g, before);
    }
}
