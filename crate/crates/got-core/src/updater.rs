//! Graph updating: iterative promotion of returnable nodes into the
//! condition set under the multi-inspector checker, plus final path
//! finding.
//!
//! One round scans every pending node once; a node is promoted when some
//! path has all prerequisites established and the checker accepts it.
//! Promotions become visible to later nodes within the same scan, so a
//! chain can promote bottom-up in few rounds. Rounds stop early once a
//! full scan promotes nothing; the round count is a hard cap either way.

use crate::backends::{InspectionBackend, InspectionRequest};
use crate::graph::{AndPath, CheckState, NodeId, ThoughtGraph, ValidPath};
use serde::{Deserialize, Serialize};

/// How strictly paths are checked: `inspectors` serial checks must all
/// accept; zero inspectors accept vacuously. `retry_budget` is per
/// inspector invocation, spent on transport failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InspectionPolicy {
    pub inspectors: u32,
    pub retry_budget: u32,
}

impl Default for InspectionPolicy {
    fn default() -> Self {
        InspectionPolicy {
            inspectors: 3,
            retry_budget: 1,
        }
    }
}

impl InspectionPolicy {
    pub fn with_inspectors(inspectors: u32) -> Self {
        InspectionPolicy {
            inspectors,
            ..InspectionPolicy::default()
        }
    }
}

pub const DEFAULT_ROUNDS: u32 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Accepted,
    Rejected,
    Unknown,
}

/// One judged path: the verdict plus how many inspector calls it cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckOutcome {
    pub verdict: Verdict,
    pub calls_used: u32,
}

/// Strategy point for promotion decisions: the checker in the main
/// configuration, threshold scoring in the baseline arm.
pub trait PromotionJudge {
    fn judge(&self, graph: &ThoughtGraph, node: &NodeId, path: &AndPath, round: u32) -> CheckOutcome;

    /// Whether re-judging the same path can change the verdict. A round
    /// that promotes nothing is a fixed point only for deterministic
    /// judges; stochastic ones may flip on a retry.
    fn stochastic(&self) -> bool {
        false
    }
}

/// Runs up to n serial inspectors on one path, short-circuiting at the
/// first rejection. A transport failure that survives the retry budget
/// yields Unknown, and Unknown paths are not promoted this round.
/// `round` tags the requests so per-round retries are fresh draws under
/// record/replay.
pub fn checker(
    graph: &ThoughtGraph,
    node: &NodeId,
    path: &AndPath,
    policy: &InspectionPolicy,
    inspector: &dyn InspectionBackend,
    round: u32,
) -> CheckOutcome {
    let mut request = InspectionRequest {
        node: graph.payload(node).to_string(),
        annotation: path.annotation.clone(),
        prereqs: path
            .prereqs
            .iter()
            .map(|q| graph.payload(q).to_string())
            .collect(),
        round,
        sample: 0,
    };
    let mut calls_used = 0u32;
    for slot in 0..policy.inspectors {
        request.sample = slot;
        calls_used += 1;
        let mut verdict = None;
        for _attempt in 0..=policy.retry_budget {
            match inspector.inspect(&request) {
                Ok(v) => {
                    verdict = Some(v);
                    break;
                }
                Err(_) => continue,
            }
        }
        match verdict {
            None => {
                return CheckOutcome {
                    verdict: Verdict::Unknown,
                    calls_used,
                }
            }
            Some(false) => {
                return CheckOutcome {
                    verdict: Verdict::Rejected,
                    calls_used,
                }
            }
            Some(true) => {}
        }
    }
    CheckOutcome {
        verdict: Verdict::Accepted,
        calls_used,
    }
}

/// The checker as a promotion judge.
pub struct InspectionJudge<'a> {
    pub policy: InspectionPolicy,
    pub inspector: &'a dyn InspectionBackend,
}

impl PromotionJudge for InspectionJudge<'_> {
    fn judge(&self, graph: &ThoughtGraph, node: &NodeId, path: &AndPath, round: u32) -> CheckOutcome {
        checker(graph, node, path, &self.policy, self.inspector, round)
    }

    fn stochastic(&self) -> bool {
        matches!(
            self.inspector.descriptor().kind,
            crate::backends::BackendKind::NoisySim | crate::backends::BackendKind::Llm
        )
    }
}

/// One promotion event with its witnessing path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromotionRecord {
    pub round: u32,
    pub node: NodeId,
    pub path: AndPath,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UpdateReport {
    pub rounds_executed: u32,
    pub promotions: Vec<PromotionRecord>,
    pub checker_calls: u64,
    pub unknown_verdicts: u64,
    pub early_stopped: bool,
}

/// Runs up to `rounds` promotion scans with an arbitrary judge.
pub fn update_graph_with(
    mut graph: ThoughtGraph,
    rounds: u32,
    judge: &dyn PromotionJudge,
) -> (ThoughtGraph, UpdateReport) {
    let mut report = UpdateReport::default();
    for round in 1..=rounds {
        report.rounds_executed = round;
        let mut promoted_this_round = 0usize;
        let mut examined_this_round = 0usize;
        let pending: Vec<NodeId> = graph.adjacency().keys().cloned().collect();
        for node in pending {
            if graph.conditions().contains(&node) {
                continue;
            }
            let paths: Vec<AndPath> = graph.paths(&node).to_vec();
            // The first accepted path promotes the node; the node's other
            // ready paths are still examined this scan so every traversable
            // path ends the update carrying a checker verdict.
            let mut promoted = false;
            for path in paths {
                if path.checked == CheckState::Passed {
                    continue;
                }
                let ready = path
                    .prereqs
                    .iter()
                    .all(|q| graph.conditions().contains(q));
                if !ready {
                    continue;
                }
                examined_this_round += 1;
                let outcome = judge.judge(&graph, &node, &path, round);
                report.checker_calls += outcome.calls_used as u64;
                match outcome.verdict {
                    Verdict::Accepted => {
                        graph.set_checked(&node, &path, CheckState::Passed);
                        if !promoted {
                            promoted = true;
                            graph.promote(&node, round).expect("node exists");
                            report.promotions.push(PromotionRecord {
                                round,
                                node: node.clone(),
                                path,
                            });
                            promoted_this_round += 1;
                        }
                    }
                    Verdict::Rejected => {
                        graph.set_checked(&node, &path, CheckState::Failed);
                    }
                    Verdict::Unknown => {
                        report.unknown_verdicts += 1;
                        // Left unchecked; retried next round.
                    }
                }
            }
        }
        if promoted_this_round == 0 {
            // A no-promotion round is a fixed point unless a stochastic
            // judge examined something it could flip on retry.
            let retry_could_flip = judge.stochastic() && examined_this_round > 0;
            if !retry_could_flip {
                report.early_stopped = round < rounds;
                break;
            }
        }
    }
    (graph, report)
}

/// Runs up to `rounds` promotion scans under the multi-inspector checker.
pub fn update_graph(
    graph: ThoughtGraph,
    policy: &InspectionPolicy,
    rounds: u32,
    inspector: &dyn InspectionBackend,
) -> (ThoughtGraph, UpdateReport) {
    let judge = InspectionJudge {
        policy: *policy,
        inspector,
    };
    update_graph_with(graph, rounds, &judge)
}

/// Outcome of one update-and-find pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SolveOutcome {
    Found(ValidPath),
    NotFound,
}

/// Updates the graph, then returns the best valid path under the
/// shortest-first ordering. NotFound signals the caller's rebuild loop.
pub fn solve(
    graph: ThoughtGraph,
    policy: &InspectionPolicy,
    rounds: u32,
    inspector: &dyn InspectionBackend,
) -> (ThoughtGraph, UpdateReport, SolveOutcome) {
    let (graph, report) = update_graph(graph, policy, rounds, inspector);
    let outcome = match graph.find_valid_paths().into_iter().next() {
        Some(path) => SolveOutcome::Found(path),
        None => SolveOutcome::NotFound,
    };
    (graph, report, outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::{
        BackendDescriptor, CountingInspector, FixedInspector,
    };
    use crate::error::BackendError;
    use crate::graph::{NodeKind, Provenance, ThoughtNode};
    use crate::tasks::Game24Inspector;
    use std::collections::BTreeSet;
    use std::sync::Mutex;

    fn id_of(payload: &str) -> NodeId {
        ThoughtNode::new(payload, NodeKind::Intermediate, Provenance::Given).id
    }

    /// The toy graph from the core module tests, rebuilt here.
    fn toy_graph() -> ThoughtGraph {
        let mut g = ThoughtGraph::new("A");
        for c in ["1", "2", "3", "4", "5"] {
            g.add_node(ThoughtNode::new(c, NodeKind::Condition, Provenance::Given))
                .unwrap();
        }
        for v in ["B", "C", "D", "E", "F", "G", "H", "I"] {
            g.add_node(ThoughtNode::new(v, NodeKind::Intermediate, Provenance::Generated))
                .unwrap();
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
            g.add_path(
                &id_of(to),
                AndPath::new(prereqs, format!("({}) -> {to}", from.join(","))),
            )
            .unwrap();
        }
        g
    }

    #[test]
    fn toy_graph_promotes_reachable_closure() {
        let (graph, report) = update_graph(
            toy_graph(),
            &InspectionPolicy::with_inspectors(1),
            3,
            &FixedInspector(true),
        );
        let promoted: BTreeSet<&str> = report
            .promotions
            .iter()
            .map(|p| match p.node.as_str() {
                s if s == id_of("F").as_str() => "F",
                s if s == id_of("C").as_str() => "C",
                s if s == id_of("B").as_str() => "B",
                s if s == id_of("A").as_str() => "A",
                _ => "?",
            })
            .collect();
        assert_eq!(promoted, BTreeSet::from(["F", "C", "B", "A"]));
        assert!(report.rounds_executed <= 3);
        // The never-returnable side stays out.
        for excluded in ["D", "E", "G", "H", "I"] {
            assert!(!graph.conditions().contains(&id_of(excluded)), "{excluded}");
        }
        // Both derivations of the target are found, shortest first.
        let paths = graph.find_valid_paths();
        assert_eq!(paths.len(), 2);
        assert_eq!(paths[0].len(), 2);
        assert_eq!(paths[0].steps[1].1, id_of("A"));
        assert_eq!(paths[1].len(), 3);
        for p in &paths {
            assert!(graph.revalidate_path(p));
        }
        graph.validate().unwrap();
    }

    #[test]
    fn zero_rounds_leaves_graph_unchanged() {
        let before = toy_graph();
        let (after, report) = update_graph(
            before.clone(),
            &InspectionPolicy::default(),
            0,
            &FixedInspector(true),
        );
        assert_eq!(before, after);
        assert_eq!(report.rounds_executed, 0);
        assert!(report.promotions.is_empty());
    }

    #[test]
    fn always_false_inspector_promotes_nothing() {
        let (graph, report) = update_graph(
            toy_graph(),
            &InspectionPolicy::with_inspectors(2),
            5,
            &FixedInspector(false),
        );
        assert!(report.promotions.is_empty());
        assert!(report.early_stopped);
        // Ready paths were examined and failed.
        let failed: usize = graph
            .adjacency()
            .values()
            .flatten()
            .filter(|p| p.checked == CheckState::Failed)
            .count();
        assert!(failed >= 3, "B, C, F paths should be marked failed");
    }

    #[test]
    fn checker_short_circuits_on_first_rejection() {
        // Figure example: "18-12=3" is rejected by the first inspector;
        // "12/4=3" is accepted by all n.
        let mut g = ThoughtGraph::new("3 (6)");
        g.add_node(ThoughtNode::new("4 (6 12)", NodeKind::Condition, Provenance::Given))
            .unwrap();
        let target = g.target().clone();
        let bad = AndPath::new(vec![id_of("4 (6 12)")], "18-12=3");
        let good = AndPath::new(vec![id_of("4 (6 12)")], "12/4=3");
        g.add_path(&target, bad.clone()).unwrap();
        g.add_path(&target, good.clone()).unwrap();

        let policy = InspectionPolicy {
            inspectors: 3,
            retry_budget: 0,
        };
        let counting = CountingInspector::new(Game24Inspector);
        let outcome = checker(&g, &target, &bad, &policy, &counting, 1);
        assert_eq!(outcome.verdict, Verdict::Rejected);
        assert_eq!(outcome.calls_used, 1);
        assert_eq!(counting.calls(), 1);

        let counting = CountingInspector::new(Game24Inspector);
        let outcome = checker(&g, &target, &good, &policy, &counting, 1);
        assert_eq!(outcome.verdict, Verdict::Accepted);
        assert_eq!(outcome.calls_used, 3);
        assert_eq!(counting.calls(), 3);
    }

    #[test]
    fn zero_inspectors_accept_vacuously() {
        let g = toy_graph();
        let path = g.paths(&id_of("F"))[0].clone();
        let counting = CountingInspector::new(FixedInspector(false));
        let outcome = checker(
            &g,
            &id_of("F"),
            &path,
            &InspectionPolicy::with_inspectors(0),
            &counting,
            1,
        );
        assert_eq!(outcome.verdict, Verdict::Accepted);
        assert_eq!(outcome.calls_used, 0);
        assert_eq!(counting.calls(), 0);
    }

    /// Inspector that always fails at the transport level.
    struct FailingInspector;

    impl InspectionBackend for FailingInspector {
        fn descriptor(&self) -> BackendDescriptor {
            BackendDescriptor::oracle()
        }

        fn inspect(&self, _request: &InspectionRequest) -> Result<bool, BackendError> {
            Err(BackendError::Http("down".into()))
        }
    }

    #[test]
    fn backend_failures_leave_partial_consistent_graph() {
        let (graph, report) = update_graph(
            toy_graph(),
            &InspectionPolicy {
                inspectors: 2,
                retry_budget: 1,
            },
            3,
            &FailingInspector,
        );
        assert!(report.promotions.is_empty());
        assert!(report.unknown_verdicts > 0);
        graph.validate().unwrap();
        // Unknown paths stay unchecked, eligible for a later retry.
        let unchecked_ready = graph
            .paths(&id_of("F"))
            .iter()
            .filter(|p| p.checked == CheckState::Unchecked)
            .count();
        assert_eq!(unchecked_ready, 1);
    }

    /// Flaky transport: fails once per slot, then answers true.
    struct FlakyInspector {
        failures_left: Mutex<u32>,
    }

    impl InspectionBackend for FlakyInspector {
        fn descriptor(&self) -> BackendDescriptor {
            BackendDescriptor::oracle()
        }

        fn inspect(&self, _request: &InspectionRequest) -> Result<bool, BackendError> {
            let mut left = self.failures_left.lock().unwrap();
            if *left > 0 {
                *left -= 1;
                return Err(BackendError::Http("flaky".into()));
            }
            Ok(true)
        }
    }

    #[test]
    fn retry_budget_recovers_transient_failures() {
        let g = toy_graph();
        let path = g.paths(&id_of("F"))[0].clone();
        let inspector = FlakyInspector {
            failures_left: Mutex::new(1),
        };
        let outcome = checker(
            &g,
            &id_of("F"),
            &path,
            &InspectionPolicy {
                inspectors: 2,
                retry_budget: 1,
            },
            &inspector,
            1,
        );
        assert_eq!(outcome.verdict, Verdict::Accepted);
        assert_eq!(outcome.calls_used, 2);
    }

    #[test]
    fn update_matches_fixed_point_on_toy_graph() {
        let baseline = toy_graph();
        let expected = baseline.returnable_set(&|_, _| true);
        let node_count = baseline.node_count() as u32;
        let (graph, report) = update_graph(
            baseline.clone(),
            &InspectionPolicy::with_inspectors(0),
            node_count,
            &FixedInspector(true),
        );
        let promoted: BTreeSet<NodeId> =
            report.promotions.iter().map(|p| p.node.clone()).collect();
        let expected_minus_given: BTreeSet<NodeId> = expected
            .difference(baseline.conditions().members())
            .cloned()
            .collect();
        assert_eq!(promoted, expected_minus_given);
        assert_eq!(graph.conditions().members().len(), expected.len());
    }

    #[test]
    fn promotions_are_consistent_with_condition_history() {
        let (graph, report) = update_graph(
            toy_graph(),
            &InspectionPolicy::with_inspectors(1),
            5,
            &FixedInspector(true),
        );
        for promotion in &report.promotions {
            assert!(graph
                .conditions()
                .history()
                .iter()
                .any(|(round, id)| *round == promotion.round && id == &promotion.node));
        }
        assert!(graph.conditions().replays_consistently());
    }

    #[test]
    fn checker_pass_rate_tracks_p_to_the_n() {
        use crate::backends::noisy::NoisyInspector;
        use crate::inspection::three_sigma;

        let g = toy_graph();
        let path = g.paths(&id_of("F"))[0].clone();
        let p = 0.8f64;
        let trials = 10_000u32;
        let mut last_rate = f64::INFINITY;
        for n in [1u32, 2, 3, 5] {
            let inspector = NoisyInspector::new(Box::new(FixedInspector(true)), p, 9_000 + n as u64);
            let policy = InspectionPolicy {
                inspectors: n,
                retry_budget: 0,
            };
            let mut accepted = 0u32;
            for round in 0..trials {
                let outcome = checker(&g, &id_of("F"), &path, &policy, &inspector, round);
                assert!(outcome.calls_used <= n, "short-circuit bound");
                if outcome.verdict == Verdict::Accepted {
                    accepted += 1;
                }
            }
            let rate = accepted as f64 / trials as f64;
            let expected = p.powi(n as i32);
            let bound = three_sigma(expected, trials as u64);
            assert!(
                (rate - expected).abs() <= bound,
                "n={n}: rate {rate} vs p^n {expected} (3-sigma {bound})"
            );
            assert!(rate <= last_rate, "pass rate must not rise with n");
            last_rate = rate;
        }
    }

    #[test]
    fn solve_returns_not_found_on_unsatisfiable_graph() {
        let mut g = ThoughtGraph::new("goal");
        g.add_node(ThoughtNode::new("fact", NodeKind::Condition, Provenance::Given))
            .unwrap();
        g.add_node(ThoughtNode::new("island", NodeKind::Intermediate, Provenance::Generated))
            .unwrap();
        let island = id_of("island");
        let target = g.target().clone();
        g.add_path(&target, AndPath::new(vec![island], "unsupported"))
            .unwrap();
        let (_, _, outcome) = solve(
            g,
            &InspectionPolicy::default(),
            5,
            &FixedInspector(true),
        );
        assert_eq!(outcome, SolveOutcome::NotFound);
    }
}
