//! Run orchestration: the build -> update -> find -> rebuild loop, the
//! benchmark harness, the selector simulation, and run replay.

use crate::config::{BackendChoice, ConfigError, RunConfig};
use got_core::backends::llm::LlmBackend;
use got_core::backends::noisy::{NoisyGeneration, NoisyInspector, NoisyScorer};
use got_core::backends::oracle::OracleGeneration;
use got_core::backends::replay::{ReplayGeneration, ReplayInspection};
use got_core::backends::templates::TemplateSet;
use got_core::backends::{
    CallLog, GenerationBackend, InspectionBackend, RecordingGeneration, RecordingInspection,
};
use got_core::builder::{
    build_from_target, rebuild_with_updated_conditions, BuildError,
};
use got_core::error::{BackendError, TaskError};
use got_core::inspection::{simulate_selectors, ScoreDistribution};
use got_core::tasks::baselines::{
    audit_false_promotions, cot_run, io_run, OracleAnswerProvider, ScoringJudge,
};
use got_core::tasks::{bundled_dataset, Problem, TaskDataset};
use got_core::updater::{
    solve, update_graph_with, InspectionPolicy, SolveOutcome, UpdateReport,
};
use got_core::{GraphError, ThoughtGraph, ValidPath};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("backend failure: {0}")]
    Backend(#[from] BackendError),

    #[error(transparent)]
    Task(#[from] TaskError),

    #[error(transparent)]
    Graph(#[from] GraphError),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("replayed result differs from the recorded result")]
    ReplayMismatch,
}

impl From<BuildError> for RunError {
    fn from(e: BuildError) -> Self {
        match e {
            BuildError::Backend(b) => RunError::Backend(b),
            BuildError::Graph(g) => RunError::Graph(g),
            BuildError::Contract(c) => RunError::Config(ConfigError::Invalid(c)),
        }
    }
}

/// One solved (or not) problem; fully self-describing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub problem_id: String,
    pub solved: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub valid_path: Option<ValidPath>,
    pub rebuilds: u32,
    pub backend_calls: u64,
    pub wall_time_ms: u64,
    pub graph_snapshots: Vec<String>,
    pub config: RunConfig,
}

impl RunResult {
    /// Serialization used for replay equality: wall time is the one field
    /// a faithful replay cannot reproduce, so it is zeroed here.
    pub fn canonical_json(&self) -> String {
        let mut canonical = self.clone();
        canonical.wall_time_ms = 0;
        serde_json::to_string_pretty(&canonical).expect("result serializes")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result serializes")
    }
}

/// Assembles the configured backends on the stack and hands them to `f`.
/// Non-replay backends are wrapped in the recording cache when an output
/// directory is present; replay backends never touch the network or the
/// recorder.
fn with_backends<T>(
    config: &RunConfig,
    problem: &Problem,
    record_log: Option<&CallLog>,
    f: impl FnOnce(&dyn GenerationBackend, &dyn InspectionBackend) -> Result<T, RunError>,
) -> Result<T, RunError> {
    match config.backend {
        BackendChoice::Oracle => {
            let generation = OracleGeneration::new(problem.clone());
            let inspector = problem.exact_inspector();
            dispatch_recorded(record_log, &generation, inspector.as_ref(), f)
        }
        BackendChoice::Noisy => {
            let generation = NoisyGeneration::new(
                OracleGeneration::new(problem.clone()),
                config.p_correct,
                config.derived_seed(problem.id(), "generation"),
            );
            let inspector = NoisyInspector::new(
                problem.exact_inspector(),
                config.p_correct,
                config.derived_seed(problem.id(), "inspection"),
            );
            dispatch_recorded(record_log, &generation, &inspector, f)
        }
        BackendChoice::Llm => {
            let settings = config.llm.clone().unwrap_or_default();
            let templates = match &settings.templates_dir {
                Some(dir) => TemplateSet::with_override_dir(dir),
                None => TemplateSet::embedded(),
            };
            let backend = LlmBackend::new(settings.to_llm_config(), templates, problem.context());
            dispatch_recorded(record_log, &backend, &backend, f)
        }
        BackendChoice::Replay => {
            let fixture = config
                .fixtures
                .as_ref()
                .ok_or_else(|| ConfigError::Invalid("replay requires fixtures".into()))?;
            let log = CallLog::load_fixture(fixture)?;
            let generation = ReplayGeneration::new(&log);
            let inspector = match config.fixture_backend {
                Some(BackendChoice::Noisy) => {
                    ReplayInspection::impersonating(&log, got_core::backends::BackendKind::NoisySim)
                }
                Some(BackendChoice::Llm) => {
                    ReplayInspection::impersonating(&log, got_core::backends::BackendKind::Llm)
                }
                _ => ReplayInspection::new(&log),
            };
            f(&generation, &inspector)
        }
    }
}

fn dispatch_recorded<T>(
    record_log: Option<&CallLog>,
    generation: &dyn GenerationBackend,
    inspector: &dyn InspectionBackend,
    f: impl FnOnce(&dyn GenerationBackend, &dyn InspectionBackend) -> Result<T, RunError>,
) -> Result<T, RunError> {
    match record_log {
        Some(log) => {
            let generation = RecordingGeneration::new(generation, log);
            let inspector = RecordingInspection::new(inspector, log);
            f(&generation, &inspector)
        }
        None => f(generation, inspector),
    }
}

struct LoopOutcome {
    found: Option<(ThoughtGraph, ValidPath)>,
    rebuilds: u32,
    backend_calls: u64,
    snapshots: Vec<String>,
    /// Post-update graph and report per iteration, for auditing.
    iterations: Vec<(ThoughtGraph, UpdateReport)>,
}

/// The solve loop: build from the target, update under the checker, look
/// for a valid path; on failure rebuild from the enriched conditions, up
/// to the rebuild budget. Graph snapshots and update reports are written
/// per iteration when an output directory is given.
fn solve_loop(
    config: &RunConfig,
    problem: &Problem,
    generation: &dyn GenerationBackend,
    inspector: &dyn InspectionBackend,
    out_dir: Option<&Path>,
) -> Result<LoopOutcome, RunError> {
    let policy = InspectionPolicy {
        inspectors: config.inspectors,
        retry_budget: 1,
    };
    let target = problem.target_payload()?;
    let conditions = problem.condition_payloads()?;
    let base_task = problem.context();
    let mut outcome = LoopOutcome {
        found: None,
        rebuilds: 0,
        backend_calls: 0,
        snapshots: Vec::new(),
        iterations: Vec::new(),
    };
    let mut carried: Option<ThoughtGraph> = None;
    for iteration in 0..=config.max_rebuilds {
        outcome.rebuilds = iteration;
        let task = base_task.with_attempt(iteration);
        let (graph, build_report) = match &carried {
            None => build_from_target(&target, &conditions, generation, &config.budget, &task)?,
            Some(prior) => {
                let (carry_set, carry_nodes) = problem.carry_conditions(prior);
                rebuild_with_updated_conditions(
                    &carry_set,
                    &carry_nodes,
                    &target,
                    generation,
                    &config.budget,
                    &task,
                )?
            }
        };
        outcome.backend_calls += build_report.backend_calls as u64;
        let (graph, update_report, solve_outcome) =
            solve(graph, &policy, config.rounds, inspector);
        outcome.backend_calls += update_report.checker_calls;
        if let Some(dir) = out_dir {
            let snapshot = format!("round-{iteration:02}.json");
            std::fs::write(dir.join(&snapshot), graph.to_json())?;
            std::fs::write(
                dir.join(format!("report-{iteration:02}.json")),
                serde_json::to_string_pretty(&update_report).expect("report serializes"),
            )?;
            std::fs::write(
                dir.join(format!("trace-{iteration:02}.jsonl")),
                build_report.trace_jsonl(),
            )?;
            outcome.snapshots.push(snapshot);
        }
        match solve_outcome {
            SolveOutcome::Found(path) => {
                outcome.iterations.push((graph.clone(), update_report));
                outcome.found = Some((graph, path));
                break;
            }
            SolveOutcome::NotFound => {
                outcome.iterations.push((graph.clone(), update_report));
                carried = Some(graph);
            }
        }
    }
    Ok(outcome)
}

/// Solves one problem under the configuration. The result's `solved` flag
/// is set only when the emitted derivation re-verifies under the task's
/// ground-truth verifier.
pub fn cmd_solve(config: &RunConfig, problem: &Problem) -> Result<RunResult, RunError> {
    config.validate()?;
    let started = Instant::now();
    let out_dir = config.out_dir.clone();
    let record_log = match (&out_dir, config.backend) {
        (Some(dir), choice) if choice != BackendChoice::Replay => {
            std::fs::create_dir_all(dir)?;
            Some(CallLog::at_path(dir.join("calls.jsonl"))?)
        }
        (Some(dir), _) => {
            std::fs::create_dir_all(dir)?;
            None
        }
        (None, _) => None,
    };
    if let Some(dir) = &out_dir {
        std::fs::write(
            dir.join("config.json"),
            serde_json::to_string_pretty(config).expect("config serializes"),
        )?;
        std::fs::write(
            dir.join("problem.json"),
            serde_json::to_string_pretty(problem).expect("problem serializes"),
        )?;
    }
    let outcome = with_backends(config, problem, record_log.as_ref(), |generation, inspector| {
        solve_loop(config, problem, generation, inspector, out_dir.as_deref())
    })?;
    let (solved, answer, valid_path) = match &outcome.found {
        Some((graph, path)) => (
            problem.verify_valid_path(graph, path),
            problem.extract_answer(graph, path),
            Some(path.clone()),
        ),
        None => (false, None, None),
    };
    let result = RunResult {
        problem_id: problem.id().to_string(),
        solved,
        answer,
        valid_path,
        rebuilds: outcome.rebuilds,
        backend_calls: outcome.backend_calls,
        wall_time_ms: started.elapsed().as_millis() as u64,
        graph_snapshots: outcome.snapshots,
        config: config.clone(),
    };
    if let Some(dir) = &out_dir {
        std::fs::write(dir.join("result.json"), result.to_json())?;
    }
    Ok(result)
}

// ---------------------------------------------------------------------------
// Bench
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArmStrategy {
    Got,
    Scoring,
    Io,
    Cot,
}

impl std::str::FromStr for ArmStrategy {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "got" => Ok(ArmStrategy::Got),
            "scoring" => Ok(ArmStrategy::Scoring),
            "io" => Ok(ArmStrategy::Io),
            "cot" => Ok(ArmStrategy::Cot),
            other => Err(ConfigError::Invalid(format!("unknown strategy {other}"))),
        }
    }
}

impl ArmStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            ArmStrategy::Got => "got",
            ArmStrategy::Scoring => "scoring",
            ArmStrategy::Io => "io",
            ArmStrategy::Cot => "cot",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub problem_id: String,
    pub strategy: String,
    pub inspectors: u32,
    pub solved: bool,
    pub calls: u64,
    pub false_promotions: u64,
    pub wall_time_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmSummary {
    pub strategy: String,
    pub inspectors: u32,
    pub solved: usize,
    pub total: usize,
    pub accuracy: f64,
    pub false_promotions: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub rows: Vec<BenchRow>,
    pub arms: Vec<ArmSummary>,
}

pub const SCORING_THRESHOLD: i64 = 8;

/// One problem under one arm.
fn run_arm(
    config: &RunConfig,
    problem: &Problem,
    strategy: ArmStrategy,
    inspectors: u32,
) -> Result<BenchRow, RunError> {
    let started = Instant::now();
    let arm_config = RunConfig {
        inspectors,
        out_dir: None,
        ..config.clone()
    };
    let (solved, calls, false_promotions) = match strategy {
        ArmStrategy::Got => {
            let mut false_count = 0u64;
            let (solved, calls) =
                with_backends(&arm_config, problem, None, |generation, inspector| {
                    let outcome =
                        solve_loop(&arm_config, problem, generation, inspector, None)?;
                    // Audit every promotion against its own iteration's
                    // graph (node payloads are per-iteration).
                    for (graph, report) in &outcome.iterations {
                        false_count += audit_false_promotions(problem, graph, report);
                    }
                    match &outcome.found {
                        Some((graph, path)) => {
                            Ok((problem.verify_valid_path(graph, path), outcome.backend_calls))
                        }
                        None => Ok((false, outcome.backend_calls)),
                    }
                })?;
            (solved, calls, false_count)
        }
        ArmStrategy::Scoring => {
            let generation = NoisyGeneration::new(
                OracleGeneration::new(problem.clone()),
                arm_config.p_correct,
                arm_config.derived_seed(problem.id(), "generation"),
            );
            let scorer = NoisyScorer::new(
                problem.exact_inspector(),
                arm_config.p_correct,
                arm_config.derived_seed(problem.id(), "scoring"),
            );
            let judge = ScoringJudge {
                scorer: &scorer,
                threshold: SCORING_THRESHOLD,
            };
            // Same loop shape as the got arm, promotion by score.
            let target = problem.target_payload()?;
            let conditions = problem.condition_payloads()?;
            let base_task = problem.context();
            let mut calls = 0u64;
            let mut false_count = 0u64;
            let mut solved = false;
            let mut carried: Option<ThoughtGraph> = None;
            for iteration in 0..=arm_config.max_rebuilds {
                let task = base_task.with_attempt(iteration);
                let (graph, build_report) = match &carried {
                    None => build_from_target(
                        &target,
                        &conditions,
                        &generation,
                        &arm_config.budget,
                        &task,
                    )?,
                    Some(prior) => {
                        let (carry_set, carry_nodes) = problem.carry_conditions(prior);
                        rebuild_with_updated_conditions(
                            &carry_set,
                            &carry_nodes,
                            &target,
                            &generation,
                            &arm_config.budget,
                            &task,
                        )?
                    }
                };
                calls += build_report.backend_calls as u64;
                let (graph, report) = update_graph_with(graph, arm_config.rounds, &judge);
                calls += report.checker_calls;
                false_count += audit_false_promotions(problem, &graph, &report);
                if let Some(path) = graph.find_valid_paths().into_iter().next() {
                    solved = problem.verify_valid_path(&graph, &path);
                    break;
                }
                carried = Some(graph);
            }
            (solved, calls, false_count)
        }
        ArmStrategy::Io => {
            let outcome = io_run(problem, &OracleAnswerProvider)?;
            (outcome.solved, outcome.calls, 0)
        }
        ArmStrategy::Cot => {
            let outcome = cot_run(problem, &OracleAnswerProvider)?;
            (outcome.solved, outcome.calls, 0)
        }
    };
    Ok(BenchRow {
        problem_id: problem.id().to_string(),
        strategy: strategy.name().to_string(),
        inspectors,
        solved,
        calls,
        false_promotions,
        wall_time_ms: started.elapsed().as_millis() as u64,
    })
}

/// Batch run over a dataset: every problem under every requested arm,
/// optionally across worker threads, merged deterministically.
pub fn cmd_bench(
    config: &RunConfig,
    problems: &[Problem],
    strategies: &[ArmStrategy],
    inspector_counts: &[u32],
) -> Result<BenchSummary, RunError> {
    config.validate()?;
    if problems.is_empty() {
        return Err(ConfigError::Invalid("empty dataset".into()).into());
    }
    let mut arms: Vec<(ArmStrategy, u32)> = Vec::new();
    for strategy in strategies {
        match strategy {
            ArmStrategy::Got => {
                for n in inspector_counts {
                    arms.push((ArmStrategy::Got, *n));
                }
            }
            // Scoring makes one call per path; IO and CoT take no
            // inspector count either.
            other => arms.push((*other, 0)),
        }
    }
    let jobs = config.jobs.max(1).min(problems.len());
    let mut rows: Vec<BenchRow> = if jobs == 1 {
        let mut rows = Vec::new();
        for problem in problems {
            for (strategy, n) in &arms {
                rows.push(run_arm(config, problem, *strategy, *n)?);
            }
        }
        rows
    } else {
        let chunks: Vec<&[Problem]> = problems.chunks(problems.len().div_ceil(jobs)).collect();
        let results: Vec<Result<Vec<BenchRow>, RunError>> = std::thread::scope(|scope| {
            let handles: Vec<_> = chunks
                .into_iter()
                .map(|chunk| {
                    let arms = arms.clone();
                    scope.spawn(move || {
                        let mut rows = Vec::new();
                        for problem in chunk {
                            for (strategy, n) in &arms {
                                rows.push(run_arm(config, problem, *strategy, *n)?);
                            }
                        }
                        Ok(rows)
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("worker")).collect()
        });
        let mut rows = Vec::new();
        for r in results {
            rows.extend(r?);
        }
        rows
    };
    rows.sort_by(|a, b| {
        (&a.problem_id, &a.strategy, a.inspectors).cmp(&(&b.problem_id, &b.strategy, b.inspectors))
    });

    let mut arms_summary = Vec::new();
    for (strategy, n) in &arms {
        let relevant: Vec<&BenchRow> = rows
            .iter()
            .filter(|r| r.strategy == strategy.name() && r.inspectors == *n)
            .collect();
        let solved = relevant.iter().filter(|r| r.solved).count();
        arms_summary.push(ArmSummary {
            strategy: strategy.name().to_string(),
            inspectors: *n,
            solved,
            total: relevant.len(),
            accuracy: solved as f64 / relevant.len().max(1) as f64,
            false_promotions: relevant.iter().map(|r| r.false_promotions).sum(),
        });
    }
    let summary = BenchSummary {
        rows,
        arms: arms_summary,
    };
    if let Some(dir) = &config.out_dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("results.csv"), summary.results_csv())?;
        std::fs::write(dir.join("accuracy.csv"), summary.accuracy_csv())?;
        std::fs::write(
            dir.join("bench-config.json"),
            serde_json::to_string_pretty(config).expect("config serializes"),
        )?;
    }
    Ok(summary)
}

impl BenchSummary {
    /// Per-problem detail (includes wall time, not byte-reproducible).
    pub fn results_csv(&self) -> String {
        let mut out =
            String::from("problem_id,strategy,inspectors,solved,calls,false_promotions,wall_time_ms\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.problem_id,
                r.strategy,
                r.inspectors,
                r.solved,
                r.calls,
                r.false_promotions,
                r.wall_time_ms
            ));
        }
        out
    }

    /// Accuracy table; deterministic bytes for a given (dataset, config,
    /// seed).
    pub fn accuracy_csv(&self) -> String {
        let mut out = String::from("strategy,inspectors,solved,total,accuracy,false_promotions\n");
        for a in &self.arms {
            out.push_str(&format!(
                "{},{},{},{},{:.4},{}\n",
                a.strategy, a.inspectors, a.solved, a.total, a.accuracy, a.false_promotions
            ));
        }
        out
    }

    pub fn table(&self) -> String {
        let mut out = format!(
            "{:<10} {:>10} {:>8} {:>8} {:>9} {:>17}\n",
            "strategy", "inspectors", "solved", "total", "accuracy", "false_promotions"
        );
        for a in &self.arms {
            out.push_str(&format!(
                "{:<10} {:>10} {:>8} {:>8} {:>9.4} {:>17}\n",
                a.strategy, a.inspectors, a.solved, a.total, a.accuracy, a.false_promotions
            ));
        }
        out
    }

    pub fn arm(&self, strategy: &str, inspectors: u32) -> Option<&ArmSummary> {
        self.arms
            .iter()
            .find(|a| a.strategy == strategy && a.inspectors == inspectors)
    }
}

// ---------------------------------------------------------------------------
// Simulate
// ---------------------------------------------------------------------------

/// Sweeps inspector counts at a given top-score mass and writes the
/// closed-form vs empirical comparison.
pub fn cmd_simulate(
    p_max: f64,
    threshold: i64,
    inspector_counts: &[u32],
    trials: u64,
    seed: u64,
) -> Result<String, RunError> {
    if trials == 0 {
        return Err(ConfigError::Invalid("trials must be at least 1".into()).into());
    }
    if !(0.0..=1.0).contains(&p_max) {
        return Err(ConfigError::Invalid(format!("p_max {p_max} out of [0, 1]")).into());
    }
    if !(1..=10).contains(&threshold) {
        return Err(ConfigError::Invalid(format!("threshold {threshold} out of 1..=10")).into());
    }
    let dist = ScoreDistribution::with_top_mass(p_max, threshold);
    let mut out = String::from("n,closed_form,empirical,ci_low,ci_high,scoring_closed_form,scoring_empirical\n");
    for n in inspector_counts {
        let report = simulate_selectors(&dist, *n, trials, seed);
        out.push_str(&format!(
            "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
            n,
            report.inspection_closed_form,
            report.inspection_empirical,
            report.inspection_ci_low,
            report.inspection_ci_high,
            report.scoring_closed_form,
            report.scoring_empirical,
        ));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Replay
// ---------------------------------------------------------------------------

/// Re-executes a recorded run from its call log; the replayed result must
/// match the recorded one on the canonical (wall-time-free) serialization.
pub fn cmd_replay(run_dir: &Path) -> Result<RunResult, RunError> {
    let read = |name: &str| -> Result<String, RunError> {
        std::fs::read_to_string(run_dir.join(name)).map_err(|e| {
            RunError::Config(ConfigError::Io {
                path: run_dir.join(name).display().to_string(),
                message: e.to_string(),
            })
        })
    };
    let recorded_config: RunConfig = serde_json::from_str(&read("config.json")?)
        .map_err(|e| ConfigError::Invalid(format!("config.json: {e}")))?;
    let problem: Problem = serde_json::from_str(&read("problem.json")?)
        .map_err(|e| ConfigError::Invalid(format!("problem.json: {e}")))?;
    let original: RunResult = serde_json::from_str(&read("result.json")?)
        .map_err(|e| ConfigError::Invalid(format!("result.json: {e}")))?;

    let replay_config = RunConfig {
        backend: BackendChoice::Replay,
        fixtures: Some(run_dir.join("calls.jsonl")),
        fixture_backend: Some(recorded_config.backend),
        out_dir: None,
        ..recorded_config.clone()
    };
    let replayed = with_backends(&replay_config, &problem, None, |generation, inspector| {
        solve_loop(&replay_config, &problem, generation, inspector, None)
    })?;
    let (solved, answer, valid_path) = match &replayed.found {
        Some((graph, path)) => (
            problem.verify_valid_path(graph, path),
            problem.extract_answer(graph, path),
            Some(path.clone()),
        ),
        None => (false, None, None),
    };
    let result = RunResult {
        problem_id: problem.id().to_string(),
        solved,
        answer,
        valid_path,
        rebuilds: replayed.rebuilds,
        backend_calls: replayed.backend_calls,
        wall_time_ms: 0,
        graph_snapshots: original.graph_snapshots.clone(),
        config: recorded_config,
    };
    if result.canonical_json() != original.canonical_json() {
        return Err(RunError::ReplayMismatch);
    }
    Ok(result)
}

// ---------------------------------------------------------------------------
// Problem selection
// ---------------------------------------------------------------------------

/// Resolves a problem from CLI inputs: an inline `--input`, a dataset
/// problem id, or the first problem of the bundled dataset.
pub fn resolve_problem(
    task: &str,
    input: Option<&str>,
    problem_id: Option<&str>,
    dataset_path: Option<&Path>,
) -> Result<Problem, RunError> {
    if let Some(text) = input {
        return problem_from_input(task, text);
    }
    let dataset = load_dataset(task, dataset_path)?;
    match problem_id {
        Some(id) => dataset
            .problems
            .into_iter()
            .find(|p| p.id() == id)
            .ok_or_else(|| ConfigError::Invalid(format!("no problem {id} in dataset")).into()),
        None => dataset
            .problems
            .into_iter()
            .next()
            .ok_or_else(|| ConfigError::Invalid("dataset is empty".into()).into()),
    }
}

pub fn load_dataset(task: &str, dataset_path: Option<&Path>) -> Result<TaskDataset, RunError> {
    match dataset_path {
        Some(path) => Ok(TaskDataset::load(path)?),
        None => {
            let text = bundled_dataset(task)
                .ok_or_else(|| ConfigError::Invalid(format!("no bundled dataset for task {task}")))?;
            Ok(TaskDataset::from_jsonl(text)?)
        }
    }
}

/// Builds an ad-hoc problem from inline text: four numbers for the 24
/// game, descending coefficients for a polynomial.
pub fn problem_from_input(task: &str, text: &str) -> Result<Problem, RunError> {
    match task {
        got_core::tasks::TASK_GAME24 => {
            let numbers: Vec<String> = text.split_whitespace().map(str::to_string).collect();
            if numbers.len() != 4 {
                return Err(ConfigError::Invalid(format!(
                    "24game input needs exactly 4 numbers, got {}",
                    numbers.len()
                ))
                .into());
            }
            let problem = got_core::tasks::game24::Game24Problem {
                id: format!("inline-{}", numbers.join("-")),
                numbers,
                solvable: None,
                witness: None,
            };
            let problem = Problem::Game24(problem);
            problem.target_payload()?; // validates the numbers parse
            Ok(problem)
        }
        got_core::tasks::TASK_POLYNOMIAL => {
            let coefficients: Vec<String> = text.split_whitespace().map(str::to_string).collect();
            if coefficients.len() < 2 {
                return Err(
                    ConfigError::Invalid("polynomial input needs at least 2 coefficients".into())
                        .into(),
                );
            }
            let problem = Problem::Polynomial(got_core::tasks::polynomial::PolynomialProblem {
                id: "inline-poly".into(),
                coefficients,
                integer_roots: vec![],
                quadratic_factor: None,
            });
            problem.target_payload()?;
            Ok(problem)
        }
        got_core::tasks::TASK_RECURRENCE => Err(ConfigError::Invalid(
            "recurrence problems are selected by --problem-id from a dataset".into(),
        )
        .into()),
        other => Err(ConfigError::Invalid(format!("unknown task {other}")).into()),
    }
}

/// Output directory default for solve runs.
pub fn default_out_dir(task: &str, problem_id: &str) -> PathBuf {
    PathBuf::from("got-runs").join(format!("{task}-{problem_id}"))
}
