//! `got` — graph-of-thought reasoning harness.
//!
//! Exit codes: 0 solved/completed, 2 unsolved within budget, 3
//! configuration error, 4 backend failure.

use clap::{Args, Parser, Subcommand};
use got_cli::commands::{
    cmd_bench, cmd_replay, cmd_simulate, cmd_solve, default_out_dir, load_dataset, resolve_problem,
    ArmStrategy,
};
use got_cli::config::{BackendChoice, LlmSettings, RunConfig};
use got_cli::RunError;
use got_core::builder::BuildBudget;
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_UNSOLVED: u8 = 2;
const EXIT_CONFIG: u8 = 3;
const EXIT_BACKEND: u8 = 4;

#[derive(Parser)]
#[command(name = "got", about = "Graph-of-thought reasoning engine", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Task: 24game, polynomial, recurrence.
    #[arg(long)]
    task: String,

    /// Backend: oracle, noisy, llm, replay.
    #[arg(long, default_value = "oracle")]
    backend: String,

    /// Inspector count n for the checker.
    #[arg(long, default_value_t = 3)]
    inspectors: u32,

    /// Update rounds D per graph.
    #[arg(long, default_value_t = 5)]
    rounds: u32,

    /// Rebuild budget after the initial build.
    #[arg(long, default_value_t = 2)]
    max_rebuilds: u32,

    /// Master seed; all randomness derives from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Per-call correctness of the noisy simulator.
    #[arg(long, default_value_t = 0.8)]
    p_correct: f64,

    /// Build budget: maximum expanded nodes.
    #[arg(long, default_value_t = 64)]
    max_nodes: usize,

    /// Build budget: maximum recursion depth.
    #[arg(long, default_value_t = 8)]
    max_depth: usize,

    /// Build budget: proposals kept per node.
    #[arg(long, default_value_t = 3)]
    max_paths_per_node: usize,

    /// Replay fixture (calls.jsonl) for --backend replay.
    #[arg(long)]
    fixtures: Option<PathBuf>,

    /// Key=value config file for LLM settings.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Worker threads for bench runs.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

impl RunArgs {
    fn to_config(&self) -> Result<RunConfig, RunError> {
        let backend: BackendChoice = self.backend.parse()?;
        let llm = match &self.config {
            Some(path) => Some(LlmSettings::from_file(path)?),
            None => {
                if backend == BackendChoice::Llm {
                    Some(LlmSettings::default())
                } else {
                    None
                }
            }
        };
        let config = RunConfig {
            task: self.task.clone(),
            backend,
            inspectors: self.inspectors,
            rounds: self.rounds,
            max_rebuilds: self.max_rebuilds,
            budget: BuildBudget {
                max_nodes: self.max_nodes,
                max_depth: self.max_depth,
                max_paths_per_node: self.max_paths_per_node,
            },
            seed: self.seed,
            p_correct: self.p_correct,
            fixtures: self.fixtures.clone(),
            fixture_backend: None,
            out_dir: self.out.clone(),
            jobs: self.jobs,
            llm,
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem: build the graph backward, update it under the
    /// checker, emit the best valid derivation.
    Solve {
        #[command(flatten)]
        run: RunArgs,

        /// Inline problem text (e.g. "6 10 12 13" for the 24 game).
        #[arg(long)]
        input: Option<String>,

        /// Problem id from the dataset.
        #[arg(long)]
        problem_id: Option<String>,

        /// Dataset file; bundled dataset when omitted.
        #[arg(long)]
        dataset: Option<PathBuf>,
    },

    /// Batch accuracy run over a dataset.
    Bench {
        #[command(flatten)]
        run: RunArgs,

        /// Dataset file; bundled dataset when omitted.
        #[arg(long)]
        dataset: Option<PathBuf>,

        /// Limit to the first N problems.
        #[arg(long)]
        count: Option<usize>,

        /// Keep only instances labeled solvable.
        #[arg(long, default_value_t = false)]
        solvable_only: bool,

        /// Comma-separated strategies: got, scoring, io, cot.
        #[arg(long, default_value = "got", value_delimiter = ',')]
        strategies: Vec<String>,

        /// Comma-separated inspector counts for the got arm.
        #[arg(long = "inspector-counts", default_value = "3", value_delimiter = ',')]
        inspector_counts: Vec<u32>,
    },

    /// Monte Carlo comparison of threshold scoring vs serial inspection.
    Simulate {
        /// Probability mass on the top score (the per-check acceptance).
        #[arg(long, default_value_t = 0.8)]
        p_max: f64,

        /// Scoring selection threshold within 1..=10.
        #[arg(long, default_value_t = 8)]
        threshold: i64,

        /// Comma-separated inspector counts to sweep.
        #[arg(long, default_value = "0,1,2,3,4,5,6", value_delimiter = ',')]
        inspectors: Vec<u32>,

        #[arg(long, default_value_t = 10_000)]
        trials: u64,

        #[arg(long, default_value_t = 0)]
        seed: u64,

        /// CSV output file (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Re-execute a recorded run from its call log and verify the result
    /// is identical.
    Replay {
        /// Run directory containing config.json, problem.json,
        /// calls.jsonl and result.json.
        #[arg(long)]
        run: PathBuf,
    },
}

fn exit_code_for(err: &RunError) -> u8 {
    match err {
        RunError::Config(_) | RunError::Task(_) => EXIT_CONFIG,
        RunError::Backend(_) | RunError::ReplayMismatch => EXIT_BACKEND,
        RunError::Graph(_) | RunError::Io(_) => EXIT_BACKEND,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, RunError> {
    match cli.command {
        Command::Solve {
            run,
            input,
            problem_id,
            dataset,
        } => {
            let mut config = run.to_config()?;
            let problem = resolve_problem(
                &config.task,
                input.as_deref(),
                problem_id.as_deref(),
                dataset.as_deref(),
            )?;
            if config.out_dir.is_none() {
                config.out_dir = Some(default_out_dir(&config.task, problem.id()));
            }
            let result = cmd_solve(&config, &problem)?;
            match &result.answer {
                Some(answer) => println!(
                    "{}: {} ({} rebuilds, {} backend calls)",
                    result.problem_id,
                    answer,
                    result.rebuilds,
                    result.backend_calls
                ),
                None => println!(
                    "{}: no valid derivation within budget ({} rebuilds)",
                    result.problem_id, result.rebuilds
                ),
            }
            if let Some(dir) = &config.out_dir {
                println!("artifacts: {}", dir.display());
            }
            Ok(if result.solved {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_UNSOLVED)
            })
        }
        Command::Bench {
            run,
            dataset,
            count,
            solvable_only,
            strategies,
            inspector_counts,
        } => {
            let config = run.to_config()?;
            let dataset = load_dataset(&config.task, dataset.as_deref())?;
            let mut problems = dataset.problems;
            if solvable_only {
                problems.retain(|p| match p {
                    got_core::tasks::Problem::Game24(g) => g.solvable == Some(true),
                    _ => true,
                });
            }
            if let Some(n) = count {
                problems.truncate(n);
            }
            let strategies: Vec<ArmStrategy> = strategies
                .iter()
                .map(|s| s.parse())
                .collect::<Result<_, _>>()?;
            let summary = cmd_bench(&config, &problems, &strategies, &inspector_counts)?;
            print!("{}", summary.table());
            if let Some(dir) = &config.out_dir {
                println!("artifacts: {}", dir.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Simulate {
            p_max,
            threshold,
            inspectors,
            trials,
            seed,
            out,
        } => {
            let csv = cmd_simulate(p_max, threshold, &inspectors, trials, seed)?;
            match out {
                Some(path) => {
                    if let Some(dir) = path.parent() {
                        std::fs::create_dir_all(dir)?;
                    }
                    std::fs::write(&path, &csv)?;
                    println!("wrote {}", path.display());
                }
                None => print!("{csv}"),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Replay { run } => {
            let result = cmd_replay(&run)?;
            println!(
                "replay ok: {} solved={} ({} backend calls)",
                result.problem_id, result.solved, result.backend_calls
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}
