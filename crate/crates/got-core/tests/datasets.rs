//! Bundled dataset integrity: the committed JSONL files are exactly what
//! the seeded generators produce, and they load and validate.

use got_core::tasks::{
    bundled_dataset, game24, polynomial, recurrence, Problem, TaskDataset, TASK_GAME24,
    TASK_POLYNOMIAL, TASK_RECURRENCE,
};

const GAME24_SEED: u64 = 2024;
const POLY_SEED: u64 = 1734;

fn game24_dataset() -> TaskDataset {
    let mut problems = vec![Problem::Game24(game24::Game24Problem {
        id: "g24-000".into(),
        numbers: vec!["6".into(), "10".into(), "12".into(), "13".into()],
        solvable: Some(true),
        witness: game24::game24_solvable(
            &[6, 10, 12, 13].map(got_core::expr::big_int_rational),
        )
        .1,
    })];
    problems.extend(
        game24::generate_problems(99, GAME24_SEED, false)
            .into_iter()
            .map(Problem::Game24),
    );
    TaskDataset::new(
        TASK_GAME24,
        "100 four-number instances over 1..=13, seeded generation, solvability labeled by exhaustive search",
        problems,
    )
}

fn polynomial_dataset() -> TaskDataset {
    TaskDataset::new(
        TASK_POLYNOMIAL,
        "100 synthetically factored polynomials (degrees 4-6, integer roots, optionally one non-square quadratic factor)",
        polynomial::generate_problems(100, POLY_SEED)
            .into_iter()
            .map(Problem::Polynomial)
            .collect(),
    )
}

fn recurrence_dataset() -> TaskDataset {
    TaskDataset::new(
        TASK_RECURRENCE,
        "20 recurrence problems with known closed forms, verified exactly by construction",
        recurrence::bundled_problems()
            .into_iter()
            .map(Problem::Recurrence)
            .collect(),
    )
}

fn dataset_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("datasets")
}

/// Regenerates the committed dataset files. Run explicitly:
/// `cargo test -p got-core --test datasets regenerate -- --ignored`
#[test]
#[ignore]
fn regenerate_bundled_datasets() {
    std::fs::write(dataset_dir().join("24game.jsonl"), game24_dataset().to_jsonl()).unwrap();
    std::fs::write(
        dataset_dir().join("polynomials.jsonl"),
        polynomial_dataset().to_jsonl(),
    )
    .unwrap();
    std::fs::write(
        dataset_dir().join("recurrences.jsonl"),
        recurrence_dataset().to_jsonl(),
    )
    .unwrap();
}

#[test]
fn bundled_datasets_match_generators() {
    assert_eq!(
        bundled_dataset(TASK_GAME24).unwrap(),
        game24_dataset().to_jsonl(),
        "24game.jsonl drifted from its generator"
    );
    assert_eq!(
        bundled_dataset(TASK_POLYNOMIAL).unwrap(),
        polynomial_dataset().to_jsonl(),
        "polynomials.jsonl drifted from its generator"
    );
    assert_eq!(
        bundled_dataset(TASK_RECURRENCE).unwrap(),
        recurrence_dataset().to_jsonl(),
        "recurrences.jsonl drifted from its generator"
    );
}

#[test]
fn bundled_datasets_load_and_validate() {
    let g24 = TaskDataset::from_jsonl(bundled_dataset(TASK_GAME24).unwrap()).unwrap();
    assert_eq!(g24.problems.len(), 100);
    let solvable = g24
        .problems
        .iter()
        .filter(|p| matches!(p, Problem::Game24(g) if g.solvable == Some(true)))
        .count();
    assert!(solvable >= 50, "unexpectedly few solvable instances: {solvable}");

    let poly = TaskDataset::from_jsonl(bundled_dataset(TASK_POLYNOMIAL).unwrap()).unwrap();
    assert_eq!(poly.problems.len(), 100);

    let rec = TaskDataset::from_jsonl(bundled_dataset(TASK_RECURRENCE).unwrap()).unwrap();
    assert_eq!(rec.problems.len(), 20);
}
