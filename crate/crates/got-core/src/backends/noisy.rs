//! Seeded noisy simulation: an error-injecting generator and a fallible
//! inspector, reproducing at desk scale the error classes a live model
//! exhibits — arithmetically false steps out of the generator, and
//! independent per-call mistakes out of the inspector.

use super::{
    BackendDescriptor, GenerationBackend, GenerationRequest, GenerationResponse,
    InspectionBackend, InspectionRequest,
};
use crate::error::BackendError;
use crate::expr::BinOp;
use crate::tasks::game24;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::sync::Mutex;

/// Wraps a generation backend and corrupts a fraction of proposed 24-game
/// step annotations into arithmetically false ones (the produced value is
/// kept, so the surrounding state chain stays intact and only the checker
/// can catch the lie). Corruption is i.i.d. per annotation with
/// probability `1 - p_correct`, from a seeded stream.
pub struct NoisyGeneration<G> {
    inner: G,
    p_correct: f64,
    rng: Mutex<ChaCha8Rng>,
    /// corrupted annotation -> original, per node, so prerequisite lookups
    /// still resolve against the inner backend.
    aliases: Mutex<BTreeMap<(String, String), String>>,
}

impl<G: GenerationBackend> NoisyGeneration<G> {
    pub fn new(inner: G, p_correct: f64, seed: u64) -> Self {
        assert!((0.0..=1.0).contains(&p_correct), "p_correct out of range");
        NoisyGeneration {
            inner,
            p_correct,
            rng: Mutex::new(ChaCha8Rng::seed_from_u64(seed)),
            aliases: Mutex::new(BTreeMap::new()),
        }
    }
}

impl<G: GenerationBackend> GenerationBackend for NoisyGeneration<G> {
    fn descriptor(&self) -> BackendDescriptor {
        BackendDescriptor::noisy()
    }

    fn generate(&self, request: &GenerationRequest) -> Result<GenerationResponse, BackendError> {
        match request {
            GenerationRequest::Paths { node, .. } => {
                let response = self.inner.generate(request)?;
                let GenerationResponse::Annotations(annotations) = response else {
                    return Ok(response);
                };
                let mut rng = self.rng.lock().unwrap();
                let mut aliases = self.aliases.lock().unwrap();
                let mut out = Vec::with_capacity(annotations.len());
                for annotation in annotations {
                    if rng.random_bool(self.p_correct) {
                        out.push(annotation);
                        continue;
                    }
                    match corrupt_annotation(&annotation, &mut rng) {
                        Some(corrupted) => {
                            aliases
                                .entry((node.clone(), corrupted.clone()))
                                .or_insert_with(|| annotation.clone());
                            out.push(corrupted);
                        }
                        None => out.push(annotation),
                    }
                }
                Ok(GenerationResponse::Annotations(out))
            }
            GenerationRequest::Prereqs {
                node,
                annotation,
                conditions,
                task,
            } => {
                let original = self
                    .aliases
                    .lock()
                    .unwrap()
                    .get(&(node.clone(), annotation.clone()))
                    .cloned();
                match original {
                    Some(original) => self.inner.generate(&GenerationRequest::Prereqs {
                        node: node.clone(),
                        annotation: original,
                        conditions: conditions.clone(),
                        task: task.clone(),
                    }),
                    None => self.inner.generate(request),
                }
            }
        }
    }
}

/// Turns a true `x op y = z` step into a false one with the same produced
/// value, e.g. perturbing an operand or flipping the operator. Returns
/// None for annotations that do not parse as arithmetic steps.
pub fn corrupt_annotation(annotation: &str, rng: &mut ChaCha8Rng) -> Option<String> {
    let step = game24::parse_step(annotation).ok()?;
    for _ in 0..16 {
        let delta = crate::expr::big_int_rational(rng.random_range(1..=6i64));
        let (left, op, right) = match rng.random_range(0..3u8) {
            0 => (step.left.clone() + &delta, step.op, step.right.clone()),
            1 => (step.left.clone(), step.op, step.right.clone() + &delta),
            _ => {
                let flipped = match step.op {
                    BinOp::Add => BinOp::Sub,
                    BinOp::Sub => BinOp::Add,
                    BinOp::Mul => BinOp::Div,
                    BinOp::Div => BinOp::Mul,
                    BinOp::Pow => BinOp::Mul,
                };
                (step.left.clone(), flipped, step.right.clone())
            }
        };
        let candidate = game24::render_step(&left, op, &right, &step.result);
        if candidate != annotation
            && matches!(game24::verify_arithmetic_step(&candidate), Ok(false))
        {
            return Some(candidate);
        }
    }
    None
}

/// Inspector that reports the ground-truth verdict with probability
/// `p_correct` and the flipped verdict otherwise, i.i.d. across calls.
pub struct NoisyInspector {
    truth: Box<dyn InspectionBackend>,
    p_correct: f64,
    rng: Mutex<ChaCha8Rng>,
}

impl NoisyInspector {
    pub fn new(truth: Box<dyn InspectionBackend>, p_correct: f64, seed: u64) -> Self {
        assert!((0.0..=1.0).contains(&p_correct), "p_correct out of range");
        NoisyInspector {
            truth,
            p_correct,
            rng: Mutex::new(ChaCha8Rng::seed_from_u64(seed)),
        }
    }
}

/// The sampling core: the true verdict survives with probability
/// `p_correct`, otherwise it is flipped.
pub fn noisy_inspect(truth: bool, p_correct: f64, rng: &mut ChaCha8Rng) -> bool {
    if rng.random_bool(p_correct) {
        truth
    } else {
        !truth
    }
}

impl InspectionBackend for NoisyInspector {
    fn descriptor(&self) -> BackendDescriptor {
        BackendDescriptor::noisy()
    }

    fn inspect(&self, request: &InspectionRequest) -> Result<bool, BackendError> {
        let truth = self.truth.inspect(request)?;
        let mut rng = self.rng.lock().unwrap();
        Ok(noisy_inspect(truth, self.p_correct, &mut rng))
    }
}

/// Scorer used by the threshold-scoring baseline: a true step scores the
/// maximum with probability `p_correct`, a false step with probability
/// `1 - p_correct`; otherwise the score is uniform below the maximum.
pub struct NoisyScorer {
    truth: Box<dyn InspectionBackend>,
    p_correct: f64,
    max_score: i64,
    rng: Mutex<ChaCha8Rng>,
}

impl NoisyScorer {
    pub fn new(truth: Box<dyn InspectionBackend>, p_correct: f64, seed: u64) -> Self {
        NoisyScorer {
            truth,
            p_correct,
            max_score: 10,
            rng: Mutex::new(ChaCha8Rng::seed_from_u64(seed)),
        }
    }

    pub fn score(&self, request: &InspectionRequest) -> Result<i64, BackendError> {
        let truth = self.truth.inspect(request)?;
        let p_top = if truth { self.p_correct } else { 1.0 - self.p_correct };
        let mut rng = self.rng.lock().unwrap();
        if rng.random_bool(p_top) {
            Ok(self.max_score)
        } else {
            Ok(rng.random_range(1..self.max_score))
        }
    }
}
