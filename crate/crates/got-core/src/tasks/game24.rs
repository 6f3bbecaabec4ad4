//! The 24 game: reach 24 from four numbers with + - * /, each number
//! used exactly once.
//!
//! A state is "current value plus the multiset of unused numbers",
//! written canonically as `3 (6 12)`; the opening state has no current
//! value and is written `(6 10 12 13)`. All arithmetic is exact.

use crate::error::TaskError;
use crate::expr::{self, render_rational, BinOp, Expr};
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

pub const TARGET_VALUE: i64 = 24;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Game24Problem {
    pub id: String,
    /// Canonical rational renderings of the four given numbers.
    pub numbers: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solvable: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

impl Game24Problem {
    pub fn values(&self) -> Result<Vec<BigRational>, TaskError> {
        if self.numbers.len() != 4 {
            return Err(TaskError::MalformedProblem(format!(
                "24-game problem {} must have exactly 4 numbers",
                self.id
            )));
        }
        self.numbers
            .iter()
            .map(|n| expr::parse_rational(n).map_err(TaskError::from))
            .collect()
    }

    pub fn statement(&self) -> String {
        self.numbers.join(" ")
    }
}

/// Current value (absent before the first combination) plus the sorted
/// multiset of unused numbers.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Game24State {
    pub current: Option<BigRational>,
    pub remaining: Vec<BigRational>,
}

impl Game24State {
    pub fn initial(numbers: &[BigRational]) -> Self {
        let mut remaining = numbers.to_vec();
        remaining.sort();
        Game24State {
            current: None,
            remaining,
        }
    }

    pub fn solved(&self) -> bool {
        self.remaining.is_empty()
            && self.current.as_ref() == Some(&expr::big_int_rational(TARGET_VALUE))
    }

    /// Canonical payload: `3 (6 12)`, `(6 10 12 13)`, `24 ()`.
    pub fn payload(&self) -> String {
        let inside = self
            .remaining
            .iter()
            .map(render_rational)
            .collect::<Vec<_>>()
            .join(" ");
        match &self.current {
            Some(v) => format!("{} ({inside})", render_rational(v)),
            None => format!("({inside})"),
        }
    }

    pub fn parse(payload: &str) -> Option<Game24State> {
        let payload = payload.trim();
        let open = payload.find('(')?;
        if !payload.ends_with(')') {
            return None;
        }
        let head = payload[..open].trim();
        let current = if head.is_empty() {
            None
        } else {
            Some(expr::parse_rational(head).ok()?)
        };
        let inside = &payload[open + 1..payload.len() - 1];
        let mut remaining = Vec::new();
        for token in inside.split_whitespace() {
            remaining.push(expr::parse_rational(token).ok()?);
        }
        let mut sorted = remaining.clone();
        sorted.sort();
        if sorted != remaining {
            return None; // non-canonical ordering
        }
        Some(Game24State { current, remaining })
    }
}

fn apply(op: BinOp, x: &BigRational, y: &BigRational) -> Option<BigRational> {
    match op {
        BinOp::Add => Some(x + y),
        BinOp::Sub => Some(x - y),
        BinOp::Mul => Some(x * y),
        BinOp::Div => {
            if y.is_zero() {
                None
            } else {
                Some(x / y)
            }
        }
        BinOp::Pow => None,
    }
}

fn op_symbol(op: BinOp) -> &'static str {
    match op {
        BinOp::Add => "+",
        BinOp::Sub => "-",
        BinOp::Mul => "*",
        BinOp::Div => "/",
        BinOp::Pow => "^",
    }
}

fn operand_text(v: &BigRational) -> String {
    // Fractions and negatives are parenthesized so the annotation parses
    // back unambiguously.
    if v.is_integer() && !v.is_negative() {
        render_rational(v)
    } else {
        format!("({})", render_rational(v))
    }
}

/// Canonical `x op y = z` rendering for a step.
pub fn render_step(x: &BigRational, op: BinOp, y: &BigRational, z: &BigRational) -> String {
    format!(
        "{}{}{}={}",
        operand_text(x),
        op_symbol(op),
        operand_text(y),
        render_rational(z)
    )
}

fn annotation(x: &BigRational, op: BinOp, y: &BigRational, z: &BigRational) -> String {
    render_step(x, op, y, z)
}

fn without_index(values: &[BigRational], index: usize) -> Vec<BigRational> {
    let mut out = values.to_vec();
    out.remove(index);
    out
}

/// All successor states. The running value combines with one unused
/// number (both operand orders for - and /); independently, any two
/// unused numbers may combine, with the running value returning to the
/// pool — without those moves, bracketings like (9-5)*(7-1) would be
/// unreachable even though the exhaustive solver finds them. Division by
/// zero is excluded.
pub fn game24_moves(state: &Game24State) -> Result<Vec<(Game24State, String)>, TaskError> {
    if state.remaining.is_empty() {
        return Err(TaskError::MalformedProblem(
            "no remaining numbers to combine".into(),
        ));
    }
    let mut out: Vec<(Game24State, String)> = Vec::new();
    let mut push = |value: BigRational, mut rest: Vec<BigRational>, note: String| {
        rest.sort();
        let next = Game24State {
            current: Some(value),
            remaining: rest,
        };
        if !out.iter().any(|(s, a)| s == &next && a == &note) {
            out.push((next, note));
        }
    };
    if let Some(c) = &state.current {
        for i in 0..state.remaining.len() {
            let r = &state.remaining[i];
            let rest = without_index(&state.remaining, i);
            for op in [BinOp::Add, BinOp::Mul] {
                if let Some(z) = apply(op, c, r) {
                    push(z.clone(), rest.clone(), annotation(c, op, r, &z));
                }
            }
            for (x, y) in [(c, r), (r, c)] {
                for op in [BinOp::Sub, BinOp::Div] {
                    if let Some(z) = apply(op, x, y) {
                        push(z.clone(), rest.clone(), annotation(x, op, y, &z));
                    }
                }
            }
        }
    }
    if state.remaining.len() >= 2 {
        for i in 0..state.remaining.len() {
            for j in (i + 1)..state.remaining.len() {
                let x = &state.remaining[i];
                let y = &state.remaining[j];
                let mut rest = state.remaining.clone();
                rest.remove(j);
                rest.remove(i);
                if let Some(c) = &state.current {
                    rest.push(c.clone());
                }
                for op in [BinOp::Add, BinOp::Mul] {
                    if let Some(z) = apply(op, x, y) {
                        push(z.clone(), rest.clone(), annotation(x, op, y, &z));
                    }
                }
                for (a, b) in [(x, y), (y, x)] {
                    for op in [BinOp::Sub, BinOp::Div] {
                        if let Some(z) = apply(op, a, b) {
                            push(z.clone(), rest.clone(), annotation(a, op, b, &z));
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Forward state graph from the initial numbers: `to payload -> set of
/// (annotation, from payload)`. The backward oracle inverts these edges,
/// so every proposal it makes is forward-reachable by construction.
pub fn forward_edges(
    numbers: &[BigRational],
) -> BTreeMap<String, BTreeSet<(String, String)>> {
    let mut inbound: BTreeMap<String, BTreeSet<(String, String)>> = BTreeMap::new();
    let mut frontier = vec![Game24State::initial(numbers)];
    let mut visited: BTreeSet<String> = frontier.iter().map(|s| s.payload()).collect();
    while let Some(state) = frontier.pop() {
        if state.remaining.is_empty() {
            continue;
        }
        let from = state.payload();
        for (next, note) in game24_moves(&state).expect("non-empty remaining") {
            inbound
                .entry(next.payload())
                .or_default()
                .insert((note, from.clone()));
            if visited.insert(next.payload()) {
                frontier.push(next);
            }
        }
    }
    inbound
}

/// Exhaustive solvability check over all combination orders, with a
/// witness expression when solvable.
pub fn game24_solvable(numbers: &[BigRational]) -> (bool, Option<String>) {
    assert_eq!(numbers.len(), 4, "exactly 4 numbers");
    let items: Vec<(BigRational, String)> = numbers
        .iter()
        .map(|v| (v.clone(), render_rational(v)))
        .collect();
    let mut witness = None;
    search(&items, &mut witness);
    (witness.is_some(), witness)
}

fn search(items: &[(BigRational, String)], witness: &mut Option<String>) {
    if witness.is_some() {
        return;
    }
    if items.len() == 1 {
        if items[0].0 == expr::big_int_rational(TARGET_VALUE) {
            let text = items[0].1.clone();
            let trimmed = text
                .strip_prefix('(')
                .and_then(|t| t.strip_suffix(')'))
                .map(|t| t.to_string())
                .unwrap_or(text);
            *witness = Some(trimmed);
        }
        return;
    }
    for i in 0..items.len() {
        for j in (i + 1)..items.len() {
            let (x, xe) = &items[i];
            let (y, ye) = &items[j];
            let mut rest: Vec<(BigRational, String)> = items
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != i && *k != j)
                .map(|(_, v)| v.clone())
                .collect();
            let combos: Vec<(Option<BigRational>, String)> = vec![
                (apply(BinOp::Add, x, y), format!("({xe}+{ye})")),
                (apply(BinOp::Mul, x, y), format!("({xe}*{ye})")),
                (apply(BinOp::Sub, x, y), format!("({xe}-{ye})")),
                (apply(BinOp::Sub, y, x), format!("({ye}-{xe})")),
                (apply(BinOp::Div, x, y), format!("({xe}/{ye})")),
                (apply(BinOp::Div, y, x), format!("({ye}/{xe})")),
            ];
            for (value, text) in combos {
                let Some(value) = value else { continue };
                rest.push((value, text));
                search(&rest, witness);
                rest.pop();
                if witness.is_some() {
                    return;
                }
            }
        }
    }
}

/// Parsed form of an `x op y = z` step annotation.
#[derive(Debug, Clone, PartialEq)]
pub struct StepEquation {
    pub left: BigRational,
    pub op: BinOp,
    pub right: BigRational,
    pub result: BigRational,
}

pub fn parse_step(annotation: &str) -> Result<StepEquation, TaskError> {
    let eq = expr::parse_equation(annotation)
        .map_err(|_| TaskError::MalformedAnnotation(annotation.to_string()))?;
    let result = eq
        .rhs
        .eval(&expr::NoVars)
        .map_err(|_| TaskError::MalformedAnnotation(annotation.to_string()))?;
    let Expr::Bin(op, a, b) = &eq.lhs else {
        return Err(TaskError::MalformedAnnotation(annotation.to_string()));
    };
    if *op == BinOp::Pow {
        return Err(TaskError::MalformedAnnotation(annotation.to_string()));
    }
    let left = a
        .eval(&expr::NoVars)
        .map_err(|_| TaskError::MalformedAnnotation(annotation.to_string()))?;
    let right = b
        .eval(&expr::NoVars)
        .map_err(|_| TaskError::MalformedAnnotation(annotation.to_string()))?;
    Ok(StepEquation {
        left,
        op: *op,
        right,
        result,
    })
}

/// Exact-arithmetic truth of an `x op y = z` annotation.
pub fn verify_arithmetic_step(annotation: &str) -> Result<bool, TaskError> {
    let step = parse_step(annotation)?;
    Ok(apply(step.op, &step.left, &step.right).as_ref() == Some(&step.result))
}

fn remove_value(values: &[BigRational], needle: &BigRational) -> Option<Vec<BigRational>> {
    let pos = values.iter().position(|v| v == needle)?;
    Some(without_index(values, pos))
}

/// Full step validity: the arithmetic holds exactly and the state
/// bookkeeping is consistent — either the running value combined with one
/// unused number, or two unused numbers combined with the running value
/// returning to the pool.
pub fn verify_move(prev: &Game24State, annotation: &str, next: &Game24State) -> bool {
    let Ok(step) = parse_step(annotation) else {
        return false;
    };
    if apply(step.op, &step.left, &step.right).as_ref() != Some(&step.result) {
        return false;
    }
    if next.current.as_ref() != Some(&step.result) {
        return false;
    }
    // Running value combined with one unused number.
    if let Some(c) = &prev.current {
        for (used, other) in [(&step.left, &step.right), (&step.right, &step.left)] {
            if used == c {
                if let Some(rest) = remove_value(&prev.remaining, other) {
                    if rest == next.remaining {
                        return true;
                    }
                }
            }
        }
    }
    // Two unused numbers combined; any running value rejoins the pool.
    let Some(rest) = remove_value(&prev.remaining, &step.left) else {
        return false;
    };
    let Some(mut rest) = remove_value(&rest, &step.right) else {
        return false;
    };
    if let Some(c) = &prev.current {
        rest.push(c.clone());
        rest.sort();
    }
    rest == next.remaining
}

/// Seeded problem generation across the small-integer range used by the
/// bundled dataset. With `solvable_only`, unsolvable draws are skipped.
pub fn generate_problems(count: usize, seed: u64, solvable_only: bool) -> Vec<Game24Problem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut problems = Vec::new();
    let mut attempt = 0u64;
    while problems.len() < count {
        attempt += 1;
        if attempt > (count as u64) * 200 {
            break;
        }
        let numbers: Vec<BigRational> = (0..4)
            .map(|_| expr::big_int_rational(rng.random_range(1..=13)))
            .collect();
        let (solvable, witness) = game24_solvable(&numbers);
        if solvable_only && !solvable {
            continue;
        }
        problems.push(Game24Problem {
            id: format!("g24-{:03}", problems.len() + 1),
            numbers: numbers.iter().map(render_rational).collect(),
            solvable: Some(solvable),
            witness,
        });
    }
    problems
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::big_int_rational as int;

    fn nums(values: [i64; 4]) -> Vec<BigRational> {
        values.iter().map(|v| int(*v)).collect()
    }

    fn state(current: Option<i64>, remaining: &[i64]) -> Game24State {
        Game24State {
            current: current.map(int),
            remaining: remaining.iter().map(|v| int(*v)).collect(),
        }
    }

    #[test]
    fn payload_round_trip() {
        let s = state(Some(3), &[4, 6]);
        assert_eq!(s.payload(), "3 (4 6)");
        assert_eq!(Game24State::parse("3 (4 6)"), Some(s));
        let initial = Game24State::initial(&nums([13, 6, 12, 10]));
        assert_eq!(initial.payload(), "(6 10 12 13)");
        assert_eq!(Game24State::parse("(6 10 12 13)"), Some(initial));
        assert_eq!(Game24State::parse("24 ()"), Some(state(Some(24), &[])));
        assert_eq!(Game24State::parse("3 (6 4)"), None); // not sorted
    }

    #[test]
    fn moves_from_intermediate_state() {
        let s = state(Some(3), &[4, 6]);
        let moves = game24_moves(&s).unwrap();
        let annotated: Vec<&str> = moves.iter().map(|(_, a)| a.as_str()).collect();
        assert!(annotated.contains(&"3*4=12"));
        assert!(annotated.contains(&"4-3=1"));
        let (to, _) = moves.iter().find(|(_, a)| a == "3*4=12").unwrap();
        assert_eq!(to, &state(Some(12), &[6]));
    }

    #[test]
    fn moves_from_initial_state() {
        let s = Game24State::initial(&nums([6, 10, 12, 13]));
        let moves = game24_moves(&s).unwrap();
        let found = moves.iter().find(|(_, a)| a == "13-10=3").unwrap();
        assert_eq!(found.0, state(Some(3), &[6, 12]));
    }

    #[test]
    fn moves_require_remaining_numbers() {
        assert!(game24_moves(&state(Some(24), &[])).is_err());
    }

    #[test]
    fn paper_instance_is_solvable() {
        let (solvable, witness) = game24_solvable(&nums([6, 10, 12, 13]));
        assert!(solvable);
        let w = witness.unwrap();
        assert_eq!(expr::evaluate_closed(&w).unwrap(), int(24));
        // Each number used once and only once.
        let mut digits: Vec<String> = w
            .split(|c: char| "+-*/() ".contains(c))
            .filter(|t| !t.is_empty())
            .map(|t| t.to_string())
            .collect();
        digits.sort();
        assert_eq!(digits, vec!["10", "12", "13", "6"]);
    }

    #[test]
    fn all_ones_is_unsolvable() {
        let (solvable, witness) = game24_solvable(&nums([1, 1, 1, 1]));
        assert!(!solvable);
        assert!(witness.is_none());
    }

    #[test]
    fn duplicate_numbers_witness() {
        let (solvable, witness) = game24_solvable(&nums([24, 5, 5, 1]));
        assert!(solvable);
        assert_eq!(expr::evaluate_closed(&witness.unwrap()).unwrap(), int(24));
    }

    #[test]
    fn verify_arithmetic_examples() {
        assert!(verify_arithmetic_step("12/4=3").unwrap());
        assert!(!verify_arithmetic_step("18-12=3").unwrap());
        assert!(verify_arithmetic_step("13-10=3").unwrap());
        assert!(matches!(
            verify_arithmetic_step("twelve over four is three"),
            Err(TaskError::MalformedAnnotation(_))
        ));
        assert!(matches!(
            verify_arithmetic_step("7=7"),
            Err(TaskError::MalformedAnnotation(_))
        ));
    }

    #[test]
    fn verify_move_checks_bookkeeping() {
        let prev = state(Some(3), &[4, 6]);
        let good = state(Some(12), &[6]);
        assert!(verify_move(&prev, "3*4=12", &good));
        // Arithmetic true but operand not available.
        assert!(!verify_move(&prev, "3*5=15", &state(Some(15), &[6])));
        // Arithmetic false.
        assert!(!verify_move(&prev, "18-12=3", &state(Some(3), &[6])));
        // Wrong remaining set.
        assert!(!verify_move(&prev, "3*4=12", &state(Some(12), &[4])));
        // Initial-state move uses two unused numbers.
        let initial = Game24State::initial(&nums([6, 10, 12, 13]));
        assert!(verify_move(&initial, "13-10=3", &state(Some(3), &[6, 12])));
        assert!(!verify_move(&initial, "13-10=3", &state(Some(3), &[6, 10])));
    }

    #[test]
    fn forward_edges_reach_target_for_solvable_instance() {
        let edges = forward_edges(&nums([6, 10, 12, 13]));
        let target = state(Some(24), &[]).payload();
        assert!(edges.contains_key(&target));
        // Every recorded edge is a verified move.
        for (to, sources) in edges.iter().take(40) {
            let to_state = Game24State::parse(to).unwrap();
            for (note, from) in sources {
                let from_state = Game24State::parse(from).unwrap();
                assert!(verify_move(&from_state, note, &to_state), "{from} -[{note}]-> {to}");
            }
        }
    }

    #[test]
    fn generated_problems_are_labeled_correctly() {
        let problems = generate_problems(12, 9, false);
        assert_eq!(problems.len(), 12);
        for p in &problems {
            let values = p.values().unwrap();
            let (solvable, _) = game24_solvable(&values);
            assert_eq!(Some(solvable), p.solvable, "problem {}", p.id);
            if let Some(w) = &p.witness {
                assert_eq!(expr::evaluate_closed(w).unwrap(), int(24));
            }
        }
    }

    // Independent second brute force: enumerate permutations, operator
    // triples and all five tree shapes over four leaves, then compare
    // solvability with the primary search on a sample.
    fn solvable_by_shapes(numbers: &[BigRational]) -> bool {
        let ops = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div];
        let perms = permutations(numbers);
        for p in &perms {
            for o1 in ops {
                for o2 in ops {
                    for o3 in ops {
                        let shapes: [Option<BigRational>; 5] = [
                            // ((a b) c) d
                            apply2(o1, &p[0], &p[1])
                                .and_then(|x| apply2(o2, &x, &p[2]))
                                .and_then(|x| apply2(o3, &x, &p[3])),
                            // (a (b c)) d
                            apply2(o2, &p[1], &p[2])
                                .and_then(|x| apply2(o1, &p[0], &x))
                                .and_then(|x| apply2(o3, &x, &p[3])),
                            // a ((b c) d)
                            apply2(o2, &p[1], &p[2])
                                .and_then(|x| apply2(o3, &x, &p[3]))
                                .and_then(|x| apply2(o1, &p[0], &x)),
                            // a (b (c d))
                            apply2(o3, &p[2], &p[3])
                                .and_then(|x| apply2(o2, &p[1], &x))
                                .and_then(|x| apply2(o1, &p[0], &x)),
                            // (a b) (c d)
                            match (apply2(o1, &p[0], &p[1]), apply2(o3, &p[2], &p[3])) {
                                (Some(l), Some(r)) => apply2(o2, &l, &r),
                                _ => None,
                            },
                        ];
                        if shapes
                            .iter()
                            .any(|v| v.as_ref() == Some(&int(TARGET_VALUE)))
                        {
                            return true;
                        }
                    }
                }
            }
        }
        false
    }

    fn apply2(op: BinOp, x: &BigRational, y: &BigRational) -> Option<BigRational> {
        apply(op, x, y)
    }

    fn permutations(values: &[BigRational]) -> Vec<Vec<BigRational>> {
        if values.len() <= 1 {
            return vec![values.to_vec()];
        }
        let mut out = Vec::new();
        for i in 0..values.len() {
            let mut rest = values.to_vec();
            let head = rest.remove(i);
            for mut tail in permutations(&rest) {
                tail.insert(0, head.clone());
                out.push(tail);
            }
        }
        out
    }

    #[test]
    fn brute_forces_agree_on_sample() {
        let mut rng = <ChaCha8Rng as SeedableRng>::seed_from_u64(31);
        for _ in 0..25 {
            let numbers: Vec<BigRational> =
                (0..4).map(|_| int(rng.random_range(1..=13))).collect();
            let (primary, _) = game24_solvable(&numbers);
            assert_eq!(
                primary,
                solvable_by_shapes(&numbers),
                "disagreement on {numbers:?}"
            );
        }
    }
}
