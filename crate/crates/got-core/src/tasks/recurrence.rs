//! Recurrence problems: derive a closed form g(n) for a sequence given
//! a_1 and a recurrence a_{n+1} = f(n, a_n).
//!
//! Verification replays the recurrence exactly in rational arithmetic, so
//! closed-form acceptance is sound and complete up to the verified range.
//! Each bundled problem carries a derivation table the oracle backend
//! serves: which intermediate equations can be proposed, from what, and
//! once which earlier facts are established.

use crate::error::{ExprError, TaskError};
use crate::expr::{self, Equation, Expr, VarRef};
use crate::graph::normalize_payload;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub const TARGET_PLACEHOLDER: &str = "__target__";
pub const RECURRENCE_PLACEHOLDER: &str = "__recurrence__";
pub const INITIAL_PLACEHOLDER: &str = "__initial__";

/// One derivation-table entry: proposing `via` for `node` yields the
/// prerequisite payloads, available once every `requires` payload is an
/// established condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivationStep {
    pub node: String,
    pub via: String,
    #[serde(default)]
    pub prereqs: Vec<String>,
    #[serde(default)]
    pub requires: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceProblem {
    pub id: String,
    /// Initial terms a_1, a_2, ... as canonical rationals.
    pub initial: Vec<String>,
    /// Full recurrence equation, e.g. `a_{n+1} = (1 + 1/n)*a_n + (n+1)/2^n`.
    pub recurrence: String,
    /// Ground-truth closed form g(n).
    pub closed_form: String,
    /// Substitution definitions, e.g. `b -> a_n/n`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub aux_defs: BTreeMap<String, String>,
    /// Scripted derivation; empty means the single-step default.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub derivation: Vec<DerivationStep>,
}

impl RecurrenceProblem {
    pub fn target_payload(&self) -> String {
        "general formula for a_n".into()
    }

    pub fn recurrence_payload(&self) -> String {
        normalize_payload(&self.recurrence)
    }

    pub fn initial_payloads(&self) -> Vec<String> {
        self.initial
            .iter()
            .enumerate()
            .map(|(i, v)| format!("a_{} = {}", i + 1, v))
            .collect()
    }

    pub fn closed_form_payload(&self) -> String {
        format!("a_n = {}", normalize_payload(&self.closed_form))
    }

    pub fn statement(&self) -> String {
        format!(
            "{}; {}; find the general formula for a_n",
            self.initial_payloads().join("; "),
            self.recurrence_payload()
        )
    }

    pub fn resolve_placeholder(&self, text: &str) -> String {
        match text {
            TARGET_PLACEHOLDER => self.target_payload(),
            RECURRENCE_PLACEHOLDER => self.recurrence_payload(),
            INITIAL_PLACEHOLDER => self
                .initial_payloads()
                .first()
                .cloned()
                .unwrap_or_default(),
            other => normalize_payload(other),
        }
    }

    /// The effective derivation table: the scripted one, or the default
    /// two-hop script (closed form from the recurrence and initial terms,
    /// then the target by induction).
    pub fn derivation_steps(&self) -> Vec<DerivationStep> {
        if !self.derivation.is_empty() {
            return self.derivation.clone();
        }
        vec![
            DerivationStep {
                node: TARGET_PLACEHOLDER.into(),
                via: "mathematical induction".into(),
                prereqs: vec![self.closed_form_payload()],
                requires: vec![],
            },
            DerivationStep {
                node: self.closed_form_payload(),
                via: "telescope the recurrence and verify against the initial terms".into(),
                prereqs: vec![RECURRENCE_PLACEHOLDER.into(), INITIAL_PLACEHOLDER.into()],
                requires: vec![],
            },
        ]
    }

    fn recurrence_rhs(&self) -> Result<Expr, TaskError> {
        let eq = expr::parse_equation(&self.recurrence)?;
        // Expect a_{n+1} = f(n, a_n); what we need is the rhs.
        match &eq.lhs {
            Expr::Var(VarRef { name, index: Some(_) }) if name == "a" => Ok(eq.rhs),
            _ => Err(TaskError::MalformedProblem(format!(
                "recurrence lhs must be a subscripted term of a, got {}",
                self.recurrence
            ))),
        }
    }

    /// Exact terms a_1..=a_upto via recurrence replay.
    pub fn sequence(&self, upto: usize) -> Result<Vec<BigRational>, TaskError> {
        let rhs = self.recurrence_rhs()?;
        let mut seq: Vec<BigRational> = self
            .initial
            .iter()
            .map(|v| expr::parse_rational(v).map_err(TaskError::from))
            .collect::<Result<_, _>>()?;
        if seq.is_empty() {
            return Err(TaskError::MalformedProblem(format!(
                "problem {} has no initial terms",
                self.id
            )));
        }
        while seq.len() < upto {
            let n0 = seq.len() as i64; // compute a_{n0+1} from a_{n0}
            let value = eval_with_sequence(&rhs, n0, &seq, &BTreeMap::new())?;
            seq.push(value);
        }
        Ok(seq)
    }
}

/// Evaluates an expression with `n = n0`, subscripted `a_k` drawn from the
/// 1-based sequence, and any auxiliary names computed from their
/// definitions.
fn eval_with_sequence(
    e: &Expr,
    n0: i64,
    seq: &[BigRational],
    aux: &BTreeMap<String, Expr>,
) -> Result<BigRational, TaskError> {
    let env = |name: &str, index: Option<&BigInt>| -> Option<BigRational> {
        match (name, index) {
            ("n", None) => Some(expr::big_int_rational(n0)),
            ("a", Some(ix)) => {
                let k = ix.to_i64()?;
                if k < 1 {
                    return None;
                }
                seq.get((k - 1) as usize).cloned()
            }
            (other, Some(ix)) => {
                let def = aux.get(other)?;
                let k = ix.to_i64()?;
                eval_with_sequence(def, k, seq, &BTreeMap::new()).ok()
            }
            _ => None,
        }
    };
    e.eval(&env).map_err(TaskError::from)
}

fn parse_aux_defs(problem: &RecurrenceProblem) -> Result<BTreeMap<String, Expr>, TaskError> {
    let mut out = BTreeMap::new();
    for (name, text) in &problem.aux_defs {
        out.insert(name.clone(), expr::parse_expr(text)?);
    }
    Ok(out)
}

/// How a node payload reads to the verifier.
#[derive(Debug, Clone, PartialEq)]
pub enum PayloadKind {
    /// The question node itself.
    Question,
    /// `a_n = g(n)` with g over n only.
    ClosedForm(Expr),
    /// A declared substitution definition such as `b_n = a_n/n`.
    Definition,
    /// Any other equation over sequence terms.
    Equation(Equation),
    /// Not an equation at all.
    Opaque,
}

pub fn classify_payload(problem: &RecurrenceProblem, payload: &str) -> PayloadKind {
    let payload = normalize_payload(payload);
    if payload == problem.target_payload() {
        return PayloadKind::Question;
    }
    let Ok(eq) = expr::parse_equation(&payload) else {
        return PayloadKind::Opaque;
    };
    if let Expr::Var(VarRef { name, index: Some(ix) }) = &eq.lhs {
        let plain_n = matches!(ix.as_ref(), Expr::Var(VarRef { name, index: None }) if name == "n");
        if plain_n && name == "a" {
            let rhs_vars = eq.rhs.variable_names();
            if rhs_vars.iter().all(|v| v == "n") {
                return PayloadKind::ClosedForm(eq.rhs);
            }
        }
        if plain_n {
            if let Some(def_text) = problem.aux_defs.get(name) {
                if let Ok(def) = expr::parse_expr(def_text) {
                    if def == eq.rhs {
                        return PayloadKind::Definition;
                    }
                }
            }
        }
    }
    PayloadKind::Equation(eq)
}

/// Exact check that a candidate closed form reproduces the sequence:
/// g(1) = a_1 and g(n+1) = f(n, g(n)) for n = 1..=n_verify.
pub fn recurrence_verify(
    problem: &RecurrenceProblem,
    closed_form: &str,
    n_verify: usize,
) -> Result<bool, TaskError> {
    let g = expr::parse_expr(closed_form)?;
    let vars = g.variable_names();
    if !vars.iter().all(|v| v == "n") {
        return Err(TaskError::Expr(ExprError::Malformed(format!(
            "closed form must be over n only, found variables {vars:?}"
        ))));
    }
    let seq = problem.sequence(n_verify + 1)?;
    let g_at = |k: i64| -> Result<BigRational, TaskError> {
        eval_with_sequence(&g, k, &seq, &BTreeMap::new())
    };
    if g_at(1)? != seq[0] {
        return Ok(false);
    }
    let rhs = problem.recurrence_rhs()?;
    for n0 in 1..=n_verify as i64 {
        // f(n, g(n)) with a_n replaced by g(n).
        let g_n = g_at(n0)?;
        let g_next = g_at(n0 + 1)?;
        let mut shadow = seq.clone();
        if (n0 as usize) <= shadow.len() {
            shadow[(n0 - 1) as usize] = g_n;
        }
        let f_value = eval_with_sequence(&rhs, n0, &shadow, &BTreeMap::new())?;
        if g_next != f_value {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Numeric truth of an intermediate equation over the ground-truth
/// sequence (aux names resolved through their definitions), for
/// n = 1..=range. Evaluation failure counts as false.
pub fn equation_holds(problem: &RecurrenceProblem, eq: &Equation, range: usize) -> bool {
    let Ok(aux) = parse_aux_defs(problem) else {
        return false;
    };
    let Ok(seq) = problem.sequence(range + 2) else {
        return false;
    };
    for n0 in 1..=range as i64 {
        let lhs = eval_with_sequence(&eq.lhs, n0, &seq, &aux);
        let rhs = eval_with_sequence(&eq.rhs, n0, &seq, &aux);
        match (lhs, rhs) {
            (Ok(l), Ok(r)) if l == r => {}
            _ => return false,
        }
    }
    true
}

/// The flagship worked example: a_1 = 1,
/// a_{n+1} = (1 + 1/n) * a_n + (n+1)/2^n, solved over three rebuilds via
/// the divided form, the substitution b_n = a_n/n, and induction.
pub fn flagship_problem() -> RecurrenceProblem {
    let e1 = "a_{n+1}/(n+1) = a_n/n + 1/2^n";
    let e2 = "b_{n+1} - b_n = 1/2^n";
    let bdef = "b_n = a_n/n";
    let bsol = "b_n = 2 - 1/2^(n-1)";
    let formula = "a_n = (2 - 1/2^(n-1))*n";
    let step = |node: &str, via: &str, prereqs: &[&str], requires: &[&str]| DerivationStep {
        node: node.into(),
        via: via.into(),
        prereqs: prereqs.iter().map(|s| s.to_string()).collect(),
        requires: requires.iter().map(|s| s.to_string()).collect(),
    };
    RecurrenceProblem {
        id: "rec-001".into(),
        initial: vec!["1".into()],
        recurrence: "a_{n+1} = (1 + 1/n)*a_n + (n+1)/2^n".into(),
        closed_form: "(2 - 1/2^(n-1))*n".into(),
        aux_defs: BTreeMap::from([("b".to_string(), "a_n/n".to_string())]),
        derivation: vec![
            step(TARGET_PLACEHOLDER, "consider using mathematical induction", &[], &[]),
            step(TARGET_PLACEHOLDER, "compute the difference between adjacent terms", &[], &[]),
            step(
                TARGET_PLACEHOLDER,
                "construct a new equation using the existing conditions",
                &[e1],
                &[],
            ),
            step(e1, "divide both sides of the recurrence by n+1", &[RECURRENCE_PLACEHOLDER], &[]),
            step(TARGET_PLACEHOLDER, "replace the existing variables", &[e2], &[e1]),
            step(
                e2,
                "rearrange the divided form and substitute b_n = a_n/n",
                &[e1, bdef],
                &[e1],
            ),
            step(bdef, "introduce the substitution variable b_n = a_n/n", &[e1], &[e1]),
            step(TARGET_PLACEHOLDER, "mathematical induction", &[formula], &[e2]),
            step(formula, "solve b_n by induction, then substitute back", &[bsol, bdef], &[e2]),
            step(bsol, "induction on the difference equation with b_1 = 1", &[e2], &[e2]),
        ],
    }
}

/// The bundled dataset: the flagship plus closed-form families verified
/// exactly by construction.
pub fn bundled_problems() -> Vec<RecurrenceProblem> {
    let simple = |id: &str, a1: &str, recurrence: &str, closed_form: &str| RecurrenceProblem {
        id: id.into(),
        initial: vec![a1.into()],
        recurrence: recurrence.into(),
        closed_form: closed_form.into(),
        aux_defs: BTreeMap::new(),
        derivation: vec![],
    };
    vec![
        flagship_problem(),
        simple("rec-002", "2", "a_{n+1} = a_n + 3", "3*n - 1"),
        simple("rec-003", "3", "a_{n+1} = 2*a_n", "3*2^(n-1)"),
        simple("rec-004", "1", "a_{n+1} = a_n + n", "1 + n*(n-1)/2"),
        simple("rec-005", "1", "a_{n+1} = a_n + 2^n", "2^n - 1"),
        simple("rec-006", "1", "a_{n+1} = 2*a_n + 1", "2^n - 1"),
        simple("rec-007", "1/2", "a_{n+1} = a_n + 1/(n*(n+1))", "3/2 - 1/n"),
        simple("rec-008", "1", "a_{n+1} = (n/(n+1))*a_n", "1/n"),
        simple("rec-009", "4", "a_{n+1} = a_n + 2*n + 1", "n^2 + 3"),
        simple("rec-010", "2", "a_{n+1} = 3*a_n - 2", "3^(n-1) + 1"),
        simple("rec-011", "1", "a_{n+1} = a_n + n^2", "1 + (n-1)*n*(2*n-1)/6"),
        simple("rec-012", "1", "a_{n+1} = a_n/(1 + a_n)", "1/n"),
        simple("rec-013", "5", "a_{n+1} = a_n", "5"),
        simple("rec-014", "1", "a_{n+1} = a_n + (0-1)^n", "(1 - (0-1)^n)/2"),
        simple("rec-015", "2", "a_{n+1} = a_n + 1/2^n", "3 - 1/2^(n-1)"),
        simple("rec-016", "1", "a_{n+1} = 2*a_n + 2^n", "n*2^(n-1)"),
        simple("rec-017", "3", "a_{n+1} = a_n + 2*n", "n^2 - n + 3"),
        simple("rec-018", "1", "a_{n+1} = (1 + 1/n)*a_n", "n"),
        simple("rec-019", "1", "a_{n+1} = (1 + 1/n)*a_n + 1/n", "2*n - 1"),
        simple("rec-020", "6", "a_{n+1} = a_n - 2", "8 - 2*n"),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{big_rational, render_rational};

    #[test]
    fn flagship_sequence_matches_hand_computation() {
        let p = flagship_problem();
        let seq = p.sequence(3).unwrap();
        assert_eq!(seq[0], big_rational(1, 1));
        assert_eq!(seq[1], big_rational(3, 1));
        assert_eq!(seq[2], big_rational(21, 4));
    }

    #[test]
    fn flagship_closed_form_verifies_to_thirty() {
        let p = flagship_problem();
        assert!(recurrence_verify(&p, "(2 - 1/2^(n-1))*n", 30).unwrap());
    }

    #[test]
    fn wrong_closed_form_fails_at_n_two() {
        let p = flagship_problem();
        // a_2 = 2*1 + 2/2 = 3, but the candidate gives 4.
        assert!(!recurrence_verify(&p, "2*n", 5).unwrap());
    }

    #[test]
    fn term_table_is_a_parse_error() {
        let p = flagship_problem();
        assert!(matches!(
            recurrence_verify(&p, "1, 3, 21/4, 8", 5),
            Err(TaskError::Expr(ExprError::Malformed(_)))
        ));
        // A "closed form" still mentioning sequence terms is rejected too.
        assert!(recurrence_verify(&p, "a_n + 0", 5).is_err());
    }

    #[test]
    fn intermediate_equations_hold_on_sequence() {
        let p = flagship_problem();
        for text in [
            "a_{n+1}/(n+1) = a_n/n + 1/2^n",
            "b_{n+1} - b_n = 1/2^n",
            "b_n = 2 - 1/2^(n-1)",
        ] {
            let eq = expr::parse_equation(text).unwrap();
            assert!(equation_holds(&p, &eq, 8), "equation failed: {text}");
        }
        let wrong = expr::parse_equation("b_{n+1} - b_n = 1/2^(n+1)").unwrap();
        assert!(!equation_holds(&p, &wrong, 8));
    }

    #[test]
    fn classification_of_payloads() {
        let p = flagship_problem();
        assert_eq!(classify_payload(&p, "general formula for a_n"), PayloadKind::Question);
        assert!(matches!(
            classify_payload(&p, "a_n = (2 - 1/2^(n-1))*n"),
            PayloadKind::ClosedForm(_)
        ));
        assert_eq!(classify_payload(&p, "b_n = a_n/n"), PayloadKind::Definition);
        assert!(matches!(
            classify_payload(&p, "b_{n+1} - b_n = 1/2^n"),
            PayloadKind::Equation(_)
        ));
        assert_eq!(classify_payload(&p, "try induction"), PayloadKind::Opaque);
        // An equation form that is not the declared definition.
        assert!(matches!(
            classify_payload(&p, "b_n = a_n/(n+1)"),
            PayloadKind::Equation(_)
        ));
    }

    #[test]
    fn bundled_problems_all_verify() {
        for p in bundled_problems() {
            assert!(
                recurrence_verify(&p, &p.closed_form, 20).unwrap(),
                "problem {} closed form failed",
                p.id
            );
        }
    }

    #[test]
    fn render_rational_terms_stable() {
        let p = flagship_problem();
        let seq = p.sequence(6).unwrap();
        let rendered: Vec<String> = seq.iter().map(render_rational).collect();
        assert_eq!(rendered[0], "1");
        assert_eq!(rendered[2], "21/4");
    }
}
