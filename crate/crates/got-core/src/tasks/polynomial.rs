//! High-degree polynomial equations with exact verification.
//!
//! Verifiers run in exact rational arithmetic; floats appear only inside
//! numeric root refinement, judged by a scaled relative tolerance. The
//! candidate pipeline mirrors how roots are hunted by hand: rational
//! candidates from divisor pairs, sign-change bisection, then closed
//! forms once deflation reaches degree two.

use crate::error::TaskError;
use crate::expr::{self, render_rational, BinOp, Expr};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// Dense polynomial, coefficients ascending (`coeffs[i]` multiplies x^i).
/// The leading coefficient is non-zero except for the zero polynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<BigRational>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.len() > 1 && coeffs.last().map(Zero::is_zero).unwrap_or(false) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(BigRational::zero());
        }
        Polynomial { coeffs }
    }

    pub fn from_descending(desc: &[BigRational]) -> Self {
        let mut coeffs = desc.to_vec();
        coeffs.reverse();
        Polynomial::new(coeffs)
    }

    pub fn from_descending_ints(desc: &[i64]) -> Self {
        Polynomial::from_descending(
            &desc.iter().map(|c| expr::big_int_rational(*c)).collect::<Vec<_>>(),
        )
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0].is_zero()
    }

    pub fn coefficient(&self, power: usize) -> BigRational {
        self.coeffs.get(power).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c.to_f64().unwrap_or(f64::NAN);
        }
        acc
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut out = vec![BigRational::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }

    /// Exact division with remainder.
    pub fn div_rem(&self, divisor: &Polynomial) -> (Polynomial, Polynomial) {
        assert!(!divisor.is_zero(), "division by zero polynomial");
        let mut rem = self.coeffs.clone();
        let dd = divisor.degree();
        let lead = divisor.coeffs[dd].clone();
        if rem.len() <= dd {
            return (Polynomial::new(vec![BigRational::zero()]), Polynomial::new(rem));
        }
        let mut quot = vec![BigRational::zero(); rem.len() - dd];
        for k in (dd..rem.len()).rev() {
            let factor = &rem[k] / &lead;
            if factor.is_zero() {
                continue;
            }
            quot[k - dd] = factor.clone();
            for (j, dc) in divisor.coeffs.iter().enumerate() {
                let idx = k - dd + j;
                let delta = dc * &factor;
                rem[idx] -= delta;
            }
        }
        rem.truncate(dd.max(1));
        (Polynomial::new(quot), Polynomial::new(rem))
    }

    /// Deflates by a known root: `self / (x - root)`, which must divide
    /// exactly.
    pub fn deflate(&self, root: &BigRational) -> Option<Polynomial> {
        let linear = Polynomial::new(vec![-root.clone(), BigRational::one()]);
        let (quot, rem) = self.div_rem(&linear);
        if rem.is_zero() {
            Some(quot)
        } else {
            None
        }
    }

    /// Builds `leading * prod (x - root) * quad...` from constructed parts.
    pub fn from_roots(leading: &BigRational, roots: &[BigRational], quads: &[[BigRational; 3]]) -> Self {
        let mut poly = Polynomial::new(vec![leading.clone()]);
        for r in roots {
            poly = poly.mul(&Polynomial::new(vec![-r.clone(), BigRational::one()]));
        }
        for [a, b, c] in quads {
            poly = poly.mul(&Polynomial::new(vec![c.clone(), b.clone(), a.clone()]));
        }
        poly
    }

    /// Canonical text, descending powers: `3*x^4 - 69*x^3 + ... - 3888`.
    pub fn render(&self) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut out = String::new();
        for power in (0..=self.degree()).rev() {
            let c = self.coefficient(power);
            if c.is_zero() {
                continue;
            }
            let sign_negative = c.is_negative();
            let magnitude = c.abs();
            if out.is_empty() {
                if sign_negative {
                    out.push('-');
                }
            } else if sign_negative {
                out.push_str(" - ");
            } else {
                out.push_str(" + ");
            }
            let coeff_text = render_rational(&magnitude);
            match power {
                0 => out.push_str(&coeff_text),
                _ => {
                    if magnitude.is_one() {
                        // bare x^k
                    } else {
                        out.push_str(&coeff_text);
                        out.push('*');
                    }
                    if power == 1 {
                        out.push('x');
                    } else {
                        out.push_str(&format!("x^{power}"));
                    }
                }
            }
        }
        out
    }

    /// Parses canonical polynomial text (an expression in `x`).
    pub fn parse(text: &str) -> Result<Polynomial, TaskError> {
        let e = expr::parse_expr(text)?;
        poly_from_expr(&e)
    }
}

fn poly_from_expr(e: &Expr) -> Result<Polynomial, TaskError> {
    match e {
        Expr::Num(r) => Ok(Polynomial::new(vec![r.clone()])),
        Expr::Var(v) => {
            if v.name == "x" && v.index.is_none() {
                Ok(Polynomial::new(vec![BigRational::zero(), BigRational::one()]))
            } else {
                Err(TaskError::MalformedProblem(format!(
                    "unexpected variable {} in polynomial",
                    v.name
                )))
            }
        }
        Expr::Neg(inner) => {
            let p = poly_from_expr(inner)?;
            Ok(Polynomial::new(p.coeffs.iter().map(|c| -c).collect()))
        }
        Expr::Bin(op, a, b) => {
            let pa = poly_from_expr(a)?;
            let pb = poly_from_expr(b)?;
            match op {
                BinOp::Add => {
                    let mut coeffs = vec![BigRational::zero(); pa.coeffs.len().max(pb.coeffs.len())];
                    for (i, c) in pa.coeffs.iter().enumerate() {
                        coeffs[i] += c;
                    }
                    for (i, c) in pb.coeffs.iter().enumerate() {
                        coeffs[i] += c;
                    }
                    Ok(Polynomial::new(coeffs))
                }
                BinOp::Sub => {
                    let mut coeffs = vec![BigRational::zero(); pa.coeffs.len().max(pb.coeffs.len())];
                    for (i, c) in pa.coeffs.iter().enumerate() {
                        coeffs[i] += c;
                    }
                    for (i, c) in pb.coeffs.iter().enumerate() {
                        coeffs[i] -= c;
                    }
                    Ok(Polynomial::new(coeffs))
                }
                BinOp::Mul => Ok(pa.mul(&pb)),
                BinOp::Div => {
                    if pb.degree() != 0 || pb.coeffs[0].is_zero() {
                        return Err(TaskError::MalformedProblem(
                            "polynomial division only by a non-zero constant".into(),
                        ));
                    }
                    Ok(Polynomial::new(
                        pa.coeffs.iter().map(|c| c / &pb.coeffs[0]).collect(),
                    ))
                }
                BinOp::Pow => {
                    if pb.degree() != 0 || !pb.coeffs[0].is_integer() || pb.coeffs[0].is_negative()
                    {
                        return Err(TaskError::MalformedProblem(
                            "polynomial power must be a non-negative integer".into(),
                        ));
                    }
                    let k = pb.coeffs[0]
                        .to_integer()
                        .to_u32()
                        .filter(|k| *k <= 64)
                        .ok_or_else(|| {
                            TaskError::MalformedProblem("polynomial power too large".into())
                        })?;
                    let mut acc = Polynomial::new(vec![BigRational::one()]);
                    for _ in 0..k {
                        acc = acc.mul(&pa);
                    }
                    Ok(acc)
                }
            }
        }
    }
}

/// A root value: exact rational or float-refined.
#[derive(Debug, Clone, PartialEq)]
pub enum RootValue {
    Exact(BigRational),
    Approx(f64),
}

impl RootValue {
    pub fn render(&self) -> String {
        match self {
            RootValue::Exact(r) => render_rational(r),
            RootValue::Approx(v) => format!("{v:.12}"),
        }
    }

    fn as_f64(&self) -> f64 {
        match self {
            RootValue::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            RootValue::Approx(v) => *v,
        }
    }
}

/// Residual of a root check; exact when the candidate is rational.
#[derive(Debug, Clone, PartialEq)]
pub enum Residual {
    Exact(BigRational),
    Approx(f64),
}

pub const ROOT_RELATIVE_TOLERANCE: f64 = 1e-9;

/// Substitutes a candidate into p. Rational candidates are judged exactly
/// (residual must be zero); floats against `tol * max|c_i| * max(1,|x|)^deg`.
pub fn poly_verify_root(poly: &Polynomial, x: &RootValue) -> (Residual, bool) {
    match x {
        RootValue::Exact(r) => {
            let residual = poly.eval(r);
            let ok = residual.is_zero();
            (Residual::Exact(residual), ok)
        }
        RootValue::Approx(v) => {
            let residual = poly.eval_f64(*v);
            let max_coeff = poly
                .coeffs
                .iter()
                .map(|c| c.to_f64().unwrap_or(0.0).abs())
                .fold(0.0_f64, f64::max);
            let scale = max_coeff * v.abs().max(1.0).powi(poly.degree() as i32);
            let ok = residual.abs() <= ROOT_RELATIVE_TOLERANCE * scale;
            (Residual::Approx(residual), ok)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandidateMethod {
    RationalRoot,
    Bisection,
    ClosedForm,
}

#[derive(Debug, Clone)]
pub struct CandidateRoot {
    pub value: RootValue,
    pub method: CandidateMethod,
}

const DIVISOR_CAP: usize = 4096;

fn divisors(n: &BigInt, cap: usize) -> Vec<BigInt> {
    let n = n.abs();
    if n.is_zero() {
        return vec![];
    }
    let mut out = BTreeSet::new();
    let mut d = BigInt::one();
    // Trial division; bounded for very large constants.
    let limit = n.sqrt();
    let mut steps = 0usize;
    while d <= limit {
        if (&n % &d).is_zero() {
            out.insert(d.clone());
            out.insert(&n / &d);
            if out.len() >= cap {
                break;
            }
        }
        d += 1;
        steps += 1;
        if steps > 2_000_000 {
            break;
        }
    }
    out.insert(n);
    out.into_iter().collect()
}

/// Clears denominators and content: integer coefficient vector sharing the
/// same roots.
fn primitive_integer_coeffs(poly: &Polynomial) -> Vec<BigInt> {
    let mut lcm = BigInt::one();
    for c in &poly.coeffs {
        lcm = lcm.lcm(c.denom());
    }
    let mut ints: Vec<BigInt> = poly
        .coeffs
        .iter()
        .map(|c| (c * BigRational::from_integer(lcm.clone())).to_integer())
        .collect();
    let mut content = BigInt::zero();
    for c in &ints {
        content = content.gcd(c);
    }
    if !content.is_zero() && !content.is_one() {
        for c in ints.iter_mut() {
            *c /= &content;
        }
    }
    ints
}

fn rational_is_perfect_square(r: &BigRational) -> Option<BigRational> {
    if r.is_negative() {
        return None;
    }
    let ns = r.numer().sqrt();
    let ds = r.denom().sqrt();
    if &(&ns * &ns) == r.numer() && &(&ds * &ds) == r.denom() {
        Some(BigRational::new(ns, ds))
    } else {
        None
    }
}

/// Ordered candidate roots: divisor-pair rationals, sign-change bisection
/// refinements, then closed forms from the deflated remainder.
pub fn poly_candidate_roots(poly: &Polynomial) -> Vec<CandidateRoot> {
    assert!(poly.degree() >= 1, "degree >= 1 required");
    let mut out: Vec<CandidateRoot> = Vec::new();
    let mut seen_exact: BTreeSet<BigRational> = BTreeSet::new();
    let push_exact = |out: &mut Vec<CandidateRoot>,
                          seen: &mut BTreeSet<BigRational>,
                          value: BigRational,
                          method: CandidateMethod| {
        if seen.insert(value.clone()) {
            out.push(CandidateRoot {
                value: RootValue::Exact(value),
                method,
            });
        }
    };

    if poly.degree() == 1 {
        let root = -poly.coefficient(0) / poly.coefficient(1);
        push_exact(&mut out, &mut seen_exact, root, CandidateMethod::ClosedForm);
        return out;
    }

    let ints = primitive_integer_coeffs(poly);
    let trailing = ints
        .iter()
        .find(|c| !c.is_zero())
        .cloned()
        .unwrap_or_else(BigInt::zero);
    let leading = ints.last().cloned().unwrap_or_else(BigInt::one);
    if ints.first().map(Zero::is_zero).unwrap_or(false) {
        push_exact(
            &mut out,
            &mut seen_exact,
            BigRational::zero(),
            CandidateMethod::RationalRoot,
        );
    }
    let mut rational_candidates: BTreeSet<BigRational> = BTreeSet::new();
    for p in divisors(&trailing, DIVISOR_CAP) {
        for q in divisors(&leading, 64) {
            let candidate = BigRational::new(p.clone(), q.clone());
            rational_candidates.insert(candidate.clone());
            rational_candidates.insert(-candidate);
        }
    }
    // Small magnitudes first; positive before negative on ties.
    let mut ordered: Vec<BigRational> = rational_candidates.into_iter().collect();
    ordered.sort_by(|a, b| a.abs().cmp(&b.abs()).then(b.cmp(a)));
    for candidate in ordered.into_iter().take(DIVISOR_CAP) {
        push_exact(
            &mut out,
            &mut seen_exact,
            candidate,
            CandidateMethod::RationalRoot,
        );
    }

    // Sign-change scan with bisection refinement.
    for value in bisection_roots(poly) {
        out.push(CandidateRoot {
            value: RootValue::Approx(value),
            method: CandidateMethod::Bisection,
        });
    }

    // Deflate verified rational candidates; close the remainder by formula
    // when it reaches degree <= 2.
    let mut work = poly.clone();
    let exact_candidates: Vec<BigRational> = out
        .iter()
        .filter_map(|c| match &c.value {
            RootValue::Exact(r) => Some(r.clone()),
            RootValue::Approx(_) => None,
        })
        .collect();
    for r in &exact_candidates {
        while work.degree() >= 1 && work.eval(r).is_zero() {
            match work.deflate(r) {
                Some(next) => work = next,
                None => break,
            }
        }
    }
    match work.degree() {
        1 => {
            let root = -work.coefficient(0) / work.coefficient(1);
            push_exact(&mut out, &mut seen_exact, root, CandidateMethod::ClosedForm);
        }
        2 => {
            let a = work.coefficient(2);
            let b = work.coefficient(1);
            let c = work.coefficient(0);
            let disc = &b * &b - BigRational::from_integer(BigInt::from(4)) * &a * &c;
            if let Some(sq) = rational_is_perfect_square(&disc) {
                let two_a = BigRational::from_integer(BigInt::from(2)) * &a;
                push_exact(
                    &mut out,
                    &mut seen_exact,
                    (-&b + &sq) / &two_a,
                    CandidateMethod::ClosedForm,
                );
                push_exact(
                    &mut out,
                    &mut seen_exact,
                    (-&b - &sq) / &two_a,
                    CandidateMethod::ClosedForm,
                );
            } else if disc.is_positive() {
                let af = a.to_f64().unwrap_or(f64::NAN);
                let bf = b.to_f64().unwrap_or(f64::NAN);
                let df = disc.to_f64().unwrap_or(f64::NAN).sqrt();
                out.push(CandidateRoot {
                    value: RootValue::Approx((-bf + df) / (2.0 * af)),
                    method: CandidateMethod::ClosedForm,
                });
                out.push(CandidateRoot {
                    value: RootValue::Approx((-bf - df) / (2.0 * af)),
                    method: CandidateMethod::ClosedForm,
                });
            }
        }
        _ => {}
    }
    out
}

/// Real roots located by scanning for sign changes inside the Cauchy bound
/// and bisecting each bracket.
fn bisection_roots(poly: &Polynomial) -> Vec<f64> {
    let lead = poly
        .coeffs
        .last()
        .and_then(|c| c.to_f64())
        .unwrap_or(1.0)
        .abs();
    if lead == 0.0 || !lead.is_finite() {
        return vec![];
    }
    let bound = 1.0
        + poly
            .coeffs
            .iter()
            .rev()
            .skip(1)
            .map(|c| c.to_f64().unwrap_or(0.0).abs() / lead)
            .fold(0.0_f64, f64::max);
    let steps = 4096;
    let width = 2.0 * bound / steps as f64;
    let mut roots = Vec::new();
    let mut prev_x = -bound;
    let mut prev_v = poly.eval_f64(prev_x);
    for i in 1..=steps {
        let x = -bound + i as f64 * width;
        let v = poly.eval_f64(x);
        if prev_v == 0.0 {
            roots.push(prev_x);
        } else if prev_v * v < 0.0 {
            let (mut lo, mut hi, mut flo) = (prev_x, x, prev_v);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let fm = poly.eval_f64(mid);
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if flo * fm < 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        prev_x = x;
        prev_v = v;
    }
    roots
}

/// Fully solves a constructively factored problem via the candidate
/// pipeline: verified exact roots first, then verified approximations.
pub fn solve_roots(poly: &Polynomial) -> Vec<(RootValue, Residual)> {
    let mut out: Vec<(RootValue, Residual)> = Vec::new();
    for candidate in poly_candidate_roots(poly) {
        let (residual, ok) = poly_verify_root(poly, &candidate.value);
        if !ok {
            continue;
        }
        let duplicate = out.iter().any(|(v, _)| match (v, &candidate.value) {
            (RootValue::Exact(a), RootValue::Exact(b)) => a == b,
            (a, b) => (a.as_f64() - b.as_f64()).abs() < 1e-7,
        });
        if !duplicate {
            out.push((candidate.value, residual));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Problem + dataset
// ---------------------------------------------------------------------------

/// A dataset problem. The synthetic dataset is constructed from known
/// factors so ground truth is constructive: integer roots plus at most one
/// quadratic factor with an irrational or complex pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialProblem {
    pub id: String,
    /// Coefficients, highest power first, canonical rational strings.
    pub coefficients: Vec<String>,
    #[serde(default)]
    pub integer_roots: Vec<String>,
    /// Remaining quadratic factor `[a, b, c]` (highest first), if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadratic_factor: Option<[String; 3]>,
}

impl PolynomialProblem {
    pub fn polynomial(&self) -> Result<Polynomial, TaskError> {
        if self.coefficients.len() < 2 {
            return Err(TaskError::MalformedProblem(format!(
                "problem {} has degree < 1",
                self.id
            )));
        }
        let coeffs: Result<Vec<BigRational>, TaskError> = self
            .coefficients
            .iter()
            .map(|c| expr::parse_rational(c).map_err(TaskError::from))
            .collect();
        Ok(Polynomial::from_descending(&coeffs?))
    }

    pub fn roots(&self) -> Result<Vec<BigRational>, TaskError> {
        self.integer_roots
            .iter()
            .map(|r| expr::parse_rational(r).map_err(TaskError::from))
            .collect()
    }

    pub fn quad(&self) -> Result<Option<Polynomial>, TaskError> {
        match &self.quadratic_factor {
            None => Ok(None),
            Some([a, b, c]) => {
                let coeffs = vec![
                    expr::parse_rational(a)?,
                    expr::parse_rational(b)?,
                    expr::parse_rational(c)?,
                ];
                Ok(Some(Polynomial::from_descending(&coeffs)))
            }
        }
    }

    pub fn statement(&self) -> String {
        match self.polynomial() {
            Ok(p) => format!("{} = 0", p.render()),
            Err(_) => String::from("<malformed>"),
        }
    }
}

/// Seeded synthetic problems: degrees 4-6, leading coefficient 1-3,
/// distinct non-zero integer roots, optionally one quadratic factor whose
/// discriminant is not a perfect square.
pub fn generate_problems(count: usize, seed: u64) -> Vec<PolynomialProblem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let degree = rng.random_range(4..=6usize);
        let with_quad = rng.random_bool(0.5);
        let root_count = if with_quad { degree - 2 } else { degree };
        let mut roots: Vec<i64> = Vec::new();
        while roots.len() < root_count {
            let r = rng.random_range(-9..=9i64);
            if r != 0 && !roots.contains(&r) {
                roots.push(r);
            }
        }
        let leading = rng.random_range(1..=3i64);
        let quad = if with_quad {
            // x^2 + b x + c with non-square discriminant.
            loop {
                let b = rng.random_range(-9..=9i64);
                let c = rng.random_range(-9..=9i64);
                let disc = b * b - 4 * c;
                let is_square = disc >= 0 && {
                    let s = (disc as f64).sqrt().round() as i64;
                    s * s == disc
                };
                if !is_square {
                    break Some([1i64, b, c]);
                }
            }
        } else {
            None
        };
        let root_rationals: Vec<BigRational> =
            roots.iter().map(|r| expr::big_int_rational(*r)).collect();
        let quads: Vec<[BigRational; 3]> = quad
            .iter()
            .map(|[a, b, c]| {
                [
                    expr::big_int_rational(*a),
                    expr::big_int_rational(*b),
                    expr::big_int_rational(*c),
                ]
            })
            .collect();
        let poly = Polynomial::from_roots(&expr::big_int_rational(leading), &root_rationals, &quads);
        let mut coefficients = Vec::new();
        for power in (0..=poly.degree()).rev() {
            coefficients.push(render_rational(&poly.coefficient(power)));
        }
        out.push(PolynomialProblem {
            id: format!("poly-{:03}", out.len() + 1),
            coefficients,
            integer_roots: roots.iter().map(|r| r.to_string()).collect(),
            quadratic_factor: quad.map(|[a, b, c]| {
                [a.to_string(), b.to_string(), c.to_string()]
            }),
        });
    }
    out
}

/// The reference quartic used by the verifier tests:
/// 3x^4 - 69x^3 + 1284x^2 - 4212x - 3888.
pub fn reference_quartic() -> Polynomial {
    Polynomial::from_descending_ints(&[3, -69, 1284, -4212, -3888])
}
