//! Math tools exposed to backends: an exact calculator, index-shift
//! variable transformation, and both-sides formula simplification.

use crate::error::{ExprError, TaskError};
use crate::expr::{self, BinOp, Equation, Expr, VarRef};
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToolKind {
    Calculator,
    VariableTransform,
    FormulaSimplify,
}

/// One tool call: what ran, on what, and what came out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolInvocation {
    pub tool: ToolKind,
    pub input: String,
    pub output: String,
}

/// Exact value of an arithmetic expression over rationals.
pub fn calculator(expression: &str) -> Result<BigRational, ExprError> {
    expr::evaluate_closed(expression)
}

/// Shifts every occurrence of the index variable by `shift` inside an
/// equation: subscripts `a_{n+1}` become `a_{n+1+shift}` and bare `n`
/// becomes `n+shift`. Turning a recurrence over n into the same recurrence
/// over n-1 is `shift = -1`.
pub fn variable_transform(equation: &str, index_var: &str, shift: i64) -> Result<Equation, TaskError> {
    let eq = expr::parse_equation(equation)?;
    Ok(Equation {
        lhs: shift_expr(&eq.lhs, index_var, shift),
        rhs: shift_expr(&eq.rhs, index_var, shift),
    })
}

fn shift_expr(e: &Expr, index_var: &str, shift: i64) -> Expr {
    match e {
        Expr::Num(r) => Expr::Num(r.clone()),
        Expr::Var(v) => {
            let shifted_index = v
                .index
                .as_ref()
                .map(|ix| Box::new(shift_expr(ix, index_var, shift)));
            if v.name == index_var && v.index.is_none() {
                offset(Expr::Var(v.clone()), shift)
            } else {
                Expr::Var(VarRef {
                    name: v.name.clone(),
                    index: shifted_index,
                })
            }
        }
        Expr::Neg(inner) => Expr::Neg(Box::new(shift_expr(inner, index_var, shift))),
        Expr::Bin(op, a, b) => Expr::Bin(
            *op,
            Box::new(shift_expr(a, index_var, shift)),
            Box::new(shift_expr(b, index_var, shift)),
        ),
    }
}

fn offset(e: Expr, shift: i64) -> Expr {
    match shift {
        0 => e,
        s if s > 0 => Expr::Bin(
            BinOp::Add,
            Box::new(e),
            Box::new(Expr::Num(expr::big_int_rational(s))),
        ),
        s => Expr::Bin(
            BinOp::Sub,
            Box::new(e),
            Box::new(Expr::Num(expr::big_int_rational(-s))),
        ),
    }
}

/// Simplifies an equation by dividing both sides by a nonzero expression
/// and optionally moving one subtracted term from right to left:
/// `a = b + t` becomes `a - t = b`. Equivalence is preserved by
/// construction; the output is a syntactically valid equation.
pub fn formula_simplify(
    equation: &str,
    divide_by: &str,
    move_rhs_term: bool,
) -> Result<Equation, TaskError> {
    let eq = expr::parse_equation(equation)?;
    let divisor = expr::parse_expr(divide_by)?;
    let lhs = Expr::Bin(BinOp::Div, Box::new(eq.lhs), Box::new(divisor.clone()));
    let rhs = Expr::Bin(BinOp::Div, Box::new(eq.rhs), Box::new(divisor));
    if !move_rhs_term {
        return Ok(Equation { lhs, rhs });
    }
    // Move the trailing added term of the rhs across: a = b + t  =>  a - t = b.
    match rhs {
        Expr::Bin(BinOp::Div, inner, div) => match *inner {
            Expr::Bin(BinOp::Add, b, t) => Ok(Equation {
                lhs: Expr::Bin(
                    BinOp::Sub,
                    Box::new(lhs),
                    Box::new(Expr::Bin(BinOp::Div, t, div.clone())),
                ),
                rhs: Expr::Bin(BinOp::Div, b, div),
            }),
            other => Ok(Equation {
                lhs,
                rhs: Expr::Bin(BinOp::Div, Box::new(other), div),
            }),
        },
        other => Ok(Equation { lhs, rhs: other }),
    }
}

pub fn run_tool(tool: ToolKind, input: &str) -> Result<ToolInvocation, TaskError> {
    let output = match tool {
        ToolKind::Calculator => expr::render_rational(&calculator(input)?),
        ToolKind::VariableTransform => {
            let eq = variable_transform(input, "n", -1)?;
            format!("{} = {}", eq.lhs, eq.rhs)
        }
        ToolKind::FormulaSimplify => {
            let eq = formula_simplify(input, "n+1", true)?;
            format!("{} = {}", eq.lhs, eq.rhs)
        }
    };
    Ok(ToolInvocation {
        tool,
        input: input.to_string(),
        output,
    })
}
