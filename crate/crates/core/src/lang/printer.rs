use std::fmt::Write;

use crate::fp::{format_float, ArithOp, Float, Format, Rational};

use super::ast::{Arith, BoolExpr, Program, ProgramExpr};

/// Renders a constant leaf. Implemented for floats (shortest round-trip
/// decimal) and rationals (exact decimal or `n/d`).
pub trait ConstText {
    fn text(&self, fmt: Format) -> String;
    fn is_negative_const(&self) -> bool;
}

impl ConstText for Float {
    fn text(&self, fmt: Format) -> String {
        format_float(self, fmt)
    }

    fn is_negative_const(&self) -> bool {
        self.is_negative()
    }
}

impl ConstText for Rational {
    fn text(&self, _fmt: Format) -> String {
        self.to_exact_decimal().unwrap_or_else(|| self.to_string())
    }

    fn is_negative_const(&self) -> bool {
        self.is_negative()
    }
}

// Binding strength: sums 1, products 2, unary and leaves 3.
fn prec<C>(a: &Arith<C>) -> u8 {
    match a {
        Arith::Op(ArithOp::Add | ArithOp::Sub, _) => 1,
        Arith::Op(ArithOp::Mul, _) => 2,
        _ => 3,
    }
}

pub fn arith_to_string<C: ConstText>(a: &Arith<C>, fmt: Format) -> String {
    let mut s = String::new();
    write_arith(&mut s, a, fmt);
    s
}

fn write_arith<C: ConstText>(out: &mut String, a: &Arith<C>, fmt: Format) {
    match a {
        Arith::Const(c) => out.push_str(&c.text(fmt)),
        Arith::Var(v) => out.push_str(v),
        Arith::Op(ArithOp::Neg, args) => match &args[0] {
            Arith::Var(v) => {
                out.push('-');
                out.push_str(v);
            }
            inner => {
                out.push_str("-(");
                write_arith(out, inner, fmt);
                out.push(')');
            }
        },
        Arith::Op(op, args) => {
            let (sym, p) = match op {
                ArithOp::Add => (" + ", 1),
                ArithOp::Sub => (" - ", 1),
                _ => (" * ", 2),
            };
            write_operand(out, &args[0], prec(&args[0]) < p, fmt);
            out.push_str(sym);
            write_operand(out, &args[1], prec(&args[1]) <= p, fmt);
        }
    }
}

fn write_operand<C: ConstText>(out: &mut String, a: &Arith<C>, paren: bool, fmt: Format) {
    if paren {
        out.push('(');
        write_arith(out, a, fmt);
        out.push(')');
    } else {
        write_arith(out, a, fmt);
    }
}

fn bool_prec<A>(b: &BoolExpr<A>) -> u8 {
    match b {
        BoolExpr::Or(..) => 1,
        BoolExpr::And(..) => 2,
        BoolExpr::Not(_) => 3,
        _ => 4,
    }
}

pub fn bool_to_string<C: ConstText>(b: &BoolExpr<Arith<C>>, fmt: Format) -> String {
    let mut s = String::new();
    write_bool(&mut s, b, fmt);
    s
}

fn write_bool<C: ConstText>(out: &mut String, b: &BoolExpr<Arith<C>>, fmt: Format) {
    match b {
        BoolExpr::True => out.push_str("true"),
        BoolExpr::False => out.push_str("false"),
        BoolExpr::Or(l, r) | BoolExpr::And(l, r) => {
            let (sym, p) = if matches!(b, BoolExpr::Or(..)) {
                (" or ", 1)
            } else {
                (" and ", 2)
            };
            write_bool_operand(out, l, bool_prec(l) < p, fmt);
            out.push_str(sym);
            write_bool_operand(out, r, bool_prec(r) <= p, fmt);
        }
        BoolExpr::Not(inner) => {
            out.push_str("not ");
            write_bool_operand(out, inner, bool_prec(inner) < 3, fmt);
        }
        BoolExpr::Rel(op, l, r) => {
            write_arith(out, l, fmt);
            let _ = write!(out, " {} ", op.symbol());
            write_arith(out, r, fmt);
        }
    }
}

fn write_bool_operand<C: ConstText>(
    out: &mut String,
    b: &BoolExpr<Arith<C>>,
    paren: bool,
    fmt: Format,
) {
    if paren {
        out.push('(');
        write_bool(out, b, fmt);
        out.push(')');
    } else {
        write_bool(out, b, fmt);
    }
}

pub fn program_expr_to_string(e: &ProgramExpr, fmt: Format) -> String {
    let mut s = String::new();
    write_pexpr(&mut s, e, 0, fmt);
    s
}

fn indent(out: &mut String, level: usize) {
    out.push('\n');
    for _ in 0..level {
        out.push_str("  ");
    }
}

// Bodies before `elsif`/`else` must not swallow the following keyword, so
// anything that is not a leaf gets parentheses there.
fn write_inner_body(out: &mut String, e: &ProgramExpr, level: usize, fmt: Format) {
    match e {
        ProgramExpr::Arith(_) | ProgramExpr::Warning => write_pexpr(out, e, level, fmt),
        _ => {
            out.push('(');
            indent(out, level + 1);
            write_pexpr(out, e, level + 1, fmt);
            indent(out, level);
            out.push(')');
        }
    }
}

fn write_tail_body(out: &mut String, e: &ProgramExpr, level: usize, fmt: Format) {
    match e {
        ProgramExpr::Arith(_) | ProgramExpr::Warning => write_pexpr(out, e, level, fmt),
        _ => {
            indent(out, level + 1);
            write_pexpr(out, e, level + 1, fmt);
        }
    }
}

fn write_pexpr(out: &mut String, e: &ProgramExpr, level: usize, fmt: Format) {
    match e {
        ProgramExpr::Arith(a) => write_arith(out, a, fmt),
        ProgramExpr::Warning => out.push_str("warning"),
        ProgramExpr::Let { var, value, body } => {
            let _ = write!(out, "let {var} = {} in", arith_to_string(value, fmt));
            indent(out, level);
            write_pexpr(out, body, level, fmt);
        }
        ProgramExpr::If {
            guard,
            then_branch,
            else_branch,
        } => {
            let _ = write!(out, "if {} then ", bool_to_string(guard, fmt));
            write_inner_body(out, then_branch, level, fmt);
            indent(out, level);
            out.push_str("else ");
            write_tail_body(out, else_branch, level, fmt);
        }
        ProgramExpr::IfN {
            branches,
            else_branch,
        } => {
            for (i, (g, b)) in branches.iter().enumerate() {
                if i > 0 {
                    indent(out, level);
                    out.push_str("elsif ");
                } else {
                    out.push_str("if ");
                }
                let _ = write!(out, "{} then ", bool_to_string(g, fmt));
                write_inner_body(out, b, level, fmt);
            }
            indent(out, level);
            out.push_str("else ");
            write_tail_body(out, else_branch, level, fmt);
        }
    }
}

/// Canonical source text; `parse_program(print_program(p))` equals `p`.
pub fn print_program(p: &Program) -> String {
    let mut out = format!("fun {}({}) =", p.name, p.params.join(", "));
    indent(&mut out, 1);
    write_pexpr(&mut out, &p.body, 1, p.format);
    out.push('\n');
    out
}
