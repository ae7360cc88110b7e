use serde_json::{json, Value};

use crate::fp::{ArithOp, Format};

use super::ast::{Arith, BoolExpr, Program, ProgramExpr};
use super::printer::ConstText;

fn op_name(op: ArithOp) -> &'static str {
    match op {
        ArithOp::Add => "add",
        ArithOp::Sub => "sub",
        ArithOp::Mul => "mul",
        ArithOp::Neg => "neg",
    }
}

pub fn arith_json<C: ConstText>(a: &Arith<C>, fmt: Format) -> Value {
    match a {
        Arith::Const(c) => json!({"kind": "const", "value": c.text(fmt)}),
        Arith::Var(v) => json!({"kind": "var", "name": v}),
        Arith::Op(op, args) => json!({
            "kind": op_name(*op),
            "args": args.iter().map(|x| arith_json(x, fmt)).collect::<Vec<_>>(),
        }),
    }
}

pub fn bool_json<C: ConstText>(b: &BoolExpr<Arith<C>>, fmt: Format) -> Value {
    match b {
        BoolExpr::True => json!({"kind": "true"}),
        BoolExpr::False => json!({"kind": "false"}),
        BoolExpr::And(l, r) => json!({"kind": "and", "lhs": bool_json(l, fmt), "rhs": bool_json(r, fmt)}),
        BoolExpr::Or(l, r) => json!({"kind": "or", "lhs": bool_json(l, fmt), "rhs": bool_json(r, fmt)}),
        BoolExpr::Not(x) => json!({"kind": "not", "arg": bool_json(x, fmt)}),
        BoolExpr::Rel(op, l, r) => json!({
            "kind": "rel",
            "op": op.symbol(),
            "lhs": arith_json(l, fmt),
            "rhs": arith_json(r, fmt),
        }),
    }
}

fn pexpr_json(e: &ProgramExpr, fmt: Format) -> Value {
    match e {
        ProgramExpr::Arith(a) => arith_json(a, fmt),
        ProgramExpr::Warning => json!({"kind": "warning"}),
        ProgramExpr::Let { var, value, body } => json!({
            "kind": "let",
            "var": var,
            "value": arith_json(value, fmt),
            "body": pexpr_json(body, fmt),
        }),
        ProgramExpr::If {
            guard,
            then_branch,
            else_branch,
        } => json!({
            "kind": "if",
            "guard": bool_json(guard, fmt),
            "then": pexpr_json(then_branch, fmt),
            "else": pexpr_json(else_branch, fmt),
        }),
        ProgramExpr::IfN {
            branches,
            else_branch,
        } => json!({
            "kind": "ifn",
            "branches": branches
                .iter()
                .map(|(g, b)| json!({"guard": bool_json(g, fmt), "body": pexpr_json(b, fmt)}))
                .collect::<Vec<_>>(),
            "else": pexpr_json(else_branch, fmt),
        }),
    }
}

/// AST dump: one object per node with a `kind` field plus children.
pub fn program_json(p: &Program) -> Value {
    json!({
        "kind": "program",
        "name": p.name,
        "params": p.params,
        "format": {"precision": p.format.precision(), "min_exp": p.format.min_exp()},
        "body": pexpr_json(&p.body, p.format),
    })
}
