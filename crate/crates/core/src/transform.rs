//! The guard-strengthening transformation τ and unreachable-branch reports.

use crate::abstraction::{beta_minus, beta_plus, AtomErrorMap};
use crate::analysis::{analyze_let_env, AnalysisEnv, RangeEnv};
use crate::error::{Error, Result};
use crate::fp::{Format, Rational};
use crate::lang::{Arith, BoolExpr, FloatBool, FloatExpr, Program, ProgramExpr, RelOp, VarMap};
use crate::semantics::{is_possibly_sat, SatContext};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TransformOptions {
    /// Drop a chain conjunct that another chain conjunct on the same term
    /// already implies (`a < -e and a <= -e` becomes `a < -e`).
    pub simplify: bool,
}

impl Default for TransformOptions {
    fn default() -> Self {
        TransformOptions { simplify: true }
    }
}

/// Analysis environment for `p`: parameter ranges plus every `let` binding.
pub fn program_analysis_env(p: &Program, ranges: &RangeEnv) -> Result<AnalysisEnv> {
    for x in &p.params {
        if ranges.get(x).is_none() {
            return Err(Error::MissingRange(x.clone()));
        }
    }
    analyze_let_env(p.body.let_bindings(), AnalysisEnv::from_ranges(ranges), p.format)
}

/// Error bounds for every guard atom of `p`.
pub fn atom_errors(p: &Program, ranges: &RangeEnv) -> Result<AtomErrorMap> {
    let env = program_analysis_env(p, ranges)?;
    let mut m = AtomErrorMap::new();
    for g in p.body.guards() {
        m.add_guard(g, &env, p.format)?;
    }
    Ok(m)
}

pub fn transform_program(p: &Program, ranges: &RangeEnv) -> Result<Program> {
    transform_program_with(p, ranges, TransformOptions::default())
}

pub fn transform_program_with(p: &Program, ranges: &RangeEnv, opts: TransformOptions) -> Result<Program> {
    if p.body.contains_warning() {
        return Err(Error::PreconditionViolated(
            "the program already contains `warning`".into(),
        ));
    }
    let errs = atom_errors(p, ranges)?;
    let t = Tau {
        errs: &errs,
        fmt: p.format,
        opts,
    };
    let body = t.go(&p.body)?;
    Program::new(p.name.clone(), p.params.clone(), body, p.format)
}

struct Tau<'a> {
    errs: &'a AtomErrorMap,
    fmt: Format,
    opts: TransformOptions,
}

impl Tau<'_> {
    fn go(&self, e: &ProgramExpr) -> Result<ProgramExpr> {
        match e {
            ProgramExpr::Arith(_) => Ok(e.clone()),
            ProgramExpr::Warning => Err(Error::PreconditionViolated(
                "the program already contains `warning`".into(),
            )),
            ProgramExpr::Let { var, value, body } => {
                Ok(ProgramExpr::let_in(var.clone(), value.clone(), self.go(body)?))
            }
            ProgramExpr::If {
                guard,
                then_branch,
                else_branch,
            } => self.chain(std::slice::from_ref(guard), &[then_branch, else_branch]),
            ProgramExpr::IfN {
                branches,
                else_branch,
            } => {
                let guards: Vec<FloatBool> = branches.iter().map(|(g, _)| g.clone()).collect();
                let mut bodies: Vec<&ProgramExpr> = branches.iter().map(|(_, b)| b).collect();
                bodies.push(else_branch);
                self.chain(&guards, &bodies)
            }
        }
    }

    /// Branch `i` is guarded by `β⁺(φ_i) ∧ β⁻(φ_{i-1}) ∧ ... ∧ β⁻(φ_1)`, the
    /// final body by `β⁻(φ_{n-1}) ∧ ... ∧ β⁻(φ_1)`; anything else warns.
    fn chain(&self, guards: &[FloatBool], bodies: &[&ProgramExpr]) -> Result<ProgramExpr> {
        let plus = guards
            .iter()
            .map(|g| beta_plus(g, self.errs, self.fmt))
            .collect::<Result<Vec<_>>>()?;
        let minus = guards
            .iter()
            .map(|g| beta_minus(g, self.errs, self.fmt))
            .collect::<Result<Vec<_>>>()?;
        let mut out = Vec::with_capacity(bodies.len());
        for (i, body) in bodies.iter().enumerate() {
            let mut parts: Vec<FloatBool> = Vec::new();
            if i < guards.len() {
                parts.push(plus[i].clone());
            }
            parts.extend(minus[..i].iter().rev().cloned());
            if self.opts.simplify {
                parts = drop_implied(parts);
            }
            out.push((BoolExpr::conjunction(parts), self.go(body)?));
        }
        Ok(ProgramExpr::if_n(out, ProgramExpr::Warning))
    }
}

/// `a ⋈ c` with `c` a constant.
fn as_bound(b: &FloatBool) -> Option<(&FloatExpr, RelOp, Rational)> {
    match b {
        BoolExpr::Rel(op, l, Arith::Const(c)) if *op != RelOp::Eq => Some((l, *op, c.to_real())),
        _ => None,
    }
}

/// Whether `x op1 c1` implies `x op2 c2` for every `x`.
fn implies(op1: RelOp, c1: &Rational, op2: RelOp, c2: &Rational) -> bool {
    use RelOp::*;
    match (op1, op2) {
        (Lt, Lt) | (Lt, Le) | (Le, Le) => c1 <= c2,
        (Le, Lt) => c1 < c2,
        (Gt, Gt) | (Gt, Ge) | (Ge, Ge) => c1 >= c2,
        (Ge, Gt) => c1 > c2,
        _ => false,
    }
}

fn drop_implied(parts: Vec<FloatBool>) -> Vec<FloatBool> {
    let keep: Vec<bool> = (0..parts.len())
        .map(|i| {
            let Some((a, op, c)) = as_bound(&parts[i]) else {
                return true;
            };
            !parts.iter().enumerate().any(|(j, other)| {
                if i == j {
                    return false;
                }
                let Some((b, op2, c2)) = as_bound(other) else {
                    return false;
                };
                if a != b || !implies(op2, &c2, op, &c) {
                    return false;
                }
                // Of two equivalent conjuncts keep the first.
                !implies(op, &c, op2, &c2) || j < i
            })
        })
        .collect();
    parts
        .into_iter()
        .zip(keep)
        .filter_map(|(p, k)| k.then_some(p))
        .collect()
}

/// A branch of a conditional: `conditional` counts conditionals in pre-order,
/// `branch` counts branches within it (the final else is last). Both start
/// at 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct BranchRef {
    pub conditional: usize,
    pub branch: usize,
}

/// Branches whose selecting condition (own guard and the negations of the
/// earlier guards) is refuted under `ranges`.
pub fn unreachable_branches(p: &Program, ranges: &RangeEnv) -> Result<Vec<BranchRef>> {
    let env = program_analysis_env(p, ranges)?;
    let mut names = p.params.clone();
    names.extend(p.body.let_bindings().into_iter().map(|(n, _)| n.to_string()));
    let ctx = SatContext::from_analysis(&env, &names, &VarMap::canonical(), p.format);
    let mut out = Vec::new();
    let mut counter = 0usize;
    collect_unreachable(&p.body, &ctx, &mut counter, &mut out);
    Ok(out)
}

fn collect_unreachable(e: &ProgramExpr, ctx: &SatContext, counter: &mut usize, out: &mut Vec<BranchRef>) {
    let (guards, bodies): (Vec<&FloatBool>, Vec<&ProgramExpr>) = match e {
        ProgramExpr::Arith(_) | ProgramExpr::Warning => return,
        ProgramExpr::Let { body, .. } => return collect_unreachable(body, ctx, counter, out),
        ProgramExpr::If {
            guard,
            then_branch,
            else_branch,
        } => (vec![guard], vec![then_branch, else_branch]),
        ProgramExpr::IfN {
            branches,
            else_branch,
        } => {
            let mut b: Vec<&ProgramExpr> = branches.iter().map(|(_, b)| b).collect();
            b.push(else_branch);
            (branches.iter().map(|(g, _)| g).collect(), b)
        }
    };
    let id = *counter;
    *counter += 1;
    for (i, body) in bodies.iter().enumerate() {
        let negs = guards[..i].iter().map(|g| BoolExpr::not((*g).clone()));
        let sel = if i < guards.len() {
            BoolExpr::conjunction(std::iter::once(guards[i].clone()).chain(negs))
        } else {
            BoolExpr::conjunction(negs)
        };
        if !is_possibly_sat(&BoolExpr::True, &sel, Some(ctx)) {
            out.push(BranchRef {
                conditional: id,
                branch: i,
            });
        }
        collect_unreachable(body, ctx, counter, out);
    }
}
