use std::collections::BTreeSet;

use crate::fp::{ArithOp, Float, Format, Rational};

/// Arithmetic expression over constants of type `C`.
///
/// `Arith<Float>` is the floating-point flavor, `Arith<Rational>` its real
/// counterpart.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Arith<C> {
    Const(C),
    Var(String),
    Op(ArithOp, Vec<Arith<C>>),
}

pub type FloatExpr = Arith<Float>;
pub type RealExpr = Arith<Rational>;

impl<C> Arith<C> {
    pub fn var(name: impl Into<String>) -> Self {
        Arith::Var(name.into())
    }

    pub fn add(a: Self, b: Self) -> Self {
        Arith::Op(ArithOp::Add, vec![a, b])
    }

    pub fn sub(a: Self, b: Self) -> Self {
        Arith::Op(ArithOp::Sub, vec![a, b])
    }

    pub fn mul(a: Self, b: Self) -> Self {
        Arith::Op(ArithOp::Mul, vec![a, b])
    }

    pub fn neg(a: Self) -> Self {
        Arith::Op(ArithOp::Neg, vec![a])
    }

    /// Operand counts match operator arity and variable names are nonempty.
    pub fn is_well_formed(&self) -> bool {
        match self {
            Arith::Const(_) => true,
            Arith::Var(v) => !v.is_empty(),
            Arith::Op(op, args) => {
                args.len() == op.arity() && args.iter().all(Arith::is_well_formed)
            }
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Arith::Const(_) => {}
            Arith::Var(v) => {
                out.insert(v.clone());
            }
            Arith::Op(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            Arith::Op(_, args) => 1 + args.iter().map(Arith::node_count).sum::<usize>(),
            _ => 1,
        }
    }

    /// Replaces variables via `f`; unmatched variables are kept.
    pub fn substitute(&self, f: &impl Fn(&str) -> Option<Arith<C>>) -> Arith<C>
    where
        C: Clone,
    {
        match self {
            Arith::Const(c) => Arith::Const(c.clone()),
            Arith::Var(v) => f(v).unwrap_or_else(|| Arith::Var(v.clone())),
            Arith::Op(op, args) => Arith::Op(*op, args.iter().map(|a| a.substitute(f)).collect()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RelOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
}

impl RelOp {
    pub fn symbol(&self) -> &'static str {
        match self {
            RelOp::Lt => "<",
            RelOp::Le => "<=",
            RelOp::Gt => ">",
            RelOp::Ge => ">=",
            RelOp::Eq => "==",
        }
    }

    /// The relation with its operands swapped: `a < b` iff `b > a`.
    pub fn flipped(&self) -> RelOp {
        match self {
            RelOp::Lt => RelOp::Gt,
            RelOp::Le => RelOp::Ge,
            RelOp::Gt => RelOp::Lt,
            RelOp::Ge => RelOp::Le,
            RelOp::Eq => RelOp::Eq,
        }
    }

    /// The complementary relation, `None` for equality.
    pub fn negated(&self) -> Option<RelOp> {
        match self {
            RelOp::Lt => Some(RelOp::Ge),
            RelOp::Le => Some(RelOp::Gt),
            RelOp::Gt => Some(RelOp::Le),
            RelOp::Ge => Some(RelOp::Lt),
            RelOp::Eq => None,
        }
    }

    pub fn holds(&self, ord: std::cmp::Ordering) -> bool {
        use std::cmp::Ordering::*;
        match self {
            RelOp::Lt => ord == Less,
            RelOp::Le => ord != Greater,
            RelOp::Gt => ord == Greater,
            RelOp::Ge => ord != Less,
            RelOp::Eq => ord == Equal,
        }
    }
}

/// Boolean expression whose relations compare two `A`s.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum BoolExpr<A> {
    True,
    False,
    And(Box<BoolExpr<A>>, Box<BoolExpr<A>>),
    Or(Box<BoolExpr<A>>, Box<BoolExpr<A>>),
    Not(Box<BoolExpr<A>>),
    Rel(RelOp, A, A),
}

pub type FloatBool = BoolExpr<FloatExpr>;
pub type RealBool = BoolExpr<RealExpr>;

impl<A> BoolExpr<A> {
    pub fn and(a: Self, b: Self) -> Self {
        BoolExpr::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Self, b: Self) -> Self {
        BoolExpr::Or(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(a: Self) -> Self {
        BoolExpr::Not(Box::new(a))
    }

    pub fn rel(op: RelOp, lhs: A, rhs: A) -> Self {
        BoolExpr::Rel(op, lhs, rhs)
    }

    /// Conjunction that drops `true` operands.
    pub fn and_simplified(a: Self, b: Self) -> Self {
        match (a, b) {
            (BoolExpr::True, x) | (x, BoolExpr::True) => x,
            (x, y) => BoolExpr::and(x, y),
        }
    }

    /// Left-nested conjunction of `items`; `true` when empty.
    pub fn conjunction(items: impl IntoIterator<Item = Self>) -> Self {
        items
            .into_iter()
            .reduce(BoolExpr::and)
            .unwrap_or(BoolExpr::True)
    }

    /// Relation atoms, left to right.
    pub fn atoms(&self) -> Vec<(&RelOp, &A, &A)> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<(&'a RelOp, &'a A, &'a A)>) {
        match self {
            BoolExpr::True | BoolExpr::False => {}
            BoolExpr::And(a, b) | BoolExpr::Or(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
            BoolExpr::Not(a) => a.collect_atoms(out),
            BoolExpr::Rel(op, l, r) => out.push((op, l, r)),
        }
    }

    pub fn map_atoms<B>(&self, f: &mut impl FnMut(&RelOp, &A, &A) -> BoolExpr<B>) -> BoolExpr<B> {
        match self {
            BoolExpr::True => BoolExpr::True,
            BoolExpr::False => BoolExpr::False,
            BoolExpr::And(a, b) => BoolExpr::and(a.map_atoms(f), b.map_atoms(f)),
            BoolExpr::Or(a, b) => BoolExpr::or(a.map_atoms(f), b.map_atoms(f)),
            BoolExpr::Not(a) => BoolExpr::not(a.map_atoms(f)),
            BoolExpr::Rel(op, l, r) => f(op, l, r),
        }
    }
}

impl<C> BoolExpr<Arith<C>> {
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for (_, l, r) in self.atoms() {
            l.collect_vars(&mut out);
            r.collect_vars(&mut out);
        }
        out
    }
}

/// Program expression: arithmetic, conditionals, let, warning.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ProgramExpr {
    Arith(FloatExpr),
    If {
        guard: FloatBool,
        then_branch: Box<ProgramExpr>,
        else_branch: Box<ProgramExpr>,
    },
    /// `if g1 then s1 elsif g2 then s2 ... else s_n`, at least two guards.
    IfN {
        branches: Vec<(FloatBool, ProgramExpr)>,
        else_branch: Box<ProgramExpr>,
    },
    Let {
        var: String,
        value: FloatExpr,
        body: Box<ProgramExpr>,
    },
    Warning,
}

impl ProgramExpr {
    pub fn if2(guard: FloatBool, then_branch: ProgramExpr, else_branch: ProgramExpr) -> Self {
        ProgramExpr::If {
            guard,
            then_branch: Box::new(then_branch),
            else_branch: Box::new(else_branch),
        }
    }

    pub fn if_n(branches: Vec<(FloatBool, ProgramExpr)>, else_branch: ProgramExpr) -> Self {
        ProgramExpr::IfN {
            branches,
            else_branch: Box::new(else_branch),
        }
    }

    pub fn let_in(var: impl Into<String>, value: FloatExpr, body: ProgramExpr) -> Self {
        ProgramExpr::Let {
            var: var.into(),
            value,
            body: Box::new(body),
        }
    }

    /// Free variables, with `let` removing its binder from the body.
    pub fn free_vars(&self) -> BTreeSet<String> {
        match self {
            ProgramExpr::Arith(a) => a.free_vars(),
            ProgramExpr::Warning => BTreeSet::new(),
            ProgramExpr::If {
                guard,
                then_branch,
                else_branch,
            } => {
                let mut s = guard.free_vars();
                s.extend(then_branch.free_vars());
                s.extend(else_branch.free_vars());
                s
            }
            ProgramExpr::IfN {
                branches,
                else_branch,
            } => {
                let mut s = else_branch.free_vars();
                for (g, b) in branches {
                    s.extend(g.free_vars());
                    s.extend(b.free_vars());
                }
                s
            }
            ProgramExpr::Let { var, value, body } => {
                let mut s = body.free_vars();
                s.remove(var);
                s.extend(value.free_vars());
                s
            }
        }
    }

    pub fn contains_warning(&self) -> bool {
        match self {
            ProgramExpr::Warning => true,
            ProgramExpr::Arith(_) => false,
            ProgramExpr::If {
                then_branch,
                else_branch,
                ..
            } => then_branch.contains_warning() || else_branch.contains_warning(),
            ProgramExpr::IfN {
                branches,
                else_branch,
            } => {
                else_branch.contains_warning() || branches.iter().any(|(_, b)| b.contains_warning())
            }
            ProgramExpr::Let { body, .. } => body.contains_warning(),
        }
    }

    /// `let` bindings in evaluation order (pre-order).
    pub fn let_bindings(&self) -> Vec<(&str, &FloatExpr)> {
        let mut out = Vec::new();
        self.collect_lets(&mut out);
        out
    }

    fn collect_lets<'a>(&'a self, out: &mut Vec<(&'a str, &'a FloatExpr)>) {
        match self {
            ProgramExpr::Arith(_) | ProgramExpr::Warning => {}
            ProgramExpr::If {
                then_branch,
                else_branch,
                ..
            } => {
                then_branch.collect_lets(out);
                else_branch.collect_lets(out);
            }
            ProgramExpr::IfN {
                branches,
                else_branch,
            } => {
                for (_, b) in branches {
                    b.collect_lets(out);
                }
                else_branch.collect_lets(out);
            }
            ProgramExpr::Let { var, value, body } => {
                out.push((var, value));
                body.collect_lets(out);
            }
        }
    }

    /// Guards of every conditional, in pre-order.
    pub fn guards(&self) -> Vec<&FloatBool> {
        let mut out = Vec::new();
        self.collect_guards(&mut out);
        out
    }

    fn collect_guards<'a>(&'a self, out: &mut Vec<&'a FloatBool>) {
        match self {
            ProgramExpr::Arith(_) | ProgramExpr::Warning => {}
            ProgramExpr::If {
                guard,
                then_branch,
                else_branch,
            } => {
                out.push(guard);
                then_branch.collect_guards(out);
                else_branch.collect_guards(out);
            }
            ProgramExpr::IfN {
                branches,
                else_branch,
            } => {
                for (g, b) in branches {
                    out.push(g);
                    b.collect_guards(out);
                }
                else_branch.collect_guards(out);
            }
            ProgramExpr::Let { body, .. } => body.collect_guards(out),
        }
    }

    /// Number of conditional nodes.
    pub fn conditional_count(&self) -> usize {
        match self {
            ProgramExpr::Arith(_) | ProgramExpr::Warning => 0,
            ProgramExpr::If {
                then_branch,
                else_branch,
                ..
            } => 1 + then_branch.conditional_count() + else_branch.conditional_count(),
            ProgramExpr::IfN {
                branches,
                else_branch,
            } => {
                1 + else_branch.conditional_count()
                    + branches.iter().map(|(_, b)| b.conditional_count()).sum::<usize>()
            }
            ProgramExpr::Let { body, .. } => body.conditional_count(),
        }
    }
}

/// A function declaration `f(x1, ..., xm) = body`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Program {
    pub name: String,
    pub params: Vec<String>,
    pub body: ProgramExpr,
    pub format: Format,
}

impl Program {
    /// Validates the declaration: distinct parameters, free variables among
    /// the parameters, well-formed operators, `ifN` with at least two guards,
    /// and every `let` binder fresh (distinct from parameters and from every
    /// other binder in the program).
    pub fn new(
        name: impl Into<String>,
        params: Vec<String>,
        body: ProgramExpr,
        format: Format,
    ) -> crate::Result<Program> {
        use crate::Error;
        let mut seen = BTreeSet::new();
        for p in &params {
            if !seen.insert(p.clone()) {
                return Err(Error::DuplicateParameter(p.clone()));
            }
        }
        for v in body.free_vars() {
            if !seen.contains(&v) {
                return Err(Error::UnboundVariable(v));
            }
        }
        for (var, _) in body.let_bindings() {
            if !seen.insert(var.to_string()) {
                return Err(Error::InvalidProgram(format!(
                    "let-bound variable `{var}` is not fresh"
                )));
            }
        }
        check_shape(&body)?;
        Ok(Program {
            name: name.into(),
            params,
            body,
            format,
        })
    }

    pub fn arity(&self) -> usize {
        self.params.len()
    }
}

fn check_shape(e: &ProgramExpr) -> crate::Result<()> {
    use crate::Error;
    let arith_ok = |a: &FloatExpr| {
        if a.is_well_formed() {
            Ok(())
        } else {
            Err(Error::InvalidProgram("operator arity mismatch".into()))
        }
    };
    let guard_ok = |g: &FloatBool| -> crate::Result<()> {
        for (_, l, r) in g.atoms() {
            arith_ok(l)?;
            arith_ok(r)?;
        }
        Ok(())
    };
    match e {
        ProgramExpr::Arith(a) => arith_ok(a),
        ProgramExpr::Warning => Ok(()),
        ProgramExpr::If {
            guard,
            then_branch,
            else_branch,
        } => {
            guard_ok(guard)?;
            check_shape(then_branch)?;
            check_shape(else_branch)
        }
        ProgramExpr::IfN {
            branches,
            else_branch,
        } => {
            if branches.len() < 2 {
                return Err(Error::InvalidProgram(
                    "an if/elsif chain needs at least two guarded branches".into(),
                ));
            }
            for (g, b) in branches {
                guard_ok(g)?;
                check_shape(b)?;
            }
            check_shape(else_branch)
        }
        ProgramExpr::Let { value, body, .. } => {
            arith_ok(value)?;
            check_shape(body)
        }
    }
}
