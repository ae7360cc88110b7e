//! Conservative refutation of path conditions.
//!
//! Conditions are put in negation normal form and explored depth-first,
//! branching on disjunctions. Each literal constrains one key (an arithmetic
//! term, or a pair of terms compared with each other) to a half-line; a key
//! whose constraints leave an empty set refutes the branch. With ranges, each
//! key also starts from an interval enclosure of its possible values.

use std::collections::{BTreeMap, HashMap};

use crate::analysis::{AnalysisEnv, Interval};
use crate::fp::{round_nearest, ArithOp, Float, Format, Rational};
use crate::lang::{Arith, BoolExpr, FloatBool, RealBool, RelOp, VarMap};

/// Branch budget after which the search gives up and answers "satisfiable".
pub const DEFAULT_BUDGET: usize = 20_000;

/// Variable enclosures for interval refutation, for both flavors.
#[derive(Clone, Debug)]
pub struct SatContext {
    format: Format,
    float_vars: BTreeMap<String, Interval>,
    real_vars: BTreeMap<String, Interval>,
    budget: usize,
}

impl SatContext {
    /// Float variable `v` ranges over the float enclosure of `env[v]`, its
    /// real counterpart `chi(v)` over the real enclosure.
    pub fn from_analysis(env: &AnalysisEnv, names: &[String], chi: &VarMap, format: Format) -> SatContext {
        let mut float_vars = BTreeMap::new();
        let mut real_vars = BTreeMap::new();
        for n in names {
            if let Some(b) = env.get(n) {
                float_vars.insert(n.clone(), b.float.clone());
                real_vars.insert(chi.real_name(n), b.real.clone());
            }
        }
        SatContext {
            format,
            float_vars,
            real_vars,
            budget: DEFAULT_BUDGET,
        }
    }

    pub fn with_budget(mut self, budget: usize) -> SatContext {
        self.budget = budget;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Key {
    Real(Arith<Rational>),
    Float(Arith<Float>),
    RealPair(Arith<Rational>, Arith<Rational>),
    FloatPair(Arith<Float>, Arith<Float>),
}

#[derive(Clone, Debug, Default)]
struct Bounds {
    lo: Option<(Rational, bool)>,
    hi: Option<(Rational, bool)>,
    ne: Vec<Rational>,
}

impl Bounds {
    fn tighten_lo(&mut self, v: Rational, strict: bool) {
        let replace = match &self.lo {
            None => true,
            Some((cur, cs)) => v > *cur || (v == *cur && strict && !cs),
        };
        if replace {
            self.lo = Some((v, strict));
        }
    }

    fn tighten_hi(&mut self, v: Rational, strict: bool) {
        let replace = match &self.hi {
            None => true,
            Some((cur, cs)) => v < *cur || (v == *cur && strict && !cs),
        };
        if replace {
            self.hi = Some((v, strict));
        }
    }

    fn add(&mut self, op: Lit, v: Rational) {
        match op {
            Lit::Rel(RelOp::Lt) => self.tighten_hi(v, true),
            Lit::Rel(RelOp::Le) => self.tighten_hi(v, false),
            Lit::Rel(RelOp::Gt) => self.tighten_lo(v, true),
            Lit::Rel(RelOp::Ge) => self.tighten_lo(v, false),
            Lit::Rel(RelOp::Eq) => {
                self.tighten_lo(v.clone(), false);
                self.tighten_hi(v, false);
            }
            Lit::Ne => self.ne.push(v),
        }
    }

    fn consistent(&self) -> bool {
        match (&self.lo, &self.hi) {
            (Some((lo, ls)), Some((hi, hs))) => {
                if lo > hi {
                    return false;
                }
                if lo == hi {
                    return !ls && !hs && !self.ne.contains(lo);
                }
                true
            }
            _ => true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Lit {
    Rel(RelOp),
    Ne,
}

fn negate_lit(l: Lit) -> Lit {
    match l {
        Lit::Rel(RelOp::Eq) => Lit::Ne,
        Lit::Rel(op) => Lit::Rel(op.negated().expect("non-equality")),
        Lit::Ne => Lit::Rel(RelOp::Eq),
    }
}

fn flip_lit(l: Lit) -> Lit {
    match l {
        Lit::Rel(op) => Lit::Rel(op.flipped()),
        Lit::Ne => Lit::Ne,
    }
}

/// A formula in negation normal form over both flavors.
#[derive(Clone, Debug)]
enum Nnf {
    True,
    False,
    And(Vec<Nnf>),
    Or(Vec<Nnf>),
    Atom(Key, Lit, Rational),
}

trait Flavor: Sized + Clone + std::fmt::Debug {
    fn as_const(a: &Arith<Self>) -> Option<Rational>;
    fn single(a: Arith<Self>) -> Key;
    fn pair(a: Arith<Self>, b: Arith<Self>) -> Key;
}

impl Flavor for Rational {
    fn as_const(a: &Arith<Self>) -> Option<Rational> {
        match a {
            Arith::Const(c) => Some(c.clone()),
            _ => None,
        }
    }
    fn single(a: Arith<Self>) -> Key {
        Key::Real(a)
    }
    fn pair(a: Arith<Self>, b: Arith<Self>) -> Key {
        Key::RealPair(a, b)
    }
}

impl Flavor for Float {
    fn as_const(a: &Arith<Self>) -> Option<Rational> {
        match a {
            Arith::Const(c) => Some(c.to_real()),
            _ => None,
        }
    }
    fn single(a: Arith<Self>) -> Key {
        Key::Float(a)
    }
    fn pair(a: Arith<Self>, b: Arith<Self>) -> Key {
        Key::FloatPair(a, b)
    }
}

fn lit_holds(l: Lit, a: &Rational, b: &Rational) -> bool {
    match l {
        Lit::Rel(op) => op.holds(a.cmp(b)),
        Lit::Ne => a != b,
    }
}

fn atom<C: Flavor>(op: Lit, l: &Arith<C>, r: &Arith<C>) -> Nnf {
    match (C::as_const(l), C::as_const(r)) {
        (Some(a), Some(b)) => {
            if lit_holds(op, &a, &b) {
                Nnf::True
            } else {
                Nnf::False
            }
        }
        (None, Some(b)) => Nnf::Atom(C::single(l.clone()), op, b),
        (Some(a), None) => Nnf::Atom(C::single(r.clone()), flip_lit(op), a),
        // `a < b` and `b > a` share one key.
        (None, None) if format!("{l:?}") > format!("{r:?}") => {
            Nnf::Atom(C::pair(r.clone(), l.clone()), flip_lit(op), Rational::zero())
        }
        (None, None) => Nnf::Atom(C::pair(l.clone(), r.clone()), op, Rational::zero()),
    }
}

fn nnf<C: Flavor>(b: &BoolExpr<Arith<C>>, positive: bool) -> Nnf {
    match b {
        BoolExpr::True => {
            if positive {
                Nnf::True
            } else {
                Nnf::False
            }
        }
        BoolExpr::False => {
            if positive {
                Nnf::False
            } else {
                Nnf::True
            }
        }
        BoolExpr::Not(x) => nnf(x, !positive),
        BoolExpr::And(x, y) | BoolExpr::Or(x, y) => {
            let parts = vec![nnf(x, positive), nnf(y, positive)];
            if matches!(b, BoolExpr::And(..)) == positive {
                Nnf::And(parts)
            } else {
                Nnf::Or(parts)
            }
        }
        BoolExpr::Rel(op, l, r) => {
            let lit = if positive {
                Lit::Rel(*op)
            } else {
                negate_lit(Lit::Rel(*op))
            };
            atom(lit, l, r)
        }
    }
}

fn real_enclosure(a: &Arith<Rational>, vars: &BTreeMap<String, Interval>) -> Option<Interval> {
    match a {
        Arith::Const(c) => Some(Interval::point(c.clone())),
        Arith::Var(v) => vars.get(v).cloned(),
        Arith::Op(op, args) => {
            let xs = args
                .iter()
                .map(|x| real_enclosure(x, vars))
                .collect::<Option<Vec<_>>>()?;
            Some(apply_interval(*op, &xs))
        }
    }
}

fn float_enclosure(a: &Arith<Float>, vars: &BTreeMap<String, Interval>, fmt: Format) -> Option<Interval> {
    match a {
        Arith::Const(c) => Some(Interval::point(c.to_real())),
        Arith::Var(v) => vars.get(v).cloned(),
        Arith::Op(op, args) => {
            let xs = args
                .iter()
                .map(|x| float_enclosure(x, vars, fmt))
                .collect::<Option<Vec<_>>>()?;
            let exact = apply_interval(*op, &xs);
            if *op == ArithOp::Neg {
                return Some(exact);
            }
            let lo = round_nearest(exact.lo(), fmt).ok()?.to_real();
            let hi = round_nearest(exact.hi(), fmt).ok()?.to_real();
            Interval::new(lo, hi).ok()
        }
    }
}

fn apply_interval(op: ArithOp, xs: &[Interval]) -> Interval {
    match op {
        ArithOp::Add => xs[0].add(&xs[1]),
        ArithOp::Sub => xs[0].sub(&xs[1]),
        ArithOp::Mul => xs[0].mul(&xs[1]),
        ArithOp::Neg => xs[0].neg(),
    }
}

struct Search<'a> {
    ctx: Option<&'a SatContext>,
    budget: usize,
    enclosures: HashMap<Key, Option<Interval>>,
}

impl Search<'_> {
    fn enclosure(&mut self, key: &Key) -> Option<Interval> {
        let ctx = self.ctx?;
        if let Some(e) = self.enclosures.get(key) {
            return e.clone();
        }
        let e = match key {
            Key::Real(a) => real_enclosure(a, &ctx.real_vars),
            Key::Float(a) => float_enclosure(a, &ctx.float_vars, ctx.format),
            Key::RealPair(a, b) => {
                let (x, y) = (real_enclosure(a, &ctx.real_vars), real_enclosure(b, &ctx.real_vars));
                x.zip(y).map(|(x, y)| x.sub(&y))
            }
            Key::FloatPair(a, b) => {
                // Float comparisons are exact, so the difference of values is exact.
                let x = float_enclosure(a, &ctx.float_vars, ctx.format);
                let y = float_enclosure(b, &ctx.float_vars, ctx.format);
                x.zip(y).map(|(x, y)| x.sub(&y))
            }
        };
        self.enclosures.insert(key.clone(), e.clone());
        e
    }

    /// True when satisfiable or the budget ran out, false when refuted.
    fn run(&mut self, mut pending: Vec<Nnf>, mut store: HashMap<Key, Bounds>) -> bool {
        let mut disjunctions: Vec<Vec<Nnf>> = Vec::new();
        while let Some(f) = pending.pop() {
            match f {
                Nnf::True => {}
                Nnf::False => return false,
                Nnf::And(parts) => pending.extend(parts),
                Nnf::Or(parts) => disjunctions.push(parts),
                Nnf::Atom(key, lit, v) => {
                    if !store.contains_key(&key) {
                        let mut b = Bounds::default();
                        if let Some(iv) = self.enclosure(&key) {
                            b.tighten_lo(iv.lo().clone(), false);
                            b.tighten_hi(iv.hi().clone(), false);
                        }
                        store.insert(key.clone(), b);
                    }
                    let b = store.get_mut(&key).expect("inserted");
                    b.add(lit, v);
                    if !b.consistent() {
                        return false;
                    }
                }
            }
        }
        let Some(parts) = disjunctions.pop() else {
            return true;
        };
        for p in parts {
            if self.budget == 0 {
                return true;
            }
            self.budget -= 1;
            let mut next: Vec<Nnf> = disjunctions.iter().cloned().map(Nnf::Or).collect();
            next.push(p);
            if self.run(next, store.clone()) {
                return true;
            }
        }
        false
    }
}

/// False only when `eta ∧ eta_f` is proven unsatisfiable: by contradictory
/// literals on the same term, or, given a context, by interval enclosures.
pub fn is_possibly_sat(eta: &RealBool, eta_f: &FloatBool, ctx: Option<&SatContext>) -> bool {
    let f = Nnf::And(vec![nnf(eta, true), nnf(eta_f, true)]);
    let mut s = Search {
        ctx,
        budget: ctx.map_or(DEFAULT_BUDGET, |c| c.budget),
        enclosures: HashMap::new(),
    };
    s.run(vec![f], HashMap::new())
}
