//! β⁺/β⁻ abstractions of sign-test guards.

use indexmap::IndexMap;

use crate::analysis::{analyze, AnalysisEnv, ErrorBound};
use crate::error::{Error, Result};
use crate::fp::{round_up, Float, Format, Rational};
use crate::lang::{bool_to_string, Arith, BoolExpr, FloatBool, FloatExpr, RelOp};

/// A guard atom `a ⋈ 0` after normalization.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SignTest {
    pub expr: FloatExpr,
    pub op: RelOp,
}

fn is_zero_const(a: &FloatExpr) -> bool {
    matches!(a, Arith::Const(c) if c.is_zero())
}

fn unsupported(guard: &FloatBool, fmt: Format, reason: &str) -> Error {
    Error::UnsupportedGuard {
        guard: bool_to_string(guard, fmt),
        reason: reason.to_string(),
    }
}

/// Normalizes a relation to `a ⋈ 0`, flipping `0 ⋈ a`. Equalities and
/// relations with no zero side are rejected.
pub fn normalize_atom(op: RelOp, lhs: &FloatExpr, rhs: &FloatExpr, fmt: Format) -> Result<SignTest> {
    let atom = || BoolExpr::Rel(op, lhs.clone(), rhs.clone());
    if op == RelOp::Eq {
        return Err(unsupported(
            &atom(),
            fmt,
            "equality tests have no β abstraction",
        ));
    }
    if is_zero_const(rhs) {
        Ok(SignTest {
            expr: lhs.clone(),
            op,
        })
    } else if is_zero_const(lhs) {
        Ok(SignTest {
            expr: rhs.clone(),
            op: op.flipped(),
        })
    } else {
        Err(unsupported(
            &atom(),
            fmt,
            "only sign tests `a ⋈ 0` are supported; the abstraction is not correct for generic inequalities",
        ))
    }
}

/// Sign tests of a guard, in order of appearance.
pub fn sign_tests(guard: &FloatBool, fmt: Format) -> Result<Vec<SignTest>> {
    guard
        .atoms()
        .into_iter()
        .map(|(op, l, r)| normalize_atom(*op, l, r, fmt))
        .collect()
}

/// Error bound per guard atom, keyed structurally.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AtomErrorMap {
    map: IndexMap<FloatExpr, ErrorBound>,
}

impl AtomErrorMap {
    pub fn new() -> AtomErrorMap {
        AtomErrorMap::default()
    }

    pub fn insert(&mut self, atom: FloatExpr, eps: ErrorBound) {
        self.map.insert(atom, eps);
    }

    pub fn get(&self, atom: &FloatExpr) -> Option<&ErrorBound> {
        self.map.get(atom)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&FloatExpr, &ErrorBound)> {
        self.map.iter()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Adds an entry for every atom of `guard` not yet present.
    pub fn add_guard(&mut self, guard: &FloatBool, env: &AnalysisEnv, fmt: Format) -> Result<()> {
        for t in sign_tests(guard, fmt)? {
            if !self.map.contains_key(&t.expr) {
                let b = analyze(&t.expr, env, fmt)?;
                self.map.insert(t.expr, ErrorBound { eps: b.err });
            }
        }
        Ok(())
    }

    /// Error map for the atoms of `guard` under `env`.
    pub fn for_guard(guard: &FloatBool, env: &AnalysisEnv, fmt: Format) -> Result<AtomErrorMap> {
        let mut m = AtomErrorMap::new();
        m.add_guard(guard, env, fmt)?;
        Ok(m)
    }
}

/// `ε` rounded up to `fmt`, as a float literal.
pub fn eps_literal(eps: &Rational, fmt: Format) -> Result<Float> {
    round_up(eps, fmt)
}

struct Beta<'a> {
    errs: &'a AtomErrorMap,
    fmt: Format,
}

impl Beta<'_> {
    fn shifted(&self, t: &SignTest, plus: bool) -> Result<FloatBool> {
        let eps = self
            .errs
            .get(&t.expr)
            .ok_or_else(|| {
                Error::PreconditionViolated(format!(
                    "no error bound for guard atom `{}`",
                    crate::lang::arith_to_string(&t.expr, self.fmt)
                ))
            })?
            .eps
            .clone();
        let e = eps_literal(&eps, self.fmt)?;
        let pos = Arith::Const(e);
        let neg = Arith::Const(e.neg());
        let (op, bound) = match (t.op, plus) {
            (RelOp::Le, true) => (RelOp::Le, neg),
            (RelOp::Ge, true) => (RelOp::Ge, pos),
            (RelOp::Lt, true) => (RelOp::Lt, neg),
            (RelOp::Gt, true) => (RelOp::Gt, pos),
            (RelOp::Le, false) => (RelOp::Gt, pos),
            (RelOp::Ge, false) => (RelOp::Lt, neg),
            (RelOp::Lt, false) => (RelOp::Ge, pos),
            (RelOp::Gt, false) => (RelOp::Le, neg),
            (RelOp::Eq, _) => unreachable!("normalize_atom rejects equality"),
        };
        Ok(BoolExpr::Rel(op, t.expr.clone(), bound))
    }

    fn go(&self, phi: &FloatBool, plus: bool) -> Result<FloatBool> {
        Ok(match phi {
            BoolExpr::True => {
                if plus {
                    BoolExpr::True
                } else {
                    BoolExpr::False
                }
            }
            BoolExpr::False => {
                if plus {
                    BoolExpr::False
                } else {
                    BoolExpr::True
                }
            }
            BoolExpr::And(a, b) => {
                let (x, y) = (self.go(a, plus)?, self.go(b, plus)?);
                if plus {
                    BoolExpr::and(x, y)
                } else {
                    BoolExpr::or(x, y)
                }
            }
            BoolExpr::Or(a, b) => {
                let (x, y) = (self.go(a, plus)?, self.go(b, plus)?);
                if plus {
                    BoolExpr::or(x, y)
                } else {
                    BoolExpr::and(x, y)
                }
            }
            BoolExpr::Not(a) => self.go(a, !plus)?,
            BoolExpr::Rel(op, l, r) => {
                let t = normalize_atom(*op, l, r, self.fmt)?;
                self.shifted(&t, plus)?
            }
        })
    }
}

/// β⁺(φ): implies both φ and its real counterpart.
pub fn beta_plus(phi: &FloatBool, errs: &AtomErrorMap, fmt: Format) -> Result<FloatBool> {
    Beta { errs, fmt }.go(phi, true)
}

/// β⁻(φ): implies both ¬φ and the negation of its real counterpart.
pub fn beta_minus(phi: &FloatBool, errs: &AtomErrorMap, fmt: Format) -> Result<FloatBool> {
    Beta { errs, fmt }.go(phi, false)
}
