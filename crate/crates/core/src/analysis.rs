//! Interval enclosures and sound round-off error bounds.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::fp::{round_nearest, ulp, ArithOp, Format, Rational};
use crate::lang::{Arith, FloatExpr};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Interval {
    lo: Rational,
    hi: Rational,
}

impl Interval {
    pub fn new(lo: Rational, hi: Rational) -> Result<Interval> {
        if lo > hi {
            return Err(Error::InvalidConfig(format!("empty interval [{lo}, {hi}]")));
        }
        Ok(Interval { lo, hi })
    }

    pub fn point(v: Rational) -> Interval {
        Interval {
            lo: v.clone(),
            hi: v,
        }
    }

    pub fn lo(&self) -> &Rational {
        &self.lo
    }

    pub fn hi(&self) -> &Rational {
        &self.hi
    }

    /// `max(|lo|, |hi|)`.
    pub fn mag(&self) -> Rational {
        self.lo.abs().max(self.hi.abs())
    }

    pub fn contains(&self, v: &Rational) -> bool {
        &self.lo <= v && v <= &self.hi
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.clone().min(other.lo.clone()),
            hi: self.hi.clone().max(other.hi.clone()),
        }
    }

    /// Widens both ends by `r >= 0`.
    pub fn widen(&self, r: &Rational) -> Interval {
        Interval {
            lo: &self.lo - r,
            hi: &self.hi + r,
        }
    }

    pub fn neg(&self) -> Interval {
        Interval {
            lo: -&self.hi,
            hi: -&self.lo,
        }
    }

    pub fn add(&self, o: &Interval) -> Interval {
        Interval {
            lo: &self.lo + &o.lo,
            hi: &self.hi + &o.hi,
        }
    }

    pub fn sub(&self, o: &Interval) -> Interval {
        Interval {
            lo: &self.lo - &o.hi,
            hi: &self.hi - &o.lo,
        }
    }

    pub fn mul(&self, o: &Interval) -> Interval {
        let c = [
            &self.lo * &o.lo,
            &self.lo * &o.hi,
            &self.hi * &o.lo,
            &self.hi * &o.hi,
        ];
        let lo = c.iter().min().expect("four corners").clone();
        let hi = c.iter().max().expect("four corners").clone();
        Interval { lo, hi }
    }

    fn apply(op: ArithOp, args: &[Interval]) -> Interval {
        match op {
            ArithOp::Add => args[0].add(&args[1]),
            ArithOp::Sub => args[0].sub(&args[1]),
            ArithOp::Mul => args[0].mul(&args[1]),
            ArithOp::Neg => args[0].neg(),
        }
    }

    /// Rounds both ends to nearest; encloses every rounded member by
    /// monotonicity of rounding.
    fn round(&self, fmt: Format) -> Result<Interval> {
        Ok(Interval {
            lo: round_nearest(&self.lo, fmt)?.to_real(),
            hi: round_nearest(&self.hi, fmt)?.to_real(),
        })
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |r: &Rational| r.to_exact_decimal().unwrap_or_else(|| r.to_string());
        write!(f, "[{}, {}]", show(&self.lo), show(&self.hi))
    }
}

/// Input ranges for float variables.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RangeEnv {
    ranges: BTreeMap<String, Interval>,
}

impl RangeEnv {
    pub fn new() -> RangeEnv {
        RangeEnv::default()
    }

    /// Every variable in `names` gets the range `[lo, hi]`.
    pub fn uniform<'a>(
        names: impl IntoIterator<Item = &'a str>,
        lo: Rational,
        hi: Rational,
    ) -> Result<RangeEnv> {
        let iv = Interval::new(lo, hi)?;
        Ok(RangeEnv {
            ranges: names
                .into_iter()
                .map(|n| (n.to_string(), iv.clone()))
                .collect(),
        })
    }

    pub fn insert(&mut self, name: impl Into<String>, iv: Interval) {
        self.ranges.insert(name.into(), iv);
    }

    pub fn get(&self, name: &str) -> Option<&Interval> {
        self.ranges.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Interval)> {
        self.ranges.iter()
    }

    pub fn len(&self) -> usize {
        self.ranges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    /// Parses lines of the form `name in [lo, hi]`; `#` starts a comment.
    pub fn parse(text: &str) -> Result<RangeEnv> {
        let mut env = RangeEnv::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: &str| Error::Syntax {
                line: idx + 1,
                col: 1,
                message: msg.to_string(),
            };
            let (name, rest) = line
                .split_once(char::is_whitespace)
                .ok_or_else(|| bad("expected `name in [lo, hi]`"))?;
            let rest = rest.trim_start();
            let rest = rest
                .strip_prefix("in")
                .ok_or_else(|| bad("expected `in`"))?
                .trim();
            let inner = rest
                .strip_prefix('[')
                .and_then(|r| r.strip_suffix(']'))
                .ok_or_else(|| bad("expected `[lo, hi]`"))?;
            let (lo, hi) = inner
                .split_once(',')
                .ok_or_else(|| bad("expected `lo, hi`"))?;
            let lo = Rational::parse_literal(lo).map_err(|e| bad(&e.to_string()))?;
            let hi = Rational::parse_literal(hi).map_err(|e| bad(&e.to_string()))?;
            let iv = Interval::new(lo, hi).map_err(|e| bad(&e.to_string()))?;
            if !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(bad("invalid variable name"));
            }
            if env.ranges.insert(name.to_string(), iv).is_some() {
                return Err(bad(&format!("duplicate range for `{name}`")));
            }
        }
        Ok(env)
    }
}

/// A bound `ε >= 0` on `|float value - real value|`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ErrorBound {
    pub eps: Rational,
}

impl fmt::Display for ErrorBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e}", self.eps.to_f64())
    }
}

/// What the analysis knows about one variable or subterm.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarBounds {
    /// Range of the real-counterpart value.
    pub real: Interval,
    /// Range of the floating-point value.
    pub float: Interval,
    /// Bound on their difference.
    pub err: Rational,
}

impl VarBounds {
    pub fn enclosure(&self) -> Interval {
        self.real.hull(&self.float)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AnalysisEnv {
    vars: BTreeMap<String, VarBounds>,
}

impl AnalysisEnv {
    /// Program inputs: real and float values coincide, error 0.
    pub fn from_ranges(ranges: &RangeEnv) -> AnalysisEnv {
        AnalysisEnv {
            vars: ranges
                .iter()
                .map(|(k, iv)| {
                    (
                        k.clone(),
                        VarBounds {
                            real: iv.clone(),
                            float: iv.clone(),
                            err: Rational::zero(),
                        },
                    )
                })
                .collect(),
        }
    }

    pub fn get(&self, name: &str) -> Option<&VarBounds> {
        self.vars.get(name)
    }

    pub fn insert(&mut self, name: impl Into<String>, b: VarBounds) {
        self.vars.insert(name.into(), b);
    }
}

/// Range and error of `a` under `env`, following first-order propagation with
/// a correct-rounding half-ulp at the worst-case magnitude of each operation.
pub fn analyze(a: &FloatExpr, env: &AnalysisEnv, fmt: Format) -> Result<VarBounds> {
    match a {
        Arith::Const(c) => {
            let v = Interval::point(c.to_real());
            Ok(VarBounds {
                real: v.clone(),
                float: v,
                err: Rational::zero(),
            })
        }
        Arith::Var(v) => env
            .get(v)
            .cloned()
            .ok_or_else(|| Error::MissingRange(v.clone())),
        Arith::Op(ArithOp::Neg, args) => {
            let x = analyze(&args[0], env, fmt)?;
            Ok(VarBounds {
                real: x.real.neg(),
                float: x.float.neg(),
                err: x.err,
            })
        }
        Arith::Op(op, args) => {
            let x = analyze(&args[0], env, fmt)?;
            let y = analyze(&args[1], env, fmt)?;
            let real = Interval::apply(*op, &[x.real.clone(), y.real.clone()]);
            let float = Interval::apply(*op, &[x.float.clone(), y.float.clone()]).round(fmt)?;
            let propagated = match op {
                ArithOp::Mul => {
                    x.real.mag() * &y.err + y.real.mag() * &x.err + &x.err * &y.err
                }
                _ => &x.err + &y.err,
            };
            let half_ulp = ulp(&(real.mag() + &propagated), fmt) * Rational::new(1, 2);
            Ok(VarBounds {
                real,
                float,
                err: propagated + half_ulp,
            })
        }
    }
}

/// Encloses both the real-counterpart value and the float value of `a`.
pub fn analyze_range(a: &FloatExpr, ranges: &RangeEnv, fmt: Format) -> Result<Interval> {
    Ok(analyze(a, &AnalysisEnv::from_ranges(ranges), fmt)?.enclosure())
}

/// Sound bound on `|float(a) - real(a)|` over all in-range inputs.
pub fn analyze_error(a: &FloatExpr, ranges: &RangeEnv, fmt: Format) -> Result<ErrorBound> {
    Ok(ErrorBound {
        eps: analyze(a, &AnalysisEnv::from_ranges(ranges), fmt)?.err,
    })
}

/// Extends `env` with the bounds of each `let` binding, in order.
pub fn analyze_let_env<'a>(
    bindings: impl IntoIterator<Item = (&'a str, &'a FloatExpr)>,
    mut env: AnalysisEnv,
    fmt: Format,
) -> Result<AnalysisEnv> {
    for (name, value) in bindings {
        if let Some(v) = value.free_vars().into_iter().find(|v| env.get(v).is_none()) {
            return Err(Error::UnboundVariable(v));
        }
        let b = analyze(value, &env, fmt)?;
        env.insert(name, b);
    }
    Ok(env)
}
