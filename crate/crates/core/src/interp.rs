//! Dual interpreter: float execution, exact real execution, and the stability
//! classification of a run.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::analysis::{Interval, RangeEnv};
use crate::error::{Error, Result};
use crate::fp::{exec_op, format_float, round_down, round_nearest, round_up, Float, Format, Rational};
use crate::lang::{
    real_counterpart_arith, Arith, BoolExpr, FloatBool, FloatExpr, Program, ProgramExpr, RealBool,
    RealExpr, VarMap,
};
use crate::semantics::Flag;

/// Result of a run: a value or the warning output.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Outcome<T> {
    Value(T),
    Warning,
}

impl<T> Outcome<T> {
    pub fn is_warning(&self) -> bool {
        matches!(self, Outcome::Warning)
    }

    pub fn value(&self) -> Option<&T> {
        match self {
            Outcome::Value(v) => Some(v),
            Outcome::Warning => None,
        }
    }
}

/// Linked valuations `(σ, σ̃)` with `σ(χr(x)) = R(σ̃(x))` for every parameter.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AssignmentPair {
    pub float: BTreeMap<String, Float>,
    pub real: BTreeMap<String, Rational>,
}

impl AssignmentPair {
    /// Builds σ̃ from `values` and derives σ = R∘σ̃ through `chi`.
    pub fn from_floats(params: &[String], values: &[Float], chi: &VarMap) -> AssignmentPair {
        let float: BTreeMap<String, Float> = params.iter().cloned().zip(values.iter().copied()).collect();
        let real = float
            .iter()
            .map(|(k, v)| (chi.real_name(k), v.to_real()))
            .collect();
        AssignmentPair { float, real }
    }

    /// Checks the linking invariant for the given parameters.
    pub fn is_linked(&self, params: &[String], chi: &VarMap) -> bool {
        params.iter().all(|x| match (self.float.get(x), self.real.get(&chi.real_name(x))) {
            (Some(f), Some(r)) => f.to_real() == *r,
            _ => false,
        })
    }

    pub fn float_values(&self, params: &[String]) -> Vec<Float> {
        params.iter().map(|p| self.float[p]).collect()
    }

    pub fn to_json(&self, fmt: Format) -> Value {
        Value::Object(
            self.float
                .iter()
                .map(|(k, v)| (k.clone(), Value::String(format_float(v, fmt))))
                .collect(),
        )
    }
}

/// Parses `x=1.5,y=-2` into float values for `params`, in parameter order.
pub fn parse_input(text: &str, params: &[String], fmt: Format) -> Result<Vec<Float>> {
    let mut given = BTreeMap::new();
    for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("expected `name=value`, got `{part}`")))?;
        let r = Rational::parse_literal(v)?;
        if given.insert(k.trim().to_string(), round_nearest(&r, fmt)?).is_some() {
            return Err(Error::Parse(format!("`{}` given twice", k.trim())));
        }
    }
    let values = params
        .iter()
        .map(|p| given.remove(p).ok_or_else(|| Error::Parse(format!("no value for `{p}`"))))
        .collect::<Result<Vec<_>>>()?;
    if let Some(k) = given.keys().next() {
        return Err(Error::Parse(format!("`{k}` is not a parameter")));
    }
    Ok(values)
}

pub fn eval_float_arith(a: &FloatExpr, env: &BTreeMap<String, Float>, fmt: Format) -> Result<Float> {
    match a {
        Arith::Const(c) => Ok(*c),
        Arith::Var(v) => env.get(v).copied().ok_or_else(|| Error::UnboundVariable(v.clone())),
        Arith::Op(op, args) => {
            let vals = args
                .iter()
                .map(|x| eval_float_arith(x, env, fmt))
                .collect::<Result<Vec<_>>>()?;
            exec_op(*op, &vals, fmt)
        }
    }
}

pub fn eval_real_arith(a: &RealExpr, env: &BTreeMap<String, Rational>) -> Result<Rational> {
    crate::lang::eval_real_arith(a, &|v| env.get(v).cloned())
}

pub fn eval_float_bool(b: &FloatBool, env: &BTreeMap<String, Float>, fmt: Format) -> Result<bool> {
    Ok(match b {
        BoolExpr::True => true,
        BoolExpr::False => false,
        BoolExpr::And(x, y) => eval_float_bool(x, env, fmt)? && eval_float_bool(y, env, fmt)?,
        BoolExpr::Or(x, y) => eval_float_bool(x, env, fmt)? || eval_float_bool(y, env, fmt)?,
        BoolExpr::Not(x) => !eval_float_bool(x, env, fmt)?,
        BoolExpr::Rel(op, l, r) => {
            let (a, c) = (eval_float_arith(l, env, fmt)?, eval_float_arith(r, env, fmt)?);
            op.holds(a.cmp_value(&c))
        }
    })
}

pub fn eval_real_bool(b: &RealBool, env: &BTreeMap<String, Rational>) -> Result<bool> {
    Ok(match b {
        BoolExpr::True => true,
        BoolExpr::False => false,
        BoolExpr::And(x, y) => eval_real_bool(x, env)? && eval_real_bool(y, env)?,
        BoolExpr::Or(x, y) => eval_real_bool(x, env)? || eval_real_bool(y, env)?,
        BoolExpr::Not(x) => !eval_real_bool(x, env)?,
        BoolExpr::Rel(op, l, r) => {
            let (a, c) = (eval_real_arith(l, env)?, eval_real_arith(r, env)?);
            op.holds(a.cmp(&c))
        }
    })
}

/// The branches of a conditional node: guards and bodies, else body last.
fn branches(e: &ProgramExpr) -> Option<(Vec<&FloatBool>, Vec<&ProgramExpr>)> {
    match e {
        ProgramExpr::If {
            guard,
            then_branch,
            else_branch,
        } => Some((vec![guard], vec![then_branch, else_branch])),
        ProgramExpr::IfN {
            branches,
            else_branch,
        } => {
            let mut bodies: Vec<&ProgramExpr> = branches.iter().map(|(_, b)| b).collect();
            bodies.push(else_branch);
            Some((branches.iter().map(|(g, _)| g).collect(), bodies))
        }
        _ => None,
    }
}

/// Float execution; returns the output and the branch index taken at each
/// visited conditional.
pub fn eval_float(p: &Program, sigma: &BTreeMap<String, Float>) -> Result<(Outcome<Float>, Vec<usize>)> {
    let mut env = sigma.clone();
    let mut path = Vec::new();
    let mut e = &p.body;
    loop {
        match e {
            ProgramExpr::Arith(a) => return Ok((Outcome::Value(eval_float_arith(a, &env, p.format)?), path)),
            ProgramExpr::Warning => return Ok((Outcome::Warning, path)),
            ProgramExpr::Let { var, value, body } => {
                let v = eval_float_arith(value, &env, p.format)?;
                env.insert(var.clone(), v);
                e = body;
            }
            _ => {
                let (guards, bodies) = branches(e).expect("conditional");
                let mut taken = guards.len();
                for (i, g) in guards.iter().enumerate() {
                    if eval_float_bool(g, &env, p.format)? {
                        taken = i;
                        break;
                    }
                }
                path.push(taken);
                e = bodies[taken];
            }
        }
    }
}

/// Exact real execution of the real counterpart; `sigma` is keyed by real
/// variable names.
pub fn eval_real(
    p: &Program,
    sigma: &BTreeMap<String, Rational>,
    chi: &VarMap,
) -> Result<(Outcome<Rational>, Vec<usize>)> {
    let mut env = sigma.clone();
    let mut path = Vec::new();
    let mut e = &p.body;
    loop {
        match e {
            ProgramExpr::Arith(a) => {
                let v = eval_real_arith(&real_counterpart_arith(a, chi), &env)?;
                return Ok((Outcome::Value(v), path));
            }
            ProgramExpr::Warning => return Ok((Outcome::Warning, path)),
            ProgramExpr::Let { var, value, body } => {
                let v = eval_real_arith(&real_counterpart_arith(value, chi), &env)?;
                env.insert(chi.real_name(var), v);
                e = body;
            }
            _ => {
                let (guards, bodies) = branches(e).expect("conditional");
                let mut taken = guards.len();
                for (i, g) in guards.iter().enumerate() {
                    let rg = crate::lang::real_counterpart_bool(g, chi);
                    if eval_real_bool(&rg, &env)? {
                        taken = i;
                        break;
                    }
                }
                path.push(taken);
                e = bodies[taken];
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunReport {
    pub float_output: Outcome<Float>,
    pub real_output: Outcome<Rational>,
    pub float_path: Vec<usize>,
    pub real_path: Vec<usize>,
    pub classification: Flag,
}

impl RunReport {
    pub fn is_unstable(&self) -> bool {
        self.classification == Flag::Unstable
    }

    pub fn to_json(&self, fmt: Format) -> Value {
        json!({
            "float_output": match &self.float_output {
                Outcome::Value(f) => Value::String(format_float(f, fmt)),
                Outcome::Warning => Value::String("warning".into()),
            },
            "real_output": match &self.real_output {
                Outcome::Value(r) => Value::String(r.to_exact_decimal().unwrap_or_else(|| r.to_string())),
                Outcome::Warning => Value::String("warning".into()),
            },
            "float_path": self.float_path,
            "real_path": self.real_path,
            "classification": match self.classification {
                Flag::Stable => "stable",
                Flag::Unstable => "unstable",
            },
        })
    }
}

/// Runs both evaluators. A run is unstable when the two executions take a
/// different branch at some conditional they both visit; since both start
/// at the same node, that is exactly when the branch traces differ.
pub fn classify_run(p: &Program, pair: &AssignmentPair, chi: &VarMap) -> Result<RunReport> {
    if !pair.is_linked(&p.params, chi) {
        return Err(Error::PreconditionViolated(
            "real valuation is not the real counterpart of the float valuation".into(),
        ));
    }
    let (float_output, float_path) = eval_float(p, &pair.float)?;
    let (real_output, real_path) = eval_real(p, &pair.real, chi)?;
    let classification = if float_path == real_path {
        Flag::Stable
    } else {
        Flag::Unstable
    };
    Ok(RunReport {
        float_output,
        real_output,
        float_path,
        real_path,
        classification,
    })
}

/// Float and real values of every parameter and every `let` binding, for
/// evaluating path conditions that mention let-bound names.
pub fn full_valuation(
    p: &Program,
    pair: &AssignmentPair,
    chi: &VarMap,
) -> Result<(BTreeMap<String, Float>, BTreeMap<String, Rational>)> {
    let mut f = pair.float.clone();
    let mut r = pair.real.clone();
    for (var, value) in p.body.let_bindings() {
        let fv = eval_float_arith(value, &f, p.format)?;
        let rv = eval_real_arith(&real_counterpart_arith(value, chi), &r)?;
        f.insert(var.to_string(), fv);
        r.insert(chi.real_name(var), rv);
    }
    Ok((f, r))
}

/// A float drawn uniformly (by value) from `iv`, rounded into the format and
/// kept inside the interval.
pub fn sample_float<R: Rng>(rng: &mut R, iv: &Interval, fmt: Format) -> Result<Float> {
    let (lo, hi) = (iv.lo().to_f64(), iv.hi().to_f64());
    let x = if lo < hi { rng.gen_range(lo..=hi) } else { lo };
    clamp_float(&Rational::from_f64_exact(x), iv, fmt)
}

/// Nearest float to `r` that lies in `iv` (which must contain a float).
pub fn clamp_float(r: &Rational, iv: &Interval, fmt: Format) -> Result<Float> {
    let f = round_nearest(r, fmt)?;
    let v = f.to_real();
    if v < *iv.lo() {
        round_up(iv.lo(), fmt)
    } else if v > *iv.hi() {
        round_down(iv.hi(), fmt)
    } else {
        Ok(f)
    }
}

/// Uniform in-range float inputs for the parameters of `p`.
pub fn sample_inputs<R: Rng>(rng: &mut R, p: &Program, ranges: &RangeEnv) -> Result<Vec<Float>> {
    p.params
        .iter()
        .map(|x| {
            let iv = ranges.get(x).ok_or_else(|| Error::MissingRange(x.clone()))?;
            sample_float(rng, iv, p.format)
        })
        .collect()
}

/// Guard atoms as `lhs - rhs` (or `lhs` against 0) with let-bound variables
/// replaced by their definitions, so they depend on parameters only.
fn guard_atom_terms(p: &Program) -> Vec<FloatExpr> {
    let mut defs: BTreeMap<String, FloatExpr> = BTreeMap::new();
    for (var, value) in p.body.let_bindings() {
        let inlined = value.substitute(&|v| defs.get(v).cloned());
        defs.insert(var.to_string(), inlined);
    }
    let mut terms: Vec<FloatExpr> = Vec::new();
    for g in p.body.guards() {
        for (_, l, r) in g.atoms() {
            let t = match r {
                Arith::Const(c) if c.is_zero() => l.clone(),
                _ => Arith::sub(l.clone(), r.clone()),
            };
            let t = t.substitute(&|v| defs.get(v).cloned());
            if !t.free_vars().is_empty() && !terms.contains(&t) {
                terms.push(t);
            }
        }
    }
    terms
}

/// Searches for an assignment on which `p` takes an unstable path: uniform
/// samples mixed with bisection toward the zero set of a guard atom along one
/// coordinate, followed by small perturbations. Deterministic in `seed`.
pub fn find_unstable_input(
    p: &Program,
    ranges: &RangeEnv,
    budget: usize,
    seed: u64,
) -> Result<Option<AssignmentPair>> {
    let chi = VarMap::canonical();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let terms = guard_atom_terms(p);
    let fmt = p.format;
    let mut tried = 0usize;
    let attempt = |vals: &[Float], tried: &mut usize| -> Result<Option<AssignmentPair>> {
        *tried += 1;
        let pair = AssignmentPair::from_floats(&p.params, vals, &chi);
        match classify_run(p, &pair, &chi) {
            Ok(rep) if rep.is_unstable() => Ok(Some(pair)),
            Ok(_) | Err(Error::Overflow) => Ok(None),
            Err(e) => Err(e),
        }
    };
    while tried < budget {
        let base = sample_inputs(&mut rng, p, ranges)?;
        if let Some(w) = attempt(&base, &mut tried)? {
            return Ok(Some(w));
        }
        if terms.is_empty() {
            continue;
        }
        let term = &terms[rng.gen_range(0..terms.len())];
        let vars: Vec<usize> = p
            .params
            .iter()
            .enumerate()
            .filter(|(_, x)| term.free_vars().contains(*x))
            .map(|(i, _)| i)
            .collect();
        let k = vars[rng.gen_range(0..vars.len())];
        let iv = ranges.get(&p.params[k]).expect("sampled above");
        let mut other = base.clone();
        other[k] = sample_float(&mut rng, iv, fmt)?;
        let Some((a, b)) = bracket_zero(term, p, &base, &other, k, &chi)? else {
            continue;
        };
        let mut cand = base.clone();
        for x in [a, b] {
            cand[k] = x;
            if let Some(w) = attempt(&cand, &mut tried)? {
                return Ok(Some(w));
            }
            for _ in 0..8 {
                let mut jittered = cand.clone();
                for (i, v) in jittered.iter_mut().enumerate() {
                    let steps = rng.gen_range(-3i32..=3);
                    let iv = ranges.get(&p.params[i]).expect("sampled above");
                    *v = step_ulps(*v, steps, iv, fmt)?;
                }
                if let Some(w) = attempt(&jittered, &mut tried)? {
                    return Ok(Some(w));
                }
            }
        }
    }
    Ok(None)
}

fn step_ulps(mut v: Float, steps: i32, iv: &Interval, fmt: Format) -> Result<Float> {
    for _ in 0..steps.unsigned_abs() {
        let next = if steps > 0 { v.next_up(fmt)? } else { v.next_down(fmt)? };
        if !iv.contains(&next.to_real()) {
            break;
        }
        v = next;
    }
    Ok(v)
}

/// Bisects coordinate `k` between `lo_pt[k]` and `hi_pt[k]` (other
/// coordinates from `lo_pt`) to two adjacent floats across which the exact
/// value of `term` changes sign.
fn bracket_zero(
    term: &FloatExpr,
    p: &Program,
    lo_pt: &[Float],
    hi_pt: &[Float],
    k: usize,
    chi: &VarMap,
) -> Result<Option<(Float, Float)>> {
    let real = real_counterpart_arith(term, chi);
    let sign_at = |x: Float| -> Result<i32> {
        let mut vals = lo_pt.to_vec();
        vals[k] = x;
        let pair = AssignmentPair::from_floats(&p.params, &vals, chi);
        Ok(eval_real_arith(&real, &pair.real)?.signum())
    };
    let (mut a, mut b) = (lo_pt[k], hi_pt[k]);
    let (sa, sb) = (sign_at(a)?, sign_at(b)?);
    if sa == 0 {
        return Ok(Some((a, a)));
    }
    if sb == 0 {
        return Ok(Some((b, b)));
    }
    if sa == sb {
        return Ok(None);
    }
    for _ in 0..200 {
        let mid_r = (a.to_real() + b.to_real()) * Rational::new(1, 2);
        let mid = round_nearest(&mid_r, p.format)?;
        if mid == a || mid == b {
            break;
        }
        let sm = sign_at(mid)?;
        if sm == 0 {
            return Ok(Some((mid, mid)));
        }
        if sm == sa {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(Some((a, b)))
}

/// Inputs near the zero set of a random guard atom: a uniform point, one
/// coordinate bisected toward a sign change, then a few ulps of jitter.
/// Falls back to the uniform point when no sign change is bracketed.
pub fn sample_near_boundary<R: Rng>(rng: &mut R, p: &Program, ranges: &RangeEnv) -> Result<Vec<Float>> {
    let chi = VarMap::canonical();
    let base = sample_inputs(rng, p, ranges)?;
    let terms = guard_atom_terms(p);
    if terms.is_empty() {
        return Ok(base);
    }
    let term = &terms[rng.gen_range(0..terms.len())];
    let fv = term.free_vars();
    let vars: Vec<usize> = (0..p.params.len()).filter(|i| fv.contains(&p.params[*i])).collect();
    let k = vars[rng.gen_range(0..vars.len())];
    let iv = ranges.get(&p.params[k]).expect("sampled above");
    let mut other = base.clone();
    other[k] = sample_float(rng, iv, p.format)?;
    let Some((a, b)) = bracket_zero(term, p, &base, &other, k, &chi)? else {
        return Ok(base);
    };
    let mut cand = base;
    cand[k] = if rng.gen() { a } else { b };
    for (i, v) in cand.iter_mut().enumerate() {
        if rng.gen_bool(0.5) {
            let iv = ranges.get(&p.params[i]).expect("sampled above");
            *v = step_ulps(*v, rng.gen_range(-3i32..=3), iv, p.format)?;
        }
    }
    Ok(cand)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct DifferentialReport {
    pub trials: usize,
    pub unstable: usize,
    pub warnings: usize,
    /// Runs where the transformed program returned a value although the
    /// original run was unstable or produced a different value.
    pub violations: usize,
}

/// Runs `original` and `transformed` on `trials` seeded inputs, half
/// uniform and half near guard boundaries. Runs that overflow are skipped.
pub fn differential_check(
    original: &Program,
    transformed: &Program,
    ranges: &RangeEnv,
    trials: usize,
    seed: u64,
) -> Result<DifferentialReport> {
    if original.params != transformed.params {
        return Err(Error::PreconditionViolated("the two programs take different parameters".into()));
    }
    let chi = VarMap::canonical();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = DifferentialReport::default();
    for i in 0..trials {
        let vals = if i % 2 == 0 {
            sample_inputs(&mut rng, original, ranges)?
        } else {
            sample_near_boundary(&mut rng, original, ranges)?
        };
        let pair = AssignmentPair::from_floats(&original.params, &vals, &chi);
        let run = match classify_run(original, &pair, &chi) {
            Err(Error::Overflow) => continue,
            r => r?,
        };
        let out = match eval_float(transformed, &pair.float) {
            Err(Error::Overflow) => continue,
            r => r?.0,
        };
        rep.trials += 1;
        rep.unstable += run.is_unstable() as usize;
        match out {
            Outcome::Warning => rep.warnings += 1,
            Outcome::Value(v) => {
                if run.is_unstable() || run.float_output != Outcome::Value(v) {
                    rep.violations += 1;
                }
            }
        }
    }
    Ok(rep)
}
