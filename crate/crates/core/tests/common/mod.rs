#![allow(dead_code)]

pub mod golden;

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stabguard::abstraction::{beta_minus, beta_plus};
use stabguard::analysis::RangeEnv;
use stabguard::fp::{ArithOp, Float, Format, Rational};
use stabguard::interp::{
    classify_run, eval_float, eval_float_arith, eval_float_bool, eval_real_bool,
    full_valuation, AssignmentPair, Outcome,
};
use stabguard::lang::{
    real_counterpart_bool, Arith, BoolExpr, FloatBool, FloatExpr, Program,
    ProgramExpr, RelOp, VarMap,
};
use stabguard::transform::atom_errors;
use stabguard::semantics::{eval_real_output, ConditionalTuple, TupleSet};

pub const D: Format = Format::DOUBLE;

pub fn fl(x: f64) -> Float {
    Float::from_f64(x, D).unwrap()
}

pub fn uniform_ranges(names: &[&str], lo: i64, hi: i64) -> RangeEnv {
    RangeEnv::uniform(names.iter().copied(), Rational::from(lo), Rational::from(hi)).unwrap()
}

/// Native binary64 evaluation, independent of the float model.
pub fn native(a: &FloatExpr, env: &BTreeMap<String, f64>) -> f64 {
    match a {
        Arith::Const(c) => c.to_f64(),
        Arith::Var(v) => env[v],
        Arith::Op(op, args) => {
            let x: Vec<f64> = args.iter().map(|e| native(e, env)).collect();
            match op {
                ArithOp::Add => x[0] + x[1],
                ArithOp::Sub => x[0] - x[1],
                ArithOp::Mul => x[0] * x[1],
                ArithOp::Neg => -x[0],
            }
        }
    }
}

fn inlined_terms(p: &Program) -> Vec<FloatExpr> {
    let mut defs: BTreeMap<String, FloatExpr> = BTreeMap::new();
    for (var, value) in p.body.let_bindings() {
        let v = value.substitute(&|n| defs.get(n).cloned());
        defs.insert(var.to_string(), v);
    }
    let mut out: Vec<FloatExpr> = Vec::new();
    for g in p.body.guards() {
        for (_, l, r) in g.atoms() {
            let t = Arith::sub(l.clone(), r.clone()).substitute(&|n| defs.get(n).cloned());
            if !t.free_vars().is_empty() && !out.contains(&t) {
                out.push(t);
            }
        }
    }
    out
}

fn bounds(ranges: &RangeEnv, name: &str) -> (f64, f64) {
    let iv = ranges.get(name).unwrap();
    (iv.lo().to_f64(), iv.hi().to_f64())
}

fn nudge(x: f64, steps: i32) -> f64 {
    let mut x = x;
    for _ in 0..steps.unsigned_abs() {
        x = if steps > 0 { x.next_up() } else { x.next_down() };
    }
    x
}

pub fn uniform_native<R: Rng>(rng: &mut R, p: &Program, ranges: &RangeEnv) -> Vec<f64> {
    p.params
        .iter()
        .map(|x| {
            let (lo, hi) = bounds(ranges, x);
            rng.gen_range(lo..=hi)
        })
        .collect()
}

/// Inputs concentrated where guard atoms change sign: uniform start, then
/// bisection on one coordinate toward the zero set of a random atom, then
/// a few ulps of jitter. Some draws copy one input onto another so that
/// differences vanish exactly.
pub fn hard_inputs<R: Rng>(rng: &mut R, p: &Program, ranges: &RangeEnv) -> Vec<Float> {
    hard_native(rng, p, ranges, &inlined_terms(p)).into_iter().map(fl).collect()
}

fn hard_native<R: Rng>(rng: &mut R, p: &Program, ranges: &RangeEnv, terms: &[FloatExpr]) -> Vec<f64> {
    let mut x = uniform_native(rng, p, ranges);
    let n = x.len();
    let roll: f64 = rng.gen();
    if roll < 0.15 && n > 1 {
        let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n));
        x[i] = x[j];
    } else if roll < 0.9 && !terms.is_empty() {
        let t = &terms[rng.gen_range(0..terms.len())];
        let fv = t.free_vars();
        let cand: Vec<usize> = (0..n).filter(|i| fv.contains(&p.params[*i])).collect();
        let k = cand[rng.gen_range(0..cand.len())];
        let (lo, hi) = bounds(ranges, &p.params[k]);
        let eval = |x: &[f64]| {
            let env: BTreeMap<String, f64> = p.params.iter().cloned().zip(x.iter().copied()).collect();
            native(t, &env)
        };
        let mut a = x.clone();
        let mut b = x.clone();
        b[k] = rng.gen_range(lo..=hi);
        let (fa, fb) = (eval(&a), eval(&b));
        if fa.signum() != fb.signum() && fa.is_finite() && fb.is_finite() {
            for _ in 0..80 {
                let mut m = a.clone();
                m[k] = 0.5 * (a[k] + b[k]);
                if m[k] == a[k] || m[k] == b[k] {
                    break;
                }
                if eval(&m).signum() == fa.signum() {
                    a = m;
                } else {
                    b = m;
                }
            }
            x = if rng.gen() { a } else { b };
        }
        for (i, v) in x.iter_mut().enumerate() {
            if rng.gen_bool(0.5) {
                let (lo, hi) = bounds(ranges, &p.params[i]);
                *v = nudge(*v, rng.gen_range(-3..=3)).clamp(lo, hi);
            }
        }
    }
    x
}

/// Half uniform, half near guard boundaries.
pub fn mixed_inputs<R: Rng>(rng: &mut R, p: &Program, ranges: &RangeEnv) -> Vec<Float> {
    if rng.gen_bool(0.5) {
        uniform_native(rng, p, ranges).into_iter().map(fl).collect()
    } else {
        hard_inputs(rng, p, ranges)
    }
}

pub const GEN_PARAMS: [&str; 3] = ["x", "y", "z"];

fn gen_arith<R: Rng>(rng: &mut R, depth: u32, vars: &[String]) -> FloatExpr {
    if depth == 0 || rng.gen_bool(0.3) {
        if rng.gen_bool(0.8) {
            Arith::var(vars[rng.gen_range(0..vars.len())].clone())
        } else {
            let c = [0.5, 1.0, 2.0, 3.0, 0.1, 1.5, 0.3][rng.gen_range(0..7)];
            Arith::Const(fl(if rng.gen() { c } else { -c }))
        }
    } else {
        let a = gen_arith(rng, depth - 1, vars);
        match rng.gen_range(0..7) {
            0 => Arith::neg(a),
            1 | 2 => Arith::add(a, gen_arith(rng, depth - 1, vars)),
            3 | 4 => Arith::sub(a, gen_arith(rng, depth - 1, vars)),
            _ => Arith::mul(a, gen_arith(rng, depth - 1, vars)),
        }
    }
}

fn gen_guard<R: Rng>(rng: &mut R, depth: u32, vars: &[String]) -> FloatBool {
    if depth == 0 || rng.gen_bool(0.5) {
        let op = [RelOp::Lt, RelOp::Le, RelOp::Gt, RelOp::Ge][rng.gen_range(0..4)];
        let a = gen_arith(rng, 2, vars);
        let zero = Arith::Const(Float::zero(D));
        if rng.gen_bool(0.8) {
            BoolExpr::rel(op, a, zero)
        } else {
            BoolExpr::rel(op, zero, a)
        }
    } else {
        let a = gen_guard(rng, depth - 1, vars);
        match rng.gen_range(0..3) {
            0 => BoolExpr::not(a),
            1 => BoolExpr::and(a, gen_guard(rng, depth - 1, vars)),
            _ => BoolExpr::or(a, gen_guard(rng, depth - 1, vars)),
        }
    }
}

fn gen_body<R: Rng>(rng: &mut R, nest: u32, vars: &[String]) -> ProgramExpr {
    if nest == 0 || rng.gen_bool(0.35) {
        return ProgramExpr::Arith(gen_arith(rng, 2, vars));
    }
    if rng.gen_bool(0.5) {
        ProgramExpr::if2(
            gen_guard(rng, 2, vars),
            gen_body(rng, nest - 1, vars),
            gen_body(rng, nest - 1, vars),
        )
    } else {
        let k = rng.gen_range(2..=3);
        let branches = (0..k)
            .map(|_| (gen_guard(rng, 2, vars), gen_body(rng, nest - 1, vars)))
            .collect();
        ProgramExpr::if_n(branches, gen_body(rng, nest - 1, vars))
    }
}

/// A random program over `x, y, z` with at most three nested conditionals
/// and sign-test guards, sometimes with a leading `let`.
pub fn random_program<R: Rng>(rng: &mut R, id: usize) -> Program {
    let params: Vec<String> = GEN_PARAMS.iter().map(|s| s.to_string()).collect();
    let mut vars = params.clone();
    let with_let = rng.gen_bool(0.3);
    if with_let {
        vars.push("u".into());
    }
    let mut body = gen_body(rng, 3, &vars);
    if body.conditional_count() == 0 {
        body = ProgramExpr::if2(
            gen_guard(rng, 2, &vars),
            body,
            ProgramExpr::Arith(gen_arith(rng, 2, &vars)),
        );
    }
    if with_let {
        body = ProgramExpr::let_in("u", gen_arith(rng, 2, &params), body);
    }
    Program::new(format!("gen{id}"), params, body, D).unwrap()
}

pub fn gen_ranges() -> RangeEnv {
    uniform_ranges(&GEN_PARAMS, -10, 10)
}

/// Checks the partition and instability-agreement properties on `n`
/// samples; returns how many runs were unstable.
pub fn check_partition(p: &Program, ranges: &RangeEnv, tuples: &TupleSet, n: usize, seed: u64) -> usize {
    let chi = VarMap::canonical();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut unstable = 0;
    for _ in 0..n {
        let vals = mixed_inputs(&mut rng, p, ranges);
        let pair = AssignmentPair::from_floats(&p.params, &vals, &chi);
        let (fe, re) = full_valuation(p, &pair, &chi).unwrap();
        let matching: Vec<&ConditionalTuple> = tuples
            .iter()
            .filter(|t| {
                eval_real_bool(&t.real_cond, &re).unwrap() && eval_float_bool(&t.float_cond, &fe, D).unwrap()
            })
            .collect();
        assert_eq!(matching.len(), 1, "inputs {:?}", vals);
        let t = matching[0];
        let run = classify_run(p, &pair, &chi).unwrap();
        assert_eq!(t.flag, run.classification);
        if run.is_unstable() {
            unstable += 1;
        }
        let real_out = eval_real_output(t, &|v| re.get(v).cloned()).unwrap();
        match (&run.real_output, real_out) {
            (Outcome::Value(a), Some(b)) => assert_eq!(*a, b),
            (Outcome::Warning, None) => {}
            other => panic!("real output mismatch {other:?}"),
        }
        match (&run.float_output, &t.float_out) {
            (Outcome::Value(a), Some(e)) => assert_eq!(*a, eval_float_arith(e, &fe, D).unwrap()),
            (Outcome::Warning, None) => {}
            other => panic!("float output mismatch {other:?}"),
        }
    }
    unstable
}

#[derive(Debug, Default, PartialEq, Eq)]
pub struct Tally {
    pub runs: usize,
    pub unstable: usize,
    pub warnings: usize,
    pub violations: usize,
}

/// Runs the original and the transformed program side by side; a value
/// from the transformed program on an unstable run, or one that differs
/// from the original, is a violation.
pub fn differential(p: &Program, t: &Program, ranges: &RangeEnv, n: usize, seed: u64) -> Tally {
    let chi = VarMap::canonical();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tally = Tally::default();
    for _ in 0..n {
        let vals = mixed_inputs(&mut rng, p, ranges);
        let pair = AssignmentPair::from_floats(&p.params, &vals, &chi);
        let run = classify_run(p, &pair, &chi).unwrap();
        let (out, _) = eval_float(t, &pair.float).unwrap();
        tally.runs += 1;
        tally.unstable += run.is_unstable() as usize;
        match out {
            Outcome::Warning => tally.warnings += 1,
            Outcome::Value(v) => {
                if run.is_unstable() || run.float_output != Outcome::Value(v) {
                    tally.violations += 1;
                }
            }
        }
    }
    tally
}

pub fn float_env(names: &[String], vals: &[Float]) -> BTreeMap<String, Float> {
    names.iter().cloned().zip(vals.iter().copied()).collect()
}

pub fn real_env(names: &[String], vals: &[Float]) -> BTreeMap<String, Rational> {
    let chi = VarMap::canonical();
    names.iter().map(|n| chi.real_name(n)).zip(vals.iter().map(Float::to_real)).collect()
}

/// Over `n` samples, counts for every guard of `p` the times β⁺ held while
/// the float guard or its real counterpart was false, plus the times β⁻
/// held while either was true. Also counts samples where both held.
pub fn check_properties(p: &Program, ranges: &RangeEnv, n: usize, seed: u64) -> (usize, usize) {
    let chi = VarMap::canonical();
    let errs = atom_errors(p, ranges).unwrap();
    let guards: Vec<_> = p
        .body
        .guards()
        .into_iter()
        .map(|g| {
            (
                g.clone(),
                real_counterpart_bool(g, &chi),
                beta_plus(g, &errs, D).unwrap(),
                beta_minus(g, &errs, D).unwrap(),
            )
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut violations, mut both) = (0, 0);
    for _ in 0..n {
        let vals = mixed_inputs(&mut rng, p, ranges);
        let pair = AssignmentPair::from_floats(&p.params, &vals, &chi);
        let (fe, re) = full_valuation(p, &pair, &chi).unwrap();
        for (g, rg, bp, bm) in &guards {
            let gf = eval_float_bool(g, &fe, D).unwrap();
            let gr = eval_real_bool(rg, &re).unwrap();
            let hp = eval_float_bool(bp, &fe, D).unwrap();
            let hm = eval_float_bool(bm, &fe, D).unwrap();
            if hp && !(gf && gr) {
                violations += 1;
            }
            if hm && (gf || gr) {
                violations += 1;
            }
            if hp && hm {
                both += 1;
            }
        }
    }
    (violations, both)
}

/// Exact value of a finite double as `m · 2^e`.
pub fn dyadic(x: f64) -> (BigInt, i32) {
    assert!(x.is_finite(), "non-finite value {x}");
    if x == 0.0 {
        return (BigInt::zero(), 0);
    }
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = (bits & ((1 << 52) - 1)) as i64;
    let (m, e) = if exp == 0 { (frac, -1074) } else { (frac | (1 << 52), exp - 1075) };
    (BigInt::from(if x < 0.0 { -m } else { m }), e)
}

fn align(a: (BigInt, i32), b: (BigInt, i32)) -> (BigInt, BigInt, i32) {
    let e = a.1.min(b.1);
    ((a.0 << (a.1 - e) as usize), (b.0 << (b.1 - e) as usize), e)
}

/// Exact real value of `a` on double inputs, in integer arithmetic on
/// `m · 2^e` pairs.
pub fn exact_dyadic(a: &FloatExpr, env: &BTreeMap<String, f64>) -> (BigInt, i32) {
    match a {
        Arith::Const(c) => dyadic(c.to_f64()),
        Arith::Var(v) => dyadic(env[v]),
        Arith::Op(op, args) => {
            let x: Vec<(BigInt, i32)> = args.iter().map(|e| exact_dyadic(e, env)).collect();
            let mut it = x.into_iter();
            let first = it.next().unwrap();
            match op {
                ArithOp::Neg => (-first.0, first.1),
                ArithOp::Mul => {
                    let second = it.next().unwrap();
                    (first.0 * second.0, first.1 + second.1)
                }
                ArithOp::Add | ArithOp::Sub => {
                    let (p, q, e) = align(first, it.next().unwrap());
                    (if *op == ArithOp::Add { p + q } else { p - q }, e)
                }
            }
        }
    }
}

/// Largest |float − real| seen over `n` samples, half uniform and half
/// near the zero set of `a`. The float side is native binary64; the real
/// side is exact integer arithmetic.
pub fn observed_error(a: &FloatExpr, names: &[String], ranges: &RangeEnv, n: usize, seed: u64) -> Rational {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zero = Arith::Const(Float::zero(D));
    let body = ProgramExpr::if2(
        BoolExpr::rel(RelOp::Gt, a.clone(), zero),
        ProgramExpr::Arith(a.clone()),
        ProgramExpr::Arith(a.clone()),
    );
    let p = Program::new("e", names.to_vec(), body, D).unwrap();
    let terms = inlined_terms(&p);
    let mut worst = (BigInt::zero(), 0);
    for _ in 0..n {
        let vals: Vec<f64> = if rng.gen_bool(0.5) {
            uniform_native(&mut rng, &p, ranges)
        } else {
            hard_native(&mut rng, &p, ranges, &terms)
        };
        let env: BTreeMap<String, f64> = names.iter().cloned().zip(vals).collect();
        let f = dyadic(native(a, &env));
        let (x, y, e) = align(f, exact_dyadic(a, &env));
        let d = (x - y).abs();
        let (w, d, e) = align(worst.clone(), (d, e));
        if d > w {
            worst = (d, e);
        }
    }
    Rational::dyadic(worst.0, worst.1 as i64)
}

/// Exact even-odd ray casting; `None` on the boundary.
pub fn ray_cast(poly: &[(Rational, Rational)], px: &Rational, py: &Rational) -> Option<bool> {
    let n = poly.len();
    let mut inside = false;
    for i in 0..n {
        let (ax, ay) = &poly[i];
        let (bx, by) = &poly[(i + 1) % n];
        let cross = (bx.clone() - ax.clone()) * (py.clone() - ay.clone())
            - (by.clone() - ay.clone()) * (px.clone() - ax.clone());
        let within_x = ax.clone().min(bx.clone()) <= *px && *px <= ax.clone().max(bx.clone());
        let within_y = ay.clone().min(by.clone()) <= *py && *py <= ay.clone().max(by.clone());
        if cross.is_zero() && within_x && within_y {
            return None;
        }
        if (*ay > *py) != (*by > *py) {
            // x of the edge at height py, compared without division.
            let lhs = (px.clone() - ax.clone()) * (by.clone() - ay.clone());
            let rhs = (py.clone() - ay.clone()) * (bx.clone() - ax.clone());
            let left_of = if by > ay { lhs < rhs } else { lhs > rhs };
            if left_of {
                inside = !inside;
            }
        }
    }
    Some(inside)
}
