//! Collecting semantics: the set of conditional tuples of a program, covering
//! every stable and unstable combination of real and float paths.

mod sat;

use std::collections::BTreeMap;

use indexmap::IndexSet;
use serde_json::{json, Value};

use crate::analysis::{analyze_let_env, AnalysisEnv, RangeEnv};
use crate::error::{Error, Result};
use crate::fp::{Format, Rational};
use crate::lang::{
    arith_to_string, bool_to_string, real_counterpart_bool, Arith,
    BoolExpr, FloatBool, FloatExpr, Program, ProgramExpr, RealBool, RealExpr, VarMap,
};

pub use sat::{is_possibly_sat, SatContext, DEFAULT_BUDGET};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Flag {
    Stable,
    Unstable,
}

impl Flag {
    pub fn symbol(&self) -> &'static str {
        match self {
            Flag::Stable => "s",
            Flag::Unstable => "u",
        }
    }
}

/// `⟨η, η̃, r, r̃⟩_t`. `None` outputs stand for the warning output ⊥u.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ConditionalTuple {
    pub real_cond: RealBool,
    pub float_cond: FloatBool,
    pub real_out: Option<RealExpr>,
    pub float_out: Option<FloatExpr>,
    pub flag: Flag,
}

impl ConditionalTuple {
    pub fn stable(real_out: Option<RealExpr>, float_out: Option<FloatExpr>) -> Self {
        ConditionalTuple {
            real_cond: BoolExpr::True,
            float_cond: BoolExpr::True,
            real_out,
            float_out,
            flag: Flag::Stable,
        }
    }

    pub fn to_json(&self, fmt: Format) -> Value {
        let out = |s: Option<String>| s.unwrap_or_else(|| "warning".to_string());
        json!({
            "real_cond": bool_to_string(&self.real_cond, fmt),
            "float_cond": bool_to_string(&self.float_cond, fmt),
            "real_out": out(self.real_out.as_ref().map(|r| arith_to_string(r, fmt))),
            "float_out": out(self.float_out.as_ref().map(|r| arith_to_string(r, fmt))),
            "flag": match self.flag {
                Flag::Stable => "stable",
                Flag::Unstable => "unstable",
            },
        })
    }
}

/// A finite set of conditional tuples without syntactic duplicates, kept in
/// insertion order for reproducible output.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TupleSet {
    tuples: IndexSet<ConditionalTuple>,
}

impl TupleSet {
    pub fn new() -> TupleSet {
        TupleSet::default()
    }

    pub fn singleton(t: ConditionalTuple) -> TupleSet {
        let mut s = TupleSet::new();
        s.insert(t);
        s
    }

    pub fn insert(&mut self, t: ConditionalTuple) -> bool {
        self.tuples.insert(t)
    }

    pub fn union(&mut self, other: TupleSet) {
        self.tuples.extend(other.tuples);
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ConditionalTuple> {
        self.tuples.iter()
    }

    pub fn count(&self, flag: Flag) -> usize {
        self.tuples.iter().filter(|t| t.flag == flag).count()
    }

    fn stable(&self) -> impl Iterator<Item = &ConditionalTuple> {
        self.tuples.iter().filter(|t| t.flag == Flag::Stable)
    }

    pub fn to_json(&self, fmt: Format) -> Value {
        Value::Array(self.tuples.iter().map(|t| t.to_json(fmt)).collect())
    }
}

impl<'a> IntoIterator for &'a TupleSet {
    type Item = &'a ConditionalTuple;
    type IntoIter = indexmap::set::Iter<'a, ConditionalTuple>;
    fn into_iter(self) -> Self::IntoIter {
        self.tuples.iter()
    }
}

/// Maps let-bound float variables to the tuples of their definitions. The
/// empty environment maps every variable to the empty set.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SemEnv {
    vars: BTreeMap<String, TupleSet>,
}

impl SemEnv {
    pub fn bottom() -> SemEnv {
        SemEnv::default()
    }

    pub fn get(&self, name: &str) -> Option<&TupleSet> {
        self.vars.get(name).filter(|s| !s.is_empty())
    }

    pub fn bind(&self, name: &str, tuples: TupleSet) -> SemEnv {
        let mut e = self.clone();
        e.vars.insert(name.to_string(), tuples);
        e
    }
}

/// Knobs for [`semantics`].
#[derive(Clone, Debug)]
pub struct SemConfig {
    pub chi: VarMap,
    /// Drop tuples whose condition is refuted.
    pub prune: bool,
    /// Enclosures for interval refutation, when ranges are known.
    pub sat: Option<SatContext>,
    /// Largest tuple count any intermediate set may reach.
    pub cap: usize,
}

pub const DEFAULT_TUPLE_CAP: usize = 100_000;

impl Default for SemConfig {
    fn default() -> Self {
        SemConfig {
            chi: VarMap::canonical(),
            prune: true,
            sat: None,
            cap: DEFAULT_TUPLE_CAP,
        }
    }
}

impl SemConfig {
    pub fn without_pruning() -> SemConfig {
        SemConfig {
            prune: false,
            ..SemConfig::default()
        }
    }

    /// Pruning with interval refutation over `ranges`, let-bound variables
    /// included.
    pub fn with_ranges(p: &Program, ranges: &RangeEnv) -> Result<SemConfig> {
        let env = analyze_let_env(
            p.body.let_bindings(),
            AnalysisEnv::from_ranges(ranges),
            p.format,
        )?;
        let mut names: Vec<String> = p.params.clone();
        names.extend(p.body.let_bindings().into_iter().map(|(n, _)| n.to_string()));
        let chi = VarMap::canonical();
        Ok(SemConfig {
            sat: Some(SatContext::from_analysis(&env, &names, &chi, p.format)),
            chi,
            ..SemConfig::default()
        })
    }

    fn possibly_sat(&self, eta: &RealBool, eta_f: &FloatBool) -> bool {
        !self.prune || is_possibly_sat(eta, eta_f, self.sat.as_ref())
    }

    fn check_cap(&self, n: usize) -> Result<()> {
        if n > self.cap {
            Err(Error::TupleCapExceeded(self.cap))
        } else {
            Ok(())
        }
    }
}

/// `c ↓ (b, b̃)`: conjoins the guards onto `c`, or `None` when the combined
/// condition is refuted.
pub fn propagate_condition(
    b: &RealBool,
    b_f: &FloatBool,
    c: &ConditionalTuple,
    cfg: &SemConfig,
) -> Option<ConditionalTuple> {
    let real_cond = BoolExpr::and_simplified(c.real_cond.clone(), b.clone());
    let float_cond = BoolExpr::and_simplified(c.float_cond.clone(), b_f.clone());
    if !cfg.possibly_sat(&real_cond, &float_cond) {
        return None;
    }
    Some(ConditionalTuple {
        real_cond,
        float_cond,
        real_out: c.real_out.clone(),
        float_out: c.float_out.clone(),
        flag: c.flag,
    })
}

fn propagate_set(b: &RealBool, b_f: &FloatBool, set: &TupleSet, cfg: &SemConfig, out: &mut TupleSet) {
    for c in set {
        if let Some(t) = propagate_condition(b, b_f, c, cfg) {
            out.insert(t);
        }
    }
}

/// Selector of branch `i` in an if/elsif chain: `B_i ∧ ¬B_{i-1} ∧ ... ∧ ¬B_1`,
/// or the conjunction of all negations for the final else branch.
fn chain<A: Clone>(guards: &[BoolExpr<A>], i: usize) -> BoolExpr<A> {
    let negs = guards[..i].iter().map(|g| BoolExpr::not(g.clone()));
    if i < guards.len() {
        BoolExpr::conjunction(std::iter::once(guards[i].clone()).chain(negs))
    } else {
        BoolExpr::conjunction(negs)
    }
}

/// Unstable tuples pairing the real side of branch `i` with the float side of
/// branch `j`, under the real selector of `i` and the float selector of `j`.
fn crossed(
    si: &TupleSet,
    sj: &TupleSet,
    real_sel: &RealBool,
    float_sel: &FloatBool,
    cfg: &SemConfig,
    out: &mut TupleSet,
) -> Result<()> {
    for a in si.stable() {
        for b in sj.stable() {
            let t = ConditionalTuple {
                real_cond: a.real_cond.clone(),
                float_cond: b.float_cond.clone(),
                real_out: a.real_out.clone(),
                float_out: b.float_out.clone(),
                flag: Flag::Unstable,
            };
            if let Some(t) = propagate_condition(real_sel, float_sel, &t, cfg) {
                out.insert(t);
                cfg.check_cap(out.len())?;
            }
        }
    }
    Ok(())
}

fn conditional(
    guards_f: &[FloatBool],
    bodies: &[&ProgramExpr],
    env: &SemEnv,
    cfg: &SemConfig,
) -> Result<TupleSet> {
    let guards_r: Vec<RealBool> = guards_f
        .iter()
        .map(|g| real_counterpart_bool(g, &cfg.chi))
        .collect();
    let sems = bodies
        .iter()
        .map(|b| semantics(b, env, cfg))
        .collect::<Result<Vec<_>>>()?;
    let n = bodies.len();
    let real_sel: Vec<RealBool> = (0..n).map(|i| chain(&guards_r, i)).collect();
    let float_sel: Vec<FloatBool> = (0..n).map(|i| chain(guards_f, i)).collect();
    let mut out = TupleSet::new();
    for i in 0..n {
        propagate_set(&real_sel[i], &float_sel[i], &sems[i], cfg, &mut out);
    }
    cfg.check_cap(out.len())?;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                crossed(&sems[i], &sems[j], &real_sel[i], &float_sel[j], cfg, &mut out)?;
            }
        }
    }
    Ok(out)
}

/// The tuple set of `s` under `env`.
pub fn semantics(s: &ProgramExpr, env: &SemEnv, cfg: &SemConfig) -> Result<TupleSet> {
    match s {
        ProgramExpr::Warning => Ok(TupleSet::singleton(ConditionalTuple::stable(None, None))),
        ProgramExpr::Arith(a) => arith_semantics(a, env, cfg),
        ProgramExpr::Let { var, value, body } => {
            let bound = arith_semantics(value, env, cfg)?;
            semantics(body, &env.bind(var, bound), cfg)
        }
        ProgramExpr::If {
            guard,
            then_branch,
            else_branch,
        } => conditional(
            std::slice::from_ref(guard),
            &[then_branch, else_branch],
            env,
            cfg,
        ),
        ProgramExpr::IfN {
            branches,
            else_branch,
        } => {
            let guards: Vec<FloatBool> = branches.iter().map(|(g, _)| g.clone()).collect();
            let mut bodies: Vec<&ProgramExpr> = branches.iter().map(|(_, b)| b).collect();
            bodies.push(else_branch);
            conditional(&guards, &bodies, env, cfg)
        }
    }
}

fn arith_semantics(a: &FloatExpr, env: &SemEnv, cfg: &SemConfig) -> Result<TupleSet> {
    match a {
        Arith::Const(c) => Ok(TupleSet::singleton(ConditionalTuple::stable(
            Some(Arith::Const(c.to_real())),
            Some(a.clone()),
        ))),
        Arith::Var(v) => Ok(match env.get(v) {
            Some(set) => set.clone(),
            None => TupleSet::singleton(ConditionalTuple::stable(
                Some(Arith::Var(cfg.chi.real_name(v))),
                Some(a.clone()),
            )),
        }),
        Arith::Op(op, args) => {
            let operands = args
                .iter()
                .map(|x| arith_semantics(x, env, cfg))
                .collect::<Result<Vec<_>>>()?;
            // Partial combinations: (real cond, float cond, real args, float args).
            type Partial = (RealBool, FloatBool, Vec<RealExpr>, Vec<FloatExpr>);
            let mut acc: Vec<Partial> = vec![(BoolExpr::True, BoolExpr::True, vec![], vec![])];
            for set in &operands {
                let mut next = Vec::new();
                for (rc, fc, rs, fs) in &acc {
                    for t in set.stable() {
                        let (Some(r), Some(f)) = (&t.real_out, &t.float_out) else {
                            continue;
                        };
                        let rc2 = BoolExpr::and_simplified(rc.clone(), t.real_cond.clone());
                        let fc2 = BoolExpr::and_simplified(fc.clone(), t.float_cond.clone());
                        let mut rs2 = rs.clone();
                        rs2.push(r.clone());
                        let mut fs2 = fs.clone();
                        fs2.push(f.clone());
                        next.push((rc2, fc2, rs2, fs2));
                        cfg.check_cap(next.len())?;
                    }
                }
                acc = next;
            }
            let mut out = TupleSet::new();
            for (rc, fc, rs, fs) in acc {
                if !cfg.possibly_sat(&rc, &fc) {
                    continue;
                }
                out.insert(ConditionalTuple {
                    real_cond: rc,
                    float_cond: fc,
                    real_out: Some(Arith::Op(*op, rs)),
                    float_out: Some(Arith::Op(*op, fs)),
                    flag: Flag::Stable,
                });
            }
            Ok(out)
        }
    }
}

/// Semantics of a whole program body under the empty environment.
pub fn program_semantics(p: &Program, cfg: &SemConfig) -> Result<TupleSet> {
    semantics(&p.body, &SemEnv::bottom(), cfg)
}

/// Evaluates a tuple's real output (`None` for ⊥u).
pub fn eval_real_output(
    t: &ConditionalTuple,
    env: &impl Fn(&str) -> Option<Rational>,
) -> Result<Option<Rational>> {
    t.real_out
        .as_ref()
        .map(|r| crate::lang::eval_real_arith(r, env))
        .transpose()
}
