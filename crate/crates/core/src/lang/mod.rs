//! Abstract syntax, concrete syntax, and real counterparts of programs.

mod ast;
mod json;
mod parser;
mod printer;

use std::collections::BTreeMap;

pub use ast::{
    Arith, BoolExpr, FloatBool, FloatExpr, Program, ProgramExpr, RealBool, RealExpr, RelOp,
};
pub use json::{arith_json, bool_json, program_json};
pub use parser::{parse_arith, parse_bool, parse_program};
pub use printer::{arith_to_string, bool_to_string, print_program, program_expr_to_string, ConstText};

use crate::error::{Error, Result};
use crate::fp::Rational;

/// The map χr from float-variable names to real-variable names.
///
/// Names without an explicit entry map to `r_<name>`. Explicit entries must
/// keep the whole map injective.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VarMap {
    explicit: BTreeMap<String, String>,
}

pub const REAL_PREFIX: &str = "r_";

impl VarMap {
    pub fn canonical() -> VarMap {
        VarMap::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (String, String)>) -> Result<VarMap> {
        let explicit: BTreeMap<String, String> = pairs.into_iter().collect();
        let mut images = BTreeMap::new();
        for (k, v) in &explicit {
            if let Some(prev) = images.insert(v.clone(), k.clone()) {
                return Err(Error::InvalidConfig(format!(
                    "variable map is not injective: `{prev}` and `{k}` both map to `{v}`"
                )));
            }
        }
        // An explicit image may not collide with the default image of another name.
        for (v, k) in &images {
            if let Some(orig) = v.strip_prefix(REAL_PREFIX) {
                if orig != k && !explicit.contains_key(orig) {
                    return Err(Error::InvalidConfig(format!(
                        "variable map is not injective: `{k}` maps to `{v}`, the default image of `{orig}`"
                    )));
                }
            }
        }
        Ok(VarMap { explicit })
    }

    pub fn real_name(&self, float_name: &str) -> String {
        self.explicit
            .get(float_name)
            .cloned()
            .unwrap_or_else(|| format!("{REAL_PREFIX}{float_name}"))
    }
}

/// R_A: constants through R, variables through χr, operators pointwise.
pub fn real_counterpart_arith(a: &FloatExpr, chi: &VarMap) -> RealExpr {
    match a {
        Arith::Const(f) => Arith::Const(f.to_real()),
        Arith::Var(v) => Arith::Var(chi.real_name(v)),
        Arith::Op(op, args) => Arith::Op(
            *op,
            args.iter().map(|x| real_counterpart_arith(x, chi)).collect(),
        ),
    }
}

/// R_B: the structural lift of [`real_counterpart_arith`].
pub fn real_counterpart_bool(b: &FloatBool, chi: &VarMap) -> RealBool {
    b.map_atoms(&mut |op, l, r| {
        BoolExpr::Rel(
            *op,
            real_counterpart_arith(l, chi),
            real_counterpart_arith(r, chi),
        )
    })
}

/// Evaluates a real expression under an exact valuation.
pub fn eval_real_arith(a: &RealExpr, env: &impl Fn(&str) -> Option<Rational>) -> Result<Rational> {
    match a {
        Arith::Const(c) => Ok(c.clone()),
        Arith::Var(v) => env(v).ok_or_else(|| Error::UnboundVariable(v.clone())),
        Arith::Op(op, args) => {
            let vals = args
                .iter()
                .map(|x| eval_real_arith(x, env))
                .collect::<Result<Vec<_>>>()?;
            Ok(op.apply_real(&vals))
        }
    }
}
