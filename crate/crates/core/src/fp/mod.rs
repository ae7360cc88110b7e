//! Floating-point model: formats, canonical floats, exact rationals, and
//! correctly rounded execution.

mod float;
mod rational;

pub use float::{
    exec_op, format_float, round_down, round_nearest, round_up, roundoff_error, ulp, ArithOp,
    Float, Format,
};
pub use rational::Rational;
