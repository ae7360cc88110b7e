//! Expected transformed programs, written out independently of the
//! transformer.

use stabguard::analysis::analyze_error;
use stabguard::corpus;
use stabguard::fp::{format_float, round_up};
use stabguard::lang::{parse_arith, parse_program, Program};
use stabguard::transform::atom_errors;

use super::D;

pub fn expected_eps_line() -> Program {
    let ranges = corpus::eps_line_ranges();
    let x = "sx * vy - sy * vx";
    let eps = analyze_error(&parse_arith(x, D).unwrap(), &ranges, D).unwrap().eps;
    let e = format_float(&round_up(&eps, D).unwrap(), D);
    let text = format!(
        "fun eps_line(vx, vy, sx, sy) =
           if {x} > {e} then 1
           elsif {x} < -{e} then -1
           elsif {x} >= {e} and {x} <= -{e} then 0
           else warning"
    );
    parse_program(&text, D).unwrap()
}

pub fn eps_text(p: &Program, atom: &str) -> String {
    let errs = atom_errors(p, &corpus::winding_number_edge_ranges()).unwrap();
    let a = parse_arith(atom, D).unwrap();
    let e = &errs.get(&a).expect("atom has an error bound").eps;
    format_float(&round_up(e, D).unwrap(), D)
}

fn quad(pattern: [&str; 4], e: &[String; 4]) -> String {
    let names = ["tx", "ty", "nx", "ny"];
    let parts: Vec<String> = (0..4)
        .map(|i| match pattern[i] {
            ">=" => format!("{} >= {}", names[i], e[i]),
            "<=" => format!("{} <= -{}", names[i], e[i]),
            "<" => format!("{} < -{}", names[i], e[i]),
            ">" => format!("{} > {}", names[i], e[i]),
            other => panic!("{other}"),
        })
        .collect();
    parts.join(" and ")
}

fn plus(ds: &[[&str; 4]; 4], e: &[String; 4]) -> String {
    ds.iter().map(|d| format!("({})", quad(*d, e))).collect::<Vec<_>>().join(" or ")
}

/// β⁻ of a disjunction of sign-test conjunctions, spelled out by hand.
fn minus(ds: &[[&str; 4]; 4], e: &[String; 4]) -> String {
    let names = ["tx", "ty", "nx", "ny"];
    let groups: Vec<String> = ds
        .iter()
        .map(|d| {
            let lits: Vec<String> = (0..4)
                .map(|i| match d[i] {
                    ">=" => format!("{} < -{}", names[i], e[i]),
                    "<=" => format!("{} > {}", names[i], e[i]),
                    other => panic!("{other}"),
                })
                .collect();
            format!("({})", lits.join(" or "))
        })
        .collect();
    format!("({})", groups.join(" and "))
}

pub const SAME: [[&str; 4]; 4] = [
    [">=", ">=", ">=", ">="],
    ["<=", ">=", "<=", ">="],
    [">=", "<=", ">=", "<="],
    ["<=", "<=", "<=", "<="],
];
pub const CTR: [[&str; 4]; 4] = [
    [">=", "<=", ">=", ">="],
    [">=", ">=", "<=", ">="],
    ["<=", ">=", "<=", "<="],
    ["<=", "<=", ">=", "<="],
];
pub const CLOCK_PUBLISHED: [[&str; 4]; 4] = [
    [">=", ">=", ">=", "<="],
    ["<=", ">=", "<=", ">="],
    ["<=", "<=", "<=", ">="],
    [">=", "<=", "<=", "<="],
];
pub const CLOCK: [[&str; 4]; 4] = [
    [">=", ">=", ">=", "<="],
    ["<=", ">=", ">=", ">="],
    ["<=", "<=", "<=", ">="],
    [">=", "<=", "<=", "<="],
];

pub fn expected_winding(p: &Program, clock: &[[&str; 4]; 4]) -> Program {
    let e = [
        eps_text(p, "tx"),
        eps_text(p, "ty"),
        eps_text(p, "nx"),
        eps_text(p, "ny"),
    ];
    let det = "(nx - tx) * ty - (ny - ty) * tx";
    let ed = eps_text(p, det);
    let same_p = plus(&SAME, &e);
    let same_m = minus(&SAME, &e);
    let ctr_p = plus(&CTR, &e);
    let ctr_m = minus(&CTR, &e);
    let clock_p = plus(clock, &e);
    let clock_m = minus(clock, &e);
    let text = format!(
        "fun winding_number_edge(vx, vy, wx, wy, px, py) =
           let tx = vx - px in let ty = vy - py in
           let nx = wx - px in let ny = wy - py in
           if {same_p} then 0
           elsif ({ctr_p}) and {same_m} then 1
           elsif ({clock_p}) and {ctr_m} and {same_m} then -1
           elsif {det} <= -{ed} and {clock_m} and {ctr_m} and {same_m} then 2
           elsif {det} > {ed} and {clock_m} and {ctr_m} and {same_m} then -2
           else warning"
    );
    parse_program(&text, D).unwrap()
}

