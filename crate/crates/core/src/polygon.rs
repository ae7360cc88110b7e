//! Polygons and winding-number containment built on the edge program.

use std::fmt;

use num_traits::ToPrimitive;
use serde::Serialize;

use crate::analysis::RangeEnv;
use crate::error::{Error, Result};
use crate::fp::{format_float, round_nearest, Float, Format, Rational};
use crate::interp::{classify_run, eval_float, eval_real, AssignmentPair, Outcome, RunReport};
use crate::lang::{Program, VarMap};
use crate::transform::transform_program;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Point {
    pub x: Float,
    pub y: Float,
}

impl Point {
    pub fn new(x: Float, y: Float) -> Point {
        Point { x, y }
    }

    /// Rounds exact coordinates to nearest in `fmt`.
    pub fn from_reals(x: &Rational, y: &Rational, fmt: Format) -> Result<Point> {
        Ok(Point {
            x: round_nearest(x, fmt)?,
            y: round_nearest(y, fmt)?,
        })
    }

    pub fn real(&self) -> (Rational, Rational) {
        (self.x.to_real(), self.y.to_real())
    }
}

/// A simple polygon; the last vertex connects back to the first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Polygon {
    vertices: Vec<Point>,
    format: Format,
}

fn orient(a: &(Rational, Rational), b: &(Rational, Rational), c: &(Rational, Rational)) -> i32 {
    let d = (b.0.clone() - a.0.clone()) * (c.1.clone() - a.1.clone())
        - (b.1.clone() - a.1.clone()) * (c.0.clone() - a.0.clone());
    d.signum()
}

/// `c` lies on the closed segment `ab`, given the three are collinear.
fn within(a: &(Rational, Rational), b: &(Rational, Rational), c: &(Rational, Rational)) -> bool {
    let between = |p: &Rational, q: &Rational, r: &Rational| {
        (p.clone().min(q.clone())) <= *r && *r <= p.clone().max(q.clone())
    };
    between(&a.0, &b.0, &c.0) && between(&a.1, &b.1, &c.1)
}

fn segments_meet(
    a: &(Rational, Rational),
    b: &(Rational, Rational),
    c: &(Rational, Rational),
    d: &(Rational, Rational),
) -> bool {
    let (o1, o2, o3, o4) = (orient(a, b, c), orient(a, b, d), orient(c, d, a), orient(c, d, b));
    if o1 != o2 && o3 != o4 && o1 * o2 <= 0 && o3 * o4 <= 0 && (o1 != 0 || o2 != 0) {
        return true;
    }
    (o1 == 0 && within(a, b, c))
        || (o2 == 0 && within(a, b, d))
        || (o3 == 0 && within(c, d, a))
        || (o4 == 0 && within(c, d, b))
}

impl Polygon {
    pub fn new(vertices: Vec<Point>, format: Format) -> Result<Polygon> {
        let n = vertices.len();
        if n < 3 {
            return Err(Error::InvalidPolygon(format!("{n} vertices; at least 3 are required")));
        }
        let pts: Vec<_> = vertices.iter().map(Point::real).collect();
        for i in 0..n {
            if pts[i] == pts[(i + 1) % n] {
                return Err(Error::InvalidPolygon(format!("vertex {i} repeats its successor")));
            }
        }
        for i in 0..n {
            let (a, b) = (&pts[i], &pts[(i + 1) % n]);
            for j in i + 1..n {
                let (c, d) = (&pts[j], &pts[(j + 1) % n]);
                let bad = if j == i + 1 {
                    // Shared vertex b == c: only b may be common.
                    orient(a, b, d) == 0 && (within(a, b, d) || within(c, d, a))
                } else if i == 0 && j == n - 1 {
                    orient(c, d, b) == 0 && (within(c, d, b) || within(a, b, c))
                } else {
                    segments_meet(a, b, c, d)
                };
                if bad {
                    return Err(Error::InvalidPolygon(format!("edges {i} and {j} intersect")));
                }
            }
        }
        Ok(Polygon { vertices, format })
    }

    /// Parses a JSON array of `["x", "y"]` decimal strings; each coordinate is
    /// read exactly and rounded to nearest.
    pub fn from_json(text: &str, format: Format) -> Result<Polygon> {
        let raw: Vec<[String; 2]> = serde_json::from_str(text)
            .map_err(|e| Error::InvalidPolygon(format!("expected an array of [x, y] strings: {e}")))?;
        let mut vs = Vec::with_capacity(raw.len());
        for [x, y] in &raw {
            let parse = |s: &str| {
                Rational::parse_literal(s.trim())
                    .map_err(|_| Error::InvalidPolygon(format!("bad coordinate `{s}`")))
            };
            vs.push(Point::from_reals(&parse(x)?, &parse(y)?, format)?);
        }
        Polygon::new(vs, format)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn format(&self) -> Format {
        self.format
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// `(min x, min y, max x, max y)`.
    pub fn bounding_box(&self) -> (Rational, Rational, Rational, Rational) {
        let mut it = self.vertices.iter().map(Point::real);
        let (x0, y0) = it.next().expect("non-empty");
        let init = (x0.clone(), y0.clone(), x0, y0);
        it.fold(init, |(a, b, c, d), (x, y)| {
            (a.min(x.clone()), b.min(y.clone()), c.max(x), d.max(y))
        })
    }

    /// Half the side of the circumscribing square.
    pub fn scale(&self) -> Rational {
        let (a, b, c, d) = self.bounding_box();
        (c - a).max(d - b) * Rational::new(1, 2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    OriginalFloat,
    Real,
    TransformedFloat,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Mode> {
        match s {
            "original-float" => Ok(Mode::OriginalFloat),
            "real" => Ok(Mode::Real),
            "transformed-float" => Ok(Mode::TransformedFloat),
            _ => Err(Error::InvalidConfig(format!("unknown mode `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Inside,
    Outside,
    Warning,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Inside => "inside",
            Verdict::Outside => "outside",
            Verdict::Warning => "warning",
        })
    }
}

/// A full turn around the point in either direction.
pub fn verdict_for_total(total: i64) -> Verdict {
    if total == 4 || total == -4 {
        Verdict::Inside
    } else {
        Verdict::Outside
    }
}

/// Both executions of the original edge program plus the float execution
/// of its transformation, for one edge and one point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeRun {
    pub original: RunReport,
    pub transformed: Outcome<Float>,
}

/// The edge program and its transformation under fixed input ranges.
#[derive(Clone, Debug)]
pub struct EdgeFunction {
    pub original: Program,
    pub transformed: Program,
    ranges: RangeEnv,
    chi: VarMap,
}

fn to_int(r: &Rational) -> Result<i64> {
    if !r.is_integer() {
        return Err(Error::PreconditionViolated(format!(
            "edge contribution {r} is not an integer"
        )));
    }
    r.round_to_integer()
        .to_i64()
        .ok_or_else(|| Error::PreconditionViolated(format!("edge contribution {r} is too large")))
}

impl EdgeFunction {
    /// The bundled edge program with its bundled ranges.
    pub fn bundled(fmt: Format) -> Result<EdgeFunction> {
        EdgeFunction::new(
            crate::corpus::winding_number_edge(fmt),
            crate::corpus::winding_number_edge_ranges(),
        )
    }

    /// `original` takes `(vx, vy, wx, wy, px, py)` in that order.
    pub fn new(original: Program, ranges: RangeEnv) -> Result<EdgeFunction> {
        if original.params.len() != 6 {
            return Err(Error::InvalidProgram(format!(
                "an edge function takes 6 parameters, `{}` takes {}",
                original.name,
                original.params.len()
            )));
        }
        let transformed = transform_program(&original, &ranges)?;
        Ok(EdgeFunction {
            original,
            transformed,
            ranges,
            chi: VarMap::canonical(),
        })
    }

    pub fn format(&self) -> Format {
        self.original.format
    }

    pub fn ranges(&self) -> &RangeEnv {
        &self.ranges
    }

    fn inputs(&self, v: Point, w: Point, p: Point) -> Result<AssignmentPair> {
        let vals = [v.x, v.y, w.x, w.y, p.x, p.y];
        for (name, f) in self.original.params.iter().zip(vals.iter()) {
            let iv = self.ranges.get(name).ok_or_else(|| Error::MissingRange(name.clone()))?;
            if !iv.contains(&f.to_real()) {
                return Err(Error::PreconditionViolated(format!(
                    "{name} = {} lies outside {iv}",
                    format_float(f, self.format())
                )));
            }
        }
        Ok(AssignmentPair::from_floats(&self.original.params, &vals, &self.chi))
    }

    pub fn run_edge(&self, v: Point, w: Point, p: Point) -> Result<EdgeRun> {
        let pair = self.inputs(v, w, p)?;
        let original = classify_run(&self.original, &pair, &self.chi)?;
        let (transformed, _) = eval_float(&self.transformed, &pair.float)?;
        Ok(EdgeRun {
            original,
            transformed,
        })
    }

    /// Sum of the edge contributions; `Warning` if any edge warns.
    pub fn winding_total(&self, poly: &Polygon, p: Point, mode: Mode) -> Result<Outcome<i64>> {
        let mut total = 0i64;
        let mut warned = false;
        for (v, w) in poly.edges() {
            let pair = self.inputs(v, w, p)?;
            let out = match mode {
                Mode::Real => eval_real(&self.original, &pair.real, &self.chi)?.0,
                Mode::OriginalFloat | Mode::TransformedFloat => {
                    let prog = if mode == Mode::OriginalFloat {
                        &self.original
                    } else {
                        &self.transformed
                    };
                    match eval_float(prog, &pair.float)?.0 {
                        Outcome::Value(f) => Outcome::Value(f.to_real()),
                        Outcome::Warning => Outcome::Warning,
                    }
                }
            };
            match out {
                Outcome::Value(r) => total += to_int(&r)?,
                Outcome::Warning => warned = true,
            }
        }
        Ok(if warned {
            Outcome::Warning
        } else {
            Outcome::Value(total)
        })
    }

    pub fn winding_number(&self, poly: &Polygon, p: Point, mode: Mode) -> Result<Verdict> {
        Ok(match self.winding_total(poly, p, mode)? {
            Outcome::Value(t) => verdict_for_total(t),
            Outcome::Warning => Verdict::Warning,
        })
    }
}

/// Containment of `p` using the bundled edge function and ranges.
pub fn winding_number(poly: &Polygon, p: Point, mode: Mode) -> Result<Verdict> {
    EdgeFunction::bundled(poly.format())?.winding_number(poly, p, mode)
}
