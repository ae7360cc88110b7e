//! Containment experiment: points at fixed distances from polygon edges,
//! evaluated with real, float and transformed-float winding numbers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analysis::{Interval, RangeEnv};
use crate::error::{Error, Result};
use crate::fp::{Format, Rational};
use crate::interp::Outcome;
use crate::polygon::{verdict_for_total, EdgeFunction, Point, Polygon, Verdict};

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub polygon: Polygon,
    /// Points sampled per band.
    pub points: usize,
    /// Distances to the sampled edge, as multiples of the polygon scale
    /// (half the side of the circumscribing square). Strictly decreasing.
    pub bands: Vec<f64>,
    /// Additional points drawn uniformly from the circumscribing square.
    pub square_points: usize,
    pub seed: u64,
    pub format: Format,
    /// Range of every input of the edge function.
    pub coordinate_range: (Rational, Rational),
}

pub const DEFAULT_BANDS: [f64; 4] = [1.0, 1e-8, 1e-10, 1e-12];

impl ExperimentConfig {
    pub fn new(polygon: Polygon, seed: u64) -> ExperimentConfig {
        let format = polygon.format();
        ExperimentConfig {
            polygon,
            points: 10_000,
            bands: DEFAULT_BANDS.to_vec(),
            square_points: 10_000,
            seed,
            format,
            coordinate_range: (Rational::from(-100), Rational::from(100)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.points == 0 {
            return bad("the point count must be positive".into());
        }
        if self.polygon.format() != self.format {
            return bad("the polygon was rounded to a different format".into());
        }
        for (i, d) in self.bands.iter().enumerate() {
            if !(d.is_finite() && *d > 0.0) {
                return bad(format!("band distance {d} is not positive"));
            }
            if i > 0 && *d >= self.bands[i - 1] {
                return bad("band distances must be strictly decreasing".into());
            }
        }
        let (lo, hi) = &self.coordinate_range;
        Interval::new(lo.clone(), hi.clone())?;
        // Every sampled point must stay inside the analysed ranges.
        let reach = Rational::from_f64_exact(self.bands.first().copied().unwrap_or(0.0)) * self.polygon.scale()
            * Rational::from(2);
        let (x0, y0, x1, y1) = self.polygon.bounding_box();
        let (c0, c1) = (lo.clone() + reach.clone(), hi.clone() - reach);
        if x0 < c0 || y0 < c0 || x1 > c1 || y1 > c1 {
            return bad("polygon plus band distances leave the coordinate range".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct BandReport {
    /// Relative distance; `None` for the circumscribing-square sample.
    pub distance: Option<f64>,
    pub points: usize,
    /// Transformed, original and real verdicts all equal (no warning).
    pub agreements: usize,
    pub warnings: usize,
    /// Warnings where some edge's original run was unstable.
    pub true_warnings: usize,
    pub false_warnings: usize,
    pub false_warning_fraction: f64,
    pub warning_rate: f64,
    /// Points where some edge's original run was unstable.
    pub unstable_points: usize,
    /// Original float verdict differs from the real verdict.
    pub original_errors: usize,
    /// Transformed verdict is not a warning and differs from the real one.
    pub transformed_errors: usize,
    /// Edge runs whose transformed output is a value but either differs from
    /// the original float output or comes from an unstable original run.
    pub edge_violations: usize,
}

impl BandReport {
    fn finish(&mut self) {
        self.false_warning_fraction = if self.warnings == 0 {
            0.0
        } else {
            self.false_warnings as f64 / self.warnings as f64
        };
        self.warning_rate = self.warnings as f64 / self.points as f64;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub seed: u64,
    pub format: String,
    pub vertices: usize,
    pub bands: Vec<BandReport>,
    pub square: Option<BandReport>,
}

/// Outcome of all three evaluations at one point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PointResult {
    pub real: Verdict,
    pub original: Verdict,
    pub transformed: Verdict,
    pub unstable: bool,
    pub edge_violations: usize,
}

pub fn evaluate_point(f: &EdgeFunction, poly: &Polygon, p: Point) -> Result<PointResult> {
    let (mut real, mut orig, mut trans) = (0i64, 0i64, Some(0i64));
    let mut unstable = false;
    let mut edge_violations = 0;
    let int = |r: Rational| -> Result<i64> {
        if !r.is_integer() {
            return Err(Error::PreconditionViolated(format!("edge contribution {r} is not an integer")));
        }
        num_traits::ToPrimitive::to_i64(&r.round_to_integer())
            .ok_or_else(|| Error::PreconditionViolated("edge contribution overflows".into()))
    };
    for (v, w) in poly.edges() {
        let run = f.run_edge(v, w, p)?;
        unstable |= run.original.is_unstable();
        let (Outcome::Value(r), Outcome::Value(o)) = (&run.original.real_output, &run.original.float_output)
        else {
            return Err(Error::PreconditionViolated("the original edge function warned".into()));
        };
        real += int(r.clone())?;
        orig += int(o.to_real())?;
        match &run.transformed {
            Outcome::Value(t) => {
                if t != o || run.original.is_unstable() {
                    edge_violations += 1;
                }
                let c = int(t.to_real())?;
                trans = trans.map(|s| s + c);
            }
            Outcome::Warning => trans = None,
        }
    }
    Ok(PointResult {
        real: verdict_for_total(real),
        original: verdict_for_total(orig),
        transformed: trans.map_or(Verdict::Warning, verdict_for_total),
        unstable,
        edge_violations,
    })
}

fn tally(report: &mut BandReport, r: &PointResult) {
    report.points += 1;
    if r.transformed == Verdict::Warning {
        report.warnings += 1;
        if r.unstable {
            report.true_warnings += 1;
        } else {
            report.false_warnings += 1;
        }
    } else {
        if r.transformed == r.original && r.original == r.real {
            report.agreements += 1;
        }
        if r.transformed != r.real {
            report.transformed_errors += 1;
        }
    }
    if r.unstable {
        report.unstable_points += 1;
    }
    if r.original != r.real {
        report.original_errors += 1;
    }
    report.edge_violations += r.edge_violations;
}

/// Generator for point `index` of stream `stream`; independent of the order
/// in which points are evaluated.
fn point_rng(seed: u64, stream: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((stream << 40) | index);
    rng
}

/// A point at distance `dist` from a random edge: uniform along the edge,
/// pushed along the unit normal to a random side, then moved along the edge
/// by up to `dist`.
pub fn sample_near_edge<R: Rng>(rng: &mut R, poly: &Polygon, dist: &Rational, fmt: Format) -> Result<Point> {
    let edges: Vec<(Point, Point)> = poly.edges().collect();
    let (v, w) = edges[rng.gen_range(0..edges.len())];
    let ((vx, vy), (wx, wy)) = (v.real(), w.real());
    let (dx, dy) = (wx - vx.clone(), wy - vy.clone());
    let len = dx.to_f64().hypot(dy.to_f64());
    let (ux, uy) = (
        Rational::from_f64_exact(dx.to_f64() / len),
        Rational::from_f64_exact(dy.to_f64() / len),
    );
    let t = Rational::from_f64_exact(rng.gen::<f64>());
    let side = if rng.gen::<bool>() { Rational::one() } else { -Rational::one() };
    let slide = Rational::from_f64_exact(rng.gen_range(-1.0..=1.0)) * dist.clone();
    let off = side * dist.clone();
    // Normal (uy, -ux), tangent (ux, uy).
    let x = vx + t.clone() * dx + off.clone() * uy.clone() + slide.clone() * ux.clone();
    let y = vy + t * dy - off * ux + slide * uy;
    Point::from_reals(&x, &y, fmt)
}

pub fn sample_in_square<R: Rng>(rng: &mut R, poly: &Polygon, fmt: Format) -> Result<Point> {
    let (x0, y0, x1, y1) = poly.bounding_box();
    let half = poly.scale();
    let half_of = Rational::new(1, 2);
    let (cx, cy) = ((x0 + x1) * half_of.clone(), (y0 + y1) * half_of);
    let mut coord = |c: Rational| {
        let u = Rational::from_f64_exact(rng.gen_range(-1.0..=1.0));
        c + u * half.clone()
    };
    let x = coord(cx);
    let y = coord(cy);
    Point::from_reals(&x, &y, fmt)
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let fmt = cfg.format;
    let names = ["vx", "vy", "wx", "wy", "px", "py"];
    let ranges = RangeEnv::uniform(names, cfg.coordinate_range.0.clone(), cfg.coordinate_range.1.clone())?;
    let f = EdgeFunction::new(crate::corpus::winding_number_edge(fmt), ranges)?;
    let poly = &cfg.polygon;
    let scale = poly.scale();
    let mut bands = Vec::with_capacity(cfg.bands.len());
    for (b, d) in cfg.bands.iter().enumerate() {
        let dist = Rational::from_f64_exact(*d) * scale.clone();
        let mut rep = BandReport {
            distance: Some(*d),
            ..BandReport::default()
        };
        for i in 0..cfg.points {
            let mut rng = point_rng(cfg.seed, b as u64 + 1, i as u64);
            let p = sample_near_edge(&mut rng, poly, &dist, fmt)?;
            tally(&mut rep, &evaluate_point(&f, poly, p)?);
        }
        rep.finish();
        bands.push(rep);
    }
    let square = if cfg.square_points > 0 {
        let mut rep = BandReport::default();
        for i in 0..cfg.square_points {
            let mut rng = point_rng(cfg.seed, 0, i as u64);
            let p = sample_in_square(&mut rng, poly, fmt)?;
            tally(&mut rep, &evaluate_point(&f, poly, p)?);
        }
        rep.finish();
        Some(rep)
    } else {
        None
    };
    Ok(ExperimentReport {
        seed: cfg.seed,
        format: fmt.to_string(),
        vertices: poly.vertices().len(),
        bands,
        square,
    })
}
