//! Bundled example programs, ranges and polygon.

use crate::analysis::RangeEnv;
use crate::error::Result;
use crate::fp::Format;
use crate::lang::{parse_program, Program};
use crate::polygon::Polygon;

pub const EPS_LINE: &str = include_str!("../corpus/eps_line.sfp");
pub const EPS_LINE_RANGES: &str = include_str!("../corpus/eps_line.ranges");
pub const WINDING_NUMBER_EDGE: &str = include_str!("../corpus/winding_number_edge.sfp");
/// The edge function with the published clockwise test, kept for comparison.
pub const WINDING_NUMBER_EDGE_AS_PUBLISHED: &str =
    include_str!("../corpus/winding_number_edge_as_published.sfp");
pub const WINDING_NUMBER_EDGE_RANGES: &str = include_str!("../corpus/winding_number_edge.ranges");
pub const HEXAGON: &str = include_str!("../corpus/hexagon.json");

pub fn eps_line(fmt: Format) -> Program {
    parse_program(EPS_LINE, fmt).expect("bundled program parses")
}

pub fn eps_line_ranges() -> RangeEnv {
    RangeEnv::parse(EPS_LINE_RANGES).expect("bundled ranges parse")
}

pub fn winding_number_edge(fmt: Format) -> Program {
    parse_program(WINDING_NUMBER_EDGE, fmt).expect("bundled program parses")
}

pub fn winding_number_edge_as_published(fmt: Format) -> Program {
    parse_program(WINDING_NUMBER_EDGE_AS_PUBLISHED, fmt).expect("bundled program parses")
}

pub fn winding_number_edge_ranges() -> RangeEnv {
    RangeEnv::parse(WINDING_NUMBER_EDGE_RANGES).expect("bundled ranges parse")
}

/// Regular hexagon with circumradius 1 centred at the origin, rotated so
/// that no edge is parallel to an axis.
pub fn hexagon(fmt: Format) -> Result<Polygon> {
    Polygon::from_json(HEXAGON, fmt)
}
