//! Ready-made query patterns.

use crate::error::Result;
use crate::geometry::{QueryPattern, Vec2};

/// Unit of [`EINSTEIN_CROSS`] coordinates, in degrees.
pub const EINSTEIN_CROSS_UNIT: f64 = 1e-5;

/// Images A, B, C, D of the Q2237+030 lensed quasar in units of
/// [`EINSTEIN_CROSS_UNIT`], with A at the origin and C on the x axis.
///
/// The six catalogued separations are given to four significant digits and
/// do not fit a planar configuration exactly; these positions are their
/// least-squares fit and reproduce each separation within 2.3e-4 relative.
pub const EINSTEIN_CROSS: [(f64, f64); 4] = [
    (0.0, 0.0),
    (0.76128525, 2.14194769),
    (0.92005816, 0.0),
    (-1.85987646, 2.02241894),
];

/// The Einstein cross in degrees, elements in order A, B, C, D, without
/// attributes.
pub fn einstein_cross(epsilon: f64) -> Result<QueryPattern> {
    QueryPattern::build(&einstein_cross_at(Vec2::new(0.0, 0.0)), &[], epsilon, 0.0)
}

/// The Einstein cross images with A at `origin`.
pub fn einstein_cross_at(origin: Vec2) -> Vec<Vec2> {
    EINSTEIN_CROSS
        .iter()
        .map(|&(x, y)| Vec2::new(origin.x + x * EINSTEIN_CROSS_UNIT, origin.y + y * EINSTEIN_CROSS_UNIT))
        .collect()
}
