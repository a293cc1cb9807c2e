//! Planar convex set arithmetic.
//!
//! Everything the reachability pipeline needs from convex analysis lives here:
//! support functions and supporting points, Minkowski sums, linear images,
//! hulls, membership and the Hausdorff distance. Polytopes are stored as their
//! ordered extreme points; segments and single points are ordinary values and
//! every operation accepts them.
//!
//! All operations are pure, so shared references can be used from any number
//! of threads.

mod directions;
mod io;
mod polytope;

pub use directions::{unit_directions, Direction, DirectionGrid, GridKind};
pub use io::PolytopeJson;
pub use polytope::{convex_hull, hausdorff, minkowski_sum, Ball, ConvexPolytope, Degeneracy};

/// State-space vector.
pub type Vec2 = nalgebra::Vector2<f64>;
/// Real 2×2 matrix.
pub type Mat2 = nalgebra::Matrix2<f64>;

/// z-component of the cross product of two planar vectors.
#[inline]
pub fn cross(a: &Vec2, b: &Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Strict lexicographic order on (x, y).
#[inline]
pub(crate) fn lex_greater(a: &Vec2, b: &Vec2) -> bool {
    a.x > b.x || (a.x == b.x && a.y > b.y)
}
