use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{ConvexPolytope, Vec2};
use crate::error::{invalid, Result};

/// Unit vector in the plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Direction(Vec2);

impl Direction {
    /// Normalizes `v`; fails on zero or non-finite input.
    pub fn new(v: Vec2) -> Result<Self> {
        let n = v.norm();
        if !n.is_finite() || n == 0.0 {
            return Err(invalid(format!("cannot normalize direction {v:?}")));
        }
        Ok(Self(v / n))
    }

    pub fn from_angle(theta: f64) -> Self {
        Self(Vec2::new(theta.cos(), theta.sin()))
    }

    #[inline]
    pub fn as_vec(&self) -> &Vec2 {
        &self.0
    }

    #[inline]
    pub fn into_vec(self) -> Vec2 {
        self.0
    }
}

/// What a direction grid discretizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridKind {
    /// Directions for the supporting points of reachable sets (and 2-D targets).
    Reach,
    /// The two scalar directions ±1 of an interval control set, embedded as `(±1, 0)`.
    Control1D,
    /// Directions for a planar control set; same formula as [`GridKind::Reach`].
    Control2D,
}

/// Finite set of unit directions discretizing the circle.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectionGrid {
    kind: GridKind,
    directions: Vec<Direction>,
}

/// Builds a direction grid.
///
/// Planar grids use `l^k = (cos 2π(k-1)/(count-1), sin 2π(k-1)/(count-1))`,
/// `k = 1..count`, so the last entry repeats the first. Interval control grids
/// are `{-1, +1}` and only exist for `count == 2`.
pub fn unit_directions(count: usize, kind: GridKind) -> Result<DirectionGrid> {
    if count < 2 {
        return Err(invalid(format!("direction count must be at least 2, got {count}")));
    }
    let directions = match kind {
        GridKind::Reach | GridKind::Control2D => {
            let denom = (count - 1) as f64;
            (0..count)
                .map(|k| Direction::from_angle(2.0 * PI * k as f64 / denom))
                .collect()
        }
        GridKind::Control1D => {
            if count != 2 {
                return Err(invalid(format!(
                    "an interval control grid has exactly 2 directions, got {count}"
                )));
            }
            (1..=count)
                .map(|r| Direction(Vec2::new(-1.0 + 2.0 * (r as f64 - 1.0), 0.0)))
                .collect()
        }
    };
    Ok(DirectionGrid { kind, directions })
}

impl DirectionGrid {
    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    /// Number of distinct directions; planar grids end with a repeat of the first.
    pub fn distinct(&self) -> usize {
        match self.kind {
            GridKind::Control1D => self.directions.len(),
            GridKind::Reach | GridKind::Control2D => self.directions.len() - 1,
        }
    }

    pub fn directions(&self) -> &[Direction] {
        &self.directions
    }

    pub fn get(&self, k: usize) -> Option<&Direction> {
        self.directions.get(k)
    }

    /// True when the directions run counterclockwise by angle, which lets
    /// supporting points be extracted in one sweep around a polygon.
    pub(crate) fn is_angularly_sorted(&self) -> bool {
        matches!(self.kind, GridKind::Reach | GridKind::Control2D)
    }

    /// Hausdorff distance between the unit disk and the polygon spanned by the
    /// grid. For a uniform planar grid with `count` entries this is
    /// `1 - cos(π/(count-1))`.
    pub fn ball_gap(&self) -> f64 {
        let pts: Vec<Vec2> = self.directions.iter().map(|d| d.0).collect();
        let hull = ConvexPolytope::from_points(&pts).expect("grid is nonempty");
        hull.hausdorff_to_ball(&Vec2::zeros(), 1.0)
    }
}
