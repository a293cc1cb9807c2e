use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::{cross, lex_greater, Direction, DirectionGrid, Mat2, Vec2};
use crate::error::{invalid, Result};

/// Relative tolerance for discarding collinear hull vertices.
const COLLINEAR_RTOL: f64 = 1e-12;
/// Relative tolerance under which two support values count as tied.
const TIE_RTOL: f64 = 1e-12;
/// Below this many vertices a brute-force scan beats the angular walks.
const WALK_THRESHOLD: usize = 16;

/// Affine dimension of a polytope.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Degeneracy {
    Full,
    Segment,
    Point,
}

/// Compact convex polygon given by its extreme points.
///
/// Vertices run counterclockwise starting at the lexicographically smallest
/// one. A segment stores its two endpoints, a point stores one vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexPolytope {
    vertices: Vec<Vec2>,
    degeneracy: Degeneracy,
    /// Largest absolute coordinate; sets the scale of the tie tolerance.
    magnitude: f64,
}

/// Closed Euclidean disk.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vec2,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Vec2, radius: f64) -> Result<Self> {
        if !(radius >= 0.0 && radius.is_finite()) || !center.iter().all(|c| c.is_finite()) {
            return Err(invalid(format!("bad ball: center {center:?}, radius {radius}")));
        }
        Ok(Self { center, radius })
    }

    pub fn support_value(&self, l: &Vec2) -> f64 {
        l.dot(&self.center) + self.radius * l.norm()
    }

    pub fn supporting_point(&self, l: &Direction) -> Vec2 {
        self.center + self.radius * l.as_vec()
    }

    pub fn contains(&self, x: &Vec2, tol: f64) -> bool {
        (x - self.center).norm() <= self.radius + tol
    }
}

/// Convex hull of a finite point set (Andrew's monotone chain).
///
/// Points within a relative tolerance of a hull edge are dropped, so the result
/// has no collinear vertices. Fails on empty or non-finite input.
pub fn convex_hull(points: &[Vec2]) -> Result<ConvexPolytope> {
    if points.is_empty() {
        return Err(invalid("convex hull of an empty point set"));
    }
    if let Some(p) = points.iter().find(|p| !(p.x.is_finite() && p.y.is_finite())) {
        return Err(invalid(format!("non-finite point {p:?}")));
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();

    let (mut lo, mut hi) = (pts[0], pts[0]);
    let mut magnitude: f64 = 0.0;
    for p in &pts {
        lo = lo.inf(p);
        hi = hi.sup(p);
        magnitude = magnitude.max(p.x.abs()).max(p.y.abs());
    }
    let extent = (hi - lo).max();
    if pts.len() == 1 || extent <= 1e-14 * magnitude {
        return Ok(ConvexPolytope::from_raw(vec![pts[0]], Degeneracy::Point));
    }

    let tol = COLLINEAR_RTOL * extent * extent;
    let turns_left = |a: &Vec2, b: &Vec2, c: &Vec2| cross(&(b - a), &(c - a)) > tol;
    let mut hull: Vec<Vec2> = Vec::with_capacity(pts.len() + 1);
    for p in &pts {
        while hull.len() >= 2 && !turns_left(&hull[hull.len() - 2], &hull[hull.len() - 1], p) {
            hull.pop();
        }
        hull.push(*p);
    }
    let lower_len = hull.len() + 1;
    for p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len
            && !turns_left(&hull[hull.len() - 2], &hull[hull.len() - 1], p)
        {
            hull.pop();
        }
        hull.push(*p);
    }
    hull.pop();

    let degeneracy = match hull.len() {
        1 => Degeneracy::Point,
        2 => Degeneracy::Segment,
        _ => Degeneracy::Full,
    };
    Ok(ConvexPolytope::from_raw(hull, degeneracy))
}

/// Minkowski sum `P ⊕ Q`, merging the edge sequences by polar angle.
///
/// Fails only if the sum overflows to non-finite coordinates.
pub fn minkowski_sum(p: &ConvexPolytope, q: &ConvexPolytope) -> Result<ConvexPolytope> {
    if p.vertices.len() == 1 {
        return q.translate(&p.vertices[0]);
    }
    if q.vertices.len() == 1 {
        return p.translate(&q.vertices[0]);
    }
    let a = p.rotated_to_bottom();
    let b = q.rotated_to_bottom();
    let (na, nb) = (a.len(), b.len());
    let edge = |v: &[Vec2], i: usize| v[(i + 1) % v.len()] - v[i % v.len()];

    let mut out = Vec::with_capacity(na + nb + 1);
    let (mut i, mut j) = (0, 0);
    out.push(a[0] + b[0]);
    while i < na || j < nb {
        if i == na {
            j += 1;
        } else if j == nb {
            i += 1;
        } else {
            match polar_cmp(&edge(&a, i), &edge(&b, j)) {
                Ordering::Less => i += 1,
                Ordering::Greater => j += 1,
                Ordering::Equal => {
                    i += 1;
                    j += 1;
                }
            }
        }
        out.push(a[i % na] + b[j % nb]);
    }
    convex_hull(&out)
}

/// Hausdorff distance between two polytopes.
pub fn hausdorff(p: &ConvexPolytope, q: &ConvexPolytope) -> f64 {
    let one_sided = |a: &ConvexPolytope, b: &ConvexPolytope| {
        a.vertices.iter().map(|v| b.distance(v)).fold(0.0, f64::max)
    };
    one_sided(p, q).max(one_sided(q, p))
}

/// Orders nonzero vectors by polar angle in `[0, 2π)`.
fn polar_cmp(a: &Vec2, b: &Vec2) -> Ordering {
    let half = |v: &Vec2| u8::from(v.y < 0.0 || (v.y == 0.0 && v.x < 0.0));
    half(a).cmp(&half(b)).then_with(|| {
        let c = cross(a, b);
        if c > 0.0 {
            Ordering::Less
        } else if c < 0.0 {
            Ordering::Greater
        } else {
            Ordering::Equal
        }
    })
}

fn segment_distance(x: &Vec2, a: &Vec2, b: &Vec2) -> f64 {
    let d = b - a;
    let len2 = d.norm_squared();
    if len2 == 0.0 {
        return (x - a).norm();
    }
    let t = ((x - a).dot(&d) / len2).clamp(0.0, 1.0);
    // endpoints exactly, the projection can round off them
    (x - (a + t * d)).norm().min((x - a).norm()).min((x - b).norm())
}

impl ConvexPolytope {
    fn from_raw(vertices: Vec<Vec2>, degeneracy: Degeneracy) -> Self {
        let magnitude = vertices
            .iter()
            .fold(0.0_f64, |m, v| m.max(v.x.abs()).max(v.y.abs()));
        Self {
            vertices,
            degeneracy,
            magnitude,
        }
    }

    /// Hull of the given points.
    pub fn from_points(points: &[Vec2]) -> Result<Self> {
        convex_hull(points)
    }

    pub fn point(p: Vec2) -> Self {
        Self::from_raw(vec![p], Degeneracy::Point)
    }

    pub fn segment(a: Vec2, b: Vec2) -> Result<Self> {
        convex_hull(&[a, b])
    }

    /// Axis-aligned box `[lo.x, hi.x] × [lo.y, hi.y]`.
    pub fn axis_box(lo: Vec2, hi: Vec2) -> Result<Self> {
        if lo.x > hi.x || lo.y > hi.y {
            return Err(invalid(format!("empty box {lo:?}..{hi:?}")));
        }
        convex_hull(&[lo, Vec2::new(hi.x, lo.y), hi, Vec2::new(lo.x, hi.y)])
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn degeneracy(&self) -> Degeneracy {
        self.degeneracy
    }

    pub fn is_full(&self) -> bool {
        self.degeneracy == Degeneracy::Full
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    fn tie_tol(&self) -> f64 {
        TIE_RTOL * self.magnitude.max(f64::MIN_POSITIVE)
    }

    /// Support function `δ*(l, P) = max ⟨l, v⟩`.
    pub fn support_value(&self, l: &Vec2) -> f64 {
        self.vertices
            .iter()
            .map(|v| l.dot(v))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// All vertices attaining the support value in direction `l`, up to a
    /// relative tie tolerance. Two entries mean a whole edge is supporting.
    pub fn supporting_face(&self, l: &Vec2) -> Vec<Vec2> {
        let best = self.support_value(l);
        let tol = self.tie_tol();
        self.vertices
            .iter()
            .filter(|v| l.dot(v) >= best - tol)
            .copied()
            .collect()
    }

    /// A point of the polytope attaining the support value in direction `l`.
    ///
    /// Ties are broken toward the lexicographically largest vertex, so the
    /// choice is deterministic.
    pub fn supporting_point(&self, l: &Vec2) -> Vec2 {
        let best = self.support_value(l);
        let tol = self.tie_tol();
        let mut choice: Option<Vec2> = None;
        for v in &self.vertices {
            if l.dot(v) >= best - tol && choice.is_none_or(|c| lex_greater(v, &c)) {
                choice = Some(*v);
            }
        }
        choice.expect("polytope has at least one vertex")
    }

    /// Supporting points for every direction of a grid, in grid order.
    ///
    /// Angularly sorted grids on larger polygons are handled by one walk around
    /// the boundary, which costs `O(V + N)` instead of `O(V·N)`.
    pub fn supporting_points(&self, grid: &DirectionGrid) -> Vec<Vec2> {
        if self.vertices.len() < WALK_THRESHOLD || !grid.is_angularly_sorted() || !self.is_full()
        {
            return grid
                .directions()
                .iter()
                .map(|d| self.supporting_point(d.as_vec()))
                .collect();
        }
        self.supporting_points_walk(grid.directions())
    }

    fn supporting_points_walk(&self, dirs: &[Direction]) -> Vec<Vec2> {
        let v = &self.vertices;
        let n = v.len();
        let tol = self.tie_tol();
        let mut out = Vec::with_capacity(dirs.len());
        let Some(first) = dirs.first() else {
            return out;
        };
        let l0 = first.as_vec();
        let mut p = (0..n)
            .max_by(|&a, &b| l0.dot(&v[a]).total_cmp(&l0.dot(&v[b])))
            .unwrap();
        for d in dirs {
            let l = d.as_vec();
            let mut steps = 0;
            while steps < n && l.dot(&v[(p + 1) % n]) > l.dot(&v[p]) {
                p = (p + 1) % n;
                steps += 1;
            }
            let mut steps = 0;
            while steps < n && l.dot(&v[(p + n - 1) % n]) > l.dot(&v[p]) {
                p = (p + n - 1) % n;
                steps += 1;
            }
            let best = l.dot(&v[p]);
            let mut choice = v[p];
            for k in 1..n {
                let q = (p + k) % n;
                if l.dot(&v[q]) < best - tol {
                    break;
                }
                if lex_greater(&v[q], &choice) {
                    choice = v[q];
                }
            }
            for k in 1..n {
                let q = (p + n - k) % n;
                if l.dot(&v[q]) < best - tol {
                    break;
                }
                if lex_greater(&v[q], &choice) {
                    choice = v[q];
                }
            }
            out.push(choice);
        }
        out
    }

    /// Translate by `t`. The hull is recomputed since translation can change
    /// which vertex is lexicographically smallest under rounding.
    pub fn translate(&self, t: &Vec2) -> Result<Self> {
        let pts: Vec<Vec2> = self.vertices.iter().map(|v| v + t).collect();
        convex_hull(&pts)
    }

    /// Image `M·P`. Singular maps may collapse the dimension.
    pub fn linear_image(&self, m: &Mat2) -> Result<Self> {
        let pts: Vec<Vec2> = self.vertices.iter().map(|v| m * v).collect();
        convex_hull(&pts)
    }

    /// Dilation `α·P` for `α ≥ 0`.
    pub fn scale(&self, alpha: f64) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(invalid(format!("scale factor must be finite and nonnegative, got {alpha}")));
        }
        if alpha == 0.0 {
            return Ok(Self::point(Vec2::zeros()));
        }
        Ok(Self::from_raw(
            self.vertices.iter().map(|v| v * alpha).collect(),
            self.degeneracy,
        ))
    }

    /// Whether every coordinate is finite and bounded by `limit` in magnitude.
    pub fn is_bounded_by(&self, limit: f64) -> bool {
        self.magnitude.is_finite() && self.magnitude <= limit
    }

    /// Signed distance from `x` to the boundary, positive inside.
    ///
    /// Only meaningful for full-dimensional polytopes; lower-dimensional ones
    /// have empty interior and return minus the distance.
    pub fn depth(&self, x: &Vec2) -> f64 {
        if !self.is_full() {
            return -self.distance(x);
        }
        let n = self.vertices.len();
        let mut inside = f64::INFINITY;
        for i in 0..n {
            let a = &self.vertices[i];
            let e = self.vertices[(i + 1) % n] - a;
            inside = inside.min(cross(&e, &(x - a)) / e.norm());
        }
        if inside >= 0.0 {
            inside
        } else {
            -self.distance(x)
        }
    }

    /// Euclidean distance from `x` to the polytope (zero inside).
    pub fn distance(&self, x: &Vec2) -> f64 {
        let v = &self.vertices;
        match self.degeneracy {
            Degeneracy::Point => (x - v[0]).norm(),
            Degeneracy::Segment => segment_distance(x, &v[0], &v[1]),
            Degeneracy::Full => {
                let n = v.len();
                let mut outside = false;
                let mut best = f64::INFINITY;
                for i in 0..n {
                    let a = &v[i];
                    let b = &v[(i + 1) % n];
                    if cross(&(b - a), &(x - a)) < 0.0 {
                        outside = true;
                    }
                    best = best.min(segment_distance(x, a, b));
                }
                if outside {
                    best
                } else {
                    0.0
                }
            }
        }
    }

    /// Membership with absolute tolerance: true when `distance(x) <= tol`.
    pub fn contains(&self, x: &Vec2, tol: f64) -> bool {
        match self.degeneracy {
            Degeneracy::Full if self.vertices.len() >= WALK_THRESHOLD => {
                self.contains_fan(x, tol)
            }
            Degeneracy::Full => {
                let v = &self.vertices;
                let n = v.len();
                let mut strictly_inside = true;
                for i in 0..n {
                    let e = v[(i + 1) % n] - v[i];
                    let c = cross(&e, &(x - v[i]));
                    if c < -tol * e.norm() {
                        return false;
                    }
                    strictly_inside &= c >= 0.0;
                }
                strictly_inside || self.distance(x) <= tol
            }
            _ => self.distance(x) <= tol,
        }
    }

    /// `O(log V)` membership: locate the fan wedge around vertex 0 by
    /// bisection, then test the wedge's outer edge. Points near the wedge
    /// boundary fall back to a distance check.
    fn contains_fan(&self, x: &Vec2, tol: f64) -> bool {
        let v = &self.vertices;
        let n = v.len();
        let o = v[0];
        let r = x - o;
        // outside the cone spanned at vertex 0
        let first = cross(&(v[1] - o), &r);
        let last = cross(&(v[n - 1] - o), &r);
        if first < 0.0 || last > 0.0 {
            if first < -tol * (v[1] - o).norm() || last > tol * (v[n - 1] - o).norm() {
                return false;
            }
            return self.distance(x) <= tol;
        }
        let (mut lo, mut hi) = (1, n - 1);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if cross(&(v[mid] - o), &r) >= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let e = v[hi] - v[lo];
        let c = cross(&e, &(x - v[lo]));
        if c >= 0.0 {
            return true;
        }
        // the polytope lies behind the edge line, so this bounds the distance
        if c < -tol * e.norm() {
            return false;
        }
        self.distance(x) <= tol
    }

    /// Hausdorff distance to the disk of radius `radius` about `center`.
    ///
    /// Evaluated as the largest support-function gap over the directions where
    /// it can peak: edge normals and the directions through each vertex.
    pub fn hausdorff_to_ball(&self, center: &Vec2, radius: f64) -> f64 {
        let n = self.vertices.len();
        let mut candidates: Vec<Vec2> = Vec::with_capacity(3 * n + 2);
        for i in 0..n {
            let e = self.vertices[(i + 1) % n] - self.vertices[i];
            if e.norm() > 0.0 {
                candidates.push(Vec2::new(e.y, -e.x));
                candidates.push(Vec2::new(-e.y, e.x));
            }
            candidates.push(self.vertices[i] - center);
        }
        candidates.push(Vec2::x());
        let mut worst: f64 = 0.0;
        for c in candidates {
            let norm = c.norm();
            if norm == 0.0 {
                continue;
            }
            for l in [c / norm, -c / norm] {
                let gap = radius + l.dot(center) - self.support_value(&l);
                worst = worst.max(gap.abs());
            }
        }
        worst
    }

    /// Vertex order starting at the bottom-most (then leftmost) vertex.
    fn rotated_to_bottom(&self) -> Vec<Vec2> {
        let v = &self.vertices;
        let start = (0..v.len())
            .min_by(|&a, &b| v[a].y.total_cmp(&v[b].y).then(v[a].x.total_cmp(&v[b].x)))
            .unwrap();
        (0..v.len()).map(|k| v[(start + k) % v.len()]).collect()
    }
}
