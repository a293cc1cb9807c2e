//! Piecewise-linear minimum time function on the ring triangulation.
//!
//! The annulus between consecutive rings is split into triangles whose
//! vertices are index-paired supporting points; node values are ring times and
//! the field is their barycentric interpolant. Inside the target the value is
//! `t0`, outside the outermost ring the point is unreached.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geom::{cross, ConvexPolytope, Vec2};
use crate::reachset::{ReachFlow, ReachRing};

/// Membership tolerance used when locating a query point among the rings.
pub const RING_TOL: f64 = 1e-9;

/// Value of the minimum time function at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MinTime {
    Reached(f64),
    Unreached,
}

impl MinTime {
    /// The time, or `+∞` when unreached.
    pub fn value(self) -> f64 {
        match self {
            Self::Reached(t) => t,
            Self::Unreached => f64::INFINITY,
        }
    }

    pub fn is_reached(self) -> bool {
        matches!(self, Self::Reached(_))
    }

    pub fn from_value(t: f64) -> Self {
        if t.is_finite() {
            Self::Reached(t)
        } else {
            Self::Unreached
        }
    }
}

/// Supporting point `k` of ring `i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NodeRef {
    pub ring: usize,
    pub dir: usize,
}

/// Simplices of one strip between rings `i` and `i+1`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Strip {
    pub triangles: Vec<[NodeRef; 3]>,
    /// Radial edges used when the strip has no interior.
    pub segments: Vec<[NodeRef; 2]>,
    /// Pairs `(k, k+1)` of radial edges that cross each other.
    pub crossings: Vec<usize>,
}

/// Strip triangulation of a ring sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct Triangulation {
    pub strips: Vec<Strip>,
    /// Largest simplex diameter `Δ_Γ`.
    pub diameter: f64,
}

impl Triangulation {
    pub fn triangle_count(&self) -> usize {
        self.strips.iter().map(|s| s.triangles.len()).sum()
    }

    pub fn segment_count(&self) -> usize {
        self.strips.iter().map(|s| s.segments.len()).sum()
    }

    pub fn crossing_count(&self) -> usize {
        self.strips.iter().map(|s| s.crossings.len()).sum()
    }
}

fn area2(a: &Vec2, b: &Vec2, c: &Vec2) -> f64 {
    cross(&(b - a), &(c - a))
}

fn segments_cross(p1: &Vec2, p2: &Vec2, q1: &Vec2, q2: &Vec2) -> bool {
    let d1 = area2(q1, q2, p1);
    let d2 = area2(q1, q2, p2);
    let d3 = area2(p1, p2, q1);
    let d4 = area2(p1, p2, q2);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// Triangulates the strips between consecutive rings.
///
/// For every direction index `k` the strip gets `(Y_i^k, Y_i^{k+1}, Y_{i+1}^k)`
/// and `(Y_i^{k+1}, Y_{i+1}^k, Y_{i+1}^{k+1})`, indices cyclic. Triangles of
/// negligible area are dropped. Strips whose outer ring has no interior get
/// the radial edges `(Y_i^k, Y_{i+1}^k)` instead.
pub fn triangulate(rings: &[ReachRing]) -> Result<Triangulation> {
    let Some(first) = rings.first() else {
        return Err(invalid("cannot triangulate an empty flow"));
    };
    let nr = first.points.len();
    if rings.iter().any(|r| r.points.len() != nr) {
        return Err(invalid("rings are not index-aligned on one direction grid"));
    }
    let outer = &rings[rings.len() - 1].polytope;
    let scale = outer
        .vertices()
        .iter()
        .fold(0.0_f64, |m, v| m.max((v - outer.vertices()[0]).norm()))
        .max(f64::MIN_POSITIVE);
    let area_tol = 1e-14 * scale * scale;
    let pos = |n: NodeRef| rings[n.ring].points[n.dir];

    let mut diameter: f64 = 0.0;
    let mut strips = Vec::with_capacity(rings.len().saturating_sub(1));
    for i in 0..rings.len().saturating_sub(1) {
        let mut strip = Strip::default();
        let flat = !rings[i + 1].polytope.is_full();
        for k in 0..nr {
            let k1 = (k + 1) % nr;
            let a = NodeRef { ring: i, dir: k };
            let b = NodeRef { ring: i, dir: k1 };
            let c = NodeRef { ring: i + 1, dir: k };
            let d = NodeRef { ring: i + 1, dir: k1 };
            for tri in [[a, b, c], [b, c, d]] {
                let (p, q, r) = (pos(tri[0]), pos(tri[1]), pos(tri[2]));
                if area2(&p, &q, &r).abs() * 0.5 > area_tol {
                    diameter = diameter.max((p - q).norm()).max((q - r).norm()).max((r - p).norm());
                    strip.triangles.push(tri);
                }
            }
            if flat {
                let len = (pos(a) - pos(c)).norm();
                if len > 0.0 && !strip.segments.iter().any(|s| pos(s[0]) == pos(a) && pos(s[1]) == pos(c)) {
                    diameter = diameter.max(len);
                    strip.segments.push([a, c]);
                }
            }
            if segments_cross(&pos(a), &pos(c), &pos(b), &pos(d)) {
                strip.crossings.push(k);
            }
        }
        strips.push(strip);
    }
    Ok(Triangulation { strips, diameter })
}

#[derive(Clone, Debug)]
struct Tri {
    p: [Vec2; 3],
    t: [f64; 3],
}

impl Tri {
    /// Barycentric coordinates of `x` (unnormalized triangles allowed).
    fn barycentric(&self, x: &Vec2) -> [f64; 3] {
        let [a, b, c] = &self.p;
        let det = area2(a, b, c);
        let l1 = area2(x, b, c) / det;
        let l2 = area2(a, x, c) / det;
        [l1, l2, 1.0 - l1 - l2]
    }

    fn interpolate(&self, l: &[f64; 3]) -> f64 {
        l[0] * self.t[0] + l[1] * self.t[1] + l[2] * self.t[2]
    }

    fn distance(&self, x: &Vec2) -> f64 {
        let l = self.barycentric(x);
        if l.iter().all(|&v| v >= 0.0) {
            return 0.0;
        }
        (0..3)
            .map(|e| segment_distance(x, &self.p[e], &self.p[(e + 1) % 3]))
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Clone, Debug)]
struct Seg {
    p: [Vec2; 2],
    t: [f64; 2],
}

fn segment_distance(x: &Vec2, a: &Vec2, b: &Vec2) -> f64 {
    let d = b - a;
    let len2 = d.norm_squared();
    if len2 == 0.0 {
        return (x - a).norm();
    }
    let s = ((x - a).dot(&d) / len2).clamp(0.0, 1.0);
    (x - (a + s * d)).norm()
}

/// Evaluable piecewise-linear minimum time function.
#[derive(Clone, Debug)]
pub struct MinTimeField {
    times: Vec<f64>,
    polytopes: Vec<ConvexPolytope>,
    tris: Vec<Vec<Tri>>,
    segs: Vec<Vec<Seg>>,
    triangulation: Triangulation,
}

impl MinTimeField {
    pub fn new(flow: &ReachFlow) -> Result<Self> {
        Self::from_rings(&flow.rings)
    }

    pub fn from_rings(rings: &[ReachRing]) -> Result<Self> {
        let triangulation = triangulate(rings)?;
        let pos = |n: &NodeRef| rings[n.ring].points[n.dir];
        let time = |n: &NodeRef| rings[n.ring].t;
        let tris = triangulation
            .strips
            .iter()
            .map(|s| {
                s.triangles
                    .iter()
                    .map(|tri| Tri {
                        p: tri.map(|n| pos(&n)),
                        t: tri.map(|n| time(&n)),
                    })
                    .collect()
            })
            .collect();
        let segs = triangulation
            .strips
            .iter()
            .map(|s| {
                s.segments
                    .iter()
                    .map(|seg| Seg {
                        p: seg.map(|n| pos(&n)),
                        t: seg.map(|n| time(&n)),
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            times: rings.iter().map(|r| r.t).collect(),
            polytopes: rings.iter().map(|r| r.polytope.clone()).collect(),
            tris,
            segs,
            triangulation,
        })
    }

    pub fn triangulation(&self) -> &Triangulation {
        &self.triangulation
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Domain `Ω`, the outermost ring polygon.
    pub fn domain(&self) -> &ConvexPolytope {
        &self.polytopes[self.polytopes.len() - 1]
    }

    /// Index `i ≥ 1` of the first ring containing `x`, `Some(0)` inside the
    /// target, `None` outside every ring.
    pub fn locate(&self, x: &Vec2) -> Option<usize> {
        self.polytopes.iter().position(|p| p.contains(x, RING_TOL))
    }

    pub fn evaluate(&self, x: &Vec2) -> MinTime {
        match self.locate(x) {
            None => MinTime::Unreached,
            Some(0) => MinTime::Reached(self.times[0]),
            Some(i) => MinTime::Reached(self.interpolate_in_strip(i - 1, x)),
        }
    }

    /// Value in the strip between rings `s` and `s+1`, clamped to their times.
    fn interpolate_in_strip(&self, s: usize, x: &Vec2) -> f64 {
        let (lo, hi) = (self.times[s], self.times[s + 1]);
        let tris = &self.tris[s];
        for tri in tris {
            let l = tri.barycentric(x);
            if l.iter().all(|&v| v >= -1e-12) {
                return tri.interpolate(&l).clamp(lo, hi);
            }
        }
        // Nearest simplex's linear extension; covers dropped slivers,
        // boundary round-off and strips without interior.
        let mut best = (f64::INFINITY, hi);
        for tri in tris {
            let d = tri.distance(x);
            if d < best.0 {
                best = (d, tri.interpolate(&tri.barycentric(x)));
            }
        }
        for seg in &self.segs[s] {
            let dir = seg.p[1] - seg.p[0];
            let lambda = ((x - seg.p[0]).dot(&dir) / dir.norm_squared()).clamp(0.0, 1.0);
            let d = (x - (seg.p[0] + lambda * dir)).norm();
            if d < best.0 {
                best = (d, (1.0 - lambda) * seg.t[0] + lambda * seg.t[1]);
            }
        }
        best.1.clamp(lo, hi)
    }
}

/// Uniform lattice of query points on a rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestGrid {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
    pub dx: f64,
}

impl Default for TestGrid {
    /// `[-1, 1]²` with spacing `0.02`.
    fn default() -> Self {
        Self {
            lo: [-1.0, -1.0],
            hi: [1.0, 1.0],
            dx: 0.02,
        }
    }
}

impl TestGrid {
    pub fn new(lo: [f64; 2], hi: [f64; 2], dx: f64) -> Result<Self> {
        if !(dx > 0.0 && dx.is_finite()) || lo[0] > hi[0] || lo[1] > hi[1] {
            return Err(invalid(format!("bad test grid {lo:?}..{hi:?} step {dx}")));
        }
        Ok(Self { lo, hi, dx })
    }

    fn counts(&self) -> (usize, usize) {
        let n = |a: f64, b: f64| ((b - a) / self.dx + 1e-9).floor() as usize + 1;
        (n(self.lo[0], self.hi[0]), n(self.lo[1], self.hi[1]))
    }

    /// Points in row-major order, `x1` fastest.
    pub fn points(&self) -> Vec<Vec2> {
        let (nx, ny) = self.counts();
        let mut out = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                out.push(Vec2::new(
                    self.lo[0] + i as f64 * self.dx,
                    self.lo[1] + j as f64 * self.dx,
                ));
            }
        }
        out
    }
}

/// One row of the grid sample export.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    pub x: Vec2,
    pub approx: MinTime,
    pub oracle: MinTime,
}

impl Sample {
    pub fn abs_err(&self) -> f64 {
        match (self.approx, self.oracle) {
            (MinTime::Reached(a), MinTime::Reached(b)) => (a - b).abs(),
            (MinTime::Unreached, MinTime::Unreached) => 0.0,
            _ => f64::INFINITY,
        }
    }
}

/// L∞ comparison of a field with a reference on a test grid.
#[derive(Clone, Debug)]
pub struct ErrorReport {
    pub linf: f64,
    pub worst_point: Vec2,
    /// Grid points entering the maximum.
    pub compared: usize,
    /// Points where exactly one side is unreached although the reference
    /// time is within the horizon.
    pub mismatches: usize,
    pub samples: Vec<Sample>,
}

/// Maximum of `|T_hΔ(x) - T(x)|` over grid points with `T(x) ≤ tf` where both
/// values are finite.
pub fn error_norm<F>(field: &MinTimeField, oracle: F, grid: &TestGrid, tf: f64) -> Result<ErrorReport>
where
    F: Fn(&Vec2) -> MinTime + Sync,
{
    let samples: Vec<Sample> = grid
        .points()
        .into_par_iter()
        .map(|x| Sample {
            x,
            approx: field.evaluate(&x),
            oracle: oracle(&x),
        })
        .collect();
    let horizon = tf + 1e-12 * tf.abs().max(1.0);
    let mut linf = f64::NEG_INFINITY;
    let mut worst = Vec2::repeat(f64::NAN);
    let (mut compared, mut mismatches) = (0, 0);
    for s in &samples {
        match (s.approx, s.oracle) {
            (MinTime::Reached(a), MinTime::Reached(b)) if b <= horizon => {
                compared += 1;
                let e = (a - b).abs();
                if e > linf {
                    linf = e;
                    worst = s.x;
                }
            }
            (MinTime::Unreached, MinTime::Reached(b)) if b <= horizon => mismatches += 1,
            _ => {}
        }
    }
    if compared == 0 {
        return Err(invalid("no grid point has a finite reference time within the horizon"));
    }
    Ok(ErrorReport {
        linf,
        worst_point: worst,
        compared,
        mismatches,
        samples,
    })
}

/// Power law `e ≈ C·h^p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    #[serde(rename = "C")]
    pub c: f64,
    pub p: f64,
}

fn check_fit_data(hs: &[f64], es: &[f64], min_len: usize) -> Result<()> {
    if hs.len() != es.len() || hs.len() < min_len {
        return Err(invalid(format!(
            "need at least {min_len} matching (h, error) pairs, got {} and {}",
            hs.len(),
            es.len()
        )));
    }
    if hs.iter().chain(es).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(invalid("order fits need positive step sizes and errors"));
    }
    Ok(())
}

/// Least squares on `log e = log C + p log h`.
pub fn fit_order(hs: &[f64], es: &[f64]) -> Result<Fit> {
    check_fit_data(hs, es, 2)?;
    let n = hs.len() as f64;
    let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = es.iter().map(|e| e.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(invalid("order fits need at least two distinct step sizes"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let p = sxy / sxx;
    Ok(Fit {
        c: (my - p * mx).exp(),
        p,
    })
}

/// Least-squares constant for a prescribed order `p`.
pub fn fit_constant(hs: &[f64], es: &[f64], p: f64) -> Result<Fit> {
    check_fit_data(hs, es, 1)?;
    let mean = hs
        .iter()
        .zip(es)
        .map(|(h, e)| e.ln() - p * h.ln())
        .sum::<f64>()
        / hs.len() as f64;
    Ok(Fit { c: mean.exp(), p })
}

fn fmt_time(t: MinTime) -> String {
    match t {
        MinTime::Reached(v) => format!("{v:e}"),
        MinTime::Unreached => "inf".to_string(),
    }
}

/// Error summary as written to `error.json`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ErrorJson {
    #[serde(rename = "Linf")]
    pub linf: f64,
    pub worst_point: [f64; 2],
    pub fit: Option<Fit>,
    pub compared: usize,
    pub mismatches: usize,
}

impl ErrorReport {
    /// Rows `x1,x2,T_approx,T_oracle,abs_err`, `inf` for unreached.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x1,x2,T_approx,T_oracle,abs_err\n");
        for r in &self.samples {
            let err = r.abs_err();
            let err = if err.is_finite() { format!("{err:e}") } else { "inf".into() };
            let _ = writeln!(
                s,
                "{:e},{:e},{},{},{}",
                r.x.x,
                r.x.y,
                fmt_time(r.approx),
                fmt_time(r.oracle),
                err
            );
        }
        s
    }

    pub fn to_json(&self, fit: Option<Fit>) -> ErrorJson {
        ErrorJson {
            linf: self.linf,
            worst_point: [self.worst_point.x, self.worst_point.y],
            fit,
            compared: self.compared,
            mismatches: self.mismatches,
        }
    }

    /// Writes `grid.csv` and `error.json` into `dir`.
    pub fn write(&self, dir: &Path, fit: Option<Fit>) -> Result<()> {
        let out = |path: &Path| {
            let path = path.to_path_buf();
            move |source| Error::Output { path, source }
        };
        fs::create_dir_all(dir).map_err(out(dir))?;
        let path = dir.join("grid.csv");
        fs::write(&path, self.to_csv()).map_err(out(&path))?;
        let path = dir.join("error.json");
        let text = serde_json::to_string_pretty(&self.to_json(fit)).expect("report serializes");
        fs::write(&path, text).map_err(out(&path))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::ConvexPolytope;

    fn v(x: f64, y: f64) -> Vec2 {
        Vec2::new(x, y)
    }

    fn square_ring(t: f64, r: f64) -> ReachRing {
        let mut points = vec![v(r, -r), v(r, r), v(-r, r), v(-r, -r)];
        points.push(points[0]);
        let polytope = ConvexPolytope::from_points(&points).unwrap();
        ReachRing { t, points, polytope }
    }

    #[test]
    fn concentric_squares_give_eight_triangles() {
        let rings = [square_ring(0.0, 1.0), square_ring(1.0, 2.0)];
        let tri = triangulate(&rings).unwrap();
        assert_eq!(tri.triangle_count(), 8);
        assert_eq!(tri.crossing_count(), 0);
        // the outer square's side is the longest simplex edge
        assert!((tri.diameter - 4.0).abs() < 1e-15);
    }

    #[test]
    fn nodes_midpoints_and_outside() {
        let rings = [square_ring(0.0, 1.0), square_ring(1.0, 2.0), square_ring(2.0, 3.0)];
        let f = MinTimeField::from_rings(&rings).unwrap();
        assert_eq!(f.evaluate(&v(2.0, 2.0)), MinTime::Reached(1.0));
        assert_eq!(f.evaluate(&v(-3.0, 3.0)), MinTime::Reached(2.0));
        assert_eq!(f.evaluate(&v(0.2, 0.3)), MinTime::Reached(0.0));
        let mid = f.evaluate(&v(2.5, 2.5)).value();
        assert!((mid - 1.5).abs() < 1e-12);
        assert_eq!(f.evaluate(&v(3.1, 0.0)), MinTime::Unreached);
    }

    #[test]
    fn sandwich_on_annulus() {
        let rings = [square_ring(0.0, 1.0), square_ring(0.5, 1.7)];
        let f = MinTimeField::from_rings(&rings).unwrap();
        for p in TestGrid::new([-1.7, -1.7], [1.7, 1.7], 0.05).unwrap().points() {
            if let MinTime::Reached(t) = f.evaluate(&p) {
                assert!((0.0..=0.5).contains(&t));
            }
        }
    }

    #[test]
    fn default_grid_has_101_squared_points() {
        let g = TestGrid::default().points();
        assert_eq!(g.len(), 101 * 101);
        assert_eq!(g[0], v(-1.0, -1.0));
        assert!((g[g.len() - 1] - v(1.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn fit_recovers_power_law() {
        let hs = [0.1, 0.05, 0.025, 0.0125];
        let es: Vec<f64> = hs.iter().map(|h: &f64| 3.5 * h.powf(1.3)).collect();
        let f = fit_order(&hs, &es).unwrap();
        assert!((f.c - 3.5).abs() < 1e-10 && (f.p - 1.3).abs() < 1e-10);
        assert!(fit_order(&hs, &[0.1, 0.0, 0.1, 0.1]).is_err());
        assert!(fit_order(&[0.1], &[0.1]).is_err());
        let c = fit_constant(&hs, &es, 1.3).unwrap();
        assert!((c.c - 3.5).abs() < 1e-10);
    }

    #[test]
    fn csv_uses_inf_for_unreached() {
        let rings = [square_ring(0.0, 1.0), square_ring(1.0, 2.0)];
        let f = MinTimeField::from_rings(&rings).unwrap();
        let grid = TestGrid::new([0.0, 0.0], [3.0, 0.0], 1.0).unwrap();
        let rep = error_norm(&f, |x: &Vec2| MinTime::Reached((x.amax() - 1.0).max(0.0)), &grid, 1.0).unwrap();
        let csv = rep.to_csv();
        assert!(csv.starts_with("x1,x2,T_approx,T_oracle,abs_err\n"));
        assert!(csv.lines().nth(4).unwrap().contains(",inf,"));
        assert_eq!(rep.linf, 0.0);
    }
}
