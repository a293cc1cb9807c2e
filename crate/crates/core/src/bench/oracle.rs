//! Minimum time functions of the examples that have one, and the independent
//! checks each of them must pass before a table is computed.

use std::f64::consts::{PI, SQRT_2};

use super::examples::ExampleId;
use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::mintime::MinTime;

const BISECTION_ITERS: usize = 60;

/// Time for the double integrator `x1' = x2, x2' = u`, `|u| ≤ 1`, to reach the origin.
pub fn double_integrator_time(x: &Vec2) -> f64 {
    let s = x.x + 0.5 * x.y * x.y.abs();
    if s > 0.0 {
        x.y + 2.0 * (x.x + 0.5 * x.y * x.y).sqrt()
    } else if s < 0.0 {
        -x.y + 2.0 * (-x.x + 0.5 * x.y * x.y).sqrt()
    } else {
        x.y.abs()
    }
}

/// Switching time and first control value of the time-optimal bang-bang control.
fn double_integrator_switch(x: &Vec2) -> (f64, f64) {
    let s = x.x + 0.5 * x.y * x.y.abs();
    if s > 0.0 {
        (x.y + (x.x + 0.5 * x.y * x.y).sqrt(), -1.0)
    } else if s < 0.0 {
        (-x.y + (-x.x + 0.5 * x.y * x.y).sqrt(), 1.0)
    } else {
        (0.0, -x.y.signum())
    }
}

fn ex53_time(x: &Vec2) -> MinTime {
    let a = (2.0 * x.x + x.y).abs();
    let b = 2.0 * (x.x + x.y).abs();
    if a >= 1.0 || b >= 1.0 {
        return MinTime::Unreached;
    }
    MinTime::Reached((-(1.0 - a).ln()).max(-0.5 * (1.0 - b).ln()))
}

const EX56_LINE_TOL: f64 = 1e-9;

fn ex56_time(x: &Vec2) -> MinTime {
    if (x.x + x.y).abs() > EX56_LINE_TOL {
        return MinTime::Unreached;
    }
    let r = x.norm() / SQRT_2;
    if r >= 1.0 {
        return MinTime::Unreached;
    }
    MinTime::Reached(-(1.0 - r).ln())
}

/// Smallest `t ≥ 0` with `inside(t)`, for a predicate monotone in `t`.
fn bisect_time(inside: impl Fn(f64) -> bool, hi: f64) -> MinTime {
    if inside(0.0) {
        return MinTime::Reached(0.0);
    }
    let mut hi = hi;
    let mut doublings = 0;
    while !inside(hi) {
        hi *= 2.0;
        doublings += 1;
        if doublings > 60 {
            return MinTime::Unreached;
        }
    }
    let mut lo = 0.0;
    for _ in 0..BISECTION_ITERS {
        let mid = 0.5 * (lo + hi);
        if inside(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    MinTime::Reached(hi)
}

fn box_distance(x: &Vec2, half: f64) -> f64 {
    let dx = (x.x.abs() - half).max(0.0);
    let dy = (x.y.abs() - half).max(0.0);
    dx.hypot(dy)
}

/// Minimum time function of an example at `x`, measured from `t0`.
pub fn oracle(id: ExampleId, x: &Vec2) -> Result<MinTime> {
    let tf = super::example(id).tf();
    match id {
        ExampleId::Ex51Ball => Ok(MinTime::Reached((x.norm() - 0.25).max(0.0))),
        ExampleId::Ex51Box => Ok(bisect_time(|t| box_distance(x, t) <= 0.25, tf + 1.0)),
        ExampleId::Ex51Origin => Ok(MinTime::Reached(x.amax())),
        ExampleId::Ex52a => Ok(MinTime::Reached(double_integrator_time(x))),
        ExampleId::Ex53 => Ok(ex53_time(x)),
        ExampleId::Ex56 => Ok(ex56_time(x)),
        other => Err(Error::UnsupportedOracle(other.name().to_string())),
    }
}

/// Whether [`oracle`] is defined for `id`.
pub fn has_oracle(id: ExampleId) -> bool {
    oracle(id, &Vec2::zeros()).is_ok()
}

/// Support function `δ*(l, R(t))` of the exact reachable set, where known.
fn exact_support(id: ExampleId, l: &Vec2, t: f64) -> Option<f64> {
    match id {
        ExampleId::Ex51Ball => Some((0.25 + t) * l.norm()),
        ExampleId::Ex51Box => Some(0.25 * l.norm() + t * (l.x.abs() + l.y.abs())),
        ExampleId::Ex51Origin => Some(t * (l.x.abs() + l.y.abs())),
        ExampleId::Ex53 => Some((1.0 - (-t).exp()) * (l.x - l.y).abs() + 0.5 * (1.0 - (-2.0 * t).exp()) * (l.x - 2.0 * l.y).abs()),
        ExampleId::Ex56 => Some((1.0 - (-t).exp()) * (l.x - l.y).abs()),
        // ∫_0^t |s l1 - l2| ds
        ExampleId::Ex52a => {
            let (a, b) = (l.x, l.y);
            let prim = |s: f64| 0.5 * a * s * s - b * s;
            if a == 0.0 {
                return Some(t * b.abs());
            }
            let root = b / a;
            let whole = prim(t) - prim(0.0);
            if root > 0.0 && root < t {
                let left = prim(root) - prim(0.0);
                let right = prim(t) - prim(root);
                Some(left.abs() + right.abs())
            } else {
                Some(whole.abs())
            }
        }
        _ => None,
    }
}

/// Deterministic low-discrepancy points in `[-1, 1]²`.
fn sample_points(count: usize) -> Vec<Vec2> {
    const G: f64 = 1.324_717_957_244_746;
    (1..=count)
        .map(|k| {
            let u = (0.5 + k as f64 / G).fract();
            let v = (0.5 + k as f64 / (G * G)).fract();
            Vec2::new(2.0 * u - 1.0, 2.0 * v - 1.0)
        })
        .collect()
}

/// Outcome of checking an oracle against its independent derivation.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleCheck {
    pub id: ExampleId,
    pub points: usize,
    /// Largest discrepancy seen; for forward simulation, the endpoint miss distance.
    pub max_discrepancy: f64,
    pub tolerance: f64,
}

impl OracleCheck {
    pub fn passed(&self) -> bool {
        self.max_discrepancy <= self.tolerance
    }
}

fn simulate_double_integrator(x: &Vec2) -> Vec2 {
    let t = double_integrator_time(x);
    let (t1, u1) = double_integrator_switch(x);
    let rhs = |z: &Vec2, u: f64| Vec2::new(z.y, u);
    let rk4 = |mut z: Vec2, u: f64, span: f64| {
        let steps = 1000;
        let h = span / steps as f64;
        for _ in 0..steps {
            let k1 = rhs(&z, u);
            let k2 = rhs(&(z + 0.5 * h * k1), u);
            let k3 = rhs(&(z + 0.5 * h * k2), u);
            let k4 = rhs(&(z + h * k3), u);
            z += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        z
    };
    let mid = rk4(*x, u1, t1);
    rk4(mid, -u1, t - t1)
}

/// Checks an oracle against its independent derivation on `count` points:
/// forward simulation of the bang-bang control for the double integrator, and
/// bisection on support-function membership in the exact reachable set for the
/// others.
pub fn validate_oracle(id: ExampleId, count: usize) -> Result<OracleCheck> {
    let tf = super::example(id).tf();
    let mut points = sample_points(count);
    if id == ExampleId::Ex56 {
        points = points.iter().map(|p| Vec2::new(p.x, -p.x)).collect();
    }
    if id == ExampleId::Ex52a {
        let worst = points
            .iter()
            .map(|x| simulate_double_integrator(x).norm())
            .fold(0.0, f64::max);
        return Ok(OracleCheck { id, points: points.len(), max_discrepancy: worst, tolerance: 1e-6 });
    }
    exact_support(id, &Vec2::x(), 0.0).ok_or_else(|| Error::UnsupportedOracle(id.name().to_string()))?;
    let mut normals: Vec<Vec2> = (0..20_000)
        .map(|k| {
            let th = 2.0 * PI * k as f64 / 20_000.0;
            Vec2::new(th.cos(), th.sin())
        })
        .collect();
    // normals orthogonal to the zonotope generators (1,-1) and (1,-2)
    for l in [Vec2::new(1.0, 1.0), Vec2::new(2.0, 1.0)] {
        normals.push(l.normalize());
        normals.push(-l.normalize());
    }
    let mut worst: f64 = 0.0;
    for x in &points {
        let claimed = oracle(id, x)?;
        let inside = |t: f64| {
            normals
                .iter()
                .all(|l| l.dot(x) <= exact_support(id, l, t).expect("checked above") + 1e-12)
        };
        // Lines through the origin are lower-dimensional; only the segment
        // example has them and it is sampled on its line.
        let derived = bisect_time(inside, tf + 1.0);
        let d = match (claimed, derived) {
            (MinTime::Reached(a), MinTime::Reached(b)) => (a.min(tf + 1.0) - b.min(tf + 1.0)).abs(),
            (MinTime::Unreached, MinTime::Reached(b)) if b > tf => 0.0,
            (MinTime::Unreached, MinTime::Unreached) => 0.0,
            _ => f64::INFINITY,
        };
        worst = worst.max(d);
    }
    Ok(OracleCheck { id, points: points.len(), max_discrepancy: worst, tolerance: 1e-6 })
}
