//! Control problems, their time reversal and one-step fundamental matrices.
//!
//! States live in the plane. Controls are one- or two-dimensional; a scalar
//! control set `[a, b]` is embedded as the segment from `(a, 0)` to `(b, 0)` and
//! the input matrix is padded with a zero second column, so every problem can
//! use 2×2 arithmetic.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use crate::geom::Ball;
use crate::error::{invalid, Result};
use crate::geom::{ConvexPolytope, Degeneracy, Direction, DirectionGrid, Mat2, Vec2};

/// Matrix-valued function of time.
///
/// Callables must be re-entrant: they are sampled concurrently and repeatedly
/// at the same nodes.
#[derive(Clone)]
pub enum Coefficient {
    Constant(Mat2),
    TimeVarying(Arc<dyn Fn(f64) -> Mat2 + Send + Sync>),
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(m) => f.debug_tuple("Constant").field(m).finish(),
            Self::TimeVarying(_) => f.write_str("TimeVarying(..)"),
        }
    }
}

impl Coefficient {
    pub fn time_varying(f: impl Fn(f64) -> Mat2 + Send + Sync + 'static) -> Self {
        Self::TimeVarying(Arc::new(f))
    }

    #[inline]
    pub fn at(&self, t: f64) -> Mat2 {
        match self {
            Self::Constant(m) => *m,
            Self::TimeVarying(f) => f(t),
        }
    }

    pub fn as_constant(&self) -> Option<&Mat2> {
        match self {
            Self::Constant(m) => Some(m),
            Self::TimeVarying(_) => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Self::Constant(m) if m.iter().all(|&x| x == 0.0))
    }

    /// `t ↦ -C(t0 + tf - t)`.
    fn reflected(&self, t0: f64, tf: f64) -> Self {
        match self {
            Self::Constant(m) => Self::Constant(-m),
            Self::TimeVarying(f) => {
                let f = Arc::clone(f);
                Self::time_varying(move |t| -f(t0 + tf - t))
            }
        }
    }
}

/// Control or target set: a polytope, or a disk kept symbolic until it is
/// discretized.
#[derive(Clone, Debug, PartialEq)]
pub enum ConvexSet {
    Polytope(ConvexPolytope),
    Ball(Ball),
}

impl ConvexSet {
    pub fn point(x: Vec2) -> Self {
        Self::Polytope(ConvexPolytope::point(x))
    }

    pub fn ball(center: Vec2, radius: f64) -> Result<Self> {
        Ok(Self::Ball(Ball::new(center, radius)?))
    }

    pub fn axis_box(lo: Vec2, hi: Vec2) -> Result<Self> {
        Ok(Self::Polytope(ConvexPolytope::axis_box(lo, hi)?))
    }

    /// Scalar interval `[lo, hi]` embedded on the first axis.
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) {
            return Err(invalid(format!("empty interval [{lo}, {hi}]")));
        }
        Ok(Self::Polytope(ConvexPolytope::segment(
            Vec2::new(lo, 0.0),
            Vec2::new(hi, 0.0),
        )?))
    }

    pub fn support_value(&self, l: &Vec2) -> f64 {
        match self {
            Self::Polytope(p) => p.support_value(l),
            Self::Ball(b) => b.support_value(l),
        }
    }

    pub fn supporting_point(&self, l: &Direction) -> Vec2 {
        match self {
            Self::Polytope(p) => p.supporting_point(l.as_vec()),
            Self::Ball(b) => b.supporting_point(l),
        }
    }

    /// Supporting points for each grid direction together with their hull.
    pub fn discretize(&self, grid: &DirectionGrid) -> Result<(Vec<Vec2>, ConvexPolytope)> {
        let pts = match self {
            Self::Polytope(p) => p.supporting_points(grid),
            Self::Ball(b) => grid.directions().iter().map(|d| b.supporting_point(d)).collect(),
        };
        let hull = ConvexPolytope::from_points(&pts)?;
        Ok((pts, hull))
    }

    pub fn contains(&self, x: &Vec2, tol: f64) -> bool {
        match self {
            Self::Polytope(p) => p.contains(x, tol),
            Self::Ball(b) => b.contains(x, tol),
        }
    }

    /// True when the set lies on the first axis, as an embedded scalar set must.
    fn is_on_first_axis(&self) -> bool {
        match self {
            Self::Polytope(p) => p.vertices().iter().all(|v| v.y == 0.0),
            Self::Ball(b) => b.radius == 0.0 && b.center.y == 0.0,
        }
    }
}

/// Linear control system `x' = A(t)x + B(t)u`, `u ∈ U`, steered to the target
/// `S` over `[t0, tf]`.
#[derive(Clone, Debug)]
pub struct LinearProblem {
    pub a: Coefficient,
    /// Input matrix padded to 2×2; the second column is zero for scalar controls.
    pub b: Coefficient,
    pub control_dim: usize,
    pub u: ConvexSet,
    pub s: ConvexSet,
    pub t0: f64,
    pub tf: f64,
}

impl LinearProblem {
    pub fn new(
        a: Coefficient,
        b: Coefficient,
        control_dim: usize,
        u: ConvexSet,
        s: ConvexSet,
        t0: f64,
        tf: f64,
    ) -> Result<Self> {
        validate_horizon(t0, tf)?;
        match control_dim {
            1 => {
                if !u.is_on_first_axis() {
                    return Err(invalid("a scalar control set must be an interval on the first axis"));
                }
                if let Some(m) = b.as_constant() {
                    if m[(0, 1)] != 0.0 || m[(1, 1)] != 0.0 {
                        return Err(invalid("a scalar control needs a single input column"));
                    }
                }
            }
            2 => {}
            m => return Err(invalid(format!("control dimension must be 1 or 2, got {m}"))),
        }
        Ok(Self { a, b, control_dim, u, s, t0, tf })
    }

    /// Time-reversed system `Ā(t) = -A(t0+tf-t)`, `B̄(t) = -B(t0+tf-t)`.
    pub fn reverse(&self) -> ReversedProblem {
        ReversedProblem {
            abar: self.a.reflected(self.t0, self.tf),
            bbar: self.b.reflected(self.t0, self.tf),
            control_dim: self.control_dim,
            u: self.u.clone(),
            s: self.s.clone(),
            t0: self.t0,
            tf: self.tf,
        }
    }
}

/// Problem after time reversal. The reachable sets of this system started in
/// `S` are the sublevel sets of the minimum time function.
#[derive(Clone, Debug)]
pub struct ReversedProblem {
    pub abar: Coefficient,
    pub bbar: Coefficient,
    pub control_dim: usize,
    pub u: ConvexSet,
    pub s: ConvexSet,
    pub t0: f64,
    pub tf: f64,
}

impl ReversedProblem {
    /// Reversing again recovers the forward system.
    pub fn reverse(&self) -> LinearProblem {
        LinearProblem {
            a: self.abar.reflected(self.t0, self.tf),
            b: self.bbar.reflected(self.t0, self.tf),
            control_dim: self.control_dim,
            u: self.u.clone(),
            s: self.s.clone(),
            t0: self.t0,
            tf: self.tf,
        }
    }

    /// Builds the reversed problem directly from `Ā`, `B̄`, for systems whose
    /// reversed form is the natural description.
    pub fn from_reversed(
        abar: Coefficient,
        bbar: Coefficient,
        control_dim: usize,
        u: ConvexSet,
        s: ConvexSet,
        t0: f64,
        tf: f64,
    ) -> Result<Self> {
        let p = LinearProblem::new(abar, bbar, control_dim, u, s, t0, tf)?;
        Ok(Self {
            abar: p.a,
            bbar: p.b,
            control_dim: p.control_dim,
            u: p.u,
            s: p.s,
            t0: p.t0,
            tf: p.tf,
        })
    }
}

fn validate_horizon(t0: f64, tf: f64) -> Result<()> {
    if !(t0.is_finite() && tf.is_finite() && t0 < tf) {
        return Err(invalid(format!("horizon needs t0 < tf, got [{t0}, {tf}]")));
    }
    Ok(())
}

/// One-step approximation of the fundamental matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OdeMethod {
    /// Matrix exponential; constant coefficients only.
    Exact,
    Euler,
    Heun,
}

impl OdeMethod {
    /// Convergence order; `None` for the exact propagator.
    pub fn order(self) -> Option<u32> {
        match self {
            Self::Exact => None,
            Self::Euler => Some(1),
            Self::Heun => Some(2),
        }
    }
}

/// `Φ_h(t+h, t)` for `x' = Ā(t)x`.
///
/// Euler gives `I + hĀ(t)`, Heun `I + (h/2)(Ā(t) + Ā(t+h)) + (h²/2)Ā(t+h)Ā(t)`,
/// and the exact method `e^{hĀ}`.
pub fn phi_step(method: OdeMethod, abar: &Coefficient, t: f64, h: f64) -> Result<Mat2> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(invalid(format!("step size must be positive, got {h}")));
    }
    let id = Mat2::identity();
    Ok(match method {
        OdeMethod::Euler => id + h * abar.at(t),
        OdeMethod::Heun => {
            let (a0, a1) = (abar.at(t), abar.at(t + h));
            id + 0.5 * h * (a0 + a1) + 0.5 * h * h * a1 * a0
        }
        OdeMethod::Exact => match abar.as_constant() {
            Some(m) => expm_2x2(&(m * h)),
            None => {
                return Err(invalid(
                    "the exact propagator needs a constant system matrix",
                ))
            }
        },
    })
}

/// Matrix exponential of a real 2×2 matrix.
///
/// Writes `M = sI + N` with `N` traceless, so `N² = -det(N)·I` and
/// `e^M = e^s (c(δ) I + s(δ) N)` with `δ = -det N`, `c = cosh √δ`,
/// `s = sinh √δ / √δ` (trigonometric for `δ < 0`). Small `|δ|`, including the
/// defective case, uses the power series of `c` and `s`.
pub fn expm_2x2(m: &Mat2) -> Mat2 {
    let s = 0.5 * (m[(0, 0)] + m[(1, 1)]);
    let n = m - s * Mat2::identity();
    let delta = -n.determinant();
    let (c, sh) = if delta.abs() < 1.0 {
        // c = Σ δ^k/(2k)!, s = Σ δ^k/(2k+1)!
        let (mut c, mut sh) = (0.0, 0.0);
        let mut term_c = 1.0;
        let mut term_s = 1.0;
        for k in 0..20 {
            c += term_c;
            sh += term_s;
            let k = k as f64;
            term_c *= delta / ((2.0 * k + 1.0) * (2.0 * k + 2.0));
            term_s *= delta / ((2.0 * k + 2.0) * (2.0 * k + 3.0));
        }
        (c, sh)
    } else if delta > 0.0 {
        let q = delta.sqrt();
        (q.cosh(), q.sinh() / q)
    } else {
        let q = (-delta).sqrt();
        (q.cos(), q.sin() / q)
    };
    s.exp() * (c * Mat2::identity() + sh * n)
}

/// Nonlinear control dynamics `x' = f(x, u)`; the control is embedded like a
/// linear problem's.
pub type Dynamics = Arc<dyn Fn(&Vec2, &Vec2) -> Vec2 + Send + Sync>;

/// Autonomous nonlinear problem, used with reachable sets that stay convex.
#[derive(Clone)]
pub struct NonlinearProblem {
    /// Forward dynamics.
    pub f: Dynamics,
    pub control_dim: usize,
    pub u: ConvexSet,
    pub s: ConvexSet,
    pub t0: f64,
    pub tf: f64,
}

impl fmt::Debug for NonlinearProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NonlinearProblem")
            .field("control_dim", &self.control_dim)
            .field("u", &self.u)
            .field("s", &self.s)
            .field("t0", &self.t0)
            .field("tf", &self.tf)
            .finish_non_exhaustive()
    }
}

impl NonlinearProblem {
    pub fn new(
        f: impl Fn(&Vec2, &Vec2) -> Vec2 + Send + Sync + 'static,
        control_dim: usize,
        u: ConvexSet,
        s: ConvexSet,
        t0: f64,
        tf: f64,
    ) -> Result<Self> {
        validate_horizon(t0, tf)?;
        if !(1..=2).contains(&control_dim) {
            return Err(invalid(format!("control dimension must be 1 or 2, got {control_dim}")));
        }
        Ok(Self { f: Arc::new(f), control_dim, u, s, t0, tf })
    }

    /// Reversed dynamics `-f(x, u)`.
    pub fn reversed_rhs(&self, x: &Vec2, u: &Vec2) -> Vec2 {
        -(self.f)(x, u)
    }
}

/// Kalman controllability rank of a constant pair `(A, B)`; counts only the
/// first `control_dim` columns of `B`.
pub fn kalman_rank(a: &Mat2, b: &Mat2, control_dim: usize) -> usize {
    let cols: Vec<Vec2> = (0..control_dim.min(2))
        .flat_map(|j| {
            let bj: Vec2 = b.column(j).into();
            [bj, a * bj]
        })
        .collect();
    let scale = cols.iter().fold(0.0_f64, |m, c| m.max(c.amax()));
    if scale == 0.0 {
        return 0;
    }
    let tol = 1e-12 * scale * scale;
    for i in 0..cols.len() {
        for j in (i + 1)..cols.len() {
            if crate::geom::cross(&cols[i], &cols[j]).abs() > tol {
                return 2;
            }
        }
    }
    1
}

impl From<ConvexPolytope> for ConvexSet {
    fn from(p: ConvexPolytope) -> Self {
        Self::Polytope(p)
    }
}

impl ConvexSet {
    /// Dimension tag of the discretized set.
    pub fn degeneracy(&self) -> Degeneracy {
        match self {
            Self::Polytope(p) => p.degeneracy(),
            Self::Ball(b) if b.radius == 0.0 => Degeneracy::Point,
            Self::Ball(_) => Degeneracy::Full,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{unit_directions, GridKind};

    fn ex53_abar() -> Mat2 {
        -Mat2::new(0.0, -1.0, 2.0, 3.0)
    }

    /// Taylor series with scaling and squaring, independent of `expm_2x2`.
    fn expm_taylor(m: &Mat2) -> Mat2 {
        let norm = m.abs().max() * 2.0;
        let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
        let a = m / 2f64.powi(squarings as i32);
        let mut sum = Mat2::identity();
        let mut term = Mat2::identity();
        for k in 1..30 {
            term = term * a / k as f64;
            sum += term;
        }
        for _ in 0..squarings {
            sum = sum * sum;
        }
        sum
    }

    fn ex53_phi(h: f64) -> Mat2 {
        let (e1, e2) = ((-h).exp(), (-2.0 * h).exp());
        Mat2::new(2.0 * e1 - e2, e1 - e2, -2.0 * e1 + 2.0 * e2, -e1 + 2.0 * e2)
    }

    #[test]
    fn expm_known_cases() {
        assert_eq!(expm_2x2(&Mat2::zeros()), Mat2::identity());
        let d = expm_2x2(&Mat2::new(-1.0, 0.0, 0.0, -2.0));
        assert!((d - Mat2::new((-1f64).exp(), 0.0, 0.0, (-2f64).exp())).amax() < 1e-15);
        assert!((expm_2x2(&ex53_abar()) - ex53_phi(1.0)).amax() < 1e-14);
        // nilpotent (defective) and rotation
        let j = expm_2x2(&Mat2::new(0.0, 1.0, 0.0, 0.0));
        assert_eq!(j, Mat2::new(1.0, 1.0, 0.0, 1.0));
        let r = expm_2x2(&Mat2::new(0.0, -2.0, 2.0, 0.0));
        assert!((r - Mat2::new(2f64.cos(), -2f64.sin(), 2f64.sin(), 2f64.cos())).amax() < 1e-15);
    }

    #[test]
    fn expm_matches_taylor_on_a_sweep() {
        let mut worst: f64 = 0.0;
        for i in 0..400 {
            let f = i as f64;
            let m = Mat2::new((f * 0.37).sin() * 3.0, (f * 1.1).cos() * 2.0, (f * 0.7).sin() * 2.5, (f * 0.23).cos() * 3.0);
            let rel = (expm_2x2(&m) - expm_taylor(&m)).amax() / expm_taylor(&m).amax();
            worst = worst.max(rel);
        }
        assert!(worst < 1e-12, "{worst}");
    }

    #[test]
    fn phi_step_definitions() {
        let zero = Coefficient::Constant(Mat2::zeros());
        for m in [OdeMethod::Exact, OdeMethod::Euler, OdeMethod::Heun] {
            assert_eq!(phi_step(m, &zero, 0.3, 0.1).unwrap(), Mat2::identity());
        }
        let rot = Mat2::new(0.0, 1.0, -1.0, 0.0);
        let e = phi_step(OdeMethod::Euler, &Coefficient::Constant(rot), 0.0, 0.1).unwrap();
        assert_eq!(e, Mat2::identity() + 0.1 * rot);
        let x = phi_step(OdeMethod::Exact, &Coefficient::Constant(ex53_abar()), 0.0, 0.3).unwrap();
        assert!((x - ex53_phi(0.3)).amax() < 1e-14);
        assert!(phi_step(OdeMethod::Euler, &zero, 0.0, 0.0).is_err());
        let tv = Coefficient::time_varying(|t| Mat2::identity() * t);
        assert!(phi_step(OdeMethod::Exact, &tv, 0.0, 0.1).is_err());
    }

    #[test]
    fn local_error_orders() {
        let a = ex53_abar();
        let c = Coefficient::Constant(a);
        let an = a.norm();
        for k in 1..=20 {
            let h = 0.005 * k as f64;
            let exact = expm_2x2(&(a * h));
            let eu = (phi_step(OdeMethod::Euler, &c, 0.0, h).unwrap() - exact).norm();
            let he = (phi_step(OdeMethod::Heun, &c, 0.0, h).unwrap() - exact).norm();
            assert!(eu <= 2.0 * an.powi(2) * h * h, "euler h={h}");
            assert!(he <= 2.0 * an.powi(3) * h.powi(3), "heun h={h}");
        }
    }

    #[test]
    fn exact_semigroup() {
        let c = Coefficient::Constant(ex53_abar());
        let one = phi_step(OdeMethod::Exact, &c, 0.0, 0.01).unwrap();
        let mut prod = Mat2::identity();
        for _ in 0..50 {
            prod = one * prod;
        }
        let big = phi_step(OdeMethod::Exact, &c, 0.0, 0.5).unwrap();
        assert!((prod - big).amax() < 1e-12);
    }

    #[test]
    fn reversal() {
        let b = Mat2::new(0.0, 0.0, -1.0, 0.0);
        let p = LinearProblem::new(
            Coefficient::Constant(Mat2::zeros()),
            Coefficient::Constant(-Mat2::identity()),
            2,
            ConvexSet::axis_box(Vec2::new(-1.0, -1.0), Vec2::new(1.0, 1.0)).unwrap(),
            ConvexSet::point(Vec2::zeros()),
            0.0,
            1.0,
        )
        .unwrap();
        let r = p.reverse();
        assert_eq!(r.abar.at(0.4), Mat2::zeros());
        assert_eq!(r.bbar.at(0.4), Mat2::identity());

        let tv = LinearProblem::new(
            Coefficient::time_varying(|t| Mat2::new(0.0, -1.0, 1.0, t)),
            Coefficient::time_varying(move |t| b / (t * t)),
            1,
            ConvexSet::interval(-1.0, 1.0).unwrap(),
            ConvexSet::point(Vec2::zeros()),
            1.0,
            20.0,
        )
        .unwrap();
        let r = tv.reverse();
        let rr = r.reverse();
        for i in 0..100 {
            let t = 1.0 + 19.0 * i as f64 / 99.0;
            assert!((r.bbar.at(t) + tv.b.at(21.0 - t)).amax() < 1e-15);
            assert!((rr.a.at(t) - tv.a.at(t)).amax() < 1e-12);
            assert!((rr.b.at(t) - tv.b.at(t)).amax() < 1e-12);
        }
    }

    #[test]
    fn problem_validation() {
        let z = Coefficient::Constant(Mat2::zeros());
        let pt = ConvexSet::point(Vec2::zeros());
        assert!(LinearProblem::new(z.clone(), z.clone(), 2, pt.clone(), pt.clone(), 1.0, 1.0).is_err());
        assert!(LinearProblem::new(z.clone(), z.clone(), 3, pt.clone(), pt.clone(), 0.0, 1.0).is_err());
        let bx = ConvexSet::axis_box(Vec2::new(-1.0, -1.0), Vec2::new(1.0, 1.0)).unwrap();
        assert!(LinearProblem::new(z.clone(), z, 1, bx, pt, 0.0, 1.0).is_err());
    }

    #[test]
    fn kalman() {
        let a = Mat2::new(0.0, 1.0, 0.0, 0.0);
        let b = Mat2::new(0.0, 0.0, 1.0, 0.0);
        assert_eq!(kalman_rank(&a, &b, 1), 2);
        // segment example pair: B is an eigenvector of A
        let a = Mat2::new(0.0, -1.0, 2.0, 3.0);
        let b = Mat2::new(1.0, 0.0, -1.0, 0.0);
        assert_eq!(kalman_rank(&a, &b, 1), 1);
        assert_eq!(kalman_rank(&a, &Mat2::zeros(), 2), 0);
    }

    #[test]
    fn ball_discretization_gap() {
        let grid = unit_directions(100, GridKind::Reach).unwrap();
        let s = ConvexSet::ball(Vec2::zeros(), 0.25).unwrap();
        let (pts, hull) = s.discretize(&grid).unwrap();
        assert_eq!(pts.len(), 100);
        let gap = hull.hausdorff_to_ball(&Vec2::zeros(), 0.25);
        let analytic = 0.25 * (1.0 - (std::f64::consts::PI / 99.0).cos());
        assert!((gap - analytic).abs() < 1e-15, "{gap} vs {analytic}");
        let sq = ConvexSet::axis_box(Vec2::new(-1.0, -1.0), Vec2::new(1.0, 1.0)).unwrap();
        let (_, hull) = sq.discretize(&grid).unwrap();
        assert_eq!(hull.len(), 4);
        let (pts, hull) = ConvexSet::point(Vec2::zeros()).discretize(&grid).unwrap();
        assert!(pts.iter().all(|p| *p == Vec2::zeros()));
        assert_eq!(hull.degeneracy(), Degeneracy::Point);
    }
}
