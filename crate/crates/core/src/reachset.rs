//! Fully discrete reachable sets of the time-reversed system.
//!
//! Rings are computed on the coarse grid `t_i = t0 + iΔt` with `Δt = (tf-t0)/K`.
//! Each coarse interval is covered by `N` fine steps of size `h = Δt/N`. On an
//! interval the set-valued scheme is an affine map of sets
//!
//! ```text
//! R(t_{i+1}) = Φ · R(t_i) ⊕ Σ_j G_j · U
//! ```
//!
//! whose gains `G_j` depend on the scheme family. The result is re-sampled to
//! one supporting point per reach direction before the next interval.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geom::{
    convex_hull, minkowski_sum, unit_directions, ConvexPolytope, Degeneracy, DirectionGrid,
    GridKind, Mat2, Vec2,
};
use crate::lincontrol::{phi_step, ConvexSet, NonlinearProblem, OdeMethod, ReversedProblem};

/// Coordinates beyond this magnitude abort the propagation.
pub const OVERFLOW_LIMIT: f64 = 1e12;

/// Scheme family for the Aumann integral.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// Quadrature with the exact fundamental matrix.
    Quadrature,
    /// Quadrature combined with an approximate fundamental matrix.
    Combination,
    /// Set-valued Runge–Kutta step.
    RungeKutta,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuadRule {
    /// Left endpoint rule, weights `1, …, 1, 0`.
    Riemann,
    /// Weights `½, 1, …, 1, ½`.
    Trapezoid,
}

impl QuadRule {
    /// Weights `c_0..=c_N` for one coarse interval of `n` fine steps.
    pub fn weights(self, n: usize) -> Vec<f64> {
        let mut w = vec![1.0; n + 1];
        match self {
            Self::Riemann => w[n] = 0.0,
            Self::Trapezoid => {
                w[0] = 0.5;
                w[n] = 0.5;
            }
        }
        w
    }

    pub fn order(self) -> u32 {
        match self {
            Self::Riemann => 1,
            Self::Trapezoid => 2,
        }
    }
}

/// The admissible pairings of quadrature rule and ODE solver.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    RiemannExact,
    TrapezoidExact,
    RiemannEuler,
    TrapezoidHeun,
    Euler,
    Heun,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Self::RiemannExact,
        Self::TrapezoidExact,
        Self::RiemannEuler,
        Self::TrapezoidHeun,
        Self::Euler,
        Self::Heun,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::RiemannExact => "riemann-exact",
            Self::TrapezoidExact => "trapezoid-exact",
            Self::RiemannEuler => "riemann-euler",
            Self::TrapezoidHeun => "trapezoid-heun",
            Self::Euler => "euler",
            Self::Heun => "heun",
        }
    }

    pub fn family(self) -> Family {
        match self {
            Self::RiemannExact | Self::TrapezoidExact => Family::Quadrature,
            Self::RiemannEuler | Self::TrapezoidHeun => Family::Combination,
            Self::Euler | Self::Heun => Family::RungeKutta,
        }
    }

    /// Quadrature rule; Runge–Kutta steps carry their own control terms.
    pub fn rule(self) -> Option<QuadRule> {
        match self {
            Self::RiemannExact | Self::RiemannEuler => Some(QuadRule::Riemann),
            Self::TrapezoidExact | Self::TrapezoidHeun => Some(QuadRule::Trapezoid),
            Self::Euler | Self::Heun => None,
        }
    }

    pub fn ode(self) -> OdeMethod {
        match self {
            Self::RiemannExact | Self::TrapezoidExact => OdeMethod::Exact,
            Self::RiemannEuler | Self::Euler => OdeMethod::Euler,
            Self::TrapezoidHeun | Self::Heun => OdeMethod::Heun,
        }
    }

    pub fn order(self) -> u32 {
        match self {
            Self::RiemannExact | Self::RiemannEuler | Self::Euler => 1,
            Self::TrapezoidExact | Self::TrapezoidHeun | Self::Heun => 2,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        let alias = match key.as_str() {
            "exact-riemann" => "riemann-exact",
            "exact-trapezoid" => "trapezoid-exact",
            "euler-riemann" => "riemann-euler",
            "heun-trapezoid" => "trapezoid-heun",
            "rk-euler" => "euler",
            "rk-heun" => "heun",
            other => other,
        };
        if let Some(m) = Self::ALL.iter().find(|m| m.name() == alias) {
            return Ok(*m);
        }
        let names: Vec<&str> = Self::ALL.iter().map(|m| m.name()).collect();
        Err(invalid(format!(
            "unknown method `{s}`; quadrature and ODE orders must match, choose one of {}",
            names.join(", ")
        )))
    }
}

/// Scheme plus time grid: `K` coarse intervals of `N` fine steps each.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemeSpec {
    pub method: Method,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "N")]
    pub n: usize,
}

impl SchemeSpec {
    pub fn new(method: Method, k: usize, n: usize) -> Result<Self> {
        if k == 0 || n == 0 {
            return Err(invalid(format!("K and N must be positive, got K={k}, N={n}")));
        }
        Ok(Self { method, k, n })
    }

    /// `(Δt, h)` on the horizon `[t0, tf]`.
    pub fn steps(&self, t0: f64, tf: f64) -> (f64, f64) {
        let dt = (tf - t0) / self.k as f64;
        (dt, dt / self.n as f64)
    }
}

/// Reach and control direction grids.
#[derive(Clone, Debug, PartialEq)]
pub struct Grids {
    pub reach: DirectionGrid,
    pub control: DirectionGrid,
}

impl Grids {
    /// Reach grid with `n_r` distinct directions; control grid with `n_u`
    /// distinct directions for planar controls or `{-1, +1}` for scalar ones.
    /// Each planar grid also carries the closing duplicate of its first entry,
    /// so it has one entry more than its distinct count.
    pub fn new(control_dim: usize, n_r: usize, n_u: usize) -> Result<Self> {
        let closed = |n: usize| {
            if n < 2 {
                return Err(invalid(format!("need at least 2 distinct directions, got {n}")));
            }
            Ok(n + 1)
        };
        let reach = unit_directions(closed(n_r)?, GridKind::Reach)?;
        let control = if control_dim == 1 {
            unit_directions(2, GridKind::Control1D)?
        } else {
            unit_directions(closed(n_u)?, GridKind::Control2D)?
        };
        Ok(Self { reach, control })
    }
}

/// Supporting points of `x` in every grid direction and their hull.
pub fn discretize_set(x: &ConvexSet, grid: &DirectionGrid) -> Result<(Vec<Vec2>, ConvexPolytope)> {
    x.discretize(grid)
}

/// One ring of the flow.
#[derive(Clone, Debug, PartialEq)]
pub struct ReachRing {
    pub t: f64,
    /// One supporting point per reach direction, index-aligned with the grid.
    pub points: Vec<Vec2>,
    pub polytope: ConvexPolytope,
}

impl ReachRing {
    fn from_set(t: f64, set: &ConvexPolytope, grid: &DirectionGrid) -> Result<Self> {
        let points = set.supporting_points(grid);
        let polytope = convex_hull(&points)?;
        Ok(Self { t, points, polytope })
    }
}

/// Where a flow came from; the adjoint needs the linear provenance.
#[derive(Clone, Debug)]
pub enum FlowSource {
    Linear {
        problem: ReversedProblem,
        scheme: SchemeSpec,
    },
    Nonlinear {
        method: OdeMethod,
    },
}

/// Rings `i = 0..=K` of a discrete reachable-set computation.
#[derive(Clone, Debug)]
pub struct ReachFlow {
    pub rings: Vec<ReachRing>,
    pub t0: f64,
    pub tf: f64,
    pub dt: f64,
    pub h: f64,
    pub k: usize,
    pub n: usize,
    pub grids: Grids,
    /// Discretized control set `U_Δ`.
    pub control_set: ConvexPolytope,
    pub source: FlowSource,
}

/// Affine set map over one coarse interval: `R ↦ Φ·R ⊕ Σ G_j·U`.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalMap {
    pub phi: Mat2,
    pub gains: Vec<Mat2>,
}

/// One-step matrices `Φ_h(t_{i,j+1}, t_ij)`, `j = 0..N`, on coarse interval `i`.
pub fn fine_steps(p: &ReversedProblem, scheme: &SchemeSpec, i: usize) -> Result<Vec<Mat2>> {
    let (dt, h) = scheme.steps(p.t0, p.tf);
    let ti = p.t0 + i as f64 * dt;
    (0..scheme.n)
        .map(|j| phi_step(scheme.method.ode(), &p.abar, ti + j as f64 * h, h))
        .collect()
}

/// Builds the set map of coarse interval `i`.
///
/// Quadrature and combination schemes use `G_j = h c_j Φ_h(t_{i+1}, t_ij) B̄(t_ij)`.
/// The Euler step uses `h B̄(t_ij)` and the Heun step
/// `(h/2)[(I + hĀ(t_{i,j+1})) B̄(t_ij) + B̄(t_{i,j+1})]`, each carried to
/// `t_{i+1}` by the remaining one-step matrices.
pub fn interval_map(p: &ReversedProblem, scheme: &SchemeSpec, i: usize) -> Result<IntervalMap> {
    let (dt, h) = scheme.steps(p.t0, p.tf);
    let n = scheme.n;
    let ti = p.t0 + i as f64 * dt;
    let node = |j: usize| ti + j as f64 * h;
    let steps = fine_steps(p, scheme, i)?;
    let mut suffix = vec![Mat2::identity(); n + 1];
    for j in (0..n).rev() {
        suffix[j] = suffix[j + 1] * steps[j];
    }
    let gains = match (scheme.method.rule(), scheme.method.ode()) {
        (Some(rule), _) => rule
            .weights(n)
            .into_iter()
            .enumerate()
            .filter(|(_, c)| *c > 0.0)
            .map(|(j, c)| h * c * suffix[j] * p.bbar.at(node(j)))
            .collect(),
        (None, OdeMethod::Heun) => (0..n)
            .map(|j| {
                let b0 = p.bbar.at(node(j));
                let b1 = p.bbar.at(node(j + 1));
                let lift = Mat2::identity() + h * p.abar.at(node(j + 1));
                0.5 * h * suffix[j + 1] * (lift * b0 + b1)
            })
            .collect(),
        (None, _) => (0..n)
            .map(|j| h * suffix[j + 1] * p.bbar.at(node(j)))
            .collect(),
    };
    Ok(IntervalMap { phi: suffix[0], gains })
}

/// Applies an interval map to a ring and re-samples supporting points.
pub fn step_ring(
    ring: &ReachRing,
    map: &IntervalMap,
    control_set: &ConvexPolytope,
    grid: &DirectionGrid,
    t_next: f64,
    ring_index: usize,
) -> Result<ReachRing> {
    let overflow = |detail: String| Error::NumericOverflow {
        ring: ring_index,
        step: 0,
        detail,
    };
    let mut acc = ring
        .polytope
        .linear_image(&map.phi)
        .map_err(|e| overflow(e.to_string()))?;
    for g in &map.gains {
        let term = control_set
            .linear_image(g)
            .map_err(|e| overflow(e.to_string()))?;
        acc = minkowski_sum(&acc, &term).map_err(|e| overflow(e.to_string()))?;
    }
    if !acc.is_bounded_by(OVERFLOW_LIMIT) {
        return Err(overflow(format!("coordinates exceed {OVERFLOW_LIMIT:e}")));
    }
    ReachRing::from_set(t_next, &acc, grid)
}

/// One set-valued Euler step `(I + hĀ(t))R ⊕ hB̄(t)U` on a polytope.
pub fn step_euler_rk(
    r: &ConvexPolytope,
    p: &ReversedProblem,
    control_set: &ConvexPolytope,
    t: f64,
    h: f64,
) -> Result<ConvexPolytope> {
    let phi = phi_step(OdeMethod::Euler, &p.abar, t, h)?;
    minkowski_sum(&r.linear_image(&phi)?, &control_set.linear_image(&(h * p.bbar.at(t)))?)
}

/// One set-valued Heun step with a single control per step:
/// `Φ_h R ⊕ (h/2)[(I + hĀ(t+h))B̄(t) + B̄(t+h)]U`.
pub fn step_heun_rk(
    r: &ConvexPolytope,
    p: &ReversedProblem,
    control_set: &ConvexPolytope,
    t: f64,
    h: f64,
) -> Result<ConvexPolytope> {
    let phi = phi_step(OdeMethod::Heun, &p.abar, t, h)?;
    let lift = Mat2::identity() + h * p.abar.at(t + h);
    let gain = 0.5 * h * (lift * p.bbar.at(t) + p.bbar.at(t + h));
    minkowski_sum(&r.linear_image(&phi)?, &control_set.linear_image(&gain)?)
}

/// Algorithm driver for linear problems: returns rings `0..=K`.
pub fn run_algorithm(p: &ReversedProblem, scheme: &SchemeSpec, grids: &Grids) -> Result<ReachFlow> {
    if scheme.method.ode() == OdeMethod::Exact && p.abar.as_constant().is_none() {
        return Err(invalid(format!(
            "method {} needs a constant system matrix",
            scheme.method
        )));
    }
    let (dt, h) = scheme.steps(p.t0, p.tf);
    let (_, target) = discretize_set(&p.s, &grids.reach)?;
    let (_, control_set) = discretize_set(&p.u, &grids.control)?;
    let mut rings = Vec::with_capacity(scheme.k + 1);
    rings.push(ReachRing::from_set(p.t0, &target, &grids.reach)?);
    for i in 0..scheme.k {
        let map = interval_map(p, scheme, i)?;
        let t_next = p.t0 + (i + 1) as f64 * dt;
        let next = step_ring(&rings[i], &map, &control_set, &grids.reach, t_next, i + 1)?;
        rings.push(next);
    }
    Ok(ReachFlow {
        rings,
        t0: p.t0,
        tf: p.tf,
        dt,
        h,
        k: scheme.k,
        n: scheme.n,
        grids: grids.clone(),
        control_set,
        source: FlowSource::Linear {
            problem: p.clone(),
            scheme: *scheme,
        },
    })
}

/// Sets of the linear scheme on rings `0..=upto` without re-sampling: the exact
/// discrete reachable sets for the discretized target and control set.
pub fn unsampled_sets(flow: &ReachFlow, upto: usize) -> Result<Vec<ConvexPolytope>> {
    let FlowSource::Linear { problem, scheme } = &flow.source else {
        return Err(invalid("unsampled sets need a linear flow"));
    };
    if upto > flow.k {
        return Err(invalid(format!("ring {upto} beyond K = {}", flow.k)));
    }
    let (_, target) = discretize_set(&problem.s, &flow.grids.reach)?;
    let mut sets = vec![target];
    for i in 0..upto {
        let map = interval_map(problem, scheme, i)?;
        let mut acc = sets[i].linear_image(&map.phi)?;
        for g in &map.gains {
            acc = minkowski_sum(&acc, &flow.control_set.linear_image(g)?)?;
        }
        sets.push(acc);
    }
    Ok(sets)
}

/// One fine step of a nonlinear system: every (vertex, control point) pair is
/// advanced by Euler or Heun under the reversed dynamics, then the cloud is
/// hulled and re-sampled. Only meaningful when the true sets stay convex.
pub fn step_nonlinear(
    ring: &ConvexPolytope,
    np: &NonlinearProblem,
    control_points: &[Vec2],
    h: f64,
    method: OdeMethod,
    grid: &DirectionGrid,
) -> Result<ConvexPolytope> {
    let advance = |x: &Vec2, u: &Vec2| -> Vec2 {
        let k1 = np.reversed_rhs(x, u);
        match method {
            OdeMethod::Heun => {
                let k2 = np.reversed_rhs(&(x + h * k1), u);
                x + 0.5 * h * (k1 + k2)
            }
            _ => x + h * k1,
        }
    };
    let cloud: Vec<Vec2> = if ring.len() * control_points.len() > 4096 {
        ring.vertices()
            .par_iter()
            .flat_map_iter(|x| control_points.iter().map(move |u| advance(x, u)))
            .collect()
    } else {
        ring.vertices()
            .iter()
            .flat_map(|x| control_points.iter().map(move |u| advance(x, u)))
            .collect()
    };
    let hull = convex_hull(&cloud)?;
    convex_hull(&hull.supporting_points(grid))
}

/// Nonlinear counterpart of [`run_algorithm`]; re-samples after every fine step.
pub fn run_nonlinear(
    np: &NonlinearProblem,
    method: OdeMethod,
    k: usize,
    n: usize,
    grids: &Grids,
) -> Result<ReachFlow> {
    if method == OdeMethod::Exact {
        return Err(invalid("nonlinear propagation supports euler and heun only"));
    }
    let scheme_steps = SchemeSpec::new(Method::Euler, k, n)?;
    let (dt, h) = scheme_steps.steps(np.t0, np.tf);
    let (_, target) = discretize_set(&np.s, &grids.reach)?;
    let (_, control_set) = discretize_set(&np.u, &grids.control)?;
    let control_points = control_set.vertices().to_vec();
    let mut rings = Vec::with_capacity(k + 1);
    rings.push(ReachRing::from_set(np.t0, &target, &grids.reach)?);
    let mut current = rings[0].polytope.clone();
    for i in 0..k {
        for j in 0..n {
            current = step_nonlinear(&current, np, &control_points, h, method, &grids.reach)
                .map_err(|e| Error::NumericOverflow {
                    ring: i + 1,
                    step: j,
                    detail: e.to_string(),
                })?;
            if !current.is_bounded_by(OVERFLOW_LIMIT) {
                return Err(Error::NumericOverflow {
                    ring: i + 1,
                    step: j,
                    detail: format!("coordinates exceed {OVERFLOW_LIMIT:e}"),
                });
            }
        }
        let ring = ReachRing::from_set(np.t0 + (i + 1) as f64 * dt, &current, &grids.reach)?;
        current = ring.polytope.clone();
        rings.push(ring);
    }
    Ok(ReachFlow {
        rings,
        t0: np.t0,
        tf: np.tf,
        dt,
        h,
        k,
        n,
        grids: grids.clone(),
        control_set,
        source: FlowSource::Nonlinear { method },
    })
}

/// Inclusion margin between consecutive rings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionPair {
    pub ring: usize,
    /// Smallest depth of a ring-`i` vertex inside ring `i+1`; zero when ring
    /// `i+1` has empty interior, negative when ring `i` sticks out.
    pub margin: f64,
    pub flagged: bool,
}

/// Strict-expansion report over all consecutive ring pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub eps: f64,
    pub pairs: Vec<ExpansionPair>,
}

impl ExpansionReport {
    pub fn all_strict(&self) -> bool {
        self.pairs.iter().all(|p| !p.flagged)
    }
}

/// Checks `R(t_i) + (ε/3)B ⊂ int R(t_{i+1})` through vertex depths. Pairs with
/// margin below `ε/3`, or without a positive margin at all, are flagged.
pub fn check_strict_expansion(flow: &ReachFlow, eps: f64) -> ExpansionReport {
    let pairs = flow
        .rings
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let (inner, outer) = (&w[0].polytope, &w[1].polytope);
            let margin = if outer.is_full() {
                inner
                    .vertices()
                    .iter()
                    .map(|v| outer.depth(v))
                    .fold(f64::INFINITY, f64::min)
            } else {
                let sticks_out = inner
                    .vertices()
                    .iter()
                    .map(|v| outer.distance(v))
                    .fold(0.0, f64::max);
                -sticks_out
            };
            ExpansionPair {
                ring: i,
                margin,
                flagged: margin < eps / 3.0 || margin <= 0.0,
            }
        })
        .collect();
    ExpansionReport { eps, pairs }
}

/// Outcome of testing whether the union of all rings is convex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnionConvexity {
    pub convex: bool,
    /// A point of the hull of the union that no ring contains.
    pub witness: Option<[f64; 2]>,
    pub gap: f64,
}

/// Samples the hull of the union on a `resolution²` lattice and looks for a
/// point farther than `tol` from every ring.
pub fn check_union_convexity(flow: &ReachFlow, resolution: usize, tol: f64) -> Result<UnionConvexity> {
    let all: Vec<Vec2> = flow
        .rings
        .iter()
        .flat_map(|r| r.polytope.vertices().iter().copied())
        .collect();
    let hull = convex_hull(&all)?;
    let (mut lo, mut hi) = (all[0], all[0]);
    for v in hull.vertices() {
        lo = lo.inf(v);
        hi = hi.sup(v);
    }
    let res = resolution.max(2);
    let (gap, witness) = (0..res * res)
        .into_par_iter()
        .filter_map(|idx| {
            let (a, b) = ((idx % res) as f64, (idx / res) as f64);
            let denom = (res - 1) as f64;
            let x = Vec2::new(
                lo.x + (hi.x - lo.x) * a / denom,
                lo.y + (hi.y - lo.y) * b / denom,
            );
            if !hull.contains(&x, 0.0) {
                return None;
            }
            let d = flow
                .rings
                .iter()
                .map(|r| r.polytope.distance(&x))
                .fold(f64::INFINITY, f64::min);
            Some((d, x))
        })
        .reduce(
            || (0.0, Vec2::repeat(f64::NAN)),
            |a, b| if b.0 > a.0 { b } else { a },
        );
    let convex = gap <= tol;
    Ok(UnionConvexity {
        convex,
        witness: (!convex).then(|| [witness.x, witness.y]),
        gap,
    })
}

/// Manifest written next to the ring CSVs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FlowManifest {
    pub scheme: String,
    pub t0: f64,
    pub tf: f64,
    pub dt: f64,
    pub h: f64,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub reach_directions: usize,
    pub control_directions: usize,
    pub times: Vec<f64>,
    pub degeneracy: Vec<Degeneracy>,
    pub rings: Vec<String>,
    pub expansion: ExpansionReport,
}

impl ReachFlow {
    pub fn scheme_name(&self) -> String {
        match &self.source {
            FlowSource::Linear { scheme, .. } => scheme.method.name().to_string(),
            FlowSource::Nonlinear { method } => format!("nonlinear-{method:?}").to_lowercase(),
        }
    }

    pub fn times(&self) -> Vec<f64> {
        self.rings.iter().map(|r| r.t).collect()
    }

    pub fn manifest(&self, eps: f64) -> FlowManifest {
        FlowManifest {
            scheme: self.scheme_name(),
            t0: self.t0,
            tf: self.tf,
            dt: self.dt,
            h: self.h,
            k: self.k,
            n: self.n,
            reach_directions: self.grids.reach.distinct(),
            control_directions: self.grids.control.distinct(),
            times: self.times(),
            degeneracy: self.rings.iter().map(|r| r.polytope.degeneracy()).collect(),
            rings: (0..self.rings.len()).map(|i| format!("ring_{i}.csv")).collect(),
            expansion: check_strict_expansion(self, eps),
        }
    }

    /// Writes `ring_<i>.csv` per ring and `flow.json` into `dir`.
    pub fn write(&self, dir: &Path, eps: f64) -> Result<()> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| Error::Output { path, source }
        };
        fs::create_dir_all(dir).map_err(io(dir))?;
        for (i, r) in self.rings.iter().enumerate() {
            let path = dir.join(format!("ring_{i}.csv"));
            fs::write(&path, r.polytope.to_csv()).map_err(io(&path))?;
        }
        let path = dir.join("flow.json");
        let text = serde_json::to_string_pretty(&self.manifest(eps)).expect("manifest serializes");
        fs::write(&path, text).map_err(io(&path))
    }
}
