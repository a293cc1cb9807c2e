//! Discrete adjoint and reconstruction of time-optimal bang-bang controls.
//!
//! For a ring vertex `y` of `R(t_i)` with outer normal `ζ`, the adjoint is run
//! backwards over all fine nodes, `η_{k(j-1)} = η_{kj} Φ_h(t_{kj}, t_{k(j-1)})`,
//! starting from `η_{(i-1)N} = ζ`. The control `û_{kj} = sign(η_{kj} B̄)ᵀ`
//! satisfies the discrete maximum principle and steers the discrete
//! trajectory from the target to the boundary point of the ring in direction `ζ`.
//!
//! Only quadrature and combination schemes are covered, with a point target
//! and the control box `[-1, 1]^m`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::geom::{Degeneracy, Direction, Mat2, Vec2};
use crate::lincontrol::{phi_step, ConvexSet, ReversedProblem};
use crate::reachset::{FlowSource, ReachFlow, SchemeSpec};

/// Values of `|η B̄|` below this count as zero when counting switches.
pub const SWITCH_DEAD_BAND: f64 = 1e-9;

fn linear_source(flow: &ReachFlow) -> Result<(&ReversedProblem, &SchemeSpec)> {
    match &flow.source {
        FlowSource::Linear { problem, scheme } if scheme.method.rule().is_some() => Ok((problem, scheme)),
        FlowSource::Linear { scheme, .. } => Err(invalid(format!(
            "control reconstruction needs a quadrature or combination scheme, not {}",
            scheme.method
        ))),
        FlowSource::Nonlinear { .. } => Err(invalid("control reconstruction needs a linear problem")),
    }
}

fn check_ring(flow: &ReachFlow, ring: usize) -> Result<()> {
    if ring == 0 || ring >= flow.rings.len() {
        return Err(invalid(format!("ring index must be in 1..={}, got {ring}", flow.rings.len() - 1)));
    }
    Ok(())
}

/// Rank of `[B̄, ĀB̄]` at time `t`; the convergence of reconstructed controls
/// is only expected at full rank 2.
pub fn kalman_rank(p: &ReversedProblem, t: f64) -> usize {
    let b = p.bbar.at(t);
    let ab = p.abar.at(t) * b;
    let cols: Vec<Vec2> = (0..p.control_dim).flat_map(|c| [b.column(c).into_owned(), ab.column(c).into_owned()]).collect();
    let scale = cols.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0;
    }
    let tol = 1e-12 * scale * scale;
    for (i, a) in cols.iter().enumerate() {
        for c in &cols[i + 1..] {
            if crate::geom::cross(a, c).abs() > tol {
                return 2;
            }
        }
    }
    1
}

/// Outer normal at the vertex that reach direction `k` selected on ring `ring`.
///
/// The generating direction lies in the vertex's normal cone by construction.
pub fn terminal_normal(flow: &ReachFlow, ring: usize, k: usize) -> Result<Direction> {
    let r = flow.rings.get(ring).ok_or_else(|| invalid(format!("no ring {ring}")))?;
    if r.polytope.degeneracy() != Degeneracy::Full {
        return Err(Error::NoNormalCone(format!(
            "ring {ring} is a {:?} and has no interior",
            r.polytope.degeneracy()
        )));
    }
    flow.grids
        .reach
        .get(k)
        .cloned()
        .ok_or_else(|| invalid(format!("direction index {k} out of range 0..{}", flow.grids.reach.len())))
}

/// Adjoint row vectors on the fine nodes of coarse intervals `0..ring`.
#[derive(Clone, Debug, PartialEq)]
pub struct AdjointPath {
    pub ring: usize,
    pub zeta: Vec2,
    pub t0: f64,
    pub h: f64,
    pub n: usize,
    /// `eta[k][j]` at node `t_k + j h`, `j = 0..=N`.
    pub eta: Vec<Vec<Vec2>>,
}

impl AdjointPath {
    pub fn node_time(&self, k: usize, j: usize) -> f64 {
        self.t0 + (k * self.n + j) as f64 * self.h
    }
}

/// One-step matrices `Φ_h(t_{k,j+1}, t_kj)` for every interval up to `ring`.
fn step_matrices(p: &ReversedProblem, scheme: &SchemeSpec, ring: usize) -> Result<Vec<Vec<Mat2>>> {
    let (dt, h) = scheme.steps(p.t0, p.tf);
    (0..ring)
        .map(|k| {
            (0..scheme.n)
                .map(|j| phi_step(scheme.method.ode(), &p.abar, p.t0 + k as f64 * dt + j as f64 * h, h))
                .collect()
        })
        .collect()
}

/// Solves the discrete adjoint backwards from `η = ζ` at ring `ring`.
pub fn solve_adjoint(flow: &ReachFlow, zeta: &Vec2, ring: usize) -> Result<AdjointPath> {
    let (p, scheme) = linear_source(flow)?;
    check_ring(flow, ring)?;
    if !(zeta.x.is_finite() && zeta.y.is_finite()) || zeta.norm() == 0.0 {
        return Err(invalid("the terminal adjoint must be a nonzero finite vector"));
    }
    let n = scheme.n;
    let steps = step_matrices(p, scheme, ring)?;
    let mut eta = vec![vec![Vec2::zeros(); n + 1]; ring];
    let mut row = zeta.transpose();
    for k in (0..ring).rev() {
        eta[k][n] = row.transpose();
        for j in (1..=n).rev() {
            let phi = steps[k][j - 1];
            if phi.determinant().abs() < f64::EPSILON {
                return Err(Error::SingularStep { interval: k, step: j - 1 });
            }
            row *= phi;
            eta[k][j - 1] = row.transpose();
        }
    }
    Ok(AdjointPath { ring, zeta: *zeta, t0: p.t0, h: flow.h, n, eta })
}

/// Piecewise-constant control values on the fine nodes of intervals `0..K'`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ControlSequence {
    pub control_dim: usize,
    pub t0: f64,
    pub h: f64,
    pub n: usize,
    /// `values[k][j]` for node `j = 0..=N` of interval `k`; the second
    /// component is zero for scalar controls.
    pub values: Vec<Vec<Vec2>>,
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

impl ControlSequence {
    /// Constant control on `intervals` coarse intervals.
    pub fn constant(control_dim: usize, t0: f64, h: f64, n: usize, intervals: usize, u: Vec2) -> Self {
        Self { control_dim, t0, h, n, values: vec![vec![u; n + 1]; intervals] }
    }

    /// Horizon length covered by the sequence.
    pub fn span(&self) -> f64 {
        (self.values.len() * self.n) as f64 * self.h
    }

    /// Value of the piecewise-constant control `u_h(t)`: node `j` acts on
    /// `[t_kj, t_{k(j+1)})`, the last node's value closes the horizon.
    pub fn at(&self, t: f64) -> Vec2 {
        let cells = self.values.len() * self.n;
        let c = (((t - self.t0) / self.h).floor().max(0.0) as usize).min(cells - 1);
        self.values[c / self.n][c % self.n]
    }

    /// Number of sign changes across the fine cells, per component.
    pub fn switches(&self) -> usize {
        let mut count = 0;
        for comp in 0..self.control_dim {
            let mut last = 0.0;
            for k in 0..self.values.len() {
                for j in 0..self.n {
                    let s = self.values[k][j][comp];
                    if s != 0.0 {
                        if last != 0.0 && s != last {
                            count += 1;
                        }
                        last = s;
                    }
                }
            }
        }
        count
    }
}

/// Bang-bang control `û_kj = sign(η_kj B̄(t_kj))ᵀ`, with `sign(0) = 0`.
pub fn reconstruct_control(flow: &ReachFlow, path: &AdjointPath) -> Result<ControlSequence> {
    let (p, _) = linear_source(flow)?;
    let values = path
        .eta
        .iter()
        .enumerate()
        .map(|(k, row)| {
            row.iter()
                .enumerate()
                .map(|(j, eta)| {
                    let v = eta.transpose() * p.bbar.at(path.node_time(k, j));
                    let mut u = Vec2::new(sign(v[0]), sign(v[1]));
                    if p.control_dim == 1 {
                        u.y = 0.0;
                    }
                    u
                })
                .collect()
        })
        .collect();
    Ok(ControlSequence { control_dim: p.control_dim, t0: path.t0, h: path.h, n: path.n, values })
}

/// Sign changes of `η B̄` along the path, ignoring values inside the dead band.
pub fn count_switches(flow: &ReachFlow, path: &AdjointPath) -> Result<usize> {
    let (p, _) = linear_source(flow)?;
    let mut count = 0;
    for comp in 0..p.control_dim {
        let mut last = 0.0;
        for k in 0..path.eta.len() {
            for j in 0..path.n {
                let v = (path.eta[k][j].transpose() * p.bbar.at(path.node_time(k, j)))[comp];
                if v.abs() < SWITCH_DEAD_BAND {
                    continue;
                }
                let s = sign(v);
                if last != 0.0 && s != last {
                    count += 1;
                }
                last = s;
            }
        }
    }
    Ok(count)
}

/// Discrete trajectory of the reversed system from the target point.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteTrajectory {
    /// Fine node times.
    pub times: Vec<f64>,
    /// States at the fine nodes. Coarse nodes carry the exact recursion; nodes
    /// inside an interval carry the partial quadrature sum up to that node.
    pub states: Vec<Vec2>,
    /// Control acting on the cell that starts at each node.
    pub controls: Vec<Vec2>,
    pub control_dim: usize,
}

impl DiscreteTrajectory {
    pub fn endpoint(&self) -> Vec2 {
        *self.states.last().expect("trajectory has nodes")
    }

    /// CSV with header `t,x1,x2,u1` (plus `u2` for planar controls).
    pub fn to_csv(&self) -> String {
        let mut s = String::from(if self.control_dim == 2 { "t,x1,x2,u1,u2\n" } else { "t,x1,x2,u1\n" });
        for ((t, x), u) in self.times.iter().zip(&self.states).zip(&self.controls) {
            let _ = write!(s, "{t:e},{:e},{:e},{:e}", x.x, x.y, u.x);
            if self.control_dim == 2 {
                let _ = write!(s, ",{:e}", u.y);
            }
            s.push('\n');
        }
        s
    }

    /// Writes `traj_ring<i>_dir<k>.csv` into `dir`.
    pub fn write(&self, dir: &Path, ring: usize, k: usize) -> Result<()> {
        fs::create_dir_all(dir).map_err(|source| Error::Output { path: dir.to_path_buf(), source })?;
        let path = dir.join(format!("traj_ring{ring}_dir{k}.csv"));
        fs::write(&path, self.to_csv()).map_err(|source| Error::Output { path, source })
    }
}

/// Forward recursion of the scheme with given controls:
/// `y_{k+1} = Φ_h(t_{k+1}, t_k) y_k + h Σ_j c_j Φ_h(t_{k+1}, t_kj) B̄(t_kj) u_kj`.
pub fn simulate(flow: &ReachFlow, controls: &ControlSequence) -> Result<DiscreteTrajectory> {
    let (p, scheme) = linear_source(flow)?;
    let rule = scheme.method.rule().expect("checked by linear_source");
    let ring = controls.values.len();
    if ring == 0 || ring > flow.k || controls.n != scheme.n || (controls.h - flow.h).abs() > 1e-12 * flow.h {
        return Err(invalid(format!(
            "controls cover {ring} intervals with N={} and h={}, flow has K={} N={} h={}",
            controls.n, controls.h, flow.k, scheme.n, flow.h
        )));
    }
    if controls.values.iter().any(|row| row.len() != scheme.n + 1) {
        return Err(invalid("each interval needs N+1 node controls"));
    }
    let start = match &p.s {
        ConvexSet::Polytope(s) if s.degeneracy() == Degeneracy::Point => s.vertices()[0],
        _ => return Err(invalid("trajectories start from a point target")),
    };
    let n = scheme.n;
    let w = rule.weights(n);
    let steps = step_matrices(p, scheme, ring)?;
    let h = flow.h;
    let mut times = Vec::with_capacity(ring * n + 1);
    let mut states = Vec::with_capacity(ring * n + 1);
    let mut us = Vec::with_capacity(ring * n + 1);
    let mut y = start;
    for k in 0..ring {
        let tk = |j: usize| p.t0 + (k * n + j) as f64 * h;
        // forcing terms carried to the current node
        let mut forced = Vec2::zeros();
        let mut free = y;
        for j in 0..n {
            times.push(tk(j));
            states.push(free + forced);
            us.push(controls.values[k][j]);
            forced += h * w[j] * p.bbar.at(tk(j)) * controls.values[k][j];
            forced = steps[k][j] * forced;
            free = steps[k][j] * free;
        }
        y = free + forced + h * w[n] * p.bbar.at(tk(n)) * controls.values[k][n];
    }
    times.push(p.t0 + (ring * n) as f64 * h);
    states.push(y);
    us.push(controls.values[ring - 1][n]);
    Ok(DiscreteTrajectory { times, states, controls: us, control_dim: p.control_dim })
}

/// `∫ ‖u(t) - v(t)‖₁ dt` over the common horizon, exact for piecewise-constant
/// controls on possibly different grids.
pub fn l1_distance(u: &ControlSequence, v: &ControlSequence) -> Result<f64> {
    if u.control_dim != v.control_dim || (u.t0 - v.t0).abs() > 1e-12 {
        return Err(invalid("controls differ in dimension or start time"));
    }
    let span = u.span();
    if (span - v.span()).abs() > 1e-9 * span.max(1.0) {
        return Err(invalid(format!("control horizons differ: {span} vs {}", v.span())));
    }
    let mut breaks: Vec<f64> = Vec::new();
    for c in [u, v] {
        let cells = c.values.len() * c.n;
        breaks.extend((0..=cells).map(|i| c.t0 + i as f64 * c.h));
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * span.max(1.0));
    let mut total = 0.0;
    for win in breaks.windows(2) {
        let (a, b) = (win[0], win[1]);
        let mid = 0.5 * (a + b);
        total += (b - a) * (u.at(mid) - v.at(mid)).lp_norm(1);
    }
    Ok(total)
}

/// Samples a control function at cell midpoints of a grid with step `h`.
pub fn sample_control(
    f: impl Fn(f64) -> Vec2,
    control_dim: usize,
    t0: f64,
    h: f64,
    n: usize,
    intervals: usize,
) -> ControlSequence {
    let values = (0..intervals)
        .map(|k| {
            (0..=n)
                .map(|j| {
                    let c = (k * n + j.min(n - 1)) as f64;
                    f(t0 + (c + 0.5) * h)
                })
                .collect()
        })
        .collect();
    ControlSequence { control_dim, t0, h, n, values }
}

/// Reconstructed control and trajectory for the vertex picked by direction `k`
/// on ring `ring`.
#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub ring: usize,
    pub direction: usize,
    pub zeta: Vec2,
    pub path: AdjointPath,
    pub controls: ControlSequence,
    pub trajectory: DiscreteTrajectory,
    pub switches: usize,
}

pub fn reconstruct(flow: &ReachFlow, ring: usize, k: usize) -> Result<Reconstruction> {
    let zeta = terminal_normal(flow, ring, k)?.into_vec();
    let path = solve_adjoint(flow, &zeta, ring)?;
    let controls = reconstruct_control(flow, &path)?;
    let trajectory = simulate(flow, &controls)?;
    let switches = count_switches(flow, &path)?;
    Ok(Reconstruction { ring, direction: k, zeta, path, controls, trajectory, switches })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lincontrol::{Coefficient, LinearProblem};
    use crate::reachset::{run_algorithm, Grids, Method};

    fn double_integrator(method: Method, k: usize, n: usize) -> ReachFlow {
        let p = LinearProblem::new(
            Coefficient::Constant(Mat2::new(0.0, 1.0, 0.0, 0.0)),
            Coefficient::Constant(Mat2::new(0.0, 0.0, 1.0, 0.0)),
            1,
            ConvexSet::interval(-1.0, 1.0).unwrap(),
            ConvexSet::point(Vec2::zeros()),
            0.0,
            1.0,
        )
        .unwrap();
        run_algorithm(&p.reverse(), &SchemeSpec::new(method, k, n).unwrap(), &Grids::new(1, 50, 2).unwrap()).unwrap()
    }

    fn free_motion() -> ReachFlow {
        let p = LinearProblem::new(
            Coefficient::Constant(Mat2::zeros()),
            Coefficient::Constant(Mat2::identity()),
            2,
            ConvexSet::axis_box(Vec2::new(-1.0, -1.0), Vec2::new(1.0, 1.0)).unwrap(),
            ConvexSet::point(Vec2::zeros()),
            0.0,
            1.0,
        )
        .unwrap();
        run_algorithm(&p.reverse(), &SchemeSpec::new(Method::RiemannEuler, 4, 2).unwrap(), &Grids::new(2, 16, 16).unwrap())
            .unwrap()
    }

    #[test]
    fn zero_system_matrix_keeps_adjoint_constant() {
        let flow = free_motion();
        let zeta = Vec2::new(0.6, -0.8);
        let path = solve_adjoint(&flow, &zeta, 3).unwrap();
        assert!(path.eta.iter().flatten().all(|e| *e == zeta));
        assert!(solve_adjoint(&flow, &Vec2::zeros(), 3).is_err());
        assert!(solve_adjoint(&flow, &zeta, 0).is_err());
    }

    #[test]
    fn sign_rule_cases() {
        assert_eq!(sign(0.5), 1.0);
        assert_eq!(sign(-2.0), -1.0);
        assert_eq!(sign(0.0), 0.0);
        // B̄ = -I, η = (-0.5, 2) gives ηB̄ = (0.5, -2)
        let flow = free_motion();
        let path = solve_adjoint(&flow, &Vec2::new(-0.5, 2.0), 1).unwrap();
        let u = reconstruct_control(&flow, &path).unwrap();
        assert_eq!(u.values[0][0], Vec2::new(1.0, -1.0));
        assert_eq!(u.switches(), 0);
        let path = solve_adjoint(&flow, &Vec2::new(0.0, -3.0), 1).unwrap();
        let u = reconstruct_control(&flow, &path).unwrap();
        assert_eq!(u.values[0][1], Vec2::new(0.0, 1.0));
    }

    #[test]
    fn double_integrator_adjoint_matches_closed_form() {
        // Ā = [[0,-1],[0,0]], η(t) = ζ e^{Ā(t_i - t)} = (ζ1, ζ2 - ζ1 (t_i - t))
        let flow = double_integrator(Method::RiemannExact, 5, 5);
        let zeta = Vec2::new(0.3, -0.7);
        let path = solve_adjoint(&flow, &zeta, 5).unwrap();
        for (k, row) in path.eta.iter().enumerate() {
            for (j, e) in row.iter().enumerate() {
                let t = path.node_time(k, j);
                let exact = Vec2::new(zeta.x, zeta.y - zeta.x * (1.0 - t));
                assert!((e - exact).norm() < 1e-12, "{k} {j}");
            }
        }
    }

    #[test]
    fn adjoint_is_reversible() {
        let flow = double_integrator(Method::TrapezoidHeun, 5, 5);
        let (p, scheme) = linear_source(&flow).unwrap();
        let steps = step_matrices(p, scheme, 4).unwrap();
        let zeta = Vec2::new(-0.2, 0.9);
        let path = solve_adjoint(&flow, &zeta, 4).unwrap();
        let mut row = path.eta[0][0].transpose();
        for k in 0..4 {
            for j in 0..5 {
                row *= steps[k][j].try_inverse().unwrap();
            }
        }
        assert!((row.transpose() - zeta).norm() < 1e-10);
    }

    #[test]
    fn zero_controls_stay_at_origin() {
        let flow = double_integrator(Method::RiemannEuler, 5, 5);
        let u = ControlSequence::constant(1, 0.0, flow.h, 5, 5, Vec2::zeros());
        let traj = simulate(&flow, &u).unwrap();
        assert!(traj.states.iter().all(|x| *x == Vec2::zeros()));
        assert_eq!(traj.times.len(), 26);
        let bad = ControlSequence::constant(1, 0.0, flow.h, 4, 5, Vec2::zeros());
        assert!(simulate(&flow, &bad).is_err());
    }

    #[test]
    fn l1_distance_cases() {
        let u = ControlSequence::constant(1, 0.0, 0.1, 5, 2, Vec2::new(1.0, 0.0));
        let v = ControlSequence::constant(1, 0.0, 0.1, 5, 2, Vec2::new(-1.0, 0.0));
        assert_eq!(l1_distance(&u, &u).unwrap(), 0.0);
        assert!((l1_distance(&u, &v).unwrap() - 2.0).abs() < 1e-12);
        // same horizon on a halved grid
        let w = ControlSequence::constant(1, 0.0, 0.05, 5, 4, Vec2::new(-1.0, 0.0));
        assert!((l1_distance(&u, &w).unwrap() - 2.0).abs() < 1e-12);
        let short = ControlSequence::constant(1, 0.0, 0.1, 5, 1, Vec2::zeros());
        assert!(l1_distance(&u, &short).is_err());
    }

    #[test]
    fn rk_and_segment_flows_are_rejected() {
        let flow = double_integrator(Method::Euler, 5, 5);
        assert!(solve_adjoint(&flow, &Vec2::x(), 1).is_err());
        let p = LinearProblem::new(
            Coefficient::Constant(Mat2::new(0.0, -1.0, 2.0, 3.0)),
            Coefficient::Constant(Mat2::new(1.0, 0.0, -1.0, 0.0)),
            1,
            ConvexSet::interval(-1.0, 1.0).unwrap(),
            ConvexSet::point(Vec2::zeros()),
            0.0,
            1.0,
        )
        .unwrap();
        let flow = run_algorithm(&p.reverse(), &SchemeSpec::new(Method::RiemannEuler, 5, 2).unwrap(), &Grids::new(1, 20, 2).unwrap())
            .unwrap();
        assert!(matches!(terminal_normal(&flow, 3, 0), Err(Error::NoNormalCone(_))));
    }

    #[test]
    fn kalman_rank_of_examples() {
        let flow = double_integrator(Method::RiemannEuler, 2, 2);
        let (p, _) = linear_source(&flow).unwrap();
        assert_eq!(kalman_rank(p, 0.0), 2);
        // B along an eigenvector of A: the segment example
        let seg = LinearProblem::new(
            Coefficient::Constant(Mat2::new(0.0, -1.0, 2.0, 3.0)),
            Coefficient::Constant(Mat2::new(1.0, 0.0, -1.0, 0.0)),
            1,
            ConvexSet::interval(-1.0, 1.0).unwrap(),
            ConvexSet::point(Vec2::zeros()),
            0.0,
            2.0,
        )
        .unwrap();
        assert_eq!(kalman_rank(&seg.reverse(), 0.0), 1);
    }

    #[test]
    fn trajectory_csv_layout() {
        let flow = double_integrator(Method::RiemannEuler, 5, 5);
        let r = reconstruct(&flow, 2, 7).unwrap();
        let csv = r.trajectory.to_csv();
        assert!(csv.starts_with("t,x1,x2,u1\n"));
        assert_eq!(csv.lines().count(), 1 + 11);
    }
}
