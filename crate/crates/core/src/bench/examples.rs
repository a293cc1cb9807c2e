use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geom::{Mat2, Vec2};
use crate::lincontrol::{
    expm_2x2, Coefficient, ConvexSet, LinearProblem, NonlinearProblem, OdeMethod, ReversedProblem,
};
use crate::reachset::{run_algorithm, run_nonlinear, Grids, Method, ReachFlow, SchemeSpec};

/// Registered example problems.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ExampleId {
    /// Free motion, disk control, disk target.
    Ex51Ball,
    /// Free motion, box control, disk target.
    Ex51Box,
    /// Free motion, box control, the origin as target.
    Ex51Origin,
    /// Double integrator to the origin.
    Ex52a,
    /// Double integrator to a small disk.
    Ex52aBall,
    /// Harmonic oscillator.
    Ex52b,
    /// Two-input system with parallelogram reachable sets.
    Ex53,
    Ex54,
    /// Bilinear system `r' = ru, φ' = 1`.
    Ex55,
    /// Non-normal single input: reachable sets are segments.
    Ex56,
    /// Oscillator with input gain decaying like `1/t²`.
    Ex57,
    Ex58a,
    Ex58b,
    /// Double integrator with control set `[1, 2]`.
    Ex59ShiftedU,
}

impl ExampleId {
    pub const ALL: [ExampleId; 14] = [
        Self::Ex51Ball,
        Self::Ex51Box,
        Self::Ex51Origin,
        Self::Ex52a,
        Self::Ex52aBall,
        Self::Ex52b,
        Self::Ex53,
        Self::Ex54,
        Self::Ex55,
        Self::Ex56,
        Self::Ex57,
        Self::Ex58a,
        Self::Ex58b,
        Self::Ex59ShiftedU,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Ex51Ball => "ex51-ball",
            Self::Ex51Box => "ex51-box",
            Self::Ex51Origin => "ex51-origin",
            Self::Ex52a => "ex52a",
            Self::Ex52aBall => "ex52a-ball",
            Self::Ex52b => "ex52b",
            Self::Ex53 => "ex53",
            Self::Ex54 => "ex54",
            Self::Ex55 => "ex55",
            Self::Ex56 => "ex56",
            Self::Ex57 => "ex57",
            Self::Ex58a => "ex58a",
            Self::Ex58b => "ex58b",
            Self::Ex59ShiftedU => "ex59-shifted-U",
        }
    }
}

impl fmt::Display for ExampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExampleId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .find(|id| id.name().eq_ignore_ascii_case(s.trim()))
            .copied()
            .ok_or_else(|| Error::UnknownExample(s.to_string()))
    }
}

#[derive(Clone, Debug)]
pub enum ProblemKind {
    Linear(LinearProblem),
    Nonlinear(NonlinearProblem),
}

/// A registered problem with its default discretization.
#[derive(Clone, Debug)]
pub struct ExampleSpec {
    pub id: ExampleId,
    pub problem: ProblemKind,
    /// Problems stated directly in reversed form (time-varying end-time family).
    pub reversed: Option<ReversedProblem>,
    pub method: Method,
    pub k: usize,
    pub n: usize,
    pub n_r: usize,
    pub n_u: usize,
}

fn c(m: Mat2) -> Coefficient {
    Coefficient::Constant(m)
}

fn origin() -> ConvexSet {
    ConvexSet::point(Vec2::zeros())
}

fn unit_box() -> ConvexSet {
    ConvexSet::axis_box(Vec2::new(-1.0, -1.0), Vec2::new(1.0, 1.0)).expect("valid box")
}

fn disk(r: f64) -> ConvexSet {
    ConvexSet::ball(Vec2::zeros(), r).expect("valid disk")
}

fn interval(lo: f64, hi: f64) -> ConvexSet {
    ConvexSet::interval(lo, hi).expect("valid interval")
}

/// Single input column `b`, padded.
fn column(b1: f64, b2: f64) -> Mat2 {
    Mat2::new(b1, 0.0, b2, 0.0)
}

const EX53_A: [f64; 4] = [0.0, -1.0, 2.0, 3.0];

fn ex53_a() -> Mat2 {
    Mat2::new(EX53_A[0], EX53_A[1], EX53_A[2], EX53_A[3])
}

fn linear(a: Mat2, b: Mat2, m: usize, u: ConvexSet, s: ConvexSet, t0: f64, tf: f64) -> ProblemKind {
    ProblemKind::Linear(LinearProblem::new(c(a), c(b), m, u, s, t0, tf).expect("registered problem is valid"))
}

/// Looks up an example with its default settings.
pub fn example(id: ExampleId) -> ExampleSpec {
    let z = Mat2::zeros();
    let id2 = Mat2::identity();
    let dbl = Mat2::new(0.0, 1.0, 0.0, 0.0);
    let spec = |problem, method, k, n, n_r, n_u| ExampleSpec {
        id,
        problem,
        reversed: None,
        method,
        k,
        n,
        n_r,
        n_u,
    };
    match id {
        ExampleId::Ex51Ball => spec(linear(z, id2, 2, disk(1.0), disk(0.25), 0.0, 1.0), Method::RiemannEuler, 10, 2, 100, 100),
        ExampleId::Ex51Box => spec(linear(z, id2, 2, unit_box(), disk(0.25), 0.0, 1.0), Method::RiemannEuler, 10, 2, 100, 100),
        ExampleId::Ex51Origin => spec(linear(z, id2, 2, unit_box(), origin(), 0.0, 1.0), Method::RiemannEuler, 10, 2, 100, 100),
        ExampleId::Ex52a => spec(linear(dbl, column(0.0, 1.0), 1, interval(-1.0, 1.0), origin(), 0.0, 1.0), Method::RiemannEuler, 5, 5, 50, 2),
        ExampleId::Ex52aBall => spec(linear(dbl, column(0.0, 1.0), 1, interval(-1.0, 1.0), disk(0.05), 0.0, 1.0), Method::RiemannEuler, 5, 5, 50, 2),
        ExampleId::Ex52b => spec(
            linear(Mat2::new(0.0, 1.0, -1.0, 0.0), column(0.0, 1.0), 1, interval(-1.0, 1.0), origin(), 0.0, 6.0),
            Method::RiemannEuler,
            40,
            5,
            100,
            2,
        ),
        ExampleId::Ex53 => spec(
            linear(ex53_a(), Mat2::new(1.0, -1.0, -1.0, 2.0), 2, unit_box(), origin(), 0.0, 1.0),
            Method::RiemannEuler,
            10,
            2,
            50,
            50,
        ),
        ExampleId::Ex54 => spec(linear(ex53_a(), id2, 2, disk(1.0), origin(), 0.0, 1.0), Method::RiemannEuler, 10, 2, 50, 50),
        ExampleId::Ex55 => {
            let np = NonlinearProblem::new(
                |x: &Vec2, u: &Vec2| Vec2::new(-x.y + x.x * u.x, x.x + x.y * u.x),
                1,
                interval(-1.0, 1.0),
                disk(0.25),
                0.0,
                1.0,
            )
            .expect("registered problem is valid");
            spec(ProblemKind::Nonlinear(np), Method::Euler, 5, 2, 100, 2)
        }
        ExampleId::Ex56 => spec(
            linear(ex53_a(), column(1.0, -1.0), 1, interval(-1.0, 1.0), origin(), 0.0, 2.0),
            Method::Euler,
            40,
            2,
            100,
            2,
        ),
        ExampleId::Ex57 => {
            // x1' = -x2, x2' = x1 - u/t², t in [1, 20]
            let (t0, tf) = (1.0, 20.0);
            let a = Mat2::new(0.0, -1.0, 1.0, 0.0);
            let b = move |t: f64| column(0.0, -1.0 / (t * t));
            let forward = LinearProblem::new(
                c(a),
                Coefficient::time_varying(b),
                1,
                interval(-1.0, 1.0),
                origin(),
                t0,
                tf,
            )
            .expect("registered problem is valid");
            // Ring at σ: initial states at t0 steered to the origin by time σ,
            // x0 = -∫ e^{A(t0-s)} B(s) u(s) ds.
            let reversed = ReversedProblem::from_reversed(
                c(z),
                Coefficient::time_varying(move |s| -expm_2x2(&(a * (t0 - s))) * b(s)),
                1,
                interval(-1.0, 1.0),
                origin(),
                t0,
                tf,
            )
            .expect("registered problem is valid");
            let mut s = spec(ProblemKind::Linear(forward), Method::TrapezoidExact, 190, 10, 100, 2);
            s.reversed = Some(reversed);
            s
        }
        ExampleId::Ex58a => spec(
            linear(ex53_a(), Mat2::new(1.0, -1.0, -1.0, 2.0), 2, unit_box(), origin(), 0.0, 100.0),
            Method::RiemannEuler,
            200,
            2,
            100,
            100,
        ),
        ExampleId::Ex58b => spec(linear(ex53_a(), id2, 2, disk(1.0), origin(), 0.0, 100.0), Method::RiemannEuler, 200, 2, 100, 100),
        ExampleId::Ex59ShiftedU => spec(
            linear(dbl, column(0.0, 1.0), 1, interval(1.0, 2.0), origin(), 0.0, 2.0),
            Method::RiemannEuler,
            20,
            5,
            100,
            2,
        ),
    }
}

impl ExampleSpec {
    pub fn t0(&self) -> f64 {
        match &self.problem {
            ProblemKind::Linear(p) => p.t0,
            ProblemKind::Nonlinear(p) => p.t0,
        }
    }

    pub fn tf(&self) -> f64 {
        match &self.problem {
            ProblemKind::Linear(p) => p.tf,
            ProblemKind::Nonlinear(p) => p.tf,
        }
    }

    pub fn control_dim(&self) -> usize {
        match &self.problem {
            ProblemKind::Linear(p) => p.control_dim,
            ProblemKind::Nonlinear(p) => p.control_dim,
        }
    }

    /// Reversed linear problem driving the rings, if the example is linear.
    pub fn reversed_problem(&self) -> Option<ReversedProblem> {
        match (&self.reversed, &self.problem) {
            (Some(r), _) => Some(r.clone()),
            (None, ProblemKind::Linear(p)) => Some(p.reverse()),
            (None, ProblemKind::Nonlinear(_)) => None,
        }
    }

    /// Replaces the horizon end, keeping `t0`.
    pub fn with_tf(mut self, tf: f64) -> Result<Self> {
        let t0 = self.t0();
        if !(tf > t0 && tf.is_finite()) {
            return Err(crate::error::invalid(format!("tf must exceed t0 = {t0}, got {tf}")));
        }
        match &mut self.problem {
            ProblemKind::Linear(p) => p.tf = tf,
            ProblemKind::Nonlinear(p) => p.tf = tf,
        }
        if let Some(r) = &mut self.reversed {
            r.tf = tf;
        }
        Ok(self)
    }

    /// Number of coarse intervals giving fine step `h` with `n` fine steps each.
    pub fn k_for_step(&self, h: f64, n: usize) -> Result<usize> {
        if !(h > 0.0) || n == 0 {
            return Err(crate::error::invalid(format!("bad step h={h}, N={n}")));
        }
        let k = ((self.tf() - self.t0()) / (n as f64 * h)).round() as usize;
        if k == 0 {
            return Err(crate::error::invalid(format!("step h={h} exceeds the horizon")));
        }
        Ok(k)
    }

    /// Computes the rings with the given discretization.
    pub fn run(&self, method: Method, k: usize, n: usize, n_r: usize, n_u: usize) -> Result<ReachFlow> {
        let grids = Grids::new(self.control_dim(), n_r, n_u)?;
        match &self.problem {
            ProblemKind::Nonlinear(np) => {
                let ode = match method {
                    Method::Euler | Method::RiemannEuler => OdeMethod::Euler,
                    Method::Heun | Method::TrapezoidHeun => OdeMethod::Heun,
                    other => {
                        return Err(crate::error::invalid(format!(
                            "{} is not available for nonlinear dynamics",
                            other
                        )))
                    }
                };
                run_nonlinear(np, ode, k, n, &grids)
            }
            ProblemKind::Linear(_) => {
                let p = self.reversed_problem().expect("linear example");
                run_algorithm(&p, &SchemeSpec::new(method, k, n)?, &grids)
            }
        }
    }

    /// Computes the rings with the registered defaults.
    pub fn run_default(&self) -> Result<ReachFlow> {
        self.run(self.method, self.k, self.n, self.n_r, self.n_u)
    }
}
