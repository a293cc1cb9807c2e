//! JSON run configuration for the command line tool.
//!
//! ```json
//! {
//!   "problem": {
//!     "A": [[0, 1], [0, 0]],
//!     "B": [[0], [1]],
//!     "U": { "type": "interval", "lo": -1, "hi": 1 },
//!     "S": { "type": "point", "x": [0, 0] },
//!     "t0": 0, "tf": 1
//!   },
//!   "method": "riemann-euler", "K": 5, "N": 5, "N_R": 50,
//!   "grid": { "lo": [-1, -1], "hi": [1, 1], "dx": 0.02 }
//! }
//! ```
//!
//! `example` may replace `problem`; scalar fields left out fall back to the
//! example's defaults.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bench::{example, ExampleId, ExampleSpec, ProblemKind};
use crate::error::{Error, Result};
use crate::geom::{convex_hull, Mat2, Vec2};
use crate::lincontrol::{Coefficient, ConvexSet, LinearProblem};
use crate::mintime::TestGrid;
use crate::reachset::Method;

/// Set description in a config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum SetSpec {
    Point { x: [f64; 2] },
    Segment { a: [f64; 2], b: [f64; 2] },
    Box { lo: [f64; 2], hi: [f64; 2] },
    Ball { center: [f64; 2], radius: f64 },
    /// Scalar control interval.
    Interval { lo: f64, hi: f64 },
    Polytope { vertices: Vec<[f64; 2]> },
}

impl SetSpec {
    pub fn build(&self) -> Result<ConvexSet> {
        let v = |p: &[f64; 2]| Vec2::new(p[0], p[1]);
        Ok(match self {
            Self::Point { x } => ConvexSet::point(v(x)),
            Self::Segment { a, b } => ConvexSet::Polytope(convex_hull(&[v(a), v(b)])?),
            Self::Box { lo, hi } => ConvexSet::axis_box(v(lo), v(hi))?,
            Self::Ball { center, radius } => ConvexSet::ball(v(center), *radius)?,
            Self::Interval { lo, hi } => ConvexSet::interval(*lo, *hi)?,
            Self::Polytope { vertices } => {
                ConvexSet::Polytope(convex_hull(&vertices.iter().map(v).collect::<Vec<_>>())?)
            }
        })
    }
}

/// Constant-coefficient linear problem given inline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    #[serde(rename = "A")]
    pub a: [[f64; 2]; 2],
    /// Two rows with one or two columns; the column count is the control dimension.
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(rename = "U")]
    pub u: SetSpec,
    #[serde(rename = "S")]
    pub s: SetSpec,
    #[serde(default)]
    pub t0: f64,
    pub tf: f64,
}

impl ProblemSpec {
    pub fn build(&self) -> Result<LinearProblem> {
        if self.b.len() != 2 || self.b[0].len() != self.b[1].len() || !(1..=2).contains(&self.b[0].len()) {
            return Err(Error::Config("B must have two rows of one or two entries".into()));
        }
        let m = self.b[0].len();
        let col = |r: usize, c: usize| if c < m { self.b[r][c] } else { 0.0 };
        let a = Mat2::new(self.a[0][0], self.a[0][1], self.a[1][0], self.a[1][1]);
        let b = Mat2::new(col(0, 0), col(0, 1), col(1, 0), col(1, 1));
        LinearProblem::new(
            Coefficient::Constant(a),
            Coefficient::Constant(b),
            m,
            self.u.build()?,
            self.s.build()?,
            self.t0,
            self.tf,
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub example: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem: Option<ProblemSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(rename = "N_R", default, skip_serializing_if = "Option::is_none")]
    pub n_r: Option<usize>,
    #[serde(rename = "N_U", default, skip_serializing_if = "Option::is_none")]
    pub n_u: Option<usize>,
    /// Fine step; sets `K = round((tf - t0) / (N h))` when `K` is absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tf: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<TestGrid>,
}

/// A configuration with every default filled in.
#[derive(Clone, Debug)]
pub struct ResolvedRun {
    /// Registry id; `None` for inline problems.
    pub example: Option<ExampleId>,
    pub spec: ExampleSpec,
    pub method: Method,
    pub k: usize,
    pub n: usize,
    pub n_r: usize,
    pub n_u: usize,
    pub grid: TestGrid,
    pub out: PathBuf,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Input { path: path.to_path_buf(), source })?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Resolves the problem and fills unset values from the example defaults.
    pub fn resolve(&self) -> Result<ResolvedRun> {
        let (id, spec) = match (&self.example, &self.problem) {
            (Some(_), Some(_)) => return Err(Error::Config("give either `example` or `problem`, not both".into())),
            (Some(id), None) => {
                let id = id.parse::<ExampleId>()?;
                (Some(id), example(id))
            }
            (None, Some(p)) => {
                // inline problems borrow the registry's record layout
                let mut spec = example(ExampleId::Ex51Box);
                spec.problem = ProblemKind::Linear(p.build()?);
                spec.reversed = None;
                (None, spec)
            }
            (None, None) => return Err(Error::Config("an `example` id or a `problem` is required".into())),
        };
        let spec = match self.tf {
            Some(tf) => spec.with_tf(tf)?,
            None => spec,
        };
        let n = self.n.unwrap_or(spec.n);
        let k = match (self.k, self.h) {
            (Some(k), _) => k,
            (None, Some(h)) => spec.k_for_step(h, n)?,
            (None, None) => spec.k,
        };
        let n_r = self.n_r.unwrap_or(spec.n_r);
        let n_u = self.n_u.or(self.n_r).unwrap_or(spec.n_u);
        for (name, v) in [("K", k), ("N", n)] {
            if v == 0 {
                return Err(crate::error::invalid(format!("{name} must be positive")));
            }
        }
        for (name, v) in [("N_R", n_r), ("N_U", n_u)] {
            if v < 2 {
                return Err(crate::error::invalid(format!("{name} must be at least 2, got {v}")));
            }
        }
        let grid = self.grid.unwrap_or_default();
        let grid = TestGrid::new(grid.lo, grid.hi, grid.dx)?;
        Ok(ResolvedRun {
            example: id,
            method: self.method.unwrap_or(spec.method),
            spec,
            k,
            n,
            n_r,
            n_u,
            grid,
            out: self.out.clone().unwrap_or_else(|| PathBuf::from("out")),
        })
    }
}
