//! Reproduction of the convergence tables.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;

use super::examples::{example, ExampleId, ExampleSpec};
use super::oracle::{oracle, validate_oracle};
use crate::error::{invalid, Error, Result};
use crate::mintime::{error_norm, fit_order, ErrorReport, Fit, MinTime, MinTimeField, TestGrid};
use crate::reachset::{Method, ReachFlow};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TableId {
    /// Space discretization only: the free-motion examples over `N_R`.
    Table1,
    /// Double integrator, combination methods.
    Table2,
    /// Double integrator, Runge-Kutta methods.
    Table2Rk,
    /// Two-input smooth example.
    Table3,
    /// Bilinear example, self-convergence.
    Table4,
}

impl TableId {
    pub const ALL: [TableId; 5] = [Self::Table1, Self::Table2, Self::Table2Rk, Self::Table3, Self::Table4];

    pub fn name(self) -> &'static str {
        match self {
            Self::Table1 => "table1",
            Self::Table2 => "table2",
            Self::Table2Rk => "table2-rk",
            Self::Table3 => "table3",
            Self::Table4 => "table4",
        }
    }
}

impl fmt::Display for TableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TableId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .find(|t| t.name() == s.trim())
            .copied()
            .ok_or_else(|| invalid(format!("unknown table `{s}`; expected one of table1, table2, table2-rk, table3, table4")))
    }
}

/// Acceptance band for comparing against reference values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Tolerance {
    /// Errors may differ from the reference value by this factor either way.
    pub factor: f64,
    /// Absolute slack on fitted orders.
    pub order: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { factor: 2.0, order: 0.3 }
    }
}

/// One method (or example) column of a table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Column {
    pub name: String,
    pub example: String,
    pub method: String,
    pub errors: Vec<f64>,
    pub reference: Vec<f64>,
    pub fit: Option<Fit>,
    pub reference_fit: Option<Fit>,
    /// Grid points where the computed field is unreached but the reference is not.
    pub mismatches: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TableRow {
    pub h: f64,
    #[serde(rename = "N_R")]
    pub n_r: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "N")]
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TableResult {
    pub table: TableId,
    pub rows: Vec<TableRow>,
    pub columns: Vec<Column>,
    pub seconds: f64,
}

impl TableResult {
    /// Descriptions of every entry outside the tolerance band.
    pub fn violations(&self, tol: &Tolerance) -> Vec<String> {
        let mut out = Vec::new();
        for c in &self.columns {
            for (r, (e, p)) in c.errors.iter().zip(&c.reference).enumerate() {
                // values at rounding level are compared absolutely
                let ok = if *p < 1e-12 { *e <= 1e-12 } else { *e <= p * tol.factor && *e >= p / tol.factor };
                if !ok {
                    out.push(format!("{} row {}: error {:.4e} vs reference {:.4e}", c.name, r, e, p));
                }
            }
            if let (Some(f), Some(pf)) = (c.fit, c.reference_fit) {
                if (f.p - pf.p).abs() > tol.order {
                    out.push(format!("{}: fitted order {:.4} vs reference {:.4}", c.name, f.p, pf.p));
                }
            }
        }
        out
    }

    /// Header `h,N_R,K,N,<column>...`, one line per row.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("h,N_R,K,N");
        for c in &self.columns {
            s.push(',');
            s.push_str(&c.name);
        }
        s.push('\n');
        for (r, row) in self.rows.iter().enumerate() {
            s.push_str(&format!("{},{},{},{}", row.h, row.n_r, row.k, row.n));
            for c in &self.columns {
                s.push_str(&format!(",{:e}", c.errors[r]));
            }
            s.push('\n');
        }
        s
    }

    /// Writes `<table>.csv` and `<table>.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let out = |path: &Path, body: String| {
            fs::write(path, body).map_err(|source| Error::Output { path: path.to_path_buf(), source })
        };
        fs::create_dir_all(dir).map_err(|source| Error::Output { path: dir.to_path_buf(), source })?;
        out(&dir.join(format!("{}.csv", self.table)), self.to_csv())?;
        let json = serde_json::to_string_pretty(self).expect("table result serializes");
        out(&dir.join(format!("{}.json", self.table)), json)
    }
}

/// Error of the field computed from `flow` against the example's oracle.
pub fn oracle_error(spec: &ExampleSpec, flow: &ReachFlow, grid: &TestGrid) -> Result<ErrorReport> {
    let field = MinTimeField::new(flow)?;
    let id = spec.id;
    oracle(id, &crate::geom::Vec2::zeros())?;
    let t0 = spec.t0();
    let shifted = |x: &crate::geom::Vec2| match oracle(id, x).expect("oracle checked above") {
        MinTime::Reached(t) => MinTime::Reached(t0 + t),
        MinTime::Unreached => MinTime::Unreached,
    };
    error_norm(&field, shifted, grid, spec.tf())
}

/// Error of the field from `flow` against a reference field.
pub fn reference_error(reference: &MinTimeField, flow: &ReachFlow, grid: &TestGrid) -> Result<ErrorReport> {
    let field = MinTimeField::new(flow)?;
    error_norm(&field, |x| reference.evaluate(x), grid, flow.tf)
}

struct Schedule {
    example: ExampleId,
    methods: Vec<(Method, Vec<f64>, Option<Fit>)>,
    rows: Vec<(f64, usize)>,
    n: usize,
    self_convergence: bool,
}

fn fit(c: f64, p: f64) -> Option<Fit> {
    Some(Fit { c, p })
}

fn schedule(table: TableId) -> Schedule {
    let doubling = |hs: &[f64], n_r0: usize| -> Vec<(f64, usize)> {
        hs.iter().enumerate().map(|(i, h)| (*h, n_r0 << i)).collect()
    };
    let t2 = [0.04, 0.02, 0.01, 0.005, 0.0025];
    let heun2 = vec![0.2265, 0.1180, 0.0122, 0.0062, 0.0062];
    match table {
        TableId::Table1 => unreachable!("table 1 varies the example, not the method"),
        TableId::Table2 => Schedule {
            example: ExampleId::Ex52a,
            methods: vec![
                (Method::RiemannEuler, vec![0.2951, 0.1862, 0.1332, 0.1132, 0.0683], fit(1.37606, 0.4940)),
                (Method::TrapezoidHeun, heun2, fit(22.18877, 1.4633)),
            ],
            rows: doubling(&t2, 50),
            n: 5,
            self_convergence: false,
        },
        TableId::Table2Rk => Schedule {
            example: ExampleId::Ex52a,
            methods: vec![
                (Method::Euler, vec![0.2330, 0.1681, 0.1149, 0.0753, 0.0318], None),
                (Method::Heun, heun2, None),
            ],
            rows: doubling(&t2, 50),
            n: 5,
            self_convergence: false,
        },
        TableId::Table3 => Schedule {
            example: ExampleId::Ex53,
            methods: vec![
                (Method::RiemannEuler, vec![0.170, 0.095, 0.0599, 0.0285], fit(2.14475, 0.8395)),
                (Method::TrapezoidHeun, vec![0.1153, 0.0470, 0.0133, 0.0032], fit(23.9210, 1.7335)),
            ],
            rows: [0.05, 0.025, 0.0125, 0.00625].iter().map(|h| (*h, 50)).collect(),
            n: 2,
            self_convergence: false,
        },
        TableId::Table4 => Schedule {
            example: ExampleId::Ex55,
            methods: vec![
                (Method::Euler, vec![0.0848, 0.0060, 0.0015, 0.00042, 0.000108], fit(0.3293133, 1.8091)),
                (Method::Heun, vec![0.1461, 0.0076, 0.0020, 0.000502, 0.000126], fit(0.5815318, 1.9117)),
            ],
            rows: doubling(&[0.5, 0.1, 0.05, 0.025, 0.0125], 50),
            n: 2,
            self_convergence: true,
        },
    }
}

fn table1(grid: &TestGrid) -> Result<TableResult> {
    let start = Instant::now();
    let n_rs = [100, 50, 25];
    let cols = [
        (ExampleId::Ex51Ball, [6.14e-4, 24e-4, 0.0258]),
        (ExampleId::Ex51Box, [4.9e-4, 19e-4, 0.0073]),
        (ExampleId::Ex51Origin, [8.9e-16; 3]),
    ];
    let mut rows = Vec::new();
    let mut columns: Vec<Column> = Vec::new();
    for (id, reference) in cols {
        gate(id)?;
        let spec = example(id);
        let mut errors = Vec::new();
        let mut mismatches = Vec::new();
        for n_r in n_rs {
            let flow = spec.run(spec.method, spec.k, spec.n, n_r, n_r)?;
            let report = oracle_error(&spec, &flow, grid)?;
            errors.push(report.linf);
            mismatches.push(report.mismatches);
        }
        columns.push(Column {
            name: id.name().to_string(),
            example: id.name().to_string(),
            method: spec.method.name().to_string(),
            errors,
            reference: reference.to_vec(),
            fit: None,
            reference_fit: None,
            mismatches,
        });
        if rows.is_empty() {
            let h = (spec.tf() - spec.t0()) / (spec.k * spec.n) as f64;
            rows = n_rs.iter().map(|&n_r| TableRow { h, n_r, k: spec.k, n: spec.n }).collect();
        }
    }
    Ok(TableResult { table: TableId::Table1, rows, columns, seconds: start.elapsed().as_secs_f64() })
}

fn gate(id: ExampleId) -> Result<()> {
    let check = validate_oracle(id, 100)?;
    if !check.passed() {
        return Err(invalid(format!(
            "oracle for {id} failed validation: discrepancy {:.3e} > {:.1e}",
            check.max_discrepancy, check.tolerance
        )));
    }
    Ok(())
}

/// Reference field for self-convergence: step `h_min / 8`, `8 × N_R` directions.
fn reference_field(spec: &ExampleSpec, method: Method, h_min: f64, n_r_max: usize, n: usize) -> Result<MinTimeField> {
    let h = h_min / 8.0;
    let k = spec.k_for_step(h, n)?;
    let flow = spec.run(method, k, n, 8 * n_r_max, 8 * n_r_max)?;
    MinTimeField::new(&flow)
}

/// Runs one of the reference tables on `grid`.
pub fn run_table(table: TableId, grid: &TestGrid) -> Result<TableResult> {
    if table == TableId::Table1 {
        return table1(grid);
    }
    let start = Instant::now();
    let sched = schedule(table);
    let spec = example(sched.example);
    if !sched.self_convergence {
        gate(sched.example)?;
    }
    let mut rows = Vec::new();
    for &(h, n_r) in &sched.rows {
        rows.push(TableRow { h, n_r, k: spec.k_for_step(h, sched.n)?, n: sched.n });
    }
    let mut columns = Vec::new();
    for (method, reference, reference_fit) in sched.methods {
        let fine = if sched.self_convergence {
            let h_min = rows.iter().map(|r| r.h).fold(f64::INFINITY, f64::min);
            let n_r_max = rows.iter().map(|r| r.n_r).max().unwrap_or(0);
            Some(reference_field(&spec, method, h_min, n_r_max, sched.n)?)
        } else {
            None
        };
        let mut errors = Vec::new();
        let mut mismatches = Vec::new();
        for row in &rows {
            let flow = spec.run(method, row.k, row.n, row.n_r, row.n_r)?;
            let report = match &fine {
                Some(r) => reference_error(r, &flow, grid)?,
                None => oracle_error(&spec, &flow, grid)?,
            };
            errors.push(report.linf);
            mismatches.push(report.mismatches);
        }
        let hs: Vec<f64> = rows.iter().map(|r| r.h).collect();
        columns.push(Column {
            name: method.name().to_string(),
            example: sched.example.name().to_string(),
            method: method.name().to_string(),
            fit: Some(fit_order(&hs, &errors)?),
            errors,
            reference,
            reference_fit,
            mismatches,
        });
    }
    Ok(TableResult { table, rows, columns, seconds: start.elapsed().as_secs_f64() })
}
