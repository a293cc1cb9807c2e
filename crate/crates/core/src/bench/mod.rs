//! Example problems, their minimum time functions and convergence tables.

mod examples;
mod oracle;
mod tables;

pub use examples::{example, ExampleId, ExampleSpec, ProblemKind};
pub use oracle::{double_integrator_time, has_oracle, oracle, validate_oracle, OracleCheck};
pub use tables::{oracle_error, reference_error, run_table, Column, TableId, TableResult, TableRow, Tolerance};
