use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use mintime::adjoint::{kalman_rank, reconstruct};
use mintime::bench::{has_oracle, oracle, run_table, TableId};
use mintime::config::{ResolvedRun, RunConfig};
use mintime::mintime::{error_norm, MinTime, MinTimeField, TestGrid};
use mintime::reachset::{FlowSource, Method, ReachFlow};
use mintime::Error;

const EXPANSION_EPS: f64 = 1e-12;

#[derive(Parser)]
#[command(name = "mintime", version, about = "Reachable sets and minimum time functions of planar linear control problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate reachable set rings and write them as CSV.
    Reach(RunArgs),
    /// Build the minimum time function and sample it on the test grid.
    Mintime(RunArgs),
    /// Reconstruct extremal controls and trajectories for ring vertices.
    Adjoint(AdjointArgs),
    /// Recompute a convergence table.
    Bench(BenchArgs),
}

#[derive(Args, Clone, Default)]
struct RunArgs {
    /// Registry example id, e.g. ex52a.
    #[arg(long)]
    example: Option<String>,
    /// JSON run configuration; flags override its scalar fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Set valued scheme, e.g. riemann-euler or trapezoid-heun.
    #[arg(long, value_parser = parse_method)]
    method: Option<Method>,
    /// Coarse intervals.
    #[arg(long = "K")]
    k: Option<usize>,
    /// Fine steps per coarse interval.
    #[arg(long = "N")]
    n: Option<usize>,
    /// Fine step size; sets K when --K is absent.
    #[arg(long, allow_negative_numbers = true)]
    h: Option<f64>,
    /// Distinct normal directions for reachable and control sets.
    #[arg(long)]
    directions: Option<usize>,
    /// Final time.
    #[arg(long, allow_negative_numbers = true)]
    tf: Option<f64>,
    /// Spacing of the evaluation grid on [-1, 1]².
    #[arg(long, allow_negative_numbers = true)]
    grid_dx: Option<f64>,
    /// Output directory [default: out].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AdjointArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Ring index; defaults to the outermost ring.
    #[arg(long)]
    ring: Option<usize>,
    /// Direction indices, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    dirs: Vec<usize>,
}

#[derive(Args)]
struct BenchArgs {
    /// table1, table2, table2-rk, table3 or table4.
    #[arg(long, value_parser = parse_table)]
    table: TableId,
    /// Spacing of the evaluation grid on [-1, 1]².
    #[arg(long, allow_negative_numbers = true)]
    grid_dx: Option<f64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_table(s: &str) -> Result<TableId, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Exit status for a library error.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::UnknownExample(_) => 3,
        Error::InvalidArgument(_) | Error::UnsupportedOracle(_) => 4,
        Error::Output { .. } => 5,
        Error::NumericOverflow { .. } | Error::SingularStep { .. } | Error::NoNormalCone(_) => 6,
        Error::Input { .. } | Error::Config(_) => 7,
    }
}

impl RunArgs {
    fn config(&self) -> mintime::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        if let Some(id) = &self.example {
            cfg.example = Some(id.clone());
            cfg.problem = None;
        }
        cfg.method = self.method.or(cfg.method);
        if self.k.is_some() || self.h.is_some() {
            cfg.k = self.k;
            cfg.h = self.h;
        }
        cfg.n = self.n.or(cfg.n);
        if let Some(d) = self.directions {
            cfg.n_r = Some(d);
            cfg.n_u = Some(d);
        }
        cfg.tf = self.tf.or(cfg.tf);
        if let Some(dx) = self.grid_dx {
            let mut grid = cfg.grid.unwrap_or_default();
            grid.dx = dx;
            cfg.grid = Some(grid);
        }
        cfg.out = self.out.clone().or(cfg.out);
        Ok(cfg)
    }
}

fn run_flow(run: &ResolvedRun) -> mintime::Result<ReachFlow> {
    run.spec.run(run.method, run.k, run.n, run.n_r, run.n_u)
}

fn write_file(path: &Path, body: &str) -> mintime::Result<()> {
    fs::write(path, body).map_err(|source| Error::Output { path: path.to_path_buf(), source })
}

fn create_dir(dir: &Path) -> mintime::Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Output { path: dir.to_path_buf(), source })
}

#[derive(Serialize)]
struct Manifest<'a, C: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config: &'a C,
    wall_clock_seconds: f64,
}

fn write_manifest<C: Serialize>(dir: &Path, command: &'static str, config: &C, start: Instant) -> mintime::Result<()> {
    let m = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command,
        config,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    };
    write_file(&dir.join("manifest.json"), &serde_json::to_string_pretty(&m).expect("manifest serializes"))
}

/// Config as run, with the defaults it resolved to.
fn effective(cfg: &RunConfig, run: &ResolvedRun) -> RunConfig {
    RunConfig {
        method: Some(run.method),
        k: Some(run.k),
        n: Some(run.n),
        n_r: Some(run.n_r),
        n_u: Some(run.n_u),
        tf: Some(run.spec.tf()),
        out: Some(run.out.clone()),
        grid: Some(run.grid),
        ..cfg.clone()
    }
}

fn cmd_reach(args: &RunArgs, start: Instant) -> mintime::Result<String> {
    let cfg = args.config()?;
    let run = cfg.resolve()?;
    let flow = run_flow(&run)?;
    create_dir(&run.out)?;
    flow.write(&run.out, EXPANSION_EPS)?;
    write_manifest(&run.out, "reach", &effective(&cfg, &run), start)?;
    Ok(format!(
        "reach: {} rings ({}, K={}, N={}) written to {}",
        flow.rings.len(),
        run.method,
        run.k,
        run.n,
        run.out.display()
    ))
}

fn fmt_time(t: MinTime) -> String {
    match t {
        MinTime::Reached(v) => format!("{v:e}"),
        MinTime::Unreached => "inf".into(),
    }
}

fn cmd_mintime(args: &RunArgs, start: Instant) -> mintime::Result<String> {
    let cfg = args.config()?;
    let run = cfg.resolve()?;
    let flow = run_flow(&run)?;
    let field = MinTimeField::new(&flow)?;
    create_dir(&run.out)?;
    let tri = field.triangulation();
    let summary = json!({
        "times": field.times(),
        "triangles": tri.triangle_count(),
        "segments": tri.segment_count(),
        "crossings": tri.crossing_count(),
        "diameter": tri.diameter,
    });
    write_file(&run.out.join("field.json"), &serde_json::to_string_pretty(&summary).expect("summary serializes"))?;
    let message = match run.example.filter(|id| has_oracle(*id)) {
        Some(id) => {
            let t0 = run.spec.t0();
            let shifted = |x: &mintime::geom::Vec2| match oracle(id, x) {
                Ok(MinTime::Reached(t)) => MinTime::Reached(t0 + t),
                _ => MinTime::Unreached,
            };
            let report = error_norm(&field, shifted, &run.grid, run.spec.tf())?;
            report.write(&run.out, None)?;
            format!(
                "mintime: Linf = {:.4e} at ({:.4}, {:.4}) over {} points, h = {:.4e}",
                report.linf, report.worst_point.x, report.worst_point.y, report.compared, flow.h
            )
        }
        None => {
            let mut csv = String::from("x1,x2,T_approx\n");
            for x in run.grid.points() {
                let _ = writeln!(csv, "{:e},{:e},{}", x.x, x.y, fmt_time(field.evaluate(&x)));
            }
            write_file(&run.out.join("grid.csv"), &csv)?;
            format!("mintime: field sampled on {} points (no analytic reference)", run.grid.points().len())
        }
    };
    write_manifest(&run.out, "mintime", &effective(&cfg, &run), start)?;
    Ok(message)
}

fn cmd_adjoint(args: &AdjointArgs, start: Instant) -> mintime::Result<String> {
    let cfg = args.run.config()?;
    let run = cfg.resolve()?;
    let flow = run_flow(&run)?;
    let ring = args.ring.unwrap_or(flow.rings.len() - 1);
    create_dir(&run.out)?;
    let mut records = Vec::new();
    for &k in &args.dirs {
        let r = reconstruct(&flow, ring, k)?;
        r.trajectory.write(&run.out, ring, k)?;
        let end = r.trajectory.endpoint();
        let target = flow.rings[ring].points[k];
        records.push(json!({
            "ring": ring,
            "direction": k,
            "zeta": [r.zeta.x, r.zeta.y],
            "switches": r.switches,
            "endpoint": [end.x, end.y],
            "ring_point": [target.x, target.y],
            "gap": (end - target).norm(),
            "file": format!("traj_ring{ring}_dir{k}.csv"),
        }));
    }
    let rank = match &flow.source {
        FlowSource::Linear { problem, .. } => Some(kalman_rank(problem, flow.t0)),
        FlowSource::Nonlinear { .. } => None,
    };
    let summary = json!({ "kalman_rank": rank, "trajectories": records });
    write_file(&run.out.join("adjoint.json"), &serde_json::to_string_pretty(&summary).expect("summary serializes"))?;
    let config = json!({ "run": effective(&cfg, &run), "ring": ring, "dirs": args.dirs });
    write_manifest(&run.out, "adjoint", &config, start)?;
    Ok(format!("adjoint: {} trajectories for ring {ring} written to {}", records.len(), run.out.display()))
}

fn cmd_bench(args: &BenchArgs, start: Instant) -> mintime::Result<String> {
    let mut grid = TestGrid::default();
    if let Some(dx) = args.grid_dx {
        grid = TestGrid::new(grid.lo, grid.hi, dx)?;
    }
    let result = run_table(args.table, &grid)?;
    result.write(&args.out)?;
    let config = json!({ "table": args.table, "grid": grid, "out": args.out });
    write_manifest(&args.out, "bench", &config, start)?;
    let violations = result.violations(&Default::default());
    Ok(format!(
        "bench: {} with {} rows written to {}, {} entries outside tolerance of the reference values",
        args.table,
        result.rows.len(),
        args.out.display(),
        violations.len()
    ))
}

fn init_threads() -> Result<(), String> {
    let Ok(value) = std::env::var("MINTIME_THREADS") else { return Ok(()) };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("MINTIME_THREADS must be a positive integer, got `{value}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            eprintln!("{}", text.lines().next().unwrap_or("usage error"));
            return ExitCode::from(2);
        }
    };
    if let Err(msg) = init_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(4);
    }
    let start = Instant::now();
    let outcome = match &cli.command {
        Command::Reach(a) => cmd_reach(a, start),
        Command::Mintime(a) => cmd_mintime(a, start),
        Command::Adjoint(a) => cmd_adjoint(a, start),
        Command::Bench(a) => cmd_bench(a, start),
    };
    match outcome {
        Ok(line) => {
            println!("{line}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
