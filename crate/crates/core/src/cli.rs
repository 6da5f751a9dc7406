//! Command-line front end. [`run`] returns the process exit status:
//! 0 on success, 2 for rejected input, 3 for solver failures.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::continuity::{lipschitz_experiment, scaling_experiment};
use crate::error::{Error, Result};
use crate::game::GameInstance;
use crate::grid::{lattice_count, resolution_for_points};
use crate::io::{parse_eigenfunction_csv, parse_matrix_set, read_game, write_eigenfunction_csv, ResultJson, TrajectoryJson};
use crate::metrics::hausdorff_thompson;
use crate::shapley::ValueFunction;
use crate::solver::{certify_subeigenvector, rvi_km_solve, Discretization, SolveOptions, CERT_TOL};
use crate::strategies::{simulate, CYCLE_TOL};

pub const DEFAULT_RESOLUTION: usize = 80;
pub const BENCH_RESOLUTIONS: [usize; 4] = [80, 100, 130, 160];

#[derive(Debug, Parser)]
#[command(name = "cosra", version, about = "Certified bounds on the competitive spectral radius of matrix games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GridArgs {
    /// Lattice resolution m (grid points k/m with Σk = m).
    #[arg(long, conflicts_with = "points")]
    resolution: Option<usize>,
    /// Smallest resolution with at least this many grid points.
    #[arg(long)]
    points: Option<usize>,
}

impl GridArgs {
    fn resolve(&self, dim: usize) -> usize {
        match (self.resolution, self.points) {
            (Some(m), _) => m,
            (None, Some(n)) => resolution_for_points(n, dim),
            (None, None) => DEFAULT_RESOLUTION,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve a game and write the certified interval.
    Solve {
        game: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
        /// Stopping threshold on successive iterates (default 1/m).
        #[arg(long)]
        stop: Option<f64>,
        /// Write the result JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the eigenfunction CSV here.
        #[arg(long)]
        eigenfunction: Option<PathBuf>,
    },
    /// Check a value function (CSV) as a sub/super-eigenvector.
    Certify {
        game: PathBuf,
        values: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        lambda: f64,
        #[arg(long, default_value_t = CERT_TOL)]
        tol: f64,
    },
    /// Simulate greedy play from a starting state.
    Trajectory {
        game: PathBuf,
        /// Comma-separated starting state.
        #[arg(long)]
        start: String,
        #[arg(long, default_value_t = 30)]
        steps: usize,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Hausdorff-Thompson distance between two matrix sets.
    Distance { a: PathBuf, b: PathBuf },
    /// Lipschitz experiment with seeded multiplicative perturbations.
    Perturb {
        game: PathBuf,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also run the scaling case with this factor.
        #[arg(long)]
        scale: Option<f64>,
        #[arg(long, default_value_t = 40)]
        resolution: usize,
    },
    /// Benchmark the Leslie game across resolutions.
    Bench {
        /// Comma-separated resolutions.
        #[arg(long, value_delimiter = ',', default_values_t = BENCH_RESOLUTIONS)]
        resolutions: Vec<usize>,
    },
}

/// Sizes the global worker pool from `COSRA_THREADS`, if set.
pub fn init_thread_pool() {
    if let Some(n) = std::env::var("COSRA_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        // an already-initialized pool is fine; keep it
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

fn write_out(path: Option<&Path>, text: &str, out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => writeln!(out, "{text}").map_err(Error::from),
    }
}

fn to_json<T: Serialize>(x: &T) -> String {
    serde_json::to_string_pretty(x).expect("plain data serializes")
}

fn parse_point(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|c| {
            c.trim()
                .parse::<f64>()
                .map_err(|e| Error::InvalidParam(format!("start coordinate {c:?}: {e}")))
        })
        .collect()
}

fn discretize(game: GameInstance, m: usize) -> Result<Discretization> {
    Discretization::new(game.validate()?, m)
}

fn execute(cmd: Command, out: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Solve {
            game,
            grid,
            stop,
            out: out_path,
            eigenfunction,
        } => {
            let g = read_game(&game)?;
            let m = grid.resolve(g.dim());
            let disc = discretize(g, m)?;
            let res = rvi_km_solve(&disc, &SolveOptions { stop, v0: None })?;
            if let Some(p) = eigenfunction {
                let csv = write_eigenfunction_csv(disc.grid.points(), &res.value.values, res.value.base_index, m);
                std::fs::write(&p, csv).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
            }
            write_out(out_path.as_deref(), &ResultJson::new(&res, m).to_json(), out)
        }
        Command::Certify { game, values, lambda, tol } => {
            let g = read_game(&game)?;
            let text = std::fs::read_to_string(&values).map_err(|e| Error::Io(format!("{}: {e}", values.display())))?;
            let ef = parse_eigenfunction_csv(&text)?;
            let d = g.dim();
            let m = ef.resolution.unwrap_or_else(|| resolution_for_points(ef.points.len(), d));
            if lattice_count(m, d) != ef.points.len() as u128 {
                return Err(Error::Validation(format!(
                    "{} rows do not form the resolution-{m} lattice",
                    ef.points.len()
                )));
            }
            let disc = discretize(g, m)?;
            let mismatch = disc
                .grid
                .points()
                .iter()
                .zip(&ef.points)
                .position(|(a, b)| a.iter().zip(b).any(|(x, y)| (x - y).abs() > 1e-10));
            if let Some(k) = mismatch {
                return Err(Error::Validation(format!("row {k} does not match grid point {k}")));
            }
            let v = ValueFunction {
                values: ef.values,
                base_index: ef.base_index.unwrap_or(disc.grid.base_index()),
            };
            let cert = certify_subeigenvector(&disc, &v, lambda, tol)?;
            write_out(None, &to_json(&cert), out)
        }
        Command::Trajectory {
            game,
            start,
            steps,
            grid,
            out: out_path,
        } => {
            let g = read_game(&game)?;
            let x0 = parse_point(&start)?;
            if x0.len() != g.dim() {
                return Err(Error::DimensionMismatch { expected: g.dim(), got: x0.len() });
            }
            if steps == 0 || x0.iter().any(|c| !(*c >= 0.0)) || x0.iter().all(|&c| c == 0.0) {
                return Err(Error::InvalidParam("need steps ≥ 1 and a nonzero nonnegative start".into()));
            }
            let m = grid.resolve(g.dim());
            let disc = discretize(g, m)?;
            let res = rvi_km_solve(&disc, &SolveOptions::default())?;
            let x0 = crate::metrics::normalize(&x0, disc.game.e_star());
            let tr = simulate(&disc.game, &disc.tableau, &res.value.values, &x0, steps, CYCLE_TOL)?;
            write_out(out_path.as_deref(), &to_json(&TrajectoryJson::new(&tr, &disc.game)), out)
        }
        Command::Distance { a, b } => {
            let read = |p: &Path| {
                std::fs::read_to_string(p)
                    .map_err(|e| Error::Io(format!("{}: {e}", p.display())))
                    .and_then(|t| parse_matrix_set(&t))
            };
            let d = hausdorff_thompson(&read(&a)?, &read(&b)?)?;
            write_out(None, &to_json(&serde_json::json!({ "hausdorff_thompson": d })), out)
        }
        Command::Perturb {
            game,
            epsilon,
            trials,
            seed,
            scale,
            resolution,
        } => {
            let disc = discretize(read_game(&game)?, resolution)?;
            let report = lipschitz_experiment(&disc, epsilon, trials, seed, &SolveOptions::default())?;
            let scaling = scale
                .map(|c| scaling_experiment(&disc, c, &SolveOptions::default()))
                .transpose()?;
            let json = serde_json::json!({ "lipschitz": report, "scaling": scaling });
            write_out(None, &to_json(&json), out)
        }
        Command::Bench { resolutions } => {
            writeln!(out, "{:>8} {:>8} {:>10} {:>10} {:>10}", "points", "value", "lambda", "iterations", "runtime_s")?;
            for m in resolutions {
                let disc = discretize(GameInstance::leslie_benchmark(), m)?;
                let res = rvi_km_solve(&disc, &SolveOptions::default())?;
                writeln!(
                    out,
                    "{:>8} {:>8.4} {:>10.4} {:>10} {:>10.2}",
                    res.grid_points,
                    res.growth_rate(),
                    res.lambda,
                    res.iterations,
                    res.wall_time
                )?;
            }
            Ok(())
        }
    }
}

/// Parses `argv` (including the program name) and runs one subcommand,
/// writing normal output to `out` and diagnostics to `err`.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() {
                write!(err, "{e}")
            } else {
                write!(out, "{e}")
            };
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    init_thread_pool();
    run_with(argv, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}
