use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use transonic::config::{read_config, CaseConfig, Diagnostics};
use transonic::error::{HarnessError, Result};
use transonic::output::{ensure_dir, fmt17, write_background, write_csv, write_json, write_solution, write_supersonic};
use transonic::pipeline::{self, SolutionBundle};
use transonic::sweep::{summarize, sweep, write_sweep, SweepParameter};
use transonic::verify::{evaluate, Tolerances, VerifyInput, VerifyReport};
use transonic::default_config;

/// Steady transonic shocks in axisymmetric nozzle flow with swirl.
#[derive(Debug, Parser)]
#[command(name = "transonic", version)]
struct Cli {
    /// Case configuration (TOML); the built-in default case when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Directory for the output files.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,

    /// error, warn, info, debug or trace.
    #[arg(long, global = true, default_value = "info")]
    log_level: log::LevelFilter,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Shock position and states of the spherically symmetric background.
    Background {
        /// Radii sampled in `background.csv`.
        #[arg(long, default_value_t = 201)]
        points: usize,
    },
    /// March the perturbed supersonic field through the nozzle.
    Supersonic {
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Solve the free-boundary problem and reconstruct the flow.
    Solve {
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Solve a family of cases with one parameter varied.
    Sweep {
        /// epsilon, grid or exit-pressure.
        #[arg(long)]
        parameter: SweepParameter,
        /// Comma-separated values (grid values are `n` for `n x n`).
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// Worker threads; defaults to the available parallelism.
        #[arg(long)]
        threads: Option<usize>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run the diagnostics suite on a solution.
    Verify {
        /// Recompute the checks from the tables of an earlier solve in this
        /// directory instead of solving.
        #[arg(long, conflicts_with = "dump_chart")]
        from: Option<PathBuf>,
        /// basic or full (adds informational diagnostics).
        #[arg(long)]
        level: Option<String>,
        /// Also write the node chart `(z1, z2) -> (r, theta)` to `chart.csv`.
        #[arg(long)]
        dump_chart: bool,
        #[command(flatten)]
        overrides: Overrides,
    },
}

/// Command-line overrides of the configuration.
#[derive(Debug, Args, Default)]
struct Overrides {
    #[arg(long)]
    epsilon: Option<f64>,
    /// Subsonic grid as `n1xn2`.
    #[arg(long, value_parser = parse_grid)]
    grid: Option<[usize; 2]>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
}

impl Overrides {
    fn apply(&self, cfg: &mut CaseConfig) {
        if let Some(e) = self.epsilon {
            cfg.perturbation.epsilon = e;
        }
        if let Some(g) = self.grid {
            cfg.numerics.grid = g;
        }
        if let Some(m) = self.max_iter {
            cfg.numerics.max_iter = m;
        }
        if let Some(t) = self.tol {
            cfg.numerics.tol = Some(t);
        }
    }
}

fn parse_grid(s: &str) -> std::result::Result<[usize; 2], String> {
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected n1xn2, got `{s}`"))?;
    let n = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("bad grid size `{t}`: {e}"));
    Ok([n(a)?, n(b)?])
}

fn load(cli: &Cli, overrides: Option<&Overrides>) -> Result<CaseConfig> {
    let mut cfg = match &cli.config {
        Some(path) => read_config(path)?,
        None => default_config(),
    };
    if let Some(o) = overrides {
        o.apply(&mut cfg);
    }
    Ok(cfg)
}

fn write_config(dir: &Path, cfg: &CaseConfig) -> Result<()> {
    let text = toml::to_string(cfg).map_err(|e| HarnessError::Output(e.to_string()))?;
    let path = dir.join("config.toml");
    std::fs::write(&path, text).map_err(|source| HarnessError::Write { path, source })
}

fn print_solution(b: &SolutionBundle) {
    let r = &b.report;
    println!(
        "converged in {} iterations: |W| = {:.6e}, contraction ratio {}, jump residual {:.3e}, r_b = {:.12}",
        r.iterations(),
        r.final_norm(),
        r.contraction_ratio.map_or("n/a".to_string(), |q| format!("{q:.4}")),
        r.shock_residual,
        b.background.r_b
    );
}

fn print_verify(rep: &VerifyReport) {
    for c in &rep.checks {
        let verdict = match (c.tolerance, c.pass) {
            (None, _) => "info",
            (Some(_), true) => "pass",
            (Some(_), false) => "FAIL",
        };
        let tol = c.tolerance.map_or(String::new(), |t| format!(" (tolerance {t:.3e})"));
        println!("{verdict:>4}  {:<26} {:.6e}{tol}", c.name, c.value);
    }
    let graded = rep.checks.iter().filter(|c| c.tolerance.is_some()).count();
    let failed = rep.failures().len();
    println!("verify: {}/{graded} checks passed", graded - failed);
}

fn dump_chart(dir: &Path, b: &SolutionBundle) -> Result<()> {
    let problem = b.problem()?;
    let dom = *problem.domain();
    let nodes = problem.physical_nodes(&b.state)?;
    let rows = (0..=dom.n1).flat_map(|i| {
        let nodes = &nodes;
        (0..dom.n2).map(move |j| {
            let (r, theta, _) = nodes[dom.idx(i, j)];
            vec![i.to_string(), j.to_string(), fmt17(dom.z1(i)), fmt17(dom.z2(j)), fmt17(r), fmt17(theta)]
        })
    });
    write_csv(&dir.join("chart.csv"), &["i", "j", "z1", "z2", "r", "theta"], rows)
}

fn run(cli: &Cli) -> Result<()> {
    let out = &cli.out_dir;
    match &cli.command {
        Command::Background { points } => {
            let case = load(cli, None)?.case()?;
            let bg = pipeline::background(&case)?;
            ensure_dir(out)?;
            write_background(out, &bg, (*points).max(2))?;
            println!("background shock at r_b = {:.15} ({} bisection steps)", bg.r_b, bg.bisection_iterations);
        }
        Command::Supersonic { overrides } => {
            let case = load(cli, Some(overrides))?.case()?;
            let bg = pipeline::background(&case)?;
            let (field, compat) = pipeline::supersonic(&case, &bg)?;
            ensure_dir(out)?;
            write_supersonic(out, &field, &compat, &bg)?;
            println!("supersonic field: {} rows, minimum radial Mach {:.6}", field.n_rows(), field.min_radial_mach());
        }
        Command::Solve { overrides } => {
            let cfg = load(cli, Some(overrides))?;
            let bundle = pipeline::solve(&cfg.case()?)?;
            write_solution(out, &bundle)?;
            write_config(out, &cfg)?;
            print_solution(&bundle);
        }
        Command::Sweep { parameter, values, threads, overrides } => {
            let cfg = load(cli, Some(overrides))?;
            cfg.case()?;
            let threads = threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            info!("sweeping {parameter:?} over {} values on {threads} threads", values.len());
            let rows = sweep(&cfg, *parameter, values, threads);
            let summary = summarize(*parameter, &rows);
            ensure_dir(out)?;
            write_sweep(out, &rows, &summary)?;
            println!("sweep: {}/{} cases solved", summary.passed, summary.cases);
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
        Command::Verify { from, level, dump_chart: dump, overrides } => {
            let cfg = load(cli, Some(overrides))?;
            let case = cfg.case()?;
            let level = match level.as_deref() {
                None => case.numerics.diagnostics,
                Some("basic") => Diagnostics::Basic,
                Some("full") => Diagnostics::Full,
                Some(other) => return Err(HarnessError::Validation(vec![format!("unknown diagnostics level `{other}`")])),
            };
            ensure_dir(out)?;
            let input = match from {
                Some(dir) => VerifyInput::from_dir(&case, dir)?,
                None => {
                    let bundle = pipeline::solve(&case)?;
                    write_solution(out, &bundle)?;
                    write_config(out, &cfg)?;
                    if *dump {
                        dump_chart(out, &bundle)?;
                    }
                    VerifyInput::from_bundle(&bundle)?
                }
            };
            let report = evaluate(&input, level, &Tolerances::default());
            write_json(&out.join("verify.json"), &report)?;
            for c in report.failures() {
                warn!("check {} failed: {:e} > {:e}", c.name, c.value, c.tolerance.unwrap_or(0.0));
            }
            print_verify(&report);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new().filter_level(cli.log_level).format_timestamp(None).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
