//! Thin CLI over the library: each subcommand reads a JSON run
//! configuration, executes one pipeline stage and writes deterministic
//! JSON or SVG output.
//!
//! Exit codes: 0 success, 1 verification failure, 2 quadrature failure,
//! 3 partition failure, 4 solver failure, 64 usage error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use serde::Serialize;

use logriemann::config::{OutputConfig, RunConfig};
use logriemann::flow::{FlowOptions, integrate_flow_with};
use logriemann::foliation::{build_skeleton, partition_window, trace_separatrices};
use logriemann::render::{Scene, render_svg};
use logriemann::sc::solve_symmetric_parameters;
use logriemann::verify;
use logriemann::{Error, Result};

#[derive(Parser)]
#[command(name = "logriemann", version, about = "foliations and log-Riemann surface skeletons of F(z) = \u{222b} Q e^P")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Asymptotic values of F along the distinguished rays.
    Asymptotics {
        #[arg(long)]
        config: PathBuf,
    },
    /// Trace one level curve of Im F from a seed point.
    Flow {
        #[arg(long)]
        config: PathBuf,
        /// Seed as "re,im".
        #[arg(long)]
        seed: String,
        #[arg(long, default_value_t = -10.0, allow_hyphen_values = true)]
        t0: f64,
        #[arg(long, default_value_t = 10.0)]
        t1: f64,
    },
    /// Trace the separatrix family of the horizontal foliation.
    Separatrices {
        #[arg(long)]
        config: PathBuf,
    },
    /// Partition the window and emit the surface skeleton.
    Skeleton {
        #[arg(long)]
        config: PathBuf,
    },
    /// Render the foliation as layered SVG.
    Render {
        #[arg(long)]
        config: PathBuf,
    },
    /// Solve the symmetric accessory-parameter problem for the
    /// approximating polygon of a degree-d map, or check the boundary
    /// straightness of an explicit SC spec.
    Sc {
        #[arg(long, conflicts_with = "spec")]
        config: Option<PathBuf>,
        /// SC map spec JSON; evaluated for boundary straightness.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Polygon truncation index N; exponents are 2(2N+1).
        #[arg(long, default_value_t = 1)]
        n: usize,
    },
    /// Run the acceptance checks and report pass/fail per check.
    Verify {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Run a single check by id instead of the full suite.
        #[arg(long)]
        check: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap help/version are not usage errors
            use clap::error::ErrorKind::*;
            let _ = e.print();
            return match e.kind() {
                DisplayHelp | DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(64),
            };
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::NonConvergence { .. }
        | Error::ToleranceNotMet { .. }
        | Error::Overflow { .. }
        | Error::PoleAtZero { .. }
        | Error::TailBoundFailure { .. }
        | Error::EndpointDivergence { .. }
        | Error::PoleAtPrevertex { .. } => 2,
        Error::UnresolvedComponent { .. }
        | Error::InconsistentGluing { .. }
        | Error::RayCountMismatch { .. }
        | Error::AtSingularity { .. }
        | Error::StepCollapse { .. }
        | Error::TransversalityLoss { .. } => 3,
        Error::NewtonDivergence
        | Error::SolverDivergence { .. }
        | Error::SeedFailure { .. }
        | Error::PrevertexCollision { .. } => 4,
        Error::InvalidInput(_) => 64,
    }
}

fn emit_json<T: Serialize>(output: &OutputConfig, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::InvalidInput(format!("serialization failed: {e}")))?;
    emit(output.json.as_deref(), &text)
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display()))),
        None => {
            use std::io::Write as _;
            // a closed pipe (e.g. `| head`) is not an error
            let _ = writeln!(std::io::stdout(), "{text}");
            Ok(())
        }
    }
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Asymptotics { config } => {
            let config = RunConfig::from_file(&config)?;
            let map = config.build_map()?;
            let values = map.asymptotic_values()?;
            emit_json(&config.output, &values)?;
        }
        Command::Flow { config, seed, t0, t1 } => {
            let config = RunConfig::from_file(&config)?;
            let map = config.build_map()?;
            let seed = parse_complex(&seed)?;
            if t0 > 0.0 || t1 < 0.0 || t0 >= t1 {
                return Err(Error::InvalidInput("need t0 <= 0 <= t1 with t0 < t1".into()));
            }
            let opts = FlowOptions { tol: config.flow.tol, ..FlowOptions::default() };
            let curve = integrate_flow_with(&map, seed, (t0, t1), opts)?;
            emit_json(&config.output, &curve)?;
        }
        Command::Separatrices { config } => {
            let config = RunConfig::from_file(&config)?;
            let map = config.build_map()?;
            let set = trace_separatrices(&map, config.window.k, config.window.bbox)?;
            #[derive(Serialize)]
            struct Out<'a> {
                separatrices: &'a [logriemann::foliation::Separatrix],
                seed_failures: Vec<String>,
            }
            let out = Out {
                separatrices: &set.separatrices,
                seed_failures: set.seed_failures.iter().map(|e| e.to_string()).collect(),
            };
            emit_json(&config.output, &out)?;
        }
        Command::Skeleton { config } => {
            let config = RunConfig::from_file(&config)?;
            let map = config.build_map()?;
            let set = trace_separatrices(&map, config.window.k, config.window.bbox)?;
            let partition =
                partition_window(&map, &set.separatrices, config.window.bbox, config.window.grid_n)?;
            let skeleton = build_skeleton(
                &map,
                &partition,
                &set.separatrices,
                config.window.k,
            )?;
            emit_json(&config.output, &skeleton)?;
        }
        Command::Render { config } => {
            let config = RunConfig::from_file(&config)?;
            let map = config.build_map()?;
            // render degrades layer by layer: a stage failure leaves its
            // layer empty instead of aborting the picture
            let set = trace_separatrices(&map, config.window.k, config.window.bbox).ok();
            let partition = set.as_ref().and_then(|s| {
                partition_window(&map, &s.separatrices, config.window.bbox, config.window.grid_n)
                    .ok()
            });
            let skeleton = match (&set, &partition) {
                (Some(s), Some(p)) => {
                    build_skeleton(&map, p, &s.separatrices, config.window.k).ok()
                }
                _ => None,
            };
            let scene = Scene {
                partition: partition.as_ref(),
                separatrices: set.as_ref().map(|s| s.separatrices.as_slice()).unwrap_or(&[]),
                streamlines: &[],
                skeleton: skeleton.as_ref(),
            };
            let svg = render_svg(config.window.bbox, &scene, &config.render);
            emit(config.output.svg.as_deref(), &svg)?;
        }
        Command::Sc { config, spec, n } => match (config, spec) {
            (Some(config), None) => {
                let config = RunConfig::from_file(&config)?;
                let map = config.build_map()?;
                let solve = solve_symmetric_parameters(&map, n)?;
                emit_json(&config.output, &solve)?;
            }
            (None, Some(path)) => {
                let text = std::fs::read_to_string(&path).map_err(|e| {
                    Error::InvalidInput(format!("cannot read {}: {e}", path.display()))
                })?;
                let spec: logriemann::sc::SCMapSpec = serde_json::from_str(&text)
                    .map_err(|e| Error::InvalidInput(format!("bad SC spec JSON: {e}")))?;
                let sides = logriemann::sc::boundary_straightness(&spec, 1e-6)?;
                #[derive(Serialize)]
                struct Out {
                    sides: Vec<logriemann::sc::SideStraightness>,
                    pass: bool,
                }
                let pass = sides.iter().all(|s| s.pass);
                emit(None, &serde_json::to_string_pretty(&Out { sides, pass }).unwrap())?;
            }
            _ => {
                return Err(Error::InvalidInput(
                    "sc needs exactly one of --config (solve) or --spec (straightness)".into(),
                ));
            }
        },
        Command::Verify { config, check } => {
            let report = match &check {
                Some(id) => {
                    let check = verify::run_check(id)
                        .ok_or_else(|| Error::InvalidInput(format!("unknown check id: {id}")))?;
                    verify::VerificationReport { checks: vec![check] }
                }
                None => match config {
                    Some(path) => verify::run_all_with_config(&RunConfig::from_file(&path)?),
                    None => verify::run_all(),
                },
            };
            for c in &report.checks {
                eprintln!(
                    "{} {} (measured {:.3e}, tolerance {:.3e})",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.id,
                    c.measured,
                    c.tolerance
                );
            }
            let text = serde_json::to_string_pretty(&report)
                .map_err(|e| Error::InvalidInput(format!("serialization failed: {e}")))?;
            println!("{text}");
            if !report.all_pass() {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_complex(text: &str) -> Result<Complex64> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err(Error::InvalidInput(format!("expected \"re,im\", got {text:?}")));
    }
    let re: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|_| Error::InvalidInput(format!("bad real part {:?}", parts[0])))?;
    let im: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|_| Error::InvalidInput(format!("bad imaginary part {:?}", parts[1])))?;
    Ok(Complex64::new(re, im))
}
