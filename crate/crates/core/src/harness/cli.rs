//! The `popsplit` command line.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 config or validation failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::Error;
use crate::flat_metric::{FlatLp, DEFAULT_TOL, ORACLE_MAX_POINTS};
use crate::measure::DiscreteMeasure;
use crate::metric_space::{Space, SpaceSpec};
use crate::model::validate_model;
use crate::solver::simulate;

use super::config::{RunConfig, SCHEMA_VERSION};
use super::output::{summary_path, table_csv, trajectory_csv, write_json, write_text};
use super::study::{run_bayes, run_commutator, run_studies};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "popsplit", version, about = "Particle splitting scheme for measure-valued population models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON config (`"schema": 1`).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Main output file; a JSON summary is written next to it.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for parallel runs.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Run even when model validation fails.
    #[arg(long, global = true)]
    pub force: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Run the scheme and write the trajectory.
    Simulate,
    /// Flat distance between two measures.
    Flatnorm,
    /// Empirical convergence orders in dt and epsilon.
    Converge,
    /// Commutator defect of the frozen split semigroups.
    Commutator,
    /// Grid posterior for model parameters.
    Bayes,
    /// Check the model assumptions and print the report.
    Validate,
}

impl Command {
    fn default_out(self) -> Option<&'static str> {
        match self {
            Command::Simulate => Some("trajectory.csv"),
            Command::Flatnorm => Some("flatnorm.csv"),
            Command::Converge => Some("convergence.csv"),
            Command::Commutator => Some("commutator.csv"),
            Command::Bayes => Some("posterior.csv"),
            Command::Validate => None,
        }
    }
}

#[derive(Debug)]
struct Failure {
    code: i32,
    error: Error,
}

fn config_failure(error: Error) -> Failure {
    Failure { code: EXIT_CONFIG, error }
}

impl From<Error> for Failure {
    fn from(error: Error) -> Self {
        let code = match error {
            Error::Config(_) | Error::Validation(_) | Error::MissingObservationTime(_) | Error::Json(_) => EXIT_CONFIG,
            _ => EXIT_RUNTIME,
        };
        Failure { code, error }
    }
}

type Outcome = std::result::Result<i32, Failure>;

/// Parses `args` (program name first) and runs; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                EXIT_CONFIG
            } else {
                EXIT_OK
            }
        }
    }
}

pub fn run(cli: &Cli) -> i32 {
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.workers.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return EXIT_RUNTIME;
        }
    };
    match pool.install(|| dispatch(cli)) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.error);
            f.code
        }
    }
}

fn dispatch(cli: &Cli) -> Outcome {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| config_failure(Error::Config("--config is required".into())))?;
    let out = cli.out.clone().or_else(|| cli.command.default_out().map(PathBuf::from));
    if cli.command == Command::Flatnorm {
        return flatnorm(path, out.as_deref().expect("flatnorm has a default output"));
    }
    let mut cfg = RunConfig::load(path).map_err(config_failure)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if cli.force {
        cfg.solver.force = true;
    }
    match cli.command {
        Command::Simulate => simulate_cmd(&cfg, out.as_deref().expect("default output")),
        Command::Converge => converge_cmd(&cfg, out.as_deref().expect("default output")),
        Command::Commutator => commutator_cmd(&cfg, out.as_deref().expect("default output")),
        Command::Bayes => bayes_cmd(&cfg, out.as_deref().expect("default output")),
        Command::Validate => validate_cmd(&cfg, out.as_deref()),
        Command::Flatnorm => unreachable!(),
    }
}

fn simulate_cmd(cfg: &RunConfig, out: &Path) -> Outcome {
    let a = cfg.assemble().map_err(config_failure)?;
    let report = validate_model(&a.model, cfg.solver.dt);
    if !report.passed() {
        eprint!("{report}");
        if !cfg.solver.force {
            return Err(config_failure(Error::Validation("model checks failed; rerun with --force to override".into())));
        }
    }
    let traj = simulate(&a.model, &a.mu0, &cfg.solver)?;
    write_text(out, &trajectory_csv(&a.space, &traj))?;
    let summary = json!({
        "config": cfg.to_value(),
        "net_size": a.net.len(),
        "times": traj.times,
        "masses": traj.diagnostics.iter().map(|d| d.total_mass).collect::<Vec<_>>(),
        "support_sizes": traj.diagnostics.iter().map(|d| d.support_size).collect::<Vec<_>>(),
        "validation": report,
    });
    write_json(&summary_path(out), &summary)?;
    println!(
        "{} steps, final mass {}, final support {}",
        traj.len() - 1,
        traj.final_state().total_mass(),
        traj.final_state().len()
    );
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FlatnormConfig {
    schema: u64,
    space: SpaceSpec,
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    /// Also solve by vertex enumeration (small supports only).
    #[serde(default)]
    oracle: bool,
}

fn flatnorm(path: &Path, out: &Path) -> Outcome {
    let text = std::fs::read_to_string(path).map_err(|e| config_failure(Error::Config(format!("{}: {e}", path.display()))))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| config_failure(Error::Config(e.to_string())))?;
    if value.get("schema").and_then(Value::as_u64) != Some(SCHEMA_VERSION) {
        return Err(config_failure(Error::Config("expected \"schema\": 1".into())));
    }
    let cfg: FlatnormConfig = serde_json::from_value(value).map_err(|e| config_failure(Error::Config(e.to_string())))?;
    let space = Space::new(cfg.space.clone()).map_err(config_failure)?;
    cfg.mu.validate(&space).map_err(config_failure)?;
    cfg.nu.validate(&space).map_err(config_failure)?;
    let lp = FlatLp::new(&space, &cfg.mu, &cfg.nu)?;
    let (distance, psi) = lp.solve(DEFAULT_TOL)?;
    let oracle = if cfg.oracle {
        if lp.len() > ORACLE_MAX_POINTS {
            return Err(config_failure(Error::OracleSize {
                max: ORACLE_MAX_POINTS,
                got: lp.len(),
            }));
        }
        Some(lp.solve_by_enumeration()?)
    } else {
        None
    };
    let mut header: Vec<String> = space.point_columns();
    header.push("coefficient".into());
    header.push("potential".into());
    let rows: Vec<Vec<f64>> = lp
        .points()
        .iter()
        .zip(lp.coefficients())
        .zip(&psi)
        .map(|((p, c), s)| {
            let mut r = p.components();
            r.push(*c);
            r.push(*s);
            r
        })
        .collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_text(out, &table_csv(&header, &rows))?;
    write_json(
        &summary_path(out),
        &json!({"config": cfg, "distance": distance, "oracle_distance": oracle, "support_size": lp.len()}),
    )?;
    println!("flat distance {distance}");
    if let Some(o) = oracle {
        println!("oracle distance {o}");
    }
    Ok(EXIT_OK)
}

fn converge_cmd(cfg: &RunConfig, out: &Path) -> Outcome {
    cfg.assemble().map_err(config_failure)?;
    let reports = run_studies(cfg)?;
    let mut rows = Vec::new();
    for (k, r) in reports.iter().enumerate() {
        for row in &r.rows {
            rows.push(vec![k as f64, row.parameter, row.error, row.final_support as f64]);
        }
        match &r.fit {
            Some(f) => println!("{:?}: order {:.4}, constant {:.4e} ({})", r.axis, f.order, f.constant, r.reference),
            None => println!("{:?}: no fit ({})", r.axis, r.notes.join("; ")),
        }
    }
    write_text(out, &table_csv(&["axis", "parameter", "error", "final_support"], &rows))?;
    write_json(&summary_path(out), &json!({"config": cfg.to_value(), "reports": reports}))?;
    Ok(EXIT_OK)
}

fn commutator_cmd(cfg: &RunConfig, out: &Path) -> Outcome {
    cfg.assemble().map_err(config_failure)?;
    let r = run_commutator(cfg)?;
    let rows: Vec<Vec<f64>> = match &r.scaled {
        Some(s) => r.times.iter().zip(&r.defects).zip(&s.defects).map(|((t, d), e)| vec![*t, *d, *e]).collect(),
        None => r.times.iter().zip(&r.defects).map(|(t, d)| vec![*t, *d]).collect(),
    };
    let header: &[&str] = if r.scaled.is_some() {
        &["t", "defect", "scaled_defect"]
    } else {
        &["t", "defect"]
    };
    write_text(out, &table_csv(header, &rows))?;
    write_json(&summary_path(out), &json!({"config": cfg.to_value(), "report": r}))?;
    match r.slope {
        Some(s) => println!("log-log slope {s:.4}"),
        None => println!("slope undefined: {}", r.note.as_deref().unwrap_or("")),
    }
    Ok(EXIT_OK)
}

fn bayes_cmd(cfg: &RunConfig, out: &Path) -> Outcome {
    cfg.assemble().map_err(config_failure)?;
    let b = run_bayes(cfg)?;
    let d = b.posterior.param.dimension();
    let mut header: Vec<String> = (0..d).map(|i| format!("theta{i}")).collect();
    header.push("density".into());
    let rows: Vec<Vec<f64>> = b
        .posterior
        .nodes
        .iter()
        .zip(&b.posterior.density)
        .map(|(n, p)| {
            let mut r = n.clone();
            r.push(*p);
            r
        })
        .collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_text(out, &table_csv(&header, &rows))?;
    write_json(
        &summary_path(out),
        &json!({
            "config": cfg.to_value(),
            "mode": b.mode,
            "mean": b.mean,
            "normalization_residual": b.normalization_residual,
            "log_evidence": b.posterior.log_evidence,
            "data": b.data.y,
        }),
    )?;
    println!("posterior mode {:?}, mean {:?}", b.mode, b.mean);
    Ok(EXIT_OK)
}

fn validate_cmd(cfg: &RunConfig, out: Option<&Path>) -> Outcome {
    let a = cfg.assemble().map_err(config_failure)?;
    let report = validate_model(&a.model, cfg.solver.dt);
    print!("{report}");
    if let Some(path) = out {
        write_json(path, &json!({"config": cfg.to_value(), "passed": report.passed(), "report": report}))?;
    }
    Ok(if report.passed() { EXIT_OK } else { EXIT_CONFIG })
}
