//! Command-line driver for balayage experiments.
//!
//! One experiment per invocation, selected by subcommand and described
//! by a JSON config; results land in one directory per run as
//! `result.json`, `report.csv`, and `log.txt`.
//!
//! Exit codes: 0 success, 1 config/validation error, 2 solver
//! non-convergence, 3 verification failure.

mod config;
mod output;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use balayage_core::json::fmt_f64;
use balayage_core::{
    brute_sweep, equilibrium, exhaust, exhaustion_masks, hahn_jordan, newtonian_sphere_mass,
    outer_sweep, sphere_mass_refinement, sweep, sweep_signed, verify, Error as CoreError,
    InstanceParams, OracleValue, SolveMethod,
};

use config::{ExperimentConfig, OracleConfig, RunConfig, Workspace};
use output::{mask_json, sweep_json, weights_csv, Artifacts, Meta};

#[derive(Debug)]
pub struct AppError {
    message: String,
    code: u8,
}

impl AppError {
    fn config(message: impl Into<String>) -> Self {
        AppError {
            message: message.into(),
            code: 1,
        }
    }

    fn verification(message: impl Into<String>) -> Self {
        AppError {
            message: message.into(),
            code: 3,
        }
    }
}

impl std::fmt::Display for AppError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<CoreError> for AppError {
    fn from(e: CoreError) -> Self {
        let code = match &e {
            CoreError::NonConvergence { .. } => 2,
            _ => 1,
        };
        AppError {
            message: e.to_string(),
            code,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "balayage",
    version,
    about = "sweeping, capacities, and convergence experiments for discretized measures"
)]
struct Cli {
    /// Path to the JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides the config's output_dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed override for randomized experiments.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Solver tolerance override.
    #[arg(long, global = true)]
    tolerance: Option<f64>,

    /// Solver method override.
    #[arg(long, global = true, value_enum)]
    method: Option<MethodArg>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    ActiveSet,
    ProjectedGradient,
}

impl From<MethodArg> for SolveMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::ActiveSet => SolveMethod::ActiveSet,
            MethodArg::ProjectedGradient => SolveMethod::ProjectedGradient,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Sweep a measure onto a mask (inner, signed, or outer balayage).
    Sweep,
    /// Equilibrium measure and capacity of a mask.
    Capacity,
    /// Exhaustion run over an increasing chain of masks.
    Exhaust,
    /// Randomized invariant suite; exits 3 on any failed invariant.
    Verify,
    /// Independent oracles: sphere mass law or exhaustive enumeration.
    Oracle,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Sweep => "sweep",
            Command::Capacity => "capacity",
            Command::Exhaust => "exhaust",
            Command::Verify => "verify",
            Command::Oracle => "oracle",
        }
    }
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("BALAYAGE_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global();
        }
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not errors.
            if e.use_stderr() {
                eprintln!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

fn run(cli: &Cli) -> Result<(), AppError> {
    let config_path = cli
        .config
        .as_ref()
        .ok_or_else(|| AppError::config("--config PATH is required"))?;
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| AppError::config(format!("cannot read {}: {e}", config_path.display())))?;
    let config_hash = format!("{:016x}", fnv1a(text.as_bytes()));
    let mut config = RunConfig::from_str(&text)?;
    if let Some(t) = cli.tolerance {
        if !(t > 0.0) {
            return Err(AppError::config(format!(
                "--tolerance must be > 0, got {t}"
            )));
        }
        config.solver.tolerance = t;
    }
    if let Some(m) = cli.method {
        config.solver.method = m.into();
    }

    let matches = matches!(
        (&config.experiment, &cli.command),
        (ExperimentConfig::Sweep { .. }, Command::Sweep)
            | (ExperimentConfig::Capacity { .. }, Command::Capacity)
            | (ExperimentConfig::Exhaust { .. }, Command::Exhaust)
            | (ExperimentConfig::Verify { .. }, Command::Verify)
            | (ExperimentConfig::Oracle(_), Command::Oracle)
    );
    if !matches {
        return Err(AppError::config(format!(
            "config experiment does not match subcommand '{}'",
            cli.command.name()
        )));
    }

    let out_dir = cli
        .out
        .clone()
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("balayage-run"));
    let config_dir = config_path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();

    let meta_solver = json!({
        "tolerance": config.solver.tolerance,
        "max_iterations": config.solver.max_iterations,
        "method": serde_json::to_value(config.solver.method).unwrap(),
    });

    let artifacts = match &config.experiment {
        ExperimentConfig::Sweep {
            measure,
            mask,
            signed,
            outer,
        } => {
            let ws = Workspace::build(&config, &config_dir)?;
            let meta = meta_for(&config, cli, &config_hash, "sweep", meta_solver, &ws);
            cmd_sweep(&ws, measure, mask, *signed, *outer, meta)?
        }
        ExperimentConfig::Capacity { mask } => {
            let ws = Workspace::build(&config, &config_dir)?;
            let meta = meta_for(&config, cli, &config_hash, "capacity", meta_solver, &ws);
            cmd_capacity(&ws, mask, meta)?
        }
        ExperimentConfig::Exhaust {
            measure,
            mask,
            stages,
            masks,
        } => {
            let ws = Workspace::build(&config, &config_dir)?;
            let meta = meta_for(&config, cli, &config_hash, "exhaust", meta_solver, &ws);
            cmd_exhaust(&ws, measure, mask, *stages, masks.as_deref(), meta)?
        }
        ExperimentConfig::Verify {
            trials,
            min_points,
            max_points,
            seed,
        } => {
            let seed = cli.seed.unwrap_or(*seed);
            let meta = Meta {
                command: "verify",
                config_hash: config_hash.clone(),
                seed: Some(seed),
                kernel: kernel_echo(&config),
                diag_rule: diag_echo(&config),
                solver: meta_solver,
                space_id: None,
            };
            cmd_verify(&config, *trials, *min_points, *max_points, seed, meta, &out_dir)?
        }
        ExperimentConfig::Oracle(oracle) => {
            let meta = Meta {
                command: "oracle",
                config_hash: config_hash.clone(),
                seed: cli.seed,
                kernel: kernel_echo(&config),
                diag_rule: diag_echo(&config),
                solver: meta_solver,
                space_id: None,
            };
            match oracle {
                OracleConfig::SphereMass {
                    radius,
                    source_distance,
                    counts,
                } => cmd_oracle_sphere(*radius, *source_distance, counts, meta)?,
                OracleConfig::Brute { measure, mask } => {
                    let ws = Workspace::build(&config, &config_dir)?;
                    let meta = Meta {
                        space_id: Some(ws.space.id().to_string()),
                        ..meta
                    };
                    cmd_oracle_brute(&ws, measure, mask, meta)?
                }
            }
        }
    };

    output::write_run(&out_dir, &artifacts)?;
    Ok(())
}

fn kernel_echo(config: &RunConfig) -> Value {
    config
        .kernel
        .as_ref()
        .map(|k| serde_json::to_value(k).unwrap())
        .unwrap_or(Value::Null)
}

fn diag_echo(config: &RunConfig) -> Value {
    serde_json::to_value(config.diag_rule.clone().unwrap_or_default()).unwrap()
}

fn meta_for(
    config: &RunConfig,
    cli: &Cli,
    config_hash: &str,
    command: &'static str,
    solver: Value,
    ws: &Workspace,
) -> Meta {
    Meta {
        command,
        config_hash: config_hash.to_string(),
        seed: cli.seed,
        kernel: kernel_echo(config),
        diag_rule: diag_echo(config),
        solver,
        space_id: Some(ws.space.id().to_string()),
    }
}

fn cmd_sweep(
    ws: &Workspace,
    measure: &str,
    mask_name: &str,
    signed: bool,
    outer: bool,
    meta: Meta,
) -> Result<Artifacts, AppError> {
    let mask = ws.mask(mask_name)?;
    let mut payload = Map::new();
    payload.insert("mask".into(), mask_json(mask));
    payload.insert("signed".into(), json!(signed));

    let (csv, log) = if signed {
        let raw = ws.raw_measure(measure)?;
        let mu = hahn_jordan(&ws.space, raw)?;
        let r = sweep_signed(&ws.form, &mu, mask, &ws.opts)?;
        payload.insert("plus".into(), sweep_json(&r.plus));
        payload.insert("minus".into(), sweep_json(&r.minus));
        payload.insert("combined".into(), json!(r.combined.net_weights()));
        let csv = weights_csv(&r.combined.net_weights());
        let log = format!(
            "signed sweep of '{measure}' onto '{mask_name}': plus distance {}, minus distance {}\n",
            fmt_f64(r.plus.distance),
            fmt_f64(r.minus.distance)
        );
        (csv, log)
    } else {
        let mu = ws.positive_measure(measure)?;
        let r = if outer {
            outer_sweep(&ws.form, &mu, mask, &ws.opts)?
        } else {
            sweep(&ws.form, &mu, mask, &ws.opts)?
        };
        for (k, v) in sweep_json(&r).as_object().unwrap() {
            payload.insert(k.clone(), v.clone());
        }
        let csv = weights_csv(r.swept.weights());
        let log = format!(
            "{} sweep of '{measure}' onto '{mask_name}' ({} points): distance {}, {} iterations, kkt worst {}\n",
            if outer { "outer" } else { "inner" },
            mask.len(),
            fmt_f64(r.distance),
            r.iterations,
            fmt_f64(r.kkt.worst()),
        );
        (csv, log)
    };

    Ok(Artifacts {
        result: meta.into_document(payload),
        csv,
        log,
    })
}

fn cmd_capacity(ws: &Workspace, mask_name: &str, meta: Meta) -> Result<Artifacts, AppError> {
    let mask = ws.mask(mask_name)?;
    let r = equilibrium(&ws.form, mask, &ws.opts)?;
    let mut payload = Map::new();
    payload.insert("mask".into(), mask_json(mask));
    payload.insert("capacity".into(), json!(r.capacity));
    payload.insert("energy".into(), json!(r.energy));
    payload.insert("robin_constant".into(), json!(r.robin_constant));
    payload.insert("equilibrium".into(), json!(r.equilibrium.weights()));
    payload.insert("iterations".into(), json!(r.iterations));
    let csv = weights_csv(r.equilibrium.weights());
    let log = format!(
        "capacity of '{mask_name}' ({} points): {}\n",
        mask.len(),
        fmt_f64(r.capacity)
    );
    Ok(Artifacts {
        result: meta.into_document(payload),
        csv,
        log,
    })
}

fn cmd_exhaust(
    ws: &Workspace,
    measure: &str,
    mask_name: &str,
    stages: Option<usize>,
    mask_names: Option<&[String]>,
    meta: Meta,
) -> Result<Artifacts, AppError> {
    let mu = ws.positive_measure(measure)?;
    let final_mask = ws.mask(mask_name)?;
    let chain = match mask_names {
        Some(names) => {
            let mut chain = Vec::with_capacity(names.len());
            for name in names {
                chain.push(ws.mask(name)?.clone());
            }
            if chain.last() != Some(final_mask) {
                return Err(AppError::config(format!(
                    "exhaustion chain must end at mask '{mask_name}'"
                )));
            }
            chain
        }
        None => exhaustion_masks(&ws.space, final_mask, stages.unwrap_or(4))?,
    };
    let report = exhaust(&ws.form, &mu, &chain, &ws.opts)?;

    let stages_json: Vec<Value> = report
        .stages
        .iter()
        .map(|s| {
            json!({
                "mask_size": s.mask.len(),
                "distance": s.distance,
                "distance_sq": s.distance * s.distance,
                "step": s.step,
                "active_size": s.active_size,
                "domination_violations": s.domination_count,
                "iterations": s.iterations,
            })
        })
        .collect();
    let mut payload = Map::new();
    payload.insert("stages".into(), json!(stages_json));
    payload.insert("final_agreement".into(), json!(report.final_agreement));
    payload.insert("scale".into(), json!(report.scale));

    let mut csv = String::from(
        "stage,mask_size,active_size,iterations,domination_violations,distance,distance_sq,step\n",
    );
    for (j, s) in report.stages.iter().enumerate() {
        let step = s.step.map(fmt_f64).unwrap_or_default();
        let _ = writeln!(
            csv,
            "{j},{},{},{},{},{},{},{step}",
            s.mask.len(),
            s.active_size,
            s.iterations,
            s.domination_count,
            fmt_f64(s.distance),
            fmt_f64(s.distance * s.distance),
        );
    }
    let log = format!(
        "exhaustion of '{measure}' over {} stages ending at '{mask_name}': final agreement {}\n",
        report.stages.len(),
        fmt_f64(report.final_agreement)
    );
    Ok(Artifacts {
        result: meta.into_document(payload),
        csv,
        log,
    })
}

fn cmd_verify(
    config: &RunConfig,
    trials: usize,
    min_points: usize,
    max_points: usize,
    seed: u64,
    meta: Meta,
    out_dir: &Path,
) -> Result<Artifacts, AppError> {
    let params = InstanceParams {
        min_points,
        max_points,
        ..InstanceParams::default()
    };
    let opts = balayage_core::SolveOptions64 {
        tolerance: config.solver.tolerance,
        max_iterations: config.solver.max_iterations,
        method: config.solver.method,
    };
    let outcomes = verify::run_suite::<f64>(seed, trials, &params, &opts)?;

    let mut payload = Map::new();
    let pass = outcomes.iter().all(|o| o.pass);
    payload.insert(
        "outcomes".into(),
        json!(outcomes
            .iter()
            .map(|o| json!({
                "name": o.name,
                "worst": o.worst,
                "threshold": o.threshold,
                "pass": o.pass,
                "trials": o.trials,
                "skipped": o.skipped,
            }))
            .collect::<Vec<_>>()),
    );
    payload.insert("pass".into(), json!(pass));
    payload.insert("trials".into(), json!(trials));

    let mut csv = String::from("invariant,worst,threshold,pass,trials,skipped\n");
    let mut log = format!("verify: {trials} trials, seed {seed}\n");
    for o in &outcomes {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            o.name,
            fmt_f64(o.worst),
            fmt_f64(o.threshold),
            o.pass,
            o.trials,
            o.skipped
        );
        let _ = writeln!(
            log,
            "{}: {} (worst {} vs threshold {})",
            o.name,
            if o.pass { "pass" } else { "FAIL" },
            fmt_f64(o.worst),
            fmt_f64(o.threshold)
        );
    }

    let artifacts = Artifacts {
        result: meta.into_document(payload),
        csv,
        log,
    };
    if !pass {
        // Persist the report before failing so the diagnosis survives.
        output::write_run(out_dir, &artifacts)?;
        let failed: Vec<String> = outcomes
            .iter()
            .filter(|o| !o.pass)
            .map(|o| format!("{} (residual {})", o.name, fmt_f64(o.worst)))
            .collect();
        return Err(AppError::verification(format!(
            "invariants failed: {}",
            failed.join(", ")
        )));
    }
    Ok(artifacts)
}

fn cmd_oracle_sphere(
    radius: f64,
    source_distance: f64,
    counts: &[usize],
    meta: Meta,
) -> Result<Artifacts, AppError> {
    if counts.is_empty() {
        return Err(AppError::config("sphere_mass needs at least one count"));
    }
    let rows = sphere_mass_refinement::<f64>(radius, source_distance, counts)?;
    let classical = radius / source_distance;
    let report = newtonian_sphere_mass::<f64>(radius, source_distance, *counts.last().unwrap())?;

    let mut payload = Map::new();
    payload.insert("classical_mass".into(), json!(classical));
    payload.insert(
        "rows".into(),
        json!(rows
            .iter()
            .map(|(count, mass, error)| json!({
                "count": count,
                "mass": mass,
                "error": error,
            }))
            .collect::<Vec<_>>()),
    );
    payload.insert("final_discrepancy".into(), json!(report.discrepancy));
    payload.insert("notes".into(), json!(report.notes));

    let mut csv = String::from("count,mass,error\n");
    for (count, mass, error) in &rows {
        let _ = writeln!(csv, "{count},{},{}", fmt_f64(*mass), fmt_f64(*error));
    }
    let log = format!(
        "sphere mass law r={radius} |y|={source_distance}: classical {}, finest mass {}\n",
        fmt_f64(classical),
        fmt_f64(rows.last().unwrap().1)
    );
    Ok(Artifacts {
        result: meta.into_document(payload),
        csv,
        log,
    })
}

fn cmd_oracle_brute(
    ws: &Workspace,
    measure: &str,
    mask_name: &str,
    meta: Meta,
) -> Result<Artifacts, AppError> {
    let mu = ws.positive_measure(measure)?;
    let mask = ws.mask(mask_name)?;
    let main = sweep(&ws.form, &mu, mask, &ws.opts)?;
    let (oracle, info) = brute_sweep(&ws.form, &mu, mask)?;
    let report = balayage_core::compare(&main, &oracle, &info, ws.opts.tolerance)?;

    let mut payload = Map::new();
    payload.insert("discrepancy".into(), json!(report.discrepancy));
    payload.insert("flagged".into(), json!(report.flagged));
    payload.insert("notes".into(), json!(report.notes));
    payload.insert("exact".into(), json!(info.exact));
    payload.insert("candidates".into(), json!(info.candidates));
    if let OracleValue::Measure(w) = &report.oracle_value {
        payload.insert("oracle".into(), json!(w));
    }
    payload.insert("main".into(), sweep_json(&main));

    let csv = weights_csv(oracle.weights());
    let log = format!(
        "oracle comparison for '{measure}' on '{mask_name}': discrepancy {}, flagged {}\n",
        fmt_f64(report.discrepancy),
        report.flagged
    );
    Ok(Artifacts {
        result: meta.into_document(payload),
        csv,
        log,
    })
}
