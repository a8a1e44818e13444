//! Subcommand implementations. Each writes its outputs plus a
//! `manifest.json` into the output directory.

use std::fs;
use std::path::Path;

use chrono::{SecondsFormat, Utc};
use herdsim_core::analysis::{self, MAX_ENUMERATION_AGENTS};
use herdsim_core::fmt::g17;
use herdsim_core::graph::random_edges;
use herdsim_core::graph_file::write_undirected;
use herdsim_core::{report, rng, Experiment, ExperimentConfig, InitMode, Rule};
use log::info;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{parse_model, to_table};
use crate::{CliError, CliResult};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn write(dir: &Path, name: &str, contents: &str, outputs: &mut Vec<String>) -> CliResult<()> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| runtime(format!("cannot write {}: {e}", path.display())))?;
    outputs.push(name.to_string());
    Ok(())
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| runtime(format!("cannot create {}: {e}", dir.display())))
}

pub fn config_echo(cfg: &ExperimentConfig) -> Value {
    serde_json::to_value(to_table(cfg)).expect("config tables serialize")
}

/// SHA-256 of the compact JSON config echo.
pub fn config_digest(cfg: &ExperimentConfig) -> String {
    let bytes = serde_json::to_vec(&config_echo(cfg)).expect("config echo serializes");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn write_manifest(
    dir: &Path,
    cfg: &ExperimentConfig,
    command: &str,
    started: String,
    mut outputs: Vec<String>,
) -> CliResult<()> {
    outputs.push("manifest.json".into());
    let manifest = json!({
        "artifact": "herdsim",
        "version": ARTIFACT_VERSION,
        "command": command,
        "master_seed": cfg.master_seed,
        "started_at": started,
        "finished_at": now(),
        "outputs": outputs,
        "config": config_echo(cfg),
    });
    let text = serde_json::to_string_pretty(&manifest).map_err(runtime)? + "\n";
    fs::write(dir.join("manifest.json"), text).map_err(runtime)
}

pub fn cmd_run(mut cfg: ExperimentConfig, out_dir: &Path, seed: Option<u64>, threads: Option<usize>) -> CliResult<()> {
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    let started = now();
    let experiment = Experiment::prepare(cfg.clone())?;
    create_dir(out_dir)?;
    info!("running {} trials", cfg.trials);
    let results = experiment.run(threads)?;
    for (id, e) in &results.failures {
        log::warn!("trial {id} failed: {e}");
    }

    let mut outputs = Vec::new();
    write(out_dir, "trials.csv", &report::trials_csv(&results.outcomes)?, &mut outputs)?;
    let mut summary = serde_json::to_value(&results.summary).map_err(runtime)?;
    summary["config_digest"] = Value::String(config_digest(&cfg));
    write(out_dir, "summary.json", &(serde_json::to_string_pretty(&summary).map_err(runtime)? + "\n"), &mut outputs)?;
    if cfg.trajectory_trials > 0 {
        write(out_dir, "trajectory.csv", &report::trajectory_csv(&results.outcomes)?, &mut outputs)?;
    }
    write_manifest(out_dir, &cfg, "run", started, outputs)?;
    if !results.failures.is_empty() {
        return Err(runtime(format!("{} of {} trials failed", results.failures.len(), cfg.trials)));
    }
    Ok(())
}

/// Parses `start:stop:step` (inclusive, values rounded to 12 decimals so
/// `0.2:0.8:0.1` yields exactly 0.2, 0.3, ...) or a comma-separated list.
pub fn parse_grid(spec: &str) -> CliResult<Vec<f64>> {
    let bad = |m: String| CliError::Usage(format!("bad --p0 grid `{spec}`: {m}"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(format!("`{s}` is not a number")));
    let grid: Vec<f64> = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        let [a, b, step] = parts.as_slice() else {
            return Err(bad("expected start:stop:step".into()));
        };
        let (a, b, step) = (num(a)?, num(b)?, num(step)?);
        if !(step > 0.0) || b < a {
            return Err(bad("need start <= stop and a positive step".into()));
        }
        let count = ((b - a) / step + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|i| format!("{:.12}", a + i as f64 * step).parse::<f64>().expect("formatted float parses"))
            .collect()
    } else {
        spec.split(',').map(num).collect::<CliResult<_>>()?
    };
    if grid.is_empty() {
        return Err(bad("empty grid".into()));
    }
    if let Some(p) = grid.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(bad(format!("{p} outside [0, 1]")));
    }
    Ok(grid)
}

pub fn cmd_sweep(
    mut cfg: ExperimentConfig,
    grid: &[f64],
    out_dir: &Path,
    seed: Option<u64>,
    threads: Option<usize>,
) -> CliResult<()> {
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    if matches!(cfg.init, InitMode::Explicit(_)) {
        return Err(CliError::Usage("sweep needs init.mode = constant or iid_uniform_mean".into()));
    }
    let started = now();
    create_dir(out_dir)?;
    let rows = herdsim_core::montecarlo::sweep_p0(&cfg, grid, threads)?;
    let mut outputs = Vec::new();
    write(out_dir, "sweep.csv", &report::sweep_csv(&rows)?, &mut outputs)?;
    write_manifest(out_dir, &cfg, "sweep", started, outputs)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnoseOptions {
    /// One-step samples per state for the drift table.
    pub samples: usize,
    /// Dispersed random states besides `x = 0` and the initial state.
    pub random_states: usize,
    /// `Some(samples)` runs the oracle-equivalence test.
    pub oracle_samples: Option<usize>,
}

impl Default for DiagnoseOptions {
    fn default() -> Self {
        Self { samples: 100_000, random_states: 4, oracle_samples: None }
    }
}

/// States probed by `diagnose`: all zeros, the initial state of trial 0,
/// then i.i.d. uniform beliefs.
pub fn diagnose_states(cfg: &ExperimentConfig, n: usize, random_states: usize) -> Vec<Vec<f64>> {
    let mut states = vec![vec![0.0; n], cfg.init.draw(n, &mut rng::trial_stream(cfg.master_seed, 0))];
    let mut stream = rng::stream(rng::trial_seed(cfg.master_seed, u64::MAX));
    let uniform = InitMode::IidUniformMean(0.5);
    states.extend((0..random_states).map(|_| uniform.draw(n, &mut stream)));
    states
}

pub fn cmd_diagnose(cfg: ExperimentConfig, out_dir: &Path, opts: DiagnoseOptions) -> CliResult<()> {
    let started = now();
    let experiment = Experiment::prepare(cfg.clone())?;
    let n = experiment.graph().n();
    if opts.oracle_samples.is_some() && n > MAX_ENUMERATION_AGENTS {
        return Err(runtime(herdsim_core::Error::TooLarge {
            what: format!("oracle mode on {n} agents (limit {MAX_ENUMERATION_AGENTS})"),
        }));
    }
    create_dir(out_dir)?;
    let dynamics = experiment.dynamics();
    let pi = experiment.weights();
    let states = diagnose_states(&cfg, n, opts.random_states);
    let consensus = matches!(cfg.dynamics.rule, Rule::Consensus);

    let mut state_rows = Vec::new();
    let mut drift_rows = Vec::new();
    let mut variance_rows = Vec::new();
    let mut oracle_rows = Vec::new();
    for (s, x) in states.iter().enumerate() {
        for (agent, v) in x.iter().enumerate() {
            state_rows.push(vec![s.to_string(), agent.to_string(), g17(*v)]);
        }
        let mut stream = rng::trial_stream(cfg.master_seed ^ 0x6469_6167, s as u64);
        let drift = analysis::estimate_drift(&dynamics, pi, x, opts.samples, &mut stream)?;
        drift_rows.push(vec![
            s.to_string(),
            g17(drift.q),
            drift.samples.to_string(),
            g17(drift.mean),
            g17(drift.std_error),
            g17(drift.z_score(0.0)),
        ]);

        let analytic = consensus.then(|| analysis::delta_q_conditional_variance(pi, x, &cfg.dynamics.alpha));
        let enumerated = if n <= MAX_ENUMERATION_AGENTS {
            match analysis::enumerate_next_state(x, &cfg.dynamics, experiment.graph()) {
                Ok(dist) => Some(dist.weighted_moments(pi).1),
                Err(herdsim_core::Error::TooLarge { .. }) => None,
                Err(e) => return Err(e.into()),
            }
        } else {
            None
        };
        let opt = |v: Option<f64>| v.map(g17).unwrap_or_default();
        variance_rows.push(vec![s.to_string(), g17(drift.q), opt(analytic), opt(enumerated), g17(drift.variance)]);

        if let Some(samples) = opts.oracle_samples {
            let mut stream = rng::trial_stream(cfg.master_seed ^ 0x6f72_6163, s as u64);
            let r = analysis::oracle_equivalence(&dynamics, x, samples, &mut stream)?;
            oracle_rows.push(vec![
                s.to_string(),
                samples.to_string(),
                g17(r.statistic),
                r.degrees_of_freedom.to_string(),
                g17(r.p_value),
                r.unexpected.to_string(),
            ]);
        }
    }

    let mut outputs = Vec::new();
    write(out_dir, "states.csv", &report::table_csv(&["state", "agent", "x"], &state_rows)?, &mut outputs)?;
    let drift_header = ["state", "q", "samples", "mean_dq", "std_error", "z"];
    write(out_dir, "drift.csv", &report::table_csv(&drift_header, &drift_rows)?, &mut outputs)?;
    let variance_header = ["state", "q", "analytic", "enumerated", "empirical"];
    write(out_dir, "variance.csv", &report::table_csv(&variance_header, &variance_rows)?, &mut outputs)?;
    if opts.oracle_samples.is_some() {
        let header = ["state", "samples", "chi_square", "df", "p_value", "unexpected"];
        write(out_dir, "oracle.csv", &report::table_csv(&header, &oracle_rows)?, &mut outputs)?;
    }
    write_manifest(out_dir, &cfg, "diagnose", started, outputs)
}

pub fn cmd_gen_graph(model: &str, seed: u64, path: &Path) -> CliResult<()> {
    let (n, model) = parse_model(model).map_err(|m| CliError::Usage(format!("--model: {m}")))?;
    let edges = random_edges(n, model, seed)?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    fs::write(path, write_undirected(n, &edges)).map_err(|e| runtime(format!("cannot write {}: {e}", path.display())))
}
