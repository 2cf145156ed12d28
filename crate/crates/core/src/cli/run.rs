use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expfam::MonomialBasis;
use crate::optim::{eda_run, exact_descent_run, sngd_run, RunStatus, RunTrace};
use crate::seed::child_seed;
use crate::walsh::PseudoBooleanFunction;

use super::config::{AlgorithmKind, BasisChoice, RunConfig, TraceFormat};
use super::registry::{registry_build, ProblemInstance};

pub const SUMMARY_COLUMNS: [&str; 7] = [
    "replicate",
    "seed",
    "status",
    "final_best",
    "iterations",
    "wall_time_s",
    "error",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateSummary {
    pub replicate: usize,
    pub seed: u64,
    pub status: Option<RunStatus>,
    pub final_best: Option<f64>,
    pub iterations: usize,
    pub wall_time_s: f64,
    pub error: Option<String>,
    pub trace_files: Vec<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub instance: ProblemInstance,
    pub replicates: Vec<ReplicateSummary>,
    pub summary_path: PathBuf,
}

impl RunOutcome {
    pub fn success(&self) -> bool {
        self.replicates.iter().all(|r| r.error.is_none())
    }

    /// The best `final_best` over replicates in the configured direction.
    pub fn best(&self, config: &RunConfig) -> Option<f64> {
        let dir = direction(config);
        self.replicates
            .iter()
            .filter_map(|r| r.final_best)
            .reduce(|a, b| if dir.better(b, a) { b } else { a })
    }
}

fn direction(config: &RunConfig) -> crate::optim::Direction {
    let r = config.resolved();
    match config.algorithm.kind {
        AlgorithmKind::Sngd => r.sngd.map(|c| c.direction),
        AlgorithmKind::Eda => r.eda.map(|c| c.direction),
        AlgorithmKind::Exact => r.exact.map(|c| c.direction),
    }
    .unwrap_or_default()
}

pub fn build_basis(choice: BasisChoice, f: &PseudoBooleanFunction) -> Result<MonomialBasis> {
    match choice {
        BasisChoice::Singletons => MonomialBasis::singletons(f.n()),
        BasisChoice::Support => MonomialBasis::from_support(f),
        BasisChoice::SupportAndSingletons => MonomialBasis::from_support_and_singletons(f),
    }
}

/// Runs one replicate of a resolved config with the given seed.
pub fn run_replicate(
    config: &RunConfig,
    f: &PseudoBooleanFunction,
    basis: &MonomialBasis,
    seed: u64,
) -> Result<RunTrace> {
    let r = config.resolved();
    match config.algorithm.kind {
        AlgorithmKind::Sngd => {
            let mut c = r.sngd.unwrap_or_default();
            c.seed = seed;
            sngd_run(f, basis, &c)
        }
        AlgorithmKind::Eda => {
            let mut c = r.eda.unwrap_or_default();
            c.seed = seed;
            eda_run(f, basis, &c)
        }
        AlgorithmKind::Exact => exact_descent_run(f, basis, &r.exact.unwrap_or_default()),
    }
}

fn trace_preamble(resolved_toml: &str, replicate: usize, seed: u64) -> String {
    let mut s = String::from(resolved_toml);
    if !s.ends_with('\n') {
        s.push('\n');
    }
    let _ = writeln!(s, "replicate = {replicate}");
    let _ = writeln!(s, "child_seed = {seed}");
    s
}

fn write_traces(
    dir: &Path,
    format: TraceFormat,
    trace: &RunTrace,
    preamble: &str,
    json_config: &serde_json::Value,
    replicate: usize,
) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    if matches!(format, TraceFormat::Csv | TraceFormat::Both) {
        let path = dir.join(format!("trace_r{replicate}.csv"));
        let mut w = BufWriter::new(File::create(&path)?);
        trace.write_csv(&mut w, preamble)?;
        w.flush()?;
        files.push(path);
    }
    if matches!(format, TraceFormat::Jsonl | TraceFormat::Both) {
        let path = dir.join(format!("trace_r{replicate}.jsonl"));
        let mut w = BufWriter::new(File::create(&path)?);
        trace.write_jsonl(&mut w, Some(json_config))?;
        w.flush()?;
        files.push(path);
    }
    Ok(files)
}

/// Executes every replicate and writes traces plus `summary.csv` under
/// `run.output`. Errors inside a replicate are recorded in its summary row;
/// the returned `Err` covers only setup and summary I/O.
pub fn run_command(config: &RunConfig) -> Result<RunOutcome> {
    config.validate()?;
    let resolved = config.resolved();
    let instance = registry_build(&config.problem)?;
    if instance.verify_optimum() == Some(false) {
        return Err(Error::Config(format!(
            "problem {}: recorded optimum is not attained",
            instance.name
        )));
    }
    let basis = build_basis(config.algorithm.basis, &instance.function)?;
    let out_dir = &config.run.output;
    fs::create_dir_all(out_dir)?;
    let resolved_toml = resolved.to_toml()?;
    let json_base = serde_json::to_value(&resolved).map_err(|e| Error::Config(e.to_string()))?;

    let replicates: Vec<ReplicateSummary> = (0..config.run.replicates)
        .into_par_iter()
        .map(|r| {
            let seed = child_seed(config.run.seed, r as u64);
            let start = Instant::now();
            let outcome = run_replicate(config, &instance.function, &basis, seed).and_then(|trace| {
                let mut json_config = json_base.clone();
                json_config["replicate"] = r.into();
                json_config["child_seed"] = seed.into();
                let preamble = trace_preamble(&resolved_toml, r, seed);
                let files = write_traces(out_dir, config.run.format, &trace, &preamble, &json_config, r)?;
                Ok((trace, files))
            });
            let wall_time_s = start.elapsed().as_secs_f64();
            match outcome {
                Ok((trace, trace_files)) => ReplicateSummary {
                    replicate: r,
                    seed,
                    status: Some(trace.status),
                    final_best: trace.final_best(),
                    iterations: trace.iterations(),
                    wall_time_s,
                    error: None,
                    trace_files,
                },
                Err(e) => ReplicateSummary {
                    replicate: r,
                    seed,
                    status: None,
                    final_best: None,
                    iterations: 0,
                    wall_time_s,
                    error: Some(e.to_string()),
                    trace_files: Vec::new(),
                },
            }
        })
        .collect();

    let summary_path = out_dir.join("summary.csv");
    let mut w = BufWriter::new(File::create(&summary_path)?);
    writeln!(w, "{}", SUMMARY_COLUMNS.join(","))?;
    for s in &replicates {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            s.replicate,
            s.seed,
            s.status.map(RunStatus::as_str).unwrap_or("error"),
            s.final_best.map(|v| v.to_string()).unwrap_or_default(),
            s.iterations,
            s.wall_time_s,
            s.error.as_deref().map(csv_escape).unwrap_or_default(),
        )?;
    }
    w.flush()?;
    Ok(RunOutcome {
        instance,
        replicates,
        summary_path,
    })
}

fn csv_escape(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}
