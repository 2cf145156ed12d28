use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::Result;

/// Leading CSV columns; `theta_0 .. theta_{d-1}` follow.
pub const CSV_FIXED_COLUMNS: [&str; 5] = ["iter", "E_f_est", "E_f_exact", "best_f", "grad_norm"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub iter: usize,
    /// Parameters of the model the iteration's population was drawn from.
    pub theta: Vec<f64>,
    /// Mean fitness of the population (the exact value in exact runs).
    pub e_f_est: f64,
    pub e_f_exact: Option<f64>,
    pub best_f: f64,
    pub grad_norm: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    MaxIters,
    GradientConverged,
    Stalled,
    PopulationConverged,
}

impl RunStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RunStatus::MaxIters => "max-iters",
            RunStatus::GradientConverged => "gradient-converged",
            RunStatus::Stalled => "stalled",
            RunStatus::PopulationConverged => "population-converged",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub records: Vec<IterRecord>,
    pub status: RunStatus,
    /// Parameters after the last update.
    pub final_theta: Vec<f64>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl RunTrace {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn final_best(&self) -> Option<f64> {
        self.records.last().map(|r| r.best_f)
    }

    /// First iteration whose best-so-far reaches `target` in the given direction.
    pub fn first_hit(&self, target: f64, direction: super::Direction) -> Option<usize> {
        self.records
            .iter()
            .find(|r| !direction.better(target, r.best_f))
            .map(|r| r.iter)
    }

    pub fn csv_header(dim: usize) -> String {
        let mut cols: Vec<String> = CSV_FIXED_COLUMNS.iter().map(|s| s.to_string()).collect();
        cols.extend((0..dim).map(|j| format!("theta_{j}")));
        cols.join(",")
    }

    /// CSV with optional `# `-prefixed preamble lines before the header row.
    pub fn write_csv<W: Write>(&self, mut w: W, preamble: &str) -> Result<()> {
        for line in preamble.lines() {
            writeln!(w, "# {line}")?;
        }
        let dim = self.final_theta.len();
        writeln!(w, "{}", Self::csv_header(dim))?;
        for r in &self.records {
            let mut fields = vec![
                r.iter.to_string(),
                r.e_f_est.to_string(),
                opt(r.e_f_exact),
                r.best_f.to_string(),
                opt(r.grad_norm),
            ];
            fields.extend(r.theta.iter().map(|t| t.to_string()));
            writeln!(w, "{}", fields.join(","))?;
        }
        Ok(())
    }

    /// JSON lines: an optional `{"config": ...}` line, one object per
    /// iteration, then `{"status": ..., "final_theta": [...]}`.
    pub fn write_jsonl<W: Write>(&self, mut w: W, config: Option<&serde_json::Value>) -> Result<()> {
        if let Some(c) = config {
            writeln!(w, "{}", json!({ "config": c }))?;
        }
        for r in &self.records {
            let line = json!({
                "iter": r.iter,
                "E_f_est": r.e_f_est,
                "E_f_exact": r.e_f_exact,
                "best_f": r.best_f,
                "grad_norm": r.grad_norm,
                "theta": r.theta,
            });
            writeln!(w, "{line}")?;
        }
        writeln!(
            w,
            "{}",
            json!({ "status": self.status.as_str(), "final_theta": self.final_theta })
        )?;
        Ok(())
    }
}
