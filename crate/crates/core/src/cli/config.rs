//! Declarative run configuration (TOML).
//!
//! ```toml
//! [problem]
//! name = "onemax"
//! n = 10
//!
//! [algorithm]
//! kind = "sngd"          # sngd | eda | exact
//! basis = "singletons"   # singletons | support | support-and-singletons
//!
//! [sngd]                 # only the section matching `kind` is used
//! population = 100
//! lambda = 0.1
//!
//! [run]
//! replicates = 4
//! seed = 42
//! output = "runs/onemax"
//! format = "csv"         # csv | jsonl | both
//! ```
//!
//! Omitted fields take their defaults. Replicate `r` runs with seed
//! `child_seed(run.seed, r)`, which replaces any `seed` given in the
//! algorithm section.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{EdaConfig, ExactConfig, SngdConfig};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub name: String,
    pub n: usize,
    /// Instance seed for randomized problems.
    #[serde(default)]
    pub seed: u64,
    /// Block length of `trap-k`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Number of monomials of `random-sparse`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terms: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_degree: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlgorithmKind {
    #[default]
    Sngd,
    Eda,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisChoice {
    #[default]
    Singletons,
    /// The nonconstant monomials of the problem.
    Support,
    SupportAndSingletons,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmSection {
    pub kind: AlgorithmKind,
    #[serde(default)]
    pub basis: BasisChoice,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceFormat {
    #[default]
    Csv,
    Jsonl,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub replicates: usize,
    pub seed: u64,
    pub output: PathBuf,
    pub format: TraceFormat,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            replicates: 1,
            seed: 0,
            output: PathBuf::from("runs"),
            format: TraceFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub algorithm: AlgorithmSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sngd: Option<SngdConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eda: Option<EdaConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<ExactConfig>,
    #[serde(default)]
    pub run: RunSection,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Fills in the section of the selected algorithm with defaults and drops
    /// the others.
    pub fn resolved(&self) -> Self {
        let mut out = self.clone();
        out.sngd = None;
        out.eda = None;
        out.exact = None;
        match self.algorithm.kind {
            AlgorithmKind::Sngd => out.sngd = Some(self.sngd.clone().unwrap_or_default()),
            AlgorithmKind::Eda => out.eda = Some(self.eda.clone().unwrap_or_default()),
            AlgorithmKind::Exact => out.exact = Some(self.exact.clone().unwrap_or_default()),
        }
        out
    }

    /// Checks every field that can be checked without running anything.
    pub fn validate(&self) -> Result<()> {
        let wrap = |section: &str, e: Error| match e {
            Error::InvalidParameter { name, msg } => {
                Error::Config(format!("{section}.{name}: {msg}"))
            }
            other => Error::Config(format!("{section}: {other}")),
        };
        super::registry::registry_build(&self.problem).map_err(|e| match e {
            Error::InvalidParameter { name, msg } => Error::Config(format!("{name}: {msg}")),
            other => Error::Config(format!("problem: {other}")),
        })?;
        if self.run.replicates == 0 {
            return Err(Error::Config("run.replicates: must be at least 1".into()));
        }
        if i64::try_from(self.run.seed).is_err() {
            return Err(Error::Config("run.seed: must fit in a signed 64-bit integer".into()));
        }
        let resolved = self.resolved();
        match self.algorithm.kind {
            AlgorithmKind::Sngd => resolved.sngd.as_ref().map(SngdConfig::validate),
            AlgorithmKind::Eda => resolved.eda.as_ref().map(EdaConfig::validate),
            AlgorithmKind::Exact => resolved.exact.as_ref().map(ExactConfig::validate),
        }
        .transpose()
        .map_err(|e| wrap(kind_name(self.algorithm.kind), e))?;

        if self.algorithm.kind == AlgorithmKind::Exact && self.problem.n > crate::walsh::DEFAULT_EXACT_LIMIT {
            return Err(Error::Config(format!(
                "problem.n: exact algorithm needs n <= {}",
                crate::walsh::DEFAULT_EXACT_LIMIT
            )));
        }
        if let (AlgorithmKind::Eda, Some(eda)) = (self.algorithm.kind, &resolved.eda) {
            if eda.estimator == crate::optim::Estimator::Independence
                && self.algorithm.basis != BasisChoice::Singletons
            {
                return Err(Error::Config(
                    "algorithm.basis: the independence estimator needs `singletons`".into(),
                ));
            }
        }
        Ok(())
    }
}

pub(crate) fn kind_name(kind: AlgorithmKind) -> &'static str {
    match kind {
        AlgorithmKind::Sngd => "sngd",
        AlgorithmKind::Eda => "eda",
        AlgorithmKind::Exact => "exact",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"
[problem]
name = "random-sparse"
n = 8
seed = 3
terms = 6

[algorithm]
kind = "sngd"
basis = "support-and-singletons"

[sngd]
population = 50
selected = 25
lambda = 0.2
max_iters = 10
ridge = { relative = 1e-5 }

[sngd.gibbs]
burn_in = 10
scan = "random"

[run]
replicates = 2
seed = 9
output = "out"
format = "both"
"#;

    #[test]
    fn parses_example() {
        let c = RunConfig::parse(EXAMPLE).unwrap();
        assert_eq!(c.problem.terms, Some(6));
        let s = c.sngd.as_ref().unwrap();
        assert_eq!(s.population, 50);
        assert_eq!(s.selected, Some(25));
        assert_eq!(s.gibbs.burn_in, 10);
        assert_eq!(s.gibbs.thinning, 1);
        assert_eq!(c.run.format, TraceFormat::Both);
    }

    #[test]
    fn round_trip_is_identity() {
        let c = RunConfig::parse(EXAMPLE).unwrap();
        let again = RunConfig::parse(&c.to_toml().unwrap()).unwrap();
        assert_eq!(c, again);
        let r = c.resolved();
        assert_eq!(RunConfig::parse(&r.to_toml().unwrap()).unwrap(), r);
    }

    #[test]
    fn diagnostics_name_the_field() {
        let bad = EXAMPLE.replace("population = 50", "population = 1");
        let err = RunConfig::parse(&bad).unwrap_err().to_string();
        assert!(err.contains("sngd.population"), "{err}");

        let bad = EXAMPLE.replace("n = 8", "n = \"eight\"");
        let err = RunConfig::parse(&bad).unwrap_err().to_string();
        assert!(err.contains("n"), "{err}");

        let bad = EXAMPLE.replace("lambda = 0.2", "lambda = 0.2\nlamda = 1");
        let err = RunConfig::parse(&bad).unwrap_err().to_string();
        assert!(err.contains("lamda"), "{err}");

        let bad = EXAMPLE.replace("random-sparse", "sparse");
        let err = RunConfig::parse(&bad).unwrap_err().to_string();
        assert!(err.contains("problem.name"), "{err}");

        let bad = EXAMPLE.replace("replicates = 2", "replicates = 0");
        let err = RunConfig::parse(&bad).unwrap_err().to_string();
        assert!(err.contains("run.replicates"), "{err}");
    }

    #[test]
    fn independence_requires_singletons() {
        let text = r#"
[problem]
name = "onemax"
n = 5
[algorithm]
kind = "eda"
basis = "support-and-singletons"
"#;
        let err = RunConfig::parse(text).unwrap_err().to_string();
        assert!(err.contains("algorithm.basis"), "{err}");
    }
}
