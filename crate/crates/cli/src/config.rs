use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Forgy,
    Scl,
    Som,
    Kbatch,
    Korresp,
    Kacm,
    Kacm1,
    Kacm2,
    Kdisj,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Forgy => "forgy",
            Algorithm::Scl => "scl",
            Algorithm::Som => "som",
            Algorithm::Kbatch => "kbatch",
            Algorithm::Korresp => "korresp",
            Algorithm::Kacm => "kacm",
            Algorithm::Kacm1 => "kacm1",
            Algorithm::Kacm2 => "kacm2",
            Algorithm::Kdisj => "kdisj",
        }
    }

    pub fn is_qualitative(self) -> bool {
        matches!(
            self,
            Algorithm::Korresp | Algorithm::Kacm | Algorithm::Kacm1 | Algorithm::Kacm2 | Algorithm::Kdisj
        )
    }

    pub fn is_batch(self) -> bool {
        matches!(self, Algorithm::Forgy | Algorithm::Kbatch)
    }

    /// Iteration count used when `--iters` is absent.
    pub fn default_iters(self) -> IterSpec {
        match self {
            Algorithm::Forgy | Algorithm::Kbatch => IterSpec::Literal(100),
            Algorithm::Korresp | Algorithm::Kacm | Algorithm::Kacm2 => IterSpec::PerRow(100),
            Algorithm::Kdisj => IterSpec::PerRow(15),
            Algorithm::Scl | Algorithm::Som | Algorithm::Kacm1 => IterSpec::PerRow(6),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An iteration count, either literal (`1000`) or a multiple of the number
/// of training vectors (`6N`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IterSpec {
    Literal(usize),
    PerRow(usize),
}

impl IterSpec {
    pub fn resolve(self, n: usize) -> usize {
        match self {
            IterSpec::Literal(t) => t,
            IterSpec::PerRow(k) => k * n,
        }
    }
}

impl fmt::Display for IterSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IterSpec::Literal(t) => write!(f, "{t}"),
            IterSpec::PerRow(k) => write!(f, "{k}N"),
        }
    }
}

impl FromStr for IterSpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let s = s.trim();
        let bad = || CliError::Validation(format!("bad iteration count `{s}`; expected e.g. 5000 or 6N"));
        let spec = match s.strip_suffix(['N', 'n']) {
            Some("") => IterSpec::PerRow(1),
            Some(k) => IterSpec::PerRow(k.trim().parse().map_err(|_| bad())?),
            None => IterSpec::Literal(s.parse().map_err(|_| bad())?),
        };
        if spec.resolve(1) == 0 {
            return Err(bad());
        }
        Ok(spec)
    }
}

/// Echo of a training run, sufficient to replay it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub somkit_version: String,
    pub algorithm: Algorithm,
    pub data: String,
    pub contingency: bool,
    pub topology: String,
    pub rows: usize,
    pub cols: usize,
    pub radius_schedule: String,
    pub gain: String,
    pub eps0: f64,
    pub eps_final: f64,
    pub init: String,
    pub seed: u64,
    pub iterations: usize,
    pub iterations_spec: String,
    pub training_vectors: usize,
    pub standardize: String,
    pub missing: String,
    pub superclasses: Option<usize>,
    pub linkage: String,
    pub missing_token: String,
    pub id: Option<String>,
    pub qual: Vec<String>,
    pub ignore: Vec<String>,
}
