//! Parsing of bucket constraints given on the command line.

use std::fmt;
use std::str::FromStr;

use reuseplan::plan::{Algorithm, Constraints};

use crate::output::CliError;

/// A bucket count, either fixed or a multiple of the worker count (`3xW`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BucketCount {
    Fixed(usize),
    PerWorker(usize),
}

impl BucketCount {
    pub fn resolve(self, workers: Option<usize>) -> Result<usize, CliError> {
        match (self, workers) {
            (BucketCount::Fixed(n), _) => Ok(n),
            (BucketCount::PerWorker(n), Some(w)) => Ok(n * w),
            (BucketCount::PerWorker(n), None) => Err(CliError::new(
                "usage",
                format!("--max-buckets {n}xW needs a worker count"),
            )),
        }
    }

    pub fn depends_on_workers(self) -> bool {
        matches!(self, BucketCount::PerWorker(_))
    }
}

impl FromStr for BucketCount {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let bad = || CliError::new("usage", format!("bucket count `{s}` is neither N nor NxW"));
        match s.strip_suffix("xW").or_else(|| s.strip_suffix("xw")) {
            Some(n) => n.parse().map(BucketCount::PerWorker).map_err(|_| bad()),
            None => s.parse().map(BucketCount::Fixed).map_err(|_| bad()),
        }
    }
}

impl fmt::Display for BucketCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BucketCount::Fixed(n) => write!(f, "{n}"),
            BucketCount::PerWorker(n) => write!(f, "{n}xW"),
        }
    }
}

/// One algorithm setting of a sweep: `stage`, `rtma:10`, `trtma:3xW`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlgoSpec {
    pub algorithm: Algorithm,
    pub size: Option<usize>,
    pub count: Option<BucketCount>,
}

impl AlgoSpec {
    pub fn constraints(&self, workers: usize) -> Result<Constraints, CliError> {
        Ok(Constraints {
            max_bucket_size: self.size,
            max_buckets: self.count.map(|c| c.resolve(Some(workers))).transpose()?,
        })
    }

    pub fn depends_on_workers(&self) -> bool {
        self.count.is_some_and(BucketCount::depends_on_workers)
    }

    /// File-name friendly form.
    pub fn label(&self) -> String {
        match (self.size, self.count) {
            (Some(b), _) => format!("{}-{b}", self.algorithm),
            (_, Some(c)) => format!("{}-{c}", self.algorithm),
            _ => self.algorithm.to_string(),
        }
    }
}

impl FromStr for AlgoSpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let algorithm: Algorithm = name.parse().map_err(|e: reuseplan::Error| CliError::new("usage", e.to_string()))?;
        let spec = match (algorithm, arg) {
            (Algorithm::None | Algorithm::Stage, None) => AlgoSpec {
                algorithm,
                size: None,
                count: None,
            },
            (Algorithm::Trtma, Some(a)) => AlgoSpec {
                algorithm,
                size: None,
                count: Some(a.parse()?),
            },
            (Algorithm::Naive | Algorithm::Sca | Algorithm::Rtma, Some(a)) => AlgoSpec {
                algorithm,
                size: Some(a.parse().map_err(|_| CliError::new("usage", format!("bad bucket size in `{s}`")))?),
                count: None,
            },
            _ => {
                return Err(CliError::new(
                    "usage",
                    format!("`{s}`: use none, stage, naive:B, sca:B, rtma:B or trtma:N[xW]"),
                ))
            }
        };
        Ok(spec)
    }
}
