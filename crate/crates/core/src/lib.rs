//! High-arity sample compression.
//!
//! This crate implements k-partite and k-ary (non-partite) selection and
//! compression schemes, the learner obtained by composing compression with
//! reconstruction, the Azuma-type tail bounds and sample-complexity
//! calculators that back that learner, and a Monte Carlo harness that checks
//! the bounds empirically.
//!
//! Conventions used throughout:
//!
//! - sample indices are 0-based (`0..m`), headers are 1-based (`1..=h_m`);
//! - tensors over `[m]^k` are stored row-major, last coordinate fastest;
//! - points are `f64` values, labels are `u32` codes into a finite alphabet.

pub mod error;
pub mod experiments;
pub mod index;
pub mod learner;
pub mod losses;
pub mod samples;
pub mod schemes;

pub use error::{Error, Result};

use serde::{Deserialize, Serialize};

/// Whether samples carry `k` independent sides or a single ground set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Partite,
    Nonpartite,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Partite => "partite",
            Mode::Nonpartite => "nonpartite",
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "partite" => Ok(Mode::Partite),
            "nonpartite" | "non-partite" => Ok(Mode::Nonpartite),
            other => Err(Error::Parse(format!("unknown mode `{other}`"))),
        }
    }
}
