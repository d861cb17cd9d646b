//! Monte Carlo harness: concentration of a fixed selection, failure rates of
//! the full learner, bound tables and scheme validation, all driven by
//! [`ExperimentConfig`].
//!
//! Every run writes `trials.jsonl`, `summary.csv` and `manifest.json`. Trial
//! seeds are derived from the master seed and the trial coordinates, and
//! trials are collected in index order, so reruns are byte-identical.

mod concentration;
mod config;
mod pac;
mod table;
mod validate;

pub use concentration::{
    resolve_target, run_concentration_experiment, ConcentrationRow, ConcentrationSummary, ConcentrationTrial,
};
pub use config::{Estimator, ExperimentConfig, MSpec, Resolved, SigmaChoice, TargetSpec, KEYS};
pub use pac::{run_pac_experiment, PacRow, PacSummary, PacTrial};
pub use table::{run_bound_table, BoundRow};
pub use validate::{run_validation, ValidationRow, ValidationSummary};

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::index::{binomial, OrderChoice};
use crate::losses::{exact_total_loss, total_loss_monte_carlo, LossSpec, CI_MULTIPLIER};
use crate::samples::{derive_seed, stream_rng, Hypothesis, ProductMeasure, Stream};
use crate::{Error, Mode, Result};

/// Largest number of `k`-sets for which a random order choice is built.
const MAX_ORDER_SETS: u128 = 5_000_000;

/// 99% normal half-width of a proportion estimated from `n` trials.
pub fn proportion_ci(p: f64, n: usize) -> f64 {
    CI_MULTIPLIER * (p * (1.0 - p) / n as f64).sqrt()
}

fn total_loss(
    estimator: Estimator,
    mu: &ProductMeasure,
    f: &Hypothesis,
    h: &Hypothesis,
    loss: &LossSpec,
    seed: u64,
) -> Result<f64> {
    match estimator {
        Estimator::Exact => exact_total_loss(mu, f, h, loss),
        Estimator::MonteCarlo(n) => Ok(total_loss_monte_carlo(mu, f, h, loss, n, seed)?.estimate),
    }
}

/// The order choice a run uses at size `m`: canonical for index 0,
/// otherwise drawn from a stream keyed by `(seed, m, index)`.
fn order_choice(mode: Mode, k: usize, m: usize, index: u64, seed: u64) -> Result<Option<OrderChoice>> {
    if mode == Mode::Partite || index == 0 {
        return Ok(None);
    }
    if binomial(m as u64, k as u64) > MAX_ORDER_SETS {
        return Err(Error::Unsupported(format!("a random order choice on {m} points is too large to store")));
    }
    let mut rng = stream_rng(derive_seed(seed, &[m as u64]), Stream::OrderChoice { index });
    Ok(Some(OrderChoice::random(m, k, &mut rng)))
}

/// Rendered output files of one run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutput {
    pub trials_jsonl: Vec<u8>,
    pub summary_csv: Vec<u8>,
}

pub(crate) fn to_jsonl<T: Serialize>(records: &[T]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.push(b'\n');
    }
    Ok(out)
}

pub(crate) fn to_csv<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// Rows as CSV with a header line.
pub fn to_csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    to_csv(rows)
}

/// `sha256("blob <len>\0" ++ bytes)`, hex encoded.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileHash {
    pub name: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub files: Vec<FileHash>,
    /// Hash over the per-file hashes, in file order.
    pub content_hash: String,
    pub passed: bool,
}

/// Writes `trials.jsonl`, `summary.csv` and `manifest.json` into `dir`.
pub fn write_run(
    dir: &Path,
    command: &str,
    config: &ExperimentConfig,
    output: &RunOutput,
    passed: bool,
) -> Result<Manifest> {
    fs::create_dir_all(dir)?;
    let files = [("trials.jsonl", &output.trials_jsonl), ("summary.csv", &output.summary_csv)];
    let mut hashes = Vec::new();
    for (name, bytes) in files {
        fs::write(dir.join(name), bytes)?;
        hashes.push(FileHash { name: name.into(), sha256: content_hash(bytes) });
    }
    let joined: String = hashes.iter().map(|h| format!("{} {}\n", h.sha256, h.name)).collect();
    let manifest = Manifest {
        command: command.into(),
        seed: config.seed,
        config: config.clone(),
        files: hashes,
        content_hash: content_hash(joined.as_bytes()),
        passed,
    };
    let mut json = serde_json::to_vec_pretty(&manifest)?;
    json.push(b'\n');
    fs::write(dir.join("manifest.json"), json)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn git_style_hash() {
        // `printf 'hello\n' | git hash-object --object-format=sha256 --stdin`
        assert_eq!(content_hash(b"hello\n"), "2cf8d83d9ee29543b34a87727421fdecb7e3f3a183d337639025de576db9ebb4");
    }

    #[test]
    fn proportion_ci_shape() {
        assert_eq!(proportion_ci(0.0, 100), 0.0);
        assert!((proportion_ci(0.5, 100) - 0.1288).abs() < 1e-12);
    }
}
