use serde::{Deserialize, Serialize};

use crate::experiments::{to_csv, to_jsonl, ExperimentConfig, MSpec, RunOutput};
use crate::schemes::{check_approximate_validity, check_compression_validity, ValidityConfig, ValidityReport};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationRow {
    pub m: usize,
    pub trials: usize,
    pub violations: usize,
    pub max_loss: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationSummary {
    pub report: ValidityReport,
    pub rows: Vec<ValidationRow>,
}

impl ValidationSummary {
    pub fn passed(&self) -> bool {
        self.report.violations == 0
    }

    pub fn render(&self) -> Result<RunOutput> {
        Ok(RunOutput { trials_jsonl: to_jsonl(&self.report.records)?, summary_csv: to_csv(&self.rows)? })
    }
}

/// Scheme validation driven by a config: exact unless `approx_eps` is set.
pub fn run_validation(config: &ExperimentConfig) -> Result<ValidationSummary> {
    config.validate()?;
    let resolved = config.resolve()?;
    let m_values = config
        .m_values
        .iter()
        .map(|spec| match *spec {
            MSpec::Fixed(m) => Ok(m as usize),
            MSpec::PacMultiple(_) => Err(Error::Parse("m_values: validation needs fixed sizes".into())),
        })
        .collect::<Result<Vec<_>>>()?;
    let vc = ValidityConfig {
        measure: resolved.measure.clone(),
        trials: config.trials,
        m_values: m_values.clone(),
        seed: config.seed,
        order_choices: config.order_choices,
        fail_fast: config.fail_fast,
    };
    let scheme = resolved.scheme.as_ref();
    let report = match config.approx_eps {
        None => check_compression_validity(scheme, &resolved.class, &resolved.loss, &vc)?,
        Some(eps) => check_approximate_validity(scheme, &resolved.class, &resolved.loss, move |_| eps, &vc)?,
    };
    let rows = m_values
        .iter()
        .filter_map(|&m| {
            let records: Vec<_> = report.records.iter().filter(|r| r.m == m).collect();
            (!records.is_empty()).then(|| ValidationRow {
                m,
                trials: records.len(),
                violations: records.iter().filter(|r| r.violation).count(),
                max_loss: records.iter().map(|r| r.empirical_loss).fold(0.0, f64::max),
                tolerance: records[0].tolerance,
            })
        })
        .collect();
    Ok(ValidationSummary { report, rows })
}
