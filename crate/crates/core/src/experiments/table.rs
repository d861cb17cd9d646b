use serde::{Deserialize, Serialize};

use crate::experiments::{ExperimentConfig, MSpec};
use crate::learner::{asymptotic_guarantee_reference, azuma_bound, m_pac, GuaranteeInputs};
use crate::{Mode, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub mode: Mode,
    pub k: usize,
    pub m: u64,
    pub epsilon: f64,
    pub delta: f64,
    pub slack: f64,
    pub epsilon_tilde: f64,
    pub condition_violated: bool,
    pub single_event: f64,
    pub ln_multiplier: f64,
    pub multiplier: Option<f64>,
    pub total: f64,
    pub m_pac: Option<u64>,
    pub asymptotic: f64,
    /// `m_pac / asymptotic`.
    pub ratio: Option<f64>,
}

/// Azuma bound and `m_pac` over the `epsilon x delta x m_values` grid of the
/// config, in that nesting order. With no `m_values`, one row per
/// `(epsilon, delta)` at `m_pac` (or at the scan limit when not found).
pub fn run_bound_table(config: &ExperimentConfig) -> Result<Vec<BoundRow>> {
    config.validate()?;
    let resolved = config.resolve()?;
    let mut rows = Vec::new();
    for &epsilon in &config.epsilon {
        for &delta in &config.delta {
            let inputs =
                GuaranteeInputs::for_scheme(resolved.scheme.clone(), resolved.loss.sup_norm(), epsilon, delta)?;
            let mp = m_pac(&inputs, config.scan_limit)?.m_pac;
            let asymptotic = asymptotic_guarantee_reference(&inputs);
            let sizes: Vec<u64> = if config.m_values.is_empty() {
                vec![mp.unwrap_or(config.scan_limit)]
            } else {
                config
                    .m_values
                    .iter()
                    .filter_map(|spec| match *spec {
                        MSpec::Fixed(m) => Some(m),
                        MSpec::PacMultiple(c) => mp.map(|m0| c * m0),
                    })
                    .collect()
            };
            for m in sizes {
                let b = azuma_bound(&inputs, m);
                rows.push(BoundRow {
                    mode: b.mode,
                    k: b.k,
                    m,
                    epsilon,
                    delta,
                    slack: b.slack,
                    epsilon_tilde: b.epsilon_tilde,
                    condition_violated: b.condition_violated,
                    single_event: b.single_event,
                    ln_multiplier: b.ln_multiplier,
                    multiplier: b.multiplier,
                    total: b.total,
                    m_pac: mp,
                    asymptotic,
                    ratio: mp.map(|m0| m0 as f64 / asymptotic),
                });
            }
        }
    }
    Ok(rows)
}
