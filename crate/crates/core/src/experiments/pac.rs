use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::experiments::{
    order_choice, proportion_ci, to_csv, to_jsonl, total_loss, ExperimentConfig, MSpec, Resolved, RunOutput,
};
use crate::learner::{azuma_bound, m_pac, GuaranteeInputs};
use crate::losses::{empirical_loss, LossSpec};
use crate::samples::{derive_seed, draw_sample, erm_realizability_check, stream_rng, LabeledSample, Stream};
use crate::schemes::{kappa, reconstruct};
use crate::{Error, Result};

/// One run of the learner on a fresh realizable sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PacTrial {
    pub epsilon: f64,
    pub delta: f64,
    pub attempt: u64,
    pub trial: usize,
    pub m: u64,
    pub target: String,
    pub hypothesis: String,
    pub total_loss: f64,
    pub empirical_loss: f64,
    pub gap: f64,
    /// `total_loss > epsilon`.
    pub failed: bool,
    pub header: usize,
    pub selected: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PacRow {
    pub epsilon: f64,
    pub delta: f64,
    pub m_spec: String,
    pub m: u64,
    pub m_pac: Option<u64>,
    pub trials: usize,
    pub failures: usize,
    pub q_hat: f64,
    pub ci: f64,
    pub union_bound: f64,
    pub mean_total_loss: f64,
    /// Whether `m >= m_pac`, where `q_hat - ci <= delta` is required.
    pub asserted: bool,
    pub rerun: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PacSummary {
    pub rows: Vec<PacRow>,
    pub trials: Vec<PacTrial>,
}

impl PacSummary {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn render(&self) -> Result<RunOutput> {
        Ok(RunOutput { trials_jsonl: to_jsonl(&self.trials)?, summary_csv: to_csv(&self.rows)? })
    }
}

struct Cell<'a> {
    config: &'a ExperimentConfig,
    resolved: &'a Resolved,
    grid: u64,
    epsilon: f64,
    delta: f64,
    m: usize,
}

impl Cell<'_> {
    fn trial(&self, attempt: u64, t: usize) -> Result<PacTrial> {
        let Resolved { class, scheme, measure, loss } = self.resolved;
        let seed = derive_seed(self.config.seed, &[attempt, self.grid, self.m as u64, t as u64]);
        let f = class.sample_member(&mut stream_rng(seed, Stream::Hypothesis));
        let x = draw_sample(measure, self.m, seed);
        let sample = LabeledSample::induced(x, f.clone())?;
        let zero_one = LossSpec::zero_one(self.config.mode);
        if !erm_realizability_check(class, &sample, &zero_one, None)?.realizable {
            return Err(Error::NotRealizable(format!("trial {t} at m = {} labelled by {}", self.m, f.summary())));
        }
        let compressed = kappa(scheme.as_ref(), &sample)?;
        let h = reconstruct(scheme.as_ref(), &compressed)?;
        let order = order_choice(self.config.mode, self.config.k, self.m, self.config.order_choice, self.config.seed)?;
        let empirical = empirical_loss(&sample, &h, loss, order.as_ref())?;
        let total = total_loss(self.config.estimator, measure, &f, &h, loss, derive_seed(seed, &[u64::MAX]))?;
        Ok(PacTrial {
            epsilon: self.epsilon,
            delta: self.delta,
            attempt,
            trial: t,
            m: self.m as u64,
            target: f.summary(),
            hypothesis: h.summary(),
            total_loss: total,
            empirical_loss: empirical,
            gap: total - empirical,
            failed: total > self.epsilon,
            header: compressed.header,
            selected: compressed.selection.maps().to_vec(),
        })
    }
}

/// Failure frequency of `A = rho o kappa` over fresh realizable samples, for
/// every `(epsilon, delta)` pair and sample size of the config. At sizes
/// `m >= m_pac(epsilon, delta)` the row passes iff `q_hat - ci <= delta`.
pub fn run_pac_experiment(config: &ExperimentConfig) -> Result<PacSummary> {
    config.validate()?;
    let resolved = config.resolve()?;
    let mut rows = Vec::new();
    let mut trials = Vec::new();
    let grid = config.epsilon.iter().flat_map(|&e| config.delta.iter().map(move |&d| (e, d)));
    for (g, (epsilon, delta)) in grid.enumerate() {
        let inputs = GuaranteeInputs::for_scheme(resolved.scheme.clone(), resolved.loss.sup_norm(), epsilon, delta)?;
        let mp = m_pac(&inputs, config.scan_limit)?.m_pac;
        for spec in &config.m_values {
            let m = match (*spec, mp) {
                (MSpec::Fixed(m), _) => m,
                (MSpec::PacMultiple(c), Some(m0)) => c * m0,
                (MSpec::PacMultiple(_), None) => {
                    return Err(Error::InvalidParameter(format!("m_pac not found below {}", config.scan_limit)))
                }
            };
            let cell = Cell { config, resolved: &resolved, grid: g as u64, epsilon, delta, m: m as usize };
            let asserted = mp.is_some_and(|m0| m >= m0);
            let mut row = None;
            for attempt in 0..2u64 {
                let n = config.trials * if attempt == 0 { 1 } else { 4 };
                let batch = (0..n).into_par_iter().map(|t| cell.trial(attempt, t)).collect::<Result<Vec<_>>>()?;
                let failures = batch.iter().filter(|t| t.failed).count();
                let q_hat = failures as f64 / n as f64;
                let ci = proportion_ci(q_hat, n);
                let pass = !asserted || q_hat - ci <= delta;
                let r = PacRow {
                    epsilon,
                    delta,
                    m_spec: spec.to_string(),
                    m,
                    m_pac: mp,
                    trials: n,
                    failures,
                    q_hat,
                    ci,
                    union_bound: azuma_bound(&inputs, m).total,
                    mean_total_loss: batch.iter().map(|t| t.total_loss).sum::<f64>() / n as f64,
                    asserted,
                    rerun: attempt > 0,
                    pass,
                };
                trials.extend(batch);
                row = Some(r);
                if pass {
                    break;
                }
            }
            rows.extend(row);
        }
    }
    Ok(PacSummary { rows, trials })
}
