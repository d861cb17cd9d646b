use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::experiments::{
    order_choice, proportion_ci, to_csv, to_jsonl, total_loss, ExperimentConfig, MSpec, Resolved, RunOutput,
    SigmaChoice,
};
use crate::index::{alpha_sharp, InjectionVector, OrderChoice};
use crate::learner::{azuma_bound, m_pac, GuaranteeInputs};
use crate::losses::empirical_loss;
use crate::samples::{derive_seed, draw_sample, stream_rng, Hypothesis, LabeledSample, Stream};
use crate::schemes::{reconstruct, Compressed, SelectionScheme};
use crate::{Error, Mode, Result};

/// One draw of `x` with the fixed selection applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationTrial {
    pub epsilon: f64,
    pub attempt: u64,
    pub trial: usize,
    pub m: u64,
    pub total_loss: f64,
    pub empirical_loss: f64,
    /// `total_loss - empirical_loss`.
    pub gap: f64,
    pub exceeded: bool,
    pub header: usize,
    pub selected: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationRow {
    pub m: u64,
    pub epsilon: f64,
    pub sigma: SigmaChoice,
    pub header: usize,
    pub trials: usize,
    pub exceedances: usize,
    pub p_hat: f64,
    pub ci: f64,
    pub slack: f64,
    pub epsilon_tilde: f64,
    pub bound: f64,
    pub mean_gap: f64,
    pub skipped: bool,
    pub rerun: bool,
    pub pass: bool,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationSummary {
    pub target: Hypothesis,
    pub rows: Vec<ConcentrationRow>,
    pub trials: Vec<ConcentrationTrial>,
}

impl ConcentrationSummary {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn render(&self) -> Result<RunOutput> {
        Ok(RunOutput { trials_jsonl: to_jsonl(&self.trials)?, summary_csv: to_csv(&self.rows)? })
    }
}

struct Fixed<'a> {
    config: &'a ExperimentConfig,
    resolved: &'a Resolved,
    target: &'a Hypothesis,
    m: usize,
    selection: InjectionVector,
    header: usize,
    order: Option<OrderChoice>,
}

impl Fixed<'_> {
    fn trial(&self, epsilon: f64, attempt: u64, trial: usize) -> Result<ConcentrationTrial> {
        let Resolved { scheme, measure, loss, .. } = self.resolved;
        let seed = derive_seed(self.config.seed, &[attempt, self.m as u64, trial as u64]);
        let x = draw_sample(measure, self.m, seed);
        let sample = LabeledSample::induced(x, self.target.clone())?;
        let compressed = Compressed {
            m: self.m,
            selection: self.selection.clone(),
            subsample: alpha_sharp(&sample, &self.selection)?,
            header: self.header,
        };
        let h = reconstruct(scheme.as_ref(), &compressed)?;
        let empirical = empirical_loss(&sample, &h, loss, self.order.as_ref())?;
        let total = total_loss(self.config.estimator, measure, self.target, &h, loss, derive_seed(seed, &[u64::MAX]))?;
        let gap = total - empirical;
        Ok(ConcentrationTrial {
            epsilon,
            attempt,
            trial,
            m: self.m as u64,
            total_loss: total,
            empirical_loss: empirical,
            gap,
            exceeded: gap >= epsilon,
            header: self.header,
            selected: self.selection.maps().to_vec(),
        })
    }
}

fn sides(mode: Mode, k: usize) -> usize {
    match mode {
        Mode::Partite => k,
        Mode::Nonpartite => 1,
    }
}

/// Fixes `(sigma_m, eta_m)` per `m` (the top indices with the configured
/// header, or one random pair per `m`), then estimates
/// `P[L_mu(H) - L_{x,F*(x)}(H) >= epsilon]` for `H = rho(sigma^#(x, F*(x)), eta)`
/// and checks it against the single-selection Azuma bound.
pub fn run_concentration_experiment(config: &ExperimentConfig, target: &Hypothesis) -> Result<ConcentrationSummary> {
    config.validate()?;
    let resolved = config.resolve()?;
    let scheme: &Arc<dyn SelectionScheme> = &resolved.scheme;
    let delta = config.delta.first().copied().unwrap_or(0.5);
    let mut rows = Vec::new();
    let mut trials = Vec::new();
    for &epsilon in &config.epsilon {
        let inputs = GuaranteeInputs::for_scheme(scheme.clone(), resolved.loss.sup_norm(), epsilon, delta)?;
        for spec in &config.m_values {
            let m = match *spec {
                MSpec::Fixed(m) => m,
                MSpec::PacMultiple(c) => match m_pac(&inputs, config.scan_limit)?.m_pac {
                    Some(m0) => c * m0,
                    None => {
                        return Err(Error::InvalidParameter(format!("m_pac not found below {}", config.scan_limit)))
                    }
                },
            };
            let b = azuma_bound(&inputs, m);
            let mut row = ConcentrationRow {
                m,
                epsilon,
                sigma: config.sigma,
                header: 0,
                trials: 0,
                exceedances: 0,
                p_hat: 0.0,
                ci: 0.0,
                slack: b.slack,
                epsilon_tilde: b.epsilon_tilde,
                bound: b.single_event,
                mean_gap: 0.0,
                skipped: b.condition_violated,
                rerun: false,
                pass: true,
                note: String::new(),
            };
            if b.condition_violated {
                row.note = format!("slack {} is not below epsilon", b.slack);
                rows.push(row);
                continue;
            }
            let fixed = fix_selection(config, &resolved, target, m as usize)?;
            row.header = fixed.header;
            for attempt in 0..2u64 {
                let n = config.trials * if attempt == 0 { 1 } else { 4 };
                let batch =
                    (0..n).into_par_iter().map(|t| fixed.trial(epsilon, attempt, t)).collect::<Result<Vec<_>>>()?;
                let exceed = batch.iter().filter(|t| t.exceeded).count();
                row.trials = n;
                row.exceedances = exceed;
                row.p_hat = exceed as f64 / n as f64;
                row.ci = proportion_ci(row.p_hat, n);
                row.mean_gap = batch.iter().map(|t| t.gap).sum::<f64>() / n as f64;
                row.rerun = attempt > 0;
                row.pass = row.p_hat - row.ci <= row.bound;
                trials.extend(batch);
                if row.pass {
                    break;
                }
            }
            rows.push(row);
        }
    }
    Ok(ConcentrationSummary { target: target.clone(), rows, trials })
}

fn fix_selection<'a>(
    config: &'a ExperimentConfig,
    resolved: &'a Resolved,
    target: &'a Hypothesis,
    m: usize,
) -> Result<Fixed<'a>> {
    let scheme = resolved.scheme.as_ref();
    let s = scheme.selection_size(m);
    let h = scheme.header_size(m);
    let n_sides = sides(config.mode, config.k);
    let (selection, header) = match config.sigma {
        SigmaChoice::Top => {
            if config.eta > h {
                return Err(Error::HeaderOutOfRange { header: config.eta, h });
            }
            (InjectionVector::top(n_sides, s, m)?, config.eta)
        }
        SigmaChoice::Random => {
            let mut rng = stream_rng(derive_seed(config.seed, &[m as u64]), Stream::Selection);
            let sel = InjectionVector::random(n_sides, s, m, &mut rng)?;
            (sel, rng.gen_range(1..=h))
        }
    };
    let order = order_choice(config.mode, config.k, m, config.order_choice, config.seed)?;
    Ok(Fixed { config, resolved, target, m, selection, header, order })
}

/// The configured target: a fixed hypothesis, or one drawn from the class
/// with the master seed.
pub fn resolve_target(config: &ExperimentConfig, resolved: &Resolved) -> Hypothesis {
    match &config.target {
        crate::experiments::TargetSpec::Fixed(h) => h.clone(),
        crate::experiments::TargetSpec::Random => {
            resolved.class.sample_member(&mut stream_rng(config.seed, Stream::Hypothesis))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samples::Interval;

    fn config(mode: Mode, scheme: &str, class: &str) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(mode, 2, scheme, class);
        c.m_values = vec![MSpec::Fixed(50), MSpec::Fixed(200)];
        c.epsilon = vec![0.1, 0.2];
        c.trials = 200;
        c.seed = 5;
        c
    }

    #[test]
    fn rectangle_concentration_holds() {
        let c = config(Mode::Partite, "rectangle", "rectangle");
        let f = Hypothesis::rectangle(vec![Interval::new(0.2, 0.7), Interval::new(0.1, 0.6)]);
        let s = run_concentration_experiment(&c, &f).unwrap();
        assert_eq!(s.rows.len(), 4);
        assert!(s.passed(), "{:?}", s.rows);
        assert!(s.trials.iter().all(|t| (t.gap - (t.total_loss - t.empirical_loss)).abs() == 0.0));
    }

    #[test]
    fn random_selection_and_nonpartite() {
        let mut c = config(Mode::Nonpartite, "sum-threshold", "sum-threshold");
        c.sigma = SigmaChoice::Random;
        let f = Hypothesis::sum_threshold(0.9);
        let s = run_concentration_experiment(&c, &f).unwrap();
        assert!(s.passed(), "{:?}", s.rows);
        assert!(s.rows.iter().all(|r| (1..=2).contains(&r.header)));
    }

    #[test]
    fn constant_reconstruction_never_exceeds_large_epsilon() {
        let mut c = config(Mode::Partite, "constant-zero", "rectangle");
        c.epsilon = vec![0.99];
        let f = Hypothesis::rectangle(vec![Interval::new(0.0, 0.5); 2]);
        let s = run_concentration_experiment(&c, &f).unwrap();
        assert!(s.rows.iter().all(|r| r.exceedances == 0 && r.pass));
    }

    #[test]
    fn violated_slack_is_skipped() {
        let mut c = config(Mode::Partite, "rectangle", "rectangle");
        c.m_values = vec![MSpec::Fixed(10)];
        c.epsilon = vec![0.1];
        let s = run_concentration_experiment(&c, &Hypothesis::empty_box(2)).unwrap();
        assert!(s.rows[0].skipped && s.trials.is_empty());
    }

    #[test]
    fn header_must_fit() {
        let mut c = config(Mode::Partite, "rectangle", "rectangle");
        c.eta = 3;
        assert!(run_concentration_experiment(&c, &Hypothesis::empty_box(2)).is_err());
    }
}
