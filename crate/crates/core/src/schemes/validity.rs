use std::fmt;
use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::index::{for_each_tuple, OrderChoice};
use crate::losses::{empirical_loss, LossSpec};
use crate::samples::{
    derive_seed, draw_sample, erm_realizability_check, label_sample, stream_rng, Hypothesis, HypothesisClass,
    LabeledSample, ProductMeasure, Stream,
};
use crate::schemes::{kappa, reconstruct, SelectionScheme};
use crate::{Error, Mode, Result};

/// How much empirical loss after reconstruction is tolerated at size `m`.
#[derive(Clone)]
pub enum Tolerance {
    /// Loss must be exactly 0.
    Exact,
    /// Loss must not exceed `eps(m)`.
    Approximate(Arc<dyn Fn(usize) -> f64 + Send + Sync>),
}

impl Tolerance {
    pub fn at(&self, m: usize) -> f64 {
        match self {
            Tolerance::Exact => 0.0,
            Tolerance::Approximate(eps) => eps(m),
        }
    }
}

impl fmt::Debug for Tolerance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tolerance::Exact => f.write_str("Exact"),
            Tolerance::Approximate(_) => f.write_str("Approximate(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ValidityConfig {
    pub measure: ProductMeasure,
    pub trials: usize,
    pub m_values: Vec<usize>,
    pub seed: u64,
    /// Random order choices checked per sample in non-partite mode, on top
    /// of the canonical one.
    pub order_choices: usize,
    pub fail_fast: bool,
}

impl ValidityConfig {
    pub fn new(measure: ProductMeasure, trials: usize, m_values: Vec<usize>, seed: u64) -> Self {
        Self { measure, trials, m_values, seed, order_choices: 5, fail_fast: false }
    }
}

/// A cell on which the reconstructed hypothesis disagrees with the sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub order: usize,
    pub cell: Vec<usize>,
    pub predicted: u32,
    pub label: u32,
}

/// One compressed and reconstructed sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressionReport {
    pub trial: usize,
    pub m: usize,
    pub s_m: usize,
    pub h_m: usize,
    pub selected: Vec<Vec<usize>>,
    pub header: usize,
    pub target: String,
    pub hypothesis: String,
    /// Empirical loss under each order choice checked; index 0 is the
    /// canonical order (the only entry in partite mode).
    pub losses: Vec<f64>,
    pub empirical_loss: f64,
    pub tolerance: f64,
    pub violation: bool,
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub records: Vec<CompressionReport>,
    pub violations: usize,
}

impl ValidityReport {
    pub fn first_violation(&self) -> Option<&CompressionReport> {
        self.records.iter().find(|r| r.violation)
    }

    /// One JSON record per line.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Checks that `rho(kappa(x, y))` has zero empirical loss on realizable
/// samples drawn from `class` (under the canonical and `order_choices`
/// random order choices in non-partite mode).
pub fn check_compression_validity(
    scheme: &dyn SelectionScheme,
    class: &HypothesisClass,
    loss: &LossSpec,
    config: &ValidityConfig,
) -> Result<ValidityReport> {
    check_validity(scheme, class, loss, config, &Tolerance::Exact)
}

/// As [`check_compression_validity`] with loss at most `eps(m)` allowed.
pub fn check_approximate_validity(
    scheme: &dyn SelectionScheme,
    class: &HypothesisClass,
    loss: &LossSpec,
    eps: impl Fn(usize) -> f64 + Send + Sync + 'static,
    config: &ValidityConfig,
) -> Result<ValidityReport> {
    check_validity(scheme, class, loss, config, &Tolerance::Approximate(Arc::new(eps)))
}

fn check_validity(
    scheme: &dyn SelectionScheme,
    class: &HypothesisClass,
    loss: &LossSpec,
    config: &ValidityConfig,
    tolerance: &Tolerance,
) -> Result<ValidityReport> {
    if scheme.mode() != class.mode() || config.measure.mode() != class.mode() {
        return Err(Error::ModeMismatch { expected: scheme.mode(), got: class.mode() });
    }
    if scheme.k() != class.k() || config.measure.k() != class.k() {
        return Err(Error::ArityMismatch { expected: scheme.k(), got: class.k() });
    }
    loss.check_mode(class.mode())?;
    let mut report = ValidityReport::default();
    for &m in &config.m_values {
        let records = (0..config.trials)
            .into_par_iter()
            .map(|trial| run_trial(scheme, class, loss, config, tolerance, m, trial))
            .collect::<Result<Vec<_>>>()?;
        for r in records {
            let violation = r.violation;
            report.violations += usize::from(violation);
            report.records.push(r);
            if violation && config.fail_fast {
                return Ok(report);
            }
        }
    }
    Ok(report)
}

fn run_trial(
    scheme: &dyn SelectionScheme,
    class: &HypothesisClass,
    loss: &LossSpec,
    config: &ValidityConfig,
    tolerance: &Tolerance,
    m: usize,
    trial: usize,
) -> Result<CompressionReport> {
    let seed = derive_seed(config.seed, &[m as u64, trial as u64]);
    let f = class.sample_member(&mut stream_rng(seed, Stream::Hypothesis));
    let x = draw_sample(&config.measure, m, seed);
    let y = label_sample(&f, &x)?;
    let sample = LabeledSample::dense(x, y)?;
    if !erm_realizability_check(class, &sample, &LossSpec::zero_one(class.mode()), None)?.realizable {
        return Err(Error::NotRealizable(format!("trial {trial} at m = {m} labelled by {}", f.summary())));
    }

    let compressed = kappa(scheme, &sample)?;
    let h = reconstruct(scheme, &compressed)?;

    let mut orders = vec![None];
    if class.mode() == Mode::Nonpartite {
        orders.extend((0..config.order_choices).map(|j| {
            Some(OrderChoice::random(m, class.k(), &mut stream_rng(seed, Stream::OrderChoice { index: j as u64 })))
        }));
    }
    let losses = orders.iter().map(|o| empirical_loss(&sample, &h, loss, o.as_ref())).collect::<Result<Vec<_>>>()?;
    let worst = losses.iter().copied().fold(0.0, f64::max);
    let tol = tolerance.at(m);
    let violation = worst > tol;
    let witness = if violation {
        let order = losses.iter().position(|&l| l == worst).unwrap_or(0);
        first_disagreement(&sample, &h).map(|(cell, predicted, label)| Witness { order, cell, predicted, label })
    } else {
        None
    };
    Ok(CompressionReport {
        trial,
        m,
        s_m: scheme.selection_size(m),
        h_m: scheme.header_size(m),
        selected: compressed.selection.maps().to_vec(),
        header: compressed.header,
        target: f.summary(),
        hypothesis: h.summary(),
        losses,
        empirical_loss: worst,
        tolerance: tol,
        violation,
        witness,
    })
}

/// First labelled cell, in row-major order, where `h` and the sample differ.
fn first_disagreement(sample: &LabeledSample, h: &Hypothesis) -> Option<(Vec<usize>, u32, u32)> {
    let injective = sample.mode() == Mode::Nonpartite;
    let mut found = None;
    for_each_tuple(sample.m(), sample.k(), injective, |alpha| {
        if found.is_none() {
            let (p, y) = (h.eval(&sample.x().point(alpha)), sample.label(alpha));
            if p != y {
                found = Some((alpha.to_vec(), p, y));
            }
        }
    });
    found
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schemes::{ConstantScheme, RectangleScheme, SumThresholdScheme, TrivialScheme};

    fn config(mode: Mode, k: usize, m_values: Vec<usize>) -> ValidityConfig {
        ValidityConfig::new(ProductMeasure::uniform(mode, k).unwrap(), 20, m_values, 11)
    }

    #[test]
    fn built_in_schemes_are_valid() {
        let rects = HypothesisClass::Rectangles { k: 2 };
        let cfg = config(Mode::Partite, 2, vec![2, 5, 9]);
        let loss = LossSpec::zero_one(Mode::Partite);
        for scheme in [&RectangleScheme::new(2) as &dyn SelectionScheme, &TrivialScheme::new(rects.clone())] {
            let r = check_compression_validity(scheme, &rects, &loss, &cfg).unwrap();
            assert_eq!((r.violations, r.records.len()), (0, 60));
        }
        let sums = HypothesisClass::SumThresholds { k: 2 };
        let cfg = config(Mode::Nonpartite, 2, vec![2, 6]);
        let loss = LossSpec::zero_one(Mode::Nonpartite);
        let r = check_compression_validity(&SumThresholdScheme::new(2).unwrap(), &sums, &loss, &cfg).unwrap();
        assert_eq!(r.violations, 0);
        assert!(r.records.iter().all(|c| c.losses.len() == 6));
    }

    #[test]
    fn constant_scheme_is_caught_with_a_witness() {
        let rects = HypothesisClass::Rectangles { k: 2 };
        let mut cfg = config(Mode::Partite, 2, vec![6]);
        cfg.fail_fast = true;
        let loss = LossSpec::zero_one(Mode::Partite);
        let r = check_compression_validity(&ConstantScheme::new(Mode::Partite, 2), &rects, &loss, &cfg).unwrap();
        let bad = r.first_violation().unwrap();
        assert_eq!(r.violations, 1);
        assert!(std::ptr::eq(bad, r.records.last().unwrap()));
        let w = bad.witness.as_ref().unwrap();
        assert_eq!((w.predicted, w.label), (0, 1));
        let mut jsonl = Vec::new();
        r.write_jsonl(&mut jsonl).unwrap();
        let first: CompressionReport =
            serde_json::from_str(std::str::from_utf8(&jsonl).unwrap().lines().next().unwrap()).unwrap();
        assert_eq!(first, r.records[0]);
    }

    #[test]
    fn approximate_validity_tracks_the_positive_fraction() {
        let rects = HypothesisClass::Rectangles { k: 2 };
        let cfg = config(Mode::Partite, 2, vec![6]);
        let loss = LossSpec::zero_one(Mode::Partite);
        let scheme = ConstantScheme::new(Mode::Partite, 2);
        let exact = check_compression_validity(&scheme, &rects, &loss, &cfg).unwrap();
        let worst = exact.records.iter().map(|r| r.empirical_loss).fold(0.0, f64::max);
        assert!(worst > 0.0);
        let loose = check_approximate_validity(&scheme, &rects, &loss, move |_| worst, &cfg).unwrap();
        assert_eq!(loose.violations, 0);
        let tight = check_approximate_validity(&scheme, &rects, &loss, move |_| worst / 2.0, &cfg).unwrap();
        assert!(tight.violations > 0);
        let sup = check_approximate_validity(&scheme, &rects, &loss, |_| 1.0, &cfg).unwrap();
        assert_eq!(sup.violations, 0);
    }

    #[test]
    fn reports_are_deterministic() {
        let sums = HypothesisClass::SumThresholds { k: 2 };
        let cfg = config(Mode::Nonpartite, 2, vec![4, 7]);
        let loss = LossSpec::zero_one(Mode::Nonpartite);
        let scheme = SumThresholdScheme::new(2).unwrap();
        let a = check_compression_validity(&scheme, &sums, &loss, &cfg).unwrap();
        let b = check_compression_validity(&scheme, &sums, &loss, &cfg).unwrap();
        assert_eq!(a, b);
    }
}
