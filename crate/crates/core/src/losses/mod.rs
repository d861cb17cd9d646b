//! Loss functions and empirical loss.
//!
//! Empirical loss is always defined by enumeration over `[m]^k` (partite) or
//! over the `k`-sets of `[m]` (non-partite). For the 0/1 loss on labels
//! induced by a box or a sum threshold, the same quantity is obtained by
//! counting on the product structure, which is what the large-sample
//! experiments use; both routes produce identical floating-point values.

mod total;

pub use total::{
    exact_total_loss, total_loss_exact_discrete, total_loss_exact_rectangles, total_loss_exact_sum_threshold,
    total_loss_monte_carlo, TotalLossEstimate, CI_MULTIPLIER,
};

use std::fmt;
use std::sync::Arc;

use itertools::Itertools;

use crate::index::{binomial, compose_into, enumerate_permutations, for_each_tuple, OrderChoice};
use crate::samples::{Hypothesis, Interval, LabeledSample, Labels, Sample};
use crate::{Error, Mode, Result};

pub type PartiteLossFn = dyn Fn(&[f64], u32, u32) -> f64 + Send + Sync;
pub type NonpartiteLossFn = dyn Fn(&[f64], &[u32], &[u32]) -> f64 + Send + Sync;

#[derive(Clone)]
enum Rule {
    ZeroOne,
    Partite(Arc<PartiteLossFn>),
    Nonpartite(Arc<NonpartiteLossFn>),
}

/// A bounded loss `l(x, guess, truth)`. Non-partite losses compare whole
/// orientation bundles (`Y^{S_k}`), indexed by permutations in lexicographic
/// order.
#[derive(Clone)]
pub struct LossSpec {
    mode: Mode,
    name: String,
    sup_norm: f64,
    rule: Rule,
}

impl fmt::Debug for LossSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LossSpec")
            .field("mode", &self.mode)
            .field("name", &self.name)
            .field("sup_norm", &self.sup_norm)
            .finish()
    }
}

impl LossSpec {
    /// `1[guess != truth]`; in non-partite mode, 1 iff the bundles differ in
    /// any orientation.
    pub fn zero_one(mode: Mode) -> Self {
        Self { mode, name: "zero-one".into(), sup_norm: 1.0, rule: Rule::ZeroOne }
    }

    pub fn partite(
        name: impl Into<String>,
        sup_norm: f64,
        f: impl Fn(&[f64], u32, u32) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        check_sup(sup_norm)?;
        Ok(Self { mode: Mode::Partite, name: name.into(), sup_norm, rule: Rule::Partite(Arc::new(f)) })
    }

    pub fn nonpartite(
        name: impl Into<String>,
        sup_norm: f64,
        f: impl Fn(&[f64], &[u32], &[u32]) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        check_sup(sup_norm)?;
        Ok(Self { mode: Mode::Nonpartite, name: name.into(), sup_norm, rule: Rule::Nonpartite(Arc::new(f)) })
    }

    pub fn parse(name: &str, mode: Mode) -> Result<Self> {
        match name.trim() {
            "zero-one" | "0-1" | "01" => Ok(Self::zero_one(mode)),
            other => Err(Error::Parse(format!("unknown loss `{other}`"))),
        }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    pub fn is_zero_one(&self) -> bool {
        matches!(self.rule, Rule::ZeroOne)
    }

    pub fn eval_partite(&self, x: &[f64], guess: u32, truth: u32) -> f64 {
        match &self.rule {
            Rule::ZeroOne => f64::from(u8::from(guess != truth)),
            Rule::Partite(f) => f(x, guess, truth),
            Rule::Nonpartite(_) => panic!("partite evaluation of a non-partite loss"),
        }
    }

    pub fn eval_nonpartite(&self, x: &[f64], guess: &[u32], truth: &[u32]) -> f64 {
        match &self.rule {
            Rule::ZeroOne => f64::from(u8::from(guess != truth)),
            Rule::Nonpartite(f) => f(x, guess, truth),
            Rule::Partite(_) => panic!("non-partite evaluation of a partite loss"),
        }
    }

    pub(crate) fn check_mode(&self, mode: Mode) -> Result<()> {
        if self.mode != mode {
            return Err(Error::ModeMismatch { expected: mode, got: self.mode });
        }
        Ok(())
    }
}

fn check_sup(sup_norm: f64) -> Result<()> {
    if !(sup_norm > 0.0 && sup_norm.is_finite()) {
        return Err(Error::InvalidParameter(format!("sup-norm must be finite and positive, got {sup_norm}")));
    }
    Ok(())
}

/// Empirical loss in either mode; `order` is only consulted in non-partite
/// mode, where `None` means the canonical (ascending) order choice.
pub fn empirical_loss(
    sample: &LabeledSample,
    h: &Hypothesis,
    loss: &LossSpec,
    order: Option<&OrderChoice>,
) -> Result<f64> {
    match sample.mode() {
        Mode::Partite => empirical_loss_partite(sample, h, loss),
        Mode::Nonpartite => empirical_loss_nonpartite(sample, h, loss, order),
    }
}

/// `(1/m^k) sum_{alpha in [m]^k} l(alpha^*(x), H(alpha^*(x)), y_alpha)`, and 0
/// for `m = 0`.
pub fn empirical_loss_partite(sample: &LabeledSample, h: &Hypothesis, loss: &LossSpec) -> Result<f64> {
    if sample.mode() != Mode::Partite {
        return Err(Error::ModeMismatch { expected: Mode::Partite, got: sample.mode() });
    }
    loss.check_mode(Mode::Partite)?;
    let (m, k) = (sample.m(), sample.k());
    if m == 0 {
        return Ok(0.0);
    }
    let cells = (m as f64).powi(k as i32);
    if loss.is_zero_one() {
        if let Some(count) = box_disagreements(sample, h) {
            return Ok(count as f64 / cells);
        }
    }
    Ok(enumerate_partite(sample, h, loss) / cells)
}

pub(crate) fn enumerate_partite(sample: &LabeledSample, h: &Hypothesis, loss: &LossSpec) -> f64 {
    let x = sample.x();
    let mut point = vec![0.0; sample.k()];
    let mut total = 0.0;
    for_each_tuple(sample.m(), sample.k(), false, |alpha| {
        x.point_into(alpha, &mut point);
        total += loss.eval_partite(&point, h.eval(&point), sample.label(alpha));
    });
    total
}

/// `(1/C(m,k)) sum_U l(alpha_U^*(x), b_alpha(H^*_m(x))_U, b_alpha(y)_U)`, and 0
/// for `m < k`.
pub fn empirical_loss_nonpartite(
    sample: &LabeledSample,
    h: &Hypothesis,
    loss: &LossSpec,
    order: Option<&OrderChoice>,
) -> Result<f64> {
    if sample.mode() != Mode::Nonpartite {
        return Err(Error::ModeMismatch { expected: Mode::Nonpartite, got: sample.mode() });
    }
    loss.check_mode(Mode::Nonpartite)?;
    let (m, k) = (sample.m(), sample.k());
    if let Some(order) = order {
        if order.m() != m || order.k() != k {
            return Err(Error::SizeMismatch(format!(
                "order choice for ([{}])_{} applied to a sample of size {m} and arity {k}",
                order.m(),
                order.k()
            )));
        }
    }
    if m < k {
        return Ok(0.0);
    }
    let sets = binomial(m as u64, k as u64) as f64;
    // The 0/1 bundle loss does not depend on which orientation is standard.
    if loss.is_zero_one() && k == 2 {
        if let Some(count) = threshold_disagreements(sample, h) {
            return Ok(count as f64 / sets);
        }
    }
    let perms = enumerate_permutations(k)?;
    let mut eval = BundleEval::new(sample, h, loss, &perms);
    let total = match order {
        Some(order) => order.iter().map(|(_, o)| eval.loss_at(o)).sum::<f64>(),
        None => (0..m).combinations(k).map(|u| eval.loss_at(&u)).sum::<f64>(),
    };
    Ok(total / sets)
}

/// Evaluates the loss of one oriented `k`-set without reallocating.
struct BundleEval<'a> {
    sample: &'a LabeledSample,
    h: &'a Hypothesis,
    loss: &'a LossSpec,
    perms: &'a [Vec<usize>],
    tuple: Vec<usize>,
    point: Vec<f64>,
    oriented: Vec<f64>,
    guess: Vec<u32>,
    truth: Vec<u32>,
}

impl<'a> BundleEval<'a> {
    fn new(sample: &'a LabeledSample, h: &'a Hypothesis, loss: &'a LossSpec, perms: &'a [Vec<usize>]) -> Self {
        let k = sample.k();
        Self {
            sample,
            h,
            loss,
            perms,
            tuple: vec![0; k],
            point: vec![0.0; k],
            oriented: vec![0.0; k],
            guess: vec![0; perms.len()],
            truth: vec![0; perms.len()],
        }
    }

    fn loss_at(&mut self, orientation: &[usize]) -> f64 {
        let x = self.sample.x();
        x.point_into(orientation, &mut self.oriented);
        for (j, pi) in self.perms.iter().enumerate() {
            compose_into(orientation, pi, &mut self.tuple);
            x.point_into(&self.tuple, &mut self.point);
            self.guess[j] = self.h.eval(&self.point);
            self.truth[j] = self.sample.label(&self.tuple);
        }
        self.loss.eval_nonpartite(&self.oriented, &self.guess, &self.truth)
    }
}

fn count_in(side: &[f64], iv: &Interval) -> u128 {
    side.iter().filter(|&&v| iv.contains(v)).count() as u128
}

fn count_in_both(side: &[f64], a: &Interval, b: &Interval) -> u128 {
    side.iter().filter(|&&v| a.contains(v) && b.contains(v)).count() as u128
}

fn box_count(x: &Sample, b: &Option<Vec<Interval>>) -> u128 {
    match b {
        None => 0,
        Some(b) => b.iter().enumerate().map(|(i, iv)| count_in(x.side(i), iv)).product(),
    }
}

/// Number of cells of `[m]^k` on which two box-shaped labelings differ.
pub(crate) fn box_disagreements(sample: &LabeledSample, h: &Hypothesis) -> Option<u128> {
    let Labels::Induced(f) = sample.labels() else { return None };
    let k = sample.k();
    let (hb, fb) = (h.as_box(k)?, f.as_box(k)?);
    let x = sample.x();
    let both = match (&hb, &fb) {
        (Some(hb), Some(fb)) => {
            hb.iter().zip(fb).enumerate().map(|(i, (a, b))| count_in_both(x.side(i), a, b)).product()
        }
        _ => 0,
    };
    Some(box_count(x, &hb) + box_count(x, &fb) - 2 * both)
}

/// Number of pairs `i < j` with `x_i + x_j >= t`, given ascending values.
pub(crate) fn pairs_at_least(sorted: &[f64], t: f64) -> u128 {
    (0..sorted.len())
        .map(|i| {
            let rest = &sorted[i + 1..];
            (rest.len() - rest.partition_point(|&v| sorted[i] + v < t)) as u128
        })
        .sum()
}

pub(crate) fn sorted_values(values: &[f64]) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted
}

/// Number of 2-sets on which two sum-threshold labelings differ.
fn threshold_disagreements(sample: &LabeledSample, h: &Hypothesis) -> Option<u128> {
    let Labels::Induced(f) = sample.labels() else { return None };
    let (th, tf) = (h.as_threshold()?, f.as_threshold()?);
    let sorted = sorted_values(sample.x().side(0));
    Some(pairs_at_least(&sorted, th).abs_diff(pairs_at_least(&sorted, tf)))
}
