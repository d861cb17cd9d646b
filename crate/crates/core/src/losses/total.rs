use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::index::{compose_into, enumerate_permutations};
use crate::losses::LossSpec;
use crate::samples::{derive_seed, stream_rng, Distribution, Hypothesis, Interval, ProductMeasure, Stream};
use crate::{Error, Mode, Result};

/// Two-sided 99% normal quantile.
pub const CI_MULTIPLIER: f64 = 2.576;

const CHUNK: usize = 4096;
const MAX_EXACT_ATOMS: u128 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TotalLossEstimate {
    pub estimate: f64,
    pub ci: f64,
    pub n_draws: u64,
    pub seed: u64,
}

/// One evaluation of `l(x, H(x), F(x))` at a random tuple, bundling all
/// orientations in non-partite mode.
struct PointLoss<'a> {
    f: &'a Hypothesis,
    h: &'a Hypothesis,
    loss: &'a LossSpec,
    perms: Vec<Vec<usize>>,
    idx: Vec<usize>,
    tuple: Vec<usize>,
    oriented: Vec<f64>,
    guess: Vec<u32>,
    truth: Vec<u32>,
}

impl<'a> PointLoss<'a> {
    fn new(k: usize, f: &'a Hypothesis, h: &'a Hypothesis, loss: &'a LossSpec) -> Result<Self> {
        let perms = match loss.mode() {
            Mode::Partite => Vec::new(),
            Mode::Nonpartite => enumerate_permutations(k)?,
        };
        let n = perms.len();
        Ok(Self {
            f,
            h,
            loss,
            perms,
            idx: (0..k).collect(),
            tuple: vec![0; k],
            oriented: vec![0.0; k],
            guess: vec![0; n],
            truth: vec![0; n],
        })
    }

    fn eval(&mut self, x: &[f64]) -> f64 {
        match self.loss.mode() {
            Mode::Partite => self.loss.eval_partite(x, self.h.eval(x), self.f.eval(x)),
            Mode::Nonpartite => {
                for (j, pi) in self.perms.iter().enumerate() {
                    compose_into(&self.idx, pi, &mut self.tuple);
                    for (o, &t) in self.oriented.iter_mut().zip(&self.tuple) {
                        *o = x[t];
                    }
                    self.guess[j] = self.h.eval(&self.oriented);
                    self.truth[j] = self.f.eval(&self.oriented);
                }
                self.loss.eval_nonpartite(x, &self.guess, &self.truth)
            }
        }
    }
}

fn check_modes(mu: &ProductMeasure, loss: &LossSpec) -> Result<()> {
    loss.check_mode(mu.mode())
}

/// Monte Carlo estimate of the total loss `E l(x, H(x), F(x))` with a 99%
/// normal-approximation half-width, capped at the loss sup-norm.
///
/// Draws are split into fixed chunks with their own derived streams, so the
/// estimate is identical however the chunks are scheduled.
pub fn total_loss_monte_carlo(
    mu: &ProductMeasure,
    f: &Hypothesis,
    h: &Hypothesis,
    loss: &LossSpec,
    n_draws: u64,
    seed: u64,
) -> Result<TotalLossEstimate> {
    if n_draws == 0 {
        return Err(Error::InvalidParameter("n_draws must be at least 1".into()));
    }
    check_modes(mu, loss)?;
    let k = mu.k();
    let chunks = (n_draws as usize).div_ceil(CHUNK);
    let partials: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let n = CHUNK.min(n_draws as usize - c * CHUNK);
            let mut rng = stream_rng(derive_seed(seed, &[c as u64]), Stream::MonteCarlo);
            let mut pl = PointLoss::new(k, f, h, loss).expect("arity validated by measure");
            let mut x = vec![0.0; k];
            let (mut sum, mut sq) = (0.0, 0.0);
            for _ in 0..n {
                mu.draw_tuple(&mut rng, &mut x);
                let v = pl.eval(&x);
                sum += v;
                sq += v * v;
            }
            (sum, sq)
        })
        .collect();
    let (sum, sq) = partials.iter().fold((0.0, 0.0), |(a, b), (s, q)| (a + s, b + q));
    let n = n_draws as f64;
    let mean = sum / n;
    let var = if n_draws > 1 { ((sq - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
    let ci = (CI_MULTIPLIER * var.sqrt() / n.sqrt()).min(loss.sup_norm());
    Ok(TotalLossEstimate { estimate: mean, ci, n_draws, seed })
}

fn unit_length(iv: &Interval) -> f64 {
    (iv.hi.min(1.0) - iv.lo.max(0.0)).max(0.0)
}

fn box_measure(b: &Option<Vec<Interval>>) -> f64 {
    b.as_ref().map_or(0.0, |b| b.iter().map(unit_length).product())
}

/// Uniform product measure of the symmetric difference of two boxes.
pub fn total_loss_exact_rectangles(mu: &ProductMeasure, f: &Hypothesis, h: &Hypothesis) -> Result<f64> {
    if mu.mode() != Mode::Partite || !mu.is_uniform() {
        return Err(Error::Unsupported("exact rectangle loss needs uniform partite sides".into()));
    }
    let k = mu.k();
    let (Some(fb), Some(hb)) = (f.as_box(k), h.as_box(k)) else {
        return Err(Error::Unsupported("exact rectangle loss needs two boxes".into()));
    };
    let both = match (&fb, &hb) {
        (Some(a), Some(b)) => a.iter().zip(b).map(|(x, y)| x.intersect(y).map_or(0.0, |iv| unit_length(&iv))).product(),
        _ => 0.0,
    };
    Ok((box_measure(&fb) + box_measure(&hb) - 2.0 * both).max(0.0))
}

/// `P(X + X' < t)` for independent uniforms on `[0,1]`.
fn triangular_cdf(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t <= 1.0 {
        t * t / 2.0
    } else if t < 2.0 {
        1.0 - (2.0 - t) * (2.0 - t) / 2.0
    } else {
        1.0
    }
}

/// Probability under uniform `mu^2` that two sum thresholds disagree.
pub fn total_loss_exact_sum_threshold(mu: &ProductMeasure, f: &Hypothesis, h: &Hypothesis) -> Result<f64> {
    if mu.mode() != Mode::Nonpartite || mu.k() != 2 || !mu.is_uniform() {
        return Err(Error::Unsupported("exact sum-threshold loss needs a uniform binary non-partite measure".into()));
    }
    let (Some(tf), Some(th)) = (f.as_threshold(), h.as_threshold()) else {
        return Err(Error::Unsupported("exact sum-threshold loss needs two thresholds".into()));
    };
    Ok((triangular_cdf(tf) - triangular_cdf(th)).abs())
}

/// Exact total loss by enumerating the atoms of a finite discrete measure.
pub fn total_loss_exact_discrete(mu: &ProductMeasure, f: &Hypothesis, h: &Hypothesis, loss: &LossSpec) -> Result<f64> {
    check_modes(mu, loss)?;
    let k = mu.k();
    let mut atoms = Vec::with_capacity(k);
    for i in 0..k {
        match mu.coordinate(i) {
            Distribution::Discrete { support, weights } => atoms.push((support, weights)),
            Distribution::Uniform => return Err(Error::Unsupported("exact enumeration needs discrete sides".into())),
        }
    }
    let count: u128 = atoms.iter().map(|(s, _)| s.len() as u128).product();
    if count > MAX_EXACT_ATOMS {
        return Err(Error::Unsupported(format!("{count} atoms is too many to enumerate")));
    }
    let mut pl = PointLoss::new(k, f, h, loss)?;
    let mut x = vec![0.0; k];
    let mut total = 0.0;
    let mut failed = None;
    crate::index::for_each_tuple_ragged(&atoms.iter().map(|(s, _)| s.len()).collect::<Vec<_>>(), |idx| {
        let mut w = 1.0;
        for (i, &j) in idx.iter().enumerate() {
            x[i] = atoms[i].0[j];
            w *= atoms[i].1[j];
        }
        if w > 0.0 {
            total += w * pl.eval(&x);
        }
        if !total.is_finite() {
            failed = Some(());
        }
    });
    if failed.is_some() {
        return Err(Error::InvalidParameter("loss evaluated to a non-finite value".into()));
    }
    Ok(total)
}

/// Exact total loss when a closed form or finite enumeration applies.
pub fn exact_total_loss(mu: &ProductMeasure, f: &Hypothesis, h: &Hypothesis, loss: &LossSpec) -> Result<f64> {
    check_modes(mu, loss)?;
    if mu.sides().iter().all(|d| !d.is_uniform()) {
        return total_loss_exact_discrete(mu, f, h, loss);
    }
    if loss.is_zero_one() {
        match mu.mode() {
            Mode::Partite => return total_loss_exact_rectangles(mu, f, h),
            Mode::Nonpartite => return total_loss_exact_sum_threshold(mu, f, h),
        }
    }
    Err(Error::Unsupported("no exact total loss for this measure and loss".into()))
}
