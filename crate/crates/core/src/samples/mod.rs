//! Samples, product measures, hypotheses and exact empirical risk
//! minimisation for the built-in classes.

mod erm;
mod hypothesis;
pub mod io;
mod measure;

pub use erm::{erm_candidate, erm_realizability_check, Realizability};
pub use hypothesis::{Hypothesis, HypothesisClass, HypothesisKind, Interval, TableHypothesis};
pub use measure::{derive_seed, draw_sample, stream_rng, Distribution, ProductMeasure, Stream};

use std::borrow::Cow;

use crate::index::{is_injective, LabelTensor, DEFAULT_CELL_BUDGET, SENTINEL};
use crate::{Error, Mode, Result};

/// Unlabelled points: `k` sides of `m` points each (partite) or one ground
/// set of `m` points (non-partite).
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    mode: Mode,
    k: usize,
    sides: Vec<Vec<f64>>,
}

impl Sample {
    pub fn partite(sides: Vec<Vec<f64>>) -> Result<Self> {
        let k = sides.len();
        Self::from_parts(Mode::Partite, k, sides)
    }

    pub fn nonpartite(k: usize, points: Vec<f64>) -> Result<Self> {
        Self::from_parts(Mode::Nonpartite, k, vec![points])
    }

    pub fn empty(mode: Mode, k: usize) -> Self {
        let n = match mode {
            Mode::Partite => k,
            Mode::Nonpartite => 1,
        };
        Self { mode, k, sides: vec![Vec::new(); n] }
    }

    pub fn from_parts(mode: Mode, k: usize, sides: Vec<Vec<f64>>) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("arity must be at least 1".into()));
        }
        let expected = match mode {
            Mode::Partite => k,
            Mode::Nonpartite => 1,
        };
        if sides.len() != expected {
            return Err(Error::ArityMismatch { expected, got: sides.len() });
        }
        let m = sides[0].len();
        if sides.iter().any(|s| s.len() != m) {
            return Err(Error::SizeMismatch("partite sides of unequal size".into()));
        }
        Ok(Self { mode, k, sides })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.sides[0].len()
    }

    pub fn sides(&self) -> &[Vec<f64>] {
        &self.sides
    }

    pub fn side(&self, i: usize) -> &[f64] {
        &self.sides[i]
    }

    /// The side that coordinate `i` of a tuple indexes.
    pub fn side_for(&self, i: usize) -> &[f64] {
        match self.mode {
            Mode::Partite => &self.sides[i],
            Mode::Nonpartite => &self.sides[0],
        }
    }

    /// `alpha^*(x)` without bounds or injectivity checks.
    pub fn point(&self, alpha: &[usize]) -> Vec<f64> {
        let mut out = vec![0.0; alpha.len()];
        self.point_into(alpha, &mut out);
        out
    }

    pub fn point_into(&self, alpha: &[usize], out: &mut [f64]) {
        for (i, (&a, o)) in alpha.iter().zip(out.iter_mut()).enumerate() {
            *o = self.side_for(i)[a];
        }
    }

    /// Applies one index permutation to every side.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let sides = self
            .sides
            .iter()
            .map(|side| {
                let mut out = vec![0.0; side.len()];
                for (v, &p) in perm.iter().enumerate() {
                    out[p] = side[v];
                }
                out
            })
            .collect();
        Self { mode: self.mode, k: self.k, sides }
    }
}

/// Where a labelled sample's labels come from.
#[derive(Debug, Clone, PartialEq)]
pub enum Labels {
    /// An explicit tensor.
    Dense(LabelTensor),
    /// `F^*_m(x)` for a hypothesis `F`, evaluated on demand.
    Induced(Hypothesis),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    x: Sample,
    labels: Labels,
}

impl LabeledSample {
    pub fn new(x: Sample, labels: Labels) -> Result<Self> {
        if let Labels::Dense(y) = &labels {
            if y.mode() != x.mode() {
                return Err(Error::ModeMismatch { expected: x.mode(), got: y.mode() });
            }
            if y.k() != x.k() {
                return Err(Error::ArityMismatch { expected: x.k(), got: y.k() });
            }
            if y.m() != x.m() {
                return Err(Error::SizeMismatch(format!("tensor over [{}] for a sample of size {}", y.m(), x.m())));
            }
        }
        Ok(Self { x, labels })
    }

    pub fn dense(x: Sample, y: LabelTensor) -> Result<Self> {
        Self::new(x, Labels::Dense(y))
    }

    pub fn induced(x: Sample, f: Hypothesis) -> Result<Self> {
        Self::new(x, Labels::Induced(f))
    }

    pub fn x(&self) -> &Sample {
        &self.x
    }

    pub fn labels(&self) -> &Labels {
        &self.labels
    }

    pub fn mode(&self) -> Mode {
        self.x.mode
    }

    pub fn k(&self) -> usize {
        self.x.k
    }

    pub fn m(&self) -> usize {
        self.x.m()
    }

    pub fn alphabet(&self) -> Cow<'_, [String]> {
        match &self.labels {
            Labels::Dense(y) => Cow::Borrowed(y.alphabet()),
            Labels::Induced(h) => Cow::Owned(h.alphabet()),
        }
    }

    /// `y_alpha`; [`SENTINEL`] on non-injective tuples in non-partite mode.
    pub fn label(&self, alpha: &[usize]) -> u32 {
        match &self.labels {
            Labels::Dense(y) => y.get(alpha),
            Labels::Induced(h) => {
                if self.x.mode == Mode::Nonpartite && !is_injective(alpha) {
                    SENTINEL
                } else {
                    h.eval(&self.x.point(alpha))
                }
            }
        }
    }

    /// The label tensor, materialising induced labels under the default
    /// cell budget.
    pub fn tensor(&self) -> Result<Cow<'_, LabelTensor>> {
        self.tensor_with_budget(DEFAULT_CELL_BUDGET)
    }

    pub fn tensor_with_budget(&self, budget: u128) -> Result<Cow<'_, LabelTensor>> {
        match &self.labels {
            Labels::Dense(y) => Ok(Cow::Borrowed(y)),
            Labels::Induced(h) => label_sample_with_budget(h, &self.x, budget).map(Cow::Owned),
        }
    }

    pub fn to_dense(&self) -> Result<Self> {
        let y = self.tensor()?.into_owned();
        Self::dense(self.x.clone(), y)
    }

    /// Relabels the index set by `perm` (`v -> perm[v]`) consistently on
    /// points and labels.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let x = self.x.permuted(perm);
        let labels = match &self.labels {
            Labels::Induced(h) => Labels::Induced(h.clone()),
            Labels::Dense(y) => {
                let mut inverse = vec![0; perm.len()];
                for (v, &p) in perm.iter().enumerate() {
                    inverse[p] = v;
                }
                let mut source = vec![0; y.k()];
                Labels::Dense(LabelTensor::from_fn(
                    y.mode(),
                    y.k(),
                    y.m(),
                    y.alphabet().to_vec(),
                    u128::MAX,
                    |alpha| {
                        for (s, &a) in source.iter_mut().zip(alpha) {
                            *s = inverse[a];
                        }
                        y.get(&source)
                    },
                )?)
            }
        };
        Self::new(x, labels)
    }
}

/// `F^*_m(x)`: the tensor with cell `alpha` equal to `F(alpha^*(x))`.
pub fn label_sample(f: &Hypothesis, x: &Sample) -> Result<LabelTensor> {
    label_sample_with_budget(f, x, DEFAULT_CELL_BUDGET)
}

pub fn label_sample_with_budget(f: &Hypothesis, x: &Sample, budget: u128) -> Result<LabelTensor> {
    let mut point = vec![0.0; x.k()];
    LabelTensor::from_fn(x.mode(), x.k(), x.m(), f.alphabet(), budget, |alpha| {
        x.point_into(alpha, &mut point);
        f.eval(&point)
    })
}
