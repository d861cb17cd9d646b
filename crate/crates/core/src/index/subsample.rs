use serde::{Deserialize, Serialize};

use crate::index::{enumerate_permutations, InjectionVector, KTuple, LabelTensor, OrderChoice};
use crate::samples::{LabeledSample, Labels, Sample};
use crate::{Error, Mode, Result};

/// Selects the points indexed by `alpha`: side `i` contributes its
/// `alpha_i`-th point in partite mode, the single ground set is indexed by
/// every entry in non-partite mode.
pub fn alpha_star_point(x: &Sample, alpha: &KTuple) -> Result<Vec<f64>> {
    if alpha.k() != x.k() {
        return Err(Error::ArityMismatch { expected: x.k(), got: alpha.k() });
    }
    if alpha.m() != x.m() {
        return Err(Error::SizeMismatch(format!("tuple over [{}] applied to a sample of size {}", alpha.m(), x.m())));
    }
    if x.mode() == Mode::Nonpartite && !alpha.is_injective() {
        return Err(Error::NonInjective(alpha.entries().to_vec()));
    }
    Ok(x.point(alpha.entries()))
}

/// The subsample induced by a vector of injections `[s] -> [m]`.
///
/// Partite: `(x_i)_{alpha_i(v)}` per side and labels
/// `y'_beta = y_{(alpha_1(beta_1), ..., alpha_k(beta_k))}`.
/// Non-partite: `x_{alpha(v)}` and `y'_beta = y_{alpha ∘ beta}`.
///
/// Labels induced by a hypothesis stay induced by the same hypothesis.
pub fn alpha_sharp(sample: &LabeledSample, alpha: &InjectionVector) -> Result<LabeledSample> {
    let x = sample.x();
    alpha.check_mode(x.mode(), x.k())?;
    if alpha.m() != x.m() {
        return Err(Error::SizeMismatch(format!(
            "injections into [{}] applied to a sample of size {}",
            alpha.m(),
            x.m()
        )));
    }
    let sides = x.sides().iter().zip(alpha.maps()).map(|(side, map)| map.iter().map(|&v| side[v]).collect()).collect();
    let sub = Sample::from_parts(x.mode(), x.k(), sides)?;
    let labels = match sample.labels() {
        Labels::Induced(h) => Labels::Induced(h.clone()),
        Labels::Dense(y) => {
            let s = alpha.s();
            let mut source = vec![0usize; x.k()];
            let tensor = LabelTensor::from_fn(y.mode(), y.k(), s, y.alphabet().to_vec(), u128::MAX, |beta| {
                for (i, &b) in beta.iter().enumerate() {
                    source[i] = match x.mode() {
                        Mode::Partite => alpha.side(i)[b],
                        Mode::Nonpartite => alpha.side(0)[b],
                    };
                }
                y.get(&source)
            })?;
            Labels::Dense(tensor)
        }
    };
    LabeledSample::new(sub, labels)
}

/// The labels of every orientation of one `k`-set, indexed by the
/// permutations of `[k]` in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bundle {
    pub subset: Vec<usize>,
    pub labels: Vec<u32>,
}

/// `(b_alpha(y)_U)_pi = y_{alpha_U ∘ pi}` for every `k`-set `U`.
pub fn bundle_orientations(y: &LabelTensor, order: &OrderChoice) -> Result<Vec<Bundle>> {
    if y.mode() != Mode::Nonpartite {
        return Err(Error::ModeMismatch { expected: Mode::Nonpartite, got: y.mode() });
    }
    if order.m() != y.m() || order.k() != y.k() {
        return Err(Error::SizeMismatch(format!(
            "order choice for ([{}])_{} applied to a tensor over ([{}])_{}",
            order.m(),
            order.k(),
            y.m(),
            y.k()
        )));
    }
    if y.m() < y.k() {
        return Ok(Vec::new());
    }
    let perms = enumerate_permutations(y.k())?;
    let mut tuple = vec![0usize; y.k()];
    Ok(order
        .iter()
        .map(|(subset, orientation)| {
            let labels = perms
                .iter()
                .map(|pi| {
                    compose_into(orientation, pi, &mut tuple);
                    y.get(&tuple)
                })
                .collect();
            Bundle { subset: subset.to_vec(), labels }
        })
        .collect())
}

/// Writes `outer ∘ inner` into `out`.
pub(crate) fn compose_into(outer: &[usize], inner: &[usize], out: &mut [usize]) {
    for (o, &j) in out.iter_mut().zip(inner) {
        *o = outer[j];
    }
}
