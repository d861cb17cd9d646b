//! Combinatorics of index tuples: falling factorials, tuple enumeration,
//! injections, order choices and permutations of `[k]`.
//!
//! Every index here is 0-based: a tuple over `[m]` has entries in `0..m`.

mod subsample;
mod tensor;

pub(crate) use subsample::compose_into;
pub use subsample::{alpha_sharp, alpha_star_point, bundle_orientations, Bundle};
pub use tensor::{LabelTensor, DEFAULT_CELL_BUDGET, SENTINEL};

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Mode, Result};

/// Largest arity accepted by anything that enumerates `S_k`.
pub const MAX_PERMUTATION_ARITY: usize = 8;

/// `n (n-1) ... (n-k+1)`, or `None` on `u128` overflow.
pub fn falling_factorial(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    (0..k).try_fold(1u128, |acc, i| acc.checked_mul((n - i) as u128))
}

/// Natural log of the falling factorial; `-inf` when `k > n`.
pub fn ln_falling_factorial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    if k <= 64 {
        return (0..k).map(|i| ((n - i) as f64).ln()).sum();
    }
    statrs::function::gamma::ln_gamma(n as f64 + 1.0) - statrs::function::gamma::ln_gamma((n - k) as f64 + 1.0)
}

pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc = 1u128;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Calls `f` on every tuple of `[m]^k` in row-major order (last coordinate
/// fastest). With `injective_only`, tuples with repeated entries are skipped.
pub fn for_each_tuple(m: usize, k: usize, injective_only: bool, mut f: impl FnMut(&[usize])) {
    if k == 0 {
        f(&[]);
        return;
    }
    if m == 0 {
        return;
    }
    let mut t = vec![0usize; k];
    loop {
        if !injective_only || is_injective(&t) {
            f(&t);
        }
        let mut pos = k;
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            t[pos] += 1;
            if t[pos] < m {
                break;
            }
            t[pos] = 0;
        }
    }
}

/// Odometer over `[d_0] x ... x [d_{k-1}]`, last coordinate fastest.
pub fn for_each_tuple_ragged(dims: &[usize], mut f: impl FnMut(&[usize])) {
    if dims.contains(&0) {
        return;
    }
    let mut t = vec![0usize; dims.len()];
    loop {
        f(&t);
        let mut pos = dims.len();
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            t[pos] += 1;
            if t[pos] < dims[pos] {
                break;
            }
            t[pos] = 0;
        }
    }
}

pub fn is_injective(entries: &[usize]) -> bool {
    entries.iter().enumerate().all(|(i, a)| entries[i + 1..].iter().all(|b| a != b))
}

/// All permutations of `0..k` in lexicographic order.
pub fn enumerate_permutations(k: usize) -> Result<Vec<Vec<usize>>> {
    if k == 0 {
        return Err(Error::InvalidParameter("permutations need k >= 1".into()));
    }
    if k > MAX_PERMUTATION_ARITY {
        return Err(Error::ArityTooLarge(k));
    }
    Ok((0..k).permutations(k).collect())
}

/// A tuple `alpha` in `[m]^k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KTuple {
    entries: Vec<usize>,
    m: usize,
}

impl KTuple {
    pub fn new(entries: Vec<usize>, m: usize) -> Result<Self> {
        if let Some(&index) = entries.iter().find(|&&e| e >= m) {
            return Err(Error::IndexOutOfRange { index, m });
        }
        Ok(Self { entries, m })
    }

    /// Like [`KTuple::new`], but also rejects repeated entries.
    pub fn injective(entries: Vec<usize>, m: usize) -> Result<Self> {
        let t = Self::new(entries, m)?;
        if !t.is_injective() {
            return Err(Error::NonInjective(t.entries));
        }
        Ok(t)
    }

    pub fn entries(&self) -> &[usize] {
        &self.entries
    }

    pub fn k(&self) -> usize {
        self.entries.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn is_injective(&self) -> bool {
        is_injective(&self.entries)
    }
}

/// Injections `[s] -> [m]`: one per side in partite mode, a single one in
/// non-partite mode.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InjectionVector {
    maps: Vec<Vec<usize>>,
    m: usize,
}

impl InjectionVector {
    pub fn new(maps: Vec<Vec<usize>>, m: usize) -> Result<Self> {
        let Some(first) = maps.first() else {
            return Err(Error::SizeMismatch("injection vector needs at least one map".into()));
        };
        let s = first.len();
        if s > m {
            return Err(Error::SizeMismatch(format!("subsample size {s} exceeds m = {m}")));
        }
        for map in &maps {
            if map.len() != s {
                return Err(Error::SizeMismatch(format!("injections of lengths {s} and {} in one vector", map.len())));
            }
            if let Some(&index) = map.iter().find(|&&e| e >= m) {
                return Err(Error::IndexOutOfRange { index, m });
            }
            if !is_injective(map) {
                return Err(Error::NonInjective(map.clone()));
            }
        }
        Ok(Self { maps, m })
    }

    pub fn identity(sides: usize, m: usize) -> Self {
        Self { maps: vec![(0..m).collect(); sides], m }
    }

    /// Each side maps `[s]` onto the top `s` indices `m-s..m`.
    pub fn top(sides: usize, s: usize, m: usize) -> Result<Self> {
        if s > m {
            return Err(Error::SizeMismatch(format!("subsample size {s} exceeds m = {m}")));
        }
        Ok(Self { maps: vec![(m - s..m).collect(); sides], m })
    }

    /// Uniformly random injections, independently per side.
    pub fn random<R: Rng + ?Sized>(sides: usize, s: usize, m: usize, rng: &mut R) -> Result<Self> {
        if s > m {
            return Err(Error::SizeMismatch(format!("subsample size {s} exceeds m = {m}")));
        }
        let all: Vec<usize> = (0..m).collect();
        let maps = (0..sides).map(|_| all.choose_multiple(rng, s).copied().collect()).collect();
        Ok(Self { maps, m })
    }

    pub fn maps(&self) -> &[Vec<usize>] {
        &self.maps
    }

    pub fn side(&self, i: usize) -> &[usize] {
        &self.maps[i]
    }

    pub fn sides(&self) -> usize {
        self.maps.len()
    }

    pub fn s(&self) -> usize {
        self.maps[0].len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// `self ∘ inner`: apply `inner` first (`[p] -> [s]`), then `self`.
    pub fn compose(&self, inner: &InjectionVector) -> Result<Self> {
        if inner.m != self.s() || inner.sides() != self.sides() {
            return Err(Error::SizeMismatch(format!(
                "cannot compose [{}]->[{}] after [{}]->[{}]",
                self.s(),
                self.m,
                inner.s(),
                inner.m
            )));
        }
        let maps =
            self.maps.iter().zip(&inner.maps).map(|(outer, inner)| inner.iter().map(|&v| outer[v]).collect()).collect();
        Ok(Self { maps, m: self.m })
    }

    pub(crate) fn check_mode(&self, mode: Mode, k: usize) -> Result<()> {
        let expected = match mode {
            Mode::Partite => k,
            Mode::Nonpartite => 1,
        };
        if self.sides() != expected {
            return Err(Error::ArityMismatch { expected, got: self.sides() });
        }
        Ok(())
    }
}

/// An orientation `alpha_U` (an injection `[k] -> [m]` with image `U`) for
/// every `k`-subset `U` of `[m]`. Subsets are kept in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderChoice {
    m: usize,
    k: usize,
    subsets: Vec<Vec<usize>>,
    orientations: Vec<Vec<usize>>,
}

impl OrderChoice {
    /// Every subset listed in increasing order.
    pub fn canonical(m: usize, k: usize) -> Self {
        let subsets: Vec<Vec<usize>> = (0..m).combinations(k).collect();
        Self { m, k, orientations: subsets.clone(), subsets }
    }

    /// Each subset independently oriented by a uniform permutation.
    pub fn random<R: Rng + ?Sized>(m: usize, k: usize, rng: &mut R) -> Self {
        let mut choice = Self::canonical(m, k);
        for o in &mut choice.orientations {
            o.shuffle(rng);
        }
        choice
    }

    /// Builds an order choice from explicit orientations, one per subset in
    /// lexicographic subset order.
    pub fn from_orientations(m: usize, k: usize, orientations: Vec<Vec<usize>>) -> Result<Self> {
        let subsets: Vec<Vec<usize>> = (0..m).combinations(k).collect();
        if subsets.len() != orientations.len() {
            return Err(Error::SizeMismatch(format!(
                "{} orientations for {} subsets",
                orientations.len(),
                subsets.len()
            )));
        }
        for (u, o) in subsets.iter().zip(&orientations) {
            let mut sorted = o.clone();
            sorted.sort_unstable();
            if &sorted != u {
                return Err(Error::InvalidParameter(format!("orientation {o:?} does not have image {u:?}")));
            }
        }
        Ok(Self { m, k, subsets, orientations })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.subsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsets.is_empty()
    }

    /// `(U, alpha_U)` pairs in lexicographic order of `U`.
    pub fn iter(&self) -> impl Iterator<Item = (&[usize], &[usize])> {
        self.subsets.iter().map(Vec::as_slice).zip(self.orientations.iter().map(Vec::as_slice))
    }

    pub fn orientation(&self, subset: &[usize]) -> Option<&[usize]> {
        self.subsets.binary_search_by(|u| u.as_slice().cmp(subset)).ok().map(|i| self.orientations[i].as_slice())
    }

    /// Relabels through `perm`, so that `alpha_{perm(U)} = perm ∘ alpha_U`.
    pub fn relabel(&self, perm: &[usize]) -> Self {
        let mut pairs: Vec<(Vec<usize>, Vec<usize>)> = self
            .orientations
            .iter()
            .map(|o| {
                let o: Vec<usize> = o.iter().map(|&v| perm[v]).collect();
                let mut u = o.clone();
                u.sort_unstable();
                (u, o)
            })
            .collect();
        pairs.sort();
        let (subsets, orientations) = pairs.into_iter().unzip();
        Self { m: self.m, k: self.k, subsets, orientations }
    }
}
