use crate::index::{for_each_tuple, InjectionVector};
use crate::losses::sorted_values;
use crate::samples::{erm_candidate, Hypothesis, HypothesisClass, Interval, LabeledSample, Labels};
use crate::schemes::{SelectionScheme, SizeProfile};
use crate::{Error, Mode, Result};

const ALL_NEGATIVE: usize = 2;

fn sides(mode: Mode, k: usize) -> usize {
    match mode {
        Mode::Partite => k,
        Mode::Nonpartite => 1,
    }
}

/// `s_m = m`, `h_m = 1`: keep the whole sample and reconstruct by exact ERM.
#[derive(Debug, Clone)]
pub struct TrivialScheme {
    class: HypothesisClass,
}

impl TrivialScheme {
    pub fn new(class: HypothesisClass) -> Self {
        Self { class }
    }
}

impl SizeProfile for TrivialScheme {
    fn selection_size(&self, m: usize) -> usize {
        m
    }

    fn header_size(&self, _m: usize) -> usize {
        1
    }
}

impl SelectionScheme for TrivialScheme {
    fn name(&self) -> &str {
        "trivial"
    }

    fn mode(&self) -> Mode {
        self.class.mode()
    }

    fn k(&self) -> usize {
        self.class.k()
    }

    fn output_class(&self) -> &str {
        self.class.name()
    }

    fn proper(&self) -> bool {
        true
    }

    fn select(&self, sample: &LabeledSample) -> Result<(InjectionVector, usize)> {
        Ok((InjectionVector::identity(sides(self.mode(), self.k()), sample.m()), 1))
    }

    fn rebuild(&self, subsample: &LabeledSample, _header: usize) -> Result<Hypothesis> {
        erm_candidate(&self.class, subsample)
    }
}

/// Partite boxes with `s_m = 2`, `h_m = 2`.
///
/// Per side, the selector keeps the points of smallest and largest
/// coordinate among those taking part in some positive tuple (smallest index
/// on ties). When both are the same index, the second slot is the smallest
/// other index. Header 2 flags a sample without positive tuples. The
/// reconstructor spans, per side, the selected points that take part in a
/// positive tuple of the subsample.
#[derive(Debug, Clone, Copy)]
pub struct RectangleScheme {
    k: usize,
}

impl RectangleScheme {
    pub fn new(k: usize) -> Self {
        Self { k }
    }
}

impl SizeProfile for RectangleScheme {
    fn selection_size(&self, m: usize) -> usize {
        m.min(2)
    }

    fn header_size(&self, _m: usize) -> usize {
        2
    }
}

/// Per side, which indices take part in a positive tuple; `None` when there
/// is no positive tuple.
fn participants(sample: &LabeledSample) -> Option<Vec<Vec<bool>>> {
    let (m, k) = (sample.m(), sample.k());
    if let Labels::Induced(f) = sample.labels() {
        if let Some(fb) = f.as_box(k) {
            let fb = fb?;
            let marks: Vec<Vec<bool>> = fb
                .iter()
                .enumerate()
                .map(|(i, iv)| sample.x().side(i).iter().map(|&v| iv.contains(v)).collect())
                .collect();
            return marks.iter().all(|side| side.contains(&true)).then_some(marks);
        }
    }
    let mut marks = vec![vec![false; m]; k];
    let mut any = false;
    for_each_tuple(m, k, false, |alpha| {
        if sample.label(alpha) == 1 {
            any = true;
            for (side, &a) in marks.iter_mut().zip(alpha) {
                side[a] = true;
            }
        }
    });
    any.then_some(marks)
}

fn extreme_indices(values: &[f64], marks: &[bool]) -> (usize, usize) {
    let mut lo: Option<usize> = None;
    let mut hi: Option<usize> = None;
    for (a, (&v, &on)) in values.iter().zip(marks).enumerate() {
        if !on {
            continue;
        }
        if lo.is_none_or(|l| v < values[l]) {
            lo = Some(a);
        }
        if hi.is_none_or(|h| v > values[h]) {
            hi = Some(a);
        }
    }
    (lo.expect("side has a participant"), hi.expect("side has a participant"))
}

impl SelectionScheme for RectangleScheme {
    fn name(&self) -> &str {
        "rectangle"
    }

    fn mode(&self) -> Mode {
        Mode::Partite
    }

    fn k(&self) -> usize {
        self.k
    }

    fn output_class(&self) -> &str {
        "rectangle"
    }

    fn proper(&self) -> bool {
        true
    }

    fn select(&self, sample: &LabeledSample) -> Result<(InjectionVector, usize)> {
        let m = sample.m();
        let s = self.selection_size(m);
        let Some(marks) = participants(sample) else {
            return Ok((InjectionVector::new(vec![(0..s).collect(); self.k], m)?, ALL_NEGATIVE));
        };
        let maps = marks
            .iter()
            .enumerate()
            .map(|(i, side)| {
                let (lo, hi) = extreme_indices(sample.x().side(i), side);
                if s == 1 {
                    vec![lo]
                } else if lo != hi {
                    vec![lo, hi]
                } else {
                    vec![lo, usize::from(lo == 0)]
                }
            })
            .collect();
        Ok((InjectionVector::new(maps, m)?, 1))
    }

    fn rebuild(&self, subsample: &LabeledSample, header: usize) -> Result<Hypothesis> {
        if header == ALL_NEGATIVE {
            return Ok(Hypothesis::empty_box(self.k));
        }
        let Some(marks) = participants(subsample) else {
            return Ok(Hypothesis::empty_box(self.k));
        };
        let bounds = marks
            .iter()
            .enumerate()
            .map(|(i, side)| {
                let values = subsample.x().side(i);
                let (lo, hi) = extreme_indices(values, side);
                Interval::new(values[lo], values[hi])
            })
            .collect();
        Ok(Hypothesis::rectangle(bounds))
    }
}

/// Non-partite sum thresholds for `k = 2` with `s_m = 2`, `h_m = 2`.
///
/// The selector keeps the positive 2-set of smallest coordinate sum
/// (lexicographically smallest on ties); the reconstructor predicts 1 iff a
/// pair sums to at least the selected pair's sum. Header 2 flags a sample
/// without positive 2-sets and reconstructs the constant 0.
#[derive(Debug, Clone, Copy)]
pub struct SumThresholdScheme;

impl SumThresholdScheme {
    pub fn new(k: usize) -> Result<Self> {
        if k != 2 {
            return Err(Error::Unsupported(format!("the sum-threshold scheme needs k = 2, got {k}")));
        }
        Ok(Self)
    }
}

impl SizeProfile for SumThresholdScheme {
    fn selection_size(&self, m: usize) -> usize {
        m.min(2)
    }

    fn header_size(&self, _m: usize) -> usize {
        2
    }
}

/// Lexicographically smallest `(i, j)`, `i < j`, with `x_i + x_j` minimal
/// among positive pairs.
fn min_positive_pair(sample: &LabeledSample) -> Option<(usize, usize)> {
    let x = sample.x().side(0);
    if let Labels::Induced(f) = sample.labels() {
        if let Some(t) = f.as_threshold() {
            return min_pair_above(x, t);
        }
    }
    let mut best: Option<(f64, usize, usize)> = None;
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            if sample.label(&[i, j]) == 1 {
                let s = x[i] + x[j];
                if best.is_none_or(|(b, _, _)| s < b) {
                    best = Some((s, i, j));
                }
            }
        }
    }
    best.map(|(_, i, j)| (i, j))
}

/// [`min_positive_pair`] for labels `1[x_i + x_j >= t]`, in `O(m log m)`.
fn min_pair_above(x: &[f64], t: f64) -> Option<(usize, usize)> {
    let sorted = sorted_values(x);
    let mut target: Option<f64> = None;
    for i in 0..sorted.len() {
        let rest = &sorted[i + 1..];
        let p = rest.partition_point(|&v| sorted[i] + v < t);
        if p < rest.len() {
            let s = sorted[i] + rest[p];
            target = Some(target.map_or(s, |b| b.min(s)));
        }
    }
    let target = target?;
    // The smallest index with any partner at the target sum is the first
    // coordinate of the lexicographically smallest pair; every partner of it
    // has a larger index.
    let has_partner = |i: usize| {
        let lo = sorted.partition_point(|&v| x[i] + v < target);
        let hi = sorted.partition_point(|&v| x[i] + v <= target);
        let own = usize::from(x[i] + x[i] == target);
        hi - lo > own
    };
    let i = (0..x.len()).find(|&i| has_partner(i))?;
    let j = (0..x.len()).find(|&j| j != i && x[i] + x[j] == target)?;
    Some((i, j))
}

impl SelectionScheme for SumThresholdScheme {
    fn name(&self) -> &str {
        "sum-threshold"
    }

    fn mode(&self) -> Mode {
        Mode::Nonpartite
    }

    fn k(&self) -> usize {
        2
    }

    fn output_class(&self) -> &str {
        "sum-threshold"
    }

    fn proper(&self) -> bool {
        true
    }

    fn select(&self, sample: &LabeledSample) -> Result<(InjectionVector, usize)> {
        let m = sample.m();
        match min_positive_pair(sample) {
            Some((i, j)) => Ok((InjectionVector::new(vec![vec![i, j]], m)?, 1)),
            None => Ok((InjectionVector::new(vec![(0..self.selection_size(m)).collect()], m)?, ALL_NEGATIVE)),
        }
    }

    fn rebuild(&self, subsample: &LabeledSample, header: usize) -> Result<Hypothesis> {
        let x = subsample.x().side(0);
        if header == ALL_NEGATIVE || x.len() < 2 {
            return Ok(Hypothesis::constant(0));
        }
        Ok(Hypothesis::sum_threshold(x[0] + x[1]))
    }
}

/// Keeps nothing and always reconstructs the constant 0; a negative control
/// for the validity checker.
#[derive(Debug, Clone, Copy)]
pub struct ConstantScheme {
    mode: Mode,
    k: usize,
}

impl ConstantScheme {
    pub fn new(mode: Mode, k: usize) -> Self {
        Self { mode, k }
    }
}

impl SizeProfile for ConstantScheme {
    fn selection_size(&self, _m: usize) -> usize {
        0
    }

    fn header_size(&self, _m: usize) -> usize {
        1
    }
}

impl SelectionScheme for ConstantScheme {
    fn name(&self) -> &str {
        "constant-zero"
    }

    fn mode(&self) -> Mode {
        self.mode
    }

    fn k(&self) -> usize {
        self.k
    }

    fn output_class(&self) -> &str {
        "constant"
    }

    fn proper(&self) -> bool {
        false
    }

    fn select(&self, sample: &LabeledSample) -> Result<(InjectionVector, usize)> {
        Ok((InjectionVector::new(vec![Vec::new(); sides(self.mode, self.k)], sample.m())?, 1))
    }

    fn rebuild(&self, _subsample: &LabeledSample, _header: usize) -> Result<Hypothesis> {
        Ok(Hypothesis::constant(0))
    }
}
