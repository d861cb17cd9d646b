use crate::index::{for_each_tuple, OrderChoice};
use crate::losses::{empirical_loss, sorted_values, LossSpec};
use crate::samples::{Hypothesis, HypothesisClass, Interval, LabeledSample, Labels};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Realizability {
    pub realizable: bool,
    /// A zero-loss member of the class, present exactly when realizable.
    pub witness: Option<Hypothesis>,
}

fn check_shapes(class: &HypothesisClass, sample: &LabeledSample) -> Result<()> {
    if class.mode() != sample.mode() {
        return Err(Error::ModeMismatch { expected: class.mode(), got: sample.mode() });
    }
    if class.k() != sample.k() {
        return Err(Error::ArityMismatch { expected: class.k(), got: sample.k() });
    }
    Ok(())
}

/// Decides whether `inf_{H in class}` of the empirical 0/1 loss is zero, by
/// exact ERM for the built-in classes.
///
/// Rectangles: the witness is the smallest closed box containing every
/// coordinate of every positive tuple; the sample is realizable iff no other
/// label falls inside it. Sum thresholds (`k = 2`): realizable iff every
/// 2-set is labelled the same in both orientations and the smallest positive
/// pair sum exceeds the largest negative one.
pub fn erm_realizability_check(
    class: &HypothesisClass,
    sample: &LabeledSample,
    loss: &LossSpec,
    order: Option<&OrderChoice>,
) -> Result<Realizability> {
    check_shapes(class, sample)?;
    if !loss.is_zero_one() {
        return Err(Error::Unsupported("exact ERM is implemented for the 0/1 loss only".into()));
    }
    loss.check_mode(sample.mode())?;
    if let Some(order) = order {
        if order.m() != sample.m() || order.k() != sample.k() {
            return Err(Error::SizeMismatch("order choice does not match the sample".into()));
        }
    }
    let (realizable, candidate) = match class {
        HypothesisClass::Rectangles { k } => {
            let fit = box_fit(sample, *k);
            (fit.realizable, fit.hypothesis(*k))
        }
        HypothesisClass::SumThresholds { .. } => {
            let fit = threshold_fit(sample)?;
            (fit.realizable(), fit.hypothesis())
        }
        HypothesisClass::Finite { members, .. } => {
            let mut best: Option<(f64, &Hypothesis)> = None;
            for h in members {
                let l = empirical_loss(sample, h, loss, order)?;
                if best.is_none_or(|(b, _)| l < b) {
                    best = Some((l, h));
                }
            }
            match best {
                Some((l, h)) => (l == 0.0, h.clone()),
                None => return Err(Error::InvalidParameter("empty finite class".into())),
            }
        }
    };
    Ok(Realizability { realizable, witness: realizable.then_some(candidate) })
}

/// The ERM candidate of a built-in class, whether or not it attains zero
/// loss (for finite classes: the first minimiser under canonical order).
pub fn erm_candidate(class: &HypothesisClass, sample: &LabeledSample) -> Result<Hypothesis> {
    check_shapes(class, sample)?;
    match class {
        HypothesisClass::Rectangles { k } => Ok(box_fit(sample, *k).hypothesis(*k)),
        HypothesisClass::SumThresholds { .. } => Ok(threshold_fit(sample)?.hypothesis()),
        HypothesisClass::Finite { mode, .. } => {
            let loss = LossSpec::zero_one(*mode);
            let r = erm_realizability_check(class, sample, &loss, None)?;
            match r.witness {
                Some(w) => Ok(w),
                None => {
                    let HypothesisClass::Finite { members, .. } = class else { unreachable!() };
                    let mut best = (f64::INFINITY, &members[0]);
                    for h in members {
                        let l = empirical_loss(sample, h, &loss, None)?;
                        if l < best.0 {
                            best = (l, h);
                        }
                    }
                    Ok(best.1.clone())
                }
            }
        }
    }
}

struct BoxFit {
    bounds: Option<Vec<Interval>>,
    realizable: bool,
}

impl BoxFit {
    fn hypothesis(self, k: usize) -> Hypothesis {
        match self.bounds {
            Some(b) => Hypothesis::rectangle(b),
            None => Hypothesis::empty_box(k),
        }
    }
}

fn box_fit(sample: &LabeledSample, k: usize) -> BoxFit {
    if let Labels::Induced(f) = sample.labels() {
        if let Some(fb) = f.as_box(k) {
            return box_fit_induced(sample, fb);
        }
    }
    let x = sample.x();
    let mut bounds: Option<Vec<Interval>> = None;
    let mut binary = true;
    for_each_tuple(sample.m(), k, false, |alpha| match sample.label(alpha) {
        0 => {}
        1 => {
            let b = bounds.get_or_insert_with(|| vec![Interval::new(f64::INFINITY, f64::NEG_INFINITY); k]);
            for (i, &a) in alpha.iter().enumerate() {
                let v = x.side(i)[a];
                b[i].lo = b[i].lo.min(v);
                b[i].hi = b[i].hi.max(v);
            }
        }
        _ => binary = false,
    });
    let mut realizable = binary;
    if let (Some(b), true) = (&bounds, binary) {
        let inside = Hypothesis::rectangle(b.clone());
        let mut point = vec![0.0; k];
        for_each_tuple(sample.m(), k, false, |alpha| {
            x.point_into(alpha, &mut point);
            if inside.eval(&point) == 1 && sample.label(alpha) != 1 {
                realizable = false;
            }
        });
    }
    BoxFit { bounds, realizable }
}

/// Box fit for labels induced by a box `F`: positives are exactly the
/// product of the per-side point sets inside `F`.
fn box_fit_induced(sample: &LabeledSample, fb: Option<Vec<Interval>>) -> BoxFit {
    let x = sample.x();
    let Some(fb) = fb else {
        return BoxFit { bounds: None, realizable: true };
    };
    let mut bounds = Vec::with_capacity(fb.len());
    for (i, iv) in fb.iter().enumerate() {
        let inside = x.side(i).iter().copied().filter(|&v| iv.contains(v));
        let (lo, hi) = inside.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        if lo > hi {
            return BoxFit { bounds: None, realizable: true };
        }
        bounds.push(Interval::new(lo, hi));
    }
    let count = |pred: &dyn Fn(usize, f64) -> bool| -> u128 {
        (0..fb.len()).map(|i| x.side(i).iter().filter(|&&v| pred(i, v)).count() as u128).product()
    };
    let inside_box = count(&|i, v| bounds[i].contains(v));
    let positive_inside = count(&|i, v| bounds[i].contains(v) && fb[i].contains(v));
    BoxFit { bounds: Some(bounds), realizable: inside_box == positive_inside }
}

struct ThresholdFit {
    min_positive: Option<f64>,
    max_negative: Option<f64>,
    consistent: bool,
}

impl ThresholdFit {
    fn realizable(&self) -> bool {
        self.consistent
            && match (self.min_positive, self.max_negative) {
                (Some(p), Some(n)) => p > n,
                _ => true,
            }
    }

    fn hypothesis(&self) -> Hypothesis {
        match self.min_positive {
            Some(t) => Hypothesis::sum_threshold(t),
            None => Hypothesis::constant(0),
        }
    }
}

fn threshold_fit(sample: &LabeledSample) -> Result<ThresholdFit> {
    if sample.k() != 2 {
        return Err(Error::Unsupported("sum-threshold ERM is implemented for k = 2".into()));
    }
    let values = sample.x().side(0);
    if let Labels::Induced(f) = sample.labels() {
        if let Some(t) = f.as_threshold() {
            let sorted = sorted_values(values);
            let mut fit = ThresholdFit { min_positive: None, max_negative: None, consistent: true };
            for i in 0..sorted.len() {
                let rest = &sorted[i + 1..];
                let p = rest.partition_point(|&v| sorted[i] + v < t);
                if p < rest.len() {
                    let s = sorted[i] + rest[p];
                    fit.min_positive = Some(fit.min_positive.map_or(s, |b| b.min(s)));
                }
                if p > 0 {
                    let s = sorted[i] + rest[p - 1];
                    fit.max_negative = Some(fit.max_negative.map_or(s, |b| b.max(s)));
                }
            }
            return Ok(fit);
        }
    }
    let mut fit = ThresholdFit { min_positive: None, max_negative: None, consistent: true };
    let m = values.len();
    for i in 0..m {
        for j in i + 1..m {
            let (a, b) = (sample.label(&[i, j]), sample.label(&[j, i]));
            if a != b || a > 1 {
                fit.consistent = false;
            }
            let s = values[i] + values[j];
            if a == 1 {
                fit.min_positive = Some(fit.min_positive.map_or(s, |p| p.min(s)));
            } else {
                fit.max_negative = Some(fit.max_negative.map_or(s, |n| n.max(s)));
            }
        }
    }
    Ok(fit)
}
