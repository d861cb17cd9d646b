//! The learner `A = rho o kappa`, the Azuma tail bound for a fixed
//! selection, and the sample size `m_pac` it implies.
//!
//! All bounds are evaluated in log space; the union-bound multiplier
//! `(m)_s^k h` overflows `f64` long before the exponential term makes the
//! product small.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::index::ln_falling_factorial;
use crate::samples::{Hypothesis, LabeledSample};
use crate::schemes::{kappa, reconstruct, SelectionScheme, SizeProfile};
use crate::{Error, Mode, Result};

pub const DEFAULT_SCAN_LIMIT: u64 = 4_000_000;

/// `A(x, y) = rho(kappa(x, y))`.
pub fn learn(scheme: &dyn SelectionScheme, sample: &LabeledSample) -> Result<Hypothesis> {
    reconstruct(scheme, &kappa(scheme, sample)?)
}

/// Parameters of the sample-size guarantee.
#[derive(Clone)]
pub struct GuaranteeInputs {
    mode: Mode,
    k: usize,
    sup_norm: f64,
    epsilon: f64,
    delta: f64,
    sizes: Arc<dyn SizeProfile>,
}

impl fmt::Debug for GuaranteeInputs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GuaranteeInputs")
            .field("mode", &self.mode)
            .field("k", &self.k)
            .field("sup_norm", &self.sup_norm)
            .field("epsilon", &self.epsilon)
            .field("delta", &self.delta)
            .finish_non_exhaustive()
    }
}

fn open_unit(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v < 1.0) {
        return Err(Error::InvalidParameter(format!("{name} must lie in (0, 1), got {v}")));
    }
    Ok(())
}

impl GuaranteeInputs {
    pub fn new(
        mode: Mode,
        k: usize,
        sup_norm: f64,
        epsilon: f64,
        delta: f64,
        sizes: Arc<dyn SizeProfile>,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        if !(sup_norm > 0.0 && sup_norm.is_finite()) {
            return Err(Error::InvalidParameter(format!("sup-norm must be finite and positive, got {sup_norm}")));
        }
        open_unit("epsilon", epsilon)?;
        open_unit("delta", delta)?;
        Ok(Self { mode, k, sup_norm, epsilon, delta, sizes })
    }

    /// Inputs for a scheme's own mode, arity and size sequences.
    pub fn for_scheme(scheme: Arc<dyn SelectionScheme>, sup_norm: f64, epsilon: f64, delta: f64) -> Result<Self> {
        let (mode, k) = (scheme.mode(), scheme.k());
        Self::new(mode, k, sup_norm, epsilon, delta, scheme)
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn sizes(&self) -> &dyn SizeProfile {
        self.sizes.as_ref()
    }

    pub fn with_epsilon_delta(&self, epsilon: f64, delta: f64) -> Result<Self> {
        Self::new(self.mode, self.k, self.sup_norm, epsilon, delta, self.sizes.clone())
    }

    pub fn with_sup_norm(&self, sup_norm: f64) -> Result<Self> {
        Self::new(self.mode, self.k, sup_norm, self.epsilon, self.delta, self.sizes.clone())
    }
}

/// Every intermediate quantity of the tail bound at one `m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundBreakdown {
    pub mode: Mode,
    pub k: usize,
    pub m: u64,
    pub s: u64,
    pub h: u64,
    pub sup_norm: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub slack: f64,
    pub epsilon_tilde: f64,
    /// `slack >= epsilon`, or `m` too small for any labelled tuple to
    /// survive the removal of the subsample.
    pub condition_violated: bool,
    pub ln_single_event: f64,
    pub single_event: f64,
    pub ln_multiplier: f64,
    /// `None` when it overflows `f64`.
    pub multiplier: Option<f64>,
    pub ln_total: f64,
    /// `multiplier * single_event`, clamped to `[0, 1]`.
    pub total: f64,
}

/// Fraction of labelled cells that avoid the `s` selected indices:
/// `((m-s)/m)^k`, or `(m-s)_k / (m)_k` in non-partite mode. `None` when
/// there are no labelled cells at all.
fn surviving_fraction(mode: Mode, k: usize, m: u64, s: u64) -> Option<f64> {
    match mode {
        Mode::Partite => (m > 0).then(|| ((m - s) as f64 / m as f64).powi(k as i32)),
        Mode::Nonpartite => {
            (m >= k as u64).then(|| (0..k as u64).map(|j| (m - s).saturating_sub(j) as f64 / (m - j) as f64).product())
        }
    }
}

/// The Azuma bound on `P[L_mu(H) - L_{x,y}(H) > epsilon]` for one fixed
/// selection and header, and its union over all of them.
pub fn azuma_bound(inputs: &GuaranteeInputs, m: u64) -> BoundBreakdown {
    let (mode, k, l) = (inputs.mode, inputs.k, inputs.sup_norm);
    let s = inputs.sizes.selection_size(m as usize) as u64;
    let h = inputs.sizes.header_size(m as usize) as u64;
    let survive = surviving_fraction(mode, k, m, s);
    let slack = survive.map_or(l, |f| (1.0 - f) * l);
    let epsilon_tilde = inputs.epsilon - slack;
    let condition_violated = survive.is_none() || slack >= inputs.epsilon;

    let denominator = match mode {
        Mode::Partite => 2.0 * k as f64 * l * l,
        Mode::Nonpartite => 2.0 * (k * k) as f64 * l * l,
    };
    let ln_single_event =
        if condition_violated { 0.0 } else { -(epsilon_tilde * epsilon_tilde) * (m - s) as f64 / denominator };
    let ln_ff = ln_falling_factorial(m, s);
    let ln_multiplier = match mode {
        Mode::Partite => k as f64 * ln_ff,
        Mode::Nonpartite => ln_ff,
    } + (h as f64).ln();
    let multiplier = ln_multiplier.exp();
    let ln_total = ln_multiplier + ln_single_event;
    let total = if condition_violated { 1.0 } else { ln_total.exp().clamp(0.0, 1.0) };
    BoundBreakdown {
        mode,
        k,
        m,
        s,
        h,
        sup_norm: l,
        epsilon: inputs.epsilon,
        delta: inputs.delta,
        slack,
        epsilon_tilde,
        condition_violated,
        ln_single_event,
        single_event: ln_single_event.exp(),
        ln_multiplier,
        multiplier: multiplier.is_finite().then_some(multiplier),
        ln_total,
        total,
    }
}

fn both_conditions(b: &BoundBreakdown) -> bool {
    !b.condition_violated && b.total <= b.delta
}

/// Outcome of the `m_pac` scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MPac {
    pub m_pac: Option<u64>,
    pub scan_limit: u64,
    /// The bound at `m_pac` when found, otherwise at `scan_limit`.
    pub breakdown: BoundBreakdown,
    /// Whether `ln_total` is strictly decreasing over the top tenth of the
    /// window.
    pub tail_decreasing: bool,
    pub diagnostics: String,
}

/// The least `m0` such that for every `m` in `[m0, scan_limit]` the slack is
/// below `epsilon` and the union-bounded tail is at most `delta`, provided
/// the bound is still decreasing at the top of the window.
pub fn m_pac(inputs: &GuaranteeInputs, scan_limit: u64) -> Result<MPac> {
    if scan_limit < 1 {
        return Err(Error::InvalidParameter("scan_limit must be at least 1".into()));
    }
    let top = azuma_bound(inputs, scan_limit);
    let decile_start = scan_limit - scan_limit / 10;
    let mut tail_decreasing = true;
    let mut previous = top.ln_total;
    for m in (decile_start..scan_limit).rev() {
        let b = azuma_bound(inputs, m);
        if b.condition_violated || b.ln_total <= previous {
            tail_decreasing = false;
            break;
        }
        previous = b.ln_total;
    }
    if top.condition_violated || !tail_decreasing || !both_conditions(&top) {
        let diagnostics = if top.condition_violated {
            format!("slack {} is not below epsilon {} at m = {scan_limit}", top.slack, inputs.epsilon)
        } else if !both_conditions(&top) {
            format!("total bound {} exceeds delta {} at m = {scan_limit}", top.total, inputs.delta)
        } else {
            format!("bound is not decreasing over [{decile_start}, {scan_limit}]")
        };
        return Ok(MPac { m_pac: None, scan_limit, breakdown: top, tail_decreasing, diagnostics });
    }
    let mut m0 = scan_limit;
    let mut at_m0 = top;
    while m0 > 1 {
        let b = azuma_bound(inputs, m0 - 1);
        if !both_conditions(&b) {
            break;
        }
        m0 -= 1;
        at_m0 = b;
    }
    Ok(MPac { m_pac: Some(m0), scan_limit, breakdown: at_m0, tail_decreasing, diagnostics: String::new() })
}

/// Leading-order sample size `2 k l^2 / eps^2 * max(1, ln(1/delta))`, with
/// `k^2` in place of `k` in non-partite mode.
pub fn asymptotic_guarantee_reference(inputs: &GuaranteeInputs) -> f64 {
    let k = inputs.k as f64;
    let kf = match inputs.mode {
        Mode::Partite => k,
        Mode::Nonpartite => k * k,
    };
    2.0 * kf * inputs.sup_norm.powi(2) / inputs.epsilon.powi(2) * (1.0f64).max((1.0 / inputs.delta).ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samples::{HypothesisClass, Interval, Sample};
    use crate::schemes::{ConstantSizes, RectangleScheme, TrivialScheme};

    fn inputs(mode: Mode, k: usize, l: f64, eps: f64, delta: f64) -> GuaranteeInputs {
        GuaranteeInputs::new(mode, k, l, eps, delta, Arc::new(ConstantSizes { s: 2, h: 2 })).unwrap()
    }

    #[test]
    fn validates_inputs() {
        let sizes = Arc::new(ConstantSizes { s: 2, h: 2 });
        assert!(GuaranteeInputs::new(Mode::Partite, 0, 1.0, 0.1, 0.1, sizes.clone()).is_err());
        assert!(GuaranteeInputs::new(Mode::Partite, 2, 0.0, 0.1, 0.1, sizes.clone()).is_err());
        assert!(GuaranteeInputs::new(Mode::Partite, 2, 1.0, 1.0, 0.1, sizes.clone()).is_err());
        assert!(GuaranteeInputs::new(Mode::Partite, 2, 1.0, 0.1, 0.0, sizes).is_err());
    }

    #[test]
    fn closed_form_at_m_1000() {
        let b = azuma_bound(&inputs(Mode::Partite, 2, 1.0, 0.1, 0.1), 1000);
        assert!((b.epsilon_tilde - 0.096004).abs() < 1e-12);
        let expected = (-(0.096004f64.powi(2)) * 998.0 / 4.0).exp();
        assert!((b.single_event - expected).abs() < 1e-12);
        assert!((b.single_event - 0.1003).abs() < 1e-4);
        let ln_mult = 2.0 * (1000.0f64 * 999.0).ln() + 2.0f64.ln();
        assert!((b.ln_multiplier - ln_mult).abs() < 1e-9);
        assert_eq!(b.total, 1.0);
    }

    #[test]
    fn full_selection_violates_the_condition() {
        let trivial: Arc<dyn SelectionScheme> = Arc::new(TrivialScheme::new(HypothesisClass::Rectangles { k: 2 }));
        let g = GuaranteeInputs::for_scheme(trivial, 1.0, 0.5, 0.1).unwrap();
        let b = azuma_bound(&g, 50);
        assert_eq!(b.slack, 1.0);
        assert!(b.condition_violated);
        assert_eq!(b.total, 1.0);
        assert!(m_pac(&g, 1000).unwrap().m_pac.is_none());
    }

    #[test]
    fn degenerate_sizes_violate_the_condition() {
        assert!(azuma_bound(&inputs(Mode::Partite, 2, 1.0, 0.1, 0.1), 0).condition_violated);
        assert!(azuma_bound(&inputs(Mode::Nonpartite, 3, 1.0, 0.1, 0.1), 2).condition_violated);
    }

    #[test]
    fn monotone_on_grids() {
        for mode in [Mode::Partite, Mode::Nonpartite] {
            for eps in [0.05, 0.1, 0.3] {
                let g = inputs(mode, 2, 1.0, eps, 0.1);
                let mut previous = f64::INFINITY;
                for m in (100..20_000).step_by(97) {
                    let b = azuma_bound(&g, m);
                    if b.condition_violated {
                        continue;
                    }
                    assert!(b.ln_single_event < previous);
                    previous = b.ln_single_event;
                }
            }
            for m in [200, 1000, 5000] {
                let by_l: Vec<f64> = [0.2, 0.5, 1.0]
                    .iter()
                    .map(|&l| azuma_bound(&inputs(mode, 2, l, 0.1, 0.1), m).single_event)
                    .collect();
                assert!(by_l.windows(2).all(|w| w[0] <= w[1]), "{by_l:?}");
                let by_eps: Vec<f64> = [0.05, 0.1, 0.2]
                    .iter()
                    .map(|&e| azuma_bound(&inputs(mode, 2, 1.0, e, 0.1), m).single_event)
                    .collect();
                assert!(by_eps.windows(2).all(|w| w[0] >= w[1]), "{by_eps:?}");
            }
        }
    }

    #[test]
    fn arity_one_is_the_classical_shape() {
        let g = inputs(Mode::Partite, 1, 0.7, 0.3, 0.1);
        for m in [10u64, 100, 1000] {
            let b = azuma_bound(&g, m);
            let et = 0.3 - (2.0 / m as f64) * 0.7;
            let classical = (-et * et * (m - 2) as f64 / (2.0 * 0.7 * 0.7)).exp();
            assert!((b.single_event - classical).abs() <= 1e-15 * classical.max(1e-300));
        }
    }

    #[test]
    fn small_sup_norm_satisfies_condition_one_immediately() {
        let partite = inputs(Mode::Partite, 2, 0.05, 0.1, 0.1);
        assert!(!azuma_bound(&partite, 1).condition_violated);
        let nonpartite = inputs(Mode::Nonpartite, 3, 0.05, 0.1, 0.1);
        assert!(azuma_bound(&nonpartite, 2).condition_violated);
        assert!(!azuma_bound(&nonpartite, 3).condition_violated);
    }

    #[test]
    fn m_pac_is_minimal_within_the_window() {
        for mode in [Mode::Partite, Mode::Nonpartite] {
            let g = inputs(mode, 2, 1.0, 0.2, 0.1);
            let r = m_pac(&g, 200_000).unwrap();
            let m0 = r.m_pac.unwrap();
            assert!(r.tail_decreasing);
            assert!(both_conditions(&azuma_bound(&g, m0)));
            assert!(!both_conditions(&azuma_bound(&g, m0 - 1)));
            assert!((m0..200_000).step_by(13).all(|m| both_conditions(&azuma_bound(&g, m))));
            assert_eq!(m_pac(&g, 2_000_000).unwrap().m_pac, Some(m0));
        }
    }

    #[test]
    fn m_pac_not_found_when_window_is_too_small() {
        let r = m_pac(&inputs(Mode::Partite, 2, 1.0, 0.2, 0.1), 500).unwrap();
        assert_eq!(r.m_pac, None);
        assert!(!r.diagnostics.is_empty());
        assert!(m_pac(&inputs(Mode::Partite, 2, 1.0, 0.2, 0.1), 0).is_err());
    }

    #[test]
    fn asymptotic_reference_values() {
        let e1 = (-1.0f64).exp();
        assert!((asymptotic_guarantee_reference(&inputs(Mode::Partite, 2, 1.0, 0.1, e1)) - 400.0).abs() < 1e-9);
        let e2 = (-2.0f64).exp();
        assert!((asymptotic_guarantee_reference(&inputs(Mode::Partite, 2, 1.0, 0.1, e2)) - 800.0).abs() < 1e-9);
        let p = asymptotic_guarantee_reference(&inputs(Mode::Partite, 2, 1.0, 0.1, 0.3));
        let n = asymptotic_guarantee_reference(&inputs(Mode::Nonpartite, 2, 1.0, 0.1, 0.3));
        assert!((n / p - 2.0).abs() < 1e-12);
    }

    #[test]
    fn learn_is_reconstruct_after_kappa() {
        let x = Sample::partite(vec![vec![0.1, 0.6, 0.3], vec![0.2, 0.9, 0.5]]).unwrap();
        let f = Hypothesis::rectangle(vec![Interval::new(0.0, 0.5), Interval::new(0.0, 0.6)]);
        let s = LabeledSample::induced(x, f).unwrap();
        let h = learn(&RectangleScheme::new(2), &s).unwrap();
        assert_eq!(h, Hypothesis::rectangle(vec![Interval::new(0.1, 0.3), Interval::new(0.2, 0.5)]));
        let empty = LabeledSample::induced(Sample::empty(Mode::Partite, 2), Hypothesis::constant(1)).unwrap();
        assert_eq!(learn(&RectangleScheme::new(2), &empty).unwrap(), Hypothesis::empty_box(2));
    }
}
