use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Mode, Result};

/// Closed interval `[lo, hi]`; both endpoints count as inside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn length(&self) -> f64 {
        (self.hi - self.lo).max(0.0)
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HypothesisKind {
    Rectangle,
    SumThreshold,
    Table,
    Constant,
}

/// A lookup table over k-tuples of points; tuples not listed map to
/// `default`. Keys compare by exact bit pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableHypothesis {
    alphabet: Vec<String>,
    default: u32,
    rows: Vec<(Vec<f64>, u32)>,
}

fn bits(point: &[f64]) -> impl Iterator<Item = u64> + '_ {
    point.iter().map(|v| v.to_bits())
}

impl TableHypothesis {
    pub fn new(alphabet: Vec<String>, default: u32, mut rows: Vec<(Vec<f64>, u32)>) -> Result<Self> {
        let y = alphabet.len() as u32;
        if default >= y || rows.iter().any(|(_, l)| *l >= y) {
            return Err(Error::InvalidParameter("table label outside its alphabet".into()));
        }
        rows.sort_by(|a, b| bits(&a.0).cmp(bits(&b.0)));
        if rows.windows(2).any(|w| bits(&w[0].0).eq(bits(&w[1].0))) {
            return Err(Error::InvalidParameter("duplicate table key".into()));
        }
        Ok(Self { alphabet, default, rows })
    }

    pub fn eval(&self, point: &[f64]) -> u32 {
        self.rows.binary_search_by(|(key, _)| bits(key).cmp(bits(point))).map_or(self.default, |i| self.rows[i].1)
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }
}

/// A total labelling rule on k-tuples of points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Hypothesis {
    /// Label 1 inside the closed box, 0 outside; `bounds: None` is the empty box.
    Rectangle {
        k: usize,
        bounds: Option<Vec<Interval>>,
    },
    /// Label 1 iff the coordinates sum to at least `threshold`.
    SumThreshold {
        threshold: f64,
    },
    Table(TableHypothesis),
    Constant {
        label: u32,
    },
}

fn binary_alphabet() -> Vec<String> {
    vec!["0".to_owned(), "1".to_owned()]
}

impl Hypothesis {
    pub fn rectangle(bounds: Vec<Interval>) -> Self {
        Hypothesis::Rectangle { k: bounds.len(), bounds: Some(bounds) }
    }

    pub fn empty_box(k: usize) -> Self {
        Hypothesis::Rectangle { k, bounds: None }
    }

    pub fn sum_threshold(threshold: f64) -> Self {
        Hypothesis::SumThreshold { threshold }
    }

    pub fn constant(label: u32) -> Self {
        Hypothesis::Constant { label }
    }

    pub fn kind(&self) -> HypothesisKind {
        match self {
            Hypothesis::Rectangle { .. } => HypothesisKind::Rectangle,
            Hypothesis::SumThreshold { .. } => HypothesisKind::SumThreshold,
            Hypothesis::Table(_) => HypothesisKind::Table,
            Hypothesis::Constant { .. } => HypothesisKind::Constant,
        }
    }

    pub fn eval(&self, point: &[f64]) -> u32 {
        match self {
            Hypothesis::Rectangle { bounds: None, .. } => 0,
            Hypothesis::Rectangle { bounds: Some(b), .. } => {
                u32::from(b.iter().zip(point).all(|(iv, &v)| iv.contains(v)))
            }
            Hypothesis::SumThreshold { threshold } => u32::from(point.iter().sum::<f64>() >= *threshold),
            Hypothesis::Table(t) => t.eval(point),
            Hypothesis::Constant { label } => *label,
        }
    }

    pub fn alphabet(&self) -> Vec<String> {
        match self {
            Hypothesis::Table(t) => t.alphabet.clone(),
            Hypothesis::Constant { label } if *label > 1 => (0..=*label).map(|c| c.to_string()).collect(),
            _ => binary_alphabet(),
        }
    }

    /// The hypothesis as a (possibly empty or full) box, when it is one.
    /// `Some(None)` is the empty box.
    pub fn as_box(&self, k: usize) -> Option<Option<Vec<Interval>>> {
        match self {
            Hypothesis::Rectangle { k: hk, bounds } if *hk == k => Some(bounds.clone()),
            Hypothesis::Constant { label: 0 } => Some(None),
            Hypothesis::Constant { label: 1 } => Some(Some(vec![Interval::new(f64::NEG_INFINITY, f64::INFINITY); k])),
            _ => None,
        }
    }

    /// The hypothesis as a sum threshold, when it is one. Constants map to
    /// `±inf`.
    pub fn as_threshold(&self) -> Option<f64> {
        match self {
            Hypothesis::SumThreshold { threshold } => Some(*threshold),
            Hypothesis::Constant { label: 0 } => Some(f64::INFINITY),
            Hypothesis::Constant { label: 1 } => Some(f64::NEG_INFINITY),
            _ => None,
        }
    }

    /// Short human-readable description for reports.
    pub fn summary(&self) -> String {
        match self {
            Hypothesis::Rectangle { bounds: None, .. } => "empty box".to_owned(),
            Hypothesis::Rectangle { bounds: Some(b), .. } => {
                b.iter().map(|iv| format!("[{}, {}]", iv.lo, iv.hi)).collect::<Vec<_>>().join(" x ")
            }
            Hypothesis::SumThreshold { threshold } => format!("sum >= {threshold}"),
            Hypothesis::Table(t) => format!("table with {} rows", t.rows.len()),
            Hypothesis::Constant { label } => format!("constant {label}"),
        }
    }
}

/// The built-in hypothesis classes.
#[derive(Debug, Clone, PartialEq)]
pub enum HypothesisClass {
    /// Axis-aligned closed boxes in `[0,1]^k`, partite.
    Rectangles { k: usize },
    /// `x_1 + ... + x_k >= t`, non-partite.
    SumThresholds { k: usize },
    /// An explicit finite list.
    Finite { mode: Mode, k: usize, members: Vec<Hypothesis> },
}

impl HypothesisClass {
    pub fn mode(&self) -> Mode {
        match self {
            HypothesisClass::Rectangles { .. } => Mode::Partite,
            HypothesisClass::SumThresholds { .. } => Mode::Nonpartite,
            HypothesisClass::Finite { mode, .. } => *mode,
        }
    }

    pub fn k(&self) -> usize {
        match self {
            HypothesisClass::Rectangles { k }
            | HypothesisClass::SumThresholds { k }
            | HypothesisClass::Finite { k, .. } => *k,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            HypothesisClass::Rectangles { .. } => "rectangle",
            HypothesisClass::SumThresholds { .. } => "sum-threshold",
            HypothesisClass::Finite { .. } => "finite",
        }
    }

    pub fn contains(&self, h: &Hypothesis) -> bool {
        match self {
            HypothesisClass::Rectangles { k } => match h {
                Hypothesis::Rectangle { k: hk, .. } => hk == k,
                Hypothesis::Constant { label } => *label <= 1,
                _ => false,
            },
            HypothesisClass::SumThresholds { .. } => h.as_threshold().is_some(),
            HypothesisClass::Finite { members, .. } => members.contains(h),
        }
    }

    /// Draws a member: rectangle corners uniform on `[0,1]` and sorted per
    /// side; thresholds uniform on `[0, k]`; finite classes uniformly.
    pub fn sample_member<R: Rng + ?Sized>(&self, rng: &mut R) -> Hypothesis {
        match self {
            HypothesisClass::Rectangles { k } => Hypothesis::rectangle(
                (0..*k)
                    .map(|_| {
                        let (a, b): (f64, f64) = (rng.gen(), rng.gen());
                        Interval::new(a.min(b), a.max(b))
                    })
                    .collect(),
            ),
            HypothesisClass::SumThresholds { k } => Hypothesis::sum_threshold(rng.gen::<f64>() * *k as f64),
            HypothesisClass::Finite { members, .. } => members[rng.gen_range(0..members.len())].clone(),
        }
    }

    pub fn parse(name: &str, mode: Mode, k: usize) -> Result<Self> {
        let class = match name.trim() {
            "rectangle" | "rectangles" => HypothesisClass::Rectangles { k },
            "sum-threshold" => HypothesisClass::SumThresholds { k },
            other => return Err(Error::Parse(format!("unknown class `{other}`"))),
        };
        if class.mode() != mode {
            return Err(Error::ModeMismatch { expected: class.mode(), got: mode });
        }
        Ok(class)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn closed_rectangle() {
        let h = Hypothesis::rectangle(vec![Interval::new(0.2, 0.4), Interval::new(0.1, 0.3)]);
        assert_eq!(h.eval(&[0.2, 0.3]), 1);
        assert_eq!(h.eval(&[0.41, 0.2]), 0);
        assert_eq!(Hypothesis::empty_box(2).eval(&[0.3, 0.2]), 0);
    }

    #[test]
    fn sum_threshold_boundary() {
        let h = Hypothesis::sum_threshold(0.75);
        assert_eq!(h.eval(&[0.4, 0.4]), 1);
        assert_eq!(h.eval(&[0.3, 0.45]), 1);
        assert_eq!(h.eval(&[0.3, 0.4]), 0);
    }

    #[test]
    fn table_lookup() {
        let t = TableHypothesis::new(
            vec!["a".into(), "b".into(), "c".into()],
            0,
            vec![(vec![1.0, 2.0], 2), (vec![2.0, 1.0], 1)],
        )
        .unwrap();
        let h = Hypothesis::Table(t);
        assert_eq!(h.eval(&[1.0, 2.0]), 2);
        assert_eq!(h.eval(&[2.0, 1.0]), 1);
        assert_eq!(h.eval(&[2.0, 2.0]), 0);
        assert_eq!(h.alphabet().len(), 3);
        assert!(TableHypothesis::new(vec!["a".into()], 1, vec![]).is_err());
        assert!(TableHypothesis::new(vec!["a".into()], 0, vec![(vec![1.0], 0), (vec![1.0], 0)]).is_err());
    }

    #[test]
    fn membership() {
        let rects = HypothesisClass::Rectangles { k: 2 };
        assert!(rects.contains(&Hypothesis::empty_box(2)));
        assert!(!rects.contains(&Hypothesis::empty_box(3)));
        assert!(!rects.contains(&Hypothesis::sum_threshold(1.0)));
        let sums = HypothesisClass::SumThresholds { k: 2 };
        assert!(sums.contains(&Hypothesis::constant(0)));
        assert!(!sums.contains(&Hypothesis::empty_box(2)));
    }

    #[test]
    fn sampled_members_belong() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for class in [HypothesisClass::Rectangles { k: 3 }, HypothesisClass::SumThresholds { k: 2 }] {
            for _ in 0..50 {
                assert!(class.contains(&class.sample_member(&mut rng)));
            }
        }
    }

    #[test]
    fn json_shape() {
        let h = Hypothesis::rectangle(vec![Interval::new(0.0, 0.5)]);
        let s = serde_json::to_string(&h).unwrap();
        assert_eq!(s, r#"{"kind":"rectangle","k":1,"bounds":[{"lo":0.0,"hi":0.5}]}"#);
        assert_eq!(serde_json::from_str::<Hypothesis>(&s).unwrap(), h);
    }
}
