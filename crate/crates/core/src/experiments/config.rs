//! Flat `key = value` experiment configs.
//!
//! ```text
//! # rectangle scheme, partite
//! mode = partite
//! k = 2
//! scheme = rectangle
//! class = rectangle
//! epsilon = 0.1, 0.2
//! m_values = 50, 200, mpac, 2*mpac
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::learner::DEFAULT_SCAN_LIMIT;
use crate::losses::LossSpec;
use crate::samples::{Hypothesis, HypothesisClass, Interval, ProductMeasure};
use crate::schemes::{builtin_scheme, SelectionScheme};
use crate::{Error, Mode, Result};

/// A sample size, fixed or as a multiple of `m_pac(epsilon, delta)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum MSpec {
    Fixed(u64),
    PacMultiple(u64),
}

impl fmt::Display for MSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MSpec::Fixed(m) => write!(f, "{m}"),
            MSpec::PacMultiple(1) => f.write_str("mpac"),
            MSpec::PacMultiple(c) => write!(f, "{c}*mpac"),
        }
    }
}

impl FromStr for MSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "mpac" {
            return Ok(MSpec::PacMultiple(1));
        }
        if let Some(c) = s.strip_suffix("*mpac") {
            return match c.trim().parse() {
                Ok(c) if c > 0 => Ok(MSpec::PacMultiple(c)),
                _ => Err(Error::Parse(format!("bad multiple in `{s}`"))),
            };
        }
        s.parse().map(MSpec::Fixed).map_err(|_| Error::Parse(format!("bad sample size `{s}`")))
    }
}

impl From<MSpec> for String {
    fn from(m: MSpec) -> String {
        m.to_string()
    }
}

impl TryFrom<String> for MSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// How total loss is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Estimator {
    Exact,
    MonteCarlo(u64),
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Estimator::Exact => f.write_str("exact"),
            Estimator::MonteCarlo(n) => write!(f, "monte-carlo:{n}"),
        }
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "exact" {
            return Ok(Estimator::Exact);
        }
        match s.strip_prefix("monte-carlo:").map(|n| n.trim().parse::<u64>()) {
            Some(Ok(n)) if n > 0 => Ok(Estimator::MonteCarlo(n)),
            _ => Err(Error::Parse(format!("bad estimator `{s}` (exact | monte-carlo:N)"))),
        }
    }
}

impl From<Estimator> for String {
    fn from(e: Estimator) -> String {
        e.to_string()
    }
}

impl TryFrom<String> for Estimator {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Which fixed selection the concentration experiment uses at each `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SigmaChoice {
    /// The last `s_m` indices on every side.
    Top,
    /// One random injection (and header) per `m`, shared by all trials.
    Random,
}

impl FromStr for SigmaChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "top" => Ok(SigmaChoice::Top),
            "random" => Ok(SigmaChoice::Random),
            other => Err(Error::Parse(format!("bad sigma `{other}` (top | random)"))),
        }
    }
}

/// The labelling function of a concentration run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum TargetSpec {
    /// Drawn from the class with the master seed.
    Random,
    Fixed(Hypothesis),
}

impl fmt::Display for TargetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetSpec::Random => f.write_str("random"),
            TargetSpec::Fixed(Hypothesis::Rectangle { bounds: None, .. }) => f.write_str("empty"),
            TargetSpec::Fixed(Hypothesis::Rectangle { bounds: Some(b), .. }) => {
                let sides: Vec<String> = b.iter().map(|iv| format!("{}:{}", iv.lo, iv.hi)).collect();
                write!(f, "rectangle({})", sides.join("; "))
            }
            TargetSpec::Fixed(Hypothesis::SumThreshold { threshold }) => write!(f, "sum-threshold({threshold})"),
            TargetSpec::Fixed(Hypothesis::Constant { label }) => write!(f, "constant({label})"),
            TargetSpec::Fixed(h) => f.write_str(&h.summary()),
        }
    }
}

fn parse_args(s: &str, head: &str) -> Option<String> {
    s.strip_prefix(head)?.trim().strip_prefix('(')?.strip_suffix(')').map(str::to_owned)
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::Parse(format!("bad number `{}`", s.trim())))
}

impl FromStr for TargetSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "random" {
            return Ok(TargetSpec::Random);
        }
        if let Some(args) = parse_args(s, "rectangle") {
            let bounds = args
                .split(';')
                .map(|side| {
                    let (lo, hi) =
                        side.split_once(':').ok_or_else(|| Error::Parse(format!("bad interval `{}`", side.trim())))?;
                    Ok(Interval::new(parse_f64(lo)?, parse_f64(hi)?))
                })
                .collect::<Result<Vec<_>>>()?;
            return Ok(TargetSpec::Fixed(Hypothesis::rectangle(bounds)));
        }
        if let Some(args) = parse_args(s, "sum-threshold") {
            return Ok(TargetSpec::Fixed(Hypothesis::sum_threshold(parse_f64(&args)?)));
        }
        if let Some(args) = parse_args(s, "constant") {
            let label = args.trim().parse().map_err(|_| Error::Parse(format!("bad label `{args}`")))?;
            return Ok(TargetSpec::Fixed(Hypothesis::constant(label)));
        }
        Err(Error::Parse(format!("bad target `{s}`")))
    }
}

impl From<TargetSpec> for String {
    fn from(t: TargetSpec) -> String {
        t.to_string()
    }
}

impl TryFrom<String> for TargetSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub k: usize,
    pub scheme: String,
    pub class: String,
    pub measure: String,
    pub loss: String,
    pub epsilon: Vec<f64>,
    pub delta: Vec<f64>,
    pub m_values: Vec<MSpec>,
    pub trials: usize,
    pub estimator: Estimator,
    pub seed: u64,
    /// Destination directory; not part of the echoed config, so reruns into
    /// different directories produce identical manifests.
    #[serde(skip)]
    pub output: Option<PathBuf>,
    pub sigma: SigmaChoice,
    pub eta: usize,
    pub target: TargetSpec,
    /// 0 is the canonical order choice, `j > 0` the `j`-th random one.
    pub order_choice: u64,
    /// Random order choices per sample in scheme validation.
    pub order_choices: usize,
    pub scan_limit: u64,
    pub fail_fast: bool,
    /// Constant tolerance for approximate validity; exact when absent.
    pub approx_eps: Option<f64>,
}

pub const KEYS: &[&str] = &[
    "mode",
    "k",
    "scheme",
    "class",
    "measure",
    "loss",
    "epsilon",
    "delta",
    "m_values",
    "trials",
    "estimator",
    "seed",
    "output",
    "sigma",
    "eta",
    "target",
    "order_choice",
    "order_choices",
    "scan_limit",
    "fail_fast",
    "approx_eps",
];

fn list<T>(key: &str, v: &str, item: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    v.split(',').map(|s| item(s.trim()).map_err(|e| Error::Parse(format!("{key}: {e}")))).collect()
}

fn scalar<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Parse(format!("{key}: cannot parse `{v}`")))
}

impl ExperimentConfig {
    /// Defaults for everything but the four required keys.
    pub fn new(mode: Mode, k: usize, scheme: &str, class: &str) -> Self {
        Self {
            mode,
            k,
            scheme: scheme.into(),
            class: class.into(),
            measure: "uniform".into(),
            loss: "zero-one".into(),
            epsilon: vec![0.1],
            delta: vec![0.1],
            m_values: Vec::new(),
            trials: 100,
            estimator: Estimator::Exact,
            seed: 0,
            output: None,
            sigma: SigmaChoice::Top,
            eta: 1,
            target: TargetSpec::Random,
            order_choice: 0,
            order_choices: 5,
            scan_limit: DEFAULT_SCAN_LIMIT,
            fail_fast: false,
            approx_eps: None,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs: Vec<(String, String)> = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) =
                line.split_once('=').ok_or_else(|| Error::Parse(format!("line {}: expected `key = value`", n + 1)))?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(Error::Parse(format!("unknown key `{key}`")));
            }
            if pairs.iter().any(|(k, _)| k == key) {
                return Err(Error::Parse(format!("duplicate key `{key}`")));
            }
            pairs.push((key.to_owned(), value.trim().to_owned()));
        }
        let get = |key: &str| pairs.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str());
        let required = |key: &str| get(key).ok_or_else(|| Error::Parse(format!("missing key `{key}`")));

        let mut c = Self::new(
            scalar("mode", required("mode")?)?,
            scalar("k", required("k")?)?,
            required("scheme")?,
            required("class")?,
        );
        for (key, v) in &pairs {
            let v = v.as_str();
            match key.as_str() {
                "measure" => c.measure = v.into(),
                "loss" => c.loss = v.into(),
                "epsilon" => c.epsilon = list(key, v, parse_f64)?,
                "delta" => c.delta = list(key, v, parse_f64)?,
                "m_values" => c.m_values = list(key, v, str::parse)?,
                "trials" => c.trials = scalar(key, v)?,
                "estimator" => c.estimator = v.parse()?,
                "seed" => c.seed = scalar(key, v)?,
                "output" => c.output = Some(PathBuf::from(v)),
                "sigma" => c.sigma = v.parse()?,
                "eta" => c.eta = scalar(key, v)?,
                "target" => c.target = v.parse()?,
                "order_choice" => c.order_choice = scalar(key, v)?,
                "order_choices" => c.order_choices = scalar(key, v)?,
                "scan_limit" => c.scan_limit = scalar(key, v)?,
                "fail_fast" => c.fail_fast = scalar(key, v)?,
                "approx_eps" => c.approx_eps = Some(parse_f64(v)?),
                _ => {}
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Parse("k: must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(Error::Parse("trials: must be at least 1".into()));
        }
        if self.eta == 0 {
            return Err(Error::Parse("eta: headers start at 1".into()));
        }
        for &e in &self.epsilon {
            if !(e > 0.0 && e < 1.0) {
                return Err(Error::Parse(format!("epsilon: {e} is not in (0, 1)")));
            }
        }
        for &d in &self.delta {
            if !(d > 0.0 && d < 1.0) {
                return Err(Error::Parse(format!("delta: {d} is not in (0, 1)")));
            }
        }
        if self.mode == Mode::Nonpartite {
            for m in &self.m_values {
                if let MSpec::Fixed(m) = m {
                    if *m < self.k as u64 {
                        return Err(Error::Parse(format!("m_values: {m} < k = {} in non-partite mode", self.k)));
                    }
                }
            }
        }
        if let Some(e) = self.approx_eps {
            if e.is_nan() || e < 0.0 {
                return Err(Error::Parse(format!("approx_eps: {e} is negative")));
            }
        }
        Ok(())
    }

    pub fn resolve(&self) -> Result<Resolved> {
        let class = HypothesisClass::parse(&self.class, self.mode, self.k)?;
        let scheme = builtin_scheme(&self.scheme, &class)?;
        let measure = ProductMeasure::parse(&self.measure, self.mode, self.k)?;
        let loss = LossSpec::parse(&self.loss, self.mode)?;
        Ok(Resolved { class, scheme, measure, loss })
    }
}

/// The library objects a config names.
#[derive(Clone)]
pub struct Resolved {
    pub class: HypothesisClass,
    pub scheme: Arc<dyn SelectionScheme>,
    pub measure: ProductMeasure,
    pub loss: LossSpec,
}
