use rand::distributions::{Distribution as _, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::samples::Sample;
use crate::{Error, Mode, Result};

const PMF_TOLERANCE: f64 = 1e-12;

/// A distribution on one side's point space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Distribution {
    /// Uniform on `[0, 1)`.
    Uniform,
    Discrete {
        support: Vec<f64>,
        weights: Vec<f64>,
    },
}

impl Distribution {
    pub fn discrete(support: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let d = Distribution::Discrete { support, weights };
        d.validate()?;
        Ok(d)
    }

    pub fn point_mass(v: f64) -> Self {
        Distribution::Discrete { support: vec![v], weights: vec![1.0] }
    }

    fn validate(&self) -> Result<()> {
        if let Distribution::Discrete { support, weights } = self {
            if support.is_empty() || support.len() != weights.len() {
                return Err(Error::InvalidMeasure("support and weights must be non-empty and of equal length".into()));
            }
            if weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
                return Err(Error::InvalidMeasure("negative or non-finite weight".into()));
            }
            let total: f64 = weights.iter().sum();
            if (total - 1.0).abs() > PMF_TOLERANCE {
                return Err(Error::InvalidMeasure(format!("weights sum to {total}, not 1")));
            }
        }
        Ok(())
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self, Distribution::Uniform)
    }

    fn sampler(&self) -> Sampler<'_> {
        match self {
            Distribution::Uniform => Sampler::Uniform,
            Distribution::Discrete { support, weights } => {
                Sampler::Discrete(support, WeightedIndex::new(weights).expect("weights validated on construction"))
            }
        }
    }

    /// Parses `uniform` or `discrete(v:w; v:w; ...)`.
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        if spec == "uniform" {
            return Ok(Distribution::Uniform);
        }
        let inner = spec
            .strip_prefix("discrete(")
            .and_then(|s| s.strip_suffix(')'))
            .ok_or_else(|| Error::Parse(format!("unknown distribution `{spec}`")))?;
        let mut support = Vec::new();
        let mut weights = Vec::new();
        for atom in inner.split(';').map(str::trim).filter(|a| !a.is_empty()) {
            let (v, w) =
                atom.split_once(':').ok_or_else(|| Error::Parse(format!("atom `{atom}` is not `value:weight`")))?;
            let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("`{s}`: {e}")));
            support.push(parse(v)?);
            weights.push(parse(w)?);
        }
        Self::discrete(support, weights)
    }
}

enum Sampler<'a> {
    Uniform,
    Discrete(&'a [f64], WeightedIndex<f64>),
}

impl Sampler<'_> {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Sampler::Uniform => rng.gen::<f64>(),
            Sampler::Discrete(support, index) => support[index.sample(rng)],
        }
    }
}

/// `k` per-side distributions (partite) or one distribution (non-partite).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductMeasure {
    mode: Mode,
    k: usize,
    sides: Vec<Distribution>,
}

impl ProductMeasure {
    pub fn partite(sides: Vec<Distribution>) -> Result<Self> {
        if sides.is_empty() {
            return Err(Error::InvalidMeasure("a partite measure needs k >= 1 sides".into()));
        }
        for d in &sides {
            d.validate()?;
        }
        Ok(Self { mode: Mode::Partite, k: sides.len(), sides })
    }

    pub fn nonpartite(k: usize, mu: Distribution) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidMeasure("arity must be at least 1".into()));
        }
        mu.validate()?;
        Ok(Self { mode: Mode::Nonpartite, k, sides: vec![mu] })
    }

    pub fn uniform(mode: Mode, k: usize) -> Result<Self> {
        match mode {
            Mode::Partite => Self::partite(vec![Distribution::Uniform; k]),
            Mode::Nonpartite => Self::nonpartite(k, Distribution::Uniform),
        }
    }

    /// Parses one distribution spec applied to every side, or `|`-separated
    /// per-side specs in partite mode.
    pub fn parse(spec: &str, mode: Mode, k: usize) -> Result<Self> {
        let parts: Vec<Distribution> = spec.split('|').map(Distribution::parse).collect::<Result<_>>()?;
        match (mode, parts.len()) {
            (Mode::Partite, 1) => Self::partite(vec![parts[0].clone(); k]),
            (Mode::Partite, n) if n == k => Self::partite(parts),
            (Mode::Nonpartite, 1) => Self::nonpartite(k, parts[0].clone()),
            (_, n) => Err(Error::InvalidMeasure(format!("{n} side specs for {mode} arity {k}"))),
        }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn sides(&self) -> &[Distribution] {
        &self.sides
    }

    /// The distribution of coordinate `i` of a random k-tuple.
    pub fn coordinate(&self, i: usize) -> &Distribution {
        match self.mode {
            Mode::Partite => &self.sides[i],
            Mode::Nonpartite => &self.sides[0],
        }
    }

    pub fn is_uniform(&self) -> bool {
        self.sides.iter().all(Distribution::is_uniform)
    }

    /// One random k-tuple of points (`x ~ mu_1 x ... x mu_k`, or `mu^k`).
    pub fn draw_tuple<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.coordinate(i).sampler().draw(rng);
        }
    }
}

/// Purposes of independent random streams derived from one seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Points { side: u64 },
    Hypothesis,
    Selection,
    OrderChoice { index: u64 },
    MonteCarlo,
}

impl Stream {
    fn words(self) -> [u64; 2] {
        match self {
            Stream::Points { side } => [1, side],
            Stream::Hypothesis => [2, 0],
            Stream::Selection => [3, 0],
            Stream::OrderChoice { index } => [4, index],
            Stream::MonteCarlo => [5, 0],
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a master seed with a path of counters into a child seed.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(master), |acc, &w| splitmix64(acc ^ splitmix64(w)))
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, &stream.words()))
}

/// `x ~ mu^m`. Side `i` reads its own stream, so point `(i, v)` depends only
/// on `(seed, i, v)`.
pub fn draw_sample(mu: &ProductMeasure, m: usize, seed: u64) -> Sample {
    let sides = mu
        .sides
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let mut rng = stream_rng(seed, Stream::Points { side: i as u64 });
            let sampler = d.sampler();
            (0..m).map(|_| sampler.draw(&mut rng)).collect()
        })
        .collect();
    Sample::from_parts(mu.mode, mu.k, sides).expect("measure shape matches sample shape")
}
