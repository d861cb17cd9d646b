//! JSON form of a labelled sample:
//! `{"mode", "k", "m", "Y", "points", "labels"}` with `points` one array per
//! side (a single array in non-partite mode) and `labels` the row-major
//! tensor with `"·"` in every unlabelled cell.

use serde::{Deserialize, Serialize};

use crate::index::{LabelTensor, SENTINEL};
use crate::samples::{LabeledSample, Sample};
use crate::{Error, Mode, Result};

pub const SENTINEL_SYMBOL: &str = "·";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleDocument {
    pub mode: Mode,
    pub k: usize,
    pub m: usize,
    #[serde(rename = "Y")]
    pub alphabet: Vec<String>,
    pub points: Vec<Vec<f64>>,
    pub labels: Vec<String>,
}

impl SampleDocument {
    pub fn from_sample(sample: &LabeledSample) -> Result<Self> {
        let y = sample.tensor()?;
        let labels = y
            .cells()
            .iter()
            .map(|&c| if c == SENTINEL { SENTINEL_SYMBOL.to_owned() } else { y.alphabet()[c as usize].clone() })
            .collect();
        Ok(Self {
            mode: sample.mode(),
            k: sample.k(),
            m: sample.m(),
            alphabet: y.alphabet().to_vec(),
            points: sample.x().sides().to_vec(),
            labels,
        })
    }

    pub fn into_sample(self) -> Result<LabeledSample> {
        if self.alphabet.iter().any(|s| s == SENTINEL_SYMBOL) {
            return Err(Error::Parse(format!("`{SENTINEL_SYMBOL}` is reserved")));
        }
        let x = Sample::from_parts(self.mode, self.k, self.points)?;
        if x.m() != self.m {
            return Err(Error::SizeMismatch(format!("m = {} but points have {} entries", self.m, x.m())));
        }
        let cells = self
            .labels
            .iter()
            .map(|s| {
                if s == SENTINEL_SYMBOL {
                    Ok(SENTINEL)
                } else {
                    self.alphabet
                        .iter()
                        .position(|a| a == s)
                        .map(|p| p as u32)
                        .ok_or_else(|| Error::Parse(format!("label `{s}` is not in Y")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let y = LabelTensor::from_cells(self.mode, self.k, self.m, self.alphabet, cells)?;
        LabeledSample::dense(x, y)
    }
}

pub fn to_json(sample: &LabeledSample) -> Result<String> {
    Ok(serde_json::to_string(&SampleDocument::from_sample(sample)?)?)
}

pub fn from_json(text: &str) -> Result<LabeledSample> {
    serde_json::from_str::<SampleDocument>(text)?.into_sample()
}
