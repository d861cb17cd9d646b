//! Selection schemes `(sigma, eta, rho)` and the compression map
//! `kappa = (sigma#, eta)`.

mod builtin;
mod validity;

pub use builtin::{ConstantScheme, RectangleScheme, SumThresholdScheme, TrivialScheme};
pub use validity::{
    check_approximate_validity, check_compression_validity, CompressionReport, Tolerance, ValidityConfig,
    ValidityReport,
};

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::index::{alpha_sharp, falling_factorial, InjectionVector};
use crate::samples::io::SampleDocument;
use crate::samples::{Hypothesis, HypothesisClass, LabeledSample};
use crate::{Error, Mode, Result};

/// The size sequences `s_m` and `h_m` of a scheme.
pub trait SizeProfile: Send + Sync {
    fn selection_size(&self, m: usize) -> usize;
    fn header_size(&self, m: usize) -> usize;
}

/// Fixed `s` and `h`, with `s_m = min(s, m)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConstantSizes {
    pub s: usize,
    pub h: usize,
}

impl SizeProfile for ConstantSizes {
    fn selection_size(&self, m: usize) -> usize {
        self.s.min(m)
    }

    fn header_size(&self, _m: usize) -> usize {
        self.h
    }
}

pub trait SelectionScheme: SizeProfile {
    fn name(&self) -> &str;
    fn mode(&self) -> Mode;
    fn k(&self) -> usize;
    /// Tag of the class reconstructed hypotheses belong to.
    fn output_class(&self) -> &str;
    fn proper(&self) -> bool;

    /// `(sigma_m(x, y), eta_m(x, y))`.
    fn select(&self, sample: &LabeledSample) -> Result<(InjectionVector, usize)>;

    /// `rho_m` on a subsample of size `s_m` with a header already checked to
    /// lie in `[h_m]`.
    fn rebuild(&self, subsample: &LabeledSample, header: usize) -> Result<Hypothesis>;
}

/// The output of `kappa_m`: the selected subsample with its header.
#[derive(Debug, Clone, PartialEq)]
pub struct Compressed {
    /// Size of the sample that was compressed.
    pub m: usize,
    pub selection: InjectionVector,
    pub subsample: LabeledSample,
    pub header: usize,
}

/// Serializable form of [`Compressed`]; all that reconstruction needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressedDocument {
    pub m: usize,
    pub header: usize,
    pub selection: Vec<Vec<usize>>,
    pub subsample: SampleDocument,
}

impl Compressed {
    pub fn to_document(&self) -> Result<CompressedDocument> {
        Ok(CompressedDocument {
            m: self.m,
            header: self.header,
            selection: self.selection.maps().to_vec(),
            subsample: SampleDocument::from_sample(&self.subsample)?,
        })
    }

    pub fn from_document(doc: CompressedDocument) -> Result<Self> {
        Ok(Self {
            m: doc.m,
            selection: InjectionVector::new(doc.selection, doc.m)?,
            subsample: doc.subsample.into_sample()?,
            header: doc.header,
        })
    }
}

fn check_mode(scheme: &dyn SelectionScheme, sample: &LabeledSample) -> Result<()> {
    if scheme.mode() != sample.mode() {
        return Err(Error::ModeMismatch { expected: scheme.mode(), got: sample.mode() });
    }
    if scheme.k() != sample.k() {
        return Err(Error::ArityMismatch { expected: scheme.k(), got: sample.k() });
    }
    Ok(())
}

/// `kappa_m(x, y) = (sigma_m(x, y)^#(x, y), eta_m(x, y))`.
pub fn kappa(scheme: &dyn SelectionScheme, sample: &LabeledSample) -> Result<Compressed> {
    check_mode(scheme, sample)?;
    let m = sample.m();
    let s = scheme.selection_size(m);
    if s > m {
        return Err(Error::SizeMismatch(format!("s_m = {s} exceeds m = {m}")));
    }
    let (selection, header) = scheme.select(sample)?;
    let selection = InjectionVector::new(selection.maps().to_vec(), m)?;
    selection.check_mode(sample.mode(), sample.k())?;
    if selection.s() != s {
        return Err(Error::SizeMismatch(format!("selector returned {} indices, s_m = {s}", selection.s())));
    }
    let h = scheme.header_size(m);
    if header == 0 || header > h {
        return Err(Error::HeaderOutOfRange { header, h });
    }
    let subsample = alpha_sharp(sample, &selection)?;
    Ok(Compressed { m, selection, subsample, header })
}

/// `rho_m` applied to a compressed sample.
pub fn reconstruct(scheme: &dyn SelectionScheme, compressed: &Compressed) -> Result<Hypothesis> {
    check_mode(scheme, &compressed.subsample)?;
    let s = scheme.selection_size(compressed.m);
    if compressed.subsample.m() != s {
        return Err(Error::SizeMismatch(format!(
            "subsample of size {} but s_{} = {s}",
            compressed.subsample.m(),
            compressed.m
        )));
    }
    let h = scheme.header_size(compressed.m);
    if compressed.header == 0 || compressed.header > h {
        return Err(Error::HeaderOutOfRange { header: compressed.header, h });
    }
    scheme.rebuild(&compressed.subsample, compressed.header)
}

/// `c_S(m)` and `b_S(m) = log2 c_S(m)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompressionSize {
    /// `c_S(m)`; `None` when it overflows `f64`.
    pub size: Option<f64>,
    pub bitlength: f64,
}

/// Partite `c = h_m |Y|^{s_m^k}`, non-partite `c = h_m |Y|^{(s_m)_k}`,
/// computed in log space.
pub fn compression_size_and_bitlength(scheme: &dyn SelectionScheme, m: usize, y_size: usize) -> CompressionSize {
    let s = scheme.selection_size(m) as f64;
    let k = scheme.k();
    let exponent = match scheme.mode() {
        Mode::Partite => s.powi(k as i32),
        Mode::Nonpartite => falling_factorial(s as u64, k as u64).map_or(f64::INFINITY, |v| v as f64),
    };
    let bitlength = (scheme.header_size(m) as f64).log2() + exponent * (y_size as f64).log2();
    let size = 2f64.powf(bitlength);
    CompressionSize { size: size.is_finite().then_some(size), bitlength }
}

/// Built-in scheme by name.
pub fn builtin_scheme(name: &str, class: &HypothesisClass) -> Result<Arc<dyn SelectionScheme>> {
    let (mode, k) = (class.mode(), class.k());
    Ok(match name.trim() {
        "trivial" => Arc::new(TrivialScheme::new(class.clone())),
        "rectangle" => {
            if mode != Mode::Partite {
                return Err(Error::ModeMismatch { expected: Mode::Partite, got: mode });
            }
            Arc::new(RectangleScheme::new(k))
        }
        "sum-threshold" => {
            if mode != Mode::Nonpartite {
                return Err(Error::ModeMismatch { expected: Mode::Nonpartite, got: mode });
            }
            Arc::new(SumThresholdScheme::new(k)?)
        }
        "constant-zero" => Arc::new(ConstantScheme::new(mode, k)),
        other => return Err(Error::Parse(format!("unknown scheme `{other}`"))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samples::{Interval, Sample};

    #[test]
    fn compression_size_examples() {
        let rect = RectangleScheme::new(2);
        let c = compression_size_and_bitlength(&rect, 10, 2);
        assert_eq!((c.size, c.bitlength), (Some(32.0), 5.0));

        let sums = SumThresholdScheme::new(2).unwrap();
        let c = compression_size_and_bitlength(&sums, 10, 2);
        assert_eq!((c.size, c.bitlength), (Some(8.0), 3.0));

        let trivial = TrivialScheme::new(HypothesisClass::Rectangles { k: 2 });
        let c = compression_size_and_bitlength(&trivial, 0, 2);
        assert_eq!((c.size, c.bitlength), (Some(1.0), 0.0));
        let c = compression_size_and_bitlength(&trivial, 100, 2);
        assert_eq!((c.size, c.bitlength), (None, 10_000.0));
    }

    #[test]
    fn kappa_rejects_mode_mismatch() {
        let x = Sample::nonpartite(2, vec![0.1, 0.2]).unwrap();
        let s = LabeledSample::induced(x, Hypothesis::constant(0)).unwrap();
        assert!(kappa(&RectangleScheme::new(2), &s).is_err());
    }

    #[test]
    fn reconstruct_checks_header_and_size() {
        let x = Sample::partite(vec![vec![0.2, 0.4]; 2]).unwrap();
        let s = LabeledSample::induced(x, Hypothesis::constant(1)).unwrap();
        let scheme = RectangleScheme::new(2);
        let mut c = kappa(&scheme, &s).unwrap();
        assert_eq!(c.header, 1);
        assert_eq!(reconstruct(&scheme, &c).unwrap(), Hypothesis::rectangle(vec![Interval::new(0.2, 0.4); 2]));
        c.header = 3;
        assert!(matches!(reconstruct(&scheme, &c), Err(Error::HeaderOutOfRange { header: 3, h: 2 })));
        c.header = 1;
        c.m = 1;
        assert!(reconstruct(&scheme, &c).is_err());
    }

    #[test]
    fn builtin_lookup() {
        let rects = HypothesisClass::Rectangles { k: 2 };
        assert_eq!(builtin_scheme("rectangle", &rects).unwrap().name(), "rectangle");
        assert!(builtin_scheme("sum-threshold", &rects).is_err());
        assert!(builtin_scheme("nope", &rects).is_err());
    }
}
