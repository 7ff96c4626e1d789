//! Gaussianity tests for an ensemble of records: bicoherence-based Hinich
//! test, average excess kurtosis, and histograms.

pub mod chi2;
pub mod histogram;
pub mod moments;
pub mod spectra;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use chi2::chi2_survival;
pub use histogram::{histogram, Histogram, DEFAULT_BINS};
pub use moments::{excess_kurtosis, kurtosis_mode, third_cumulant, KurtosisMode};
pub use spectra::{
    bicoherence, bispectrum_direct, hinich_test, power_spectrum, principal_domain, spectra,
    BicoherenceGrid, BicoherencePoint, BispectrumEstimate, HinichResult, MIN_FRAMES,
};

pub const DEFAULT_FFT_LEN: usize = 64;

/// `R` records of equal length `N`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    len: usize,
    values: Vec<f64>,
}

impl Ensemble {
    pub fn new(records: Vec<Vec<f64>>) -> Result<Self> {
        let len = records.first().map(Vec::len).unwrap_or(0);
        let mut values = Vec::with_capacity(len * records.len());
        for (r, rec) in records.into_iter().enumerate() {
            if rec.len() != len {
                return Err(Error::Dimension {
                    expected: len,
                    got: rec.len(),
                }
                .context(format!("record {r}")));
            }
            values.extend(rec);
        }
        Ensemble::from_flat(len, values)
    }

    /// Build from concatenated records of length `len`.
    pub fn from_flat(len: usize, values: Vec<f64>) -> Result<Self> {
        if len == 0 || values.is_empty() {
            return Err(Error::Config("ensemble needs at least one non-empty record".into()));
        }
        if values.len() % len != 0 {
            return Err(Error::Dimension {
                expected: len * (values.len() / len + 1),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Degenerate("non-finite value in ensemble".into()));
        }
        Ok(Ensemble { len, values })
    }

    /// Cut one long record into consecutive non-overlapping frames of
    /// `frame_len` samples; a trailing partial frame is dropped.
    pub fn from_segments(record: &[f64], frame_len: usize) -> Result<Self> {
        if frame_len == 0 {
            return Err(Error::Config("frame length must be positive".into()));
        }
        let frames = record.len() / frame_len;
        if frames == 0 {
            return Err(Error::InsufficientFrames { got: 0, min: 1 });
        }
        Ensemble::from_flat(frame_len, record[..frames * frame_len].to_vec())
    }

    pub fn replications(&self) -> usize {
        self.values.len() / self.len
    }

    pub fn record_len(&self) -> usize {
        self.len
    }

    pub fn record(&self, r: usize) -> &[f64] {
        &self.values[r * self.len..(r + 1) * self.len]
    }

    pub fn records(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.len)
    }

    /// All samples, record after record.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn is_constant_records(&self) -> bool {
        self.records()
            .all(|rec| rec.iter().all(|v| *v == rec[0]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    pub fft_len: usize,
    pub bins: usize,
    pub hist_range: Option<(f64, f64)>,
}

impl Default for TestConfig {
    fn default() -> Self {
        TestConfig {
            fft_len: DEFAULT_FFT_LEN,
            bins: DEFAULT_BINS,
            hist_range: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianityReport {
    /// `None` when there are too few frames for the bicoherence test.
    pub hinich: Option<HinichResult>,
    pub avg_kurtosis: f64,
    pub kurtosis_mode: KurtosisMode,
    pub histogram: Histogram,
    pub fft_len: usize,
    pub frames: usize,
    pub replications: usize,
    pub notes: Vec<String>,
}

impl GaussianityReport {
    pub fn pfa(&self) -> Option<f64> {
        self.hinich.map(|h| h.pfa)
    }
}

/// Run the full battery on an ensemble. Each record is one bispectral frame.
/// With fewer than [`MIN_FRAMES`] records the Hinich part is skipped and
/// noted; callers that need it should check [`GaussianityReport::hinich`].
pub fn assess(ens: &Ensemble, cfg: &TestConfig) -> Result<(GaussianityReport, Option<BicoherenceGrid>)> {
    battery(ens, ens, cfg)
}

/// Single long record: the bicoherence test runs on consecutive frames of
/// `cfg.fft_len` samples, kurtosis and histogram on the whole record.
pub fn assess_record(
    record: &[f64],
    cfg: &TestConfig,
) -> Result<(GaussianityReport, Option<BicoherenceGrid>)> {
    let whole = Ensemble::from_flat(record.len(), record.to_vec())?;
    let frames = Ensemble::from_segments(record, cfg.fft_len).map_err(|e| match e {
        Error::InsufficientFrames { got, .. } => Error::InsufficientFrames {
            got,
            min: MIN_FRAMES,
        },
        other => other,
    })?;
    battery(&frames, &whole, cfg)
}

fn battery(
    framed: &Ensemble,
    ens: &Ensemble,
    cfg: &TestConfig,
) -> Result<(GaussianityReport, Option<BicoherenceGrid>)> {
    if ens.is_constant_records() {
        return Err(Error::Degenerate("every record has zero variance".into()));
    }
    let mut notes = Vec::new();
    let frames = framed.replications();

    let (hinich, grid) = if frames >= MIN_FRAMES {
        let (bisp, power) = spectra(framed, cfg.fft_len)?;
        let grid = bicoherence(&bisp, &power)?;
        if !grid.excluded.is_empty() {
            notes.push(format!(
                "{} bifrequencies excluded for vanishing power",
                grid.excluded.len()
            ));
        }
        (Some(hinich_test(&grid, frames)?), Some(grid))
    } else {
        notes.push(format!(
            "bicoherence test skipped: {frames} frame(s), need at least {MIN_FRAMES}"
        ));
        (None, None)
    };

    let kurtosis_mode = kurtosis_mode(ens)?;
    if kurtosis_mode == KurtosisMode::SingleRecord {
        notes.push("single record: kurtosis taken across samples, not per index".into());
    }
    let avg_kurtosis = excess_kurtosis(ens)?;
    let histogram = histogram(ens.values(), cfg.bins, cfg.hist_range)?;

    Ok((
        GaussianityReport {
            hinich,
            avg_kurtosis,
            kurtosis_mode,
            histogram,
            fft_len: cfg.fft_len,
            frames,
            replications: ens.replications(),
            notes,
        },
        grid,
    ))
}
