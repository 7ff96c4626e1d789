//! Frame-averaged power spectrum, direct bispectrum estimate, squared
//! bicoherence and the Hinich chi-squared Gaussianity test.
//!
//! Every record of an [`Ensemble`] is one frame: its mean is removed, it is
//! zero-padded to the FFT length `M`, and the averages run over frames in
//! ascending order so results do not depend on thread scheduling.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::chi2::chi2_survival;
use super::Ensemble;
use crate::error::{Error, Result};

/// Fewer frames than this make the chi-squared approximation meaningless.
pub const MIN_FRAMES: usize = 8;

/// Smallest FFT length accepted.
pub const MIN_FFT_LEN: usize = 8;

/// Bifrequencies whose power-spectrum triple product falls below this are
/// dropped from the principal domain.
pub const DENOMINATOR_FLOOR: f64 = 1e-30;

fn check_fft_len(fft_len: usize, record_len: usize) -> Result<()> {
    if fft_len < MIN_FFT_LEN || fft_len % 2 != 0 {
        return Err(Error::Config(format!(
            "FFT length must be even and >= {MIN_FFT_LEN}, got {fft_len}"
        )));
    }
    if record_len > fft_len {
        return Err(Error::Config(format!(
            "record length {record_len} exceeds FFT length {fft_len}"
        )));
    }
    Ok(())
}

/// Mean-removed, zero-padded DFT of every record.
fn frame_spectra(ens: &Ensemble, fft_len: usize) -> Result<Vec<Vec<Complex64>>> {
    check_fft_len(fft_len, ens.record_len())?;
    if ens.replications() < MIN_FRAMES {
        return Err(Error::InsufficientFrames {
            got: ens.replications(),
            min: MIN_FRAMES,
        });
    }
    let fft = FftPlanner::<f64>::new().plan_fft_forward(fft_len);
    let spectra = (0..ens.replications())
        .into_par_iter()
        .map(|r| {
            let rec = ens.record(r);
            let mean = rec.iter().sum::<f64>() / rec.len() as f64;
            let mut buf = vec![Complex64::new(0.0, 0.0); fft_len];
            for (b, v) in buf.iter_mut().zip(rec) {
                b.re = v - mean;
            }
            fft.process(&mut buf);
            buf
        })
        .collect();
    Ok(spectra)
}

/// Averaged triple products `Ŝ₃(j,k) = ⟨X(j) X(k) X*(j+k)⟩` for
/// `0 ≤ j, k ≤ M/2`.
#[derive(Debug, Clone)]
pub struct BispectrumEstimate {
    fft_len: usize,
    frames: usize,
    values: Vec<Complex64>,
}

impl BispectrumEstimate {
    pub fn fft_len(&self) -> usize {
        self.fft_len
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    /// Grid side `M/2 + 1`.
    pub fn side(&self) -> usize {
        self.fft_len / 2 + 1
    }

    pub fn get(&self, j: usize, k: usize) -> Complex64 {
        self.values[j * self.side() + k]
    }

    /// Location and magnitude of the largest `|Ŝ₃|` over `j, k ≥ 1`.
    pub fn peak(&self) -> (usize, usize, f64) {
        let side = self.side();
        let mut best = (0, 0, -1.0);
        for j in 1..side {
            for k in 1..=j {
                let m = self.get(j, k).norm();
                if m > best.2 {
                    best = (j, k, m);
                }
            }
        }
        best
    }
}

fn accumulate_bispectrum(spectra: &[Vec<Complex64>], fft_len: usize) -> BispectrumEstimate {
    let side = fft_len / 2 + 1;
    let mut values = vec![Complex64::new(0.0, 0.0); side * side];
    for x in spectra {
        for j in 0..side {
            for k in 0..=j {
                values[j * side + k] += x[j] * x[k] * x[(j + k) % fft_len].conj();
            }
        }
    }
    let scale = 1.0 / spectra.len() as f64;
    for j in 0..side {
        for k in 0..=j {
            let v = values[j * side + k] * scale;
            values[j * side + k] = v;
            values[k * side + j] = v;
        }
    }
    BispectrumEstimate {
        fft_len,
        frames: spectra.len(),
        values,
    }
}

fn accumulate_power(spectra: &[Vec<Complex64>], fft_len: usize) -> Vec<f64> {
    let side = fft_len / 2 + 1;
    let mut power = vec![0.0; side];
    for x in spectra {
        for (p, v) in power.iter_mut().zip(x) {
            *p += v.norm_sqr();
        }
    }
    let scale = 1.0 / spectra.len() as f64;
    power.iter_mut().for_each(|p| *p *= scale);
    power
}

pub fn bispectrum_direct(ens: &Ensemble, fft_len: usize) -> Result<BispectrumEstimate> {
    let spectra = frame_spectra(ens, fft_len)?;
    Ok(accumulate_bispectrum(&spectra, fft_len))
}

/// `Ŝ₂(j) = ⟨|X(j)|²⟩` for `0 ≤ j ≤ M/2`.
pub fn power_spectrum(ens: &Ensemble, fft_len: usize) -> Result<Vec<f64>> {
    let spectra = frame_spectra(ens, fft_len)?;
    Ok(accumulate_power(&spectra, fft_len))
}

/// Bispectrum and power spectrum from a single pass of FFTs.
pub fn spectra(ens: &Ensemble, fft_len: usize) -> Result<(BispectrumEstimate, Vec<f64>)> {
    let spectra = frame_spectra(ens, fft_len)?;
    Ok((
        accumulate_bispectrum(&spectra, fft_len),
        accumulate_power(&spectra, fft_len),
    ))
}

/// The non-redundant triangle `1 ≤ k ≤ j, j + k ≤ M/2 − 1`.
pub fn principal_domain(fft_len: usize) -> Vec<(usize, usize)> {
    let half = fft_len / 2;
    let mut out = Vec::new();
    for j in 1..half {
        for k in 1..=j {
            if j + k < half {
                out.push((j, k));
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BicoherencePoint {
    pub j: usize,
    pub k: usize,
    /// `|B̂(j,k)|²`.
    pub value: f64,
    /// Null-hypothesis variance factor of `2K|B̂|²` relative to χ²₂:
    /// 2 on the diagonal `j = k`, where the triple product contains
    /// `X(j)²`, and 1 elsewhere.
    pub normalizer: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BicoherenceGrid {
    pub fft_len: usize,
    /// Retained principal-domain points in `(j, k)` order.
    pub points: Vec<BicoherencePoint>,
    /// Principal-domain points dropped for a vanishing denominator.
    pub excluded: Vec<(usize, usize)>,
}

impl BicoherenceGrid {
    pub fn max(&self) -> Option<&BicoherencePoint> {
        self.points
            .iter()
            .max_by(|a, b| a.value.total_cmp(&b.value))
    }
}

/// `|B̂(j,k)|² = |Ŝ₃(j,k)|² / (Ŝ₂(j) Ŝ₂(k) Ŝ₂(j+k))` over the principal domain.
pub fn bicoherence(bisp: &BispectrumEstimate, power: &[f64]) -> Result<BicoherenceGrid> {
    let side = bisp.side();
    if power.len() != side {
        return Err(Error::Dimension {
            expected: side,
            got: power.len(),
        });
    }
    let mut points = Vec::new();
    let mut excluded = Vec::new();
    for (j, k) in principal_domain(bisp.fft_len()) {
        let den = power[j] * power[k] * power[j + k];
        if !(den >= DENOMINATOR_FLOOR) {
            excluded.push((j, k));
            continue;
        }
        points.push(BicoherencePoint {
            j,
            k,
            value: bisp.get(j, k).norm_sqr() / den,
            normalizer: if j == k { 2.0 } else { 1.0 },
        });
    }
    Ok(BicoherenceGrid {
        fft_len: bisp.fft_len(),
        points,
        excluded,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HinichResult {
    pub statistic: f64,
    pub dof: u32,
    /// Probability of false alarm: survival of the statistic under χ²_dof.
    pub pfa: f64,
}

/// `S = Σ_D 2K|B̂|²/ν` against a central χ² with `2|D|` degrees of freedom.
pub fn hinich_test(grid: &BicoherenceGrid, frames: usize) -> Result<HinichResult> {
    if frames < MIN_FRAMES {
        return Err(Error::InsufficientFrames {
            got: frames,
            min: MIN_FRAMES,
        });
    }
    if grid.points.is_empty() {
        return Err(Error::Config("principal domain is empty".into()));
    }
    let k2 = 2.0 * frames as f64;
    let statistic: f64 = grid
        .points
        .iter()
        .map(|p| k2 * p.value / p.normalizer)
        .sum();
    let dof = 2 * grid.points.len() as u32;
    Ok(HinichResult {
        statistic,
        dof,
        pfa: chi2_survival(statistic, dof)?,
    })
}
