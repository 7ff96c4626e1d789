//! Third-order cumulant and average excess kurtosis.

use super::Ensemble;
use crate::error::{Error, Result};

/// `C₃[k₁,k₂] = E{u[n] u[n+k₁] u[n+k₂]}` estimated within each mean-removed
/// record over the indices where all three samples exist, then averaged
/// over records.
pub fn third_cumulant(ens: &Ensemble, k1: isize, k2: isize) -> Result<f64> {
    let len = ens.record_len() as isize;
    let lag_err = || Error::Lag {
        k1,
        k2,
        len: ens.record_len(),
    };
    if k1.abs() >= len || k2.abs() >= len {
        return Err(lag_err());
    }
    let start = 0.max(-k1).max(-k2);
    let end = len.min(len - k1).min(len - k2);
    if start >= end {
        return Err(lag_err());
    }
    let count = (end - start) as f64;
    let mut total = 0.0;
    for r in 0..ens.replications() {
        let rec = ens.record(r);
        let mean = rec.iter().sum::<f64>() / rec.len() as f64;
        let at = |i: isize| rec[i as usize] - mean;
        let s: f64 = (start..end).map(|n| at(n) * at(n + k1) * at(n + k2)).sum();
        total += s / count;
    }
    Ok(total / ens.replications() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KurtosisMode {
    /// Moments across replications at each index, averaged over indices.
    PerIndex,
    /// One kurtosis across the samples of a single record.
    SingleRecord,
}

pub const MIN_KURTOSIS_REPLICATIONS: usize = 4;

pub fn kurtosis_mode(ens: &Ensemble) -> Result<KurtosisMode> {
    match ens.replications() {
        1 => Ok(KurtosisMode::SingleRecord),
        r if r >= MIN_KURTOSIS_REPLICATIONS => Ok(KurtosisMode::PerIndex),
        r => Err(Error::Config(format!(
            "kurtosis needs a single record or at least {MIN_KURTOSIS_REPLICATIONS} replications, got {r}"
        ))),
    }
}

fn kurtosis_of(values: impl Iterator<Item = f64> + Clone, count: usize) -> Option<f64> {
    let mean = values.clone().sum::<f64>() / count as f64;
    let (m2, m4) = values.fold((0.0, 0.0), |(m2, m4), v| {
        let d = (v - mean) * (v - mean);
        (m2 + d, m4 + d * d)
    });
    let m2 = m2 / count as f64;
    let m4 = m4 / count as f64;
    if m2 == 0.0 {
        None
    } else {
        Some(m4 / (m2 * m2) - 3.0)
    }
}

/// `K = E{u⁴}/E{u²}² − 3`, computed at every index across replications
/// (mean removed per index) and averaged over indices. A single record
/// falls back to one kurtosis across its samples.
pub fn excess_kurtosis(ens: &Ensemble) -> Result<f64> {
    let reps = ens.replications();
    let len = ens.record_len();
    match kurtosis_mode(ens)? {
        KurtosisMode::SingleRecord => {
            let rec = ens.record(0);
            kurtosis_of(rec.iter().copied(), len)
                .ok_or_else(|| Error::Degenerate("record has zero variance".into()))
        }
        KurtosisMode::PerIndex => {
            let mut sum = 0.0;
            for n in 0..len {
                let column = (0..reps).map(|r| ens.record(r)[n]);
                sum += kurtosis_of(column, reps).ok_or_else(|| {
                    Error::Degenerate(format!("zero variance across replications at index {n}"))
                })?;
            }
            Ok(sum / len as f64)
        }
    }
}
