//! Monte Carlo harness: transient signal plus noise, polynomial projection,
//! and Gaussianity tests on the input noise and the output error.
//!
//! Replication `r` draws its noise from stream `(seed, r)`, so results do not
//! depend on the number of worker threads, and increasing `R` leaves the
//! earlier replications untouched.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formats::{bicoherence_csv, histogram_csv, write_file};
use crate::gaussianity::{assess, BicoherenceGrid, Ensemble, GaussianityReport, TestConfig};
use crate::gaussianity::{DEFAULT_BINS, DEFAULT_FFT_LEN};
use crate::ortho_poly::{
    build_basis, projection_operator, select_order, transform, OrderCriterion, OrderSelection,
    SampleGrid,
};
use crate::signal_noise::{
    draw_noise, make_observation, noise_std_for_snr, synth_signal, NoiseFamily, NoiseSpec,
    RngStream, SignalSpec, DEFAULT_GAMMA_SHAPE,
};
use crate::sequence::Sequence;

pub const REFERENCE_SAMPLES: usize = 60;
pub const REFERENCE_SPACING: f64 = 0.15;
pub const REFERENCE_SNR_DB: f64 = 10.0;
pub const DEFAULT_REPLICATIONS: usize = 500;
/// Upper end of the default order search range (capped at `N`).
pub const DEFAULT_MAX_ORDER: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode")]
pub enum OrderMode {
    /// Minimize the true error variance using the clean signal.
    Oracle { min: usize, max: usize },
    /// Minimize an unbiased risk estimate from the first replication's data.
    Penalized { min: usize, max: usize },
    Fixed { order: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub samples: usize,
    pub spacing: f64,
    pub signal: SignalSpec,
    pub snr_db: f64,
    pub families: Vec<NoiseFamily>,
    pub gamma_shape: f64,
    pub replications: usize,
    pub order: OrderMode,
    pub fft_len: usize,
    pub bins: usize,
    pub seed: u64,
    /// Worker thread hint; never changes results.
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    /// The reference setup: 60 samples at spacing 0.15, 10 dB SNR, the
    /// three-mode transient, all four noise families.
    pub fn reference(seed: u64) -> Self {
        ExperimentConfig {
            samples: REFERENCE_SAMPLES,
            spacing: REFERENCE_SPACING,
            signal: SignalSpec::reference(),
            snr_db: REFERENCE_SNR_DB,
            families: NoiseFamily::ALL.to_vec(),
            gamma_shape: DEFAULT_GAMMA_SHAPE,
            replications: DEFAULT_REPLICATIONS,
            order: OrderMode::Oracle {
                min: 1,
                max: DEFAULT_MAX_ORDER.min(REFERENCE_SAMPLES),
            },
            fft_len: DEFAULT_FFT_LEN,
            bins: DEFAULT_BINS,
            seed,
            threads: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications < 1 {
            return Err(Error::Config("at least one replication is required".into()));
        }
        if self.families.is_empty() {
            return Err(Error::Config("no noise families requested".into()));
        }
        if !(self.gamma_shape.is_finite() && self.gamma_shape > 0.0) {
            return Err(Error::Config(format!(
                "gamma shape must be positive, got {}",
                self.gamma_shape
            )));
        }
        if self.bins == 0 {
            return Err(Error::Config("histogram needs at least one bin".into()));
        }
        if self.snr_db.is_nan() {
            return Err(Error::Config("SNR must not be NaN".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("thread count must be positive".into()));
        }
        SignalSpec::new(self.signal.components.clone())?;
        SampleGrid::uniform(self.samples, self.spacing)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyResult {
    pub family: NoiseFamily,
    pub selection: OrderSelection,
    /// Variance of the scaled input noise.
    pub noise_variance: f64,
    /// `(1/N) Σ_n var_r(e_r[n])`.
    pub mean_error_variance: f64,
    pub input: GaussianityReport,
    pub output: GaussianityReport,
    pub input_bicoherence: Option<BicoherenceGrid>,
    pub output_bicoherence: Option<BicoherenceGrid>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub families: Vec<FamilyResult>,
}

pub fn derive_stream(seed: u64, index: u64) -> RngStream {
    RngStream::new(seed, index)
}

/// Noise and error ensembles for one family, plus the order selection used.
#[derive(Debug, Clone)]
pub struct Realizations {
    pub selection: OrderSelection,
    pub noise: Ensemble,
    pub error: Ensemble,
    pub noise_variance: f64,
}

/// Draw every replication for `family`: `x_r = g + w_r`, `y_r = H x_r`,
/// `e_r = y_r − g`.
pub fn realize(cfg: &ExperimentConfig, family: NoiseFamily) -> Result<Realizations> {
    let grid = SampleGrid::uniform(cfg.samples, cfg.spacing)?;
    let signal = synth_signal(&cfg.signal, &grid);
    let noise_sd = noise_std_for_snr(&signal, cfg.snr_db)?;
    let noise_var = noise_sd * noise_sd;
    let spec = NoiseSpec::new(family, cfg.gamma_shape, crate::signal_noise::NoiseTarget::SnrDb(cfg.snr_db))?;

    let draw = |r: usize| -> Result<Sequence> {
        let w = draw_noise(&spec, cfg.samples, &derive_stream(cfg.seed, r as u64))?;
        Ok(Sequence::from_vec_unchecked(w.iter().map(|v| v * noise_sd).collect()))
    };

    let selection = match cfg.order {
        OrderMode::Oracle { min, max } => select_order(
            &grid,
            OrderCriterion::Oracle {
                signal: &signal,
                noise_var,
            },
            min..=max,
        )?,
        OrderMode::Penalized { min, max } => {
            let x0 = make_observation(&signal, &draw(0)?)?;
            select_order(
                &grid,
                OrderCriterion::Penalized {
                    observed: &x0,
                    noise_var,
                },
                min..=max,
            )?
        }
        OrderMode::Fixed { order } => select_order(&grid, OrderCriterion::Fixed(order), order..=order)?,
    };
    let op = projection_operator(&build_basis(&grid, selection.order)?);

    let pairs: Vec<(Sequence, Vec<f64>)> = (0..cfg.replications)
        .into_par_iter()
        .map(|r| {
            let w = draw(r)?;
            let x = make_observation(&signal, &w)?;
            let y = transform(&op, &x)?;
            let e: Vec<f64> = y.iter().zip(signal.iter()).map(|(y, g)| y - g).collect();
            Ok((w, e))
        })
        .collect::<Result<_>>()?;

    let mut noise = Vec::with_capacity(cfg.replications * cfg.samples);
    let mut error = Vec::with_capacity(cfg.replications * cfg.samples);
    for (w, e) in pairs {
        noise.extend_from_slice(&w);
        error.extend(e);
    }
    Ok(Realizations {
        selection,
        noise: Ensemble::from_flat(cfg.samples, noise)?,
        error: Ensemble::from_flat(cfg.samples, error)?,
        noise_variance: noise_var,
    })
}

/// Average over indices of the across-replication variance.
pub fn mean_index_variance(ens: &Ensemble) -> f64 {
    let reps = ens.replications() as f64;
    let len = ens.record_len();
    let mut total = 0.0;
    for n in 0..len {
        let mean = ens.records().map(|r| r[n]).sum::<f64>() / reps;
        total += ens.records().map(|r| (r[n] - mean).powi(2)).sum::<f64>() / reps;
    }
    total / len as f64
}

fn run_family(cfg: &ExperimentConfig, family: NoiseFamily) -> Result<FamilyResult> {
    let real = realize(cfg, family).map_err(|e| e.context(format!("{family}: simulation")))?;
    let tests = TestConfig {
        fft_len: cfg.fft_len,
        bins: cfg.bins,
        hist_range: None,
    };
    let (input, input_bicoherence) =
        assess(&real.noise, &tests).map_err(|e| e.context(format!("{family}: input-noise test")))?;
    let (output, output_bicoherence) =
        assess(&real.error, &tests).map_err(|e| e.context(format!("{family}: output-error test")))?;
    Ok(FamilyResult {
        family,
        selection: real.selection,
        noise_variance: real.noise_variance,
        mean_error_variance: mean_index_variance(&real.error),
        input,
        output,
        input_bicoherence,
        output_bicoherence,
    })
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let run = || -> Result<ExperimentResult> {
        let families = cfg
            .families
            .iter()
            .map(|&f| run_family(cfg, f))
            .collect::<Result<_>>()?;
        Ok(ExperimentResult {
            config: cfg.clone(),
            families,
        })
    };
    match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    }
}

/// One row of `summary.json`. Field names are a stable contract.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub family: NoiseFamily,
    #[serde(rename = "J")]
    pub order: usize,
    pub selection_mode: crate::ortho_poly::SelectionMode,
    pub risk_curve: Vec<(usize, Option<f64>)>,
    pub pfa_input: Option<f64>,
    pub pfa_output: Option<f64>,
    pub kurt_input: f64,
    pub kurt_output: f64,
    #[serde(rename = "S_input")]
    pub s_input: Option<f64>,
    #[serde(rename = "S_output")]
    pub s_output: Option<f64>,
    pub dof: Option<u32>,
    pub dof_input: Option<u32>,
    #[serde(rename = "M")]
    pub fft_len: usize,
    #[serde(rename = "R")]
    pub replications: usize,
    pub seed: u64,
    pub noise_variance: f64,
    pub mean_error_variance: f64,
    pub notes: Vec<String>,
}

impl SummaryRecord {
    pub fn from_result(result: &ExperimentResult, fam: &FamilyResult) -> Self {
        let mut notes: Vec<String> = fam.input.notes.iter().map(|n| format!("input: {n}")).collect();
        notes.extend(fam.output.notes.iter().map(|n| format!("output: {n}")));
        SummaryRecord {
            family: fam.family,
            order: fam.selection.order,
            selection_mode: fam.selection.mode,
            risk_curve: fam
                .selection
                .risk_curve
                .iter()
                .map(|&(j, r)| (j, r.is_finite().then_some(r)))
                .collect(),
            pfa_input: fam.input.pfa(),
            pfa_output: fam.output.pfa(),
            kurt_input: fam.input.avg_kurtosis,
            kurt_output: fam.output.avg_kurtosis,
            s_input: fam.input.hinich.map(|h| h.statistic),
            s_output: fam.output.hinich.map(|h| h.statistic),
            dof: fam.output.hinich.map(|h| h.dof),
            dof_input: fam.input.hinich.map(|h| h.dof),
            fft_len: result.config.fft_len,
            replications: result.config.replications,
            seed: result.config.seed,
            noise_variance: fam.noise_variance,
            mean_error_variance: fam.mean_error_variance,
            notes,
        }
    }
}

pub fn summary(result: &ExperimentResult) -> Vec<SummaryRecord> {
    result
        .families
        .iter()
        .map(|f| SummaryRecord::from_result(result, f))
        .collect()
}

pub const SUMMARY_FILE: &str = "summary.json";

/// Write `summary.json` and, per family, input/output histogram and
/// bicoherence CSVs. Returns the paths written, summary first.
pub fn emit_report(result: &ExperimentResult, out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();

    let path = out_dir.join(SUMMARY_FILE);
    let mut json = serde_json::to_string_pretty(&summary(result))
        .map_err(|e| Error::Config(format!("summary serialization: {e}")))?;
    json.push('\n');
    write_file(&path, &json)?;
    written.push(path);

    for fam in &result.families {
        let name = fam.family.name();
        let files = [
            (format!("{name}_input_histogram.csv"), histogram_csv(&fam.input.histogram)),
            (format!("{name}_output_histogram.csv"), histogram_csv(&fam.output.histogram)),
            (
                format!("{name}_input_bicoherence.csv"),
                bicoherence_csv(fam.input_bicoherence.as_ref()),
            ),
            (
                format!("{name}_output_bicoherence.csv"),
                bicoherence_csv(fam.output_bicoherence.as_ref()),
            ),
        ];
        for (file, body) in files {
            let path = out_dir.join(file);
            write_file(&path, &body)?;
            written.push(path);
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(families: Vec<NoiseFamily>, reps: usize) -> ExperimentConfig {
        ExperimentConfig {
            families,
            replications: reps,
            ..ExperimentConfig::reference(7)
        }
    }

    #[test]
    fn stream_derivation() {
        assert_eq!(derive_stream(5, 0), derive_stream(5, 0));
        let spec = NoiseSpec::unit(NoiseFamily::Gaussian);
        let a = draw_noise(&spec, 1, &derive_stream(1, 0)).unwrap()[0];
        let b = draw_noise(&spec, 1, &derive_stream(1, 1)).unwrap()[0];
        assert_ne!(a, b);
    }

    #[test]
    fn reference_oracle_order() {
        let real = realize(&small(vec![NoiseFamily::Gaussian], 8), NoiseFamily::Gaussian).unwrap();
        assert_eq!(real.selection.order, 19);
        assert_eq!(real.selection.risk_curve.len(), 32);
    }

    #[test]
    fn error_is_projection_minus_signal() {
        let cfg = small(vec![NoiseFamily::Uniform], 10);
        let real = realize(&cfg, NoiseFamily::Uniform).unwrap();
        let grid = SampleGrid::uniform(cfg.samples, cfg.spacing).unwrap();
        let g = synth_signal(&cfg.signal, &grid);
        let op = projection_operator(&build_basis(&grid, real.selection.order).unwrap());
        for r in 0..10 {
            let x: Vec<f64> = real.noise.record(r).iter().zip(g.iter()).map(|(w, g)| w + g).collect();
            let y = op.apply_dense(&x).unwrap();
            for ((e, y), g) in real.error.record(r).iter().zip(&y).zip(g.iter()) {
                assert!((e - (y - g)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_noise_is_degenerate() {
        let cfg = ExperimentConfig {
            snr_db: f64::INFINITY,
            ..small(vec![NoiseFamily::Gaussian], 16)
        };
        let err = run_experiment(&cfg).unwrap_err();
        assert!(matches!(err.root(), Error::Degenerate(_)));
        assert!(err.to_string().contains("gaussian"));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn single_replication_runs() {
        let res = run_experiment(&small(vec![NoiseFamily::Gaussian], 1)).unwrap();
        let fam = &res.families[0];
        assert!(fam.input.hinich.is_none());
        assert!(fam.output.notes.iter().any(|n| n.contains("single record")));
    }

    #[test]
    fn emitted_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let res = run_experiment(&small(vec![NoiseFamily::Laplacian], 16)).unwrap();
        let files = emit_report(&res, dir.path()).unwrap();
        assert_eq!(files.len(), 5);
        let empty = ExperimentResult {
            config: res.config.clone(),
            families: vec![],
        };
        let dir2 = tempfile::tempdir().unwrap();
        assert_eq!(emit_report(&empty, dir2.path()).unwrap().len(), 1);
    }

    #[test]
    fn config_validation() {
        assert!(run_experiment(&small(vec![], 10)).is_err());
        assert!(run_experiment(&small(vec![NoiseFamily::Gamma], 0)).is_err());
        let cfg = ExperimentConfig {
            gamma_shape: -1.0,
            ..small(vec![NoiseFamily::Gamma], 10)
        };
        assert!(matches!(run_experiment(&cfg), Err(Error::Config(_))));
    }
}
