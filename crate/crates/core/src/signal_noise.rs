//! Damped-exponential transient signals and zero-mean, unit-variance noise
//! generators.

use std::f64::consts::{FRAC_PI_4, FRAC_PI_6, SQRT_2};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ortho_poly::SampleGrid;
use crate::sequence::Sequence;

/// One term `b·e^{jφ}·e^{(σ + jω)t}` of a transient signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub amplitude: f64,
    pub damping: f64,
    pub frequency: f64,
    pub phase: f64,
}

impl Component {
    pub fn new(amplitude: f64, damping: f64, frequency: f64, phase: f64) -> Self {
        Component {
            amplitude,
            damping,
            frequency,
            phase,
        }
    }

    fn is_finite(&self) -> bool {
        self.amplitude.is_finite()
            && self.damping.is_finite()
            && self.frequency.is_finite()
            && self.phase.is_finite()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SignalSpec {
    pub components: Vec<Component>,
}

impl SignalSpec {
    pub fn new(components: Vec<Component>) -> Result<Self> {
        if components.iter().any(|c| !c.is_finite()) {
            return Err(Error::Config("signal component parameters must be finite".into()));
        }
        Ok(SignalSpec { components })
    }

    /// Three damped modes used by the reference experiment.
    pub fn reference() -> Self {
        SignalSpec {
            components: vec![
                Component::new(1.0, -0.2, 2.0, 0.0),
                Component::new(0.5, -0.1, 4.0, FRAC_PI_4),
                Component::new(0.5, -0.3, 1.0, FRAC_PI_6),
            ],
        }
    }
}

/// Real part of the component sum on the grid:
/// `g(t) = Σ b·e^{σt}·cos(ωt + φ)`.
pub fn synth_signal(spec: &SignalSpec, grid: &SampleGrid) -> Sequence {
    let values = grid
        .points()
        .iter()
        .map(|&t| {
            spec.components
                .iter()
                .map(|c| c.amplitude * (c.damping * t).exp() * (c.frequency * t + c.phase).cos())
                .sum()
        })
        .collect();
    Sequence::from_vec_unchecked(values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseFamily {
    Gaussian,
    Laplacian,
    Uniform,
    Gamma,
}

impl NoiseFamily {
    pub const ALL: [NoiseFamily; 4] = [
        NoiseFamily::Gaussian,
        NoiseFamily::Laplacian,
        NoiseFamily::Uniform,
        NoiseFamily::Gamma,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NoiseFamily::Gaussian => "gaussian",
            NoiseFamily::Laplacian => "laplacian",
            NoiseFamily::Uniform => "uniform",
            NoiseFamily::Gamma => "gamma",
        }
    }

    /// Population excess kurtosis of the unit-variance generator.
    pub fn excess_kurtosis(self, gamma_shape: f64) -> f64 {
        match self {
            NoiseFamily::Gaussian => 0.0,
            NoiseFamily::Laplacian => 3.0,
            NoiseFamily::Uniform => -1.2,
            NoiseFamily::Gamma => 6.0 / gamma_shape,
        }
    }
}

impl fmt::Display for NoiseFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NoiseFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(NoiseFamily::Gaussian),
            "laplacian" | "laplace" => Ok(NoiseFamily::Laplacian),
            "uniform" => Ok(NoiseFamily::Uniform),
            "gamma" => Ok(NoiseFamily::Gamma),
            other => Err(Error::Config(format!("unknown noise family '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseTarget {
    UnitVariance,
    SnrDb(f64),
}

pub const DEFAULT_GAMMA_SHAPE: f64 = 9.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub family: NoiseFamily,
    pub gamma_shape: f64,
    pub target: NoiseTarget,
}

impl NoiseSpec {
    pub fn new(family: NoiseFamily, gamma_shape: f64, target: NoiseTarget) -> Result<Self> {
        if !(gamma_shape.is_finite() && gamma_shape > 0.0) {
            return Err(Error::Config(format!(
                "gamma shape must be positive, got {gamma_shape}"
            )));
        }
        Ok(NoiseSpec {
            family,
            gamma_shape,
            target,
        })
    }

    pub fn unit(family: NoiseFamily) -> Self {
        NoiseSpec {
            family,
            gamma_shape: DEFAULT_GAMMA_SHAPE,
            target: NoiseTarget::UnitVariance,
        }
    }
}

/// Identifies a reproducible random substream: the same `(seed, index)` pair
/// always yields the same draws, and distinct indices give independent
/// ChaCha streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub index: u64,
}

impl RngStream {
    pub fn new(seed: u64, index: u64) -> Self {
        RngStream { seed, index }
    }

    /// A fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(self.index);
        rng
    }
}

/// Inverse CDF of the zero-mean, unit-variance Laplace law (scale `1/√2`).
pub fn laplace_inverse_cdf(u: f64) -> f64 {
    let scale = 1.0 / SQRT_2;
    if u < 0.5 {
        scale * (2.0 * u).ln()
    } else {
        -scale * (2.0 * (1.0 - u)).ln()
    }
}

/// `n` independent zero-mean, unit-variance draws from the family.
/// The spec's `target` is ignored here; see [`scale_to_snr`].
pub fn draw_noise(spec: &NoiseSpec, n: usize, stream: &RngStream) -> Result<Sequence> {
    if n == 0 {
        return Err(Error::Config("noise length must be at least 1".into()));
    }
    let mut rng = stream.rng();
    let values: Vec<f64> = match spec.family {
        NoiseFamily::Gaussian => (0..n).map(|_| StandardNormal.sample(&mut rng)).collect(),
        NoiseFamily::Laplacian => (0..n)
            .map(|_| {
                // Open interval (0, 1) so the log never sees 0.
                let u: f64 = loop {
                    let u: f64 = rng.random();
                    if u > 0.0 {
                        break u;
                    }
                };
                laplace_inverse_cdf(u)
            })
            .collect(),
        NoiseFamily::Uniform => {
            let half = 3f64.sqrt();
            (0..n).map(|_| rng.random_range(-half..=half)).collect()
        }
        NoiseFamily::Gamma => {
            let k = spec.gamma_shape;
            let dist = Gamma::new(k, 1.0)
                .map_err(|e| Error::Config(format!("gamma shape {k}: {e}")))?;
            let sd = k.sqrt();
            (0..n).map(|_| (dist.sample(&mut rng) - k) / sd).collect()
        }
    };
    Ok(Sequence::from_vec_unchecked(values))
}

/// Noise standard deviation giving `snr_db` against the mean power of
/// `signal`.
pub fn noise_std_for_snr(signal: &[f64], snr_db: f64) -> Result<f64> {
    if signal.is_empty() {
        return Err(Error::UndefinedSnr);
    }
    let power = signal.iter().map(|g| g * g).sum::<f64>() / signal.len() as f64;
    if power == 0.0 {
        return Err(Error::UndefinedSnr);
    }
    if snr_db.is_nan() {
        return Err(Error::Config("SNR must not be NaN".into()));
    }
    Ok((power * 10f64.powf(-snr_db / 10.0)).sqrt())
}

/// Scale unit-variance noise so the signal-to-noise ratio is `snr_db`.
pub fn scale_to_snr(noise: &Sequence, signal: &Sequence, snr_db: f64) -> Result<Sequence> {
    let sd = noise_std_for_snr(signal, snr_db)?;
    Ok(Sequence::from_vec_unchecked(
        noise.iter().map(|w| w * sd).collect(),
    ))
}

/// `x = g + w`.
pub fn make_observation(signal: &Sequence, noise: &Sequence) -> Result<Sequence> {
    if signal.len() != noise.len() {
        return Err(Error::Dimension {
            expected: signal.len(),
            got: noise.len(),
        });
    }
    Ok(Sequence::from_vec_unchecked(
        signal.iter().zip(noise.iter()).map(|(g, w)| g + w).collect(),
    ))
}
