//! Seeded measurement-noise models: additive Gaussian, additive Laplace and
//! salt-and-pepper spikes.
//!
//! Every call seeds a fresh ChaCha8 generator (`rand_chacha` 0.9, whose
//! output stream is fixed by the ChaCha specification and identical on all
//! platforms) from the caller's `u64`, and draws exactly one variate per
//! entry, so the output is a pure function of `(v, spec, seed)`.

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::norm_inf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    Gaussian,
    Laplace,
    SaltPepper,
    None,
}

impl NoiseKind {
    pub fn name(&self) -> &'static str {
        match self {
            NoiseKind::Gaussian => "gaussian",
            NoiseKind::Laplace => "laplace",
            NoiseKind::SaltPepper => "salt_pepper",
            NoiseKind::None => "none",
        }
    }
}

impl std::fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Noise model and magnitude.
///
/// `level` is the standard deviation σ for Gaussian noise, the scale `b` for
/// Laplace noise and the corruption probability `p` for salt-and-pepper.
/// When `relative` is set, Gaussian and Laplace levels are multiplied by the
/// RMS of the vector being corrupted. Salt-and-pepper spikes are always
/// `±amplitude · max|v|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    #[serde(default)]
    pub level: f64,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default)]
    pub relative: bool,
}

fn default_amplitude() -> f64 {
    1.0
}

/// Default Gaussian σ as a fraction of the measurement RMS.
pub const DEFAULT_RELATIVE_SIGMA: f64 = 0.05;
/// Default salt-and-pepper corruption probability.
pub const DEFAULT_SALT_PEPPER_RATE: f64 = 0.05;

impl NoiseSpec {
    pub fn none() -> Self {
        NoiseSpec {
            kind: NoiseKind::None,
            level: 0.0,
            amplitude: 1.0,
            relative: false,
        }
    }

    pub fn gaussian(sigma: f64) -> Self {
        NoiseSpec {
            kind: NoiseKind::Gaussian,
            level: sigma,
            ..Self::none()
        }
    }

    pub fn laplace(scale: f64) -> Self {
        NoiseSpec {
            kind: NoiseKind::Laplace,
            level: scale,
            ..Self::none()
        }
    }

    pub fn salt_pepper(rate: f64, amplitude: f64) -> Self {
        NoiseSpec {
            kind: NoiseKind::SaltPepper,
            level: rate,
            amplitude,
            relative: false,
        }
    }

    pub fn relative(mut self) -> Self {
        self.relative = true;
        self
    }

    /// Default magnitudes: σ = 5% of the measurement RMS, a Laplace scale
    /// `b = σ/√2` so both additive models have the same variance, and 5%
    /// salt-and-pepper corruption with unit amplitude.
    pub fn default_for(kind: NoiseKind) -> Self {
        match kind {
            NoiseKind::Gaussian => Self::gaussian(DEFAULT_RELATIVE_SIGMA).relative(),
            NoiseKind::Laplace => {
                Self::laplace(DEFAULT_RELATIVE_SIGMA / std::f64::consts::SQRT_2).relative()
            }
            NoiseKind::SaltPepper => Self::salt_pepper(DEFAULT_SALT_PEPPER_RATE, 1.0),
            NoiseKind::None => Self::none(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.level.is_finite() || self.level < 0.0 {
            return Err(Error::Config(format!(
                "noise level must be finite and >= 0, got {}",
                self.level
            )));
        }
        if self.kind == NoiseKind::SaltPepper {
            if self.level > 1.0 {
                return Err(Error::Config(format!(
                    "salt_pepper probability must lie in [0, 1], got {}",
                    self.level
                )));
            }
            if !self.amplitude.is_finite() || self.amplitude < 0.0 {
                return Err(Error::Config(format!(
                    "salt_pepper amplitude must be finite and >= 0, got {}",
                    self.amplitude
                )));
            }
        }
        Ok(())
    }
}

/// Inverse-CDF transform of a uniform variate to a zero-mean Laplace
/// variate with scale `b`.
pub fn laplace_sample(u: f64, b: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::Contract(format!(
            "laplace_sample needs 0 < u < 1, got {u}"
        )));
    }
    if !(b > 0.0) {
        return Err(Error::Contract(format!("laplace scale must be > 0, got {b}")));
    }
    let c = u - 0.5;
    Ok(-b * c.signum() * (1.0 - 2.0 * c.abs()).ln())
}

fn rms(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt()
    }
}

/// Absolute σ or `b` that `spec` resolves to for the vector `v`.
pub fn effective_level(v: &[f64], spec: &NoiseSpec) -> f64 {
    match spec.kind {
        NoiseKind::Gaussian | NoiseKind::Laplace if spec.relative => spec.level * rms(v),
        _ => spec.level,
    }
}

/// Returns a corrupted copy of `v`.
pub fn apply_noise(v: &[f64], spec: &NoiseSpec, seed: u64) -> Result<Vec<f64>> {
    spec.validate()?;
    let level = effective_level(v, spec);
    if spec.kind == NoiseKind::None || level == 0.0 {
        return Ok(v.to_vec());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let out = match spec.kind {
        NoiseKind::Gaussian => v
            .iter()
            .map(|x| x + level * rng.sample::<f64, _>(StandardNormal))
            .collect(),
        NoiseKind::Laplace => {
            let mut out = Vec::with_capacity(v.len());
            for x in v {
                let u: f64 = rng.sample(Open01);
                out.push(x + laplace_sample(u, level)?);
            }
            out
        }
        NoiseKind::SaltPepper => {
            let spike = spec.amplitude * norm_inf(v);
            let half = level / 2.0;
            v.iter()
                .map(|&x| {
                    let u: f64 = rng.random();
                    if u < half {
                        spike
                    } else if u < level {
                        -spike
                    } else {
                        x
                    }
                })
                .collect()
        }
        NoiseKind::None => unreachable!(),
    };
    Ok(out)
}
