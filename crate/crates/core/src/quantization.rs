//! 1-bit complex quantization with optional uniform dithering.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QcompError, Result};
use crate::signal::ComplexSignal;

/// `sign` with `sign(0) = +1`.
#[inline]
fn sign(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

#[inline]
fn quantize_sample(half: f64, z: Complex64) -> Complex64 {
    Complex64::new(half * sign(z.re), half * sign(z.im))
}

/// `Q_δ(y) = δ/2 · sign(Re y) + i δ/2 · sign(Im y)`, componentwise.
pub fn quantize(delta: f64, y: &ComplexSignal) -> ComplexSignal {
    debug_assert!(delta > 0.0);
    let half = 0.5 * delta;
    y.iter().map(|&z| quantize_sample(half, z)).collect()
}

/// Smallest admissible resolution, `2 · max_m |y_m|`.
pub fn choose_delta(y: &ComplexSignal) -> Result<f64> {
    let peak = y.max_modulus();
    if peak > 0.0 && peak.is_finite() {
        Ok(2.0 * peak)
    } else {
        Err(QcompError::ZeroSignal)
    }
}

/// A stored dither vector. Real and imaginary parts lie in `[-δ/2, δ/2]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dither {
    xi: ComplexSignal,
    delta: f64,
}

impl Dither {
    pub fn new(xi: ComplexSignal, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(QcompError::InvalidConfig(format!(
                "dither resolution must be positive, got {delta}"
            )));
        }
        let half = 0.5 * delta;
        if xi.iter().any(|z| z.re.abs() > half || z.im.abs() > half) {
            return Err(QcompError::InvalidConfig(
                "dither component outside [-delta/2, delta/2]".into(),
            ));
        }
        Ok(Self { xi, delta })
    }

    pub fn xi(&self) -> &ComplexSignal {
        &self.xi
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }
}

/// Draws `m` complex dither samples with i.i.d. `U[-δ/2, δ/2]` real and
/// imaginary parts.
pub fn draw_dither<R: Rng + ?Sized>(delta: f64, m: usize, rng: &mut R) -> Dither {
    assert!(delta > 0.0 && delta.is_finite(), "delta must be positive");
    let half = 0.5 * delta;
    let xi = (0..m)
        .map(|_| {
            let re = rng.random_range(-half..=half);
            let im = rng.random_range(-half..=half);
            Complex64::new(re, im)
        })
        .collect();
    Dither { xi, delta }
}

/// How the receiver digitizes the demodulated signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MeasurementChannel {
    /// Identity: the solver sees `y`.
    FullResolution,
    /// `A_δ(y) = Q_δ(y + ξ)`; no dither means `ξ = 0`.
    OneBit { delta: f64, dither: Option<Dither> },
}

impl MeasurementChannel {
    pub fn one_bit(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(QcompError::InvalidConfig(format!(
                "1-bit resolution must be positive, got {delta}"
            )));
        }
        Ok(Self::OneBit { delta, dither: None })
    }

    /// 1-bit channel that reuses `dither` (and its resolution) on every application.
    pub fn one_bit_dithered(dither: Dither) -> Self {
        Self::OneBit {
            delta: dither.delta,
            dither: Some(dither),
        }
    }

    pub fn is_quantized(&self) -> bool {
        matches!(self, Self::OneBit { .. })
    }

    pub fn delta(&self) -> Option<f64> {
        match self {
            Self::FullResolution => None,
            Self::OneBit { delta, .. } => Some(*delta),
        }
    }

    pub fn dither(&self) -> Option<&Dither> {
        match self {
            Self::OneBit { dither, .. } => dither.as_ref(),
            Self::FullResolution => None,
        }
    }

    pub fn apply(&self, y: &ComplexSignal) -> Result<ComplexSignal> {
        apply_channel(self, y)
    }
}

/// Measures `y` through the channel.
pub fn apply_channel(ch: &MeasurementChannel, y: &ComplexSignal) -> Result<ComplexSignal> {
    match ch {
        MeasurementChannel::FullResolution => Ok(y.clone()),
        MeasurementChannel::OneBit { delta, dither } => {
            let half = 0.5 * delta;
            match dither {
                None => Ok(quantize(*delta, y)),
                Some(d) => {
                    if d.len() != y.len() {
                        return Err(QcompError::LengthMismatch {
                            expected: y.len(),
                            actual: d.len(),
                        });
                    }
                    Ok(y.iter()
                        .zip(d.xi.iter())
                        .map(|(&s, &x)| quantize_sample(half, s + x))
                        .collect())
                }
            }
        }
    }
}
