//! Continuous-wave Doppler radar signal model.
//!
//! A target moving at radial velocity `v` contributes the steering atom
//! `a_m(v) = exp(-i 2π (v / P) m)`, `m = 0..M-1`, where `P = c / (2 f0 Ts)` is
//! the unambiguous velocity span. Velocities live on the half-open interval
//! `[-P/2, P/2)` and wrap modulo `P`.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};
use std::ops::{Add, Deref, DerefMut, Sub};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{QcompError, Result};

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct Physical {
    f0: f64,
    ts: f64,
    c: f64,
}

/// Sampling parameters of the radar.
///
/// Either built from physical quantities (carrier, sampling period, wave
/// speed) or normalized so that the velocity span is exactly 1 and velocities
/// are expressed as fractions of the span.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RadarConfigRepr", into = "RadarConfigRepr")]
pub struct RadarConfig {
    m_samples: usize,
    span: f64,
    physical: Option<Physical>,
}

/// Serialized form: `f0`/`ts` both absent means a normalized span of 1.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RadarConfigRepr {
    m_samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    f0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ts: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    c: Option<f64>,
}

impl TryFrom<RadarConfigRepr> for RadarConfig {
    type Error = QcompError;

    fn try_from(r: RadarConfigRepr) -> Result<Self> {
        match (r.f0, r.ts) {
            (Some(f0), Some(ts)) => RadarConfig::with_speed(f0, ts, r.m_samples, r.c.unwrap_or(SPEED_OF_LIGHT)),
            (None, None) => RadarConfig::normalized(r.m_samples),
            _ => Err(QcompError::InvalidConfig("f0 and ts must be given together".into())),
        }
    }
}

impl From<RadarConfig> for RadarConfigRepr {
    fn from(cfg: RadarConfig) -> Self {
        RadarConfigRepr {
            m_samples: cfg.m_samples,
            f0: cfg.physical.map(|p| p.f0),
            ts: cfg.physical.map(|p| p.ts),
            c: cfg.physical.map(|p| p.c),
        }
    }
}

impl RadarConfig {
    /// Physical configuration with the wave speed set to the speed of light.
    pub fn new(f0: f64, ts: f64, m_samples: usize) -> Result<Self> {
        Self::with_speed(f0, ts, m_samples, SPEED_OF_LIGHT)
    }

    pub fn with_speed(f0: f64, ts: f64, m_samples: usize, c: f64) -> Result<Self> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(f0) || !positive(ts) || !positive(c) {
            return Err(QcompError::InvalidConfig(format!(
                "f0, ts and c must be positive and finite (f0={f0}, ts={ts}, c={c})"
            )));
        }
        if m_samples == 0 {
            return Err(QcompError::InvalidConfig("m_samples must be >= 1".into()));
        }
        let span = c / (2.0 * f0 * ts);
        if !positive(span) {
            return Err(QcompError::InvalidConfig(format!(
                "derived velocity span {span} is not positive and finite"
            )));
        }
        Ok(Self {
            m_samples,
            span,
            physical: Some(Physical { f0, ts, c }),
        })
    }

    /// Unit-span configuration: velocities are fractions of the span.
    pub fn normalized(m_samples: usize) -> Result<Self> {
        if m_samples == 0 {
            return Err(QcompError::InvalidConfig("m_samples must be >= 1".into()));
        }
        Ok(Self {
            m_samples,
            span: 1.0,
            physical: None,
        })
    }

    pub fn m_samples(&self) -> usize {
        self.m_samples
    }

    /// Unambiguous velocity span `P = c / (2 f0 Ts)`.
    pub fn span(&self) -> f64 {
        self.span
    }

    /// Intrinsic resolution `R = P / M`, the width of the ambiguity main lobe.
    pub fn resolution(&self) -> f64 {
        self.span / self.m_samples as f64
    }

    pub fn carrier(&self) -> Option<f64> {
        self.physical.map(|p| p.f0)
    }

    pub fn sampling_period(&self) -> Option<f64> {
        self.physical.map(|p| p.ts)
    }

    pub fn wave_speed(&self) -> Option<f64> {
        self.physical.map(|p| p.c)
    }

    /// Wraps `v` into `[-P/2, P/2)`.
    pub fn wrap(&self, v: f64) -> f64 {
        self.span * wrap_unit(v / self.span)
    }

    /// Normalized frequency `v / P` wrapped into `[-1/2, 1/2)`.
    pub fn normalized_frequency(&self, v: f64) -> f64 {
        wrap_unit(v / self.span)
    }
}

/// Wraps into `[-1/2, 1/2)`.
pub(crate) fn wrap_unit(f: f64) -> f64 {
    let w = f - (f + 0.5).floor();
    if w >= 0.5 {
        w - 1.0
    } else {
        w
    }
}

/// A point target: complex gain and radial velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub alpha: Complex64,
    pub velocity: f64,
}

impl Target {
    /// Builds a target with its velocity wrapped into the unambiguous interval.
    pub fn new(cfg: &RadarConfig, alpha: Complex64, velocity: f64) -> Self {
        Self {
            alpha,
            velocity: cfg.wrap(velocity),
        }
    }
}

/// The `K` targets of one realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    targets: Vec<Target>,
}

impl Scene {
    pub fn new(targets: Vec<Target>) -> Result<Self> {
        if targets.is_empty() {
            return Err(QcompError::InvalidConfig("a scene needs at least one target".into()));
        }
        Ok(Self { targets })
    }

    pub fn targets(&self) -> &[Target] {
        &self.targets
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn velocities(&self) -> Vec<f64> {
        self.targets.iter().map(|t| t.velocity).collect()
    }

    pub fn has_distinct_velocities(&self) -> bool {
        let v = self.velocities();
        v.iter().enumerate().all(|(i, a)| v[i + 1..].iter().all(|b| a != b))
    }

    /// Concatenation of two scenes.
    pub fn union(&self, other: &Scene) -> Scene {
        let mut targets = self.targets.clone();
        targets.extend_from_slice(&other.targets);
        Scene { targets }
    }
}

/// A length-`M` vector of complex samples.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ComplexSignal(Vec<Complex64>);

impl ComplexSignal {
    pub fn zeros(len: usize) -> Self {
        Self(vec![Complex64::new(0.0, 0.0); len])
    }

    pub fn into_inner(self) -> Vec<Complex64> {
        self.0
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Conjugate-linear in `self`: `Σ conj(self_m) · other_m`.
    pub fn inner(&self, other: &ComplexSignal) -> Complex64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn scale(&self, s: Complex64) -> ComplexSignal {
        ComplexSignal(self.0.iter().map(|z| z * s).collect())
    }

    pub fn conj(&self) -> ComplexSignal {
        ComplexSignal(self.0.iter().map(|z| z.conj()).collect())
    }

    /// `self += s · other`.
    pub fn axpy(&mut self, s: Complex64, other: &ComplexSignal) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += s * b;
        }
    }

    /// Largest componentwise modulus.
    pub fn max_modulus(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

impl From<Vec<Complex64>> for ComplexSignal {
    fn from(v: Vec<Complex64>) -> Self {
        Self(v)
    }
}

impl FromIterator<Complex64> for ComplexSignal {
    fn from_iter<I: IntoIterator<Item = Complex64>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

impl Deref for ComplexSignal {
    type Target = [Complex64];

    fn deref(&self) -> &[Complex64] {
        &self.0
    }
}

impl DerefMut for ComplexSignal {
    fn deref_mut(&mut self) -> &mut [Complex64] {
        &mut self.0
    }
}

impl Add for &ComplexSignal {
    type Output = ComplexSignal;

    fn add(self, rhs: &ComplexSignal) -> ComplexSignal {
        debug_assert_eq!(self.len(), rhs.len());
        self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect()
    }
}

impl Sub for &ComplexSignal {
    type Output = ComplexSignal;

    fn sub(self, rhs: &ComplexSignal) -> ComplexSignal {
        debug_assert_eq!(self.len(), rhs.len());
        self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect()
    }
}

/// Unit-modulus exponential at normalized frequency `f`, sample `m`.
///
/// The phase is reduced modulo one turn before evaluating `cis` so that
/// large `f·m` products do not lose precision.
#[inline]
pub(crate) fn atom_sample(f: f64, m: usize) -> Complex64 {
    let x = f * m as f64;
    let x = x - x.round();
    Complex64::cis(-TAU * x)
}

/// Steering atom at normalized frequency `f`.
pub(crate) fn atom_at_frequency(f: f64, m_samples: usize) -> ComplexSignal {
    (0..m_samples).map(|m| atom_sample(f, m)).collect()
}

/// Steering atom `a(v)`.
pub fn steering_atom(cfg: &RadarConfig, v: f64) -> ComplexSignal {
    atom_at_frequency(cfg.normalized_frequency(v), cfg.m_samples())
}

/// Ideal received signal `Σ_k α_k a(v_k)`.
pub fn synthesize(cfg: &RadarConfig, scene: &Scene) -> ComplexSignal {
    let mut y = ComplexSignal::zeros(cfg.m_samples());
    for t in scene.targets() {
        let f = cfg.normalized_frequency(t.velocity);
        for (m, s) in y.iter_mut().enumerate() {
            *s += t.alpha * atom_sample(f, m);
        }
    }
    y
}

/// Draws from `CN(0, 1)`: real and imaginary parts are `N(0, 1/2)`.
pub fn sample_complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
}

/// Draws `k` targets with `CN(0,1)` gains and velocities uniform on `[-P/2, P/2)`.
pub fn sample_scene<R: Rng + ?Sized>(cfg: &RadarConfig, k: usize, rng: &mut R) -> Result<Scene> {
    sample_scene_separated(cfg, k, None, rng)
}

/// Like [`sample_scene`], optionally rejecting draws whose velocities come
/// closer than `min_separation` (in resolution units, torus distance).
pub fn sample_scene_separated<R: Rng + ?Sized>(
    cfg: &RadarConfig,
    k: usize,
    min_separation: Option<f64>,
    rng: &mut R,
) -> Result<Scene> {
    if k == 0 {
        return Err(QcompError::InvalidConfig("a scene needs at least one target".into()));
    }
    if let Some(sep) = min_separation {
        // k points at pairwise distance >= sep need k·sep <= M resolution cells.
        if sep.is_nan() || sep < 0.0 || sep * k as f64 > cfg.m_samples() as f64 {
            return Err(QcompError::InvalidConfig(format!(
                "cannot place {k} targets {sep} resolution cells apart"
            )));
        }
    }
    let mut targets: Vec<Target> = Vec::with_capacity(k);
    while targets.len() < k {
        let alpha = sample_complex_normal(rng);
        let f: f64 = rng.random_range(-0.5..0.5);
        let velocity = cfg.span() * f;
        if let Some(sep) = min_separation {
            let too_close = targets
                .iter()
                .any(|t| crate::evaluation::torus_distance(t.velocity, velocity, cfg.span()) < sep * cfg.resolution());
            if too_close {
                continue;
            }
        }
        targets.push(Target { alpha, velocity });
    }
    Ok(Scene { targets })
}
