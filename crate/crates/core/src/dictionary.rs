//! Velocity grid and interpolant dictionaries.
//!
//! Every grid bin `v̄_n` carries a block `D_n = [d_1[n] … d_I[n]]` of
//! interpolant atoms. With Taylor schemes `d_i[n]` is the `(i-1)`-th
//! derivative of `a(v)` at `v̄_n`, and an off-grid atom is approximated by
//! `a(v̄_n + t) ≈ D_n · C(t)`.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{QcompError, Result};
use crate::signal::{atom_sample, ComplexSignal, RadarConfig};

/// Uniform grid of `N` bins over `[-P/2, P/2)`, anchored at the left edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    n_bins: usize,
    span: f64,
    m_samples: usize,
}

impl Grid {
    pub fn new(cfg: &RadarConfig, n_bins: usize) -> Result<Self> {
        if n_bins == 0 {
            return Err(QcompError::InvalidConfig("n_bins must be >= 1".into()));
        }
        Ok(Self {
            n_bins,
            span: cfg.span(),
            m_samples: cfg.m_samples(),
        })
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    /// Bin spacing `Δ = P / N`.
    pub fn step(&self) -> f64 {
        self.span / self.n_bins as f64
    }

    pub fn m_samples(&self) -> usize {
        self.m_samples
    }

    /// Grid density `ρ = N / M`.
    pub fn density(&self) -> f64 {
        self.n_bins as f64 / self.m_samples as f64
    }

    /// Velocity of bin `n` (zero-based).
    pub fn bin(&self, n: usize) -> f64 {
        debug_assert!(n < self.n_bins);
        -0.5 * self.span + n as f64 * self.step()
    }

    pub(crate) fn bin_frequency(&self, n: usize) -> f64 {
        -0.5 + n as f64 / self.n_bins as f64
    }

    pub fn bins(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_bins).map(|n| self.bin(n))
    }
}

/// Interpolation scheme: number and kind of interpolant atoms per bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InterpolationScheme {
    /// Plain on-grid atoms (`I = 1`); reduces QCOMP to OMP.
    None,
    /// First-order Taylor expansion (`I = 2`).
    Taylor1,
    /// Second-order Taylor expansion (`I = 3`).
    Taylor2,
}

impl InterpolationScheme {
    pub const ALL: [InterpolationScheme; 3] = [Self::None, Self::Taylor1, Self::Taylor2];

    /// Number of interpolant atoms per bin.
    pub fn order(self) -> usize {
        match self {
            Self::None => 1,
            Self::Taylor1 => 2,
            Self::Taylor2 => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Taylor1 => "taylor1",
            Self::Taylor2 => "taylor2",
        }
    }
}

impl fmt::Display for InterpolationScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for InterpolationScheme {
    type Err = QcompError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "none" => Ok(Self::None),
            "taylor1" => Ok(Self::Taylor1),
            "taylor2" => Ok(Self::Taylor2),
            other => Err(QcompError::InvalidExperiment(format!(
                "unknown scheme {other:?} (expected none, taylor1 or taylor2)"
            ))),
        }
    }
}

/// Writes `C(t)` into `out` (length `I`).
#[inline]
pub(crate) fn mapping_into(scheme: InterpolationScheme, t: f64, out: &mut [f64]) {
    out[0] = 1.0;
    if scheme.order() > 1 {
        out[1] = t;
    }
    if scheme.order() > 2 {
        out[2] = 0.5 * t * t;
    }
}

/// Mapping function `C(t)` from an off-grid deviation to interpolation
/// coefficients: `(1)`, `(1, t)` or `(1, t, t²/2)`.
pub fn mapping(scheme: InterpolationScheme, t: f64) -> Vec<f64> {
    let mut out = vec![0.0; scheme.order()];
    mapping_into(scheme, t, &mut out);
    out
}

/// Grid plus precomputed interpolant blocks.
///
/// Immutable after construction and shared read-only between workers.
#[derive(Clone)]
pub struct InterpolatedDictionary {
    grid: Grid,
    scheme: InterpolationScheme,
    m_samples: usize,
    span: f64,
    /// Column-major blocks: bin, then interpolant, then sample.
    columns: Vec<Complex64>,
    fft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for InterpolatedDictionary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("InterpolatedDictionary")
            .field("grid", &self.grid)
            .field("scheme", &self.scheme)
            .field("m_samples", &self.m_samples)
            .finish_non_exhaustive()
    }
}

/// Builds the grid and every block in closed form.
pub fn build_dictionary(
    cfg: &RadarConfig,
    n_bins: usize,
    scheme: InterpolationScheme,
) -> Result<InterpolatedDictionary> {
    let grid = Grid::new(cfg, n_bins)?;
    let m_samples = cfg.m_samples();
    let order = scheme.order();
    let span = cfg.span();
    let mut columns = Vec::with_capacity(n_bins * order * m_samples);
    for n in 0..n_bins {
        let f = grid.bin_frequency(n);
        let atom: Vec<Complex64> = (0..m_samples).map(|m| atom_sample(f, m)).collect();
        for i in 0..order {
            // d/dv a_m(v) = (-i 2π m / P) a_m(v)
            columns.extend(atom.iter().enumerate().map(|(m, &a)| {
                let factor = Complex64::new(0.0, -TAU * m as f64 / span);
                factor.powu(i as u32) * a
            }));
        }
    }
    let fft = FftPlanner::new().plan_fft_inverse(n_bins);
    Ok(InterpolatedDictionary {
        grid,
        scheme,
        m_samples,
        span,
        columns,
        fft,
    })
}

impl InterpolatedDictionary {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn scheme(&self) -> InterpolationScheme {
        self.scheme
    }

    pub fn order(&self) -> usize {
        self.scheme.order()
    }

    pub fn m_samples(&self) -> usize {
        self.m_samples
    }

    pub fn n_bins(&self) -> usize {
        self.grid.n_bins
    }

    pub fn span(&self) -> f64 {
        self.span
    }

    /// Interpolant `d_{i+1}[n]` (zero-based `i`).
    pub fn column(&self, n: usize, i: usize) -> &[Complex64] {
        assert!(n < self.n_bins() && i < self.order());
        let start = (n * self.order() + i) * self.m_samples;
        &self.columns[start..start + self.m_samples]
    }

    /// On-grid atom `a(v̄_n)`.
    pub fn atom(&self, n: usize) -> &[Complex64] {
        self.column(n, 0)
    }

    /// Block `D_n` as `I` contiguous columns of length `M`.
    pub fn block(&self, n: usize) -> &[Complex64] {
        assert!(n < self.n_bins());
        let len = self.order() * self.m_samples;
        &self.columns[n * len..(n + 1) * len]
    }

    /// `|⟨a(v̄_n), r⟩|` for every bin.
    ///
    /// Computed with one length-`N` FFT: `conj(a_m(v̄_n)) = (-1)^m e^{i2π nm/N}`,
    /// so the correlations are the inverse DFT of `(-1)^m r_m` folded modulo `N`.
    pub fn correlations(&self, r: &[Complex64]) -> Vec<f64> {
        assert_eq!(r.len(), self.m_samples);
        let n = self.n_bins();
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for (m, &x) in r.iter().enumerate() {
            if m % 2 == 0 {
                buf[m % n] += x;
            } else {
                buf[m % n] -= x;
            }
        }
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
        self.fft.process_with_scratch(&mut buf, &mut scratch);
        buf.into_iter().map(|z| z.norm()).collect()
    }
}

/// `D_n · C(t)`: interpolated approximation of `a(v̄_n + t)`.
pub fn interpolate_atom(dict: &InterpolatedDictionary, n: usize, t: f64) -> ComplexSignal {
    debug_assert!(t.abs() <= 0.5 * dict.grid.step() * (1.0 + 1e-12));
    let coeffs = mapping(dict.scheme, t);
    let mut out = ComplexSignal::zeros(dict.m_samples);
    for (i, &c) in coeffs.iter().enumerate() {
        for (o, d) in out.iter_mut().zip(dict.column(n, i)) {
            *o += d * c;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::steering_atom;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dist(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
    }

    fn norm(a: &[Complex64]) -> f64 {
        a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    #[test]
    fn grid_layout() {
        let cfg = RadarConfig::normalized(8).unwrap();
        let g = Grid::new(&cfg, 16).unwrap();
        assert_eq!(g.step(), 1.0 / 16.0);
        assert_eq!(g.bin(0), -0.5);
        assert_eq!(g.bin(8), 0.0);
        assert_eq!(g.density(), 2.0);
        assert!(Grid::new(&cfg, 0).is_err());
    }

    #[test]
    fn scheme_none_blocks_are_grid_atoms() {
        let cfg = RadarConfig::normalized(32).unwrap();
        let d = build_dictionary(&cfg, 40, InterpolationScheme::None).unwrap();
        for n in 0..40 {
            let a = steering_atom(&cfg, d.grid().bin(n));
            assert!(dist(d.block(n), &a) < 1e-12);
            assert!((norm(d.atom(n)) - 32f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn first_derivative_at_zero_velocity() {
        let cfg = RadarConfig::normalized(16).unwrap();
        let d = build_dictionary(&cfg, 16, InterpolationScheme::Taylor1).unwrap();
        let n = 8;
        assert_eq!(d.grid().bin(n), 0.0);
        for (m, s) in d.column(n, 1).iter().enumerate() {
            let expect = Complex64::new(0.0, -TAU * m as f64);
            assert!((s - expect).norm() < 1e-12 * (1.0 + expect.norm()));
        }
    }

    #[test]
    fn derivative_blocks_match_finite_differences() {
        let cfg = RadarConfig::normalized(64).unwrap();
        let d = build_dictionary(&cfg, 128, InterpolationScheme::Taylor2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..5 {
            let n = rng.random_range(0..128);
            let v = d.grid().bin(n);
            let h = 1e-4 * d.grid().step();
            let plus = steering_atom(&cfg, v + h);
            let minus = steering_atom(&cfg, v - h);
            let center = steering_atom(&cfg, v);
            let first: Vec<Complex64> = plus
                .iter()
                .zip(minus.iter())
                .map(|(p, q)| (p - q) / (2.0 * h))
                .collect();
            let second: Vec<Complex64> = (0..64)
                .map(|m| (plus[m] - 2.0 * center[m] + minus[m]) / (h * h))
                .collect();
            assert!(dist(&first, d.column(n, 1)) < 1e-5 * norm(d.column(n, 1)));
            assert!(dist(&second, d.column(n, 2)) < 1e-5 * norm(d.column(n, 2)));
        }
    }

    #[test]
    fn mapping_values() {
        for s in InterpolationScheme::ALL {
            let c = mapping(s, 0.0);
            assert_eq!(c.len(), s.order());
            assert_eq!(c[0], 1.0);
            assert!(c[1..].iter().all(|&x| x == 0.0));
        }
        let step = 0.01;
        assert_eq!(mapping(InterpolationScheme::Taylor1, 0.3 * step), vec![1.0, 0.3 * step]);
        assert_eq!(
            mapping(InterpolationScheme::Taylor2, -step / 2.0),
            vec![1.0, -step / 2.0, step * step / 8.0]
        );
    }

    #[test]
    fn correlations_match_direct_inner_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for (m, n) in [(16, 4), (16, 12), (16, 16), (16, 80), (7, 5)] {
            let cfg = RadarConfig::normalized(m).unwrap();
            let d = build_dictionary(&cfg, n, InterpolationScheme::None).unwrap();
            let r: Vec<Complex64> = (0..m)
                .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let fast = d.correlations(&r);
            for (k, &c) in fast.iter().enumerate() {
                let direct: Complex64 = d.atom(k).iter().zip(&r).map(|(a, x)| a.conj() * x).sum();
                assert!((c - direct.norm()).abs() < 1e-10, "m={m} n={n} bin {k}");
            }
        }
    }

    #[test]
    fn interpolation_at_zero_is_grid_atom() {
        let cfg = RadarConfig::normalized(32).unwrap();
        for s in InterpolationScheme::ALL {
            let d = build_dictionary(&cfg, 64, s).unwrap();
            assert_eq!(interpolate_atom(&d, 5, 0.0).as_slice(), d.atom(5));
        }
    }

    #[test]
    fn scheme_none_ignores_deviation() {
        let cfg = RadarConfig::normalized(32).unwrap();
        let d = build_dictionary(&cfg, 64, InterpolationScheme::None).unwrap();
        let step = d.grid().step();
        assert_eq!(
            interpolate_atom(&d, 9, 0.4 * step),
            interpolate_atom(&d, 9, -0.1 * step)
        );
    }

    fn relative_interp_error(m: usize, rho: usize, scheme: InterpolationScheme, frac: f64) -> f64 {
        let cfg = RadarConfig::normalized(m).unwrap();
        let d = build_dictionary(&cfg, rho * m, scheme).unwrap();
        let n = rho * m / 3;
        let t = frac * d.grid().step();
        let exact = steering_atom(&cfg, d.grid().bin(n) + t);
        dist(&exact, &interpolate_atom(&d, n, t)) / (m as f64).sqrt()
    }

    #[test]
    fn taylor1_quarter_bin_error() {
        let e = relative_interp_error(256, 5, InterpolationScheme::Taylor1, 0.25);
        assert!(e < 0.05, "relative error {e}");
    }

    #[test]
    fn interpolation_error_shrinks_with_density() {
        for s in [InterpolationScheme::Taylor1, InterpolationScheme::Taylor2] {
            let errs: Vec<f64> = [1, 2, 4, 8]
                .iter()
                .map(|&rho| relative_interp_error(64, rho, s, 0.3))
                .collect();
            assert!(errs.windows(2).all(|w| w[1] < w[0]), "{s}: {errs:?}");
        }
    }

    #[test]
    fn interpolation_residual_order() {
        let m = 256;
        let cfg = RadarConfig::normalized(m).unwrap();
        for s in InterpolationScheme::ALL {
            let d = build_dictionary(&cfg, m, s).unwrap();
            let n = 77;
            let res = |t: f64| {
                let exact = steering_atom(&cfg, d.grid().bin(n) + t);
                dist(&exact, &interpolate_atom(&d, n, t))
            };
            let (t0, t1) = (1e-3 * cfg.resolution(), 1e-2 * cfg.resolution());
            let slope = (res(t1) / res(t0)).log10();
            assert!((slope - s.order() as f64).abs() < 0.3, "{s}: slope {slope}");
            if s == InterpolationScheme::Taylor2 {
                // leading error term is odd in t: residual magnitude even
                let (a, b) = (res(t1), res(-t1));
                assert!((a - b).abs() < 0.05 * a);
            }
        }
    }

    #[test]
    fn blocks_have_full_column_rank() {
        let cfg = RadarConfig::normalized(64).unwrap();
        let d = build_dictionary(&cfg, 128, InterpolationScheme::Taylor2).unwrap();
        let blk = d.block(17);
        let mat = DMatrix::from_column_slice(64, 3, blk);
        let sv = mat.singular_values();
        let cond = sv.max() / sv.min();
        assert!(cond.is_finite() && sv.min() > 0.0, "cond {cond}");
    }
}
