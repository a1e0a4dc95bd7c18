//! Quantized continuous orthogonal matching pursuit (QCOMP).
//!
//! Each of the `K` iterations picks the grid bin whose atom best correlates
//! with the residue, appends that bin's interpolant block to the active
//! matrix `D̄`, refits all coefficients by least squares against the
//! measurement `z`, and removes the *measured* reconstruction `A(D̄β̂)` from
//! `z`. A final per-target projection turns every block of coefficients into
//! a gain and an off-grid velocity.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dictionary::{mapping_into, Grid, InterpolatedDictionary, InterpolationScheme};
use crate::error::{QcompError, Result};
use crate::quantization::MeasurementChannel;
use crate::signal::ComplexSignal;

/// Number of evenly spaced deviations scanned by [`correct`] before refinement.
pub const CORRECTION_SCAN_POINTS: usize = 1024;

/// Singular values below this fraction of the largest (after column
/// equilibration) are treated as zero.
const RANK_TOLERANCE: f64 = 1e-12;

/// Inputs of one QCOMP run.
#[derive(Debug, Clone)]
pub struct SolverProblem<'a> {
    pub z: ComplexSignal,
    pub channel: MeasurementChannel,
    pub dict: &'a InterpolatedDictionary,
    pub k_targets: usize,
}

impl<'a> SolverProblem<'a> {
    pub fn new(
        z: ComplexSignal,
        channel: MeasurementChannel,
        dict: &'a InterpolatedDictionary,
        k_targets: usize,
    ) -> Result<Self> {
        if z.len() != dict.m_samples() {
            return Err(QcompError::LengthMismatch {
                expected: dict.m_samples(),
                actual: z.len(),
            });
        }
        if k_targets == 0 {
            return Err(QcompError::InvalidConfig("K must be >= 1".into()));
        }
        if k_targets > dict.n_bins() {
            return Err(QcompError::InvalidConfig(format!(
                "cannot select {k_targets} distinct bins from a grid of {}",
                dict.n_bins()
            )));
        }
        if let Some(d) = channel.dither() {
            if d.len() != z.len() {
                return Err(QcompError::LengthMismatch {
                    expected: z.len(),
                    actual: d.len(),
                });
            }
        }
        Ok(Self {
            z,
            channel,
            dict,
            k_targets,
        })
    }
}

/// Recovered gain and velocity of one target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub alpha: Complex64,
    pub velocity: f64,
    /// Set when the coefficient block was numerically zero.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverTrace {
    pub selected_bins: Vec<usize>,
    /// Final stacked coefficients, `K · I` entries in selection order.
    pub beta_hat: Vec<Complex64>,
    /// `‖r^(k+1)‖₂` after each iteration.
    pub residue_norms: Vec<f64>,
    /// `D̄^(K) β̂^(K)`.
    pub final_reconstruction: ComplexSignal,
    /// Some least-squares solve dropped a numerically dependent direction.
    pub rank_deficient: bool,
}

/// Picks `argmax_n |⟨a(v̄_n), r⟩|` over bins not in `excluded`; ties go to the
/// lowest index.
pub fn select_bin(dict: &InterpolatedDictionary, r: &[Complex64], excluded: &[usize]) -> Result<usize> {
    let corr = dict.correlations(r);
    let mut best: Option<(usize, f64)> = None;
    for (n, &c) in corr.iter().enumerate() {
        if excluded.contains(&n) {
            continue;
        }
        match best {
            Some((_, b)) if c <= b => {}
            _ => best = Some((n, c)),
        }
    }
    best.map(|(n, _)| n).ok_or(QcompError::NoCandidateBin)
}

/// Minimizer of `‖D̄β − z‖₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquares {
    pub beta: Vec<Complex64>,
    pub rank_deficient: bool,
}

/// Least squares through an SVD of the column-equilibrated matrix.
///
/// Full-rank systems get the unique minimizer. When a direction is numerically
/// dependent it is dropped, which yields the minimum-norm solution in the
/// equilibrated variables, and the result is flagged.
pub fn least_squares(dbar: &DMatrix<Complex64>, z: &[Complex64]) -> Result<LeastSquares> {
    let (rows, cols) = dbar.shape();
    if z.len() != rows {
        return Err(QcompError::LengthMismatch {
            expected: rows,
            actual: z.len(),
        });
    }
    if cols == 0 {
        return Ok(LeastSquares {
            beta: Vec::new(),
            rank_deficient: false,
        });
    }
    let scales: Vec<f64> = dbar.column_iter().map(|c| c.norm()).collect();
    let mut scaled = dbar.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        if scales[j] > 0.0 {
            col /= Complex64::new(scales[j], 0.0);
        }
    }
    let svd = scaled.svd(true, true);
    let u = svd.u.as_ref().expect("left singular vectors requested");
    let v_t = svd.v_t.as_ref().expect("right singular vectors requested");
    let sigma_max = svd.singular_values.max();
    let rhs = DVector::from_column_slice(z);
    let proj = u.adjoint() * rhs;

    let mut rank_deficient = scales.contains(&0.0);
    let mut coeffs = DVector::from_element(v_t.nrows(), Complex64::new(0.0, 0.0));
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > RANK_TOLERANCE * sigma_max && sigma_max > 0.0 {
            coeffs[i] = proj[i] / s;
        } else {
            rank_deficient = true;
        }
    }
    let scaled_beta = v_t.adjoint() * coeffs;
    let beta = scaled_beta
        .iter()
        .zip(&scales)
        .map(|(&b, &s)| if s > 0.0 { b / s } else { Complex64::new(0.0, 0.0) })
        .collect();
    Ok(LeastSquares { beta, rank_deficient })
}

/// `D̄ β`.
pub fn reconstruct(dbar: &DMatrix<Complex64>, beta: &[Complex64]) -> ComplexSignal {
    assert_eq!(dbar.ncols(), beta.len());
    let out = dbar * DVector::from_column_slice(beta);
    out.iter().copied().collect()
}

/// `z − A(D̄β̂)` with the problem's own channel (and stored dither).
pub fn update_residue(
    problem: &SolverProblem<'_>,
    dbar: &DMatrix<Complex64>,
    beta: &[Complex64],
) -> Result<ComplexSignal> {
    let recon = reconstruct(dbar, beta);
    let measured = problem.channel.apply(&recon)?;
    Ok(&problem.z - &measured)
}

/// Squared distance between `beta` and its best multiple of `C(t)`, with the
/// optimal gain. `C(t)` is real so the gain is `⟨C, β⟩ / ‖C‖²`.
fn projection_residual(
    scheme: InterpolationScheme,
    beta: &[Complex64],
    t: f64,
    coeffs: &mut [f64],
) -> (f64, Complex64) {
    mapping_into(scheme, t, coeffs);
    let c_sq: f64 = coeffs.iter().map(|c| c * c).sum();
    let dot: Complex64 = coeffs.iter().zip(beta).map(|(&c, &b)| b * c).sum();
    let alpha = dot / c_sq;
    let resid = coeffs.iter().zip(beta).map(|(&c, &b)| (b - alpha * c).norm_sqr()).sum();
    (resid, alpha)
}

/// Projects one coefficient block onto `{α C(t) : α ∈ ℂ, |t| ≤ Δ/2}`.
///
/// The deviation is found by a dense scan followed by Brent refinement
/// (parabolic steps with golden-section fallback) inside the bracket around
/// the best scan point.
pub fn correct(scheme: InterpolationScheme, beta_k: &[Complex64], grid: &Grid, bin: usize) -> Estimate {
    assert_eq!(beta_k.len(), scheme.order(), "coefficient block does not match scheme");
    let center = grid.bin(bin);
    let span = grid.n_bins() as f64 * grid.step();
    let wrap = |v: f64| span * crate::signal::wrap_unit(v / span);

    let beta_norm = beta_k.iter().map(|b| b.norm_sqr()).sum::<f64>().sqrt();
    if beta_norm < 1e-12 * (grid.m_samples() as f64).sqrt() {
        return Estimate {
            alpha: Complex64::new(0.0, 0.0),
            velocity: wrap(center),
            degenerate: true,
        };
    }
    if scheme == InterpolationScheme::None {
        return Estimate {
            alpha: beta_k[0],
            velocity: wrap(center),
            degenerate: false,
        };
    }

    let half = 0.5 * grid.step();
    let mut coeffs = [0.0; 3];
    let coeffs = &mut coeffs[..scheme.order()];
    let mut objective = |t: f64| projection_residual(scheme, beta_k, t, coeffs).0;

    let last = CORRECTION_SCAN_POINTS - 1;
    let point = |j: usize| -half + 2.0 * half * j as f64 / last as f64;
    let (mut best_j, mut best_val) = (0, f64::INFINITY);
    for j in 0..CORRECTION_SCAN_POINTS {
        let val = objective(point(j));
        if val < best_val {
            best_j = j;
            best_val = val;
        }
    }
    let lo = point(best_j.saturating_sub(1));
    let hi = point((best_j + 1).min(last));
    let (t_ref, val_ref) = brent_minimize(&mut objective, lo, hi, point(best_j), best_val);
    let t_hat = if val_ref <= best_val { t_ref } else { point(best_j) };
    let (_, alpha) = projection_residual(scheme, beta_k, t_hat, coeffs);
    Estimate {
        alpha,
        velocity: wrap(center + t_hat),
        degenerate: false,
    }
}

/// Brent's minimizer on `[a, b]` started from an interior guess `x0`.
fn brent_minimize<F: FnMut(f64) -> f64>(f: &mut F, mut a: f64, mut b: f64, x0: f64, f0: f64) -> (f64, f64) {
    const GOLD: f64 = 0.381_966_011_250_105_1;
    const TOL: f64 = 1e-10;
    const ZEPS: f64 = 1e-300;
    let (mut x, mut w, mut v) = (x0, x0, x0);
    let (mut fx, mut fw, mut fv) = (f0, f0, f0);
    let (mut d, mut e) = (0.0f64, 0.0f64);
    let scale = (b - a).abs();
    for _ in 0..100 {
        let xm = 0.5 * (a + b);
        let tol1 = TOL * scale + ZEPS;
        let tol2 = 2.0 * tol1;
        if (x - xm).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let etemp = e;
            if p.abs() < (0.5 * q * etemp).abs() && p > q * (a - x) && p < q * (b - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = tol1.copysign(xm - x);
                }
                golden = false;
            }
        }
        if golden {
            e = if x >= xm { a - x } else { b - x };
            d = GOLD * e;
        }
        let u = if d.abs() >= tol1 { x + d } else { x + tol1.copysign(d) };
        let fu = f(u);
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    (x, fx)
}

/// Runs `K` QCOMP iterations and the final correction step.
pub fn qcomp(problem: &SolverProblem<'_>) -> Result<(Vec<Estimate>, SolverTrace)> {
    let dict = problem.dict;
    let m = dict.m_samples();
    let order = dict.order();
    let k_targets = problem.k_targets;

    let mut residue = problem.z.clone();
    let mut selected: Vec<usize> = Vec::with_capacity(k_targets);
    let mut active: Vec<Complex64> = Vec::with_capacity(m * order * k_targets);
    let mut residue_norms = Vec::with_capacity(k_targets);
    let mut rank_deficient = false;
    let mut beta = Vec::new();
    let mut dbar = DMatrix::<Complex64>::zeros(m, 0);

    for _ in 0..k_targets {
        let n = select_bin(dict, &residue, &selected)?;
        selected.push(n);
        active.extend_from_slice(dict.block(n));
        dbar = DMatrix::from_column_slice(m, active.len() / m, &active);
        let ls = least_squares(&dbar, &problem.z)?;
        rank_deficient |= ls.rank_deficient;
        beta = ls.beta;
        residue = update_residue(problem, &dbar, &beta)?;
        residue_norms.push(residue.norm());
    }

    let estimates = selected
        .iter()
        .zip(beta.chunks(order))
        .map(|(&n, block)| correct(dict.scheme(), block, dict.grid(), n))
        .collect();
    let final_reconstruction = reconstruct(&dbar, &beta);
    Ok((
        estimates,
        SolverTrace {
            selected_bins: selected,
            beta_hat: beta,
            residue_norms,
            final_reconstruction,
            rank_deficient,
        },
    ))
}
