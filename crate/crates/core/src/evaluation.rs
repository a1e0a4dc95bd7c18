//! Performance metrics: torus-distance errors, estimate pairing, residues
//! and their aggregation over Monte-Carlo trials.

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{QcompError, Result};
use crate::quantization::MeasurementChannel;
use crate::signal::{ComplexSignal, RadarConfig};

/// Largest `K` paired by exhaustive enumeration; larger problems use the
/// Hungarian algorithm.
pub const EXHAUSTIVE_PAIRING_LIMIT: usize = 8;

/// Wrapped distance `min_w |a − b + wP|`, in `[0, P/2]`.
pub fn torus_distance(a: f64, b: f64, period: f64) -> f64 {
    debug_assert!(period > 0.0);
    let d = (a - b).rem_euclid(period);
    d.min(period - d)
}

/// Torus error in units of the intrinsic resolution `P / M`.
pub fn normalized_error(v_hat: f64, v_true: f64, cfg: &RadarConfig) -> f64 {
    torus_distance(v_hat, v_true, cfg.span()) / cfg.resolution()
}

#[inline]
pub fn is_miss(error: f64) -> bool {
    error >= 1.0
}

/// Estimate-to-truth association.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pairing {
    /// `assignment[k]` is the index of the estimate paired with truth `k`.
    pub assignment: Vec<usize>,
    /// Normalized error `E_k` of truth `k` under the assignment.
    pub errors: Vec<f64>,
}

impl Pairing {
    pub fn misses(&self) -> usize {
        self.errors.iter().filter(|&&e| is_miss(e)).count()
    }
}

/// Pairs estimates with truths so that the miss count is minimal, breaking
/// ties by the smallest total error.
pub fn pair_estimates(estimates: &[f64], truths: &[f64], cfg: &RadarConfig) -> Result<Pairing> {
    if estimates.len() != truths.len() {
        return Err(QcompError::CountMismatch {
            expected: truths.len(),
            actual: estimates.len(),
        });
    }
    let k = truths.len();
    // err[i][j]: truth i against estimate j
    let err: Vec<Vec<f64>> = truths
        .iter()
        .map(|&t| estimates.iter().map(|&e| normalized_error(e, t, cfg)).collect())
        .collect();

    let assignment = if k <= EXHAUSTIVE_PAIRING_LIMIT {
        let mut best: Option<(usize, f64, Vec<usize>)> = None;
        for perm in (0..k).permutations(k) {
            let misses = perm.iter().enumerate().filter(|&(i, &j)| is_miss(err[i][j])).count();
            let total: f64 = perm.iter().enumerate().map(|(i, &j)| err[i][j]).sum();
            let better = match &best {
                None => true,
                Some((bm, bt, _)) => misses < *bm || (misses == *bm && total < *bt),
            };
            if better {
                best = Some((misses, total, perm));
            }
        }
        best.map(|b| b.2).unwrap_or_default()
    } else {
        // A miss outweighs any possible sum of hit errors (each E <= M/2).
        let miss_weight = k as f64 * cfg.m_samples() as f64 + 1.0;
        let cost: Vec<Vec<f64>> = err
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&e| if is_miss(e) { miss_weight + e } else { e })
                    .collect()
            })
            .collect();
        hungarian(&cost)
    };
    let errors = assignment.iter().enumerate().map(|(i, &j)| err[i][j]).collect();
    Ok(Pairing { assignment, errors })
}

/// Minimum-cost perfect matching on a square cost matrix (rows to columns),
/// shortest augmenting path formulation, `O(n³)`.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    // p[j]: row matched to column j (1-based, 0 = free)
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            row_to_col[p[j] - 1] = j - 1;
        }
    }
    row_to_col
}

/// Normalized reconstruction residue.
///
/// Full resolution: `‖y − D̄β̂‖ / ‖y‖`. Quantized: `‖z − A(D̄β̂)‖ / ‖z‖`, with
/// `input` the measurement the solver saw.
pub fn residue_metric(
    channel: &MeasurementChannel,
    input: &ComplexSignal,
    reconstruction: &ComplexSignal,
) -> Result<f64> {
    let scale = input.norm();
    if scale == 0.0 {
        return Err(QcompError::ZeroSignal);
    }
    let measured = channel.apply(reconstruction)?;
    Ok((input - &measured).norm() / scale)
}

/// Metrics of one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub errors: Vec<f64>,
    pub misses: Vec<bool>,
    pub assignment: Vec<usize>,
    pub residue: f64,
}

impl TrialOutcome {
    pub fn new(pairing: Pairing, residue: f64) -> Self {
        let misses = pairing.errors.iter().map(|&e| is_miss(e)).collect();
        Self {
            errors: pairing.errors,
            misses,
            assignment: pairing.assignment,
            residue,
        }
    }

    pub fn miss_count(&self) -> usize {
        self.misses.iter().filter(|&&m| m).count()
    }

    pub fn mean_error(&self) -> f64 {
        self.errors.iter().sum::<f64>() / self.errors.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub avg_error: f64,
    pub miss_rate: f64,
    /// Mean error over every unmissed estimate; `None` if all missed.
    pub avg_hit_error: Option<f64>,
    pub avg_residue: f64,
    pub trial_count: usize,
    pub estimate_count: usize,
}

/// Averages outcomes in list order.
pub fn aggregate(outcomes: &[TrialOutcome]) -> Result<MetricsSummary> {
    if outcomes.is_empty() {
        return Err(QcompError::InvalidExperiment("no trial outcomes to aggregate".into()));
    }
    let k = outcomes[0].errors.len();
    if let Some(bad) = outcomes.iter().find(|o| o.errors.len() != k) {
        return Err(QcompError::CountMismatch {
            expected: k,
            actual: bad.errors.len(),
        });
    }
    let trials = outcomes.len() as f64;
    let avg_error = outcomes.iter().map(TrialOutcome::mean_error).sum::<f64>() / trials;
    let misses: usize = outcomes.iter().map(TrialOutcome::miss_count).sum();
    let estimate_count = k * outcomes.len();
    let (hit_sum, hit_count) = outcomes
        .iter()
        .flat_map(|o| o.errors.iter())
        .filter(|&&e| !is_miss(e))
        .fold((0.0, 0usize), |(s, c), &e| (s + e, c + 1));
    let avg_residue = outcomes.iter().map(|o| o.residue).sum::<f64>() / trials;
    Ok(MetricsSummary {
        avg_error,
        miss_rate: misses as f64 / estimate_count as f64,
        avg_hit_error: (hit_count > 0).then(|| hit_sum / hit_count as f64),
        avg_residue,
        trial_count: outcomes.len(),
        estimate_count,
    })
}
