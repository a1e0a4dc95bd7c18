//! Independent reference implementations used by the integration tests.
//!
//! Nothing here calls into the solver; the oracles only share the public
//! signal and dictionary types.

#![allow(dead_code, clippy::needless_range_loop)]

use qcomp::Complex64;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Least squares via the normal equations `(AᴴA) x = Aᴴb`, solved by
/// Gauss-Jordan elimination with partial pivoting. Columns are rescaled to
/// unit norm first so that badly scaled blocks stay well conditioned.
pub fn normal_equations(cols: &[Vec<Complex64>], b: &[Complex64]) -> Vec<Complex64> {
    let p = cols.len();
    let scales: Vec<f64> = cols
        .iter()
        .map(|col| col.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    let dot = |u: &[Complex64], v: &[Complex64]| -> Complex64 { u.iter().zip(v).map(|(a, b)| a.conj() * b).sum() };

    let mut g = vec![vec![c(0.0, 0.0); p + 1]; p];
    for i in 0..p {
        for j in 0..p {
            g[i][j] = dot(&cols[i], &cols[j]) / (scales[i] * scales[j]);
        }
        g[i][p] = dot(&cols[i], b) / scales[i];
    }
    for col in 0..p {
        let pivot = (col..p)
            .max_by(|&a, &b| g[a][col].norm().total_cmp(&g[b][col].norm()))
            .unwrap();
        g.swap(col, pivot);
        let d = g[col][col];
        for x in g[col].iter_mut() {
            *x /= d;
        }
        for row in 0..p {
            if row != col {
                let f = g[row][col];
                for k in 0..=p {
                    let sub = f * g[col][k];
                    g[row][k] -= sub;
                }
            }
        }
    }
    (0..p).map(|i| g[i][p] / scales[i]).collect()
}

/// Textbook OMP over an explicit list of atoms: direct correlations, argmax
/// over unselected atoms (lowest index on ties), least squares on the support.
pub fn reference_omp(atoms: &[Vec<Complex64>], y: &[Complex64], k: usize) -> (Vec<usize>, Vec<Complex64>) {
    let mut support: Vec<usize> = Vec::new();
    let mut gains = Vec::new();
    let mut residue = y.to_vec();
    for _ in 0..k {
        let mut best = (usize::MAX, -1.0);
        for (n, atom) in atoms.iter().enumerate() {
            if support.contains(&n) {
                continue;
            }
            let corr: Complex64 = atom.iter().zip(&residue).map(|(a, r)| a.conj() * r).sum();
            if corr.norm() > best.1 {
                best = (n, corr.norm());
            }
        }
        support.push(best.0);
        let cols: Vec<Vec<Complex64>> = support.iter().map(|&n| atoms[n].clone()).collect();
        gains = normal_equations(&cols, y);
        residue = y.to_vec();
        for (col, g) in cols.iter().zip(&gains) {
            for (r, a) in residue.iter_mut().zip(col) {
                *r -= g * a;
            }
        }
    }
    (support, gains)
}

/// Taylor mapping written out by hand: `(1, t, t²/2)` truncated to `order`.
pub fn mapping_by_hand(order: usize, t: f64) -> Vec<f64> {
    [1.0, t, t * t / 2.0][..order].to_vec()
}

/// `min_α ‖β − α C(t)‖²`, via the closed-form gain.
pub fn projection_objective(beta: &[Complex64], t: f64) -> f64 {
    let cvec = mapping_by_hand(beta.len(), t);
    let c_sq: f64 = cvec.iter().map(|x| x * x).sum();
    let dot: Complex64 = cvec.iter().zip(beta).map(|(&x, &b)| b * x).sum();
    let alpha = dot / c_sq;
    cvec.iter().zip(beta).map(|(&x, &b)| (b - alpha * x).norm_sqr()).sum()
}

/// Smallest objective over `points` equally spaced deviations in `[−Δ/2, Δ/2]`.
pub fn brute_force_objective(beta: &[Complex64], step: f64, points: usize) -> f64 {
    (0..points)
        .map(|j| -step / 2.0 + step * j as f64 / (points - 1) as f64)
        .map(|t| projection_objective(beta, t))
        .fold(f64::INFINITY, f64::min)
}

/// Signed deviation `v − centre`, reduced to `[−span/2, span/2)`.
pub fn signed_offset(v: f64, centre: f64, span: f64) -> f64 {
    let d = (v - centre).rem_euclid(span);
    if d >= span / 2.0 {
        d - span
    } else {
        d
    }
}
