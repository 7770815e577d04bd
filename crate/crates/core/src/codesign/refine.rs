//! Rank-one improvement of the modulation vector for a fixed coding matrix.
//!
//! Candidates drawn from `CN(0, W)` and an evenly spaced real constellation
//! on the value index compete with the principal eigenvector; the winner is
//! then polished by ascent on a soft minimum of the ratios
//! `lhs_e(x) / Δf_e` over the sphere `‖x‖² = τ`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{FracMatrix, LiftedMatrix};
use crate::function_space::{ConstraintRef, ConstraintSet};
use crate::linalg;

const POLISH_ITERATIONS: usize = 300;
const REFRESH: usize = 20;
const WORKING_SET: usize = 20_000;
const DRAWS: usize = 48;

/// `Σ_ℓ |Σ_t d_t c_{i_t ℓ} x_{i_t}|²` for a fractional coding matrix.
pub(crate) fn lhs(entry: ConstraintRef<'_>, x: &[Complex64], c: &FracMatrix) -> f64 {
    (0..c.cols)
        .map(|slot| {
            entry
                .support
                .iter()
                .zip(entry.coeffs)
                .map(|(&i, &d)| x[i as usize] * (f64::from(d) * c.get(i as usize, slot)))
                .sum::<Complex64>()
                .norm_sqr()
        })
        .sum()
}

/// Ratios `lhs_e / Δf_e` sorted ascending, over entries with positive thresholds.
fn ratios(cs: &ConstraintSet, x: &[Complex64], c: &FracMatrix) -> Vec<(f64, usize)> {
    let mut r: Vec<(f64, usize)> = cs
        .iter()
        .enumerate()
        .filter(|(_, e)| e.delta_f > 0.0)
        .map(|(k, e)| (lhs(e, x, c) / e.delta_f, k))
        .collect();
    r.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    r
}

pub(crate) fn min_ratio(cs: &ConstraintSet, x: &[Complex64], c: &FracMatrix) -> f64 {
    cs.iter()
        .filter(|e| e.delta_f > 0.0)
        .map(|e| lhs(e, x, c) / e.delta_f)
        .fold(f64::INFINITY, f64::min)
}

fn to_sphere(x: &mut [Complex64], tau: f64) {
    let energy: f64 = x.iter().map(|z| z.norm_sqr()).sum();
    if energy > 0.0 {
        let s = (tau / energy).sqrt();
        x.iter_mut().for_each(|z| *z *= s);
    }
}

/// Real constellation `v − (Q − 1)/2` on value index `v`, repeated per node.
fn index_pam(cs: &ConstraintSet) -> Vec<Complex64> {
    let q = cs.q().max(1);
    let mid = (q as f64 - 1.0) / 2.0;
    let mut x: Vec<Complex64> = (0..cs.dim())
        .map(|i| Complex64::new((i % q) as f64 - mid, 0.0))
        .collect();
    to_sphere(&mut x, cs.power_budget());
    x
}

/// Best of the principal eigenvector, an index-spaced real constellation and
/// `CN(0, W)` draws, by smallest ratio.
pub(crate) fn randomized_candidate(
    cs: &ConstraintSet,
    c: &FracMatrix,
    w: &LiftedMatrix,
    x_top: Vec<Complex64>,
    seed: u64,
) -> Vec<Complex64> {
    let n = w.dim();
    let tau = cs.power_budget();
    let (values, vectors) = linalg::hermitian_eigen(&w.w);
    let mut best = x_top;
    to_sphere(&mut best, tau);
    let mut best_score = min_ratio(cs, &best, c);
    let pam = index_pam(cs);
    let score = min_ratio(cs, &pam, c);
    if score > best_score {
        best_score = score;
        best = pam;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7a4d_0b1e);
    for _ in 0..DRAWS {
        let coeffs: Vec<Complex64> = values
            .iter()
            .map(|&lam| {
                let g = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
                g * (lam.max(0.0) / 2.0).sqrt()
            })
            .collect();
        let mut x: Vec<Complex64> = (0..n)
            .map(|r| (0..n).map(|k| vectors[(r, k)] * coeffs[k]).sum())
            .collect();
        to_sphere(&mut x, tau);
        let score = min_ratio(cs, &x, c);
        if score > best_score {
            best_score = score;
            best = x;
        }
    }
    linalg::normalize_phase(&mut best);
    best
}

/// Soft-minimum ascent on the ratios. Never returns a point whose smallest
/// ratio is below the starting one.
pub(crate) fn polish(cs: &ConstraintSet, c: &FracMatrix, x0: &[Complex64]) -> Vec<Complex64> {
    let tau = cs.power_budget();
    let mut x = x0.to_vec();
    to_sphere(&mut x, tau);
    let all = ratios(cs, &x, c);
    let Some(&(mut best, _)) = all.first() else {
        return x;
    };
    let mut best_x = x.clone();
    let mut working: Vec<usize> = all.iter().take(WORKING_SET).map(|&(_, e)| e).collect();
    let mut step = 0.05;
    for t in 0..POLISH_ITERATIONS {
        let r: Vec<f64> = working
            .iter()
            .map(|&e| {
                let entry = cs.get(e);
                lhs(entry, &x, c) / entry.delta_f
            })
            .collect();
        let lo = r.iter().copied().fold(f64::INFINITY, f64::min);
        let mu = lo.abs().max(1e-300) * (0.05 * (1.0 - t as f64 / POLISH_ITERATIONS as f64) + 0.002);
        let mut grad = vec![Complex64::new(0.0, 0.0); x.len()];
        for (&e, &ratio) in working.iter().zip(&r) {
            let weight = (-(ratio - lo) / mu).exp();
            if weight < 1e-12 {
                continue;
            }
            let entry = cs.get(e);
            let scale = weight / entry.delta_f;
            for slot in 0..c.cols {
                let a: Complex64 = entry
                    .support
                    .iter()
                    .zip(entry.coeffs)
                    .map(|(&i, &d)| x[i as usize] * (f64::from(d) * c.get(i as usize, slot)))
                    .sum();
                for (&i, &d) in entry.support.iter().zip(entry.coeffs) {
                    grad[i as usize] += a * (scale * f64::from(d) * c.get(i as usize, slot));
                }
            }
        }
        let gnorm = grad.iter().map(|g| g.norm_sqr()).sum::<f64>().sqrt();
        if !(gnorm > 0.0) {
            break;
        }
        let xnorm = tau.sqrt();
        let trial: Vec<Complex64> = x
            .iter()
            .zip(&grad)
            .map(|(z, g)| z + g * (step * xnorm / gnorm))
            .collect();
        x = trial;
        to_sphere(&mut x, tau);

        if (t + 1) % REFRESH == 0 || t + 1 == POLISH_ITERATIONS {
            let all = ratios(cs, &x, c);
            let m = all[0].0;
            if m > best {
                best = m;
                best_x = x.clone();
            } else {
                step *= 0.5;
                x = best_x.clone();
            }
            working = all.iter().take(WORKING_SET).map(|&(_, e)| e).collect();
        }
    }
    linalg::normalize_phase(&mut best_x);
    best_x
}
