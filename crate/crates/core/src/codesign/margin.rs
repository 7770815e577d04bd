//! Largest threshold scale `s` for which `⟨W, B_e⟩ ≥ s·Δf_e` admits a lifted
//! matrix in the spectraplex, estimated by projected ascent on a soft
//! minimum of the ratios `⟨W, B_e⟩ / Δf_e`. The returned scale is always
//! attained by the returned matrix, so it is a certified lower estimate.

use super::sdp::{entry_inner, join, split, Halfspace};
use super::{FracMatrix, LiftedMatrix};
use crate::function_space::ConstraintSet;
use crate::linalg::{self, CMatrix};

const ITERATIONS: usize = 400;
const REFRESH: usize = 25;
const FULL_SET_LIMIT: usize = 50_000;
const WORKING_SET: usize = 20_000;

fn min_ratio(cs: &ConstraintSet, c: &FracMatrix, w_re: &[f64], n: usize) -> (f64, Vec<(f64, usize)>) {
    let mut ratios: Vec<(f64, usize)> = cs
        .iter()
        .enumerate()
        .filter(|(_, e)| e.delta_f > 0.0)
        .map(|(k, e)| (entry_inner(e, c, w_re, n) / e.delta_f, k))
        .collect();
    let min = ratios.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    ratios.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    (min, ratios)
}

/// Returns `(s, W)` with `min_e ⟨W, B_e⟩ / Δf_e = s`. Sets without positive
/// thresholds give `s = ∞`.
pub fn max_feasible_scale(cs: &ConstraintSet, c: &FracMatrix) -> (f64, LiftedMatrix) {
    let n = cs.dim();
    let tau = cs.power_budget();
    let mut w = CMatrix::identity(n, n).scale(tau / n as f64);
    let (mut w_re, mut w_im) = split(&w);
    let (mut best, ratios) = min_ratio(cs, c, &w_re, n);
    if !best.is_finite() {
        return (f64::INFINITY, LiftedMatrix::new(w));
    }
    let mut best_w = w.clone();
    let pick = |ratios: &[(f64, usize)]| -> Vec<Halfspace> {
        let take = if ratios.len() <= FULL_SET_LIMIT { ratios.len() } else { WORKING_SET };
        ratios[..take].iter().map(|&(_, e)| Halfspace::new(cs.get(e), c)).collect()
    };
    let mut working = pick(&ratios);

    for t in 0..ITERATIONS {
        let ratio: Vec<f64> = working.iter().map(|h| h.inner(&w_re, n) / h.delta_f).collect();
        let lo = ratio.iter().copied().fold(f64::INFINITY, f64::min);
        let progress = t as f64 / ITERATIONS as f64;
        let mu = (lo.abs().max(1e-12)) * (0.05 * (1.0 - progress) + 0.002);
        let mut grad = vec![0.0; n * n];
        let mut mass = 0.0;
        for (h, &r) in working.iter().zip(&ratio) {
            let pi = (-(r - lo) / mu).exp();
            if pi < 1e-12 {
                continue;
            }
            mass += pi;
            h.add(pi / h.delta_f, &mut grad, n);
        }
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm == 0.0 || mass == 0.0 {
            break;
        }
        let step = tau * 0.3 / ((t + 1) as f64).sqrt() / gnorm;
        for (wr, g) in w_re.iter_mut().zip(&grad) {
            *wr += step * g;
        }
        w = linalg::project_spectraplex(&join(&w_re, &w_im, n), tau);
        (w_re, w_im) = split(&w);

        if (t + 1) % REFRESH == 0 || t + 1 == ITERATIONS {
            let (m, ratios) = min_ratio(cs, c, &w_re, n);
            if m > best {
                best = m;
                best_w = w.clone();
            }
            if ratios.len() > FULL_SET_LIMIT {
                working = pick(&ratios);
            }
        }
    }
    (best, LiftedMatrix::new(best_w))
}
