//! W-step: find a Hermitian `W ⪰ 0` with `tr W ≤ τ` and
//! `⟨W, B_e⟩ ≥ Δf_e` for every entry, where `B_e = Σ_ℓ b_ℓ b_ℓᵀ` and
//! `b_ℓ = d_e ∘ c_ℓ`.
//!
//! Cyclic Dykstra projections alternate between the spectraplex and the
//! halfspaces. Only a working set of halfspaces takes part in the sweeps;
//! the full set is re-checked between rounds and violated entries join.

use num_complex::Complex64;

use super::{FracMatrix, LiftedMatrix, SolveParams};
use crate::error::{Error, Result};
use crate::function_space::{ConstraintRef, ConstraintSet};
use crate::linalg::{self, CMatrix};

/// Halfspace data of one entry restricted to its support.
pub(crate) struct Halfspace {
    pub support: Vec<usize>,
    /// `b[ℓ * s + t]` for slot `ℓ` and support position `t`.
    pub b: Vec<f64>,
    pub delta_f: f64,
    pub norm2: f64,
    pub lambda_max: f64,
}

impl Halfspace {
    pub fn new(entry: ConstraintRef<'_>, c: &FracMatrix) -> Self {
        let s = entry.support.len();
        let l = c.cols;
        let support: Vec<usize> = entry.support.iter().map(|&i| i as usize).collect();
        let mut b = vec![0.0; l * s];
        for slot in 0..l {
            for (t, (&i, &d)) in support.iter().zip(entry.coeffs).enumerate() {
                b[slot * s + t] = f64::from(d) * c.get(i, slot);
            }
        }
        let mut gram = vec![0.0; l * l];
        for a in 0..l {
            for z in a..l {
                let g: f64 = (0..s).map(|t| b[a * s + t] * b[z * s + t]).sum();
                gram[a * l + z] = g;
                gram[z * l + a] = g;
            }
        }
        let norm2 = gram.iter().map(|g| g * g).sum();
        let lambda_max = linalg::max_eigenvalue_real(&gram, l).max(0.0);
        Self {
            support,
            b,
            delta_f: entry.delta_f,
            norm2,
            lambda_max,
        }
    }

    /// `⟨W, B⟩ = Σ_ℓ b_ℓᵀ Re(W) b_ℓ`.
    pub fn inner(&self, w_re: &[f64], n: usize) -> f64 {
        let s = self.support.len();
        let mut total = 0.0;
        for bl in self.b.chunks_exact(s.max(1)) {
            for (t, &i) in self.support.iter().enumerate() {
                if bl[t] == 0.0 {
                    continue;
                }
                let row = &w_re[i * n..(i + 1) * n];
                let mut acc = 0.0;
                for (u, &j) in self.support.iter().enumerate() {
                    acc += row[j] * bl[u];
                }
                total += bl[t] * acc;
            }
        }
        total
    }

    /// `W ← W + β B`.
    pub fn add(&self, beta: f64, w_re: &mut [f64], n: usize) {
        let s = self.support.len();
        for bl in self.b.chunks_exact(s.max(1)) {
            for (t, &i) in self.support.iter().enumerate() {
                let bt = beta * bl[t];
                if bt == 0.0 {
                    continue;
                }
                for (u, &j) in self.support.iter().enumerate() {
                    w_re[i * n + j] += bt * bl[u];
                }
            }
        }
    }
}

/// `⟨W, B_e⟩` without materializing the halfspace.
pub(crate) fn entry_inner(entry: ConstraintRef<'_>, c: &FracMatrix, w_re: &[f64], n: usize) -> f64 {
    let mut total = 0.0;
    let mut b = [0.0f64; 64];
    let s = entry.support.len();
    let buf = if s <= 64 { &mut b[..s] } else { return Halfspace::new(entry, c).inner(w_re, n) };
    for slot in 0..c.cols {
        for (t, (&i, &d)) in entry.support.iter().zip(entry.coeffs).enumerate() {
            buf[t] = f64::from(d) * c.get(i as usize, slot);
        }
        for (t, &i) in entry.support.iter().enumerate() {
            if buf[t] == 0.0 {
                continue;
            }
            let row = &w_re[i as usize * n..];
            let mut acc = 0.0;
            for (u, &j) in entry.support.iter().enumerate() {
                acc += row[j as usize] * buf[u];
            }
            total += buf[t] * acc;
        }
    }
    total
}

pub(crate) fn split(w: &CMatrix) -> (Vec<f64>, Vec<f64>) {
    let n = w.nrows();
    let mut re = vec![0.0; n * n];
    let mut im = vec![0.0; n * n];
    for r in 0..n {
        for c in 0..n {
            re[r * n + c] = w[(r, c)].re;
            im[r * n + c] = w[(r, c)].im;
        }
    }
    (re, im)
}

pub(crate) fn join(re: &[f64], im: &[f64], n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |r, c| Complex64::new(re[r * n + c], im[r * n + c]))
}

#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct SdpStats {
    pub sweeps: usize,
    pub residual: f64,
}

pub fn solve_modulation_feasibility(
    cs: &ConstraintSet,
    c: &FracMatrix,
    params: &SolveParams,
) -> Result<LiftedMatrix> {
    feasibility(cs, c, params, None).map(|(w, _)| w)
}

/// As [`solve_modulation_feasibility`], projecting from `start` instead of
/// the scaled identity.
pub fn solve_modulation_feasibility_from(
    cs: &ConstraintSet,
    c: &FracMatrix,
    params: &SolveParams,
    start: &LiftedMatrix,
) -> Result<LiftedMatrix> {
    feasibility(cs, c, params, Some(start)).map(|(w, _)| w)
}

pub(crate) fn feasibility(
    cs: &ConstraintSet,
    c: &FracMatrix,
    params: &SolveParams,
    start: Option<&LiftedMatrix>,
) -> Result<(LiftedMatrix, SdpStats)> {
    let n = cs.dim();
    let tau = cs.power_budget();
    if c.rows != n {
        return Err(Error::Domain(format!(
            "coding matrix has {} rows, constraint set expects {n}",
            c.rows
        )));
    }
    let identity = || CMatrix::identity(n, n).scale(tau / n as f64);
    if cs.is_empty() {
        return Ok((LiftedMatrix::new(identity()), SdpStats::default()));
    }

    // Certified infeasibility: ⟨W, B⟩ ≤ λ_max(B)·tr W ≤ λ_max(B)·τ.
    for (e, entry) in cs.iter().enumerate() {
        if entry.delta_f <= 0.0 {
            continue;
        }
        let h = Halfspace::new(entry, c);
        if entry.delta_f > h.lambda_max * tau * (1.0 + 1e-12) + params.eps_sdp {
            return Err(Error::Infeasible {
                stage: "w-step",
                detail: format!(
                    "entry {e} needs {:.6e} but at most {:.6e} is attainable",
                    entry.delta_f,
                    h.lambda_max * tau
                ),
                witness: Some(entry.witness),
            });
        }
    }

    let w0 = start.map_or_else(identity, |s| s.w.clone());
    let (mut w_re, mut w_im) = split(&linalg::project_spectraplex(&linalg::hermitian_part(&w0), tau));
    let mut corr_re = vec![0.0; n * n];
    let mut corr_im = vec![0.0; n * n];

    let mut in_set = vec![false; cs.len()];
    let mut active: Vec<(usize, Halfspace, f64)> = Vec::new();
    let mut sweeps = 0usize;

    loop {
        let mut violated: Vec<(f64, usize)> = Vec::new();
        let mut worst = (0.0f64, None);
        for (e, entry) in cs.iter().enumerate() {
            if entry.delta_f <= 0.0 {
                continue;
            }
            let r = entry.delta_f - entry_inner(entry, c, &w_re, n);
            if r > worst.0 {
                worst = (r, Some(e));
            }
            if r > params.eps_sdp && !in_set[e] {
                violated.push((r / entry.delta_f, e));
            }
        }
        if worst.0 <= params.eps_sdp {
            let stats = SdpStats {
                sweeps,
                residual: worst.0.max(0.0),
            };
            return Ok((LiftedMatrix::new(join(&w_re, &w_im, n)), stats));
        }
        if sweeps >= params.max_sweeps {
            let e = worst.1.expect("a violated entry exists");
            return Err(Error::Infeasible {
                stage: "w-step",
                detail: format!(
                    "residual {:.3e} above tolerance after {sweeps} sweeps",
                    worst.0
                ),
                witness: Some(cs.get(e).witness),
            });
        }
        violated.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let batch = 256.max(active.len() / 2);
        for &(_, e) in violated.iter().take(batch) {
            in_set[e] = true;
            active.push((e, Halfspace::new(cs.get(e), c), 0.0));
        }

        let round_cap = (sweeps + 200).min(params.max_sweeps);
        while sweeps < round_cap {
            sweeps += 1;
            for (_, h, alpha) in active.iter_mut() {
                if h.norm2 == 0.0 {
                    continue;
                }
                let v = h.inner(&w_re, n);
                let next = ((h.delta_f - v) / h.norm2 + *alpha).max(0.0);
                if next != *alpha {
                    h.add(next - *alpha, &mut w_re, n);
                    *alpha = next;
                }
            }
            for i in 0..n * n {
                corr_re[i] += w_re[i];
                corr_im[i] += w_im[i];
            }
            let z = join(&corr_re, &corr_im, n);
            let p = linalg::project_spectraplex(&z, tau);
            let (pr, pi) = split(&p);
            for i in 0..n * n {
                corr_re[i] -= pr[i];
                corr_im[i] -= pi[i];
            }
            w_re = pr;
            w_im = pi;
            let active_worst = active
                .iter()
                .map(|(_, h, _)| h.delta_f - h.inner(&w_re, n))
                .fold(0.0f64, f64::max);
            if active_worst <= 0.5 * params.eps_sdp {
                break;
            }
        }
    }
}
