use std::borrow::Cow;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::refine;
use super::bnb::{branch_and_bound_with, BnbParams};
use super::design::BnbSummary;
use super::sdp::{feasibility, SdpStats};
use super::validate::{quadratic_lhs, validate_design};
use super::{
    extract_rank_one, max_feasible_scale, solve_lp_relaxation, BinaryMatrix, Design, DesignMeta,
    FracMatrix, Init, IterationRecord, LiftedMatrix, SolveParams,
};
use crate::error::{Error, Result};
use crate::function_space::ConstraintSet;
use crate::linalg;

/// Per-node `Q`-PSK points at unit total energy plus a small seeded
/// perturbation that breaks symmetric ties.
fn initial_modulation(cs: &ConstraintSet, seed: u64) -> Vec<Complex64> {
    let n = cs.dim();
    let q = cs.q();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<Complex64> = (0..n)
        .map(|i| {
            let phase = 2.0 * std::f64::consts::PI * (i % q) as f64 / q as f64;
            let jitter = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
            Complex64::from_polar(1.0, phase) + jitter * 1e-3
        })
        .collect();
    rescale(&mut x, cs.power_budget());
    x
}

fn rescale(x: &mut [Complex64], budget: f64) {
    let energy: f64 = x.iter().map(|z| z.norm_sqr()).sum();
    if energy > 0.0 {
        let s = (budget / energy).sqrt();
        for z in x.iter_mut() {
            *z *= s;
        }
    }
}

fn record(n: usize, w: &LiftedMatrix, stats: SdpStats) -> IterationRecord {
    let (values, _) = linalg::hermitian_eigen(&w.w);
    let trace = w.trace();
    IterationRecord {
        n,
        w_sweeps: stats.sweeps,
        w_residual: stats.residual,
        w_trace: trace,
        w_top_fraction: if trace > 0.0 { values[0] / trace } else { 0.0 },
        c_objective: None,
        c_change: None,
    }
}

/// Smallest `lhs / Δf` of `x` with coding `c` over entries with positive
/// thresholds.
fn min_ratio(cs: &ConstraintSet, x: &[Complex64], c: &BinaryMatrix) -> f64 {
    cs.iter()
        .filter(|e| e.delta_f > 0.0)
        .map(|e| quadratic_lhs(e, x, c) / e.delta_f)
        .fold(f64::INFINITY, f64::min)
}

/// Alternate W-steps and relaxed C-steps, then project to a rank-one
/// modulation vector and a binary coding matrix.
pub fn alternate_design(cs: &ConstraintSet, l: usize, params: &SolveParams) -> Result<Design> {
    run(cs, l, params, false).map(|(d, _)| d)
}

/// As [`alternate_design`], also returning the constraint set the final
/// design was projected against, with any threshold scaling applied.
pub fn alternate_design_traced(
    cs: &ConstraintSet,
    l: usize,
    params: &SolveParams,
) -> Result<(Design, ConstraintSet)> {
    run(cs, l, params, true).map(|(d, c)| (d, c.expect("traced run keeps its thresholds")))
}

fn run(
    cs: &ConstraintSet,
    l: usize,
    params: &SolveParams,
    traced: bool,
) -> Result<(Design, Option<ConstraintSet>)> {
    params.validate()?;
    if l == 0 {
        return Err(Error::Domain("L must be at least 1".into()));
    }
    let n = cs.dim();
    let budget = cs.power_budget();
    let x0 = initial_modulation(cs, params.seed);
    let mut meta = DesignMeta {
        nominal_sigma_z2: cs.sigma_z2,
        design_sigma_z2: cs.sigma_z2,
        ..DesignMeta::default()
    };
    let build = |x: Vec<Complex64>, c: BinaryMatrix, meta: DesignMeta| -> Result<Design> {
        let mut d = Design::new(cs.k(), cs.q(), cs.shared_modulation, x, c)?;
        d.meta = meta;
        Ok(d)
    };
    if cs.is_empty() {
        meta.notes.push("no separation constraints; coding matrix left empty".into());
        let design = build(x0, BinaryMatrix::zeros(n, l), meta)?;
        return Ok((design, traced.then(|| cs.clone())));
    }

    let mut c_prev = match (l, params.init) {
        (1, _) | (_, Init::Ones) => BinaryMatrix::ones(n, l).to_frac(),
        (_, Init::Random) => {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed ^ 0x5eed_c0de);
            FracMatrix {
                rows: n,
                cols: l,
                data: (0..n * l).map(|_| f64::from(rng.gen_range(0..2u8))).collect(),
            }
        }
    };
    let w0 = LiftedMatrix::from_vector(&x0);
    let mut cs_eff: Cow<'_, ConstraintSet> = Cow::Borrowed(cs);

    let (mut w, stats) = match feasibility(cs, &c_prev, params, Some(&w0)) {
        Ok(v) => v,
        Err(err) if err.is_infeasible() => {
            let Some(factor) = params.backoff else {
                return Err(Error::DesignInfeasible(format!(
                    "first W-step failed ({err}); a larger L adds slots that can separate \
                     colliding tuples, and L = K gives every node its own slot"
                )));
            };
            let (s, probe) = max_feasible_scale(cs, &c_prev);
            if !(s > 0.0) {
                return Err(Error::DesignInfeasible(format!(
                    "first W-step failed ({err}) and no threshold scale restores feasibility"
                )));
            }
            if factor * s >= 1.0 {
                // The nominal thresholds are attainable; the projection only stalled.
                meta.notes.push("projection stalled; using the margin-probe matrix".into());
                (probe, SdpStats::default())
            } else {
                let scale = factor * s;
                cs_eff = Cow::Owned(cs.scaled(scale));
                meta.notes.push(format!(
                    "thresholds scaled by {scale:.6e} (largest attainable scale {s:.6e})"
                ));
                match feasibility(&cs_eff, &c_prev, params, Some(&w0)) {
                    Ok(v) => v,
                    Err(e) if e.is_infeasible() => {
                        meta.notes.push("projection stalled; using the margin-probe matrix".into());
                        (probe, SdpStats::default())
                    }
                    Err(e) => return Err(e),
                }
            }
        }
        Err(err) => return Err(err),
    };
    meta.trace.push(record(1, &w, stats));

    let mut iteration = 1;
    if l > 1 {
        loop {
            let lp = match solve_lp_relaxation(&cs_eff, &w, l) {
                Ok(lp) => lp,
                Err(err) if err.is_infeasible() => {
                    meta.notes.push(format!("C-step infeasible at n = {iteration}: {err}"));
                    break;
                }
                Err(err) => return Err(err),
            };
            let change = lp.c.frobenius_distance(&c_prev);
            if let Some(last) = meta.trace.last_mut() {
                last.c_objective = Some(lp.objective);
                last.c_change = Some(change);
            }
            meta.c_trace.push(lp.c.clone());

            c_prev = lp.c;
            if change <= params.delta || iteration >= params.t_max {
                break;
            }
            iteration += 1;
            match feasibility(&cs_eff, &c_prev, params, Some(&w)) {
                Ok((next, stats)) => {
                    w = next;
                    meta.trace.push(record(iteration, &w, stats));
                }
                Err(err) if err.is_infeasible() => {
                    meta.notes.push(format!(
                        "W-step infeasible at n = {iteration}; keeping the previous iterate"
                    ));
                    iteration -= 1;
                    break;
                }
                Err(err) => return Err(err),
            }
        }
    }
    meta.iterations = iteration;

    let mut x = extract_rank_one(&w);
    if x.iter().all(|z| z.norm_sqr() == 0.0) {
        x = x0;
    }
    rescale(&mut x, budget);
    let ones = BinaryMatrix::ones(n, l);
    let ones_frac = ones.to_frac();
    x = refine::randomized_candidate(&cs_eff, &ones_frac, &w, x, params.seed);
    x = refine::polish(&cs_eff, &ones_frac, &x);

    let s = min_ratio(&cs_eff, &x, &ones);
    if s < 1.0 && params.backoff.is_some() && s > 0.0 {
        cs_eff = Cow::Owned(cs_eff.scaled(s * (1.0 - 1e-9)));
        meta.notes.push(format!("rank-one point meets thresholds scaled by {s:.6e}"));
    }
    let c = if l == 1 {
        ones
    } else {
        let bnb = BnbParams {
            gap_tol: params.delta_bb,
            node_limit: params.bnb_node_limit,
        };
        let lifted = LiftedMatrix::from_vector(&x);
        let outcome = match branch_and_bound_with(&cs_eff, &lifted, l, &bnb) {
            Ok(out) => Some(out),
            Err(err) if err.is_infeasible() => {
                let s = min_ratio(&cs_eff, &x, &ones);
                if params.backoff.is_some() && s > 0.0 {
                    cs_eff = Cow::Owned(cs_eff.scaled(s * (1.0 - 1e-9)));
                    meta.notes.push(format!("rank-one point meets thresholds scaled by {s:.6e}"));
                    Some(branch_and_bound_with(&cs_eff, &lifted, l, &bnb)?)
                } else {
                    meta.notes.push(format!("binary projection infeasible: {err}"));
                    None
                }
            }
            Err(err) => return Err(err),
        };
        match outcome {
            Some(out) => {
                x = refine::polish(&cs_eff, &out.c.to_frac(), &x);
                meta.bnb = Some(BnbSummary {
                    nodes: out.nodes,
                    objective: out.objective,
                    lower_bound: out.lower_bound,
                    proven_optimal: out.proven_optimal,
                });
                out.c
            }
            None => ones,
        }
    };
    meta.design_sigma_z2 = cs_eff.sigma_z2;
    let mut design = build(x, c, meta)?;
    let report = validate_design(&design, &cs_eff);
    design.meta.violations = report.violations.len();
    Ok((design, traced.then(|| cs_eff.into_owned())))
}
