//! Optimality gap of the coding matrix returned by the alternation against
//! the exhaustive optimum of the binary subproblem at the final modulation
//! vector, next to the analytical bound.

use serde::Serialize;

use super::config::ExperimentConfig;
use crate::codesign::{alternate_design_traced, gap_bound, r2, FracMatrix, LiftedMatrix};
use crate::error::{Error, Result};
use crate::function_space::{build_constraints, build_function_table};
use crate::oracle::exhaustive_p2;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapRow {
    pub k: usize,
    pub l: usize,
    pub n: usize,
    /// `Σ‖ĉ_ℓ‖₁ − Σ‖c*_ℓ‖₁` for the returned coding matrix `Ĉ`.
    pub empirical: f64,
    /// `2·R₂(Ĉ, C*)/(n − 1)`.
    pub analytical: f64,
    pub r2: f64,
    pub output_ones: usize,
    pub optimal_ones: usize,
    /// Ones of the last relaxed coding iterate.
    pub relaxed_ones: f64,
    /// Alternations actually run.
    pub iterations: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct GapResult {
    pub rows: Vec<GapRow>,
}

pub fn run_gap_experiment(config: &ExperimentConfig) -> Result<GapResult> {
    config.validate()?;
    let gap = config
        .gap
        .as_ref()
        .ok_or_else(|| Error::Config("the gap experiment needs a `gap` section".into()))?;
    if gap.k_values.is_empty() {
        return Err(Error::Config("gap.k_values is empty".into()));
    }
    if gap.n < 2 || gap.l < 1 {
        return Err(Error::Config("gap needs n ≥ 2 and L ≥ 1".into()));
    }
    let mut solver = config.solver.clone();
    solver.seed = config.seed;
    solver.t_max = gap.n;
    // Stop only at a fixed point, where further iterations repeat the last one.
    solver.delta = f64::MIN_POSITIVE;

    let mut result = GapResult::default();
    for &k in &gap.k_values {
        let table = build_function_table(config.function_kind, k, config.q, config.values.clone(), None)?;
        let cs = build_constraints(&table, config.design_sigma_z2, config.shared_modulation)?;
        let (design, effective) = alternate_design_traced(&cs, gap.l, &solver)?;
        let relaxed_ones = design.meta.c_trace.last().map_or(0.0, FracMatrix::sum);
        let w = LiftedMatrix::from_vector(&design.x);
        let optimum = exhaustive_p2(&effective, &w, gap.l)?;
        let c_hat = design.c.to_frac();
        let c_opt = optimum.c.to_frac();
        result.rows.push(GapRow {
            k,
            l: gap.l,
            n: gap.n,
            empirical: design.c.ones_count() as f64 - optimum.objective as f64,
            analytical: gap_bound(std::slice::from_ref(&c_hat), &c_opt, gap.n)?,
            r2: r2(&c_hat, &c_opt),
            output_ones: design.c.ones_count(),
            optimal_ones: optimum.objective,
            relaxed_ones,
            iterations: design.meta.iterations,
        });
    }
    Ok(result)
}
