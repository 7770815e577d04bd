//! Joint design of the modulation vector `x` and the repetition-coding matrix
//! `C`: lifted feasibility (W-step), linear relaxation (C-step), rank-one
//! extraction, branch-and-bound projection, validation and the gap bound.

mod alternate;
mod bnb;
mod design;
mod gap;
mod lp;
mod margin;
mod mccormick;
mod rank_one;
mod refine;
mod sdp;
mod validate;

pub use alternate::{alternate_design, alternate_design_traced};
pub use bnb::{branch_and_bound, branch_and_bound_with, BnbOutcome, BnbParams, WORKING_SET};
pub use design::{BinaryMatrix, BnbSummary, Design, DesignMeta, FracMatrix, IterationRecord};
pub use gap::{gap_bound, r2};
pub use lp::{solve_lp_relaxation, LpSolution};
pub use margin::max_feasible_scale;
pub use mccormick::{
    bilinear_bounds, entry_factors, mccormick_bounds, EntryFactors, Factor, McCormickBounds,
};
pub use rank_one::extract_rank_one;
pub use sdp::{solve_modulation_feasibility, solve_modulation_feasibility_from};
pub(crate) use validate::satisfied;
pub use validate::{quadratic_lhs, validate_design, ValidationReport, Violation, COLLISION_TOL};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::linalg::CMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    #[default]
    Ones,
    Random,
}

/// Tuning knobs of the alternating design loop.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveParams {
    /// Maximum number of alternations.
    pub t_max: usize,
    /// Stop once `‖Cⁿ − Cⁿ⁻¹‖_F ≤ delta`.
    pub delta: f64,
    pub eps_sdp: f64,
    pub delta_bb: f64,
    pub seed: u64,
    pub init: Init,
    /// Sweep cap of the alternating-projection W-step.
    pub max_sweeps: usize,
    pub bnb_node_limit: usize,
    /// When set, thresholds that no lifted matrix can meet are scaled down
    /// to this fraction of the largest attainable scale instead of failing.
    pub backoff: Option<f64>,
}

impl Default for SolveParams {
    fn default() -> Self {
        Self {
            t_max: 30,
            delta: 1e-4,
            eps_sdp: 1e-7,
            delta_bb: 1e-6,
            seed: 0,
            init: Init::Ones,
            max_sweeps: 5000,
            bnb_node_limit: 200_000,
            backoff: None,
        }
    }
}

impl SolveParams {
    pub fn validate(&self) -> crate::Result<()> {
        let positive = [self.delta, self.eps_sdp, self.delta_bb];
        if self.t_max < 1 || positive.iter().any(|v| !(*v > 0.0)) {
            return Err(crate::Error::Domain(
                "solver tolerances must be positive and t_max ≥ 1".into(),
            ));
        }
        if let Some(f) = self.backoff {
            if !(f > 0.0 && f <= 1.0) {
                return Err(crate::Error::Domain("backoff factor must lie in (0, 1]".into()));
            }
        }
        Ok(())
    }
}

/// Hermitian lifted variable `W ≈ x xᴴ`. When the matrix is known to be
/// exactly rank one its generating vector is kept alongside.
#[derive(Clone, Debug)]
pub struct LiftedMatrix {
    pub w: CMatrix,
    pub rank_one: Option<Vec<Complex64>>,
}

impl LiftedMatrix {
    pub fn new(w: CMatrix) -> Self {
        Self { w, rank_one: None }
    }

    pub fn from_vector(x: &[Complex64]) -> Self {
        let n = x.len();
        let w = DMatrix::from_fn(n, n, |r, c| x[r] * x[c].conj());
        Self {
            w,
            rank_one: Some(x.to_vec()),
        }
    }

    pub fn dim(&self) -> usize {
        self.w.nrows()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.w[(i, i)].re).sum()
    }

    /// `Re W[r, c]`.
    pub fn re(&self, r: usize, c: usize) -> f64 {
        self.w[(r, c)].re
    }
}
