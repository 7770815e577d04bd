use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{BinaryMatrix, Design};
use crate::error::Witness;
use crate::function_space::{ConstraintRef, ConstraintSet};

/// Relative slack when comparing a quadratic left-hand side to `Δf`.
pub(crate) const FEAS_TOL: f64 = 1e-9;

/// Two noiseless sequences closer than this are considered identical.
pub const COLLISION_TOL: f64 = 1e-9;

/// Shared acceptance rule for one separation constraint. Entries whose
/// outputs differ are also rejected when the sequences coincide, which keeps
/// the rule meaningful as `σ² → 0`.
pub(crate) fn satisfied(lhs: f64, delta_f: f64, output_gap: f64) -> bool {
    lhs >= delta_f - FEAS_TOL * delta_f.max(1.0)
        && !(output_gap > 0.0 && lhs <= COLLISION_TOL * COLLISION_TOL)
}

/// `Σ_ℓ |dᵀ(x ∘ c_ℓ)|²` on the entry support.
pub fn quadratic_lhs(entry: ConstraintRef<'_>, x: &[Complex64], c: &BinaryMatrix) -> f64 {
    (0..c.cols())
        .map(|slot| {
            entry
                .support
                .iter()
                .zip(entry.coeffs)
                .filter(|(&i, _)| c.get(i as usize, slot) == 1)
                .map(|(&i, &d)| x[i as usize] * f64::from(d))
                .sum::<Complex64>()
                .norm_sqr()
        })
        .sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub entry: usize,
    pub witness: Witness,
    pub lhs: f64,
    pub delta_f: f64,
    /// `lhs − Δf`; negative for violations.
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub total: usize,
    pub satisfied: usize,
    pub violations: Vec<Violation>,
    pub power: f64,
    pub power_ok: bool,
    /// Smallest `lhs / Δf` over entries with positive thresholds.
    pub min_ratio: f64,
    /// False when the design and the constraint set live on different spaces.
    pub compatible: bool,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.compatible && self.power_ok && self.violations.is_empty()
    }
}

pub fn validate_design(design: &Design, cs: &ConstraintSet) -> ValidationReport {
    let power = design.power();
    let power_ok = power <= 1.0 + 1e-9;
    let n = cs.dim();
    let (x, c) = if design.shared_modulation == cs.shared_modulation {
        (design.x.clone(), design.c.clone())
    } else if !cs.shared_modulation {
        (design.full_x(), design.full_c())
    } else {
        (Vec::new(), BinaryMatrix::zeros(0, 0))
    };
    let compatible = x.len() == n && design.k == cs.k() && design.q == cs.q();
    let mut report = ValidationReport {
        total: cs.len(),
        satisfied: 0,
        violations: Vec::new(),
        power,
        power_ok,
        min_ratio: f64::INFINITY,
        compatible,
    };
    for (e, entry) in cs.iter().enumerate() {
        let lhs = if compatible { quadratic_lhs(entry, &x, &c) } else { 0.0 };
        if entry.delta_f > 0.0 {
            report.min_ratio = report.min_ratio.min(lhs / entry.delta_f);
        }
        if compatible && satisfied(lhs, entry.delta_f, entry.output_gap) {
            report.satisfied += 1;
        } else {
            report.violations.push(Violation {
                entry: e,
                witness: entry.witness,
                lhs,
                delta_f: entry.delta_f,
                margin: lhs - entry.delta_f,
            });
        }
    }
    report
}
