//! Brute-force references: exhaustive coding-matrix search and exhaustive
//! collision checking of noiseless sequences.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::codesign::{BinaryMatrix, Design, LiftedMatrix};
use crate::decoder::{all_sequences, cluster_sequences};
use crate::error::{Error, Result};
use crate::function_space::{ConstraintSet, FunctionTable, DEFAULT_ENUMERATION_BUDGET};

/// Largest number of binary variables `N·L` searched exhaustively.
pub const EXHAUSTIVE_BITS: usize = 20;

/// Collisions listed individually before the report only counts them.
pub const COLLISION_LIST_LIMIT: usize = 100_000;

#[derive(Clone, Debug, PartialEq)]
pub struct P2Optimum {
    pub c: BinaryMatrix,
    pub objective: usize,
}

/// Dense real matrix `D Re(W) D` on the entry support.
struct Form {
    support: Vec<usize>,
    m: Vec<f64>,
    delta_f: f64,
    output_gap: f64,
}

/// Global minimizer of `Σ‖c_ℓ‖₁` subject to
/// `Σ_ℓ c_ℓᵀ((d dᵀ) ∘ W) c_ℓ ≥ Δf` for every entry. Among optimal points the
/// lexicographically smallest row-major bit string wins.
pub fn exhaustive_p2(cs: &ConstraintSet, w: &LiftedMatrix, l: usize) -> Result<P2Optimum> {
    let n = cs.dim();
    let bits = n * l;
    if l == 0 {
        return Err(Error::Domain("L must be at least 1".into()));
    }
    if bits > EXHAUSTIVE_BITS {
        return Err(Error::Capacity(format!(
            "2^{bits} candidates exceed the exhaustive budget of 2^{EXHAUSTIVE_BITS}"
        )));
    }
    let forms: Vec<Form> = cs
        .iter()
        .map(|e| {
            let support: Vec<usize> = e.support.iter().map(|&i| i as usize).collect();
            let s = support.len();
            let mut m = vec![0.0; s * s];
            for a in 0..s {
                for b in 0..s {
                    m[a * s + b] = f64::from(e.coeffs[a])
                        * f64::from(e.coeffs[b])
                        * w.w[(support[a], support[b])].re;
                }
            }
            Form {
                support,
                m,
                delta_f: e.delta_f,
                output_gap: e.output_gap,
            }
        })
        .collect();
    let mut order: Vec<usize> = (0..forms.len()).collect();
    // Flat index i (row-major over N×L) is bit (bits − 1 − i), so numeric
    // order of masks equals lexicographic order of bit strings.
    let bit = |mask: u64, i: usize| ((mask >> (bits - 1 - i)) & 1) as u8;
    let mut feasible = |mask: u64| -> bool {
        for pos in 0..order.len() {
            let f = &forms[order[pos]];
            let s = f.support.len();
            let mut lhs = 0.0;
            for slot in 0..l {
                for a in 0..s {
                    if bit(mask, f.support[a] * l + slot) == 0 {
                        continue;
                    }
                    for b in 0..s {
                        if bit(mask, f.support[b] * l + slot) == 1 {
                            lhs += f.m[a * s + b];
                        }
                    }
                }
            }
            if !crate::codesign::satisfied(lhs, f.delta_f, f.output_gap) {
                order[..=pos].rotate_right(1);
                return false;
            }
        }
        true
    };
    for ones in 0..=bits {
        let mut mask: u64 = if ones == 0 { 0 } else { (1u64 << ones) - 1 };
        let limit = 1u64 << bits;
        while mask < limit {
            if feasible(mask) {
                let data = (0..bits).map(|i| bit(mask, i)).collect();
                return Ok(P2Optimum {
                    c: BinaryMatrix::from_flat(n, l, data),
                    objective: ones,
                });
            }
            if ones == 0 {
                break;
            }
            // Next mask with the same popcount (Gosper).
            let lowest = mask & mask.wrapping_neg();
            let ripple = mask + lowest;
            mask = (((ripple ^ mask) >> 2) / lowest) | ripple;
        }
    }
    Err(Error::Infeasible {
        stage: "exhaustive",
        detail: "no binary coding matrix satisfies every constraint".into(),
        witness: None,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Collision {
    pub tuple_i: usize,
    pub tuple_j: usize,
    pub v: Vec<Complex64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlapReport {
    pub collisions: Vec<Collision>,
    /// Total number of colliding distinct-output pairs, listed or not.
    pub collision_count: u64,
    pub exact: bool,
}

impl OverlapReport {
    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.collisions
            .iter()
            .any(|c| (c.tuple_i, c.tuple_j) == (i, j) || (c.tuple_i, c.tuple_j) == (j, i))
    }
}

/// All pairs of tuples with different outputs whose noiseless sequences
/// coincide within the collision tolerance.
pub fn overlap_check(design: &Design, table: &FunctionTable) -> Result<OverlapReport> {
    if table.num_tuples() > DEFAULT_ENUMERATION_BUDGET {
        return Err(Error::Capacity("overlap check is limited to Q^K ≤ 65536".into()));
    }
    let seqs = all_sequences(design, table)?;
    let (cluster_of, reps) = cluster_sequences(&seqs);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); reps.len()];
    for (g, &c) in cluster_of.iter().enumerate() {
        members[c].push(g);
    }
    let mut report = OverlapReport {
        collisions: Vec::new(),
        collision_count: 0,
        exact: true,
    };
    for (c, group) in members.iter().enumerate() {
        if group.len() < 2 {
            continue;
        }
        // Pairs with distinct outputs = all pairs minus same-output pairs.
        let mut by_output: Vec<f64> = group.iter().map(|&g| table.output(g)).collect();
        by_output.sort_by(f64::total_cmp);
        let total = (group.len() as u64) * (group.len() as u64 - 1) / 2;
        let same: u64 = by_output
            .chunk_by(|a, b| a == b)
            .map(|run| (run.len() as u64) * (run.len() as u64 - 1) / 2)
            .sum();
        let distinct = total - same;
        if distinct == 0 {
            continue;
        }
        report.exact = false;
        report.collision_count += distinct;
        'outer: for (a, &i) in group.iter().enumerate() {
            for &j in &group[a + 1..] {
                if report.collisions.len() >= COLLISION_LIST_LIMIT {
                    break 'outer;
                }
                if table.output(i) != table.output(j) {
                    report.collisions.push(Collision {
                        tuple_i: i,
                        tuple_j: j,
                        v: seqs[reps[c]].clone(),
                    });
                }
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_variable_instance() {
        let cs = ConstraintSet::from_dense(2, &[(vec![1, -1], 0.5)], 1.0).unwrap();
        let w = LiftedMatrix::from_vector(&[Complex64::new(1.0, 0.0); 2]);
        let opt = exhaustive_p2(&cs, &w, 1).unwrap();
        assert_eq!(opt.objective, 1);
        // [0, 1] precedes [1, 0] lexicographically.
        assert_eq!(opt.c.as_slice(), &[0, 1]);
    }

    #[test]
    fn empty_constraints() {
        let cs = ConstraintSet::empty(1, 3, 1.0, false);
        let w = LiftedMatrix::from_vector(&[Complex64::new(1.0, 0.0); 3]);
        let opt = exhaustive_p2(&cs, &w, 2).unwrap();
        assert_eq!(opt.objective, 0);
        assert_eq!(opt.c.ones_count(), 0);
    }

    #[test]
    fn unreachable_threshold() {
        let cs = ConstraintSet::from_dense(2, &[(vec![1, -1], 9.0)], 1.0).unwrap();
        let w = LiftedMatrix::from_vector(&[Complex64::new(1.0, 0.0); 2]);
        assert!(exhaustive_p2(&cs, &w, 3).unwrap_err().is_infeasible());
    }

    #[test]
    fn budget_guard() {
        let cs = ConstraintSet::empty(1, 11, 1.0, false);
        let w = LiftedMatrix::from_vector(&[Complex64::new(1.0, 0.0); 11]);
        assert!(matches!(exhaustive_p2(&cs, &w, 2), Err(Error::Capacity(_))));
    }
}
