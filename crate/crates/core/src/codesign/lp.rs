//! C-step: linear relaxation of the binary coding problem.
//!
//! Each quadratic constraint `Σ_ℓ Σ_m (p_mᵀ c_ℓ)² ≥ Δf` is replaced by the
//! secant overestimator `y² ≤ (l + u)·y − l·u`, valid for `y ∈ [l, u]`.
//! Every binary point feasible for the quadratic constraint also satisfies
//! the linear row, so the LP optimum lower-bounds the binary optimum. When
//! a subset of variables is fixed (inside branch-and-bound) the bounds are
//! tightened to the remaining box and become exact once all are fixed.
//!
//! Rows are generated lazily: the LP starts with no rows and the most
//! violated ones are added until the relaxed point satisfies all of them.

use std::borrow::Cow;

use microlp::{ComparisonOp, OptimizationDirection, Problem};

use super::mccormick::{entry_factors, EntryFactors};
use super::sdp::{entry_inner, split};
use super::{FracMatrix, LiftedMatrix};
use crate::error::{Error, Result};
use crate::function_space::ConstraintSet;

/// Relative feasibility slack used for relaxed rows.
pub(crate) const ROW_TOL: f64 = 1e-9;

/// Factor entries are cached when their total size stays below this many
/// floats; larger sets recompute factors on demand.
const CACHE_LIMIT: usize = 1 << 24;

const ROWS_PER_ROUND: usize = 64;

/// Fixing state of one coding variable.
pub(crate) const FREE: i8 = -1;

pub(crate) struct Relaxation<'a> {
    pub cs: &'a ConstraintSet,
    pub w: &'a LiftedMatrix,
    pub l: usize,
    cache: Option<Vec<EntryFactors>>,
    w_re: Vec<f64>,
}

impl<'a> Relaxation<'a> {
    pub fn new(cs: &'a ConstraintSet, w: &'a LiftedMatrix, l: usize) -> Self {
        let estimate = cs.len() * cs.max_support() * cs.max_support().min(2 * cs.dim()) * 2;
        let cache = (estimate <= CACHE_LIMIT)
            .then(|| cs.iter().map(|e| entry_factors(e, w)).collect());
        Self {
            cs,
            w,
            l,
            cache,
            w_re: split(&w.w).0,
        }
    }

    /// Exact quadratic value of entry `e` at the flat point `c`. Every
    /// relaxed row overestimates it.
    fn exact_value(&self, e: usize, c: &FracMatrix) -> f64 {
        entry_inner(self.cs.get(e), c, &self.w_re, self.n())
    }

    pub fn n(&self) -> usize {
        self.cs.dim()
    }

    pub fn factors(&self, e: usize) -> Cow<'_, EntryFactors> {
        match &self.cache {
            Some(all) => Cow::Borrowed(&all[e]),
            None => Cow::Owned(entry_factors(self.cs.get(e), self.w)),
        }
    }

    /// Value of the relaxed row of entry `e` at point `c` (flat `n·L`,
    /// row-major) under the fixing `fixed`, plus whether any free variable
    /// appears in the row.
    pub fn row_value(&self, f: &EntryFactors, fixed: &[i8], c: &[f64]) -> (f64, bool) {
        let l = self.l;
        let mut total = 0.0;
        let mut has_free = false;
        for slot in 0..l {
            for fac in &f.factors {
                let (mut lo, mut hi, mut y) = (0.0, 0.0, 0.0);
                let mut touches_free = false;
                for (&r, &p) in f.support.iter().zip(&fac.p) {
                    let v = r * l + slot;
                    match fixed[v] {
                        FREE => {
                            lo += p.min(0.0);
                            hi += p.max(0.0);
                            y += p * c[v];
                            touches_free |= p != 0.0;
                        }
                        1 => {
                            lo += p;
                            hi += p;
                            y += p;
                        }
                        _ => {}
                    }
                }
                has_free |= touches_free && lo + hi != 0.0;
                total += (lo + hi) * y - lo * hi;
            }
        }
        (total, has_free)
    }

    /// Linear terms over free variables and the constant of entry `e`'s row.
    pub fn row_terms(&self, f: &EntryFactors, fixed: &[i8], terms: &mut Vec<(usize, f64)>) -> f64 {
        let l = self.l;
        terms.clear();
        let mut constant = 0.0;
        for slot in 0..l {
            for fac in &f.factors {
                let (mut lo, mut hi, mut ones) = (0.0, 0.0, 0.0);
                for (&r, &p) in f.support.iter().zip(&fac.p) {
                    match fixed[r * l + slot] {
                        FREE => {
                            lo += p.min(0.0);
                            hi += p.max(0.0);
                        }
                        1 => {
                            lo += p;
                            hi += p;
                            ones += p;
                        }
                        _ => {}
                    }
                }
                let slope = lo + hi;
                constant += slope * ones - lo * hi;
                for (&r, &p) in f.support.iter().zip(&fac.p) {
                    let v = r * l + slot;
                    if fixed[v] == FREE && p != 0.0 {
                        terms.push((v, slope * p));
                    }
                }
            }
        }
        terms.sort_by_key(|t| t.0);
        terms.dedup_by(|b, a| {
            if a.0 == b.0 {
                a.1 += b.1;
                true
            } else {
                false
            }
        });
        terms.retain(|t| t.1 != 0.0);
        constant
    }
}

pub(crate) enum NodeLp {
    /// Entry whose row cannot be met inside the box.
    Infeasible(usize),
    Solved {
        objective: f64,
        /// Flat `n·L` values with fixed variables filled in.
        values: Vec<f64>,
        /// Entries whose rows were added to the LP.
        rows: Vec<usize>,
    },
}

fn tolerance(delta_f: f64) -> f64 {
    ROW_TOL * delta_f.max(1.0)
}

pub(crate) fn solve_node(rel: &Relaxation<'_>, fixed: &[i8], seeds: &[usize]) -> Result<NodeLp> {
    let nl = rel.n() * rel.l;
    let free: Vec<usize> = (0..nl).filter(|&v| fixed[v] == FREE).collect();
    let ones = fixed.iter().filter(|&&s| s == 1).count() as f64;
    let mut values: Vec<f64> = fixed.iter().map(|&s| if s == 1 { 1.0 } else { 0.0 }).collect();

    let mut problem = Problem::new(OptimizationDirection::Minimize);
    let mut var_of = vec![usize::MAX; nl];
    let vars: Vec<_> = free
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            var_of[v] = k;
            problem.add_var(1.0, (0.0, 1.0))
        })
        .collect();

    let mut in_lp = vec![false; rel.cs.len()];
    let mut rows = Vec::new();
    let mut terms = Vec::new();
    let add_row = |problem_terms: &[(usize, f64)], constant: f64, delta_f: f64| {
        let expr: Vec<_> = problem_terms.iter().map(|&(v, a)| (vars[var_of[v]], a)).collect();
        (expr, delta_f - constant)
    };

    let mut pending: Vec<(Vec<(microlp::Variable, f64)>, f64)> = Vec::new();
    for &e in seeds {
        if e < in_lp.len() && !in_lp[e] {
            let f = rel.factors(e);
            let constant = rel.row_terms(&f, fixed, &mut terms);
            if !terms.is_empty() {
                in_lp[e] = true;
                rows.push(e);
                pending.push(add_row(&terms, constant, rel.cs.get(e).delta_f));
            }
        }
    }
    for (expr, rhs) in pending.drain(..) {
        problem.add_constraint(expr.as_slice(), ComparisonOp::Ge, rhs);
    }

    let map_err = |err: microlp::Error| Error::State(format!("LP solver failure: {err}"));
    let mut solution = if free.is_empty() {
        None
    } else {
        match problem.solve() {
            Ok(s) => Some(s),
            Err(microlp::Error::Infeasible) => {
                return Ok(NodeLp::Infeasible(rows.first().copied().unwrap_or(0)))
            }
            Err(err) => return Err(map_err(err)),
        }
    };

    loop {
        if let Some(s) = &solution {
            for (k, &v) in free.iter().enumerate() {
                values[v] = s.var_value(vars[k]).clamp(0.0, 1.0);
            }
        }
        let mut violated: Vec<(f64, usize)> = Vec::new();
        let point = FracMatrix {
            rows: rel.n(),
            cols: rel.l,
            data: values.clone(),
        };
        for e in 0..rel.cs.len() {
            let delta_f = rel.cs.get(e).delta_f;
            if delta_f <= 0.0 || rel.exact_value(e, &point) >= delta_f - tolerance(delta_f) {
                continue;
            }
            let f = rel.factors(e);
            let (value, has_free) = rel.row_value(&f, fixed, &values);
            let gap = delta_f - value;
            if gap > tolerance(delta_f) {
                if !has_free {
                    return Ok(NodeLp::Infeasible(e));
                }
                if !in_lp[e] {
                    violated.push((gap / delta_f, e));
                }
            }
        }
        if violated.is_empty() {
            let objective = ones + free.iter().map(|&v| values[v]).sum::<f64>();
            return Ok(NodeLp::Solved {
                objective,
                values,
                rows,
            });
        }
        violated.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let mut current = solution.take().expect("rows with free variables imply an LP");
        for &(_, e) in violated.iter().take(ROWS_PER_ROUND) {
            let f = rel.factors(e);
            let constant = rel.row_terms(&f, fixed, &mut terms);
            in_lp[e] = true;
            rows.push(e);
            let (expr, rhs) = add_row(&terms, constant, rel.cs.get(e).delta_f);
            current = match current.add_constraint(expr.as_slice(), ComparisonOp::Ge, rhs) {
                Ok(s) => s,
                Err(microlp::Error::Infeasible) => return Ok(NodeLp::Infeasible(e)),
                Err(err) => return Err(map_err(err)),
            };
        }
        solution = Some(current);
    }
}

/// Relaxed coding matrix and its objective `Σ c`.
#[derive(Clone, Debug)]
pub struct LpSolution {
    pub c: FracMatrix,
    pub objective: f64,
}

pub fn solve_lp_relaxation(cs: &ConstraintSet, w: &LiftedMatrix, l: usize) -> Result<LpSolution> {
    if l == 0 {
        return Err(Error::Domain("L must be at least 1".into()));
    }
    let n = cs.dim();
    if cs.is_empty() {
        return Ok(LpSolution {
            c: FracMatrix::zeros(n, l),
            objective: 0.0,
        });
    }
    let rel = Relaxation::new(cs, w, l);
    let fixed = vec![FREE; n * l];
    match solve_node(&rel, &fixed, &[])? {
        NodeLp::Infeasible(e) => Err(Error::Infeasible {
            stage: "c-step",
            detail: format!("relaxed row of entry {e} cannot be met in the unit box"),
            witness: Some(cs.get(e).witness),
        }),
        NodeLp::Solved {
            objective, values, ..
        } => Ok(LpSolution {
            c: FracMatrix {
                rows: n,
                cols: l,
                data: values,
            },
            objective,
        }),
    }
}
