//! Branch-and-bound projection of the coding matrix onto binary values.
//!
//! Nodes fix subsets of variables; each node's lower bound comes from the
//! box-tightened linear relaxation. Binary candidates are accepted only after
//! checking the quadratic constraints directly on `W`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::lp::{solve_node, NodeLp, Relaxation, FREE};
use super::sdp::{entry_inner, split};
use super::validate::satisfied;
use super::{BinaryMatrix, FracMatrix, LiftedMatrix};
use crate::error::{Error, Result};
use crate::function_space::ConstraintSet;

const INTEGRAL_TOL: f64 = 1e-6;

/// Largest constraint set solved in one piece.
pub const WORKING_SET: usize = 20_000;

#[derive(Clone, Debug)]
pub struct BnbParams {
    pub gap_tol: f64,
    pub node_limit: usize,
}

impl Default for BnbParams {
    fn default() -> Self {
        Self {
            gap_tol: 1e-6,
            node_limit: 200_000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BnbOutcome {
    pub c: BinaryMatrix,
    pub objective: usize,
    pub lower_bound: f64,
    pub nodes: usize,
    pub proven_optimal: bool,
}

pub fn branch_and_bound(
    cs: &ConstraintSet,
    w: &LiftedMatrix,
    l: usize,
    delta_bb: f64,
) -> Result<BinaryMatrix> {
    let params = BnbParams {
        gap_tol: delta_bb,
        ..BnbParams::default()
    };
    branch_and_bound_with(cs, w, l, &params).map(|o| o.c)
}

struct Node {
    fixed: Vec<i8>,
    bound: f64,
    depth: usize,
    seq: usize,
    rows: Vec<usize>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // Max-heap order: smallest bound first, then deepest, then oldest.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.seq.cmp(&self.seq))
    }
}

/// Direct evaluation of the quadratic constraints on `W`.
pub(crate) struct ExactCheck<'a> {
    cs: &'a ConstraintSet,
    w_re: Vec<f64>,
    n: usize,
    l: usize,
    order: std::cell::RefCell<Vec<usize>>,
}

impl<'a> ExactCheck<'a> {
    pub fn new(cs: &'a ConstraintSet, w: &LiftedMatrix, l: usize) -> Self {
        let (w_re, _) = split(&w.w);
        Self {
            cs,
            w_re,
            n: cs.dim(),
            l,
            order: std::cell::RefCell::new((0..cs.len()).collect()),
        }
    }

    /// First violated entry, or `None` when `c` is feasible. Violated entries
    /// move to the front so repeated checks fail fast.
    pub fn first_violation(&self, bits: &[u8]) -> Option<usize> {
        let c = FracMatrix {
            rows: self.n,
            cols: self.l,
            data: bits.iter().map(|&b| f64::from(b)).collect(),
        };
        let mut order = self.order.borrow_mut();
        for pos in 0..order.len() {
            let e = order[pos];
            let entry = self.cs.get(e);
            let lhs = entry_inner(entry, &c, &self.w_re, self.n);
            if !satisfied(lhs, entry.delta_f, entry.output_gap) {
                order[..=pos].rotate_right(1);
                return Some(e);
            }
        }
        None
    }

    /// Violated entries at `bits` with their relative shortfalls, worst first.
    pub fn violations(&self, bits: &[u8]) -> Vec<(f64, usize)> {
        let c = FracMatrix {
            rows: self.n,
            cols: self.l,
            data: bits.iter().map(|&b| f64::from(b)).collect(),
        };
        let mut out: Vec<(f64, usize)> = self
            .cs
            .iter()
            .enumerate()
            .filter_map(|(e, entry)| {
                let lhs = entry_inner(entry, &c, &self.w_re, self.n);
                (!satisfied(lhs, entry.delta_f, entry.output_gap))
                    .then(|| ((entry.delta_f - lhs) / entry.delta_f.max(f64::MIN_POSITIVE), e))
            })
            .collect();
        out.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        out
    }

    /// The entry with the largest relative shortfall at `bits`.
    pub fn most_violated(&self, bits: &[u8]) -> Option<usize> {
        self.violations(bits).first().map(|&(_, e)| e)
    }

    /// Entries ordered by `lhs / Δf` at `bits`, smallest first.
    fn tightest(&self, bits: &[u8], count: usize) -> Vec<usize> {
        let c = FracMatrix {
            rows: self.n,
            cols: self.l,
            data: bits.iter().map(|&b| f64::from(b)).collect(),
        };
        let mut scored: Vec<(f64, usize)> = self
            .cs
            .iter()
            .enumerate()
            .map(|(e, entry)| {
                let lhs = entry_inner(entry, &c, &self.w_re, self.n);
                (lhs / entry.delta_f.max(f64::MIN_POSITIVE), e)
            })
            .collect();
        let count = count.min(scored.len());
        if count < scored.len() {
            scored.select_nth_unstable_by(count, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            scored.truncate(count);
        }
        let mut out: Vec<usize> = scored.into_iter().map(|(_, e)| e).collect();
        out.sort_unstable();
        out
    }
}

/// Start from all ones and switch off entries (weakest symbols first) while
/// the point stays feasible.
fn greedy_incumbent(check: &ExactCheck<'_>, w: &LiftedMatrix, n: usize, l: usize) -> Option<Vec<u8>> {
    let mut bits = vec![1u8; n * l];
    if check.first_violation(&bits).is_some() {
        return None;
    }
    let mut order: Vec<usize> = (0..n * l).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (w.w[(a / l, a / l)].re, w.w[(b / l, b / l)].re);
        ra.total_cmp(&rb).then(a.cmp(&b))
    });
    for v in order {
        bits[v] = 0;
        if check.first_violation(&bits).is_some() {
            bits[v] = 1;
        }
    }
    Some(bits)
}

fn ceil_bound(bound: f64, tol: f64) -> f64 {
    (bound - tol).ceil()
}

/// Exact branch-and-bound. Sets larger than [`WORKING_SET`] are solved on a
/// subset of their tightest entries; entries the subset optimum violates are
/// added and the subset is solved again until the optimum meets every entry.
pub fn branch_and_bound_with(
    cs: &ConstraintSet,
    w: &LiftedMatrix,
    l: usize,
    params: &BnbParams,
) -> Result<BnbOutcome> {
    if l == 0 {
        return Err(Error::Domain("L must be at least 1".into()));
    }
    if cs.len() <= WORKING_SET {
        return solve(cs, w, l, params);
    }
    let check = ExactCheck::new(cs, w, l);
    let mut active = check.tightest(&vec![1u8; cs.dim() * l], WORKING_SET);
    let mut nodes = 0;
    loop {
        let round = BnbParams {
            node_limit: params.node_limit - nodes,
            ..params.clone()
        };
        let (violated, lower_bound) = match solve(&cs.select(&active), w, l, &round) {
            Ok(mut out) => {
                nodes += out.nodes;
                out.nodes = nodes;
                let violated = check.violations(out.c.as_slice());
                if violated.is_empty() {
                    return Ok(out);
                }
                (violated, out.lower_bound)
            }
            Err(Error::Capacity(_)) => {
                nodes = params.node_limit;
                (Vec::new(), 0.0)
            }
            Err(e) => return Err(e),
        };
        if nodes >= params.node_limit {
            // Out of budget with a subset optimum that misses the full set.
            let bits = greedy_incumbent(&check, w, cs.dim(), l).ok_or_else(|| {
                Error::Capacity(format!(
                    "branch-and-bound hit its node limit of {} without a feasible point",
                    params.node_limit
                ))
            })?;
            let objective = bits.iter().map(|&b| b as usize).sum();
            return Ok(BnbOutcome {
                c: BinaryMatrix::from_flat(cs.dim(), l, bits),
                objective,
                lower_bound,
                nodes,
                proven_optimal: false,
            });
        }
        active.extend(violated.iter().take(WORKING_SET).map(|&(_, e)| e));
        active.sort_unstable();
        active.dedup();
    }
}

fn solve(cs: &ConstraintSet, w: &LiftedMatrix, l: usize, params: &BnbParams) -> Result<BnbOutcome> {
    let n = cs.dim();
    if l == 0 {
        return Err(Error::Domain("L must be at least 1".into()));
    }
    if cs.is_empty() {
        return Ok(BnbOutcome {
            c: BinaryMatrix::zeros(n, l),
            objective: 0,
            lower_bound: 0.0,
            nodes: 0,
            proven_optimal: true,
        });
    }
    let nl = n * l;
    let rel = Relaxation::new(cs, w, l);
    let check = ExactCheck::new(cs, w, l);

    let mut incumbent = greedy_incumbent(&check, w, n, l);
    let mut upper = incumbent
        .as_ref()
        .map_or(f64::INFINITY, |b| b.iter().map(|&v| f64::from(v)).sum());

    let mut heap = BinaryHeap::new();
    let mut seq = 0usize;
    heap.push(Node {
        fixed: vec![FREE; nl],
        bound: f64::NEG_INFINITY,
        depth: 0,
        seq,
        rows: Vec::new(),
    });
    let mut nodes = 0usize;
    let mut exhausted = true;
    let mut tightest: Option<usize> = None;
    let mut frontier_bound = f64::INFINITY;

    while let Some(node) = heap.pop() {
        if ceil_bound(node.bound, params.gap_tol) >= upper {
            // Best-first order: every remaining node is dominated too.
            frontier_bound = frontier_bound.min(node.bound);
            heap.clear();
            break;
        }
        if nodes >= params.node_limit {
            exhausted = false;
            frontier_bound = frontier_bound.min(node.bound);
            heap.push(node);
            break;
        }
        nodes += 1;
        let lp = match solve_node(&rel, &node.fixed, &node.rows) {
            Err(Error::State(_)) => {
                // Numerical breakdown in the LP: keep the parent bound and
                // split the node on its first free variable.
                let values = node
                    .fixed
                    .iter()
                    .map(|&f| if f == FREE { 0.5 } else { f64::from(f) })
                    .collect();
                NodeLp::Solved {
                    objective: node.bound,
                    values,
                    rows: node.rows.clone(),
                }
            }
            other => other?,
        };
        let (bound, values, rows) = match lp {
            NodeLp::Infeasible(e) => {
                tightest.get_or_insert(e);
                continue;
            }
            NodeLp::Solved {
                objective,
                values,
                rows,
            } => (objective.max(node.bound), values, rows),
        };
        if ceil_bound(bound, params.gap_tol) >= upper {
            continue;
        }

        let mut branch_var = None;
        let mut best_frac = INTEGRAL_TOL;
        for v in 0..nl {
            if node.fixed[v] != FREE {
                continue;
            }
            let frac = values[v].min(1.0 - values[v]);
            if frac > best_frac + 1e-12 {
                best_frac = frac;
                branch_var = Some(v);
            }
        }

        let mut try_candidate = |bits: Vec<u8>| {
            let obj: f64 = bits.iter().map(|&b| f64::from(b)).sum();
            if obj < upper && check.first_violation(&bits).is_none() {
                upper = obj;
                incumbent = Some(bits);
                return true;
            }
            false
        };

        let branch_var = match branch_var {
            Some(v) => {
                // Rounding every positive value up often lands on a feasible point.
                let bits = values.iter().map(|&x| u8::from(x > INTEGRAL_TOL)).collect();
                try_candidate(bits);
                v
            }
            None => {
                let bits: Vec<u8> = values.iter().map(|&x| u8::from(x > 0.5)).collect();
                if try_candidate(bits.clone()) {
                    continue;
                }
                // Binary relaxed point that misses a quadratic constraint:
                // branch on the free variable that weighs most in it.
                let Some(e) = check.most_violated(&bits) else {
                    continue;
                };
                tightest.get_or_insert(e);
                let f = rel.factors(e);
                let mut pick: Option<(f64, usize)> = None;
                for slot in 0..l {
                    for (t, &r) in f.support.iter().enumerate() {
                        let v = r * l + slot;
                        if node.fixed[v] != FREE {
                            continue;
                        }
                        let weight: f64 = f.factors.iter().map(|fac| fac.p[t].abs()).sum();
                        if pick.is_none_or(|(wgt, _)| weight > wgt) {
                            pick = Some((weight, v));
                        }
                    }
                }
                match pick.or_else(|| (0..nl).find(|&v| node.fixed[v] == FREE).map(|v| (0.0, v))) {
                    Some((_, v)) => v,
                    None => continue,
                }
            }
        };

        for value in [1i8, 0] {
            let mut fixed = node.fixed.clone();
            fixed[branch_var] = value;
            seq += 1;
            heap.push(Node {
                fixed,
                bound,
                depth: node.depth + 1,
                seq,
                rows: rows.clone(),
            });
        }
    }
    for node in heap.iter() {
        frontier_bound = frontier_bound.min(node.bound);
    }

    match incumbent {
        Some(bits) => {
            let objective = bits.iter().map(|&b| b as usize).sum();
            let lower_bound = if exhausted && heap.is_empty() {
                objective as f64
            } else {
                frontier_bound.min(objective as f64)
            };
            Ok(BnbOutcome {
                c: BinaryMatrix::from_flat(n, l, bits),
                objective,
                lower_bound,
                nodes,
                proven_optimal: exhausted,
            })
        }
        None if exhausted => {
            let e = tightest
                .or_else(|| check.most_violated(&vec![1u8; nl]))
                .unwrap_or(0);
            Err(Error::Infeasible {
                stage: "branch-and-bound",
                detail: format!("no binary coding matrix satisfies entry {e}"),
                witness: Some(cs.get(e).witness),
            })
        }
        None => Err(Error::Capacity(format!(
            "branch-and-bound hit its node limit of {} without a feasible point",
            params.node_limit
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn two_variable_example() {
        let cs = ConstraintSet::from_dense(2, &[(vec![1, -1], 0.5)], 1.0).unwrap();
        let w = LiftedMatrix::from_vector(&[Complex64::new(1.0, 0.0); 2]);
        let out = branch_and_bound_with(&cs, &w, 1, &BnbParams::default()).unwrap();
        assert_eq!(out.objective, 1);
        assert!(out.proven_optimal);
    }

    #[test]
    fn empty_constraints() {
        let cs = ConstraintSet::empty(2, 2, 1.0, false);
        let w = LiftedMatrix::from_vector(&[Complex64::new(0.5, 0.0); 4]);
        let c = branch_and_bound(&cs, &w, 3, 1e-6).unwrap();
        assert_eq!(c.ones_count(), 0);
        assert_eq!((c.rows(), c.cols()), (4, 3));
    }

    #[test]
    fn infeasible_reports_witness() {
        let cs = ConstraintSet::from_dense(2, &[(vec![1, -1], 4.0)], 1.0).unwrap();
        let w = LiftedMatrix::from_vector(&[Complex64::new(1.0, 0.0); 2]);
        let err = branch_and_bound(&cs, &w, 2, 1e-6).unwrap_err();
        assert!(matches!(err, Error::Infeasible { witness: Some((0, 0)), .. }));
    }
}
