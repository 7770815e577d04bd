//! Quantized input lattice, function tables, selection vectors and the
//! deduplicated pairwise separation constraints.
//!
//! Tuples are indexed in base `Q` with node 1 as the most significant digit,
//! so tuple `g` has digit `q_k = (g / Q^(K-1-k)) % Q` for node `k` (0-based).

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Witness};

/// Largest `Q^K` for which a full-modulation constraint set is enumerated.
pub const DEFAULT_ENUMERATION_BUDGET: usize = 65_536;

/// Hard ceiling on the size of a materialized function table.
pub const TABLE_LIMIT: usize = 1 << 22;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionKind {
    Sum,
    Product,
    Max,
    Custom,
}

impl FunctionKind {
    pub fn evaluate(self, inputs: &[f64]) -> Option<f64> {
        match self {
            FunctionKind::Sum => Some(inputs.iter().sum()),
            FunctionKind::Product => Some(inputs.iter().product()),
            FunctionKind::Max => Some(inputs.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
            FunctionKind::Custom => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FunctionKind::Sum => "sum",
            FunctionKind::Product => "product",
            FunctionKind::Max => "max",
            FunctionKind::Custom => "custom",
        }
    }
}

impl fmt::Display for FunctionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The target function tabulated over every input tuple.
#[derive(Clone, Debug, PartialEq)]
pub struct FunctionTable {
    pub kind: FunctionKind,
    pub k: usize,
    pub q: usize,
    pub values: Vec<f64>,
    pub outputs: Vec<f64>,
    pub distinct_outputs: Vec<f64>,
    symmetric: bool,
}

/// Default input alphabet `1..=Q`.
pub fn default_values(q: usize) -> Vec<f64> {
    (1..=q).map(|v| v as f64).collect()
}

fn checked_pow(q: usize, k: usize) -> Option<usize> {
    let mut acc: usize = 1;
    for _ in 0..k {
        acc = acc.checked_mul(q)?;
    }
    Some(acc)
}

/// Number of tuples `Q^K`, or a capacity error if it overflows the table limit.
pub fn tuple_count(k: usize, q: usize) -> Result<usize> {
    match checked_pow(q, k) {
        Some(n) if n <= TABLE_LIMIT => Ok(n),
        _ => Err(Error::Capacity(format!(
            "Q^K = {q}^{k} exceeds the table limit of {TABLE_LIMIT} tuples"
        ))),
    }
}

/// Decode tuple index `g` into per-node value indices (node 1 first).
pub fn tuple_digits(g: usize, k: usize, q: usize) -> Vec<usize> {
    let mut digits = vec![0; k];
    let mut rest = g;
    for slot in digits.iter_mut().rev() {
        *slot = rest % q;
        rest /= q;
    }
    digits
}

/// Inverse of [`tuple_digits`].
pub fn tuple_index(digits: &[usize], q: usize) -> usize {
    digits.iter().fold(0, |acc, &d| acc * q + d)
}

/// Build the table for a built-in kind, or for `Custom` with an evaluator.
///
/// `values` defaults to `1..=Q` when `None`.
pub fn build_function_table(
    kind: FunctionKind,
    k: usize,
    q: usize,
    values: Option<Vec<f64>>,
    evaluator: Option<&dyn Fn(&[f64]) -> f64>,
) -> Result<FunctionTable> {
    if k < 1 {
        return Err(Error::Domain("K must be at least 1".into()));
    }
    if q < 2 {
        return Err(Error::Domain("Q must be at least 2".into()));
    }
    let values = values.unwrap_or_else(|| default_values(q));
    if values.len() != q {
        return Err(Error::Domain(format!(
            "expected {q} input values, got {}",
            values.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) || values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("input values must be finite and strictly increasing".into()));
    }
    let eval: Box<dyn Fn(&[f64]) -> f64 + '_> = match (kind, evaluator) {
        (FunctionKind::Custom, Some(f)) => Box::new(f),
        (FunctionKind::Custom, None) => {
            return Err(Error::Config("custom function kind requires an evaluator".into()))
        }
        (builtin, _) => Box::new(move |xs: &[f64]| builtin.evaluate(xs).unwrap_or(f64::NAN)),
    };

    let n = tuple_count(k, q)?;
    let mut outputs = Vec::with_capacity(n);
    let mut inputs = vec![0.0; k];
    for g in 0..n {
        for (slot, d) in inputs.iter_mut().zip(tuple_digits(g, k, q)) {
            *slot = values[d];
        }
        let f = eval(&inputs);
        if !f.is_finite() {
            return Err(Error::Domain(format!("function output at tuple {g} is not finite")));
        }
        outputs.push(f);
    }
    FunctionTable::from_outputs(kind, k, q, values, outputs)
}

impl FunctionTable {
    /// Assemble a table from precomputed outputs (used for custom functions
    /// and when loading artifacts).
    pub fn from_outputs(
        kind: FunctionKind,
        k: usize,
        q: usize,
        values: Vec<f64>,
        outputs: Vec<f64>,
    ) -> Result<Self> {
        let n = tuple_count(k, q)?;
        if outputs.len() != n || values.len() != q {
            return Err(Error::Domain("table dimensions do not match K and Q".into()));
        }
        let mut distinct = outputs.clone();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        let symmetric = match kind {
            FunctionKind::Custom => (0..n).all(|g| {
                let mut digits = tuple_digits(g, k, q);
                digits.sort_unstable();
                outputs[tuple_index(&digits, q)] == outputs[g]
            }),
            _ => true,
        };
        Ok(Self {
            kind,
            k,
            q,
            values,
            outputs,
            distinct_outputs: distinct,
            symmetric,
        })
    }

    pub fn num_tuples(&self) -> usize {
        self.outputs.len()
    }

    /// `N = Q·K`.
    pub fn n(&self) -> usize {
        self.q * self.k
    }

    pub fn m(&self) -> usize {
        self.distinct_outputs.len()
    }

    pub fn output(&self, g: usize) -> f64 {
        self.outputs[g]
    }

    pub fn digits(&self, g: usize) -> Vec<usize> {
        tuple_digits(g, self.k, self.q)
    }

    pub fn index_of(&self, digits: &[usize]) -> usize {
        tuple_index(digits, self.q)
    }

    /// Tuple index of the given input values (not value indices).
    pub fn index_of_values(&self, inputs: &[f64]) -> Result<usize> {
        if inputs.len() != self.k {
            return Err(Error::Domain(format!("expected {} inputs", self.k)));
        }
        let digits = inputs
            .iter()
            .map(|x| {
                self.values
                    .iter()
                    .position(|v| v == x)
                    .ok_or_else(|| Error::Domain(format!("{x} is not an input value")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.index_of(&digits))
    }

    pub fn inputs(&self, g: usize) -> Vec<f64> {
        self.digits(g).into_iter().map(|d| self.values[d]).collect()
    }

    /// True when the output depends only on the multiset of inputs.
    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn output_range(&self) -> (f64, f64) {
        (
            self.distinct_outputs[0],
            *self.distinct_outputs.last().expect("tables are never empty"),
        )
    }

    pub fn is_constant(&self) -> bool {
        self.distinct_outputs.len() == 1
    }
}

/// One-hot support of an input tuple over the `N = Q·K` constellation slots.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SelectionVector {
    pub bits: Vec<u8>,
}

impl SelectionVector {
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().filter(|(_, &b)| b == 1).map(|(i, _)| i)
    }
}

pub fn selection_vector(tuple_index: usize, k: usize, q: usize) -> Result<SelectionVector> {
    let n = tuple_count(k, q)?;
    if tuple_index >= n {
        return Err(Error::Domain(format!(
            "tuple index {tuple_index} out of range for Q^K = {n}"
        )));
    }
    let mut bits = vec![0u8; q * k];
    for (node, d) in tuple_digits(tuple_index, k, q).into_iter().enumerate() {
        bits[node * q + d] = 1;
    }
    Ok(SelectionVector { bits })
}

/// Borrowed view of one deduplicated separation constraint.
#[derive(Clone, Copy, Debug)]
pub struct ConstraintRef<'a> {
    /// Nonzero positions of `d`.
    pub support: &'a [u16],
    /// Values of `d` on its support.
    pub coeffs: &'a [i8],
    pub delta_f: f64,
    /// `|f_i - f_j|` of the retained witness, independent of `sigma_z2`.
    pub output_gap: f64,
    pub witness: Witness,
}

impl ConstraintRef<'_> {
    pub fn dense(&self, n: usize) -> Vec<i32> {
        let mut d = vec![0; n];
        for (&i, &c) in self.support.iter().zip(self.coeffs) {
            d[i as usize] = i32::from(c);
        }
        d
    }
}

/// Deduplicated constraints `d = a_i - a_j`, `Δf = σ²·|f_i - f_j|`, stored
/// sparsely because `d` has at most `2K` nonzeros.
#[derive(Clone, Debug)]
pub struct ConstraintSet {
    n: usize,
    k: usize,
    q: usize,
    offsets: Vec<u32>,
    support: Vec<u16>,
    coeffs: Vec<i8>,
    delta_f: Vec<f64>,
    output_gap: Vec<f64>,
    witness: Vec<(u32, u32)>,
    pub sigma_z2: f64,
    pub shared_modulation: bool,
}

impl ConstraintSet {
    /// Empty set over an `n`-dimensional modulation vector.
    pub fn empty(k: usize, q: usize, sigma_z2: f64, shared_modulation: bool) -> Self {
        Self {
            n: if shared_modulation { q } else { q * k },
            k,
            q,
            offsets: vec![0],
            support: Vec::new(),
            coeffs: Vec::new(),
            delta_f: Vec::new(),
            output_gap: Vec::new(),
            witness: Vec::new(),
            sigma_z2,
            shared_modulation,
        }
    }

    /// Build a set from explicit dense difference vectors. Witnesses are
    /// synthetic (`(e, e)`) and the output gaps are `Δf / σ²`.
    pub fn from_dense(n: usize, entries: &[(Vec<i32>, f64)], sigma_z2: f64) -> Result<Self> {
        let mut cs = Self::empty(1, n, sigma_z2, false);
        cs.n = n;
        for (e, (d, df)) in entries.iter().enumerate() {
            if d.len() != n {
                return Err(Error::Domain(format!("difference vector {e} has wrong length")));
            }
            if !(df.is_finite() && *df >= 0.0) {
                return Err(Error::Domain(format!("threshold {e} must be finite and nonnegative")));
            }
            let gap = if sigma_z2 > 0.0 { df / sigma_z2 } else { *df };
            cs.push(d, *df, gap, (e, e))?;
        }
        Ok(cs)
    }

    fn push(&mut self, d: &[i32], delta_f: f64, gap: f64, witness: Witness) -> Result<()> {
        for (i, &c) in d.iter().enumerate() {
            if c != 0 {
                let c = i8::try_from(c)
                    .map_err(|_| Error::Domain("difference entries must fit in i8".into()))?;
                self.support.push(i as u16);
                self.coeffs.push(c);
            }
        }
        self.offsets.push(self.support.len() as u32);
        self.delta_f.push(delta_f);
        self.output_gap.push(gap);
        self.witness.push((witness.0 as u32, witness.1 as u32));
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.delta_f.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delta_f.is_empty()
    }

    /// Length of each difference vector (`Q·K`, or `Q` when shared).
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// Trace budget of the compact modulation vector. A shared vector is
    /// replicated `K` times, so its own energy is limited to `1/K`.
    pub fn power_budget(&self) -> f64 {
        if self.shared_modulation {
            1.0 / self.k as f64
        } else {
            1.0
        }
    }

    pub fn get(&self, e: usize) -> ConstraintRef<'_> {
        let (a, b) = (self.offsets[e] as usize, self.offsets[e + 1] as usize);
        let (i, j) = self.witness[e];
        ConstraintRef {
            support: &self.support[a..b],
            coeffs: &self.coeffs[a..b],
            delta_f: self.delta_f[e],
            output_gap: self.output_gap[e],
            witness: (i as usize, j as usize),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = ConstraintRef<'_>> + '_ {
        (0..self.len()).map(move |e| self.get(e))
    }

    pub fn delta_f(&self) -> &[f64] {
        &self.delta_f
    }

    /// Copy with every threshold multiplied by `factor` (equivalently, the
    /// set built at noise variance `factor·σ²`).
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.sigma_z2 *= factor;
        for df in &mut out.delta_f {
            *df *= factor;
        }
        out
    }

    /// Copy holding only the entries `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Self {
        let mut out = Self::empty(self.k, self.q, self.sigma_z2, self.shared_modulation);
        out.n = self.n;
        for &e in indices {
            let (a, b) = (self.offsets[e] as usize, self.offsets[e + 1] as usize);
            out.support.extend_from_slice(&self.support[a..b]);
            out.coeffs.extend_from_slice(&self.coeffs[a..b]);
            out.offsets.push(out.support.len() as u32);
            out.delta_f.push(self.delta_f[e]);
            out.output_gap.push(self.output_gap[e]);
            out.witness.push(self.witness[e]);
        }
        out
    }

    /// Largest support size over all entries.
    pub fn max_support(&self) -> usize {
        self.offsets
            .windows(2)
            .map(|w| (w[1] - w[0]) as usize)
            .max()
            .unwrap_or(0)
    }
}

/// Build the constraint set with the default enumeration budget.
pub fn build_constraints(
    table: &FunctionTable,
    sigma_z2: f64,
    shared_modulation: bool,
) -> Result<ConstraintSet> {
    build_constraints_with_budget(table, sigma_z2, shared_modulation, DEFAULT_ENUMERATION_BUDGET)
}

pub fn build_constraints_with_budget(
    table: &FunctionTable,
    sigma_z2: f64,
    shared_modulation: bool,
    budget: usize,
) -> Result<ConstraintSet> {
    if !(sigma_z2.is_finite() && sigma_z2 >= 0.0) {
        return Err(Error::Domain("sigma_z2 must be finite and nonnegative".into()));
    }
    let (k, q) = (table.k, table.q);
    // Each candidate is (representative tuple, aggregated support counts).
    let candidates: Vec<(usize, Vec<i32>)> = if shared_modulation {
        if !table.is_symmetric() {
            return Err(Error::Config(
                "shared modulation requires a symmetric function".into(),
            ));
        }
        multisets(k, q)
            .into_iter()
            .map(|digits| {
                let mut counts = vec![0i32; q];
                for &d in &digits {
                    counts[d] += 1;
                }
                (tuple_index(&digits, q), counts)
            })
            .collect()
    } else {
        let n = table.num_tuples();
        if n > budget {
            return Err(Error::Capacity(format!(
                "Q^K = {n} exceeds the enumeration budget of {budget}; \
                 enable shared_modulation or reduce Q/K"
            )));
        }
        (0..n)
            .map(|g| {
                let sel = selection_vector(g, k, q).expect("index in range");
                (g, sel.bits.iter().map(|&b| i32::from(b)).collect())
            })
            .collect()
    };

    let mut cs = ConstraintSet::empty(k, q, sigma_z2, shared_modulation);
    let mut seen: HashMap<Vec<i8>, usize> = HashMap::new();
    let dim = cs.n;
    let mut d = vec![0i32; dim];
    let mut key = vec![0i8; dim];
    for (a, (gi, ci)) in candidates.iter().enumerate() {
        let fi = table.output(*gi);
        for (gj, cj) in &candidates[a + 1..] {
            let fj = table.output(*gj);
            if fi == fj {
                continue;
            }
            for ((slot, x), y) in d.iter_mut().zip(ci).zip(cj) {
                *slot = x - y;
            }
            // Canonical sign: first nonzero entry positive.
            let first = d.iter().copied().find(|&v| v != 0).unwrap_or(0);
            let (sign, witness) = if first < 0 { (-1, (*gj, *gi)) } else { (1, (*gi, *gj)) };
            for (kslot, &v) in key.iter_mut().zip(&d) {
                *kslot = (sign * v) as i8;
            }
            let gap = (fi - fj).abs();
            match seen.get(key.as_slice()) {
                Some(&e) => {
                    if gap > cs.output_gap[e] {
                        cs.output_gap[e] = gap;
                        cs.delta_f[e] = sigma_z2 * gap;
                        cs.witness[e] = (witness.0 as u32, witness.1 as u32);
                    }
                }
                None => {
                    let e = cs.len();
                    seen.insert(key.clone(), e);
                    let dense: Vec<i32> = key.iter().map(|&v| i32::from(v)).collect();
                    cs.push(&dense, sigma_z2 * gap, gap, witness)?;
                }
            }
        }
    }
    Ok(cs)
}

/// Sorted value-index multisets of size `k` over `0..q`, in increasing
/// tuple-index order.
pub fn multisets(k: usize, q: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; k];
    loop {
        out.push(cur.clone());
        // Advance to the next non-decreasing sequence.
        let mut pos = k;
        while pos > 0 && cur[pos - 1] == q - 1 {
            pos -= 1;
        }
        if pos == 0 {
            return out;
        }
        let v = cur[pos - 1] + 1;
        for slot in &mut cur[pos - 1..] {
            *slot = v;
        }
    }
}

/// Expand a compact (shared) difference or modulation index to the full
/// `Q·K` layout: entry `q` of the compact vector is copied to every node.
pub fn expand_shared<T: Clone>(compact: &[T], k: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(compact.len() * k);
    for _ in 0..k {
        out.extend_from_slice(compact);
    }
    out
}
