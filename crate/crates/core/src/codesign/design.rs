use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function_space::ConstraintSet;

/// Dense row-major 0/1 matrix, `rows = N`, `cols = L`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "Vec<Vec<u8>>", try_from = "Vec<Vec<u8>>")]
pub struct BinaryMatrix {
    rows: usize,
    cols: usize,
    data: Vec<u8>,
}

impl BinaryMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn ones(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![1; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Domain("ragged coding matrix".into()));
        }
        if rows.iter().flatten().any(|&b| b > 1) {
            return Err(Error::Domain("coding matrix entries must be 0 or 1".into()));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        })
    }

    /// Build from a flat row-major bit vector.
    pub fn from_flat(rows: usize, cols: usize, data: Vec<u8>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> u8 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: u8) {
        self.data[r * self.cols + c] = v;
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.data
    }

    /// `Σ_ℓ ‖c_ℓ‖₁`.
    pub fn ones_count(&self) -> usize {
        self.data.iter().map(|&b| b as usize).sum()
    }

    pub fn to_frac(&self) -> FracMatrix {
        FracMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&b| f64::from(b)).collect(),
        }
    }

    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        self.data.chunks(self.cols.max(1)).map(<[u8]>::to_vec).collect()
    }
}

impl From<BinaryMatrix> for Vec<Vec<u8>> {
    fn from(m: BinaryMatrix) -> Self {
        if m.cols == 0 {
            return vec![Vec::new(); m.rows];
        }
        m.to_rows()
    }
}

impl TryFrom<Vec<Vec<u8>>> for BinaryMatrix {
    type Error = Error;
    fn try_from(rows: Vec<Vec<u8>>) -> Result<Self> {
        Self::from_rows(&rows)
    }
}

/// Row-major real matrix with entries in `[0, 1]` (LP iterates).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FracMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl FracMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn frobenius_distance(&self, other: &FracMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// Per-alternation diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub n: usize,
    pub w_sweeps: usize,
    pub w_residual: f64,
    pub w_trace: f64,
    /// `λ₁ / tr W`; equals 1 for a rank-one lifted matrix.
    pub w_top_fraction: f64,
    pub c_objective: Option<f64>,
    pub c_change: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct BnbSummary {
    pub nodes: usize,
    pub objective: usize,
    pub lower_bound: f64,
    pub proven_optimal: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct DesignMeta {
    pub iterations: usize,
    /// Noise variance the thresholds were requested at.
    pub nominal_sigma_z2: f64,
    /// Noise variance the returned design actually satisfies after any
    /// threshold back-off.
    pub design_sigma_z2: f64,
    pub trace: Vec<IterationRecord>,
    /// Relaxed coding matrices `C¹, C², …` produced by the C-step.
    pub c_trace: Vec<FracMatrix>,
    pub bnb: Option<BnbSummary>,
    /// Entries of the design constraint set that the returned design violates.
    pub violations: usize,
    pub notes: Vec<String>,
}

/// A modulation vector and repetition-coding matrix.
///
/// With shared modulation every node uses the same `Q` points and the same
/// coding rows, so `x` has length `Q` and `c` has `Q` rows; the full
/// `Q·K` layout is obtained by block replication.
#[derive(Clone, Debug, PartialEq)]
pub struct Design {
    pub k: usize,
    pub q: usize,
    pub l: usize,
    pub shared_modulation: bool,
    pub x: Vec<Complex64>,
    pub c: BinaryMatrix,
    pub meta: DesignMeta,
}

impl Design {
    pub fn new(
        k: usize,
        q: usize,
        shared_modulation: bool,
        x: Vec<Complex64>,
        c: BinaryMatrix,
    ) -> Result<Self> {
        let n = if shared_modulation { q } else { q * k };
        if x.len() != n || c.rows() != n {
            return Err(Error::Domain(format!(
                "design expects {n} modulation entries and coding rows"
            )));
        }
        if c.cols() == 0 {
            return Err(Error::Domain("L must be at least 1".into()));
        }
        Ok(Self {
            k,
            q,
            l: c.cols(),
            shared_modulation,
            x,
            c,
            meta: DesignMeta::default(),
        })
    }

    /// Row of node `node`'s value index `v` in the compact layout.
    pub fn row(&self, node: usize, v: usize) -> usize {
        if self.shared_modulation {
            v
        } else {
            node * self.q + v
        }
    }

    pub fn symbol(&self, node: usize, v: usize) -> Complex64 {
        self.x[self.row(node, v)]
    }

    pub fn active(&self, node: usize, v: usize, slot: usize) -> bool {
        self.c.get(self.row(node, v), slot) == 1
    }

    pub fn full_x(&self) -> Vec<Complex64> {
        if self.shared_modulation {
            crate::function_space::expand_shared(&self.x, self.k)
        } else {
            self.x.clone()
        }
    }

    pub fn full_c(&self) -> BinaryMatrix {
        if !self.shared_modulation {
            return self.c.clone();
        }
        let rows = self.c.to_rows();
        BinaryMatrix::from_rows(&crate::function_space::expand_shared(&rows, self.k))
            .expect("replicated rows stay rectangular")
    }

    /// Total transmit energy `‖x‖²` over the full `Q·K` layout.
    pub fn power(&self) -> f64 {
        let compact: f64 = self.x.iter().map(|z| z.norm_sqr()).sum();
        if self.shared_modulation {
            compact * self.k as f64
        } else {
            compact
        }
    }

    /// Noiseless received sequence `v` for the tuple with value indices `digits`.
    pub fn noiseless(&self, digits: &[usize]) -> Vec<Complex64> {
        let mut v = vec![Complex64::new(0.0, 0.0); self.l];
        for (node, &d) in digits.iter().enumerate() {
            let r = self.row(node, d);
            let s = self.x[r];
            for (slot, out) in v.iter_mut().enumerate() {
                if self.c.get(r, slot) == 1 {
                    *out += s;
                }
            }
        }
        v
    }

    /// Whether this design lives on the same space as `cs`.
    pub fn matches(&self, cs: &ConstraintSet) -> bool {
        self.k == cs.k() && self.q == cs.q() && self.shared_modulation == cs.shared_modulation
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_matrix_round_trips_through_rows() {
        let m = BinaryMatrix::from_rows(&[vec![1, 0], vec![0, 1], vec![1, 1]]).unwrap();
        assert_eq!(m.ones_count(), 4);
        let json = serde_json::to_string(&m).unwrap();
        assert_eq!(json, "[[1,0],[0,1],[1,1]]");
        let back: BinaryMatrix = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
        assert!(BinaryMatrix::from_rows(&[vec![2]]).is_err());
    }

    #[test]
    fn shared_design_expands() {
        let x = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)];
        let d = Design::new(3, 2, true, x, BinaryMatrix::ones(2, 1)).unwrap();
        assert_eq!(d.full_x().len(), 6);
        assert_eq!(d.full_c().rows(), 6);
        assert!((d.power() - 6.0).abs() < 1e-12);
        assert_eq!(d.noiseless(&[0, 1, 1]), vec![Complex64::new(1.0, 2.0)]);
    }
}
