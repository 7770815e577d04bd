//! Real factorization of each constraint's quadratic form and the
//! McCormick-style bounds on the bilinear factors.
//!
//! For entry `d` the form `cᵀ((d dᵀ) ∘ W) c` is rewritten as
//! `Σ_m (p_mᵀ c)²` by eigendecomposing the Hermitian PSD matrix
//! `(d dᵀ) ∘ W` on the support of `d`. Each scaled complex eigenvector
//! contributes its real part and its imaginary part as separate real factors.

use num_complex::Complex64;

use super::{FracMatrix, LiftedMatrix};
use crate::function_space::{ConstraintRef, ConstraintSet};
use crate::linalg::{self, CMatrix};

/// Eigenvalues below this are treated as zero.
pub const EIGEN_FLOOR: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct Factor {
    /// Values on the entry support.
    pub p: Vec<f64>,
    pub l: f64,
    pub u: f64,
}

impl Factor {
    pub fn new(p: Vec<f64>) -> Self {
        let (l, u) = bilinear_bounds(&p);
        Self { p, l, u }
    }

    /// `pᵀ c` for `c` indexed on the support.
    pub fn dot(&self, c: &[f64]) -> f64 {
        self.p.iter().zip(c).map(|(a, b)| a * b).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EntryFactors {
    pub support: Vec<usize>,
    pub factors: Vec<Factor>,
}

impl EntryFactors {
    /// Factor `m` scattered to a dense vector of length `n`.
    pub fn dense(&self, m: usize, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for (&i, &v) in self.support.iter().zip(&self.factors[m].p) {
            out[i] = v;
        }
        out
    }

    /// `Σ_m (p_mᵀ c)²` for a dense column `c`.
    pub fn quadratic(&self, c: &[f64]) -> f64 {
        self.factors
            .iter()
            .map(|f| {
                let y: f64 = self.support.iter().zip(&f.p).map(|(&i, p)| p * c[i]).sum();
                y * y
            })
            .sum()
    }

    fn projections<'a>(&'a self, c: &'a FracMatrix) -> impl Iterator<Item = (&'a Factor, f64)> + 'a {
        (0..c.cols).flat_map(move |slot| {
            self.factors.iter().map(move |f| {
                let y = self.support.iter().zip(&f.p).map(|(&i, p)| p * c.get(i, slot)).sum();
                (f, y)
            })
        })
    }

    /// `h = Σ_ℓ Σ_m (p_mᵀ c_ℓ)²` for a coding matrix `c`.
    pub fn exact(&self, c: &FracMatrix) -> f64 {
        self.projections(c).map(|(_, y)| y * y).sum()
    }

    /// Secant overestimate `ĥ = Σ_ℓ Σ_m ((l_m + u_m)·p_mᵀc_ℓ − l_m·u_m)`.
    pub fn relaxed(&self, c: &FracMatrix) -> f64 {
        self.projections(c).map(|(f, y)| (f.l + f.u) * y - f.l * f.u).sum()
    }

    /// Stacked bound vectors `(l, u)` over the factors.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        self.factors.iter().map(|f| (f.l, f.u)).unzip()
    }
}

#[derive(Clone, Debug)]
pub struct McCormickBounds {
    pub dim: usize,
    pub entries: Vec<EntryFactors>,
}

/// `l = Σ min(0, pₙ)`, `u = Σ max(0, pₙ)`: the range of `pᵀc` over the unit box.
pub fn bilinear_bounds(p: &[f64]) -> (f64, f64) {
    p.iter().fold((0.0, 0.0), |(l, u), &v| (l + v.min(0.0), u + v.max(0.0)))
}

fn push_split(factors: &mut Vec<Factor>, v: &[Complex64]) {
    let re: Vec<f64> = v.iter().map(|z| z.re).collect();
    let im: Vec<f64> = v.iter().map(|z| z.im).collect();
    for part in [re, im] {
        if part.iter().any(|&x| x != 0.0) {
            factors.push(Factor::new(part));
        }
    }
}

pub fn entry_factors(entry: ConstraintRef<'_>, w: &LiftedMatrix) -> EntryFactors {
    let support: Vec<usize> = entry.support.iter().map(|&i| i as usize).collect();
    let d: Vec<f64> = entry.coeffs.iter().map(|&c| f64::from(c)).collect();
    let mut factors = Vec::new();
    if let Some(x) = &w.rank_one {
        let mut v: Vec<Complex64> = support.iter().zip(&d).map(|(&i, &di)| x[i] * di).collect();
        let lambda: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if lambda >= EIGEN_FLOOR {
            linalg::normalize_phase(&mut v);
            push_split(&mut factors, &v);
        }
    } else {
        let s = support.len();
        let m = CMatrix::from_fn(s, s, |a, b| w.w[(support[a], support[b])] * (d[a] * d[b]));
        let (values, vectors) = linalg::hermitian_eigen(&m);
        for (k, &lambda) in values.iter().enumerate() {
            if lambda < EIGEN_FLOOR {
                break;
            }
            let mut v: Vec<Complex64> = vectors.column(k).iter().map(|z| z * lambda.sqrt()).collect();
            linalg::normalize_phase(&mut v);
            push_split(&mut factors, &v);
        }
    }
    EntryFactors { support, factors }
}

pub fn mccormick_bounds(cs: &ConstraintSet, w: &LiftedMatrix) -> McCormickBounds {
    McCormickBounds {
        dim: cs.dim(),
        entries: cs.iter().map(|e| entry_factors(e, w)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bounds_examples() {
        assert_eq!(bilinear_bounds(&[1.0, -2.0, 3.0]), (-2.0, 4.0));
        assert_eq!(bilinear_bounds(&[0.0, 0.0]), (0.0, 0.0));
        assert_eq!(bilinear_bounds(&[-1.0, -1.0]), (-2.0, 0.0));
    }

    fn random_psd(n: usize, rank: usize, rng: &mut ChaCha8Rng) -> CMatrix {
        let mut w = CMatrix::zeros(n, n);
        for _ in 0..rank {
            let v: Vec<Complex64> = (0..n)
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            for r in 0..n {
                for c in 0..n {
                    w[(r, c)] += v[r] * v[c].conj();
                }
            }
        }
        let t: f64 = (0..n).map(|i| w[(i, i)].re).sum();
        w.scale(1.0 / t)
    }

    #[test]
    fn complex_split_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 6;
        let d = vec![1, 0, -1, 1, 0, -1];
        let cs = ConstraintSet::from_dense(n, &[(d.clone(), 0.1)], 1.0).unwrap();
        for rank in [1, 2, 6] {
            let w = LiftedMatrix::new(random_psd(n, rank, &mut rng));
            let f = entry_factors(cs.get(0), &w);
            for _ in 0..20 {
                let c: Vec<f64> = (0..n).map(|_| f64::from(rng.gen_range(0..2u8))).collect();
                let mut direct = 0.0;
                for r in 0..n {
                    for k in 0..n {
                        direct += f64::from(d[r] * d[k]) * w.w[(r, k)].re * c[r] * c[k];
                    }
                }
                assert!((f.quadratic(&c) - direct).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn rank_one_fast_path_agrees() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x: Vec<Complex64> =
            (0..4).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let fast = LiftedMatrix::from_vector(&x);
        let slow = LiftedMatrix::new(fast.w.clone());
        let cs = ConstraintSet::from_dense(4, &[(vec![1, -1, 0, 1], 0.1)], 1.0).unwrap();
        let a = entry_factors(cs.get(0), &fast);
        let b = entry_factors(cs.get(0), &slow);
        for mask in 0..16u32 {
            let c: Vec<f64> = (0..4).map(|i| f64::from((mask >> i) & 1)).collect();
            assert!((a.quadratic(&c) - b.quadratic(&c)).abs() < 1e-12);
        }
    }
}
