//! Small dense Hermitian helpers on top of nalgebra.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

/// Eigenpairs of a Hermitian matrix, eigenvalues sorted in decreasing order.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    let sym = hermitian_part(m);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// `(M + Mᴴ) / 2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Rotate `v` so that its largest-magnitude entry is real and positive
/// (lowest index wins ties). Makes eigenvector phases reproducible.
pub fn normalize_phase(v: &mut [Complex64]) {
    let mut best = 0;
    let mut best_abs = -1.0;
    for (i, z) in v.iter().enumerate() {
        let a = z.norm();
        if a > best_abs * (1.0 + 1e-12) {
            best = i;
            best_abs = a;
        }
    }
    if best_abs <= 0.0 {
        return;
    }
    let rot = v[best].conj() / best_abs;
    for z in v.iter_mut() {
        *z *= rot;
    }
}

/// Euclidean projection of eigenvalues onto `{λ ≥ 0, Σλ ≤ τ}`.
pub fn project_eigenvalues(values: &[f64], tau: f64) -> Vec<f64> {
    let clipped: Vec<f64> = values.iter().map(|&v| v.max(0.0)).collect();
    if clipped.iter().sum::<f64>() <= tau {
        return clipped;
    }
    // Find θ with Σ max(0, λ - θ) = τ; values are sorted descending.
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut prefix = 0.0;
    let mut theta = 0.0;
    for (i, &v) in sorted.iter().enumerate() {
        prefix += v;
        let t = (prefix - tau) / (i + 1) as f64;
        if i + 1 == sorted.len() || sorted[i + 1] <= t {
            theta = t;
            break;
        }
    }
    values.iter().map(|&v| (v - theta).max(0.0)).collect()
}

/// Projection onto the spectraplex `{W ⪰ 0, tr W ≤ τ}` in Frobenius norm.
pub fn project_spectraplex(m: &CMatrix, tau: f64) -> CMatrix {
    let (values, vectors) = hermitian_eigen(m);
    let projected = project_eigenvalues(&values, tau);
    reconstruct(&projected, &vectors)
}

/// `Σ λᵢ vᵢ vᵢᴴ`, skipping zero eigenvalues.
pub fn reconstruct(values: &[f64], vectors: &CMatrix) -> CMatrix {
    let n = vectors.nrows();
    let mut out = CMatrix::zeros(n, n);
    for (i, &lam) in values.iter().enumerate() {
        if lam == 0.0 {
            continue;
        }
        let v = vectors.column(i);
        for r in 0..n {
            let vr = v[r] * lam;
            for c in 0..n {
                out[(r, c)] += vr * v[c].conj();
            }
        }
    }
    out
}

/// Largest eigenvalue of a small real symmetric matrix given row-major.
pub fn max_eigenvalue_real(m: &[f64], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    if n == 1 {
        return m[0];
    }
    let mat = DMatrix::from_row_slice(n, n, m);
    SymmetricEigen::new(mat).eigenvalues.max()
}

pub fn frobenius_norm(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvalue_projection_water_fills() {
        assert_eq!(project_eigenvalues(&[0.3, -0.2], 1.0), vec![0.3, 0.0]);
        let p = project_eigenvalues(&[2.0, 1.0, -1.0], 1.0);
        assert!((p[0] - 1.0).abs() < 1e-12 && p[1] == 0.0 && p[2] == 0.0);
        let p = project_eigenvalues(&[1.0, 1.0], 1.0);
        assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn projection_lands_in_spectraplex() {
        let m = CMatrix::from_fn(3, 3, |r, c| Complex64::new((r + 2 * c) as f64 - 2.0, 0.0));
        let p = project_spectraplex(&hermitian_part(&m), 1.0);
        let (values, _) = hermitian_eigen(&p);
        assert!(values.iter().all(|&v| v > -1e-12));
        assert!(values.iter().sum::<f64>() <= 1.0 + 1e-12);
    }

    #[test]
    fn phase_normalization() {
        let mut v = vec![Complex64::new(0.0, 0.1), Complex64::new(0.0, -2.0)];
        normalize_phase(&mut v);
        assert!((v[1] - Complex64::new(2.0, 0.0)).norm() < 1e-15);
        assert!((v[0] - Complex64::new(-0.1, 0.0)).norm() < 1e-15);
    }
}
