use num_complex::Complex64;

use super::LiftedMatrix;
use crate::linalg;

/// `x̂ = √λ₁·u₁` from the top eigenpair, phase-normalized so the largest
/// entry is real and positive. A matrix with no positive eigenvalue yields
/// the zero vector.
pub fn extract_rank_one(w: &LiftedMatrix) -> Vec<Complex64> {
    let n = w.dim();
    if n == 0 {
        return Vec::new();
    }
    let (values, vectors) = linalg::hermitian_eigen(&w.w);
    let lambda = values[0];
    if !(lambda > 0.0) {
        return vec![Complex64::new(0.0, 0.0); n];
    }
    let mut x: Vec<Complex64> = vectors.column(0).iter().map(|z| z * lambda.sqrt()).collect();
    linalg::normalize_phase(&mut x);
    x
}
