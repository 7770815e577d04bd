//! Random small instances for solver cross-checks.

#![allow(dead_code)]

use rand::Rng;
use remac::{Complex64, ConstraintSet, LiftedMatrix};

pub fn random_vector<R: Rng>(rng: &mut R, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect()
}

/// Random PSD matrix of random rank with unit trace.
pub fn random_lifted<R: Rng>(rng: &mut R, n: usize) -> LiftedMatrix {
    let rank = rng.gen_range(1..=n);
    let mut w = LiftedMatrix::from_vector(&random_vector(rng, n)).w;
    for _ in 1..rank {
        w += LiftedMatrix::from_vector(&random_vector(rng, n)).w;
    }
    let trace: f64 = (0..n).map(|i| w[(i, i)].re).sum();
    LiftedMatrix::new(w / Complex64::new(trace, 0.0))
}

/// Random difference vectors with thresholds set to a fraction of what the
/// all-ones coding matrix achieves, so the binary problem stays feasible.
pub fn random_instance<R: Rng>(rng: &mut R, n: usize, l: usize) -> (ConstraintSet, LiftedMatrix) {
    let w = random_lifted(rng, n);
    let count = rng.gen_range(2..=8);
    let mut entries = Vec::with_capacity(count);
    while entries.len() < count {
        let d: Vec<i32> = (0..n).map(|_| rng.gen_range(-1..=1)).collect();
        if d.iter().all(|&v| v == 0) {
            continue;
        }
        let mut full = 0.0;
        for a in 0..n {
            for b in 0..n {
                full += f64::from(d[a] * d[b]) * w.w[(a, b)].re;
            }
        }
        let df = if full > 1e-9 { rng.gen_range(0.05..0.95) * full * l as f64 } else { 0.0 };
        entries.push((d, df));
    }
    let cs = ConstraintSet::from_dense(n, &entries, 1.0).expect("well-formed entries");
    (cs, w)
}
