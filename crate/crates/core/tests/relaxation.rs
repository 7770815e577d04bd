mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use remac::codesign::{
    branch_and_bound_with, mccormick_bounds, solve_lp_relaxation, BnbParams,
};
use remac::oracle::exhaustive_p2;
use remac::FracMatrix;

#[test]
fn lp_lower_bounds_and_bnb_matches_exhaustive() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..40 {
        let l = rng.gen_range(1..=3);
        let n = rng.gen_range(2..=12 / l);
        let (cs, w) = common::random_instance(&mut rng, n, l);
        let exact = exhaustive_p2(&cs, &w, l).unwrap();
        let lp = solve_lp_relaxation(&cs, &w, l).unwrap();
        assert!(
            lp.objective <= exact.objective as f64 + 1e-7,
            "case {case}: LP {} above optimum {}",
            lp.objective,
            exact.objective
        );
        let bnb = branch_and_bound_with(&cs, &w, l, &BnbParams::default()).unwrap();
        assert_eq!(bnb.objective, exact.objective, "case {case}");
        assert!(bnb.proven_optimal);
    }
}

#[test]
fn secant_gap_is_within_box_width() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..60 {
        let l = rng.gen_range(1..=3);
        let n = rng.gen_range(2..=6);
        let (cs, w) = common::random_instance(&mut rng, n, l);
        let c = FracMatrix {
            rows: n,
            cols: l,
            data: (0..n * l).map(|_| rng.gen_range(0.0..=1.0)).collect(),
        };
        for entry in &mccormick_bounds(&cs, &w).entries {
            let (lo, hi) = entry.bounds();
            let width: f64 = lo.iter().zip(&hi).map(|(a, b)| (b - a).powi(2)).sum();
            let h = entry.exact(&c);
            let h_hat = entry.relaxed(&c);
            assert!(h_hat >= h - 1e-12, "overestimator below the form");
            assert!((h - h_hat).abs() <= l as f64 * width);
        }
    }
}

#[test]
fn working_set_path_stays_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let (n, l) = (5, 2);
    let w = common::random_lifted(&mut rng, n);
    let entries: Vec<(Vec<i32>, f64)> = (0..remac::codesign::WORKING_SET + 500)
        .map(|_| {
            let d: Vec<i32> = loop {
                let d: Vec<i32> = (0..n).map(|_| rng.gen_range(-2..=2)).collect();
                if d.iter().any(|&v| v != 0) {
                    break d;
                }
            };
            let mut full = 0.0;
            for a in 0..n {
                for b in 0..n {
                    full += f64::from(d[a] * d[b]) * w.w[(a, b)].re;
                }
            }
            let df = rng.gen_range(0.0..0.6) * full * l as f64;
            (d, df)
        })
        .collect();
    let cs = remac::ConstraintSet::from_dense(n, &entries, 1.0).unwrap();
    let exact = exhaustive_p2(&cs, &w, l).unwrap();
    let bnb = branch_and_bound_with(&cs, &w, l, &BnbParams::default()).unwrap();
    assert_eq!(bnb.objective, exact.objective);
}
