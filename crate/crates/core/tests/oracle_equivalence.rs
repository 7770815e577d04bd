mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use remac::codesign::{quadratic_lhs, COLLISION_TOL};
use remac::oracle::overlap_check;
use remac::reference::{qpsk_repetition, qpsk_single_slot};
use remac::{build_codebook, build_constraints, build_function_table, BinaryMatrix, Design, FunctionKind};

fn product_table() -> remac::FunctionTable {
    build_function_table(FunctionKind::Product, 4, 4, None, None).unwrap()
}

#[test]
fn qpsk_witness_pair() {
    let table = product_table();
    let single = overlap_check(&qpsk_single_slot(), &table).unwrap();
    assert!(!single.exact);
    let a = table.index_of(&[0, 0, 1, 1]);
    let b = table.index_of(&[0, 1, 2, 3]);
    assert!(single.contains(a, b));

    let coded = overlap_check(&qpsk_repetition(), &table).unwrap();
    assert!(coded.exact);
    assert_eq!(coded.collision_count, 0);
    assert_eq!(build_codebook(&qpsk_repetition(), &table).unwrap().merged_cells(), 0);
}

/// A constraint with zero left-hand side is exactly a collision of two
/// tuples with different outputs, so both views must agree on exactness.
#[test]
fn constraint_view_agrees_with_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let table = build_function_table(FunctionKind::Sum, 3, 3, None, None).unwrap();
    let cs = build_constraints(&table, 0.01, true).unwrap();
    for _ in 0..30 {
        let l = rng.gen_range(1..=2);
        // Small integer lattices make exact collisions likely.
        let x = (0..3)
            .map(|_| remac::Complex64::new(f64::from(rng.gen_range(-2..=2)), f64::from(rng.gen_range(-1..=1))))
            .collect();
        let rows: Vec<Vec<u8>> = (0..3).map(|_| (0..l).map(|_| rng.gen_range(0..=1)).collect()).collect();
        let design = Design::new(3, 3, true, x, BinaryMatrix::from_rows(&rows).unwrap()).unwrap();
        let colliding = cs
            .iter()
            .filter(|e| e.delta_f > 0.0)
            .any(|e| quadratic_lhs(e, &design.x, &design.c) <= COLLISION_TOL * COLLISION_TOL);
        let report = overlap_check(&design, &table).unwrap();
        assert_eq!(report.exact, !colliding, "x = {:?}, C = {rows:?}", design.x);
    }
}

#[test]
fn unshared_design_matches_shared_replication() {
    let table = build_function_table(FunctionKind::Product, 2, 3, None, None).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let x = common::random_vector(&mut rng, 3);
    let c = BinaryMatrix::from_rows(&[vec![1, 0], vec![0, 1], vec![1, 1]]).unwrap();
    let shared = Design::new(2, 3, true, x.clone(), c.clone()).unwrap();
    let full = Design::new(2, 3, false, shared.full_x(), shared.full_c()).unwrap();
    for g in 0..table.num_tuples() {
        let digits = table.digits(g);
        let d = remac::decoder::distance2(&shared.noiseless(&digits), &full.noiseless(&digits));
        assert!(d < 1e-24);
    }
    assert_eq!(
        overlap_check(&shared, &table).unwrap(),
        overlap_check(&full, &table).unwrap()
    );
}
