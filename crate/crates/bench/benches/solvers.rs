use criterion::{black_box, criterion_group, criterion_main, BatchSize, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use remac::channel::transmit;
use remac::codesign::{
    branch_and_bound_with, solve_lp_relaxation, solve_modulation_feasibility, BnbParams,
};
use remac::{
    alternate_design, build_codebook, build_constraints, build_function_table, decode,
    BinaryMatrix, ChannelModel, FunctionKind, SolveParams,
};

fn constraint_generation(c: &mut Criterion) {
    let table = build_function_table(FunctionKind::Product, 4, 8, None, None).unwrap();
    c.bench_function("constraints product K4 Q8", |b| {
        b.iter(|| build_constraints(black_box(&table), 0.01, true).unwrap())
    });
}

fn design_steps(c: &mut Criterion) {
    let table = build_function_table(FunctionKind::Sum, 4, 4, None, None).unwrap();
    let cs = build_constraints(&table, 0.01, true).unwrap();
    let params = SolveParams {
        backoff: Some(0.9),
        ..SolveParams::default()
    };
    let ones = BinaryMatrix::ones(4, 2).to_frac();
    let scaled = cs.scaled(0.5);
    c.bench_function("W-step sum K4 Q4 L2", |b| {
        b.iter(|| solve_modulation_feasibility(&scaled, &ones, &params).unwrap())
    });
    let w = solve_modulation_feasibility(&scaled, &ones, &params).unwrap();
    c.bench_function("C-step LP sum K4 Q4 L2", |b| {
        b.iter(|| solve_lp_relaxation(&scaled, &w, 2).unwrap())
    });
    let design = alternate_design(&cs, 2, &params).unwrap();
    let w1 = remac::LiftedMatrix::from_vector(&design.x);
    let effective = cs.scaled(design.meta.design_sigma_z2 / cs.sigma_z2);
    c.bench_function("branch-and-bound sum K4 Q4 L2", |b| {
        b.iter(|| branch_and_bound_with(&effective, &w1, 2, &BnbParams::default()))
    });
    let mut group = c.benchmark_group("alternation");
    group.sample_size(10);
    group.bench_function("sum K4 Q4 L2", |b| b.iter(|| alternate_design(&cs, 2, &params).unwrap()));
    group.finish();
}

fn decoding(c: &mut Criterion) {
    let table = build_function_table(FunctionKind::Product, 4, 4, None, None).unwrap();
    let cs = build_constraints(&table, 0.01, true).unwrap();
    let params = SolveParams {
        backoff: Some(0.9),
        ..SolveParams::default()
    };
    let design = alternate_design(&cs, 2, &params).unwrap();
    let codebook = build_codebook(&design, &table).unwrap();
    let model = ChannelModel::fading(0.01, 0.05, 0.5);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    c.bench_function("transmit and decode product K4 Q4 L2", |b| {
        b.iter_batched(
            || rng.gen_range(0..table.num_tuples()),
            |tuple| {
                let mut r = ChaCha8Rng::seed_from_u64(tuple as u64);
                let y = transmit(&design, tuple, &model, &mut r);
                decode(&codebook, &y).unwrap()
            },
            BatchSize::SmallInput,
        )
    });
}

criterion_group!(benches, constraint_generation, design_steps, decoding);
criterion_main!(benches);
