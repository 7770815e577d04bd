//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use remac::codesign::{
    branch_and_bound_with, mccormick_bounds, solve_lp_relaxation, BnbParams,
};
use remac::harness::{
    default_solver, run_gap_experiment, run_nmse, ExperimentConfig, ExperimentResult, GridKind,
    ResultRow, Scheme,
};
use remac::oracle::{exhaustive_p2, overlap_check};
use remac::reference::{qpsk_repetition, qpsk_single_slot};
use remac::{
    alternate_design, build_codebook, build_constraints, build_function_table, decode, FracMatrix,
    FunctionKind,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within(elapsed: Duration, limit_secs: u64) -> bool {
    elapsed <= Duration::from_secs(limit_secs)
}

fn db(v: f64) -> f64 {
    10.0 * v.log10()
}

fn row(result: &ExperimentResult, scheme: Scheme, l: usize, grid: f64) -> &ResultRow {
    result
        .rows
        .iter()
        .find(|r| r.scheme == scheme && r.l == l && r.grid == grid)
        .expect("configured series")
}

fn pooled(a: &ResultRow, b: &ResultRow) -> f64 {
    (a.stderr.powi(2) + b.stderr.powi(2)).sqrt()
}

fn witness_design() -> Outcome {
    let start = Instant::now();
    let table = build_function_table(FunctionKind::Product, 4, 4, None, None).unwrap();
    let coded = overlap_check(&qpsk_repetition(), &table).unwrap();
    let single = overlap_check(&qpsk_single_slot(), &table).unwrap();
    let a = table.index_of(&[0, 0, 1, 1]);
    let b = table.index_of(&[0, 1, 2, 3]);
    let pair = single
        .collisions
        .iter()
        .find(|c| (c.tuple_i, c.tuple_j) == (a, b) || (c.tuple_i, c.tuple_j) == (b, a));
    let at_origin = pair.is_some_and(|c| c.v.iter().all(|z| z.norm() < 1e-9));
    let elapsed = start.elapsed();
    outcome(
        coded.exact && !single.exact && at_origin && within(elapsed, 1),
        format!(
            "repetition exact={}, single-slot collisions={}, witness pair at 0: {at_origin}, {elapsed:.2?}",
            coded.exact, single.collision_count
        ),
    )
}

fn noiseless_exactness() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for kind in [FunctionKind::Sum, FunctionKind::Product] {
        let start = Instant::now();
        let table = build_function_table(kind, 4, 4, None, None).unwrap();
        let cs = build_constraints(&table, 0.01, true).unwrap();
        let design = match alternate_design(&cs, 2, &default_solver()) {
            Ok(d) => d,
            Err(e) => {
                pass = false;
                parts.push(format!("{}: {e}", kind.name()));
                continue;
            }
        };
        let codebook = build_codebook(&design, &table).unwrap();
        let wrong = (0..table.num_tuples())
            .filter(|&g| {
                let y = design.noiseless(&table.digits(g));
                decode(&codebook, &y).unwrap() != table.output(g)
            })
            .count();
        let elapsed = start.elapsed();
        pass &= codebook.merged_cells() == 0 && wrong == 0 && within(elapsed, 120);
        parts.push(format!(
            "{}: merged={} misdecoded={wrong} in {elapsed:.2?}",
            kind.name(),
            codebook.merged_cells()
        ));
    }
    outcome(pass, parts.join("; "))
}

fn relaxation_soundness() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut lp_bad, mut bnb_bad) = (0, 0);
    for _ in 0..50 {
        let l = rng.gen_range(1..=3);
        let n = rng.gen_range(2..=12 / l);
        let (cs, w) = common::random_instance(&mut rng, n, l);
        let exact = exhaustive_p2(&cs, &w, l).unwrap();
        let lp = solve_lp_relaxation(&cs, &w, l).unwrap();
        if lp.objective > exact.objective as f64 + 1e-7 {
            lp_bad += 1;
        }
        let bnb = branch_and_bound_with(&cs, &w, l, &BnbParams::default()).unwrap();
        if bnb.objective != exact.objective {
            bnb_bad += 1;
        }
    }
    let elapsed = start.elapsed();
    outcome(
        lp_bad == 0 && bnb_bad == 0 && within(elapsed, 60),
        format!("50 instances: LP above optimum {lp_bad}, B&B off optimum {bnb_bad}, {elapsed:.2?}"),
    )
}

fn relaxation_gap() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2025);
    let (mut checked, mut bad, mut worst) = (0usize, 0usize, 0.0f64);
    for _ in 0..100 {
        let l = rng.gen_range(1..=3);
        let n = rng.gen_range(2..=8);
        let (cs, w) = common::random_instance(&mut rng, n, l);
        let c = FracMatrix {
            rows: n,
            cols: l,
            data: (0..n * l).map(|_| rng.gen_range(0.0..=1.0)).collect(),
        };
        for entry in &mccormick_bounds(&cs, &w).entries {
            let (lo, hi) = entry.bounds();
            let width: f64 = lo.iter().zip(&hi).map(|(a, b)| (b - a).powi(2)).sum();
            let gap = (entry.exact(&c) - entry.relaxed(&c)).abs();
            let limit = l as f64 * width;
            checked += 1;
            if gap > limit {
                bad += 1;
            }
            if limit > 0.0 {
                worst = worst.max(gap / limit);
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        bad == 0 && within(elapsed, 10),
        format!("{checked} entries, {bad} above the bound, largest gap/bound {worst:.3}, {elapsed:.2?}"),
    )
}

fn non_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] >= w[0])
}

fn optimality_gap() -> Outcome {
    let start = Instant::now();
    let cfg = ExperimentConfig::from_json(
        r#"{"function_kind":"product","k":3,"q":8,"seed":1,"gap":{"k_values":[3,4,5],"l":2,"n":20}}"#,
    )
    .unwrap();
    let result = match run_gap_experiment(&cfg) {
        Ok(r) => r,
        Err(e) => return outcome(false, e.to_string()),
    };
    let emp: Vec<f64> = result.rows.iter().map(|r| r.empirical).collect();
    let ana: Vec<f64> = result.rows.iter().map(|r| r.analytical).collect();
    let bounded = emp.iter().zip(&ana).all(|(e, a)| e <= a);
    let elapsed = start.elapsed();
    outcome(
        bounded && non_decreasing(&emp) && non_decreasing(&ana) && within(elapsed, 600),
        format!(
            "empirical {emp:?}, bound {:?}, bounded={bounded}, monotone empirical={} bound={}, {elapsed:.2?}",
            ana.iter().map(|a| (a * 1e3).round() / 1e3).collect::<Vec<_>>(),
            non_decreasing(&emp),
            non_decreasing(&ana)
        ),
    )
}

/// Inversions of a curve over an ascending SNR grid, and whether all of
/// them stay within one pooled standard error.
fn inversions(curve: &[&ResultRow]) -> (usize, bool) {
    let mut count = 0;
    let mut small = true;
    for w in curve.windows(2) {
        if w[1].nmse > w[0].nmse {
            count += 1;
            small &= w[1].nmse - w[0].nmse <= pooled(w[0], w[1]);
        }
    }
    (count, small)
}

fn snr_trend() -> Outcome {
    let start = Instant::now();
    let grid = [15.0, 20.0, 25.0, 30.0, 35.0, 40.0];
    let mut pass = true;
    let mut parts = Vec::new();
    for kind in ["sum", "product"] {
        let cfg = ExperimentConfig::from_json(&format!(
            r#"{{"function_kind":"{kind}","k":4,"q":8,"trials":1000,"seed":6,
                "schemes":[{{"scheme":"remac","l":[1,2]}}],
                "channel":{{"snr_db":[15,20,25,30,35,40]}}}}"#
        ))
        .unwrap();
        let result = match run_nmse(&cfg, GridKind::Snr) {
            Ok(r) => r,
            Err(e) => {
                pass = false;
                parts.push(format!("{kind}: {e}"));
                continue;
            }
        };
        for l in [1, 2] {
            let curve: Vec<&ResultRow> = grid.iter().map(|&g| row(&result, Scheme::Remac, l, g)).collect();
            let (count, small) = inversions(&curve);
            pass &= count <= 1 && small;
            parts.push(format!("{kind} L={l}: {count} inversions (within stderr: {small})"));
        }
        let worse: Vec<f64> = grid
            .iter()
            .copied()
            .filter(|&g| row(&result, Scheme::Remac, 2, g).nmse > 1.05 * row(&result, Scheme::Remac, 1, g).nmse)
            .collect();
        pass &= worse.is_empty();
        parts.push(format!("{kind}: L=2 above 1.05 x L=1 at {worse:?} dB"));
    }
    let elapsed = start.elapsed();
    pass &= within(elapsed, 900);
    parts.push(format!("{elapsed:.2?}"));
    outcome(pass, parts.join("; "))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn fading_gain() -> Outcome {
    let start = Instant::now();
    let (mut remac, mut repeat, mut aircomp) = (Vec::new(), Vec::new(), Vec::new());
    for seed in 1..=10u64 {
        let cfg = ExperimentConfig::from_json(&format!(
            r#"{{"function_kind":"product","k":4,"q":4,"trials":2000,"seed":{seed},
                "schemes":[{{"scheme":"remac","l":[2]}},
                           {{"scheme":"channelcomp_repeat","l":[1]}},
                           {{"scheme":"digital_aircomp","l":[2]}}],
                "channel":{{"sigma_h2":[0.05],"phi":{},"sigma_z2":0.1}}}}"#,
            std::f64::consts::FRAC_PI_6
        ))
        .unwrap();
        let result = match run_nmse(&cfg, GridKind::Fading) {
            Ok(r) => r,
            Err(e) => return outcome(false, format!("seed {seed}: {e}")),
        };
        remac.push(row(&result, Scheme::Remac, 2, 0.05).nmse);
        repeat.push(row(&result, Scheme::ChannelcompRepeat, 1, 0.05).nmse);
        aircomp.push(row(&result, Scheme::DigitalAircomp, 2, 0.05).nmse);
    }
    let (r, c, a) = (median(remac), median(repeat), median(aircomp));
    let gain = db(c) - db(r);
    let elapsed = start.elapsed();
    outcome(
        gain >= 2.0 && a > r && a > c && within(elapsed, 1200),
        format!(
            "median NMSE remac L=2 {:.2} dB, channelcomp L=1 {:.2} dB (gain {gain:.2} dB), digital aircomp L=2 {:.2} dB, {elapsed:.2?}",
            db(r),
            db(c),
            db(a)
        ),
    )
}

fn bit_slicing_crossover() -> Outcome {
    let start = Instant::now();
    let cfg = ExperimentConfig::from_json(&format!(
        r#"{{"function_kind":"sum","k":4,"q":16,"trials":2000,"seed":8,
            "schemes":[{{"scheme":"remac","l":[2]}},{{"scheme":"bit_slicing","l":[2]}}],
            "solver":{{"backoff":0.9,"bnb_node_limit":50000}},
            "channel":{{"snr_db":[-10,10],"sigma_h2":[1],"phi":{}}}}}"#,
        std::f64::consts::FRAC_PI_4
    ))
    .unwrap();
    let result = match run_nmse(&cfg, GridKind::Snr) {
        Ok(r) => r,
        Err(e) => return outcome(false, e.to_string()),
    };
    let (rh, bh) = (row(&result, Scheme::Remac, 2, 10.0), row(&result, Scheme::BitSlicing, 2, 10.0));
    let (rl, bl) = (row(&result, Scheme::Remac, 2, -10.0), row(&result, Scheme::BitSlicing, 2, -10.0));
    let high = bh.nmse <= rh.nmse + pooled(rh, bh);
    let low = rl.nmse <= bl.nmse + pooled(rl, bl);
    let elapsed = start.elapsed();
    outcome(
        high && low && within(elapsed, 1200),
        format!(
            "+10 dB: bit-slicing {:.4} vs remac {:.4}; -10 dB: remac {:.4} vs bit-slicing {:.4}; {elapsed:.2?}",
            bh.nmse, rh.nmse, rl.nmse, bl.nmse
        ),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let configs = [
        (
            "sweep-snr",
            r#"{"function_kind":"sum","k":3,"q":4,"trials":400,"seed":9,
                "schemes":[{"scheme":"remac","l":[1,2]},{"scheme":"digital_aircomp","l":[1]},
                           {"scheme":"bit_slicing","l":[2]},{"scheme":"channelcomp_repeat","l":[2]}],
                "channel":{"snr_db":[0,10,20]}}"#,
        ),
        (
            "sweep-fading",
            r#"{"function_kind":"sum","k":3,"q":4,"trials":400,"seed":9,
                "schemes":[{"scheme":"remac","l":[2]}],
                "channel":{"sigma_h2":[0,0.1,0.5],"phi":0.4,"sigma_z2":0.05}}"#,
        ),
        (
            "gap",
            r#"{"function_kind":"product","k":2,"q":4,"seed":9,"gap":{"k_values":[2,3],"l":2,"n":5}}"#,
        ),
    ];
    let mut parts = Vec::new();
    let mut pass = true;
    for (i, (command, json)) in configs.iter().enumerate() {
        let cfg = dir.path().join(format!("config{i}.json"));
        std::fs::write(&cfg, json).unwrap();
        let mut outputs = Vec::new();
        for run in 0..2 {
            let out = dir.path().join(format!("out{i}_{run}.csv"));
            let status = Command::new(env!("CARGO_BIN_EXE_remac"))
                .args([*command, "--config"])
                .arg(&cfg)
                .arg("--out")
                .arg(&out)
                .status()
                .unwrap();
            outputs.push(status.success().then(|| std::fs::read(&out).unwrap()));
        }
        let same = outputs[0].is_some() && outputs[0] == outputs[1];
        pass &= same;
        parts.push(format!("{command}: identical={same}"));
    }
    outcome(pass, parts.join(", "))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("QPSK repetition witness", witness_design),
        ("noiseless exactness", noiseless_exactness),
        ("relaxation soundness", relaxation_soundness),
        ("per-entry relaxation gap", relaxation_gap),
        ("optimality gap bound", optimality_gap),
        ("SNR trend", snr_trend),
        ("fading gain", fading_gain),
        ("bit-slicing crossover", bit_slicing_crossover),
        ("determinism", determinism),
    ];
    let only: Option<usize> = std::env::var("REMAC_CRITERION").ok().and_then(|v| v.parse().ok());
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let n = i + 1;
        if only.is_some_and(|o| o != n) {
            continue;
        }
        let out = check();
        println!(
            "criterion {n} ({name}): {}: {}",
            if out.pass { "PASS" } else { "FAIL" },
            out.detail
        );
        failed += usize::from(!out.pass);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
