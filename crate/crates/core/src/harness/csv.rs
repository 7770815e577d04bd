//! CSV output: `.`-decimal shortest round-trip floats, LF line endings.

use std::fmt::Write as _;
use std::path::Path;

use super::gap::GapResult;
use super::nmse::ExperimentResult;
use crate::error::{Error, Result};

pub const NMSE_HEADER: &str = "grid,scheme,L,nmse,stderr,trials";
pub const GAP_HEADER: &str = "grid,L,n,empirical,analytical,r2,output_ones,optimal_ones,relaxed_ones,iterations";
pub const TRIALS_HEADER: &str = "grid,scheme,L,trial,tuple,f,f_hat";

pub fn nmse_csv(result: &ExperimentResult) -> String {
    let mut s = format!("{NMSE_HEADER}\n");
    for r in &result.rows {
        writeln!(
            s,
            "{},{},{},{},{},{}",
            r.grid,
            r.scheme.name(),
            r.l,
            r.nmse,
            r.stderr,
            r.trials
        )
        .expect("writing to a String");
    }
    s
}

pub fn trials_csv(result: &ExperimentResult) -> String {
    let mut s = format!("{TRIALS_HEADER}\n");
    for t in &result.trials {
        writeln!(
            s,
            "{},{},{},{},{},{},{}",
            t.grid,
            t.scheme.name(),
            t.l,
            t.trial,
            t.tuple,
            t.f,
            t.f_hat
        )
        .expect("writing to a String");
    }
    s
}

pub fn gap_csv(result: &GapResult) -> String {
    let mut s = format!("{GAP_HEADER}\n");
    for r in &result.rows {
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            r.k,
            r.l,
            r.n,
            r.empirical,
            r.analytical,
            r.r2,
            r.output_ones,
            r.optimal_ones,
            r.relaxed_ones,
            r.iterations
        )
        .expect("writing to a String");
    }
    s
}

fn write(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn emit_csv(result: &ExperimentResult, path: impl AsRef<Path>) -> Result<()> {
    write(path.as_ref(), &nmse_csv(result))
}

pub fn emit_gap_csv(result: &GapResult, path: impl AsRef<Path>) -> Result<()> {
    write(path.as_ref(), &gap_csv(result))
}

pub fn emit_trials_csv(result: &ExperimentResult, path: impl AsRef<Path>) -> Result<()> {
    write(path.as_ref(), &trials_csv(result))
}
