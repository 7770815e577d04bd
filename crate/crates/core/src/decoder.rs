//! Receiver codebook with merged cells and nearest-sequence decoding.

use std::collections::HashMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::codesign::{Design, COLLISION_TOL};
use crate::error::{Error, Result};
use crate::function_space::{FunctionTable, DEFAULT_ENUMERATION_BUDGET};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodePoint {
    pub v: Vec<Complex64>,
    pub output_value: f64,
    /// Distinct table outputs whose tuples land on this point, ascending.
    pub merged_from: Vec<f64>,
}

impl CodePoint {
    pub fn is_merged(&self) -> bool {
        self.merged_from.len() > 1
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Codebook {
    pub points: Vec<CodePoint>,
    pub tuple_map: Vec<u32>,
    pub l: usize,
}

/// Squared Euclidean distance over `ℂᴸ`.
pub fn distance2(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum()
}

/// Groups sequences that agree within [`COLLISION_TOL`]. Returns the cluster
/// of every sequence and, per cluster, its first member; clusters are
/// numbered in order of first appearance.
pub(crate) fn cluster_sequences(seqs: &[Vec<Complex64>]) -> (Vec<usize>, Vec<usize>) {
    // Coarse buckets narrow the search; membership uses the exact distance.
    let cell = 1e-7;
    let key = |v: &[Complex64]| -> Vec<i64> {
        v.iter()
            .flat_map(|z| [(z.re / cell).round() as i64, (z.im / cell).round() as i64])
            .collect()
    };
    let mut buckets: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    let mut cluster_of = vec![0; seqs.len()];
    let mut reps: Vec<usize> = Vec::new();
    let tol2 = COLLISION_TOL * COLLISION_TOL;
    for (i, v) in seqs.iter().enumerate() {
        let bucket = buckets.entry(key(v)).or_default();
        match bucket.iter().find(|&&c| distance2(&seqs[reps[c]], v) <= tol2) {
            Some(&c) => cluster_of[i] = c,
            None => {
                let c = reps.len();
                reps.push(i);
                bucket.push(c);
                cluster_of[i] = c;
            }
        }
    }
    (cluster_of, reps)
}

/// Noiseless sequences of every tuple, indexed by tuple.
pub(crate) fn all_sequences(design: &Design, table: &FunctionTable) -> Result<Vec<Vec<Complex64>>> {
    if design.k != table.k || design.q != table.q {
        return Err(Error::Domain("design and table disagree on K or Q".into()));
    }
    Ok((0..table.num_tuples())
        .map(|g| design.noiseless(&table.digits(g)))
        .collect())
}

pub fn build_codebook(design: &Design, table: &FunctionTable) -> Result<Codebook> {
    if table.num_tuples() > DEFAULT_ENUMERATION_BUDGET {
        return Err(Error::Capacity(format!(
            "codebook over {} tuples exceeds the budget of {DEFAULT_ENUMERATION_BUDGET}",
            table.num_tuples()
        )));
    }
    let seqs = all_sequences(design, table)?;
    let (cluster_of, reps) = cluster_sequences(&seqs);
    let mut outputs: Vec<Vec<f64>> = vec![Vec::new(); reps.len()];
    for (g, &c) in cluster_of.iter().enumerate() {
        outputs[c].push(table.output(g));
    }
    let points = reps
        .iter()
        .zip(outputs)
        .map(|(&rep, mut outs)| {
            outs.sort_by(f64::total_cmp);
            outs.dedup();
            let output_value = outs.iter().sum::<f64>() / outs.len() as f64;
            CodePoint {
                v: seqs[rep].clone(),
                output_value,
                merged_from: outs,
            }
        })
        .collect();
    Ok(Codebook {
        points,
        tuple_map: cluster_of.into_iter().map(|c| c as u32).collect(),
        l: design.l,
    })
}

impl Codebook {
    pub fn merged_cells(&self) -> usize {
        self.points.iter().filter(|p| p.is_merged()).count()
    }

    /// Index of the nearest point; ties go to the lower index.
    pub fn nearest(&self, y: &[Complex64]) -> Result<usize> {
        if self.points.is_empty() {
            return Err(Error::State("empty codebook".into()));
        }
        if y.len() != self.l {
            return Err(Error::Domain(format!("expected {} observations", self.l)));
        }
        let mut best = (f64::INFINITY, 0);
        for (i, p) in self.points.iter().enumerate() {
            let d = distance2(&p.v, y);
            if d < best.0 {
                best = (d, i);
            }
        }
        Ok(best.1)
    }

    /// Smallest pairwise distance between distinct points.
    pub fn min_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (i, a) in self.points.iter().enumerate() {
            for b in &self.points[i + 1..] {
                best = best.min(distance2(&a.v, &b.v));
            }
        }
        best.sqrt()
    }
}

/// Output value of the codebook point nearest to `y`.
pub fn decode(codebook: &Codebook, y: &[Complex64]) -> Result<f64> {
    Ok(codebook.points[codebook.nearest(y)?].output_value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn two_points() -> Codebook {
        Codebook {
            points: vec![
                CodePoint {
                    v: vec![c(2.0, 0.0), c(-2.0, 0.0)],
                    output_value: 4.0,
                    merged_from: vec![4.0],
                },
                CodePoint {
                    v: vec![c(1.0, 1.0), c(-1.0, -1.0)],
                    output_value: 24.0,
                    merged_from: vec![24.0],
                },
            ],
            tuple_map: vec![0, 1],
            l: 2,
        }
    }

    #[test]
    fn nearest_neighbour() {
        let cb = two_points();
        assert_eq!(decode(&cb, &[c(2.1, 0.0), c(-1.9, 0.05)]).unwrap(), 4.0);
        assert_eq!(decode(&cb, &[c(1.0, 1.0), c(-1.0, -1.0)]).unwrap(), 24.0);
    }

    #[test]
    fn ties_go_to_lower_index() {
        let cb = two_points();
        let mid = [c(1.5, 0.5), c(-1.5, -0.5)];
        assert_eq!(decode(&cb, &mid).unwrap(), 4.0);
    }

    #[test]
    fn empty_codebook_is_an_error() {
        let cb = Codebook {
            points: Vec::new(),
            tuple_map: Vec::new(),
            l: 1,
        };
        assert!(matches!(decode(&cb, &[c(0.0, 0.0)]), Err(Error::State(_))));
    }

    #[test]
    fn clustering_respects_tolerance() {
        let seqs = vec![vec![c(0.0, 0.0)], vec![c(1e-10, 0.0)], vec![c(1e-8, 0.0)]];
        let (cluster, reps) = cluster_sequences(&seqs);
        assert_eq!(cluster, vec![0, 0, 1]);
        assert_eq!(reps, vec![0, 2]);
    }
}
