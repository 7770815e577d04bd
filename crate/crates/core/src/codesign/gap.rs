use super::FracMatrix;
use crate::error::{Error, Result};

/// `R₂(C, C*) = Σ_ℓ (‖c_ℓ − c*_ℓ‖₂ + 2‖c*_ℓ‖₂)²`.
pub fn r2(c: &FracMatrix, c_opt: &FracMatrix) -> f64 {
    (0..c.cols)
        .map(|slot| {
            let (mut diff, mut opt) = (0.0, 0.0);
            for r in 0..c.rows {
                let (a, b) = (c.get(r, slot), c_opt.get(r, slot));
                diff += (a - b) * (a - b);
                opt += b * b;
            }
            let t = diff.sqrt() + 2.0 * opt.sqrt();
            t * t
        })
        .sum()
}

/// Analytical optimality-gap bound `2·R₂(Cⁿ, C*)/(n − 1)`.
///
/// `Cⁿ` is entry `n − 1` of the trace; when the alternation stopped earlier
/// the last recorded iterate stands in for it.
pub fn gap_bound(c_trace: &[FracMatrix], c_opt: &FracMatrix, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::Domain("gap bound needs n ≥ 2".into()));
    }
    let cn = c_trace
        .get(n.min(c_trace.len()).saturating_sub(1))
        .ok_or_else(|| Error::Domain("empty coding-matrix trace".into()))?;
    if cn.rows != c_opt.rows || cn.cols != c_opt.cols {
        return Err(Error::Domain("trace and optimum have different shapes".into()));
    }
    Ok(2.0 * r2(cn, c_opt) / (n - 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(v: &[f64]) -> FracMatrix {
        FracMatrix {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    #[test]
    fn matching_iterate() {
        let c = col(&[1.0, 0.0]);
        assert_eq!(r2(&c, &c), 4.0);
        assert_eq!(gap_bound(&[c.clone()], &c, 3).unwrap(), 4.0);
    }

    #[test]
    fn zero_optimum() {
        let c = FracMatrix {
            rows: 2,
            cols: 2,
            data: vec![1.0, 0.5, 0.0, 1.0],
        };
        let zero = FracMatrix::zeros(2, 2);
        let expected = 2.0 * (1.0 + 0.25 + 1.0);
        assert!((gap_bound(&[c], &zero, 2).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn rejects_small_n() {
        let c = col(&[1.0]);
        assert!(gap_bound(&[c.clone()], &c, 1).is_err());
    }
}
