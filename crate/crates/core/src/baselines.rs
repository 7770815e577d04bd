//! Comparison schemes: single-slot constellation repeated over slots,
//! analog-style digital AirComp over PAM, and bit-slicing for sums.
//!
//! Every scheme spends unit energy per slot, the same per-slot budget a
//! designed constellation uses.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{superpose, transmit, ChannelModel};
use crate::codesign::Design;
use crate::decoder::{decode, Codebook};
use crate::error::{Error, Result};
use crate::function_space::{FunctionKind, FunctionTable};

pub const DEFAULT_ALPHA: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineScheme {
    ChannelcompRepeat,
    DigitalAircomp,
    BitSlicing,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub scheme: BaselineScheme,
    pub l: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub bits_per_slice: Option<usize>,
}

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}

/// Transmit the single-slot design `l` times and average the per-slot
/// decodes made with the single-slot codebook.
pub fn channelcomp_repeat_estimate<R: Rng + ?Sized>(
    design_l1: &Design,
    codebook_l1: &Codebook,
    tuple: usize,
    l: usize,
    model: &ChannelModel,
    rng: &mut R,
) -> Result<f64> {
    if design_l1.l != 1 {
        return Err(Error::Config("repetition baseline needs a single-slot design".into()));
    }
    if l == 0 {
        return Err(Error::Domain("L must be at least 1".into()));
    }
    let mut total = 0.0;
    for _ in 0..l {
        let y = transmit(design_l1, tuple, model, rng);
        total += decode(codebook_l1, &y)?;
    }
    Ok(total / l as f64)
}

/// Pre- and post-processing maps of digital AirComp.
#[derive(Clone, Copy, Debug)]
struct NomographicMaps {
    kind: FunctionKind,
    alpha: f64,
    top: f64,
}

impl NomographicMaps {
    fn new(table: &FunctionTable, alpha: f64) -> Result<Self> {
        match table.kind {
            FunctionKind::Sum | FunctionKind::Product => {}
            FunctionKind::Max => {
                if !(alpha > 0.0) {
                    return Err(Error::Config("alpha must be positive".into()));
                }
            }
            FunctionKind::Custom => {
                return Err(Error::Config("digital AirComp supports sum, product and max".into()))
            }
        }
        if table.kind == FunctionKind::Product && table.values[0] <= 0.0 {
            return Err(Error::Config("product AirComp needs positive input values".into()));
        }
        Ok(Self {
            kind: table.kind,
            alpha,
            top: *table.values.last().expect("Q ≥ 2"),
        })
    }

    fn pre(&self, x: f64) -> f64 {
        match self.kind {
            FunctionKind::Product => x.ln(),
            // Shifting by the largest input keeps exp(α·x) bounded.
            FunctionKind::Max => (self.alpha * (x - self.top)).exp(),
            _ => x,
        }
    }

    fn post(&self, s: f64, range: (f64, f64)) -> f64 {
        let v = match self.kind {
            FunctionKind::Product => s.exp(),
            FunctionKind::Max if s > 0.0 => self.top + s.ln() / self.alpha,
            FunctionKind::Max => range.0,
            _ => s,
        };
        v.clamp(range.0, range.1)
    }
}

/// PAM amplitude scale giving unit energy to `K` nodes over `levels`.
fn pam_scale(k: usize, levels: impl Iterator<Item = f64>) -> f64 {
    let energy: f64 = levels.map(|v| v * v).sum::<f64>() * k as f64;
    if energy > 0.0 {
        energy.sqrt().recip()
    } else {
        1.0
    }
}

/// Digital AirComp receiver: PAM-coded pre-processed inputs, the slot
/// average rounded to the nearest achievable aggregate, then post-processed.
#[derive(Clone, Debug)]
pub struct DigitalAircomp {
    maps: NomographicMaps,
    scale: f64,
    /// Sorted distinct values of `Σ_k pre(x_k)` over all tuples.
    aggregates: Vec<f64>,
}

impl DigitalAircomp {
    pub fn new(table: &FunctionTable, alpha: f64) -> Result<Self> {
        let maps = NomographicMaps::new(table, alpha)?;
        let scale = pam_scale(table.k, table.values.iter().map(|&v| maps.pre(v)));
        let mut aggregates: Vec<f64> = (0..table.num_tuples())
            .map(|g| table.inputs(g).into_iter().map(|x| maps.pre(x)).sum())
            .collect();
        aggregates.sort_by(f64::total_cmp);
        aggregates.dedup_by(|b, a| (*b - *a).abs() <= 1e-12 * a.abs().max(1.0));
        Ok(Self {
            maps,
            scale,
            aggregates,
        })
    }

    fn nearest(&self, s: f64) -> f64 {
        let i = self.aggregates.partition_point(|&v| v < s);
        let above = self.aggregates.get(i).copied();
        let below = i.checked_sub(1).map(|j| self.aggregates[j]);
        match (below, above) {
            (Some(b), Some(a)) if s - b <= a - s => b,
            (_, Some(a)) => a,
            (Some(b), None) => b,
            (None, None) => s,
        }
    }

    pub fn estimate<R: Rng + ?Sized>(
        &self,
        table: &FunctionTable,
        tuple: usize,
        l: usize,
        model: &ChannelModel,
        rng: &mut R,
    ) -> Result<f64> {
        if l == 0 {
            return Err(Error::Domain("L must be at least 1".into()));
        }
        let levels: Vec<f64> = table
            .inputs(tuple)
            .into_iter()
            .map(|x| self.scale * self.maps.pre(x))
            .collect();
        let y = superpose(table.k, l, model, rng, |node, _| Some(Complex64::new(levels[node], 0.0)));
        let mean = y.iter().map(|z| z.re).sum::<f64>() / (l as f64 * self.scale);
        Ok(self.maps.post(self.nearest(mean), table.output_range()))
    }
}

/// One-off digital AirComp estimate; sweeps should build [`DigitalAircomp`] once.
pub fn aircomp_estimate<R: Rng + ?Sized>(
    table: &FunctionTable,
    tuple: usize,
    l: usize,
    model: &ChannelModel,
    alpha: f64,
    rng: &mut R,
) -> Result<f64> {
    DigitalAircomp::new(table, alpha)?.estimate(table, tuple, l, model, rng)
}

/// Bits carried per slot when `log₂ Q` bits are split over `l` slots.
pub fn bits_per_slice(q: usize, l: usize) -> Result<usize> {
    if !q.is_power_of_two() {
        return Err(Error::Config(format!("bit-slicing needs a power-of-two Q, got {q}")));
    }
    let bits = q.trailing_zeros() as usize;
    if l == 0 || bits % l != 0 {
        return Err(Error::Config(format!("{bits} bits cannot be split into {l} equal slices")));
    }
    Ok(bits / l)
}

pub fn bitslice_estimate<R: Rng + ?Sized>(
    table: &FunctionTable,
    tuple: usize,
    l: usize,
    model: &ChannelModel,
    rng: &mut R,
) -> Result<f64> {
    if table.kind != FunctionKind::Sum {
        return Err(Error::Config("bit-slicing supports the sum only".into()));
    }
    let b = bits_per_slice(table.q, l)?;
    let offset = table.values[0];
    if table.values.iter().enumerate().any(|(i, &v)| v != offset + i as f64) {
        return Err(Error::Config("bit-slicing needs consecutive integer input values".into()));
    }
    let codes = table.digits(tuple);
    let mask = (1usize << b) - 1;
    let segment = |code: usize, slot: usize| (code >> (b * (l - 1 - slot))) & mask;
    let a = pam_scale(table.k, (0..=mask).map(|s| s as f64));
    let y = superpose(table.k, l, model, rng, |node, slot| {
        Some(Complex64::new(a * segment(codes[node], slot) as f64, 0.0))
    });
    let top = (table.k * mask) as f64;
    let mut total = 0.0;
    for (slot, z) in y.iter().enumerate() {
        let r = (z.re / a).round().clamp(0.0, top);
        total += r * (1u64 << (b * (l - 1 - slot))) as f64;
    }
    Ok(total + table.k as f64 * offset)
}
