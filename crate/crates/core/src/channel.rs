//! Multiple-access channel: superposition of node transmissions with
//! optional block fading and additive circular Gaussian noise.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::codesign::Design;
use crate::function_space::tuple_digits;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Csi {
    /// Transmitters invert their channel, so fading cancels exactly.
    #[default]
    Perfect,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FadingDraw {
    #[default]
    PerNodePerSlot,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    pub sigma_z2: f64,
    #[serde(default)]
    pub csi: Csi,
    #[serde(default)]
    pub sigma_h2: f64,
    #[serde(default)]
    pub phi: f64,
    #[serde(default)]
    pub fading_draw: FadingDraw,
}

impl ChannelModel {
    pub fn awgn(sigma_z2: f64) -> Self {
        Self {
            sigma_z2,
            csi: Csi::Perfect,
            sigma_h2: 0.0,
            phi: 0.0,
            fading_draw: FadingDraw::PerNodePerSlot,
        }
    }

    pub fn fading(sigma_z2: f64, sigma_h2: f64, phi: f64) -> Self {
        Self {
            sigma_z2,
            csi: Csi::None,
            sigma_h2,
            phi,
            fading_draw: FadingDraw::PerNodePerSlot,
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        if !(self.sigma_z2 >= 0.0 && self.sigma_h2 >= 0.0) {
            return Err(crate::Error::Domain("noise and fading variances must be ≥ 0".into()));
        }
        if !(0.0..=std::f64::consts::PI).contains(&self.phi) {
            return Err(crate::Error::Domain("phase spread must lie in [0, π]".into()));
        }
        Ok(())
    }
}

/// Noise variance that puts a unit-energy constellation at `snr_db`.
pub fn sigma_z2_for_snr(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

/// `10·log₁₀(‖x‖² / σ²)`, `+∞` without noise.
pub fn snr_db(design: &Design, sigma_z2: f64) -> f64 {
    if sigma_z2 <= 0.0 {
        return f64::INFINITY;
    }
    10.0 * (design.power() / sigma_z2).log10()
}

/// Superimpose per-node contributions over `l` slots.
///
/// `symbol(node, slot)` returns the transmitted symbol or `None` when the
/// node is silent. Noise is drawn first, slot by slot, so the fading draws
/// never shift the noise stream.
pub fn superpose<R, F>(k: usize, l: usize, model: &ChannelModel, rng: &mut R, symbol: F) -> Vec<Complex64>
where
    R: Rng + ?Sized,
    F: Fn(usize, usize) -> Option<Complex64>,
{
    let std = (model.sigma_z2 / 2.0).sqrt();
    let noise: Vec<Complex64> = (0..l)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re * std, im * std)
        })
        .collect();
    let mut y = vec![Complex64::new(0.0, 0.0); l];
    match model.csi {
        Csi::Perfect => {
            for (slot, out) in y.iter_mut().enumerate() {
                for node in 0..k {
                    if let Some(s) = symbol(node, slot) {
                        *out += s;
                    }
                }
            }
        }
        Csi::None => {
            let sd = model.sigma_h2.sqrt();
            for (slot, out) in y.iter_mut().enumerate() {
                for node in 0..k {
                    let g: f64 = rng.sample(StandardNormal);
                    let magnitude = (1.0 + sd * g).max(1e-6);
                    let phase = if model.phi > 0.0 {
                        rng.gen_range(-model.phi..=model.phi)
                    } else {
                        0.0
                    };
                    let h = Complex64::from_polar(magnitude, phase);
                    if let Some(s) = symbol(node, slot) {
                        *out += h * s;
                    }
                }
            }
        }
    }
    for (out, z) in y.iter_mut().zip(noise) {
        *out += z;
    }
    y
}

/// Received sequence for tuple `tuple_index` under `design`.
pub fn transmit<R: Rng + ?Sized>(
    design: &Design,
    tuple_index: usize,
    model: &ChannelModel,
    rng: &mut R,
) -> Vec<Complex64> {
    let digits = tuple_digits(tuple_index, design.k, design.q);
    superpose(design.k, design.l, model, rng, |node, slot| {
        design
            .active(node, digits[node], slot)
            .then(|| design.symbol(node, digits[node]))
    })
}
