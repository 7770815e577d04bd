use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::DEFAULT_ALPHA;
use crate::channel::{sigma_z2_for_snr, ChannelModel, Csi};
use crate::codesign::SolveParams;
use crate::error::{Error, Result};
use crate::function_space::FunctionKind;

/// Transmission schemes the harness can simulate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Remac,
    ChannelcompRepeat,
    DigitalAircomp,
    BitSlicing,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Remac => "remac",
            Scheme::ChannelcompRepeat => "channelcomp_repeat",
            Scheme::DigitalAircomp => "digital_aircomp",
            Scheme::BitSlicing => "bit_slicing",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    pub l: Vec<usize>,
    /// Sharpness of the soft maximum used by digital AirComp.
    #[serde(default)]
    pub alpha: Option<f64>,
    /// Prebuilt design artifacts, matched to slot counts by their `L`.
    #[serde(default)]
    pub artifacts: Vec<PathBuf>,
}

impl SchemeConfig {
    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(DEFAULT_ALPHA)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelGrid {
    #[serde(default)]
    pub snr_db: Vec<f64>,
    #[serde(default)]
    pub sigma_h2: Vec<f64>,
    #[serde(default)]
    pub phi: f64,
    /// Noise variance of a fading sweep. Falls back to the first `snr_db`.
    #[serde(default)]
    pub sigma_z2: Option<f64>,
    /// Overrides the default CSI assumption: perfect without fading, none with it.
    #[serde(default)]
    pub csi: Option<Csi>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridKind {
    Snr,
    Fading,
}

/// One point of a sweep: the value written to the `grid` column and the
/// channel it stands for.
#[derive(Clone, Debug, PartialEq)]
pub struct GridPoint {
    pub value: f64,
    pub model: ChannelModel,
}

impl ChannelGrid {
    fn model(&self, sigma_z2: f64, sigma_h2: f64) -> ChannelModel {
        let faded = sigma_h2 > 0.0 || self.phi > 0.0;
        let mut m = if faded {
            ChannelModel::fading(sigma_z2, sigma_h2, self.phi)
        } else {
            ChannelModel::awgn(sigma_z2)
        };
        if let Some(csi) = self.csi {
            m.csi = csi;
        }
        m
    }

    pub fn points(&self, kind: GridKind) -> Result<Vec<GridPoint>> {
        let points: Vec<GridPoint> = match kind {
            GridKind::Snr => {
                let h2 = self.sigma_h2.first().copied().unwrap_or(0.0);
                self.snr_db
                    .iter()
                    .map(|&snr| GridPoint {
                        value: snr,
                        model: self.model(sigma_z2_for_snr(snr), h2),
                    })
                    .collect()
            }
            GridKind::Fading => {
                let noise = self
                    .sigma_z2
                    .or_else(|| self.snr_db.first().map(|&s| sigma_z2_for_snr(s)))
                    .ok_or_else(|| {
                        Error::Config("a fading sweep needs sigma_z2 or one snr_db value".into())
                    })?;
                self.sigma_h2
                    .iter()
                    .map(|&h2| GridPoint {
                        value: h2,
                        model: self.model(noise, h2),
                    })
                    .collect()
            }
        };
        if points.is_empty() {
            let axis = match kind {
                GridKind::Snr => "snr_db",
                GridKind::Fading => "sigma_h2",
            };
            return Err(Error::Config(format!("the {axis} grid is empty")));
        }
        for p in &points {
            p.model.validate()?;
        }
        Ok(points)
    }

    /// The axis a single-point simulation runs on.
    pub fn single_point_kind(&self) -> Result<GridKind> {
        let kind = if !self.snr_db.is_empty() && self.sigma_h2.len() <= 1 {
            GridKind::Snr
        } else {
            GridKind::Fading
        };
        let len = match kind {
            GridKind::Snr => self.snr_db.len(),
            GridKind::Fading => self.sigma_h2.len(),
        };
        if len != 1 {
            return Err(Error::Config(format!(
                "a single-point simulation needs exactly one grid value, got {len}"
            )));
        }
        Ok(kind)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapConfig {
    pub k_values: Vec<usize>,
    #[serde(default = "default_gap_l")]
    pub l: usize,
    /// Iteration index `n` of the bound.
    #[serde(default = "default_gap_n")]
    pub n: usize,
}

fn default_gap_l() -> usize {
    2
}

fn default_gap_n() -> usize {
    20
}

fn default_trials() -> usize {
    1000
}

fn default_design_sigma() -> f64 {
    0.01
}

fn default_true() -> bool {
    true
}

/// Solver defaults of the harness: thresholds out of reach are scaled back
/// instead of aborting a sweep.
pub fn default_solver() -> SolveParams {
    SolveParams {
        backoff: Some(0.9),
        ..SolveParams::default()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub function_kind: FunctionKind,
    pub k: usize,
    pub q: usize,
    #[serde(default)]
    pub values: Option<Vec<f64>>,
    #[serde(default)]
    pub schemes: Vec<SchemeConfig>,
    #[serde(default)]
    pub channel: ChannelGrid,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Noise variance the separation thresholds are built for.
    #[serde(default = "default_design_sigma")]
    pub design_sigma_z2: f64,
    #[serde(default = "default_true")]
    pub shared_modulation: bool,
    #[serde(default = "default_solver")]
    pub solver: SolveParams,
    #[serde(default)]
    pub gap: Option<GapConfig>,
    /// Directory for content-addressed design artifacts.
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    /// Keep every trial in the result.
    #[serde(default)]
    pub dump_trials: bool,
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Checks shared by every experiment.
    pub fn validate(&self) -> Result<()> {
        if self.k < 1 || self.q < 2 {
            return Err(Error::Config("K must be ≥ 1 and Q ≥ 2".into()));
        }
        if self.trials < 1 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if !(self.design_sigma_z2.is_finite() && self.design_sigma_z2 >= 0.0) {
            return Err(Error::Config("design_sigma_z2 must be finite and ≥ 0".into()));
        }
        self.solver.validate()?;
        Ok(())
    }

    pub fn validate_sweep(&self) -> Result<()> {
        self.validate()?;
        if self.schemes.is_empty() {
            return Err(Error::Config("no schemes configured".into()));
        }
        for s in &self.schemes {
            if s.l.is_empty() || s.l.contains(&0) {
                return Err(Error::Config(format!(
                    "scheme {} needs a nonempty list of slot counts ≥ 1",
                    s.scheme.name()
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_config() {
        let cfg = ExperimentConfig::from_json(
            r#"{"function_kind":"sum","k":2,"q":2,
                "schemes":[{"scheme":"remac","l":[1,2]}],
                "channel":{"snr_db":[10,20]}}"#,
        )
        .unwrap();
        assert_eq!(cfg.trials, 1000);
        assert_eq!(cfg.solver.backoff, Some(0.9));
        cfg.validate_sweep().unwrap();
        let pts = cfg.channel.points(GridKind::Snr).unwrap();
        assert_eq!(pts.len(), 2);
        assert!((pts[1].model.sigma_z2 - 0.01).abs() < 1e-15);
        assert_eq!(pts[0].model.csi, Csi::Perfect);
        assert!(cfg.channel.points(GridKind::Fading).is_err());
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        let bad = r#"{"function_kind":"sum","k":2,"q":2,"trails":5}"#;
        assert!(matches!(ExperimentConfig::from_json(bad), Err(Error::Config(_))));
        let cfg = ExperimentConfig::from_json(r#"{"function_kind":"sum","k":2,"q":2,"trials":0}"#)
            .unwrap();
        assert!(cfg.validate().is_err());
        assert!(cfg.validate_sweep().is_err());
    }

    #[test]
    fn fading_grid_uses_snr_for_noise() {
        let grid = ChannelGrid {
            snr_db: vec![10.0],
            sigma_h2: vec![0.0, 0.5],
            phi: 0.5,
            ..ChannelGrid::default()
        };
        let pts = grid.points(GridKind::Fading).unwrap();
        assert_eq!(pts[1].value, 0.5);
        assert!((pts[1].model.sigma_z2 - 0.1).abs() < 1e-15);
        assert_eq!(pts[1].model.csi, Csi::None);
        assert!(grid.single_point_kind().is_err());
    }
}
