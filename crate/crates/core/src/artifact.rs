//! JSON design artifact with bit-exact round trips.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::codesign::{BinaryMatrix, Design, DesignMeta};
use crate::decoder::{CodePoint, Codebook};
use crate::error::{Error, Result};
use crate::function_space::{build_function_table, FunctionKind, FunctionTable};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodebookArtifact {
    pub points: Vec<CodePointArtifact>,
    pub tuple_map: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodePointArtifact {
    pub v: Vec<[f64; 2]>,
    pub output_value: f64,
    pub merged_from: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignArtifact {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "Q")]
    pub q: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub values: Vec<f64>,
    pub function_kind: FunctionKind,
    #[serde(default)]
    pub shared_modulation: bool,
    pub x: Vec<[f64; 2]>,
    #[serde(rename = "C")]
    pub c: BinaryMatrix,
    pub solver_trace: DesignMeta,
    pub seed: u64,
    /// Table outputs, present only for custom functions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outputs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub codebook: Option<CodebookArtifact>,
}

fn pair(z: &Complex64) -> [f64; 2] {
    [z.re, z.im]
}

fn complex(p: &[f64; 2]) -> Complex64 {
    Complex64::new(p[0], p[1])
}

impl DesignArtifact {
    pub fn new(design: &Design, table: &FunctionTable, seed: u64) -> Self {
        Self {
            k: design.k,
            q: design.q,
            l: design.l,
            values: table.values.clone(),
            function_kind: table.kind,
            shared_modulation: design.shared_modulation,
            x: design.x.iter().map(pair).collect(),
            c: design.c.clone(),
            solver_trace: design.meta.clone(),
            seed,
            outputs: (table.kind == FunctionKind::Custom).then(|| table.outputs.clone()),
            codebook: None,
        }
    }

    pub fn with_codebook(mut self, codebook: &Codebook) -> Self {
        self.codebook = Some(CodebookArtifact {
            points: codebook
                .points
                .iter()
                .map(|p| CodePointArtifact {
                    v: p.v.iter().map(pair).collect(),
                    output_value: p.output_value,
                    merged_from: p.merged_from.clone(),
                })
                .collect(),
            tuple_map: codebook.tuple_map.clone(),
        });
        self
    }

    pub fn design(&self) -> Result<Design> {
        let mut d = Design::new(
            self.k,
            self.q,
            self.shared_modulation,
            self.x.iter().map(complex).collect(),
            self.c.clone(),
        )?;
        if d.l != self.l {
            return Err(Error::Domain("L does not match the coding matrix".into()));
        }
        d.meta = self.solver_trace.clone();
        Ok(d)
    }

    pub fn table(&self) -> Result<FunctionTable> {
        match (&self.outputs, self.function_kind) {
            (Some(outputs), kind) => {
                FunctionTable::from_outputs(kind, self.k, self.q, self.values.clone(), outputs.clone())
            }
            (None, FunctionKind::Custom) => {
                Err(Error::Config("custom artifact is missing its outputs".into()))
            }
            (None, kind) => build_function_table(kind, self.k, self.q, Some(self.values.clone()), None),
        }
    }

    pub fn codebook(&self) -> Option<Codebook> {
        self.codebook.as_ref().map(|cb| Codebook {
            points: cb
                .points
                .iter()
                .map(|p| CodePoint {
                    v: p.v.iter().map(complex).collect(),
                    output_value: p.output_value,
                    merged_from: p.merged_from.clone(),
                })
                .collect(),
            tuple_map: cb.tuple_map.clone(),
            l: self.l,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decoder::build_codebook;
    use crate::reference;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut d = reference::qpsk_repetition().normalized();
        d.x[1] = Complex64::new(0.1 + 0.2, -1.0 / 3.0);
        d.meta.design_sigma_z2 = 0.01 / 7.0;
        let t = build_function_table(FunctionKind::Product, 4, 4, None, None).unwrap();
        let cb = build_codebook(&d, &t).unwrap();
        let art = DesignArtifact::new(&d, &t, 17).with_codebook(&cb);
        let json = art.to_json().unwrap();
        let back = DesignArtifact::from_json(&json).unwrap();
        assert_eq!(back, art);
        assert_eq!(back.to_json().unwrap(), json);
        let d2 = back.design().unwrap();
        for (a, b) in d.x.iter().zip(&d2.x) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
        assert_eq!(back.codebook().unwrap(), cb);
        assert_eq!(back.table().unwrap(), t);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("design.json");
        let d = reference::qpsk_single_slot();
        let t = build_function_table(FunctionKind::Product, 4, 4, None, None).unwrap();
        let art = DesignArtifact::new(&d, &t, 3);
        art.save(&path).unwrap();
        assert_eq!(DesignArtifact::load(&path).unwrap(), art);
        assert!(matches!(DesignArtifact::load(dir.path().join("missing.json")), Err(Error::Io { .. })));
    }
}
