//! Content-addressed design store. Keys hash everything that determines the
//! solver output, so a hit is interchangeable with a fresh solve.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::artifact::DesignArtifact;
use crate::codesign::{alternate_design, Design, SolveParams};
use crate::decoder::{build_codebook, Codebook};
use crate::error::{Error, Result};
use crate::function_space::{build_constraints, FunctionKind, FunctionTable};

/// A design ready for simulation.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub design: Design,
    pub codebook: Codebook,
}

#[derive(Serialize)]
struct KeyMaterial<'a> {
    function_kind: FunctionKind,
    k: usize,
    q: usize,
    values: &'a [f64],
    outputs: Option<&'a [f64]>,
    l: usize,
    sigma_z2: f64,
    shared_modulation: bool,
    solver: &'a SolveParams,
}

pub fn design_key(
    table: &FunctionTable,
    l: usize,
    sigma_z2: f64,
    shared_modulation: bool,
    solver: &SolveParams,
) -> String {
    let material = KeyMaterial {
        function_kind: table.kind,
        k: table.k,
        q: table.q,
        values: &table.values,
        outputs: (table.kind == FunctionKind::Custom).then_some(table.outputs.as_slice()),
        l,
        sigma_z2,
        shared_modulation,
        solver,
    };
    let bytes = serde_json::to_vec(&material).expect("key material serializes");
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Default)]
pub struct DesignCache {
    dir: Option<PathBuf>,
    memory: Mutex<HashMap<String, Arc<Prepared>>>,
}

impl DesignCache {
    pub fn new(dir: Option<PathBuf>) -> Self {
        Self {
            dir,
            memory: Mutex::new(HashMap::new()),
        }
    }

    /// Load or solve the design for `(table, l, sigma_z2)`.
    pub fn get(
        &self,
        table: &FunctionTable,
        l: usize,
        sigma_z2: f64,
        shared_modulation: bool,
        solver: &SolveParams,
    ) -> Result<Arc<Prepared>> {
        let key = design_key(table, l, sigma_z2, shared_modulation, solver);
        if let Some(hit) = self.memory.lock().expect("cache lock").get(&key) {
            return Ok(Arc::clone(hit));
        }
        let path = self.dir.as_ref().map(|d| d.join(format!("{key}.json")));
        let prepared = match path.as_ref().filter(|p| p.exists()) {
            Some(p) => {
                let art = DesignArtifact::load(p)?;
                let design = art.design()?;
                let codebook = match art.codebook() {
                    Some(cb) => cb,
                    None => build_codebook(&design, table)?,
                };
                Prepared { design, codebook }
            }
            None => {
                let cs = build_constraints(table, sigma_z2, shared_modulation)?;
                let design = alternate_design(&cs, l, solver).map_err(|e| match e {
                    Error::DesignInfeasible(msg) => Error::DesignInfeasible(format!(
                        "{} K={} Q={} L={l}: {msg}",
                        table.kind.name(),
                        table.k,
                        table.q
                    )),
                    other => other,
                })?;
                let codebook = build_codebook(&design, table)?;
                if let (Some(dir), Some(p)) = (&self.dir, &path) {
                    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
                    DesignArtifact::new(&design, table, solver.seed)
                        .with_codebook(&codebook)
                        .save(p)?;
                }
                Prepared { design, codebook }
            }
        };
        let prepared = Arc::new(prepared);
        self.memory
            .lock()
            .expect("cache lock")
            .insert(key, Arc::clone(&prepared));
        Ok(prepared)
    }
}
