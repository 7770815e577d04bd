//! Joint digital constellation and repetition-coding design for computing
//! functions over a shared multiple-access channel, with a Monte-Carlo
//! simulator and baseline schemes.
//!
//! The pipeline is:
//! [`function_space`] tabulates the target function and derives pairwise
//! separation constraints, [`codesign`] turns them into a modulation vector
//! and a binary coding matrix, [`channel`] and [`decoder`] simulate and decode
//! transmissions, and [`harness`] runs the NMSE sweeps.

pub mod artifact;
pub mod baselines;
pub mod channel;
pub mod codesign;
pub mod decoder;
pub mod error;
pub mod function_space;
pub mod harness;
pub mod linalg;
pub mod oracle;
pub mod reference;

pub use artifact::DesignArtifact;
pub use channel::{ChannelModel, Csi};
pub use codesign::{
    alternate_design, BinaryMatrix, Design, FracMatrix, LiftedMatrix, SolveParams,
};
pub use decoder::{build_codebook, decode, Codebook};
pub use error::{Error, Result};
pub use function_space::{
    build_constraints, build_function_table, ConstraintSet, FunctionKind, FunctionTable,
};
pub use num_complex::Complex64;
