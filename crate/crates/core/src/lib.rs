//! Space-filling Latin hypercube designs: lattice-based constructions with fast criteria,
//! regularly repeated lattice designs, and local Gaussian-process emulation on them.

pub mod bench;
pub mod design;
pub mod emulator;
pub mod error;
pub mod io;
pub mod lattice;
pub mod optim;
pub mod rlhd;
pub mod rng;
pub mod testfns;

pub use design::{criterion_full, CriterionKind, Design};
pub use error::{Error, Result};
pub use lattice::{lattice_criterion, LatticeSpec};
