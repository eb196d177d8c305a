//! Topologically quantized work of the synthetic electric field felt by a
//! dressed three-level atom in a space-time periodic coupling.
//!
//! The crate is `no_std` (it needs `alloc`). Modules, bottom up:
//!
//! * [`field`]: the periodic field `B(t, x)` and its derivatives.
//! * [`spin`]: spin-J generators, `M = B . J`, dressed states.
//! * [`geometry`]: electric field, plaquette phases, quantum metric, forces.
//! * [`topology`]: winding number, flux and lattice Chern numbers, phase scans.
//! * [`dynamics`]: classical trajectories and flux reconstruction from them.
//!
//! Units have `hbar = 1`.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod dynamics;
pub mod error;
pub mod field;
pub mod geometry;
pub mod linalg;
pub mod spin;
pub mod sum;
pub mod topology;

pub use error::{Error, Result};
pub use field::{BVector, FieldDerivatives, FieldParams, SpaceTimeField};
pub use geometry::{ForceModel, ForceSample};
pub use spin::{Band, BandState, HermitianField, SpinRep};
pub use topology::{FluxResult, GridSpec};

/// Reduced Planck constant in the units used throughout.
pub const HBAR: f64 = 1.0;
