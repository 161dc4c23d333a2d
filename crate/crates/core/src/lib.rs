//! Multimode spectrum of a single Josephson junction embedded in a grounded
//! half-wavelength resonator.
//!
//! The pipeline runs circuit parameters through the auxiliary-mode
//! description, the linearized normal modes, one-dimensional single-mode
//! solves and finally the truncated multimode Hamiltonian. A direct
//! flux-grid solver of the auxiliary-mode Hamiltonian serves as reference.

pub mod basis;
pub mod circuit;
pub mod eigen;
pub mod error;
pub mod hamiltonian;
pub mod labeling;
pub mod model;
pub mod normal_modes;
pub mod observables;
pub mod oracle;
pub mod single_mode;
pub mod sweep;
pub mod tridiag;
pub mod units;

pub use error::{Result, UnimonError};
