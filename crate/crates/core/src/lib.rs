//! Quantum state transfer through one-dimensional arrays of spin-½ particles
//! with long-range magnetic dipole coupling.
//!
//! The crate builds chain and ring Hamiltonians in the single-flip block
//! ([`lattice`]), diagonalizes them and evolves localized or encoded states
//! ([`spectral`]), extracts transfer fidelity and timing ([`transfer`]),
//! models the asymptotic splitting through end-localized bound states
//! ([`boundstate`]), optimizes spin placement and end-state encoding
//! ([`optimize`]) and estimates robustness to placement errors
//! ([`disorder`]).

pub mod boundstate;
pub mod cli;
pub mod disorder;
pub mod error;
pub mod lattice;
pub mod optimize;
pub mod output;
pub mod peak;
pub mod spectral;
pub mod transfer;

pub use error::{Error, Result};
pub use lattice::{Coupling, CouplingModel, ExcitationHamiltonian, Geometry, Topology};
pub use spectral::{SiteState, SpectralDecomposition};
pub use transfer::{PeakSearchConfig, TransferSummary};
