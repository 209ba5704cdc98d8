//! Excitation-conserving state transfer along a dipolar XX spin chain, with a
//! parameterized unitary on a four-site extended receiver used to reshape the
//! transferred two-qubit density matrix.

pub mod basis;
pub mod chain;
pub mod error;
pub mod er_unitary;
pub mod evolution;
pub mod io;
pub mod operations;
pub mod optimizer;
pub mod transfer;

pub use basis::{BasisCatalog, Configuration};
pub use chain::{ChainSpec, CouplingMatrix, HamiltonianBlocks};
pub use error::{Error, Result};
pub use er_unitary::{ErUnitary, Kind, Ordering, PhiVector};
pub use evolution::{BlockOperator, SpectralData};
pub use num_complex::Complex64 as C64;
pub use transfer::{CoefficientEvaluator, KrausSet, TransferCoefficients, TransferModel, TwoQubitState};
pub use operations::{OperationSpec, ResidualReport};
pub use optimizer::{SearchConfig, SearchResult};
