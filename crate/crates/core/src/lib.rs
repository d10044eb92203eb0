//! Schmidt decompositions of pure multipartite states.
//!
//! States are dense amplitude arrays with subsystem 1 varying slowest. The
//! crate decides whether a state admits a multipartite Schmidt
//! decomposition and builds it, computes bipartite Schmidt numbers and
//! reduced spectra, searches bipartitions for the largest attainable
//! Schmidt number, composes decomposable states, and constructs and links
//! purifications of density matrices.

pub mod bipartite;
pub mod cli;
pub mod compose;
pub mod error;
pub mod io;
pub mod linalg;
pub mod multipartite;
pub mod par;
pub mod partition;
pub mod purify;
pub mod state;
pub mod tol;

pub use bipartite::{schmidt_decompose_bipartite, schmidt_number, BipartiteDecomposition};
pub use error::{Error, Result};
pub use multipartite::{check_decomposable, DecomposabilityReport, FailureStage, Verdict};
pub use par::Execution;
pub use state::{Bipartition, DensityMatrix, SchmidtDecomposition, StateTensor};
pub use tol::Tolerances;
