//! Exact-diagonalization engine for entanglement propagation in short
//! spin-1/2 chains.
//!
//! The crate simulates open transverse-field Ising chains (with optional
//! longitudinal field and next-nearest-neighbor coupling) by dense
//! diagonalization and spectral time evolution, and implements the
//! measurements built on top of it:
//!
//! - reduced density matrices, von Neumann / Rényi-2 entropies, and mutual
//!   information over arbitrary site subsets ([`entanglement`]);
//! - thermalization diagnostics comparing the diagonal and microcanonical
//!   ensembles ([`thermalization`]);
//! - the two-initial-state propagation protocol with an attached probe spin,
//!   extraction of the saturation / splitting / mutual-information onset
//!   times, and entanglement-velocity fits ([`propagation`]).
//!
//! Register convention: site `i` of an `L`-site register is bit `i` of the
//! basis index; bit value 0 encodes spin up (sigma-z eigenvalue +1). All
//! Hamiltonians are real symmetric in this basis and energies are quoted in
//! units of the nearest-neighbor coupling J.

// The "blas" feature of ndarray resolves BLAS symbols through blas-src at
// link time; the import keeps the provider crate in the link graph.
use blas_src as _;

pub mod basis;
pub mod entanglement;
pub mod error;
pub mod propagation;
pub mod series;
pub mod spectral;
pub mod thermalization;

pub use basis::{
    apply_cnot, apply_pauli, build_hamiltonian, neel_state, product_state, DenseOperator,
    ModelParams, PauliAxis, SiteSubset, StateVector, MAX_SITES,
};
pub use entanglement::{
    mutual_information, reduced_density_matrix, renyi2_entropy, von_neumann_entropy, DensityMatrix,
    EntropyBase,
};
pub use error::{Error, Result};
pub use propagation::{
    bulk_evolution_hamiltonian, extract_t_diff, extract_t_mi, extract_t_star, fit_velocity,
    prepare_initial_state, run_protocol, scrambling_length, threshold_variants, ti_dispersion,
    ti_vmax, ti_vmax_numeric, BulkState, Extraction, FitMode, ProtocolConfig, ProtocolRun,
    RunRecord, Thresholds, Variant, VelocityFit,
};
pub use series::{detect_recurrence, RecurrenceReport, TimeGrid, TimeSeries};
pub use spectral::{eigendecompose, expectation, OverlapCoefficients, SpectralDecomposition};
pub use thermalization::{
    diagonal_average, magnetization_operator, microcanonical_average, run_thermalization,
    total_magnetization, EnsembleReport, MicrocanonicalAverage, ThermalizationConfig,
    ThermalizationRun,
};
