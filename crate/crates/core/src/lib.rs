//! Numerical laboratory for magnetic control of the non-Hermitian skin effect
//! in two-dimensional single-band lattices.
//!
//! The crate is organized bottom-up:
//!
//! * [`lattice`] describes Bravais lattices with a hopping set, the coprime
//!   strip cut, Landau-gauge Peierls phases and the reduction of the 2D
//!   problem to effective 1D hopping tables.
//! * [`hamiltonian`] assembles dense effective 1D Hamiltonians (generic path,
//!   nonreciprocal Harper-Hofstadter, reciprocal diagonal cut).
//! * [`spectral`] diagonalizes them and evaluates skin-effect diagnostics:
//!   mean eigenvector distribution, IPR, three winding numbers, OBC/PBC
//!   spectral comparison and the bulk-localization criterion.
//! * [`transfer`] holds the gauge-transformed chain, transfer-matrix products,
//!   global-reciprocity determinants and Lyapunov exponents.
//! * [`lattice2d`] runs finite 2D simulations on masked site sets.
//!
//! Units: `h = e = 1`, so one flux quantum per unit of `B * area`.

pub mod error;
pub mod hamiltonian;
pub mod lattice;
pub mod lattice2d;
pub mod linalg;
pub mod spectral;
pub mod transfer;

pub use error::{Error, Result};
pub use faer;
pub use num_complex::Complex64;

pub use hamiltonian::{
    assemble, hofstadter_nonreciprocal, local_ratio, reciprocal_diagonal, BoundaryCondition,
    Builder, DiagonalCutChain, EffectiveHamiltonian, HofstadterParams, LocalRatio,
    ReciprocalDiagonalParams,
};
pub use lattice::{
    bloch_energy, classify_reciprocity, effective_hopping_table, peierls_static_phase,
    project_delta, spectral_area, strip_parameters, BravaisSpec, FluxSpec, HoppingTable,
    HoppingTerm, LatticeModel, Reciprocity, StripCut,
};
pub use lattice2d::{
    build_masked_hamiltonian, distribution_map, edge_weight_fraction, plaquette_fluxes,
    Distribution2D, EdgeWeight, GeometryMask, NearestNeighborHops, Shape,
};
pub use spectral::{
    compare_spectra, diagonalize, ipr, localization_criterion, mean_distribution, winding_bloch,
    winding_flux, winding_realspace, BlochTable, CriterionVerdict, LocalizationRegime, SizeScaling,
    SpectralComparison, SpectralResult, SpectrumVerdict, WindingResult,
};
pub use transfer::{
    det_magnitude, gauge_transform, integral_identity_gap, log_det_magnitude, lyapunov_exponent,
    transfer_product, ChainSite, GaugeTransformedChain, HarperChain, IdentityGap, LyapunovEstimate,
    NearestNeighborChain, TransferProduct,
};
