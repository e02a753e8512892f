use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid Bravais lattice: {0}")]
    InvalidLattice(String),

    #[error("invalid hopping set: {0}")]
    InvalidHopping(String),

    #[error("invalid strip cut (p = {p}, q = {q}): {reason}")]
    InvalidCut { p: i64, q: i64, reason: String },

    #[error("invalid flux: {0}")]
    InvalidFlux(String),

    #[error("lattice size L = {len} too small for hopping range {max_shift} (need L >= {needed})")]
    SizeTooSmall {
        len: usize,
        max_shift: i64,
        needed: usize,
    },

    #[error("hopping table depends on the site index (B != 0); Bloch winding needs translation invariance")]
    NotTranslationInvariant,

    #[error("base energy ({re}, {im}) lies on the spectral curve (distance {distance:.3e})")]
    BaseEnergyOnCurve { re: f64, im: f64, distance: f64 },

    #[error("shifted Hamiltonian is singular: base energy within {distance:.3e} of an eigenvalue")]
    SingularShift { distance: f64 },

    #[error("determinant vanishes at inserted flux {phase:.6}: base energy is in the spectrum")]
    ZeroDeterminant { phase: f64 },

    #[error("winding not quantized: value {value} (residual {residual:.3e})")]
    NotQuantized { value: f64, residual: f64 },

    #[error(
        "eigensolver failed to converge (matrix {rows}x{rows}, fingerprint {fingerprint:016x})"
    )]
    NoConvergence { rows: usize, fingerprint: u64 },

    #[error("eigenpair residual {residual:.3e} exceeds tolerance {tolerance:.3e} (fingerprint {fingerprint:016x})")]
    Residual {
        residual: f64,
        tolerance: f64,
        fingerprint: u64,
    },

    #[error("non-finite matrix entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("vanishing left hopping amplitude at site {site}: transfer matrix has a pole")]
    Pole { site: i64 },

    #[error("spectra have different sizes ({left} vs {right})")]
    SizeMismatch { left: usize, right: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty geometry mask")]
    EmptyMask,
}
