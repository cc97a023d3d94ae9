use thiserror::Error;

/// Errors shared across the crate. Constructors validate eagerly so that
/// numeric code can assume well-formed inputs.
#[derive(Debug, Error)]
pub enum Error {
    #[error("missing required parameter `{0}`")]
    MissingKey(String),
    #[error("lattice spacing must be positive, got {0}")]
    NonPositiveSpacing(f64),
    #[error("mass must be positive, got {0}")]
    NonPositiveMass(f64),
    #[error("sites per dimension must be a power of two, got {0}")]
    NonPowerOfTwoSites(usize),
    #[error("field cutoff k must be a power of two >= 2, got {0}")]
    BadFieldCutoff(usize),
    #[error("occupation cutoff N={n} too small for {what}")]
    CutoffTooSmall { n: usize, what: String },
    #[error("dense representation needs {0} qubits, cap is {1}")]
    TooManyQubits(usize, usize),
    #[error("qubit index {0} out of range for {1}-qubit operator")]
    QubitOutOfRange(usize, usize),
    #[error("pauli term has duplicate or unsorted qubit indices")]
    UnsortedTerm,
    #[error("cannot parse pauli sum: {0}")]
    PauliParse(String),
    #[error("circuit acts on {0} qubits, exhaustive simulation cap is {1}")]
    SimulationTooWide(usize, usize),
    #[error("invalid control-group partition: {0}")]
    InvalidPartition(String),
    #[error("AND uncompute on ancilla {0} that does not hold the product")]
    DirtyAncilla(usize),
    #[error("operator is not hermitian (max asymmetry {0:.3e})")]
    NotHermitian(f64),
    #[error("product-formula step size must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error("select blocks are not involutions (defect {0:.3e})")]
    SelectNotInvolution(f64),
    #[error("dense payload required but the encoding was built count-only")]
    MissingDense,
    #[error("T-count for the signature family at power 4 relies on an unproven bound; pass allow_conjecture")]
    ConjectureFlagRequired,
    #[error("energy bound must be positive, got {0}")]
    NonPositiveEnergy(f64),
    #[error("tail probability must lie in (0, 1), got {0}")]
    BadTailProbability(f64),
    #[error("{what} out of range: {value}")]
    OutOfRange { what: String, value: f64 },
    #[error("commutator bound is zero; step size unconstrained")]
    ZeroAlphaComm,
    #[error("no code distance up to {0} meets the failure budget")]
    InfeasibleDistance(usize),
    #[error("energy {0} below the two-particle threshold {1}")]
    BelowThreshold(f64, f64),
    #[error("momentum vanishes; phase shift undefined")]
    ZeroMomentum,
    #[error("{0}")]
    Fit(String),
}

pub type Result<T> = std::result::Result<T, Error>;
