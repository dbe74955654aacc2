use thiserror::Error;

/// Errors produced by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("Purcell factor must be positive and finite (got {0})")]
    InvalidPurcell(f64),
    #[error("detuning must be finite (got {0})")]
    InvalidDetuning(f64),
    #[error("wavepacket must contain at least one bin")]
    EmptyWavepacket,
    #[error("wavepacket bin detunings must be strictly increasing")]
    UnsortedWavepacket,
    #[error("wavepacket norm² is {norm2}, expected {expected} within {tol}")]
    WavepacketNorm { norm2: f64, expected: f64, tol: f64 },
    #[error("duplicate subsystem id `{0}`")]
    DuplicateSubsystem(String),
    #[error("unknown subsystem id `{0}`")]
    UnknownSubsystem(String),
    #[error("amplitude vector has length {got}, expected {expected}")]
    AmplitudeLength { got: usize, expected: usize },
    #[error("state norm² is {0}, outside (0, 1 + 1e-12]")]
    InvalidNorm(f64),
    #[error("matrix is not unitary (max deviation {0:.3e})")]
    NotUnitary(f64),
    #[error("operator acts on {got} subsystems, at most {max} supported")]
    OperatorArity { got: usize, max: usize },
    #[error("operator matrix has {got} entries, expected {expected}")]
    OperatorShape { got: usize, expected: usize },
    #[error("cannot measure a zero-norm state")]
    ZeroNormState,
    #[error("subsystem `{0}` is not collapsed; cannot remove it")]
    NotCollapsed(String),
    #[error("subsystem sets do not match")]
    SubsystemMismatch,
    #[error("system of {got} qubits exceeds the {max}-qubit density-matrix limit")]
    DimensionOverflow { got: usize, max: usize },
    #[error("noise parameters must satisfy |gamma|² + |delta|² = 1 (got {0})")]
    InvalidNoise(f64),
    #[error("initial fidelity must lie in (0, 1] (got {0})")]
    InvalidFidelity(f64),
    #[error("photon is not confined to path `{0}`")]
    PhotonNotOnPath(String),
    #[error("time bin `{0}` carries amplitude but has no routing schedule")]
    UnscheduledBin(String),
    #[error("ensemble branch weight {0} is outside (0, 1]")]
    InvalidWeight(f64),
    #[error("ensemble weights sum to {0}, exceeding 1 + 1e-12")]
    WeightOverflow(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
