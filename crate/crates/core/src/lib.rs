//! Quantum state tomography with fuzzy measurements.
//!
//! The crate simulates and analyzes pure-state tomography experiments in
//! which the measurements themselves are noisy. Ideal protocols (tensor
//! Pauli, mutually unbiased bases) are described by instrumental rows Λ_j
//! forming a decomposition of unity; noise enters as Kraus channels and can
//! be absorbed into the rows, turning noisy measurements of a clean state
//! into clean measurements of fuzzy operators. On top sit multinomial count
//! simulation, maximum-likelihood reconstruction and the information-matrix
//! precision theory for fidelity losses.
//!
//! Everything numerical is generic over the floating scalar through
//! [`scalar::Scalar`]; the crate root exports `f64` aliases for the common
//! types.

pub mod error;
pub mod fuzzy;
pub mod infotheory;
pub mod linalg;
pub mod mle;
pub mod noise;
pub mod protocols;
pub mod quantum;
pub mod sampling;
pub mod scalar;

pub use error::{Error, Result};

/// `f64` alias for [`quantum::StateVector`].
pub type StateVector = quantum::StateVector<f64>;
/// `f64` alias for [`quantum::DensityMatrix`].
pub type DensityMatrix = quantum::DensityMatrix<f64>;
/// `f64` alias for [`quantum::KrausChannel`].
pub type KrausChannel = quantum::KrausChannel<f64>;
/// `f64` alias for [`protocols::MeasurementProtocol`].
pub type MeasurementProtocol = protocols::MeasurementProtocol<f64>;
/// `f64` alias for [`noise::ReadoutErrorRates`].
pub type ReadoutErrorRates = noise::ReadoutErrorRates<f64>;
/// `f64` alias for [`noise::DephasingStrength`].
pub type DephasingStrength = noise::DephasingStrength<f64>;
/// `f64` alias for [`fuzzy::FuzzyTransform`].
pub type FuzzyTransform = fuzzy::FuzzyTransform<f64>;
/// `f64` alias for [`mle::ReconstructionResult`].
pub type ReconstructionResult = mle::ReconstructionResult<f64>;
/// `f64` alias for [`infotheory::InfoMatrix`].
pub type InfoMatrix = infotheory::InfoMatrix<f64>;
/// `f64` alias for [`infotheory::PrecisionProfile`].
pub type PrecisionProfile = infotheory::PrecisionProfile<f64>;
