//! Simulation and analysis of mechanically and magnetically driven NV
//! spin ensembles in diamond.

pub mod analysis;
pub mod crystal;
pub mod ensemble;
pub mod error;
pub mod hamiltonian;
pub mod linalg;
pub mod pulse;
pub mod quadrature;
pub mod resonator;
pub mod scalar;
pub mod units;

pub use error::{Error, Result};
pub use scalar::Real;

/// Double-precision aliases.
pub type SpinParameters = hamiltonian::SpinParameters<f64>;
pub type FieldConfig = hamiltonian::FieldConfig<f64>;
pub type RingModel = resonator::RingModel<f64>;
pub type StandingWave = resonator::StandingWave<f64>;
pub type NoiseModel = pulse::NoiseModel<f64>;
pub type PulseSequence = pulse::PulseSequence<f64>;
pub type EnsembleConfig = ensemble::EnsembleConfig<f64>;
pub type SignalTrace = ensemble::SignalTrace<f64>;
pub type RamseyModel = analysis::RamseyModel<f64>;
pub type FitResult = analysis::FitResult<f64>;
pub type PowerSpectrum = analysis::PowerSpectrum<f64>;
pub type StiffnessMatrix = crystal::StiffnessMatrix<f64>;
