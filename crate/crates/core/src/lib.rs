//! Design of spectral Raman addressing patterns that realize arbitrary
//! pairwise Ising couplings on a linear chain of trapped ions.
//!
//! The pipeline runs trap → modes → detuning schedule → response tensor →
//! inverse solve → verification, with error budgeting and a small exact
//! spin-dynamics validator alongside:
//!
//! - [`crystal`]: axial equilibrium, transverse normal modes, Lamb–Dicke matrix.
//! - [`coupling`]: detuning schedule, response tensor, forward coupling map.
//! - [`graphs`]: target coupling graphs (chains, square and Kagome lattices).
//! - [`inverse`]: minimum-intensity Rabi matrices for a target graph.
//! - [`budget`] and [`scaling`]: phonon, spontaneous-emission and trap-noise
//!   errors; coupling scaling studies.
//! - [`dynamics`]: Ising evolution, Trotterization and ground states.

pub mod budget;
pub mod coupling;
pub mod crystal;
pub mod dynamics;
pub mod error;
pub mod graphs;
pub mod inverse;
pub mod io;
pub mod scaling;
pub mod seed;
pub mod units;

pub use crystal::{
    equilibrium_positions, linearity_check, transverse_modes, AxialPotential, IonCrystal,
    ModeSpectrum, TrapConfig,
};
pub use coupling::{
    detuning_schedule, forward_coupling, response_tensor, single_tone_coupling, validity_check,
    CouplingMatrix, DetuningSchedule, RabiMatrix, ResponseTensor, ValidityReport,
};
pub use error::{Error, Result};
pub use graphs::TargetGraph;
pub use inverse::{solve_rabi, verify_roundtrip, SolveConfig, SolveMode, SolveResult};
pub use budget::{phonon_error, spontaneous_rate, trap_sensitivity, ErrorBudget, SensitivityReport};
pub use dynamics::{evolve_exact, ground_state, ising_energy, trotter_evolve, Axis, InteractionTerm, SpinState};
pub use scaling::{scaling_study, Family, ScalingConfig, ScalingRow, ScalingStudy};
