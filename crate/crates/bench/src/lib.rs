//! Shared fixtures for the benchmarks.

use std::f64::consts::TAU;

use nalgebra::DMatrix;

use ionspin::coupling::{detuning_schedule, response_tensor};
use ionspin::crystal::solve_trap;
use ionspin::{CouplingMatrix, DetuningSchedule, ModeSpectrum, RabiMatrix, ResponseTensor, TrapConfig};

pub struct Fixture {
    pub trap: TrapConfig,
    pub modes: ModeSpectrum,
    pub sched: DetuningSchedule,
    pub f: ResponseTensor,
}

/// Yb-171 chain at 5 MHz with the default anisotropy rule.
pub fn fixture(n: usize, f_s: f64) -> Fixture {
    let trap = TrapConfig::with_default_anisotropy(n, TAU * 5e6).expect("trap");
    let (_, modes) = solve_trap(&trap).expect("modes");
    let sched = detuning_schedule(&modes, f_s).expect("schedule");
    let f = response_tensor(&modes, &sched).expect("response");
    Fixture { trap, modes, sched, f }
}

/// Deterministic dense Ω with entries of order 2π·10 kHz.
pub fn dense_omega(n: usize) -> RabiMatrix {
    let m = DMatrix::from_fn(n, n, |i, j| TAU * 1e4 * ((i * n + j) as f64 * 0.618).sin());
    RabiMatrix::new(m).expect("finite")
}

/// Deterministic symmetric couplings in [-1, 1].
pub fn dense_coupling(n: usize) -> CouplingMatrix {
    let m = DMatrix::from_fn(n, n, |i, j| ((i + j) as f64 * 1.3 + (i * j) as f64 * 0.7).cos());
    CouplingMatrix::from_matrix(m).expect("square")
}
