//! Error budget of a design: phonon creation, spontaneous emission and
//! sensitivity to drifts of the motional frequencies.

use std::fmt;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::coupling::{forward_coupling, response_tensor, DetuningSchedule, RabiMatrix, GUARD_BAND};
use crate::crystal::{solve_trap, ModeSpectrum, TrapConfig};
use crate::error::{Error, Result};
use crate::seed;

/// Default ratio of excited-state linewidth to Raman detuning.
pub const DEFAULT_EPSILON: f64 = 1e-5;

fn check_resonance(w: &[f64], mu: f64, tone: usize, mode: usize) -> Result<f64> {
    let d = w[mode] - mu;
    if d.abs() < GUARD_BAND * w[0] {
        return Err(Error::Resonance { tone, mode });
    }
    Ok(d)
}

/// p_ph = Σ_{i,m} (η_{i,m} Ω_{i,m} / (ω_m − μ_m))², tone m paired with mode m.
pub fn phonon_error(omega: &RabiMatrix, modes: &ModeSpectrum, sched: &DetuningSchedule) -> Result<f64> {
    let n = modes.n();
    if omega.n() != n || sched.n() != n {
        return Err(Error::Shape(format!(
            "Ω is {}x{}, schedule has {} tones, {n} modes",
            omega.n(),
            omega.n(),
            sched.n()
        )));
    }
    let w = modes.frequencies();
    let eta = modes.lamb_dicke();
    let om = omega.as_matrix();
    let mut p = 0.0;
    for m in 0..n {
        let d = check_resonance(w, sched.detunings[m], m, m)?;
        for i in 0..n {
            p += (eta[(i, m)] * om[(i, m)] / d).powi(2);
        }
    }
    Ok(p)
}

/// Phonon-creation estimate for one global tone μ with per-ion amplitudes:
/// Σ_{i,m} (η_{i,m} Ω_i / (ω_m − μ))².
pub fn single_tone_phonon_error(omega_vec: &[f64], mu: f64, modes: &ModeSpectrum) -> Result<f64> {
    let n = modes.n();
    if omega_vec.len() != n {
        return Err(Error::Shape(format!("{} amplitudes for {n} ions", omega_vec.len())));
    }
    let w = modes.frequencies();
    let eta = modes.lamb_dicke();
    let mut p = 0.0;
    for m in 0..n {
        let d = check_resonance(w, mu, 0, m)?;
        for (i, o) in omega_vec.iter().enumerate() {
            p += (eta[(i, m)] * o / d).powi(2);
        }
    }
    Ok(p)
}

/// Γ = ε Σ|Ω|.
pub fn spontaneous_rate(omega: &RabiMatrix, epsilon: f64) -> Result<f64> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidConfig(format!("epsilon must be non-negative, got {epsilon}")));
    }
    Ok(epsilon * omega.l1_norm())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityReport {
    pub delta: f64,
    pub trials: usize,
    /// Trials dropped because a perturbed mode landed on a tone.
    pub discarded: usize,
    /// Mean and sample standard deviation of ‖J′ − J‖_F / ‖J‖_F.
    pub mean: f64,
    pub std: f64,
    /// √N · δ.
    pub predicted: f64,
}

/// Monte Carlo response of a fixed design (Ω, μ) to independent Gaussian
/// fractional noise of standard deviation `delta` on every ω_m. The mode
/// vectors are held fixed and η is recomputed from the perturbed ω_m.
pub fn trap_sensitivity(
    omega: &RabiMatrix,
    cfg: &TrapConfig,
    sched: &DetuningSchedule,
    delta: f64,
    trials: usize,
    rng_seed: u64,
) -> Result<SensitivityReport> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::InvalidConfig(format!("delta must be non-negative, got {delta}")));
    }
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be at least 1".into()));
    }
    let (_, modes) = solve_trap(cfg)?;
    let n = modes.n();
    if omega.n() != n {
        return Err(Error::Shape(format!("Ω has {} rows, trap has {n} ions", omega.n())));
    }
    let j0 = forward_coupling(omega, &response_tensor(&modes, sched)?)?;
    let norm0 = j0.frobenius();
    if norm0 == 0.0 {
        return Err(Error::InvalidConfig("design produces no coupling".into()));
    }
    let guard = GUARD_BAND * modes.frequencies()[0];

    let errors: Vec<Option<f64>> = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<Option<f64>> {
            let mut rng = seed::rng(rng_seed, "sensitivity.trial", t as u64);
            let w: Vec<f64> = modes
                .frequencies()
                .iter()
                .map(|wm| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    wm * (1.0 + delta * z)
                })
                .collect();
            let hits = w.iter().any(|wm| sched.detunings.iter().any(|mu| (wm - mu).abs() < guard));
            if hits || w.iter().any(|wm| *wm <= 0.0) {
                return Ok(None);
            }
            let perturbed = modes.with_frequencies(w, cfg.ion_mass, cfg.delta_k)?;
            let j = forward_coupling(omega, &response_tensor(&perturbed, sched)?)?;
            let diff = (j.as_matrix() - j0.as_matrix()).norm();
            Ok(Some(diff / norm0))
        })
        .collect::<Result<_>>()?;

    let kept: Vec<f64> = errors.iter().flatten().copied().collect();
    let k = kept.len() as f64;
    let mean = if kept.is_empty() { f64::NAN } else { kept.iter().sum::<f64>() / k };
    let std = if kept.len() < 2 {
        0.0
    } else {
        (kept.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
    };
    Ok(SensitivityReport {
        delta,
        trials,
        discarded: trials - kept.len(),
        mean,
        std,
        predicted: (n as f64).sqrt() * delta,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorBudget {
    pub p_ph: f64,
    /// Spontaneous-emission rate (1/s).
    pub gamma: f64,
    pub epsilon: f64,
    pub sensitivity: Option<SensitivityReport>,
}

/// p_ph and Γ of a design; the sensitivity is left for [`trap_sensitivity`].
pub fn error_budget(
    omega: &RabiMatrix,
    modes: &ModeSpectrum,
    sched: &DetuningSchedule,
    epsilon: f64,
) -> Result<ErrorBudget> {
    Ok(ErrorBudget {
        p_ph: phonon_error(omega, modes, sched)?,
        gamma: spontaneous_rate(omega, epsilon)?,
        epsilon,
        sensitivity: None,
    })
}

impl fmt::Display for ErrorBudget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "p_ph = {:.16e}", self.p_ph)?;
        writeln!(f, "gamma_per_s = {:.16e}", self.gamma)?;
        writeln!(f, "epsilon = {:.16e}", self.epsilon)?;
        if let Some(s) = &self.sensitivity {
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

impl fmt::Display for SensitivityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "delta = {:.16e}", self.delta)?;
        writeln!(f, "trials = {}", self.trials)?;
        writeln!(f, "discarded = {}", self.discarded)?;
        writeln!(f, "error_mean = {:.16e}", self.mean)?;
        writeln!(f, "error_std = {:.16e}", self.std)?;
        writeln!(f, "predicted = {:.16e}", self.predicted)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::detuning_schedule;
    use nalgebra::DMatrix;
    use std::f64::consts::TAU;

    fn setup(n: usize) -> (TrapConfig, ModeSpectrum, DetuningSchedule, RabiMatrix) {
        let cfg = TrapConfig::with_default_anisotropy(n, TAU * 5e6).unwrap();
        let (_, modes) = solve_trap(&cfg).unwrap();
        let sched = detuning_schedule(&modes, 0.1).unwrap();
        let om = DMatrix::from_fn(n, n, |i, m| TAU * 1e3 * (1.0 + (i * n + m) as f64 * 0.37).sin());
        (cfg, modes, sched, RabiMatrix::new(om).unwrap())
    }

    #[test]
    fn phonon_error_laws() {
        let (_, modes, sched, om) = setup(4);
        assert_eq!(phonon_error(&RabiMatrix::zeros(4), &modes, &sched).unwrap(), 0.0);
        let p = phonon_error(&om, &modes, &sched).unwrap();
        assert!(p > 0.0);
        let p2 = phonon_error(&om.scaled(2.0), &modes, &sched).unwrap();
        assert!((p2 / p - 4.0).abs() < 1e-14);
    }

    #[test]
    fn single_ion_phonon_error() {
        let (_, modes, sched, _) = setup(1);
        let om = RabiMatrix::new(DMatrix::from_element(1, 1, TAU * 2e4)).unwrap();
        let eta = modes.lamb_dicke()[(0, 0)];
        let expect = (eta * TAU * 2e4 / (modes.frequencies()[0] - sched.detunings[0])).powi(2);
        let p = phonon_error(&om, &modes, &sched).unwrap();
        assert!((p - expect).abs() <= 1e-15 * expect);
    }

    #[test]
    fn resonant_tone_is_rejected() {
        let (_, modes, mut sched, om) = setup(3);
        sched.detunings[1] = modes.frequencies()[1];
        assert!(matches!(phonon_error(&om, &modes, &sched), Err(Error::Resonance { tone: 1, mode: 1 })));
    }

    #[test]
    fn spontaneous_emission() {
        let om = RabiMatrix::new(DMatrix::from_row_slice(2, 2, &[0.5, -0.25, 0.0, 0.25])).unwrap();
        let om = om.scaled(TAU * 1e6);
        let g = spontaneous_rate(&om, 1e-5).unwrap();
        assert!((g - TAU * 10.0).abs() < 1e-12);
        assert_eq!(spontaneous_rate(&om.canonicalized(), 1e-5).unwrap(), g);
        assert_eq!(spontaneous_rate(&om, 2e-5).unwrap(), 2.0 * g);
        assert!(spontaneous_rate(&om, -1.0).is_err());
    }

    #[test]
    fn sensitivity_zero_delta_and_determinism() {
        let (cfg, _, sched, om) = setup(5);
        let r = trap_sensitivity(&om, &cfg, &sched, 0.0, 10, 3).unwrap();
        assert_eq!(r.mean, 0.0);
        assert_eq!(r.discarded, 0);
        let a = trap_sensitivity(&om, &cfg, &sched, 1e-5, 20, 3).unwrap();
        let b = trap_sensitivity(&om, &cfg, &sched, 1e-5, 20, 3).unwrap();
        assert_eq!(a, b);
        assert!(a.mean > 0.0);
        assert!(trap_sensitivity(&om, &cfg, &sched, 1e-5, 0, 3).is_err());
    }
}
