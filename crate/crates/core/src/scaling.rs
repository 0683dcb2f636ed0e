//! Coupling strength versus ion number at a fixed optical budget.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::budget::{phonon_error, single_tone_phonon_error, spontaneous_rate, DEFAULT_EPSILON};
use crate::coupling::{detuning_schedule, response_tensor, single_tone_coupling};
use crate::crystal::{solve_trap, TrapConfig};
use crate::error::{Error, Result};
use crate::graphs;
use crate::inverse::{solve_rabi, SolveConfig, SolveMode};
use crate::seed;
use crate::units::rad_to_hz;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Open nearest-neighbor chain, solved with the multi-tone inverse.
    ChainNn,
    /// All-to-all uniform coupling from one tone above the COM mode with
    /// equal amplitudes on every ion.
    UniformFull,
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chain" | "chain_nn" => Ok(Family::ChainNn),
            "uniform" | "uniform_full" => Ok(Family::UniformFull),
            _ => Err(Error::InvalidConfig(format!("unknown family `{s}` (chain, uniform)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingConfig {
    pub family: Family,
    pub n_min: usize,
    pub n_max: usize,
    pub f_s: f64,
    /// Σ|Ω| in rad/s.
    pub budget: f64,
    /// Transverse COM frequency (rad/s); the axial confinement follows the
    /// default anisotropy rule at each N.
    pub omega_com: f64,
    pub epsilon: f64,
    /// Solver settings; `rng_seed` is the root seed of the study and `mode`
    /// is overridden.
    pub solver: SolveConfig,
}

impl ScalingConfig {
    pub fn new(family: Family, n_min: usize, n_max: usize, f_s: f64, budget: f64, omega_com: f64) -> Self {
        Self {
            family,
            n_min,
            n_max,
            f_s,
            budget,
            omega_com,
            epsilon: DEFAULT_EPSILON,
            solver: SolveConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_min < 3 || self.n_min > self.n_max {
            return Err(Error::InvalidConfig(format!(
                "need 3 <= n_min <= n_max, got {}..{}",
                self.n_min, self.n_max
            )));
        }
        if !(self.f_s > 0.0 && self.f_s < 1.0) {
            return Err(Error::InvalidConfig(format!("f_s must lie in (0, 1), got {}", self.f_s)));
        }
        if !(self.budget.is_finite() && self.budget > 0.0) {
            return Err(Error::InvalidConfig(format!("budget must be positive, got {}", self.budget)));
        }
        if !(self.omega_com.is_finite() && self.omega_com > 0.0) {
            return Err(Error::InvalidConfig(format!("omega_com must be positive, got {}", self.omega_com)));
        }
        if self.epsilon.is_nan() || self.epsilon < 0.0 {
            return Err(Error::InvalidConfig(format!("epsilon must be non-negative, got {}", self.epsilon)));
        }
        self.solver.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRow {
    pub n: usize,
    /// Nearest-neighbor J for chains, N·mean|J| for uniform graphs (Hz).
    /// NaN when the solve did not converge.
    pub j_metric: f64,
    /// Uniform family only: the same metric with the budget reduced as
    /// log N / N, normalized to the full budget at `n_min`.
    pub j_metric_reduced: Option<f64>,
    pub f_s: f64,
    /// Σ|Ω| (rad/s).
    pub budget: f64,
    pub p_ph: f64,
    /// 1/s.
    pub gamma: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingStudy {
    pub rows: Vec<ScalingRow>,
    /// Log-log slope of `j_metric` over converged rows.
    pub exponent: Option<f64>,
    pub exponent_reduced: Option<f64>,
}

/// Ordinary least-squares slope of ln y against ln x. `None` with fewer
/// than two points or a degenerate abscissa.
pub fn fit_power_law(points: &[(f64, f64)]) -> Option<f64> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0 && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if logs.len() < 2 {
        return None;
    }
    let k = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

fn chain_point(cfg: &ScalingConfig, n: usize) -> Result<ScalingRow> {
    let trap = TrapConfig::with_default_anisotropy(n, cfg.omega_com)?;
    let (_, modes) = solve_trap(&trap)?;
    let sched = detuning_schedule(&modes, cfg.f_s)?;
    let f = response_tensor(&modes, &sched)?;
    let solver = SolveConfig {
        rng_seed: seed::derive(cfg.solver.rng_seed, "scaling.point", n as u64),
        mode: SolveMode::FixedBudget { budget: cfg.budget },
        ..cfg.solver.clone()
    };
    let graph = graphs::chain_nn(n, 1.0, false)?;
    let mut row = ScalingRow {
        n,
        j_metric: f64::NAN,
        j_metric_reduced: None,
        f_s: cfg.f_s,
        budget: cfg.budget,
        p_ph: f64::NAN,
        gamma: f64::NAN,
        converged: false,
    };
    match solve_rabi(&graph, &f, &solver) {
        Ok(res) => {
            row.j_metric = rad_to_hz(res.attained_scale.unwrap_or(0.0));
            row.p_ph = phonon_error(&res.omega, &modes, &sched)?;
            row.gamma = spontaneous_rate(&res.omega, cfg.epsilon)?;
            row.converged = res.converged;
        }
        Err(Error::NoConvergence { .. }) => {}
        Err(e) => return Err(e),
    }
    Ok(row)
}

fn log_over_n(n: usize) -> f64 {
    (n as f64).ln() / n as f64
}

fn uniform_point(cfg: &ScalingConfig, n: usize) -> Result<ScalingRow> {
    let trap = TrapConfig::with_default_anisotropy(n, cfg.omega_com)?;
    let (_, modes) = solve_trap(&trap)?;
    let w = modes.frequencies();
    let mu = w[0] + cfg.f_s * modes.com_tilt_gap();
    let amps = vec![cfg.budget / n as f64; n];
    let j = single_tone_coupling(&amps, mu, &modes)?;
    let pairs = (n * (n - 1)) as f64;
    let mean_abs = j.as_matrix().iter().map(|x| x.abs()).sum::<f64>() / pairs;
    let metric = rad_to_hz(n as f64 * mean_abs);
    // J is quadratic in the amplitudes.
    let reduction = log_over_n(n) / log_over_n(cfg.n_min);
    Ok(ScalingRow {
        n,
        j_metric: metric,
        j_metric_reduced: Some(metric * reduction * reduction),
        f_s: cfg.f_s,
        budget: cfg.budget,
        p_ph: single_tone_phonon_error(&amps, mu, &modes)?,
        gamma: cfg.epsilon * cfg.budget,
        converged: true,
    })
}

/// Runs every N in `n_min..=n_max` (concurrently) and fits the exponents.
pub fn scaling_study(cfg: &ScalingConfig) -> Result<ScalingStudy> {
    cfg.validate()?;
    let rows: Vec<ScalingRow> = (cfg.n_min..=cfg.n_max)
        .into_par_iter()
        .map(|n| match cfg.family {
            Family::ChainNn => chain_point(cfg, n),
            Family::UniformFull => uniform_point(cfg, n),
        })
        .collect::<Result<_>>()?;
    let good: Vec<&ScalingRow> = rows.iter().filter(|r| r.converged).collect();
    let exponent = fit_power_law(&good.iter().map(|r| (r.n as f64, r.j_metric)).collect::<Vec<_>>());
    let exponent_reduced = match cfg.family {
        Family::ChainNn => None,
        Family::UniformFull => fit_power_law(
            &good
                .iter()
                .filter_map(|r| r.j_metric_reduced.map(|j| (r.n as f64, j)))
                .collect::<Vec<_>>(),
        ),
    };
    Ok(ScalingStudy { rows, exponent, exponent_reduced })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    #[test]
    fn power_law_fit() {
        let pts: Vec<(f64, f64)> = (1..8).map(|n| (n as f64, 3.0 * (n as f64).powf(-1.3))).collect();
        assert!((fit_power_law(&pts).unwrap() + 1.3).abs() < 1e-12);
        // Two points: exact two-point slope.
        let two = [(3.0, 5.0), (4.0, 2.0)];
        let expect = (2.0f64 / 5.0).ln() / (4.0f64 / 3.0).ln();
        assert!((fit_power_law(&two).unwrap() - expect).abs() < 1e-14);
        assert_eq!(fit_power_law(&[(3.0, 1.0)]), None);
        assert_eq!(fit_power_law(&[(3.0, 1.0), (3.0, 2.0)]), None);
    }

    #[test]
    fn validation() {
        let mut c = ScalingConfig::new(Family::ChainNn, 2, 5, 0.03, TAU * 1e6, TAU * 5e6);
        assert!(c.validate().is_err());
        c.n_min = 6;
        assert!(c.validate().is_err());
        c.n_min = 4;
        c.f_s = 1.0;
        assert!(c.validate().is_err());
        assert_eq!("uniform".parse::<Family>().unwrap(), Family::UniformFull);
        assert!("ring".parse::<Family>().is_err());
    }

    #[test]
    fn uniform_rows_and_reduction() {
        let cfg = ScalingConfig::new(Family::UniformFull, 3, 8, 0.03, TAU * 1e6, TAU * 5e6);
        let study = scaling_study(&cfg).unwrap();
        assert_eq!(study.rows.len(), 6);
        let first = &study.rows[0];
        assert_eq!(first.j_metric_reduced, Some(first.j_metric));
        for w in study.rows.windows(2) {
            assert!(w[1].j_metric_reduced.unwrap() < w[0].j_metric_reduced.unwrap());
        }
        assert!(study.exponent_reduced.unwrap() < study.exponent.unwrap());
    }

    #[test]
    fn chain_two_points_deterministic() {
        let mut cfg = ScalingConfig::new(Family::ChainNn, 3, 4, 0.03, TAU * 1e6, TAU * 5e6);
        cfg.solver.n_starts = 2;
        let a = scaling_study(&cfg).unwrap();
        let b = scaling_study(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rows.len(), 2);
        let expect = (a.rows[1].j_metric / a.rows[0].j_metric).ln() / (4.0f64 / 3.0).ln();
        assert!((a.exponent.unwrap() - expect).abs() < 1e-12);
        assert!(a.rows.iter().all(|r| r.converged && r.p_ph > 0.0));
        assert!((a.rows[0].gamma - 1e-5 * TAU * 1e6).abs() < 1e-9);
    }
}
