//! TOML run configuration.
//!
//! Frequencies are given in Hz and converted to rad/s internally. A minimal
//! design run:
//!
//! ```toml
//! output = "out/square"
//! seed = 1
//! f_s = 0.1
//! budget_hz = 1e6
//!
//! [trap]
//! omega_com_hz = 5e6
//!
//! [graph]
//! kind = "square"
//! rows = 5
//! cols = 5
//! ```
//!
//! Omitting `budget_hz` asks for the graph couplings (`j_hz`) exactly.
//! Omitting `[trap.axial]` applies the default anisotropy rule.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use ionspin::coupling::DEFAULT_VALIDITY_THRESHOLD;
use ionspin::crystal::{AxialPotential, TrapConfig};
use ionspin::graphs::{self, TargetGraph};
use ionspin::inverse::{SolveConfig, SolveMode};
use ionspin::scaling::Family;
use ionspin::units::{self, hz_to_rad, ATOMIC_MASS_UNIT};

use crate::CliError;

fn default_epsilon() -> f64 {
    ionspin::budget::DEFAULT_EPSILON
}

fn default_threshold() -> f64 {
    DEFAULT_VALIDITY_THRESHOLD
}

fn default_omega_com_hz() -> f64 {
    5e6
}

fn default_j_hz() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Directory receiving the artifacts.
    pub output: PathBuf,
    #[serde(default)]
    pub seed: u64,
    /// Detuning fraction f_s in (0, 1).
    pub f_s: f64,
    /// Σ|Ω|/2π in Hz. Absent: exact-target mode.
    #[serde(default)]
    pub budget_hz: Option<f64>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_threshold")]
    pub validity_threshold: f64,
    #[serde(default)]
    pub trap: TrapSection,
    pub graph: GraphSpec,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub sensitivity: Option<SensitivitySection>,
    #[serde(default)]
    pub scaling: Option<ScalingSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapSection {
    #[serde(default = "default_omega_com_hz")]
    pub omega_com_hz: f64,
    #[serde(default)]
    pub axial: Option<AxialSection>,
    /// Ion mass in atomic mass units (default ¹⁷¹Yb⁺).
    #[serde(default)]
    pub ion_mass_amu: Option<f64>,
    /// Counter-propagating Raman wavelength in nm (default 355).
    #[serde(default)]
    pub raman_wavelength_nm: Option<f64>,
}

impl Default for TrapSection {
    fn default() -> Self {
        Self { omega_com_hz: default_omega_com_hz(), axial: None, ion_mass_amu: None, raman_wavelength_nm: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum AxialSection {
    Harmonic { omega_z_hz: f64 },
    /// Coefficients of V/M = α₂ z²/2 + α₄ z⁴/4 in s⁻² and s⁻² m⁻².
    Quartic { alpha2: f64, alpha4: f64 },
}

impl TrapSection {
    /// Trap for `n` ions.
    pub fn build(&self, n: usize) -> ionspin::Result<TrapConfig> {
        let omega_com = hz_to_rad(self.omega_com_hz);
        let mut cfg = match self.axial {
            None => TrapConfig::with_default_anisotropy(n, omega_com)?,
            Some(AxialSection::Harmonic { omega_z_hz }) => {
                TrapConfig::yb171(n, omega_com, AxialPotential::Harmonic { omega_z: hz_to_rad(omega_z_hz) })
            }
            Some(AxialSection::Quartic { alpha2, alpha4 }) => {
                TrapConfig::yb171(n, omega_com, AxialPotential::Quartic { alpha2, alpha4 })
            }
        };
        if let Some(m) = self.ion_mass_amu {
            cfg.ion_mass = m * ATOMIC_MASS_UNIT;
        }
        if let Some(l) = self.raman_wavelength_nm {
            cfg.delta_k = units::counter_propagating_delta_k(l * 1e-9);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Target graph: a generator or a CSV file in Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum GraphSpec {
    Square {
        rows: usize,
        cols: usize,
        #[serde(default = "default_j_hz")]
        j_hz: f64,
    },
    Kagome {
        cells_x: usize,
        cells_y: usize,
        #[serde(default = "default_j_hz")]
        j_hz: f64,
    },
    Chain {
        n: usize,
        #[serde(default)]
        periodic: bool,
        #[serde(default = "default_j_hz")]
        j_hz: f64,
    },
    Uniform {
        n: usize,
        #[serde(default = "default_j_hz")]
        j_hz: f64,
    },
    File {
        path: PathBuf,
    },
}

impl GraphSpec {
    pub fn build(&self) -> ionspin::Result<TargetGraph> {
        match self {
            GraphSpec::Square { rows, cols, j_hz } => graphs::square_lattice_pbc(*rows, *cols, hz_to_rad(*j_hz)),
            GraphSpec::Kagome { cells_x, cells_y, j_hz } => {
                graphs::kagome_pbc(*cells_x, *cells_y, hz_to_rad(*j_hz))
            }
            GraphSpec::Chain { n, periodic, j_hz } => graphs::chain_nn(*n, hz_to_rad(*j_hz), *periodic),
            GraphSpec::Uniform { n, j_hz } => graphs::uniform_full(*n, hz_to_rad(*j_hz)),
            GraphSpec::File { path } => graphs::from_file(path),
        }
    }

    /// Parses `square:RxC`, `kagome:XxY`, `chain:N`, `ring:N`, `uniform:N`,
    /// or otherwise treats the argument as a file path.
    pub fn parse(s: &str, j_hz: f64) -> Result<Self, CliError> {
        let bad = || CliError::Config(format!("cannot parse graph `{s}`"));
        let pair = |v: &str| -> Result<(usize, usize), CliError> {
            let (a, b) = v.split_once('x').ok_or_else(bad)?;
            Ok((a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?))
        };
        let one = |v: &str| -> Result<usize, CliError> { v.parse().map_err(|_| bad()) };
        match s.split_once(':') {
            Some(("square", v)) => {
                let (rows, cols) = pair(v)?;
                Ok(GraphSpec::Square { rows, cols, j_hz })
            }
            Some(("kagome", v)) => {
                let (cells_x, cells_y) = pair(v)?;
                Ok(GraphSpec::Kagome { cells_x, cells_y, j_hz })
            }
            Some(("chain", v)) => Ok(GraphSpec::Chain { n: one(v)?, periodic: false, j_hz }),
            Some(("ring", v)) => Ok(GraphSpec::Chain { n: one(v)?, periodic: true, j_hz }),
            Some(("uniform", v)) => Ok(GraphSpec::Uniform { n: one(v)?, j_hz }),
            _ => Ok(GraphSpec::File { path: PathBuf::from(s) }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub residual_tol: f64,
    pub max_iter: usize,
    pub n_starts: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolveConfig::default();
        Self { residual_tol: d.residual_tol, max_iter: d.max_iter, n_starts: d.n_starts }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensitivitySection {
    pub delta: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingSection {
    pub family: Family,
    pub n_min: usize,
    pub n_max: usize,
}

impl FromStr for RunConfig {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        toml::from_str(s).map_err(|e| CliError::Config(e.to_string()))
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        text.parse()
            .map_err(|e: CliError| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn solve_config(&self) -> SolveConfig {
        SolveConfig {
            residual_tol: self.solver.residual_tol,
            max_iter: self.solver.max_iter,
            n_starts: self.solver.n_starts,
            rng_seed: self.seed,
            mode: match self.budget_hz {
                Some(b) => SolveMode::FixedBudget { budget: hz_to_rad(b) },
                None => SolveMode::ExactTarget,
            },
        }
    }

    /// Schema checks that need no computation.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.output.as_os_str().is_empty() {
            return bad("output must not be empty".into());
        }
        if !(self.f_s > 0.0 && self.f_s < 1.0) {
            return bad(format!("f_s must lie in (0, 1), got {}", self.f_s));
        }
        if let Some(b) = self.budget_hz {
            if !(b.is_finite() && b > 0.0) {
                return bad(format!("budget_hz must be positive, got {b}"));
            }
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return bad(format!("epsilon must be non-negative, got {}", self.epsilon));
        }
        if !(self.validity_threshold.is_finite() && self.validity_threshold > 0.0) {
            return bad(format!("validity_threshold must be positive, got {}", self.validity_threshold));
        }
        if !(self.trap.omega_com_hz.is_finite() && self.trap.omega_com_hz > 0.0) {
            return bad(format!("trap.omega_com_hz must be positive, got {}", self.trap.omega_com_hz));
        }
        for (name, v) in [("ion_mass_amu", self.trap.ion_mass_amu), ("raman_wavelength_nm", self.trap.raman_wavelength_nm)] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return bad(format!("trap.{name} must be positive, got {v}"));
                }
            }
        }
        if let Some(AxialSection::Harmonic { omega_z_hz }) = self.trap.axial {
            if !(omega_z_hz > 0.0 && omega_z_hz < self.trap.omega_com_hz) {
                return bad(format!("trap.axial.omega_z_hz must lie in (0, omega_com_hz), got {omega_z_hz}"));
            }
        }
        if let GraphSpec::File { path } = &self.graph {
            if !path.is_file() {
                return bad(format!("graph file {} does not exist", path.display()));
            }
        }
        self.solve_config().validate().map_err(|e| CliError::Config(e.to_string()))?;
        if let Some(s) = &self.sensitivity {
            if !(s.delta.is_finite() && s.delta >= 0.0) {
                return bad(format!("sensitivity.delta must be non-negative, got {}", s.delta));
            }
            if s.trials == 0 {
                return bad("sensitivity.trials must be at least 1".into());
            }
        }
        if let Some(s) = &self.scaling {
            if s.n_min < 3 || s.n_min > s.n_max {
                return bad(format!("scaling needs 3 <= n_min <= n_max, got {}..{}", s.n_min, s.n_max));
            }
        }
        Ok(())
    }
}
