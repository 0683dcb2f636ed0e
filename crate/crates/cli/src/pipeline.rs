//! Artifact-producing runs.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use ionspin::budget::{error_budget, trap_sensitivity};
use ionspin::coupling::{detuning_schedule, response_tensor, validity_check};
use ionspin::crystal::{solve_trap, AxialPotential};
use ionspin::inverse::{solve_rabi, verify_roundtrip};
use ionspin::io::{self, fmt_f64};
use ionspin::scaling::{scaling_study, Family, ScalingConfig, ScalingStudy};
use ionspin::units::{hz_to_rad, rad_to_hz};

use crate::config::RunConfig;
use crate::{CliError, Stage};

pub const DESIGN_FILES: &[&str] = &[
    "positions.csv",
    "modes.csv",
    "schedule.csv",
    "omega.csv",
    "j_attained.csv",
    "residual.txt",
    "validity.txt",
    "errors.txt",
    "manifest.toml",
];

pub const SCALING_FILES: &[&str] = &["scaling.csv", "exponent.txt", "scaling.manifest.toml"];

#[derive(Debug, Clone, PartialEq)]
pub struct DesignSummary {
    pub n: usize,
    pub relative_residual: f64,
    pub converged: bool,
    /// Fixed-budget runs: coupling scale in Hz.
    pub attained_scale_hz: Option<f64>,
    pub max_validity_ratio: f64,
}

#[derive(Serialize)]
struct Software {
    name: &'static str,
    version: &'static str,
}

const SOFTWARE: Software = Software { name: "ionspin", version: env!("CARGO_PKG_VERSION") };

#[derive(Serialize)]
struct DesignDerived {
    n_ions: usize,
    graph_name: String,
    mode: &'static str,
    omega_z_hz: Option<f64>,
    length_scale_m: f64,
    com_frequency_hz: f64,
    reference_gap_hz: f64,
}

#[derive(Serialize)]
struct DesignManifest<'a> {
    software: Software,
    config: &'a RunConfig,
    derived: DesignDerived,
    outputs: Vec<&'static str>,
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(ionspin::Error::from).stage("write")
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Config(format!("cannot create output directory {}: {e}", dir.display())))
}

/// Runs trap → modes → schedule → solve → verify → error budget and writes
/// the artifacts listed in [`DESIGN_FILES`] to `cfg.output`.
pub fn run_design(cfg: &RunConfig) -> Result<DesignSummary, CliError> {
    cfg.validate()?;
    let graph = cfg.graph.build().stage("graph")?;
    let n = graph.n();
    let trap = cfg.trap.build(n).stage("trap")?;
    let (crystal, modes) = solve_trap(&trap).stage("modes")?;
    let sched = detuning_schedule(&modes, cfg.f_s).stage("schedule")?;
    let f = response_tensor(&modes, &sched).stage("response")?;
    let solve_cfg = cfg.solve_config();
    let result = solve_rabi(&graph, &f, &solve_cfg).stage("solve")?;
    let check = verify_roundtrip(&result, &graph, &f).stage("verify")?;
    let validity = validity_check(&result.omega, &sched, &modes, cfg.validity_threshold).stage("validity")?;
    let mut budget = error_budget(&result.omega, &modes, &sched, cfg.epsilon).stage("errors")?;
    if let Some(s) = &cfg.sensitivity {
        if result.attained.frobenius() > 0.0 {
            budget.sensitivity =
                Some(trap_sensitivity(&result.omega, &trap, &sched, s.delta, s.trials, cfg.seed).stage("sensitivity")?);
        }
    }

    let out = &cfg.output;
    ensure_dir(out)?;
    let positions: Vec<Vec<String>> = crystal
        .positions
        .iter()
        .zip(crystal.positions_m())
        .enumerate()
        .map(|(i, (u, z))| vec![i.to_string(), fmt_f64(*u), fmt_f64(z)])
        .collect();
    io::write_table(&out.join("positions.csv"), &["ion", "position", "position_m"], &positions).stage("write")?;
    write_modes(&out.join("modes.csv"), &modes).stage("write")?;
    let w = modes.frequencies();
    let schedule: Vec<Vec<String>> = sched
        .detunings
        .iter()
        .enumerate()
        .map(|(t, mu)| {
            vec![t.to_string(), fmt_f64(rad_to_hz(*mu)), fmt_f64(rad_to_hz(w[t])), fmt_f64(rad_to_hz(mu - w[t]))]
        })
        .collect();
    io::write_table(&out.join("schedule.csv"), &["tone", "mu_hz", "mode_hz", "offset_hz"], &schedule)
        .stage("write")?;
    io::write_matrix_hz(&out.join("omega.csv"), result.omega.as_matrix()).stage("write")?;
    io::write_matrix_hz(&out.join("j_attained.csv"), result.attained.as_matrix()).stage("write")?;

    let mut residual = String::new();
    let scale_hz = result.attained_scale.map(rad_to_hz);
    writeln!(residual, "relative_residual = {}", fmt_f64(result.relative_residual)).unwrap();
    writeln!(residual, "roundtrip_relative_residual = {}", fmt_f64(check.relative_residual)).unwrap();
    writeln!(residual, "roundtrip_max_deviation_hz = {}", fmt_f64(rad_to_hz(check.max_deviation))).unwrap();
    writeln!(residual, "objective_hz = {}", fmt_f64(rad_to_hz(result.objective))).unwrap();
    if let Some(c) = scale_hz {
        writeln!(residual, "attained_scale_hz = {}", fmt_f64(c)).unwrap();
    }
    writeln!(residual, "residual_tol = {}", fmt_f64(cfg.solver.residual_tol)).unwrap();
    writeln!(residual, "converged = {}", result.converged).unwrap();
    writeln!(residual, "best_start = {}", result.best_start).unwrap();
    writeln!(residual, "iterations = {}", result.iterations).unwrap();
    let starts: Vec<String> = result
        .start_objectives
        .iter()
        .map(|o| o.map(fmt_f64).unwrap_or_else(|| "unconverged".into()))
        .collect();
    writeln!(residual, "start_objectives = [{}]", starts.join(", ")).unwrap();
    for w in &result.warnings {
        writeln!(residual, "warning = {w:?}").unwrap();
    }
    write_text(&out.join("residual.txt"), &residual)?;
    write_text(&out.join("validity.txt"), &validity.to_string())?;
    write_text(&out.join("errors.txt"), &budget.to_string())?;

    let manifest = DesignManifest {
        software: SOFTWARE,
        config: cfg,
        derived: DesignDerived {
            n_ions: n,
            graph_name: graph.name.clone(),
            mode: if cfg.budget_hz.is_some() { "fixed_budget" } else { "exact_target" },
            omega_z_hz: match trap.axial {
                AxialPotential::Harmonic { omega_z } => Some(rad_to_hz(omega_z)),
                AxialPotential::Quartic { .. } => None,
            },
            length_scale_m: crystal.length_scale,
            com_frequency_hz: rad_to_hz(w[0]),
            reference_gap_hz: rad_to_hz(sched.reference_gap),
        },
        outputs: DESIGN_FILES.to_vec(),
    };
    let text = toml::to_string(&manifest).map_err(|e| CliError::Config(e.to_string()))?;
    write_text(&out.join("manifest.toml"), &text)?;

    Ok(DesignSummary {
        n,
        relative_residual: result.relative_residual,
        converged: result.converged,
        attained_scale_hz: scale_hz,
        max_validity_ratio: validity.max_ratio,
    })
}

/// `mode, frequency_hz, b_0 … b_{N−1}`.
pub fn modes_table(modes: &ionspin::ModeSpectrum) -> (Vec<String>, Vec<Vec<String>>) {
    let n = modes.n();
    let mut header = vec!["mode".to_string(), "frequency_hz".to_string()];
    header.extend((0..n).map(|i| format!("b_{i}")));
    let b = modes.mode_matrix();
    let rows = (0..n)
        .map(|m| {
            let mut r = vec![m.to_string(), fmt_f64(rad_to_hz(modes.frequencies()[m]))];
            r.extend((0..n).map(|i| fmt_f64(b[(i, m)])));
            r
        })
        .collect();
    (header, rows)
}

fn write_modes(path: &Path, modes: &ionspin::ModeSpectrum) -> ionspin::Result<()> {
    let (header, rows) = modes_table(modes);
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    io::write_table(path, &header, &rows)
}

pub const SCALING_HEADER: &[&str] = &["n", "j_metric_hz", "j_metric_reduced_hz", "p_ph", "gamma_per_s", "converged"];

/// Rows of scaling.csv; `converged` is 1 or 0 and missing values are NaN.
pub fn scaling_rows(study: &ScalingStudy) -> Vec<Vec<String>> {
    study
        .rows
        .iter()
        .map(|r| {
            vec![
                r.n.to_string(),
                fmt_f64(r.j_metric),
                fmt_f64(r.j_metric_reduced.unwrap_or(f64::NAN)),
                fmt_f64(r.p_ph),
                fmt_f64(r.gamma),
                u8::from(r.converged).to_string(),
            ]
        })
        .collect()
}

/// Scaling parameters for a run config with a `[scaling]` section.
pub fn scaling_config(cfg: &RunConfig) -> Result<ScalingConfig, CliError> {
    cfg.validate()?;
    let section = cfg.scaling.as_ref().ok_or_else(|| CliError::Config("missing [scaling] section".into()))?;
    let budget = cfg.budget_hz.ok_or_else(|| CliError::Config("scaling needs budget_hz".into()))?;
    if cfg.trap.axial.is_some() || cfg.trap.ion_mass_amu.is_some() || cfg.trap.raman_wavelength_nm.is_some() {
        return Err(CliError::Config(
            "scaling uses the default Yb-171 trap rule; remove trap.axial, ion_mass_amu and raman_wavelength_nm".into(),
        ));
    }
    let mut study_cfg = ScalingConfig::new(
        section.family,
        section.n_min,
        section.n_max,
        cfg.f_s,
        hz_to_rad(budget),
        hz_to_rad(cfg.trap.omega_com_hz),
    );
    study_cfg.epsilon = cfg.epsilon;
    study_cfg.solver = cfg.solve_config();
    Ok(study_cfg)
}

#[derive(Serialize)]
struct ScalingManifest<'a> {
    software: Software,
    config: &'a RunConfig,
    outputs: Vec<&'static str>,
}

/// Scaling study from the `[scaling]` section; writes [`SCALING_FILES`].
pub fn run_scaling(cfg: &RunConfig) -> Result<ScalingStudy, CliError> {
    let study_cfg = scaling_config(cfg)?;
    let study = scaling_study(&study_cfg).stage("scaling")?;

    let out = &cfg.output;
    ensure_dir(out)?;
    io::write_table(&out.join("scaling.csv"), SCALING_HEADER, &scaling_rows(&study)).stage("write")?;
    let fmt_opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_else(|| "none".into());
    let mut text = format!("exponent = {}\n", fmt_opt(study.exponent));
    if study_cfg.family == Family::UniformFull {
        writeln!(text, "exponent_reduced = {}", fmt_opt(study.exponent_reduced)).unwrap();
    }
    write_text(&out.join("exponent.txt"), &text)?;
    let manifest = ScalingManifest { software: SOFTWARE, config: cfg, outputs: SCALING_FILES.to_vec() };
    let text = toml::to_string(&manifest).map_err(|e| CliError::Config(e.to_string()))?;
    write_text(&out.join("scaling.manifest.toml"), &text)?;
    Ok(study)
}

/// Converts run artifacts into plot-ready tables: `spectrum.csv` from
/// modes.csv, `omega_heatmap.csv` from omega.csv and `scaling_loglog.csv`
/// from scaling.csv. Returns the files written.
pub fn emit_plotdata(run_dir: &Path, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut written = Vec::new();
    let modes = run_dir.join("modes.csv");
    let omega = run_dir.join("omega.csv");
    let scaling = run_dir.join("scaling.csv");
    if !modes.is_file() && !omega.is_file() && !scaling.is_file() {
        return Err(CliError::Config(format!(
            "{} has no modes.csv, omega.csv or scaling.csv",
            run_dir.display()
        )));
    }
    ensure_dir(out_dir)?;

    if modes.is_file() {
        let (_, rows) = io::read_table(&modes).stage("plotdata")?;
        let com = rows.first().map_or(0.0, |r| r[1]);
        let table: Vec<Vec<String>> = rows
            .iter()
            .map(|r| vec![(r[0] as usize).to_string(), fmt_f64(r[1]), fmt_f64(r[1] - com)])
            .collect();
        let p = out_dir.join("spectrum.csv");
        io::write_table(&p, &["mode", "frequency_hz", "offset_from_com_hz"], &table).stage("plotdata")?;
        written.push(p);
    }
    if omega.is_file() {
        let m = io::read_matrix(&omega).stage("plotdata")?;
        let mut table = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for t in 0..m.ncols() {
                table.push(vec![i.to_string(), t.to_string(), fmt_f64(m[(i, t)])]);
            }
        }
        let p = out_dir.join("omega_heatmap.csv");
        io::write_table(&p, &["ion", "tone", "omega_hz"], &table).stage("plotdata")?;
        written.push(p);
    }
    if scaling.is_file() {
        let (_, rows) = io::read_table(&scaling).stage("plotdata")?;
        let table: Vec<Vec<String>> = rows
            .iter()
            .map(|r| vec![(r[0] as usize).to_string(), fmt_f64(r[1]), fmt_f64(r[0].log10()), fmt_f64(r[1].log10())])
            .collect();
        let p = out_dir.join("scaling_loglog.csv");
        io::write_table(&p, &["n", "j_metric_hz", "log10_n", "log10_j_metric_hz"], &table).stage("plotdata")?;
        written.push(p);
    }
    Ok(written)
}
