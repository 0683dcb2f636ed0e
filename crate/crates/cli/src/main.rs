use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ionspin::budget::trap_sensitivity;
use ionspin::coupling::{detuning_schedule, forward_coupling, response_tensor, CouplingMatrix, RabiMatrix};
use ionspin::crystal::solve_trap;
use ionspin::dynamics::{evolve_exact, ground_state, trotter_evolve, Axis, InteractionTerm, SpinState};
use ionspin::inverse::{relative_residual, solve_rabi, SolveConfig, SolveMode};
use ionspin::io::{self, fmt_f64};
use ionspin::scaling::{scaling_study, Family};
use ionspin::units::{hz_to_rad, rad_to_hz};
use ionspin_cli::config::{AxialSection, ScalingSection, SolverSection, TrapSection};
use ionspin_cli::pipeline::{self, SCALING_HEADER};
use ionspin_cli::{CliError, GraphSpec, RunConfig, Stage};

#[derive(Parser)]
#[command(name = "ionspin", version, about = "Design Raman addressing patterns for Ising graphs on trapped-ion chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct TrapArgs {
    /// Transverse COM frequency (Hz).
    #[arg(long, default_value_t = 5e6)]
    omega_com_hz: f64,
    /// Harmonic axial frequency (Hz); default is 0.9 of the zigzag threshold.
    #[arg(long)]
    omega_z_hz: Option<f64>,
}

impl TrapArgs {
    fn section(&self) -> TrapSection {
        TrapSection {
            omega_com_hz: self.omega_com_hz,
            axial: self.omega_z_hz.map(|omega_z_hz| AxialSection::Harmonic { omega_z_hz }),
            ..TrapSection::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Equilibrium and transverse modes: mode, frequency_hz, b_0..b_{N-1}.
    Modes {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        trap: TrapArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Writes a generated graph (CSV in Hz plus metadata sidecar).
    Graph {
        /// square:RxC, kagome:XxY, chain:N, ring:N or uniform:N.
        #[arg(long)]
        graph: String,
        #[arg(long, default_value_t = 1.0)]
        j_hz: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solves for Ω and writes the design artifacts.
    Solve {
        /// Generator (square:5x5, ...) or CSV path.
        #[arg(long)]
        graph: String,
        #[arg(long)]
        fs: f64,
        /// Σ|Ω|/2π (Hz); omit to reproduce the graph's couplings exactly.
        #[arg(long)]
        budget: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        j_hz: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 8)]
        starts: usize,
        #[command(flatten)]
        trap: TrapArgs,
        #[arg(long, default_value = "design")]
        out: PathBuf,
    },
    /// Recomputes J from an Ω CSV (Hz) and compares it with a graph.
    Verify {
        #[arg(long)]
        omega: PathBuf,
        #[arg(long)]
        graph: String,
        #[arg(long, default_value_t = 1.0)]
        j_hz: f64,
        #[arg(long)]
        fs: f64,
        /// Compare against the best multiple of the graph's unit pattern.
        #[arg(long)]
        pattern: bool,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[command(flatten)]
        trap: TrapArgs,
    },
    /// Coupling versus ion number at fixed budget.
    Scaling {
        /// chain or uniform.
        #[arg(long, default_value = "chain")]
        family: String,
        #[arg(long, default_value_t = 3)]
        nmin: usize,
        #[arg(long, default_value_t = 33)]
        nmax: usize,
        #[arg(long, default_value_t = 0.03)]
        fs: f64,
        /// Σ|Ω|/2π (Hz).
        #[arg(long, default_value_t = 1e6)]
        budget: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 8)]
        starts: usize,
        #[arg(long, default_value_t = 5e6)]
        omega_com_hz: f64,
        /// Also write scaling.csv, exponent.txt and a manifest here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo response of a fixed-budget design to mode-frequency noise.
    Sensitivity {
        #[arg(long, default_value = "chain:20")]
        graph: String,
        #[arg(long, default_value_t = 0.1)]
        fs: f64,
        #[arg(long, default_value_t = 1e6)]
        budget: f64,
        #[arg(long, default_value_t = 1e-3)]
        delta: f64,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 8)]
        starts: usize,
        #[command(flatten)]
        trap: TrapArgs,
    },
    /// Exact (or Trotterized) Ising evolution; prints t_s and ⟨σz_i⟩.
    Dynamics {
        /// σxσx couplings, CSV in Hz.
        #[arg(long)]
        j: PathBuf,
        /// Optional σyσy couplings, CSV in Hz.
        #[arg(long)]
        jy: Option<PathBuf>,
        /// Final time (s).
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 50)]
        samples: usize,
        /// Initial z-basis state as a bitstring, spin 0 first, 1 = down.
        #[arg(long)]
        initial: Option<String>,
        /// Use a first-order Trotter product with this many steps per sample.
        #[arg(long)]
        trotter: Option<usize>,
    },
    /// Exhaustive ground states of Σ J s_i s_j for a CSV in Hz.
    Groundstate {
        #[arg(long)]
        j: PathBuf,
    },
    /// Plot-ready tables from a run directory.
    Plotdata {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Runs the design (and scaling, if configured) from a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

fn print_table(header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    io::write_table_to(std::io::stdout().lock(), header, rows).stage("output")
}

fn solver(starts: usize) -> SolverSection {
    SolverSection { n_starts: starts, ..SolverSection::default() }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Modes { n, trap, out } => {
            let cfg = trap.section().build(n).stage("trap")?;
            let (_, modes) = solve_trap(&cfg).stage("modes")?;
            let (header, rows) = pipeline::modes_table(&modes);
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            match out {
                Some(p) => io::write_table(&p, &header, &rows).stage("write")?,
                None => print_table(&header, &rows)?,
            }
        }
        Command::Graph { graph, j_hz, out } => {
            let g = GraphSpec::parse(&graph, j_hz)?.build().stage("graph")?;
            g.write(&out).stage("write")?;
            println!("{}: {} sites, {} edges", g.name, g.n(), g.edges().len());
        }
        Command::Solve { graph, fs, budget, j_hz, seed, starts, trap, out } => {
            let cfg = RunConfig {
                output: out,
                seed,
                f_s: fs,
                budget_hz: budget,
                epsilon: ionspin::budget::DEFAULT_EPSILON,
                validity_threshold: ionspin::coupling::DEFAULT_VALIDITY_THRESHOLD,
                trap: trap.section(),
                graph: GraphSpec::parse(&graph, j_hz)?,
                solver: solver(starts),
                sensitivity: None,
                scaling: None,
            };
            let s = pipeline::run_design(&cfg)?;
            report_design(&cfg.output, &s);
        }
        Command::Verify { omega, graph, j_hz, fs, pattern, tol, trap } => {
            let g = GraphSpec::parse(&graph, j_hz)?.build().stage("graph")?;
            let om = RabiMatrix::new(io::read_matrix_hz(&omega).stage("read")?).stage("read")?;
            let cfg = trap.section().build(g.n()).stage("trap")?;
            let (_, modes) = solve_trap(&cfg).stage("modes")?;
            let sched = detuning_schedule(&modes, fs).stage("schedule")?;
            let f = response_tensor(&modes, &sched).stage("response")?;
            let attained = forward_coupling(&om, &f).stage("verify")?;
            let reference = if pattern {
                let unit = g.unit_pattern().j_target;
                let num: f64 = attained.as_matrix().component_mul(unit.as_matrix()).sum();
                let den: f64 = unit.as_matrix().norm_squared();
                let c = if den > 0.0 { num / den } else { 0.0 };
                println!("scale_hz = {}", fmt_f64(rad_to_hz(c)));
                unit.scaled(c)
            } else {
                g.j_target.clone()
            };
            let r = relative_residual(&attained, &reference);
            let dev = (attained.as_matrix() - reference.as_matrix()).amax();
            println!("relative_residual = {}", fmt_f64(r));
            println!("max_deviation_hz = {}", fmt_f64(rad_to_hz(dev)));
            if r.is_nan() || r > tol {
                return Err(CliError::Stage {
                    stage: "verify",
                    source: ionspin::Error::NoConvergence { best_residual: r },
                });
            }
        }
        Command::Scaling { family, nmin, nmax, fs, budget, seed, starts, omega_com_hz, out } => {
            let family: Family = family.parse().map_err(|e: ionspin::Error| CliError::Config(e.to_string()))?;
            let cfg = RunConfig {
                output: out.clone().unwrap_or_else(|| PathBuf::from(".")),
                seed,
                f_s: fs,
                budget_hz: Some(budget),
                epsilon: ionspin::budget::DEFAULT_EPSILON,
                validity_threshold: ionspin::coupling::DEFAULT_VALIDITY_THRESHOLD,
                trap: TrapSection { omega_com_hz, ..TrapSection::default() },
                graph: GraphSpec::Chain { n: nmin.max(2), periodic: false, j_hz: 1.0 },
                solver: solver(starts),
                sensitivity: None,
                scaling: Some(ScalingSection { family, n_min: nmin, n_max: nmax }),
            };
            let study = match out {
                Some(_) => pipeline::run_scaling(&cfg)?,
                None => scaling_study(&pipeline::scaling_config(&cfg)?).stage("scaling")?,
            };
            print_table(SCALING_HEADER, &pipeline::scaling_rows(&study))?;
            match study.exponent {
                Some(e) => println!("exponent = {}", fmt_f64(e)),
                None => println!("exponent = none"),
            }
            if let Some(e) = study.exponent_reduced {
                println!("exponent_reduced = {}", fmt_f64(e));
            }
        }
        Command::Sensitivity { graph, fs, budget, delta, trials, seed, starts, trap } => {
            let g = GraphSpec::parse(&graph, 1.0)?.build().stage("graph")?;
            let cfg = trap.section().build(g.n()).stage("trap")?;
            let (_, modes) = solve_trap(&cfg).stage("modes")?;
            let sched = detuning_schedule(&modes, fs).stage("schedule")?;
            let f = response_tensor(&modes, &sched).stage("response")?;
            let solve = SolveConfig {
                n_starts: starts,
                rng_seed: seed,
                mode: SolveMode::FixedBudget { budget: hz_to_rad(budget) },
                ..SolveConfig::default()
            };
            let res = solve_rabi(&g, &f, &solve).stage("solve")?;
            let report = trap_sensitivity(&res.omega, &cfg, &sched, delta, trials, seed).stage("sensitivity")?;
            print!("{report}");
        }
        Command::Dynamics { j, jy, t, samples, initial, trotter } => {
            let jx = read_coupling(&j)?;
            let n = jx.n();
            let mut terms = vec![InteractionTerm::new(Axis::X, jx)];
            if let Some(p) = jy {
                terms.push(InteractionTerm::new(Axis::Y, read_coupling(&p)?));
            }
            let bits = match initial {
                None => 0,
                Some(s) => parse_bits(&s, n)?,
            };
            let psi = SpinState::basis(n, bits).stage("dynamics")?;
            let mut header = vec!["t_s".to_string()];
            header.extend((0..n).map(|i| format!("z_{i}")));
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            let mut rows = Vec::with_capacity(samples + 1);
            for k in 0..=samples {
                let tk = if samples == 0 { t } else { t * k as f64 / samples as f64 };
                let s = match trotter {
                    Some(steps) => trotter_evolve(&terms, &psi, tk, steps),
                    None => evolve_exact(&terms, &psi, tk),
                }
                .stage("dynamics")?;
                let mut row = vec![fmt_f64(tk)];
                row.extend((0..n).map(|q| fmt_f64(s.expect_pauli(&[(q, Axis::Z)]))));
                rows.push(row);
            }
            print_table(&header, &rows)?;
        }
        Command::Groundstate { j } => {
            let jm = read_coupling(&j)?;
            let gs = ground_state(&jm).stage("groundstate")?;
            println!("energy_hz = {}", fmt_f64(rad_to_hz(gs.energy)));
            println!("degeneracy = {}", gs.configurations.len());
            for c in &gs.configurations {
                let s: String = c.iter().map(|x| if *x > 0 { '+' } else { '-' }).collect();
                println!("{s}");
            }
        }
        Command::Plotdata { run, out } => {
            for p in pipeline::emit_plotdata(&run, &out)? {
                println!("{}", p.display());
            }
        }
        Command::Run { config } => {
            let cfg = RunConfig::from_file(&config)?;
            let s = pipeline::run_design(&cfg)?;
            report_design(&cfg.output, &s);
            if cfg.scaling.is_some() {
                let study = pipeline::run_scaling(&cfg)?;
                match study.exponent {
                    Some(e) => println!("exponent = {}", fmt_f64(e)),
                    None => println!("exponent = none"),
                }
            }
        }
    }
    Ok(())
}

fn read_coupling(path: &Path) -> Result<CouplingMatrix, CliError> {
    let m = io::read_matrix_hz(path).stage("read")?;
    CouplingMatrix::from_matrix(m).stage("read")
}

fn parse_bits(s: &str, n: usize) -> Result<usize, CliError> {
    if s.len() != n || !s.chars().all(|c| c == '0' || c == '1') {
        return Err(CliError::Config(format!("initial state must be {n} characters of 0/1, got `{s}`")));
    }
    Ok(s.chars().enumerate().filter(|(_, c)| *c == '1').map(|(q, _)| 1usize << q).sum())
}

fn report_design(out: &Path, s: &pipeline::DesignSummary) {
    println!("wrote {}", out.display());
    println!("n = {}", s.n);
    println!("relative_residual = {}", fmt_f64(s.relative_residual));
    if let Some(c) = s.attained_scale_hz {
        println!("attained_scale_hz = {}", fmt_f64(c));
    }
    println!("max_validity_ratio = {}", fmt_f64(s.max_validity_ratio));
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => {
            let _ = std::io::stdout().flush();
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
