//! Designs the 5×5 square and 4×3-cell Kagome lattices under a 1 MHz budget
//! and prints the attained nearest-neighbor couplings.

use std::f64::consts::TAU;
use std::time::Instant;

use ionspin::coupling::{detuning_schedule, response_tensor, validity_check};
use ionspin::crystal::{solve_trap, TrapConfig};
use ionspin::graphs;
use ionspin::inverse::{solve_rabi, SolveConfig, SolveMode};

fn main() -> ionspin::Result<()> {
    let cases = [
        ("square 5x5", graphs::square_lattice_pbc(5, 5, 1.0)?, 0.1),
        ("kagome 4x3", graphs::kagome_pbc(4, 3, 1.0)?, 0.03),
    ];
    for (label, graph, f_s) in cases {
        let t = Instant::now();
        let trap = TrapConfig::with_default_anisotropy(graph.n(), TAU * 5e6)?;
        let (_, modes) = solve_trap(&trap)?;
        let sched = detuning_schedule(&modes, f_s)?;
        let f = response_tensor(&modes, &sched)?;
        let cfg = SolveConfig { mode: SolveMode::FixedBudget { budget: TAU * 1e6 }, ..Default::default() };
        let res = solve_rabi(&graph, &f, &cfg)?;
        let validity = validity_check(&res.omega, &sched, &modes, 0.1)?;
        println!(
            "{label}: J_nn = {:.2} Hz, residual {:.2e}, best start {}, max adiabaticity ratio {:.3}, {:.1?}",
            res.attained_scale.unwrap_or(0.0) / TAU,
            res.relative_residual,
            res.best_start,
            validity.max_ratio,
            t.elapsed()
        );
        println!("  start objectives: {:?}", res.start_objectives);
    }
    Ok(())
}
