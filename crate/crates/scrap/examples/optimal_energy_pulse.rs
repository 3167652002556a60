//! Minimal-energy pole-to-pole transfer: shoot on the Pontryagin extremal
//! system and inspect the realized pulses and conserved quantities.
//!
//! ```bash
//! cargo run --example optimal_energy_pulse
//! ```

use scrap::dynamics::{conservation_report, IntegratorConfig};
use scrap::pmp::{solve_shooting_ladder, CostFunctional, ShootingConfig, ShootingProblem};

fn main() -> scrap::Result<()> {
    let problem = ShootingProblem::pole_transfer((0.0, 100.0), CostFunctional::Energy);
    let out = solve_shooting_ladder(
        &problem,
        &ShootingConfig::default(),
        &IntegratorConfig::default(),
        1001,
    )?;

    println!(
        "converged from guess #{} in {} iterations, endpoint residual {:.2e}",
        out.guess_index, out.iterations, out.residual
    );
    println!("initial costate: {:?}", out.unknowns);

    let ex = &out.extremal;
    let l0 = ex.angular_momentum(0);
    println!("l(0) = ({:+.5}, {:+.5}, {:+.5})", l0[0], l0[1], l0[2]);
    println!("H along the extremal: {:.6} (constant)", ex.hamiltonian[0]);

    println!("\nrealized controls:");
    for i in (0..ex.times.len()).step_by(100) {
        let c = &ex.controls[i];
        println!(
            "  t = {:5.1}  delta* = {:+.5}  omega* = {:+.5}",
            ex.times[i], c.delta, c.omega
        );
    }

    let rep = conservation_report(&ex.to_trajectory());
    println!("\nconservation: {rep:?}");
    Ok(())
}
