//! Optimal pulses for the mixed cost (pulse energy plus the rotational term
//! `ddelta omega - domega delta`), which trades energy against adiabaticity.
//! The controls become states of a 10-dimensional augmented extremal system.
//!
//! ```bash
//! cargo run --example adiabatic_cost_pulse
//! ```

use scrap::dynamics::{conservation_report, IntegratorConfig};
use scrap::pmp::{solve_shooting_ladder, CostFunctional, ShootingConfig, ShootingProblem};

fn main() -> scrap::Result<()> {
    let problem = ShootingProblem::pole_transfer((0.0, 100.0), CostFunctional::MixedAdiabatic);
    let out = solve_shooting_ladder(
        &problem,
        &ShootingConfig::default(),
        &IntegratorConfig::default(),
        1001,
    )?;

    println!(
        "converged from guess #{} with residual {:.2e}",
        out.guess_index, out.residual
    );
    println!("unknowns (p0, delta0, omega0): {:?}", out.unknowns);

    let ex = &out.extremal;
    println!("\nrealized controls (delta chirps, omega stays flat):");
    for i in (0..ex.times.len()).step_by(100) {
        let c = &ex.controls[i];
        println!(
            "  t = {:5.1}  delta* = {:+.5}  omega* = {:+.5}",
            ex.times[i], c.delta, c.omega
        );
    }

    let rep = conservation_report(&ex.to_trajectory());
    println!("\nH drift: {:.3e}", rep.h_drift.unwrap());
    println!("endpoint r3: {:+.6}", ex.endpoint().r3);
    Ok(())
}
