//! Optimize only the Stark chirp while the pump keeps its Gaussian profile.
//! The stationary chirp tracks l3(t) and oscillates through many resonances,
//! a known pathology of this under-constrained problem.
//!
//! ```bash
//! cargo run --example fixed_pump_chirp
//! ```

use scrap::dynamics::{conservation_report, IntegratorConfig};
use scrap::model::default_pulse_params;
use scrap::pmp::{solve_shooting_ladder, CostFunctional, ShootingConfig, ShootingProblem};

fn main() -> scrap::Result<()> {
    let cost = CostFunctional::FixedPumpEnergy { pump: default_pulse_params() };
    let problem = ShootingProblem::pole_transfer((0.0, 100.0), cost);
    let scfg = ShootingConfig { tolerance: 1e-5, ..Default::default() };
    let out = solve_shooting_ladder(&problem, &scfg, &IntegratorConfig::default(), 2001)?;

    println!(
        "converged from guess #{} with residual {:.2e}",
        out.guess_index, out.residual
    );

    let ex = &out.extremal;
    let crossings = ex
        .controls
        .windows(2)
        .filter(|w| w[0].delta * w[1].delta < 0.0)
        .count();
    println!("stark chirp resonance crossings: {crossings}");

    // explicit time dependence through the pump profile: H drifts
    let rep = conservation_report(&ex.to_trajectory());
    println!("H drift (expected O(1)): {:.3e}", rep.h_drift.unwrap());
    println!("norm drift:              {:.3e}", rep.norm_drift);

    println!("\nchirp snapshot:");
    for i in (0..ex.times.len()).step_by(200) {
        println!("  t = {:5.1}  delta* = {:+.5}", ex.times[i], ex.controls[i].delta);
    }
    Ok(())
}
