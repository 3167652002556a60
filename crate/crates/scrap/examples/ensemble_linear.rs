//! Robustness to a linear spatial inhomogeneity of the Stark field: solve the
//! z-integrated energy cost once, then replay the single optimal pulse pair
//! at several positions.
//!
//! ```bash
//! cargo run --example ensemble_linear
//! ```

use scrap::dynamics::IntegratorConfig;
use scrap::inhom::{per_z_trajectories, realized_field, LinearInhom, PerturbationSpec};
use scrap::model::{populations, BlochVector};
use scrap::pmp::{solve_shooting_ladder, CostFunctional, ShootingConfig, ShootingProblem};

fn main() -> scrap::Result<()> {
    let inhom = LinearInhom { k: 0.01, z_min: 0.0, z_max: 1.0 };
    let cost = CostFunctional::EnsembleLinear { inhom };
    let problem = ShootingProblem::pole_transfer((0.0, 100.0), cost);
    let icfg = IntegratorConfig::default();
    let out = solve_shooting_ladder(&problem, &ShootingConfig::default(), &icfg, 2001)?;
    println!("optimal pulse found, residual {:.2e}", out.residual);

    // one pulse pair for the whole window
    let base = realized_field(&out.extremal)?;
    let zs = [0.0, 0.5, 1.0];
    let trajs = per_z_trajectories(
        &base,
        &PerturbationSpec::Linear(inhom),
        &zs,
        BlochVector::SOUTH,
        (0.0, 100.0),
        &icfg,
        1001,
    )?;

    println!("\nper-position transfer with the shared pulse:");
    for (z, traj) in zs.iter().zip(&trajs) {
        let (_, p2) = populations(&traj.endpoint());
        println!("  z = {z:.1}  P2(tf) = {p2:.8}");
    }
    Ok(())
}
