//! Map the adiabatic transfer efficiency over the Stark-pulse parameters and
//! locate the critical points of the landscape.
//!
//! ```bash
//! cargo run --example adiabatic_landscape
//! ```

use scrap::landscape::{
    adiabaticity_map, critical_points, efficiency_map, GridSpec, Measure,
};
use scrap::dynamics::IntegratorConfig;
use scrap::model::default_pulse_params;

fn main() -> scrap::Result<()> {
    let pulse = default_pulse_params();
    let probe = pulse.t_p + 3.0 * pulse.sigma_p;
    let grid = GridSpec { n_tau: 31, n_sigma: 31, ..GridSpec::paper_default() };

    let p2 = efficiency_map(Measure::AdiabaticP2, &grid, &pulse, 0.0, probe, &IntegratorConfig::default())?;
    let am = p2.argmax().unwrap();
    println!("adiabatic P2 map: best cell ({:.3}, {:.3}) -> {:.4}", am.tau, am.sigma, am.value);

    let ad = adiabaticity_map(probe, &grid, &pulse)?;
    // crude sketch of the adiabaticity ridge
    println!("\nAD(T) map, log10 scale (rows tau, cols sigma):");
    for i in (0..grid.n_tau).step_by(3) {
        let row: String = (0..grid.n_sigma)
            .step_by(3)
            .map(|j| match ad.values[i][j] {
                Some(v) if v > 1.0 => '#',
                Some(v) if v > 0.05 => '+',
                Some(_) => '.',
                None => ' ',
            })
            .collect();
        println!("  {row}");
    }

    let points = critical_points(probe, &pulse, (-0.5, 1.0), (0.0, 6.0))?;
    println!("\ncritical points of the adiabatic landscape:");
    for p in points {
        println!("  (tau, sigma) = ({:+.4}, {:.4})  [{:?}]", p.tau, p.sigma, p.kind);
    }
    Ok(())
}
