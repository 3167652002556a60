//! Stability of the optimal chirp against the perturbation parameters: scan
//! one parameter, re-solve the extremal per value, and find the interval
//! where a single pulse shape serves every position.
//!
//! ```bash
//! cargo run --release --example stability_maps
//! ```

use scrap::dynamics::IntegratorConfig;
use scrap::inhom::{stability_map, SpaceTimePerturbation, StabilityAxis, StabilityScan};
use scrap::pmp::ShootingConfig;

fn main() -> scrap::Result<()> {
    let operating = SpaceTimePerturbation {
        amplitude: 0.05,
        temporal_frequency: 20.0,
        spatial_wavevector: 10.0,
        t_start: 0.0,
        t_end: 100.0,
        z_min: 0.0,
        z_max: 1.0,
    };
    let shooting = ShootingConfig::default();
    let integrator = IntegratorConfig::default();
    // seed on the oscillating branch so the chirp is nontrivial
    let t = operating.t_end - operating.t_start;
    let base_guess = vec![
        -std::f64::consts::PI / t,
        3.0f64.sqrt() * std::f64::consts::PI / t,
        0.0,
    ];

    for (axis, lo, hi) in [
        (StabilityAxis::Amplitude, 0.0, 0.25),
        (StabilityAxis::SpatialWavevector, 0.0, 20.0),
        (StabilityAxis::TemporalFrequency, 0.0, 40.0),
    ] {
        let scan = StabilityScan {
            axis,
            param_min: lo,
            param_max: hi,
            n_param: 9,
            n_z: 9,
            probe_fraction: 0.4,
            threshold: 0.05,
            operating,
            base_guess: base_guess.clone(),
            shooting: &shooting,
            integrator: &integrator,
        };
        let map = stability_map(&scan)?;
        println!(
            "axis {}: acceptance interval {:?} (threshold {}, probe t = {})",
            axis.label(),
            map.acceptance,
            map.threshold,
            map.probe_time
        );
        for (i, p) in map.param_axis.iter().enumerate() {
            let row = &map.values[i];
            let spread = match (
                row.iter().flatten().cloned().reduce(f64::min),
                row.iter().flatten().cloned().reduce(f64::max),
            ) {
                (Some(lo), Some(hi)) => hi - lo,
                _ => f64::NAN,
            };
            println!("  {} = {:7.3}  cross-z spread = {:.3e}", axis.label(), p, spread);
        }
    }
    Ok(())
}
