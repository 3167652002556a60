//! Full-dynamics efficiency maps P^a(T) and P^b(T) on a coarse grid, with
//! their maxima.
//!
//! ```bash
//! cargo run --release --example bloch_efficiency_map
//! ```

use scrap::dynamics::IntegratorConfig;
use scrap::landscape::{bloch_measures, GridSpec};
use scrap::model::default_pulse_params;

fn main() -> scrap::Result<()> {
    let pulse = default_pulse_params();
    let probe = pulse.t_p + 3.0 * pulse.sigma_p;
    // 21x21 keeps this example quick; the CLI preset runs the full 121x121
    let grid = GridSpec { n_tau: 21, n_sigma: 21, ..GridSpec::paper_default() };
    let cfg = IntegratorConfig::default();

    let (pa, pb) = bloch_measures(&grid, &pulse, 0.0, probe, &cfg)?;
    let a = pa.argmax().unwrap();
    let b = pb.argmax().unwrap();
    println!("P^a argmax: ({:+.3}, {:.3})  value {:.5}", a.tau, a.sigma, a.value);
    println!("P^b argmax: ({:+.3}, {:.3})  value {:.5}", b.tau, b.sigma, b.value);

    println!("\nP^a map (rows tau asc, cols sigma asc):");
    for i in 0..grid.n_tau {
        let row: String = (0..grid.n_sigma)
            .map(|j| match pa.values[i][j] {
                Some(v) if v > 0.99 => '#',
                Some(v) if v > 0.9 => '*',
                Some(v) if v > 0.5 => '+',
                Some(_) => '.',
                None => ' ',
            })
            .collect();
        println!("  {row}");
    }
    Ok(())
}
