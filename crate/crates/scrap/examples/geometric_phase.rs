//! Geometric phases of control-plane loops: circles around the conical
//! intersection, loops that avoid it, and a Gaussian population-return pair
//! that encircles it.
//!
//! ```bash
//! cargo run --example geometric_phase
//! ```

use std::f64::consts::TAU;

use scrap::geophase::{geometric_phase, winding_number, ControlPath};

fn main() -> scrap::Result<()> {
    for r in [0.1, 1.0, 10.0] {
        let path = ControlPath::circle(r, 720);
        let rep = geometric_phase(&path)?;
        println!("circle r = {r:4}: winding {}, gamma = {:.12}", rep.winding.unwrap(), rep.gamma);
    }

    // loop confined to the delta > 0 half-plane: no enclosure, zero phase
    let confined = ControlPath::from_fn(|t| (3.0 + t.cos(), t.sin()), 0.0, TAU, 128)?;
    let rep = geometric_phase(&confined)?;
    println!("confined loop: winding {}, gamma = {:.3e}", winding_number(&confined)?, rep.gamma);

    // Gaussian return pair around the conical intersection
    let cpr = ControlPath::gaussian_cpr_pair();
    let rep = geometric_phase(&cpr)?;
    println!(
        "gaussian CPR pair: closed = {}, winding {}, gamma = {:.9} (pi = {:.9})",
        rep.closed,
        rep.winding.unwrap(),
        rep.gamma,
        std::f64::consts::PI
    );

    // open pole-to-pole arc through omega > 0: half the full-loop phase
    let half = ControlPath::from_fn(|t| (t.sin(), t.cos()), 0.0, std::f64::consts::PI, 128)?;
    let rep = geometric_phase(&half)?;
    println!("open half loop: gamma = {:.9} ({} warning(s))", rep.gamma, rep.warnings.len());
    Ok(())
}
