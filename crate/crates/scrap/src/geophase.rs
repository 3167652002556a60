//! Geometric phase along paths in the control plane: Berry vector potential,
//! winding number about the conical intersection at the origin, and the
//! adiabaticity-integral identity for constant-radius control paths.
//!
//! All phases are reported as real numbers; the adiabatic state of a real
//! two-level Hamiltonian has a purely imaginary Berry connection, and the
//! physical phase is its magnitude.

use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::model::ControlSample;
use crate::pmp::Extremal;

/// Sampled path of the control pair (delta(t), omega(t)).
#[derive(Clone, Debug, PartialEq)]
pub struct ControlPath {
    pub times: Vec<f64>,
    pub samples: Vec<(f64, f64)>,
    pub closure_tolerance: f64,
}

pub const DEFAULT_CLOSURE_TOLERANCE: f64 = 1e-6;

/// Refinement target: adjacent samples should subtend less than this angle at
/// the origin.
const REFINE_STEP: f64 = PI / 8.0;

impl ControlPath {
    pub fn new(times: Vec<f64>, samples: Vec<(f64, f64)>) -> Result<Self> {
        if times.len() != samples.len() || times.len() < 2 {
            return Err(Error::InvalidParams("path needs at least two samples".into()));
        }
        Ok(ControlPath { times, samples, closure_tolerance: DEFAULT_CLOSURE_TOLERANCE })
    }

    /// Closed when the endpoints coincide within the closure tolerance
    /// (L1 distance in the control plane, scaled to the path extent).
    pub fn is_closed(&self) -> bool {
        let (d0, w0) = self.samples[0];
        let (d1, w1) = *self.samples.last().unwrap();
        let scale = self
            .samples
            .iter()
            .fold(0.0f64, |m, &(d, w)| m.max(d.abs()).max(w.abs()))
            .max(1e-300);
        ((d1 - d0).abs() + (w1 - w0).abs()) / scale < self.closure_tolerance
    }

    /// Sample a parameterized loop, bisecting adaptively until adjacent
    /// samples subtend less than pi/8 at the origin.
    pub fn from_fn<F: Fn(f64) -> (f64, f64)>(f: F, t_i: f64, t_f: f64, n0: usize) -> Result<Self> {
        let n0 = n0.max(8);
        let mut times: Vec<f64> = (0..=n0)
            .map(|i| t_i + (t_f - t_i) * i as f64 / n0 as f64)
            .collect();
        for _ in 0..24 {
            let samples: Vec<(f64, f64)> = times.iter().map(|&t| f(t)).collect();
            let mut refined = Vec::with_capacity(times.len() * 2);
            let mut any = false;
            for i in 0..times.len() - 1 {
                refined.push(times[i]);
                if angular_step(samples[i], samples[i + 1])? >= REFINE_STEP {
                    refined.push(0.5 * (times[i] + times[i + 1]));
                    any = true;
                }
            }
            refined.push(*times.last().unwrap());
            times = refined;
            if !any {
                break;
            }
        }
        let samples: Vec<(f64, f64)> = times.iter().map(|&t| f(t)).collect();
        ControlPath::new(times, samples)
    }

    /// Circle of radius r about the conical intersection, one positive turn.
    pub fn circle(radius: f64, n: usize) -> Self {
        let n = n.max(16);
        let times: Vec<f64> = (0..=n).map(|i| TAU * i as f64 / n as f64).collect();
        let samples = times.iter().map(|&t| (radius * t.cos(), radius * t.sin())).collect();
        ControlPath { times, samples, closure_tolerance: DEFAULT_CLOSURE_TOLERANCE }
    }

    /// Gaussian pulse pair arranged as a population-return loop that encircles
    /// the conical intersection: the Stark chirp crosses resonance twice, and
    /// the pump (offset so that it swings through zero, as polarization
    /// chirping allows) has opposite signs at the two crossings. Winds once,
    /// positively.
    pub fn gaussian_cpr_pair() -> Self {
        let stark = |t: f64| -1.0 + 4.0 * (-(t - 55.0f64).powi(2) / (2.0 * 144.0)).exp();
        let pump = |t: f64| 0.25 - 6.0 * (-(t - 40.0f64).powi(2) / (2.0 * 100.0)).exp();
        ControlPath::from_fn(|t| (stark(t), pump(t)), -60.0, 220.0, 512)
            .expect("fixed generator avoids the origin")
    }

    /// Realized control path of an extremal.
    pub fn from_extremal(ex: &Extremal) -> Self {
        ControlPath {
            times: ex.times.clone(),
            samples: ex.controls.iter().map(|c| (c.delta, c.omega)).collect(),
            closure_tolerance: DEFAULT_CLOSURE_TOLERANCE,
        }
    }

    /// CSV rows `t,delta,omega`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,delta,omega")?;
        for (t, (d, o)) in self.times.iter().zip(&self.samples) {
            writeln!(w, "{},{},{}", t, d, o)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut times = Vec::new();
        let mut samples = Vec::new();
        for (ln, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || (ln == 0 && line.starts_with('t')) {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 3 {
                return Err(Error::InvalidParams(format!("path csv line {}: want t,delta,omega", ln + 1)));
            }
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidParams(format!("path csv line {}: {e}", ln + 1)))
            };
            times.push(parse(cols[0])?);
            samples.push((parse(cols[1])?, parse(cols[2])?));
        }
        ControlPath::new(times, samples)
    }
}

/// Berry vector potential of the adiabatic state, reported as the real pair
/// `(-omega, delta) / (2 (delta^2 + omega^2))`; the overall factor i is
/// dropped.
pub fn vector_potential(s: &ControlSample) -> Result<[f64; 2]> {
    let r2 = s.delta * s.delta + s.omega * s.omega;
    if r2 == 0.0 {
        return Err(Error::ConicalIntersection);
    }
    Ok([-s.omega / (2.0 * r2), s.delta / (2.0 * r2)])
}

fn angular_step(a: (f64, f64), b: (f64, f64)) -> Result<f64> {
    if a == (0.0, 0.0) || b == (0.0, 0.0) {
        return Err(Error::ConicalIntersection);
    }
    let pa = a.1.atan2(a.0);
    let pb = b.1.atan2(b.0);
    let mut d = pb - pa;
    while d > PI {
        d -= TAU;
    }
    while d < -PI {
        d += TAU;
    }
    Ok(d.abs())
}

/// Sum of unwrapped polar-angle increments along the path. Errors when a
/// sample sits on the origin or a segment subtends >= pi (ambiguous branch).
fn total_sweep(path: &ControlPath) -> Result<f64> {
    let mut total = 0.0;
    for (i, pair) in path.samples.windows(2).enumerate() {
        let (a, b) = (pair[0], pair[1]);
        if a == (0.0, 0.0) || b == (0.0, 0.0) {
            return Err(Error::ConicalIntersection);
        }
        let pa = a.1.atan2(a.0);
        let pb = b.1.atan2(b.0);
        let mut d = pb - pa;
        while d > PI {
            d -= TAU;
        }
        while d < -PI {
            d += TAU;
        }
        // exactly-antipodal subtension cannot be disambiguated
        if d.abs() >= PI - 1e-12 {
            return Err(Error::RefinementNeeded { segment: i, step: d.abs() });
        }
        total += d;
    }
    Ok(total)
}

/// Net turns of a closed path about the conical intersection; exact for
/// polygonal paths that avoid the origin.
pub fn winding_number(path: &ControlPath) -> Result<i64> {
    if !path.is_closed() {
        return Err(Error::NotApplicable("winding number needs a closed path".into()));
    }
    Ok((total_sweep(path)? / TAU).round() as i64)
}

/// Phase report for a control path.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PhaseReport {
    /// Net turns about the conical intersection; None for open paths.
    pub winding: Option<i64>,
    /// Geometric phase in [0, 2 pi).
    pub gamma: f64,
    pub closed: bool,
    pub warnings: Vec<String>,
}

/// Geometric phase of a control path: half the magnitude of the unwrapped
/// polar sweep, reduced mod 2 pi. Equals pi times the winding number (mod
/// 2 pi) on closed paths; open paths are reported with a warning since the
/// polar functional is then gauge-sensitive.
pub fn geometric_phase(path: &ControlPath) -> Result<PhaseReport> {
    let sweep = total_sweep(path)?;
    let closed = path.is_closed();
    let gamma = (0.5 * sweep.abs()).rem_euclid(TAU);
    let mut warnings = Vec::new();
    if !closed {
        warnings.push("path is not closed: the reported phase is the polar-angle functional, not a loop invariant".to_string());
    }
    Ok(PhaseReport {
        winding: if closed { Some((sweep / TAU).round() as i64) } else { None },
        gamma,
        closed,
        warnings,
    })
}

/// Geometric phase of a constant-radius extremal from the adiabaticity
/// integral: `gamma = rho int AD dt` with `rho = sqrt(l1^2 + l3^2)` the
/// control-path radius. Unreduced; the caller compares mod 2 pi.
///
/// Requires `delta^2 + omega^2` constant along the extremal (energy-minimal
/// controls), within 1e-6 relative.
pub fn phase_via_adiabaticity(ex: &Extremal) -> Result<f64> {
    if ex.control_radius_drift() > 1e-6 {
        return Err(Error::NotApplicable(format!(
            "control radius drifts by {:.2e}: not an energy-minimal path",
            ex.control_radius_drift()
        )));
    }
    let rho = {
        let c = &ex.controls[0];
        (c.delta * c.delta + c.omega * c.omega).sqrt()
    };
    if rho == 0.0 {
        return Ok(0.0);
    }
    // trapezoid over the extremal's own sample grid
    let mut integral = 0.0;
    let mut prev: Option<(f64, f64)> = None;
    for (t, c) in ex.times.iter().zip(&ex.controls) {
        let ad = crate::model::adiabaticity(c)?;
        if let Some((t0, ad0)) = prev {
            integral += 0.5 * (ad + ad0) * (t - t0);
        }
        prev = Some((*t, ad));
    }
    Ok(rho * integral)
}
