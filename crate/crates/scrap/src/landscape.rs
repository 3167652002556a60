//! Efficiency and adiabaticity landscapes over the reduced Stark-pulse
//! parameters (tau, sigma), plus the analytic critical-point curves of the
//! adiabatic efficiency and their intersections.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::dynamics::{solve_ivp, IntegratorConfig};
use crate::error::{Error, Result};
use crate::model::{
    self, BlochVector, ControlSample, PulseParams, ReducedCoords, SQRT_2PI,
};

/// Which scalar each map cell holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Measure {
    /// cos^2 of the mixing angle at the probe time (adiabatic approximation).
    #[serde(rename = "adiabatic-P2")]
    AdiabaticP2,
    /// (1 + r3(T))/2 from the full Bloch dynamics.
    #[serde(rename = "full-Pa")]
    FullPa,
    /// Time-integrated target population up to T, normalized by the window.
    #[serde(rename = "full-Pb")]
    FullPb,
    /// Adiabaticity function at the probe time.
    #[serde(rename = "AD")]
    Adiabaticity,
}

/// Uniform rectangular grid over the reduced coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub tau_min: f64,
    pub tau_max: f64,
    pub n_tau: usize,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub n_sigma: usize,
}

impl GridSpec {
    /// Default window covering the published maps; the sigma floor excludes
    /// the degenerate zero-width axis.
    pub fn paper_default() -> Self {
        GridSpec {
            tau_min: -0.5,
            tau_max: 1.0,
            n_tau: 121,
            sigma_min: 0.05,
            sigma_max: 6.0,
            n_sigma: 121,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_tau == 0 || self.n_sigma == 0 {
            return Err(Error::InvalidParams("empty grid".into()));
        }
        if !(self.tau_max >= self.tau_min && self.sigma_max >= self.sigma_min) {
            return Err(Error::InvalidParams("grid bounds out of order".into()));
        }
        if self.sigma_min <= 0.0 {
            return Err(Error::InvalidParams("sigma_min must be > 0 (degenerate width)".into()));
        }
        Ok(())
    }

    pub fn tau_axis(&self) -> Vec<f64> {
        axis(self.tau_min, self.tau_max, self.n_tau)
    }

    pub fn sigma_axis(&self) -> Vec<f64> {
        axis(self.sigma_min, self.sigma_max, self.n_sigma)
    }
}

fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// 2-D scalar field over the (tau, sigma) rectangle. `values[i][j]` belongs to
/// `tau_axis[i]`, `sigma_axis[j]`; singular cells hold `None`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridMap {
    pub measure: Measure,
    pub probe_time: f64,
    pub tau_axis: Vec<f64>,
    pub sigma_axis: Vec<f64>,
    pub values: Vec<Vec<Option<f64>>>,
}

/// Grid argmax plus a local quadratic refinement.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ArgMax {
    pub tau: f64,
    pub sigma: f64,
    pub value: f64,
    pub tau_refined: f64,
    pub sigma_refined: f64,
}

impl GridMap {
    pub fn missing_cells(&self) -> usize {
        self.values.iter().flatten().filter(|v| v.is_none()).count()
    }

    /// Best cell (ties broken by smaller sigma, then smaller tau) with a
    /// one-dimensional quadratic refinement along each axis.
    pub fn argmax(&self) -> Option<ArgMax> {
        let mut best: Option<(usize, usize, f64)> = None;
        for (i, row) in self.values.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let Some(v) = *v else { continue };
                let better = match best {
                    None => true,
                    Some((bi, bj, bv)) => {
                        v > bv
                            || (v == bv
                                && (self.sigma_axis[j] < self.sigma_axis[bj]
                                    || (j == bj && self.tau_axis[i] < self.tau_axis[bi])))
                    }
                };
                if better {
                    best = Some((i, j, v));
                }
            }
        }
        let (i, j, value) = best?;
        let refine = |axis: &[f64], idx: usize, get: &dyn Fn(usize) -> Option<f64>| -> f64 {
            if idx == 0 || idx + 1 >= axis.len() {
                return axis[idx];
            }
            match (get(idx - 1), get(idx + 1)) {
                (Some(fm), Some(fp)) => {
                    let denom = fm - 2.0 * value + fp;
                    if denom.abs() < 1e-300 {
                        return axis[idx];
                    }
                    let delta = 0.5 * (fm - fp) / denom;
                    let h = axis[idx + 1] - axis[idx];
                    axis[idx] + delta.clamp(-0.5, 0.5) * h
                }
                _ => axis[idx],
            }
        };
        Some(ArgMax {
            tau: self.tau_axis[i],
            sigma: self.sigma_axis[j],
            value,
            tau_refined: refine(&self.tau_axis, i, &|k| self.values[k][j]),
            sigma_refined: refine(&self.sigma_axis, j, &|k| self.values[i][k]),
        })
    }

    /// CSV matrix with sigma values across the header row and tau values
    /// leading each data row; missing cells are left empty.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "tau\\sigma")?;
        for s in &self.sigma_axis {
            write!(w, ",{}", s)?;
        }
        writeln!(w)?;
        for (i, tau) in self.tau_axis.iter().enumerate() {
            write!(w, "{}", tau)?;
            for v in &self.values[i] {
                match v {
                    Some(x) => write!(w, ",{}", x)?,
                    None => write!(w, ",")?,
                }
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Target population at the probe time in the adiabatic approximation,
/// `cos^2(theta(T))`.
pub fn p2_adiabatic(probe_time: f64, rc: ReducedCoords, pump: &PulseParams) -> Result<f64> {
    let p = pump.with_reduced(rc);
    let s = ControlSample::new(model::gaussian_stark(probe_time, &p)?, model::gaussian_pump(probe_time, &p));
    let theta = model::mixing_angle(&s)?;
    Ok(theta.cos().powi(2))
}

/// Stark centres that put the pulse pair on resonance exactly at the probe
/// time: `t_s = T -/+ sqrt(2 sigma_s^2 ln(delta0 / (sqrt(2 pi) s0 sigma_s)))`.
/// `None` when the Stark peak never reaches the static detuning.
pub fn saddle_curve_ts(sigma_s: f64, probe_time: f64, p: &PulseParams) -> Result<Option<(f64, f64)>> {
    if sigma_s <= 0.0 {
        return Err(Error::DegenerateWidth);
    }
    let arg = p.delta0 / (SQRT_2PI * p.s0 * sigma_s);
    if arg < 1.0 {
        return Ok(None);
    }
    let off = (2.0 * sigma_s * sigma_s * arg.ln()).sqrt();
    Ok(Some((probe_time - off, probe_time + off)))
}

/// Widths stationary in the pulse-width direction: `sigma_s = +/-(T - t_s)`;
/// only the non-negative branch is physical.
pub fn saddle_curve_sigma(t_s: f64, probe_time: f64) -> (f64, f64) {
    let w = (probe_time - t_s).abs();
    (w, -w)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CriticalPointKind {
    Intersection,
    RejectedDegenerate,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub tau: f64,
    pub sigma: f64,
    pub kind: CriticalPointKind,
}

/// Intersections of the two saddle-curve families inside the given reduced
/// window, located by bisection on the difference of the curves.
///
/// The zero-width point at `tau = (T - t_p)/t_p` is always reported (when
/// inside the window) and flagged as degenerate.
pub fn critical_points(
    probe_time: f64,
    pump: &PulseParams,
    tau_range: (f64, f64),
    sigma_range: (f64, f64),
) -> Result<Vec<CriticalPoint>> {
    let mut out = Vec::new();
    let tau_probe = (probe_time - pump.t_p) / pump.t_p;
    let in_window = |tau: f64, sigma: f64| {
        tau >= tau_range.0 && tau <= tau_range.1 && sigma >= sigma_range.0 && sigma <= sigma_range.1
    };
    if in_window(tau_probe, 0.0) {
        out.push(CriticalPoint {
            tau: tau_probe,
            sigma: 0.0,
            kind: CriticalPointKind::RejectedDegenerate,
        });
    }

    // On the resonance curves the centre offset is off(sigma_s); the
    // width-stationary family demands offset = sigma_s. Bracket their
    // difference over (0, sigma_bound) where the resonance branch exists.
    let sigma_bound = pump.delta0 / (SQRT_2PI * pump.s0);
    let diff = |ss: f64| -> f64 {
        let arg = pump.delta0 / (SQRT_2PI * pump.s0 * ss);
        if arg <= 1.0 {
            return -ss;
        }
        (2.0 * ss * ss * arg.ln()).sqrt() - ss
    };
    let mut lo = sigma_bound * 1e-6;
    let mut hi = sigma_bound * (1.0 - 1e-9);
    if diff(lo) > 0.0 && diff(hi) < 0.0 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if diff(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let ss = 0.5 * (lo + hi);
        let sigma = ss / pump.sigma_p;
        for t_s in [probe_time - ss, probe_time + ss] {
            let tau = (t_s - pump.t_p) / pump.t_p;
            if in_window(tau, sigma) {
                out.push(CriticalPoint { tau, sigma, kind: CriticalPointKind::Intersection });
            }
        }
    }
    out.sort_by(|a, b| (a.sigma, a.tau).partial_cmp(&(b.sigma, b.tau)).unwrap());
    Ok(out)
}

/// Both full-dynamics efficiency measures for one cell, from a single Bloch
/// integration augmented with the running target-population integral.
fn full_measures_cell(
    rc: ReducedCoords,
    pump: &PulseParams,
    t_i: f64,
    probe_time: f64,
    cfg: &IntegratorConfig,
) -> Result<(f64, f64)> {
    let p = pump.with_reduced(rc);
    let rhs = |t: f64, y: &[f64; 4]| -> Result<[f64; 4]> {
        let s = ControlSample::new(model::gaussian_stark(t, &p)?, model::gaussian_pump(t, &p));
        let r = [y[0], y[1], y[2]];
        let dr = model::cross(&model::bloch_axis(&s), &r);
        Ok([dr[0], dr[1], dr[2], 0.5 * (1.0 + y[2])])
    };
    let start = BlochVector::SOUTH;
    let sol = solve_ivp(rhs, [start.r1, start.r2, start.r3, 0.0], t_i, probe_time, cfg)?;
    let end = sol.final_state();
    let pa = 0.5 * (1.0 + end[2]);
    let pb = end[3] / (probe_time - t_i);
    Ok((clamp_probability(pa), clamp_probability(pb)))
}

fn clamp_probability(p: f64) -> f64 {
    // integrator drift can push a hair past [0, 1]
    p.clamp(0.0, 1.0)
}

/// One map per requested measure over the grid. Cells are independent jobs;
/// assembly is by cell index, so outputs are deterministic.
pub fn efficiency_map(
    measure: Measure,
    grid: &GridSpec,
    pump: &PulseParams,
    t_i: f64,
    probe_time: f64,
    cfg: &IntegratorConfig,
) -> Result<GridMap> {
    match measure {
        Measure::FullPa => Ok(bloch_measures(grid, pump, t_i, probe_time, cfg)?.0),
        Measure::FullPb => Ok(bloch_measures(grid, pump, t_i, probe_time, cfg)?.1),
        Measure::AdiabaticP2 => adiabatic_map(grid, pump, probe_time),
        Measure::Adiabaticity => adiabaticity_map(probe_time, grid, pump),
    }
}

/// The P^a and P^b maps from one sweep of full Bloch integrations.
pub fn bloch_measures(
    grid: &GridSpec,
    pump: &PulseParams,
    t_i: f64,
    probe_time: f64,
    cfg: &IntegratorConfig,
) -> Result<(GridMap, GridMap)> {
    grid.validate()?;
    let taus = grid.tau_axis();
    let sigmas = grid.sigma_axis();
    let cells: Vec<(usize, usize)> =
        (0..taus.len()).flat_map(|i| (0..sigmas.len()).map(move |j| (i, j))).collect();
    let results: Vec<Option<(f64, f64)>> = cells
        .par_iter()
        .map(|&(i, j)| {
            full_measures_cell(
                ReducedCoords { tau: taus[i], sigma: sigmas[j] },
                pump,
                t_i,
                probe_time,
                cfg,
            )
            .ok()
        })
        .collect();
    let mut pa = vec![vec![None; sigmas.len()]; taus.len()];
    let mut pb = vec![vec![None; sigmas.len()]; taus.len()];
    for (&(i, j), r) in cells.iter().zip(results) {
        if let Some((a, b)) = r {
            pa[i][j] = Some(a);
            pb[i][j] = Some(b);
        }
    }
    let mk = |measure, values| GridMap {
        measure,
        probe_time,
        tau_axis: taus.clone(),
        sigma_axis: sigmas.clone(),
        values,
    };
    Ok((mk(Measure::FullPa, pa), mk(Measure::FullPb, pb)))
}

fn adiabatic_map(grid: &GridSpec, pump: &PulseParams, probe_time: f64) -> Result<GridMap> {
    grid.validate()?;
    let taus = grid.tau_axis();
    let sigmas = grid.sigma_axis();
    let values: Vec<Vec<Option<f64>>> = taus
        .par_iter()
        .map(|&tau| {
            sigmas
                .iter()
                .map(|&sigma| p2_adiabatic(probe_time, ReducedCoords { tau, sigma }, pump).ok())
                .collect()
        })
        .collect();
    Ok(GridMap { measure: Measure::AdiabaticP2, probe_time, tau_axis: taus, sigma_axis: sigmas, values })
}

/// Adiabaticity function at the probe time per cell, from analytic pulse
/// derivatives.
pub fn adiabaticity_map(probe_time: f64, grid: &GridSpec, pump: &PulseParams) -> Result<GridMap> {
    grid.validate()?;
    let taus = grid.tau_axis();
    let sigmas = grid.sigma_axis();
    let values: Vec<Vec<Option<f64>>> = taus
        .par_iter()
        .map(|&tau| {
            sigmas
                .iter()
                .map(|&sigma| {
                    let p = pump.with_reduced(ReducedCoords { tau, sigma });
                    let s = ControlSample::with_derivatives(
                        model::gaussian_stark(probe_time, &p).ok()?,
                        model::gaussian_pump(probe_time, &p),
                        model::gaussian_stark_deriv(probe_time, &p).ok()?,
                        model::gaussian_pump_deriv(probe_time, &p),
                    );
                    model::adiabaticity(&s).ok()
                })
                .collect()
        })
        .collect();
    Ok(GridMap {
        measure: Measure::Adiabaticity,
        probe_time,
        tau_axis: taus,
        sigma_axis: sigmas,
        values,
    })
}

/// Largest adiabaticity value along the pulse pair over `[t_i, T]`, sampled
/// densely on the analytic profiles.
pub fn max_adiabaticity(rc: ReducedCoords, pump: &PulseParams, t_i: f64, probe_time: f64) -> Result<f64> {
    let p = pump.with_reduced(rc);
    let n = 4000;
    let mut max_ad = 0.0f64;
    for k in 0..=n {
        let t = t_i + (probe_time - t_i) * k as f64 / n as f64;
        let s = ControlSample::with_derivatives(
            model::gaussian_stark(t, &p)?,
            model::gaussian_pump(t, &p),
            model::gaussian_stark_deriv(t, &p)?,
            model::gaussian_pump_deriv(t, &p),
        );
        match model::adiabaticity(&s) {
            Ok(ad) => max_ad = max_ad.max(ad),
            Err(Error::ConicalIntersection) => return Ok(f64::INFINITY),
            Err(e) => return Err(e),
        }
    }
    Ok(max_ad)
}
