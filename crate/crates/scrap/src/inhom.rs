//! Position- and time-dependent perturbations of the Stark field: ensemble
//! cost integrals, z-parameterized optimal fields, per-z trajectory families
//! and stability maps over the perturbation parameters.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::dynamics::{integrate_bloch, IntegratorConfig, Trajectory};
use crate::error::{Error, Result};
use crate::field::{ControlField, SampledField};
use crate::model::{BlochVector, ControlSample};
use crate::pmp::{
    solve_shooting, CostFunctional, ShootingConfig, ShootingOutcome, ShootingProblem,
};

/// Linear spatial inhomogeneity `K(z) = k (z - z_min)` scaling the Stark field.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearInhom {
    pub k: f64,
    pub z_min: f64,
    pub z_max: f64,
}

impl LinearInhom {
    pub fn validate(&self) -> Result<()> {
        let z = self.z_extent();
        if !(z > 0.0) {
            return Err(Error::InvalidParams("z window must have positive extent".into()));
        }
        if 1.0 + self.k * z <= 0.0 {
            return Err(Error::InvalidParams(
                "1 + k Z must stay positive: the field may not change sign across the window".into(),
            ));
        }
        Ok(())
    }

    pub fn z_extent(&self) -> f64 {
        self.z_max - self.z_min
    }

    pub fn gain(&self, z: f64) -> Result<f64> {
        self.check_window(z)?;
        Ok(1.0 + self.k * (z - self.z_min))
    }

    fn check_window(&self, z: f64) -> Result<()> {
        if z < self.z_min || z > self.z_max {
            return Err(Error::OutsideWindow { z, z_min: self.z_min, z_max: self.z_max });
        }
        Ok(())
    }

    /// z-integral of `(1 + K(z))^2`: the Stark-energy coefficient
    /// `((1 + k Z)^3 - 1) / (3 k)`, continuous at `k = 0` where it equals `Z`.
    pub fn energy_coefficient(&self) -> f64 {
        let z = self.z_extent();
        if (self.k * z).abs() < 1e-8 {
            // series: Z + k Z^2 + k^2 Z^3 / 3
            return z + self.k * z * z + self.k * self.k * z * z * z / 3.0;
        }
        ((1.0 + self.k * z).powi(3) - 1.0) / (3.0 * self.k)
    }
}

/// Multiplicative Stark perturbation `(1 + f(t) eps(z))` with
/// `f(t) = A cos(w t / (t_end - t_start))` and `eps(z) = cos(k (z - z_min) / Z)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimePerturbation {
    /// Amplitude A (dimensionless, bounded by the static detuning scale).
    pub amplitude: f64,
    /// Temporal frequency parameter w.
    pub temporal_frequency: f64,
    /// Spatial wavevector parameter k.
    pub spatial_wavevector: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub z_min: f64,
    pub z_max: f64,
}

impl SpaceTimePerturbation {
    pub fn validate(&self) -> Result<()> {
        if self.amplitude < 0.0 {
            return Err(Error::InvalidParams("perturbation amplitude must be >= 0".into()));
        }
        if !(self.z_extent() > 0.0) || !(self.t_end > self.t_start) {
            return Err(Error::InvalidParams("perturbation windows must have positive extent".into()));
        }
        Ok(())
    }

    pub fn z_extent(&self) -> f64 {
        self.z_max - self.z_min
    }

    pub fn temporal(&self, t: f64) -> f64 {
        self.amplitude * (self.temporal_frequency * t / (self.t_end - self.t_start)).cos()
    }

    pub fn temporal_deriv(&self, t: f64) -> f64 {
        let rate = self.temporal_frequency / (self.t_end - self.t_start);
        -self.amplitude * rate * (rate * t).sin()
    }

    pub fn spatial(&self, z: f64) -> f64 {
        (self.spatial_wavevector * (z - self.z_min) / self.z_extent()).cos()
    }

    pub fn gain(&self, t: f64, z: f64) -> Result<f64> {
        if z < self.z_min || z > self.z_max {
            return Err(Error::OutsideWindow { z, z_min: self.z_min, z_max: self.z_max });
        }
        Ok(1.0 + self.temporal(t) * self.spatial(z))
    }

    /// Closed-form z-integrals `I1 = int (1 + f eps) dz`,
    /// `I2 = int (1 + f eps)^2 dz` over the window.
    pub fn z_moments(&self, t: f64) -> (f64, f64) {
        let z = self.z_extent();
        let k = self.spatial_wavevector;
        let f = self.temporal(t);
        let s1 = sinc(k);
        let s2 = sinc(2.0 * k);
        let i1 = z + f * z * s1;
        let i2 = z + 2.0 * f * z * s1 + f * f * 0.5 * z * (1.0 + s2);
        (i1, i2)
    }

    /// Time derivative of the second z-moment.
    pub fn z_moment2_deriv(&self, t: f64) -> f64 {
        let z = self.z_extent();
        let k = self.spatial_wavevector;
        let f = self.temporal(t);
        (2.0 * z * sinc(k) + f * z * (1.0 + sinc(2.0 * k))) * self.temporal_deriv(t)
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// Either perturbation model, as selected by scenario configs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PerturbationSpec {
    Linear(LinearInhom),
    Zt(SpaceTimePerturbation),
}

/// Controls experienced at position z: the Stark field is scaled by the local
/// gain, the pump is untouched.
pub fn perturbed_controls(
    z: f64,
    t: f64,
    base: &ControlSample,
    spec: &PerturbationSpec,
) -> Result<ControlSample> {
    match spec {
        PerturbationSpec::Linear(inhom) => {
            let gain = inhom.gain(z)?;
            Ok(ControlSample {
                delta: gain * base.delta,
                omega: base.omega,
                derivatives: base.derivatives.map(|d| crate::model::ControlDerivatives {
                    ddelta_dt: gain * d.ddelta_dt,
                    domega_dt: d.domega_dt,
                }),
            })
        }
        PerturbationSpec::Zt(pert) => {
            let gain = pert.gain(t, z)?;
            let dgain = pert.temporal_deriv(t) * pert.spatial(z);
            Ok(ControlSample {
                delta: gain * base.delta,
                omega: base.omega,
                derivatives: base.derivatives.map(|d| crate::model::ControlDerivatives {
                    ddelta_dt: dgain * base.delta + gain * d.ddelta_dt,
                    domega_dt: d.domega_dt,
                }),
            })
        }
    }
}

/// The Stark-energy coefficient of the linear-ensemble cost (free-function
/// spelling of [`LinearInhom::energy_coefficient`]; the pump coefficient is
/// the window length).
pub fn ensemble_cost_coeff_linear(inhom: &LinearInhom) -> f64 {
    inhom.energy_coefficient()
}

/// Stationary fields of the z-integrated energy cost:
/// `delta* = l3 / c_delta`, `omega* = l1 / Z`.
pub fn optimal_fields_linear(l: &[f64; 3], inhom: &LinearInhom) -> ControlSample {
    ControlSample::new(l[2] / inhom.energy_coefficient(), l[0] / inhom.z_extent())
}

/// Closed-form z-moments of the space-time perturbation (free-function
/// spelling of [`SpaceTimePerturbation::z_moments`]).
pub fn zt_moments(t: f64, pert: &SpaceTimePerturbation) -> (f64, f64) {
    pert.z_moments(t)
}

/// z-parameterized optimal Stark field `delta*(t; z) = (1 + f eps) l3 / I2`.
pub fn optimal_stark_zt(t: f64, z: f64, l3: f64, pert: &SpaceTimePerturbation) -> Result<f64> {
    let (_, i2) = pert.z_moments(t);
    if i2 <= 0.0 {
        return Err(Error::NotApplicable(format!("second z-moment not positive: {i2}")));
    }
    Ok(pert.gain(t, z)? * l3 / i2)
}

/// A base field as seen from position z under a perturbation spec.
pub struct PerturbedField<'a, F: ControlField> {
    pub base: &'a F,
    pub spec: PerturbationSpec,
    pub z: f64,
}

impl<F: ControlField> ControlField for PerturbedField<'_, F> {
    fn sample(&self, t: f64) -> Result<ControlSample> {
        let base = self.base.sample(t)?;
        perturbed_controls(self.z, t, &base, &self.spec)
    }
}

/// Replay a single realized pulse pair at several positions; one independent
/// Bloch integration per z.
pub fn per_z_trajectories<F: ControlField + Sync>(
    base: &F,
    spec: &PerturbationSpec,
    zs: &[f64],
    r0: BlochVector,
    window: (f64, f64),
    cfg: &IntegratorConfig,
    n_out: usize,
) -> Result<Vec<Trajectory>> {
    zs.par_iter()
        .map(|&z| {
            let field = PerturbedField { base, spec: *spec, z };
            integrate_bloch(&field, r0, window.0, window.1, cfg, n_out)
        })
        .collect()
}

/// Realized controls of an extremal, replayable as a field.
pub fn realized_field(ex: &crate::pmp::Extremal) -> Result<SampledField> {
    SampledField::new(ex.times.clone(), ex.controls.clone())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StabilityAxis {
    #[serde(rename = "A")]
    Amplitude,
    #[serde(rename = "k")]
    SpatialWavevector,
    #[serde(rename = "w")]
    TemporalFrequency,
}

impl StabilityAxis {
    pub fn label(&self) -> &'static str {
        match self {
            StabilityAxis::Amplitude => "A",
            StabilityAxis::SpatialWavevector => "k",
            StabilityAxis::TemporalFrequency => "w",
        }
    }

    fn apply(&self, pert: &SpaceTimePerturbation, value: f64) -> SpaceTimePerturbation {
        let mut p = *pert;
        match self {
            StabilityAxis::Amplitude => p.amplitude = value,
            StabilityAxis::SpatialWavevector => p.spatial_wavevector = value,
            StabilityAxis::TemporalFrequency => p.temporal_frequency = value,
        }
        p
    }

    pub fn value(&self, pert: &SpaceTimePerturbation) -> f64 {
        match self {
            StabilityAxis::Amplitude => pert.amplitude,
            StabilityAxis::SpatialWavevector => pert.spatial_wavevector,
            StabilityAxis::TemporalFrequency => pert.temporal_frequency,
        }
    }
}

/// Optimal Stark values over (parameter, z) at the probe time, with the
/// acceptance interval under the cross-z spread threshold.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StabilityMap {
    pub axis: StabilityAxis,
    pub param_axis: Vec<f64>,
    pub z_axis: Vec<f64>,
    /// `values[i][j]`: `delta*(t_probe; z_j)` at parameter value i; None when
    /// the extremal solve failed.
    pub values: Vec<Vec<Option<f64>>>,
    /// Cross-z spread threshold as a fraction of `max_t |delta*|`.
    pub threshold: f64,
    pub probe_time: f64,
    /// Largest contiguous parameter run whose cells are stable.
    pub acceptance: Option<(f64, f64)>,
    pub failed_cells: usize,
}

impl StabilityMap {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "{}\\z", self.axis.label())?;
        for z in &self.z_axis {
            write!(w, ",{}", z)?;
        }
        writeln!(w)?;
        for (i, p) in self.param_axis.iter().enumerate() {
            write!(w, "{}", p)?;
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

    pub fn is_stable_at(&self, param: f64) -> Option<bool> {
        self.acceptance.map(|(lo, hi)| param >= lo && param <= hi)
    }
}

pub struct StabilityScan<'a> {
    pub axis: StabilityAxis,
    pub param_min: f64,
    pub param_max: f64,
    pub n_param: usize,
    pub n_z: usize,
    /// Probe time as a fraction of the window length.
    pub probe_fraction: f64,
    pub threshold: f64,
    pub operating: SpaceTimePerturbation,
    pub base_guess: Vec<f64>,
    pub shooting: &'a ShootingConfig,
    pub integrator: &'a IntegratorConfig,
}

/// Sweep one perturbation parameter: re-solve the extremal per value (warm
/// starting from the previous cell) and tabulate `delta*(t_probe; z)`.
pub fn stability_map(scan: &StabilityScan) -> Result<StabilityMap> {
    if scan.n_param < 2 || scan.n_z < 2 {
        return Err(Error::InvalidParams("stability scan needs at least a 2x2 grid".into()));
    }
    let params: Vec<f64> = (0..scan.n_param)
        .map(|i| {
            scan.param_min + (scan.param_max - scan.param_min) * i as f64 / (scan.n_param - 1) as f64
        })
        .collect();
    let zs: Vec<f64> = (0..scan.n_z)
        .map(|j| {
            scan.operating.z_min
                + scan.operating.z_extent() * j as f64 / (scan.n_z - 1) as f64
        })
        .collect();
    let window = (scan.operating.t_start, scan.operating.t_end);
    let probe_time = window.0 + scan.probe_fraction * (window.1 - window.0);

    let mut values: Vec<Vec<Option<f64>>> = Vec::with_capacity(params.len());
    let mut stable: Vec<Option<bool>> = Vec::with_capacity(params.len());
    let mut warm: Option<Vec<f64>> = None;
    let mut failed_cells = 0usize;
    for &value in &params {
        let pert = scan.axis.apply(&scan.operating, value);
        pert.validate()?;
        let problem = ShootingProblem::pole_transfer(window, CostFunctional::EnsembleZt { pert });
        let mut guesses: Vec<Vec<f64>> = Vec::new();
        if let Some(wm) = &warm {
            guesses.push(wm.clone());
        }
        guesses.push(scan.base_guess.clone());
        match solve_shooting(&problem, &guesses, scan.shooting, scan.integrator, 1001) {
            Ok(outcome) => {
                warm = Some(outcome.unknowns.clone());
                let row = stark_profile(&outcome, &pert, probe_time, &zs)?;
                let max_delta = outcome
                    .extremal
                    .controls
                    .iter()
                    .fold(0.0f64, |m, c| m.max(c.delta.abs()));
                let spread = row_spread(&row);
                stable.push(Some(spread <= scan.threshold * max_delta.max(f64::MIN_POSITIVE)));
                values.push(row.into_iter().map(Some).collect());
            }
            Err(Error::ShootingFailed { .. }) => {
                failed_cells += 1;
                stable.push(None);
                values.push(vec![None; zs.len()]);
            }
            Err(e) => return Err(e),
        }
    }

    let acceptance = largest_stable_run(&params, &stable);
    Ok(StabilityMap {
        axis: scan.axis,
        param_axis: params,
        z_axis: zs,
        values,
        threshold: scan.threshold,
        probe_time,
        acceptance,
        failed_cells,
    })
}

fn stark_profile(
    outcome: &ShootingOutcome,
    pert: &SpaceTimePerturbation,
    probe_time: f64,
    zs: &[f64],
) -> Result<Vec<f64>> {
    // l3 at the probe time from the realized z_ref control:
    // delta*(t; z_ref) = gain(t, z_ref) l3 / I2
    let field = realized_field(&outcome.extremal)?;
    let s = field.sample(probe_time)?;
    let (_, i2) = pert.z_moments(probe_time);
    let gain_ref = pert.gain(probe_time, pert.z_min)?;
    let l3 = s.delta * i2 / gain_ref;
    zs.iter().map(|&z| optimal_stark_zt(probe_time, z, l3, pert)).collect()
}

fn row_spread(row: &[f64]) -> f64 {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in row {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    hi - lo
}

fn largest_stable_run(params: &[f64], stable: &[Option<bool>]) -> Option<(f64, f64)> {
    let mut best: Option<(usize, usize)> = None;
    let mut run_start: Option<usize> = None;
    for i in 0..=stable.len() {
        let ok = i < stable.len() && stable[i] == Some(true);
        match (ok, run_start) {
            (true, None) => run_start = Some(i),
            (false, Some(s)) => {
                let len = i - s;
                if best.map_or(true, |(bs, be)| len > be - bs + 1) {
                    best = Some((s, i - 1));
                }
                run_start = None;
            }
            _ => {}
        }
    }
    best.map(|(s, e)| (params[s], params[e]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::GaussianField;
    use crate::model::default_pulse_params;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    // adaptive Simpson quadrature, the independent oracle for the closed forms
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, eps: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() < 15.0 * eps {
            left + right + (left + right - whole) / 15.0
        } else {
            simpson(f, a, m, fa, flm, fm, 0.5 * eps, depth - 1)
                + simpson(f, m, b, fm, frm, fb, 0.5 * eps, depth - 1)
        }
    }

    fn quad<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
        let m = 0.5 * (a + b);
        let (fa, fm, fb) = (f(a), f(m), f(b));
        simpson(&f, a, b, fa, fm, fb, 1e-13, 40)
    }

    fn pert(a: f64, w: f64, k: f64) -> SpaceTimePerturbation {
        SpaceTimePerturbation {
            amplitude: a,
            temporal_frequency: w,
            spatial_wavevector: k,
            t_start: 0.0,
            t_end: 100.0,
            z_min: 0.0,
            z_max: 1.0,
        }
    }

    #[test]
    fn energy_coefficient_limits_and_quadrature() {
        let mk = |k: f64| LinearInhom { k, z_min: 0.0, z_max: 1.0 };
        assert_abs_diff_eq!(mk(1e-12).energy_coefficient(), 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(mk(1.0).energy_coefficient(), 7.0 / 3.0, epsilon = 1e-14);
        let c = ensemble_cost_coeff_linear(&mk(0.01));
        let oracle = quad(|z| (1.0 + 0.01 * z).powi(2), 0.0, 1.0);
        assert_abs_diff_eq!(c, oracle, epsilon = 1e-12);
        assert_abs_diff_eq!(c, 1.0100333, epsilon = 1e-6);
    }

    #[test]
    fn linear_optimal_fields_reduce_to_energy_law() {
        let l = [0.3, -0.9, 0.8];
        let near_zero = LinearInhom { k: 1e-13, z_min: 0.0, z_max: 1.0 };
        let s = optimal_fields_linear(&l, &near_zero);
        assert_abs_diff_eq!(s.delta, l[2], epsilon = 1e-10);
        assert_abs_diff_eq!(s.omega, l[0], epsilon = 1e-10);
        let weak = LinearInhom { k: 0.01, z_min: 0.0, z_max: 1.0 };
        let s = optimal_fields_linear(&l, &weak);
        assert_relative_eq!(s.delta, 0.9900663 * l[2], max_relative = 1e-5);
    }

    #[test]
    fn zt_moments_match_quadrature() {
        // trivial limits
        let p0 = pert(0.0, 20.0, 10.0);
        for t in [0.0, 17.0, 63.0] {
            assert_eq!(p0.z_moments(t), (1.0, 1.0));
        }
        let uniform = pert(0.3, 5.0, 1e-9);
        let f = uniform.temporal(12.0);
        let (_, i2) = uniform.z_moments(12.0);
        assert_abs_diff_eq!(i2, (1.0 + f) * (1.0 + f), epsilon = 1e-10);

        // paper operating point against the quadrature oracle
        let p = pert(0.05, 20.0, 10.0);
        let (i1, i2) = p.z_moments(0.0);
        let f0 = p.temporal(0.0);
        let q1 = quad(|z| 1.0 + f0 * (10.0 * z).cos(), 0.0, 1.0);
        let q2 = quad(|z| (1.0 + f0 * (10.0 * z).cos()).powi(2), 0.0, 1.0);
        assert_abs_diff_eq!(i1, q1, epsilon = 1e-10);
        assert_abs_diff_eq!(i2, q2, epsilon = 1e-10);
    }

    #[test]
    fn zt_moment_derivative_matches_finite_difference() {
        let p = pert(0.4, 13.0, 3.7);
        let h = 1e-6;
        for t in [5.0, 40.0, 77.0] {
            let (_, ip) = p.z_moments(t + h);
            let (_, im) = p.z_moments(t - h);
            assert_relative_eq!(p.z_moment2_deriv(t), (ip - im) / (2.0 * h), max_relative = 1e-5, epsilon = 1e-9);
        }
    }

    #[test]
    fn perturbed_controls_gains() {
        let base = ControlSample::with_derivatives(2.0, 1.0, 0.3, -0.1);
        let lin = PerturbationSpec::Linear(LinearInhom { k: 0.01, z_min: 0.0, z_max: 1.0 });
        let at_min = perturbed_controls(0.0, 10.0, &base, &lin).unwrap();
        assert_eq!(at_min.delta, 2.0);
        let at_max = perturbed_controls(1.0, 10.0, &base, &lin).unwrap();
        assert_abs_diff_eq!(at_max.delta, 2.0 * 1.01, epsilon = 1e-14);
        assert_eq!(at_max.omega, 1.0);
        assert!(perturbed_controls(1.5, 10.0, &base, &lin).is_err());

        // temporal node of the zt perturbation: f(t) = 0 at w t / T = pi/2
        let p = pert(0.05, 20.0, 10.0);
        let t_node = std::f64::consts::FRAC_PI_2 * 100.0 / 20.0;
        let spec = PerturbationSpec::Zt(p);
        for z in [0.0, 0.4, 1.0] {
            let s = perturbed_controls(z, t_node, &base, &spec).unwrap();
            assert_abs_diff_eq!(s.delta, base.delta, epsilon = 1e-12);
        }
    }

    #[test]
    fn optimal_stark_zt_profiles() {
        let p = pert(0.0, 20.0, 10.0);
        // A = 0: z-independent
        let a = optimal_stark_zt(3.0, 0.2, 0.7, &p).unwrap();
        let b = optimal_stark_zt(3.0, 0.9, 0.7, &p).unwrap();
        assert_eq!(a, b);
        assert_abs_diff_eq!(a, 0.7, epsilon = 1e-14);

        // fixed t: the profile inherits the cosine shape
        let p = pert(0.05, 20.0, 10.0);
        let t = 11.0;
        let (_, i2) = p.z_moments(t);
        for z in [0.0, 0.33, 0.8] {
            let v = optimal_stark_zt(t, z, 0.7, &p).unwrap();
            let expect = (1.0 + p.temporal(t) * (10.0 * z).cos()) * 0.7 / i2;
            assert_abs_diff_eq!(v, expect, epsilon = 1e-14);
        }
    }

    #[test]
    fn per_z_family_collapses_as_k_vanishes() {
        let pump = default_pulse_params();
        let field = GaussianField::new(pump);
        let cfg = IntegratorConfig::default();
        let zs = [0.0, 0.5, 1.0];
        let spread = |k: f64| {
            let spec = PerturbationSpec::Linear(LinearInhom { k, z_min: 0.0, z_max: 1.0 });
            let trajs =
                per_z_trajectories(&field, &spec, &zs, BlochVector::SOUTH, (0.0, 100.0), &cfg, 2)
                    .unwrap();
            let r3: Vec<f64> = trajs.iter().map(|t| t.endpoint().r3).collect();
            (r3[0] - r3[2]).abs().max((r3[0] - r3[1]).abs())
        };
        let wide = spread(0.3);
        let narrow = spread(1e-4);
        assert!(narrow < 1e-5, "k->0 spread {narrow}");
        assert!(narrow < wide);
    }

    #[test]
    fn per_z_trajectories_conserve_norm() {
        let pump = default_pulse_params();
        let field = GaussianField::new(pump);
        let spec = PerturbationSpec::Zt(pert(0.05, 20.0, 10.0));
        let trajs = per_z_trajectories(
            &field,
            &spec,
            &[0.0, 0.6, 1.0],
            BlochVector::SOUTH,
            (0.0, 100.0),
            &IntegratorConfig::default(),
            2,
        )
        .unwrap();
        for t in &trajs {
            assert!(t.norm_drift < 1e-8);
        }
    }

    #[test]
    fn largest_stable_run_picks_longest() {
        let params = [0.0, 1.0, 2.0, 3.0, 4.0];
        let stable = [Some(true), Some(false), Some(true), Some(true), None];
        assert_eq!(largest_stable_run(&params, &stable), Some((2.0, 3.0)));
        let none = [Some(false), None, Some(false), Some(false), Some(false)];
        assert_eq!(largest_stable_run(&params, &none), None);
        let all = [Some(true); 5];
        assert_eq!(largest_stable_run(&params, &all), Some((0.0, 4.0)));
    }

    #[test]
    fn linear_inhom_validation() {
        assert!(LinearInhom { k: 0.01, z_min: 0.0, z_max: 1.0 }.validate().is_ok());
        assert!(LinearInhom { k: 0.01, z_min: 1.0, z_max: 1.0 }.validate().is_err());
        assert!(LinearInhom { k: -1.5, z_min: 0.0, z_max: 1.0 }.validate().is_err());
    }
}
