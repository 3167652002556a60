//! Pointwise model of the driven two-level system: Gaussian pulse pair,
//! adiabatic basis, Bloch generator and the adiabaticity diagnostic.
//!
//! Conventions: the dynamic detuning `delta` is zero at resonance and equals
//! `-s0` far from both pulses; the Rabi frequency `omega` is real. The Bloch
//! vector has the south pole at state |1> and the north pole at state |2>,
//! so `r3 = P2 - P1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SQRT_2PI: f64 = 2.5066282746310002;

/// Parameters of the Gaussian Stark and pump pulses.
///
/// `delta0` and `omega0` are pulse areas: the time profiles are normalized
/// Gaussians scaled by these factors, so the peak amplitudes are
/// `delta0 / (sqrt(2 pi) sigma_s)` and `omega0 / (sqrt(2 pi) sigma_p)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseParams {
    /// Static detuning, positive.
    pub s0: f64,
    /// Stark pulse area.
    pub delta0: f64,
    /// Pump pulse area.
    pub omega0: f64,
    /// Stark pulse width (zero only as a degenerate analytic limit).
    pub sigma_s: f64,
    /// Pump pulse width.
    pub sigma_p: f64,
    /// Stark pulse centre.
    pub t_s: f64,
    /// Pump pulse centre.
    pub t_p: f64,
}

impl PulseParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.s0 > 0.0) {
            return Err(Error::InvalidParams(format!("s0 must be > 0, got {}", self.s0)));
        }
        if !(self.sigma_p > 0.0) {
            return Err(Error::InvalidParams(format!(
                "sigma_p must be > 0, got {}",
                self.sigma_p
            )));
        }
        if self.sigma_s < 0.0 {
            return Err(Error::InvalidParams(format!(
                "sigma_s must be >= 0, got {}",
                self.sigma_s
            )));
        }
        if self.omega0 < 0.0 || self.delta0 < 0.0 {
            return Err(Error::InvalidParams(
                "pulse areas omega0, delta0 must be >= 0".into(),
            ));
        }
        Ok(())
    }

    /// Stark pulse coordinates relative to the fixed pump.
    pub fn reduced(&self) -> ReducedCoords {
        ReducedCoords {
            tau: (self.t_s - self.t_p) / self.t_p,
            sigma: self.sigma_s / self.sigma_p,
        }
    }

    /// Same pump, Stark pulse repositioned to the given reduced coordinates.
    pub fn with_reduced(&self, rc: ReducedCoords) -> PulseParams {
        PulseParams {
            t_s: self.t_p * (1.0 + rc.tau),
            sigma_s: self.sigma_p * rc.sigma,
            ..*self
        }
    }
}

/// Dimensionless Stark-pulse coordinates: centre offset `tau = (t_s - t_p)/t_p`
/// and width ratio `sigma = sigma_s/sigma_p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReducedCoords {
    pub tau: f64,
    pub sigma: f64,
}

/// Time derivatives of the control pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlDerivatives {
    pub ddelta_dt: f64,
    pub domega_dt: f64,
}

/// The control pair (detuning, Rabi frequency) at one instant, with optional
/// derivatives for adiabaticity evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlSample {
    pub delta: f64,
    pub omega: f64,
    pub derivatives: Option<ControlDerivatives>,
}

impl ControlSample {
    pub fn new(delta: f64, omega: f64) -> Self {
        ControlSample { delta, omega, derivatives: None }
    }

    pub fn with_derivatives(delta: f64, omega: f64, ddelta_dt: f64, domega_dt: f64) -> Self {
        ControlSample {
            delta,
            omega,
            derivatives: Some(ControlDerivatives { ddelta_dt, domega_dt }),
        }
    }
}

/// Point on the unit sphere carrying the full state of the two-level system.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
}

impl BlochVector {
    pub const SOUTH: BlochVector = BlochVector { r1: 0.0, r2: 0.0, r3: -1.0 };
    pub const NORTH: BlochVector = BlochVector { r1: 0.0, r2: 0.0, r3: 1.0 };

    pub fn new(r1: f64, r2: f64, r3: f64) -> Self {
        BlochVector { r1, r2, r3 }
    }

    pub fn norm(&self) -> f64 {
        (self.r1 * self.r1 + self.r2 * self.r2 + self.r3 * self.r3).sqrt()
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.r1, self.r2, self.r3]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        BlochVector { r1: a[0], r2: a[1], r3: a[2] }
    }
}

/// Instantaneous adiabatic basis: mixing angle and the two adiabatic energies.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdiabaticFrame {
    pub theta: f64,
    pub eps_minus: f64,
    pub eps_plus: f64,
}

impl AdiabaticFrame {
    pub fn new(s: &ControlSample) -> Result<Self> {
        let theta = mixing_angle(s)?;
        let (eps_minus, eps_plus) = adiabatic_energies(s);
        Ok(AdiabaticFrame { theta, eps_minus, eps_plus })
    }
}

/// Stark detuning `-s0 + delta0/(sqrt(2 pi) sigma_s) exp(-(t-t_s)^2/(2 sigma_s^2))`.
pub fn gaussian_stark(t: f64, p: &PulseParams) -> Result<f64> {
    if p.sigma_s == 0.0 {
        return Err(Error::DegenerateWidth);
    }
    let u = (t - p.t_s) / p.sigma_s;
    Ok(-p.s0 + p.delta0 / (SQRT_2PI * p.sigma_s) * (-0.5 * u * u).exp())
}

/// Analytic time derivative of the Stark detuning.
pub fn gaussian_stark_deriv(t: f64, p: &PulseParams) -> Result<f64> {
    if p.sigma_s == 0.0 {
        return Err(Error::DegenerateWidth);
    }
    let u = (t - p.t_s) / p.sigma_s;
    let gauss = p.delta0 / (SQRT_2PI * p.sigma_s) * (-0.5 * u * u).exp();
    Ok(gauss * (p.t_s - t) / (p.sigma_s * p.sigma_s))
}

/// Pump Rabi frequency `omega0/(sqrt(2 pi) sigma_p) exp(-(t-t_p)^2/(2 sigma_p^2))`.
pub fn gaussian_pump(t: f64, p: &PulseParams) -> f64 {
    let u = (t - p.t_p) / p.sigma_p;
    p.omega0 / (SQRT_2PI * p.sigma_p) * (-0.5 * u * u).exp()
}

/// Analytic time derivative of the pump Rabi frequency.
pub fn gaussian_pump_deriv(t: f64, p: &PulseParams) -> f64 {
    gaussian_pump(t, p) * (p.t_p - t) / (p.sigma_p * p.sigma_p)
}

/// Mixing angle `theta = atan2(omega, delta) / 2`.
///
/// For `omega >= 0` this lands in [0, pi/2]: large positive detuning gives 0,
/// large negative detuning gives pi/2, resonance gives pi/4.
pub fn mixing_angle(s: &ControlSample) -> Result<f64> {
    if s.delta == 0.0 && s.omega == 0.0 {
        return Err(Error::ConicalIntersection);
    }
    Ok(0.5 * s.omega.atan2(s.delta))
}

/// Adiabatic energies `(delta -/+ sqrt(delta^2 + omega^2)) / 2`, lower first.
pub fn adiabatic_energies(s: &ControlSample) -> (f64, f64) {
    let gap = 0.5 * s.delta.hypot(s.omega);
    (0.5 * s.delta - gap, 0.5 * s.delta + gap)
}

/// Adiabaticity function `|omega ddelta - domega delta| / (2 (omega^2 + delta^2)^{3/2})`.
///
/// Values well below 1 indicate adiabatic following.
pub fn adiabaticity(s: &ControlSample) -> Result<f64> {
    let d = s.derivatives.ok_or(Error::MissingDerivatives)?;
    let r2 = s.delta * s.delta + s.omega * s.omega;
    if r2 == 0.0 {
        return Err(Error::ConicalIntersection);
    }
    Ok((s.omega * d.ddelta_dt - d.domega_dt * s.delta).abs() / (2.0 * r2 * r2.sqrt()))
}

/// Bloch vector of the followed adiabatic state, `(sin 2theta, 0, cos 2theta)`.
///
/// At theta = pi/2 this is the south pole (state |1>), at theta = 0 the north
/// pole (state |2>), consistent with the adiabatic population `P2 = cos^2 theta`.
pub fn adiabatic_bloch(theta: f64) -> BlochVector {
    let (s, c) = (2.0 * theta).sin_cos();
    BlochVector { r1: s, r2: 0.0, r3: c }
}

/// Non-adiabatic correction `R - R_ad`, componentwise.
pub fn nabc(r: &BlochVector, r_ad: &BlochVector) -> [f64; 3] {
    [r.r1 - r_ad.r1, r.r2 - r_ad.r2, r.r3 - r_ad.r3]
}

/// Rotation axis of the Bloch equation written as `dR/dt = w x R`, with
/// `w = (omega, 0, delta)`. The induced matrix is antisymmetric, so the
/// evolution preserves |R| exactly.
pub fn bloch_axis(s: &ControlSample) -> [f64; 3] {
    [s.omega, 0.0, s.delta]
}

/// Populations `(P1, P2) = ((1 - r3)/2, (1 + r3)/2)`.
pub fn populations(r: &BlochVector) -> (f64, f64) {
    (0.5 * (1.0 - r.r3), 0.5 * (1.0 + r.r3))
}

pub(crate) fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn norm3(a: &[f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

/// Paper-scale defaults used throughout the examples and presets:
/// `s0 = 1, delta0 = omega0 = 100, sigma_p = 5, t_p = 50`, Stark pulse at
/// reduced coordinates (0.3, 2).
pub fn default_pulse_params() -> PulseParams {
    PulseParams {
        s0: 1.0,
        delta0: 100.0,
        omega0: 100.0,
        sigma_s: 10.0,
        sigma_p: 5.0,
        t_s: 65.0,
        t_p: 50.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn params(sigma_s: f64, t_s: f64) -> PulseParams {
        PulseParams { sigma_s, t_s, ..default_pulse_params() }
    }

    // Bisection oracle, independent of the analytic derivative path.
    fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
        let (fa, fb) = (f(a), f(b));
        assert!(fa * fb < 0.0, "root not bracketed");
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if f(m) * f(a) <= 0.0 {
                b = m;
            } else {
                a = m;
            }
        }
        0.5 * (a + b)
    }

    #[test]
    fn stark_peak_and_tails() {
        let p = params(10.0, 65.0);
        let peak = gaussian_stark(65.0, &p).unwrap();
        assert_abs_diff_eq!(peak, -1.0 + 100.0 / (SQRT_2PI * 10.0), epsilon = 1e-12);
        assert_abs_diff_eq!(peak, 2.9894228, epsilon = 1e-6);
        assert_abs_diff_eq!(gaussian_stark(1e6, &p).unwrap(), -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(gaussian_stark(-1e6, &p).unwrap(), -1.0, epsilon = 1e-12);
    }

    #[test]
    fn stark_zero_crossings_match_bisection() {
        // Oracle: bisect delta(t) = 0 on each side of the centre.
        let p = params(24.0, 0.0);
        let f = |t: f64| gaussian_stark(t, &p).unwrap();
        let right = bisect(f, 0.0, 100.0);
        let left = bisect(f, -100.0, 0.0);
        assert_abs_diff_eq!(right, 24.195472, epsilon = 1e-4);
        assert_abs_diff_eq!(left, -24.195472, epsilon = 1e-4);
    }

    #[test]
    fn stark_degenerate_width_errors() {
        let p = params(0.0, 65.0);
        assert!(matches!(gaussian_stark(50.0, &p), Err(Error::DegenerateWidth)));
        assert!(matches!(gaussian_stark_deriv(50.0, &p), Err(Error::DegenerateWidth)));
    }

    #[test]
    fn pump_peak_and_three_sigma() {
        let p = default_pulse_params();
        let peak = gaussian_pump(50.0, &p);
        assert_abs_diff_eq!(peak, 7.9788456, epsilon = 1e-6);
        assert_abs_diff_eq!(gaussian_pump(65.0, &p), peak * (-4.5f64).exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(gaussian_pump(65.0, &p), 0.0886370, epsilon = 1e-6);
        let off = PulseParams { omega0: 0.0, ..p };
        for t in [0.0, 50.0, 100.0] {
            assert_eq!(gaussian_pump(t, &off), 0.0);
        }
    }

    #[test]
    fn pulse_derivatives_match_finite_differences() {
        let p = params(10.0, 65.0);
        let h = 1e-6;
        for t in [30.0, 55.0, 65.0, 80.0] {
            let fd_s = (gaussian_stark(t + h, &p).unwrap() - gaussian_stark(t - h, &p).unwrap())
                / (2.0 * h);
            assert_relative_eq!(gaussian_stark_deriv(t, &p).unwrap(), fd_s, max_relative = 1e-6, epsilon = 1e-10);
            let fd_p = (gaussian_pump(t + h, &p) - gaussian_pump(t - h, &p)) / (2.0 * h);
            assert_relative_eq!(gaussian_pump_deriv(t, &p), fd_p, max_relative = 1e-6, epsilon = 1e-10);
        }
    }

    #[test]
    fn mixing_angle_limits() {
        assert_abs_diff_eq!(
            mixing_angle(&ControlSample::new(0.0, 5.0)).unwrap(),
            std::f64::consts::FRAC_PI_4,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(mixing_angle(&ControlSample::new(10.0, 1e-12)).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            mixing_angle(&ControlSample::new(-10.0, 1e-12)).unwrap(),
            std::f64::consts::FRAC_PI_2,
            epsilon = 1e-12
        );
        assert!(matches!(
            mixing_angle(&ControlSample::new(0.0, 0.0)),
            Err(Error::ConicalIntersection)
        ));
    }

    #[test]
    fn mixing_angle_continuous_along_gaussian_path() {
        let p = params(10.0, 65.0);
        let n = 4000;
        let h = 100.0 / n as f64;
        let mut prev: Option<f64> = None;
        let mut max_step = 0.0f64;
        for i in 0..=n {
            let t = i as f64 * h;
            let s = ControlSample::new(gaussian_stark(t, &p).unwrap(), gaussian_pump(t, &p).max(1e-300));
            let th = mixing_angle(&s).unwrap();
            if let Some(q) = prev {
                max_step = max_step.max((th - q).abs());
            }
            prev = Some(th);
        }
        // O(h) increments along a smooth path with omega > 0
        assert!(max_step < 0.2 * h.max(1e-3), "max theta step {max_step}");
    }

    #[test]
    fn adiabatic_energy_splittings() {
        assert_eq!(adiabatic_energies(&ControlSample::new(0.0, 4.0)), (-2.0, 2.0));
        assert_eq!(adiabatic_energies(&ControlSample::new(3.0, 4.0)), (-1.0, 4.0));
        let (lo, hi) = adiabatic_energies(&ControlSample::new(0.0, 0.0));
        assert_eq!((lo, hi), (0.0, 0.0));
        assert!(AdiabaticFrame::new(&ControlSample::new(0.0, 0.0)).is_err());
    }

    #[test]
    fn adiabaticity_static_and_circular() {
        let s = ControlSample::with_derivatives(3.0, 4.0, 0.0, 0.0);
        assert_eq!(adiabaticity(&s).unwrap(), 0.0);

        // circular parameterization delta = r sin t, omega = r cos t -> AD = 1/(2r)
        for &r in &[0.5, 2.0, 7.0] {
            for i in 0..100 {
                let t = i as f64 * 0.0628;
                let s = ControlSample::with_derivatives(
                    r * t.sin(),
                    r * t.cos(),
                    r * t.cos(),
                    -r * t.sin(),
                );
                assert_relative_eq!(adiabaticity(&s).unwrap(), 1.0 / (2.0 * r), max_relative = 1e-12);
            }
        }

        let s = ControlSample::with_derivatives(0.0, 0.0, 1.0, 1.0);
        assert!(matches!(adiabaticity(&s), Err(Error::ConicalIntersection)));
        assert!(matches!(
            adiabaticity(&ControlSample::new(1.0, 1.0)),
            Err(Error::MissingDerivatives)
        ));
    }

    #[test]
    fn adiabaticity_scaling_law() {
        let base = ControlSample::with_derivatives(1.3, 0.7, -0.4, 2.1);
        let ad0 = adiabaticity(&base).unwrap();
        for &c in &[2.0, 10.0] {
            let scaled = ControlSample::with_derivatives(
                c * base.delta,
                c * base.omega,
                c * base.derivatives.unwrap().ddelta_dt,
                c * base.derivatives.unwrap().domega_dt,
            );
            assert_relative_eq!(adiabaticity(&scaled).unwrap(), ad0 / c, max_relative = 1e-12);
        }
    }

    #[test]
    fn adiabatic_bloch_poles_and_norm() {
        let south = adiabatic_bloch(std::f64::consts::FRAC_PI_2);
        assert_abs_diff_eq!(south.r3, -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(south.r1, 0.0, epsilon = 1e-15);
        let north = adiabatic_bloch(0.0);
        assert_eq!(north.as_array(), [0.0, 0.0, 1.0]);
        let mid = adiabatic_bloch(std::f64::consts::FRAC_PI_4);
        assert_abs_diff_eq!(mid.r1, 1.0, epsilon = 1e-15);

        for i in 0..50 {
            let theta = i as f64 / 49.0 * std::f64::consts::FRAC_PI_2;
            assert_abs_diff_eq!(adiabatic_bloch(theta).norm(), 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn nabc_bounds() {
        let r = BlochVector::new(0.1, -0.2, 0.97);
        assert_eq!(nabc(&r, &r), [0.0, 0.0, 0.0]);
        let anti = BlochVector::new(-0.1, 0.2, -0.97);
        let d = nabc(&r, &anti);
        assert_abs_diff_eq!(d[2], 1.94, epsilon = 1e-15);
        let full = nabc(&BlochVector::NORTH, &BlochVector::SOUTH);
        assert_eq!(full[2], 2.0);
    }

    #[test]
    fn bloch_axis_cross_product() {
        // R = south pole, omega = 2: dR/dt = (0, 2, 0)
        let w = bloch_axis(&ControlSample::new(7.0, 2.0));
        let dr = cross(&w, &[0.0, 0.0, -1.0]);
        assert_eq!(dr, [0.0, 2.0, 0.0]);

        // omega = 0: pure rotation about r3
        let w = bloch_axis(&ControlSample::new(3.0, 0.0));
        let dr = cross(&w, &[1.0, 0.0, 0.5]);
        assert_eq!(dr, [0.0, 3.0, 0.0]);

        // (w x R) . R = 0 for arbitrary inputs
        let w = bloch_axis(&ControlSample::new(-2.7, 1.9));
        for r in [[0.3, -0.5, 0.81], [1.0, 0.0, 0.0], [-0.6, 0.6, 0.52]] {
            assert_abs_diff_eq!(dot(&cross(&w, &r), &r), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn population_split() {
        assert_eq!(populations(&BlochVector::SOUTH), (1.0, 0.0));
        assert_eq!(populations(&BlochVector::NORTH), (0.0, 1.0));
        let (p1, p2) = populations(&BlochVector::new(1.0, 0.0, 0.0));
        assert_eq!((p1, p2), (0.5, 0.5));
        for r3 in [-0.77, 0.123, 0.9999] {
            let (p1, p2) = populations(&BlochVector::new(0.0, 0.0, r3));
            assert!((p1 + p2 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn reduced_coordinates_roundtrip() {
        let p = default_pulse_params();
        let rc = p.reduced();
        assert_abs_diff_eq!(rc.tau, 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(rc.sigma, 2.0, epsilon = 1e-15);
        let q = p.with_reduced(ReducedCoords { tau: -0.18, sigma: 4.8 });
        assert_abs_diff_eq!(q.t_s, 41.0, epsilon = 1e-12);
        assert_abs_diff_eq!(q.sigma_s, 24.0, epsilon = 1e-12);
        let back = q.with_reduced(rc);
        assert_abs_diff_eq!(back.t_s, p.t_s, epsilon = 1e-12);
    }

    #[test]
    fn param_validation() {
        assert!(default_pulse_params().validate().is_ok());
        assert!(PulseParams { s0: 0.0, ..default_pulse_params() }.validate().is_err());
        assert!(PulseParams { sigma_p: 0.0, ..default_pulse_params() }.validate().is_err());
        assert!(PulseParams { omega0: -1.0, ..default_pulse_params() }.validate().is_err());
        assert!(PulseParams { sigma_s: 0.0, ..default_pulse_params() }.validate().is_ok());
    }
}
