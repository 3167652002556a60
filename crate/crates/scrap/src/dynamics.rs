//! Time integration of the Bloch system and of coupled state--costate
//! systems, with conservation monitoring.
//!
//! The default method is an embedded Dormand--Prince 4(5) pair with adaptive
//! steps; a fixed-step classic RK4 is kept for convergence-order studies.
//! States are never renormalized during integration: norm drift is a
//! diagnostic and silently repairing it would mask generator bugs.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ControlField;
use crate::model::{self, BlochVector, ControlSample};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Adaptive embedded Dormand-Prince 4(5).
    Dopri5,
    /// Classic fixed-step RK4; the step is `max_step`.
    Rk4,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Step ceiling for the adaptive method, exact step for RK4.
    pub max_step: f64,
    pub method: Method,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        // pulse magnitudes ~10 over windows ~100: leaves two digits of
        // headroom on the 1e-8 conservation bounds
        IntegratorConfig { rel_tol: 1e-10, abs_tol: 1e-10, max_step: 1.0, method: Method::Dopri5 }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0 && self.max_step > 0.0) {
            return Err(Error::InvalidParams(
                "integrator tolerances and max_step must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Accepted integration points plus slopes, enough for dense output.
#[derive(Clone, Debug)]
pub struct OdeSolution<const N: usize> {
    pub times: Vec<f64>,
    pub states: Vec<[f64; N]>,
    pub slopes: Vec<[f64; N]>,
}

impl<const N: usize> OdeSolution<N> {
    pub fn final_state(&self) -> [f64; N] {
        *self.states.last().expect("solution has at least the initial point")
    }

    /// Cubic Hermite interpolation on the accepted step containing `t`.
    pub fn sample(&self, t: f64) -> [f64; N] {
        let n = self.times.len();
        let forward = self.times[n - 1] >= self.times[0];
        let mut lo = 0usize;
        let mut hi = n - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            let before = if forward { self.times[mid] <= t } else { self.times[mid] >= t };
            if before {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let h = self.times[hi] - self.times[lo];
        if h == 0.0 {
            return self.states[lo];
        }
        let x = ((t - self.times[lo]) / h).clamp(0.0, 1.0);
        let x2 = x * x;
        let x3 = x2 * x;
        let (h00, h10, h01, h11) =
            (2.0 * x3 - 3.0 * x2 + 1.0, x3 - 2.0 * x2 + x, -2.0 * x3 + 3.0 * x2, x3 - x2);
        let mut out = [0.0; N];
        for i in 0..N {
            out[i] = h00 * self.states[lo][i]
                + h10 * h * self.slopes[lo][i]
                + h01 * self.states[hi][i]
                + h11 * h * self.slopes[hi][i];
        }
        out
    }

    /// `n` uniform samples across the integration window (endpoints exact).
    pub fn sample_uniform(&self, n: usize) -> (Vec<f64>, Vec<[f64; N]>) {
        let t0 = self.times[0];
        let t1 = *self.times.last().unwrap();
        let mut ts = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        for k in 0..n {
            let t = if k + 1 == n { t1 } else { t0 + (t1 - t0) * k as f64 / (n - 1) as f64 };
            ts.push(t);
            ys.push(if k == 0 {
                self.states[0]
            } else if k + 1 == n {
                self.final_state()
            } else {
                self.sample(t)
            });
        }
        (ts, ys)
    }
}

// Dormand-Prince 5(4) tableau.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const E: [f64; 7] = [
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
];

const MAX_STEPS: usize = 50_000_000;

/// Integrate `dy/dt = rhs(t, y)` from `t0` to `t1` (either direction).
pub fn solve_ivp<const N: usize, F>(
    rhs: F,
    y0: [f64; N],
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
) -> Result<OdeSolution<N>>
where
    F: Fn(f64, &[f64; N]) -> Result<[f64; N]>,
{
    cfg.validate()?;
    if t1 == t0 {
        let f0 = rhs(t0, &y0)?;
        return Ok(OdeSolution { times: vec![t0], states: vec![y0], slopes: vec![f0] });
    }
    match cfg.method {
        Method::Dopri5 => dopri5(rhs, y0, t0, t1, cfg),
        Method::Rk4 => rk4(rhs, y0, t0, t1, cfg.max_step),
    }
}

fn dopri5<const N: usize, F>(
    rhs: F,
    y0: [f64; N],
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
) -> Result<OdeSolution<N>>
where
    F: Fn(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let dir = (t1 - t0).signum();
    let span = (t1 - t0).abs();
    let mut t = t0;
    let mut y = y0;
    let mut f = rhs(t, &y)?;

    let mut sol = OdeSolution {
        times: vec![t],
        states: vec![y],
        slopes: vec![f],
    };

    // conservative first step, the controller adapts quickly
    let fmag = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut h = (0.01 * span).min(cfg.max_step).min(if fmag > 0.0 { 0.1 / fmag } else { span });
    h = h.max(span * 1e-12);

    let mut k = [[0.0; N]; 7];
    let mut steps = 0usize;
    while (t1 - t) * dir > 0.0 {
        steps += 1;
        if steps > MAX_STEPS {
            return Err(Error::StepUnderflow { t });
        }
        h = h.min((t1 - t).abs()).min(cfg.max_step);
        if h < (t.abs().max(1.0)) * f64::EPSILON * 16.0 {
            return Err(Error::StepUnderflow { t });
        }
        let hs = h * dir;

        k[0] = f;
        for stage in 0..6 {
            let mut ys = y;
            for i in 0..N {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(stage + 1) {
                    acc += A[stage][j] * kj[i];
                }
                ys[i] += hs * acc;
            }
            k[stage + 1] = rhs(t + C[stage] * hs, &ys)?;
        }

        // 5th-order solution is stage 7's argument (FSAL)
        let mut y1 = y;
        for i in 0..N {
            let mut acc = 0.0;
            for j in 0..6 {
                acc += A[5][j] * k[j][i];
            }
            y1[i] += hs * acc;
        }

        let mut err = 0.0f64;
        for i in 0..N {
            let mut e = 0.0;
            for (j, kj) in k.iter().enumerate() {
                e += E[j] * kj[i];
            }
            e *= hs;
            let sc = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(y1[i].abs());
            err += (e / sc) * (e / sc);
        }
        err = (err / N as f64).sqrt();

        if err <= 1.0 {
            t += hs;
            y = y1;
            f = k[6];
            sol.times.push(t);
            sol.states.push(y);
            sol.slopes.push(f);
            let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).min(5.0) };
            h *= grow.max(0.2);
        } else {
            h *= (0.9 * err.powf(-0.2)).max(0.2);
        }
    }
    Ok(sol)
}

fn rk4<const N: usize, F>(
    rhs: F,
    y0: [f64; N],
    t0: f64,
    t1: f64,
    step: f64,
) -> Result<OdeSolution<N>>
where
    F: Fn(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let span = t1 - t0;
    let n = (span.abs() / step).ceil().max(1.0) as usize;
    let h = span / n as f64;
    let mut t = t0;
    let mut y = y0;
    let mut sol = OdeSolution {
        times: Vec::with_capacity(n + 1),
        states: Vec::with_capacity(n + 1),
        slopes: Vec::with_capacity(n + 1),
    };
    let mut f = rhs(t, &y)?;
    sol.times.push(t);
    sol.states.push(y);
    sol.slopes.push(f);
    for i in 0..n {
        let k1 = f;
        let mut ya = y;
        for j in 0..N {
            ya[j] = y[j] + 0.5 * h * k1[j];
        }
        let k2 = rhs(t + 0.5 * h, &ya)?;
        for j in 0..N {
            ya[j] = y[j] + 0.5 * h * k2[j];
        }
        let k3 = rhs(t + 0.5 * h, &ya)?;
        for j in 0..N {
            ya[j] = y[j] + h * k3[j];
        }
        let k4 = rhs(t + h, &ya)?;
        for j in 0..N {
            y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        t = if i + 1 == n { t1 } else { t0 + (i + 1) as f64 * h };
        f = rhs(t, &y)?;
        sol.times.push(t);
        sol.states.push(y);
        sol.slopes.push(f);
    }
    Ok(sol)
}

/// Sampled trajectory of the Bloch system, possibly with costates, realized
/// controls and recorded pseudo-Hamiltonian values.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<BlochVector>,
    pub costates: Option<Vec<[f64; 3]>>,
    pub controls: Option<Vec<ControlSample>>,
    pub hamiltonian: Option<Vec<f64>>,
    /// max over accepted integration points of | |R| - 1 |
    pub norm_drift: f64,
}

impl Trajectory {
    /// Angular momentum `l = R x p` at sample `i`, when costates are present.
    pub fn angular_momentum(&self, i: usize) -> Option<[f64; 3]> {
        self.costates
            .as_ref()
            .map(|ps| model::cross(&self.states[i].as_array(), &ps[i]))
    }

    pub fn endpoint(&self) -> BlochVector {
        *self.states.last().expect("trajectory is nonempty")
    }

    /// CSV rows `t,r1,r2,r3[,p1,p2,p3,delta,omega,AD]`; the bracketed block is
    /// written only when both costates and controls are recorded.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let full = self.costates.is_some() && self.controls.is_some();
        if full {
            writeln!(w, "t,r1,r2,r3,p1,p2,p3,delta,omega,AD")?;
        } else {
            writeln!(w, "t,r1,r2,r3")?;
        }
        for i in 0..self.times.len() {
            let r = &self.states[i];
            if full {
                let p = &self.costates.as_ref().unwrap()[i];
                let c = &self.controls.as_ref().unwrap()[i];
                let ad = model::adiabaticity(c).unwrap_or(f64::NAN);
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{},{},{}",
                    self.times[i], r.r1, r.r2, r.r3, p[0], p[1], p[2], c.delta, c.omega, ad
                )?;
            } else {
                writeln!(w, "{},{},{},{}", self.times[i], r.r1, r.r2, r.r3)?;
            }
        }
        Ok(())
    }
}

/// Maximum drifts of the conserved quantities over a trajectory, each
/// normalized by `1 + |initial value|`.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct ConservationReport {
    pub norm_drift: f64,
    pub h_drift: Option<f64>,
    pub l2_drift: Option<f64>,
    pub lsq_drift: Option<f64>,
    pub p_norm_drift: Option<f64>,
}

fn drift_series(xs: impl Iterator<Item = f64>, x0: f64) -> f64 {
    let scale = 1.0 + x0.abs();
    xs.fold(0.0f64, |m, x| m.max((x - x0).abs() / scale))
}

/// Drifts of |R|, H, l2, l^2 and |p| over the trajectory. Quantities that the
/// trajectory does not carry are reported as `None`.
pub fn conservation_report(traj: &Trajectory) -> ConservationReport {
    let mut report = ConservationReport { norm_drift: traj.norm_drift, ..Default::default() };
    if let Some(h) = &traj.hamiltonian {
        report.h_drift = Some(drift_series(h.iter().copied(), h[0]));
    }
    if let Some(ps) = &traj.costates {
        let l: Vec<[f64; 3]> = (0..traj.times.len())
            .map(|i| model::cross(&traj.states[i].as_array(), &ps[i]))
            .collect();
        report.l2_drift = Some(drift_series(l.iter().map(|v| v[1]), l[0][1]));
        report.lsq_drift =
            Some(drift_series(l.iter().map(|v| model::dot(v, v)), model::dot(&l[0], &l[0])));
        report.p_norm_drift = Some(drift_series(ps.iter().map(model::norm3), model::norm3(&ps[0])));
    }
    report
}

fn norm_drift_of<const N: usize>(sol: &OdeSolution<N>) -> f64 {
    sol.states
        .iter()
        .fold(0.0f64, |m, y| m.max(((y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt() - 1.0).abs()))
}

/// Integrate the Bloch equation `dR/dt = (omega, 0, delta) x R` under the
/// given field and return `n_out` uniform samples.
pub fn integrate_bloch<F: ControlField>(
    field: &F,
    r0: BlochVector,
    t_i: f64,
    t_f: f64,
    cfg: &IntegratorConfig,
    n_out: usize,
) -> Result<Trajectory> {
    let sol = integrate_bloch_raw(field, r0, t_i, t_f, cfg)?;
    let norm_drift = norm_drift_of(&sol);
    let (times, ys) = sol.sample_uniform(n_out.max(2));
    let controls: Result<Vec<ControlSample>> = times.iter().map(|&t| field.sample(t)).collect();
    Ok(Trajectory {
        states: ys.iter().map(|y| BlochVector::from_array(*y)).collect(),
        times,
        costates: None,
        controls: Some(controls?),
        hamiltonian: None,
        norm_drift,
    })
}

/// Same integration without resampling; used by sweeps that only need the
/// endpoint or the accepted steps.
pub fn integrate_bloch_raw<F: ControlField>(
    field: &F,
    r0: BlochVector,
    t_i: f64,
    t_f: f64,
    cfg: &IntegratorConfig,
) -> Result<OdeSolution<3>> {
    let rhs = |t: f64, y: &[f64; 3]| -> Result<[f64; 3]> {
        let s = field.sample(t)?;
        Ok(model::cross(&model::bloch_axis(&s), y))
    };
    solve_ivp(rhs, r0.as_array(), t_i, t_f, cfg)
}

/// Integrate a coupled state--costate system given its right-hand side; the
/// realized controls and Hamiltonian records are attached by the caller.
pub fn integrate_extremal<F>(
    rhs: F,
    r0: BlochVector,
    p0: [f64; 3],
    t_i: f64,
    t_f: f64,
    cfg: &IntegratorConfig,
) -> Result<OdeSolution<6>>
where
    F: Fn(f64, &[f64; 6]) -> Result<[f64; 6]>,
{
    let y0 = [r0.r1, r0.r2, r0.r3, p0[0], p0[1], p0[2]];
    solve_ivp(rhs, y0, t_i, t_f, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::GaussianField;
    use crate::model::{default_pulse_params, PulseParams};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    struct ConstField {
        delta: f64,
        omega: f64,
    }

    impl ControlField for ConstField {
        fn sample(&self, _t: f64) -> crate::error::Result<ControlSample> {
            Ok(ControlSample::with_derivatives(self.delta, self.omega, 0.0, 0.0))
        }
    }

    #[test]
    fn rabi_pi_rotation_reaches_north_pole() {
        let field = ConstField { delta: 0.0, omega: PI };
        let cfg = IntegratorConfig::default();
        let traj = integrate_bloch(&field, BlochVector::SOUTH, 0.0, 1.0, &cfg, 11).unwrap();
        let end = traj.endpoint();
        assert!((end.r3 - 1.0).abs() < 1e-8, "r3(1) = {}", end.r3);
        assert!(end.r1.abs() < 1e-8 && end.r2.abs() < 1e-8);
    }

    #[test]
    fn pole_is_fixed_point_of_detuning_rotation() {
        let field = ConstField { delta: 3.7, omega: 0.0 };
        let cfg = IntegratorConfig::default();
        let traj = integrate_bloch(&field, BlochVector::SOUTH, 0.0, 50.0, &cfg, 101).unwrap();
        for r in &traj.states {
            assert!((r.r3 + 1.0).abs() < 1e-12 && r.r1.abs() < 1e-12);
        }
    }

    #[test]
    fn paper_point_x_gives_nearly_complete_transfer() {
        // oracle value 0.9965043 from an independent two-level Schrodinger
        // integration (see schroedinger_oracle_agrees below)
        let p = default_pulse_params(); // reduced (0.3, 2)
        let field = GaussianField::new(p);
        let cfg = IntegratorConfig::default();
        let traj = integrate_bloch(&field, BlochVector::SOUTH, 0.0, 100.0, &cfg, 2).unwrap();
        let (_, p2) = model::populations(&traj.endpoint());
        assert!(p2 >= 0.99, "P2(tf) = {p2}");
        assert_abs_diff_eq!(p2, 0.9965043, epsilon = 1e-5);
    }

    // Plain fixed-step RK4 on the two complex amplitudes, fully independent
    // of the Bloch formulation under test.
    fn schroedinger_r3(p: &PulseParams, t_f: f64, n: usize) -> f64 {
        let mut c = [1.0, 0.0, 0.0, 0.0]; // re c1, im c1, re c2, im c2
        let h = t_f / n as f64;
        let rhs = |t: f64, c: &[f64; 4]| -> [f64; 4] {
            let om = model::gaussian_pump(t, p);
            let de = model::gaussian_stark(t, p).unwrap();
            // dc1 = -i (om/2) c2 ; dc2 = -i ((om/2) c1 + de c2)
            [
                0.5 * om * c[3],
                -0.5 * om * c[2],
                0.5 * om * c[1] + de * c[3],
                -0.5 * om * c[0] - de * c[2],
            ]
        };
        for i in 0..n {
            let t = i as f64 * h;
            let k1 = rhs(t, &c);
            let mut ca = c;
            for j in 0..4 {
                ca[j] = c[j] + 0.5 * h * k1[j];
            }
            let k2 = rhs(t + 0.5 * h, &ca);
            for j in 0..4 {
                ca[j] = c[j] + 0.5 * h * k2[j];
            }
            let k3 = rhs(t + 0.5 * h, &ca);
            for j in 0..4 {
                ca[j] = c[j] + h * k3[j];
            }
            let k4 = rhs(t + h, &ca);
            for j in 0..4 {
                c[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            }
        }
        let p2 = c[2] * c[2] + c[3] * c[3];
        let p1 = c[0] * c[0] + c[1] * c[1];
        p2 - p1
    }

    #[test]
    fn schroedinger_oracle_agrees() {
        let p = default_pulse_params();
        let r3_oracle = schroedinger_r3(&p, 100.0, 200_000);
        let field = GaussianField::new(p);
        let traj =
            integrate_bloch(&field, BlochVector::SOUTH, 0.0, 100.0, &IntegratorConfig::default(), 2)
                .unwrap();
        assert_abs_diff_eq!(traj.endpoint().r3, r3_oracle, epsilon = 1e-6);
    }

    #[test]
    fn rk4_order_of_accuracy() {
        let field = ConstField { delta: 0.0, omega: PI };
        let err = |step: f64| {
            let cfg = IntegratorConfig { method: Method::Rk4, max_step: step, ..Default::default() };
            let traj = integrate_bloch(&field, BlochVector::SOUTH, 0.0, 1.0, &cfg, 2).unwrap();
            let e = traj.endpoint();
            ((e.r1).powi(2) + (e.r2).powi(2) + (e.r3 - 1.0).powi(2)).sqrt()
        };
        let (e1, e2) = (err(0.02), err(0.01));
        assert!(e1 / e2 >= 8.0 * 0.9, "order ratio {} too small", e1 / e2);
    }

    #[test]
    fn coarse_fixed_step_drift_scales_as_h4() {
        let p = default_pulse_params();
        let field = GaussianField::new(p);
        let drift = |step: f64| {
            let cfg = IntegratorConfig { method: Method::Rk4, max_step: step, ..Default::default() };
            integrate_bloch(&field, BlochVector::SOUTH, 0.0, 100.0, &cfg, 2).unwrap().norm_drift
        };
        let (d1, d2) = (drift(0.05), drift(0.025));
        assert!(d1 / d2 > 10.0 && d1 / d2 < 24.0, "drift ratio {}", d1 / d2);
    }

    #[test]
    fn time_reversal_returns_to_start() {
        let p = default_pulse_params();
        let field = GaussianField::new(p);
        let cfg = IntegratorConfig::default();
        let fwd = integrate_bloch_raw(&field, BlochVector::SOUTH, 0.0, 100.0, &cfg).unwrap();
        let back = integrate_bloch_raw(
            &field,
            BlochVector::from_array(fwd.final_state()),
            100.0,
            0.0,
            &cfg,
        )
        .unwrap();
        let r = back.final_state();
        let err = (r[0].powi(2) + r[1].powi(2) + (r[2] + 1.0).powi(2)).sqrt();
        assert!(err < 100.0 * cfg.rel_tol, "reversal error {err}");
    }

    #[test]
    fn norm_drift_stays_below_1e8_at_paper_scale() {
        let p = default_pulse_params();
        let field = GaussianField::new(p);
        let cfg = IntegratorConfig::default();
        let traj = integrate_bloch(&field, BlochVector::SOUTH, 0.0, 100.0, &cfg, 2).unwrap();
        assert!(traj.norm_drift < 1e-8, "norm drift {}", traj.norm_drift);
    }

    #[test]
    fn zero_control_conservation_report_is_all_zero() {
        let field = ConstField { delta: 0.0, omega: 0.0 };
        let cfg = IntegratorConfig::default();
        let mut traj =
            integrate_bloch(&field, BlochVector::SOUTH, 0.0, 10.0, &cfg, 21).unwrap();
        traj.costates = Some(vec![[0.0; 3]; traj.times.len()]);
        traj.hamiltonian = Some(vec![0.0; traj.times.len()]);
        let rep = conservation_report(&traj);
        assert_eq!(rep.norm_drift, 0.0);
        assert_eq!(rep.h_drift, Some(0.0));
        assert_eq!(rep.l2_drift, Some(0.0));
        assert_eq!(rep.lsq_drift, Some(0.0));
        assert_eq!(rep.p_norm_drift, Some(0.0));
    }

    #[test]
    fn dense_output_matches_closed_form_rotation() {
        let field = ConstField { delta: 0.0, omega: PI };
        let cfg = IntegratorConfig::default();
        let traj = integrate_bloch(&field, BlochVector::SOUTH, 0.0, 1.0, &cfg, 101).unwrap();
        for (i, t) in traj.times.iter().enumerate() {
            // rotation about r1 by angle pi t from the south pole
            let ang = PI * t;
            let r = &traj.states[i];
            assert_abs_diff_eq!(r.r2, ang.sin(), epsilon = 1e-7);
            assert_abs_diff_eq!(r.r3, -ang.cos(), epsilon = 1e-7);
        }
    }

    #[test]
    fn csv_round_trip_format() {
        let field = ConstField { delta: 1.0, omega: 0.5 };
        let cfg = IntegratorConfig::default();
        let traj = integrate_bloch(&field, BlochVector::SOUTH, 0.0, 1.0, &cfg, 3).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "t,r1,r2,r3");
        let first: Vec<f64> =
            lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(first, vec![0.0, 0.0, 0.0, -1.0]);
    }

    #[test]
    fn step_underflow_is_reported() {
        // force an absurd tolerance on a fast oscillation so the controller
        // shrinks the step to nothing
        let rhs = |t: f64, y: &[f64; 1]| -> Result<[f64; 1]> {
            Ok([if t < 0.5 { y[0] } else { (1e18 * t).sin() * 1e18 }])
        };
        let cfg = IntegratorConfig { rel_tol: 1e-14, abs_tol: 1e-14, ..Default::default() };
        let out = solve_ivp(rhs, [1.0], 0.0, 1.0, &cfg);
        assert!(matches!(out, Err(Error::StepUnderflow { .. })));
    }
}
