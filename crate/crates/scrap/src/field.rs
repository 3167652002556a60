//! Time-parameterized control fields fed to the Bloch integrator.
//!
//! Three representations are used in practice: the analytic Gaussian pair,
//! realized optimal pulses replayed from a dense sample grid, and perturbed
//! wrappers around either (see [`crate::inhom`]).

use crate::error::Result;
use crate::model::{self, ControlSample, PulseParams};

/// A control field evaluable at any time inside its window.
pub trait ControlField {
    /// Sample (delta, omega), with derivatives when the representation has them.
    fn sample(&self, t: f64) -> Result<ControlSample>;
}

/// The analytic Gaussian Stark/pump pair. Derivatives are always analytic.
#[derive(Clone, Copy, Debug)]
pub struct GaussianField {
    pub params: PulseParams,
}

impl GaussianField {
    pub fn new(params: PulseParams) -> Self {
        GaussianField { params }
    }
}

impl ControlField for GaussianField {
    fn sample(&self, t: f64) -> Result<ControlSample> {
        let delta = model::gaussian_stark(t, &self.params)?;
        let omega = model::gaussian_pump(t, &self.params);
        Ok(ControlSample::with_derivatives(
            delta,
            omega,
            model::gaussian_stark_deriv(t, &self.params)?,
            model::gaussian_pump_deriv(t, &self.params),
        ))
    }
}

/// Controls replayed from a uniform sample grid by cubic Hermite interpolation
/// when derivatives are stored, linear interpolation otherwise.
#[derive(Clone, Debug)]
pub struct SampledField {
    pub times: Vec<f64>,
    pub samples: Vec<ControlSample>,
}

impl SampledField {
    pub fn new(times: Vec<f64>, samples: Vec<ControlSample>) -> Result<Self> {
        if times.len() != samples.len() || times.len() < 2 {
            return Err(crate::error::Error::InvalidParams(
                "sampled field needs at least two matching time/sample pairs".into(),
            ));
        }
        if !times.windows(2).all(|w| w[1] > w[0]) {
            return Err(crate::error::Error::InvalidParams(
                "sampled field times must be strictly increasing".into(),
            ));
        }
        Ok(SampledField { times, samples })
    }

    fn segment(&self, t: f64) -> usize {
        match self.times.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
            Ok(i) => i.min(self.times.len() - 2),
            Err(i) => i.clamp(1, self.times.len() - 1) - 1,
        }
    }
}

impl ControlField for SampledField {
    fn sample(&self, t: f64) -> Result<ControlSample> {
        let i = self.segment(t);
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let (a, b) = (&self.samples[i], &self.samples[i + 1]);
        let h = t1 - t0;
        let x = ((t - t0) / h).clamp(0.0, 1.0);
        match (a.derivatives, b.derivatives) {
            (Some(da), Some(db)) => {
                let herm = |y0: f64, y1: f64, d0: f64, d1: f64| {
                    let x2 = x * x;
                    let x3 = x2 * x;
                    let (h00, h10, h01, h11) = (
                        2.0 * x3 - 3.0 * x2 + 1.0,
                        x3 - 2.0 * x2 + x,
                        -2.0 * x3 + 3.0 * x2,
                        x3 - x2,
                    );
                    let value = h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1;
                    let dvalue = ((6.0 * x2 - 6.0 * x) * y0
                        + (3.0 * x2 - 4.0 * x + 1.0) * h * d0
                        + (-6.0 * x2 + 6.0 * x) * y1
                        + (3.0 * x2 - 2.0 * x) * h * d1)
                        / h;
                    (value, dvalue)
                };
                let (delta, dd) = herm(a.delta, b.delta, da.ddelta_dt, db.ddelta_dt);
                let (omega, dw) = herm(a.omega, b.omega, da.domega_dt, db.domega_dt);
                Ok(ControlSample::with_derivatives(delta, omega, dd, dw))
            }
            _ => Ok(ControlSample::new(
                a.delta + x * (b.delta - a.delta),
                a.omega + x * (b.omega - a.omega),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::default_pulse_params;
    use approx::assert_relative_eq;

    #[test]
    fn gaussian_field_samples_with_derivatives() {
        let f = GaussianField::new(default_pulse_params());
        let s = f.sample(50.0).unwrap();
        assert!(s.derivatives.is_some());
        assert_relative_eq!(s.omega, 7.9788456, max_relative = 1e-6);
    }

    #[test]
    fn sampled_field_reproduces_smooth_controls() {
        // sample a sine pair on a coarse grid, replay on a fine one
        let n = 200;
        let times: Vec<f64> = (0..=n).map(|i| i as f64 * 100.0 / n as f64).collect();
        let samples: Vec<ControlSample> = times
            .iter()
            .map(|&t| {
                let w = 0.0628;
                ControlSample::with_derivatives(
                    (w * t).sin(),
                    (w * t).cos(),
                    w * (w * t).cos(),
                    -w * (w * t).sin(),
                )
            })
            .collect();
        let f = SampledField::new(times, samples).unwrap();
        for i in 0..500 {
            let t = i as f64 * 0.1997;
            let s = f.sample(t).unwrap();
            assert_relative_eq!(s.delta, (0.0628 * t).sin(), epsilon = 1e-6);
            assert_relative_eq!(s.omega, (0.0628 * t).cos(), epsilon = 1e-6);
        }
    }

    #[test]
    fn sampled_field_rejects_bad_grids() {
        assert!(SampledField::new(vec![0.0], vec![ControlSample::new(0.0, 0.0)]).is_err());
        assert!(SampledField::new(
            vec![0.0, 0.0],
            vec![ControlSample::new(0.0, 0.0), ControlSample::new(0.0, 0.0)]
        )
        .is_err());
    }
}
