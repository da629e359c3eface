//! Reaction-rate ODE `dy/dt = μ(y)` and its unit-step Euler map.

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::path::{Observable, PathRecord};

#[derive(Debug, Clone, PartialEq)]
pub struct OdeRun {
    pub y0: f64,
    pub t_end: f64,
    pub step: f64,
    pub trace: PathRecord,
    /// `|y(t_end)|` difference against a rerun with half the step.
    pub step_halving_error: f64,
}

impl OdeRun {
    pub fn terminal(&self) -> f64 {
        *self.trace.values().last().expect("trace holds the initial value")
    }
}

/// Classical fourth-order Runge–Kutta on `[0, t_end]` with a fixed step
/// (the last step is shortened to land on `t_end`).
pub fn integrate(params: &ModelParams, y0: f64, t_end: f64, step: f64) -> Result<OdeRun> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::InvalidParameter(format!("step = {step} must be > 0")));
    }
    if !(0.0..=1.0).contains(&y0) {
        return Err(Error::InvalidParameter(format!("y0 = {y0} outside [0, 1]")));
    }
    crate::micro::check_horizon(t_end)?;
    let trace = rk4_trace(params, y0, t_end, step);
    let half = rk4_trace(params, y0, t_end, step / 2.0);
    let terminal = *trace.values().last().unwrap();
    let step_halving_error = (terminal - half.values().last().unwrap()).abs();
    Ok(OdeRun {
        y0,
        t_end,
        step,
        trace,
        step_halving_error,
    })
}

fn rk4_trace(params: &ModelParams, y0: f64, t_end: f64, step: f64) -> PathRecord {
    let f = |y: f64| params.drift(y);
    let mut trace = PathRecord::new(Observable::Density);
    trace.push(0.0, y0);
    let mut y = y0;
    let mut k = 0u64;
    loop {
        let t = k as f64 * step;
        if t >= t_end {
            break;
        }
        let next = ((k + 1) as f64 * step).min(t_end);
        let h = next - t;
        let k1 = f(y);
        let k2 = f(y + 0.5 * h * k1);
        let k3 = f(y + 0.5 * h * k2);
        let k4 = f(y + h * k3);
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        trace.push(next, y);
        k += 1;
    }
    trace
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanFieldRun {
    /// `y_0, y_1, ..., y_{n_steps}`.
    pub values: Vec<f64>,
    /// First iteration index whose value left `[0, 1]`, if any. Values are
    /// reported as computed, never clamped.
    pub first_excursion: Option<usize>,
}

/// Iterates `y <- y + μ(y)`: forward Euler with unit step.
pub fn mean_field_euler(params: &ModelParams, y0: f64, n_steps: usize) -> Result<MeanFieldRun> {
    if !(0.0..=1.0).contains(&y0) {
        return Err(Error::InvalidParameter(format!("y0 = {y0} outside [0, 1]")));
    }
    let mut values = Vec::with_capacity(n_steps + 1);
    values.push(y0);
    let mut y = y0;
    let mut first_excursion = None;
    for k in 1..=n_steps {
        y += params.drift(y);
        if first_excursion.is_none() && !(0.0..=1.0).contains(&y) {
            first_excursion = Some(k);
        }
        values.push(y);
    }
    Ok(MeanFieldRun {
        values,
        first_excursion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_input() {
        let p = ModelParams::bistable(30).unwrap();
        assert!(integrate(&p, 0.2, 10.0, 0.0).is_err());
        assert!(integrate(&p, 0.2, 10.0, -1.0).is_err());
        assert!(integrate(&p, 1.2, 10.0, 0.1).is_err());
        assert!(mean_field_euler(&p, -0.1, 10).is_err());
    }

    #[test]
    fn partial_last_step_lands_on_horizon() {
        let p = ModelParams::bistable(30).unwrap();
        let run = integrate(&p, 0.2, 1.05, 0.1).unwrap();
        assert_eq!(*run.trace.times().last().unwrap(), 1.05);
        assert_eq!(run.trace.len(), 12);
    }

    #[test]
    fn euler_overshoot_is_flagged() {
        // Large rates make the unit-step map jump out of [0, 1].
        let p = ModelParams::new(30, 3.0, 3.0, 0.0).unwrap();
        let run = mean_field_euler(&p, 0.0, 5).unwrap();
        assert_eq!(run.first_excursion, Some(1));
        assert_eq!(run.values[1], 3.0);
    }
}
