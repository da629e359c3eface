//! Time-stamped scalar trajectories shared by all path simulators.

use crate::error::{Error, Result};

/// What a [`PathRecord`] stores at each time stamp.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    /// Number of present edges, an integer in `[0, N]`.
    EdgeCount,
    /// Fraction of present edges, in `[0, 1]`.
    Density,
}

/// When a path simulator writes a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Recording {
    /// After every `k`-th event (jump processes) or integrator step.
    EveryEvents(usize),
    /// On the fixed grid `0, dt, 2 dt, ...`, holding the last state between events.
    TimeGrid(f64),
}

impl Recording {
    pub(crate) fn validate(&self) -> Result<()> {
        match *self {
            Recording::EveryEvents(0) => Err(Error::InvalidParameter(
                "event stride must be at least 1".into(),
            )),
            Recording::TimeGrid(dt) if !(dt.is_finite() && dt > 0.0) => Err(
                Error::InvalidParameter(format!("recording interval {dt} must be > 0")),
            ),
            _ => Ok(()),
        }
    }
}

/// A piecewise-constant (jump processes) or sampled (SDE/ODE) trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    times: Vec<f64>,
    values: Vec<f64>,
    observable: Observable,
}

impl PathRecord {
    pub fn new(observable: Observable) -> Self {
        Self {
            times: Vec::new(),
            values: Vec::new(),
            observable,
        }
    }

    /// Appends a sample. Times that do not advance are ignored so the record
    /// stays strictly increasing.
    pub fn push(&mut self, t: f64, value: f64) {
        if self.times.last().is_some_and(|&last| t <= last) {
            return;
        }
        self.times.push(t);
        self.values.push(value);
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn observable(&self) -> Observable {
        self.observable
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().copied().zip(self.values.iter().copied())
    }

    /// Value held at time `t` (last sample at or before `t`).
    pub fn value_at(&self, t: f64) -> Option<f64> {
        let idx = self.times.partition_point(|&s| s <= t);
        idx.checked_sub(1).map(|i| self.values[i])
    }

    /// Converts an edge-count record to densities by dividing by `n_edges`.
    pub fn to_density(&self, n_edges: usize) -> PathRecord {
        match self.observable {
            Observable::Density => self.clone(),
            Observable::EdgeCount => PathRecord {
                times: self.times.clone(),
                values: self.values.iter().map(|v| v / n_edges as f64).collect(),
                observable: Observable::Density,
            },
        }
    }

    /// Time average of the piecewise-constant path over `[times[0], t_end]`.
    pub fn time_average(&self, t_end: f64) -> f64 {
        let mut acc = 0.0;
        let mut span = 0.0;
        for (k, (&t, &v)) in self.times.iter().zip(&self.values).enumerate() {
            if t >= t_end {
                break;
            }
            let next = self.times.get(k + 1).copied().unwrap_or(t_end).min(t_end);
            acc += v * (next - t);
            span += next - t;
        }
        if span > 0.0 {
            acc / span
        } else {
            self.values.first().copied().unwrap_or(f64::NAN)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn push_keeps_times_strictly_increasing() {
        let mut p = PathRecord::new(Observable::Density);
        p.push(0.0, 0.1);
        p.push(0.0, 0.2);
        p.push(1.0, 0.3);
        assert_eq!(p.times(), &[0.0, 1.0]);
        assert_eq!(p.values(), &[0.1, 0.3]);
    }

    #[test]
    fn time_average_weights_by_holding_time() {
        let mut p = PathRecord::new(Observable::EdgeCount);
        p.push(0.0, 2.0);
        p.push(1.0, 4.0);
        assert_eq!(p.time_average(4.0), (2.0 + 4.0 * 3.0) / 4.0);
        assert_eq!(p.value_at(0.5), Some(2.0));
        assert_eq!(p.value_at(-1.0), None);
        assert_eq!(p.to_density(4).values(), &[0.5, 1.0]);
    }

    #[test]
    fn recording_validation() {
        assert!(Recording::EveryEvents(0).validate().is_err());
        assert!(Recording::TimeGrid(0.0).validate().is_err());
        assert!(Recording::TimeGrid(0.5).validate().is_ok());
    }
}
