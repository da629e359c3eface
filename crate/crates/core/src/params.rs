//! Model parameters, the density drift and its cubic root structure.
//!
//! Every level of the hierarchy shares the same three rate constants:
//! spontaneous edge birth `c1`, spontaneous edge death `c2` and the
//! size-independent triadic constant `c3`. The per-reaction triadic rate
//! used by the microscale model is `c3 / (n - 2)`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Rate constants `(c1, c2, c3)` of the bistable parameter set.
pub const BISTABLE_RATES: (f64, f64, f64) = (0.025, 0.25, 0.91);
/// Rate constants `(c1, c2, c3)` of the monostable parameter set.
pub const MONOSTABLE_RATES: (f64, f64, f64) = (0.25, 0.25, 0.91);

/// Relative discriminant below which the drift cubic is declared to have a
/// repeated root.
pub const REPEATED_ROOT_TOLERANCE: f64 = 1e-9;

/// Rate constants and node count of one member of the model family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    n: usize,
    c1: f64,
    c2: f64,
    c3: f64,
}

impl ModelParams {
    /// Validates `n >= 3`, `c1 > 0`, `c2 > 0` and `c3 >= 0` (all finite).
    pub fn new(n: usize, c1: f64, c2: f64, c3: f64) -> Result<Self> {
        let mut problems = Vec::new();
        if n < 3 {
            problems.push(format!("n = {n}: at least 3 nodes are required"));
        }
        if !(c1.is_finite() && c1 > 0.0) {
            problems.push(format!("c1 = {c1}: must be finite and > 0"));
        }
        if !(c2.is_finite() && c2 > 0.0) {
            problems.push(format!("c2 = {c2}: must be finite and > 0"));
        }
        if !(c3.is_finite() && c3 >= 0.0) {
            problems.push(format!("c3 = {c3}: must be finite and >= 0"));
        }
        if problems.is_empty() {
            Ok(Self { n, c1, c2, c3 })
        } else {
            Err(Error::InvalidParameter(problems.join("; ")))
        }
    }

    /// Skips the positivity checks on the rates. Only `n >= 3` is enforced.
    ///
    /// Intended for probing degenerate corners (for example `c1 = 0`, where the
    /// empty graph is absorbing); the analytic routines assume valid rates.
    pub fn new_unchecked(n: usize, c1: f64, c2: f64, c3: f64) -> Self {
        assert!(n >= 3, "n must be at least 3");
        Self { n, c1, c2, c3 }
    }

    pub fn bistable(n: usize) -> Result<Self> {
        let (c1, c2, c3) = BISTABLE_RATES;
        Self::new(n, c1, c2, c3)
    }

    pub fn monostable(n: usize) -> Result<Self> {
        let (c1, c2, c3) = MONOSTABLE_RATES;
        Self::new(n, c1, c2, c3)
    }

    /// Same rates, different node count.
    pub fn with_nodes(&self, n: usize) -> Result<Self> {
        Self::new(n, self.c1, self.c2, self.c3)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }

    pub fn c2(&self) -> f64 {
        self.c2
    }

    pub fn c3(&self) -> f64 {
        self.c3
    }

    /// Number of node pairs, `N = n(n-1)/2`.
    pub fn n_edges(&self) -> usize {
        self.n * (self.n - 1) / 2
    }

    /// Rate of a single triadic closure reaction, `c3 / (n - 2)`.
    pub fn c3_hat(&self) -> f64 {
        self.c3 / (self.n - 2) as f64
    }

    /// Deterministic drift of the edge density:
    /// `(1 - p)(c1 + c3 p^2) - c2 p`.
    pub fn drift(&self, p: f64) -> f64 {
        (1.0 - p) * (self.c1 + self.c3 * p * p) - self.c2 * p
    }

    /// Derivative of [`drift`](Self::drift) with respect to the density.
    pub fn drift_slope(&self, p: f64) -> f64 {
        -3.0 * self.c3 * p * p + 2.0 * self.c3 * p - (self.c1 + self.c2)
    }

    /// `f(p) = (1 - p)(c1 + c3 p^2) / c2`; its fixed points are the drift roots.
    pub fn f_ratio(&self, p: f64) -> f64 {
        (1.0 - p) * (self.c1 + self.c3 * p * p) / self.c2
    }

    /// Sum of the rate constants, used to scale residual tolerances.
    pub fn rate_scale(&self) -> f64 {
        self.c1 + self.c2 + self.c3
    }

    /// Real roots of `drift(p) = 0`, all of which lie in `(0, 1)`.
    ///
    /// Fails with [`Error::DegenerateRegime`] when two roots coincide within
    /// [`REPEATED_ROOT_TOLERANCE`]; see [`solve_cubic_with`](Self::solve_cubic_with)
    /// to opt into a monostable reading of that case.
    pub fn solve_cubic(&self) -> Result<CubicRoots> {
        self.solve_cubic_with(DegeneratePolicy::Reject)
    }

    pub fn solve_cubic_with(&self, policy: DegeneratePolicy) -> Result<CubicRoots> {
        if self.c3 == 0.0 {
            let root = self.c1 / (self.c1 + self.c2);
            return Ok(CubicRoots {
                roots: vec![root],
                regime: Regime::Monostable,
            });
        }

        // drift = -c3 (p^3 - p^2 + b p - c) with b = (c1 + c2)/c3, c = c1/c3.
        // Shift p = t + 1/3 to reach t^3 + P t + Q.
        let b = (self.c1 + self.c2) / self.c3;
        let c = self.c1 / self.c3;
        let dp = b - 1.0 / 3.0;
        let dq = -2.0 / 27.0 + b / 3.0 - c;
        let four_p3 = 4.0 * dp * dp * dp;
        let q2_27 = 27.0 * dq * dq;
        let disc = -(four_p3 + q2_27);
        let scale = four_p3.abs().max(q2_27);
        let relative = if scale > 0.0 { disc / scale } else { 0.0 };

        let mut candidates = if disc > 0.0 {
            let m = 2.0 * (-dp / 3.0).sqrt();
            let arg = (3.0 * dq / (2.0 * dp) * (-3.0 / dp).sqrt()).clamp(-1.0, 1.0);
            let theta = arg.acos() / 3.0;
            (0..3)
                .map(|k| m * (theta - 2.0 * PI * k as f64 / 3.0).cos() + 1.0 / 3.0)
                .collect::<Vec<_>>()
        } else {
            let s = (dq * dq / 4.0 + dp * dp * dp / 27.0).max(0.0).sqrt();
            let u = (-dq / 2.0 + s).cbrt();
            let v = (-dq / 2.0 - s).cbrt();
            let real = u + v + 1.0 / 3.0;
            if relative.abs() <= REPEATED_ROOT_TOLERANCE {
                // The complex pair has collapsed onto the real axis.
                let pair = -(u + v) / 2.0 + 1.0 / 3.0;
                vec![real, pair, pair]
            } else {
                vec![real]
            }
        };
        for r in candidates.iter_mut() {
            *r = self.polish_root(*r);
        }
        candidates.sort_by(f64::total_cmp);

        if relative.abs() <= REPEATED_ROOT_TOLERANCE {
            return match policy {
                DegeneratePolicy::Reject => Err(Error::DegenerateRegime { roots: candidates }),
                DegeneratePolicy::TreatAsMonostable => Ok(CubicRoots {
                    roots: vec![simple_root(&candidates)],
                    regime: Regime::Monostable,
                }),
            };
        }

        let regime = if candidates.len() == 3 {
            Regime::Bistable
        } else {
            Regime::Monostable
        };
        Ok(CubicRoots {
            roots: candidates,
            regime,
        })
    }

    /// Damped Newton refinement on the drift, kept inside `(0, 1)`.
    fn polish_root(&self, mut r: f64) -> f64 {
        r = r.clamp(f64::EPSILON, 1.0 - f64::EPSILON);
        let mut residual = self.drift(r).abs();
        for _ in 0..16 {
            if residual == 0.0 {
                break;
            }
            let slope = self.drift_slope(r);
            if slope == 0.0 {
                break;
            }
            let mut step = self.drift(r) / slope;
            let mut improved = false;
            for _ in 0..8 {
                let trial = (r - step).clamp(f64::EPSILON, 1.0 - f64::EPSILON);
                let trial_residual = self.drift(trial).abs();
                if trial_residual < residual {
                    r = trial;
                    residual = trial_residual;
                    improved = true;
                    break;
                }
                step *= 0.5;
            }
            if !improved {
                break;
            }
        }
        r
    }
}

/// Picks the root that is not part of a coincident pair.
fn simple_root(sorted: &[f64]) -> f64 {
    match sorted {
        [a, b, c] => {
            if (b - a).abs() <= (c - b).abs() {
                *c
            } else {
                *a
            }
        }
        [a, ..] => *a,
        [] => unreachable!("drift changes sign on [0, 1]"),
    }
}

/// How [`ModelParams::solve_cubic_with`] reacts to a repeated root.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DegeneratePolicy {
    #[default]
    Reject,
    /// Report only the root at which the drift changes sign.
    TreatAsMonostable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Monostable,
    Bistable,
}

/// Sorted real roots of the drift cubic.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicRoots {
    roots: Vec<f64>,
    regime: Regime,
}

impl CubicRoots {
    pub fn roots(&self) -> &[f64] {
        &self.roots
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    /// `(low, trough, high)` densities when bistable.
    pub fn bistable(&self) -> Option<(f64, f64, f64)> {
        match (self.regime, self.roots.as_slice()) {
            (Regime::Bistable, [a, b, c]) => Some((*a, *b, *c)),
            _ => None,
        }
    }

    pub fn monostable(&self) -> Option<f64> {
        match (self.regime, self.roots.as_slice()) {
            (Regime::Monostable, [a]) => Some(*a),
            _ => None,
        }
    }
}
