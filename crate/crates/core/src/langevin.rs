//! Chemical Langevin approximation of the edge density.
//!
//! ```text
//! dy = μ(y) dt + σ(y) dW,   σ²(y) = (c1 (1 - y) + c2 y + c3 (1 - y) y²) / N
//! ```
//!
//! The three independent noise channels of the birth, death and triadic
//! reactions add up to a single Gaussian increment with variance
//! `σ²(y) dt` per Euler step, which is what the integrator draws.
//!
//! Mean first passage times solve `μ T' + ½ σ² T'' = -1` with one reflecting
//! (Neumann) and one absorbing (Dirichlet) end.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::path::{Observable, PathRecord, Recording};
use crate::rng::{self, SimRng};
use crate::tridiag;

/// Drift and squared diffusion of a scalar diffusion on `[0, 1]`.
pub trait Coefficients: Sync {
    fn drift(&self, y: f64) -> f64;
    fn diffusion_sq(&self, y: f64) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdeSpec {
    params: ModelParams,
    noise: bool,
}

impl SdeSpec {
    pub fn new(params: ModelParams) -> Self {
        Self {
            params,
            noise: true,
        }
    }

    /// The `N -> ∞` limit: zero diffusion, leaving the reaction-rate ODE.
    pub fn without_noise(mut self) -> Self {
        self.noise = false;
        self
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// Largest Euler step accepted without `allow_large_step`.
    pub fn step_bound(&self) -> f64 {
        1.0 / self.params.rate_scale()
    }
}

impl Coefficients for SdeSpec {
    fn drift(&self, y: f64) -> f64 {
        self.params.drift(y)
    }

    fn diffusion_sq(&self, y: f64) -> f64 {
        if !self.noise {
            return 0.0;
        }
        let y = y.clamp(0.0, 1.0);
        let p = &self.params;
        (p.c1() * (1.0 - y) + p.c2() * y + p.c3() * (1.0 - y) * y * y) / p.n_edges() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmOptions {
    pub t_end: f64,
    pub dt: f64,
    pub recording: Recording,
    /// Bypass the `dt < 1 / (c1 + c2 + c3)` guard.
    pub allow_large_step: bool,
}

impl EmOptions {
    pub fn new(t_end: f64, dt: f64, recording: Recording) -> Self {
        Self {
            t_end,
            dt,
            recording,
            allow_large_step: false,
        }
    }

    fn validate(&self, spec: &SdeSpec) -> Result<()> {
        crate::micro::check_horizon(self.t_end)?;
        self.recording.validate()?;
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt = {} must be > 0", self.dt)));
        }
        let bound = spec.step_bound();
        if !self.allow_large_step && self.dt >= bound {
            return Err(Error::StepTooLarge { dt: self.dt, bound });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmRun {
    pub path: PathRecord,
    /// Number of steps that left `[0, 1]` and were folded back.
    pub reflections: u64,
}

/// Folds `y` back into `[0, 1]`; returns the number of reflections applied.
fn fold_into_unit(y: &mut f64) -> u64 {
    let mut count = 0;
    loop {
        if *y < 0.0 {
            *y = -*y;
        } else if *y > 1.0 {
            *y = 2.0 - *y;
        } else {
            return count;
        }
        count += 1;
    }
}

/// Euler–Maruyama path of the density from `y0`.
pub fn em_path(spec: &SdeSpec, y0: f64, opts: &EmOptions, seed: u64) -> Result<EmRun> {
    opts.validate(spec)?;
    if !(0.0..=1.0).contains(&y0) {
        return Err(Error::InvalidParameter(format!("y0 = {y0} outside [0, 1]")));
    }
    Ok(integrate_em(spec, y0, opts, &mut rng::seeded(seed)))
}

fn integrate_em<C: Coefficients>(coeffs: &C, y0: f64, opts: &EmOptions, rng: &mut SimRng) -> EmRun {
    let mut path = PathRecord::new(Observable::Density);
    let mut reflections = 0;
    let mut y = y0;
    let mut t = 0.0;
    let mut steps = 0usize;
    path.push(0.0, y);

    let mut next_record = match opts.recording {
        Recording::TimeGrid(dt) => dt.min(opts.t_end),
        Recording::EveryEvents(_) => opts.t_end,
    };
    let mut record_index = 1u64;
    while t < opts.t_end {
        let target = match opts.recording {
            Recording::TimeGrid(_) => next_record,
            Recording::EveryEvents(_) => opts.t_end,
        };
        let h = opts.dt.min(target - t);
        let xi: f64 = rng.sample(StandardNormal);
        y += coeffs.drift(y) * h + (coeffs.diffusion_sq(y) * h).sqrt() * xi;
        reflections += fold_into_unit(&mut y);
        t = if h == target - t { target } else { t + h };
        steps += 1;
        match opts.recording {
            Recording::EveryEvents(k) => {
                if steps.is_multiple_of(k) {
                    path.push(t, y);
                }
            }
            Recording::TimeGrid(dt) => {
                if t >= next_record {
                    path.push(t, y);
                    record_index += 1;
                    next_record = (record_index as f64 * dt).min(opts.t_end);
                }
            }
        }
    }
    path.push(opts.t_end, y);
    EmRun { path, reflections }
}

/// Ensemble of `n_paths` EM paths on a common time grid, averaged pointwise.
///
/// Returns the mean path and the total reflection count.
pub fn em_ensemble_mean(
    spec: &SdeSpec,
    y0: f64,
    opts: &EmOptions,
    n_paths: usize,
    seed: u64,
) -> Result<(PathRecord, Vec<f64>, u64)> {
    opts.validate(spec)?;
    if !matches!(opts.recording, Recording::TimeGrid(_)) {
        return Err(Error::InvalidParameter(
            "ensemble averages need time-grid recording".into(),
        ));
    }
    if n_paths == 0 {
        return Err(Error::InvalidParameter("n_paths must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&y0) {
        return Err(Error::InvalidParameter(format!("y0 = {y0} outside [0, 1]")));
    }
    let runs: Vec<EmRun> = (0..n_paths)
        .into_par_iter()
        .map(|k| integrate_em(spec, y0, opts, &mut rng::stream(seed, k as u64)))
        .collect();
    let times = runs[0].path.times().to_vec();
    let mut sums = vec![0.0; times.len()];
    let mut sq = vec![0.0; times.len()];
    for run in &runs {
        for (k, v) in run.path.values().iter().enumerate() {
            sums[k] += v;
            sq[k] += v * v;
        }
    }
    let count = n_paths as f64;
    let mut mean = PathRecord::new(Observable::Density);
    let mut std_err = Vec::with_capacity(times.len());
    for (k, &t) in times.iter().enumerate() {
        let m = sums[k] / count;
        mean.push(t, m);
        let var = if n_paths > 1 {
            ((sq[k] - count * m * m) / (count - 1.0)).max(0.0)
        } else {
            0.0
        };
        std_err.push((var / count).sqrt());
    }
    let reflections = runs.iter().map(|r| r.reflections).sum();
    Ok((mean, std_err, reflections))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    /// `T'(a) = 0`, `T(b) = 0`.
    ReflectLeftAbsorbRight,
    /// `T(a) = 0`, `T'(b) = 0`.
    AbsorbLeftReflectRight,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MfptProblem {
    pub interval: (f64, f64),
    pub boundary: BoundaryKind,
    pub grid_points: usize,
}

impl MfptProblem {
    /// Reflect at 0, absorb at `b`.
    pub fn reflect_at_zero(b: f64, grid_points: usize) -> Self {
        Self {
            interval: (0.0, b),
            boundary: BoundaryKind::ReflectLeftAbsorbRight,
            grid_points,
        }
    }

    /// Absorb at `a`, reflect at 1.
    pub fn reflect_at_one(a: f64, grid_points: usize) -> Self {
        Self {
            interval: (a, 1.0),
            boundary: BoundaryKind::AbsorbLeftReflectRight,
            grid_points,
        }
    }

    fn validate(&self) -> Result<()> {
        let (a, b) = self.interval;
        if !(0.0 <= a && a < b && b <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "interval ({a}, {b}) must satisfy 0 <= a < b <= 1"
            )));
        }
        if self.grid_points < 3 {
            return Err(Error::InvalidParameter("at least 3 grid points required".into()));
        }
        Ok(())
    }
}

/// Mean first passage time on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MfptSolution {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl MfptSolution {
    /// Linear interpolation; `None` outside the grid.
    pub fn at(&self, x: f64) -> Option<f64> {
        let (first, last) = (self.grid[0], *self.grid.last()?);
        if !(first..=last).contains(&x) {
            return None;
        }
        let k = self.grid.partition_point(|&g| g <= x);
        if k >= self.grid.len() {
            return self.values.last().copied();
        }
        let (x0, x1) = (self.grid[k - 1], self.grid[k]);
        let w = (x - x0) / (x1 - x0);
        Some(self.values[k - 1] * (1.0 - w) + self.values[k] * w)
    }
}

/// Cell Péclet number `|μ| h / D` (with `D = σ²/2`) above which the drift is upwinded.
pub const PECLET_SWITCH: f64 = 2.0;

/// Finite-difference solve of `μ T' + ½ σ² T'' = -1`.
///
/// Second differences are central. The drift term is central unless the cell
/// Péclet number reaches [`PECLET_SWITCH`], where first-order upwinding keeps
/// the matrix an M-matrix. The Neumann end uses the one-sided second-order
/// stencil `(-3 T_0 + 4 T_1 - T_2) / 2h = 0`, folded into the first row by
/// eliminating `T_2` with the second row.
pub fn solve_mfpt<C: Coefficients>(coeffs: &C, problem: &MfptProblem) -> Result<MfptSolution> {
    problem.validate()?;
    let (a, b) = problem.interval;
    let m = problem.grid_points;
    // Work in s = distance from the reflecting end.
    let (x_reflect, dir) = match problem.boundary {
        BoundaryKind::ReflectLeftAbsorbRight => (a, 1.0),
        BoundaryKind::AbsorbLeftReflectRight => (b, -1.0),
    };
    let h = (b - a) / (m - 1) as f64;
    let x_at = |k: usize| {
        if k == m - 1 {
            // Land exactly on the absorbing end.
            if dir > 0.0 {
                b
            } else {
                a
            }
        } else {
            x_reflect + dir * k as f64 * h
        }
    };

    // Interior rows 1..=m-2 in s-coordinates.
    let row = |k: usize| -> Result<(f64, f64, f64)> {
        let x = x_at(k);
        let drift = dir * coeffs.drift(x);
        let diff = 0.5 * coeffs.diffusion_sq(x);
        if !(diff > 0.0) {
            return Err(Error::SingularSystem { row: k });
        }
        let second = diff / (h * h);
        let peclet = drift.abs() * h / diff;
        Ok(if peclet < PECLET_SWITCH {
            let first = drift / (2.0 * h);
            (second - first, -2.0 * second, second + first)
        } else if drift > 0.0 {
            (second, -2.0 * second - drift / h, second + drift / h)
        } else {
            (second - drift / h, -2.0 * second + drift / h, second)
        })
    };

    let unknowns = m - 1;
    let mut lower = vec![0.0; unknowns];
    let mut diag = vec![0.0; unknowns];
    let mut upper = vec![0.0; unknowns];
    let mut rhs = vec![-1.0; unknowns];
    for k in 1..unknowns {
        let (l, d, u) = row(k)?;
        lower[k] = l;
        diag[k] = d;
        upper[k] = u;
    }
    if unknowns >= 3 {
        let (l1, d1, u1) = (lower[1], diag[1], upper[1]);
        diag[0] = -3.0 + l1 / u1;
        upper[0] = 4.0 + d1 / u1;
        rhs[0] = -1.0 / u1;
    } else {
        // T_2 is the absorbing node.
        diag[0] = -3.0;
        upper[0] = 4.0;
        rhs[0] = 0.0;
    }

    let mut values = tridiag::solve(&lower, &diag, &upper, &rhs)?;
    values.push(0.0);
    let mut grid: Vec<f64> = (0..m).map(x_at).collect();
    if dir < 0.0 {
        grid.reverse();
        values.reverse();
    }
    Ok(MfptSolution { grid, values })
}

/// Langevin mean passage times from each stable root to the unstable one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MfptRow {
    pub n: usize,
    pub tau_low_to_mid: f64,
    pub tau_high_to_mid: f64,
}

impl MfptRow {
    pub fn ratio(&self) -> f64 {
        self.tau_low_to_mid / self.tau_high_to_mid
    }
}

/// For each `n`: reflect at 0 and absorb at `p2*` (queried at `p1*`), then
/// absorb at `p2*` and reflect at 1 (queried at `p3*`).
pub fn mfpt_curve(params: &ModelParams, n_values: &[usize], grid_points: usize) -> Result<Vec<MfptRow>> {
    let roots = params.solve_cubic()?;
    let (p1, p2, p3) = roots.bistable().ok_or_else(|| {
        Error::InvalidParameter("passage-time curves need the bistable regime".into())
    })?;
    n_values
        .par_iter()
        .map(|&n| {
            let spec = SdeSpec::new(params.with_nodes(n)?);
            let low = solve_mfpt(&spec, &MfptProblem::reflect_at_zero(p2, grid_points))?;
            let high = solve_mfpt(&spec, &MfptProblem::reflect_at_one(p2, grid_points))?;
            Ok(MfptRow {
                n,
                tau_low_to_mid: low.at(p1).expect("p1 inside [0, p2]"),
                tau_high_to_mid: high.at(p3).expect("p3 inside [p2, 1]"),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Constant {
        drift: f64,
        diffusion_sq: f64,
    }

    impl Coefficients for Constant {
        fn drift(&self, _: f64) -> f64 {
            self.drift
        }
        fn diffusion_sq(&self, _: f64) -> f64 {
            self.diffusion_sq
        }
    }

    #[test]
    fn noise_variance_is_sum_of_channels() {
        let p = ModelParams::bistable(30).unwrap();
        let spec = SdeSpec::new(p);
        for y in [0.0, 0.2, 0.5, 0.9, 1.0] {
            let channels = [p.c1() * (1.0 - y), p.c2() * y, p.c3() * (1.0 - y) * y * y];
            let sum: f64 = channels.iter().map(|c| c / 435.0).sum();
            assert!((spec.diffusion_sq(y) - sum).abs() < 1e-16);
            assert_eq!(spec.drift(y), p.drift(y));
        }
    }

    #[test]
    fn step_guard() {
        let spec = SdeSpec::new(ModelParams::bistable(30).unwrap());
        let mut opts = EmOptions::new(1.0, 1.0, Recording::EveryEvents(1));
        assert!(matches!(em_path(&spec, 0.2, &opts, 0), Err(Error::StepTooLarge { .. })));
        opts.allow_large_step = true;
        assert!(em_path(&spec, 0.2, &opts, 0).is_ok());
        assert!(em_path(&spec, 1.2, &EmOptions::new(1.0, 0.1, Recording::EveryEvents(1)), 0).is_err());
    }

    #[test]
    fn noiseless_fixed_point_stays_put() {
        let spec = SdeSpec::new(ModelParams::new(30, 0.1, 0.1, 0.0).unwrap()).without_noise();
        let run = em_path(&spec, 0.5, &EmOptions::new(50.0, 0.01, Recording::TimeGrid(1.0)), 3).unwrap();
        assert!(run.path.values().iter().all(|&v| v == 0.5));
        assert_eq!(run.path.len(), 51);
        assert_eq!(run.reflections, 0);
    }

    #[test]
    fn fold_reflection() {
        let mut y = -0.25;
        assert_eq!(fold_into_unit(&mut y), 1);
        assert_eq!(y, 0.25);
        let mut y = 1.5;
        assert_eq!(fold_into_unit(&mut y), 1);
        assert_eq!(y, 0.5);
        let mut y = 2.5;
        assert_eq!(fold_into_unit(&mut y), 2);
        assert_eq!(y, 0.5);
    }

    #[test]
    fn mfpt_pure_diffusion_matches_parabola() {
        let c = Constant {
            drift: 0.0,
            diffusion_sq: 0.3,
        };
        let b = 0.6;
        let sol = solve_mfpt(&c, &MfptProblem::reflect_at_zero(b, 201)).unwrap();
        for (&x, &t) in sol.grid.iter().zip(&sol.values) {
            let exact = (b * b - x * x) / 0.3;
            assert!((t - exact).abs() <= 1e-9 * exact.max(1.0), "x = {x}");
        }
        // Mirror problem: absorb at a, reflect at 1.
        let a = 0.4;
        let sol = solve_mfpt(&c, &MfptProblem::reflect_at_one(a, 201)).unwrap();
        for (&x, &t) in sol.grid.iter().zip(&sol.values) {
            let exact = ((1.0 - a) * (1.0 - a) - (1.0 - x) * (1.0 - x)) / 0.3;
            assert!((t - exact).abs() <= 1e-9 * exact.max(1.0), "x = {x}");
        }
    }

    #[test]
    fn mfpt_three_point_grid() {
        let c = Constant {
            drift: 0.0,
            diffusion_sq: 2.0,
        };
        let sol = solve_mfpt(&c, &MfptProblem::reflect_at_zero(1.0, 3)).unwrap();
        assert_eq!(sol.values.len(), 3);
        assert_eq!(sol.values[2], 0.0);
        assert!(sol.values[0] >= sol.values[1] && sol.values[1] > 0.0);
    }

    #[test]
    fn mfpt_rejects_bad_problems() {
        let c = Constant {
            drift: 0.0,
            diffusion_sq: 1.0,
        };
        assert!(solve_mfpt(&c, &MfptProblem::reflect_at_zero(0.5, 2)).is_err());
        assert!(solve_mfpt(&c, &MfptProblem::reflect_at_zero(1.5, 10)).is_err());
        let flat = Constant {
            drift: 1.0,
            diffusion_sq: 0.0,
        };
        assert!(matches!(
            solve_mfpt(&flat, &MfptProblem::reflect_at_zero(0.5, 10)),
            Err(Error::SingularSystem { .. })
        ));
    }

    #[test]
    fn interpolation() {
        let sol = MfptSolution {
            grid: vec![0.0, 0.5, 1.0],
            values: vec![2.0, 1.0, 0.0],
        };
        assert_eq!(sol.at(0.25), Some(1.5));
        assert_eq!(sol.at(1.0), Some(0.0));
        assert_eq!(sol.at(1.1), None);
    }
}
