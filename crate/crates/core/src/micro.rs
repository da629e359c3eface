//! Exact stochastic simulation of the microscale edge reactions.
//!
//! Three reaction classes act on the pair `{i, j}`:
//!
//! * birth, `O_ij -> E_ij`, rate `c1` per absent pair;
//! * death, `E_ij -> O_ij`, rate `c2` per present pair;
//! * triadic closure, `O_ij + E_ik + E_jk -> E_ij + E_ik + E_jk`, rate
//!   `c3 / (n - 2)` per open wedge.
//!
//! Each step draws the waiting time from the summed class propensity, picks a
//! class in proportion to its propensity, then picks a pair inside the class
//! (uniformly for birth and death, by wedge weight for triadic closure).

use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{GraphState, InitialCondition};
use crate::params::ModelParams;
use crate::path::{Observable, PathRecord, Recording};
use crate::rng::{self, SimRng};

/// Total propensity of each reaction class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassPropensities {
    pub birth: f64,
    pub death: f64,
    pub triadic: f64,
    pub sum: f64,
}

pub fn class_propensities(state: &GraphState, params: &ModelParams) -> ClassPropensities {
    let edges = state.edge_count() as f64;
    let birth = params.c1() * (state.n_edges() as f64 - edges);
    let death = params.c2() * edges;
    let triadic = params.c3_hat() * state.open_wedge_total() as f64;
    ClassPropensities {
        birth,
        death,
        triadic,
        sum: death + birth + triadic,
    }
}

/// The reaction fired by one SSA step, with 0-indexed nodes `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reaction {
    Birth(usize, usize),
    Death(usize, usize),
    Triadic(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsaStep {
    pub dt: f64,
    pub reaction: Reaction,
}

/// Draws the waiting time and reaction, then applies the reaction to `state`.
pub fn ssa_step<R: Rng + ?Sized>(
    state: &mut GraphState,
    params: &ModelParams,
    rng: &mut R,
) -> Result<SsaStep> {
    let (dt, reaction) = draw_event(state, params, rng)?;
    apply(state, reaction);
    Ok(SsaStep { dt, reaction })
}

fn draw_event<R: Rng + ?Sized>(
    state: &GraphState,
    params: &ModelParams,
    rng: &mut R,
) -> Result<(f64, Reaction)> {
    let a = class_propensities(state, params);
    if !(a.sum > 0.0) {
        return Err(Error::StuckState);
    }
    let e: f64 = rng.sample(Exp1);
    let dt = e / a.sum;

    let u = rng.random::<f64>() * a.sum;
    let reaction = if u < a.death {
        state.sample_present(rng).map(|p| to_reaction(state, p, Reaction::Death))
    } else if u < a.death + a.birth {
        state.sample_absent(rng).map(|p| to_reaction(state, p, Reaction::Birth))
    } else {
        state.sample_open_wedge(rng).map(|p| to_reaction(state, p, Reaction::Triadic))
    };
    // A class with zero propensity can only be hit through rounding at the
    // top of the interval; fall back to whichever class is populated.
    let reaction = match reaction {
        Some(r) => r,
        None => state
            .sample_open_wedge(rng)
            .map(|p| to_reaction(state, p, Reaction::Triadic))
            .or_else(|| state.sample_absent(rng).map(|p| to_reaction(state, p, Reaction::Birth)))
            .or_else(|| state.sample_present(rng).map(|p| to_reaction(state, p, Reaction::Death)))
            .ok_or(Error::StuckState)?,
    };
    Ok((dt, reaction))
}

fn to_reaction(state: &GraphState, p: usize, make: fn(usize, usize) -> Reaction) -> Reaction {
    let (i, j) = state.pair_nodes(p);
    make(i, j)
}

fn apply(state: &mut GraphState, reaction: Reaction) {
    let (i, j, present) = match reaction {
        Reaction::Birth(i, j) | Reaction::Triadic(i, j) => (i, j, true),
        Reaction::Death(i, j) => (i, j, false),
    };
    let p = state.pair_index(i, j).expect("reaction on a valid pair");
    debug_assert_ne!(state.has_edge(i, j), present);
    state.flip(p);
}

/// A microscale trajectory in progress.
#[derive(Debug, Clone)]
pub struct MicroSimulator {
    state: GraphState,
    params: ModelParams,
    rng: SimRng,
    time: f64,
    events: u64,
}

impl MicroSimulator {
    pub fn new(initial: GraphState, params: ModelParams, rng: SimRng) -> Result<Self> {
        if initial.n() != params.n() {
            return Err(Error::InvalidParameter(format!(
                "initial graph has {} nodes but the parameters ask for {}",
                initial.n(),
                params.n()
            )));
        }
        Ok(Self {
            state: initial,
            params,
            rng,
            time: 0.0,
            events: 0,
        })
    }

    pub fn state(&self) -> &GraphState {
        &self.state
    }

    pub fn into_state(self) -> GraphState {
        self.state
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn events(&self) -> u64 {
        self.events
    }

    /// Runs events up to time `t_stop`, calling `on_event(t, state)` after each.
    ///
    /// The event that would cross `t_stop` is discarded and the clock is set to
    /// `t_stop`; exponential waiting times are memoryless, so the path law is
    /// unchanged.
    pub fn advance<F>(&mut self, t_stop: f64, mut on_event: F) -> Result<()>
    where
        F: FnMut(f64, &GraphState),
    {
        while self.time < t_stop {
            let (dt, reaction) = draw_event(&self.state, &self.params, &mut self.rng)?;
            if self.time + dt > t_stop {
                self.time = t_stop;
                break;
            }
            self.time += dt;
            apply(&mut self.state, reaction);
            self.events += 1;
            on_event(self.time, &self.state);
        }
        Ok(())
    }

    /// Single step without a time horizon.
    pub fn step(&mut self) -> Result<SsaStep> {
        let step = ssa_step(&mut self.state, &self.params, &mut self.rng)?;
        self.time += step.dt;
        self.events += 1;
        Ok(step)
    }
}

fn observe(state: &GraphState, observable: Observable) -> f64 {
    match observable {
        Observable::EdgeCount => state.edge_count() as f64,
        Observable::Density => state.density(),
    }
}

/// Simulates one path on `[0, t_end]` and records the chosen observable.
///
/// The first sample is at `t = 0`, the last at `t_end`.
pub fn simulate_path(
    initial: &GraphState,
    params: &ModelParams,
    t_end: f64,
    recording: Recording,
    observable: Observable,
    seed: u64,
) -> Result<PathRecord> {
    check_horizon(t_end)?;
    recording.validate()?;
    let mut sim = MicroSimulator::new(initial.clone(), *params, rng::seeded(seed))?;
    record_path(&mut sim, t_end, recording, observable)
}

pub(crate) fn check_horizon(t_end: f64) -> Result<()> {
    if t_end.is_finite() && t_end > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("t_end = {t_end} must be > 0")))
    }
}

/// Records a path from an existing simulator (time must be 0).
pub fn record_path(
    sim: &mut MicroSimulator,
    t_end: f64,
    recording: Recording,
    observable: Observable,
) -> Result<PathRecord> {
    let mut path = PathRecord::new(observable);
    path.push(sim.time(), observe(sim.state(), observable));
    match recording {
        Recording::EveryEvents(stride) => {
            let mut count = 0usize;
            sim.advance(t_end, |t, s| {
                count += 1;
                if count.is_multiple_of(stride) {
                    path.push(t, observe(s, observable));
                }
            })?;
        }
        Recording::TimeGrid(dt) => {
            let mut k = 1u64;
            loop {
                let t = k as f64 * dt;
                if t > t_end {
                    break;
                }
                sim.advance(t, |_, _| {})?;
                path.push(t, observe(sim.state(), observable));
                k += 1;
            }
            sim.advance(t_end, |_, _| {})?;
        }
    }
    path.push(t_end, observe(sim.state(), observable));
    Ok(path)
}

/// Time-weighted occupancy of each edge count `0..=N` over `[0, t_end]`,
/// normalised to sum to one.
pub fn occupancy(
    initial: &GraphState,
    params: &ModelParams,
    t_end: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    check_horizon(t_end)?;
    let mut sim = MicroSimulator::new(initial.clone(), *params, rng::seeded(seed))?;
    let mut hist = vec![0.0; initial.n_edges() + 1];
    let mut last_t = 0.0;
    let mut last_count = initial.edge_count();
    sim.advance(t_end, |t, s| {
        hist[last_count] += t - last_t;
        last_t = t;
        last_count = s.edge_count();
    })?;
    hist[last_count] += t_end - last_t;
    for h in hist.iter_mut() {
        *h /= t_end;
    }
    Ok(hist)
}

/// Monte Carlo estimates of `P_ij(t)`, the probability that edge `{i, j}` is
/// present at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeProbabilities {
    pub n: usize,
    pub n_paths: usize,
    pub times: Vec<f64>,
    /// `probs[k][p]`: estimate at `times[k]` for pair index `p` (upper triangle,
    /// row-major).
    pub probs: Vec<Vec<f64>>,
    /// Mean of `probs[k]` over all pairs.
    pub mean: Vec<f64>,
}

/// Runs `n_paths` independent paths, each with its own initial sample and
/// random stream, and counts how often each edge is present at each grid time.
pub fn estimate_edge_probabilities(
    params: &ModelParams,
    initial: &InitialCondition,
    t_grid: &[f64],
    n_paths: usize,
    seed: u64,
) -> Result<EdgeProbabilities> {
    if n_paths == 0 {
        return Err(Error::InvalidParameter("n_paths must be at least 1".into()));
    }
    if t_grid.iter().any(|t| !(t.is_finite() && *t >= 0.0))
        || t_grid.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(Error::InvalidParameter(
            "time grid must be nonnegative and strictly increasing".into(),
        ));
    }
    let n = params.n();
    initial.validate(n)?;
    let n_edges = params.n_edges();

    let run_path = |k: usize| -> Result<Vec<u32>> {
        let mut rng = rng::stream(seed, k as u64);
        let start = GraphState::from_initial(n, initial, &mut rng)?;
        let mut sim = MicroSimulator::new(start, *params, rng)?;
        let mut counts = vec![0u32; t_grid.len() * n_edges];
        for (slot, &t) in t_grid.iter().enumerate() {
            sim.advance(t, |_, _| {})?;
            let row = &mut counts[slot * n_edges..(slot + 1) * n_edges];
            for (c, present) in row.iter_mut().zip(sim.state().upper_triangle()) {
                *c += u32::from(present);
            }
        }
        Ok(counts)
    };

    let totals = (0..n_paths)
        .into_par_iter()
        .map(run_path)
        .try_reduce(
            || vec![0u32; t_grid.len() * n_edges],
            |mut a, b| {
                a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                Ok(a)
            },
        )?;

    let probs: Vec<Vec<f64>> = totals
        .chunks(n_edges.max(1))
        .take(t_grid.len())
        .map(|row| row.iter().map(|&c| f64::from(c) / n_paths as f64).collect())
        .collect();
    let mean = probs
        .iter()
        .map(|row| row.iter().sum::<f64>() / n_edges as f64)
        .collect();
    Ok(EdgeProbabilities {
        n,
        n_paths,
        times: t_grid.to_vec(),
        probs,
        mean,
    })
}
