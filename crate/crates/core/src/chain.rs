//! Macroscale birth–death chain on the edge count `0..=N`.
//!
//! Edges are assumed to be placed independently, which turns the open-wedge
//! count into a function of the edge count alone. The resulting chain has
//!
//! ```text
//! λ_i = N [ c1 (1 - i/N) + c3 (1 - i/N) (i/N) ((i - 1)/N) ],   0 <= i < N
//! μ_i = c2 i,                                                    0 < i <= N
//! ```
//!
//! Stationary distribution, modality and mean exit times are all computed
//! from these two rate tables.

use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::params::{CubicRoots, ModelParams};
use crate::path::{Observable, PathRecord, Recording};
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub struct BDChain {
    n_edges: usize,
    /// `λ_0 .. λ_{N-1}`.
    lambda: Vec<f64>,
    /// `μ_1 .. μ_N`.
    mu: Vec<f64>,
    params: Option<ModelParams>,
}

impl BDChain {
    pub fn new(params: &ModelParams) -> Self {
        let n_edges = params.n_edges();
        let big_n = n_edges as f64;
        let (c1, c2, c3) = (params.c1(), params.c2(), params.c3());
        // N (1 - i/N) is the integer N - i; factoring it out keeps the rate
        // accurate near i = N.
        let lambda = (0..n_edges)
            .map(|i| {
                let x = i as f64 / big_n;
                let x_prev = (i as f64 - 1.0) / big_n;
                (n_edges - i) as f64 * (c1 + c3 * x * x_prev)
            })
            .collect();
        let mu = (1..=n_edges).map(|i| c2 * i as f64).collect();
        Self {
            n_edges,
            lambda,
            mu,
            params: Some(*params),
        }
    }

    /// Chain with explicit rate tables `λ_0..λ_{N-1}` and `μ_1..μ_N`.
    pub fn from_rates(lambda: Vec<f64>, mu: Vec<f64>) -> Result<Self> {
        if lambda.len() != mu.len() || lambda.is_empty() {
            return Err(Error::InvalidParameter(
                "need N >= 1 birth rates and N death rates".into(),
            ));
        }
        if lambda.iter().chain(&mu).any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::InvalidParameter("rates must be finite and >= 0".into()));
        }
        Ok(Self {
            n_edges: lambda.len(),
            lambda,
            mu,
            params: None,
        })
    }

    /// Upper end `N` of the state space.
    pub fn n_edges(&self) -> usize {
        self.n_edges
    }

    /// Parameters the chain was built from, if any.
    pub fn params(&self) -> Option<&ModelParams> {
        self.params.as_ref()
    }

    /// `λ_i`, zero at `i = N`.
    pub fn birth(&self, i: usize) -> f64 {
        self.lambda.get(i).copied().unwrap_or(0.0)
    }

    /// `μ_i`, zero at `i = 0`.
    pub fn death(&self, i: usize) -> f64 {
        if i == 0 {
            0.0
        } else {
            self.mu.get(i - 1).copied().unwrap_or(0.0)
        }
    }

    pub fn births(&self) -> &[f64] {
        &self.lambda
    }

    pub fn deaths(&self) -> &[f64] {
        &self.mu
    }

    /// `(sub, diag, super)` bands of the generator `G` over states `0..=N`.
    pub fn generator_bands(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let size = self.n_edges + 1;
        let sub = (0..size).map(|i| self.death(i)).collect();
        let diag = (0..size).map(|i| -(self.birth(i) + self.death(i))).collect();
        let sup = (0..size).map(|i| self.birth(i)).collect();
        (sub, diag, sup)
    }

    /// Product-form stationary distribution, accumulated in log space.
    pub fn stationary_distribution(&self) -> Result<Distribution> {
        let mut log_w = Vec::with_capacity(self.n_edges + 1);
        log_w.push(0.0);
        for j in 0..self.n_edges {
            let up = self.lambda[j];
            let down = self.mu[j];
            if !(up > 0.0) {
                return Err(Error::ReducibleChain { rate: "birth", state: j });
            }
            if !(down > 0.0) {
                return Err(Error::ReducibleChain { rate: "death", state: j + 1 });
            }
            let prev = log_w[j];
            log_w.push(prev + up.ln() - down.ln());
        }
        Ok(Distribution::from_log_weights(log_w))
    }

    /// Mean time to first reach `target` from every state.
    ///
    /// Solves `Q τ = -1`, where `Q` is the generator with row and column
    /// `target` removed. The system splits into the states below and above the
    /// target; each block is tridiagonal and is eliminated starting from its
    /// reflecting end. After elimination the pivot of row `i` below the target
    /// is exactly `-λ_i` (and `-μ_i` above), so the sweep is carried out on the
    /// increments `τ_i - τ_{i±1}` with that pivot substituted: every term is
    /// positive and nothing cancels. Entry `target` of the result is zero.
    pub fn mean_exit_times(&self, target: usize) -> Result<Vec<f64>> {
        if target > self.n_edges {
            return Err(Error::InvalidParameter(format!(
                "target state {target} outside 0..={}",
                self.n_edges
            )));
        }
        let mut tau = vec![0.0; self.n_edges + 1];

        // Below: λ_i d_i = 1 + μ_i d_{i-1}, d_i = τ_i - τ_{i+1}.
        let mut inc = Vec::with_capacity(target);
        let mut prev = 0.0;
        for i in 0..target {
            let up = self.birth(i);
            if !(up > 0.0) {
                return Err(Error::ReducibleChain { rate: "birth", state: i });
            }
            prev = (1.0 + self.death(i) * prev) / up;
            inc.push(prev);
        }
        for i in (0..target).rev() {
            tau[i] = tau[i + 1] + inc[i];
        }

        // Above: μ_i e_i = 1 + λ_i e_{i+1}, e_i = τ_i - τ_{i-1}.
        let mut inc = vec![0.0; self.n_edges + 1];
        let mut next = 0.0;
        for i in (target + 1..=self.n_edges).rev() {
            let down = self.death(i);
            if !(down > 0.0) {
                return Err(Error::ReducibleChain { rate: "death", state: i });
            }
            next = (1.0 + self.birth(i) * next) / down;
            inc[i] = next;
        }
        for i in target + 1..=self.n_edges {
            tau[i] = tau[i - 1] + inc[i];
        }
        Ok(tau)
    }

    /// Simulates the chain with the standard two-rate SSA.
    pub fn simulate_path(
        &self,
        initial_state: usize,
        t_end: f64,
        recording: Recording,
        observable: Observable,
        seed: u64,
    ) -> Result<PathRecord> {
        crate::micro::check_horizon(t_end)?;
        recording.validate()?;
        let mut sim = ChainSimulator::new(self, initial_state, rng::seeded(seed))?;
        let value = |s: usize| match observable {
            Observable::EdgeCount => s as f64,
            Observable::Density => s as f64 / self.n_edges as f64,
        };
        let mut path = PathRecord::new(observable);
        path.push(0.0, value(sim.state));
        match recording {
            Recording::EveryEvents(stride) => {
                let mut count = 0usize;
                sim.advance(t_end, |t, s| {
                    count += 1;
                    if count.is_multiple_of(stride) {
                        path.push(t, value(s));
                    }
                });
            }
            Recording::TimeGrid(dt) => {
                let mut k = 1u64;
                while (k as f64) * dt <= t_end {
                    let t = k as f64 * dt;
                    sim.advance(t, |_, _| {});
                    path.push(t, value(sim.state));
                    k += 1;
                }
                sim.advance(t_end, |_, _| {});
            }
        }
        path.push(t_end, value(sim.state));
        Ok(path)
    }

    /// Time-weighted occupancy of every state over `[0, t_end]`, normalised.
    pub fn occupancy(&self, initial_state: usize, t_end: f64, seed: u64) -> Result<Vec<f64>> {
        crate::micro::check_horizon(t_end)?;
        let mut sim = ChainSimulator::new(self, initial_state, rng::seeded(seed))?;
        let mut hist = vec![0.0; self.n_edges + 1];
        let mut last_t = 0.0;
        let mut last = initial_state;
        sim.advance(t_end, |t, s| {
            hist[last] += t - last_t;
            last_t = t;
            last = s;
        });
        hist[last] += t_end - last_t;
        for h in hist.iter_mut() {
            *h /= t_end;
        }
        Ok(hist)
    }
}

/// Event-by-event simulation of a [`BDChain`].
#[derive(Debug, Clone)]
pub struct ChainSimulator<'a> {
    chain: &'a BDChain,
    state: usize,
    time: f64,
    rng: rng::SimRng,
}

impl<'a> ChainSimulator<'a> {
    pub fn new(chain: &'a BDChain, initial_state: usize, rng: rng::SimRng) -> Result<Self> {
        if initial_state > chain.n_edges {
            return Err(Error::InvalidParameter(format!(
                "initial state {initial_state} outside 0..={}",
                chain.n_edges
            )));
        }
        Ok(Self {
            chain,
            state: initial_state,
            time: 0.0,
            rng,
        })
    }

    pub fn state(&self) -> usize {
        self.state
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Runs events until `t_stop`; the event crossing `t_stop` is discarded.
    pub fn advance<F: FnMut(f64, usize)>(&mut self, t_stop: f64, mut on_event: F) {
        while self.time < t_stop {
            let up = self.chain.birth(self.state);
            let down = self.chain.death(self.state);
            let total = up + down;
            let e: f64 = self.rng.sample(Exp1);
            let dt = e / total;
            if self.time + dt > t_stop {
                self.time = t_stop;
                break;
            }
            self.time += dt;
            if self.rng.random::<f64>() * total < up {
                self.state += 1;
            } else {
                self.state -= 1;
            }
            on_event(self.time, self.state);
        }
    }
}

/// Probability vector over `0..=N`, with its logarithm kept alongside so tails
/// that underflow in linear scale remain comparable.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    probs: Vec<f64>,
    log_probs: Vec<f64>,
}

impl Distribution {
    /// Normalises unnormalised log weights with a max shift.
    pub fn from_log_weights(log_w: Vec<f64>) -> Self {
        let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let total: f64 = log_w.iter().map(|l| (l - max).exp()).sum();
        let log_norm = max + total.ln();
        let log_probs: Vec<f64> = log_w.iter().map(|l| l - log_norm).collect();
        let probs = log_probs.iter().map(|l| l.exp()).collect();
        Self { probs, log_probs }
    }

    /// Wraps a nonnegative vector, normalising it.
    pub fn from_probs(values: &[f64]) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidParameter(
                "distribution entries must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = values.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidParameter("distribution has zero mass".into()));
        }
        let probs: Vec<f64> = values.iter().map(|v| v / total).collect();
        let log_probs = probs.iter().map(|p| p.ln()).collect();
        Ok(Self { probs, log_probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn log_probs(&self) -> &[f64] {
        &self.log_probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn argmax(&self) -> usize {
        self.log_probs
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &l)| if l > best.1 { (i, l) } else { best })
            .0
    }

    pub fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(i, p)| i as f64 * p).sum()
    }

    /// Total mass on states `0..=upto`.
    pub fn mass_up_to(&self, upto: usize) -> f64 {
        self.probs.iter().take(upto + 1).sum()
    }

    /// Total variation distance `½ Σ |p_i - q_i|`.
    pub fn total_variation(&self, other: &[f64]) -> f64 {
        assert_eq!(self.probs.len(), other.len(), "distributions differ in length");
        0.5 * self.probs.iter().zip(other).map(|(a, b)| (a - b).abs()).sum::<f64>()
    }

    /// Local extrema of the distribution, read off the log probabilities.
    pub fn modality(&self) -> ModalityReport {
        modality_of_sequence(&self.log_probs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Modality {
    Unimodal,
    Bimodal,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModalityReport {
    pub local_maxima: Vec<usize>,
    pub local_minima: Vec<usize>,
    pub classification: Modality,
}

/// Strict local extrema of `values`.
///
/// A run of two equal adjacent values counts as one point located at the lower
/// index; longer flat runs are never extrema. End points can be maxima but
/// minima are interior only.
pub fn modality_of_sequence(values: &[f64]) -> ModalityReport {
    // Collapse runs of equal values: (first index, value, run length).
    let mut runs: Vec<(usize, f64, usize)> = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        match runs.last_mut() {
            Some(last) if last.1 == v => last.2 += 1,
            _ => runs.push((i, v, 1)),
        }
    }
    let mut local_maxima = Vec::new();
    let mut local_minima = Vec::new();
    for (k, &(idx, v, len)) in runs.iter().enumerate() {
        if len > 2 {
            continue;
        }
        let left = k.checked_sub(1).map(|p| runs[p].1);
        let right = runs.get(k + 1).map(|r| r.1);
        let above = left.is_none_or(|l| v > l) && right.is_none_or(|r| v > r);
        if above && runs.len() > 1 {
            local_maxima.push(idx);
        }
        if let (Some(l), Some(r)) = (left, right) {
            if v < l && v < r {
                local_minima.push(idx);
            }
        }
    }
    let classification = match (local_maxima.as_slice(), local_minima.as_slice()) {
        ([_], _) => Modality::Unimodal,
        ([a, b], [m]) if a < m && m < b => Modality::Bimodal,
        _ => Modality::Other,
    };
    ModalityReport {
        local_maxima,
        local_minima,
        classification,
    }
}

/// Mean switching times between the two modes of a bistable chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionRow {
    pub n: usize,
    pub n_edges: usize,
    /// `⌊p1* N⌋`, `⌊p2* N⌋`, `⌊p3* N⌋`.
    pub low: usize,
    pub mid: usize,
    pub high: usize,
    pub tau_low_to_mid: f64,
    pub tau_high_to_mid: f64,
}

impl TransitionRow {
    pub fn ratio(&self) -> f64 {
        self.tau_low_to_mid / self.tau_high_to_mid
    }
}

/// Mode and trough states `⌊p_k* N⌋` for a bistable root triple.
pub fn mode_states(roots: &CubicRoots, n_edges: usize) -> Result<(usize, usize, usize)> {
    let (p1, p2, p3) = roots.bistable().ok_or_else(|| {
        Error::InvalidParameter("exit-time curves need the bistable regime".into())
    })?;
    let big_n = n_edges as f64;
    Ok((
        (p1 * big_n).floor() as usize,
        (p2 * big_n).floor() as usize,
        (p3 * big_n).floor() as usize,
    ))
}

/// Exit times from each mode to the trough, one row per node count.
pub fn transition_time_curve(params: &ModelParams, n_values: &[usize]) -> Result<Vec<TransitionRow>> {
    let roots = params.solve_cubic()?;
    n_values
        .par_iter()
        .map(|&n| {
            let p = params.with_nodes(n)?;
            let chain = BDChain::new(&p);
            let (low, mid, high) = mode_states(&roots, chain.n_edges())?;
            let tau = chain.mean_exit_times(mid)?;
            Ok(TransitionRow {
                n,
                n_edges: chain.n_edges(),
                low,
                mid,
                high,
                tau_low_to_mid: tau[low],
                tau_high_to_mid: tau[high],
            })
        })
        .collect()
}
