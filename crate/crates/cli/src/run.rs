use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde_json::{json, Value};
use triadic_core::chain::transition_time_curve;
use triadic_core::langevin::{em_ensemble_mean, em_path, mfpt_curve, solve_mfpt};
use triadic_core::micro::{estimate_edge_probabilities, simulate_path, MicroSimulator};
use triadic_core::ode::{integrate, mean_field_euler};
use triadic_core::{
    rng, BDChain, CubicRoots, EmOptions, GraphState, MfptProblem, Modality, ModelParams,
    Observable, PathRecord, Recording, Regime, SdeSpec,
};

use crate::config::{Experiment, ExperimentConfig};
use crate::output::{write_json, write_path, Csv};

/// Stream index reserved for sampling the initial graph.
const INITIAL_STREAM: u64 = u64::MAX;

/// What a run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub dir: PathBuf,
    /// File names inside `dir`, in the order they were written.
    pub files: Vec<String>,
    pub summary: Value,
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    dir: &'a Path,
    files: Vec<String>,
}

impl Ctx<'_> {
    fn file(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }
}

/// Validates the config, runs its experiment and writes every artifact plus
/// `summary.json` and the resolved `config.toml` into `cfg.out`.
pub fn run(cfg: &ExperimentConfig) -> anyhow::Result<RunOutput> {
    let problems = cfg.validate();
    if !problems.is_empty() {
        bail!("invalid config:\n  - {}", problems.join("\n  - "));
    }
    let dir = cfg.out.as_path();
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let params = cfg.params()?;
    let roots = params.solve_cubic()?;
    let mut ctx = Ctx {
        cfg,
        dir,
        files: Vec::new(),
    };

    let details = match cfg.experiment {
        Experiment::MicroPath => micro_path(&mut ctx, &params)?,
        Experiment::MicroSpy => micro_spy(&mut ctx, &params)?,
        Experiment::MicroPij => micro_pij(&mut ctx, &params)?,
        Experiment::MacroPath => macro_path(&mut ctx, &params)?,
        Experiment::MacroSteady => macro_steady(&mut ctx, &params, &roots)?,
        Experiment::MacroExit => macro_exit(&mut ctx, &params)?,
        Experiment::SdePath => sde_path(&mut ctx, &params)?,
        Experiment::SdeMfpt => sde_mfpt(&mut ctx, &params, &roots)?,
        Experiment::OdeTrace => ode_trace(&mut ctx, &params, &roots)?,
        Experiment::MeanField => mean_field(&mut ctx, &params)?,
        Experiment::CompareModels => compare_models(&mut ctx, &params)?,
    };

    let config_path = ctx.file("config.toml");
    std::fs::write(&config_path, cfg.to_toml())
        .with_context(|| format!("writing {}", config_path.display()))?;
    let summary = json!({
        "experiment": cfg.experiment.tag(),
        "n": cfg.n,
        "n_edges": params.n_edges(),
        "rates": { "c1": cfg.c1, "c2": cfg.c2, "c3": cfg.c3, "c3_hat": params.c3_hat() },
        "seed": cfg.seed,
        "regime": regime_name(roots.regime()),
        "roots": roots.roots(),
        "results": details,
    });
    let summary_path = ctx.file("summary.json");
    write_json(&summary_path, &summary)?;
    Ok(RunOutput {
        dir: dir.to_path_buf(),
        files: ctx.files,
        summary,
    })
}

fn regime_name(regime: Regime) -> &'static str {
    match regime {
        Regime::Monostable => "monostable",
        Regime::Bistable => "bistable",
    }
}

fn recording(cfg: &ExperimentConfig) -> Recording {
    cfg.record_dt
        .map(Recording::TimeGrid)
        .unwrap_or(Recording::EveryEvents(cfg.record_stride))
}

fn initial_graph(cfg: &ExperimentConfig) -> anyhow::Result<GraphState> {
    let init = cfg.initial_condition()?;
    let mut r = rng::stream(cfg.seed, INITIAL_STREAM);
    Ok(GraphState::from_initial(cfg.n, &init, &mut r)?)
}

/// `0, dt, 2 dt, ...` up to and including `t_end`.
fn time_grid(t_end: f64, dt: f64) -> Vec<f64> {
    let count = (t_end / dt * (1.0 + 1e-12)).floor() as usize;
    let mut grid: Vec<f64> = (0..=count).map(|k| k as f64 * dt).collect();
    if grid.last().is_some_and(|&t| t < t_end * (1.0 - 1e-12)) {
        grid.push(t_end);
    }
    grid
}

fn path_summary(path: &PathRecord, t_end: f64) -> Value {
    json!({
        "samples": path.len(),
        "initial_density": path.values().first(),
        "final_density": path.values().last(),
        "time_average": path.time_average(t_end),
    })
}

fn micro_path(ctx: &mut Ctx, params: &ModelParams) -> anyhow::Result<Value> {
    let cfg = ctx.cfg;
    let g = initial_graph(cfg)?;
    let path = simulate_path(&g, params, cfg.t_end, recording(cfg), Observable::Density, cfg.seed)?;
    write_path(&ctx.file("path.csv"), &path)?;
    Ok(json!({ "initial_edges": g.edge_count(), "path": path_summary(&path, cfg.t_end) }))
}

fn micro_spy(ctx: &mut Ctx, params: &ModelParams) -> anyhow::Result<Value> {
    let cfg = ctx.cfg;
    let mut sim = MicroSimulator::new(initial_graph(cfg)?, *params, rng::seeded(cfg.seed))?;
    let index_path = ctx.file("snapshots.csv");
    let mut index = Csv::create(&index_path, &["index", "t", "edges", "density", "file"])?;
    for k in 0..=cfg.snapshots {
        let t = cfg.t_end * k as f64 / cfg.snapshots as f64;
        if k > 0 {
            sim.advance(t, |_, _| {})?;
        }
        let name = format!("snapshot_{k:03}.txt");
        let p = ctx.file(&name);
        std::fs::write(&p, sim.state().edge_list_text())
            .with_context(|| format!("writing {}", p.display()))?;
        let g = sim.state();
        index.row(&[&k, &t, &g.edge_count(), &g.density(), &name])?;
    }
    index.finish()?;
    Ok(json!({ "snapshots": cfg.snapshots + 1, "events": sim.events(), "final_density": sim.state().density() }))
}

fn micro_pij(ctx: &mut Ctx, params: &ModelParams) -> anyhow::Result<Value> {
    let cfg = ctx.cfg;
    let grid = time_grid(cfg.t_end, cfg.grid_dt());
    let est = estimate_edge_probabilities(params, &cfg.initial_condition()?, &grid, cfg.n_paths, cfg.seed)?;
    let pij_path = ctx.file("pij.csv");
    let mut pij = Csv::create(&pij_path, &["t", "i", "j", "p_hat"])?;
    let pairs: Vec<(usize, usize)> = (0..cfg.n)
        .flat_map(|i| (i + 1..cfg.n).map(move |j| (i + 1, j + 1)))
        .collect();
    for (t, row) in est.times.iter().zip(&est.probs) {
        for (&(i, j), p) in pairs.iter().zip(row) {
            pij.row(&[t, &i, &j, p])?;
        }
    }
    pij.finish()?;
    let mean_path = ctx.file("pij_mean.csv");
    let mut mean = Csv::create(&mean_path, &["t", "mean"])?;
    for (t, m) in est.times.iter().zip(&est.mean) {
        mean.row(&[t, m])?;
    }
    mean.finish()?;
    let last = est.probs.last().expect("grid is nonempty");
    let (lo, hi) = last
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &p| (lo.min(p), hi.max(p)));
    Ok(json!({
        "n_paths": cfg.n_paths,
        "grid_points": grid.len(),
        "final_mean": est.mean.last(),
        "final_min": lo,
        "final_max": hi,
    }))
}

fn macro_path(ctx: &mut Ctx, params: &ModelParams) -> anyhow::Result<Value> {
    let cfg = ctx.cfg;
    let start = initial_graph(cfg)?.edge_count();
    let chain = BDChain::new(params);
    let path = chain.simulate_path(start, cfg.t_end, recording(cfg), Observable::Density, cfg.seed)?;
    write_path(&ctx.file("path.csv"), &path)?;
    Ok(json!({ "initial_edges": start, "path": path_summary(&path, cfg.t_end) }))
}

fn macro_steady(ctx: &mut Ctx, params: &ModelParams, roots: &CubicRoots) -> anyhow::Result<Value> {
    let chain = BDChain::new(params);
    let dist = chain.stationary_distribution()?;
    let big_n = chain.n_edges();
    let steady_path = ctx.file("steady.csv");
    let mut csv = Csv::create(&steady_path, &["state", "density", "prob", "prob_density"])?;
    for (j, &p) in dist.probs().iter().enumerate() {
        let density = j as f64 / big_n as f64;
        csv.row(&[&j, &density, &p, &(p * big_n as f64)])?;
    }
    csv.finish()?;
    let report = dist.modality();
    let at = |states: &[usize]| -> Vec<Value> {
        states
            .iter()
            .map(|&j| json!({ "state": j, "density": j as f64 / big_n as f64 }))
            .collect()
    };
    let mut out = json!({
        "modality": match report.classification {
            Modality::Unimodal => "unimodal",
            Modality::Bimodal => "bimodal",
            Modality::Other => "other",
        },
        "maxima": at(&report.local_maxima),
        "minima": at(&report.local_minima),
        "argmax": dist.argmax(),
        "mean_density": dist.mean() / big_n as f64,
    });
    if let Some((_, p2, _)) = roots.bistable() {
        let mid = (p2 * big_n as f64).floor() as usize;
        let low = dist.mass_up_to(mid);
        out["mass_low"] = json!(low);
        out["mass_high"] = json!(1.0 - low);
    }
    Ok(out)
}

fn fit_r_squared(xs: &[f64], ys: &[f64]) -> f64 {
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    sxy * sxy / (sxx * syy)
}

/// R² of `log τ` against `n²`; `None` with fewer than three points.
pub fn log_tau_r_squared(ns: &[usize], taus: &[f64]) -> Option<f64> {
    if ns.len() < 3 {
        return None;
    }
    let xs: Vec<f64> = ns.iter().map(|&n| (n * n) as f64).collect();
    let ys: Vec<f64> = taus.iter().map(|t| t.ln()).collect();
    Some(fit_r_squared(&xs, &ys))
}

fn macro_exit(ctx: &mut Ctx, params: &ModelParams) -> anyhow::Result<Value> {
    let ns = ctx.cfg.n_values();
    let rows = transition_time_curve(params, &ns)?;
    let exit_path = ctx.file("exit.csv");
    let mut csv = Csv::create(&exit_path, &["n", "tau_low_to_mid", "tau_high_to_mid", "ratio"])?;
    for r in &rows {
        csv.row(&[&r.n, &r.tau_low_to_mid, &r.tau_high_to_mid, &r.ratio()])?;
    }
    csv.finish()?;
    let low: Vec<f64> = rows.iter().map(|r| r.tau_low_to_mid).collect();
    let high: Vec<f64> = rows.iter().map(|r| r.tau_high_to_mid).collect();
    Ok(json!({
        "rows": rows.iter().map(|r| json!({
            "n": r.n, "low": r.low, "mid": r.mid, "high": r.high,
            "tau_low_to_mid": r.tau_low_to_mid, "tau_high_to_mid": r.tau_high_to_mid, "ratio": r.ratio(),
        })).collect::<Vec<_>>(),
        "r_squared_low": log_tau_r_squared(&ns, &low),
        "r_squared_high": log_tau_r_squared(&ns, &high),
    }))
}

fn em_options(cfg: &ExperimentConfig, recording: Recording) -> EmOptions {
    let mut opts = EmOptions::new(cfg.t_end, cfg.dt, recording);
    opts.allow_large_step = cfg.allow_large_step;
    opts
}

fn sde_path(ctx: &mut Ctx, params: &ModelParams) -> anyhow::Result<Value> {
    let cfg = ctx.cfg;
    let spec = SdeSpec::new(*params);
    let run = em_path(&spec, cfg.y0, &em_options(cfg, recording(cfg)), cfg.seed)?;
    write_path(&ctx.file("path.csv"), &run.path)?;
    Ok(json!({
        "reflections": run.reflections,
        "step_bound": spec.step_bound(),
        "path": path_summary(&run.path, cfg.t_end),
    }))
}

fn sde_mfpt(ctx: &mut Ctx, params: &ModelParams, roots: &CubicRoots) -> anyhow::Result<Value> {
    let cfg = ctx.cfg;
    let Some((p1, p2, p3)) = roots.bistable() else {
        bail!("sde-mfpt needs bistable rates (roots {:?})", roots.roots());
    };
    let spec = SdeSpec::new(*params);
    let low = solve_mfpt(&spec, &MfptProblem::reflect_at_zero(p2, cfg.grid_points))?;
    let high = solve_mfpt(&spec, &MfptProblem::reflect_at_one(p2, cfg.grid_points))?;
    for (name, sol) in [("mfpt_low.csv", &low), ("mfpt_high.csv", &high)] {
        let mut csv = Csv::create(&ctx.file(name), &["x", "T"])?;
        for (x, t) in sol.grid.iter().zip(&sol.values) {
            csv.row(&[x, t])?;
        }
        csv.finish()?;
    }
    let ns = cfg.n_values();
    let rows = mfpt_curve(params, &ns, cfg.grid_points)?;
    let curve_path = ctx.file("mfpt_curve.csv");
    let mut csv = Csv::create(&curve_path, &["n", "tau_low_to_mid", "tau_high_to_mid", "ratio"])?;
    for r in &rows {
        csv.row(&[&r.n, &r.tau_low_to_mid, &r.tau_high_to_mid, &r.ratio()])?;
    }
    csv.finish()?;
    let lows: Vec<f64> = rows.iter().map(|r| r.tau_low_to_mid).collect();
    let highs: Vec<f64> = rows.iter().map(|r| r.tau_high_to_mid).collect();
    Ok(json!({
        "tau_low_to_mid": low.at(p1),
        "tau_high_to_mid": high.at(p3),
        "curve": rows.iter().map(|r| json!({
            "n": r.n, "tau_low_to_mid": r.tau_low_to_mid, "tau_high_to_mid": r.tau_high_to_mid, "ratio": r.ratio(),
        })).collect::<Vec<_>>(),
        "r_squared_low": log_tau_r_squared(&ns, &lows),
        "r_squared_high": log_tau_r_squared(&ns, &highs),
    }))
}

fn nearest_root(roots: &CubicRoots, y: f64) -> f64 {
    roots
        .roots()
        .iter()
        .copied()
        .min_by(|a, b| (a - y).abs().total_cmp(&(b - y).abs()))
        .expect("at least one root")
}

fn ode_trace(ctx: &mut Ctx, params: &ModelParams, roots: &CubicRoots) -> anyhow::Result<Value> {
    let cfg = ctx.cfg;
    let run = integrate(params, cfg.y0, cfg.t_end, cfg.dt)?;
    write_path(&ctx.file("ode.csv"), &run.trace)?;
    let y = run.terminal();
    Ok(json!({
        "terminal": y,
        "nearest_root": nearest_root(roots, y),
        "step_halving_error": run.step_halving_error,
    }))
}

fn mean_field(ctx: &mut Ctx, params: &ModelParams) -> anyhow::Result<Value> {
    let cfg = ctx.cfg;
    let run = mean_field_euler(params, cfg.y0, cfg.steps)?;
    let mut csv = Csv::create(&ctx.file("mean_field.csv"), &["step", "value"])?;
    for (k, v) in run.values.iter().enumerate() {
        csv.row(&[&k, v])?;
    }
    csv.finish()?;
    Ok(json!({ "final": run.values.last(), "first_excursion": run.first_excursion }))
}

fn compare_models(ctx: &mut Ctx, params: &ModelParams) -> anyhow::Result<Value> {
    let cfg = ctx.cfg;
    let dt_out = cfg.grid_dt();
    let rec = Recording::TimeGrid(dt_out);
    let g = initial_graph(cfg)?;
    let y0 = g.density();
    let micro = simulate_path(&g, params, cfg.t_end, rec, Observable::Density, cfg.seed)?;
    let chain = BDChain::new(params);
    let macro_ = chain.simulate_path(g.edge_count(), cfg.t_end, rec, Observable::Density, cfg.seed.wrapping_add(1))?;
    let spec = SdeSpec::new(*params);
    let (sde, sde_se, reflections) =
        em_ensemble_mean(&spec, y0, &em_options(cfg, rec), cfg.n_paths, cfg.seed.wrapping_add(2))?;
    let ode = integrate(params, y0, cfg.t_end, cfg.dt)?;

    let grid = time_grid(cfg.t_end, dt_out);
    let sample = |p: &PathRecord, t: f64| p.value_at(t * (1.0 + 1e-12)).expect("t >= 0");
    let compare_path = ctx.file("compare.csv");
    let mut csv = Csv::create(&compare_path, &["t", "micro", "macro", "sde_mean", "sde_std_err", "ode"])?;
    let mut late_spread: f64 = 0.0;
    let mut late_band: f64 = 0.0;
    let centre = ode.terminal();
    for (k, &t) in grid.iter().enumerate() {
        let vals = [sample(&micro, t), sample(&macro_, t), sample(&sde, t), sample(&ode.trace, t)];
        let se = sde_se.get(k).copied().unwrap_or(f64::NAN);
        csv.row(&[&t, &vals[0], &vals[1], &vals[2], &se, &vals[3]])?;
        if t >= cfg.t_end / 2.0 {
            let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
            late_spread = late_spread.max(hi - lo);
            late_band = vals.iter().fold(late_band, |b, v| b.max((v - centre).abs()));
        }
    }
    csv.finish()?;
    Ok(json!({
        "initial_density": y0,
        "ode_terminal": centre,
        "late_max_spread": late_spread,
        "late_max_deviation_from_ode": late_band,
        "sde_reflections": reflections,
        "n_paths": cfg.n_paths,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_includes_end() {
        assert_eq!(time_grid(1.0, 0.25), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(time_grid(1.0, 0.3).last(), Some(&1.0));
        assert_eq!(time_grid(0.3, 0.1).len(), 4);
    }

    #[test]
    fn r_squared_of_exact_line() {
        let ns = [10, 20, 30];
        let taus: Vec<f64> = ns.iter().map(|&n| (0.01 * (n * n) as f64 + 2.0).exp()).collect();
        assert!((log_tau_r_squared(&ns, &taus).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(log_tau_r_squared(&ns[..2], &taus[..2]), None);
    }
}
