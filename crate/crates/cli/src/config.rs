use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context};
use serde::{Deserialize, Serialize};
use triadic_core::params::BISTABLE_RATES;
use triadic_core::{InitialCondition, ModelParams};

/// Seed used when neither the config nor the command line sets one.
pub const DEFAULT_SEED: u64 = 20_240_601;

/// Node counts scanned by the exit-time experiments unless `n_values` is set.
pub const DEFAULT_N_VALUES: [usize; 6] = [30, 40, 50, 60, 70, 80];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    MicroPath,
    MicroSpy,
    MicroPij,
    MacroPath,
    MacroSteady,
    MacroExit,
    SdePath,
    SdeMfpt,
    OdeTrace,
    MeanField,
    CompareModels,
}

impl Experiment {
    pub const ALL: [Experiment; 11] = [
        Experiment::MicroPath,
        Experiment::MicroSpy,
        Experiment::MicroPij,
        Experiment::MacroPath,
        Experiment::MacroSteady,
        Experiment::MacroExit,
        Experiment::SdePath,
        Experiment::SdeMfpt,
        Experiment::OdeTrace,
        Experiment::MeanField,
        Experiment::CompareModels,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Experiment::MicroPath => "micro-path",
            Experiment::MicroSpy => "micro-spy",
            Experiment::MicroPij => "micro-pij",
            Experiment::MacroPath => "macro-path",
            Experiment::MacroSteady => "macro-steady",
            Experiment::MacroExit => "macro-exit",
            Experiment::SdePath => "sde-path",
            Experiment::SdeMfpt => "sde-mfpt",
            Experiment::OdeTrace => "ode-trace",
            Experiment::MeanField => "mean-field",
            Experiment::CompareModels => "compare-models",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Initial graph: `er:P`, `edges:M` or `half`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialSpec(pub InitialCondition);

impl FromStr for InitialSpec {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        let s = s.trim();
        if s == "half" {
            return Ok(Self(InitialCondition::HalfEdges));
        }
        let (kind, value) = s
            .split_once(':')
            .ok_or_else(|| anyhow!("initial condition {s:?}: expected er:P, edges:M or half"))?;
        match kind {
            "er" => Ok(Self(InitialCondition::ErdosRenyi(
                value.parse().with_context(|| format!("edge probability {value:?}"))?,
            ))),
            "edges" => Ok(Self(InitialCondition::EdgeCount(
                value.parse().with_context(|| format!("edge count {value:?}"))?,
            ))),
            _ => bail!("initial condition {s:?}: unknown kind {kind:?}"),
        }
    }
}

/// Everything a run depends on. Serialises to a flat TOML table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_values: Option<Vec<usize>>,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub initial: String,
    pub t_end: f64,
    pub seed: u64,
    pub n_paths: usize,
    pub out: PathBuf,
    /// Keep every `record_stride`-th event of jump-process paths.
    pub record_stride: usize,
    /// Sample paths on a time grid with this spacing instead of per event.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub record_dt: Option<f64>,
    /// Euler–Maruyama and RK4 step.
    pub dt: f64,
    pub allow_large_step: bool,
    pub grid_points: usize,
    pub y0: f64,
    /// Mean-field iterations.
    pub steps: usize,
    /// Adjacency snapshots written by `micro-spy`, evenly spaced in time.
    pub snapshots: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let (c1, c2, c3) = BISTABLE_RATES;
        Self {
            experiment: Experiment::MacroSteady,
            n: 30,
            n_values: None,
            c1,
            c2,
            c3,
            initial: "er:0.3".into(),
            t_end: 1000.0,
            seed: DEFAULT_SEED,
            n_paths: 100,
            out: PathBuf::from("out"),
            record_stride: 1,
            record_dt: None,
            dt: 0.01,
            allow_large_step: false,
            grid_points: 2049,
            y0: 0.2,
            steps: 100,
            snapshots: 4,
            threads: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        toml::from_str(text).context("parsing config")
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config fields are plain TOML values")
    }

    /// Applies `KEY=VALUE`; the value is read as a TOML literal, falling back
    /// to a bare string (so `initial=er:0.2` works unquoted).
    pub fn set(&mut self, assignment: &str) -> anyhow::Result<()> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| anyhow!("--set {assignment:?}: expected KEY=VALUE"))?;
        let key = key.trim();
        let raw = raw.trim();
        let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(raw.to_string()));
        let mut table = toml::Table::try_from(&*self).expect("config serialises to a table");
        table.insert(key.to_string(), value);
        *self = table
            .try_into()
            .with_context(|| format!("--set {key}={raw}"))?;
        Ok(())
    }

    pub fn initial_condition(&self) -> anyhow::Result<InitialCondition> {
        Ok(self.initial.parse::<InitialSpec>()?.0)
    }

    pub fn params(&self) -> anyhow::Result<ModelParams> {
        ModelParams::new(self.n, self.c1, self.c2, self.c3).map_err(Into::into)
    }

    pub fn n_values(&self) -> Vec<usize> {
        self.n_values.clone().unwrap_or_else(|| DEFAULT_N_VALUES.to_vec())
    }

    /// Spacing of time-grid output.
    pub fn grid_dt(&self) -> f64 {
        self.record_dt.unwrap_or(self.t_end / 100.0)
    }

    /// Every problem with the config; empty when it is runnable.
    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.n < 3 {
            v.push(format!("n = {}: n ≥ 3 required", self.n));
        }
        if let Some(ns) = &self.n_values {
            if ns.is_empty() {
                v.push("n_values is empty".into());
            }
            for &n in ns.iter().filter(|&&n| n < 3) {
                v.push(format!("n_values contains {n}: n ≥ 3 required"));
            }
        }
        if !(self.c1.is_finite() && self.c1 > 0.0) {
            v.push(format!(
                "c1 = {}: must be > 0 (with c1 = 0 the empty graph is absorbing and the chain is reducible)",
                self.c1
            ));
        }
        if !(self.c2.is_finite() && self.c2 > 0.0) {
            v.push(format!(
                "c2 = {}: must be > 0 (with c2 = 0 the complete graph is absorbing and the chain is reducible)",
                self.c2
            ));
        }
        if !(self.c3.is_finite() && self.c3 >= 0.0) {
            v.push(format!("c3 = {}: must be >= 0", self.c3));
        }
        match self.initial_condition() {
            Ok(init) => {
                if self.n >= 3 {
                    if let Err(e) = init.validate(self.n) {
                        v.push(format!("initial = {:?}: {e}", self.initial));
                    }
                }
            }
            Err(e) => v.push(format!("{e:#}")),
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            v.push(format!("t_end = {}: must be > 0", self.t_end));
        }
        if self.n_paths < 1 {
            v.push("n_paths = 0: at least one path required".into());
        }
        if self.record_stride < 1 {
            v.push("record_stride = 0: must be >= 1".into());
        }
        if let Some(dt) = self.record_dt {
            if !(dt.is_finite() && dt > 0.0) {
                v.push(format!("record_dt = {dt}: must be > 0"));
            }
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            v.push(format!("dt = {}: must be > 0", self.dt));
        }
        if self.grid_points < 3 {
            v.push(format!("grid_points = {}: at least 3 required", self.grid_points));
        }
        if !(0.0..=1.0).contains(&self.y0) {
            v.push(format!("y0 = {}: must lie in [0, 1]", self.y0));
        }
        if self.snapshots < 1 {
            v.push("snapshots = 0: at least one required".into());
        }
        if self.threads == Some(0) {
            v.push("threads = 0: at least one thread required".into());
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_identical() {
        let mut c = ExperimentConfig::default();
        c.n_values = Some(vec![30, 40]);
        c.record_dt = Some(0.5);
        c.experiment = Experiment::MacroExit;
        let text = c.to_toml();
        let back = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_toml(), text);
    }

    #[test]
    fn flat_table() {
        let text = ExperimentConfig::default().to_toml();
        assert!(!text.contains('['), "{text}");
    }

    #[test]
    fn overrides() {
        let mut c = ExperimentConfig::default();
        c.set("n=50").unwrap();
        c.set("initial=edges:12").unwrap();
        c.set("c3 = 1.5").unwrap();
        c.set("n_values=[30, 60]").unwrap();
        c.set("experiment=sde-mfpt").unwrap();
        assert_eq!(c.n, 50);
        assert_eq!(c.initial, "edges:12");
        assert_eq!(c.c3, 1.5);
        assert_eq!(c.n_values, Some(vec![30, 60]));
        assert_eq!(c.experiment, Experiment::SdeMfpt);
        assert!(c.set("bogus=1").is_err());
        assert!(c.set("n=-3").is_err());
        assert!(c.set("novalue").is_err());
    }

    #[test]
    fn integer_literal_for_float_field() {
        let mut c = ExperimentConfig::default();
        c.set("t_end=200").unwrap();
        assert_eq!(c.t_end, 200.0);
    }

    #[test]
    fn initial_specs() {
        assert_eq!("half".parse::<InitialSpec>().unwrap().0, InitialCondition::HalfEdges);
        assert_eq!(
            "er:0.2".parse::<InitialSpec>().unwrap().0,
            InitialCondition::ErdosRenyi(0.2)
        );
        assert_eq!(
            "edges:7".parse::<InitialSpec>().unwrap().0,
            InitialCondition::EdgeCount(7)
        );
        assert!("er".parse::<InitialSpec>().is_err());
        assert!("ws:3".parse::<InitialSpec>().is_err());
    }

    #[test]
    fn validation_lists_everything() {
        assert!(ExperimentConfig::default().validate().is_empty());
        let mut c = ExperimentConfig::default();
        c.n = 2;
        c.c2 = 0.0;
        c.n_paths = 0;
        let v = c.validate();
        assert!(v.iter().any(|m| m.contains("n ≥ 3 required")), "{v:?}");
        assert!(v.iter().any(|m| m.starts_with("c2")), "{v:?}");
        assert!(v.iter().any(|m| m.starts_with("n_paths")), "{v:?}");
        assert_eq!(v.len(), 3);
    }
}
