//! Experiment configuration files.
//!
//! Every field is checked when the file is loaded, so a bad value never
//! reaches the solver.

use std::fmt;
use std::path::Path;

use pcsplit::benchmark::{Axis, FormationProblem, FormationSpec, LissajousSpec, NoiseRule, SinusoidTarget};
use pcsplit::splitting::balanced_step;
use pcsplit::{DerivativeBounds, DerivativeMode, Method, PCConfig, SplitConfig};
use serde::de::DeserializeOwned;
use serde::Deserialize;

/// A configuration problem, reported with exit code 2.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn invalid(key: &str, reason: impl fmt::Display) -> ConfigError {
    ConfigError(format!("invalid value for `{key}`: {reason}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum ProblemKind {
    Formation,
    SyntheticSinusoid,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeaderConfig {
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default = "default_ratio")]
    pub ratio: (u32, u32),
    #[serde(default = "default_period")]
    pub period: f64,
    #[serde(default = "default_phase")]
    pub phase: f64,
}

fn default_amplitude() -> f64 {
    LissajousSpec::default().amplitude
}
fn default_ratio() -> (u32, u32) {
    LissajousSpec::default().ratio
}
fn default_period() -> f64 {
    LissajousSpec::default().period
}
fn default_phase() -> f64 {
    LissajousSpec::default().phase
}

impl Default for LeaderConfig {
    fn default() -> Self {
        let l = LissajousSpec::default();
        Self {
            amplitude: l.amplitude,
            ratio: l.ratio,
            period: l.period,
            phase: l.phase,
        }
    }
}

/// Formation fields; anything omitted takes the ten-follower default.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormationConfig {
    #[serde(rename = "N")]
    pub n: Option<usize>,
    pub d: Option<f64>,
    pub lambda: Option<f64>,
    pub sigmas: Option<Vec<f64>>,
    /// Unit axis vectors, `[1, 0]` or `[0, 1]`.
    pub directions: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub leader: LeaderConfig,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig {
    pub amplitude: f64,
    pub omega: f64,
    pub dimension: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum RhoSetting {
    Value(f64),
    Named(RhoKeyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RhoKeyword {
    Balanced,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum MethodName {
    #[serde(alias = "FB")]
    ForwardBackward,
    #[serde(alias = "DR")]
    DouglasRachford,
}

impl From<MethodName> for Method {
    fn from(m: MethodName) -> Self {
        match m {
            MethodName::ForwardBackward => Method::ForwardBackward,
            MethodName::DouglasRachford => Method::DouglasRachford,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum ModeName {
    Analytic,
    BackwardDifference,
}

impl From<ModeName> for DerivativeMode {
    fn from(m: ModeName) -> Self {
        match m {
            ModeName::Analytic => DerivativeMode::Analytic,
            ModeName::BackwardDifference => DerivativeMode::BackwardDifference,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub method: MethodName,
    pub rho: RhoSetting,
    #[serde(rename = "P")]
    pub p: usize,
    #[serde(rename = "C")]
    pub c: usize,
    #[serde(rename = "Ts")]
    pub ts: f64,
    pub derivative_mode: ModeName,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemKind,
    pub formation: Option<FormationConfig>,
    pub synthetic: Option<SyntheticConfig>,
    pub solver: SolverConfig,
    pub duration: f64,
    #[serde(default)]
    pub seed: u64,
    pub output_path: Option<String>,
    /// Target contraction `τ` of the analysis report.
    pub tau: Option<f64>,
    /// Declared derivative bounds, overriding the ones derived from the problem.
    pub bounds: Option<BoundsConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum NoiseRuleName {
    Fixed,
    ScaledByTs,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariantConfig {
    #[serde(rename = "P")]
    pub p: usize,
    #[serde(rename = "C")]
    pub c: usize,
    pub derivative_mode: ModeName,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub base: ExperimentConfig,
    pub ts_values: Vec<f64>,
    pub noise_rule: NoiseRuleName,
    pub variants: Vec<VariantConfig>,
}

pub const DEFAULT_TAU: f64 = 0.5;

/// The concrete problem an experiment runs on.
#[derive(Debug, Clone)]
pub enum Problem {
    Formation(FormationProblem),
    Synthetic(SinusoidTarget),
}

impl Problem {
    pub fn moduli(&self) -> (f64, f64) {
        match self {
            Problem::Formation(p) => p.moduli(),
            Problem::Synthetic(_) => (1.0, 1.0),
        }
    }

    pub fn derived_bounds(&self) -> DerivativeBounds {
        match self {
            Problem::Formation(p) => p.derivative_bounds(),
            Problem::Synthetic(s) => s.bounds(),
        }
    }
}

/// A validated experiment.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub problem: Problem,
    pub pc: PCConfig,
    pub duration: f64,
    pub bounds: DerivativeBounds,
    pub tau: f64,
    pub output_path: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Variant {
    pub label: String,
    pub pc: PCConfig,
}

#[derive(Debug, Clone)]
pub struct Sweep {
    pub base: Experiment,
    pub ts_values: Vec<f64>,
    pub noise_rule: NoiseRule,
    pub variants: Vec<Variant>,
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))
}

fn axis(v: &[f64; 2], i: usize) -> Result<Axis, ConfigError> {
    match v {
        [x, y] if *x == 1.0 && *y == 0.0 => Ok(Axis::X),
        [x, y] if *x == 0.0 && *y == 1.0 => Ok(Axis::Y),
        _ => Err(invalid(
            &format!("formation.directions[{i}]"),
            format!("{v:?} is not [1, 0] or [0, 1]"),
        )),
    }
}

fn formation_spec(cfg: &FormationConfig, seed: u64) -> Result<FormationSpec, ConfigError> {
    let defaults = FormationSpec::paper_defaults(seed);
    let n = cfg.n.unwrap_or(defaults.followers);
    if n == 0 {
        return Err(invalid("formation.N", "need at least one follower"));
    }
    let directions = match &cfg.directions {
        Some(dirs) => dirs
            .iter()
            .enumerate()
            .map(|(i, v)| axis(v, i))
            .collect::<Result<Vec<_>, _>>()?,
        None if n == defaults.followers => defaults.directions.clone(),
        None => return Err(invalid("formation.directions", format!("required when N = {n}"))),
    };
    let sigmas = match &cfg.sigmas {
        Some(s) => s.clone(),
        None => vec![defaults.sigmas[0]; n],
    };
    let leader = LissajousSpec {
        amplitude: cfg.leader.amplitude,
        ratio: cfg.leader.ratio,
        period: cfg.leader.period,
        phase: cfg.leader.phase,
    };
    let spec = FormationSpec {
        followers: n,
        radius: cfg.d.unwrap_or(defaults.radius),
        lambda: cfg.lambda.unwrap_or(defaults.lambda),
        sigmas,
        directions,
        leader,
        seed,
    };
    spec.validate()
        .map_err(|e| ConfigError(format!("invalid formation: {e}")))?;
    Ok(spec)
}

fn build_problem(cfg: &ExperimentConfig, seed: u64) -> Result<Problem, ConfigError> {
    match cfg.problem {
        ProblemKind::Formation => {
            if cfg.synthetic.is_some() {
                return Err(invalid("synthetic", "not used by problem Formation"));
            }
            let spec = formation_spec(&cfg.formation.clone().unwrap_or_default(), seed)?;
            let problem = FormationProblem::new(spec).map_err(|e| ConfigError(format!("invalid formation: {e}")))?;
            Ok(Problem::Formation(problem))
        }
        ProblemKind::SyntheticSinusoid => {
            if cfg.formation.is_some() {
                return Err(invalid("formation", "not used by problem SyntheticSinusoid"));
            }
            let s = cfg
                .synthetic
                .as_ref()
                .ok_or_else(|| ConfigError("missing key `synthetic` for problem SyntheticSinusoid".into()))?;
            let target = SinusoidTarget::new(s.amplitude, s.omega, s.dimension).map_err(|e| invalid("synthetic", e))?;
            Ok(Problem::Synthetic(target))
        }
    }
}

fn split_config(solver: &SolverConfig, m: f64, l: f64) -> Result<SplitConfig, ConfigError> {
    let method = Method::from(solver.method);
    let rho = match solver.rho {
        RhoSetting::Value(v) => v,
        RhoSetting::Named(RhoKeyword::Balanced) => balanced_step(method, m, l).map_err(|e| invalid("solver.rho", e))?,
    };
    let split = SplitConfig::new(method, rho).map_err(|e| invalid("solver.rho", e))?;
    split.check_against(l).map_err(|e| invalid("solver.rho", e))?;
    Ok(split)
}

fn pc_config(p: usize, c: usize, ts: f64, mode: ModeName, split: SplitConfig) -> Result<PCConfig, ConfigError> {
    if c < 1 {
        return Err(invalid("solver.C", "correction steps must be at least 1"));
    }
    if !(ts > 0.0 && ts.is_finite()) {
        return Err(invalid(
            "solver.Ts",
            format!("sampling period must be positive, got {ts}"),
        ));
    }
    PCConfig::new(p, c, ts, mode.into(), split).map_err(|e| ConfigError(format!("invalid solver: {e}")))
}

impl ExperimentConfig {
    /// Validates everything; `seed_override` replaces the file's seed.
    pub fn build(&self, seed_override: Option<u64>) -> Result<Experiment, ConfigError> {
        let seed = seed_override.unwrap_or(self.seed);
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(invalid("duration", format!("must be positive, got {}", self.duration)));
        }
        let problem = build_problem(self, seed)?;
        let (m, l) = problem.moduli();
        let split = split_config(&self.solver, m, l)?;
        let s = &self.solver;
        let pc = pc_config(s.p, s.c, s.ts, s.derivative_mode, split)?;
        let bounds = match self.bounds {
            Some(b) => DerivativeBounds::new(b.c0, b.c1, b.c2, b.c3).map_err(|e| invalid("bounds", e))?,
            None => problem.derived_bounds(),
        };
        let tau = self.tau.unwrap_or(DEFAULT_TAU);
        if !(tau > 0.0 && tau < 1.0) {
            return Err(invalid("tau", format!("must lie in (0, 1), got {tau}")));
        }
        Ok(Experiment {
            problem,
            pc,
            duration: self.duration,
            bounds,
            tau,
            output_path: self.output_path.clone(),
        })
    }
}

fn mode_tag(mode: ModeName) -> &'static str {
    match mode {
        ModeName::Analytic => "analytic",
        ModeName::BackwardDifference => "bd",
    }
}

impl SweepConfig {
    pub fn build(&self, seed_override: Option<u64>) -> Result<Sweep, ConfigError> {
        let base = self.base.build(seed_override)?;
        if self.ts_values.is_empty() {
            return Err(invalid("ts_values", "must not be empty"));
        }
        if let Some(ts) = self.ts_values.iter().find(|ts| !(**ts > 0.0 && ts.is_finite())) {
            return Err(invalid(
                "ts_values",
                format!("sampling periods must be positive, got {ts}"),
            ));
        }
        if self.variants.is_empty() {
            return Err(invalid("variants", "must not be empty"));
        }
        let variants = self
            .variants
            .iter()
            .map(|v| {
                let pc = pc_config(v.p, v.c, base.pc.ts, v.derivative_mode, base.pc.split)
                    .map_err(|e| ConfigError(e.0.replace("`solver.", "`variants[].")))?;
                Ok(Variant {
                    label: format!("P{}_C{}_{}", v.p, v.c, mode_tag(v.derivative_mode)),
                    pc,
                })
            })
            .collect::<Result<Vec<_>, ConfigError>>()?;
        Ok(Sweep {
            base,
            ts_values: self.ts_values.clone(),
            noise_rule: match self.noise_rule {
                NoiseRuleName::Fixed => NoiseRule::Fixed,
                NoiseRuleName::ScaledByTs => NoiseRule::ScaledByTs,
            },
            variants,
        })
    }
}
