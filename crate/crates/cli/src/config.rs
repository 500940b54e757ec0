//! Scenario configuration files (TOML).
//!
//! ```toml
//! version = 1
//! label = "paper_s5"
//!
//! [plant]
//! alpha_p = -0.01
//! alpha_v = 0.0
//! axes = 3
//!
//! [topology]
//! kind = "edges"            # or "matrix" with `weights = [[...], ...]`
//! agents = 6
//! edges = [{ from = 1, to = 2 }, { from = 1, to = 5, weight = 0.5 }]
//!
//! [formation]
//! kind = "hexagon"          # "explicit", "constant" or "zero"
//! scale = 3.0
//! phase_step = 1.0471975511965976
//!
//! [disturbance]
//! kind = "preset"           # "explicit", "constant" or "zero"
//!
//! [observer]
//! sigma = 10.0              # or one value per agent
//!
//! [integrator]
//! dt = 1e-3
//! horizon = 20.0
//! decimation = 10
//!
//! initial_states = [[0.6, 1.2, 0.5, -1.2, -0.3, 0.8], ...]
//! ```
//!
//! Agent indices in edge lists are 1-based. Unknown keys are rejected.

use std::path::Path;

use formation_core::design::{DEFAULT_EPS_F, DEFAULT_FEASIBILITY_STEP};
use formation_core::graph::Edge;
use formation_core::presets;
use formation_core::signals::AgentFormation;
use formation_core::simulator::{IntegratorSettings, DEFAULT_DECIMATION, DEFAULT_DT};
use formation_core::{AxisSignal, Digraph, DisturbanceSpec, FormationSpec, PlantParams, Scenario};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub version: u32,
    #[serde(default = "default_label")]
    pub label: String,
    pub plant: PlantConfig,
    pub topology: TopologyConfig,
    pub formation: FormationConfig,
    #[serde(default)]
    pub disturbance: DisturbanceConfig,
    #[serde(default)]
    pub observer: ObserverConfig,
    #[serde(default)]
    pub design: DesignConfig,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    /// Per agent `[p_1..p_n, v_1..v_n]`.
    pub initial_states: Vec<Vec<f64>>,
}

fn default_label() -> String {
    "scenario".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantConfig {
    pub alpha_p: f64,
    pub alpha_v: f64,
    pub axes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TopologyConfig {
    /// Row `i` lists the weights `w_ij` of agent `i`'s in-neighbours.
    Matrix {
        weights: Vec<Vec<f64>>,
    },
    Edges {
        agents: usize,
        edges: Vec<EdgeConfig>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeConfig {
    /// 1-based sender.
    pub from: usize,
    /// 1-based receiver.
    pub to: usize,
    #[serde(default = "unit_weight")]
    pub weight: f64,
}

fn unit_weight() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FormationConfig {
    /// Rotating polygon `scale [sin, cos, -sin](w t + i phase_step)`.
    Hexagon {
        scale: f64,
        phase_step: f64,
        #[serde(default = "unit_frequency")]
        angular_frequency: f64,
    },
    Explicit {
        agents: Vec<ExplicitFormation>,
    },
    Constant {
        positions: Vec<Vec<f64>>,
    },
    Zero,
}

fn unit_frequency() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitFormation {
    pub position: Vec<AxisSignal>,
    /// Defaults to the exact derivative of `position`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocity: Option<Vec<AxisSignal>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DisturbanceConfig {
    /// The bundled six-agent sinusoid-plus-offset disturbances.
    Preset,
    Explicit {
        agents: Vec<Vec<AxisSignal>>,
    },
    Constant {
        value: Vec<f64>,
    },
    #[default]
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SigmaConfig {
    Uniform(f64),
    PerAgent(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObserverConfig {
    #[serde(default = "default_sigma")]
    pub sigma: SigmaConfig,
    /// When false the estimate is not fed back (`z` is zeroed in the protocol).
    #[serde(default = "enabled")]
    pub enabled: bool,
}

fn default_sigma() -> SigmaConfig {
    SigmaConfig::Uniform(presets::SIGMA)
}

fn enabled() -> bool {
    true
}

impl Default for ObserverConfig {
    fn default() -> Self {
        Self { sigma: default_sigma(), enabled: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignConfig {
    #[serde(default = "default_eps_f")]
    pub eps_f: f64,
    #[serde(default = "default_feasibility_step")]
    pub feasibility_step: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda2_override: Option<f64>,
}

fn default_eps_f() -> f64 {
    DEFAULT_EPS_F
}

fn default_feasibility_step() -> f64 {
    DEFAULT_FEASIBILITY_STEP
}

impl Default for DesignConfig {
    fn default() -> Self {
        Self { eps_f: DEFAULT_EPS_F, feasibility_step: DEFAULT_FEASIBILITY_STEP, lambda2_override: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_decimation")]
    pub decimation: usize,
}

fn default_dt() -> f64 {
    DEFAULT_DT
}

fn default_horizon() -> f64 {
    20.0
}

fn default_decimation() -> usize {
    DEFAULT_DECIMATION
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { dt: DEFAULT_DT, horizon: default_horizon(), decimation: DEFAULT_DECIMATION }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub dt: Option<f64>,
    pub horizon: Option<f64>,
    pub lambda2_override: Option<f64>,
    pub eps_f: Option<f64>,
}

fn config_err(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {msg}"))
}

fn positive(field: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(config_err(field, format!("must be a positive finite number, got {x}")))
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        // check the version before the schema so old files get a clear message
        let raw: toml::Table = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        match raw.get("version").and_then(toml::Value::as_integer) {
            Some(v) if v == CONFIG_VERSION as i64 => {}
            Some(v) => {
                return Err(config_err("version", format!("unsupported version {v}, expected {CONFIG_VERSION}")))
            }
            None => return Err(config_err("version", "missing (expected `version = 1`)")),
        }
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| CliError::Config(format!("cannot serialise config: {e}")))
    }

    /// One of the bundled scenarios expressed as a config.
    pub fn preset(name: &str) -> Result<Self> {
        let base = Self {
            version: CONFIG_VERSION,
            label: name.to_string(),
            plant: PlantConfig { alpha_p: presets::ALPHA_P, alpha_v: presets::ALPHA_V, axes: presets::N_AXES },
            topology: TopologyConfig::Edges {
                agents: presets::N_AGENTS,
                edges: presets::SUBSTITUTE_EDGES
                    .iter()
                    .map(|&(from, to)| EdgeConfig { from: from + 1, to: to + 1, weight: 1.0 })
                    .collect(),
            },
            formation: FormationConfig::Hexagon {
                scale: presets::HEXAGON_SCALE,
                phase_step: presets::HEXAGON_PHASE_STEP,
                angular_frequency: 1.0,
            },
            disturbance: DisturbanceConfig::Preset,
            observer: ObserverConfig::default(),
            design: DesignConfig::default(),
            integrator: IntegratorConfig::default(),
            initial_states: presets::initial_states(),
        };
        match name {
            "paper_s5" => Ok(base),
            "paper_gain" => Ok(Self {
                design: DesignConfig {
                    lambda2_override: Some(presets::PUBLISHED_LAMBDA2_RE),
                    ..DesignConfig::default()
                },
                ..base
            }),
            "paper_s5_undisturbed" => Ok(Self { disturbance: DisturbanceConfig::Zero, ..base }),
            "static_consensus" => {
                let hex = presets::hexagon();
                let positions = (0..presets::N_AGENTS).map(|i| hex.eval(i, 0.0).fp).collect();
                Ok(Self {
                    formation: FormationConfig::Constant { positions },
                    disturbance: DisturbanceConfig::Zero,
                    ..base
                })
            }
            other => Err(CliError::Config(format!(
                "unknown preset `{other}` (available: {})",
                presets::PRESET_NAMES.join(", ")
            ))),
        }
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(dt) = o.dt {
            self.integrator.dt = dt;
        }
        if let Some(h) = o.horizon {
            self.integrator.horizon = h;
        }
        if let Some(l) = o.lambda2_override {
            self.design.lambda2_override = Some(l);
        }
        if let Some(e) = o.eps_f {
            self.design.eps_f = e;
        }
    }

    pub fn n_agents(&self) -> usize {
        match &self.topology {
            TopologyConfig::Matrix { weights } => weights.len(),
            TopologyConfig::Edges { agents, .. } => *agents,
        }
    }

    /// Schema checks that need more than the type system; each error names
    /// the offending field.
    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(config_err(
                "version",
                format!("unsupported version {}, expected {CONFIG_VERSION}", self.version),
            ));
        }
        let n_axes = self.plant.axes;
        if n_axes == 0 {
            return Err(config_err("plant.axes", "must be at least 1"));
        }
        for (field, x) in [("plant.alpha_p", self.plant.alpha_p), ("plant.alpha_v", self.plant.alpha_v)] {
            if !x.is_finite() {
                return Err(config_err(field, format!("must be finite, got {x}")));
            }
        }
        let n = self.n_agents();
        if n < 2 {
            return Err(config_err("topology", format!("needs at least 2 agents, got {n}")));
        }
        match &self.topology {
            TopologyConfig::Matrix { weights } => {
                for (i, row) in weights.iter().enumerate() {
                    if row.len() != n {
                        return Err(config_err(
                            &format!("topology.weights[{i}]"),
                            format!("has {} entries, expected {n}", row.len()),
                        ));
                    }
                }
            }
            TopologyConfig::Edges { edges, .. } => {
                for (k, e) in edges.iter().enumerate() {
                    if e.from == 0 || e.to == 0 || e.from > n || e.to > n {
                        return Err(config_err(
                            &format!("topology.edges[{k}]"),
                            format!("agents are numbered 1..={n}, got {} -> {}", e.from, e.to),
                        ));
                    }
                    if e.from == e.to {
                        return Err(config_err(&format!("topology.edges[{k}]"), "self-loops are not allowed"));
                    }
                    if !(e.weight > 0.0) || !e.weight.is_finite() {
                        return Err(config_err(
                            &format!("topology.edges[{k}].weight"),
                            format!("must be positive, got {}", e.weight),
                        ));
                    }
                }
            }
        }
        match &self.formation {
            FormationConfig::Hexagon { scale, phase_step, angular_frequency } => {
                for (field, x) in [
                    ("formation.scale", *scale),
                    ("formation.phase_step", *phase_step),
                    ("formation.angular_frequency", *angular_frequency),
                ] {
                    if !x.is_finite() {
                        return Err(config_err(field, format!("must be finite, got {x}")));
                    }
                }
            }
            FormationConfig::Explicit { agents } => {
                if agents.len() != n {
                    return Err(config_err("formation.agents", format!("lists {} agents, expected {n}", agents.len())));
                }
                for (i, a) in agents.iter().enumerate() {
                    if a.position.len() != n_axes || a.velocity.as_ref().is_some_and(|v| v.len() != n_axes) {
                        return Err(config_err(
                            &format!("formation.agents[{i}]"),
                            format!("position/velocity must have {n_axes} axes"),
                        ));
                    }
                }
            }
            FormationConfig::Constant { positions } => {
                if positions.len() != n || positions.iter().any(|p| p.len() != n_axes) {
                    return Err(config_err("formation.positions", format!("expected {n} rows of {n_axes} values")));
                }
            }
            FormationConfig::Zero => {}
        }
        match &self.disturbance {
            DisturbanceConfig::Preset => {
                if n != presets::N_AGENTS || n_axes != presets::N_AXES {
                    return Err(config_err(
                        "disturbance.kind",
                        format!("`preset` requires {} agents on {} axes", presets::N_AGENTS, presets::N_AXES),
                    ));
                }
            }
            DisturbanceConfig::Explicit { agents } => {
                if agents.len() != n || agents.iter().any(|a| a.len() != n_axes) {
                    return Err(config_err(
                        "disturbance.agents",
                        format!("expected {n} agents with {n_axes} axes each"),
                    ));
                }
            }
            DisturbanceConfig::Constant { value } => {
                if value.len() != n_axes {
                    return Err(config_err("disturbance.value", format!("expected {n_axes} values")));
                }
            }
            DisturbanceConfig::Zero => {}
        }
        match &self.observer.sigma {
            SigmaConfig::Uniform(s) => positive("observer.sigma", *s)?,
            SigmaConfig::PerAgent(v) => {
                if v.len() != n {
                    return Err(config_err("observer.sigma", format!("lists {} values for {n} agents", v.len())));
                }
                for (i, s) in v.iter().enumerate() {
                    positive(&format!("observer.sigma[{i}]"), *s)?;
                }
            }
        }
        if !(self.design.eps_f >= 0.0) || !self.design.eps_f.is_finite() {
            return Err(config_err("design.eps_f", format!("must be nonnegative, got {}", self.design.eps_f)));
        }
        positive("design.feasibility_step", self.design.feasibility_step)?;
        if let Some(l) = self.design.lambda2_override {
            positive("design.lambda2_override", l)?;
        }
        positive("integrator.dt", self.integrator.dt)?;
        positive("integrator.horizon", self.integrator.horizon)?;
        if self.integrator.decimation == 0 {
            return Err(config_err("integrator.decimation", "must be at least 1"));
        }
        if self.integrator.dt > self.integrator.horizon {
            return Err(config_err("integrator.dt", "exceeds the horizon"));
        }
        if self.initial_states.len() != n {
            return Err(config_err(
                "initial_states",
                format!("lists {} agents, expected {n}", self.initial_states.len()),
            ));
        }
        for (i, x) in self.initial_states.iter().enumerate() {
            if x.len() != 2 * n_axes || x.iter().any(|c| !c.is_finite()) {
                return Err(config_err(
                    &format!("initial_states[{i}]"),
                    format!("expected {} finite values [p; v]", 2 * n_axes),
                ));
            }
        }
        Ok(())
    }

    pub fn sigma(&self) -> Vec<f64> {
        match &self.observer.sigma {
            SigmaConfig::Uniform(s) => vec![*s; self.n_agents()],
            SigmaConfig::PerAgent(v) => v.clone(),
        }
    }

    pub fn to_scenario(&self) -> Result<Scenario> {
        self.validate()?;
        let n = self.n_agents();
        let n_axes = self.plant.axes;
        let graph = match &self.topology {
            TopologyConfig::Matrix { weights } => Digraph::from_matrix(weights)?,
            TopologyConfig::Edges { edges, .. } => {
                let e: Vec<Edge> =
                    edges.iter().map(|e| Edge { from: e.from - 1, to: e.to - 1, weight: e.weight }).collect();
                Digraph::from_edges(n, &e)?
            }
        };
        let formation = match &self.formation {
            FormationConfig::Hexagon { scale, phase_step, angular_frequency } => {
                FormationSpec::rotating_polygon(n, n_axes, *scale, *phase_step, *angular_frequency)
            }
            FormationConfig::Explicit { agents } => FormationSpec::new(
                agents
                    .iter()
                    .map(|a| match &a.velocity {
                        Some(v) => AgentFormation { position: a.position.clone(), velocity: v.clone() },
                        None => AgentFormation::kinematic(a.position.clone()),
                    })
                    .collect(),
                n_axes,
            )?,
            FormationConfig::Constant { positions } => FormationSpec::constant(positions),
            FormationConfig::Zero => FormationSpec::zero(n, n_axes),
        };
        let disturbance = match &self.disturbance {
            DisturbanceConfig::Preset => presets::disturbances(),
            DisturbanceConfig::Explicit { agents } => DisturbanceSpec { agents: agents.clone() },
            DisturbanceConfig::Constant { value } => DisturbanceSpec::constant(n, value),
            DisturbanceConfig::Zero => DisturbanceSpec::zero(n, n_axes),
        };
        Ok(Scenario {
            label: self.label.clone(),
            plant: PlantParams::new(self.plant.alpha_p, self.plant.alpha_v, n_axes)?,
            graph,
            formation,
            disturbance,
            sigma: self.sigma(),
            compensation: self.observer.enabled,
            initial: self.initial_states.clone(),
            integrator: IntegratorSettings::new(
                self.integrator.dt,
                self.integrator.horizon,
                self.integrator.decimation,
            )?,
            eps_f: self.design.eps_f,
            feasibility_step: self.design.feasibility_step,
            lambda2_override: self.design.lambda2_override,
        })
    }
}
