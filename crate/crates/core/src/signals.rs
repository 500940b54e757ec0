//! Time-varying formation and disturbance signals.
//!
//! Every signal is a per-axis sum of `amplitude * sin(omega t + phase) + offset`
//! terms, which keeps evaluation and differentiation exact.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sinusoid {
    pub amplitude: f64,
    /// rad/s
    pub angular_frequency: f64,
    /// rad
    pub phase: f64,
    #[serde(default)]
    pub offset: f64,
}

impl Sinusoid {
    pub fn new(amplitude: f64, angular_frequency: f64, phase: f64, offset: f64) -> Self {
        Self { amplitude, angular_frequency, phase, offset }
    }

    pub fn constant(offset: f64) -> Self {
        Self::new(0.0, 0.0, 0.0, offset)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.amplitude * (self.angular_frequency * t + self.phase).sin() + self.offset
    }

    pub fn derivative_at(&self, t: f64) -> f64 {
        self.amplitude * self.angular_frequency * (self.angular_frequency * t + self.phase).cos()
    }

    /// The derivative as another sinusoid (`cos x = sin(x + pi/2)`).
    pub fn derivative(&self) -> Self {
        Self::new(self.amplitude * self.angular_frequency, self.angular_frequency, self.phase + FRAC_PI_2, 0.0)
    }

    fn is_finite(&self) -> bool {
        self.amplitude.is_finite()
            && self.angular_frequency.is_finite()
            && self.phase.is_finite()
            && self.offset.is_finite()
    }
}

/// Scalar signal on one axis.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AxisSignal {
    pub terms: Vec<Sinusoid>,
}

impl AxisSignal {
    pub fn new(terms: Vec<Sinusoid>) -> Self {
        Self { terms }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.terms.iter().map(|s| s.eval(t)).sum()
    }

    pub fn derivative_at(&self, t: f64) -> f64 {
        self.terms.iter().map(|s| s.derivative_at(t)).sum()
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.terms
                .iter()
                .filter(|s| s.amplitude != 0.0 && s.angular_frequency != 0.0)
                .map(Sinusoid::derivative)
                .collect(),
        )
    }

    fn validate(&self) -> Result<()> {
        if self.terms.iter().all(Sinusoid::is_finite) {
            Ok(())
        } else {
            Err(Error::InvalidInput("signal terms must be finite".into()))
        }
    }
}

/// Formation offsets `f_i = [f_ip; f_iv]` for one agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentFormation {
    pub position: Vec<AxisSignal>,
    pub velocity: Vec<AxisSignal>,
}

impl AgentFormation {
    /// Velocity part set to the exact derivative of the position part.
    pub fn kinematic(position: Vec<AxisSignal>) -> Self {
        let velocity = position.iter().map(AxisSignal::derivative).collect();
        Self { position, velocity }
    }
}

/// Values of one agent's formation offsets and their time derivatives at `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct FormationSample {
    pub fp: Vec<f64>,
    pub fv: Vec<f64>,
    pub fp_dot: Vec<f64>,
    pub fv_dot: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormationSpec {
    pub agents: Vec<AgentFormation>,
}

impl FormationSpec {
    pub fn new(agents: Vec<AgentFormation>, n_axes: usize) -> Result<Self> {
        let spec = Self { agents };
        spec.validate(n_axes)?;
        Ok(spec)
    }

    pub fn zero(n_agents: usize, n_axes: usize) -> Self {
        let axes = vec![AxisSignal::zero(); n_axes];
        Self { agents: vec![AgentFormation { position: axes.clone(), velocity: axes }; n_agents] }
    }

    /// Time-invariant formation: constant positions, zero velocity offsets.
    pub fn constant(positions: &[Vec<f64>]) -> Self {
        Self {
            agents: positions
                .iter()
                .map(|p| {
                    AgentFormation::kinematic(p.iter().map(|&c| AxisSignal::new(vec![Sinusoid::constant(c)])).collect())
                })
                .collect(),
        }
    }

    /// Rotating regular polygon: agent `i` follows
    /// `scale * [sin(wt + i d), cos(wt + i d), -sin(wt + i d)]` with
    /// `d = phase_step` and the matching velocity offsets. Axes past the
    /// third are zero; `n_axes < 3` truncates.
    pub fn rotating_polygon(
        n_agents: usize,
        n_axes: usize,
        scale: f64,
        phase_step: f64,
        angular_frequency: f64,
    ) -> Self {
        let agents = (0..n_agents)
            .map(|i| {
                let phase = i as f64 * phase_step;
                let pattern = [
                    Sinusoid::new(scale, angular_frequency, phase, 0.0),
                    Sinusoid::new(scale, angular_frequency, phase + FRAC_PI_2, 0.0),
                    Sinusoid::new(-scale, angular_frequency, phase, 0.0),
                ];
                let position = (0..n_axes)
                    .map(|a| pattern.get(a).map(|s| AxisSignal::new(vec![*s])).unwrap_or_default())
                    .collect();
                AgentFormation::kinematic(position)
            })
            .collect();
        Self { agents }
    }

    pub fn n_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn validate(&self, n_axes: usize) -> Result<()> {
        for (i, a) in self.agents.iter().enumerate() {
            if a.position.len() != n_axes || a.velocity.len() != n_axes {
                return Err(Error::InvalidInput(format!(
                    "formation of agent {i} must have {n_axes} position and velocity axes"
                )));
            }
            for s in a.position.iter().chain(&a.velocity) {
                s.validate()?;
            }
        }
        Ok(())
    }

    pub fn eval(&self, i: usize, t: f64) -> FormationSample {
        let a = &self.agents[i];
        FormationSample {
            fp: a.position.iter().map(|s| s.eval(t)).collect(),
            fv: a.velocity.iter().map(|s| s.eval(t)).collect(),
            fp_dot: a.position.iter().map(|s| s.derivative_at(t)).collect(),
            fv_dot: a.velocity.iter().map(|s| s.derivative_at(t)).collect(),
        }
    }
}

/// `(f_ip, f_iv, d/dt f_ip, d/dt f_iv)` for agent `i` at time `t`.
pub fn eval_formation(spec: &FormationSpec, i: usize, t: f64) -> FormationSample {
    spec.eval(i, t)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    /// Per-agent `max_t ||f_iv(t) - d/dt f_ip(t)||_inf` over the grid.
    pub per_agent: Vec<f64>,
    pub max: f64,
    pub grid_len: usize,
    pub grid_start: f64,
    pub grid_end: f64,
}

impl FeasibilityReport {
    pub fn worst_agent(&self) -> usize {
        self.per_agent.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i).unwrap_or(0)
    }
}

/// Sampled sup-norm of `f_iv - d/dt f_ip` per agent.
pub fn feasibility_residual(spec: &FormationSpec, t_grid: &[f64]) -> Result<FeasibilityReport> {
    if t_grid.is_empty() {
        return Err(Error::InvalidInput("feasibility grid is empty".into()));
    }
    if t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("feasibility grid must be strictly ascending".into()));
    }
    let per_agent: Vec<f64> = spec
        .agents
        .iter()
        .map(|a| {
            t_grid
                .iter()
                .flat_map(|&t| {
                    a.position.iter().zip(&a.velocity).map(move |(p, v)| (v.eval(t) - p.derivative_at(t)).abs())
                })
                .fold(0.0, f64::max)
        })
        .collect();
    Ok(FeasibilityReport {
        max: per_agent.iter().copied().fold(0.0, f64::max),
        per_agent,
        grid_len: t_grid.len(),
        grid_start: t_grid[0],
        grid_end: t_grid[t_grid.len() - 1],
    })
}

/// `0, step, 2 step, ...` up to and including `horizon`.
pub fn uniform_grid(horizon: f64, step: f64) -> Vec<f64> {
    let n = (horizon / step).round() as usize;
    (0..=n).map(|k| k as f64 * step).collect()
}

/// Exogenous disturbance `w_i(t)` per agent and axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceSpec {
    pub agents: Vec<Vec<AxisSignal>>,
}

impl DisturbanceSpec {
    pub fn zero(n_agents: usize, n_axes: usize) -> Self {
        Self { agents: vec![vec![AxisSignal::zero(); n_axes]; n_agents] }
    }

    /// The same constant vector on every agent.
    pub fn constant(n_agents: usize, value: &[f64]) -> Self {
        let axes: Vec<AxisSignal> = value.iter().map(|&c| AxisSignal::new(vec![Sinusoid::constant(c)])).collect();
        Self { agents: vec![axes; n_agents] }
    }

    pub fn n_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn validate(&self, n_axes: usize) -> Result<()> {
        for (i, axes) in self.agents.iter().enumerate() {
            if axes.len() != n_axes {
                return Err(Error::InvalidInput(format!("disturbance of agent {i} must have {n_axes} axes")));
            }
            for s in axes {
                s.validate()?;
            }
        }
        Ok(())
    }

    pub fn eval_into(&self, i: usize, t: f64, out: &mut [f64]) {
        for (o, s) in out.iter_mut().zip(&self.agents[i]) {
            *o = s.eval(t);
        }
    }

    /// Distinct angular frequencies present (0 stands for constant terms).
    pub fn frequencies(&self) -> Vec<f64> {
        let mut freqs: Vec<f64> = Vec::new();
        for term in self.agents.iter().flatten().flat_map(|a| &a.terms) {
            if term.amplitude != 0.0 {
                freqs.push(term.angular_frequency.abs());
            }
            if term.offset != 0.0 || (term.amplitude != 0.0 && term.angular_frequency == 0.0) {
                freqs.push(0.0);
            }
        }
        freqs.sort_by(f64::total_cmp);
        freqs.dedup();
        freqs
    }
}

pub fn eval_disturbance(spec: &DisturbanceSpec, i: usize, t: f64) -> Vec<f64> {
    let mut out = vec![0.0; spec.agents[i].len()];
    spec.eval_into(i, t, &mut out);
    out
}
