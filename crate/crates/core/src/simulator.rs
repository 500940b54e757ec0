//! Closed-loop simulation of the formation protocol.
//!
//! The stacked state holds, per agent, `[p (n), v (n), g (n), z (n)]`.
//! Agents and observers are advanced together with classical fixed-step
//! RK4; the protocol and the disturbances are re-evaluated at every stage.

use nalgebra::DMatrix;

use crate::design::DesignReport;
use crate::error::{Error, Result};
use crate::eso::{eso_derivative, EsoParams, EsoState};
use crate::graph::Digraph;
use crate::riccati::{GainRow, PlantParams};
use crate::signals::{DisturbanceSpec, FormationSample, FormationSpec};

/// Default RK4 step (s).
pub const DEFAULT_DT: f64 = 1e-3;
/// Default number of RK4 steps between recorded samples.
pub const DEFAULT_DECIMATION: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorSettings {
    pub dt: f64,
    pub horizon: f64,
    pub decimation: usize,
}

impl IntegratorSettings {
    pub fn new(dt: f64, horizon: f64, decimation: usize) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidInput(format!("integrator dt must be positive, got {dt}")));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidInput(format!("integrator horizon must be positive, got {horizon}")));
        }
        if decimation == 0 {
            return Err(Error::InvalidInput("integrator decimation must be at least 1".into()));
        }
        Ok(Self { dt, horizon, decimation })
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        Self { dt: DEFAULT_DT, horizon: 20.0, decimation: DEFAULT_DECIMATION }
    }
}

/// Everything the protocol needs from the design: topology weights, gain
/// row and the left null vector used for the formation center.
#[derive(Debug, Clone, PartialEq)]
pub struct Protocol {
    pub weights: DMatrix<f64>,
    pub gain: GainRow,
    pub u_bar_1: Vec<f64>,
}

impl Protocol {
    pub fn from_design(graph: &Digraph, report: &DesignReport) -> Self {
        Self { weights: graph.weights().clone(), gain: report.riccati.k_row, u_bar_1: report.spectrum.u_bar_1.clone() }
    }

    pub fn n_agents(&self) -> usize {
        self.weights.nrows()
    }
}

/// Stacked state of all agents and observers at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub t: f64,
    pub n_agents: usize,
    pub n_axes: usize,
    data: Vec<f64>,
}

impl SystemState {
    /// Agents at `x_i = [p_i; v_i]` with observers initialised to
    /// `g_i = v_i`, `z_i = 0`.
    pub fn from_agent_states(initial: &[Vec<f64>], n_axes: usize) -> Result<Self> {
        let n_agents = initial.len();
        let mut data = vec![0.0; n_agents * 4 * n_axes];
        for (i, x) in initial.iter().enumerate() {
            if x.len() != 2 * n_axes {
                return Err(Error::InvalidInput(format!(
                    "initial state of agent {i} has {} entries, expected {}",
                    x.len(),
                    2 * n_axes
                )));
            }
            if x.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidInput(format!("initial state of agent {i} is not finite")));
            }
            let b = i * 4 * n_axes;
            data[b..b + 2 * n_axes].copy_from_slice(x);
            data.copy_within(b + n_axes..b + 2 * n_axes, b + 2 * n_axes);
        }
        Ok(Self { t: 0.0, n_agents, n_axes, data })
    }

    fn block(&self, i: usize, k: usize) -> &[f64] {
        let n = self.n_axes;
        let b = i * 4 * n + k * n;
        &self.data[b..b + n]
    }

    pub fn p(&self, i: usize) -> &[f64] {
        self.block(i, 0)
    }

    pub fn v(&self, i: usize) -> &[f64] {
        self.block(i, 1)
    }

    pub fn g(&self, i: usize) -> &[f64] {
        self.block(i, 2)
    }

    pub fn z(&self, i: usize) -> &[f64] {
        self.block(i, 3)
    }

    pub fn eso(&self, i: usize, axis: usize) -> EsoState {
        EsoState { g: self.g(i)[axis], z: self.z(i)[axis] }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Protocol output for agent `i`:
///
/// `u_i = K sum_j w_ij (x_j - x_i - f_j + f_i) - (a_p f_ip + a_v f_iv) + f_iv' - z_i`
///
/// `positions`/`velocities` are indexed by agent; only relative
/// neighbour differences enter the consensus term.
#[allow(clippy::too_many_arguments)]
pub fn control_input(
    i: usize,
    positions: &[&[f64]],
    velocities: &[&[f64]],
    formation: &[FormationSample],
    compensation: &[f64],
    gain: &GainRow,
    weights: &DMatrix<f64>,
    plant: &PlantParams,
) -> Vec<f64> {
    let n = plant.n_axes;
    let fi = &formation[i];
    let mut u: Vec<f64> = (0..n)
        .map(|a| -(plant.alpha_p * fi.fp[a] + plant.alpha_v * fi.fv[a]) + fi.fv_dot[a] - compensation[a])
        .collect();
    for j in 0..weights.ncols() {
        let w = weights[(i, j)];
        if w == 0.0 {
            continue;
        }
        let fj = &formation[j];
        for a in 0..n {
            let dp = positions[j][a] - positions[i][a] - fj.fp[a] + fi.fp[a];
            let dv = velocities[j][a] - velocities[i][a] - fj.fv[a] + fi.fv[a];
            u[a] += w * (gain.k_p * dp + gain.k_v * dv);
        }
    }
    u
}

/// The closed-loop vector field.
#[derive(Debug, Clone)]
pub struct ClosedLoop {
    pub plant: PlantParams,
    pub protocol: Protocol,
    pub formation: FormationSpec,
    pub disturbance: DisturbanceSpec,
    pub observers: Vec<EsoParams>,
    /// When false the protocol ignores the observer (`z_i` treated as 0).
    pub compensation: bool,
}

/// Instantaneous signals at one time, used both by the vector field and
/// the trace recorder.
struct Snapshot {
    formation: Vec<FormationSample>,
    controls: Vec<Vec<f64>>,
    disturbances: Vec<Vec<f64>>,
    compensations: Vec<Vec<f64>>,
}

impl ClosedLoop {
    pub fn new(
        plant: PlantParams,
        protocol: Protocol,
        formation: FormationSpec,
        disturbance: DisturbanceSpec,
        observers: Vec<EsoParams>,
        compensation: bool,
    ) -> Result<Self> {
        let n = protocol.n_agents();
        if protocol.weights.ncols() != n || protocol.u_bar_1.len() != n {
            return Err(Error::InvalidInput("protocol dimensions disagree".into()));
        }
        if formation.n_agents() != n || disturbance.n_agents() != n || observers.len() != n {
            return Err(Error::InvalidInput(format!(
                "expected {n} agents in formation ({}), disturbance ({}) and observers ({})",
                formation.n_agents(),
                disturbance.n_agents(),
                observers.len()
            )));
        }
        formation.validate(plant.n_axes)?;
        disturbance.validate(plant.n_axes)?;
        Ok(Self { plant, protocol, formation, disturbance, observers, compensation })
    }

    pub fn n_agents(&self) -> usize {
        self.protocol.n_agents()
    }

    fn snapshot(&self, state: &SystemState) -> Snapshot {
        let n_agents = self.n_agents();
        let n = self.plant.n_axes;
        let t = state.t;
        let formation: Vec<FormationSample> = (0..n_agents).map(|i| self.formation.eval(i, t)).collect();
        let positions: Vec<&[f64]> = (0..n_agents).map(|i| state.p(i)).collect();
        let velocities: Vec<&[f64]> = (0..n_agents).map(|i| state.v(i)).collect();
        let compensations: Vec<Vec<f64>> =
            (0..n_agents).map(|i| if self.compensation { state.z(i).to_vec() } else { vec![0.0; n] }).collect();
        let controls = (0..n_agents)
            .map(|i| {
                control_input(
                    i,
                    &positions,
                    &velocities,
                    &formation,
                    &compensations[i],
                    &self.protocol.gain,
                    &self.protocol.weights,
                    &self.plant,
                )
            })
            .collect();
        let disturbances = (0..n_agents)
            .map(|i| {
                let mut w = vec![0.0; n];
                self.disturbance.eval_into(i, t, &mut w);
                w
            })
            .collect();
        Snapshot { formation, controls, disturbances, compensations }
    }

    /// Time derivative of the stacked state.
    pub fn derivative(&self, state: &SystemState) -> Vec<f64> {
        let snap = self.snapshot(state);
        self.derivative_with(state, &snap)
    }

    fn derivative_with(&self, state: &SystemState, snap: &Snapshot) -> Vec<f64> {
        let n = self.plant.n_axes;
        let mut out = vec![0.0; state.data.len()];
        for i in 0..self.n_agents() {
            let b = i * 4 * n;
            let (p, v) = (state.p(i), state.v(i));
            let u = &snap.controls[i];
            let w = &snap.disturbances[i];
            for a in 0..n {
                out[b + a] = v[a];
                out[b + n + a] = self.plant.alpha_p * p[a] + self.plant.alpha_v * v[a] + u[a] + w[a];
                let (g_dot, z_dot) = eso_derivative(state.eso(i, a), p[a], v[a], u[a], &self.observers[i], &self.plant);
                out[b + 2 * n + a] = g_dot;
                out[b + 3 * n + a] = z_dot;
            }
        }
        out
    }

    /// One classical RK4 step of size `dt`.
    pub fn step(&self, state: &SystemState, dt: f64) -> Result<SystemState> {
        if !(dt > 0.0) {
            return Err(Error::InvalidInput(format!("step size must be positive, got {dt}")));
        }
        let at = |t: f64, base: &[f64], k: &[f64], h: f64| SystemState {
            t,
            n_agents: state.n_agents,
            n_axes: state.n_axes,
            data: base.iter().zip(k).map(|(x, d)| x + h * d).collect(),
        };
        let x = &state.data;
        let k1 = self.derivative(state);
        let k2 = self.derivative(&at(state.t + 0.5 * dt, x, &k1, 0.5 * dt));
        let k3 = self.derivative(&at(state.t + 0.5 * dt, x, &k2, 0.5 * dt));
        let k4 = self.derivative(&at(state.t + dt, x, &k3, dt));
        let data: Vec<f64> =
            (0..x.len()).map(|m| x[m] + dt / 6.0 * (k1[m] + 2.0 * k2[m] + 2.0 * k3[m] + k4[m])).collect();
        let next = SystemState { t: state.t + dt, n_agents: state.n_agents, n_axes: state.n_axes, data };
        if !next.is_finite() {
            return Err(Error::NonFiniteState { t: next.t });
        }
        Ok(next)
    }

    fn record(&self, state: &SystemState) -> TraceSample {
        let n_agents = self.n_agents();
        let n = self.plant.n_axes;
        let snap = self.snapshot(state);
        let mut kappa = vec![0.0; 2 * n];
        for i in 0..n_agents {
            let u = self.protocol.u_bar_1[i];
            let f = &snap.formation[i];
            for a in 0..n {
                kappa[a] += u * (state.p(i)[a] - f.fp[a]);
                kappa[n + a] += u * (state.v(i)[a] - f.fv[a]);
            }
        }
        let deviation_norms: Vec<f64> =
            (0..n_agents).map(|i| deviation_norm(state.p(i), state.v(i), &snap.formation[i], &kappa)).collect();
        let error = deviation_norms.iter().copied().fold(0.0, f64::max);
        let flatten = |rows: Vec<Vec<f64>>| rows.into_iter().flatten().collect::<Vec<f64>>();
        TraceSample {
            t: state.t,
            positions: (0..n_agents).flat_map(|i| state.p(i).to_vec()).collect(),
            velocities: (0..n_agents).flat_map(|i| state.v(i).to_vec()).collect(),
            controls: flatten(snap.controls),
            disturbances: flatten(snap.disturbances),
            compensations: flatten(snap.compensations),
            kappa,
            deviation_norms,
            error,
        }
    }

    /// Integrates from `initial` over the horizon, recording every
    /// `decimation` steps (and always the initial state).
    pub fn simulate(&self, initial: &SystemState, settings: &IntegratorSettings) -> Result<SimulationTrace> {
        if initial.n_agents != self.n_agents() || initial.n_axes != self.plant.n_axes {
            return Err(Error::InvalidInput("initial state dimensions disagree with the model".into()));
        }
        let steps = settings.steps();
        let mut samples = Vec::with_capacity(steps / settings.decimation + 2);
        let mut state = initial.clone();
        samples.push(self.record(&state));
        for k in 1..=steps {
            state = self.step(&state, settings.dt)?;
            // avoid accumulating rounding in t
            state.t = k as f64 * settings.dt;
            if k % settings.decimation == 0 || k == steps {
                samples.push(self.record(&state));
            }
        }
        Ok(SimulationTrace { n_agents: self.n_agents(), n_axes: self.plant.n_axes, samples })
    }
}

/// `||x_i - f_i - kappa||_2`.
pub fn deviation_norm(p: &[f64], v: &[f64], f: &FormationSample, kappa: &[f64]) -> f64 {
    let n = p.len();
    (0..n)
        .map(|a| {
            let dp = p[a] - f.fp[a] - kappa[a];
            let dv = v[a] - f.fv[a] - kappa[n + a];
            dp * dp + dv * dv
        })
        .sum::<f64>()
        .sqrt()
}

/// One recorded output step. Per-agent quantities are flattened agent-major
/// (`N * n` entries); `kappa` is `[p (n); v (n)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSample {
    pub t: f64,
    pub positions: Vec<f64>,
    pub velocities: Vec<f64>,
    pub controls: Vec<f64>,
    pub disturbances: Vec<f64>,
    /// Compensation actually applied by the protocol.
    pub compensations: Vec<f64>,
    pub kappa: Vec<f64>,
    pub deviation_norms: Vec<f64>,
    /// `max_i ||x_i - f_i - kappa||_2`.
    pub error: f64,
}

impl TraceSample {
    fn agent(v: &[f64], i: usize, n: usize) -> &[f64] {
        &v[i * n..(i + 1) * n]
    }

    pub fn p(&self, i: usize) -> &[f64] {
        Self::agent(&self.positions, i, self.kappa.len() / 2)
    }

    pub fn v(&self, i: usize) -> &[f64] {
        Self::agent(&self.velocities, i, self.kappa.len() / 2)
    }

    pub fn omega(&self, i: usize) -> &[f64] {
        Self::agent(&self.disturbances, i, self.kappa.len() / 2)
    }

    pub fn z(&self, i: usize) -> &[f64] {
        Self::agent(&self.compensations, i, self.kappa.len() / 2)
    }

    pub fn u(&self, i: usize) -> &[f64] {
        Self::agent(&self.controls, i, self.kappa.len() / 2)
    }

    /// Agent state `x_i = [p_i; v_i]`.
    pub fn x(&self, i: usize) -> Vec<f64> {
        [self.p(i), self.v(i)].concat()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    pub n_agents: usize,
    pub n_axes: usize,
    pub samples: Vec<TraceSample>,
}

impl SimulationTrace {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn final_error(&self) -> f64 {
        self.samples.last().map(|s| s.error).unwrap_or(f64::NAN)
    }

    /// Largest `e(t)` over samples with `t` in `[from, to]`.
    pub fn max_error_between(&self, from: f64, to: f64) -> f64 {
        self.samples.iter().filter(|s| s.t >= from - 1e-9 && s.t <= to + 1e-9).map(|s| s.error).fold(0.0, f64::max)
    }

    /// Largest absolute value of any recorded state, control or signal.
    pub fn max_abs_state(&self) -> f64 {
        self.samples
            .iter()
            .flat_map(|s| {
                s.positions.iter().chain(&s.velocities).chain(&s.controls).chain(&s.compensations).chain(&s.kappa)
            })
            .fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// A complete simulation scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub label: String,
    pub plant: PlantParams,
    pub graph: Digraph,
    pub formation: FormationSpec,
    pub disturbance: DisturbanceSpec,
    /// Observer bandwidth per agent.
    pub sigma: Vec<f64>,
    pub compensation: bool,
    /// Per agent `[p; v]`.
    pub initial: Vec<Vec<f64>>,
    pub integrator: IntegratorSettings,
    pub eps_f: f64,
    pub feasibility_step: f64,
    pub lambda2_override: Option<f64>,
}

impl Scenario {
    pub fn design_input(&self) -> crate::design::DesignInput<'_> {
        crate::design::DesignInput {
            graph: &self.graph,
            plant: self.plant,
            formation: &self.formation,
            disturbance: Some(&self.disturbance),
            eps_f: self.eps_f,
            sigma: &self.sigma,
            feasibility_grid: crate::signals::uniform_grid(self.integrator.horizon, self.feasibility_step),
            lambda2_override: self.lambda2_override,
        }
    }

    pub fn closed_loop(&self, report: &DesignReport) -> Result<ClosedLoop> {
        let observers = self.sigma.iter().map(|&s| EsoParams::from_bandwidth(s)).collect::<Result<Vec<_>>>()?;
        ClosedLoop::new(
            self.plant,
            Protocol::from_design(&self.graph, report),
            self.formation.clone(),
            self.disturbance.clone(),
            observers,
            self.compensation,
        )
    }

    pub fn initial_state(&self) -> Result<SystemState> {
        if self.initial.len() != self.graph.n_agents() {
            return Err(Error::InvalidInput(format!(
                "{} initial states for {} agents",
                self.initial.len(),
                self.graph.n_agents()
            )));
        }
        SystemState::from_agent_states(&self.initial, self.plant.n_axes)
    }
}

/// Simulates `scenario` with the protocol fixed by `report`.
pub fn run(scenario: &Scenario, report: &DesignReport) -> Result<SimulationTrace> {
    let closed_loop = scenario.closed_loop(report)?;
    closed_loop.simulate(&scenario.initial_state()?, &scenario.integrator)
}
