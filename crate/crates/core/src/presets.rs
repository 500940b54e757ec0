//! The bundled six-agent scenario: a rotating hexagon in three dimensions
//! under sinusoid-plus-constant disturbances.
//!
//! The interaction topology of the original experiment is not available, so
//! [`substitute_topology`] provides a strongly connected 0-1 digraph whose
//! `Re(lambda_2) = 0.929304` reproduces the published gain `[1.0654, 1.8576]`
//! without any override.

use std::f64::consts::PI;

use crate::design::{DEFAULT_EPS_F, DEFAULT_FEASIBILITY_STEP};
use crate::error::Result;
use crate::graph::{Digraph, Edge};
use crate::riccati::PlantParams;
use crate::signals::{AxisSignal, DisturbanceSpec, FormationSpec, Sinusoid};
use crate::simulator::{IntegratorSettings, Scenario};

pub const N_AGENTS: usize = 6;
pub const N_AXES: usize = 3;
pub const ALPHA_P: f64 = -0.01;
pub const ALPHA_V: f64 = 0.0;
pub const SIGMA: f64 = 10.0;
pub const HEXAGON_SCALE: f64 = 3.0;
pub const HEXAGON_PHASE_STEP: f64 = PI / 3.0;
/// `Re(lambda_2)` implied by the published gain.
pub const PUBLISHED_LAMBDA2_RE: f64 = 0.9293;
pub const PUBLISHED_GAIN: [f64; 2] = [1.0654, 1.8576];

/// Initial `[p_x, p_y, p_z, v_x, v_y, v_z]` per agent.
pub const INITIAL_STATES: [[f64; 6]; N_AGENTS] = [
    [0.6, 1.2, 0.5, -1.2, -0.3, 0.8],
    [-1.5, -0.3, 1.8, -1.6, 2.3, 1.1],
    [2.1, 0.8, -1.6, 0.3, -1.9, 2.5],
    [3.8, 1.7, -2.6, 1.8, -3.3, 1.5],
    [4.5, 1.9, -1.2, -2.9, 3.5, -1.4],
    [-4.2, 2.9, 3.8, -5.1, -3.5, 2.7],
];

/// Directed edges `(from, to)` of the substitute topology, 0-based.
pub const SUBSTITUTE_EDGES: [(usize, usize); 9] =
    [(0, 1), (0, 4), (1, 4), (1, 5), (2, 0), (3, 2), (4, 1), (5, 0), (5, 3)];

pub fn plant() -> PlantParams {
    PlantParams { alpha_p: ALPHA_P, alpha_v: ALPHA_V, n_axes: N_AXES }
}

pub fn substitute_topology() -> Digraph {
    let edges: Vec<Edge> = SUBSTITUTE_EDGES.iter().map(|&(from, to)| Edge { from, to, weight: 1.0 }).collect();
    Digraph::from_edges(N_AGENTS, &edges).expect("substitute topology is valid")
}

pub fn hexagon() -> FormationSpec {
    FormationSpec::rotating_polygon(N_AGENTS, N_AXES, HEXAGON_SCALE, HEXAGON_PHASE_STEP, 1.0)
}

/// Agent `i` (0-based):
///
/// ```text
/// w_x = (2.5 + 0.2 i) sin t + 1.5 + 1.2 i
/// w_y = (1.5 + 0.2 i) sin t + 2.5 + 1.2 i
/// w_z = (2.0 + 0.2 i) sin(t + 0.4 pi) + 3.0 + 0.2 i
/// ```
pub fn disturbances() -> DisturbanceSpec {
    let agents = (0..N_AGENTS)
        .map(|i| {
            let k = i as f64;
            vec![
                AxisSignal::new(vec![Sinusoid::new(2.5 + 0.2 * k, 1.0, 0.0, 1.5 + 1.2 * k)]),
                AxisSignal::new(vec![Sinusoid::new(1.5 + 0.2 * k, 1.0, 0.0, 2.5 + 1.2 * k)]),
                AxisSignal::new(vec![Sinusoid::new(2.0 + 0.2 * k, 1.0, 0.4 * PI, 3.0 + 0.2 * k)]),
            ]
        })
        .collect();
    DisturbanceSpec { agents }
}

pub fn initial_states() -> Vec<Vec<f64>> {
    INITIAL_STATES.iter().map(|x| x.to_vec()).collect()
}

/// The six-agent scenario on the substitute topology over `horizon` seconds.
pub fn hexagon_scenario(horizon: f64) -> Result<Scenario> {
    Ok(Scenario {
        label: "paper_s5".into(),
        plant: plant(),
        graph: substitute_topology(),
        formation: hexagon(),
        disturbance: disturbances(),
        sigma: vec![SIGMA; N_AGENTS],
        compensation: true,
        initial: initial_states(),
        integrator: IntegratorSettings::new(1e-3, horizon, 10)?,
        eps_f: DEFAULT_EPS_F,
        feasibility_step: DEFAULT_FEASIBILITY_STEP,
        lambda2_override: None,
    })
}

/// Same scenario with the gain computed from the published `Re(lambda_2)`.
pub fn published_gain_scenario(horizon: f64) -> Result<Scenario> {
    let mut s = hexagon_scenario(horizon)?;
    s.label = "paper_gain".into();
    s.lambda2_override = Some(PUBLISHED_LAMBDA2_RE);
    Ok(s)
}

/// Hexagon scenario without disturbances.
pub fn undisturbed_scenario(horizon: f64) -> Result<Scenario> {
    let mut s = hexagon_scenario(horizon)?;
    s.label = "paper_s5_undisturbed".into();
    s.disturbance = DisturbanceSpec::zero(N_AGENTS, N_AXES);
    Ok(s)
}

/// Time-invariant hexagon (the `t = 0` snapshot), no disturbances.
pub fn static_consensus_scenario(horizon: f64) -> Result<Scenario> {
    let mut s = undisturbed_scenario(horizon)?;
    s.label = "static_consensus".into();
    let hex = hexagon();
    let positions: Vec<Vec<f64>> = (0..N_AGENTS).map(|i| hex.eval(i, 0.0).fp).collect();
    s.formation = FormationSpec::constant(&positions);
    Ok(s)
}

/// Names accepted by [`by_name`].
pub const PRESET_NAMES: [&str; 4] = ["paper_s5", "paper_gain", "paper_s5_undisturbed", "static_consensus"];

pub fn by_name(name: &str, horizon: f64) -> Option<Result<Scenario>> {
    match name {
        "paper_s5" => Some(hexagon_scenario(horizon)),
        "paper_gain" => Some(published_gain_scenario(horizon)),
        "paper_s5_undisturbed" => Some(undisturbed_scenario(horizon)),
        "static_consensus" => Some(static_consensus_scenario(horizon)),
        _ => None,
    }
}
