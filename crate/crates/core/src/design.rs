//! The four-step design procedure:
//!
//! 1. check formation feasibility `||f_iv - f_ip'||_inf <= eps_f`;
//! 2. solve the kernel Riccati equation;
//! 3. set the gain `[k_p, k_v] = [P21, P22] / Re(lambda_2)`;
//! 4. record the observer bandwidths and their predicted disturbance residuals.
//!
//! The Hurwitz check of every `A - lambda_k B K` is always run.

use nalgebra::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::eso::residual_gain;
use crate::graph::{build_laplacian, has_spanning_tree, spectrum, Digraph, LaplacianSpectrum};
use crate::riccati::{synthesize, verify_hurwitz, HurwitzReport, PlantParams, RiccatiSolution};
use crate::signals::{feasibility_residual, DisturbanceSpec, FeasibilityReport, FormationSpec};

/// Default feasibility tolerance.
pub const DEFAULT_EPS_F: f64 = 1e-6;
/// Default feasibility sampling step (s).
pub const DEFAULT_FEASIBILITY_STEP: f64 = 0.01;
/// Observer residual `|1 - G(j w)|` above which a warning is emitted.
pub const RESIDUAL_WARNING_LEVEL: f64 = 0.25;

#[derive(Debug, Clone)]
pub struct DesignInput<'a> {
    pub graph: &'a Digraph,
    pub plant: PlantParams,
    pub formation: &'a FormationSpec,
    pub disturbance: Option<&'a DisturbanceSpec>,
    pub eps_f: f64,
    /// Observer bandwidth per agent.
    pub sigma: &'a [f64],
    pub feasibility_grid: Vec<f64>,
    /// Replaces `Re(lambda_2)` in the gain formula when set.
    pub lambda2_override: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObserverPrediction {
    pub angular_frequency: f64,
    /// Worst `|1 - G(j w)|` over agents.
    pub residual_gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObserverReport {
    pub sigma: Vec<f64>,
    pub beta_g: Vec<f64>,
    pub beta_z: Vec<f64>,
    pub predictions: Vec<ObserverPrediction>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignReport {
    pub feasible: bool,
    pub eps_f: f64,
    pub feasibility: FeasibilityReport,
    pub spectrum: LaplacianSpectrum,
    /// `Re(lambda_2)` actually used for the gain.
    pub lambda2_used: f64,
    pub lambda2_overridden: bool,
    pub riccati: RiccatiSolution,
    pub hurwitz: HurwitzReport,
    pub observer: ObserverReport,
    pub warnings: Vec<String>,
}

impl DesignReport {
    pub fn eigenvalues(&self) -> &[Complex<f64>] {
        &self.spectrum.eigenvalues
    }
}

pub fn design(input: &DesignInput<'_>) -> Result<DesignReport> {
    let n_agents = input.graph.n_agents();
    if input.formation.n_agents() != n_agents {
        return Err(Error::InvalidInput(format!(
            "formation lists {} agents, topology has {n_agents}",
            input.formation.n_agents()
        )));
    }
    input.formation.validate(input.plant.n_axes)?;
    if input.sigma.len() != n_agents {
        return Err(Error::InvalidInput(format!("{} observer bandwidths for {n_agents} agents", input.sigma.len())));
    }
    if let Some(&s) = input.sigma.iter().find(|s| !(**s > 0.0) || !s.is_finite()) {
        return Err(Error::InvalidInput(format!("observer bandwidth must be positive, got {s}")));
    }
    if !(input.eps_f >= 0.0) {
        return Err(Error::InvalidInput(format!("eps_f must be nonnegative, got {}", input.eps_f)));
    }

    // Step 1
    let feasibility = feasibility_residual(input.formation, &input.feasibility_grid)?;
    if feasibility.max > input.eps_f {
        return Err(Error::Infeasible {
            residual: feasibility.max,
            eps_f: input.eps_f,
            agent: feasibility.worst_agent(),
        });
    }

    let laplacian = build_laplacian(input.graph);
    if !has_spanning_tree(input.graph) {
        let zero_count = match spectrum(&laplacian) {
            Err(Error::NoSpanningTree { zero_count }) => zero_count,
            _ => 0,
        };
        return Err(Error::NoSpanningTree { zero_count });
    }
    let spectrum = spectrum(&laplacian)?;

    // Steps 2 and 3
    let lambda2_used = input.lambda2_override.unwrap_or(spectrum.lambda2_re);
    let riccati = synthesize(&input.plant, lambda2_used)?;
    let hurwitz = verify_hurwitz(&input.plant, &riccati.k_row, spectrum.nonzero())?;

    // Step 4
    let mut warnings = Vec::new();
    let predictions: Vec<ObserverPrediction> = input
        .disturbance
        .map(|d| d.frequencies())
        .unwrap_or_default()
        .into_iter()
        .map(|w| ObserverPrediction {
            angular_frequency: w,
            residual_gain: input.sigma.iter().map(|&s| residual_gain(s, w).norm()).fold(0.0, f64::max),
        })
        .collect();
    for p in &predictions {
        if p.residual_gain > RESIDUAL_WARNING_LEVEL {
            warnings.push(format!(
                "observer residual |1 - G(j w)| = {:.4} at w = {} rad/s exceeds {RESIDUAL_WARNING_LEVEL}; \
                 consider a larger bandwidth",
                p.residual_gain, p.angular_frequency
            ));
        }
    }
    if let Some(l2) = input.lambda2_override {
        warnings.push(format!(
            "gain uses overridden Re(lambda_2) = {l2} instead of the topology's {}",
            spectrum.lambda2_re
        ));
    }

    Ok(DesignReport {
        feasible: true,
        eps_f: input.eps_f,
        feasibility,
        lambda2_used,
        lambda2_overridden: input.lambda2_override.is_some(),
        riccati,
        hurwitz,
        observer: ObserverReport {
            sigma: input.sigma.to_vec(),
            beta_g: input.sigma.iter().map(|s| 2.0 * s).collect(),
            beta_z: input.sigma.iter().map(|s| s * s).collect(),
            predictions,
        },
        spectrum,
        warnings,
    })
}
