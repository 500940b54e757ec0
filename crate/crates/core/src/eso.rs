//! Extended state observer.
//!
//! Per agent and per axis:
//!
//! ```text
//! g' = z + u + a_p p + a_v v - beta_g (g - v)
//! z' = -beta_z (g - v)
//! ```
//!
//! With `beta_g = 2 sigma`, `beta_z = sigma^2` the estimate obeys
//! `z(s) = G(s) w(s)` with `G(s) = sigma^2 / (s + sigma)^2`.

use nalgebra::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::riccati::PlantParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EsoParams {
    pub beta_g: f64,
    pub beta_z: f64,
}

impl EsoParams {
    /// Critically damped observer with both poles at `-sigma`.
    pub fn from_bandwidth(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidInput(format!("observer bandwidth must be positive, got {sigma}")));
        }
        Ok(Self { beta_g: 2.0 * sigma, beta_z: sigma * sigma })
    }

    pub fn new(beta_g: f64, beta_z: f64) -> Result<Self> {
        if !(beta_g > 0.0 && beta_z > 0.0) || !beta_g.is_finite() || !beta_z.is_finite() {
            return Err(Error::InvalidInput(format!("observer gains must be positive, got ({beta_g}, {beta_z})")));
        }
        Ok(Self { beta_g, beta_z })
    }

    /// Roots of `s^2 + beta_g s + beta_z`, the poles of the estimation
    /// error dynamics `[[-beta_g, 1], [-beta_z, 0]]`.
    pub fn error_poles(&self) -> [Complex<f64>; 2] {
        let h = 0.5 * self.beta_g;
        let disc = h * h - self.beta_z;
        if disc >= 0.0 {
            // larger-magnitude root first, the other from Vieta to avoid cancellation
            let r1 = -h - disc.sqrt();
            [Complex::from(r1), Complex::from(self.beta_z / r1)]
        } else {
            let w = (-disc).sqrt();
            [Complex::new(-h, -w), Complex::new(-h, w)]
        }
    }

    /// `beta_z / (s^2 + beta_g s + beta_z)`.
    pub fn transfer(&self, s: Complex<f64>) -> Complex<f64> {
        Complex::from(self.beta_z) / (s * s + s * self.beta_g + self.beta_z)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EsoState {
    pub g: f64,
    pub z: f64,
}

/// `(g', z')` for one axis.
pub fn eso_derivative(state: EsoState, p: f64, v: f64, u: f64, params: &EsoParams, plant: &PlantParams) -> (f64, f64) {
    let innovation = state.g - v;
    let g_dot = state.z + u + plant.alpha_p * p + plant.alpha_v * v - params.beta_g * innovation;
    let z_dot = -params.beta_z * innovation;
    (g_dot, z_dot)
}

/// `1 - sigma^2 / (j omega + sigma)^2`.
pub fn residual_gain(sigma: f64, omega: f64) -> Complex<f64> {
    let s = Complex::new(sigma, omega);
    Complex::from(1.0) - Complex::from(sigma * sigma) / (s * s)
}
