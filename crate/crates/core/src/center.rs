//! Formation-center decomposition.
//!
//! The center `kappa(t) = (u1 (x) I_2n)(x(t) - f(t))` obeys a linear ODE
//! driven by the kernel `A = [[0, 1], [a_p, a_v]]`. Its variation-of-constants
//! solution splits into
//!
//! * `c0(t) = e^{At} (u1 (x) I) x(0)`,
//! * `cz(t) = int_0^t e^{A(t-s)} theta2 (u1 (x) I_n)(w(s) - z(s)) ds`,
//! * `cf(t) = int_0^t e^{A(t-s)} theta2 (u1 (x) I_n)(fv'(s) - a_p fp(s) - a_v fv(s)) ds
//!            - (u1 (x) I) f(t)`,
//!
//! with `theta2 = [0, 1]^T` acting per axis: the `u1`-weighted residual is
//! formed first and then injected into the velocity row of the kernel.
//! Convolutions use composite trapezoidal quadrature on the trace's output
//! grid, evaluated by the one-step recursion
//! `I_{k+1} = E_h I_k + h/2 (E_h theta2 r_k + theta2 r_{k+1})`, `E_h = e^{Ah}`,
//! which is algebraically the same sum.

use nalgebra::{Matrix2, Vector2};
use serde::Serialize;

use crate::riccati::PlantParams;
use crate::signals::FormationSpec;
use crate::simulator::SimulationTrace;

/// Below this `|delta t|` the hyperbolic terms use their series expansion.
const SERIES_THRESHOLD: f64 = 1e-5;

/// `e^{At}` for the 2x2 kernel in closed form.
///
/// With `mu = tr/2` and `delta^2 = mu^2 - det`:
/// `e^{At} = e^{mu t} (c(t) I + s(t) (A - mu I))`, where `(c, s)` is
/// `(cosh, sinh/delta)`, `(cos, sin/|delta|)` or `(1, t)` in the real,
/// complex and defective cases.
pub fn kernel_exp(plant: &PlantParams, t: f64) -> Matrix2<f64> {
    let a = plant.kernel();
    let mu = 0.5 * plant.alpha_v;
    let disc = mu * mu + plant.alpha_p;
    let (c, s) = if disc > 0.0 {
        let d = disc.sqrt();
        let x = d * t;
        if x.abs() < SERIES_THRESHOLD {
            (1.0 + 0.5 * x * x, t * (1.0 + x * x / 6.0))
        } else {
            (x.cosh(), x.sinh() / d)
        }
    } else if disc < 0.0 {
        let w = (-disc).sqrt();
        let x = w * t;
        if x.abs() < SERIES_THRESHOLD {
            (1.0 - 0.5 * x * x, t * (1.0 - x * x / 6.0))
        } else {
            (x.cos(), x.sin() / w)
        }
    } else {
        (1.0, t)
    };
    (Matrix2::identity() * c + (a - Matrix2::identity() * mu) * s) * (mu * t).exp()
}

/// Applies `E (x) I_n` to a `[p (n); v (n)]` vector.
fn apply_kernel(e: &Matrix2<f64>, x: &[f64]) -> Vec<f64> {
    let n = x.len() / 2;
    let mut out = vec![0.0; 2 * n];
    for a in 0..n {
        let y = e * Vector2::new(x[a], x[n + a]);
        out[a] = y[0];
        out[n + a] = y[1];
    }
    out
}

/// `u1`-weighted combination of per-agent vectors.
fn weighted_sum(u_bar_1: &[f64], per_agent: impl Fn(usize) -> Vec<f64>) -> Vec<f64> {
    let mut acc: Vec<f64> = Vec::new();
    for (i, &u) in u_bar_1.iter().enumerate() {
        let v = per_agent(i);
        if acc.is_empty() {
            acc = vec![0.0; v.len()];
        }
        for (a, x) in acc.iter_mut().zip(v) {
            *a += u * x;
        }
    }
    acc
}

/// Trapezoidal convolution `int_0^t e^{A(t-s)} theta2 r(s) ds` on the grid.
/// `inputs[k]` holds the `n` per-axis samples of `r(t_k)`.
pub fn convolve_velocity_channel(times: &[f64], inputs: &[Vec<f64>], plant: &PlantParams) -> Vec<Vec<f64>> {
    let n = plant.n_axes;
    let mut out = Vec::with_capacity(times.len());
    if times.is_empty() {
        return out;
    }
    let mut acc = vec![Vector2::zeros(); n];
    let flatten = |acc: &[Vector2<f64>]| {
        let mut v = vec![0.0; 2 * n];
        for a in 0..n {
            v[a] = acc[a][0];
            v[n + a] = acc[a][1];
        }
        v
    };
    out.push(flatten(&acc));
    for k in 0..times.len() - 1 {
        let h = times[k + 1] - times[k];
        let e = kernel_exp(plant, h);
        for a in 0..n {
            let prev = Vector2::new(0.0, inputs[k][a]);
            let next = Vector2::new(0.0, inputs[k + 1][a]);
            acc[a] = e * (acc[a] + prev * (0.5 * h)) + next * (0.5 * h);
        }
        out.push(flatten(&acc));
    }
    out
}

/// `c0(t_k)` at every trace sample.
pub fn compute_c0(trace: &SimulationTrace, u_bar_1: &[f64], plant: &PlantParams) -> Vec<Vec<f64>> {
    let Some(first) = trace.samples.first() else {
        return Vec::new();
    };
    let x0_bar = weighted_sum(u_bar_1, |i| first.x(i));
    trace.samples.iter().map(|s| apply_kernel(&kernel_exp(plant, s.t - first.t), &x0_bar)).collect()
}

/// `cz(t_k)` from the recorded disturbances and applied compensations.
pub fn compute_cz(trace: &SimulationTrace, u_bar_1: &[f64], plant: &PlantParams) -> Vec<Vec<f64>> {
    let inputs: Vec<Vec<f64>> = trace
        .samples
        .iter()
        .map(|s| weighted_sum(u_bar_1, |i| s.omega(i).iter().zip(s.z(i)).map(|(w, z)| w - z).collect()))
        .collect();
    convolve_velocity_channel(&trace.times(), &inputs, plant)
}

/// `cf(t_k)`: formation-driven convolution plus the trailing `-(u1 (x) I) f(t)`.
pub fn compute_cf(
    trace: &SimulationTrace,
    u_bar_1: &[f64],
    plant: &PlantParams,
    spec: &FormationSpec,
) -> Vec<Vec<f64>> {
    let times = trace.times();
    let inputs: Vec<Vec<f64>> = times
        .iter()
        .map(|&t| {
            weighted_sum(u_bar_1, |i| {
                let f = spec.eval(i, t);
                (0..plant.n_axes).map(|a| f.fv_dot[a] - plant.alpha_p * f.fp[a] - plant.alpha_v * f.fv[a]).collect()
            })
        })
        .collect();
    let conv = convolve_velocity_channel(&times, &inputs, plant);
    times
        .iter()
        .zip(conv)
        .map(|(&t, mut c)| {
            let f_bar = weighted_sum(u_bar_1, |i| {
                let f = spec.eval(i, t);
                [f.fp, f.fv].concat()
            });
            for (x, f) in c.iter_mut().zip(f_bar) {
                *x -= f;
            }
            c
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CenterDecomposition {
    pub times: Vec<f64>,
    pub c0: Vec<Vec<f64>>,
    pub cz: Vec<Vec<f64>>,
    pub cf: Vec<Vec<f64>>,
    /// Simulated center, copied from the trace.
    pub kappa: Vec<Vec<f64>>,
    /// `c0 + cz + cf`.
    pub kappa_hat: Vec<Vec<f64>>,
    /// `||kappa - kappa_hat||_2`.
    pub residual: Vec<f64>,
}

pub fn decompose(
    trace: &SimulationTrace,
    u_bar_1: &[f64],
    plant: &PlantParams,
    spec: &FormationSpec,
) -> CenterDecomposition {
    let c0 = compute_c0(trace, u_bar_1, plant);
    let cz = compute_cz(trace, u_bar_1, plant);
    let cf = compute_cf(trace, u_bar_1, plant, spec);
    let kappa: Vec<Vec<f64>> = trace.samples.iter().map(|s| s.kappa.clone()).collect();
    let kappa_hat: Vec<Vec<f64>> =
        (0..c0.len()).map(|k| (0..c0[k].len()).map(|m| c0[k][m] + cz[k][m] + cf[k][m]).collect()).collect();
    let residual = kappa
        .iter()
        .zip(&kappa_hat)
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt())
        .collect();
    CenterDecomposition { times: trace.times(), c0, cz, cf, kappa, kappa_hat, residual }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CenterCheck {
    pub eps: f64,
    pub t_check: f64,
    /// `sup_{t >= t_check} r(t)`.
    pub max_residual: f64,
    /// Earliest grid time after which `r(t) <= eps` holds for the rest of the trace.
    pub t_eps: Option<f64>,
    pub passed: bool,
}

/// Checks `||kappa - c0 - cz - cf|| <= eps` on the decomposition's grid.
pub fn verify_center(decomposition: &CenterDecomposition, eps: f64, t_check: f64) -> CenterCheck {
    let max_residual = decomposition
        .times
        .iter()
        .zip(&decomposition.residual)
        .filter(|(t, _)| **t >= t_check)
        .map(|(_, r)| *r)
        .fold(0.0, f64::max);
    let mut t_eps = None;
    for (t, r) in decomposition.times.iter().zip(&decomposition.residual).rev() {
        if *r > eps {
            break;
        }
        t_eps = Some(*t);
    }
    let passed = max_residual <= eps;
    CenterCheck { eps, t_check, max_residual, t_eps, passed }
}
