//! Riccati-based gain synthesis.
//!
//! With `A = [[0, 1], [a_p, a_v]]` and `B = [0, 1]^T`, the full
//! `2n x 2n` Riccati equation `PA + A^T P - P B B^T P + I = 0` of the
//! Kronecker-structured plant is solved by `P = P_hat (x) I_n`, so only the
//! 2x2 kernel `P_hat` is computed here, in closed form.

use nalgebra::{Complex, Matrix2, Vector2};
use serde::Serialize;

use crate::error::{Error, Result};

/// Agent damping constants and spatial dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlantParams {
    pub alpha_p: f64,
    pub alpha_v: f64,
    pub n_axes: usize,
}

impl PlantParams {
    pub fn new(alpha_p: f64, alpha_v: f64, n_axes: usize) -> Result<Self> {
        if n_axes == 0 {
            return Err(Error::InvalidInput("n_axes must be at least 1".into()));
        }
        if !alpha_p.is_finite() || !alpha_v.is_finite() {
            return Err(Error::InvalidInput("damping constants must be finite".into()));
        }
        Ok(Self { alpha_p, alpha_v, n_axes })
    }

    /// Kernel state matrix `[[0, 1], [a_p, a_v]]`.
    pub fn kernel(&self) -> Matrix2<f64> {
        Matrix2::new(0.0, 1.0, self.alpha_p, self.alpha_v)
    }
}

/// Input direction of the kernel, `[0, 1]^T`.
pub fn kernel_input() -> Vector2<f64> {
    Vector2::new(0.0, 1.0)
}

/// Per-axis protocol gain `[k_p, k_v]`; the full gain is `[k_p, k_v] (x) I_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GainRow {
    pub k_p: f64,
    pub k_v: f64,
}

impl GainRow {
    /// Full `n x 2n` gain matrix acting on `[p; v]`.
    pub fn full(&self, n_axes: usize) -> Vec<Vec<f64>> {
        (0..n_axes)
            .map(|a| {
                let mut row = vec![0.0; 2 * n_axes];
                row[a] = self.k_p;
                row[n_axes + a] = self.k_v;
                row
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiccatiSolution {
    /// Row-major `[[p1, p2], [p2, p3]]`.
    pub p_hat: [[f64; 2]; 2],
    /// Frobenius norm of the Riccati residual.
    pub residual: f64,
    pub k_row: GainRow,
}

/// Closed-form positive definite solution of the kernel Riccati equation.
pub fn solve_are(params: &PlantParams) -> Result<Matrix2<f64>> {
    let (a, b) = (params.alpha_p, params.alpha_v);
    let ra = a.hypot(1.0);
    // positive roots of p2^2 - 2a p2 - 1 = 0 and p3^2 - 2b p3 - (2 p2 + 1) = 0,
    // rationalised when the leading coefficient is negative
    let p2 = if a >= 0.0 { a + ra } else { 1.0 / (ra - a) };
    let c = 2.0 * p2 + 1.0;
    let rb = (b * b + c).sqrt();
    let p3 = if b >= 0.0 { b + rb } else { c / (rb - b) };
    let p1 = p3 * ra - b * p2;
    let p = Matrix2::new(p1, p2, p2, p3);
    let minor2 = p1 * p3 - p2 * p2;
    if !(p1 > 0.0 && minor2 > 0.0) {
        return Err(Error::NotPositiveDefinite(p1, minor2));
    }
    Ok(p)
}

/// `P A + A^T P - P B B^T P + I`.
pub fn are_residual_matrix(p: &Matrix2<f64>, params: &PlantParams) -> Matrix2<f64> {
    let a = params.kernel();
    let pb = p * kernel_input();
    p * a + a.transpose() * p - pb * pb.transpose() + Matrix2::identity()
}

pub fn are_residual(p: &Matrix2<f64>, params: &PlantParams) -> f64 {
    are_residual_matrix(p, params).norm()
}

/// `[k_p, k_v] = [P21, P22] / Re(lambda_2)`.
pub fn gain(p: &Matrix2<f64>, lambda2_re: f64) -> Result<GainRow> {
    if !(lambda2_re > 0.0) || !lambda2_re.is_finite() {
        return Err(Error::InvalidLambda2(lambda2_re));
    }
    Ok(GainRow { k_p: p[(1, 0)] / lambda2_re, k_v: p[(1, 1)] / lambda2_re })
}

/// Steps 2 and 3 of the design in one call.
pub fn synthesize(params: &PlantParams, lambda2_re: f64) -> Result<RiccatiSolution> {
    let p = solve_are(params)?;
    let k_row = gain(&p, lambda2_re)?;
    Ok(RiccatiSolution {
        p_hat: [[p[(0, 0)], p[(0, 1)]], [p[(1, 0)], p[(1, 1)]]],
        residual: are_residual(&p, params),
        k_row,
    })
}

/// Closed-loop eigenvalues of `A - lambda B [k_p, k_v]`, i.e. roots of
/// `s^2 - (a_v - lambda k_v) s - (a_p - lambda k_p)`.
pub fn closed_loop_eigenvalues(params: &PlantParams, k: &GainRow, lambda: Complex<f64>) -> [Complex<f64>; 2] {
    let trace = Complex::from(params.alpha_v) - lambda * k.k_v;
    let det = -(Complex::from(params.alpha_p) - lambda * k.k_p);
    let half = trace * 0.5;
    let disc = (half * half - det).sqrt();
    [half + disc, half - disc]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HurwitzMargin {
    pub lambda: Complex<f64>,
    /// Largest real part of the two closed-loop eigenvalues.
    pub max_real_part: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HurwitzReport {
    pub margins: Vec<HurwitzMargin>,
}

impl HurwitzReport {
    pub fn worst(&self) -> f64 {
        self.margins.iter().map(|m| m.max_real_part).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_hurwitz(&self) -> bool {
        self.margins.iter().all(|m| m.max_real_part < 0.0)
    }
}

/// Per-eigenvalue stability margins without failing on instability.
pub fn hurwitz_margins(params: &PlantParams, k: &GainRow, eigenvalues: &[Complex<f64>]) -> HurwitzReport {
    let margins = eigenvalues
        .iter()
        .map(|&lambda| {
            let [s1, s2] = closed_loop_eigenvalues(params, k, lambda);
            HurwitzMargin { lambda, max_real_part: s1.re.max(s2.re) }
        })
        .collect();
    HurwitzReport { margins }
}

/// Checks that `A - lambda_k B K` is Hurwitz for every supplied `lambda_k`
/// (normally `lambda_2 .. lambda_N`).
pub fn verify_hurwitz(params: &PlantParams, k: &GainRow, eigenvalues: &[Complex<f64>]) -> Result<HurwitzReport> {
    let report = hurwitz_margins(params, k, eigenvalues);
    let offending: Vec<(f64, f64)> =
        report.margins.iter().filter(|m| !(m.max_real_part < 0.0)).map(|m| (m.lambda.re, m.lambda.im)).collect();
    if offending.is_empty() {
        Ok(report)
    } else {
        Err(Error::NotHurwitz { offending })
    }
}
