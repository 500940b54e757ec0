//! Directed interaction topology.
//!
//! Row `i` of the weight matrix lists the in-neighbours of agent `i`:
//! `w[i][j] > 0` means agent `i` receives information from agent `j`
//! (edge `j -> i`). The Laplacian is `L = D - W` with `D` the in-degree
//! matrix, so every row of `L` sums to zero and `1_N` spans its right
//! null space. The left null vector `u1` (normalised so `u1 . 1_N = 1`)
//! weights each agent's contribution to the formation center.

use std::collections::VecDeque;

use nalgebra::{Complex, DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

/// Relative tolerance for the zero-eigenvalue test, scaled by `max(1, ||L||_inf)`.
pub const ZERO_EIGENVALUE_RTOL: f64 = 1e-8;

/// Below this `|u1 . 1_N|` the left null vector is treated as degenerate.
const NORMALIZATION_FLOOR: f64 = 1e-10;

/// A weighted digraph on `N >= 2` agents.
#[derive(Debug, Clone, PartialEq)]
pub struct Digraph {
    weights: DMatrix<f64>,
}

/// A directed edge carrying information from agent `from` to agent `to`
/// (0-based indices), i.e. `w[to][from] = weight`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub weight: f64,
}

impl Digraph {
    /// Build from an explicit `N x N` weight matrix given row-major.
    pub fn from_matrix(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n < 2 {
            return Err(Error::InvalidDigraph(format!("need at least 2 agents, got {n}")));
        }
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(Error::InvalidDigraph(format!("row {i} has {} entries, expected {n}", r.len())));
        }
        Self::from_dmatrix(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    /// Build from an edge list. Repeated edges accumulate their weights.
    pub fn from_edges(n_agents: usize, edges: &[Edge]) -> Result<Self> {
        if n_agents < 2 {
            return Err(Error::InvalidDigraph(format!("need at least 2 agents, got {n_agents}")));
        }
        let mut w = DMatrix::zeros(n_agents, n_agents);
        for e in edges {
            if e.from >= n_agents || e.to >= n_agents {
                return Err(Error::InvalidDigraph(format!(
                    "edge {} -> {} out of range for {n_agents} agents",
                    e.from, e.to
                )));
            }
            w[(e.to, e.from)] += e.weight;
        }
        Self::from_dmatrix(w)
    }

    pub fn from_dmatrix(weights: DMatrix<f64>) -> Result<Self> {
        let n = weights.nrows();
        if n != weights.ncols() {
            return Err(Error::InvalidDigraph("weight matrix is not square".into()));
        }
        if n < 2 {
            return Err(Error::InvalidDigraph(format!("need at least 2 agents, got {n}")));
        }
        for i in 0..n {
            for j in 0..n {
                let w = weights[(i, j)];
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::InvalidDigraph(format!(
                        "weight w[{i}][{j}] = {w} must be finite and nonnegative"
                    )));
                }
                if i == j && w != 0.0 {
                    return Err(Error::InvalidDigraph(format!("self-loop weight w[{i}][{i}] = {w}")));
                }
            }
        }
        Ok(Self { weights })
    }

    /// Directed cycle `0 -> 1 -> ... -> N-1 -> 0` with unit weights.
    pub fn directed_cycle(n: usize) -> Result<Self> {
        let edges: Vec<Edge> = (0..n).map(|i| Edge { from: i, to: (i + 1) % n, weight: 1.0 }).collect();
        Self::from_edges(n, &edges)
    }

    /// Complete digraph with unit weights in both directions.
    pub fn complete(n: usize) -> Result<Self> {
        Self::from_dmatrix(DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { 1.0 }))
    }

    pub fn n_agents(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[(i, j)]
    }

    /// Same topology with every weight multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::from_dmatrix(&self.weights * s)
    }

    /// In-neighbours `j` of agent `i` with their weights.
    pub fn in_neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..self.n_agents()).filter_map(move |j| {
            let w = self.weights[(i, j)];
            (w > 0.0).then_some((j, w))
        })
    }
}

/// `L = D - W`.
pub fn build_laplacian(g: &Digraph) -> DMatrix<f64> {
    let w = g.weights();
    let n = g.n_agents();
    let mut l = -w.clone();
    for i in 0..n {
        l[(i, i)] = w.row(i).sum();
    }
    l
}

/// True iff some node has a directed path to every other node.
pub fn has_spanning_tree(g: &Digraph) -> bool {
    let n = g.n_agents();
    // out[j] holds every i that hears j
    let mut out = vec![Vec::new(); n];
    for i in 0..n {
        for (j, _) in g.in_neighbors(i) {
            out[j].push(i);
        }
    }
    (0..n).any(|root| {
        let mut seen = vec![false; n];
        seen[root] = true;
        let mut reached = 1;
        let mut queue = VecDeque::from([root]);
        while let Some(j) = queue.pop_front() {
            for &i in &out[j] {
                if !seen[i] {
                    seen[i] = true;
                    reached += 1;
                    queue.push_back(i);
                }
            }
        }
        reached == n
    })
}

/// Spectral summary of a Laplacian with a simple zero eigenvalue.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LaplacianSpectrum {
    /// Sorted by ascending real part, then ascending imaginary part.
    pub eigenvalues: Vec<Complex<f64>>,
    pub lambda2_re: f64,
    /// Left null vector of `L` with `u1 . 1_N = 1`.
    pub u_bar_1: Vec<f64>,
}

impl LaplacianSpectrum {
    /// `lambda_2 ... lambda_N`.
    pub fn nonzero(&self) -> &[Complex<f64>] {
        &self.eigenvalues[1..]
    }
}

pub fn zero_tolerance(l: &DMatrix<f64>) -> f64 {
    let inf_norm = l.row_iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max);
    ZERO_EIGENVALUE_RTOL * inf_norm.max(1.0)
}

const MAX_ITERATIONS: usize = 10_000;

/// Deterministic orthogonal matrix used to break structure that stalls the
/// unshifted Schur iteration (e.g. Laplacians with many repeated eigenvalues).
fn mixing_rotation(n: usize, seed: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| ((i * 7 + j * 13 + seed * 31 + 1) as f64 * 0.618_034).sin()).qr().q()
}

/// Eigenvalues sorted by real part then imaginary part.
pub fn sorted_eigenvalues(l: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    let n = l.nrows();
    let schur = l.clone().try_schur(f64::EPSILON, MAX_ITERATIONS).or_else(|| {
        (0..4).find_map(|seed| {
            let q = mixing_rotation(n, seed);
            (&q * l * q.transpose()).try_schur(f64::EPSILON, MAX_ITERATIONS)
        })
    });
    let schur = schur.ok_or_else(|| Error::NoConvergence(format!("Schur decomposition of {n}x{n} Laplacian")))?;
    let mut eig: Vec<Complex<f64>> = schur.complex_eigenvalues().iter().copied().collect();
    eig.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(eig)
}

/// Eigenvalues, `Re(lambda_2)` and the normalised left null vector of `l`.
///
/// Fails with [`Error::NoSpanningTree`] unless exactly one eigenvalue lies
/// within [`zero_tolerance`] of the origin.
pub fn spectrum(l: &DMatrix<f64>) -> Result<LaplacianSpectrum> {
    let n = l.nrows();
    if n < 2 || l.ncols() != n {
        return Err(Error::InvalidDigraph(format!(
            "Laplacian must be square with N >= 2, got {}x{}",
            l.nrows(),
            l.ncols()
        )));
    }
    let tol = zero_tolerance(l);
    let mut eigenvalues = sorted_eigenvalues(l)?;
    let zero_count = eigenvalues.iter().filter(|z| z.norm() < tol).count();
    if zero_count != 1 {
        return Err(Error::NoSpanningTree { zero_count });
    }
    // the zero eigenvalue may carry rounding noise in its sign
    let zero_pos = eigenvalues.iter().position(|z| z.norm() < tol).unwrap_or(0);
    let zero = eigenvalues.remove(zero_pos);
    eigenvalues.insert(0, zero);

    let u_bar_1 = left_null_vector(l)?;
    Ok(LaplacianSpectrum { lambda2_re: eigenvalues[1].re, eigenvalues, u_bar_1: u_bar_1.iter().copied().collect() })
}

/// Solves `u^T (L + 1 1^T) = 1^T`. When zero is a simple eigenvalue the
/// matrix is nonsingular and the solution satisfies `u^T L = 0`, `u^T 1 = 1`.
fn left_null_vector(l: &DMatrix<f64>) -> Result<DVector<f64>> {
    let n = l.nrows();
    let m = (l + DMatrix::from_element(n, n, 1.0)).transpose();
    let lu = m.clone().full_piv_lu();
    let ones = DVector::from_element(n, 1.0);
    let mut u = lu.solve(&ones).ok_or(Error::NoSpanningTree { zero_count: 0 })?;
    // one step of iterative refinement
    let r = &ones - &m * &u;
    if let Some(d) = lu.solve(&r) {
        u += d;
    }
    let s = u.sum();
    if !s.is_finite() || s.abs() < NORMALIZATION_FLOOR {
        return Err(Error::NoSpanningTree { zero_count: 0 });
    }
    Ok(u / s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn mat(rows: &[&[f64]]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j])
    }

    #[test]
    fn laplacian_single_edge() {
        let g = Digraph::from_edges(2, &[Edge { from: 1, to: 0, weight: 1.0 }]).unwrap();
        assert_eq!(build_laplacian(&g), mat(&[&[1.0, -1.0], &[0.0, 0.0]]));
    }

    #[test]
    fn laplacian_directed_four_cycle_is_circulant() {
        let l = build_laplacian(&Digraph::directed_cycle(4).unwrap());
        // agent i hears agent i-1
        for i in 0..4 {
            assert_eq!(l[(i, i)], 1.0);
            assert_eq!(l[(i, (i + 3) % 4)], -1.0);
            assert_eq!(l[(i, (i + 1) % 4)], 0.0);
            assert_eq!(l[(i, (i + 2) % 4)], 0.0);
        }
    }

    #[test]
    fn laplacian_complete_three() {
        let l = build_laplacian(&Digraph::complete(3).unwrap());
        assert_eq!(l, mat(&[&[2.0, -1.0, -1.0], &[-1.0, 2.0, -1.0], &[-1.0, -1.0, 2.0]]));
    }

    #[test]
    fn rejects_invalid_weights() {
        assert!(Digraph::from_matrix(&[vec![0.0, -1.0], vec![0.0, 0.0]]).is_err());
        assert!(Digraph::from_matrix(&[vec![1.0, 0.0], vec![0.0, 0.0]]).is_err());
        assert!(Digraph::from_matrix(&[vec![0.0]]).is_err());
        assert!(Digraph::from_matrix(&[vec![0.0, 1.0], vec![0.0]]).is_err());
        assert!(Digraph::from_edges(3, &[Edge { from: 0, to: 3, weight: 1.0 }]).is_err());
        assert!(Digraph::from_matrix(&[vec![0.0, f64::NAN], vec![0.0, 0.0]]).is_err());
    }

    #[test]
    fn spanning_tree_cases() {
        assert!(has_spanning_tree(&Digraph::directed_cycle(6).unwrap()));

        let pairs = Digraph::from_edges(
            4,
            &[
                Edge { from: 0, to: 1, weight: 1.0 },
                Edge { from: 1, to: 0, weight: 1.0 },
                Edge { from: 2, to: 3, weight: 1.0 },
                Edge { from: 3, to: 2, weight: 1.0 },
            ],
        )
        .unwrap();
        assert!(!has_spanning_tree(&pairs));

        let into_hub: Vec<Edge> = (1..5).map(|k| Edge { from: k, to: 0, weight: 1.0 }).collect();
        assert!(!has_spanning_tree(&Digraph::from_edges(5, &into_hub).unwrap()));
        let out_of_hub: Vec<Edge> = (1..5).map(|k| Edge { from: 0, to: k, weight: 1.0 }).collect();
        assert!(has_spanning_tree(&Digraph::from_edges(5, &out_of_hub).unwrap()));
    }

    #[test]
    fn spectrum_of_directed_four_cycle() {
        let s = spectrum(&build_laplacian(&Digraph::directed_cycle(4).unwrap())).unwrap();
        // circulant: 1 - exp(2 pi i k / 4), sorted by (re, im)
        let expected =
            [Complex::new(0.0, 0.0), Complex::new(1.0, -1.0), Complex::new(1.0, 1.0), Complex::new(2.0, 0.0)];
        for (got, want) in s.eigenvalues.iter().zip(expected) {
            assert_abs_diff_eq!(got.re, want.re, epsilon = 1e-9);
            assert_abs_diff_eq!(got.im, want.im, epsilon = 1e-9);
        }
        assert_abs_diff_eq!(s.lambda2_re, 1.0, epsilon = 1e-9);
        for u in &s.u_bar_1 {
            assert_abs_diff_eq!(*u, 0.25, epsilon = 1e-9);
        }
    }

    #[test]
    fn spectrum_of_complete_graph() {
        for n in 2..7 {
            let s = spectrum(&build_laplacian(&Digraph::complete(n).unwrap())).unwrap();
            assert_abs_diff_eq!(s.eigenvalues[0].norm(), 0.0, epsilon = 1e-9);
            for z in s.nonzero() {
                assert_abs_diff_eq!(z.re, n as f64, epsilon = 1e-9);
                assert_abs_diff_eq!(z.im, 0.0, epsilon = 1e-9);
            }
            for u in &s.u_bar_1 {
                assert_abs_diff_eq!(*u, 1.0 / n as f64, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn spectrum_two_by_two_by_hand() {
        let s = spectrum(&mat(&[&[1.0, -1.0], &[0.0, 0.0]])).unwrap();
        assert_abs_diff_eq!(s.eigenvalues[0].re, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.eigenvalues[1].re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.u_bar_1[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.u_bar_1[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn spectrum_rejects_disconnected_topology() {
        let g = Digraph::from_edges(4, &[Edge { from: 0, to: 1, weight: 1.0 }, Edge { from: 2, to: 3, weight: 1.0 }])
            .unwrap();
        match spectrum(&build_laplacian(&g)) {
            Err(Error::NoSpanningTree { zero_count }) => assert_eq!(zero_count, 2),
            other => panic!("expected NoSpanningTree, got {other:?}"),
        }
    }

    #[test]
    fn hub_graph_with_repeated_eigenvalues() {
        // stalls a plain Schur iteration
        let edges: Vec<Edge> = [(4, 2), (4, 1), (4, 3), (4, 0), (2, 0), (1, 4), (5, 4), (4, 5)]
            .iter()
            .map(|&(from, to)| Edge { from, to, weight: 1.0 })
            .collect();
        let g = Digraph::from_edges(6, &edges).unwrap();
        let sp = spectrum(&build_laplacian(&g)).unwrap();
        let want = [0.0, 1.0, 1.0, 1.0, 2.0, 3.0];
        for (z, w) in sp.eigenvalues.iter().zip(want) {
            assert_abs_diff_eq!(z.re, w, epsilon = 1e-6);
            assert_abs_diff_eq!(z.im, 0.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn in_neighbors_lists_positive_weights() {
        let g = Digraph::from_matrix(&[vec![0.0, 2.0, 0.0], vec![0.0, 0.0, 1.5], vec![1.0, 0.0, 0.0]]).unwrap();
        assert_eq!(g.in_neighbors(0).collect::<Vec<_>>(), vec![(1, 2.0)]);
        assert_eq!(g.in_neighbors(1).collect::<Vec<_>>(), vec![(2, 1.5)]);
    }
}
