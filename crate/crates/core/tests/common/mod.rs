#![allow(dead_code)]

use formation_core::graph::{Digraph, Edge};
use nalgebra::{DMatrix, Matrix2, Matrix4};
use rand::Rng;

/// Stabilising solution of `PA + A^T P - P B B^T P + I = 0` for the kernel
/// `A = [[0, 1], [a, b]]`, `B = [0, 1]^T`, from the stable invariant subspace
/// of the Hamiltonian `[[A, -B B^T], [-I, -A^T]]`.
///
/// The subspace is the null space of the real matrix
/// `(H - l1 I)(H - l2 I)` where `l1, l2` are the stable eigenvalues.
pub fn hamiltonian_riccati(a: f64, b: f64) -> Matrix2<f64> {
    #[rustfmt::skip]
    let h = Matrix4::new(
        0.0, 1.0,  0.0, 0.0,
        a,   b,    0.0, -1.0,
        -1.0, 0.0, 0.0, -a,
        0.0, -1.0, -1.0, -b,
    );
    let eig = h.try_schur(f64::EPSILON, 100_000).expect("Hamiltonian Schur form").complex_eigenvalues();
    let mut stable: Vec<_> = eig.iter().copied().filter(|l| l.re < 0.0).collect();
    assert_eq!(stable.len(), 2, "Hamiltonian must split 2/2: {eig:?}");
    stable.sort_by(|x, y| x.im.total_cmp(&y.im));
    let sum = (stable[0] + stable[1]).re;
    let prod = (stable[0] * stable[1]).re;
    let m = h * h - h * sum + Matrix4::identity() * prod;
    let svd = m.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors");
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    let basis = |k: usize| v_t.row(order[k]).transpose();
    let (c0, c1) = (basis(0), basis(1));
    let x = Matrix2::new(c0[0], c1[0], c0[1], c1[1]);
    let y = Matrix2::new(c0[2], c1[2], c0[3], c1[3]);
    let p = y * x.try_inverse().expect("X block invertible");
    (p + p.transpose()) * 0.5
}

/// Reachability closure by Floyd-Warshall on the information-flow graph
/// (`j -> i` whenever `w_ij > 0`).
#[allow(clippy::needless_range_loop)]
pub fn closure(weights: &DMatrix<f64>) -> Vec<Vec<bool>> {
    let n = weights.nrows();
    let mut r = vec![vec![false; n]; n];
    for i in 0..n {
        r[i][i] = true;
        for j in 0..n {
            if weights[(i, j)] > 0.0 {
                r[j][i] = true;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            if r[i][k] {
                for j in 0..n {
                    if r[k][j] {
                        r[i][j] = true;
                    }
                }
            }
        }
    }
    r
}

pub fn brute_force_spanning_tree(weights: &DMatrix<f64>) -> bool {
    closure(weights).iter().any(|row| row.iter().all(|&x| x))
}

/// Random weighted digraph that contains a spanning tree: a random rooted
/// tree plus extra edges with probability `density`.
pub fn random_rooted_digraph<R: Rng>(rng: &mut R, n: usize, density: f64) -> Digraph {
    let mut order: Vec<usize> = (0..n).collect();
    for k in (1..n).rev() {
        order.swap(k, rng.gen_range(0..=k));
    }
    let mut w = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let parent = order[rng.gen_range(0..k)];
        w[(order[k], parent)] = rng.gen_range(0.2..2.0);
    }
    for i in 0..n {
        for j in 0..n {
            if i != j && w[(i, j)] == 0.0 && rng.gen_bool(density) {
                w[(i, j)] = rng.gen_range(0.2..2.0);
            }
        }
    }
    Digraph::from_dmatrix(w).expect("valid digraph")
}

/// Arbitrary 0/1 digraph on `n` nodes from the bits of `mask`
/// (one bit per off-diagonal entry, row-major).
pub fn digraph_from_mask(n: usize, mask: u64) -> Digraph {
    let mut w = DMatrix::<f64>::zeros(n, n);
    let mut bit = 0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                if mask >> bit & 1 == 1 {
                    w[(i, j)] = 1.0;
                }
                bit += 1;
            }
        }
    }
    Digraph::from_dmatrix(w).expect("valid digraph")
}

pub fn unit_edges(n: usize, edges: &[(usize, usize)]) -> Digraph {
    let e: Vec<Edge> = edges.iter().map(|&(from, to)| Edge { from, to, weight: 1.0 }).collect();
    Digraph::from_edges(n, &e).expect("valid digraph")
}
