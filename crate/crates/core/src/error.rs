use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid digraph: {0}")]
    InvalidDigraph(String),

    #[error("topology has no directed spanning tree (zero eigenvalue count {zero_count})")]
    NoSpanningTree { zero_count: usize },

    #[error("Riccati kernel is not positive definite: minors ({0}, {1})")]
    NotPositiveDefinite(f64, f64),

    #[error("Re(lambda_2) must be positive, got {0}")]
    InvalidLambda2(f64),

    #[error("closed-loop kernel not Hurwitz for {} eigenvalue(s): {offending:?}", offending.len())]
    NotHurwitz { offending: Vec<(f64, f64)> },

    #[error("formation infeasible: residual {residual:.6e} exceeds eps_f {eps_f:.3e} (agent {agent})")]
    Infeasible { residual: f64, eps_f: f64, agent: usize },

    #[error("non-finite state at t = {t}")]
    NonFiniteState { t: f64 },

    #[error("linear algebra routine did not converge: {0}")]
    NoConvergence(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("trace format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
