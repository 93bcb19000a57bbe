use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("config schema violation: {0}")]
    Schema(String),

    #[error("invalid network: {0}")]
    Validation(String),

    #[error("{0} requires an acyclic network")]
    Cyclic(&'static str),

    #[error("nondegeneracy condition fails at node {node}: no pivot arc couples to every other incident arc")]
    Degenerate { node: u32 },

    #[error("arc {0} is not internal")]
    NotInternalArc(u32),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("CFL violation: lambda*dt/h = {0:.4} exceeds 1")]
    Cfl(f64),

    #[error("singular transmission system at node {node} (condition number {condition:.3e})")]
    SingularNode { node: u32, condition: f64 },

    #[error("linear solver breakdown: {0}")]
    Solver(String),

    #[error("incompatible boundary fluxes: sum of W_j = {0:.3e}")]
    IncompatibleFluxes(f64),

    #[error("degenerate coefficient chain: {0}")]
    ChainDegenerate(String),

    #[error("no contraction (data too large): ratios {0:?}")]
    NoContraction(Vec<f64>),

    #[error("constant stationary solution rejected: {0}")]
    ConstantRejected(String),

    #[error("root finder diverged: {0}")]
    RootFinder(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("initial data expression: {0}")]
    Expression(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
