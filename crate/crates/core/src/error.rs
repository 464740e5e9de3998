use thiserror::Error;

/// Errors raised by the geometric kernels, samplers, learned charts and the tracer.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("singular metric: smallest singular value of the parameterization Jacobian is {sigma_min:e}")]
    SingularMetric { sigma_min: f64 },

    #[error("vector field vanishes (g(X, X) = {norm_sq:e}); point is at an equilibrium")]
    AtEquilibrium { norm_sq: f64 },

    #[error("kernel of A(Y) is not one-dimensional (sigma_(m-1)/sigma_max = {ratio:e})")]
    AmbiguousKernel { ratio: f64 },

    #[error("kernel direction is zero")]
    DegenerateKernel,

    #[error("point outside domain: {0}")]
    Domain(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("sampler stuck: acceptance rate {rate:.4} over {window} burn-in proposals")]
    SamplerStuck { rate: f64, window: usize },

    #[error("{0} is not supported on this manifold")]
    Unsupported(&'static str),

    #[error("stochastic integration diverged at step {step}; try a smaller dt")]
    Unstable { step: usize },

    #[error("all pairwise distances are zero")]
    DegenerateCloud,

    #[error("kernel graph is disconnected at point {index}")]
    Disconnected { index: usize },

    #[error("kernel matrix factorization failed (last jitter {jitter:e})")]
    Conditioning { jitter: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("start point is already an equilibrium (sqrt g(X,X) = {norm:e})")]
    StartAtEquilibrium { norm: f64 },

    #[error("no chart accepts the current point: {0}")]
    ChartExit(String),

    #[error("i/o: {0}")]
    Io(String),

    #[error("format: {0}")]
    Format(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Format(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}
