use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{function}: argument {value} outside domain ({expected})")]
    Domain {
        function: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error(
        "cell area {area_m2:.6e} m² is outside the high-SNR validity region (must be below {limit_m2:.6e} m²)"
    )]
    HighSnrViolation { area_m2: f64, limit_m2: f64 },

    #[error(
        "probability mass {tail_mass:.3e} of cells exceeds the high-SNR validity region; densify the network or raise the link budget"
    )]
    CellLargerThanValidityRegion { tail_mass: f64 },

    #[error("{routine} did not converge after {iterations} iterations (last estimate {estimate:e}, error {error:e})")]
    NoConvergence {
        routine: &'static str,
        iterations: usize,
        estimate: f64,
        error: f64,
    },

    #[error("{0} requires path-loss exponent alpha = 2")]
    RequiresAlphaTwo(&'static str),

    #[error("point process realization is empty")]
    EmptyRealization,

    #[error("need at least {required} samples, got {available}")]
    InsufficientSamples { required: usize, available: usize },

    #[error("instability: load {0} is not below 1")]
    Unstable(f64),

    #[error("config: {0}")]
    Config(String),
}
