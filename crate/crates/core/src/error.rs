use thiserror::Error;

use crate::params::ParamError;

/// Numerical failures reported by the analytic engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericError {
    #[error("radial quadrature did not converge on u in [{lo:e}, {hi:e}] (radius {r_lo:.4e}..{r_hi:.4e} m), discrepancy {change:e}")]
    RadialQuadrature {
        lo: f64,
        hi: f64,
        r_lo: f64,
        r_hi: f64,
        change: f64,
    },
    #[error("negative base {base:e} in radial product at n = {n} (integral {integral:e})")]
    NegativeBase { n: usize, base: f64, integral: f64 },
    #[error("Laplace inversion at {abscissa:e} did not converge (error indicator {indicator:e})")]
    Inversion { abscissa: f64, indicator: f64 },
    #[error("cdf left [-eps, 1 + eps] at {abscissa:e}: {value}")]
    CdfRange { abscissa: f64, value: f64 },
    #[error("negative pdf excursion {value:e} at {abscissa:e}")]
    PdfNegative { abscissa: f64, value: f64 },
    #[error("adaptive quadrature on [{lo:e}, {hi:e}] missed tolerance (error estimate {error:e})")]
    Quadrature { lo: f64, hi: f64, error: f64 },
    #[error("throughput integral truncated at t = {t_max}")]
    Truncated { t_max: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Numeric(#[from] NumericError),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
