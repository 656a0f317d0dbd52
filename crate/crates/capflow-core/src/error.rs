use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("quadrature did not converge on [{a}, {b}]: value {value}, error estimate {err}")]
    Quadrature { a: f64, b: f64, value: f64, err: f64 },

    #[error("integrand returned a non-finite value at x = {x}")]
    NonFinite { x: f64 },

    #[error("root finder failed: {0}")]
    Root(String),

    #[error("extrapolation did not converge: {0}")]
    Extrapolation(String),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("non-monotone area radius on r in [{r_lo}, {r_hi}]")]
    NonMonotoneRadius { r_lo: f64, r_hi: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
