use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Why a correlation matrix could not be written as `rho_ij = rho_i * rho_j`.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FactorizationError {
    #[error("sign pattern infeasible: entry ({0}, {1}) contradicts the signs implied by the other entries (odd number of negative correlations in a cycle)")]
    SignPattern(usize, usize),
    #[error("zero pattern not representable: ({0}, {1}) is zero while both variables are correlated with others")]
    ZeroPattern(usize, usize),
    #[error("magnitude infeasible: factor {index} has |rho_i| = {value:.6} >= 1")]
    Magnitude { index: usize, value: f64 },
    #[error(
        "matrix has no product structure: entry ({i}, {j}) is {target} but factors give {product}"
    )]
    NotProduct {
        i: usize,
        j: usize,
        target: f64,
        product: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    ParameterDomain(String),
    #[error("argument outside domain: {0}")]
    Domain(String),
    #[error("quadrature did not converge: estimate {estimate} with error bound {error_bound:.3e}")]
    NumericalAccuracy { estimate: f64, error_bound: f64 },
    #[error("correlation {rho} outside attainable range [{rho_min}, {rho_max}]")]
    OutOfRange {
        rho: f64,
        rho_min: f64,
        rho_max: f64,
    },
    #[error("invalid correlation matrix: {0}")]
    InvalidMatrix(String),
    #[error("matrix not positive semi-definite (smallest eigenvalue {min_eigenvalue:.3e})")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },
    #[error("factorization failed: {0}")]
    Factorization(#[from] FactorizationError),
    #[error("algorithm not applicable: {0}")]
    NotApplicable(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
}

impl Error {
    /// True for errors meaning the requested dependence cannot be produced.
    pub fn is_feasibility_stop(&self) -> bool {
        matches!(
            self,
            Error::OutOfRange { .. }
                | Error::NotPositiveSemidefinite { .. }
                | Error::Factorization(_)
                | Error::NotApplicable(_)
        )
    }
}
