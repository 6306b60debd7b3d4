use thiserror::Error;

/// Errors raised by the analytic, numerical and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error in {function}: {message}")]
    Domain {
        function: &'static str,
        message: String,
    },

    /// Adaptive quadrature ran out of subdivisions before meeting its tolerance.
    #[error(
        "quadrature did not converge in {context}: estimated error {achieved:.3e} > requested {requested:.3e} after {subdivisions} subdivisions"
    )]
    Quadrature {
        context: String,
        achieved: f64,
        requested: f64,
        subdivisions: usize,
    },

    /// An infinite series hit its term cap before the tail fell below tolerance.
    #[error("series did not converge in {context}: {terms} terms, last term {last_term:.3e}")]
    Series {
        context: String,
        terms: usize,
        last_term: f64,
    },

    /// The result over- or underflows double precision.
    #[error("result out of range in {function}: {message}")]
    Range {
        function: &'static str,
        message: String,
    },

    /// Invalid grid, solver or simulation configuration.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A grid function was queried outside its support.
    #[error("grid error: {0}")]
    Grid(String),

    /// A time-stepping solver produced values outside their admissible range.
    #[error("numerical instability: {0}")]
    Instability(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(function: &'static str, message: impl Into<String>) -> Self {
        Error::Domain {
            function,
            message: message.into(),
        }
    }

    /// Prefixes the context of a convergence failure, leaving other variants untouched.
    pub fn within(self, outer: &str) -> Self {
        match self {
            Error::Quadrature {
                context,
                achieved,
                requested,
                subdivisions,
            } => Error::Quadrature {
                context: format!("{outer}: {context}"),
                achieved,
                requested,
                subdivisions,
            },
            Error::Series {
                context,
                terms,
                last_term,
            } => Error::Series {
                context: format!("{outer}: {context}"),
                terms,
                last_term,
            },
            other => other,
        }
    }
}

pub(crate) fn require_positive(function: &'static str, name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(function, format!("{name} must be positive and finite, got {value}")))
    }
}

pub(crate) fn require_nonnegative(function: &'static str, name: &str, value: f64) -> Result<()> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(function, format!("{name} must be nonnegative and finite, got {value}")))
    }
}

pub(crate) fn require_finite(function: &'static str, name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(function, format!("{name} must be finite, got {value}")))
    }
}
