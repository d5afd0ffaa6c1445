//! Error type shared by every module in the crate.

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes surfaced by the library.
///
/// Each variant carries a stable machine-readable code (see [`Error::code`])
/// so batch drivers can record failures per work item instead of aborting,
/// and so the command-line tool can map errors onto exit codes.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An input matrix or vector has the wrong shape.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// An input contains NaN or infinity.
    #[error("non-finite input: {0}")]
    NonFinite(String),

    /// A caller-supplied scalar or option is out of range.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The network failed structural validation (see the report for details).
    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    /// The spending matrix is not irreducible, so no unique stationary
    /// distribution exists.
    #[error("spending matrix is reducible")]
    Reducible,

    /// A linear system had no usable pivot; the system is singular or
    /// numerically indistinguishable from singular.
    #[error("singular linear system: {0}")]
    SingularSystem(String),

    /// The stationary solve produced an entry too negative to be attributable
    /// to roundoff.
    #[error("stationary solve produced negative mass {value:e} at index {index}")]
    NegativeStationary { index: usize, value: f64 },

    /// A provider is purchased from (`P[i][j] > 0`) but posts no positive
    /// label price, so per-unit utility is undefined.
    #[error("zero label price: provider {provider} sells to agent {agent} at C <= 0")]
    ZeroPrice { provider: usize, agent: usize },

    /// No provider offers the agent positive utility per unit of currency.
    #[error("no provider offers agent {agent} positive utility per unit spent")]
    NoProvider { agent: usize },

    /// Every share value examined by the optimizer was infeasible.
    #[error("no feasible spending share found for agent {agent}")]
    AllInfeasible { agent: usize },

    /// The simplex solver hit a pivot below the hard numerical floor.
    #[error("numerical breakdown in simplex pivot (|pivot| = {pivot:e})")]
    NumericalBreakdown { pivot: f64 },

    /// A real-price denominator (marginal utility per unit spent) is exactly
    /// zero, so the price ratio is undefined.
    #[error("marginal utility is zero; real price undefined")]
    ZeroMarginalUtility,

    /// Power iteration did not reach the requested tolerance.
    #[error("power iteration did not converge after {steps} steps (residual {residual:e})")]
    DidNotConverge { steps: usize, residual: f64 },

    /// A sensitivity setup disagrees with the network it is applied to.
    #[error("setup mismatch: {0}")]
    SetupMismatch(String),

    /// File I/O failure.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// JSON parse or encode failure.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable short code identifying the failure class.
    ///
    /// Used verbatim in sweep CSV `status` cells (`error:<code>`), so changing
    /// these strings changes the on-disk format.
    pub fn code(&self) -> &'static str {
        match self {
            Error::DimensionMismatch(_) => "dimension-mismatch",
            Error::NonFinite(_) => "non-finite",
            Error::InvalidArgument(_) => "invalid-argument",
            Error::InvalidNetwork(_) => "invalid-network",
            Error::Reducible => "reducible",
            Error::SingularSystem(_) => "singular-system",
            Error::NegativeStationary { .. } => "negative-stationary",
            Error::ZeroPrice { .. } => "zero-price",
            Error::NoProvider { .. } => "no-provider",
            Error::AllInfeasible { .. } => "all-infeasible",
            Error::NumericalBreakdown { .. } => "numerical-breakdown",
            Error::ZeroMarginalUtility => "zero-marginal-utility",
            Error::DidNotConverge { .. } => "did-not-converge",
            Error::SetupMismatch(_) => "setup-mismatch",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }

    /// True for failures of the numerical machinery (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Reducible
                | Error::SingularSystem(_)
                | Error::NegativeStationary { .. }
                | Error::ZeroPrice { .. }
                | Error::NoProvider { .. }
                | Error::AllInfeasible { .. }
                | Error::NumericalBreakdown { .. }
                | Error::ZeroMarginalUtility
                | Error::DidNotConverge { .. }
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes_are_stable() {
        assert_eq!(Error::Reducible.code(), "reducible");
        assert_eq!(
            Error::NumericalBreakdown { pivot: 1e-13 }.code(),
            "numerical-breakdown"
        );
        assert_eq!(Error::ZeroMarginalUtility.code(), "zero-marginal-utility");
    }

    #[test]
    fn numerical_classification() {
        assert!(Error::Reducible.is_numerical());
        assert!(Error::SingularSystem("x".into()).is_numerical());
        assert!(!Error::InvalidArgument("x".into()).is_numerical());
        assert!(!Error::InvalidNetwork("x".into()).is_numerical());
    }

    #[test]
    fn display_messages_are_informative() {
        let e = Error::ZeroPrice {
            provider: 2,
            agent: 0,
        };
        assert!(e.to_string().contains("provider 2"));
        let e = Error::DidNotConverge {
            steps: 10,
            residual: 0.5,
        };
        assert!(e.to_string().contains("10 steps"));
    }
}
