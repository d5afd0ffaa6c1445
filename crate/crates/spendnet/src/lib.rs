//! Spending-network analysis: stationary currency distributions, asymptotic
//! utility, spending optimization, and effective (feedback-adjusted) real
//! prices.
//!
//! A spending network couples `n` agents through three `n × n` matrices — a
//! column-stochastic spending matrix `P` (entry `(i, j)` is the fraction of
//! agent `j`'s outflow that goes to agent `i`), a utility matrix `U`, and a
//! label-price matrix `C` — plus an initial currency vector `x0`. Currency
//! evolves by `x(t+1) = P x(t)`, which conserves total currency.
//!
//! The crate provides:
//!
//! * [`netmodel`] — network construction, validation, JSON serialization,
//!   and the strong-connectivity checks that make long-run analysis sound;
//! * [`stationary`] — stationary currency distributions (direct solve and
//!   power iteration), trajectory simulation, running averages, and
//!   asymptotic utility rates;
//! * [`lp`] — a small dense two-phase simplex solver used by the optimizer;
//! * [`optimizer`] — best spending column for one agent via a grid search
//!   over the self-spending share with an exact inner linear program;
//! * [`realprice`] — fixed- and dynamic-mode real prices (per-unit utility
//!   of a provider's service divided by the marginal utility per unit of
//!   currency spent there) with finite-difference cross-checks;
//! * [`experiments`] — reproducible parameter sweeps over a 3-agent family,
//!   written as deterministic CSV;
//! * [`format`] — the 17-significant-digit float formatting used by all
//!   machine-readable output.
//!
//! Entry points: [`SpendingNetwork::from_file`], [`solve_stationary`],
//! [`optimize_spending`], [`real_price_fixed`], [`real_price_dynamic`],
//! and [`run_sweep`].

pub mod error;
pub mod experiments;
pub mod format;
pub mod linalg;
pub mod lp;
pub mod netmodel;
pub mod optimizer;
pub mod realprice;
pub mod stationary;

pub use error::{Error, Result};
pub use experiments::{run_sweep, Scenario, SweepConfig, SweepRow};
pub use netmodel::{check_cd, is_irreducible, validate, SpendingNetwork, ValidationReport};
pub use optimizer::{myopic_column, optimize_spending, OptimizationOutcome};
pub use realprice::{
    real_price_dynamic, real_price_fixed, DynamicSpendingSetup, PriceMode, RealPriceResult,
};
pub use stationary::{
    asymptotic_utility, cesaro_average, iterate_currency, power_stationary, solve_stationary,
    Method, StationaryDistribution, UtilityReport,
};
