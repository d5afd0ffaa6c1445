//! Reference experiment sweeps over a one-parameter family of 3-agent
//! networks.
//!
//! The family fixes the first agent's situation and varies how the other two
//! agents allocate their spending through a single parameter `alpha`:
//!
//! * agent 2 spends `(alpha, 0.98 - alpha, 0.02)` over agents (1, 2, 3);
//! * agent 3 spends `(0.5, 0.01, 0.49)`.
//!
//! Larger `alpha` means agent 2 recycles more currency back to agent 1.
//! Three sweep scenarios („fig1"/"fig2"/"fig3" on the command line) trace,
//! per `alpha`: optimal-vs-myopic utility for agent 1, dynamic real prices of
//! providers 2 and 3, and the marginal utilities behind those prices. Rows
//! that fail (e.g. a reducible assembly) are recorded with an error status
//! rather than aborting the sweep, and rows are computed in parallel but
//! emitted in grid order so output files are byte-for-byte reproducible.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::format::float17;
use crate::netmodel::{validate, SpendingNetwork};
use crate::optimizer::{
    evaluate_column, myopic_column, optimize_spending, DEFAULT_GRID_POINTS, DEFAULT_REFINE_ROUNDS,
};
use crate::realprice::{marginal_utilities, real_price_dynamic, DynamicSpendingSetup};

/// Utility matrix of the utility-comparison instance (also shipped as
/// `examples/utility_experiment.json`).
pub const UTILITY_EXPERIMENT_U: [[f64; 3]; 3] = [
    [0.0, 0.3746, 0.6199],
    [0.7637, 0.0, 1.0246],
    [0.5495, 0.3102, 0.0],
];

/// Label-price matrix of the utility-comparison instance.
pub const UTILITY_EXPERIMENT_C: [[f64; 3]; 3] = [
    [0.1619, 6.7064, 0.3463],
    [0.5, 4.692, 6.0502],
    [0.3958, 0.7562, 7.1731],
];

/// Utility matrix of the real-price instance (also shipped as
/// `examples/realprice_experiment.json`).
pub const REALPRICE_EXPERIMENT_U: [[f64; 3]; 3] = [
    [0.0, 0.7589, 0.5426],
    [0.2507, 0.0, 1.1631],
    [0.5542, 0.2726, 0.0],
];

/// Label-price matrix of the real-price instance.
pub const REALPRICE_EXPERIMENT_C: [[f64; 3]; 3] = [
    [0.638, 0.185, 0.4736],
    [0.5, 2.6813, 0.9683],
    [1.2161, 2.522, 1.5043],
];

/// Spending columns of agents 2 and 3 as a function of the sweep parameter.
pub fn spender_columns(alpha: f64) -> (Vec<f64>, Vec<f64>) {
    (vec![alpha, 1.0 - alpha - 0.02, 0.02], vec![0.5, 0.01, 0.49])
}

/// Default sweep grid: `alpha = i / 100` for `i = 1..=97`.
pub fn default_alpha_grid() -> Vec<f64> {
    (1..=97).map(|i| i as f64 / 100.0).collect()
}

/// Which curves a sweep produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// `fig1`: optimal vs myopic asymptotic utility for agent 1.
    UtilityComparison,
    /// `fig2`: dynamic real prices of providers 2 and 3 for agent 1.
    RealPriceCurve,
    /// `fig3`: marginal utilities `dW/da_2` and `dW/da_3` for agent 1.
    MarginalUtilityCurve,
}

impl Scenario {
    /// Command-line identifier.
    pub fn id(&self) -> &'static str {
        match self {
            Scenario::UtilityComparison => "fig1",
            Scenario::RealPriceCurve => "fig2",
            Scenario::MarginalUtilityCurve => "fig3",
        }
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig1" => Ok(Scenario::UtilityComparison),
            "fig2" => Ok(Scenario::RealPriceCurve),
            "fig3" => Ok(Scenario::MarginalUtilityCurve),
            other => Err(Error::InvalidArgument(format!(
                "unknown scenario '{other}' (expected fig1, fig2, or fig3)"
            ))),
        }
    }
}

/// Configuration of one sweep run.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    /// Values of the reallocation parameter, each in `(0, 0.98)`; rows are
    /// emitted in this order.
    pub alpha_grid: Vec<f64>,
    /// Which curves to compute.
    pub scenario: Scenario,
    /// Path of the 3-agent network JSON file.
    pub network: PathBuf,
    /// Absolute spending amounts of agent 1 for the real-price scenarios.
    /// Defaults to `x0[1] * P[:,1]` (current holdings times current column).
    pub spending: Option<Vec<f64>>,
}

/// Outcome of one sweep row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowStatus {
    /// All requested quantities were computed.
    Ok,
    /// The row failed with the given error code; value cells are empty.
    Failed(&'static str),
}

/// One row of sweep output.
#[derive(Debug, Clone)]
pub struct SweepRow {
    /// Reallocation parameter of this row.
    pub alpha: f64,
    /// Best achievable utility for agent 1 (`fig1`).
    pub utility_optimal: Option<f64>,
    /// Utility of the greedy single-provider allocation (`fig1`).
    pub utility_myopic: Option<f64>,
    /// Dynamic real price of provider 2 (`fig2`).
    pub rp_2: Option<f64>,
    /// Dynamic real price of provider 3 (`fig2`).
    pub rp_3: Option<f64>,
    /// Marginal utility of spending on provider 2 (`fig3`).
    pub dw_da2: Option<f64>,
    /// Marginal utility of spending on provider 3 (`fig3`).
    pub dw_da3: Option<f64>,
    /// Whether the row succeeded.
    pub status: RowStatus,
}

impl SweepRow {
    fn empty(alpha: f64, status: RowStatus) -> Self {
        SweepRow {
            alpha,
            utility_optimal: None,
            utility_myopic: None,
            rp_2: None,
            rp_3: None,
            dw_da2: None,
            dw_da3: None,
            status,
        }
    }
}

fn compute_row(
    base: &SpendingNetwork,
    scenario: Scenario,
    spending: Option<&Vec<f64>>,
    alpha: f64,
) -> SweepRow {
    let attempt = || -> Result<SweepRow> {
        let (col2, col3) = spender_columns(alpha);
        let net = base.with_column(1, &col2)?.with_column(2, &col3)?;
        let mut row = SweepRow::empty(alpha, RowStatus::Ok);
        match scenario {
            Scenario::UtilityComparison => {
                let outcome =
                    optimize_spending(&net, 0, DEFAULT_GRID_POINTS, DEFAULT_REFINE_ROUNDS)?;
                let myopic = myopic_column(&net, 0)?;
                row.utility_optimal = Some(outcome.w_star);
                row.utility_myopic = Some(evaluate_column(&net, 0, &myopic)?);
            }
            Scenario::RealPriceCurve | Scenario::MarginalUtilityCurve => {
                let a = match spending {
                    Some(a) => a.clone(),
                    None => {
                        let holdings = net.x0()[0];
                        net.column(0).iter().map(|p| holdings * p).collect()
                    }
                };
                let setup = DynamicSpendingSetup::new(a, 1, net.total())?;
                if scenario == Scenario::RealPriceCurve {
                    row.rp_2 = Some(real_price_dynamic(&net, &setup)?.real_price);
                    let setup3 = setup.with_target(2)?;
                    row.rp_3 = Some(real_price_dynamic(&net, &setup3)?.real_price);
                } else {
                    let mu = marginal_utilities(&net, &setup)?;
                    row.dw_da2 = Some(mu[1]);
                    row.dw_da3 = Some(mu[2]);
                }
            }
        }
        Ok(row)
    };
    attempt().unwrap_or_else(|e| SweepRow::empty(alpha, RowStatus::Failed(e.code())))
}

/// Runs a sweep: loads and validates the network, then computes one row per
/// grid value (in parallel, emitted in grid order).
///
/// Configuration problems (unreadable file, invalid network, out-of-range
/// grid) fail the whole sweep; per-row numerical failures are recorded in the
/// row's status instead.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    let net = SpendingNetwork::from_file(&cfg.network)?;
    let report = validate(&net);
    if !report.is_ok() {
        return Err(Error::InvalidNetwork(report.to_text()));
    }
    if net.n() != 3 {
        return Err(Error::InvalidArgument(format!(
            "sweep scenarios are defined for 3-agent networks, got {}",
            net.n()
        )));
    }
    if cfg.alpha_grid.is_empty() {
        return Err(Error::InvalidArgument("alpha grid is empty".into()));
    }
    for &alpha in &cfg.alpha_grid {
        if !alpha.is_finite() || alpha <= 0.0 || alpha >= 0.98 {
            return Err(Error::InvalidArgument(format!(
                "alpha {alpha} outside the open interval (0, 0.98)"
            )));
        }
    }

    let rows = cfg
        .alpha_grid
        .par_iter()
        .map(|&alpha| compute_row(&net, cfg.scenario, cfg.spending.as_ref(), alpha))
        .collect();
    Ok(rows)
}

/// Writes sweep rows as CSV with the layout
/// `alpha,utility_optimal,utility_myopic,rp_2,rp_3,dW_da2,dW_da3,status`.
/// Unused cells are left empty; floats carry 17 significant digits.
pub fn write_curves<W: Write>(rows: &[SweepRow], out: &mut W) -> std::io::Result<()> {
    writeln!(
        out,
        "alpha,utility_optimal,utility_myopic,rp_2,rp_3,dW_da2,dW_da3,status"
    )?;
    for row in rows {
        let cell = |v: Option<f64>| v.map(float17).unwrap_or_default();
        let status = match row.status {
            RowStatus::Ok => "ok".to_string(),
            RowStatus::Failed(code) => format!("error:{code}"),
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            float17(row.alpha),
            cell(row.utility_optimal),
            cell(row.utility_myopic),
            cell(row.rp_2),
            cell(row.rp_3),
            cell(row.dw_da2),
            cell(row.dw_da3),
            status
        )?;
    }
    Ok(())
}

/// Writes sweep rows to a CSV file at `path`.
pub fn write_curves_to_path<P: AsRef<Path>>(rows: &[SweepRow], path: P) -> Result<()> {
    let mut buf = Vec::new();
    write_curves(rows, &mut buf)?;
    std::fs::write(path, buf)?;
    Ok(())
}
