//! Optimal spending allocation for a single agent.
//!
//! Holding everyone else's behavior fixed, one agent asks: how should I split
//! my spending over providers to maximize my own asymptotic per-episode
//! utility? Changing the agent's column of `P` also changes the stationary
//! currency split, so the objective is not linear in the column.
//!
//! It becomes linear once the agent's *stationary currency share* `v` is
//! pinned: with `sum(x) = 1` and `x_j = v` fixed, the balance equations and
//! the utility objective are linear in the remaining unknowns, so the best
//! column for that share is a small linear program. The outer search scans
//! `v` over a uniform grid on `[0, 1]`, then refines around the incumbent by
//! halving the interval a few times.
//!
//! The grid is also seeded with the share the greedy single-provider
//! ("myopic") allocation would earn, so the reported optimum dominates the
//! myopic payoff exactly rather than up to grid resolution.

use std::io::Write;

use crate::error::{Error, Result};
use crate::format::float17;
use crate::lp::{lp_solve, LinearProgram, LpStatus};
use crate::netmodel::SpendingNetwork;
use crate::stationary::{cesaro_average, iterate_currency, solve_stationary};

/// Default number of share values per grid pass.
pub const DEFAULT_GRID_POINTS: usize = 1001;

/// Default number of interval-halving refinement passes.
pub const DEFAULT_REFINE_ROUNDS: usize = 3;

/// One examined share value.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    /// Stationary currency share hypothesized for the agent.
    pub share: f64,
    /// Whether any spending column realizes this share.
    pub feasible: bool,
    /// Best utility at this share (in absolute currency units), when feasible.
    pub objective: Option<f64>,
}

/// Result of [`optimize_spending`].
#[derive(Debug, Clone)]
pub struct OptimizationOutcome {
    /// The optimizing agent.
    pub agent: usize,
    /// Best spending column found (sums to 1).
    pub column: Vec<f64>,
    /// Stationary currency vector realized by that column (sums to the
    /// network total).
    pub x: Vec<f64>,
    /// Asymptotic per-episode utility of the best column.
    pub w_star: f64,
    /// Every share value examined, in examination order.
    pub grid_trace: Vec<GridPoint>,
    /// Whether the network assembled from the best column is irreducible.
    /// A `false` here means the stationary split is initial-state dependent
    /// and `w_star` describes the fixed point the solver targeted.
    pub result_irreducible: bool,
}

/// Greedy single-provider allocation: all spending on the provider with the
/// best utility-per-currency ratio `U[i][j] / C[i][j]`.
///
/// Self-purchase is considered only when the agent assigns itself positive
/// utility. Ties go to the lowest provider index. Fails with
/// [`Error::NoProvider`] when no provider offers a positive ratio.
pub fn myopic_column(net: &SpendingNetwork, agent: usize) -> Result<Vec<f64>> {
    let n = net.n();
    if agent >= n {
        return Err(Error::InvalidArgument(format!(
            "agent index {agent} out of range for {n} agents"
        )));
    }
    let mut best: Option<(usize, f64)> = None;
    for i in 0..n {
        if i == agent && net.u()[agent][agent] <= 0.0 {
            continue;
        }
        let ratio = net.utility_price_ratio(i, agent);
        if best.is_none_or(|(_, r)| ratio > r) {
            best = Some((i, ratio));
        }
    }
    match best {
        Some((i, r)) if r > 0.0 => {
            let mut column = vec![0.0; n];
            column[i] = 1.0;
            Ok(column)
        }
        _ => Err(Error::NoProvider { agent }),
    }
}

/// Index of the variable holding `x_i` (for `i != agent`) in the inner LP.
fn x_var(agent: usize, i: usize) -> usize {
    if i < agent {
        i
    } else {
        i - 1
    }
}

/// Builds the inner linear program for a fixed stationary share `share` of
/// `agent`, on the normalized scale `sum(x) = 1`.
///
/// Variables are the other agents' stationary holdings `x_i` (`i != agent`,
/// ascending) followed by the agent's spending column `p_0..p_{n-1}`.
/// Constraints: the holdings of others sum to `1 - share`; each balance row
/// `(P x)_i = x_i` with `x_agent` replaced by the constant `share`; the
/// spending column sums to 1. The objective is the agent's per-episode
/// utility `share * sum_i p_i * U[i][agent] / C[i][agent]`.
pub fn build_inner_lp(net: &SpendingNetwork, agent: usize, share: f64) -> LinearProgram {
    let n = net.n();
    let m = 2 * n - 1;
    let p_var = |i: usize| n - 1 + i;

    let mut a = Vec::with_capacity(n + 2);
    let mut b = Vec::with_capacity(n + 2);

    let mut row = vec![0.0; m];
    for i in 0..n {
        if i != agent {
            row[x_var(agent, i)] = 1.0;
        }
    }
    a.push(row);
    b.push(1.0 - share);

    for i in 0..n {
        let mut row = vec![0.0; m];
        for k in 0..n {
            if k == agent {
                continue;
            }
            let mut coeff = net.p()[i][k];
            if i == k {
                coeff -= 1.0;
            }
            row[x_var(agent, k)] = coeff;
        }
        row[p_var(i)] = share;
        a.push(row);
        b.push(if i == agent { share } else { 0.0 });
    }

    let mut row = vec![0.0; m];
    for i in 0..n {
        row[p_var(i)] = 1.0;
    }
    a.push(row);
    b.push(1.0);

    let mut c = vec![0.0; m];
    for i in 0..n {
        c[p_var(i)] = share * net.utility_price_ratio(i, agent);
    }

    LinearProgram { c, a, b }
}

struct Incumbent {
    share: f64,
    objective: f64,
    z: Vec<f64>,
}

/// Finds the spending column maximizing `agent`'s asymptotic utility.
///
/// Scans `grid_points` equally spaced share values on `[0, 1]`, seeds the
/// scan with the myopic allocation's stationary share, then runs
/// `refine_rounds` passes that halve the search interval around the
/// incumbent. Ties prefer the smallest share. Fails with
/// [`Error::AllInfeasible`] when no share admits a consistent column.
pub fn optimize_spending(
    net: &SpendingNetwork,
    agent: usize,
    grid_points: usize,
    refine_rounds: usize,
) -> Result<OptimizationOutcome> {
    let n = net.n();
    if agent >= n {
        return Err(Error::InvalidArgument(format!(
            "agent index {agent} out of range for {n} agents"
        )));
    }
    if grid_points < 2 {
        return Err(Error::InvalidArgument(
            "grid needs at least two share values".into(),
        ));
    }

    let total = net.total();
    let mut trace: Vec<GridPoint> = Vec::new();
    let mut best: Option<Incumbent> = None;

    let mut examine = |share: f64, best: &mut Option<Incumbent>| -> Result<()> {
        let sol = lp_solve(&build_inner_lp(net, agent, share))?;
        if sol.status == LpStatus::Optimal {
            let objective = sol.objective * total;
            trace.push(GridPoint {
                share,
                feasible: true,
                objective: Some(objective),
            });
            let improves = match best {
                None => true,
                Some(inc) => {
                    objective > inc.objective || (objective == inc.objective && share < inc.share)
                }
            };
            if improves {
                *best = Some(Incumbent {
                    share,
                    objective,
                    z: sol.z,
                });
            }
        } else {
            trace.push(GridPoint {
                share,
                feasible: false,
                objective: None,
            });
        }
        Ok(())
    };

    let steps = grid_points - 1;
    for i in 0..=steps {
        examine(i as f64 / steps as f64, &mut best)?;
    }

    // Seed with the myopic allocation's stationary share so the optimum
    // dominates the myopic payoff exactly, not just up to grid resolution.
    if let Ok(column) = myopic_column(net, agent) {
        if let Ok(assembled) = net.with_column(agent, &column) {
            if let Ok(dist) = solve_stationary(&assembled, 1e-10) {
                let share = (dist.x[agent] / total).clamp(0.0, 1.0);
                examine(share, &mut best)?;
            }
        }
    }

    for round in 1..=refine_rounds {
        let Some(center) = best.as_ref().map(|inc| inc.share) else {
            break;
        };
        let width = 0.5_f64.powi(round as i32);
        let lo = (center - width / 2.0).clamp(0.0, 1.0 - width);
        for i in 0..=steps {
            examine(lo + width * i as f64 / steps as f64, &mut best)?;
        }
    }

    let Some(inc) = best else {
        return Err(Error::AllInfeasible { agent });
    };

    let p_var = |i: usize| n - 1 + i;
    let mut column: Vec<f64> = (0..n).map(|i| inc.z[p_var(i)].max(0.0)).collect();
    let s: f64 = column.iter().sum();
    if s <= 0.5 {
        return Err(Error::SingularSystem(
            "optimizer produced a degenerate spending column".into(),
        ));
    }
    for v in &mut column {
        *v /= s;
    }

    let mut x = vec![0.0; n];
    x[agent] = inc.share * total;
    for i in 0..n {
        if i != agent {
            x[i] = inc.z[x_var(agent, i)].max(0.0) * total;
        }
    }

    let assembled = net.with_column(agent, &column)?;
    Ok(OptimizationOutcome {
        agent,
        result_irreducible: assembled.is_irreducible(),
        column,
        x,
        w_star: inc.objective,
        grid_trace: trace,
    })
}

fn check_column(net: &SpendingNetwork, column: &[f64]) -> Result<()> {
    if column.len() != net.n() {
        return Err(Error::DimensionMismatch(format!(
            "column of length {} for a {}-agent network",
            column.len(),
            net.n()
        )));
    }
    if column.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("spending column".into()));
    }
    if column.iter().any(|&v| v < -1e-12) {
        return Err(Error::InvalidArgument(
            "spending column has negative entries".into(),
        ));
    }
    let s: f64 = column.iter().sum();
    if (s - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "spending column sums to {s}, expected 1"
        )));
    }
    Ok(())
}

/// Asymptotic utility `agent` earns from a given spending column, computed by
/// an exact stationary solve of the assembled network.
pub fn evaluate_column(net: &SpendingNetwork, agent: usize, column: &[f64]) -> Result<f64> {
    check_column(net, column)?;
    let assembled = net.with_column(agent, column)?;
    let dist = solve_stationary(&assembled, 1e-10)?;
    let report = crate::stationary::asymptotic_utility(&assembled, &dist, agent)?;
    Ok(report.w)
}

/// Least common multiple of `1..=n`, saturating at `usize::MAX`.
fn lcm_up_to(n: usize) -> usize {
    fn gcd(a: usize, b: usize) -> usize {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    let mut acc: usize = 1;
    for k in 2..=n.max(1) {
        let g = gcd(acc, k);
        acc = match (acc / g).checked_mul(k) {
            Some(v) => v,
            None => return usize::MAX,
        };
    }
    acc
}

/// Trajectory-averaged variant of [`evaluate_column`] that also works when
/// the assembled network is reducible or periodic.
///
/// Simulates `steps` episodes and averages the settled tail of the
/// trajectory. The window length is a multiple of `lcm(1..=n)` (when that
/// fits in half the trace) so periodic oscillation cancels exactly.
pub fn evaluate_column_cesaro(
    net: &SpendingNetwork,
    agent: usize,
    column: &[f64],
    steps: usize,
) -> Result<f64> {
    check_column(net, column)?;
    if steps == 0 {
        return Err(Error::InvalidArgument(
            "trajectory average needs at least one step".into(),
        ));
    }
    let assembled = net.with_column(agent, column)?;
    for i in 0..net.n() {
        if column[i] > 0.0 && net.c()[i][agent] <= 0.0 {
            return Err(Error::ZeroPrice { provider: i, agent });
        }
    }
    let trace = iterate_currency(&assembled, steps);
    let half = trace.len() / 2;
    let base = lcm_up_to(net.n());
    let window = if base <= half {
        half - half % base
    } else {
        half
    };
    let window = window.max(1);
    let avg = cesaro_average(&trace[trace.len() - window..]);
    let w = (0..net.n())
        .map(|i| avg[agent] * column[i] * assembled.utility_price_ratio(i, agent))
        .sum();
    Ok(w)
}

/// Writes a share-grid trace as CSV with header `v,feasible,objective`.
pub fn write_grid_trace_csv<W: Write>(trace: &[GridPoint], out: &mut W) -> std::io::Result<()> {
    writeln!(out, "v,feasible,objective")?;
    for gp in trace {
        let objective = gp.objective.map(float17).unwrap_or_default();
        writeln!(out, "{},{},{}", float17(gp.share), gp.feasible, objective)?;
    }
    Ok(())
}
