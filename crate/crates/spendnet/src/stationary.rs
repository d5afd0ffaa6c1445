//! Stationary currency analysis and episode-by-episode simulation.
//!
//! Each episode every agent spends its entire currency holding according to
//! its column of `P`, so holdings evolve as `x_{t+1} = P x_t` and the total
//! is conserved. For an irreducible `P` there is a unique stationary split
//! `x` with `P x = x` and `sum(x) = sum(x0)`; this module computes it
//! directly (linear solve) or iteratively (power iteration), and derives the
//! per-episode utility an agent collects once the split has settled.

use std::io::Write;

use crate::error::{Error, Result};
use crate::format::float17;
use crate::linalg::{self, mat_vec};
use crate::netmodel::{is_irreducible, SpendingNetwork};

/// Default residual tolerance for stationary solves.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Default step cap for power iteration.
pub const DEFAULT_MAX_POWER_STEPS: usize = 1_000_000;

/// How a stationary distribution was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Linear solve of the balance equations.
    Direct,
    /// Repeated application of `P` until successive iterates agree.
    Power,
}

/// A stationary currency split together with solve diagnostics.
#[derive(Debug, Clone)]
pub struct StationaryDistribution {
    /// Stationary holdings, summing to `total`.
    pub x: Vec<f64>,
    /// Fixed-point defect `max_i |(P x)_i - x_i|`.
    pub residual: f64,
    /// Conserved total currency.
    pub total: f64,
    /// Solver that produced this result.
    pub method: Method,
}

/// Core balance solve shared by [`solve_stationary`] and the sensitivity
/// code: finds `x` with `(P - I) x = 0` and `sum(x) = total`.
///
/// One balance row is redundant, so the row with the strongest diagonal of
/// `P - I` is replaced by the normalization row of ones. Entries within
/// roundoff below zero are clamped to zero and the result is rescaled to the
/// exact total. Does *not* check irreducibility; callers that need a unique
/// fixed point do that first.
pub(crate) fn stationary_point(p: &[Vec<f64>], total: f64) -> Result<Vec<f64>> {
    let n = p.len();
    let mut m: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| p[i][j] - if i == j { 1.0 } else { 0.0 })
                .collect()
        })
        .collect();

    let drop_row = (0..n)
        .max_by(|&r, &s| {
            m[r][r]
                .abs()
                .partial_cmp(&m[s][s].abs())
                .expect("finite diagonal")
        })
        .expect("non-empty matrix");
    m[drop_row] = vec![1.0; n];
    let mut b = vec![0.0; n];
    b[drop_row] = total;

    let mut x = linalg::solve_dense(m, b)?;

    let clamp = 1e-12 * total.abs().max(1.0);
    for (i, v) in x.iter_mut().enumerate() {
        if *v < -clamp {
            return Err(Error::NegativeStationary {
                index: i,
                value: *v,
            });
        }
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let s: f64 = x.iter().sum();
    if s.abs() <= 1e-12 * total.abs().max(1.0) {
        return Err(Error::SingularSystem(
            "stationary solve lost all currency mass".into(),
        ));
    }
    let factor = total / s;
    for v in &mut x {
        *v *= factor;
    }
    Ok(x)
}

/// Computes the stationary currency split of an irreducible network by a
/// direct linear solve.
///
/// Fails with [`Error::Reducible`] when the spending graph is not strongly
/// connected and with [`Error::SingularSystem`] when the fixed-point residual
/// cannot be driven below `tol`.
pub fn solve_stationary(net: &SpendingNetwork, tol: f64) -> Result<StationaryDistribution> {
    if !is_irreducible(net.p())? {
        return Err(Error::Reducible);
    }
    let total = net.total();
    let x = stationary_point(net.p(), total)?;
    let residual = linalg::linf_diff(&mat_vec(net.p(), &x), &x);
    if !(residual <= tol) {
        return Err(Error::SingularSystem(format!(
            "stationary residual {residual:e} exceeds tolerance {tol:e}"
        )));
    }
    Ok(StationaryDistribution {
        x,
        residual,
        total,
        method: Method::Direct,
    })
}

/// Computes the stationary split by power iteration, stopping when two
/// successive iterates agree within `tol` componentwise.
///
/// Periodic chains never settle pointwise; the iteration then fails with
/// [`Error::DidNotConverge`] instead of returning an oscillating state.
pub fn power_stationary(
    net: &SpendingNetwork,
    tol: f64,
    max_steps: usize,
) -> Result<StationaryDistribution> {
    if !is_irreducible(net.p())? {
        return Err(Error::Reducible);
    }
    let mut x = net.x0().to_vec();
    let mut diff = f64::INFINITY;
    for _ in 0..max_steps {
        let next = mat_vec(net.p(), &x);
        diff = linalg::linf_diff(&next, &x);
        x = next;
        if diff <= tol {
            return Ok(StationaryDistribution {
                residual: diff,
                total: net.total(),
                method: Method::Power,
                x,
            });
        }
    }
    Err(Error::DidNotConverge {
        steps: max_steps,
        residual: diff,
    })
}

/// Simulates `steps` spending episodes and returns the full trajectory,
/// including the initial state (`steps + 1` entries).
pub fn iterate_currency(net: &SpendingNetwork, steps: usize) -> Vec<Vec<f64>> {
    let mut trace = Vec::with_capacity(steps + 1);
    trace.push(net.x0().to_vec());
    for _ in 0..steps {
        let next = mat_vec(net.p(), trace.last().expect("non-empty trace"));
        trace.push(next);
    }
    trace
}

/// Arithmetic mean of a trajectory, componentwise.
///
/// Averaging over a window whose length is a multiple of the chain's period
/// cancels persistent oscillation, which is how periodic chains are compared
/// against the direct solve. Panics on an empty trace.
pub fn cesaro_average(trace: &[Vec<f64>]) -> Vec<f64> {
    assert!(!trace.is_empty(), "cesaro_average needs a non-empty trace");
    let n = trace[0].len();
    let mut acc = vec![0.0; n];
    for state in trace {
        for (a, v) in acc.iter_mut().zip(state) {
            *a += v;
        }
    }
    let m = trace.len() as f64;
    for a in &mut acc {
        *a /= m;
    }
    acc
}

/// Per-episode utility an agent collects once currency has reached the given
/// stationary split.
#[derive(Debug, Clone)]
pub struct UtilityReport {
    /// The purchasing agent.
    pub agent: usize,
    /// Total utility per episode: `x[agent] * sum_i P[i][agent] * U[i][agent] / C[i][agent]`.
    pub w: f64,
    /// Contribution of each provider to `w`.
    pub per_provider: Vec<f64>,
}

/// Computes the asymptotic per-episode utility of `agent` under a stationary
/// split.
///
/// Fails with [`Error::ZeroPrice`] when the agent buys from a provider that
/// posts no positive price.
pub fn asymptotic_utility(
    net: &SpendingNetwork,
    dist: &StationaryDistribution,
    agent: usize,
) -> Result<UtilityReport> {
    let n = net.n();
    if agent >= n {
        return Err(Error::InvalidArgument(format!(
            "agent index {agent} out of range for {n} agents"
        )));
    }
    if dist.x.len() != n {
        return Err(Error::DimensionMismatch(
            "stationary vector length does not match network".into(),
        ));
    }
    let mut per_provider = Vec::with_capacity(n);
    for i in 0..n {
        let share = net.p()[i][agent];
        if share > 0.0 && net.c()[i][agent] <= 0.0 {
            return Err(Error::ZeroPrice { provider: i, agent });
        }
        per_provider.push(dist.x[agent] * share * net.utility_price_ratio(i, agent));
    }
    Ok(UtilityReport {
        agent,
        w: per_provider.iter().sum(),
        per_provider,
    })
}

/// Writes a trajectory as CSV with header `t,x_1,...,x_n`.
pub fn write_trace_csv<W: Write>(trace: &[Vec<f64>], out: &mut W) -> std::io::Result<()> {
    let n = trace.first().map_or(0, Vec::len);
    let header: Vec<String> = std::iter::once("t".to_string())
        .chain((1..=n).map(|i| format!("x_{i}")))
        .collect();
    writeln!(out, "{}", header.join(","))?;
    for (t, state) in trace.iter().enumerate() {
        let mut cells = Vec::with_capacity(n + 1);
        cells.push(t.to_string());
        cells.extend(state.iter().map(|&v| float17(v)));
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::SpendingNetwork;
    use std::path::PathBuf;

    fn example(name: &str) -> SpendingNetwork {
        let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
            .join("examples")
            .join(name);
        SpendingNetwork::from_file(path).unwrap()
    }

    fn swap_net(x0: Vec<f64>) -> SpendingNetwork {
        let n = x0.len();
        assert_eq!(n, 2);
        SpendingNetwork::new(
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            vec![vec![0.0; 2]; 2],
            vec![vec![1.0; 2]; 2],
            x0,
        )
        .unwrap()
    }

    #[test]
    fn doubly_stochastic_gives_uniform_split() {
        let p = vec![
            vec![0.5, 0.5, 0.0, 0.0],
            vec![0.0, 0.5, 0.5, 0.0],
            vec![0.0, 0.0, 0.5, 0.5],
            vec![0.5, 0.0, 0.0, 0.5],
        ];
        let net = SpendingNetwork::new(
            p,
            vec![vec![0.0; 4]; 4],
            vec![vec![1.0; 4]; 4],
            vec![4.0, 3.0, 2.0, 1.0],
        )
        .unwrap();
        let d = solve_stationary(&net, 1e-10).unwrap();
        for v in &d.x {
            assert!((v - 2.5).abs() < 1e-12, "expected uniform, got {:?}", d.x);
        }
        assert!(d.residual <= 1e-12);
        assert_eq!(d.method, Method::Direct);
    }

    #[test]
    fn two_agent_swap_splits_evenly() {
        let net = swap_net(vec![0.7, 0.3]);
        let d = solve_stationary(&net, 1e-10).unwrap();
        assert!((d.x[0] - 0.5).abs() < 1e-14);
        assert!((d.x[1] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn reducible_network_is_rejected() {
        let net = SpendingNetwork::new(
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![vec![0.0; 2]; 2],
            vec![vec![1.0; 2]; 2],
            vec![1.0, 1.0],
        )
        .unwrap();
        assert!(matches!(
            solve_stationary(&net, 1e-10),
            Err(Error::Reducible)
        ));
        assert!(matches!(
            power_stationary(&net, 1e-10, 100),
            Err(Error::Reducible)
        ));
    }

    #[test]
    fn shipped_three_agent_network_has_known_split() {
        // Closed form for the shipped 3-agent example at its default columns:
        // x = (10/3, 340/53, 40/159) with total 10.
        let net = example("realprice_experiment.json");
        let d = solve_stationary(&net, 1e-10).unwrap();
        let expected = [10.0 / 3.0, 340.0 / 53.0, 40.0 / 159.0];
        for (got, want) in d.x.iter().zip(expected) {
            assert!((got - want).abs() < 1e-10, "got {got}, want {want}");
        }
        assert!((d.total - 10.0).abs() < 1e-12);
        assert!(d.residual <= 1e-12);
    }

    #[test]
    fn power_iteration_matches_direct_solve() {
        let net = example("realprice_experiment.json");
        let direct = solve_stationary(&net, 1e-10).unwrap();
        let power = power_stationary(&net, 1e-13, DEFAULT_MAX_POWER_STEPS).unwrap();
        assert!(linalg::linf_diff(&direct.x, &power.x) < 1e-9);
        assert_eq!(power.method, Method::Power);
    }

    #[test]
    fn power_iteration_reports_periodic_chains() {
        let net = swap_net(vec![0.7, 0.3]);
        match power_stationary(&net, 1e-12, 1000) {
            Err(Error::DidNotConverge { steps, residual }) => {
                assert_eq!(steps, 1000);
                assert!((residual - 0.4).abs() < 1e-12); // |0.7 - 0.3| each swap
            }
            other => panic!("expected DidNotConverge, got {other:?}"),
        }
    }

    #[test]
    fn trajectory_conserves_total_currency() {
        let net = example("realprice_experiment.json");
        let trace = iterate_currency(&net, 1000);
        assert_eq!(trace.len(), 1001);
        for state in &trace {
            let s: f64 = state.iter().sum();
            assert!((s - 10.0).abs() <= 1e-9 * 10.0, "total drifted to {s}");
        }
    }

    #[test]
    fn trajectory_converges_to_direct_solve() {
        let net = example("utility_experiment.json");
        let d = solve_stationary(&net, 1e-10).unwrap();
        let trace = iterate_currency(&net, 200);
        assert!(linalg::linf_diff(trace.last().unwrap(), &d.x) < 1e-8);
    }

    #[test]
    fn cesaro_of_constant_trace_is_the_constant() {
        let trace = vec![vec![1.0, 2.0]; 7];
        assert_eq!(cesaro_average(&trace), vec![1.0, 2.0]);
    }

    #[test]
    fn cesaro_tail_window_matches_direct_solve() {
        let net = example("realprice_experiment.json");
        let d = solve_stationary(&net, 1e-10).unwrap();
        let trace = iterate_currency(&net, 500);
        // Skip the transient; the settled tail matches to near roundoff.
        let tail = cesaro_average(&trace[250..]);
        assert!(linalg::linf_diff(&tail, &d.x) < 1e-6);
        // The full-trace mean still carries the transient, so it is visibly
        // worse; this pins down why comparisons use a settled window.
        let full = cesaro_average(&trace);
        assert!(linalg::linf_diff(&full, &d.x) > 1e-3);
    }

    #[test]
    fn cesaro_window_cancels_periodic_oscillation() {
        let net = swap_net(vec![0.7, 0.3]);
        let trace = iterate_currency(&net, 399); // 400 entries, multiple of period 2
        let avg = cesaro_average(&trace);
        assert!((avg[0] - 0.5).abs() < 1e-15);
        assert!((avg[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn utility_of_shipped_network_matches_closed_form() {
        // Agent 1 buys only from agent 2, so w = x_1 * U[2][1] / C[2][1].
        let net = example("realprice_experiment.json");
        let d = solve_stationary(&net, 1e-10).unwrap();
        let report = asymptotic_utility(&net, &d, 0).unwrap();
        let expected = (10.0 / 3.0) * 0.2507 / 0.5;
        assert!((report.w - expected).abs() < 1e-10);
        assert!((report.per_provider[1] - expected).abs() < 1e-10);
        assert_eq!(report.per_provider[0], 0.0);
        assert_eq!(report.per_provider[2], 0.0);
    }

    #[test]
    fn utility_requires_positive_prices_on_purchases() {
        let net = SpendingNetwork::new(
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            vec![vec![0.0, 2.0], vec![3.0, 0.0]],
            vec![vec![0.0; 2]; 2],
            vec![1.0, 1.0],
        )
        .unwrap();
        let d = solve_stationary(&net, 1e-10).unwrap();
        assert!(matches!(
            asymptotic_utility(&net, &d, 0),
            Err(Error::ZeroPrice {
                provider: 1,
                agent: 0
            })
        ));
    }

    #[test]
    fn utility_validates_indices() {
        let net = example("realprice_experiment.json");
        let d = solve_stationary(&net, 1e-10).unwrap();
        assert!(matches!(
            asymptotic_utility(&net, &d, 7),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn trace_csv_has_header_and_full_precision() {
        let net = swap_net(vec![0.75, 0.25]);
        let trace = iterate_currency(&net, 2);
        let mut buf = Vec::new();
        write_trace_csv(&trace, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,x_1,x_2");
        assert_eq!(lines[1], "0,7.5000000000000000e-1,2.5000000000000000e-1");
        assert_eq!(lines.len(), 4);
    }
}
