//! Real prices: what one unit of utility actually costs an agent.
//!
//! The label price `C[k][j]` is what provider `k` charges agent `j` per unit
//! of output. The *real* price divides that label price by the marginal
//! asymptotic utility of spending: `rp = U[k][j] / (dW/da_k)`, where `a_k` is
//! the currency agent `j` directs at provider `k` each episode and `W` is the
//! agent's asymptotic per-episode utility. A cheap label price can hide an
//! expensive real price when extra spending fails to come back as currency.
//!
//! Two bookkeeping modes:
//!
//! * **fixed** — extra spending is split across providers in the existing
//!   proportions, so the stationary *shares* are unchanged and only the total
//!   grows. The marginal utility is `(x_j / T) * sum_i P[i][j] U[i][j] / C[i][j]`.
//! * **dynamic** — only `a_k` changes, which reshapes the agent's column of
//!   `P` and therefore the stationary split itself. The marginal utility
//!   follows from differentiating the balance equations; the derivative of
//!   the stationary vector solves the same balance system with a forcing term
//!   and the normalization `sum_i dx_i/da_k = 1` (the marginal unit of
//!   currency enters the system).
//!
//! The dynamic solver works on the first agent; [`real_price_dynamic_for_agent`]
//! relabels agents to handle the general case. A central-difference oracle
//! ([`finite_diff_real_price`]) is provided for independent verification.

use crate::error::{Error, Result};
use crate::netmodel::{is_irreducible, SpendingNetwork};
use crate::stationary::{solve_stationary, stationary_point};

/// Which bookkeeping convention produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriceMode {
    /// Extra spending replicates the existing allocation proportions.
    Fixed,
    /// Extra spending goes to a single provider, reshaping the allocation.
    Dynamic,
}

/// Absolute spending amounts of one agent, for dynamic-mode analysis.
///
/// `a[i]` is the currency the agent directs at provider `i` each episode;
/// the agent's spending column of `P` must equal `a / sum(a)`.
#[derive(Debug, Clone)]
pub struct DynamicSpendingSetup {
    a: Vec<f64>,
    target: usize,
    total: f64,
}

impl DynamicSpendingSetup {
    /// Validates and wraps a spending vector, perturbation target, and the
    /// network's conserved total currency.
    pub fn new(a: Vec<f64>, target: usize, total: f64) -> Result<Self> {
        if a.is_empty() || target >= a.len() {
            return Err(Error::InvalidArgument(format!(
                "target provider {target} out of range for {} providers",
                a.len()
            )));
        }
        if a.iter().any(|v| !v.is_finite()) || !total.is_finite() {
            return Err(Error::NonFinite("spending setup".into()));
        }
        if a.iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidArgument(
                "spending amounts must be nonnegative".into(),
            ));
        }
        if !(a.iter().sum::<f64>() > 0.0) {
            return Err(Error::InvalidArgument(
                "spending amounts must not all be zero".into(),
            ));
        }
        if !(total > 0.0) {
            return Err(Error::InvalidArgument(
                "total currency must be positive".into(),
            ));
        }
        Ok(DynamicSpendingSetup { a, target, total })
    }

    /// Spending amounts per provider.
    pub fn a(&self) -> &[f64] {
        &self.a
    }

    /// Index of the provider whose spending is perturbed.
    pub fn target(&self) -> usize {
        self.target
    }

    /// Conserved total currency of the network this setup belongs to.
    pub fn total(&self) -> f64 {
        self.total
    }

    /// Sum of the spending amounts.
    pub fn spend_sum(&self) -> f64 {
        self.a.iter().sum()
    }

    /// Normalized spending column `a / sum(a)`.
    pub fn column(&self) -> Vec<f64> {
        let s = self.spend_sum();
        self.a.iter().map(|v| v / s).collect()
    }

    /// Same spending amounts with a different perturbation target.
    pub fn with_target(&self, target: usize) -> Result<Self> {
        DynamicSpendingSetup::new(self.a.clone(), target, self.total)
    }
}

/// Default central-difference step: `1e-6 * max(1, sum(a))`.
pub fn default_epsilon(setup: &DynamicSpendingSetup) -> f64 {
    1e-6 * setup.spend_sum().max(1.0)
}

/// A real-price computation result.
#[derive(Debug, Clone)]
pub struct RealPriceResult {
    /// Bookkeeping convention used.
    pub mode: PriceMode,
    /// The spending agent `j`.
    pub agent: usize,
    /// The provider `k` whose spending is perturbed.
    pub provider: usize,
    /// Real price `U[k][j] / (dW/da_k)`; negative when the marginal utility
    /// is negative.
    pub real_price: f64,
    /// Marginal asymptotic utility `dW/da_k`.
    pub marginal_utility: f64,
    /// Sensitivity of the stationary currency vector, `dx/da_k`.
    pub dx_da: Vec<f64>,
    /// Label price `C[k][j]` for comparison.
    pub label_price: f64,
    /// True when spending more at `k` *reduces* the agent's utility.
    pub negative_marginal: bool,
}

fn check_agent_provider(net: &SpendingNetwork, agent: usize, provider: usize) -> Result<()> {
    let n = net.n();
    if agent >= n || provider >= n {
        return Err(Error::InvalidArgument(format!(
            "agent {agent} / provider {provider} out of range for {n} agents"
        )));
    }
    Ok(())
}

fn finish(
    mode: PriceMode,
    net: &SpendingNetwork,
    agent: usize,
    provider: usize,
    marginal_utility: f64,
    dx_da: Vec<f64>,
) -> Result<RealPriceResult> {
    if marginal_utility == 0.0 {
        return Err(Error::ZeroMarginalUtility);
    }
    Ok(RealPriceResult {
        mode,
        agent,
        provider,
        real_price: net.u()[provider][agent] / marginal_utility,
        marginal_utility,
        dx_da,
        label_price: net.c()[provider][agent],
        negative_marginal: marginal_utility < 0.0,
    })
}

fn check_purchase_prices(net: &SpendingNetwork, agent: usize) -> Result<()> {
    for i in 0..net.n() {
        if net.p()[i][agent] > 0.0 && net.c()[i][agent] <= 0.0 {
            return Err(Error::ZeroPrice { provider: i, agent });
        }
    }
    Ok(())
}

/// Real price under fixed bookkeeping: extra spending is distributed across
/// providers in the agent's existing proportions.
pub fn real_price_fixed(
    net: &SpendingNetwork,
    agent: usize,
    provider: usize,
) -> Result<RealPriceResult> {
    check_agent_provider(net, agent, provider)?;
    check_purchase_prices(net, agent)?;
    let dist = solve_stationary(net, 1e-10)?;
    let total = dist.total;
    let share = dist.x[agent] / total;
    let dw = share
        * (0..net.n())
            .map(|i| net.p()[i][agent] * net.utility_price_ratio(i, agent))
            .sum::<f64>();
    let dx_da: Vec<f64> = dist.x.iter().map(|v| v / total).collect();
    finish(PriceMode::Fixed, net, agent, provider, dw, dx_da)
}

/// Variant of [`real_price_fixed`] whose marginal utility ignores how the
/// agent's spending is split: it sums the utility-per-currency ratios over
/// *all* providers instead of weighting them by the spending column. Kept for
/// comparison with that alternative bookkeeping convention.
pub fn real_price_fixed_unweighted(
    net: &SpendingNetwork,
    agent: usize,
    provider: usize,
) -> Result<RealPriceResult> {
    check_agent_provider(net, agent, provider)?;
    check_purchase_prices(net, agent)?;
    let dist = solve_stationary(net, 1e-10)?;
    let total = dist.total;
    let share = dist.x[agent] / total;
    let dw = share
        * (0..net.n())
            .map(|i| net.utility_price_ratio(i, agent))
            .sum::<f64>();
    let dx_da: Vec<f64> = dist.x.iter().map(|v| v / total).collect();
    finish(PriceMode::Fixed, net, agent, provider, dw, dx_da)
}

/// Finite-difference oracle for fixed bookkeeping: grows the total by
/// `±epsilon` with the allocation unchanged and differences the utility.
pub fn finite_diff_fixed(
    net: &SpendingNetwork,
    agent: usize,
    provider: usize,
    epsilon: f64,
) -> Result<RealPriceResult> {
    check_agent_provider(net, agent, provider)?;
    check_purchase_prices(net, agent)?;
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidArgument("epsilon must be positive".into()));
    }
    let total = net.total();
    let eval = |delta: f64| -> Result<(f64, Vec<f64>)> {
        let scaled = net.with_total(total + delta)?;
        let dist = solve_stationary(&scaled, 1e-10)?;
        let w = dist.x[agent]
            * (0..net.n())
                .map(|i| net.p()[i][agent] * net.utility_price_ratio(i, agent))
                .sum::<f64>();
        Ok((w, dist.x))
    };
    let (w_plus, x_plus) = eval(epsilon)?;
    let (w_minus, x_minus) = eval(-epsilon)?;
    let dw = (w_plus - w_minus) / (2.0 * epsilon);
    let dx_da = x_plus
        .iter()
        .zip(&x_minus)
        .map(|(p, m)| (p - m) / (2.0 * epsilon))
        .collect();
    finish(PriceMode::Fixed, net, agent, provider, dw, dx_da)
}

fn check_setup(net: &SpendingNetwork, setup: &DynamicSpendingSetup) -> Result<()> {
    let n = net.n();
    if setup.a.len() != n {
        return Err(Error::SetupMismatch(format!(
            "setup has {} providers, network has {n}",
            setup.a.len()
        )));
    }
    let total = net.total();
    if (setup.total - total).abs() > 1e-9 * total.abs().max(1.0) {
        return Err(Error::SetupMismatch(format!(
            "setup total {} does not match network total {total}",
            setup.total
        )));
    }
    let column = setup.column();
    for i in 0..n {
        if (net.p()[i][0] - column[i]).abs() > 1e-9 {
            return Err(Error::SetupMismatch(format!(
                "P[{}][1] = {} but a/sum(a) gives {}; the first agent's column \
                 must equal the normalized spending amounts",
                i + 1,
                net.p()[i][0],
                column[i]
            )));
        }
    }
    Ok(())
}

/// Shared implementation: stationary sensitivity `d = dx/da_k` and marginal
/// utility for the first agent, with a selectable redundant balance row.
fn dynamic_core(
    net: &SpendingNetwork,
    setup: &DynamicSpendingSetup,
    drop_row: Option<usize>,
) -> Result<(Vec<f64>, f64)> {
    let n = net.n();
    check_setup(net, setup)?;
    check_purchase_prices(net, 0)?;
    if !is_irreducible(net.p())? {
        return Err(Error::Reducible);
    }
    let x = stationary_point(net.p(), net.total())?;
    let s = setup.spend_sum();
    let k = setup.target;

    // Differentiating the balance equations (P(a) x(a))_i = x_i(a) in a_k:
    // (P - I) d = -(dP/da_k) x, where only column 1 of P depends on a and
    // d(a_i/s)/da_k = delta_ik / s - a_i / s^2.
    let mut m: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| net.p()[i][j] - if i == j { 1.0 } else { 0.0 })
                .collect()
        })
        .collect();
    let mut rhs: Vec<f64> = (0..n)
        .map(|i| {
            let grad = (if i == k { 1.0 / s } else { 0.0 }) - setup.a[i] / (s * s);
            -grad * x[0]
        })
        .collect();

    // One balance row is redundant; replace it (default: strongest diagonal)
    // with the conservation row sum(d) = 1 — the marginal unit of spending
    // enters the system as new currency.
    let drop = match drop_row {
        Some(r) if r < n => r,
        Some(r) => {
            return Err(Error::InvalidArgument(format!(
                "dropped row {r} out of range for {n} balance rows"
            )))
        }
        None => (0..n)
            .max_by(|&r, &t| {
                m[r][r]
                    .abs()
                    .partial_cmp(&m[t][t].abs())
                    .expect("finite diagonal")
            })
            .expect("non-empty system"),
    };
    m[drop] = vec![1.0; n];
    rhs[drop] = 1.0;
    let d = crate::linalg::solve_dense(m, rhs)?;

    // W(a) = x_1(a) * sum_i (a_i / s(a)) * U[i][1] / C[i][1]; product rule.
    let mut dw = 0.0;
    for i in 0..n {
        let ratio = net.utility_price_ratio(i, 0);
        let col_grad = (if i == k { 1.0 / s } else { 0.0 }) - setup.a[i] / (s * s);
        dw += ratio * (d[0] * setup.a[i] / s + x[0] * col_grad);
    }
    Ok((d, dw))
}

/// Real price of provider `setup.target()` for the *first* agent under
/// dynamic bookkeeping.
pub fn real_price_dynamic(
    net: &SpendingNetwork,
    setup: &DynamicSpendingSetup,
) -> Result<RealPriceResult> {
    let (dx_da, dw) = dynamic_core(net, setup, None)?;
    finish(PriceMode::Dynamic, net, 0, setup.target(), dw, dx_da)
}

/// Diagnostic variant of the dynamic solve that lets the caller choose which
/// redundant balance row is replaced by the conservation row. Returns
/// `(dx/da_k, dW/da_k)`; all choices agree up to roundoff.
pub fn sensitivity_with_dropped_row(
    net: &SpendingNetwork,
    setup: &DynamicSpendingSetup,
    drop_row: usize,
) -> Result<(Vec<f64>, f64)> {
    dynamic_core(net, setup, Some(drop_row))
}

/// Marginal utility `dW/da_k` of the first agent for every provider `k`,
/// under dynamic bookkeeping.
pub fn marginal_utilities(net: &SpendingNetwork, setup: &DynamicSpendingSetup) -> Result<Vec<f64>> {
    (0..net.n())
        .map(|k| dynamic_core(net, &setup.with_target(k)?, None).map(|(_, dw)| dw))
        .collect()
}

/// Central-difference oracle for the dynamic real price: perturbs `a_k` by
/// `±epsilon`, rebuilds the column and the total, re-solves the stationary
/// split, and differences the utility. The perturbed chains must remain
/// irreducible.
pub fn finite_diff_real_price(
    net: &SpendingNetwork,
    setup: &DynamicSpendingSetup,
    epsilon: f64,
) -> Result<RealPriceResult> {
    check_setup(net, setup)?;
    check_purchase_prices(net, 0)?;
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidArgument("epsilon must be positive".into()));
    }
    let k = setup.target;
    let eval = |delta: f64| -> Result<(f64, Vec<f64>)> {
        let mut a = setup.a.clone();
        a[k] += delta;
        let s: f64 = a.iter().sum();
        if !(s > 0.0) {
            return Err(Error::InvalidArgument(
                "perturbation drives total spending to zero".into(),
            ));
        }
        let column: Vec<f64> = a.iter().map(|v| v / s).collect();
        let perturbed = net
            .with_column(0, &column)?
            .with_total(setup.total + delta)?;
        if !is_irreducible(perturbed.p())? {
            return Err(Error::Reducible);
        }
        let x = stationary_point(perturbed.p(), perturbed.total())?;
        let w = x[0]
            * (0..net.n())
                .map(|i| column[i] * net.utility_price_ratio(i, 0))
                .sum::<f64>();
        Ok((w, x))
    };
    let (w_plus, x_plus) = eval(epsilon)?;
    let (w_minus, x_minus) = eval(-epsilon)?;
    let dw = (w_plus - w_minus) / (2.0 * epsilon);
    let dx_da = x_plus
        .iter()
        .zip(&x_minus)
        .map(|(p, m)| (p - m) / (2.0 * epsilon))
        .collect();
    finish(PriceMode::Dynamic, net, 0, k, dw, dx_da)
}

fn swapped_matrix(m: &[Vec<f64>], a: usize, b: usize) -> Vec<Vec<f64>> {
    let mut out = m.to_vec();
    out.swap(a, b);
    for row in &mut out {
        row.swap(a, b);
    }
    out
}

fn swapped_vec(v: &[f64], a: usize, b: usize) -> Vec<f64> {
    let mut out = v.to_vec();
    out.swap(a, b);
    out
}

/// Relabels agents so `agent` becomes the first one, producing an equivalent
/// network/setup pair for the dynamic solver.
fn permute_problem(
    net: &SpendingNetwork,
    agent: usize,
    setup: &DynamicSpendingSetup,
) -> Result<(SpendingNetwork, DynamicSpendingSetup)> {
    let swapped = SpendingNetwork::new(
        swapped_matrix(net.p(), 0, agent),
        swapped_matrix(net.u(), 0, agent),
        swapped_matrix(net.c(), 0, agent),
        swapped_vec(net.x0(), 0, agent),
    )?;
    let target = if setup.target == agent {
        0
    } else if setup.target == 0 {
        agent
    } else {
        setup.target
    };
    let setup = DynamicSpendingSetup::new(swapped_vec(&setup.a, 0, agent), target, setup.total)?;
    Ok((swapped, setup))
}

/// Dynamic real price for an arbitrary agent, by relabeling agents so the
/// chosen one comes first. `setup` is expressed in the original labels.
pub fn real_price_dynamic_for_agent(
    net: &SpendingNetwork,
    agent: usize,
    setup: &DynamicSpendingSetup,
) -> Result<RealPriceResult> {
    if agent >= net.n() {
        return Err(Error::InvalidArgument(format!(
            "agent index {agent} out of range for {} agents",
            net.n()
        )));
    }
    if agent == 0 {
        return real_price_dynamic(net, setup);
    }
    let (swapped, swapped_setup) = permute_problem(net, agent, setup)?;
    let result = real_price_dynamic(&swapped, &swapped_setup)?;
    Ok(RealPriceResult {
        agent,
        provider: setup.target,
        dx_da: swapped_vec(&result.dx_da, 0, agent),
        ..result
    })
}

/// Finite-difference oracle for an arbitrary agent; see
/// [`real_price_dynamic_for_agent`].
pub fn finite_diff_real_price_for_agent(
    net: &SpendingNetwork,
    agent: usize,
    setup: &DynamicSpendingSetup,
    epsilon: f64,
) -> Result<RealPriceResult> {
    if agent >= net.n() {
        return Err(Error::InvalidArgument(format!(
            "agent index {agent} out of range for {} agents",
            net.n()
        )));
    }
    if agent == 0 {
        return finite_diff_real_price(net, setup, epsilon);
    }
    let (swapped, swapped_setup) = permute_problem(net, agent, setup)?;
    let result = finite_diff_real_price(&swapped, &swapped_setup, epsilon)?;
    Ok(RealPriceResult {
        agent,
        provider: setup.target,
        dx_da: swapped_vec(&result.dx_da, 0, agent),
        ..result
    })
}
