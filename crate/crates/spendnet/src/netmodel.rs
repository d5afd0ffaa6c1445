//! The closed spending-network model and its structural checks.
//!
//! A network of `n` agents is described by three `n x n` matrices and an
//! initial currency vector:
//!
//! * `P[i][j]` — fraction of agent `j`'s currency spent on agent `i` each
//!   episode. Every column sums to 1, so total currency is conserved.
//! * `U[i][j]` — utility agent `j` derives from one unit of agent `i`'s output.
//! * `C[i][j]` — label price agent `i` charges agent `j` per unit of output.
//! * `x0[j]`   — currency initially held by agent `j`.
//!
//! Currency evolves as `x_{t+1} = P x_t`. When the directed spending graph is
//! strongly connected (an edge `j -> i` whenever `P[i][j] > 0`) the chain has
//! a unique stationary currency split, which is what the rest of the crate
//! analyzes.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance within which a column sum is silently renormalized to 1.
pub const COLUMN_SUM_TOL: f64 = 1e-9;

/// A validated spending network.
///
/// Construction enforces shape and finiteness and renormalizes column sums
/// that are within [`COLUMN_SUM_TOL`] of 1. Rule violations that are *data*
/// rather than structural problems (negative entries, out-of-tolerance sums,
/// missing prices) are reported by [`validate`] instead of rejected here, so
/// diagnostic tooling can still load and inspect a broken file.
#[derive(Debug, Clone, PartialEq)]
pub struct SpendingNetwork {
    n: usize,
    p: Vec<Vec<f64>>,
    u: Vec<Vec<f64>>,
    c: Vec<Vec<f64>>,
    x0: Vec<f64>,
}

/// On-disk JSON shape for a network. The agent count is implied by `x0`;
/// files may state it explicitly and it is then cross-checked.
#[derive(Serialize, Deserialize)]
struct NetworkFile {
    #[serde(default)]
    n: Option<usize>,
    #[serde(rename = "P")]
    p: Vec<Vec<f64>>,
    #[serde(rename = "U")]
    u: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    c: Vec<Vec<f64>>,
    x0: Vec<f64>,
}

impl SpendingNetwork {
    /// Builds a network from its matrices and initial currency vector.
    ///
    /// Fails on shape mismatches and non-finite entries. Columns of `P` whose
    /// sum is within [`COLUMN_SUM_TOL`] of 1 are renormalized to sum exactly
    /// to 1; anything further off is kept as-is for [`validate`] to flag.
    pub fn new(p: Vec<Vec<f64>>, u: Vec<Vec<f64>>, c: Vec<Vec<f64>>, x0: Vec<f64>) -> Result<Self> {
        let n = x0.len();
        if n == 0 {
            return Err(Error::DimensionMismatch(
                "network must have at least one agent".into(),
            ));
        }
        for (name, m) in [("P", &p), ("U", &u), ("C", &c)] {
            if m.len() != n || m.iter().any(|row| row.len() != n) {
                return Err(Error::DimensionMismatch(format!(
                    "{name} must be {n} x {n} to match x0"
                )));
            }
            if m.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("{name} contains NaN or infinity")));
            }
        }
        if x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("x0 contains NaN or infinity".into()));
        }

        let mut net = SpendingNetwork { n, p, u, c, x0 };
        for j in 0..n {
            let s: f64 = (0..n).map(|i| net.p[i][j]).sum();
            if s > 0.0 && s != 1.0 && (s - 1.0).abs() <= COLUMN_SUM_TOL {
                for i in 0..n {
                    net.p[i][j] /= s;
                }
            }
        }
        Ok(net)
    }

    /// Number of agents.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Spending matrix (column `j` is agent `j`'s allocation).
    pub fn p(&self) -> &[Vec<f64>] {
        &self.p
    }

    /// Utility matrix.
    pub fn u(&self) -> &[Vec<f64>] {
        &self.u
    }

    /// Label-price matrix.
    pub fn c(&self) -> &[Vec<f64>] {
        &self.c
    }

    /// Initial currency vector.
    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    /// Total currency in the system (`sum(x0)`), conserved by every episode.
    pub fn total(&self) -> f64 {
        self.x0.iter().sum()
    }

    /// Copy of spending column `j` (agent `j`'s allocation over providers).
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.p[i][j]).collect()
    }

    /// Utility per unit of currency agent `j` gets from provider `i`
    /// (`U[i][j] / C[i][j]`), defined as 0 when no positive price is posted.
    pub fn utility_price_ratio(&self, i: usize, j: usize) -> f64 {
        let c = self.c[i][j];
        if c > 0.0 {
            self.u[i][j] / c
        } else {
            0.0
        }
    }

    /// Returns a copy of the network with spending column `j` replaced.
    pub fn with_column(&self, j: usize, column: &[f64]) -> Result<Self> {
        if j >= self.n || column.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "column of length {} for agent {} in a {}-agent network",
                column.len(),
                j,
                self.n
            )));
        }
        let mut p = self.p.clone();
        for i in 0..self.n {
            p[i][j] = column[i];
        }
        SpendingNetwork::new(p, self.u.clone(), self.c.clone(), self.x0.clone())
    }

    /// Returns a copy with the initial currency scaled so that the conserved
    /// total equals `total`. The relative split between agents is unchanged.
    pub fn with_total(&self, total: f64) -> Result<Self> {
        let current = self.total();
        if current == 0.0 {
            return Err(Error::InvalidArgument(
                "cannot rescale a network with zero total currency".into(),
            ));
        }
        if !total.is_finite() {
            return Err(Error::NonFinite("requested total".into()));
        }
        let factor = total / current;
        let x0 = self.x0.iter().map(|v| v * factor).collect();
        SpendingNetwork::new(self.p.clone(), self.u.clone(), self.c.clone(), x0)
    }

    /// Loads a network from a JSON file.
    pub fn from_file<P: AsRef<Path>>(path: P) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    /// Parses a network from JSON text.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: NetworkFile = serde_json::from_str(text)?;
        if let Some(n) = file.n {
            if n != file.x0.len() {
                return Err(Error::DimensionMismatch(format!(
                    "declared n = {n} but x0 has length {}",
                    file.x0.len()
                )));
            }
        }
        SpendingNetwork::new(file.p, file.u, file.c, file.x0)
    }

    /// Serializes the network to pretty-printed JSON.
    pub fn to_json(&self) -> String {
        let file = NetworkFile {
            n: Some(self.n),
            p: self.p.clone(),
            u: self.u.clone(),
            c: self.c.clone(),
            x0: self.x0.clone(),
        };
        serde_json::to_string_pretty(&file).expect("network serializes")
    }

    /// Writes the network to a JSON file.
    pub fn to_file<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }

    /// True when the spending graph is strongly connected.
    pub fn is_irreducible(&self) -> bool {
        is_irreducible(&self.p).expect("stored matrix is square")
    }
}

/// One failed validation rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// Stable rule identifier (e.g. `column-stochastic`).
    pub rule: &'static str,
    /// Human-readable description with indices and values.
    pub message: String,
}

/// Outcome of [`validate`]: either clean or a list of rule violations.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    /// All violations found, in deterministic rule-then-index order.
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    /// True when no rule was violated.
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    /// Multi-line text rendering, one violation per line.
    pub fn to_text(&self) -> String {
        if self.is_ok() {
            "ok".to_string()
        } else {
            self.violations
                .iter()
                .map(|v| format!("{}: {}", v.rule, v.message))
                .collect::<Vec<_>>()
                .join("\n")
        }
    }
}

/// Checks the semantic rules a well-formed network must satisfy.
///
/// Rules checked, in order:
/// * `column-stochastic` — every column of `P` sums to 1 within tolerance;
/// * `nonnegative-spending` — `P[i][j] >= 0`;
/// * `nonnegative-utility` — `U[i][j] >= 0`;
/// * `zero-price` — a positive price is posted wherever output is purchased
///   or valued (`P[i][j] > 0` or `U[i][j] > 0` requires `C[i][j] > 0`);
/// * `nonnegative-currency` — `x0[j] >= 0`;
/// * `positive-total` — total currency is strictly positive.
pub fn validate(net: &SpendingNetwork) -> ValidationReport {
    let n = net.n();
    let mut violations = Vec::new();

    for j in 0..n {
        let s: f64 = (0..n).map(|i| net.p()[i][j]).sum();
        if (s - 1.0).abs() > COLUMN_SUM_TOL {
            violations.push(Violation {
                rule: "column-stochastic",
                message: format!("column {} of P sums to {s:.12} instead of 1", j + 1),
            });
        }
    }
    for j in 0..n {
        for i in 0..n {
            if net.p()[i][j] < 0.0 {
                violations.push(Violation {
                    rule: "nonnegative-spending",
                    message: format!("P[{}][{}] = {}", i + 1, j + 1, net.p()[i][j]),
                });
            }
        }
    }
    for j in 0..n {
        for i in 0..n {
            if net.u()[i][j] < 0.0 {
                violations.push(Violation {
                    rule: "nonnegative-utility",
                    message: format!("U[{}][{}] = {}", i + 1, j + 1, net.u()[i][j]),
                });
            }
        }
    }
    for j in 0..n {
        for i in 0..n {
            let needs_price = net.p()[i][j] > 0.0 || net.u()[i][j] > 0.0;
            if needs_price && net.c()[i][j] <= 0.0 {
                violations.push(Violation {
                    rule: "zero-price",
                    message: format!(
                        "agent {} buys from or values provider {} but C[{}][{}] = {}",
                        j + 1,
                        i + 1,
                        i + 1,
                        j + 1,
                        net.c()[i][j]
                    ),
                });
            }
        }
    }
    for (j, &v) in net.x0().iter().enumerate() {
        if v < 0.0 {
            violations.push(Violation {
                rule: "nonnegative-currency",
                message: format!("x0[{}] = {v}", j + 1),
            });
        }
    }
    if !(net.total() > 0.0) {
        violations.push(Violation {
            rule: "positive-total",
            message: format!("total currency is {}", net.total()),
        });
    }

    ValidationReport { violations }
}

/// Builds the spending-graph adjacency list: edge `j -> i` iff `p[i][j] > 0`.
fn adjacency(p: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let n = p.len();
    let mut adj = vec![Vec::new(); n];
    for j in 0..n {
        for i in 0..n {
            if p[i][j] > 0.0 {
                adj[j].push(i);
            }
        }
    }
    adj
}

/// Tarjan's strongly-connected-components algorithm; returns the number of
/// components reachable in the whole graph.
fn scc_count(adj: &[Vec<usize>]) -> usize {
    struct State<'a> {
        adj: &'a [Vec<usize>],
        index: usize,
        indices: Vec<Option<usize>>,
        lowlink: Vec<usize>,
        on_stack: Vec<bool>,
        stack: Vec<usize>,
        components: usize,
    }

    fn strongconnect(st: &mut State, v: usize) {
        st.indices[v] = Some(st.index);
        st.lowlink[v] = st.index;
        st.index += 1;
        st.stack.push(v);
        st.on_stack[v] = true;

        let adj = st.adj;
        for &w in &adj[v] {
            if st.indices[w].is_none() {
                strongconnect(st, w);
                st.lowlink[v] = st.lowlink[v].min(st.lowlink[w]);
            } else if st.on_stack[w] {
                st.lowlink[v] = st.lowlink[v].min(st.indices[w].unwrap());
            }
        }

        if st.lowlink[v] == st.indices[v].unwrap() {
            st.components += 1;
            while let Some(w) = st.stack.pop() {
                st.on_stack[w] = false;
                if w == v {
                    break;
                }
            }
        }
    }

    let n = adj.len();
    let mut st = State {
        adj,
        index: 0,
        indices: vec![None; n],
        lowlink: vec![0; n],
        on_stack: vec![false; n],
        stack: Vec::new(),
        components: 0,
    };
    for v in 0..n {
        if st.indices[v].is_none() {
            strongconnect(&mut st, v);
        }
    }
    st.components
}

/// True when the directed spending graph of `p` is strongly connected.
///
/// The graph has an edge `j -> i` whenever `p[i][j] > 0`. A `1 x 1` matrix is
/// irreducible by convention. Rejects non-square input.
pub fn is_irreducible(p: &[Vec<f64>]) -> Result<bool> {
    let n = p.len();
    if n == 0 || p.iter().any(|row| row.len() != n) {
        return Err(Error::DimensionMismatch(
            "irreducibility check expects a non-empty square matrix".into(),
        ));
    }
    if n == 1 {
        return Ok(true);
    }
    Ok(scc_count(&adjacency(p)) == 1)
}

/// Structural condition guaranteeing that *every* spending reallocation by a
/// single agent keeps the network irreducible.
///
/// The condition has two parts, both checked for every agent `j`:
///
/// 1. deleting agent `j` (its row and column) leaves an irreducible matrix
///    among the remaining agents (a single remaining agent counts as
///    irreducible);
/// 2. agent `j` trades with the rest of the network in both directions:
///    some other agent receives spending from `j` (`P[l][j] > 0` for some
///    `l != j`) and `j` receives spending from some other agent
///    (`P[j][k] > 0` for some `k != j`).
///
/// The condition is sufficient but not necessary for irreducibility of `P`
/// itself; see the crate tests for the implication property.
pub fn check_cd(p: &[Vec<f64>]) -> Result<bool> {
    let n = p.len();
    if n == 0 || p.iter().any(|row| row.len() != n) {
        return Err(Error::DimensionMismatch(
            "condition check expects a non-empty square matrix".into(),
        ));
    }
    if n < 2 {
        return Err(Error::InvalidArgument(
            "condition check needs at least two agents".into(),
        ));
    }

    for j in 0..n {
        // Part 1: principal submatrix with agent j removed stays irreducible.
        if n > 2 {
            let keep: Vec<usize> = (0..n).filter(|&i| i != j).collect();
            let sub: Vec<Vec<f64>> = keep
                .iter()
                .map(|&i| keep.iter().map(|&k| p[i][k]).collect())
                .collect();
            if !is_irreducible(&sub)? {
                return Ok(false);
            }
        }
        // Part 2: two-way trade between agent j and the rest.
        let receives = (0..n).any(|k| k != j && p[j][k] > 0.0);
        let sends = (0..n).any(|l| l != j && p[l][j] > 0.0);
        if !(receives && sends) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_net() -> SpendingNetwork {
        SpendingNetwork::new(
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            vec![vec![0.0, 2.0], vec![3.0, 0.0]],
            vec![vec![1.0, 1.0], vec![1.0, 1.0]],
            vec![1.0, 1.0],
        )
        .unwrap()
    }

    #[test]
    fn construction_checks_shapes() {
        let bad = SpendingNetwork::new(
            vec![vec![1.0]],
            vec![vec![0.0]],
            vec![vec![1.0]],
            vec![1.0, 2.0],
        );
        assert!(matches!(bad, Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn construction_rejects_nan() {
        let bad = SpendingNetwork::new(
            vec![vec![f64::NAN]],
            vec![vec![0.0]],
            vec![vec![1.0]],
            vec![1.0],
        );
        assert!(matches!(bad, Err(Error::NonFinite(_))));
    }

    #[test]
    fn near_stochastic_columns_are_renormalized() {
        let eps = 3e-10;
        let net = SpendingNetwork::new(
            vec![vec![0.5 + eps, 1.0], vec![0.5, 0.0]],
            vec![vec![0.0; 2]; 2],
            vec![vec![1.0; 2]; 2],
            vec![1.0, 1.0],
        )
        .unwrap();
        let s: f64 = net.column(0).iter().sum();
        assert!((s - 1.0).abs() < 1e-15, "sum {s}");
        // Far-off columns are left alone for validate() to flag.
        let net = SpendingNetwork::new(
            vec![vec![0.4, 1.0], vec![0.5, 0.0]],
            vec![vec![0.0; 2]; 2],
            vec![vec![1.0; 2]; 2],
            vec![1.0, 1.0],
        )
        .unwrap();
        assert_eq!(net.p()[0][0], 0.4);
        assert!(!validate(&net).is_ok());
    }

    #[test]
    fn validate_accepts_clean_network() {
        assert!(validate(&tiny_net()).is_ok());
    }

    #[test]
    fn validate_reports_each_rule() {
        let net = SpendingNetwork::new(
            vec![vec![0.5, 1.2], vec![0.2, -0.2]],
            vec![vec![0.0, 1.0], vec![-1.0, 0.0]],
            vec![vec![1.0, 0.0], vec![1.0, 1.0]],
            vec![-1.0, 1.0],
        )
        .unwrap();
        let report = validate(&net);
        let rules: Vec<&str> = report.violations.iter().map(|v| v.rule).collect();
        assert!(rules.contains(&"column-stochastic"));
        assert!(rules.contains(&"nonnegative-spending"));
        assert!(rules.contains(&"nonnegative-utility"));
        assert!(rules.contains(&"zero-price"));
        assert!(rules.contains(&"nonnegative-currency"));
        assert!(report.to_text().contains("column-stochastic"));
    }

    #[test]
    fn validate_flags_zero_total() {
        let net = SpendingNetwork::new(
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            vec![vec![0.0; 2]; 2],
            vec![vec![1.0; 2]; 2],
            vec![0.0, 0.0],
        )
        .unwrap();
        let report = validate(&net);
        assert!(report.violations.iter().any(|v| v.rule == "positive-total"));
    }

    #[test]
    fn two_cycle_is_irreducible() {
        let p = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        assert!(is_irreducible(&p).unwrap());
    }

    #[test]
    fn identity_is_reducible() {
        let p = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert!(!is_irreducible(&p).unwrap());
    }

    #[test]
    fn one_agent_is_irreducible_by_convention() {
        assert!(is_irreducible(&[vec![1.0]]).unwrap());
    }

    #[test]
    fn directed_cycle_is_irreducible_but_chain_is_not() {
        // 3-cycle: each agent spends fully on the next.
        let cycle = vec![
            vec![0.0, 0.0, 1.0],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
        ];
        assert!(is_irreducible(&cycle).unwrap());
        // One-way chain with an absorbing self-spender.
        let chain = vec![
            vec![0.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 1.0],
        ];
        assert!(!is_irreducible(&chain).unwrap());
    }

    #[test]
    fn irreducibility_rejects_non_square() {
        let p = vec![vec![1.0, 0.0]];
        assert!(matches!(
            is_irreducible(&p),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn check_cd_on_two_cycle_is_true() {
        let p = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        assert!(check_cd(&p).unwrap());
    }

    #[test]
    fn check_cd_fails_without_two_way_trade() {
        // Agent 3 receives spending but sends everything to itself.
        let p = vec![
            vec![0.0, 0.5, 0.0],
            vec![0.5, 0.0, 0.0],
            vec![0.5, 0.5, 1.0],
        ];
        assert!(!check_cd(&p).unwrap());
    }

    #[test]
    fn check_cd_fails_when_deleting_an_agent_disconnects_the_rest() {
        // Agents 2 and 3 only communicate through agent 1.
        let p = vec![
            vec![0.0, 0.5, 0.5],
            vec![0.5, 0.5, 0.0],
            vec![0.5, 0.0, 0.5],
        ];
        assert!(is_irreducible(&p).unwrap());
        assert!(!check_cd(&p).unwrap());
    }

    #[test]
    fn check_cd_true_implies_irreducible_on_dense_example() {
        let p = vec![
            vec![0.2, 0.3, 0.5],
            vec![0.4, 0.3, 0.2],
            vec![0.4, 0.4, 0.3],
        ];
        assert!(check_cd(&p).unwrap());
        assert!(is_irreducible(&p).unwrap());
    }

    #[test]
    fn check_cd_needs_two_agents() {
        assert!(matches!(
            check_cd(&[vec![1.0]]),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn json_round_trip_preserves_matrices() {
        let net = tiny_net();
        let text = net.to_json();
        let back = SpendingNetwork::from_json(&text).unwrap();
        assert_eq!(net, back);
    }

    #[test]
    fn from_json_rejects_inconsistent_n() {
        let text = r#"{"n": 3, "P": [[1.0]], "U": [[0.0]], "C": [[1.0]], "x0": [1.0]}"#;
        assert!(matches!(
            SpendingNetwork::from_json(text),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn from_json_accepts_files_without_an_agent_count() {
        let text = r#"{"P": [[1.0]], "U": [[0.0]], "C": [[1.0]], "x0": [2.0]}"#;
        let net = SpendingNetwork::from_json(text).unwrap();
        assert_eq!(net.n(), 1);
        assert_eq!(net.total(), 2.0);
    }

    #[test]
    fn with_column_replaces_a_single_allocation() {
        let net = tiny_net();
        let new = net.with_column(0, &[0.25, 0.75]).unwrap();
        assert_eq!(new.column(0), vec![0.25, 0.75]);
        assert_eq!(new.column(1), net.column(1));
        assert!(net.with_column(0, &[1.0]).is_err());
    }

    #[test]
    fn with_total_rescales_currency() {
        let net = tiny_net().with_total(10.0).unwrap();
        assert!((net.total() - 10.0).abs() < 1e-12);
        assert_eq!(net.x0()[0], net.x0()[1]);
    }

    #[test]
    fn utility_price_ratio_guards_zero_price() {
        let net = tiny_net();
        assert_eq!(net.utility_price_ratio(1, 0), 3.0);
        let zero_price = SpendingNetwork::new(
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            vec![vec![0.0, 2.0], vec![3.0, 0.0]],
            vec![vec![0.0; 2]; 2],
            vec![1.0, 1.0],
        )
        .unwrap();
        assert_eq!(zero_price.utility_price_ratio(1, 0), 0.0);
    }
}
