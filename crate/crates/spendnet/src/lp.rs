//! Dense two-phase primal simplex for small equality-form linear programs.
//!
//! Solves `maximize c·z subject to A z = b, z >= 0`. The problems this crate
//! generates are tiny (a few dozen variables at most), so a plain dense
//! tableau is the simplest thing that is fast, deterministic, and easy to
//! verify against exhaustive vertex enumeration.
//!
//! Determinism and termination come from Bland's rule: the entering column is
//! the lowest-index improving column and ratio-test ties are broken toward
//! the lowest-index basic variable. Phase 1 minimizes the sum of artificial
//! variables; leftover basic artificials are pivoted out or their (redundant)
//! rows dropped before phase 2.
//!
//! Set the environment variable `SPENDNET_LP_DEBUG=1` to dump the tableau to
//! stderr after every pivot.

use crate::error::{Error, Result};
use crate::linalg::dot;

/// Reduced costs at or below this threshold count as non-improving.
const COST_TOL: f64 = 1e-9;
/// Ratio-test candidates must have a pivot entry above this threshold.
const PIVOT_CANDIDATE_TOL: f64 = 1e-9;
/// Executing a pivot with magnitude below this floor is a numerical breakdown.
const PIVOT_BREAKDOWN_FLOOR: f64 = 1e-12;
/// Scale factor for feasibility decisions (`tol = 1e-8 * (1 + max|b|)`).
const FEAS_TOL: f64 = 1e-8;

/// An equality-form linear program: `maximize c·z` subject to `A z = b`,
/// `z >= 0`.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    /// Objective coefficients (one per variable).
    pub c: Vec<f64>,
    /// Constraint rows of `A z = b`.
    pub a: Vec<Vec<f64>>,
    /// Right-hand sides of `A z = b`.
    pub b: Vec<f64>,
}

/// Outcome classification of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    /// A maximizer was found.
    Optimal,
    /// The constraints admit no nonnegative solution.
    Infeasible,
    /// The objective is unbounded above on the feasible set.
    Unbounded,
}

/// Result of [`lp_solve`].
#[derive(Debug, Clone)]
pub struct LpSolution {
    /// How the solve ended.
    pub status: LpStatus,
    /// The maximizer when `status == Optimal`; all zeros otherwise.
    pub z: Vec<f64>,
    /// Objective value `c · z` (0 unless optimal).
    pub objective: f64,
    /// Variable indices of the final basis, one per surviving constraint
    /// row. Only meaningful when `status == Optimal`; indices at or past
    /// `c.len()` denote artificial variables.
    pub basis: Vec<usize>,
}

enum LoopEnd {
    Optimal,
    Unbounded,
}

struct Tableau {
    /// Constraint rows over structural + artificial columns.
    rows: Vec<Vec<f64>>,
    /// Right-hand side per row (kept nonnegative by the ratio test).
    rhs: Vec<f64>,
    /// Basic variable per row.
    basis: Vec<usize>,
    /// Reduced costs for the current phase objective.
    cost: Vec<f64>,
    /// Current phase objective value.
    objective: f64,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) -> Result<()> {
        let p = self.rows[r][c];
        if p.abs() < PIVOT_BREAKDOWN_FLOOR {
            return Err(Error::NumericalBreakdown { pivot: p });
        }
        let inv = 1.0 / p;
        for v in &mut self.rows[r] {
            *v *= inv;
        }
        self.rows[r][c] = 1.0;
        self.rhs[r] *= inv;

        let pivot_row = self.rows[r].clone();
        let pivot_rhs = self.rhs[r];
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let f = self.rows[i][c];
            if f != 0.0 {
                for (v, pv) in self.rows[i].iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                self.rows[i][c] = 0.0;
                self.rhs[i] -= f * pivot_rhs;
            }
        }
        let f = self.cost[c];
        if f != 0.0 {
            for (v, pv) in self.cost.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            self.cost[c] = 0.0;
            self.objective += f * pivot_rhs;
        }
        self.basis[r] = c;
        Ok(())
    }

    /// Runs simplex pivots until optimality or unboundedness, considering
    /// only columns below `allowed_cols` as entering candidates.
    fn run(&mut self, allowed_cols: usize, label: &str) -> Result<LoopEnd> {
        // Bland's rule precludes cycling; the cap is pure insurance against
        // float pathologies and is far above any realistic pivot count here.
        let max_pivots = 10_000 + 100 * self.rows.len() * allowed_cols;
        let mut pivots = 0;
        loop {
            pivots += 1;
            if pivots > max_pivots {
                return Err(Error::SingularSystem(format!(
                    "simplex exceeded {max_pivots} pivots in {label}"
                )));
            }
            // Bland: lowest-index improving column.
            let enter = (0..allowed_cols).find(|&j| self.cost[j] > COST_TOL);
            let Some(enter) = enter else {
                return Ok(LoopEnd::Optimal);
            };
            // Ratio test; ties broken toward the lowest-index basic variable.
            let mut leave: Option<usize> = None;
            let mut best = f64::INFINITY;
            for i in 0..self.rows.len() {
                let a = self.rows[i][enter];
                if a > PIVOT_CANDIDATE_TOL {
                    let ratio = self.rhs[i] / a;
                    let better = match leave {
                        None => true,
                        Some(l) => ratio < best || (ratio == best && self.basis[i] < self.basis[l]),
                    };
                    if better {
                        leave = Some(i);
                        best = ratio;
                    }
                }
            }
            let Some(leave) = leave else {
                return Ok(LoopEnd::Unbounded);
            };
            self.pivot(leave, enter)?;
            self.maybe_dump(label, enter, leave);
        }
    }

    fn maybe_dump(&self, label: &str, enter: usize, leave_row: usize) {
        if std::env::var_os("SPENDNET_LP_DEBUG").is_none() {
            return;
        }
        eprintln!(
            "[lp:{label}] enter col {enter}, leave row {leave_row}, objective {:.12e}",
            self.objective
        );
        for (row, (rhs, basis)) in self.rows.iter().zip(self.rhs.iter().zip(&self.basis)) {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:9.4}")).collect();
            eprintln!(
                "[lp:{label}]   b{basis:<3} | {} | {rhs:9.4}",
                cells.join(" ")
            );
        }
    }
}

/// Solves an equality-form linear program by two-phase simplex.
///
/// Returns a classified [`LpSolution`]; infeasible and unbounded instances
/// are ordinary outcomes, not errors. [`Error::NumericalBreakdown`] is
/// reserved for pivots below the hard floor, which indicates an instance far
/// outside this solver's intended scale.
pub fn lp_solve(lp: &LinearProgram) -> Result<LpSolution> {
    let m = lp.c.len();
    let k = lp.a.len();
    if m == 0 || k == 0 || lp.b.len() != k || lp.a.iter().any(|row| row.len() != m) {
        return Err(Error::DimensionMismatch(format!(
            "linear program with {m} variables must have matching rows; got {k} rows, {} rhs",
            lp.b.len()
        )));
    }
    let finite = lp.c.iter().chain(lp.b.iter()).chain(lp.a.iter().flatten());
    if finite.into_iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("linear program data".into()));
    }

    let b_scale = lp.b.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let feas_tol = FEAS_TOL * (1.0 + b_scale);

    // Build the phase-1 tableau: structural columns, then one artificial
    // column per row; rows flipped so the right-hand side is nonnegative.
    let total = m + k;
    let mut rows = Vec::with_capacity(k);
    let mut rhs = Vec::with_capacity(k);
    for i in 0..k {
        let flip = if lp.b[i] < 0.0 { -1.0 } else { 1.0 };
        let mut row = vec![0.0; total];
        for j in 0..m {
            row[j] = flip * lp.a[i][j];
        }
        row[m + i] = 1.0;
        rows.push(row);
        rhs.push(flip * lp.b[i]);
    }

    // Phase-1 objective: maximize -(sum of artificials). With the artificial
    // basis, the reduced cost of column j is the column sum over all rows.
    let mut cost = vec![0.0; total];
    for j in 0..m {
        cost[j] = rows.iter().map(|row| row[j]).sum();
    }
    let mut tab = Tableau {
        rows,
        rhs,
        basis: (m..total).collect(),
        cost,
        objective: -lp.b.iter().map(|v| v.abs()).sum::<f64>(),
    };

    match tab.run(total, "phase1")? {
        LoopEnd::Optimal => {}
        LoopEnd::Unbounded => {
            // The phase-1 objective is bounded above by zero; reaching this
            // arm means the tableau lost numerical meaning.
            return Err(Error::SingularSystem(
                "phase 1 of simplex reported an unbounded auxiliary objective".into(),
            ));
        }
    }

    let infeasibility: f64 = tab
        .basis
        .iter()
        .zip(&tab.rhs)
        .filter(|(&b, _)| b >= m)
        .map(|(_, &v)| v)
        .sum();
    if infeasibility > feas_tol {
        return Ok(LpSolution {
            status: LpStatus::Infeasible,
            z: vec![0.0; m],
            objective: 0.0,
            basis: tab.basis,
        });
    }

    // Drive leftover artificials out of the basis; rows that offer no
    // structural pivot are redundant and dropped.
    let mut row = 0;
    while row < tab.rows.len() {
        if tab.basis[row] >= m {
            let pivot_col = (0..m).find(|&j| tab.rows[row][j].abs() > PIVOT_CANDIDATE_TOL);
            match pivot_col {
                Some(j) => {
                    tab.pivot(row, j)?;
                    tab.maybe_dump("driveout", j, row);
                }
                None => {
                    tab.rows.remove(row);
                    tab.rhs.remove(row);
                    tab.basis.remove(row);
                    continue;
                }
            }
        }
        row += 1;
    }

    // Phase 2: rebuild reduced costs for the real objective. Artificial
    // columns stay in the tableau but may never re-enter.
    let mut cost = vec![0.0; total];
    cost[..m].copy_from_slice(&lp.c);
    let mut objective = 0.0;
    for (i, &bv) in tab.basis.iter().enumerate() {
        let cb = if bv < m { lp.c[bv] } else { 0.0 };
        if cb != 0.0 {
            for j in 0..total {
                cost[j] -= cb * tab.rows[i][j];
            }
            objective += cb * tab.rhs[i];
        }
    }
    // Basic columns are unit vectors; zero their reduced costs exactly.
    for &bv in &tab.basis {
        cost[bv] = 0.0;
    }
    tab.cost = cost;
    tab.objective = objective;

    match tab.run(m, "phase2")? {
        LoopEnd::Optimal => {}
        LoopEnd::Unbounded => {
            return Ok(LpSolution {
                status: LpStatus::Unbounded,
                z: vec![0.0; m],
                objective: 0.0,
                basis: tab.basis,
            });
        }
    }

    let mut z = vec![0.0; m];
    for (i, &bv) in tab.basis.iter().enumerate() {
        if bv < m {
            z[bv] = tab.rhs[i];
        }
    }

    // Defensive feasibility audit against the *original* data.
    let worst =
        lp.a.iter()
            .zip(&lp.b)
            .map(|(row, &bi)| (dot(row, &z) - bi).abs())
            .fold(0.0_f64, f64::max);
    if worst > feas_tol {
        return Err(Error::SingularSystem(format!(
            "simplex solution violates constraints by {worst:e}"
        )));
    }

    Ok(LpSolution {
        status: LpStatus::Optimal,
        objective: dot(&lp.c, &z),
        z,
        basis: tab.basis,
    })
}
