//! Shared helpers for the integration suites: example paths, seeded random
//! problem generators, and independent brute-force oracles.

// Each integration test target compiles this module separately and uses a
// different subset of the helpers.
#![allow(dead_code)]

use std::path::PathBuf;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use spendnet::lp::LinearProgram;
use spendnet::netmodel::SpendingNetwork;
use spendnet::realprice::DynamicSpendingSetup;

/// Path of a network file shipped with the crate.
pub fn example_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("examples")
        .join(name)
}

/// Deterministic RNG for reproducible property suites.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// The 3-agent reference network with the spender columns for `alpha`
/// installed (column 2 = (alpha, 1 - alpha - 0.02, 0.02), column 3 fixed).
pub fn alpha_net(base: &SpendingNetwork, alpha: f64) -> SpendingNetwork {
    base.with_column(1, &[alpha, 1.0 - alpha - 0.02, 0.02])
        .unwrap()
        .with_column(2, &[0.5, 0.01, 0.49])
        .unwrap()
}

/// Random network whose spending matrix is strictly positive (hence
/// irreducible and aperiodic, with a per-step contraction factor bounded
/// away from 1, so long simulations converge well before the burn-in used
/// by the suites).
pub fn random_dense_net(rng: &mut ChaCha8Rng, n: usize) -> SpendingNetwork {
    let mut p = vec![vec![0.0; n]; n];
    for j in 0..n {
        let mut col: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
        let s: f64 = col.iter().sum();
        for v in &mut col {
            *v /= s;
        }
        for i in 0..n {
            p[i][j] = col[i];
        }
    }
    let u: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { 0.0 } else { rng.gen_range(0.1..1.0) })
                .collect()
        })
        .collect();
    let c: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..n).map(|_| rng.gen_range(0.2..5.0)).collect())
        .collect();
    let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..2.0)).collect();
    SpendingNetwork::new(p, u, c, x0).unwrap()
}

/// Random column-stochastic matrix with roughly `density` of the entries
/// positive (at least one per column), for connectivity property suites.
pub fn random_sparse_stochastic(rng: &mut ChaCha8Rng, n: usize, density: f64) -> Vec<Vec<f64>> {
    let mut p = vec![vec![0.0; n]; n];
    for j in 0..n {
        let mut col = vec![0.0; n];
        let mut any = false;
        for v in col.iter_mut() {
            if rng.gen_bool(density) {
                *v = rng.gen_range(0.1..1.0);
                any = true;
            }
        }
        if !any {
            col[rng.gen_range(0..n)] = 1.0;
        }
        let s: f64 = col.iter().sum();
        for (i, v) in col.iter().enumerate() {
            p[i][j] = v / s;
        }
    }
    p
}

/// Random strictly positive spending column (sums to 1). Installing it keeps
/// a dense network irreducible.
pub fn random_positive_column(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut col: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let s: f64 = col.iter().sum();
    for v in &mut col {
        *v /= s;
    }
    col
}

/// Random dynamic-spending scenario: a dense network whose first column is
/// rebuilt from random positive spending amounts, plus a setup targeting a
/// random provider.
pub fn random_dynamic_scenario(
    rng: &mut ChaCha8Rng,
    n: usize,
) -> (SpendingNetwork, DynamicSpendingSetup) {
    let base = random_dense_net(rng, n);
    let a: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let s: f64 = a.iter().sum();
    let column: Vec<f64> = a.iter().map(|v| v / s).collect();
    let net = base.with_column(0, &column).unwrap();
    let target = rng.gen_range(0..n);
    let setup = DynamicSpendingSetup::new(a, target, net.total()).unwrap();
    (net, setup)
}

/// Plain matrix-power iteration, independent of the library's simulation
/// code: returns the full trajectory (steps + 1 states).
pub fn iterate_by_hand(p: &[Vec<f64>], x0: &[f64], steps: usize) -> Vec<Vec<f64>> {
    let n = x0.len();
    let mut trace = Vec::with_capacity(steps + 1);
    trace.push(x0.to_vec());
    for _ in 0..steps {
        let prev = trace.last().unwrap();
        let mut next = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                next[i] += p[i][j] * prev[j];
            }
        }
        trace.push(next);
    }
    trace
}

/// Componentwise mean of the last `window` states of a trajectory. The
/// suites pick `window` as a multiple of every possible period (lcm of
/// 1..=n) so persistent oscillation cancels, and leave the rest of the
/// trajectory as burn-in for the transient.
pub fn tail_average(trace: &[Vec<f64>], window: usize) -> Vec<f64> {
    assert!(window >= 1 && window <= trace.len());
    let n = trace[0].len();
    let mut acc = vec![0.0; n];
    for state in &trace[trace.len() - window..] {
        for (a, v) in acc.iter_mut().zip(state) {
            *a += v;
        }
    }
    for a in &mut acc {
        *a /= window as f64;
    }
    acc
}

/// Largest multiple of 840 (= lcm of 1..=8) that fits in half the trace,
/// falling back to half the trace for short runs.
pub fn oscillation_window(trace_len: usize) -> usize {
    let half = trace_len / 2;
    let aligned = half - half % 840;
    if aligned >= 840 {
        aligned
    } else {
        half.max(1)
    }
}

pub fn linf_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Random equality-form linear program `max c.x, A x = b, x >= 0` that is
/// feasible and bounded by construction: `b` is generated from a known
/// nonnegative point and a sum row caps the simplex.
pub fn random_bounded_lp(rng: &mut ChaCha8Rng) -> LinearProgram {
    let rows = rng.gen_range(1..=4);
    let cols = rng.gen_range(rows + 1..=8);
    let mut a: Vec<Vec<f64>> = (0..rows)
        .map(|_| (0..cols).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let mut feas: Vec<f64> = (0..cols)
        .map(|_| {
            if rng.gen_bool(0.3) {
                0.0
            } else {
                rng.gen_range(0.0..1.0)
            }
        })
        .collect();
    // Keep the witness point away from the origin so the sum row below is
    // never trivial; the adjustment keeps it nonnegative.
    let mass: f64 = feas.iter().sum();
    if mass < 0.5 {
        feas[0] += 0.5 - mass;
    }
    let mut b: Vec<f64> = a
        .iter()
        .map(|row| row.iter().zip(&feas).map(|(r, x)| r * x).sum())
        .collect();
    a.push(vec![1.0; cols]);
    b.push(feas.iter().sum());
    let c: Vec<f64> = (0..cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
    LinearProgram { c, a, b }
}

/// Exhaustive basic-feasible-solution enumeration: tries every square basis,
/// solves it by elimination, and keeps the best feasible objective. This is
/// the textbook definition of the simplex optimum, computed without any
/// pivoting logic shared with the library.
pub fn best_basic_feasible_objective(lp: &LinearProgram) -> Option<f64> {
    let m = lp.a.len();
    let n = lp.c.len();
    if m > n {
        return None;
    }
    let mut best: Option<f64> = None;
    let mut basis: Vec<usize> = (0..m).collect();
    loop {
        if let Some(x_b) = solve_square(
            &basis.iter().map(|&j| column(&lp.a, j)).collect::<Vec<_>>(),
            &lp.b,
        ) {
            if x_b.iter().all(|&v| v >= -1e-9) {
                let z: f64 = basis.iter().zip(&x_b).map(|(&j, &v)| lp.c[j] * v).sum();
                best = Some(best.map_or(z, |b: f64| b.max(z)));
            }
        }
        // Advance to the next combination of column indices.
        let mut i = m;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if basis[i] < n - (m - i) {
                basis[i] += 1;
                for k in i + 1..m {
                    basis[k] = basis[k - 1] + 1;
                }
                break;
            }
        }
    }
}

fn column(a: &[Vec<f64>], j: usize) -> Vec<f64> {
    a.iter().map(|row| row[j]).collect()
}

/// Gaussian elimination on a square system given as columns; returns `None`
/// when the basis matrix is singular.
fn solve_square(cols: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let m = b.len();
    let mut a: Vec<Vec<f64>> = (0..m)
        .map(|i| (0..m).map(|j| cols[j][i]).collect())
        .collect();
    let mut rhs = b.to_vec();
    let scale = a
        .iter()
        .flatten()
        .fold(0.0_f64, |acc, v| acc.max(v.abs()))
        .max(1.0);
    for k in 0..m {
        let pivot = (k..m).max_by(|&r, &s| {
            a[r][k]
                .abs()
                .partial_cmp(&a[s][k].abs())
                .expect("finite entries")
        })?;
        if a[pivot][k].abs() < 1e-10 * scale {
            return None;
        }
        a.swap(k, pivot);
        rhs.swap(k, pivot);
        for r in k + 1..m {
            let f = a[r][k] / a[k][k];
            for c in k..m {
                a[r][c] -= f * a[k][c];
            }
            rhs[r] -= f * rhs[k];
        }
    }
    let mut x = vec![0.0; m];
    for k in (0..m).rev() {
        let mut v = rhs[k];
        for c in k + 1..m {
            v -= a[k][c] * x[c];
        }
        x[k] = v / a[k][k];
    }
    Some(x)
}
