//! Command-line front end for the spending-network library.
//!
//! Exit codes: `0` success, `1` invalid input (unreadable files, malformed
//! JSON, failed network validation), `2` numerical failure (reducible
//! network, singular system, undefined price), `64` command-line usage
//! errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use spendnet::error::Error;
use spendnet::experiments::{
    default_alpha_grid, run_sweep, write_curves, write_curves_to_path, Scenario, SweepConfig,
};
use spendnet::format::float17;
use spendnet::netmodel::{validate, SpendingNetwork};
use spendnet::optimizer::{optimize_spending, write_grid_trace_csv};
use spendnet::realprice::{
    default_epsilon, finite_diff_fixed, finite_diff_real_price_for_agent,
    real_price_dynamic_for_agent, real_price_fixed, real_price_fixed_unweighted,
    DynamicSpendingSetup, RealPriceResult,
};
use spendnet::stationary::{
    asymptotic_utility, cesaro_average, iterate_currency, power_stationary, solve_stationary,
    write_trace_csv, StationaryDistribution, DEFAULT_MAX_POWER_STEPS, DEFAULT_TOL,
};

#[derive(Parser)]
#[command(
    name = "spendnet",
    version,
    about = "Analyze spending networks: stationary currency splits, utility-optimal \
             spending, and effective (feedback-adjusted) real prices",
    long_about = None
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    /// Direct linear solve of the balance equations.
    Direct,
    /// Power iteration from the initial holdings.
    Power,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    /// Marginal spending follows the agent's existing proportions.
    Fixed,
    /// Marginal spending goes to one provider and re-normalizes the column.
    Dynamic,
}

#[derive(Subcommand)]
enum Command {
    /// Check a network file against the structural rules and print a report.
    Validate {
        /// Network JSON file (matrices P, U, C and initial holdings x0).
        network: PathBuf,
    },

    /// Compute the stationary currency split of an irreducible network.
    Stationary {
        network: PathBuf,
        /// Solver to use.
        #[arg(long, value_enum, default_value_t = MethodArg::Direct)]
        method: MethodArg,
        /// Residual / convergence tolerance.
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        /// Step cap for the power method.
        #[arg(long, default_value_t = DEFAULT_MAX_POWER_STEPS)]
        max_steps: usize,
        /// Also report the asymptotic per-episode utility of this agent
        /// (1-based).
        #[arg(long)]
        utility: Option<usize>,
    },

    /// Simulate spending episodes x(t+1) = P x(t) from the initial holdings.
    Simulate {
        network: PathBuf,
        /// Number of episodes.
        #[arg(long)]
        steps: usize,
        /// Write the full trajectory as CSV to this path.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Also print the running average over the whole trajectory.
        #[arg(long)]
        average: bool,
    },

    /// Find the spending column maximizing an agent's asymptotic utility.
    Optimize {
        network: PathBuf,
        /// The optimizing agent (1-based).
        #[arg(long)]
        agent: usize,
        /// Number of first-round grid points over the self-share in [0, 1].
        #[arg(long, default_value_t = spendnet::optimizer::DEFAULT_GRID_POINTS)]
        grid: usize,
        /// Local refinement rounds around the incumbent.
        #[arg(long, default_value_t = spendnet::optimizer::DEFAULT_REFINE_ROUNDS)]
        refine: usize,
        /// Write every examined share value as CSV to this path.
        #[arg(long)]
        trace: Option<PathBuf>,
    },

    /// Real price of one provider for one agent: the utility of one unit of
    /// the provider's service divided by the marginal utility per unit of
    /// currency spent there — the effective per-unit price once the network's
    /// feedback is counted, comparable to the label price.
    #[command(name = "real-price")]
    RealPrice {
        network: PathBuf,
        /// The spending agent (1-based).
        #[arg(long)]
        agent: usize,
        /// The provider whose price is computed (1-based).
        #[arg(long)]
        provider: usize,
        /// Bookkeeping convention for the marginal unit of spending.
        #[arg(long, value_enum, default_value_t = ModeArg::Dynamic)]
        mode: ModeArg,
        /// Absolute spending amounts of the agent, comma-separated (dynamic
        /// mode). Defaults to holdings times the agent's current column.
        #[arg(long, alias = "a", value_delimiter = ',')]
        spend: Option<Vec<f64>>,
        /// Fixed mode only: sum utility-per-currency ratios over all
        /// providers instead of weighting them by the spending column.
        #[arg(long)]
        unweighted: bool,
        /// Cross-check against a central finite difference and report both.
        #[arg(long)]
        oracle: bool,
        /// Step size for the finite-difference cross-check.
        #[arg(long)]
        epsilon: Option<f64>,
    },

    /// Sweep the 3-agent reference family over the reallocation parameter
    /// and write the requested curves as CSV.
    Sweep {
        network: PathBuf,
        /// Which curves to compute: fig1 (optimal vs myopic utility),
        /// fig2 (real prices), or fig3 (marginal utilities).
        #[arg(long)]
        scenario: String,
        /// Output CSV path; defaults to standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Grid as lo:step:hi (inclusive); defaults to 0.01:0.01:0.97.
        #[arg(long)]
        alphas: Option<String>,
        /// Absolute spending amounts of agent 1 for fig2/fig3,
        /// comma-separated. Defaults to holdings times the current column.
        #[arg(long, alias = "a", value_delimiter = ',')]
        spend: Option<Vec<f64>>,
    },
}

/// A CLI failure: either a usage problem (exit 64) or a library error
/// (exit 1 for bad input, 2 for numerical trouble), or a failure already
/// reported on stdout that only needs an exit code.
#[derive(Debug)]
enum CliError {
    Usage(String),
    Lib(Error),
    Reported(u8),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

type CliResult = Result<(), CliError>;

fn main() -> ExitCode {
    // Die quietly on SIGPIPE (e.g. `spendnet sweep ... | head`) instead of
    // panicking mid-print; Rust ignores the signal by default.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 64,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(64)
        }
        Err(CliError::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
        Err(CliError::Reported(code)) => ExitCode::from(code),
    }
}

/// Converts a 1-based agent index from the command line to the internal
/// 0-based index, rejecting out-of-range values as usage errors.
fn agent_index(name: &str, idx: usize, n: usize) -> Result<usize, CliError> {
    if idx < 1 || idx > n {
        return Err(CliError::Usage(format!(
            "{name} {idx} out of range: the network has agents 1..={n}"
        )));
    }
    Ok(idx - 1)
}

fn print_vector(name: &str, v: &[f64]) {
    for (i, value) in v.iter().enumerate() {
        println!("{name}_{} = {}", i + 1, float17(*value));
    }
}

fn print_price(label: &str, r: &RealPriceResult) {
    println!("{label}real_price = {}", float17(r.real_price));
    println!("{label}marginal_utility = {}", float17(r.marginal_utility));
    println!("{label}label_price = {}", float17(r.label_price));
    println!("{label}negative_marginal = {}", r.negative_marginal);
}

fn run(command: Command) -> CliResult {
    match command {
        Command::Validate { network } => {
            let net = SpendingNetwork::from_file(&network)?;
            let report = validate(&net);
            println!("{}", report.to_text());
            if report.is_ok() {
                Ok(())
            } else {
                Err(CliError::Reported(1))
            }
        }

        Command::Stationary {
            network,
            method,
            tol,
            max_steps,
            utility,
        } => {
            let net = SpendingNetwork::from_file(&network)?;
            let utility = utility
                .map(|u| agent_index("--utility agent", u, net.n()))
                .transpose()?;
            let dist: StationaryDistribution = match method {
                MethodArg::Direct => solve_stationary(&net, tol)?,
                MethodArg::Power => power_stationary(&net, tol, max_steps)?,
            };
            print_vector("x", &dist.x);
            println!("residual = {}", float17(dist.residual));
            println!("total = {}", float17(dist.total));
            println!(
                "method = {}",
                match dist.method {
                    spendnet::stationary::Method::Direct => "direct",
                    spendnet::stationary::Method::Power => "power",
                }
            );
            if let Some(agent) = utility {
                let report = asymptotic_utility(&net, &dist, agent)?;
                println!("utility_agent = {}", agent + 1);
                println!("utility = {}", float17(report.w));
                print_vector("utility_from", &report.per_provider);
            }
            Ok(())
        }

        Command::Simulate {
            network,
            steps,
            csv,
            average,
        } => {
            let net = SpendingNetwork::from_file(&network)?;
            let trace = iterate_currency(&net, steps);
            if let Some(path) = csv {
                let mut buf = Vec::new();
                write_trace_csv(&trace, &mut buf).map_err(Error::from)?;
                std::fs::write(&path, buf).map_err(Error::from)?;
                println!("trace = {}", path.display());
            }
            println!("steps = {steps}");
            print_vector("x", trace.last().expect("non-empty trace"));
            if average {
                print_vector("avg_x", &cesaro_average(&trace));
            }
            Ok(())
        }

        Command::Optimize {
            network,
            agent,
            grid,
            refine,
            trace,
        } => {
            if grid < 2 {
                return Err(CliError::Usage(format!(
                    "--grid must be at least 2, got {grid}"
                )));
            }
            let net = SpendingNetwork::from_file(&network)?;
            let agent = agent_index("--agent", agent, net.n())?;
            let outcome = optimize_spending(&net, agent, grid, refine)?;
            println!("agent = {}", outcome.agent + 1);
            println!("w_star = {}", float17(outcome.w_star));
            println!(
                "share = {}",
                float17(outcome.x[outcome.agent] / net.total())
            );
            print_vector("p", &outcome.column);
            print_vector("x", &outcome.x);
            println!("result_irreducible = {}", outcome.result_irreducible);
            if let Some(path) = trace {
                let mut buf = Vec::new();
                write_grid_trace_csv(&outcome.grid_trace, &mut buf).map_err(Error::from)?;
                std::fs::write(&path, buf).map_err(Error::from)?;
                println!("trace = {}", path.display());
            }
            Ok(())
        }

        Command::RealPrice {
            network,
            agent,
            provider,
            mode,
            spend,
            unweighted,
            oracle,
            epsilon,
        } => {
            let net = SpendingNetwork::from_file(&network)?;
            let agent = agent_index("--agent", agent, net.n())?;
            let provider = agent_index("--provider", provider, net.n())?;
            if let Some(eps) = epsilon {
                if !(eps > 0.0) || !eps.is_finite() {
                    return Err(CliError::Usage(format!(
                        "--epsilon must be a positive number, got {eps}"
                    )));
                }
            }
            println!("agent = {}", agent + 1);
            println!("provider = {}", provider + 1);
            match mode {
                ModeArg::Fixed => {
                    if spend.is_some() {
                        return Err(CliError::Usage(
                            "--spend only applies to dynamic mode; fixed mode uses the \
                             network's own column"
                                .into(),
                        ));
                    }
                    println!("mode = fixed");
                    let result = if unweighted {
                        real_price_fixed_unweighted(&net, agent, provider)?
                    } else {
                        real_price_fixed(&net, agent, provider)?
                    };
                    print_price("", &result);
                    if oracle {
                        if unweighted {
                            return Err(CliError::Usage(
                                "--oracle does not support --unweighted: the finite \
                                 difference measures the weighted utility"
                                    .into(),
                            ));
                        }
                        let eps = epsilon.unwrap_or(1e-6 * net.total().max(1.0));
                        let fd = finite_diff_fixed(&net, agent, provider, eps)?;
                        println!("oracle_epsilon = {}", float17(eps));
                        print_price("oracle_", &fd);
                        println!(
                            "real_price_abs_diff = {}",
                            float17((result.real_price - fd.real_price).abs())
                        );
                    }
                }
                ModeArg::Dynamic => {
                    if unweighted {
                        return Err(CliError::Usage(
                            "--unweighted only applies to fixed mode".into(),
                        ));
                    }
                    println!("mode = dynamic");
                    let a = spend.unwrap_or_else(|| {
                        let holdings = net.x0()[agent];
                        net.column(agent).iter().map(|p| holdings * p).collect()
                    });
                    let setup = DynamicSpendingSetup::new(a, provider, net.total())?;
                    let result = real_price_dynamic_for_agent(&net, agent, &setup)?;
                    print_price("", &result);
                    print_vector("dx_da", &result.dx_da);
                    if oracle {
                        let eps = epsilon.unwrap_or_else(|| default_epsilon(&setup));
                        let fd = finite_diff_real_price_for_agent(&net, agent, &setup, eps)?;
                        println!("oracle_epsilon = {}", float17(eps));
                        print_price("oracle_", &fd);
                        println!(
                            "real_price_abs_diff = {}",
                            float17((result.real_price - fd.real_price).abs())
                        );
                    }
                }
            }
            Ok(())
        }

        Command::Sweep {
            network,
            scenario,
            out,
            alphas,
            spend,
        } => {
            let scenario: Scenario = scenario
                .parse()
                .map_err(|e: Error| CliError::Usage(e.to_string()))?;
            let alpha_grid = match alphas {
                Some(arg) => parse_range(&arg)?,
                None => default_alpha_grid(),
            };
            let cfg = SweepConfig {
                alpha_grid,
                scenario,
                network,
                spending: spend,
            };
            let rows = run_sweep(&cfg)?;
            match out {
                Some(path) => {
                    write_curves_to_path(&rows, &path)?;
                    eprintln!("wrote {} rows to {}", rows.len(), path.display());
                }
                None => {
                    let stdout = std::io::stdout();
                    let mut lock = stdout.lock();
                    write_curves(&rows, &mut lock).map_err(Error::from)?;
                }
            }
            Ok(())
        }
    }
}

/// Parses an inclusive `lo:step:hi` range argument.
fn parse_range(arg: &str) -> Result<Vec<f64>, CliError> {
    let usage = || {
        CliError::Usage(format!(
            "range '{arg}' must have the form lo:step:hi with lo <= hi and step > 0"
        ))
    };
    let parts: Vec<&str> = arg.split(':').collect();
    if parts.len() != 3 {
        return Err(usage());
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| usage())?;
    let (lo, step, hi) = (nums[0], nums[1], nums[2]);
    if !lo.is_finite() || !step.is_finite() || !hi.is_finite() || step <= 0.0 || lo > hi {
        return Err(usage());
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|i| lo + i as f64 * step).collect())
}

#[cfg(test)]
mod tests {
    use super::parse_range;

    #[test]
    fn range_parsing_is_inclusive() {
        let grid = parse_range("0.01:0.01:0.05").unwrap();
        assert_eq!(grid.len(), 5);
        assert!((grid[0] - 0.01).abs() < 1e-15);
        assert!((grid[4] - 0.05).abs() < 1e-12);
    }

    #[test]
    fn range_with_single_point() {
        let grid = parse_range("0.5:1.0:0.5").unwrap();
        assert_eq!(grid, vec![0.5]);
    }

    #[test]
    fn bad_ranges_are_usage_errors() {
        for arg in ["", "1:2", "a:b:c", "0.5:-0.1:0.9", "0.9:0.1:0.1", "1:0:2"] {
            assert!(parse_range(arg).is_err(), "accepted {arg:?}");
        }
    }
}
