//! Command-line surface: a single executable with subcommands `test`,
//! `robinson`, `simulate`, `quantile`, and `table`.
//!
//! Results go to standard output (JSON for single test runs, CSV for
//! tables, one value per line for simulations); a short human-readable
//! summary goes to standard error unless `--quiet` is given. Exit codes:
//! 0 on success, 2 on validation errors (bad flags, bad input data), 1 on
//! runtime errors.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::cache;
use crate::dgp::{simulate, DgpKind, DgpSpec, TrendSpec, DEFAULT_BURN_IN, DEFAULT_PANELS};
use crate::error::{Error, Result};
use crate::harness::{run_experiment, table_to_csv, McConfig};
use crate::io::read_series;
use crate::kernel::DEFAULT_RESOLUTION;
use crate::nulldist::{Method, DEFAULT_MC_DRAWS};
use crate::robinson::{run_robinson, DEFAULT_QMAX};
use crate::stats::{run_test_with_critical, TestOutcome, Variant};

/// Spectral test of nonstationarity against long-memory alternatives.
#[derive(Debug, Parser)]
#[command(name = "fracspec", version, about)]
pub struct Cli {
    /// Suppress the summary line on standard error.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Test a series (one number per line; '#' comments ignored) for
    /// nonstationarity; emits the outcome as JSON.
    Test(TestArgs),
    /// Run the Wald-type comparison test of the same boundary null; emits
    /// the outcome as JSON.
    Robinson(RobinsonArgs),
    /// Generate a series from one of the bundled processes, one value per
    /// line, with the generator echoed as a '#'-prefixed JSON header.
    Simulate(SimulateArgs),
    /// Print null-distribution quantiles as CSV (columns alpha, s,
    /// quantile, method).
    Quantile(QuantileArgs),
    /// Run a Monte Carlo rejection-rate experiment described by a JSON
    /// config file and write the result table as CSV.
    Table(TableArgs),
}

#[derive(Debug, Args)]
pub struct TestArgs {
    /// Input series file.
    pub file: PathBuf,
    /// Number of low frequencies entering the statistic.
    #[arg(long)]
    pub s: usize,
    /// Significance level.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Statistic normalization.
    #[arg(long, value_enum, default_value_t = VariantArg::Qtilde)]
    pub variant: VariantArg,
    /// Also reject for suspiciously large statistics (two-sided bracket).
    #[arg(long)]
    pub two_sided: bool,
}

#[derive(Debug, Args)]
pub struct RobinsonArgs {
    /// Input series file.
    pub file: PathBuf,
    /// Fit and remove a short autoregression before forming the statistic.
    #[arg(long)]
    pub prewhiten: bool,
    /// Largest autoregression order considered when prewhitening.
    #[arg(long, default_value_t = DEFAULT_QMAX)]
    pub qmax: usize,
    /// Significance level.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Which process to draw from.
    #[arg(long, value_enum)]
    pub kind: KindArg,
    /// Series length.
    #[arg(long)]
    pub n: usize,
    /// Random seed (runs are deterministic given the seed).
    #[arg(long)]
    pub seed: u64,
    /// Warm-up samples discarded before recording (autoregressive paths).
    #[arg(long, default_value_t = DEFAULT_BURN_IN)]
    pub burn_in: usize,
    /// Memory parameter (kinds `farima` and `break`).
    #[arg(long)]
    pub d: Option<f64>,
    /// AR(1) coefficient (kind `farima`).
    #[arg(long)]
    pub phi: Option<f64>,
    /// First Beta shape parameter (kind `aggregated`).
    #[arg(long)]
    pub a: Option<f64>,
    /// Second Beta shape parameter (kind `aggregated`).
    #[arg(long)]
    pub b: Option<f64>,
    /// Number of aggregated panels (kind `aggregated`).
    #[arg(long)]
    pub panels: Option<usize>,
    /// Off-regime AR coefficient (kind `renewal`).
    #[arg(long)]
    pub c: Option<f64>,
    /// Probability of the unit-root regime (kind `renewal`).
    #[arg(long)]
    pub p: Option<f64>,
    /// Regime-duration tail exponent (kind `renewal`).
    #[arg(long)]
    pub exponent: Option<f64>,
    /// Mean-shift size applied to the second half (kind `break`).
    #[arg(long)]
    pub delta_break: Option<f64>,
    /// Trend scale exponent: adds `n^beta g(t/n)` (kind `break`).
    #[arg(long, requires = "trend_samples")]
    pub trend_beta: Option<f64>,
    /// Comma-separated samples of the trend shape `g` on [0, 1]
    /// (kind `break`).
    #[arg(long, value_delimiter = ',', requires = "trend_beta")]
    pub trend_samples: Option<Vec<f64>>,
    /// Output file (standard output when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct QuantileArgs {
    /// Frequency counts, comma-separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub s: Vec<usize>,
    /// Tail probabilities, comma-separated.
    #[arg(long, value_delimiter = ',', default_values_t = [0.01, 0.05, 0.10])]
    pub alpha: Vec<f64>,
    /// How quantiles are computed.
    #[arg(long, value_enum, default_value_t = MethodArg::CfInversion)]
    pub method: MethodArg,
    /// Monte Carlo sample size (method `monte-carlo`).
    #[arg(long, default_value_t = DEFAULT_MC_DRAWS)]
    pub mc_draws: usize,
    /// Monte Carlo seed (method `monte-carlo`).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Quadrature resolution for the covariance kernel.
    #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
    pub resolution: usize,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    /// Experiment description (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Destination CSV file.
    #[arg(long)]
    pub out: PathBuf,
    /// Override the worker count from the config.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Qtilde,
    Q,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Qtilde => Variant::Qtilde,
            VariantArg::Q => Variant::Q,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Farima,
    Aggregated,
    Renewal,
    Break,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    CfInversion,
    MonteCarlo,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::CfInversion => Method::CfInversion,
            MethodArg::MonteCarlo => Method::MonteCarlo,
        }
    }
}

/// Runs a parsed invocation and translates the outcome into an exit code
/// (0 success, 2 validation error, 1 runtime error).
pub fn dispatch(cli: Cli) -> i32 {
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                2
            } else {
                1
            }
        }
    }
}

#[derive(Debug, Serialize)]
struct TestReport {
    n: usize,
    #[serde(flatten)]
    outcome: TestOutcome,
}

fn run(cli: Cli) -> Result<()> {
    let quiet = cli.quiet;
    match cli.command {
        Command::Test(args) => {
            let series = read_series(&args.file)?;
            let crit = cache::critical_values_cached(
                &cache::cache_dir(),
                args.s,
                args.alpha,
                args.two_sided,
                DEFAULT_RESOLUTION,
            )?;
            let outcome =
                run_test_with_critical(&series, args.s, args.alpha, args.variant.into(), crit)?;
            let report = TestReport {
                n: series.len(),
                outcome,
            };
            println!("{}", serde_json::to_string_pretty(&report)?);
            if !quiet {
                let o = &report.outcome;
                eprintln!(
                    "{} = {:.6} against critical {:.6}{} (s = {}, alpha = {}): {}",
                    o.variant.as_str(),
                    o.statistic,
                    o.critical_low,
                    o.critical_high
                        .map(|h| format!(" / {h:.6}"))
                        .unwrap_or_default(),
                    o.s,
                    o.alpha,
                    o.decision.as_str()
                );
            }
            Ok(())
        }
        Command::Robinson(args) => {
            let series = read_series(&args.file)?;
            let outcome = run_robinson(&series, args.prewhiten, args.qmax, args.alpha)?;
            println!("{}", serde_json::to_string_pretty(&outcome)?);
            if !quiet {
                eprintln!(
                    "r-tilde = {:.6} against critical {:.6} (alpha = {}{}): {}",
                    outcome.stat.r_tilde,
                    outcome.critical,
                    outcome.alpha,
                    if outcome.stat.prewhitened {
                        format!(", prewhitened at order {}", outcome.stat.ar_order)
                    } else {
                        String::new()
                    },
                    outcome.decision.as_str()
                );
            }
            Ok(())
        }
        Command::Simulate(args) => run_simulate(args, quiet),
        Command::Quantile(args) => {
            let dir = cache::cache_dir();
            let method: Method = args.method.into();
            let mut stdout = std::io::stdout().lock();
            let say = |e: std::io::Error| Error::io("stdout", e);
            writeln!(stdout, "alpha,s,quantile,method").map_err(say)?;
            for &s in &args.s {
                for &alpha in &args.alpha {
                    let q = cache::quantile_cached(
                        &dir,
                        s,
                        alpha,
                        args.resolution,
                        method,
                        args.mc_draws,
                        args.seed,
                    )?;
                    writeln!(stdout, "{alpha},{s},{q},{}", method.as_str()).map_err(say)?;
                }
            }
            Ok(())
        }
        Command::Table(args) => {
            let text = std::fs::read_to_string(&args.config)
                .map_err(|e| Error::io(&args.config, e))?;
            let mut config: McConfig = serde_json::from_str(&text)
                .map_err(|e| Error::Parse(format!("{}: {e}", args.config.display())))?;
            if let Some(workers) = args.workers {
                config.workers = workers;
            }
            let table = run_experiment(&config)?;
            table_to_csv(&table, &args.out)?;
            if !quiet {
                let partial = table.rows.iter().filter(|r| r.partial).count();
                eprintln!(
                    "wrote {} rows to {}{}",
                    table.rows.len(),
                    args.out.display(),
                    if partial > 0 {
                        format!(" ({partial} budget-limited)")
                    } else {
                        String::new()
                    }
                );
            }
            Ok(())
        }
    }
}

fn run_simulate(args: SimulateArgs, quiet: bool) -> Result<()> {
    let kind = build_kind(&args)?;
    let spec = DgpSpec {
        kind,
        n: args.n,
        seed: args.seed,
        burn_in: args.burn_in,
    };
    let series = simulate(&spec)?;
    let header = format!("# {}", serde_json::to_string(&spec)?);
    match &args.out {
        Some(path) => {
            let mut text = String::with_capacity(series.len() * 24);
            text.push_str(&header);
            text.push('\n');
            for v in series.values() {
                text.push_str(&v.to_string());
                text.push('\n');
            }
            std::fs::write(path, text).map_err(|e| Error::io(path, e))?;
            if !quiet {
                eprintln!("wrote {} values to {}", series.len(), path.display());
            }
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            let say = |e: std::io::Error| Error::io("stdout", e);
            writeln!(stdout, "{header}").map_err(say)?;
            for v in series.values() {
                writeln!(stdout, "{v}").map_err(say)?;
            }
        }
    }
    Ok(())
}

/// Assembles the generator from per-kind flags, rejecting flags that do not
/// belong to the chosen kind so typos cannot silently change the draw.
fn build_kind(args: &SimulateArgs) -> Result<DgpKind> {
    let want = |name: &str, v: Option<f64>| {
        v.ok_or_else(|| Error::InvalidParameter(format!("kind requires --{name}")))
    };
    let forbid = |names: &[(&str, bool)]| -> Result<()> {
        for (name, present) in names {
            if *present {
                return Err(Error::InvalidParameter(format!(
                    "--{name} does not apply to this kind"
                )));
            }
        }
        Ok(())
    };
    match args.kind {
        KindArg::Farima => {
            forbid(&[
                ("a", args.a.is_some()),
                ("b", args.b.is_some()),
                ("panels", args.panels.is_some()),
                ("c", args.c.is_some()),
                ("p", args.p.is_some()),
                ("exponent", args.exponent.is_some()),
                ("delta-break", args.delta_break.is_some()),
                ("trend-beta", args.trend_beta.is_some()),
            ])?;
            Ok(DgpKind::Farima {
                d: want("d", args.d)?,
                phi: args.phi.unwrap_or(0.0),
            })
        }
        KindArg::Aggregated => {
            forbid(&[
                ("d", args.d.is_some()),
                ("phi", args.phi.is_some()),
                ("c", args.c.is_some()),
                ("p", args.p.is_some()),
                ("exponent", args.exponent.is_some()),
                ("delta-break", args.delta_break.is_some()),
                ("trend-beta", args.trend_beta.is_some()),
            ])?;
            Ok(DgpKind::Aggregated {
                a: want("a", args.a)?,
                b: want("b", args.b)?,
                panels: args.panels.unwrap_or(DEFAULT_PANELS),
            })
        }
        KindArg::Renewal => {
            forbid(&[
                ("d", args.d.is_some()),
                ("phi", args.phi.is_some()),
                ("a", args.a.is_some()),
                ("b", args.b.is_some()),
                ("panels", args.panels.is_some()),
                ("delta-break", args.delta_break.is_some()),
                ("trend-beta", args.trend_beta.is_some()),
            ])?;
            Ok(DgpKind::Renewal {
                c: want("c", args.c)?,
                p: want("p", args.p)?,
                exponent: want("exponent", args.exponent)?,
            })
        }
        KindArg::Break => {
            forbid(&[
                ("phi", args.phi.is_some()),
                ("a", args.a.is_some()),
                ("b", args.b.is_some()),
                ("panels", args.panels.is_some()),
                ("c", args.c.is_some()),
                ("p", args.p.is_some()),
                ("exponent", args.exponent.is_some()),
            ])?;
            let trend = match (args.trend_beta, &args.trend_samples) {
                (Some(beta), Some(samples)) => Some(TrendSpec {
                    samples: samples.clone(),
                    beta,
                }),
                (None, None) => None,
                // clap's `requires` links make this unreachable, but keep a
                // real error in case the struct is built programmatically.
                _ => {
                    return Err(Error::InvalidParameter(
                        "--trend-beta and --trend-samples must be given together".into(),
                    ))
                }
            };
            Ok(DgpKind::Break {
                d: want("d", args.d)?,
                delta_break: want("delta-break", args.delta_break)?,
                trend,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn kind_flags_are_cross_checked() {
        let parse = |line: &str| {
            Cli::try_parse_from(line.split_whitespace())
                .map_err(|e| Error::InvalidParameter(e.to_string()))
        };
        let cli =
            parse("fracspec simulate --kind farima --d 0.3 --n 100 --seed 1").unwrap();
        let Command::Simulate(args) = cli.command else {
            panic!("expected simulate");
        };
        assert_eq!(
            build_kind(&args).unwrap(),
            DgpKind::Farima { d: 0.3, phi: 0.0 }
        );

        let cli = parse("fracspec simulate --kind renewal --d 0.3 --n 100 --seed 1").unwrap();
        let Command::Simulate(args) = cli.command else {
            panic!("expected simulate");
        };
        let err = build_kind(&args).unwrap_err();
        assert!(err.to_string().contains("--d"), "{err}");

        let cli = parse(
            "fracspec simulate --kind break --d 0.2 --delta-break 0 \
             --trend-beta 0.4 --trend-samples 0,1,0.5 --n 100 --seed 1",
        )
        .unwrap();
        let Command::Simulate(args) = cli.command else {
            panic!("expected simulate");
        };
        match build_kind(&args).unwrap() {
            DgpKind::Break {
                trend: Some(t), ..
            } => assert_eq!(t.samples, vec![0.0, 1.0, 0.5]),
            other => panic!("unexpected kind {other:?}"),
        }
    }

    #[test]
    fn trend_flags_must_come_together() {
        let err = Cli::try_parse_from(
            "fracspec simulate --kind break --d 0.2 --delta-break 1 --trend-beta 0.4 --n 100 --seed 1"
                .split_whitespace(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("trend-samples"), "{err}");
    }
}
