//! Monte Carlo experiment runner: sweeps a grid of generator configurations,
//! sample sizes, frequency counts, and memory parameters; applies the
//! requested tests to seeded replications; and tallies rejection rates into
//! a table with binomial standard errors.
//!
//! Results are a pure function of `(config, master_seed)`: every replication
//! draws from a stream derived as `derive_seed(derive_seed(master, cell),
//! rep)`, and aggregation is order-independent counting, so worker count
//! cannot change any number.

use std::path::Path;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::ContinuousCDF;

use crate::dgp::{simulate, DgpKind, DgpSpec, DEFAULT_BURN_IN};
use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::robinson::{robinson_statistic, DEFAULT_QMAX};
use crate::stats::{cached_critical_values, run_test_with_critical, CriticalValues, Series, Variant};

/// Smallest replication count accepted for a reported table.
pub const MIN_REPLICATIONS: usize = 100;

/// Which decision procedures to tally.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestKind {
    Q,
    Qtilde,
    Robinson,
    RobinsonPrewhitened,
}

impl TestKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TestKind::Q => "q",
            TestKind::Qtilde => "qtilde",
            TestKind::Robinson => "robinson",
            TestKind::RobinsonPrewhitened => "robinson-prewhitened",
        }
    }

    fn is_spectral_q(self) -> bool {
        matches!(self, TestKind::Q | TestKind::Qtilde)
    }
}

/// A generator template: the process kind plus warm-up; sample size and
/// seed are filled in per grid cell and replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpTemplate {
    #[serde(flatten)]
    pub kind: DgpKind,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
}

fn default_burn_in() -> usize {
    DEFAULT_BURN_IN
}

/// Full experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub dgp_grid: Vec<DgpTemplate>,
    /// Memory parameters swept for kinds with a free `d`; ignored (the
    /// implied value is used) for kinds whose memory is determined by
    /// their other parameters.
    #[serde(default)]
    pub d_grid: Vec<f64>,
    pub n_grid: Vec<usize>,
    pub s_grid: Vec<usize>,
    pub tests: Vec<TestKind>,
    pub replications: usize,
    pub alpha: f64,
    pub master_seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    /// Optional wall-clock budget per grid cell; a cell that exceeds it is
    /// reported from the replications completed so far and marked partial.
    #[serde(default)]
    pub budget_seconds: Option<f64>,
}

fn default_workers() -> usize {
    1
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dgp_grid.is_empty() || self.n_grid.is_empty() || self.s_grid.is_empty() {
            return Err(Error::InvalidParameter(
                "generator, n, and s grids must be nonempty".into(),
            ));
        }
        if self.tests.is_empty() {
            return Err(Error::InvalidParameter(
                "at least one test must be requested".into(),
            ));
        }
        if self.replications < MIN_REPLICATIONS {
            return Err(Error::InvalidParameter(format!(
                "reported tables need at least {MIN_REPLICATIONS} replications, got {}",
                self.replications
            )));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "significance level must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if self.workers == 0 {
            return Err(Error::InvalidParameter("worker count must be positive".into()));
        }
        if self.dgp_grid.iter().any(|t| t.kind.has_free_d()) && self.d_grid.is_empty() {
            return Err(Error::InvalidParameter(
                "a generator with a free memory parameter needs a nonempty d grid".into(),
            ));
        }
        let robinson_requested = self
            .tests
            .iter()
            .any(|t| !t.is_spectral_q());
        for &n in &self.n_grid {
            if n < 16 {
                return Err(Error::InvalidParameter(format!(
                    "sample size must be at least 16, got {n}"
                )));
            }
            if robinson_requested && n < 64 {
                return Err(Error::InvalidParameter(format!(
                    "the boundary-null statistic needs n >= 64, got {n}"
                )));
            }
            for &s in &self.s_grid {
                if s == 0 || 2 * s > n - 1 {
                    return Err(Error::InvalidParameter(format!(
                        "frequency count s = {s} is out of range for n = {n}"
                    )));
                }
            }
        }
        for template in &self.dgp_grid {
            // Validate each kind once with placeholder size/seed, and every
            // free-d value against its domain.
            let ds: Vec<f64> = if template.kind.has_free_d() {
                self.d_grid.clone()
            } else {
                vec![template.kind.implied_d()]
            };
            for d in ds {
                DgpSpec {
                    kind: template.kind.with_d(d),
                    n: *self.n_grid.iter().max().expect("nonempty"),
                    seed: 0,
                    burn_in: template.burn_in,
                }
                .validate()?;
            }
        }
        Ok(())
    }
}

/// One tallied table row: a grid cell and test with its rejection rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McRow {
    /// Generator kind name.
    pub dgp: String,
    /// Kind parameters other than the swept memory value, as `key=value`
    /// pairs joined by ';'.
    pub kind_params: String,
    pub n: usize,
    pub d: f64,
    pub s: usize,
    pub test: TestKind,
    pub alpha: f64,
    /// Rejections divided by valid replications (anomalies excluded).
    pub rate: f64,
    /// Binomial standard error `sqrt(rate (1 - rate) / valid)`.
    pub se: f64,
    /// Valid (non-anomalous) replications behind the rate.
    pub reps: usize,
    /// Replications that raised a degenerate-series condition; counted,
    /// not crashed.
    pub anomalies: usize,
    /// True when the cell hit its runtime budget before finishing.
    pub partial: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct McTable {
    pub rows: Vec<McRow>,
}

/// Parameter summary for the CSV `kind-params` column: everything that
/// identifies the generator besides the swept memory parameter.
fn kind_params(kind: &DgpKind) -> String {
    match kind {
        DgpKind::Farima { phi, .. } => format!("phi={phi}"),
        DgpKind::Aggregated { a, b, panels } => format!("a={a};b={b};panels={panels}"),
        DgpKind::Renewal { c, p, exponent } => format!("c={c};p={p};exponent={exponent}"),
        DgpKind::Break {
            delta_break, trend, ..
        } => match trend {
            None => format!("delta={delta_break}"),
            Some(t) => format!("delta={delta_break};trend-beta={};trend-samples={}", t.beta, t.samples.len()),
        },
    }
}

#[derive(Clone, Copy)]
enum RepOutcome {
    Rejected,
    Retained,
    Anomalous,
}

struct Cell {
    kind: DgpKind,
    burn_in: usize,
    n: usize,
    s: usize,
    d: f64,
}

fn enumerate_cells(cfg: &McConfig) -> Vec<Cell> {
    let mut cells = Vec::new();
    for template in &cfg.dgp_grid {
        let ds: Vec<f64> = if template.kind.has_free_d() {
            cfg.d_grid.clone()
        } else {
            vec![template.kind.implied_d()]
        };
        for &n in &cfg.n_grid {
            for &s in &cfg.s_grid {
                for &d in &ds {
                    cells.push(Cell {
                        kind: template.kind.with_d(d),
                        burn_in: template.burn_in,
                        n,
                        s,
                        d,
                    });
                }
            }
        }
    }
    cells
}

/// Applies one test to one simulated series. Degenerate-series conditions
/// are tallied as anomalies; any other failure aborts the experiment.
fn evaluate_one(
    test: TestKind,
    x: &Series,
    s: usize,
    alpha: f64,
    crit_q: Option<CriticalValues>,
    crit_normal: f64,
) -> Result<RepOutcome> {
    let evaluated = match test {
        TestKind::Q | TestKind::Qtilde => {
            let variant = if test == TestKind::Q {
                Variant::Q
            } else {
                Variant::Qtilde
            };
            let crit = crit_q.expect("critical values computed for spectral tests");
            run_test_with_critical(x, s, alpha, variant, crit)
                .map(|o| o.decision.is_rejection())
        }
        TestKind::Robinson | TestKind::RobinsonPrewhitened => {
            let prewhiten = test == TestKind::RobinsonPrewhitened;
            robinson_statistic(x, prewhiten, DEFAULT_QMAX).map(|st| st.r_tilde < crit_normal)
        }
    };
    match evaluated {
        Ok(true) => Ok(RepOutcome::Rejected),
        Ok(false) => Ok(RepOutcome::Retained),
        Err(Error::DegenerateSeries(_)) => Ok(RepOutcome::Anomalous),
        Err(e) => Err(e),
    }
}

fn run_replication(
    cell: &Cell,
    seed: u64,
    tests: &[TestKind],
    alpha: f64,
    crit_q: Option<CriticalValues>,
    crit_normal: f64,
) -> Result<Vec<RepOutcome>> {
    let x = simulate(&DgpSpec {
        kind: cell.kind.clone(),
        n: cell.n,
        seed,
        burn_in: cell.burn_in,
    })?;
    tests
        .iter()
        .map(|&t| evaluate_one(t, &x, cell.s, alpha, crit_q, crit_normal))
        .collect()
}

/// Runs the whole grid. Within a cell, replications are distributed over a
/// worker pool sized by `cfg.workers`; each replication is pure given its
/// derived seed, and tallying is plain counting, so the output is identical
/// for any worker count.
pub fn run_experiment(cfg: &McConfig) -> Result<McTable> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Numerical(format!("could not build worker pool: {e}")))?;
    let needs_q = cfg.tests.iter().any(|t| t.is_spectral_q());
    let normal = statrs::distribution::Normal::new(0.0, 1.0).expect("unit normal");
    let crit_normal = normal.inverse_cdf(cfg.alpha);
    let cells = enumerate_cells(cfg);
    let mut rows = Vec::with_capacity(cells.len() * cfg.tests.len());
    let batch = (cfg.workers * 8).max(32);
    for (cell_idx, cell) in cells.iter().enumerate() {
        let cell_seed = derive_seed(cfg.master_seed, cell_idx as u64);
        let crit_q = if needs_q {
            Some(cached_critical_values(cell.s, cfg.alpha, false)?)
        } else {
            None
        };
        let deadline = cfg
            .budget_seconds
            .map(|secs| Instant::now() + Duration::from_secs_f64(secs));
        let mut tallies = vec![(0usize, 0usize, 0usize); cfg.tests.len()]; // (rej, retained, anomalies)
        let mut completed = 0usize;
        let mut partial = false;
        while completed < cfg.replications {
            let upto = (completed + batch).min(cfg.replications);
            let batch_outcomes: Result<Vec<Vec<RepOutcome>>> = pool.install(|| {
                (completed..upto)
                    .into_par_iter()
                    .map(|rep| {
                        run_replication(
                            cell,
                            derive_seed(cell_seed, rep as u64),
                            &cfg.tests,
                            cfg.alpha,
                            crit_q,
                            crit_normal,
                        )
                    })
                    .collect()
            });
            for outcomes in batch_outcomes? {
                for (slot, outcome) in tallies.iter_mut().zip(outcomes) {
                    match outcome {
                        RepOutcome::Rejected => slot.0 += 1,
                        RepOutcome::Retained => slot.1 += 1,
                        RepOutcome::Anomalous => slot.2 += 1,
                    }
                }
            }
            completed = upto;
            if completed < cfg.replications
                && deadline.is_some_and(|dl| Instant::now() >= dl)
            {
                partial = true;
                break;
            }
        }
        for (&test, &(rejected, retained, anomalies)) in cfg.tests.iter().zip(&tallies) {
            debug_assert_eq!(rejected + retained + anomalies, completed);
            let valid = rejected + retained;
            let rate = if valid == 0 {
                0.0
            } else {
                rejected as f64 / valid as f64
            };
            let se = if valid == 0 {
                0.0
            } else {
                (rate * (1.0 - rate) / valid as f64).sqrt()
            };
            rows.push(McRow {
                dgp: cell.kind.name().to_string(),
                kind_params: kind_params(&cell.kind),
                n: cell.n,
                d: cell.d,
                s: cell.s,
                test,
                alpha: cfg.alpha,
                rate,
                se,
                reps: valid,
                anomalies,
                partial,
            });
        }
    }
    Ok(McTable { rows })
}

/// Writes the table as CSV with a fixed column order
/// (`dgp,kind-params,n,d,s,test,alpha,rate,se,reps`), UTF-8 and `\n` line
/// endings, rates and standard errors at six decimals.
pub fn table_to_csv(table: &McTable, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_error(e, path))?;
    writer
        .write_record(["dgp", "kind-params", "n", "d", "s", "test", "alpha", "rate", "se", "reps"])
        .map_err(|e| csv_error(e, path))?;
    for row in &table.rows {
        writer
            .write_record([
                row.dgp.as_str(),
                row.kind_params.as_str(),
                &row.n.to_string(),
                &row.d.to_string(),
                &row.s.to_string(),
                row.test.as_str(),
                &row.alpha.to_string(),
                &format!("{:.6}", row.rate),
                &format!("{:.6}", row.se),
                &row.reps.to_string(),
            ])
            .map_err(|e| csv_error(e, path))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn csv_error(e: csv::Error, path: &Path) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse(format!("csv write failed: {other:?}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn farima_template(phi: f64) -> DgpTemplate {
        DgpTemplate {
            kind: DgpKind::Farima { d: 0.0, phi },
            burn_in: DEFAULT_BURN_IN,
        }
    }

    fn small_config() -> McConfig {
        McConfig {
            dgp_grid: vec![farima_template(0.0)],
            d_grid: vec![0.0, 0.5],
            n_grid: vec![128],
            s_grid: vec![2],
            tests: vec![TestKind::Q],
            replications: 100,
            alpha: 0.05,
            master_seed: 7,
            workers: 1,
            budget_seconds: None,
        }
    }

    #[test]
    fn validation_rejects_bad_configs() {
        let base = small_config();
        let mut zero_reps = base.clone();
        zero_reps.replications = 0;
        assert!(zero_reps.validate().is_err());
        let mut few_reps = base.clone();
        few_reps.replications = 99;
        assert!(few_reps.validate().is_err());
        let mut no_tests = base.clone();
        no_tests.tests.clear();
        assert!(no_tests.validate().is_err());
        let mut empty_d = base.clone();
        empty_d.d_grid.clear();
        assert!(empty_d.validate().is_err());
        let mut big_s = base.clone();
        big_s.s_grid = vec![64];
        assert!(big_s.validate().is_err());
        let mut small_n_robinson = base.clone();
        small_n_robinson.n_grid = vec![32];
        small_n_robinson.s_grid = vec![1];
        small_n_robinson.tests = vec![TestKind::Robinson];
        assert!(small_n_robinson.validate().is_err());
        let mut zero_workers = base.clone();
        zero_workers.workers = 0;
        assert!(zero_workers.validate().is_err());
        let mut bad_d = base;
        bad_d.d_grid = vec![1.5];
        assert!(bad_d.validate().is_err());
    }

    #[test]
    fn grid_shape_matches_cell_count() {
        // Two n values x six d values at one s and one test: twelve rows,
        // matching the layout of a size table.
        let cfg = McConfig {
            dgp_grid: vec![farima_template(0.0)],
            d_grid: vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5],
            n_grid: vec![64, 128],
            s_grid: vec![1],
            tests: vec![TestKind::Q],
            replications: 100,
            alpha: 0.05,
            master_seed: 3,
            workers: 2,
            budget_seconds: None,
        };
        let table = run_experiment(&cfg).unwrap();
        assert_eq!(table.rows.len(), 12);
        for row in &table.rows {
            assert_eq!(row.reps + row.anomalies, 100);
            assert!((0.0..=1.0).contains(&row.rate));
            let want_se = (row.rate * (1.0 - row.rate) / row.reps as f64).sqrt();
            assert_eq!(row.se, want_se);
            assert!(!row.partial);
        }
        // Implied-d kinds ignore the d grid: one cell only.
        let cfg2 = McConfig {
            dgp_grid: vec![DgpTemplate {
                kind: DgpKind::Aggregated {
                    a: 1.0,
                    b: 1.5,
                    panels: 20,
                },
                burn_in: 0,
            }],
            d_grid: vec![0.0, 0.1],
            n_grid: vec![64],
            s_grid: vec![2],
            tests: vec![TestKind::Q],
            replications: 100,
            alpha: 0.05,
            master_seed: 3,
            workers: 1,
            budget_seconds: None,
        };
        let table2 = run_experiment(&cfg2).unwrap();
        assert_eq!(table2.rows.len(), 1);
        assert_eq!(table2.rows[0].d, 0.25);
        assert_eq!(table2.rows[0].kind_params, "a=1;b=1.5;panels=20");
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let mut cfg = small_config();
        let one = run_experiment(&cfg).unwrap();
        cfg.workers = 4;
        let four = run_experiment(&cfg).unwrap();
        assert_eq!(one, four);
        let again = run_experiment(&cfg).unwrap();
        assert_eq!(four, again);
    }

    #[test]
    fn power_declines_toward_the_boundary() {
        // Under the fractional-noise family the rejection rate falls as d
        // rises toward 1/2; allow 2 combined SEs of slack per adjacent pair.
        let cfg = McConfig {
            dgp_grid: vec![farima_template(0.0)],
            d_grid: vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5],
            n_grid: vec![256],
            s_grid: vec![5],
            tests: vec![TestKind::Q],
            replications: 150,
            alpha: 0.05,
            master_seed: 11,
            workers: 2,
            budget_seconds: None,
        };
        let table = run_experiment(&cfg).unwrap();
        let rates: Vec<(f64, f64)> = table.rows.iter().map(|r| (r.rate, r.se)).collect();
        assert_eq!(rates.len(), 6);
        for w in rates.windows(2) {
            let slack = 2.0 * (w[0].1.powi(2) + w[1].1.powi(2)).sqrt();
            assert!(
                w[1].0 <= w[0].0 + slack,
                "rate rose from {:?} to {:?}",
                w[0],
                w[1]
            );
        }
        // Ends anchored: strong power at d=0, near-nominal size at d=1/2.
        assert!(rates[0].0 > 0.9, "{:?}", rates[0]);
        assert!(rates[5].0 < 0.2, "{:?}", rates[5]);
    }

    #[test]
    fn anomalies_are_counted_not_crashed() {
        let constant = Series::new(vec![3.25; 128]).unwrap();
        let crit = CriticalValues {
            low: 0.5,
            high: None,
        };
        let outcome =
            evaluate_one(TestKind::Q, &constant, 2, 0.05, Some(crit), -1.64).unwrap();
        assert!(matches!(outcome, RepOutcome::Anomalous));
        // The boundary-null statistic on wild but valid input is not anomalous.
        let outcome2 =
            evaluate_one(TestKind::Robinson, &constant, 2, 0.05, None, -1.64).unwrap();
        assert!(!matches!(outcome2, RepOutcome::Anomalous));
    }

    #[test]
    fn budget_marks_cells_partial() {
        let mut cfg = small_config();
        cfg.replications = 100_000; // far beyond the budget below
        cfg.d_grid = vec![0.3];
        cfg.budget_seconds = Some(0.05);
        let table = run_experiment(&cfg).unwrap();
        assert_eq!(table.rows.len(), 1);
        let row = &table.rows[0];
        assert!(row.partial);
        assert!(row.reps + row.anomalies < 100_000);
        assert!(row.reps > 0);
    }

    #[test]
    fn csv_has_pinned_columns_and_round_trips() {
        let mut cfg = small_config();
        cfg.tests = vec![TestKind::Q, TestKind::Qtilde];
        let table = run_experiment(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("table.csv");
        table_to_csv(&table, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("dgp,kind-params,n,d,s,test,alpha,rate,se,reps\n"));
        assert!(!text.contains('\r'));
        let mut reader = csv::Reader::from_path(&path).unwrap();
        let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
        assert_eq!(rows.len(), table.rows.len());
        for (rec, row) in rows.iter().zip(&table.rows) {
            assert_eq!(&rec[0], row.dgp.as_str());
            assert_eq!(&rec[1], row.kind_params.as_str());
            assert_eq!(rec[2].parse::<usize>().unwrap(), row.n);
            assert_eq!(rec[3].parse::<f64>().unwrap(), row.d);
            assert_eq!(rec[4].parse::<usize>().unwrap(), row.s);
            assert_eq!(&rec[5], row.test.as_str());
            assert_eq!(rec[6].parse::<f64>().unwrap(), row.alpha);
            assert_eq!(&rec[7], &format!("{:.6}", row.rate));
            assert_eq!(&rec[8], &format!("{:.6}", row.se));
            assert_eq!(rec[9].parse::<usize>().unwrap(), row.reps);
        }
        // Empty table: header only.
        let empty_path = dir.path().join("empty.csv");
        table_to_csv(&McTable::default(), &empty_path).unwrap();
        let text = std::fs::read_to_string(&empty_path).unwrap();
        assert_eq!(text, "dgp,kind-params,n,d,s,test,alpha,rate,se,reps\n");
    }

    #[test]
    fn config_round_trips_through_json() {
        let cfg = small_config();
        let json = serde_json::to_string(&cfg).unwrap();
        let back: McConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(cfg, back);
        // Defaults apply when omitted.
        let parsed: McConfig = serde_json::from_str(
            r#"{
                "dgp_grid": [{"kind": "farima", "d": 0.0, "phi": 0.0}],
                "d_grid": [0.5],
                "n_grid": [128],
                "s_grid": [1],
                "tests": ["q", "robinson-prewhitened"],
                "replications": 100,
                "alpha": 0.05,
                "master_seed": 1
            }"#,
        )
        .unwrap();
        assert_eq!(parsed.workers, 1);
        assert_eq!(parsed.budget_seconds, None);
        assert_eq!(parsed.dgp_grid[0].burn_in, DEFAULT_BURN_IN);
        assert_eq!(parsed.tests[1], TestKind::RobinsonPrewhitened);
    }

    #[test]
    fn robinson_tests_run_in_the_harness() {
        let cfg = McConfig {
            dgp_grid: vec![farima_template(0.0)],
            d_grid: vec![0.0],
            n_grid: vec![128],
            s_grid: vec![1],
            tests: vec![TestKind::Robinson, TestKind::RobinsonPrewhitened],
            replications: 100,
            alpha: 0.05,
            master_seed: 21,
            workers: 2,
            budget_seconds: None,
        };
        let table = run_experiment(&cfg).unwrap();
        assert_eq!(table.rows.len(), 2);
        // Overdifferenced white noise: the plain statistic rejects almost
        // always; prewhitening absorbs much of the low-frequency deficit
        // into the AR fit and gives up a large part of that power.
        let plain = &table.rows[0];
        let prewhitened = &table.rows[1];
        assert_eq!(plain.test, TestKind::Robinson);
        assert!(plain.rate > 0.9, "{plain:?}");
        assert!(
            prewhitened.rate < plain.rate - 0.2,
            "{prewhitened:?} vs {plain:?}"
        );
    }
}
