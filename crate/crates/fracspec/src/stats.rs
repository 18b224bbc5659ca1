//! Spectral statistics of an observed series and the nonstationarity test
//! built from them.
//!
//! The test statistic combines two diagnostics that separate stationary
//! long memory from nonstationarity:
//!
//! - an endpoint contrast `D_n` (difference of means of the first and last
//!   `floor(sqrt n)` observations), which diverges under deterministic
//!   trends and integrated paths but is negligible under stationarity;
//! - the summed periodogram at the lowest `s` Fourier frequencies,
//!   normalized by a variance-like denominator, which diverges under
//!   stationary long memory and converges to the weighted chi-square null
//!   law at the 1/f boundary.
//!
//! The test REJECTS NONSTATIONARITY for small values of the statistic:
//! under every nonstationary alternative (d > 1/2 or an additive trend) the
//! statistic diverges, while at the boundary null d = 1/2 it has the
//! weighted chi-square limit whose lower quantile provides the critical
//! value. A two-sided variant additionally rejects the boundary itself for
//! large values.

use std::collections::HashMap;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{eigen_spectrum, normalized_log_sigma};
use crate::nulldist::NullDistribution;

/// An observed real-valued series. The length floor guarantees the endpoint
/// window `m = floor(sqrt n)` has at least four observations and that the
/// first few Fourier frequencies exist.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    values: Vec<f64>,
}

impl Series {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 16 {
            return Err(Error::InvalidParameter(format!(
                "series needs at least 16 observations, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "series contains non-finite values".into(),
            ));
        }
        Ok(Series { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction enforces n >= 16
    }
}

/// Neumaier-compensated accumulator: direct summation with the rounding
/// error carried along, so long trigonometric sums keep full precision.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn total(self) -> f64 {
        self.sum + self.carry
    }
}

pub(crate) fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = Kahan::default();
    for v in values {
        acc.add(v);
    }
    acc.total()
}

/// The periodogram `I_n(lambda_j) = (1/n) |sum_k x_k e^(i k lambda_j)|^2`
/// at the Fourier frequency `lambda_j = 2 pi j / n`, `1 <= j <= n-1`,
/// observations indexed from k = 1. Direct O(n) summation; the test only
/// ever needs a handful of low frequencies.
pub fn periodogram(x: &Series, j: usize) -> Result<f64> {
    let n = x.len();
    if j == 0 || j >= n {
        return Err(Error::InvalidParameter(format!(
            "frequency index must satisfy 1 <= j <= n-1, got j={j}, n={n}"
        )));
    }
    let (c, s) = trig_sums(x.values(), j);
    Ok((c * c + s * s) / n as f64)
}

fn trig_sums(values: &[f64], j: usize) -> (f64, f64) {
    let n = values.len();
    let lambda = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
    let mut c = Kahan::default();
    let mut s = Kahan::default();
    for (k, &v) in values.iter().enumerate() {
        let (sin, cos) = ((k + 1) as f64 * lambda).sin_cos();
        c.add(v * cos);
        s.add(v * sin);
    }
    (c.total(), s.total())
}

/// The low-frequency DFT vector normalized by `n^(1/2+d)`, whose limiting
/// covariance is the kernel matrix for that `d`.
#[derive(Debug, Clone)]
pub struct DftVector {
    pub s: usize,
    /// Memory parameter used in the `n^(1/2+d)` normalization.
    pub d_norm: f64,
    pub cos_parts: Vec<f64>,
    pub sin_parts: Vec<f64>,
}

/// Cosine and sine transforms at the first `s` Fourier frequencies scaled
/// by `n^(1/2+d)`. Satisfies `n^(-2d) I_n(lambda_j) = cos_j^2 + sin_j^2`.
pub fn dft_vector(x: &Series, s: usize, d: crate::kernel::MemoryParam) -> Result<DftVector> {
    let n = x.len();
    check_s(s, n)?;
    let norm = (n as f64).powf(0.5 + d.value());
    let mut cos_parts = Vec::with_capacity(s);
    let mut sin_parts = Vec::with_capacity(s);
    for j in 1..=s {
        let (c, sn) = trig_sums(x.values(), j);
        cos_parts.push(c / norm);
        sin_parts.push(sn / norm);
    }
    Ok(DftVector {
        s,
        d_norm: d.value(),
        cos_parts,
        sin_parts,
    })
}

fn check_s(s: usize, n: usize) -> Result<()> {
    if s == 0 || 2 * s > n - 1 {
        return Err(Error::InvalidParameter(format!(
            "s must satisfy 1 <= s <= (n-1)/2, got s={s}, n={n}"
        )));
    }
    Ok(())
}

/// Difference of the first-window and last-window means with window
/// `m = floor(sqrt n)`: `(1/m)(sum of first m - sum of last m)`.
pub fn endpoint_contrast(x: &Series) -> f64 {
    endpoint_contrast_slice(x.values())
}

fn endpoint_contrast_slice(values: &[f64]) -> f64 {
    let n = values.len();
    let m = (n as f64).sqrt().floor() as usize;
    let head = compensated_sum(values[..m].iter().copied());
    let tail = compensated_sum(values[n - m..].iter().copied());
    (head - tail) / m as f64
}

/// Which normalization the statistic's periodogram term uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// `log(n) * sum I / sum (x - mean)^2`: the form whose null law is the
    /// weighted chi-square limit.
    Qtilde,
    /// `sum I / sum (x_k - mean)^2 / log(k+1)`: same limit, feasible
    /// weighting with better finite-sample centering.
    Q,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Qtilde => "qtilde",
            Variant::Q => "q",
        }
    }
}

/// The two additive parts of the statistic.
#[derive(Debug, Clone, Copy)]
pub struct Components {
    /// `D_n^2 / ((1/n) sum (x - mean)^2)`.
    pub dn_term: f64,
    /// Normalized low-frequency periodogram sum.
    pub periodogram_term: f64,
}

/// Computes the chosen statistic and its two components.
///
/// `Qtilde`: `D_n^2 n / S + log(n) (sum_{j<=s} I_j) / S` with
/// `S = sum (x_k - mean)^2`.
/// `Q`: same first term; the second is `(sum I_j) / W` with
/// `W = sum_k (x_k - mean)^2 / log(k+1)`, observations indexed from k = 1
/// (first weight `log 2`), no `log n` factor.
pub fn q_statistic(x: &Series, s: usize, variant: Variant) -> Result<(f64, Components)> {
    let n = x.len();
    check_s(s, n)?;
    let mean = compensated_sum(x.values().iter().copied()) / n as f64;
    let centered_sq = compensated_sum(x.values().iter().map(|v| (v - mean) * (v - mean)));
    if centered_sq == 0.0 {
        return Err(Error::DegenerateSeries(
            "zero sample variance: statistic undefined".into(),
        ));
    }
    let d_n = endpoint_contrast(x);
    let dn_term = d_n * d_n * n as f64 / centered_sq;
    let perio_sum = {
        let mut acc = Kahan::default();
        for j in 1..=s {
            acc.add(periodogram(x, j)?);
        }
        acc.total()
    };
    let periodogram_term = match variant {
        Variant::Qtilde => (n as f64).ln() * perio_sum / centered_sq,
        Variant::Q => {
            let weighted = compensated_sum(
                x.values()
                    .iter()
                    .enumerate()
                    .map(|(k, v)| (v - mean) * (v - mean) / ((k + 2) as f64).ln()),
            );
            perio_sum / weighted
        }
    };
    let statistic = dn_term + periodogram_term;
    Ok((
        statistic,
        Components {
            dn_term,
            periodogram_term,
        },
    ))
}

/// Test decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Decision {
    RejectNonstationarity,
    FailToReject,
    RejectTwoSided,
}

impl Decision {
    pub fn as_str(self) -> &'static str {
        match self {
            Decision::RejectNonstationarity => "reject-nonstationarity",
            Decision::FailToReject => "fail-to-reject",
            Decision::RejectTwoSided => "reject-two-sided",
        }
    }

    pub fn is_rejection(self) -> bool {
        !matches!(self, Decision::FailToReject)
    }
}

/// Critical values for a test run: the lower quantile, plus the upper one
/// for the two-sided variant.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CriticalValues {
    pub low: f64,
    pub high: Option<f64>,
}

/// Quantiles of the boundary null law for the chosen sidedness: one-sided
/// uses `q(alpha)`; two-sided uses `(q(alpha/2), q(1 - alpha/2))`.
/// Computed from scratch (kernel build + spectrum + inversion); see
/// [`run_test`] for the memoized path.
pub fn critical_values(s: usize, alpha: f64, two_sided: bool) -> Result<CriticalValues> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    let matrix = normalized_log_sigma(s)?;
    let dist = NullDistribution::new(eigen_spectrum(&matrix)?);
    if two_sided {
        Ok(CriticalValues {
            low: dist.critical_value(alpha / 2.0)?.value,
            high: Some(dist.critical_value(1.0 - alpha / 2.0)?.value),
        })
    } else {
        Ok(CriticalValues {
            low: dist.critical_value(alpha)?.value,
            high: None,
        })
    }
}

/// Outcome of one test run. `statistic = dn_term + periodogram_term` by
/// construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestOutcome {
    pub variant: Variant,
    pub statistic: f64,
    pub s: usize,
    pub alpha: f64,
    pub critical_low: f64,
    pub critical_high: Option<f64>,
    pub decision: Decision,
    pub dn_term: f64,
    pub periodogram_term: f64,
}

/// Runs the test with externally supplied critical values (the hot path for
/// Monte Carlo loops, where quantiles are computed once per configuration).
///
/// One-sided: reject nonstationarity iff `statistic < low` (strictly; ties
/// fail to reject). Two-sided: reject iff `statistic < low` or
/// `statistic > high`.
pub fn run_test_with_critical(
    x: &Series,
    s: usize,
    alpha: f64,
    variant: Variant,
    crit: CriticalValues,
) -> Result<TestOutcome> {
    let (statistic, parts) = q_statistic(x, s, variant)?;
    let decision = match crit.high {
        None => {
            if statistic < crit.low {
                Decision::RejectNonstationarity
            } else {
                Decision::FailToReject
            }
        }
        Some(high) => {
            if statistic < crit.low || statistic > high {
                Decision::RejectTwoSided
            } else {
                Decision::FailToReject
            }
        }
    };
    Ok(TestOutcome {
        variant,
        statistic,
        s,
        alpha,
        critical_low: crit.low,
        critical_high: crit.high,
        decision,
        dn_term: parts.dn_term,
        periodogram_term: parts.periodogram_term,
    })
}

/// Runs the test end to end, fetching critical values from a process-wide
/// memo so repeated calls with the same `(s, alpha, sidedness)` do not
/// rebuild the kernel matrix.
pub fn run_test(
    x: &Series,
    s: usize,
    alpha: f64,
    variant: Variant,
    two_sided: bool,
) -> Result<TestOutcome> {
    run_test_with_critical(x, s, alpha, variant, cached_critical_values(s, alpha, two_sided)?)
}

/// Memo key: (s, alpha bit pattern, two_sided).
type CriticalMemo = HashMap<(usize, u64, bool), CriticalValues>;

static CRITICAL_MEMO: Mutex<Option<CriticalMemo>> = Mutex::new(None);

/// Memoized form of [`critical_values`].
pub fn cached_critical_values(s: usize, alpha: f64, two_sided: bool) -> Result<CriticalValues> {
    let key = (s, alpha.to_bits(), two_sided);
    if let Some(hit) = CRITICAL_MEMO
        .lock()
        .expect("critical-value memo poisoned")
        .get_or_insert_with(HashMap::new)
        .get(&key)
    {
        return Ok(*hit);
    }
    let crit = critical_values(s, alpha, two_sided)?;
    CRITICAL_MEMO
        .lock()
        .expect("critical-value memo poisoned")
        .get_or_insert_with(HashMap::new)
        .insert(key, crit);
    Ok(crit)
}
