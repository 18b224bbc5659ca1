//! The comparison test: fractionally difference the series at the boundary
//! memory value, optionally prewhiten with an AIC-selected AR(q), and form
//! the studentized log-periodogram average `r_tilde`, which is
//! asymptotically standard normal under the boundary null.

use serde::{Deserialize, Serialize};
use statrs::distribution::ContinuousCDF;

use crate::error::{Error, Result};
use crate::stats::{Decision, Series};

/// Default maximum AR order offered to the AIC selection.
pub const DEFAULT_QMAX: usize = 3;

/// Expansion coefficients of `(1 - B)^d`: `pi_0 = 1`,
/// `pi_k = pi_{k-1} (k - 1 - d) / k`.
fn frac_diff_coeffs(d: f64, len: usize) -> Vec<f64> {
    let mut pi = Vec::with_capacity(len);
    pi.push(1.0);
    for k in 1..len {
        let prev = pi[k - 1];
        pi.push(prev * (k as f64 - 1.0 - d) / k as f64);
    }
    pi
}

/// Applies the fractional difference filter `(1 - B)^d` truncated at the
/// available past: `U_t = sum_{k=0}^{t-1} pi_k x_{t-k}`. Output has the
/// same length as the input.
pub fn frac_diff(x: &Series, d: f64) -> Result<Series> {
    if !(d.is_finite() && d >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "fractional difference order must be nonnegative, got {d}"
        )));
    }
    let v = x.values();
    let pi = frac_diff_coeffs(d, v.len());
    let u: Vec<f64> = (0..v.len())
        .map(|t| (0..=t).map(|k| pi[k] * v[t - k]).sum())
        .collect();
    Series::new(u)
}

/// Solves the Yule-Walker equations for an AR(`q`) fit to the demeaned
/// series by Levinson recursion; returns the coefficients and the innovation
/// variance. `q = 0` returns no coefficients and the sample variance.
pub fn yule_walker(x: &Series, q: usize) -> Result<(Vec<f64>, f64)> {
    let v = x.values();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let acov = |k: usize| -> f64 {
        v.iter()
            .zip(&v[k..])
            .map(|(a, b)| (a - mean) * (b - mean))
            .sum::<f64>()
            / n
    };
    let gamma: Vec<f64> = (0..=q).map(acov).collect();
    let mut sigma2 = gamma[0];
    if sigma2 <= 0.0 {
        return Err(Error::Numerical(
            "sample variance is zero; autoregression system is singular".into(),
        ));
    }
    let mut phi: Vec<f64> = Vec::new();
    for k in 1..=q {
        let num = gamma[k]
            - phi
                .iter()
                .enumerate()
                .map(|(j, c)| c * gamma[k - 1 - j])
                .sum::<f64>();
        let kappa = num / sigma2;
        let prev = phi.clone();
        phi.push(0.0);
        for j in 0..k - 1 {
            phi[j] = prev[j] - kappa * prev[k - 2 - j];
        }
        phi[k - 1] = kappa;
        sigma2 *= 1.0 - kappa * kappa;
        if sigma2 <= 0.0 || !sigma2.is_finite() {
            return Err(Error::Numerical(format!(
                "Yule-Walker system not positive definite at order {k}"
            )));
        }
    }
    Ok((phi, sigma2))
}

/// Fits AR(q) for q = 0..=qmax by Yule-Walker on the demeaned series,
/// selects the order minimizing `AIC = n log(innovation variance) + 2q`,
/// and returns the residuals (first q values dropped) with the order.
/// Order 0 returns the demeaned series itself.
pub fn ar_prewhiten(u: &Series, qmax: usize) -> Result<(Series, usize)> {
    let n = u.len();
    if n <= 10 * qmax {
        return Err(Error::InvalidParameter(format!(
            "prewhitening an order up to {qmax} needs more than {} observations, got {n}",
            10 * qmax
        )));
    }
    let mut best: Option<(f64, usize, Vec<f64>)> = None;
    for q in 0..=qmax {
        let (phi, sigma2) = yule_walker(u, q)?;
        let aic = n as f64 * sigma2.ln() + 2.0 * q as f64;
        if best.as_ref().is_none_or(|(b, _, _)| aic < *b) {
            best = Some((aic, q, phi));
        }
    }
    let (_, order, phi) = best.expect("loop ran at least once");
    let v = u.values();
    let mean = v.iter().sum::<f64>() / n as f64;
    let residuals: Vec<f64> = (order..n)
        .map(|t| {
            v[t] - mean
                - phi
                    .iter()
                    .enumerate()
                    .map(|(j, c)| c * (v[t - 1 - j] - mean))
                    .sum::<f64>()
        })
        .collect();
    Ok((Series::new(residuals)?, order))
}

/// Periodogram at every Fourier frequency `2 pi j / n`, `j = 1..n-1`, via a
/// single FFT: agrees with the direct per-ordinate sums to rounding.
fn periodogram_all(values: &[f64]) -> Vec<f64> {
    use rustfft::num_complex::Complex;
    let n = values.len();
    let mut buf: Vec<Complex<f64>> = values.iter().map(|&v| Complex::new(v, 0.0)).collect();
    rustfft::FftPlanner::new()
        .plan_fft_forward(n)
        .process(&mut buf);
    buf[1..n].iter().map(|z| z.norm_sqr() / n as f64).collect()
}

/// The normalizer `A_tilde(n) = (2/n) sum_{j=1}^{n-1} log^2(2 sin(pi j/n))`;
/// a function of `n` alone, increasing to `pi^2/6`.
pub fn a_tilde(n: usize) -> f64 {
    let mut sum = 0.0;
    for j in 1..n {
        let w = (2.0 * (std::f64::consts::PI * j as f64 / n as f64).sin()).ln();
        sum += w * w;
    }
    2.0 * sum / n as f64
}

/// The pieces of the studentized statistic, plus how they were produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobinsonStat {
    /// Weighted periodogram average `-1/n sum log(2 sin(pi j/n)) I(lambda_j)`.
    pub a_tilde: f64,
    /// Raw second moment of the filtered series.
    pub sigma2_tilde: f64,
    /// Normalizer; depends on the effective sample size only.
    pub big_a_tilde: f64,
    /// `sqrt(n) a_tilde / (sigma2_tilde sqrt(big_a_tilde))`.
    pub r_tilde: f64,
    pub prewhitened: bool,
    /// Selected AR order (0 when prewhitening is off or selected nothing).
    pub ar_order: usize,
    /// Fractional filter truncation policy; always the full in-sample past.
    pub truncation: String,
}

/// Computes the statistic: fractional difference at the boundary order 1/2,
/// optional prewhitening, then the weighted periodogram sums over
/// `j = 1..n-1` (the `j = n` ordinate carries a singular weight and is
/// dropped; `n` is the filtered, possibly shortened, length).
pub fn robinson_statistic(x: &Series, prewhiten: bool, qmax: usize) -> Result<RobinsonStat> {
    if x.len() < 64 {
        return Err(Error::InvalidParameter(format!(
            "the boundary-null statistic needs at least 64 observations, got {}",
            x.len()
        )));
    }
    let u = frac_diff(x, 0.5)?;
    let (u, ar_order) = if prewhiten {
        ar_prewhiten(&u, qmax)?
    } else {
        (u, 0)
    };
    let v = u.values();
    let n = v.len();
    let nf = n as f64;
    let sigma2_tilde = v.iter().map(|x| x * x).sum::<f64>() / nf;
    if sigma2_tilde == 0.0 {
        return Err(Error::DegenerateSeries(
            "filtered series is identically zero".into(),
        ));
    }
    let periodogram = periodogram_all(v);
    let mut weighted = 0.0;
    for (j, i_j) in periodogram.iter().enumerate() {
        let w = (2.0 * (std::f64::consts::PI * (j + 1) as f64 / nf).sin()).ln();
        weighted += w * i_j;
    }
    let a_tilde_val = -weighted / nf;
    let big_a = a_tilde(n);
    let r_tilde = nf.sqrt() * a_tilde_val / (sigma2_tilde * big_a.sqrt());
    Ok(RobinsonStat {
        a_tilde: a_tilde_val,
        sigma2_tilde,
        big_a_tilde: big_a,
        r_tilde,
        prewhitened: prewhiten,
        ar_order,
        truncation: "full-sample".to_string(),
    })
}

/// A complete run: statistic, the lower-tail normal critical value at
/// `alpha`, and the decision (reject the boundary/nonstationary null when
/// `r_tilde` falls below the critical value).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobinsonOutcome {
    #[serde(flatten)]
    pub stat: RobinsonStat,
    /// Effective sample size after filtering.
    pub n: usize,
    pub alpha: f64,
    pub critical: f64,
    pub decision: Decision,
}

pub fn run_robinson(
    x: &Series,
    prewhiten: bool,
    qmax: usize,
    alpha: f64,
) -> Result<RobinsonOutcome> {
    if !(alpha.is_finite() && alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "significance level must lie in (0, 1), got {alpha}"
        )));
    }
    let stat = robinson_statistic(x, prewhiten, qmax)?;
    let n = x.len() - stat.ar_order;
    let normal = statrs::distribution::Normal::new(0.0, 1.0).expect("unit normal");
    let critical = normal.inverse_cdf(alpha);
    let decision = if stat.r_tilde < critical {
        Decision::RejectNonstationarity
    } else {
        Decision::FailToReject
    };
    Ok(RobinsonOutcome {
        stat,
        n,
        alpha,
        critical,
        decision,
    })
}
