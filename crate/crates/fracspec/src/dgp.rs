//! Seeded generators for the simulation designs the test is evaluated on,
//! plus exact autocovariances of the fractional-noise family for oracle
//! checks.
//!
//! All generators are pure functions of their specification (including the
//! seed): identical specs yield bit-identical series, and parallel
//! replications use independently derived streams.

use rand::Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream;
use crate::stats::Series;

/// Default number of warm-up values discarded by recursive generators.
pub const DEFAULT_BURN_IN: usize = 1000;

/// Default panel count for the cross-sectional aggregation design.
pub const DEFAULT_PANELS: usize = 1000;

/// A deterministic trend `n^beta g(t/n)` given by samples of `g` on a
/// uniform grid over [0, 1] (linear interpolation in between).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendSpec {
    pub samples: Vec<f64>,
    pub beta: f64,
}

impl TrendSpec {
    fn validate(&self) -> Result<()> {
        if self.samples.len() < 2 || self.samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "trend needs at least two finite samples of g on [0, 1]".into(),
            ));
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "trend scale exponent must be >= 0, got {}",
                self.beta
            )));
        }
        Ok(())
    }

    /// `g(u)` for `u` in [0, 1] by linear interpolation of the samples.
    fn g(&self, u: f64) -> f64 {
        let grid = (self.samples.len() - 1) as f64;
        let pos = (u.clamp(0.0, 1.0)) * grid;
        let lo = (pos.floor() as usize).min(self.samples.len() - 2);
        let w = pos - lo as f64;
        self.samples[lo] * (1.0 - w) + self.samples[lo + 1] * w
    }
}

/// Which process to simulate, with its per-kind parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DgpKind {
    /// Fractional noise with memory `d` (integrated when `d >= 1/2`),
    /// optionally filtered through an AR(1) with coefficient `phi`.
    Farima { d: f64, phi: f64 },
    /// Cross-sectional aggregation of AR(1) panels whose squared
    /// coefficients are Beta(a, b); implied memory `d = 1 - b/2`.
    Aggregated { a: f64, b: f64, panels: usize },
    /// AR(1) whose coefficient switches between 1 (probability `p`) and `c`
    /// over power-law regime durations with tail exponent `exponent`;
    /// implied memory `d = 2 - exponent/2`.
    Renewal { c: f64, p: f64, exponent: f64 },
    /// Stationary fractional noise plus a level shift of `delta_break` on
    /// the second half of the sample, or an arbitrary sampled trend.
    Break {
        d: f64,
        delta_break: f64,
        trend: Option<TrendSpec>,
    },
}

impl DgpKind {
    /// The memory parameter the process mimics: explicit for the fractional
    /// kinds, implied by the tail/mixing parameters for the others.
    pub fn implied_d(&self) -> f64 {
        match *self {
            DgpKind::Farima { d, .. } => d,
            DgpKind::Aggregated { b, .. } => 1.0 - b / 2.0,
            DgpKind::Renewal { exponent, .. } => 2.0 - exponent / 2.0,
            DgpKind::Break { d, .. } => d,
        }
    }

    /// Whether `d` is a free parameter of this kind (sweepable in a Monte
    /// Carlo grid) rather than implied by other parameters.
    pub fn has_free_d(&self) -> bool {
        matches!(self, DgpKind::Farima { .. } | DgpKind::Break { .. })
    }

    /// Same kind with the free memory parameter replaced; no-op for kinds
    /// whose `d` is implied.
    pub fn with_d(&self, new_d: f64) -> DgpKind {
        let mut kind = self.clone();
        match &mut kind {
            DgpKind::Farima { d, .. } | DgpKind::Break { d, .. } => *d = new_d,
            _ => {}
        }
        kind
    }

    pub fn name(&self) -> &'static str {
        match self {
            DgpKind::Farima { .. } => "farima",
            DgpKind::Aggregated { .. } => "aggregated",
            DgpKind::Renewal { .. } => "renewal",
            DgpKind::Break { .. } => "break",
        }
    }
}

/// A complete, seeded simulation request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpSpec {
    #[serde(flatten)]
    pub kind: DgpKind,
    pub n: usize,
    pub seed: u64,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
}

fn default_burn_in() -> usize {
    DEFAULT_BURN_IN
}

impl DgpSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 16 {
            return Err(Error::InvalidParameter(format!(
                "sample size must be at least 16, got {}",
                self.n
            )));
        }
        match &self.kind {
            DgpKind::Farima { d, phi } => {
                if !(d.is_finite() && *d > -0.5 && *d < 1.5) {
                    return Err(Error::InvalidParameter(format!(
                        "farima memory parameter must lie in (-1/2, 3/2), got {d}"
                    )));
                }
                if !(phi.is_finite() && phi.abs() < 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "AR(1) coefficient must lie in (-1, 1), got {phi}"
                    )));
                }
            }
            DgpKind::Aggregated { a, b, panels } => {
                if !(a.is_finite() && *a > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "aggregation shape a must be positive, got {a}"
                    )));
                }
                if !(b.is_finite() && *b > 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "aggregation shape b must exceed 1 (b <= 1 breaks stationary \
                         aggregation), got {b}"
                    )));
                }
                if *panels == 0 {
                    return Err(Error::InvalidParameter(
                        "aggregation needs at least one panel".into(),
                    ));
                }
            }
            DgpKind::Renewal { c, p, exponent } => {
                for (name, v) in [("c", *c), ("p", *p)] {
                    if !(v.is_finite() && v > 0.0 && v < 1.0) {
                        return Err(Error::InvalidParameter(format!(
                            "renewal parameter {name} must lie in (0, 1), got {v}"
                        )));
                    }
                }
                if !(exponent.is_finite() && *exponent > 3.0 && *exponent < 4.0) {
                    return Err(Error::InvalidParameter(format!(
                        "renewal tail exponent must lie in (3, 4), got {exponent}"
                    )));
                }
            }
            DgpKind::Break {
                d,
                delta_break,
                trend,
            } => {
                if !(d.is_finite() && d.abs() < 0.5) {
                    return Err(Error::InvalidParameter(format!(
                        "break-model memory parameter must lie in (-1/2, 1/2), got {d}"
                    )));
                }
                if !(delta_break.is_finite() && *delta_break >= 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "break size must be nonnegative, got {delta_break}"
                    )));
                }
                if let Some(t) = trend {
                    t.validate()?;
                }
            }
        }
        Ok(())
    }
}

/// Simulates one series from the specification.
pub fn simulate(spec: &DgpSpec) -> Result<Series> {
    spec.validate()?;
    let values = match &spec.kind {
        DgpKind::Farima { d, phi } => farima_values(*d, *phi, spec.n, spec.seed, spec.burn_in)?,
        DgpKind::Aggregated { a, b, panels } => {
            aggregated_values(*a, *b, *panels, spec.n, spec.seed)
        }
        DgpKind::Renewal { c, p, exponent } => {
            renewal_values(*c, *p, *exponent, spec.n, spec.seed, spec.burn_in)
        }
        DgpKind::Break {
            d,
            delta_break,
            trend,
        } => {
            let mut values = farima_values(*d, 0.0, spec.n, spec.seed, spec.burn_in)?;
            match trend {
                None => {
                    let half = spec.n / 2;
                    for (t, v) in values.iter_mut().enumerate() {
                        if t + 1 > half {
                            *v += delta_break;
                        }
                    }
                }
                Some(tr) => {
                    let scale = (spec.n as f64).powf(tr.beta);
                    for (t, v) in values.iter_mut().enumerate() {
                        *v += scale * tr.g((t + 1) as f64 / spec.n as f64);
                    }
                }
            }
            values
        }
    };
    Series::new(values)
}

// ---------------------------------------------------------------------------
// Fractional noise
// ---------------------------------------------------------------------------

/// Exact autocovariance of fractional noise with unit innovation variance:
/// `gamma(0) = Gamma(1-2d) / Gamma(1-d)^2`, then the stable ratio recursion
/// `gamma(h) = gamma(h-1) (h-1+d) / (h-d)`.
///
/// Valid for `-1/2 <= d < 1/2`; every term stays finite at `d = -1/2`
/// (where `gamma(0) = Gamma(2)/Gamma(3/2)^2 = 4/pi`), which the integrated
/// boundary case relies on.
pub fn farima_acf(d: f64, h: usize) -> Result<f64> {
    if !(d.is_finite() && (-0.5..0.5).contains(&d)) {
        return Err(Error::InvalidParameter(format!(
            "autocovariance requires d in [-1/2, 1/2), got {d}"
        )));
    }
    if d == 0.0 {
        // White noise exactly; the Gamma-ratio route agrees only to
        // machine rounding.
        return Ok(if h == 0 { 1.0 } else { 0.0 });
    }
    let mut gamma = statrs::function::gamma::gamma(1.0 - 2.0 * d)
        / statrs::function::gamma::gamma(1.0 - d).powi(2);
    for k in 1..=h {
        gamma *= (k as f64 - 1.0 + d) / (k as f64 - d);
    }
    Ok(gamma)
}

/// All autocovariances `gamma(0..n)` in one pass of the recursion.
pub fn farima_acf_vec(d: f64, n: usize) -> Result<Vec<f64>> {
    let mut acf = Vec::with_capacity(n);
    acf.push(farima_acf(d, 0)?);
    for h in 1..n {
        let prev = acf[h - 1];
        acf.push(prev * (h as f64 - 1.0 + d) / (h as f64 - d));
    }
    Ok(acf)
}

/// Exact Gaussian sample with the given autocovariance sequence via the
/// Durbin-Levinson one-step predictor: `x_t` = best linear predictor from
/// the past plus `sqrt(prediction variance) * z_t`. O(n^2), exact in
/// distribution — no truncation or spectral approximation confounds.
fn durbin_levinson(acf: &[f64], z: &[f64]) -> Result<Vec<f64>> {
    let n = z.len();
    debug_assert!(acf.len() >= n);
    let mut x = Vec::with_capacity(n);
    let mut coef: Vec<f64> = Vec::new(); // phi_{t,1..t}
    let mut nu = acf[0];
    if nu <= 0.0 {
        return Err(Error::Numerical(
            "autocovariance at lag 0 must be positive".into(),
        ));
    }
    x.push(nu.sqrt() * z[0]);
    for t in 1..n {
        // phi_{t,t} from the Yule-Walker residual of the previous stage.
        let num = acf[t]
            - coef
                .iter()
                .enumerate()
                .map(|(j, c)| c * acf[t - 1 - j])
                .sum::<f64>();
        let kappa = num / nu;
        let prev = coef.clone();
        coef.push(0.0);
        for j in 0..t - 1 {
            coef[j] = prev[j] - kappa * prev[t - 2 - j];
        }
        coef[t - 1] = kappa;
        nu *= 1.0 - kappa * kappa;
        if nu <= 0.0 || !nu.is_finite() {
            return Err(Error::Numerical(format!(
                "prediction variance became nonpositive at lag {t}; \
                 autocovariance sequence is not positive definite"
            )));
        }
        let mean: f64 = coef
            .iter()
            .enumerate()
            .map(|(j, c)| c * x[t - 1 - j])
            .sum();
        x.push(mean + nu.sqrt() * z[t]);
    }
    Ok(x)
}

/// Stationary fractional-noise values (optionally AR(1)-filtered); the
/// integrated branch cumulates a stationary sample at `d - 1`, so its first
/// differences reproduce that sample exactly under a shared seed.
fn farima_values(d: f64, phi: f64, n: usize, seed: u64, burn_in: usize) -> Result<Vec<f64>> {
    if d >= 0.5 {
        let increments = stationary_values(d - 1.0, phi, n, seed, burn_in)?;
        let mut x = Vec::with_capacity(n);
        let mut level = 0.0;
        for inc in increments {
            level += inc;
            x.push(level);
        }
        Ok(x)
    } else {
        stationary_values(d, phi, n, seed, burn_in)
    }
}

fn stationary_values(d: f64, phi: f64, n: usize, seed: u64, burn_in: usize) -> Result<Vec<f64>> {
    let total = if phi == 0.0 { n } else { n + burn_in };
    let mut rng = stream(seed);
    let z: Vec<f64> = (0..total).map(|_| rng.sample(StandardNormal)).collect();
    let acf = farima_acf_vec(d, total)?;
    let f = durbin_levinson(&acf, &z)?;
    if phi == 0.0 {
        return Ok(f);
    }
    let mut x = 0.0;
    let mut out = Vec::with_capacity(n);
    for (t, innovation) in f.into_iter().enumerate() {
        x = phi * x + innovation;
        if t >= burn_in {
            out.push(x);
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Cross-sectional aggregation
// ---------------------------------------------------------------------------

/// Sum of `M` independent stationary AR(1) panels scaled by `1/sqrt(M)`.
/// Panel coefficients are square roots of Beta(a, b) variates (the paper's
/// coefficient density is exactly that law); each panel starts from its
/// stationary distribution, so no burn-in is needed. Draw order per panel:
/// coefficient, initial value, then `n - 1` innovations — a documented
/// contract so tests can replay the coefficient stream.
fn aggregated_values(a: f64, b: f64, panels: usize, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream(seed);
    let beta = Beta::new(a, b).expect("validated shape parameters");
    let mut x = vec![0.0; n];
    for _ in 0..panels {
        let phi = beta.sample(&mut rng).sqrt();
        let sd0 = (1.0 / (1.0 - phi * phi)).sqrt();
        let mut y: f64 = sd0 * rng.sample::<f64, _>(StandardNormal);
        x[0] += y;
        for slot in x.iter_mut().skip(1) {
            y = phi * y + rng.sample::<f64, _>(StandardNormal);
            *slot += y;
        }
    }
    let norm = 1.0 / (panels as f64).sqrt();
    for v in &mut x {
        *v *= norm;
    }
    x
}

/// Theoretical variance of the aggregated process: `(a+b-1)/(b-1)`.
pub fn aggregated_variance(a: f64, b: f64) -> f64 {
    (a + b - 1.0) / (b - 1.0)
}

// ---------------------------------------------------------------------------
// Renewal-switching AR(1)
// ---------------------------------------------------------------------------

/// Riemann zeta by Euler-Maclaurin: direct sum to `N` plus the integral,
/// half-term and first Bernoulli corrections. For `s >= 2` and `N = 10^4`
/// the truncation error is below 1e-16.
pub fn zeta(s: f64) -> f64 {
    const N: usize = 10_000;
    let mut sum = 0.0;
    for k in 1..=N {
        sum += (k as f64).powf(-s);
    }
    let nf = N as f64;
    sum + nf.powf(1.0 - s) / (s - 1.0) - 0.5 * nf.powf(-s) + s * nf.powf(-s - 1.0) / 12.0
}

/// Inverse-CDF sampler for the normalized discrete power law
/// `P(D = k) = k^(-alpha) / zeta(alpha)`, `k >= 1`.
///
/// A dense cumulative table covers the bulk; on demand it extends exactly up
/// to 1e7, beyond which the remaining mass (< 1e-14 of draws for
/// `alpha > 3`) is assigned by the continuous Pareto approximation of the
/// tail.
struct DurationSampler {
    alpha: f64,
    inv_zeta: f64,
    cum: Vec<f64>,
}

const DURATION_DENSE: usize = 1 << 16;
const DURATION_EXACT_MAX: usize = 10_000_000;

impl DurationSampler {
    fn new(alpha: f64) -> Self {
        let inv_zeta = 1.0 / zeta(alpha);
        let mut cum = Vec::with_capacity(DURATION_DENSE);
        let mut acc = 0.0;
        for k in 1..=DURATION_DENSE {
            acc += (k as f64).powf(-alpha) * inv_zeta;
            cum.push(acc);
        }
        DurationSampler {
            alpha,
            inv_zeta,
            cum,
        }
    }

    fn sample(&mut self, rng: &mut impl Rng) -> u64 {
        let u: f64 = rng.random();
        if u <= self.cum[self.cum.len() - 1] {
            // Binary search for the first index with cum >= u.
            let idx = self.cum.partition_point(|c| *c < u);
            return (idx + 1) as u64;
        }
        // Exact extension of the table.
        while *self.cum.last().expect("nonempty table") < u {
            let k = self.cum.len() + 1;
            if k > DURATION_EXACT_MAX {
                // Continuous Pareto tail: P(D > x) ~ x^(1-alpha) up to the
                // normalizing constant; invert the conditional tail beyond
                // the table edge.
                let edge = DURATION_EXACT_MAX as f64;
                let tail = 1.0 - self.cum.last().unwrap();
                let v = (u - (1.0 - tail)) / tail;
                let x = edge * (1.0 - v).powf(-1.0 / (self.alpha - 1.0));
                return x.round() as u64;
            }
            let prev = *self.cum.last().unwrap();
            self.cum.push(prev + (k as f64).powf(-self.alpha) * self.inv_zeta);
        }
        self.cum.len() as u64
    }
}

/// AR(1) whose coefficient holds at 1 (probability `p`) or `c` for whole
/// power-law-distributed regimes: `X_t = A_regime X_{t-1} + noise`,
/// `X_0 = 0`, warm-up discarded.
fn renewal_values(c: f64, p: f64, alpha: f64, n: usize, seed: u64, burn_in: usize) -> Vec<f64> {
    let mut rng = stream(seed);
    let mut durations = DurationSampler::new(alpha);
    let mut out = Vec::with_capacity(n);
    let mut x = 0.0f64;
    let mut remaining = 0u64;
    let mut coeff = 1.0;
    for t in 0..n + burn_in {
        if remaining == 0 {
            remaining = durations.sample(&mut rng);
            coeff = if rng.random::<f64>() < p { 1.0 } else { c };
        }
        remaining -= 1;
        let noise: f64 = rng.sample(StandardNormal);
        x = coeff * x + noise;
        if t >= burn_in {
            out.push(x);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::DeltaConstant;
    use std::f64::consts::PI;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    fn farima_spec(d: f64, phi: f64, n: usize, seed: u64) -> DgpSpec {
        DgpSpec {
            kind: DgpKind::Farima { d, phi },
            n,
            seed,
            burn_in: DEFAULT_BURN_IN,
        }
    }

    #[test]
    fn acf_of_white_noise() {
        assert_eq!(farima_acf(0.0, 0).unwrap(), 1.0);
        for h in 1..5 {
            assert_eq!(farima_acf(0.0, h).unwrap(), 0.0);
        }
    }

    #[test]
    fn acf_matches_gamma_oracles() {
        // gamma(0) at d = 0.3 equals Gamma(0.4)/Gamma(0.7)^2.
        let g0 = farima_acf(0.3, 0).unwrap();
        assert!(rel(g0, 1.3164560621300048) < 1e-12, "{g0}");
        // rho(1) = d/(1-d).
        let rho1 = farima_acf(0.3, 1).unwrap() / g0;
        assert!(rel(rho1, 0.3 / 0.7) < 1e-12, "{rho1}");
        // Limit-safe endpoint: gamma(0) at d = -1/2 is Gamma(2)/Gamma(3/2)^2.
        let gm = farima_acf(-0.5, 0).unwrap();
        assert!(rel(gm, 4.0 / PI) < 1e-12, "{gm}");
        // Domain errors.
        assert!(farima_acf(0.5, 0).is_err());
        assert!(farima_acf(-0.51, 0).is_err());
    }

    #[test]
    fn acf_tail_matches_power_law_constant() {
        // gamma(h) ~ C(d) h^(2d-1) with C(d) the same constant the kernel
        // module derives from Gamma functions: a dual route to one number.
        let d = 0.3;
        let c = DeltaConstant::farima(d).unwrap().capital_c.unwrap();
        let h = 10_000;
        let gamma_h = farima_acf(d, h).unwrap();
        let asymptotic = c * (h as f64).powf(2.0 * d - 1.0);
        assert!(
            rel(gamma_h, asymptotic) < 0.02,
            "{gamma_h} vs {asymptotic}"
        );
    }

    #[test]
    fn white_noise_sample_variance_is_near_one() {
        let x = simulate(&farima_spec(0.0, 0.0, 4096, 7)).unwrap();
        let n = x.len() as f64;
        let mean: f64 = x.values().iter().sum::<f64>() / n;
        let var: f64 = x.values().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        // Var(sample variance) ~ 2/n for Gaussian data.
        let band = 3.0 * (2.0 / n).sqrt();
        assert!((var - 1.0).abs() < band, "variance {var}");
    }

    #[test]
    fn long_memory_sample_autocorrelation_matches_acf() {
        // Mean lag-1 sample autocorrelation across replications should sit
        // within three standard errors (of the replication spread) of the
        // theoretical rho(1) = d/(1-d).
        let d = 0.3;
        let reps = 200;
        let n = 1024;
        let mut rhos = Vec::with_capacity(reps);
        for r in 0..reps {
            let x = simulate(&farima_spec(d, 0.0, n, crate::rng::derive_seed(99, r as u64)))
                .unwrap();
            let v = x.values();
            let mean: f64 = v.iter().sum::<f64>() / n as f64;
            let var: f64 = v.iter().map(|x| (x - mean).powi(2)).sum();
            let cov: f64 = v.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
            rhos.push(cov / var);
        }
        let mean_rho: f64 = rhos.iter().sum::<f64>() / reps as f64;
        let sd: f64 = (rhos.iter().map(|r| (r - mean_rho).powi(2)).sum::<f64>()
            / (reps as f64 - 1.0))
            .sqrt();
        let se = sd / (reps as f64).sqrt();
        let target = 0.3 / 0.7;
        // Finite-sample bias of the sample ACF under long memory is O(n^(2d-1));
        // at n = 1024, d = 0.3 that is ~6%, so allow bias + 3 SE.
        let bias_allowance = 0.03;
        assert!(
            (mean_rho - target).abs() < bias_allowance + 3.0 * se,
            "mean rho {mean_rho} vs {target} (se {se})"
        );
    }

    #[test]
    fn random_walk_variance_grows_linearly() {
        let reps = 200;
        let n = 1024;
        let mut ratio = 0.0;
        for r in 0..reps {
            let x = simulate(&farima_spec(1.0, 0.0, n, crate::rng::derive_seed(5, r as u64)))
                .unwrap();
            let last = *x.values().last().unwrap();
            ratio += last * last / n as f64;
        }
        ratio /= reps as f64;
        // X_n^2/n averages to 1 with SE sqrt(2/reps).
        assert!((ratio - 1.0).abs() < 3.0 * (2.0 / reps as f64).sqrt(), "{ratio}");
    }

    #[test]
    fn integrated_first_differences_equal_stationary_sample() {
        let seed = 31;
        let integrated = simulate(&farima_spec(1.2, 0.0, 512, seed)).unwrap();
        let stationary = simulate(&farima_spec(0.2, 0.0, 512, seed)).unwrap();
        let x = integrated.values();
        assert_eq!(x[0], stationary.values()[0]);
        for t in 1..x.len() {
            // Cumulative sums reconstruct increments exactly only up to
            // rounding of the running level; demand bit-level agreement of
            // the reconstruction instead.
            let diff = x[t] - x[t - 1];
            assert!(
                (diff - stationary.values()[t]).abs() <= 1e-12 * x[t].abs().max(1.0),
                "t={t}"
            );
        }
    }

    #[test]
    fn ar_filter_changes_only_filtered_draws() {
        // phi = 0 must bypass the burn-in path entirely so that break-model
        // and bare-farima outputs under a shared seed coincide.
        let a = simulate(&farima_spec(0.2, 0.0, 128, 9)).unwrap();
        let b = simulate(&DgpSpec {
            kind: DgpKind::Break {
                d: 0.2,
                delta_break: 0.0,
                trend: None,
            },
            n: 128,
            seed: 9,
            burn_in: DEFAULT_BURN_IN,
        })
        .unwrap();
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn break_shifts_second_half_only() {
        let base = simulate(&farima_spec(0.2, 0.0, 100, 17)).unwrap();
        let broken = simulate(&DgpSpec {
            kind: DgpKind::Break {
                d: 0.2,
                delta_break: 2.5,
                trend: None,
            },
            n: 100,
            seed: 17,
            burn_in: DEFAULT_BURN_IN,
        })
        .unwrap();
        for t in 0..100 {
            let want = if t + 1 > 50 { 2.5 } else { 0.0 };
            assert_eq!(broken.values()[t], base.values()[t] + want, "t={t}");
        }
    }

    #[test]
    fn sampled_trend_is_added_with_scale_exponent() {
        let n = 64;
        let trend = TrendSpec {
            samples: vec![0.0, 1.0], // g(u) = u
            beta: 0.5,
        };
        let base = simulate(&farima_spec(0.1, 0.0, n, 23)).unwrap();
        let trended = simulate(&DgpSpec {
            kind: DgpKind::Break {
                d: 0.1,
                delta_break: 0.0,
                trend: Some(trend),
            },
            n,
            seed: 23,
            burn_in: DEFAULT_BURN_IN,
        })
        .unwrap();
        let scale = (n as f64).sqrt();
        for t in 0..n {
            let g = (t + 1) as f64 / n as f64;
            assert!(
                (trended.values()[t] - base.values()[t] - scale * g).abs() < 1e-12,
                "t={t}"
            );
        }
    }

    #[test]
    fn simulation_is_deterministic_in_the_spec() {
        let spec = farima_spec(0.3, 0.5, 256, 1234);
        let a = simulate(&spec).unwrap();
        let b = simulate(&spec).unwrap();
        assert_eq!(a.values(), b.values());
        let c = simulate(&farima_spec(0.3, 0.5, 256, 1235)).unwrap();
        assert_ne!(a.values(), c.values());
    }

    #[test]
    fn aggregated_variance_formula_and_sample() {
        assert_eq!(aggregated_variance(1.0, 1.5), 3.0);
        // Average sample variance over replications within 10% of theory.
        let reps = 20;
        let n = 2048;
        let mut mean_var = 0.0;
        for r in 0..reps {
            let x = simulate(&DgpSpec {
                kind: DgpKind::Aggregated {
                    a: 1.0,
                    b: 1.5,
                    panels: 500,
                },
                n,
                seed: crate::rng::derive_seed(77, r),
                burn_in: 0,
            })
            .unwrap();
            let mean: f64 = x.values().iter().sum::<f64>() / n as f64;
            mean_var += x.values().iter().map(|v| (v - mean).powi(2)).sum::<f64>()
                / (n as f64 - 1.0);
        }
        mean_var /= reps as f64;
        assert!(rel(mean_var, 3.0) < 0.10, "{mean_var}");
    }

    #[test]
    fn single_panel_aggregation_is_one_ar_process() {
        // Replay the documented draw order to recover the panel coefficient,
        // then check the lag-1 sample autocorrelation against it.
        let seed = 4242;
        let n = 1 << 15;
        let x = simulate(&DgpSpec {
            kind: DgpKind::Aggregated {
                a: 2.0,
                b: 3.0,
                panels: 1,
            },
            n,
            seed,
            burn_in: 0,
        })
        .unwrap();
        let mut rng = stream(seed);
        let phi: f64 = Beta::new(2.0, 3.0).unwrap().sample(&mut rng);
        let phi = phi.sqrt();
        let v = x.values();
        let mean: f64 = v.iter().sum::<f64>() / n as f64;
        let var: f64 = v.iter().map(|x| (x - mean).powi(2)).sum();
        let cov: f64 = v.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
        assert!((cov / var - phi).abs() < 0.05, "{} vs {phi}", cov / var);
    }

    #[test]
    fn zeta_matches_known_values() {
        assert!(rel(zeta(2.0), PI * PI / 6.0) < 1e-12);
        assert!(rel(zeta(4.0), PI.powi(4) / 90.0) < 1e-12);
        // Mean regime duration at tail exponent 3.5. (An independent
        // Euler-Maclaurin oracle; a coarse partial sum approximating this
        // ratio as ~1.194 overshoots because both series clip tail mass.)
        let mean_duration = zeta(2.5) / zeta(3.5);
        assert!(rel(mean_duration, 1.1905981493617699) < 1e-10, "{mean_duration}");
    }

    #[test]
    fn duration_sampler_tail_frequencies_match_power_law() {
        // The long-memory mechanism lives entirely in the duration tail, so
        // check it directly: counts of long regimes against exact zeta-tail
        // probabilities (Poisson bands).
        let alpha = 3.5;
        let mut sampler = DurationSampler::new(alpha);
        let mut rng = stream(7);
        let n = 4_000_000usize;
        let mut ge10 = 0u64;
        let mut ge100 = 0u64;
        for _ in 0..n {
            let d = sampler.sample(&mut rng);
            if d >= 10 {
                ge10 += 1;
            }
            if d >= 100 {
                ge100 += 1;
            }
        }
        let inv_zeta = 1.0 / zeta(alpha);
        let tail_prob = |lo: usize| -> f64 {
            // Exact partial sum plus an Euler-Maclaurin remainder.
            let big = 1 << 20;
            let direct: f64 = (lo..big).map(|k| (k as f64).powf(-alpha)).sum();
            let nf = big as f64;
            (direct + nf.powf(1.0 - alpha) / (alpha - 1.0) - 0.5 * nf.powf(-alpha)) * inv_zeta
        };
        for (count, lo) in [(ge10, 10usize), (ge100, 100)] {
            let lambda = n as f64 * tail_prob(lo);
            let band = 4.0 * lambda.sqrt();
            assert!(
                (count as f64 - lambda).abs() < band,
                ">= {lo}: {count} vs {lambda:.1}"
            );
        }
    }

    #[test]
    fn duration_sampler_mean_matches_zeta_ratio() {
        let mut sampler = DurationSampler::new(3.5);
        let mut rng = stream(99);
        let n = 1_000_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let d = sampler.sample(&mut rng) as f64;
            sum += d;
            sum_sq += d * d;
        }
        let mean = sum / n as f64;
        let var = sum_sq / n as f64 - mean * mean;
        let target = zeta(2.5) / zeta(3.5);
        let se = (var / n as f64).sqrt();
        assert!((mean - target).abs() < 3.0 * se, "{mean} vs {target} (se {se})");
    }

    #[test]
    fn renewal_with_rare_unit_regimes_behaves_like_fixed_ar() {
        // With p ~ 0 the coefficient is essentially always c, so the lag-1
        // sample autocorrelation sits near c.
        let x = simulate(&DgpSpec {
            kind: DgpKind::Renewal {
                c: 0.5,
                p: 1e-9,
                exponent: 3.5,
            },
            n: 1 << 14,
            seed: 55,
            burn_in: DEFAULT_BURN_IN,
        })
        .unwrap();
        let v = x.values();
        let n = v.len() as f64;
        let mean: f64 = v.iter().sum::<f64>() / n;
        let var: f64 = v.iter().map(|x| (x - mean).powi(2)).sum();
        let cov: f64 = v.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
        assert!((cov / var - 0.5).abs() < 0.05, "{}", cov / var);
    }

    #[test]
    fn renewal_autocovariance_decay_is_preasymptotic_at_practical_sizes() {
        // The theoretical tail Cov ~ C h^(3 - alpha) exists, but its
        // time-average estimator is mean-dominated by regimes of length
        // ~ 10^3..10^4, which occur with probability ~ 1e-4 per sample at
        // n = 1e5. Typical samples therefore show a much steeper
        // pre-asymptotic decay over h in [10, 100] (population local slopes
        // run -1.6..-3 even on an 8M-point sample, and partial-sum
        // variances stay flat). Pin the regime actually observable at this
        // scale: decay clearly steeper than the asymptote, but not
        // exponential collapse. If this ever starts matching the asymptote
        // here, something about the generator changed and deserves a fresh
        // look.
        let alpha = 3.5;
        let lags = [10usize, 16, 25, 40, 63, 100];
        let reps = 50;
        let n = 100_000;
        let mut slopes = Vec::with_capacity(reps);
        for r in 0..reps {
            let x = simulate(&DgpSpec {
                kind: DgpKind::Renewal {
                    c: 0.5,
                    p: 0.5,
                    exponent: alpha,
                },
                n,
                seed: crate::rng::derive_seed(123, r as u64),
                burn_in: DEFAULT_BURN_IN,
            })
            .unwrap();
            let v = x.values();
            let mean: f64 = v.iter().sum::<f64>() / n as f64;
            let gamma = |h: usize| -> f64 {
                (0..n - h)
                    .map(|t| (v[t] - mean) * (v[t + h] - mean))
                    .sum::<f64>()
                    / n as f64
            };
            let pts: Vec<(f64, f64)> = lags
                .iter()
                .filter_map(|&h| {
                    let g = gamma(h);
                    (g > 0.0).then(|| ((h as f64).ln(), g.ln()))
                })
                .collect();
            if pts.len() < 4 {
                continue;
            }
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
            let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
                / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
            slopes.push(slope);
        }
        assert!(slopes.len() >= 40, "only {} usable slopes", slopes.len());
        let mean_slope = slopes.iter().sum::<f64>() / slopes.len() as f64;
        let asymptote = 3.0 - alpha;
        assert!(
            mean_slope < asymptote - 0.4 && mean_slope > -3.5,
            "mean slope {mean_slope} (asymptote {asymptote})"
        );
    }

    /// Simplest-possible independent simulator of the same switching model:
    /// durations by linear scan over the exact zeta-normalized masses, then
    /// the recursion written as a regime list. Used to cross-check the
    /// production generator distributionally.
    fn renewal_reference(c: f64, p: f64, alpha: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = stream(seed);
        let inv_zeta = 1.0 / zeta(alpha);
        let draw_duration = move |u: f64| -> usize {
            let mut acc = 0.0;
            let mut k = 0usize;
            loop {
                k += 1;
                acc += (k as f64).powf(-alpha) * inv_zeta;
                if acc >= u || k > 100_000_000 {
                    return k;
                }
            }
        };
        // Build the regime list first, then run the recursion over it.
        let burn = DEFAULT_BURN_IN;
        let mut coeffs = Vec::with_capacity(n + burn);
        while coeffs.len() < n + burn {
            let d = draw_duration(rng.random());
            let a = if rng.random::<f64>() < p { 1.0 } else { c };
            for _ in 0..d {
                coeffs.push(a);
                if coeffs.len() == n + burn {
                    break;
                }
            }
        }
        let mut x = 0.0;
        let mut out = Vec::with_capacity(n);
        for (t, a) in coeffs.into_iter().enumerate() {
            let noise: f64 = rng.sample(StandardNormal);
            x = a * x + noise;
            if t >= burn {
                out.push(x);
            }
        }
        out
    }

    #[test]
    fn renewal_generator_agrees_with_reference_simulator() {
        // Same law, two independent code paths: compare mean sample
        // variance and lag-1/lag-5 autocorrelations across replications
        // within combined 3-SE bands.
        let (c, p, alpha) = (0.5, 0.5, 3.5);
        let reps = 40;
        let n = 4096;
        let summarize = |series: &[Vec<f64>]| -> [(f64, f64); 3] {
            let stats: Vec<[f64; 3]> = series
                .iter()
                .map(|v| {
                    let nf = v.len() as f64;
                    let mean: f64 = v.iter().sum::<f64>() / nf;
                    let var: f64 = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / nf;
                    let rho = |h: usize| -> f64 {
                        (0..v.len() - h)
                            .map(|t| (v[t] - mean) * (v[t + h] - mean))
                            .sum::<f64>()
                            / (nf * var)
                    };
                    [var, rho(1), rho(5)]
                })
                .collect();
            let mut out = [(0.0, 0.0); 3];
            for (i, slot) in out.iter_mut().enumerate() {
                let m: f64 = stats.iter().map(|s| s[i]).sum::<f64>() / reps as f64;
                let sd: f64 = (stats.iter().map(|s| (s[i] - m).powi(2)).sum::<f64>()
                    / (reps as f64 - 1.0))
                    .sqrt();
                *slot = (m, sd / (reps as f64).sqrt());
            }
            out
        };
        let ours: Vec<Vec<f64>> = (0..reps)
            .map(|r| {
                simulate(&DgpSpec {
                    kind: DgpKind::Renewal {
                        c,
                        p,
                        exponent: alpha,
                    },
                    n,
                    seed: crate::rng::derive_seed(500, r),
                    burn_in: DEFAULT_BURN_IN,
                })
                .unwrap()
                .values()
                .to_vec()
            })
            .collect();
        let reference: Vec<Vec<f64>> = (0..reps)
            .map(|r| renewal_reference(c, p, alpha, n, crate::rng::derive_seed(900, r)))
            .collect();
        let a = summarize(&ours);
        let b = summarize(&reference);
        for (i, name) in ["variance", "rho(1)", "rho(5)"].iter().enumerate() {
            let gap = (a[i].0 - b[i].0).abs();
            let band = 3.0 * (a[i].1.powi(2) + b[i].1.powi(2)).sqrt();
            assert!(gap < band, "{name}: {:?} vs {:?}", a[i], b[i]);
        }
    }

    #[test]
    fn spec_validation_rejects_bad_domains() {
        let bad = [
            DgpKind::Farima { d: 1.5, phi: 0.0 },
            DgpKind::Farima { d: 0.0, phi: 1.0 },
            DgpKind::Aggregated {
                a: 0.0,
                b: 1.5,
                panels: 10,
            },
            DgpKind::Aggregated {
                a: 1.0,
                b: 1.0,
                panels: 10,
            },
            DgpKind::Renewal {
                c: 0.5,
                p: 0.5,
                exponent: 3.0,
            },
            DgpKind::Renewal {
                c: 1.0,
                p: 0.5,
                exponent: 3.5,
            },
            DgpKind::Break {
                d: 0.5,
                delta_break: 1.0,
                trend: None,
            },
            DgpKind::Break {
                d: 0.2,
                delta_break: -1.0,
                trend: None,
            },
        ];
        for kind in bad {
            let spec = DgpSpec {
                kind,
                n: 100,
                seed: 0,
                burn_in: 10,
            };
            assert!(spec.validate().is_err(), "{:?}", spec.kind);
        }
        assert!(farima_spec(0.0, 0.0, 15, 0).validate().is_err());
    }

    #[test]
    fn implied_memory_parameters() {
        assert_eq!(DgpKind::Farima { d: 0.3, phi: 0.0 }.implied_d(), 0.3);
        assert_eq!(
            DgpKind::Aggregated {
                a: 1.0,
                b: 1.5,
                panels: 1
            }
            .implied_d(),
            0.25
        );
        assert_eq!(
            DgpKind::Renewal {
                c: 0.5,
                p: 0.5,
                exponent: 3.5
            }
            .implied_d(),
            0.25
        );
        assert!(DgpKind::Farima { d: 0.3, phi: 0.0 }.has_free_d());
        assert!(!DgpKind::Renewal {
            c: 0.5,
            p: 0.5,
            exponent: 3.5
        }
        .has_free_d());
        let replaced = DgpKind::Farima { d: 0.3, phi: 0.2 }.with_d(0.4);
        assert_eq!(replaced, DgpKind::Farima { d: 0.4, phi: 0.2 });
    }

    #[test]
    fn dgp_spec_serializes_with_kind_tag() {
        let spec = farima_spec(0.3, 0.5, 256, 1);
        let json = serde_json::to_string(&spec).unwrap();
        assert!(json.contains("\"kind\":\"farima\""), "{json}");
        let back: DgpSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(spec, back);
        // burn_in defaults when omitted.
        let parsed: DgpSpec = serde_json::from_str(
            r#"{"kind":"break","d":0.2,"delta_break":1.0,"trend":null,"n":500,"seed":42}"#,
        )
        .unwrap();
        assert_eq!(parsed.burn_in, DEFAULT_BURN_IN);
    }
}
