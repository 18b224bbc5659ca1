//! Disk cache for kernel matrices (with their eigenvalue spectra) and null
//! quantiles, so repeated command-line runs skip the quadrature and
//! characteristic-function work.
//!
//! Location: the directory named by the `FRACSPEC_CACHE_DIR` environment
//! variable, else `~/.cache/fracspec`, else a `fracspec` directory under the
//! system temporary path. Every entry is one JSON file whose key fields are
//! re-verified on load; mismatched, unreadable, or corrupt entries are
//! treated as misses and recomputed transparently. Writes go through a
//! temporary sibling file plus rename, so concurrent processes never observe
//! a half-written entry.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{build_sigma, EigenSpectrum, KernelMatrix, KernelRecord, MemoryParam, Regime};
use crate::nulldist::{Method, NullDistribution};
use crate::stats::CriticalValues;

/// Environment variable overriding the cache directory.
pub const CACHE_DIR_ENV: &str = "FRACSPEC_CACHE_DIR";

/// Resolves the cache directory (without creating it).
pub fn cache_dir() -> PathBuf {
    if let Some(dir) = std::env::var_os(CACHE_DIR_ENV) {
        return PathBuf::from(dir);
    }
    if let Some(home) = std::env::var_os("HOME") {
        return Path::new(&home).join(".cache").join("fracspec");
    }
    std::env::temp_dir().join("fracspec")
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().expect("cache paths have a parent");
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let tmp = path.with_extension(format!(
        "tmp.{}.{}",
        std::process::id(),
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.subsec_nanos())
    ));
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn kernel_file(dir: &Path, regime: Regime, d: Option<f64>, s: usize, resolution: usize) -> PathBuf {
    let d_part = d.map_or_else(|| "none".to_string(), |v| v.to_string());
    dir.join(format!(
        "kernel-{}-d{}-s{}-r{}.json",
        regime.as_str(),
        d_part,
        s,
        resolution
    ))
}

/// Loads or computes the covariance matrix and spectrum for a regime,
/// persisting fresh computations.
pub fn sigma_cached(
    dir: &Path,
    regime: Regime,
    d: Option<MemoryParam>,
    s: usize,
    resolution: usize,
) -> Result<(KernelMatrix, EigenSpectrum)> {
    let path = kernel_file(dir, regime, d.map(MemoryParam::value), s, resolution);
    if let Some(hit) = load_kernel(&path, regime, d.map(MemoryParam::value), s, resolution) {
        return Ok(hit);
    }
    let matrix = build_sigma(regime, d, s, resolution)?;
    let record = matrix.to_record()?;
    let mut weights = Vec::with_capacity(record.eigenvalues.len() + 1);
    weights.push(1.0);
    weights.extend_from_slice(&record.eigenvalues);
    let spectrum = EigenSpectrum::new(weights)?;
    write_atomic(&path, &serde_json::to_vec_pretty(&record)?)?;
    Ok((matrix, spectrum))
}

fn load_kernel(
    path: &Path,
    regime: Regime,
    d: Option<f64>,
    s: usize,
    resolution: usize,
) -> Option<(KernelMatrix, EigenSpectrum)> {
    let text = std::fs::read_to_string(path).ok()?;
    let record: KernelRecord = serde_json::from_str(&text).ok()?;
    if record.regime != regime || record.d != d || record.s != s || record.resolution != resolution
    {
        return None;
    }
    let mut weights = Vec::with_capacity(record.eigenvalues.len() + 1);
    weights.push(1.0);
    weights.extend_from_slice(&record.eigenvalues);
    let spectrum = EigenSpectrum::new(weights).ok()?;
    let matrix = KernelMatrix::from_record(record).ok()?;
    Some((matrix, spectrum))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct QuantileRecord {
    s: usize,
    alpha: f64,
    resolution: usize,
    method: String,
    mc_draws: Option<usize>,
    seed: Option<u64>,
    value: f64,
    used_fallback: bool,
}

fn quantile_file(
    dir: &Path,
    s: usize,
    alpha: f64,
    resolution: usize,
    method: Method,
    mc_draws: usize,
    seed: u64,
) -> PathBuf {
    let suffix = match method {
        Method::CfInversion => String::new(),
        Method::MonteCarlo => format!("-n{mc_draws}-seed{seed}"),
    };
    dir.join(format!(
        "quantile-s{s}-a{alpha}-r{resolution}-{}{suffix}.json",
        method.as_str()
    ))
}

/// Loads or computes the null quantile `q(alpha, s)` for the test's
/// normalized-log null spectrum, persisting fresh computations. Monte Carlo
/// entries are additionally keyed by draw count and seed.
pub fn quantile_cached(
    dir: &Path,
    s: usize,
    alpha: f64,
    resolution: usize,
    method: Method,
    mc_draws: usize,
    seed: u64,
) -> Result<f64> {
    let path = quantile_file(dir, s, alpha, resolution, method, mc_draws, seed);
    if let Ok(text) = std::fs::read_to_string(&path) {
        if let Ok(rec) = serde_json::from_str::<QuantileRecord>(&text) {
            let key_matches = rec.s == s
                && rec.alpha == alpha
                && rec.resolution == resolution
                && rec.method == method.as_str()
                && match method {
                    Method::CfInversion => true,
                    Method::MonteCarlo => {
                        rec.mc_draws == Some(mc_draws) && rec.seed == Some(seed)
                    }
                };
            if key_matches {
                return Ok(rec.value);
            }
        }
    }
    let (_, spectrum) = sigma_cached(dir, Regime::NormalizedLog, None, s, resolution)?;
    let dist = NullDistribution::with_method(spectrum, method, mc_draws, seed);
    let eval = dist.critical_value(alpha)?;
    let record = QuantileRecord {
        s,
        alpha,
        resolution,
        method: method.as_str().to_string(),
        mc_draws: (method == Method::MonteCarlo).then_some(mc_draws),
        seed: (method == Method::MonteCarlo).then_some(seed),
        value: eval.value,
        used_fallback: eval.used_fallback,
    };
    write_atomic(&path, &serde_json::to_vec_pretty(&record)?)?;
    Ok(eval.value)
}

/// Disk-cached critical values for the spectral test (inversion method):
/// the lower `alpha` quantile one-sided, or the `alpha/2` and `1 - alpha/2`
/// pair two-sided.
pub fn critical_values_cached(
    dir: &Path,
    s: usize,
    alpha: f64,
    two_sided: bool,
    resolution: usize,
) -> Result<CriticalValues> {
    if !(alpha.is_finite() && alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "significance level must lie in (0, 1), got {alpha}"
        )));
    }
    let q = |a: f64| {
        quantile_cached(
            dir,
            s,
            a,
            resolution,
            Method::CfInversion,
            crate::nulldist::DEFAULT_MC_DRAWS,
            0,
        )
    };
    if two_sided {
        Ok(CriticalValues {
            low: q(alpha / 2.0)?,
            high: Some(q(1.0 - alpha / 2.0)?),
        })
    } else {
        Ok(CriticalValues {
            low: q(alpha)?,
            high: None,
        })
    }
}
