//! Monte Carlo error curves: repeated sample-then-estimate runs over a grid of sample
//! sizes, with a least-squares slope of log median error against log n.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::defect::DefectConfig;
use crate::error::{invalid, Result};
use crate::estimators::{reach, ModelParams, ReachEstimate};
use crate::io::format_number;
use crate::synth::{ground_truth, sample, ManifoldSpec};

/// Description of how per-run seeds are derived, recorded with every report.
pub const SEED_RULE: &str =
    "seed = splitmix64(splitmix64(splitmix64(base) xor n) xor trial)";

/// The splitmix64 finalizer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of run `trial` at sample size `n`.
pub fn trial_seed(base: u64, n: usize, trial: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(base) ^ n as u64) ^ trial as u64)
}

/// One sample-then-estimate run. A failed run keeps its row with `error` set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub n: usize,
    pub trial: usize,
    pub seed: u64,
    pub estimate: Option<ReachEstimate>,
    pub abs_error: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSummary {
    pub truth: f64,
    pub n_grid: Vec<usize>,
    /// Median absolute error per sample size over the successful runs; `None` when
    /// every run at that size failed.
    pub median_errors: Vec<Option<f64>>,
    /// Least-squares slope of `ln(median error)` against `ln(n)`; absent when fewer than
    /// three sizes have a positive median.
    pub slope: Option<f64>,
    pub trials: usize,
    pub base_seed: u64,
    pub seed_rule: String,
    pub failed_runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub rows: Vec<RateRow>,
    pub summary: RateSummary,
}

/// Runs `trials` independent pipelines for every `n` in `n_grid`, in parallel.
pub fn run_rates(
    spec: &ManifoldSpec,
    n_grid: &[usize],
    trials: usize,
    base_seed: u64,
    params: &ModelParams,
    config: &DefectConfig,
) -> Result<RateReport> {
    let mut distinct = n_grid.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 3 {
        return invalid("the n-grid needs at least three distinct sizes to fit a slope");
    }
    if distinct.len() != n_grid.len() {
        return invalid("the n-grid contains repeated sizes");
    }
    if n_grid.contains(&0) {
        return invalid("sample sizes must be positive");
    }
    if trials == 0 {
        return invalid("at least one trial is needed");
    }
    params.validate()?;
    config.validate()?;
    let truth = ground_truth(spec)?.r.truth.value();

    let runs: Vec<(usize, usize)> = n_grid
        .iter()
        .flat_map(|&n| (0..trials).map(move |t| (n, t)))
        .collect();
    let rows: Vec<RateRow> = runs
        .par_iter()
        .map(|&(n, trial)| {
            let seed = trial_seed(base_seed, n, trial);
            let result = sample(spec, n, seed).and_then(|cloud| reach(&cloud, params, config));
            match result {
                Ok(est) => RateRow {
                    n,
                    trial,
                    seed,
                    abs_error: Some((est.r_hat - truth).abs()),
                    estimate: Some(est),
                    error: None,
                },
                Err(e) => RateRow {
                    n,
                    trial,
                    seed,
                    estimate: None,
                    abs_error: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();

    let median_errors: Vec<Option<f64>> = n_grid
        .iter()
        .map(|&n| {
            let errs: Vec<f64> = rows
                .iter()
                .filter(|r| r.n == n)
                .filter_map(|r| r.abs_error)
                .collect();
            median(errs)
        })
        .collect();
    let points: Vec<(f64, f64)> = n_grid
        .iter()
        .zip(&median_errors)
        .filter_map(|(&n, m)| match m {
            Some(m) if *m > 0.0 => Some(((n as f64).ln(), m.ln())),
            _ => None,
        })
        .collect();
    let slope = (points.len() >= 3).then(|| least_squares_slope(&points));
    let failed_runs = rows.iter().filter(|r| r.error.is_some()).count();
    Ok(RateReport {
        rows,
        summary: RateSummary {
            truth,
            n_grid: n_grid.to_vec(),
            median_errors,
            slope,
            trials,
            base_seed,
            seed_rule: SEED_RULE.to_string(),
            failed_runs,
        },
    })
}

/// Median, averaging the middle pair for even counts.
pub fn median(mut xs: Vec<f64>) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    Some(if xs.len() % 2 == 1 {
        xs[m]
    } else {
        0.5 * (xs[m - 1] + xs[m])
    })
}

/// Slope of the ordinary least-squares line through `points`.
pub fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

impl RateReport {
    /// One row per run: `n,trial,seed,r_hat,r_local,r_wfs,abs_error,branch,status`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "n,trial,seed,r_hat,r_local,r_wfs,abs_error,branch,status")?;
        for r in &self.rows {
            match (&r.estimate, r.abs_error) {
                (Some(e), Some(err)) => writeln!(
                    w,
                    "{},{},{},{},{},{},{},{},ok",
                    r.n,
                    r.trial,
                    r.seed,
                    format_number(e.r_hat),
                    format_number(e.r_local),
                    format_number(e.r_wfs),
                    format_number(err),
                    e.branch
                )?,
                _ => {
                    let msg = r.error.as_deref().unwrap_or("unknown failure");
                    writeln!(
                        w,
                        "{},{},{},,,,,,\"failed: {}\"",
                        r.n,
                        r.trial,
                        r.seed,
                        msg.replace('"', "'")
                    )?
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_summary<W: Write>(&self, mut w: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut w, &self.summary)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }
}
