//! Binomial confidence intervals and coverage reports.

use serde::Serialize;

/// Normal quantile used for Wilson intervals (two-sided 95%).
pub const WILSON_Z: f64 = 1.96;

/// Number of Wilson half-widths tolerated before a coverage check fails.
pub const PASS_HALFWIDTHS: f64 = 3.0;

/// Wilson score interval `(centre, half-width)` for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64, z: f64) -> (f64, f64) {
    assert!(n > 0, "Wilson interval needs at least one trial");
    let n = n as f64;
    let ph = k as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (ph + z2 / (2.0 * n)) / denom;
    let hw = z / denom * (ph * (1.0 - ph) / n + z2 / (4.0 * n * n)).sqrt();
    (centre, hw)
}

pub fn wilson_halfwidth(k: u64, n: u64) -> f64 {
    wilson_interval(k, n, WILSON_Z).1
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    pub x_grid: Vec<f64>,
    pub exceed_counts: Vec<u64>,
    pub empirical_exceed: Vec<f64>,
    pub theoretical_bound: Vec<f64>,
    pub wilson_halfwidth: Vec<f64>,
    pub pass: Vec<bool>,
    pub n_trials: u64,
    pub seed: u64,
}

impl CoverageReport {
    /// Assemble from exceedance counts; `pass ⟺ empirical ≤ bound + 3·hw`.
    pub fn from_counts(
        x_grid: Vec<f64>,
        counts: Vec<u64>,
        bounds: Vec<f64>,
        n_trials: u64,
        seed: u64,
    ) -> Self {
        assert_eq!(x_grid.len(), counts.len());
        assert_eq!(x_grid.len(), bounds.len());
        let empirical: Vec<f64> = counts.iter().map(|&k| k as f64 / n_trials as f64).collect();
        let hw: Vec<f64> = counts
            .iter()
            .map(|&k| wilson_halfwidth(k, n_trials))
            .collect();
        let pass = empirical
            .iter()
            .zip(&bounds)
            .zip(&hw)
            .map(|((e, b), h)| *e <= b + PASS_HALFWIDTHS * h)
            .collect();
        Self {
            x_grid,
            exceed_counts: counts,
            empirical_exceed: empirical,
            theoretical_bound: bounds,
            wilson_halfwidth: hw,
            pass,
            n_trials,
            seed,
        }
    }

    pub fn all_pass(&self) -> bool {
        self.pass.iter().all(|&p| p)
    }
}
