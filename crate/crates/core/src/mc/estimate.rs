//! Empirical estimates of the sub-Gaussian constants `ν₀` and `ω₀`.
//!
//! For each direction `γ` the standardized statistic `s` is sampled, and the
//! scale is the largest `√(2(L(λ) − 3·se)/λ²)` over the grid, where `L` is
//! the empirical log-MGF and `se` its delta-method standard error. Taking a
//! maximum over a growing grid keeps the estimate monotone in the grid.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::eigenmax::{random_unit, EnsembleSpec};
use crate::error::{Error, Result};
use crate::linalg::SpdMatrix;
use crate::rng::{tags, PhiloxRng};

/// `λ·max|s|` beyond which the MGF is not representable in `f64`.
const EXP_LIMIT: f64 = 700.0;
/// Lower bound returned for `ω₀`; a linear field has no gradient increment.
pub const OMEGA0_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Estimate {
    /// Floored value: `ν₀ ≥ 1`, `ω₀ ≥ OMEGA0_FLOOR`.
    pub value: f64,
    pub raw: f64,
    pub lambda_used: Vec<f64>,
    pub warnings: Vec<String>,
}

fn check_inputs(lambda_grid: &[f64], directions: usize, trials: u64) -> Result<()> {
    if lambda_grid.is_empty() || lambda_grid.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
        return Err(Error::InvalidArgument(
            "λ grid must be nonempty and positive".into(),
        ));
    }
    if directions == 0 || trials < 2 {
        return Err(Error::InvalidArgument(
            "need at least one direction and two trials".into(),
        ));
    }
    Ok(())
}

/// `(L(λ), se)` for the empirical log-MGF, computed with a log-sum-exp shift.
fn log_mgf(samples: &[f64], lambda: f64) -> (f64, f64) {
    let shift = samples
        .iter()
        .map(|s| lambda * s)
        .fold(f64::NEG_INFINITY, f64::max);
    let t = samples.len() as f64;
    let w: Vec<f64> = samples.iter().map(|s| (lambda * s - shift).exp()).collect();
    let mean = w.iter().sum::<f64>() / t;
    let var = w.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (t - 1.0);
    (shift + mean.ln(), var.sqrt() / (mean * t.sqrt()))
}

/// Largest sub-Gaussian scale over directions and `λ`; `samples[d]` holds
/// the draws for direction `d`.
fn mgf_scale(
    samples: &[Vec<f64>],
    lambda_grid: &[f64],
    warnings: &mut Vec<String>,
) -> (f64, Vec<f64>) {
    let peak = samples.iter().flatten().fold(0.0f64, |m, s| m.max(s.abs()));
    let mut used = Vec::new();
    for &l in lambda_grid {
        if l * peak > EXP_LIMIT {
            let msg = format!("MGF overflow at λ = {l}; grid truncated");
            log::warn!("{msg}");
            warnings.push(msg);
            break;
        }
        used.push(l);
    }
    let mut best = 0.0f64;
    for dir in samples {
        for &l in &used {
            let (lm, se) = log_mgf(dir, l);
            best = best.max(2.0 * (lm - 3.0 * se) / (l * l));
        }
    }
    (best.sqrt(), used)
}

/// `ν₀` for the quadratic ensemble field at `θ`, using
/// `s = γᵀ(A − EA)θ / √(γᵀ Var(Aθ) γ)`.
pub fn estimate_nu0(
    e: &EnsembleSpec,
    theta: &DVector<f64>,
    directions: usize,
    lambda_grid: &[f64],
    trials: u64,
    seed: u64,
) -> Result<Estimate> {
    check_inputs(lambda_grid, directions, trials)?;
    let p = e.dim();
    if theta.len() != p {
        return Err(Error::DimensionMismatch {
            what: "θ",
            expected: p,
            got: theta.len(),
        });
    }
    let var = e.var_a_theta(theta);
    let gammas: Vec<DVector<f64>> = (0..directions as u64)
        .map(|d| random_unit(p, &mut PhiloxRng::stream(seed, d, tags::DIRECTIONS)))
        .collect();
    let scales: Vec<f64> = gammas
        .iter()
        .map(|g| g.dot(&(var.matrix() * g)).sqrt())
        .collect();
    let mut warnings = Vec::new();
    if scales.iter().any(|s| !(*s > 0.0)) {
        warnings.push("zero variance direction; ν₀ floored to 1".into());
        return Ok(Estimate {
            value: 1.0,
            raw: 0.0,
            lambda_used: Vec::new(),
            warnings,
        });
    }
    let draws: Vec<Vec<f64>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = PhiloxRng::stream(seed, t, tags::NU0);
            let w = e.noise.sample_sum(e.n, p, &mut rng) * theta;
            gammas
                .iter()
                .zip(&scales)
                .map(|(g, s)| g.dot(&w) / s)
                .collect()
        })
        .collect();
    let samples = transpose(&draws, directions);
    let (raw, lambda_used) = mgf_scale(&samples, lambda_grid, &mut warnings);
    let value = if raw < 1.0 {
        let msg = format!("ν₀ estimate {raw:.4} floored to 1");
        log::warn!("{msg}");
        warnings.push(msg);
        1.0
    } else {
        raw
    };
    Ok(Estimate {
        value,
        raw,
        lambda_used,
        warnings,
    })
}

/// Gradient increment `∇ζ(θ + u) − ∇ζ(θ) = 2(A − EA)u` of the quadratic
/// ensemble field, driven by one noise draw.
pub fn gradient_increment(
    e: &EnsembleSpec,
) -> impl Fn(&mut PhiloxRng, &DVector<f64>) -> DVector<f64> + Sync + '_ {
    move |rng, u| e.noise.sample_sum(e.n, e.dim(), rng) * u * 2.0
}

/// `ω₀` from gradient increments along probes `u` with `‖V₀u‖ = r`, using
/// `s = γᵀ·increment / (ε r ‖V₀γ‖)` and `ω₀ = κ/ν₀`.
///
/// Trial `t` feeds the same noise stream to every probe.
#[allow(clippy::too_many_arguments)]
pub fn estimate_omega0<F>(
    increment: F,
    v0sq: &SpdMatrix,
    eps: f64,
    nu0: f64,
    r: f64,
    probes: usize,
    directions: usize,
    lambda_grid: &[f64],
    trials: u64,
    seed: u64,
) -> Result<Estimate>
where
    F: Fn(&mut PhiloxRng, &DVector<f64>) -> DVector<f64> + Sync,
{
    check_inputs(lambda_grid, directions, trials)?;
    if probes == 0 {
        return Err(Error::InvalidArgument("need at least one probe".into()));
    }
    if !(eps > 0.0 && r > 0.0 && nu0 > 0.0) {
        return Err(Error::InvalidArgument(
            "ε, r and ν₀ must be positive".into(),
        ));
    }
    v0sq.require_pd("positive definite (V₀²)")?;
    let p = v0sq.dim();
    let inv_root = v0sq.map_spectrum(|x| 1.0 / x.sqrt()).into_matrix();
    let probe_dirs: Vec<DVector<f64>> = (0..probes as u64)
        .map(|k| &inv_root * random_unit(p, &mut PhiloxRng::stream(seed, k, tags::OMEGA0)) * r)
        .collect();
    let gammas: Vec<DVector<f64>> = (0..directions as u64)
        .map(|d| random_unit(p, &mut PhiloxRng::stream(seed, d, tags::DIRECTIONS)))
        .collect();
    let norms: Vec<f64> = gammas
        .iter()
        .map(|g| g.dot(&(v0sq.matrix() * g)).sqrt() * eps * r)
        .collect();
    let groups = probes * directions;
    let draws: Vec<Vec<f64>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut out = Vec::with_capacity(groups);
            for u in &probe_dirs {
                let mut rng = PhiloxRng::stream(seed, t, tags::MOMENTS);
                let inc = increment(&mut rng, u);
                for (g, nrm) in gammas.iter().zip(&norms) {
                    out.push(g.dot(&inc) / nrm);
                }
            }
            out
        })
        .collect();
    let samples = transpose(&draws, groups);
    let mut warnings = Vec::new();
    let (kappa, lambda_used) = mgf_scale(&samples, lambda_grid, &mut warnings);
    let raw = kappa / nu0;
    let value = if raw < OMEGA0_FLOOR {
        let msg = format!("ω₀ estimate {raw:e} floored to {OMEGA0_FLOOR:e}");
        log::warn!("{msg}");
        warnings.push(msg);
        OMEGA0_FLOOR
    } else {
        raw
    };
    Ok(Estimate {
        value,
        raw,
        lambda_used,
        warnings,
    })
}

fn transpose(rows: &[Vec<f64>], cols: usize) -> Vec<Vec<f64>> {
    let m = DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]);
    (0..cols)
        .map(|j| m.column(j).iter().copied().collect())
        .collect()
}
