//! Entropy of a Euclidean ball under Lebesgue measure, and the supremum and
//! hitting bounds for smooth random fields built on it.
//!
//! `Υ°` is the ball of radius `r0`; scale `k` uses balls of radius
//! `r_k = r0·2^{−k}`. Entropy weights are `c₁ = 1/3`, `c_k = 2^{−k+2}/3`.

use std::f64::consts::LN_2;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// Tail contributions below this are dropped.
pub const TAIL_TOL: f64 = 1e-12;

/// Largest dimension the grid oracle accepts.
pub const GRID_MAX_DIM: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Measure {
    LebesgueEuclidean,
    /// Volume counting with `cells` grid cells per small-ball radius.
    NumericGrid {
        cells: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BallSpec {
    pub dim: usize,
    pub r0: f64,
    pub measure: Measure,
}

impl BallSpec {
    pub fn new(dim: usize, r0: f64, measure: Measure) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        if !(r0 > 0.0) || !r0.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "r0 must be positive, got {r0}"
            )));
        }
        if let Measure::NumericGrid { cells } = measure {
            if cells == 0 {
                return Err(Error::InvalidArgument(
                    "grid resolution must be positive".into(),
                ));
            }
        }
        Ok(Self { dim, r0, measure })
    }

    pub fn radius(&self, k: usize) -> f64 {
        self.r0 * 0.5f64.powi(k as i32)
    }
}

/// Entropy weight `c_k`, `k ≥ 1`.
pub fn entropy_weight(k: usize) -> f64 {
    assert!(k >= 1, "entropy weights start at k = 1");
    if k == 1 {
        1.0 / 3.0
    } else {
        4.0 / 3.0 * 0.5f64.powi(k as i32)
    }
}

/// `Σ_{k>K} c_k`.
pub fn weight_tail(k_trunc: usize) -> f64 {
    if k_trunc == 0 {
        return 1.0;
    }
    4.0 / 3.0 * 0.5f64.powi(k_trunc as i32)
}

/// `Σ_{k>K} k·c_k`.
pub fn weighted_index_tail(k_trunc: usize) -> f64 {
    if k_trunc == 0 {
        return 7.0 / 3.0;
    }
    4.0 / 3.0 * (k_trunc as f64 + 2.0) * 0.5f64.powi(k_trunc as i32)
}

/// `log M_k = (k+1)p·log 2` for the analytic ball bound.
fn analytic_log_mk(p: usize, k: usize) -> f64 {
    ((k + 1) * p) as f64 * LN_2
}

pub fn covering_ratios(ball: &BallSpec, k_max: usize) -> Result<Vec<f64>> {
    if k_max == 0 {
        return Err(Error::InvalidArgument("need K ≥ 1".into()));
    }
    match ball.measure {
        Measure::LebesgueEuclidean => Ok((1..=k_max)
            .map(|k| 2f64.powi(((k + 1) * ball.dim) as i32))
            .collect()),
        Measure::NumericGrid { cells } => {
            if ball.dim > GRID_MAX_DIM {
                return Err(Error::InvalidArgument(format!(
                    "grid oracle limited to p ≤ {GRID_MAX_DIM}, got p = {}",
                    ball.dim
                )));
            }
            Ok((1..=k_max)
                .map(|k| numeric_ratio(ball.dim, ball.r0, ball.radius(k), cells))
                .collect())
        }
    }
}

fn unit_ball_volume(p: usize) -> f64 {
    match p {
        1 => 2.0,
        2 => std::f64::consts::PI,
        3 => 4.0 / 3.0 * std::f64::consts::PI,
        _ => unreachable!("grid oracle dimension checked by caller"),
    }
}

/// Number of offsets `t ∈ [0, R]` at which the small ball is placed.
const RADIAL_POINTS: usize = 17;

/// `max_t vol(B(0,R)) / vol(B(t·e₁, r) ∩ B(0,R))` with the intersection
/// volume counted on a cell-centred grid of spacing `r/cells`.
fn numeric_ratio(p: usize, big: f64, small: f64, cells: usize) -> f64 {
    let num = unit_ball_volume(p) * big.powi(p as i32);
    (0..RADIAL_POINTS)
        .into_par_iter()
        .map(|i| {
            let t = big * i as f64 / (RADIAL_POINTS - 1) as f64;
            num / intersection_volume(p, big, small, t, cells)
        })
        .reduce(|| 0.0, f64::max)
}

fn intersection_volume(p: usize, big: f64, small: f64, t: f64, cells: usize) -> f64 {
    let n = 2 * cells;
    let h = small / cells as f64;
    let coord = |i: usize| -small + (i as f64 + 0.5) * h;
    let mut count: u64 = 0;
    let mut point = [0.0f64; GRID_MAX_DIM];
    let total = n.pow(p as u32);
    for idx in 0..total {
        let mut rest = idx;
        let mut local_sq = 0.0;
        for c in point.iter_mut().take(p) {
            *c = coord(rest % n);
            rest /= n;
            local_sq += *c * *c;
        }
        if local_sq > small * small {
            continue;
        }
        let shifted = point[0] + t;
        let global_sq = local_sq - point[0] * point[0] + shifted * shifted;
        if global_sq <= big * big {
            count += 1;
        }
    }
    count as f64 * h.powi(p as i32)
}

/// How `log(2M_k)` continues beyond the supplied sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TailModel {
    /// `log(2M_k) = log 2 + (k+1)p·log 2` exactly.
    AnalyticBall { p: usize },
    /// Continue the last increment of `log(2M_k)` linearly.
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainingSpec {
    #[serde(rename = "M_k")]
    pub m_k: Vec<f64>,
    #[serde(rename = "Q")]
    pub q: f64,
    #[serde(rename = "K_trunc")]
    pub k_trunc: usize,
    pub tail_bound: f64,
}

/// `Q = Σ c_k log(2M_k)` over the given `M_k` plus the closed-form tail.
pub fn chaining_entropy(m_ks: &[f64], tail: TailModel) -> Result<ChainingSpec> {
    if m_ks.is_empty() {
        return Err(Error::InvalidArgument("empty M_k sequence".into()));
    }
    if let Some(bad) = m_ks.iter().find(|&&m| !(m >= 1.0)) {
        return Err(Error::InvalidArgument(format!(
            "M_k must be ≥ 1, got {bad}"
        )));
    }
    let logs: Vec<f64> = m_ks.iter().map(|m| (2.0 * m).ln()).collect();
    Ok(entropy_from_logs(m_ks.to_vec(), &logs, tail))
}

fn entropy_from_logs(m_k: Vec<f64>, logs: &[f64], tail: TailModel) -> ChainingSpec {
    let k_trunc = logs.len();
    let head: f64 = logs
        .iter()
        .enumerate()
        .map(|(i, l)| entropy_weight(i + 1) * l)
        .sum();
    // log(2M_k) ≈ a + b·k for k > K
    let (a, b) = match tail {
        TailModel::AnalyticBall { p } => ((1 + p) as f64 * LN_2, p as f64 * LN_2),
        TailModel::Linear => {
            let last = logs[k_trunc - 1];
            let b = if k_trunc >= 2 {
                (last - logs[k_trunc - 2]).max(0.0)
            } else {
                0.0
            };
            (last - b * k_trunc as f64, b)
        }
    };
    let tail_bound = a * weight_tail(k_trunc) + b * weighted_index_tail(k_trunc);
    ChainingSpec {
        m_k,
        q: head + tail_bound,
        k_trunc,
        tail_bound,
    }
}

/// Entropy of the analytic ball family, truncated once the tail is below
/// [`TAIL_TOL`].
pub fn analytic_ball_entropy(p: usize) -> Result<ChainingSpec> {
    if p == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    let tail = TailModel::AnalyticBall { p };
    let (a, b) = ((1 + p) as f64 * LN_2, p as f64 * LN_2);
    let mut k = 1;
    while a * weight_tail(k) + b * weighted_index_tail(k) >= TAIL_TOL {
        k += 1;
    }
    let logs: Vec<f64> = (1..=k).map(|k| LN_2 + analytic_log_mk(p, k)).collect();
    let m_k = (1..=k).map(|k| 2f64.powi(((k + 1) * p) as i32)).collect();
    Ok(entropy_from_logs(m_k, &logs, tail))
}

/// Closed form `Q = log 2·(1 + 10p/3)` for the analytic ball family.
pub fn analytic_q(p: usize) -> f64 {
    LN_2 * (1.0 + 10.0 * p as f64 / 3.0)
}

/// `𝔠₁` with `Q = 𝔠₁·p` for the analytic ball family.
pub fn smooth_c1(p: usize) -> f64 {
    10.0 / 3.0 * LN_2 + LN_2 / p as f64
}

/// Log-MGF bound `λ²/2 + Q` for the normalized supremum increment.
pub fn chaining_mgf_bound(lambda: f64, r0: f64, nu0: f64, q: f64, g0: f64) -> Result<f64> {
    if !(r0 > 0.0) || !(nu0 > 0.0) {
        return Err(Error::InvalidArgument("r0 and ν₀ must be positive".into()));
    }
    if lambda > g0 {
        return Err(Error::OutsideMgfRange { lambda, g0 });
    }
    Ok(lambda * lambda / 2.0 + q)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftBranch {
    Moderate,
    LargeDeviation,
}

/// Log-probability bound for the drifted supremum exceeding `z`.
/// Positive values are vacuous and returned unchanged.
pub fn drifted_sup_logprob(rho: f64, z: f64, g0: f64, q: f64) -> Result<(f64, DriftBranch)> {
    if !(rho > 0.0) || !(z > 1.0) || rho * (z - 1.0) < 2.0 {
        return Err(Error::Precondition(format!(
            "need ρ > 0, z > 1, ρ(z−1) ≥ 2 (ρ = {rho}, z = {z})"
        )));
    }
    let common = (4.0 * z).ln() + q;
    if (2.0 * rho * z).sqrt() <= g0 {
        Ok((-rho * (z - 1.0) + common, DriftBranch::Moderate))
    } else {
        Ok((
            -g0 * (rho * (z - 1.0)).sqrt() + g0 * g0 / 2.0 + common,
            DriftBranch::LargeDeviation,
        ))
    }
}

/// Quantile `z₀(x, Q)` of the drifted supremum with `ρ = 1`.
pub fn local_quantile_z0(x: f64, q: f64, g0: f64) -> Result<f64> {
    if !(x >= 0.0) || x + q < 4.0 || g0 < 2.0 {
        return Err(Error::Precondition(format!(
            "need x ≥ 0, x + Q ≥ 4, g₀ ≥ 2 (x = {x}, Q = {q}, g₀ = {g0})"
        )));
    }
    let s = (x + q).sqrt();
    if 1.0 + s <= g0 {
        Ok((1.0 + s).powi(2))
    } else {
        Ok(1.0 + (2.0 * (x + q) / g0 + g0).powi(2))
    }
}

/// `z₀(x, 𝔠₁p)` for a smooth field on a `p`-dimensional ball.
pub fn smooth_local_quantile(x: f64, p: usize, g0: f64) -> Result<f64> {
    if p == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    local_quantile_z0(x, smooth_c1(p) * p as f64, g0)
}

/// Scales `μ_k = μ₀2^{−k}`, `k = 0..=k_max`, with `𝔱(μ_k) = k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MultiscaleSpec {
    pub mu0: f64,
    pub k_max: usize,
}

impl Default for MultiscaleSpec {
    fn default() -> Self {
        Self {
            mu0: 1.0,
            k_max: 60,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Scale {
    pub k: usize,
    pub mu: f64,
    pub t: f64,
}

impl MultiscaleSpec {
    pub fn new(mu0: f64, k_max: usize) -> Result<Self> {
        if !(mu0 > 0.0) || !mu0.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "μ₀ must be positive, got {mu0}"
            )));
        }
        Ok(Self { mu0, k_max })
    }

    pub fn scales(&self) -> impl Iterator<Item = Scale> + '_ {
        (0..=self.k_max).map(move |k| Scale {
            k,
            mu: self.mu0 * 0.5f64.powi(k as i32),
            t: k as f64,
        })
    }

    /// `Σ e^{−𝔱(μ)}` over the full infinite family.
    pub fn weight_sum() -> f64 {
        1.0 / (1.0 - (-1.0f64).exp())
    }
}

/// Scales with `1 + √(x + Q + 𝔱(μ)) ≤ ν₀𝔤(r)/μ`; may be empty.
pub fn multiscale_set(x: f64, q: f64, g_of_r: f64, nu0: f64, ms: &MultiscaleSpec) -> Vec<Scale> {
    ms.scales()
        .filter(|s| 1.0 + (x + q + s.t).sqrt() <= nu0 * g_of_r / s.mu)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UpperFunction {
    pub value: f64,
    pub argmax: Scale,
    /// Unconstrained maximizer `M/(3ν₀r²)` of the continuous objective.
    pub mu_continuous: f64,
}

/// `L* = max over admitted μ of μM/(3ν₀) − μ²r²/2 − 2𝔱(μ)`.
pub fn upper_function_lstar(
    m_val: f64,
    r: f64,
    admitted: &[Scale],
    nu0: f64,
) -> Result<UpperFunction> {
    let objective = |s: &Scale| s.mu * m_val / (3.0 * nu0) - s.mu * s.mu * r * r / 2.0 - 2.0 * s.t;
    let best = admitted
        .iter()
        .max_by(|a, b| objective(a).total_cmp(&objective(b)))
        .ok_or_else(|| Error::InvalidArgument("no admissible scale".into()))?;
    Ok(UpperFunction {
        value: objective(best),
        argmax: *best,
        mu_continuous: m_val / (3.0 * nu0 * r * r),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HittingCheck {
    pub holds: bool,
    pub margin: f64,
}

/// Whether `L*_min ≥ 2(x + Q)`, which bounds the hitting probability by `2e⁻ˣ`.
pub fn hitting_check(lstar_min: f64, x: f64, q: f64) -> Result<HittingCheck> {
    if x + q < 2.5 {
        return Err(Error::Precondition(format!(
            "need x + Q ≥ 2.5 (x = {x}, Q = {q})"
        )));
    }
    let margin = lstar_min - 2.0 * (x + q);
    Ok(HittingCheck {
        holds: margin >= 0.0,
        margin,
    })
}
