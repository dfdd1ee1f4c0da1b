//! Supremum bound for a field with local quadratic structure.
//!
//! With `B = D₀⁻¹V₀²D₀⁻¹` and `λ₀ = λmax(B)`, with probability at least
//! `1 − m·e⁻ˣ` (default `m = 5`)
//!
//! ```text
//! sup_θ G(θ) − G(θ*) ≤ λ₀·z_tot(x, B)/(2(1−τ)) + 6ν₀ω₀ε r₀ (1 + √(x+3p))²
//! ```
//!
//! where `z_tot` is the total quantile of the quadratic form and
//! `τ = ε r₀ (δ₀ + 3ν₀ω₀𝔞²)`.

use nalgebra::DVector;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{BoundCondition, Error, Result};
use crate::linalg::{SpdMatrix, ORDER_TOL};
use crate::model::FieldModel;
use crate::quadform::{Branch, QuadFormBound};
use crate::rng::{tags, PhiloxRng};

/// Default multiplier of `e⁻ˣ`: four from the local event, one from the exit event.
pub const DEFAULT_PROB_MULTIPLIER: f64 = 5.0;

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "{name} must be positive, got {v}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalBudget {
    pub r: f64,
    pub delta: f64,
    pub rho: f64,
    pub err_bound: f64,
    #[serde(rename = "Ddelta_sq")]
    pub ddelta_sq: SpdMatrix,
    /// `λmin(D_δ²)`.
    pub psd_margin: f64,
}

/// Error budget of the local quadratic bracket at radius `r`, with `δ` and `ϱ`
/// at their smallest admissible values.
pub fn local_budget(m: &FieldModel, r: f64, x: f64) -> Result<LocalBudget> {
    check_positive("r", r)?;
    check_positive("x", x)?;
    let p = m.dim as f64;
    let delta = m.delta0 * m.eps * r;
    let rho = 3.0 * m.nu0 * m.omega0 * m.eps * r;
    let err_bound = rho * (1.0 + (x + 3.0 * p).sqrt()).powi(2);
    let ddelta_sq = SpdMatrix::new(m.d0sq.matrix() * (1.0 - delta) - m.v0sq.matrix() * rho)?;
    let psd_margin = ddelta_sq.min_eigenvalue();
    if psd_margin < -ORDER_TOL {
        return Err(Error::LocalBracket {
            min_eigenvalue: psd_margin,
        });
    }
    Ok(LocalBudget {
        r,
        delta,
        rho,
        err_bound,
        ddelta_sq,
        psd_margin,
    })
}

/// `τ = ε r₀ (δ₀ + 3ν₀ω₀𝔞²)` without any check.
pub fn tau_value(m: &FieldModel, r0: f64) -> f64 {
    m.eps * r0 * (m.delta0 + 3.0 * m.nu0 * m.omega0 * m.aa * m.aa)
}

/// Contraction factor; fails unless `τ < 1`.
pub fn contraction_tau(m: &FieldModel, r0: f64) -> Result<f64> {
    check_positive("r0", r0)?;
    let tau = tau_value(m, r0);
    if tau >= 1.0 {
        return Err(Error::BoundViolation {
            violated: vec![BoundCondition::TauCond],
            detail: format!("contraction fails: τ = {tau}"),
        });
    }
    Ok(tau)
}

/// Smallest exit radius `6ν₀√(x+3p)/b*`.
pub fn min_global_radius(m: &FieldModel, x: f64) -> Result<f64> {
    let s = x + 3.0 * m.dim as f64;
    if s < 2.5 {
        return Err(Error::BoundViolation {
            violated: vec![BoundCondition::GlobalCond],
            detail: format!("x + 3p = {s}"),
        });
    }
    let b_star = m.curvature_rate();
    check_positive("b*", b_star)?;
    Ok(6.0 * m.nu0 * s.sqrt() / b_star)
}

/// `sup_u {gᵀu − ‖D_δu‖²/2} = gᵀD_δ⁻²g/2`.
pub fn quad_sup_closed_form(grad: &DVector<f64>, ddelta_sq: &SpdMatrix) -> Result<f64> {
    if grad.len() != ddelta_sq.dim() {
        return Err(Error::DimensionMismatch {
            what: "gradient",
            expected: ddelta_sq.dim(),
            got: grad.len(),
        });
    }
    let chol = ddelta_sq
        .matrix()
        .clone()
        .cholesky()
        .ok_or(Error::CurvatureSingular {
            min_eigenvalue: ddelta_sq.min_eigenvalue(),
        })?;
    let y = chol.solve(grad);
    Ok(0.5 * grad.dot(&y))
}

/// `Z_δ(u) = gᵀu − ‖D_δu‖²/2`.
pub fn quad_objective(grad: &DVector<f64>, ddelta_sq: &SpdMatrix, u: &DVector<f64>) -> f64 {
    grad.dot(u) - 0.5 * u.dot(&(ddelta_sq.matrix() * u))
}

/// Brute-force maximum of `Z_δ` by zooming grid search: each level scans a
/// `(2·half+1)^p` grid and recentres a box four times smaller on the best point.
pub fn quad_sup_grid(
    grad: &DVector<f64>,
    ddelta_sq: &SpdMatrix,
    radius: f64,
    half: usize,
    levels: usize,
) -> f64 {
    let p = grad.len();
    let side = 2 * half + 1;
    let mut centre = DVector::zeros(p);
    let mut width = radius;
    let mut best = quad_objective(grad, ddelta_sq, &centre);
    for _ in 0..levels {
        let step = width / half as f64;
        let mut best_u = centre.clone();
        let mut u = DVector::zeros(p);
        for idx in 0..side.pow(p as u32) {
            let mut rest = idx;
            for j in 0..p {
                let i = (rest % side) as f64 - half as f64;
                rest /= side;
                u[j] = centre[j] + i * step;
            }
            let v = quad_objective(grad, ddelta_sq, &u);
            if v > best {
                best = v;
                best_u.copy_from(&u);
            }
        }
        centre = best_u;
        width /= 4.0;
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Validity {
    pub eps_cond: bool,
    pub global_cond: bool,
    pub tau_cond: bool,
    pub xc_cond: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub x: f64,
    pub r0_used: f64,
    pub tau: f64,
    pub quantile_term: f64,
    pub error_term: f64,
    pub total_offset: f64,
    pub prob_multiplier: f64,
    pub implied_c: f64,
    pub branch: Branch,
    pub x_c: f64,
    pub validity: Validity,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupBoundOptions {
    pub prob_multiplier: f64,
    /// Accept `x > x_c` and use the large-deviation quantile there.
    pub allow_beyond_xc: bool,
}

impl Default for SupBoundOptions {
    fn default() -> Self {
        Self {
            prob_multiplier: DEFAULT_PROB_MULTIPLIER,
            allow_beyond_xc: true,
        }
    }
}

pub fn sup_bound(m: &FieldModel, x: f64) -> Result<BoundReport> {
    sup_bound_with(m, x, &SupBoundOptions::default())
}

pub fn sup_bound_with(m: &FieldModel, x: f64, opts: &SupBoundOptions) -> Result<BoundReport> {
    check_positive("x", x)?;
    let p = m.dim as f64;
    let s = x + 3.0 * p;
    let eff = m.effective_dims()?;
    let qf = QuadFormBound::with_precondition(&eff.b, m.g)?;

    let eps_val = m.eps * s.sqrt();
    let eps_cond = eps_val < 1.0;
    let global_cond = s >= 2.5;
    let r0_used = if global_cond {
        m.r0.max(min_global_radius(m, x)?)
    } else {
        m.r0
    };
    let tau = tau_value(m, r0_used);
    let tau_cond = tau < 1.0;
    let xc_cond = x <= qf.crit.x_c;
    let validity = Validity {
        eps_cond,
        global_cond,
        tau_cond,
        xc_cond,
    };

    let mut violated = Vec::new();
    let mut detail = Vec::new();
    if !eps_cond {
        violated.push(BoundCondition::EpsCond);
        detail.push(format!("ε√(x+3p) = {eps_val}"));
    }
    if !global_cond {
        violated.push(BoundCondition::GlobalCond);
        detail.push(format!("x + 3p = {s}"));
    }
    if !tau_cond {
        violated.push(BoundCondition::TauCond);
        detail.push(format!("τ = {tau} at r₀ = {r0_used}"));
    }
    if !xc_cond && !opts.allow_beyond_xc {
        violated.push(BoundCondition::XcCond);
        detail.push(format!("x = {x} > x_c = {}", qf.crit.x_c));
    }
    if !violated.is_empty() {
        return Err(Error::BoundViolation {
            violated,
            detail: detail.join(", "),
        });
    }
    local_budget(m, r0_used, x)?;

    let q = qf.quantile(x);
    let quantile_term = eff.lam0 * q.z_total_norm / (2.0 * (1.0 - tau));
    let error_term = 6.0 * m.nu0 * m.omega0 * m.eps * r0_used * (1.0 + s.sqrt()).powi(2);
    let total_offset = quantile_term + error_term;
    let implied_c =
        (total_offset - eff.lam0 * eff.p_eff / 2.0) / (eff.lam0 * (eff.v_eff * x.sqrt() + x));
    Ok(BoundReport {
        x,
        r0_used,
        tau,
        quantile_term,
        error_term,
        total_offset,
        prob_multiplier: opts.prob_multiplier,
        implied_c,
        branch: q.branch,
        x_c: q.x_c,
        validity,
    })
}

/// Data-driven `δ₀`: the largest observed
/// `|2(M(θ) − M(θ*))/‖D₀(θ−θ*)‖² + 1| / (εr)` over `θ − θ* = V₀⁻¹u·r` with
/// `u` drawn uniformly from the unit ball (even sample indices) or sphere (odd).
///
/// Sample `i` uses its own stream, so a larger `samples` only adds points and
/// the estimate is nondecreasing in `samples`.
pub fn calibrate_delta0<F>(
    m_eval: F,
    m: &FieldModel,
    theta_star: &DVector<f64>,
    r: f64,
    samples: usize,
    seed: u64,
    domain_radius: Option<f64>,
) -> Result<f64>
where
    F: Fn(&DVector<f64>) -> f64 + Sync,
{
    check_positive("r", r)?;
    let p = m.dim;
    if theta_star.len() != p {
        return Err(Error::DimensionMismatch {
            what: "theta_star",
            expected: p,
            got: theta_star.len(),
        });
    }
    if samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let v_eig = m.v0sq.require_pd("positive definite (V₀²)")?;
    if let Some(domain) = domain_radius {
        let reach = theta_star.norm() + r / v_eig.min().sqrt();
        if reach > domain {
            return Err(Error::InvalidArgument(format!(
                "r = {r} exceeds the domain: Θ₀(r) reaches {reach} > {domain}"
            )));
        }
    }
    let v_inv_half = v_eig.map(|l| l.powf(-0.5));
    let m_star = m_eval(theta_star);
    let d0 = m.d0sq.matrix();
    let scale = m.eps * r;
    let worst = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = PhiloxRng::stream(seed, i, tags::CALIBRATE);
            let mut u = DVector::from_fn(p, |_, _| StandardNormal.sample(&mut rng));
            let norm = u.norm();
            if norm == 0.0 {
                return 0.0;
            }
            u /= norm;
            if i % 2 == 0 {
                let w: f64 = rand::Rng::random(&mut rng);
                u *= w.powf(1.0 / p as f64);
            }
            let d = &v_inv_half * u * r;
            let quad = d.dot(&(d0 * &d));
            if quad <= 0.0 {
                return 0.0;
            }
            let theta = theta_star + &d;
            (2.0 * (m_eval(&theta) - m_star) / quad + 1.0).abs()
        })
        .reduce(|| 0.0, f64::max);
    Ok(worst / scale)
}
