//! Deviation bounds for the quadratic form `‖Bξ‖²` when `ξ` satisfies the
//! sub-Gaussian moment condition `log E exp(γᵀξ) ≤ ‖γ‖²/2` for `‖γ‖ ≤ g`.
//!
//! Two conventions meet here. Callers hand in the matrix `B` of the main
//! bound, whose trace is the effective dimension. The deviation theory works
//! with `B_app = B^{1/2}` normalized so that `λmax(B_app²) = 1`:
//!
//! ```text
//! B̃ = B^{1/2}/√λ*,   λ* = λmax(B),
//! p_app = tr B̃² = tr B / λ*,   v_app² = 2 tr B̃⁴ = 2 tr B² / λ*².
//! ```
//!
//! Quantiles are computed in normalized units and scaled back by `λ*`.

use std::collections::HashMap;
use std::sync::Arc;

use parking_lot::Mutex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::SpdMatrix;
use crate::model::EffDim;
use crate::roots::solve_increasing;

/// Constant of the large-deviation tail.
pub const LD_CONST: f64 = 8.4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalizedQuad {
    pub b_tilde: SpdMatrix,
    /// `λmax(B)` before normalization.
    pub lamstar: f64,
    pub p_app: f64,
    pub v_app: f64,
    pub g_tilde: f64,
    /// Spectrum of `B̃²`, ascending, with maximum exactly 1.
    pub spectrum: Vec<f64>,
}

/// Bring a main-convention `B` (PSD) to the normalized appendix convention.
pub fn normalize(b: &SpdMatrix, g: f64) -> Result<NormalizedQuad> {
    if !(g > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "g must be positive, got {g}"
        )));
    }
    let eig = b.require_psd("positive semidefinite (B)")?;
    let lamstar = eig.max();
    if !(lamstar > 0.0) {
        return Err(Error::InvalidArgument("B is the zero matrix".into()));
    }
    let spectrum: Vec<f64> = eig.values.iter().map(|&l| l.max(0.0) / lamstar).collect();
    let b_tilde = SpdMatrix::new(eig.map(|l| (l.max(0.0) / lamstar).sqrt()))?;
    let p_app = spectrum.iter().sum::<f64>();
    let v_app = (2.0 * spectrum.iter().map(|s| s * s).sum::<f64>()).sqrt();
    Ok(NormalizedQuad {
        b_tilde,
        lamstar,
        p_app,
        v_app,
        g_tilde: g,
        spectrum,
    })
}

/// Left side of the critical-point equation, `w(1+w)/√(1+w²)`.
pub fn wc_lhs(w: f64) -> f64 {
    w * (1.0 + w) / (1.0 + w * w).sqrt()
}

/// Unique positive root of `w(1+w)/√(1+w²) = g̃/√p_app`.
pub fn solve_wc(g_tilde: f64, p_app: f64) -> Result<f64> {
    if !(g_tilde > 0.0) || !(p_app > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "solve_wc needs g̃ > 0 and p > 0, got g̃ = {g_tilde}, p = {p_app}"
        )));
    }
    let target = g_tilde / p_app.sqrt();
    solve_increasing(wc_lhs, target, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadCritical {
    pub w_c: f64,
    pub mu_c: f64,
    pub yc_sq: f64,
    pub x_c: f64,
    pub g_c: f64,
}

pub fn critical_params(nq: &NormalizedQuad) -> Result<QuadCritical> {
    let w_c = solve_wc(nq.g_tilde, nq.p_app)?;
    let w2 = w_c * w_c;
    let mu_c = (w2 / (1.0 + w2)).min(2.0 / 3.0);
    assert!(mu_c < 1.0, "μ_c·λmax(B̃²) must stay below 1");
    let yc_sq = (1.0 + w2) * nq.p_app;
    let log_det: f64 = nq.spectrum.iter().map(|s| (1.0 - mu_c * s).ln()).sum();
    let x_c = 0.5 * (mu_c * yc_sq + log_det);
    let g_c = nq.g_tilde * w_c / (1.0 + w_c);
    Ok(QuadCritical {
        w_c,
        mu_c,
        yc_sq,
        x_c,
        g_c,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `2v√x` for `x ≤ v/18`.
    Sqrt,
    /// `6x` for `v/18 < x ≤ x_c`.
    Linear,
    /// `|y_c + 2(x − x_c)/g_c|² − p` for `x > x_c`.
    Ld,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Sqrt => "sqrt",
            Branch::Linear => "linear",
            Branch::Ld => "ld",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quantile {
    pub x: f64,
    /// Deviation above the mean in normalized units.
    pub z_norm: f64,
    /// Deviation above the mean in main-convention units, `λ*·z_norm`.
    pub z_dev: f64,
    /// `p_app + z_norm`; `λ*` times this bounds `‖ξ‖²`.
    pub z_total_norm: f64,
    pub branch: Branch,
    pub x_c: f64,
}

/// Normalized quadratic form with its critical parameters, ready for repeated
/// quantile and tail evaluations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadFormBound {
    pub nq: NormalizedQuad,
    pub crit: QuadCritical,
}

impl QuadFormBound {
    pub fn new(b: &SpdMatrix, g: f64) -> Result<Self> {
        let nq = normalize(b, g)?;
        Self::from_normalized(nq)
    }

    pub fn from_normalized(nq: NormalizedQuad) -> Result<Self> {
        let crit = critical_params(&nq)?;
        Ok(Self { nq, crit })
    }

    /// As [`QuadFormBound::new`] but requiring `g² ≥ 2p`, the standing
    /// assumption of the piecewise quantile.
    pub fn with_precondition(b: &SpdMatrix, g: f64) -> Result<Self> {
        let nq = normalize(b, g)?;
        check_g(&nq)?;
        Self::from_normalized(nq)
    }

    fn finish(&self, x: f64, z_norm: f64, branch: Branch) -> Quantile {
        Quantile {
            x,
            z_norm,
            z_dev: self.nq.lamstar * z_norm,
            z_total_norm: self.nq.p_app + z_norm,
            branch,
            x_c: self.crit.x_c,
        }
    }

    fn ld_value(&self, x: f64) -> f64 {
        let c = &self.crit;
        let y = c.yc_sq.sqrt() + 2.0 * (x - c.x_c) / c.g_c;
        y * y - self.nq.p_app
    }

    /// The piecewise quantile exactly as defined, discontinuities included.
    pub fn quantile(&self, x: f64) -> Quantile {
        let v = self.nq.v_app;
        if x > self.crit.x_c {
            self.finish(x, self.ld_value(x), Branch::Ld)
        } else if x <= v / 18.0 {
            self.finish(x, 2.0 * v * x.sqrt(), Branch::Sqrt)
        } else {
            self.finish(x, 6.0 * x, Branch::Linear)
        }
    }

    /// Monotone envelope `inf_{x' ≥ x} z(x')`: any value the quantile takes at a
    /// larger level is also a valid quantile at level `x`.
    pub fn quantile_envelope(&self, x: f64) -> Quantile {
        let v = self.nq.v_app;
        let x_c = self.crit.x_c;
        let knee = v / 18.0;
        let mut best = (self.ld_value(x.max(x_c)), Branch::Ld);
        if x <= knee.min(x_c) {
            let z = 2.0 * v * x.sqrt();
            if z < best.0 {
                best = (z, Branch::Sqrt);
            }
        }
        if x <= x_c && knee < x_c {
            let z = 6.0 * x.max(knee);
            if z < best.0 {
                best = (z, Branch::Linear);
            }
        }
        self.finish(x, best.0, best.1)
    }

    /// Failure probability attached to the quantile at `x`.
    pub fn quantile_probability(&self, x: f64) -> f64 {
        if x > self.crit.x_c {
            LD_CONST * (-x).exp()
        } else {
            2.0 * (-x).exp() + LD_CONST * (-self.crit.x_c).exp()
        }
    }

    /// Upper bound on `P(‖ξ‖ > y)`, `y` in main-convention units, capped at 1.
    pub fn tail_bound(&self, y: f64) -> f64 {
        let c = &self.crit;
        let y_norm = y / self.nq.lamstar.sqrt();
        let yc = c.yc_sq.sqrt();
        if y_norm >= yc {
            let b = LD_CONST * (-c.x_c - c.g_c * (y_norm - yc) / 2.0).exp();
            return b.min(1.0);
        }
        let d = y_norm * y_norm - self.nq.p_app;
        if d <= 0.0 {
            return 1.0;
        }
        let x = self.level_for_deviation(d);
        if x <= 0.0 {
            return 1.0;
        }
        (2.0 * (-x).exp() + LD_CONST * (-c.x_c).exp()).min(1.0)
    }

    /// `sup{x ∈ (0, x_c] : z(x) ≤ d}` over the two moderate-deviation branches,
    /// or 0 if no level qualifies.
    fn level_for_deviation(&self, d: f64) -> f64 {
        let v = self.nq.v_app;
        let x_c = self.crit.x_c;
        let knee = v / 18.0;
        let mut x: f64 = 0.0;
        let sqrt_cap = knee.min(x_c);
        if sqrt_cap > 0.0 {
            x = x.max((d / (2.0 * v)).powi(2).min(sqrt_cap));
        }
        if knee < x_c && d / 6.0 > knee {
            x = x.max((d / 6.0).min(x_c));
        }
        x
    }
}

fn check_g(nq: &NormalizedQuad) -> Result<()> {
    if nq.g_tilde * nq.g_tilde < 2.0 * nq.p_app {
        return Err(Error::Precondition(format!(
            "g² ≥ 2p required (g = {}, p = {})",
            nq.g_tilde, nq.p_app
        )));
    }
    Ok(())
}

fn check_x(x: f64) -> Result<()> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "x must be positive, got {x}"
        )));
    }
    Ok(())
}

/// Deviation quantile of `‖ξ‖²` above its mean, in main-convention units.
///
/// Beyond `x_c` the large-deviation quantile is returned with the mean
/// subtracted, so callers can always add `tr B`.
pub fn deviation_quantile(x: f64, b: &SpdMatrix, g: f64) -> Result<f64> {
    check_x(x)?;
    Ok(QuadFormBound::with_precondition(b, g)?.quantile(x).z_dev)
}

/// `p_app + z(x)` in normalized units; `λ₀` times this value bounds `‖ξ‖²`
/// with probability at least `1 − 2e⁻ˣ − 8.4e^{−x_c}`.
pub fn total_quantile(x: f64, eff: &EffDim, g: f64) -> Result<f64> {
    check_x(x)?;
    Ok(QuadFormBound::with_precondition(&eff.b, g)?
        .quantile(x)
        .z_total_norm)
}

/// Upper bound on `P(‖ξ‖ > y)` for `ξ` with covariance structure `B`.
pub fn tail_bound(y: f64, b: &SpdMatrix, g: f64) -> Result<f64> {
    if !(y > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "y must be positive, got {y}"
        )));
    }
    Ok(QuadFormBound::new(b, g)?.tail_bound(y))
}

/// Memo table for [`QuadFormBound`] keyed by the spectrum of `B` and `g`.
/// Entries are immutable once inserted, so concurrent lookups only contend
/// on the lock.
#[derive(Debug, Default)]
pub struct QuadCriticalCache {
    map: Mutex<HashMap<Vec<u64>, Arc<QuadFormBound>>>,
}

impl QuadCriticalCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get_or_compute(&self, b: &SpdMatrix, g: f64) -> Result<Arc<QuadFormBound>> {
        let mut key: Vec<u64> = b.matrix().iter().map(|v| v.to_bits()).collect();
        key.push(g.to_bits());
        if let Some(hit) = self.map.lock().get(&key) {
            return Ok(Arc::clone(hit));
        }
        let fresh = Arc::new(QuadFormBound::new(b, g)?);
        Ok(Arc::clone(self.map.lock().entry(key).or_insert(fresh)))
    }

    pub fn len(&self) -> usize {
        self.map.lock().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Plain bisection written independently of `roots`, to 1e-14.
    fn bisect_oracle(target: f64) -> f64 {
        let h = |w: f64| w * (1.0 + w) / (1.0 + w * w).sqrt();
        let (mut a, mut b) = (0.0, 1.0);
        while h(b) < target {
            b *= 2.0;
        }
        while b - a > 1e-14 * b {
            let m = 0.5 * (a + b);
            if h(m) < target {
                a = m
            } else {
                b = m
            }
        }
        0.5 * (a + b)
    }

    #[test]
    fn normalize_identity() {
        let p = 5;
        let nq = normalize(&SpdMatrix::identity(p), 10.0 * (p as f64).sqrt()).unwrap();
        assert!((nq.lamstar - 1.0).abs() < 1e-14);
        assert!((nq.b_tilde.matrix() - SpdMatrix::identity(p).matrix()).amax() < 1e-12);
        assert!((nq.p_app - 5.0).abs() < 1e-12);
        assert!((nq.v_app - 10f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn normalize_diagonal() {
        let b = SpdMatrix::from_diagonal(&[2.0, 0.5]);
        let nq = normalize(&b, 3.0).unwrap();
        assert!((nq.lamstar - 2.0).abs() < 1e-14);
        let bt = nq.b_tilde.matrix();
        assert!((bt[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((bt[(1, 1)] - 0.5).abs() < 1e-12);
        assert!((nq.p_app - 1.25).abs() < 1e-12);
        assert!((nq.v_app - 2.125f64.sqrt()).abs() < 1e-12);
        // identities linking the conventions
        assert!((nq.p_app * nq.lamstar - b.trace()).abs() < 1e-12);
        let tr_b2 = 4.0 + 0.25;
        assert!((nq.v_app.powi(2) * nq.lamstar.powi(2) - 2.0 * tr_b2).abs() < 1e-12);
        assert!((nq.spectrum.last().unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn normalize_rejects_zero() {
        let z = SpdMatrix::new(nalgebra::DMatrix::zeros(2, 2)).unwrap();
        assert!(normalize(&z, 1.0).is_err());
    }

    #[test]
    fn wc_exact_case() {
        for p in [1.0, 4.0, 37.0, 1000.0] {
            let w = solve_wc((2.0f64 * p).sqrt(), p).unwrap();
            assert!((w - 1.0).abs() < 1e-12, "p={p} w={w}");
        }
    }

    #[test]
    fn wc_against_bisection_oracle() {
        let w = solve_wc(3.0, 1.0).unwrap();
        let oracle = bisect_oracle(3.0);
        assert!((w - oracle).abs() < 1e-12);
        assert!((w - 2.2766).abs() < 1e-3, "w = {w}");
        assert!((wc_lhs(w) - 3.0).abs() < 1e-10);
    }

    #[test]
    fn wc_rejects_nonpositive() {
        assert!(solve_wc(0.0, 1.0).is_err());
        assert!(solve_wc(1.0, -1.0).is_err());
    }

    #[test]
    fn critical_identity_four() {
        let qb = QuadFormBound::new(&SpdMatrix::identity(4), 8f64.sqrt()).unwrap();
        let c = qb.crit;
        assert!((c.w_c - 1.0).abs() < 1e-12);
        assert!((c.mu_c - 0.5).abs() < 1e-12);
        assert!((c.yc_sq - 8.0).abs() < 1e-11);
        // closed form: 2x_c = 4 + 4 log(1/2)
        let x_c = (4.0 - 4.0 * 2f64.ln()) / 2.0;
        assert!((c.x_c - x_c).abs() < 1e-11);
        assert!((c.x_c - 0.6137).abs() < 1e-4);
        assert!((c.g_c - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn critical_identity_four_large_g() {
        let qb = QuadFormBound::new(&SpdMatrix::identity(4), 20.0).unwrap();
        let c = qb.crit;
        let w = bisect_oracle(10.0);
        assert!((c.w_c - w).abs() < 1e-10);
        assert!((c.w_c - 9.06).abs() < 0.01);
        assert!((c.mu_c - 2.0 / 3.0).abs() < 1e-15);
        // formula oracle: 2x_c = (2/3)(1+w²)p + p log(1/3)
        let x_c = 0.5 * ((2.0 / 3.0) * (1.0 + w * w) * 4.0 + 4.0 * (1.0f64 / 3.0).ln());
        assert!((c.x_c - x_c).abs() < 1e-8);
        assert!((c.x_c / 4.0 - 27.15).abs() < 0.01);
        assert!(c.x_c > 0.0 && c.g_c > 0.0 && c.yc_sq > 0.0);
    }

    #[test]
    fn deviation_sqrt_branch() {
        let g = 10.0 * 5f64.sqrt();
        let z = deviation_quantile(0.1, &SpdMatrix::identity(5), g).unwrap();
        assert!((z - 2.0).abs() < 1e-12);
        let qb = QuadFormBound::new(&SpdMatrix::identity(5), g).unwrap();
        assert_eq!(qb.quantile(0.1).branch, Branch::Sqrt);
    }

    #[test]
    fn deviation_linear_branch() {
        let g = 10.0 * 5f64.sqrt();
        let z = deviation_quantile(3.0, &SpdMatrix::identity(5), g).unwrap();
        assert!((z - 18.0).abs() < 1e-12);
    }

    #[test]
    fn deviation_large_deviation_branch() {
        let qb = QuadFormBound::new(&SpdMatrix::identity(4), 8f64.sqrt()).unwrap();
        let q = qb.quantile(1.0);
        assert_eq!(q.branch, Branch::Ld);
        let x_c = (4.0 - 4.0 * 2f64.ln()) / 2.0;
        let zc = (8f64.sqrt() + 2.0 * (1.0 - x_c) / 2f64.sqrt()).powi(2);
        assert!((zc - 11.39).abs() < 0.01);
        assert!((q.z_dev - (zc - 4.0)).abs() < 1e-10);
        assert!((q.z_dev - 7.39).abs() < 0.01);
    }

    #[test]
    fn deviation_rejects_small_g() {
        let err = deviation_quantile(1.0, &SpdMatrix::identity(4), 2.0).unwrap_err();
        assert!(err.to_string().contains("g² ≥ 2p"));
    }

    #[test]
    fn deviation_branch_boundaries_are_exact() {
        let g = 10.0 * 20f64.sqrt();
        let qb = QuadFormBound::new(&SpdMatrix::identity(20), g).unwrap();
        let knee = qb.nq.v_app / 18.0;
        assert_eq!(qb.quantile(knee).branch, Branch::Sqrt);
        assert_eq!(qb.quantile(knee * (1.0 + 1e-12)).branch, Branch::Linear);
        assert_eq!(qb.quantile(qb.crit.x_c).branch, Branch::Linear);
        assert_eq!(qb.quantile(qb.crit.x_c * (1.0 + 1e-12)).branch, Branch::Ld);
    }

    #[test]
    fn total_quantile_examples() {
        let eff =
            crate::model::effective_dims(&SpdMatrix::identity(5), &SpdMatrix::identity(5)).unwrap();
        let g = 10.0 * 5f64.sqrt();
        assert!((total_quantile(0.1, &eff, g).unwrap() - 7.0).abs() < 1e-12);
        assert!((total_quantile(1e-14, &eff, g).unwrap() - 5.0).abs() < 1e-5);
    }

    #[test]
    fn total_quantile_homogeneous_in_scale() {
        let c = 3.0;
        let p = 5;
        let g = 10.0 * (p as f64).sqrt();
        let unit =
            crate::model::effective_dims(&SpdMatrix::identity(p), &SpdMatrix::identity(p)).unwrap();
        let scaled = crate::model::effective_dims(
            &SpdMatrix::identity(p),
            &SpdMatrix::scaled_identity(p, c),
        )
        .unwrap();
        let x = 0.05;
        let a = unit.lam0 * total_quantile(x, &unit, g).unwrap();
        let b = scaled.lam0 * total_quantile(x, &scaled, g).unwrap();
        assert!((b - c * a).abs() < 1e-10);
    }

    #[test]
    fn tail_bound_at_critical_radius() {
        let qb = QuadFormBound::new(&SpdMatrix::identity(4), 20.0).unwrap();
        let t = qb.tail_bound(qb.crit.yc_sq.sqrt());
        assert!((t - LD_CONST * (-qb.crit.x_c).exp()).abs() < 1e-12);
    }

    #[test]
    fn tail_bound_consistent_with_quantile() {
        let g = 10.0 * 5f64.sqrt();
        let b = SpdMatrix::identity(5);
        let qb = QuadFormBound::new(&b, g).unwrap();
        for &x in &[0.05, 0.1, 0.5, 1.0, 3.0, 10.0, 50.0, qb.crit.x_c] {
            let z = qb.quantile(x).z_dev;
            let y = (b.trace() + z).sqrt();
            let t = tail_bound(y, &b, g).unwrap();
            let allowed = 2.0 * (-x).exp() + LD_CONST * (-qb.crit.x_c).exp();
            assert!(t <= allowed * (1.0 + 1e-12), "x={x}: {t} > {allowed}");
        }
    }

    #[test]
    fn tail_bound_decays_to_zero() {
        let b = SpdMatrix::from_diagonal(&[2.0, 1.0, 0.3]);
        let qb = QuadFormBound::new(&b, 12.0).unwrap();
        assert!(qb.tail_bound(1e4) < 1e-100);
        assert_eq!(qb.tail_bound(0.01), 1.0);
    }

    #[test]
    fn envelope_never_exceeds_literal_and_is_monotone() {
        let b = SpdMatrix::from_diagonal(&[1.0, 0.2, 0.2]);
        let qb = QuadFormBound::new(&b, 2.5).unwrap();
        let mut prev = 0.0;
        for i in 1..2000 {
            let x = i as f64 * 0.01;
            let env = qb.quantile_envelope(x).z_norm;
            assert!(env <= qb.quantile(x).z_norm + 1e-12);
            assert!(env >= prev - 1e-12, "x={x}");
            prev = env;
        }
    }

    #[test]
    fn cache_reuses_entries() {
        let cache = QuadCriticalCache::new();
        let b = SpdMatrix::identity(3);
        let a1 = cache.get_or_compute(&b, 5.0).unwrap();
        let a2 = cache.get_or_compute(&b, 5.0).unwrap();
        assert!(Arc::ptr_eq(&a1, &a2));
        cache.get_or_compute(&b, 6.0).unwrap();
        assert_eq!(cache.len(), 2);
    }

    proptest! {
        #[test]
        fn wc_residual_small(lg in -1.0f64..3.0, lp in 0.0f64..3.0) {
            let (g, p) = (10f64.powf(lg), 10f64.powf(lp));
            let w = solve_wc(g, p).unwrap();
            prop_assert!((wc_lhs(w) - g / p.sqrt()).abs() < 1e-10);
            let w_more_g = solve_wc(1.01 * g, p).unwrap();
            let w_more_p = solve_wc(g, 1.01 * p).unwrap();
            prop_assert!(w_more_g > w);
            prop_assert!(w_more_p < w);
        }

        #[test]
        fn deviation_monotone_within_branch(x1 in 0.001f64..200.0, dx in 0.0f64..5.0) {
            let qb = QuadFormBound::new(&SpdMatrix::from_diagonal(&[1.0, 0.7, 0.1, 0.1]), 9.0)
                .unwrap();
            let a = qb.quantile(x1);
            let b = qb.quantile(x1 + dx);
            if a.branch == b.branch {
                prop_assert!(b.z_norm >= a.z_norm);
            }
        }

        #[test]
        fn tail_bound_is_probability_and_nonincreasing(y in 0.01f64..30.0, dy in 0.0f64..5.0) {
            let qb = QuadFormBound::new(&SpdMatrix::from_diagonal(&[1.5, 0.7, 0.1]), 6.0).unwrap();
            let a = qb.tail_bound(y);
            let b = qb.tail_bound(y + dy);
            prop_assert!((0.0..=1.0).contains(&a));
            prop_assert!(b <= a + 1e-15);
        }
    }
}
