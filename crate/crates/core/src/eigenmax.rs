//! Largest-eigenvalue concentration through the penalized quadratic field
//! `G(A, θ) = θᵀAθ − f(‖θ‖²)`, whose supremum is `f*(λmax(A))`.
//!
//! `A = X₁ + … + X_n` with `X_k = E X₁ + W_k` and `W_k` symmetric noise whose
//! entries satisfy `E[W_ij W_kl] = s_eff²(δ_ik δ_jl + δ_il δ_jk)`. Then
//! `Cov(Wθ) = s_eff²(‖θ‖²I + θθᵀ)` and `E W² = s_eff²(p+1)I`.
//!
//! Derivatives are exact: `∇G = 2Aθ − 2f'(‖θ‖²)θ`, so
//! `D₀² = 2(λmax(EA)I − EA) + 4f''(r*)r*·eeᵀ` and `V₀² = 4n·Cov(Wθ*)`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::bound::{self, calibrate_delta0, SupBoundOptions};
use crate::error::{Error, Result};
use crate::linalg::SpdMatrix;
use crate::model::{minimal_aa, FieldModel, Scalars};
use crate::rng::PhiloxRng;
use crate::roots::safeguarded_newton;
use crate::special::clipped_normal_variance;

/// Smallest accepted gap between the two top eigenvalues of `E X₁`.
pub const MIN_EIGENGAP: f64 = 1e-8;

/// Samples used by the data-driven `δ₀` calibration.
pub const CALIBRATION_SAMPLES: usize = 4000;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Penalty `f` on `r = ‖θ‖²`: nonnegative, increasing, convex.
#[derive(Clone)]
pub enum Penalty {
    /// `f(r) = n r²`.
    Quadratic { n: f64 },
    Custom {
        f: ScalarFn,
        df: ScalarFn,
        d2f: ScalarFn,
    },
}

impl fmt::Debug for Penalty {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Penalty::Quadratic { n } => write!(fm, "Quadratic {{ n: {n} }}"),
            Penalty::Custom { .. } => fm.write_str("Custom"),
        }
    }
}

impl Penalty {
    pub fn quadratic(n: usize) -> Self {
        Penalty::Quadratic { n: n as f64 }
    }

    pub fn custom(
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d2f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Penalty::Custom {
            f: Arc::new(f),
            df: Arc::new(df),
            d2f: Arc::new(d2f),
        }
    }

    pub fn f(&self, r: f64) -> f64 {
        match self {
            Penalty::Quadratic { n } => n * r * r,
            Penalty::Custom { f, .. } => f(r),
        }
    }

    pub fn df(&self, r: f64) -> f64 {
        match self {
            Penalty::Quadratic { n } => 2.0 * n * r,
            Penalty::Custom { df, .. } => df(r),
        }
    }

    pub fn d2f(&self, r: f64) -> f64 {
        match self {
            Penalty::Quadratic { n } => 2.0 * n,
            Penalty::Custom { d2f, .. } => d2f(r),
        }
    }

    pub fn is_quadratic(&self) -> bool {
        matches!(self, Penalty::Quadratic { .. })
    }
}

/// Solve `f'(r) = y` for `r ≥ 0`.
pub fn stationary_radius(f: &Penalty, y: f64) -> Result<f64> {
    match f {
        Penalty::Quadratic { n } => {
            if y < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "y = {y} below the range of f' (starts at 0)"
                )));
            }
            Ok(y / (2.0 * n))
        }
        Penalty::Custom { df, d2f, .. } => safeguarded_newton(|r| df(r), |r| d2f(r), y, 0.0)
            .map_err(|e| Error::InvalidArgument(format!("y = {y} outside the range of f': {e}"))),
    }
}

/// Legendre transform `f*(y) = sup_r {yr − f(r)}` for `y ≥ f'(0)`.
pub fn legendre(f: &Penalty, y: f64) -> Result<f64> {
    match f {
        Penalty::Quadratic { n } => {
            if y < 0.0 {
                return Err(Error::InvalidArgument(format!("y = {y} below f'(0) = 0")));
            }
            Ok(y * y / (4.0 * n))
        }
        Penalty::Custom { .. } => {
            let r = stationary_radius(f, y)?;
            Ok(y * r - f.f(r))
        }
    }
}

/// `sup_{θ} G(A, θ)` given `λmax(A)`; equals `−f(0)` when `λmax(A) < f'(0)`.
pub fn sup_field(f: &Penalty, lam_max: f64) -> Result<f64> {
    if lam_max <= f.df(0.0) {
        return Ok(-f.f(0.0));
    }
    legendre(f, lam_max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "scale")]
pub enum Noise {
    /// `W = s(G + Gᵀ)/√2`, `G` with i.i.d. `N(0, 1)` entries.
    Gaussian(f64),
    /// `W = (G + Gᵀ)/2`, `G_ij = clip(N(0, s²), −s, s)`; entries lie in `[−s, s]`.
    Bounded(f64),
}

impl Noise {
    pub fn scale(&self) -> f64 {
        match *self {
            Noise::Gaussian(s) | Noise::Bounded(s) => s,
        }
    }

    /// `s_eff²` in `E[W_ij W_kl] = s_eff²(δ_ik δ_jl + δ_il δ_jk)`.
    pub fn s_eff_sq(&self) -> f64 {
        match *self {
            Noise::Gaussian(s) => s * s,
            Noise::Bounded(s) => 0.5 * s * s * clipped_normal_variance(),
        }
    }

    /// Default sub-Gaussian constant after whitening: 1 for Gaussian noise,
    /// and the Hoeffding proxy ratio `s/√Var` for clipped entries.
    pub fn default_nu0(&self) -> f64 {
        match self {
            Noise::Gaussian(_) => 1.0,
            Noise::Bounded(_) => 1.0 / clipped_normal_variance().sqrt(),
        }
    }

    /// Operator-norm bound: `W² ⪯ B²` with `B² = (p·s)²·I` (Gershgorin).
    pub fn b_sq_norm(&self, p: usize) -> Option<f64> {
        match *self {
            Noise::Gaussian(_) => None,
            Noise::Bounded(s) => Some((p as f64 * s).powi(2)),
        }
    }

    fn sample_one(&self, p: usize, rng: &mut PhiloxRng) -> DMatrix<f64> {
        let s = self.scale();
        let g = match self {
            Noise::Gaussian(_) => {
                DMatrix::from_fn(p, p, |_, _| -> f64 { StandardNormal.sample(rng) })
            }
            Noise::Bounded(_) => DMatrix::from_fn(p, p, |_, _| {
                let z: f64 = StandardNormal.sample(rng);
                z.clamp(-1.0, 1.0)
            }),
        };
        let sym = &g + g.transpose();
        match self {
            Noise::Gaussian(_) => sym * (s / std::f64::consts::SQRT_2),
            Noise::Bounded(_) => sym * (0.5 * s),
        }
    }

    /// `Σ_{k≤n} W_k`. Gaussian sums are drawn in one shot as `√n·W`.
    pub fn sample_sum(&self, n: usize, p: usize, rng: &mut PhiloxRng) -> DMatrix<f64> {
        match self {
            Noise::Gaussian(_) => self.sample_one(p, rng) * (n as f64).sqrt(),
            Noise::Bounded(_) => {
                let mut acc = DMatrix::zeros(p, p);
                for _ in 0..n {
                    acc += self.sample_one(p, rng);
                }
                acc
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleSpec {
    pub n: usize,
    /// `E X₁`.
    pub mean: SpdMatrix,
    pub noise: Noise,
    pub seed: u64,
}

/// Top eigenpair of `E X₁` and its gap.
#[derive(Debug, Clone, PartialEq)]
pub struct TopEigen {
    pub lambda: f64,
    pub vector: DVector<f64>,
    pub gap: f64,
}

impl EnsembleSpec {
    pub fn new(n: usize, mean: SpdMatrix, noise: Noise, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("n must be positive".into()));
        }
        if !(noise.scale() >= 0.0) || !noise.scale().is_finite() {
            return Err(Error::InvalidArgument(
                "noise scale must be nonnegative".into(),
            ));
        }
        mean.require_psd("positive semidefinite (E X₁)")?;
        Ok(Self {
            n,
            mean,
            noise,
            seed,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.dim()
    }

    pub fn top(&self) -> Result<TopEigen> {
        let eig = self.mean.eigen();
        let p = self.dim();
        let lambda = eig.max();
        let gap = if p > 1 {
            lambda - eig.values[p - 2]
        } else {
            f64::INFINITY
        };
        if gap <= MIN_EIGENGAP {
            return Err(Error::EigengapTooSmall { gap });
        }
        let mut vector: DVector<f64> = eig.vectors.column(p - 1).into_owned();
        // fix the sign so runs are reproducible across eigen solvers
        let lead = vector.iamax();
        if vector[lead] < 0.0 {
            vector = -vector;
        }
        Ok(TopEigen {
            lambda,
            vector,
            gap,
        })
    }

    /// `E A = n·E X₁`.
    pub fn mean_sum(&self) -> DMatrix<f64> {
        self.mean.matrix() * self.n as f64
    }

    /// One draw of `A`.
    pub fn sample(&self, rng: &mut PhiloxRng) -> DMatrix<f64> {
        self.mean_sum() + self.noise.sample_sum(self.n, self.dim(), rng)
    }

    /// `Var(Aθ) = n·s_eff²(‖θ‖²I + θθᵀ)`.
    pub fn var_a_theta(&self, theta: &DVector<f64>) -> SpdMatrix {
        let p = self.dim();
        let m = (DMatrix::identity(p, p) * theta.norm_squared() + theta * theta.transpose())
            * (self.n as f64 * self.noise.s_eff_sq());
        SpdMatrix::new(m).expect("rank-one update of a scaled identity is symmetric")
    }

    /// `E W₁²`, the summand variance `Var(X₁)`.
    pub fn summand_variance(&self) -> SpdMatrix {
        SpdMatrix::scaled_identity(self.dim(), self.noise.s_eff_sq() * (self.dim() + 1) as f64)
    }
}

/// A [`FieldModel`] derived from an ensemble, with the objects needed to
/// translate the supremum bound back to eigenvalues.
#[derive(Debug, Clone)]
pub struct EigenModel {
    pub ensemble: EnsembleSpec,
    pub penalty: Penalty,
    pub model: FieldModel,
    pub theta_star: DVector<f64>,
    pub r_star: f64,
    /// `λmax(E A)`.
    pub lam_max_mean: f64,
    pub top: TopEigen,
}

impl EigenModel {
    /// `G(A, θ) = θᵀAθ − f(‖θ‖²)`.
    pub fn field(&self, a: &DMatrix<f64>, theta: &DVector<f64>) -> f64 {
        theta.dot(&(a * theta)) - self.penalty.f(theta.norm_squared())
    }

    /// `‖V̄₀θ*‖` with `V̄₀² = Var(Aθ*)`.
    pub fn linear_scale(&self) -> f64 {
        let v = self.ensemble.var_a_theta(&self.theta_star);
        self.theta_star.dot(&(v.matrix() * &self.theta_star)).sqrt()
    }
}

/// Build the field model of `G(A, θ)` at `θ* = √r*·e`.
///
/// `ε = λmin(V₀²)^{−1/2}`, `ω₀` is the analytic Lipschitz constant of the
/// gradient noise on `Θ₀(r)`, `𝔞` is minimal, `D* = D₀²`, `g = 10√p`, `r₀` is
/// the exit radius at `x_max` and `δ₀` is calibrated on `Θ₀(r₀)`.
pub fn field_model_from_ensemble(
    e: &EnsembleSpec,
    f: &Penalty,
    nu0_est: Option<f64>,
    x_max: f64,
) -> Result<EigenModel> {
    let p = e.dim();
    let n = e.n as f64;
    let top = e.top()?;
    if !(top.lambda > 0.0) {
        return Err(Error::InvalidArgument("λmax(E X₁) must be positive".into()));
    }
    let lam_max_mean = n * top.lambda;
    let r_star = stationary_radius(f, lam_max_mean)?;
    let curv = f.d2f(r_star);
    if !(curv > 0.0) {
        return Err(Error::Precondition(format!(
            "f''(r*) > 0 required, got {curv}"
        )));
    }
    let theta_star = &top.vector * r_star.sqrt();
    let eet = &top.vector * top.vector.transpose();
    let ea = e.mean_sum();
    let d0sq = SpdMatrix::new(
        (DMatrix::identity(p, p) * lam_max_mean - &ea) * 2.0 + &eet * (4.0 * curv * r_star),
    )?;
    let v0sq = e.var_a_theta(&theta_star).scale(4.0);
    let v_min = v0sq.min_eigenvalue();
    if !(v_min > 0.0) {
        return Err(Error::InvalidArgument(
            "noise-free ensemble: V₀² is singular".into(),
        ));
    }
    let eps = 1.0 / v_min.sqrt();
    if eps >= 0.5 {
        return Err(Error::Precondition(format!(
            "ε = λmin(V₀²)^(-1/2) = {eps} must be below 1/2; increase n, the signal, or the noise scale"
        )));
    }
    let nu0 = nu0_est.unwrap_or_else(|| e.noise.default_nu0()).max(1.0);
    let omega0 = (8.0 * n * e.noise.s_eff_sq()).sqrt() / (eps * v_min);
    let aa = minimal_aa(&d0sq, &v0sq)?;
    let eff = crate::model::effective_dims(&d0sq, &v0sq)?;
    let g = 10.0 * (eff.p_eff / eff.lam0).sqrt();
    let mut model = FieldModel::new(
        p,
        d0sq.clone(),
        v0sq,
        d0sq,
        Scalars {
            nu0,
            g,
            eps,
            omega0,
            delta0: 1.0,
            aa,
            r0: 1.0,
        },
    )?;
    model.r0 = bound::min_global_radius(&model, x_max)?;
    let ea_eval = ea.clone();
    let pen = f.clone();
    let m_eval = move |th: &DVector<f64>| th.dot(&(&ea_eval * th)) - pen.f(th.norm_squared());
    let delta0 = calibrate_delta0(
        m_eval,
        &model,
        &theta_star,
        model.r0,
        CALIBRATION_SAMPLES,
        e.seed,
        None,
    )?;
    model.delta0 = delta0.max(f64::MIN_POSITIVE);
    Ok(EigenModel {
        ensemble: e.clone(),
        penalty: f.clone(),
        model,
        theta_star,
        r_star,
        lam_max_mean,
        top,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenBound {
    pub x: f64,
    /// Threshold for `f*(λmax(A)) − f*(λmax(EA))`.
    pub threshold: f64,
    /// `λ₀𝔭/2`.
    pub centre: f64,
    /// `√x·‖V̄₀θ*‖`.
    pub linear_term: f64,
    /// `implied_c·λ₀(𝚟√x + x)`.
    pub deviation_term: f64,
    pub implied_c: f64,
    /// `1 + e^{ν₀²/2}` from the linear term.
    pub linear_multiplier: f64,
    /// Multiplier of the supremum bound.
    pub sup_multiplier: f64,
}

impl EigenBound {
    /// Multiplier used for coverage checks: `(1 + e^{ν₀²/2})·m_sup`.
    pub fn coverage_multiplier(&self) -> f64 {
        self.linear_multiplier * self.sup_multiplier
    }
}

pub fn eigen_bound(em: &EigenModel, x: f64) -> Result<EigenBound> {
    if !(x >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "x must be nonnegative, got {x}"
        )));
    }
    let eff = em.model.effective_dims()?;
    let centre = eff.lam0 * eff.p_eff / 2.0;
    let linear_multiplier = 1.0 + (em.model.nu0.powi(2) / 2.0).exp();
    let opts = SupBoundOptions::default();
    if x == 0.0 {
        return Ok(EigenBound {
            x,
            threshold: centre,
            centre,
            linear_term: 0.0,
            deviation_term: 0.0,
            implied_c: f64::NAN,
            linear_multiplier,
            sup_multiplier: opts.prob_multiplier,
        });
    }
    let rep = bound::sup_bound_with(&em.model, x, &opts)?;
    let linear_term = x.sqrt() * em.linear_scale();
    Ok(EigenBound {
        x,
        threshold: rep.total_offset + linear_term,
        centre,
        linear_term,
        deviation_term: rep.total_offset - centre,
        implied_c: rep.implied_c,
        linear_multiplier,
        sup_multiplier: rep.prob_multiplier,
    })
}

/// `√(2(x + log p))·σ` with `σ² = n/2·norm`, `norm = ‖B² + Var(X₁)‖`.
pub fn bernstein_threshold(n: usize, p: usize, norm: f64, x: f64) -> f64 {
    let sigma_sq = n as f64 / 2.0 * norm;
    (2.0 * (x + (p as f64).ln()) * sigma_sq).sqrt()
}

/// Threshold for `λmax(A − EA)` exceeded with probability at most `e⁻ˣ`.
pub fn bernstein_bound(e: &EnsembleSpec, x: f64) -> Result<f64> {
    let p = e.dim();
    let b_sq = e.noise.b_sq_norm(p).ok_or_else(|| {
        Error::Precondition("matrix Bernstein bound requires X_k² ⪯ B² (bounded noise)".into())
    })?;
    let norm = b_sq + e.noise.s_eff_sq() * (p + 1) as f64;
    Ok(bernstein_threshold(e.n, p, norm, x))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
/// `Paper` names the field-based bound, matching the `paper_thresh` column.
pub enum Winner {
    Paper,
    Bernstein,
    PaperInvalid,
}

impl Winner {
    pub fn as_str(self) -> &'static str {
        match self {
            Winner::Paper => "paper",
            Winner::Bernstein => "bernstein",
            Winner::PaperInvalid => "paper_invalid",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub n: usize,
    pub p: usize,
    pub x: f64,
    /// Threshold on `λmax²(A) − λmax²(EA)`; NaN when the supremum bound is invalid.
    pub paper_thresh: f64,
    pub bernstein_thresh_mapped: f64,
    pub ratio: f64,
    pub winner: Winner,
}

/// Compare both bounds on the event `λmax²(A) − λmax²(EA) ≥ t`, quadratic
/// penalty `f(r) = n r²`. `mean_for` supplies `E X₁` for each dimension.
pub fn compare_bounds(
    mean_for: impl Fn(usize) -> Result<SpdMatrix>,
    noise: Noise,
    seed: u64,
    x_grid: &[f64],
    n_grid: &[usize],
    p_grid: &[usize],
) -> Result<Vec<ComparisonRow>> {
    if x_grid.is_empty() || n_grid.is_empty() || p_grid.is_empty() {
        return Err(Error::InvalidArgument("empty comparison grid".into()));
    }
    let x_max = x_grid.iter().copied().fold(f64::MIN, f64::max);
    let mut rows = Vec::new();
    for &n in n_grid {
        for &p in p_grid {
            let e = EnsembleSpec::new(n, mean_for(p)?, noise, seed)?;
            if e.dim() != p {
                return Err(Error::DimensionMismatch {
                    what: "mean matrix",
                    expected: p,
                    got: e.dim(),
                });
            }
            let em = field_model_from_ensemble(&e, &Penalty::quadratic(n), None, x_max);
            let lmax = e.top()?.lambda * n as f64;
            for &x in x_grid {
                let t = bernstein_bound(&e, x)?;
                let bern = (lmax + t).powi(2) - lmax * lmax;
                let paper = em
                    .as_ref()
                    .ok()
                    .and_then(|em| eigen_bound(em, x).ok())
                    .map(|b| 4.0 * n as f64 * b.threshold);
                let (paper_thresh, ratio, winner) = match paper {
                    Some(v) => {
                        let w = if v < bern {
                            Winner::Paper
                        } else {
                            Winner::Bernstein
                        };
                        (v, v / bern, w)
                    }
                    None => (f64::NAN, f64::NAN, Winner::PaperInvalid),
                };
                rows.push(ComparisonRow {
                    n,
                    p,
                    x,
                    paper_thresh,
                    bernstein_thresh_mapped: bern,
                    ratio,
                    winner,
                });
            }
        }
    }
    Ok(rows)
}

/// Smallest `x` per `(n, p)` at which the field-based threshold wins, if any.
pub fn frontier(rows: &[ComparisonRow]) -> Vec<(usize, usize, Option<f64>)> {
    let mut out: Vec<(usize, usize, Option<f64>)> = Vec::new();
    for r in rows {
        let idx = match out.iter().position(|(n, p, _)| *n == r.n && *p == r.p) {
            Some(i) => i,
            None => {
                out.push((r.n, r.p, None));
                out.len() - 1
            }
        };
        if r.winner == Winner::Paper {
            let slot = &mut out[idx].2;
            *slot = Some(slot.map_or(r.x, |v: f64| v.min(r.x)));
        }
    }
    out
}

/// Mean `diag(top, bulk, …, bulk)` of dimension `p`.
pub fn spiked_mean(p: usize, top: f64, bulk: f64) -> Result<SpdMatrix> {
    if p == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    let mut d = vec![bulk; p];
    d[0] = top;
    Ok(SpdMatrix::from_diagonal(&d))
}

/// Uniform draw on the unit sphere.
pub fn random_unit(p: usize, rng: &mut PhiloxRng) -> DVector<f64> {
    loop {
        let v: DVector<f64> = DVector::from_fn(p, |_, _| StandardNormal.sample(rng));
        let n = v.norm();
        if n > 0.0 {
            return v / n;
        }
        let _: f64 = rng.random();
    }
}
