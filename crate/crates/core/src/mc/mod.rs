//! Monte Carlo checks of every bound in the crate.
//!
//! Replica `t` draws from the Philox stream `(seed, t, tag)`, and exceedances
//! are reduced as integer counts, so results do not depend on scheduling.

pub mod chi2;
pub mod estimate;
pub mod stats;

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::bound::{sup_bound, BoundReport};
use crate::eigenmax::{
    bernstein_bound, eigen_bound, field_model_from_ensemble, legendre, sup_field, EigenModel,
    EnsembleSpec, Penalty,
};
use crate::error::{Error, Result};
use crate::linalg::{SpdMatrix, ORDER_TOL};
use crate::quadform::{normalize, QuadFormBound};
use crate::rng::{tags, PhiloxRng};

pub use chi2::{chi2_cdf, chi2_oracle, chi2_sf};
pub use estimate::{estimate_nu0, estimate_omega0, gradient_increment, Estimate};
pub use stats::{wilson_halfwidth, wilson_interval, CoverageReport};

/// Fewest trials accepted by [`sample_quadform`].
pub const MIN_QUADFORM_TRIALS: u64 = 10_000;

/// For each replica evaluate `stat`, which returns one value per group, and
/// count how often group `j` reaches each threshold in `thresholds[j]`.
pub fn count_exceedances<F>(
    trials: u64,
    seed: u64,
    tag: u32,
    thresholds: &[Vec<f64>],
    stat: F,
) -> Vec<Vec<u64>>
where
    F: Fn(&mut PhiloxRng) -> Vec<f64> + Sync,
{
    let zero: Vec<Vec<u64>> = thresholds.iter().map(|t| vec![0; t.len()]).collect();
    let add = |mut acc: Vec<Vec<u64>>, other: Vec<Vec<u64>>| {
        for (a, o) in acc.iter_mut().zip(other) {
            for (x, y) in a.iter_mut().zip(o) {
                *x += y;
            }
        }
        acc
    };
    (0..trials)
        .into_par_iter()
        .fold(
            || zero.clone(),
            |mut acc, t| {
                let mut rng = PhiloxRng::stream(seed, t, tag);
                let values = stat(&mut rng);
                for ((counts, thr), v) in acc.iter_mut().zip(thresholds).zip(values) {
                    for (c, th) in counts.iter_mut().zip(thr) {
                        if v >= *th {
                            *c += 1;
                        }
                    }
                }
                acc
            },
        )
        .reduce(|| zero.clone(), add)
}

fn check_grid(x_grid: &[f64]) -> Result<()> {
    if x_grid.is_empty() {
        return Err(Error::InvalidArgument("empty x grid".into()));
    }
    if let Some(x) = x_grid.iter().find(|x| !(**x > 0.0) || !x.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "x values must be positive, got {x}"
        )));
    }
    Ok(())
}

fn lambda_max(a: &DMatrix<f64>) -> f64 {
    a.clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadformCoverage {
    pub report: CoverageReport,
    /// `tr B + z(x)`, compared against `ξᵀBξ`.
    pub thresholds: Vec<f64>,
    pub x_c: f64,
    pub g: f64,
}

/// Coverage of the quadratic-form quantile for Gaussian `ξ ~ N(0, Σ)`, `Σ ⪯ I`.
/// `g = None` uses `10√p`.
pub fn sample_quadform(
    b: &SpdMatrix,
    sigma: &SpdMatrix,
    g: Option<f64>,
    x_grid: &[f64],
    trials: u64,
    seed: u64,
) -> Result<QuadformCoverage> {
    check_grid(x_grid)?;
    if trials < MIN_QUADFORM_TRIALS {
        return Err(Error::InvalidArgument(format!(
            "need at least {MIN_QUADFORM_TRIALS} trials, got {trials}"
        )));
    }
    b.ensure_same_dim(sigma, "sigma")?;
    let s_eig = sigma.require_psd("positive semidefinite (Σ)")?;
    if s_eig.max() > 1.0 + ORDER_TOL {
        return Err(Error::MgfHypothesis {
            lambda_max: s_eig.max(),
        });
    }
    let g = match g {
        Some(g) => g,
        None => 10.0 * normalize(b, 1.0)?.p_app.sqrt(),
    };
    let qf = QuadFormBound::with_precondition(b, g)?;
    let trace = b.trace();
    let thresholds: Vec<f64> = x_grid
        .iter()
        .map(|&x| trace + qf.quantile(x).z_dev)
        .collect();
    let bounds: Vec<f64> = x_grid
        .iter()
        .map(|&x| qf.quantile_probability(x).min(1.0))
        .collect();
    let root = sigma.sqrt().into_matrix();
    let bm = b.matrix();
    let p = b.dim();
    let counts = count_exceedances(
        trials,
        seed,
        tags::QUADFORM,
        std::slice::from_ref(&thresholds),
        |rng| {
            let z: DVector<f64> = DVector::from_fn(p, |_, _| StandardNormal.sample(rng));
            let xi = &root * z;
            vec![xi.dot(&(bm * &xi))]
        },
    );
    Ok(QuadformCoverage {
        report: CoverageReport::from_counts(
            x_grid.to_vec(),
            counts.into_iter().next().expect("one group"),
            bounds,
            trials,
            seed,
        ),
        thresholds,
        x_c: qf.crit.x_c,
        g,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldCoverage {
    pub report: CoverageReport,
    pub bounds: Vec<BoundReport>,
}

/// Coverage of the supremum bound for `G(A, θ) = θᵀAθ − f(‖θ‖²)`; the
/// supremum is exact, `f*(λmax(A))`.
pub fn verify_field_bound(
    em: &EigenModel,
    x_grid: &[f64],
    trials: u64,
    seed: u64,
) -> Result<FieldCoverage> {
    check_grid(x_grid)?;
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be positive".into()));
    }
    let reports = x_grid
        .iter()
        .map(|&x| sup_bound(&em.model, x))
        .collect::<Result<Vec<_>>>()?;
    let thresholds: Vec<f64> = reports.iter().map(|r| r.total_offset).collect();
    let bounds: Vec<f64> = reports
        .iter()
        .map(|r| (r.prob_multiplier * (-r.x).exp()).min(1.0))
        .collect();
    let e = &em.ensemble;
    let counts = count_exceedances(trials, seed, tags::FIELD, &[thresholds], |rng| {
        let a = e.sample(rng);
        let sup = sup_field(&em.penalty, lambda_max(&a)).unwrap_or(f64::NAN);
        vec![sup - em.field(&a, &em.theta_star)]
    });
    Ok(FieldCoverage {
        report: CoverageReport::from_counts(
            x_grid.to_vec(),
            counts.into_iter().next().expect("one group"),
            bounds,
            trials,
            seed,
        ),
        bounds: reports,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenCoverage {
    /// Tail of `f*(λmax(A)) − f*(λmax(EA))` against the eigenvalue bound with
    /// multiplier `(1 + e^{ν₀²/2})·5`.
    pub paper: Option<CoverageReport>,
    pub paper_error: Option<String>,
    /// Tail of `λmax(A − EA)` against the matrix Bernstein threshold.
    pub bernstein: Option<CoverageReport>,
    pub bernstein_error: Option<String>,
}

pub fn verify_eigen_bounds(
    e: &EnsembleSpec,
    f: &Penalty,
    x_grid: &[f64],
    trials: u64,
    seed: u64,
) -> Result<EigenCoverage> {
    check_grid(x_grid)?;
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be positive".into()));
    }
    let x_max = x_grid.iter().copied().fold(f64::MIN, f64::max);
    let paper = field_model_from_ensemble(e, f, None, x_max).and_then(|em| {
        let bounds = x_grid
            .iter()
            .map(|&x| eigen_bound(&em, x))
            .collect::<Result<Vec<_>>>()?;
        let base = legendre(f, em.lam_max_mean)?;
        Ok((bounds, base))
    });
    let bern = x_grid
        .iter()
        .map(|&x| bernstein_bound(e, x))
        .collect::<Result<Vec<_>>>();

    let paper_thr = match &paper {
        Ok((b, _)) => b.iter().map(|b| b.threshold).collect(),
        Err(_) => Vec::new(),
    };
    let bern_thr = bern.clone().unwrap_or_default();
    let base = paper.as_ref().map(|(_, b)| *b).unwrap_or(0.0);
    let ea = e.mean_sum();
    let counts = count_exceedances(trials, seed, tags::EIGEN, &[paper_thr, bern_thr], |rng| {
        let a = e.sample(rng);
        let top = lambda_max(&a);
        let paper_stat = sup_field(f, top).unwrap_or(f64::NAN) - base;
        vec![paper_stat, lambda_max(&(&a - &ea))]
    });
    let mut counts = counts.into_iter();
    let paper_counts = counts.next().expect("paper group");
    let bern_counts = counts.next().expect("bernstein group");

    let (paper, paper_error) = match paper {
        Ok((bounds, _)) => {
            let probs = bounds
                .iter()
                .map(|b| (b.coverage_multiplier() * (-b.x).exp()).min(1.0))
                .collect();
            (
                Some(CoverageReport::from_counts(
                    x_grid.to_vec(),
                    paper_counts,
                    probs,
                    trials,
                    seed,
                )),
                None,
            )
        }
        Err(err) => (None, Some(err.to_string())),
    };
    let (bernstein, bernstein_error) = match bern {
        Ok(_) => {
            let probs = x_grid.iter().map(|x| (-x).exp()).collect();
            (
                Some(CoverageReport::from_counts(
                    x_grid.to_vec(),
                    bern_counts,
                    probs,
                    trials,
                    seed,
                )),
                None,
            )
        }
        Err(err) => (None, Some(err.to_string())),
    };
    Ok(EigenCoverage {
        paper,
        paper_error,
        bernstein,
        bernstein_error,
    })
}
