//! Parameter records for a smooth random field and the checks on them.
//!
//! A [`FieldModel`] carries the curvature `D₀²`, the variance dominator `V₀²`,
//! the global curvature floor `D*`, and the scalar constants of the
//! exponential-moment conditions. Downstream modules assume a model that has
//! passed [`validate_model`].

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{order_margin, SpdMatrix, ORDER_TOL};

/// All parameters of the field. One shared pair `(ν₀, g)` serves both
/// exponential-moment conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFieldModel", into = "RawFieldModel")]
pub struct FieldModel {
    pub dim: usize,
    /// `−∇²M(θ*)`.
    pub d0sq: SpdMatrix,
    /// Dominates `Var ∇G(X, θ*)`.
    pub v0sq: SpdMatrix,
    /// Curvature floor away from θ*.
    pub dstar: SpdMatrix,
    pub nu0: f64,
    /// Range of the exponential-moment condition.
    pub g: f64,
    pub eps: f64,
    pub omega0: f64,
    pub delta0: f64,
    pub aa: f64,
    pub r0: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFieldModel {
    dim: usize,
    d0sq: Vec<Vec<f64>>,
    v0sq: Vec<Vec<f64>>,
    dstar: Vec<Vec<f64>>,
    nu0: f64,
    g: f64,
    eps: f64,
    omega0: f64,
    delta0: f64,
    aa: f64,
    r0: f64,
}

impl TryFrom<RawFieldModel> for FieldModel {
    type Error = Error;

    fn try_from(raw: RawFieldModel) -> Result<Self> {
        FieldModel::new(
            raw.dim,
            SpdMatrix::from_rows(&raw.d0sq)?,
            SpdMatrix::from_rows(&raw.v0sq)?,
            SpdMatrix::from_rows(&raw.dstar)?,
            Scalars {
                nu0: raw.nu0,
                g: raw.g,
                eps: raw.eps,
                omega0: raw.omega0,
                delta0: raw.delta0,
                aa: raw.aa,
                r0: raw.r0,
            },
        )
    }
}

impl From<FieldModel> for RawFieldModel {
    fn from(m: FieldModel) -> Self {
        RawFieldModel {
            dim: m.dim,
            d0sq: m.d0sq.to_rows(),
            v0sq: m.v0sq.to_rows(),
            dstar: m.dstar.to_rows(),
            nu0: m.nu0,
            g: m.g,
            eps: m.eps,
            omega0: m.omega0,
            delta0: m.delta0,
            aa: m.aa,
            r0: m.r0,
        }
    }
}

/// The scalar constants of a [`FieldModel`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scalars {
    pub nu0: f64,
    pub g: f64,
    pub eps: f64,
    pub omega0: f64,
    pub delta0: f64,
    pub aa: f64,
    pub r0: f64,
}

impl FieldModel {
    /// Assemble a model. Only shape errors are fatal here; the order
    /// inequalities are reported by [`validate_model`].
    pub fn new(
        dim: usize,
        d0sq: SpdMatrix,
        v0sq: SpdMatrix,
        dstar: SpdMatrix,
        s: Scalars,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dim must be positive".into()));
        }
        for (what, m) in [("d0sq", &d0sq), ("v0sq", &v0sq), ("dstar", &dstar)] {
            if m.dim() != dim {
                return Err(Error::DimensionMismatch {
                    what,
                    expected: dim,
                    got: m.dim(),
                });
            }
        }
        let scalars = [s.nu0, s.g, s.eps, s.omega0, s.delta0, s.aa, s.r0];
        if scalars.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "model scalars must be finite".into(),
            ));
        }
        Ok(Self {
            dim,
            d0sq,
            v0sq,
            dstar,
            nu0: s.nu0,
            g: s.g,
            eps: s.eps,
            omega0: s.omega0,
            delta0: s.delta0,
            aa: s.aa,
            r0: s.r0,
        })
    }

    pub fn scalars(&self) -> Scalars {
        Scalars {
            nu0: self.nu0,
            g: self.g,
            eps: self.eps,
            omega0: self.omega0,
            delta0: self.delta0,
            aa: self.aa,
            r0: self.r0,
        }
    }

    pub fn effective_dims(&self) -> Result<EffDim> {
        effective_dims(&self.d0sq, &self.v0sq)
    }

    /// `b* = λmin(D*)/λmax(V₀²)`.
    pub fn curvature_rate(&self) -> f64 {
        curvature_rate(&self.dstar, &self.v0sq)
    }
}

/// One checked inequality with its margin (negative means violated).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub margin: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn margin(&self, name: &str) -> Option<f64> {
        self.checks
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.margin)
    }
}

fn check(name: &'static str, margin: f64) -> Check {
    Check {
        name,
        margin,
        pass: margin >= -ORDER_TOL,
    }
}

/// Evaluate every hypothesis on the model's matrices and constants.
///
/// Each matrix inequality `A ⪰ B` is reported through `λmin(A − B)`; scalar
/// constraints use the signed distance to the boundary. A model is valid iff
/// all margins are ≥ −1e-10.
pub fn validate_model(m: &FieldModel) -> Result<ValidationReport> {
    m.d0sq.ensure_same_dim(&m.v0sq, "v0sq")?;
    m.d0sq.ensure_same_dim(&m.dstar, "dstar")?;
    let p = m.dim;
    let eye = DMatrix::<f64>::identity(p, p);

    let v0_floor = order_margin(m.v0sq.matrix(), &(eye * m.eps.powi(-2)));
    let aa_dom = order_margin(&(m.d0sq.matrix() * (m.aa * m.aa)), m.v0sq.matrix());

    let checks = vec![
        check("d0sq_pd", m.d0sq.min_eigenvalue()),
        check("dstar_pd", m.dstar.min_eigenvalue()),
        check("v0sq_ge_eps_inv_sq", v0_floor),
        check("aa_sq_d0sq_ge_v0sq", aa_dom),
        check("nu0_ge_1", m.nu0 - 1.0),
        check("eps_in_open_half", m.eps.min(0.5 - m.eps)),
        check("g_positive", m.g),
        check("omega0_positive", m.omega0),
        check("delta0_positive", m.delta0),
        check("r0_positive", m.r0),
    ];
    Ok(ValidationReport { checks })
}

/// Effective dimensions of `B = D₀⁻¹V₀²D₀⁻¹`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffDim {
    pub b: SpdMatrix,
    /// `tr B`.
    pub p_eff: f64,
    /// `√(2 tr B²)`.
    pub v_eff: f64,
    /// `λmax(B)`.
    pub lam0: f64,
}

/// Relative threshold under which `D₀²` counts as singular.
const SINGULAR_TOL: f64 = 1e-14;

pub fn effective_dims(d0sq: &SpdMatrix, v0sq: &SpdMatrix) -> Result<EffDim> {
    d0sq.ensure_same_dim(v0sq, "v0sq")?;
    let eig = d0sq.eigen();
    if eig.min() <= SINGULAR_TOL * eig.max().abs() || eig.min() <= 0.0 {
        return Err(Error::CurvatureSingular {
            min_eigenvalue: eig.min(),
        });
    }
    v0sq.require_psd("positive semidefinite (V₀²)")?;
    let s = eig.map(|l| l.powf(-0.5));
    let b = SpdMatrix::new(&s * v0sq.matrix() * &s)?;
    let b_eig = b.eigen();
    let p_eff = b_eig.values.iter().sum::<f64>();
    let v_eff = (2.0 * b_eig.values.iter().map(|l| l * l).sum::<f64>()).sqrt();
    let lam0 = b_eig.max();
    Ok(EffDim {
        b,
        p_eff,
        v_eff,
        lam0,
    })
}

/// `b* = λmin(D*)/λmax(V₀²)`.
pub fn curvature_rate(dstar: &SpdMatrix, v0sq: &SpdMatrix) -> f64 {
    dstar.min_eigenvalue() / v0sq.max_eigenvalue()
}

/// Smallest `𝔞` with `𝔞²D₀² ⪰ V₀²`, namely `√λmax(D₀⁻¹V₀²D₀⁻¹)`.
pub fn minimal_aa(d0sq: &SpdMatrix, v0sq: &SpdMatrix) -> Result<f64> {
    Ok(effective_dims(d0sq, v0sq)?.lam0.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn scalars(eps: f64, aa: f64) -> Scalars {
        Scalars {
            nu0: 1.0,
            g: 10.0,
            eps,
            omega0: 1.0,
            delta0: 0.5,
            aa,
            r0: 1.0,
        }
    }

    fn model(d0: SpdMatrix, v0: SpdMatrix, ds: SpdMatrix, eps: f64, aa: f64) -> FieldModel {
        FieldModel::new(d0.dim(), d0, v0, ds, scalars(eps, aa)).unwrap()
    }

    #[test]
    fn identity_model_fails_variance_floor() {
        let i = SpdMatrix::identity(2);
        let m = model(i.clone(), i.clone(), i, 0.5, 1.0);
        let r = validate_model(&m).unwrap();
        assert!(!r.is_valid());
        assert!((r.margin("v0sq_ge_eps_inv_sq").unwrap() + 3.0).abs() < 1e-12);
        assert!(r.margin("aa_sq_d0sq_ge_v0sq").unwrap().abs() < 1e-12);
    }

    #[test]
    fn scaled_identity_model_is_valid() {
        let nine = SpdMatrix::scaled_identity(2, 9.0);
        let m = model(nine.clone(), nine.clone(), nine, 0.5, 1.0);
        let r = validate_model(&m).unwrap();
        assert!(r.is_valid(), "{r:?}");
        assert!(r.checks.iter().all(|c| c.margin >= 0.0));
    }

    #[test]
    fn small_eps_requires_large_variance() {
        let v = SpdMatrix::scaled_identity(2, 2.0);
        let m = model(SpdMatrix::identity(2), v, SpdMatrix::identity(2), 0.05, 2.0);
        let r = validate_model(&m).unwrap();
        assert!(!r.is_valid());
        // eigenvalue oracle: 2 − 0.05⁻² = 2 − 400
        assert!((r.margin("v0sq_ge_eps_inv_sq").unwrap() + 398.0).abs() < 1e-9);
    }

    #[test]
    fn dimension_mismatch_is_hard_error() {
        let err = FieldModel::new(
            2,
            SpdMatrix::identity(2),
            SpdMatrix::identity(3),
            SpdMatrix::identity(2),
            scalars(0.1, 1.0),
        )
        .unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn effective_dims_identity() {
        for p in 1..6 {
            let e = effective_dims(&SpdMatrix::identity(p), &SpdMatrix::identity(p)).unwrap();
            assert!((e.p_eff - p as f64).abs() < 1e-12);
            assert!((e.v_eff - (2.0 * p as f64).sqrt()).abs() < 1e-12);
            assert!((e.lam0 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn effective_dims_diagonal() {
        let e = effective_dims(
            &SpdMatrix::from_diagonal(&[1.0, 4.0]),
            &SpdMatrix::from_diagonal(&[2.0, 2.0]),
        )
        .unwrap();
        // diagonal oracle: B = diag(2/1, 2/4)
        let b = e.b.matrix();
        assert!((b[(0, 0)] - 2.0).abs() < 1e-12);
        assert!((b[(1, 1)] - 0.5).abs() < 1e-12);
        assert!(b[(0, 1)].abs() < 1e-12);
        assert!((e.p_eff - 2.5).abs() < 1e-12);
        assert!((e.v_eff - 8.5f64.sqrt()).abs() < 1e-12);
        assert!((e.lam0 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn singular_curvature_rejected() {
        let err = effective_dims(
            &SpdMatrix::from_diagonal(&[1.0, 0.0]),
            &SpdMatrix::identity(2),
        )
        .unwrap_err();
        assert!(matches!(err, Error::CurvatureSingular { .. }));
        assert_eq!(
            err.to_string().split(':').next().unwrap(),
            "curvature singular"
        );
    }

    #[test]
    fn curvature_rate_examples() {
        let i = SpdMatrix::identity(2);
        assert!((curvature_rate(&i, &i) - 1.0).abs() < 1e-15);
        let r = curvature_rate(
            &SpdMatrix::from_diagonal(&[1.0, 2.0]),
            &SpdMatrix::from_diagonal(&[2.0, 2.0]),
        );
        assert!((r - 0.5).abs() < 1e-15);
        let r = curvature_rate(
            &SpdMatrix::scaled_identity(3, 2.0),
            &SpdMatrix::scaled_identity(3, 8.0),
        );
        assert!((r - 0.25).abs() < 1e-15);
    }

    #[test]
    fn minimal_aa_examples() {
        let i = SpdMatrix::identity(3);
        assert!((minimal_aa(&i, &i).unwrap() - 1.0).abs() < 1e-12);
        let a = minimal_aa(
            &SpdMatrix::from_diagonal(&[1.0, 4.0]),
            &SpdMatrix::from_diagonal(&[2.0, 2.0]),
        )
        .unwrap();
        assert!((a - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn json_keys_are_exact() {
        let i = SpdMatrix::identity(1);
        let m = model(i.clone(), i.clone(), i, 0.25, 1.0);
        let v: serde_json::Value = serde_json::to_value(&m).unwrap();
        let mut keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        assert_eq!(
            keys,
            ["aa", "d0sq", "delta0", "dim", "dstar", "eps", "g", "nu0", "omega0", "r0", "v0sq"]
        );
        let back: FieldModel = serde_json::from_value(v).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn json_dimension_mismatch_rejected() {
        let s = r#"{"dim":2,"d0sq":[[1]],"v0sq":[[1]],"dstar":[[1]],"nu0":1,"g":1,"eps":0.1,"omega0":1,"delta0":1,"aa":1,"r0":1}"#;
        assert!(serde_json::from_str::<FieldModel>(s).is_err());
        let s = r#"{"dim":2,"d0sq":[[1,0],[0.5,1]],"v0sq":[[1,0],[0,1]],"dstar":[[1,0],[0,1]],"nu0":1,"g":1,"eps":0.1,"omega0":1,"delta0":1,"aa":1,"r0":1}"#;
        let err = serde_json::from_str::<FieldModel>(s).unwrap_err();
        assert!(err.to_string().contains("not symmetric"));
    }

    fn spd_strategy(p: usize) -> impl Strategy<Value = SpdMatrix> {
        proptest::collection::vec(-1.0f64..1.0, p * p).prop_map(move |v| {
            let a = DMatrix::from_vec(p, p, v);
            SpdMatrix::new(&a * a.transpose() + DMatrix::identity(p, p) * 0.1).unwrap()
        })
    }

    fn rotation(p: usize, angles: &[f64]) -> DMatrix<f64> {
        // Product of Givens rotations in consecutive planes.
        let mut q = DMatrix::<f64>::identity(p, p);
        for (k, &t) in angles.iter().enumerate() {
            let i = k % p;
            let j = (k + 1) % p;
            if i == j {
                continue;
            }
            let mut g = DMatrix::<f64>::identity(p, p);
            g[(i, i)] = t.cos();
            g[(j, j)] = t.cos();
            g[(i, j)] = -t.sin();
            g[(j, i)] = t.sin();
            q = g * q;
        }
        q
    }

    proptest! {
        #[test]
        fn trace_dominates_operator_norm(d in spd_strategy(4), v in spd_strategy(4)) {
            let e = effective_dims(&d, &v).unwrap();
            prop_assert!(e.p_eff >= e.lam0 * (1.0 - 1e-12));
            prop_assert!(e.lam0 > 0.0);
            prop_assert!(e.v_eff * e.v_eff <= 2.0 * e.lam0 * e.p_eff * (1.0 + 1e-12));
        }

        #[test]
        fn minimal_aa_matches_lam0(d in spd_strategy(3), v in spd_strategy(3)) {
            let e = effective_dims(&d, &v).unwrap();
            let a = minimal_aa(&d, &v).unwrap();
            prop_assert_eq!(a * a, e.lam0.sqrt() * e.lam0.sqrt());
            let margin = order_margin(&(d.matrix() * (a * a)), v.matrix());
            prop_assert!(margin >= -1e-10 * e.lam0.max(1.0) * d.max_eigenvalue());
        }

        #[test]
        fn invariant_under_joint_rotation(
            d in spd_strategy(3),
            v in spd_strategy(3),
            angles in proptest::collection::vec(-3.1f64..3.1, 3),
        ) {
            let q = rotation(3, &angles);
            let rd = SpdMatrix::new(&q * d.matrix() * q.transpose()).unwrap();
            let rv = SpdMatrix::new(&q * v.matrix() * q.transpose()).unwrap();
            let a = effective_dims(&d, &v).unwrap();
            let b = effective_dims(&rd, &rv).unwrap();
            let tol = 1e-9 * a.p_eff.max(1.0);
            prop_assert!((a.p_eff - b.p_eff).abs() < tol);
            prop_assert!((a.v_eff - b.v_eff).abs() < tol);
            prop_assert!((a.lam0 - b.lam0).abs() < tol);
        }
    }
}
