use std::fmt;

use thiserror::Error;

/// Hypotheses of the supremum bound that are checked before a report is assembled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundCondition {
    /// ε√(x+3p) < 1.
    EpsCond,
    /// x + 3p ≥ 2.5, needed for the global exit radius.
    GlobalCond,
    /// Contraction factor τ < 1.
    TauCond,
    /// x ≤ x_c, the range where the quadratic-form quantile is proven.
    XcCond,
}

impl BoundCondition {
    pub fn name(self) -> &'static str {
        match self {
            BoundCondition::EpsCond => "eps_cond",
            BoundCondition::GlobalCond => "global_cond",
            BoundCondition::TauCond => "tau_cond",
            BoundCondition::XcCond => "xc_cond",
        }
    }

    /// The inequality that must hold, as printed in error messages.
    pub fn requirement(self) -> &'static str {
        match self {
            BoundCondition::EpsCond => "ε√(x+3p) < 1",
            BoundCondition::GlobalCond => "x + 3p ≥ 2.5",
            BoundCondition::TauCond => "τ = εr₀(δ₀ + 3ν₀ω₀𝔞²) < 1",
            BoundCondition::XcCond => "x ≤ x_c",
        }
    }
}

impl fmt::Display for BoundCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got} ({what})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e} relative to scale {scale:e})")]
    NotSymmetric { asymmetry: f64, scale: f64 },

    #[error("matrix is not {role}: minimal eigenvalue {min_eigenvalue:e}")]
    NotDefinite {
        role: &'static str,
        min_eigenvalue: f64,
    },

    #[error("curvature singular: λmin(D₀²) = {min_eigenvalue:e}")]
    CurvatureSingular { min_eigenvalue: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("{}", format_bound_violation(.violated, .detail))]
    BoundViolation {
        violated: Vec<BoundCondition>,
        detail: String,
    },

    #[error(
        "local quadratic bracket fails; shrink r or ε (λmin(D₀²(1−δ) − ϱV₀²) = {min_eigenvalue:e})"
    )]
    LocalBracket { min_eigenvalue: f64 },

    #[error("outside MGF range: λ = {lambda} > g₀ = {g0}")]
    OutsideMgfRange { lambda: f64, g0: f64 },

    #[error("MGF hypothesis violated: λmax(Σ) = {lambda_max} > 1")]
    MgfHypothesis { lambda_max: f64 },

    #[error("top eigenvector ill-defined: eigengap {gap:e}")]
    EigengapTooSmall { gap: f64 },

    #[error("root finding failed: {0}")]
    RootFinding(String),
}

fn format_bound_violation(violated: &[BoundCondition], detail: &str) -> String {
    let names: Vec<String> = violated
        .iter()
        .map(|c| format!("{}: requires {}", c.name(), c.requirement()))
        .collect();
    format!("{} ({})", names.join("; "), detail)
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
