use std::fmt;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, Result};
use concfield_core::bound::sup_bound;
use concfield_core::chaining::{
    analytic_ball_entropy, chaining_entropy, covering_ratios, BallSpec, Measure, TailModel,
};
use concfield_core::eigenmax::{
    compare_bounds, field_model_from_ensemble, frontier, spiked_mean, EnsembleSpec, Noise, Penalty,
};
use concfield_core::mc::{
    sample_quadform, verify_eigen_bounds, verify_field_bound, CoverageReport,
};
use concfield_core::quadform::{normalize, QuadFormBound};
use concfield_core::{FieldModel, SpdMatrix};
use serde::Serialize;

use crate::args::*;
use crate::output::{emit, Cell, Table};

/// Bad input from the command line; maps to exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: String) -> anyhow::Error {
    anyhow!(UsageError(msg))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

/// Matrices are JSON arrays of rows.
fn read_matrix(path: &Path) -> Result<SpdMatrix> {
    let rows: Vec<Vec<f64>> = serde_json::from_str(&read_text(path)?).map_err(|e| {
        usage(format!(
            "{}: expected a JSON array of rows: {e}",
            path.display()
        ))
    })?;
    Ok(SpdMatrix::from_rows(&rows)?)
}

fn read_model(path: &Path) -> Result<FieldModel> {
    serde_json::from_str(&read_text(path)?)
        .map_err(|e| usage(format!("{}: invalid field model: {e}", path.display())))
}

fn noise(spec: NoiseSpec) -> Noise {
    match spec {
        NoiseSpec::Gaussian(s) => Noise::Gaussian(s),
        NoiseSpec::Bounded(s) => Noise::Bounded(s),
    }
}

fn mean(spec: &MeanSpec, p: usize) -> Result<SpdMatrix> {
    match spec {
        MeanSpec::Spiked { top, bulk } => Ok(spiked_mean(p, *top, *bulk)?),
        MeanSpec::File(path) => read_matrix(path),
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Bound(a) => bound(a),
        Command::Quadform(QuadformCmd::Z(a)) => quadform_z(a),
        Command::Chaining(ChainingCmd::Q(a)) => chaining_q(a),
        Command::Eigen(EigenCmd::Compare(a)) => eigen_compare(a),
        Command::Mc(McCmd::Quadform(a)) => mc_quadform(a),
        Command::Mc(McCmd::Field(a)) => mc_field(a),
        Command::Mc(McCmd::Eigen(a)) => mc_eigen(a),
    }
}

fn bound(a: BoundArgs) -> Result<()> {
    let model = read_model(&a.model)?;
    let reports =
        a.x.0
            .iter()
            .map(|&x| sup_bound(&model, x))
            .collect::<concfield_core::Result<Vec<_>>>()?;
    let format = if a.csv {
        Format::Csv
    } else {
        a.format.unwrap_or(Format::Json)
    };
    let text = match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&reports)?;
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut t = Table::new(&[
                "x",
                "r0",
                "tau",
                "quantile_term",
                "error_term",
                "total_offset",
                "implied_c",
                "prob_multiplier",
            ]);
            for r in &reports {
                t.push(
                    [
                        r.x,
                        r.r0_used,
                        r.tau,
                        r.quantile_term,
                        r.error_term,
                        r.total_offset,
                        r.implied_c,
                        r.prob_multiplier,
                    ]
                    .into_iter()
                    .map(Cell::F)
                    .collect(),
                );
            }
            t.to_csv()
        }
    };
    emit(a.output.out.as_deref(), &text)
}

/// `g = 10·√p` in normalized units.
fn auto_g(b: &SpdMatrix) -> Result<f64> {
    Ok(10.0 * normalize(b, 1.0)?.p_app.sqrt())
}

fn quadform_z(a: QuadformZArgs) -> Result<()> {
    let b = read_matrix(&a.b)?;
    let g = match a.g {
        GSpec::Auto => auto_g(&b)?,
        GSpec::Value(g) => g,
    };
    let qf = QuadFormBound::with_precondition(&b, g)?;
    let trace = b.trace();
    let mut t = Table::new(&["x", "z_dev", "z_total", "branch", "x_c"]);
    for &x in &a.x.0 {
        if !(x > 0.0) {
            return Err(usage(format!("x must be positive, got {x}")));
        }
        let q = if a.monotone_envelope {
            qf.quantile_envelope(x)
        } else {
            qf.quantile(x)
        };
        t.push(vec![
            Cell::F(x),
            Cell::F(q.z_dev),
            Cell::F(trace + q.z_dev),
            Cell::S(q.branch.as_str().into()),
            Cell::F(q.x_c),
        ]);
    }
    emit(a.output.out.as_deref(), &t.render(a.format))
}

#[derive(Serialize)]
struct ChainingOut {
    #[serde(rename = "M_k")]
    m_k: Vec<f64>,
    #[serde(rename = "Q")]
    q: f64,
    c1: f64,
    k_trunc: usize,
    method: &'static str,
}

fn chaining_q(a: ChainingQArgs) -> Result<()> {
    let spec = if a.numeric {
        let ball = BallSpec::new(a.p, a.r0, Measure::NumericGrid { cells: a.grid })?;
        let ratios = covering_ratios(&ball, a.k_max)?;
        chaining_entropy(&ratios, TailModel::AnalyticBall { p: a.p })?
    } else {
        BallSpec::new(a.p, a.r0, Measure::LebesgueEuclidean)?;
        analytic_ball_entropy(a.p)?
    };
    let out = ChainingOut {
        c1: spec.q / a.p as f64,
        q: spec.q,
        k_trunc: spec.k_trunc,
        m_k: spec.m_k,
        method: if a.numeric {
            "numeric_grid"
        } else {
            "analytic"
        },
    };
    let mut s = serde_json::to_string_pretty(&out)?;
    s.push('\n');
    emit(a.output.out.as_deref(), &s)
}

fn eigen_compare(a: CompareArgs) -> Result<()> {
    let spec = a.mean.clone();
    let rows = compare_bounds(
        |p| mean(&spec, p).map_err(|e| concfield_core::Error::InvalidArgument(e.to_string())),
        noise(a.noise),
        a.seed,
        &a.x_grid.0,
        &a.n_grid.0,
        &a.p_grid.0,
    )?;
    let mut t = Table::new(&[
        "n",
        "p",
        "x",
        "paper_thresh",
        "bernstein_thresh_mapped",
        "ratio",
        "winner",
    ]);
    for r in &rows {
        t.push(vec![
            Cell::U(r.n as u64),
            Cell::U(r.p as u64),
            Cell::F(r.x),
            Cell::F(r.paper_thresh),
            Cell::F(r.bernstein_thresh_mapped),
            Cell::F(r.ratio),
            Cell::S(r.winner.as_str().into()),
        ]);
    }
    if let Some(path) = &a.frontier {
        let mut f = Table::new(&["n", "p", "x_min"]);
        for (n, p, x) in frontier(&rows) {
            f.push(vec![
                Cell::U(n as u64),
                Cell::U(p as u64),
                x.map_or(Cell::S("none".into()), Cell::F),
            ]);
        }
        emit(Some(path), &f.to_csv())?;
    }
    emit(a.output.out.as_deref(), &t.to_csv())
}

fn coverage_table(r: &CoverageReport) -> Table {
    let mut t = Table::new(&["x", "empirical", "bound", "wilson_hw", "pass"]);
    for i in 0..r.x_grid.len() {
        t.push(vec![
            Cell::F(r.x_grid[i]),
            Cell::F(r.empirical_exceed[i]),
            Cell::F(r.theoretical_bound[i]),
            Cell::F(r.wilson_halfwidth[i]),
            Cell::B(r.pass[i]),
        ]);
    }
    t
}

fn emit_coverage(c: &McCommon, r: &CoverageReport) -> Result<()> {
    emit(c.output.out.as_deref(), &coverage_table(r).render(c.format))
}

fn mc_quadform(a: McQuadformArgs) -> Result<()> {
    let b = match &a.b {
        Some(path) => read_matrix(path)?,
        None => SpdMatrix::identity(a.p),
    };
    let sigma = match &a.sigma {
        Some(path) => read_matrix(path)?,
        None => SpdMatrix::identity(b.dim()),
    };
    let g = match a.g {
        GSpec::Auto => None,
        GSpec::Value(g) => Some(g),
    };
    let c = &a.common;
    let cov = sample_quadform(&b, &sigma, g, &c.x.0, c.trials, c.seed)?;
    emit_coverage(c, &cov.report)
}

fn ensemble(a: &EnsembleArgs, seed: u64) -> Result<EnsembleSpec> {
    Ok(EnsembleSpec::new(
        a.n,
        mean(&a.mean, a.p)?,
        noise(a.noise),
        seed,
    )?)
}

fn mc_field(a: McFieldArgs) -> Result<()> {
    let c = &a.common;
    let e = ensemble(&a.ensemble, c.seed)?;
    let x_max = c.x.0.iter().copied().fold(f64::MIN, f64::max);
    let em = field_model_from_ensemble(&e, &Penalty::quadratic(e.n), None, x_max)?;
    let cov = verify_field_bound(&em, &c.x.0, c.trials, c.seed)?;
    emit_coverage(c, &cov.report)
}

fn mc_eigen(a: McEigenArgs) -> Result<()> {
    let c = &a.common;
    let e = ensemble(&a.ensemble, c.seed)?;
    let cov = verify_eigen_bounds(&e, &Penalty::quadratic(e.n), &c.x.0, c.trials, c.seed)?;
    let (report, err) = match a.bound {
        EigenSide::Paper => (cov.paper, cov.paper_error),
        EigenSide::Bernstein => (cov.bernstein, cov.bernstein_error),
    };
    match report {
        Some(r) => emit_coverage(c, &r),
        None => Err(anyhow!(err.unwrap_or_else(|| "bound unavailable".into()))),
    }
}
