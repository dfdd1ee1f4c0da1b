//! Acceptance suite. Each test prints one `PASS` or `FAIL` line and then
//! asserts, so `cargo test --test acceptance -- --nocapture` shows every
//! criterion even when one fails.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use concfield_core::bound::{quad_sup_closed_form, quad_sup_grid};
use concfield_core::chaining::{
    analytic_ball_entropy, analytic_q, covering_ratios, entropy_weight, weight_tail, BallSpec,
    Measure,
};
use concfield_core::mc::chi2_oracle;
use concfield_core::quadform::{solve_wc, wc_lhs, QuadFormBound};
use concfield_core::rng::{tags, PhiloxRng};
use concfield_core::SpdMatrix;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

const BIN: &str = env!("CARGO_BIN_EXE_concfield");

fn verdict(id: u32, name: &str, ok: bool, detail: &str) {
    let tag = if ok { "PASS" } else { "FAIL" };
    println!("{tag} criterion {id}: {name} ({detail})");
    assert!(ok, "criterion {id} failed: {detail}");
}

fn run(args: &[&str], threads: Option<&str>) -> (bool, String) {
    let mut cmd = Command::new(BIN);
    cmd.args(args);
    if let Some(t) = threads {
        cmd.env("CONCFIELD_THREADS", t);
    }
    let out = cmd.output().expect("binary runs");
    let text = String::from_utf8(out.stdout).expect("utf-8 output");
    if !out.status.success() {
        eprintln!("{}", String::from_utf8_lossy(&out.stderr));
    }
    (out.status.success(), text)
}

/// Rows of a CSV file as `header -> value` lookups.
fn parse_csv(text: &str) -> Vec<Vec<(String, String)>> {
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .unwrap_or_default()
        .split(',')
        .map(String::from)
        .collect();
    lines
        .map(|l| {
            header
                .iter()
                .cloned()
                .zip(l.split(',').map(String::from))
                .collect()
        })
        .collect()
}

fn field<'a>(row: &'a [(String, String)], key: &str) -> &'a str {
    &row.iter()
        .find(|(k, _)| k == key)
        .expect("column present")
        .1
}

fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

#[test]
fn criterion_1_wc_solver() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for &g in &logspace(0.1, 1e3, 20) {
        for &p in &logspace(1.0, 1e3, 10) {
            let w = solve_wc(g, p).expect("solver converges");
            worst = worst.max((wc_lhs(w) - g / p.sqrt()).abs());
        }
    }
    let mut exact = 0.0f64;
    for &p in &logspace(1.0, 1e3, 10) {
        exact = exact.max((solve_wc((2.0 * p).sqrt(), p).unwrap() - 1.0).abs());
    }
    let elapsed = start.elapsed();
    verdict(
        1,
        "w_c solver residual",
        worst < 1e-10 && exact <= 1e-12 && elapsed < Duration::from_secs(1),
        &format!("max residual {worst:.2e}, |w_c - 1| {exact:.2e}, {elapsed:?}"),
    );
}

#[test]
fn criterion_2_quadform_coverage() {
    let start = Instant::now();
    let (ok, out) = run(
        &[
            "mc",
            "quadform",
            "--p",
            "5",
            "--trials",
            "100000",
            "--seed",
            "20",
            "--x",
            "0.5,1,2,3,5",
        ],
        None,
    );
    let elapsed = start.elapsed();
    let rows = parse_csv(&out);
    let g = 10.0 * 5f64.sqrt();
    let qf = QuadFormBound::with_precondition(&SpdMatrix::identity(5), g).unwrap();
    let bounds_match = rows.iter().all(|r| {
        let x: f64 = field(r, "x").parse().unwrap();
        let expected = (2.0 * (-x).exp() + 8.4 * (-qf.crit.x_c).exp()).min(1.0);
        (field(r, "bound").parse::<f64>().unwrap() - expected).abs() < 1e-12
    });
    let all_pass = rows.len() == 5 && rows.iter().all(|r| field(r, "pass") == "true");
    let worst = rows
        .iter()
        .map(|r| field(r, "empirical").parse::<f64>().unwrap())
        .fold(0.0, f64::max);
    verdict(
        2,
        "quadratic-form coverage, B = Σ = I5",
        ok && all_pass && bounds_match && elapsed < Duration::from_secs(10),
        &format!("max empirical {worst:.2e}, {elapsed:?}"),
    );
}

#[test]
fn criterion_3_oracle_domination() {
    let mut checked = 0;
    let mut worst = f64::INFINITY;
    for p in [1usize, 2, 5, 20] {
        let g = 10.0 * (p as f64).sqrt();
        let qf = QuadFormBound::with_precondition(&SpdMatrix::identity(p), g).unwrap();
        let hi = qf.crit.x_c.min(20.0);
        for i in 0..50 {
            let x = 0.5 + (hi - 0.5) * i as f64 / 49.0;
            let prob = 2.0 * (-x).exp();
            if prob >= 1.0 {
                continue;
            }
            let total = p as f64 + qf.quantile(x).z_dev;
            let oracle = chi2_oracle(p, 1.0 - prob).unwrap();
            worst = worst.min(total - oracle);
            checked += 1;
        }
    }
    verdict(
        3,
        "chi-square oracle domination",
        worst > -1e-9 && checked > 0,
        &format!("{checked} points, min margin {worst:.3e}"),
    );
}

#[test]
fn criterion_4_chaining() {
    let start = Instant::now();
    let k = 40;
    let sum: f64 = (1..=k).map(entropy_weight).sum::<f64>() + weight_tail(k);
    let q2 = analytic_ball_entropy(2).unwrap().q;
    let exact = 23.0 / 3.0 * std::f64::consts::LN_2;
    let mut dominated = true;
    let mut detail = String::new();
    for p in 1..=3usize {
        let ball = BallSpec::new(p, 1.0, Measure::NumericGrid { cells: 8 }).unwrap();
        let numeric = covering_ratios(&ball, 6).unwrap();
        for (i, m) in numeric.iter().enumerate() {
            let analytic = 2f64.powi(((i + 2) * p) as i32);
            if *m > analytic {
                dominated = false;
                detail = format!("p={p} k={} numeric {m} > {analytic}", i + 1);
            }
        }
    }
    // the CLI exposes the same numbers
    let (ok, out) = run(&["chaining", "q", "--p", "2", "--r0", "1"], None);
    let json: serde_json::Value = serde_json::from_str(&out).unwrap();
    let cli_q = json["Q"].as_f64().unwrap();
    let elapsed = start.elapsed();
    verdict(
        4,
        "chaining weights and entropy",
        (sum - 1.0).abs() <= 1e-12
            && (q2 - exact).abs() <= 1e-12
            && (analytic_q(2) - exact).abs() <= 1e-12
            && ok
            && (cli_q - exact).abs() <= 1e-12
            && dominated
            && elapsed < Duration::from_secs(30),
        &format!(
            "Σc_k - 1 = {:.1e}, Q(2) error {:.1e}, {elapsed:?} {detail}",
            sum - 1.0,
            q2 - exact
        ),
    );
}

#[test]
fn criterion_5_quad_sup_closed_form() {
    let mut worst = 0.0f64;
    for t in 0..50u64 {
        let mut rng = PhiloxRng::stream(5, t, tags::TEST);
        let p = 1 + (t % 3) as usize;
        let a = DMatrix::from_fn(p, p, |_, _| rng.random::<f64>() - 0.5);
        let ddelta = SpdMatrix::new(&a * a.transpose() + DMatrix::identity(p, p) * 0.2).unwrap();
        let grad = DVector::from_fn(p, |_, _| 4.0 * rng.random::<f64>() - 2.0);
        let exact = quad_sup_closed_form(&grad, &ddelta).unwrap();
        let radius = 2.0 * grad.norm() / ddelta.min_eigenvalue();
        let grid = quad_sup_grid(&grad, &ddelta, radius, 10, 25);
        worst = worst.max((grid - exact).abs() / exact.abs().max(f64::MIN_POSITIVE));
    }
    verdict(
        5,
        "quadratic sup closed form vs grid",
        worst < 1e-6,
        &format!("max relative error {worst:.2e} over 50 instances"),
    );
}

#[test]
fn criterion_6_field_bound() {
    let start = Instant::now();
    let (ok, out) = run(
        &[
            "mc",
            "field",
            "--n",
            "50",
            "--p",
            "4",
            "--mean",
            "spiked:20:5",
            "--noise",
            "gaussian:0.2",
            "--trials",
            "2000",
            "--seed",
            "6",
            "--x",
            "1,2",
        ],
        None,
    );
    let elapsed = start.elapsed();
    let rows = parse_csv(&out);
    let consistent = rows.iter().all(|r| {
        let x: f64 = field(r, "x").parse().unwrap();
        let b: f64 = field(r, "bound").parse().unwrap();
        let e: f64 = field(r, "empirical").parse().unwrap();
        let hw: f64 = field(r, "wilson_hw").parse().unwrap();
        (b - (5.0 * (-x).exp()).min(1.0)).abs() < 1e-12 && e <= b + 3.0 * hw
    });
    verdict(
        6,
        "end-to-end field bound, n = 50, p = 4",
        ok && rows.len() == 2 && consistent && elapsed < Duration::from_secs(60),
        &format!("{} rows, {elapsed:?}", rows.len()),
    );
}

#[test]
fn criterion_7_eigen_comparison() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("compare.csv");
    let front = dir.path().join("frontier.csv");
    let (ok, _) = run(
        &[
            "eigen",
            "compare",
            "--mean",
            "spiked:20:5",
            "--n-grid",
            "100,400,1600",
            "--p-grid",
            "5,20",
            "--x-grid",
            "1..8:1",
            "--noise",
            "bounded:0.5",
            "--seed",
            "7",
            "--out",
            table.to_str().unwrap(),
            "--frontier",
            front.to_str().unwrap(),
        ],
        None,
    );
    let elapsed = start.elapsed();
    let rows = parse_csv(&fs::read_to_string(&table).unwrap_or_default());
    let wins = rows
        .iter()
        .filter(|r| {
            let n: f64 = field(r, "n").parse().unwrap();
            let p: f64 = field(r, "p").parse().unwrap();
            let paper: f64 = field(r, "paper_thresh").parse().unwrap();
            let bern: f64 = field(r, "bernstein_thresh_mapped").parse().unwrap();
            p / n < 1.0 && paper < bern && field(r, "winner") == "paper"
        })
        .count();
    let frontier = parse_csv(&fs::read_to_string(&front).unwrap_or_default());
    verdict(
        7,
        "eigenvalue comparison sweep",
        ok && rows.len() == 48
            && wins > 0
            && frontier.len() == 6
            && elapsed < Duration::from_secs(120),
        &format!(
            "{wins} of {} cells favour the field bound, {elapsed:?}",
            rows.len()
        ),
    );
}

fn run_to_file(args: &[&str], path: &Path, threads: &str) -> Vec<u8> {
    let mut full: Vec<&str> = args.to_vec();
    let p = path.to_str().unwrap();
    full.extend(["--out", p]);
    let (ok, _) = run(&full, Some(threads));
    assert!(ok, "command failed: {args:?}");
    fs::read(path).unwrap()
}

#[test]
fn criterion_8_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let commands: [&[&str]; 4] = [
        &[
            "mc", "quadform", "--trials", "20000", "--seed", "8", "--x", "1,2",
        ],
        &[
            "mc", "field", "--trials", "500", "--seed", "8", "--x", "1,2",
        ],
        &[
            "mc",
            "eigen",
            "--trials",
            "500",
            "--seed",
            "8",
            "--x",
            "1,2",
            "--noise",
            "bounded:0.5",
            "--bound",
            "paper",
        ],
        &[
            "mc",
            "eigen",
            "--trials",
            "500",
            "--seed",
            "8",
            "--x",
            "1,2",
            "--noise",
            "bounded:0.5",
            "--bound",
            "bernstein",
        ],
    ];
    let mut identical = true;
    for (i, args) in commands.iter().enumerate() {
        let a = run_to_file(args, &dir.path().join(format!("a{i}.csv")), "0");
        let b = run_to_file(args, &dir.path().join(format!("b{i}.csv")), "1");
        let c = run_to_file(args, &dir.path().join(format!("c{i}.csv")), "3");
        identical &= !a.is_empty() && a == b && b == c;
    }
    verdict(
        8,
        "byte-identical mc reruns",
        identical,
        "quadform, field, eigen paper, eigen bernstein across 1, 3 and all threads",
    );
}
