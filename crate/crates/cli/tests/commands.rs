use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::Command;

use lebesgue_circle::{canonical_branch, extend_by_transport, BranchFunction, CanonicalParams, CircleMap, DEFAULT_MARGIN};
use lebesgue_circle_cli::corpus::{self, Family};
use lebesgue_circle_cli::io;
use lebesgue_circle_cli::*;
use tempfile::TempDir;

fn write_branch_json(dir: &Path, name: &str, knots: &[[f64; 3]]) -> std::path::PathBuf {
    let path = dir.join(name);
    let body = serde_json::json!({ "knots": knots, "margin": DEFAULT_MARGIN });
    fs::write(&path, body.to_string()).unwrap();
    path
}

fn read_csv(path: &Path) -> Vec<Vec<f64>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|rec| rec.unwrap().iter().map(|f| f.parse().unwrap()).collect()).collect()
}

fn pl(a: f64) -> CircleMap {
    let (s1, s2) = (1.0 / a, 1.0 / (1.0 - a));
    CircleMap::new(
        BranchFunction::new([(0.0, 0.0, s1), (a, 1.0, s1)], DEFAULT_MARGIN).unwrap(),
        BranchFunction::new([(a, 0.0, s2), (1.0, 1.0, s2)], DEFAULT_MARGIN).unwrap(),
        0.0,
    )
    .unwrap()
}

/// `x ↦ 2x + ε sin(2πx)` sampled from the analytic lift.
fn sine_map(eps: f64) -> CircleMap {
    corpus::sampled_map(|x| (2.0 * x + eps * (2.0 * PI * x).sin(), 2.0 + 2.0 * PI * eps * (2.0 * PI * x).cos()), 0.5, 1024)
        .unwrap()
}

/// Preimage-length defect of the analytic sine map, by bisection on the lift.
fn sine_map_residual(eps: f64, n: usize) -> f64 {
    let lift = |x: f64| 2.0 * x + eps * (2.0 * PI * x).sin();
    let solve = |target: f64| {
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if lift(mid) < target {
                lo = mid
            } else {
                hi = mid
            }
        }
        0.5 * (lo + hi)
    };
    (0..=n)
        .map(|j| {
            let y = j as f64 / n as f64;
            (solve(y) + solve(1.0 + y) - 0.5 - y).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn extend_linear_branch_gives_doubling() {
    let dir = TempDir::new().unwrap();
    let input = write_branch_json(dir.path(), "b.json", &[[0.0, 0.0, 2.0], [0.5, 1.0, 2.0]]);
    let out = dir.path().join("m.json");
    let o = run_extend(&input, ExtendOptions { method: ExtendMethod::Both, ..Default::default() }, &out);
    assert_eq!(o.exit_code, 0, "{}", o.summary);
    let gap: f64 = o.summary.split("cross_check=").nth(1).unwrap().parse().unwrap();
    assert!(gap < 1e-13, "{gap}");
    let m = io::read_map(&out).unwrap();
    assert!(lebesgue_circle::c1_distance(&m, &CircleMap::doubling()) < 1e-12);
}

#[test]
fn extend_sine_branch_cross_checks() {
    let dir = TempDir::new().unwrap();
    let b = corpus::sine_branch(0.5, 0.1, 1).unwrap();
    let input = dir.path().join("b.json");
    io::write_branch(&input, &b).unwrap();
    let out = dir.path().join("m.json");
    let o = run_extend(&input, ExtendOptions { method: ExtendMethod::Both, step: 1e-4, tol: 1e-6 }, &out);
    assert_eq!(o.exit_code, 0, "{}", o.summary);
    let gap: f64 = o.summary.split("cross_check=").nth(1).unwrap().parse().unwrap();
    assert!(gap <= 1e-6);
    assert_eq!(o.report_path.as_deref(), Some(out.as_path()));
}

#[test]
fn extend_rejects_weak_slopes() {
    let dir = TempDir::new().unwrap();
    let input = write_branch_json(dir.path(), "b.json", &[[0.0, 0.0, 2.0], [0.3, 0.6, 1.0005], [0.5, 1.0, 2.0]]);
    let o = run_extend(&input, ExtendOptions::default(), &dir.path().join("m.json"));
    assert_eq!(o.exit_code, 2);
    assert!(o.summary.contains("not above 1 + margin"), "{}", o.summary);
    assert_eq!(run_extend(&dir.path().join("missing.json"), ExtendOptions::default(), &dir.path().join("x")).exit_code, 2);
    fs::write(dir.path().join("bad.json"), "{\"knots\": [1, 2]}").unwrap();
    assert_eq!(run_extend(&dir.path().join("bad.json"), ExtendOptions::default(), &dir.path().join("x")).exit_code, 2);
}

#[test]
fn ode_closure_failure_is_a_validation_failure() {
    let dir = TempDir::new().unwrap();
    let options = ExtendOptions { method: ExtendMethod::Ode, step: 0.2, tol: 1e-12 };
    let wavy = corpus::sine_branch(0.5, 0.1, 1).unwrap();
    io::write_branch(&dir.path().join("w.json"), &wavy).unwrap();
    let o = run_extend(&dir.path().join("w.json"), options, &dir.path().join("m.json"));
    assert_eq!(o.exit_code, 1, "{}", o.summary);
}

#[test]
fn verify_examples() {
    let dir = TempDir::new().unwrap();
    let doubling = dir.path().join("d.json");
    io::write_map(&doubling, &CircleMap::doubling()).unwrap();
    let o = run_verify(&doubling, 4096, 1e-6);
    assert_eq!(o.exit_code, 0, "{}", o.summary);
    assert!(o.summary.contains("preservation_residual=0 gluing_residual=0"), "{}", o.summary);

    let eps = 0.15;
    let oracle = sine_map_residual(eps, 4096);
    assert!(oracle > 1e-2);
    let perturbed = dir.path().join("p.json");
    io::write_map(&perturbed, &sine_map(eps)).unwrap();
    let o = run_verify(&perturbed, 4096, 1e-6);
    assert_eq!(o.exit_code, 1);
    let reported: f64 =
        o.summary.split("preservation_residual=").nth(1).unwrap().split(' ').next().unwrap().parse().unwrap();
    assert!((reported - oracle).abs() < 1e-8, "{reported} vs {oracle}");
    assert!(o.summary.contains("preservation failed, gluing passed"));

    let plm = dir.path().join("pl.json");
    io::write_map(&plm, &pl(0.3)).unwrap();
    let o = run_verify(&plm, 4096, 1e-6);
    assert_eq!(o.exit_code, 1);
    assert!(o.summary.contains("preservation passed, gluing failed"), "{}", o.summary);
    let glue: f64 = o.summary.split("gluing_residual=").nth(1).unwrap().split(' ').next().unwrap().parse().unwrap();
    assert!((glue - (10.0 / 3.0 - 10.0 / 7.0)).abs() < 1e-11);

    fs::write(dir.path().join("junk.json"), "not json").unwrap();
    assert_eq!(run_verify(&dir.path().join("junk.json"), 4096, 1e-6).exit_code, 2);
}

#[test]
fn extend_then_verify_round_trip() {
    let dir = TempDir::new().unwrap();
    // only branches satisfying the gluing condition extend to C¹ maps
    let glued = corpus::first_branches()
        .into_iter()
        .filter(|c| c.family == Family::Canonical || (c.family == Family::ConstantSlope && c.branch.first().dy == 2.0));
    let mut count = 0;
    for (i, c) in glued.enumerate() {
        let input = dir.path().join(format!("b{i}.json"));
        let out = dir.path().join(format!("m{i}.json"));
        io::write_branch(&input, &c.branch).unwrap();
        assert_eq!(run_extend(&input, ExtendOptions::default(), &out).exit_code, 0);
        let o = run_verify(&out, 4096, 1e-6);
        assert_eq!(o.exit_code, 0, "{}: {}", c.name, o.summary);
        count += 1;
    }
    assert!(count >= 8);
}

#[test]
fn density_examples() {
    let dir = TempDir::new().unwrap();
    let doubling = dir.path().join("d.json");
    io::write_map(&doubling, &CircleMap::doubling()).unwrap();
    let out = dir.path().join("dd");
    let o = run_density(&doubling, DensityOptions::default(), &out);
    assert_eq!(o.exit_code, 0, "{}", o.summary);
    assert!(o.summary.starts_with("iterations=0 residual=0"), "{}", o.summary);
    let history = read_csv(&out.join("history.csv"));
    assert_eq!(history, vec![vec![0.0, 0.0]]);

    let conj = dir.path().join("c.json");
    io::write_map(&conj, &corpus::conjugated_doubling(512)).unwrap();
    let out = dir.path().join("cd");
    let o = run_density(&conj, DensityOptions { iters: 60, grid: 2048, tol: 1e-9 }, &out);
    assert_eq!(o.exit_code, 0, "{}", o.summary);
    let rows = read_csv(&out.join("density.csv"));
    assert_eq!(rows.len(), 2049);
    let n = rows.len() - 1;
    let l1: f64 = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            w * (r[1] - corpus::conjugated_density(r[0])).abs()
        })
        .sum::<f64>()
        / n as f64;
    assert!(l1 <= 1e-3, "{l1}");

    let out = dir.path().join("c0");
    let o = run_density(&conj, DensityOptions { iters: 0, grid: 256, tol: 1e-6 }, &out);
    assert_eq!(o.exit_code, 1);
    assert!(read_csv(&out.join("density.csv")).iter().all(|r| r[1] == 1.0));
}

#[test]
fn path_and_loop_examples() {
    let dir = TempDir::new().unwrap();
    let doubling = dir.path().join("d.json");
    io::write_map(&doubling, &CircleMap::doubling()).unwrap();
    let out = dir.path().join("pd");
    let o = run_path(&doubling, PathCommandOptions::default(), &out);
    assert_eq!(o.exit_code, 0, "{}", o.summary);
    assert!(o.summary.starts_with("samples=1 "));
    assert_eq!(read_csv(&out.join("index.csv")).len(), 1);

    let start = extend_by_transport(&canonical_branch(CanonicalParams::new(0.42, 2.7).unwrap()).unwrap())
        .unwrap()
        .map
        .with_rotation(0.3);
    let input = dir.path().join("g.json");
    io::write_map(&input, &start).unwrap();
    let out = dir.path().join("pg");
    let o = run_path(&input, PathCommandOptions { steps: 16, ..Default::default() }, &out);
    assert_eq!(o.exit_code, 0, "{}", o.summary);
    let index = read_csv(&out.join("index.csv"));
    assert_eq!(index.len(), 17);
    assert!(index.iter().all(|r| r[2] <= 1e-5));
    assert_eq!(index[16][1], 1.0);
    let first = io::read_map(&out.join(io::sample_file_name(0))).unwrap();
    assert_eq!(first, start);

    let invalid = dir.path().join("pl.json");
    io::write_map(&invalid, &pl(0.3)).unwrap();
    assert_eq!(run_path(&invalid, PathCommandOptions::default(), &dir.path().join("pi")).exit_code, 2);

    let out = dir.path().join("loop");
    let o = run_loop(64, &out);
    assert_eq!(o.exit_code, 0, "{}", o.summary);
    assert!(o.summary.ends_with("winding=1"));
    assert_eq!(read_csv(&out.join("index.csv")).len(), 65);
    assert_eq!(run_loop(4, &dir.path().join("l4")).exit_code, 2);
}

#[test]
fn export_examples() {
    let dir = TempDir::new().unwrap();
    let doubling = dir.path().join("d.json");
    io::write_map(&doubling, &CircleMap::doubling()).unwrap();
    let out = dir.path().join("d.csv");
    assert_eq!(run_export(&doubling, ExportFormat::Csv, 4, &out).exit_code, 0);
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text, "x,f(x),f'(x)\n0,0,2\n0.25,0.5,2\n0.5,1,2\n0.5,0,2\n0.75,0.5,2\n1,1,2\n");

    let m = extend_by_transport(&corpus::sine_branch(0.5, 0.1, 1).unwrap()).unwrap().map;
    let input = dir.path().join("s.json");
    io::write_map(&input, &m).unwrap();
    let out = dir.path().join("s.csv");
    assert_eq!(run_export(&input, ExportFormat::Csv, 1024, &out).exit_code, 0);
    let rows = read_csv(&out);
    assert_eq!(rows.len(), 1026);
    for r in &rows {
        let b = if r[1] == 1.0 && r[0] == 0.5 || r[0] < 0.5 { m.branch1() } else { m.branch2() };
        let (y, d) = b.eval_both(r[0]).unwrap();
        assert!((y - r[1]).abs() <= 1e-11 * y.abs().max(1e-1) && (d - r[2]).abs() <= 1e-11 * d.abs());
    }
    assert_eq!(run_export(&dir.path().join("nope.json"), ExportFormat::Csv, 8, &out).exit_code, 2);
}

#[test]
fn binary_runs_subcommands() {
    let dir = TempDir::new().unwrap();
    let exe = env!("CARGO_BIN_EXE_circlemap");
    let out = Command::new(exe).args(["loop", "--steps", "32", "--out"]).arg(dir.path().join("l")).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("winding=1"));

    let input = write_branch_json(dir.path(), "b.json", &[[0.0, 0.0, 2.0], [0.5, 1.0, 2.0]]);
    let map = dir.path().join("m.json");
    let out = Command::new(exe)
        .args(["extend", "--method", "both", "--input"])
        .arg(&input)
        .arg("--out")
        .arg(&map)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let out = Command::new(exe).args(["verify", "--input"]).arg(&map).output().unwrap();
    assert_eq!(out.status.code(), Some(0));

    let out = Command::new(exe).args(["verify", "--input"]).arg(dir.path().join("missing.json")).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = Command::new(exe).args(["verify", "--grid", "many"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
