//! End-to-end CLI runs driven in-process: artifacts land on disk, CSV
//! values agree with the reference oracles, and error paths map to the
//! documented exit-code classes.

use robin_lab::cli::{execute, run, RunConfig};
use robin_lab::oracles::{disk_robin, rectangle_robin};
use std::path::PathBuf;

fn cfg(cmd: &str, pairs: &[(&str, &str)], tag: &str) -> (RunConfig, PathBuf) {
    let out = std::env::temp_dir().join(format!("robin-lab-it-{tag}-{}", std::process::id()));
    let mut c = RunConfig::from_args(&[cmd.to_string()]).expect("command");
    for (k, v) in pairs {
        c.set(k, v);
    }
    c.set("out", out.to_str().unwrap());
    (c, out)
}

fn read_lambdas(out: &PathBuf) -> Vec<f64> {
    let text = std::fs::read_to_string(out.join("eigenvalues.csv")).expect("csv");
    text.lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn solve_square_neumann_matches_tensor_oracle() {
    let (c, out) = cfg(
        "solve",
        &[("domain", "square"), ("beta", "0"), ("j", "4"), ("h", "0.0625"), ("order", "2")],
        "sq0",
    );
    let outcome = execute(&c).expect("solve");
    assert!(outcome.pass);
    let lam = read_lambdas(&out);
    let oracle = rectangle_robin(0.0, 1.0, 1.0, 4).unwrap().expanded();
    assert!(lam[0].abs() < 1e-10);
    for j in 1..4 {
        let rel = (lam[j] - oracle[j]).abs() / oracle[j];
        assert!(rel < 1e-3, "lambda_{}: {} vs {}", j + 1, lam[j], oracle[j]);
    }
}

#[test]
fn solve_disk_negative_beta_has_negative_ground_state() {
    let (c, out) = cfg(
        "solve",
        &[("domain", "disk"), ("beta", "-1"), ("j", "3"), ("h", "0.125"), ("order", "2")],
        "diskneg",
    );
    let outcome = execute(&c).expect("solve");
    assert!(outcome.pass);
    let lam = read_lambdas(&out);
    assert!(lam[0] < 0.0, "lambda_1 = {}", lam[0]);
    let oracle = disk_robin(-1.0, 1.0, 3, 4).unwrap().expanded();
    assert!((lam[0] - oracle[0]).abs() / oracle[0].abs() < 2e-2);
}

#[test]
fn solve_matrix_dumps_are_parseable() {
    let (c, out) = cfg(
        "solve",
        &[
            ("domain", "square"),
            ("beta", "0"),
            ("j", "1"),
            ("h", "0.5"),
            ("order", "1"),
            ("dump_matrices", "1"),
        ],
        "dumps",
    );
    execute(&c).expect("solve");
    for name in ["stiffness.txt", "mass.txt", "boundary_mass.txt"] {
        let text = std::fs::read_to_string(out.join(name)).expect(name);
        for line in text.lines() {
            let mut it = line.split_whitespace();
            let _i: usize = it.next().unwrap().parse().unwrap();
            let _j: usize = it.next().unwrap().parse().unwrap();
            let v: f64 = it.next().unwrap().parse().unwrap();
            assert!(v.is_finite());
        }
    }
}

#[test]
fn verify_square_negative_beta_bundle_passes() {
    let (c, out) = cfg(
        "verify",
        &[
            ("domain", "square"),
            ("beta", "-1"),
            ("eps", "0.5"),
            ("j", "3"),
            ("h", "0.0625"),
            ("order", "2"),
        ],
        "verify",
    );
    let outcome = execute(&c).expect("verify");
    assert!(outcome.pass, "{:?}", outcome.checks);
    let reports = std::fs::read_to_string(out.join("reports.json")).expect("reports");
    for name in ["trace_constant", "coercivity", "rellich_pohozaev", "hessian_bound"] {
        assert!(reports.contains(name), "{name} missing from reports.json");
    }
    // reilly is skipped on polygons and recorded as such
    assert!(outcome.skipped.iter().any(|s| s.contains("reilly")));
}

#[test]
fn stability_cli_reports_exact_rates() {
    let (c, out) = cfg(
        "stability",
        &[
            ("domain", "square"),
            ("beta", "0"),
            ("j", "2"),
            ("h", "0.125"),
            ("order", "1"),
            ("r_schedule", "0.25,0.125"),
        ],
        "stab",
    );
    let outcome = execute(&c).expect("stability");
    assert!(outcome.pass, "{:?}", outcome.checks);
    let csv = std::fs::read_to_string(out.join("sweep.csv")).expect("sweep");
    assert!(csv.starts_with("k,r,dH,D,rho,area_strip,lambda_1,lambda_2\n"));
    assert_eq!(csv.lines().count(), 3);
    assert!(out.join("distances.json").exists());
}

#[test]
fn exit_codes_map_error_classes() {
    // usage error: unknown command
    assert_eq!(run(&["frobnicate".to_string()]), 2);
    // usage error: bad domain file
    let (_, out) = cfg("solve", &[], "err2");
    let args: Vec<String> = [
        "solve",
        "--domain",
        "polygon:/nope/missing.txt",
        "--out",
        out.to_str().unwrap(),
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    assert_eq!(run(&args), 2);
    // too-coarse mesh is a usage error as well
    let (c3, _) = cfg("mesh-info", &[("domain", "square"), ("h", "0.9")], "err3");
    match execute(&c3) {
        Err(robin_lab::Error::TooCoarse { .. }) => {}
        other => panic!("expected TooCoarse, got {other:?}"),
    }
}

#[test]
fn convergence_cli_reports_rates() {
    let (c, out) = cfg(
        "convergence",
        &[
            ("domain", "square"),
            ("beta", "0"),
            ("j", "2"),
            ("levels", "3"),
            ("h", "0.25"),
            ("order", "2"),
        ],
        "conv",
    );
    let outcome = execute(&c).expect("convergence");
    assert!(outcome.pass);
    let rates = std::fs::read_to_string(out.join("rates.json")).expect("rates");
    assert!(rates.contains("\"rates\""));
    let csv = std::fs::read_to_string(out.join("convergence.csv")).expect("csv");
    assert_eq!(csv.lines().count(), 4); // header + 3 levels
}
