use std::path::PathBuf;
use std::process::{Command, Output};

fn rllfb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rllfb"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("rllfb-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

/// Column `name` of a CSV document as (d, eps, value) triples.
fn column(csv: &str, name: &str) -> Vec<(usize, f64, f64)> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap();
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (
                f[0].parse().unwrap(),
                f[1].parse().unwrap(),
                f[idx].parse().unwrap(),
            )
        })
        .collect()
}

#[test]
fn bounds_prints_the_three_bounds() {
    let o = rllfb(&["bounds", "--d", "2", "--eps", "0.5"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("LB              0.344360938"), "{text}");
    assert!(text.contains("UB              0.347120957"), "{text}");
    assert!(text.contains("NC              0.347120957"), "{text}");
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["bounds", "--d", "0", "--eps", "0.5"][..],
        &["bounds", "--d", "2", "--eps", "1.5"],
        &["bounds", "--d", "2"],
        &["frobnicate"],
        &["curve", "--points", "1"],
        &[
            "simulate", "--d", "2", "--eps", "0.5", "--a", "0.25", "--n", "10",
        ],
    ] {
        let o = rllfb(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn unwritable_output_is_a_runtime_error() {
    let o = rllfb(&["curve", "--points", "3", "-o", "/nonexistent/dir/x.csv"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn threshold_outputs() {
    let o = rllfb(&["threshold", "--d", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let v: f64 = stdout(&o).trim().parse().unwrap();
    assert!((v - 0.696).abs() < 5e-3);

    let o = rllfb(&["threshold", "--d2-equality"]);
    let v: f64 = stdout(&o).trim().parse().unwrap();
    assert!((v - (1.0 - 1.0 / (2.0 * 1.5f64.log2()))).abs() < 1e-9);

    let o = rllfb(&["threshold", "--d", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("none"));
}

#[test]
fn default_curve_has_404_rows_and_is_byte_stable() {
    let first = rllfb(&["curve"]);
    assert_eq!(first.status.code(), Some(0));
    let text = stdout(&first);
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("d,epsilon,lower,upper_analytic,noncausal")
    );
    assert_eq!(lines.count(), 404);
    let second = rllfb(&["curve"]);
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn curve_writes_to_file_and_reads_config() {
    let out = scratch("from-config.csv");
    let cfg = scratch("sweep.cfg");
    std::fs::write(
        &cfg,
        format!(
            "# d=2 sweep\nd = 2\neps_start = 0.1\neps_stop = 0.2\npoints = 11\noutput = {}\n",
            out.display()
        ),
    )
    .unwrap();
    let o = rllfb(&["curve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(&out).unwrap();
    let rows = column(&csv, "lower");
    assert_eq!(rows.len(), 11);
    assert!(rows.iter().all(|r| r.0 == 2));
    assert_eq!(rows[0].1, 0.1);
    assert_eq!(rows[10].1, 0.2);

    // flags override the file
    let o = rllfb(&["curve", "--config", cfg.to_str().unwrap(), "--points", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        column(&std::fs::read_to_string(&out).unwrap(), "lower").len(),
        3
    );

    std::fs::write(&cfg, "colour = blue\n").unwrap();
    assert_eq!(
        rllfb(&["curve", "--config", cfg.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn d2_lower_meets_noncausal_only_below_threshold() {
    let o = rllfb(&["curve", "--d", "2", "--points", "1001"]);
    let csv = stdout(&o);
    let lower = column(&csv, "lower");
    let noncausal = column(&csv, "noncausal");
    for (l, n) in lower.iter().zip(&noncausal) {
        let eps = l.1;
        if eps <= 0.1452 {
            assert_eq!(l.2, n.2, "eps={eps}");
        } else if (0.146..1.0).contains(&eps) {
            assert!(l.2 < n.2, "eps={eps}");
        }
    }
}

#[test]
fn numeric_column_dominates_lower_bound() {
    let o = rllfb(&["curve", "--d", "3", "--points", "5", "--numeric-ub"]);
    assert_eq!(o.status.code(), Some(0));
    let csv = stdout(&o);
    assert!(csv.starts_with("d,epsilon,lower,upper_analytic,noncausal,numeric_upper\n"));
    let lower = column(&csv, "lower");
    let numeric = column(&csv, "numeric_upper");
    for (l, n) in lower.iter().zip(&numeric) {
        assert!(n.2 >= l.2 - 1e-8, "eps={}: {} < {}", l.1, n.2, l.2);
    }
}

#[test]
fn verify_passes_and_detects_injected_fault() {
    let ok = rllfb(&["verify", "--dmax", "3"]);
    assert_eq!(ok.status.code(), Some(0), "{}", stdout(&ok));
    assert!(!stdout(&ok).contains("FAIL"));

    let bad = rllfb(&["verify", "--dmax", "3", "--inject-fault", "theta"]);
    assert_eq!(bad.status.code(), Some(3));
    assert!(stdout(&bad).contains("bcjr_invariance"));
}

#[test]
fn verify_can_dump_the_graph() {
    let o = rllfb(&["verify", "--dmax", "1", "--dump-graph"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).lines().count() > 3);
}

#[test]
fn simulate_reports_and_writes_csv() {
    let csv = scratch("sim.csv");
    let args = [
        "simulate",
        "--d",
        "2",
        "--eps",
        "0.5",
        "--a",
        "0.25",
        "--n",
        "200000",
        "--seed",
        "5",
        "--csv",
        csv.to_str().unwrap(),
    ];
    let o = rllfb(&args);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let field = |key: &str| -> f64 {
        text.lines()
            .find_map(|l| l.strip_prefix(&format!("{key}=")))
            .unwrap()
            .parse()
            .unwrap()
    };
    assert!((field("empirical_I") - field("analytic_I")).abs() < 0.01);
    assert!((field("analytic_I") - 0.324511).abs() < 1e-6);
    let written = std::fs::read_to_string(&csv).unwrap();
    assert!(written.starts_with("s,q,frequency\n"));
    let again = rllfb(&args);
    assert_eq!(o.stdout, again.stdout);
}
