use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const EXAMPLE_ONE: &str = "\
generator.kind = bspline
generator.order = 4
scheme.rho = 4
scheme.r = 1
epsilon.eps0 = 4
epsilon.d = 0.25
W = 10, 20
";

fn pns(dir: &Path, args: &[&str], config: &str) -> Output {
    let path = dir.join("run.conf");
    fs::write(&path, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_pns"))
        .args(args)
        .arg("--config")
        .arg(&path)
        .arg("--out")
        .arg(dir.join("out"))
        .env("PNS_THREADS", "2")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn cis_verdicts_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = pns(dir.path(), &["check-cis"], EXAMPLE_ONE);
    assert_eq!(ok.status.code(), Some(0), "{}", stderr(&ok));
    assert!(stdout(&ok).contains("verdict         CIS"));
    assert!(dir.path().join("out/config.resolved").exists());

    let q3 = "generator.kind = bspline\ngenerator.order = 3\nscheme.rho = 4\nscheme.r = 2\noffsets.values = 0.5, 2.5\n";
    let bad = pns(dir.path(), &["check-cis"], q3);
    assert_eq!(bad.status.code(), Some(3));
    assert!(stdout(&bad).contains("not CIS"));

    let mismatch = "generator.kind = bspline\ngenerator.order = 4\nscheme.rho = 4\nscheme.r = 1\nscheme.L = 3\n";
    let cfg = pns(dir.path(), &["check-cis"], mismatch);
    assert_eq!(cfg.status.code(), Some(2));
    assert!(stderr(&cfg).contains("config line 5"), "{}", stderr(&cfg));
}

#[test]
fn noncompact_inverse_is_a_residual_failure() {
    let dir = tempfile::tempdir().unwrap();
    let q4 = "generator.kind = bspline\ngenerator.order = 4\nscheme.rho = 4\nscheme.r = 2\noffsets.values = 0.5, 2.5\n";
    let out = pns(dir.path(), &["kernels"], q4);
    assert_eq!(out.status.code(), Some(4), "{}", stderr(&out));
}

#[test]
fn kernels_writes_coefficients_and_curves() {
    let dir = tempfile::tempdir().unwrap();
    let out = pns(dir.path(), &["kernels", "--quiet", "--grid", "57"], EXAMPLE_ONE);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).is_empty());
    let root = dir.path().join("out");
    let mut reader = csv::Reader::from_path(root.join("kernel_terms.csv")).unwrap();
    let mut theta00: Vec<(f64, f64)> = reader
        .records()
        .map(|r| r.unwrap())
        .filter(|r| &r[0] == "0" && &r[1] == "0")
        .map(|r| (r[2].parse().unwrap(), r[3].parse().unwrap()))
        .collect();
    theta00.sort_by(|a, b| a.0.total_cmp(&b.0));
    let expected = [(0.0, -19.0), (1.0, 13.0 / 3.0), (2.0, -13.0 / 3.0), (3.0, 19.0)];
    for ((s, c), (es, ec)) in theta00.iter().zip(expected) {
        assert_eq!(*s, es);
        assert!((c - ec).abs() <= 1e-9, "{c} vs {ec}");
    }
    let curves = fs::read_to_string(root.join("kernel_curves.csv")).unwrap();
    assert_eq!(curves.lines().count(), 58);
    assert!(curves.starts_with("t,theta_0_0,theta_1_0,theta_2_0,theta_3_0\n"));
    assert!(!curves.contains('\r'));
    assert!(root.join("prediction_curves.csv").exists());
    assert!(fs::read_to_string(root.join("kernels.json")).unwrap().contains("\"epsilons\""));
}

#[test]
fn reloaded_kernels_predict_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    let first = pns(dir.path(), &["kernels", "--quiet"], EXAMPLE_ONE);
    assert_eq!(first.status.code(), Some(0), "{}", stderr(&first));
    let direct = pns(dir.path(), &["predict", "--quiet", "--grid", "301"], EXAMPLE_ONE);
    assert_eq!(direct.status.code(), Some(0), "{}", stderr(&direct));
    let saved = dir.path().join("saved.json");
    fs::copy(dir.path().join("out/kernels.json"), &saved).unwrap();
    let traces: Vec<String> = ["trace_W10.csv", "trace_W20.csv", "errors.csv"]
        .iter()
        .map(|f| fs::read_to_string(dir.path().join("out").join(f)).unwrap())
        .collect();
    fs::remove_dir_all(dir.path().join("out")).unwrap();

    let reload = format!("{EXAMPLE_ONE}kernels.file = saved.json\n");
    let again = pns(dir.path(), &["predict", "--quiet", "--grid", "301"], &reload);
    assert_eq!(again.status.code(), Some(0), "{}", stderr(&again));
    for (name, before) in ["trace_W10.csv", "trace_W20.csv", "errors.csv"].iter().zip(&traces) {
        let after = fs::read_to_string(dir.path().join("out").join(name)).unwrap();
        assert_eq!(&after, before, "{name} differs after reload");
    }
}

#[test]
fn zero_signal_gives_zero_traces() {
    let dir = tempfile::tempdir().unwrap();
    let config = format!("{EXAMPLE_ONE}signal = zero\n");
    let out = pns(dir.path(), &["predict", "--quiet", "--grid", "101"], &config);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let mut reader = csv::Reader::from_path(dir.path().join("out/trace_W20.csv")).unwrap();
    for r in reader.records() {
        let r = r.unwrap();
        assert_eq!(&r[1], "0");
        assert_eq!(&r[2], "0");
    }
}

#[test]
fn db3_report_lists_support_and_window() {
    let dir = tempfile::tempdir().unwrap();
    let config = "\
generator.kind = daubechies
generator.order = 3
scheme.rho = 5
scheme.r = 1
offsets.mode = chebyshev
epsilon.eps0 = 5
epsilon.d = 5
W = 20
";
    let out = pns(dir.path(), &["predict", "--grid", "101"], config);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report = stdout(&out);
    assert!(report.contains("prediction kernel support  [1, 30]"), "{report}");
    assert!(report.contains("window bound    6 blocks, at most 30 past samples"), "{report}");
}

#[test]
fn tabulated_signal_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let mut table = String::from("t,value\n");
    for k in 0..=400 {
        let t = -2.0 + 0.01 * k as f64;
        table.push_str(&format!("{t},{}\n", t * t));
    }
    fs::write(dir.path().join("signal.csv"), table).unwrap();
    let config = format!("{EXAMPLE_ONE}signal = file:signal.csv\n");
    let out = pns(dir.path(), &["predict", "--quiet", "--grid", "11"], &config);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));

    let bad = format!("{EXAMPLE_ONE}signal = file:missing.csv\n");
    assert_eq!(pns(dir.path(), &["predict"], &bad).status.code(), Some(2));
}

#[test]
fn missing_shifts_are_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = "generator.kind = bspline\ngenerator.order = 4\nscheme.rho = 4\nscheme.r = 1\n";
    let out = pns(dir.path(), &["predict"], config);
    assert_eq!(out.status.code(), Some(2));
}
