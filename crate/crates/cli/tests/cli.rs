use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const LAMBDA_HALF: f64 = 0.9452255590696582;

fn minkflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_minkflow"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn config(alpha: &str, initial: &str, n_r: usize, solver: &str) -> String {
    format!(
        "[domain]\nkind = \"disk\"\nradius = 1.0\n\n[alpha]\n{alpha}\n\n[initial]\n{initial}\n\n\
         [grid]\nn_r = {n_r}\nn_theta = {}\n\n[solver]\n{solver}\n",
        2 * n_r
    )
}

fn summary_value(dir: &Path, key: &str) -> Option<String> {
    let text = fs::read_to_string(dir.join("summary.txt")).unwrap();
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")).map(str::to_string))
}

#[test]
fn flat_run_reports_zero_speed() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        &config(
            "kind = \"constant\"\nvalue = 0.0",
            "kind = \"zero\"",
            16,
            "t_end = 3.0",
        ),
    );
    let out = tmp.path().join("out");
    let res = minkflow(&["run", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(
        res.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    assert_eq!(
        summary_value(&out, "termination").as_deref(),
        Some("translator")
    );
    assert_eq!(summary_value(&out, "lambda").as_deref(), Some("0"));
    assert_eq!(summary_value(&out, "violations").as_deref(), Some("0"));
    assert!(out.join("config.toml").exists());
    assert!(out.join("snapshots/u_0000.txt").exists());
    assert!(!out.join("PARTIAL").exists());
    let csv = fs::read_to_string(out.join("monitors.csv")).unwrap();
    assert!(
        csv.starts_with("t,sup_v,sup_H_over_v,lambda_est,osc_ut,sup_abs_u,spacelike_margin,dt\n")
    );
    // the effective configuration re-parses
    let copy = fs::read_to_string(out.join("config.toml")).unwrap();
    assert!(minkflow_cli::parse_config(&copy).is_ok());
}

#[test]
fn disk_translator_matches_the_oracle() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        &config(
            "kind = \"constant\"\nvalue = 0.5",
            "kind = \"zero\"",
            24,
            "t_end = 20.0",
        ),
    );
    let out = tmp.path().join("out");
    let res = minkflow(&["run", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(
        res.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let lambda: f64 = summary_value(&out, "lambda").unwrap().parse().unwrap();
    assert!(
        (lambda - LAMBDA_HALF).abs() < 0.02 * LAMBDA_HALF,
        "{lambda}"
    );
}

#[test]
fn monitors_are_bit_identical_across_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        &config(
            "kind = \"constant\"\nvalue = 0.5",
            "kind = \"fourier\"\nmodes = 3\nmax_slope = 0.4\nseed = 1",
            16,
            "t_end = 0.3\nsnapshot_every = 0.1",
        ),
    );
    let mut csvs = Vec::new();
    for (name, seed) in [("a", "7"), ("b", "7"), ("c", "8")] {
        let out = tmp.path().join(name);
        let res = minkflow(&[
            "run",
            &cfg,
            "--out",
            out.to_str().unwrap(),
            "--seed",
            seed,
            "--no-checks",
        ]);
        assert_eq!(
            res.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&res.stderr)
        );
        assert_eq!(summary_value(&out, "checks").as_deref(), Some("disabled"));
        csvs.push(fs::read(out.join("monitors.csv")).unwrap());
        assert_eq!(fs::read_dir(out.join("snapshots")).unwrap().count(), 4);
    }
    assert_eq!(csvs[0], csvs[1]);
    assert_ne!(csvs[0], csvs[2]);
}

#[test]
fn near_lightlike_plane_stays_spacelike() {
    // Observed behaviour, kept as a regression: the plane hugs the light cone
    // but the discrete flow never crosses it.
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        &config(
            "kind = \"constant\"\nvalue = 0.0",
            "kind = \"plane\"\nslope = [0.999, 0.0]",
            16,
            "t_end = 1.0",
        ),
    );
    let out = tmp.path().join("out");
    let res = minkflow(&["run", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(
        res.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    assert_eq!(summary_value(&out, "status").as_deref(), Some("completed"));
    let margin: f64 = summary_value(&out, "min_spacelike_margin")
        .unwrap()
        .parse()
        .unwrap();
    assert!(margin > 0.0 && margin < 0.01, "{margin}");
    assert!(!out.join("PARTIAL").exists());
}

#[test]
fn steep_plane_against_large_angle_fails_with_state_dump() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        &config(
            "kind = \"constant\"\nvalue = 20.0",
            "kind = \"plane\"\nslope = [0.999, 0.0]",
            16,
            "t_end = 0.5",
        ),
    );
    let out = tmp.path().join("out");
    let res = minkflow(&["run", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(
        res.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let marker = fs::read_to_string(out.join("PARTIAL")).unwrap();
    assert!(marker.contains("spacelike condition lost"), "{marker}");
    assert_eq!(summary_value(&out, "status").as_deref(), Some("failed"));
    let dump = fs::File::open(out.join("failure_state.txt")).unwrap();
    let (field, t) = minkflow::Field::read_snapshot(std::io::BufReader::new(dump)).unwrap();
    assert_eq!(field.shape(), (16, 32));
    assert!(t > 0.0 && t < 0.5);
}

#[test]
fn invalid_configs_exit_with_named_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        &config(
            "kind = \"constant\"\nvalue = 0.5",
            "kind = \"zero\"",
            4,
            "t_end = 1.0",
        ),
    );
    let res = minkflow(&["run", &cfg, "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("grid.n_r"));
    assert!(!tmp.path().join("o").exists());

    let cfg = write_config(
        tmp.path(),
        &config(
            "kind = \"constant\"\nvalue = 0.5\nalpha_typo = 1",
            "kind = \"zero\"",
            16,
            "",
        ),
    );
    let res = minkflow(&["run", &cfg]);
    assert_eq!(res.status.code(), Some(2));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(
        err.contains("alpha_typo") && err.contains("line 8"),
        "{err}"
    );

    let res = minkflow(&["run", tmp.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("missing.toml"));
}

fn oracle(alpha: &str, out: &Path) -> f64 {
    let res = minkflow(&[
        "oracle",
        "--alpha",
        alpha,
        "--radius",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        res.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let stdout = String::from_utf8(res.stdout).unwrap();
    stdout
        .trim()
        .strip_prefix("lambda = ")
        .unwrap()
        .parse()
        .unwrap()
}

#[test]
fn oracle_command_prints_lambda_and_profile() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(oracle("0", tmp.path()), 0.0);
    let up = oracle("0.5", tmp.path());
    assert!((up - LAMBDA_HALF).abs() < 1e-8, "{up}");
    let csv = fs::read_to_string(tmp.path().join("translator.csv")).unwrap();
    assert!(csv.starts_with("# lambda=9.452255590"));
    assert_eq!(csv.lines().nth(1), Some("r,u"));
    assert_eq!(csv.lines().count(), 4096 + 2);
    let down = oracle("-0.5", tmp.path());
    assert!((up + down).abs() < 1e-9);

    let res = minkflow(&["oracle", "--alpha", "0.5", "--radius", "-1"]);
    assert_eq!(res.status.code(), Some(2));
}
