use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn apblow(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_apblow"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn build(dir: &Path, n: usize, count: usize, name: &str) -> PathBuf {
    let o = apblow(
        dir,
        &[
            "build",
            "--n",
            &n.to_string(),
            "--count",
            &count.to_string(),
            "--out",
            name,
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    dir.join(name)
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records()
        .map(|rec| rec.unwrap().iter().map(str::to_owned).collect())
        .collect()
}

#[test]
fn build_is_deterministic_and_logged() {
    let dir = TempDir::new().unwrap();
    let o = apblow(
        dir.path(),
        &[
            "build", "--n", "2", "--rho", "0.49", "--count", "1000", "--seed", "7", "--out",
            "sys.json",
        ],
    );
    assert_eq!(code(&o), 0);
    let first = std::fs::read(dir.path().join("sys.json")).unwrap();
    let system: serde_json::Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(system["balls"].as_array().unwrap().len(), 1000);
    let log: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("sys.log.json")).unwrap()).unwrap();
    assert_eq!(log.as_array().unwrap().len(), 1000);
    assert!(log[0].get("rule").is_some() && log[0].get("sequence_index").is_some());

    apblow(
        dir.path(),
        &[
            "build", "--n", "2", "--rho", "0.49", "--count", "1000", "--seed", "7", "--out",
            "sys.json",
        ],
    );
    assert_eq!(std::fs::read(dir.path().join("sys.json")).unwrap(), first);
}

#[test]
fn invalid_configuration_exits_2() {
    let dir = TempDir::new().unwrap();
    assert_eq!(
        code(&apblow(
            dir.path(),
            &["build", "--rho", "0.6", "--out", "x.json"]
        )),
        2
    );
    assert!(!dir.path().join("x.json").exists());
    assert_eq!(
        code(&apblow(
            dir.path(),
            &["build", "--epsilon", "1.5", "--out", "x.json"]
        )),
        2
    );
    assert_eq!(
        code(&apblow(
            dir.path(),
            &["build", "--l-range", "9..x", "--out", "x.json"]
        )),
        2
    );
    assert_eq!(code(&apblow(dir.path(), &["frobnicate"])), 2);
    assert_eq!(
        code(&apblow(dir.path(), &["verify", "--system", "missing.json"])),
        2
    );

    std::fs::write(
        dir.path().join("cfg.json"),
        r#"{"rho": 0.3, "colour": "blue"}"#,
    )
    .unwrap();
    assert_eq!(
        code(&apblow(
            dir.path(),
            &["build", "--config", "cfg.json", "--out", "x.json"]
        )),
        2
    );
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("cfg.json"), r#"{"rho": 0.6, "count": 12}"#).unwrap();
    assert_eq!(
        code(&apblow(
            dir.path(),
            &["build", "--config", "cfg.json", "--out", "a.json"]
        )),
        2
    );
    let o = apblow(
        dir.path(),
        &[
            "build", "--config", "cfg.json", "--rho", "0.3", "--out", "a.json",
        ],
    );
    assert_eq!(code(&o), 0);
    let system: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("a.json")).unwrap()).unwrap();
    assert_eq!(system["balls"].as_array().unwrap().len(), 12);
    assert_eq!(system["rho"], 0.3);
}

#[test]
fn verify_fresh_build_passes() {
    let dir = TempDir::new().unwrap();
    build(dir.path(), 2, 300, "sys.json");
    let o = apblow(
        dir.path(),
        &[
            "verify",
            "--system",
            "sys.json",
            "--samples",
            "4000",
            "--epsilon",
            "0.07",
            "--out",
            "v",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let rows = csv_rows(&dir.path().join("v/verify.csv"));
    for suite in [
        "geometry",
        "regions",
        "divergence",
        "bounds",
        "decomposition",
        "sandwich",
        "fd",
    ] {
        assert!(rows.iter().any(|r| r[0] == suite), "missing {suite}");
    }
    assert!(rows.iter().all(|r| r[4] == "pass" || r[4] == "vacuous"));
    assert!(rows.iter().any(|r| r[1] == "10/lower" && r[4] == "vacuous"));
    let bundle: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("v/verify.json")).unwrap()).unwrap();
    assert_eq!(bundle["passed"], true);
}

#[test]
fn verify_reports_injected_overlap() {
    let dir = TempDir::new().unwrap();
    let path = build(dir.path(), 2, 60, "sys.json");
    let mut system: serde_json::Value =
        serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    let r = system["balls"][2]["R"].as_f64().unwrap();
    system["balls"][2]["R"] = (r * 20.0).into();
    std::fs::write(
        dir.path().join("bad.json"),
        serde_json::to_vec(&system).unwrap(),
    )
    .unwrap();
    let o = apblow(
        dir.path(),
        &[
            "verify", "--system", "bad.json", "--only", "geometry", "--out", "v",
        ],
    );
    assert_eq!(code(&o), 1);
    let rows = csv_rows(&dir.path().join("v/verify.csv"));
    let overlap = rows.iter().find(|r| r[1] == "window_overlaps").unwrap();
    assert_eq!(overlap[4], "fail");
    assert!(overlap[2].parse::<f64>().unwrap() >= 1.0);
}

#[test]
fn verify_only_filters_suites() {
    let dir = TempDir::new().unwrap();
    build(dir.path(), 2, 50, "sys.json");
    let o = apblow(
        dir.path(),
        &[
            "verify",
            "--system",
            "sys.json",
            "--only",
            "divergence",
            "--samples",
            "2000",
            "--out",
            "v",
        ],
    );
    assert_eq!(code(&o), 0);
    let rows = csv_rows(&dir.path().join("v/verify.csv"));
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r[0] == "divergence"));
}

#[test]
fn scan_outputs_and_trivial_guard() {
    let dir = TempDir::new().unwrap();
    build(dir.path(), 2, 600, "sys.json");
    let base = [
        "scan",
        "--system",
        "sys.json",
        "--samples",
        "20000",
        "--epsilon",
        "0.07",
        "--l-range",
        "8,64,512",
    ];

    let o = apblow(dir.path(), &[&base[..], &["--out", "s"]].concat());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("slope"));
    let rows = csv_rows(&dir.path().join("s/scan.csv"));
    let ratios: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(ratios.windows(2).all(|w| w[1] > w[0]), "{ratios:?}");
    let dat = std::fs::read_to_string(dir.path().join("s/scan.dat")).unwrap();
    let lines: Vec<&str> = dat.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(lines.len(), 3);
    assert!(lines.iter().all(|l| l.split_whitespace().count() == 2));

    assert_eq!(
        code(&apblow(
            dir.path(),
            &[&base[..], &["--p", "2", "--out", "t"]].concat()
        )),
        2
    );
    let o = apblow(
        dir.path(),
        &[&base[..], &["--p", "2", "--allow-trivial", "--out", "t"]].concat(),
    );
    assert_eq!(code(&o), 0);
    let rows = csv_rows(&dir.path().join("t/scan.csv"));
    assert!(rows.iter().all(|r| r[1].parse::<f64>().unwrap() == 1.0));
}

#[test]
fn scan_subdomain_filter() {
    let dir = TempDir::new().unwrap();
    build(dir.path(), 2, 300, "sys.json");
    let o = apblow(
        dir.path(),
        &[
            "scan",
            "--system",
            "sys.json",
            "--samples",
            "500",
            "--epsilon",
            "0.07",
            "--l-range",
            "1..300",
            "--subdomain",
            "-0.5,-0.5,0.2",
            "--out",
            "s",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let system: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("sys.json")).unwrap()).unwrap();
    let rows = csv_rows(&dir.path().join("s/scan.csv"));
    assert!(!rows.is_empty() && rows.len() < 300);
    for r in rows {
        let l: usize = r[0].parse().unwrap();
        let b = &system["balls"][l - 1];
        let c: Vec<f64> = (0..2)
            .map(|i| b["center_hi"][i].as_f64().unwrap())
            .collect();
        let dist = ((c[0] + 0.5).powi(2) + (c[1] + 0.5).powi(2)).sqrt();
        assert!(
            dist + b["R"].as_f64().unwrap() <= 0.2,
            "E_{l} not inside the subdomain"
        );
    }
}

#[test]
fn norms_and_hessian_integral() {
    let dir = TempDir::new().unwrap();
    build(dir.path(), 2, 80, "plane.json");
    let args = [
        "norms",
        "--system",
        "plane.json",
        "--samples",
        "2000",
        "--out",
        "n",
    ];
    let o = apblow(
        dir.path(),
        &[&args[..], &["--mode", "grad", "--exponent", "2"]].concat(),
    );
    assert_eq!(code(&o), 0);
    let rows = csv_rows(&dir.path().join("n/norms.csv"));
    assert_eq!(rows.len(), 80);
    assert_eq!(
        code(&apblow(
            dir.path(),
            &[&args[..], &["--mode", "hess", "--exponent", "2"]].concat()
        )),
        2
    );

    build(dir.path(), 3, 30, "space.json");
    let o = apblow(
        dir.path(),
        &[
            "hessian-integral",
            "--system",
            "space.json",
            "--p",
            "2",
            "--truncations",
            "5,10,20",
            "--samples",
            "500",
            "--out",
            "r",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&dir.path().join("r/hessian_integral.csv"));
    let alias = apblow(
        dir.path(),
        &[
            "remark13",
            "--system",
            "space.json",
            "--p",
            "2",
            "--truncations",
            "5,10",
            "--samples",
            "200",
            "--out",
            "r2",
        ],
    );
    assert_eq!(code(&alias), 0);
    assert_eq!(rows.len(), 3);
    for r in rows {
        assert_eq!(r[1], r[3], "weighted and unweighted differ at p = 2");
    }
}

#[test]
fn eval_prints_jet() {
    let dir = TempDir::new().unwrap();
    build(dir.path(), 2, 40, "sys.json");
    let o = apblow(
        dir.path(),
        &[
            "eval",
            "--system",
            "sys.json",
            "--anchor",
            "3",
            "--offset",
            "0.1,-0.2",
            "--hessian",
        ],
    );
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["jet"]["gradient"].as_array().unwrap().len(), 4);
    assert_eq!(v["jet"]["hessian"].as_array().unwrap().len(), 8);
    let g: Vec<f64> = v["jet"]["gradient"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    assert!((g[0] + g[3]).abs() <= 1e-12 * (1.0 + g.iter().map(|x| x * x).sum::<f64>().sqrt()));
    assert_eq!(
        code(&apblow(
            dir.path(),
            &["eval", "--system", "sys.json", "--anchor", "99", "--offset", "0,0"]
        )),
        2
    );
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = TempDir::new().unwrap();
    build(dir.path(), 2, 100, "sys.json");
    let run = |threads: &str, out: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_apblow"))
            .current_dir(dir.path())
            .env("APBLOW_THREADS", threads)
            .args([
                "scan",
                "--system",
                "sys.json",
                "--samples",
                "3000",
                "--epsilon",
                "0.07",
                "--l-range",
                "8,27,64",
                "--out",
                out,
            ])
            .output()
            .unwrap();
        assert_eq!(code(&o), 0);
        std::fs::read(dir.path().join(out).join("scan.csv")).unwrap()
    };
    assert_eq!(run("1", "a"), run("3", "b"));
    let o = Command::new(env!("CARGO_BIN_EXE_apblow"))
        .current_dir(dir.path())
        .env("APBLOW_THREADS", "zero")
        .args(["build", "--out", "c.json"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}
