use std::fs;
use std::process::{Command, Output};

fn cellload(args: &[&str], seed_env: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cellload"));
    cmd.args(args).env_remove("CELLLOAD_SEED");
    if let Some(s) = seed_env {
        cmd.env("CELLLOAD_SEED", s);
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn selftest_passes_on_fresh_checkout() {
    let o = cellload(&["selftest"], None);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(stdout(&o).contains("constant_ratio_literal_over_rederived"));
}

#[test]
fn tampered_selftest_tolerance_exits_2() {
    let o = cellload(&["selftest", "--selftest-tolerance-scale", "1e-9"], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("FAIL"));
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(cellload(&[], None).status.code(), Some(1));
    assert_eq!(cellload(&["nope"], None).status.code(), Some(1));
    assert_eq!(
        cellload(&["selftest", "--bogus", "1"], None).status.code(),
        Some(1)
    );
    let empty = cellload(&["stable-fraction", "--sweep-values", ""], None);
    assert_eq!(empty.status.code(), Some(1));
    let decreasing = cellload(&["stable-fraction", "--sweep-values", "5,2"], None);
    assert_eq!(decreasing.status.code(), Some(1));
    assert_eq!(
        cellload(&["selftest", "--jobs", "0"], None).status.code(),
        Some(1)
    );
    assert_eq!(cellload(&["--help"], None).status.code(), Some(0));
}

#[test]
fn help_documents_units() {
    let o = cellload(&["stable-fraction", "--help"], None);
    let text = stdout(&o);
    assert!(text.contains("[BS/km²]"));
    assert!(text.contains("[dBm]"));
}

#[test]
fn config_file_errors_name_line_and_key() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.cfg");
    fs::write(&path, "# comment\ng0_db = 20\n\nlambda_bz = 3\n").unwrap();
    let o = cellload(&["selftest", "--config", path.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 4"), "{err}");
    assert!(err.contains("lambda_bz"), "{err}");

    let missing = dir.path().join("absent.cfg");
    let o = cellload(&["selftest", "--config", missing.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn single_point_sweep_gives_one_row() {
    let o = cellload(&["mean-load", "--sweep-values", "50"], None);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("lambda_bs_per_km2,ei_mean_load,cf_mean_load,mean_cell_load"));
}

#[test]
fn command_line_overrides_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.cfg");
    fs::write(&path, "sweep_values = 1, 2\ng0_db = 0\n").unwrap();
    let p = path.to_str().unwrap();
    let from_file = stdout(&cellload(&["stable-fraction", "--config", p], None));
    let overridden = stdout(&cellload(
        &["stable-fraction", "--config", p, "--g0-db", "20"],
        None,
    ));
    assert_eq!(from_file.lines().count(), 3);
    assert_ne!(from_file, overridden);
    let negative = cellload(
        &["stable-fraction", "--config", p, "--k-pathloss-db", "-70"],
        None,
    );
    assert_eq!(negative.status.code(), Some(0));
    assert_ne!(stdout(&negative), from_file);
}

#[test]
fn seed_precedence_flag_env_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "seed = 5\nsweep_values = 10\n").unwrap();
    let c = cfg.to_str().unwrap();
    let run = |extra: &[&str], env: Option<&str>| {
        let mut args = vec![
            "stable-fraction",
            "--validate",
            "--realizations",
            "3",
            "--config",
            c,
        ];
        args.extend(extra);
        stdout(&cellload(&args, env))
    };
    let file_only = run(&[], None);
    let env = run(&[], Some("6"));
    let flag = run(&["--seed", "6"], Some("7"));
    let explicit_five = run(&["--seed", "5"], None);
    assert_eq!(file_only, explicit_five);
    assert_ne!(file_only, env);
    assert_eq!(env, flag);
}

#[test]
fn out_writes_table_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sf.json");
    let o = cellload(
        &[
            "stable-fraction",
            "--sweep-values",
            "5,10",
            "--format",
            "json",
            "--seed",
            "9",
            "--out",
            out.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let table: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(table["rows"].as_array().unwrap().len(), 2);
    let meta_path = dir.path().join("sf.json.meta.json");
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(meta_path).unwrap()).unwrap();
    assert_eq!(meta["seed"], 9);
    assert_eq!(meta["command"], "stable-fraction");
    assert!(meta["config"]["net"]["g0_db"].is_number());
}

#[test]
fn csv_is_identical_across_runs_and_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for (i, jobs) in ["1", "2", "2"].iter().enumerate() {
        let out = dir.path().join(format!("ml{i}.csv"));
        let o = cellload(
            &[
                "mean-load",
                "--validate",
                "--realizations",
                "4",
                "--sweep-values",
                "5,10,20",
                "--jobs",
                jobs,
                "--out",
                out.to_str().unwrap(),
            ],
            None,
        );
        assert!(matches!(o.status.code(), Some(0 | 2)));
        files.push(fs::read(&out).unwrap());
    }
    assert_eq!(files[0], files[1]);
    assert_eq!(files[1], files[2]);
}

#[test]
fn stable_fraction_validates_at_one_point() {
    let o = cellload(
        &[
            "stable-fraction",
            "--validate",
            "--realizations",
            "20",
            "--sweep-values",
            "5",
        ],
        None,
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let text = stdout(&o);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row.last(), Some(&"1"));
}

#[test]
fn stable_fraction_rises_with_density_and_gain() {
    let values = |g0: &str| -> Vec<f64> {
        let text = stdout(&cellload(
            &[
                "stable-fraction",
                "--g0-db",
                g0,
                "--sweep-values",
                "1,2,5,10,20,50",
            ],
            None,
        ));
        text.lines()
            .skip(1)
            .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
            .collect()
    };
    let low = values("0");
    let high = values("20");
    assert!(low.windows(2).all(|w| w[1] >= w[0]));
    assert!(high.windows(2).all(|w| w[1] >= w[0]));
    assert!(low.iter().zip(&high).all(|(a, b)| b >= a));
    assert!(high[0] > low[0]);
}
