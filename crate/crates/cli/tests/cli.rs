use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_iwpca"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// 40 x 8 binary matrix from a fixed linear congruential sequence.
fn fixture(dir: &Path) -> PathBuf {
    let mut state: u64 = 12345;
    let mut lines = Vec::new();
    for _ in 0..40 {
        let row: Vec<&str> = (0..8)
            .map(|_| {
                state = state
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                if (state >> 33) % 10 < 3 {
                    "1"
                } else {
                    "0"
                }
            })
            .collect();
        lines.push(row.join(","));
    }
    let path = dir.join("toy.csv");
    fs::write(&path, lines.join("\n") + "\n").unwrap();
    path
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_data_rows(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(String::from)
        .collect()
}

#[test]
fn fit_writes_projection_with_requested_rank_and_scheme() {
    let dir = TempDir::new().unwrap();
    let data = fixture(dir.path());
    let out = dir.path().join("fit");
    let o = run(&[
        "fit",
        "--data",
        path_str(&data),
        "--algorithm",
        "vanilla",
        "--rank",
        "3",
        "--output-dir",
        path_str(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let p = read_json(&out.join("projection.json"));
    assert_eq!(p["r"], 3);
    assert_eq!(p["d"], 8);
    assert_eq!(p["U"].as_array().unwrap().len(), 24);

    let o = run(&[
        "fit",
        "--data",
        path_str(&data),
        "--algorithm",
        "iwpca",
        "--weights",
        "inverse_sign_norm",
        "--rank",
        "2",
        "--output-dir",
        path_str(&out),
    ]);
    assert!(o.status.success());
    assert_eq!(
        read_json(&out.join("projection.json"))["scheme"],
        "inverse_sign_norm"
    );
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let data = fixture(dir.path());
    let mut outputs = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("run{k}"));
        for args in [
            vec!["fit", "--rank", "3", "--weights", "inverse_sign_norm"],
            vec![
                "robustness",
                "--rank",
                "3",
                "--seed",
                "9",
                "--per-item",
                "true",
            ],
        ] {
            let mut full = args.clone();
            full.extend(["--data", path_str(&data), "--output-dir", path_str(&out)]);
            assert!(run(&full).status.success());
        }
        outputs.push((
            fs::read(out.join("projection.json")).unwrap(),
            fs::read(out.join("robustness.csv")).unwrap(),
            fs::read(out.join("robustness.json")).unwrap(),
        ));
    }
    assert!(outputs[0] == outputs[1]);
}

#[test]
fn sweep_emits_one_row_per_algorithm_and_rank() {
    let dir = TempDir::new().unwrap();
    let data = fixture(dir.path());
    let out = dir.path().join("sweep");
    let o = run(&[
        "sweep",
        "--data",
        path_str(&data),
        "--ranks",
        "1,2,4,6",
        "--output-dir",
        path_str(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_data_rows(&out.join("sweep.csv"));
    assert_eq!(rows.len(), 3 * 4);
    let header = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert!(header.starts_with("dataset,algorithm,weight_scheme,r,alpha,item_id,metric,value\n"));
    assert!(rows.iter().all(|r| r.starts_with("toy,")));
}

#[test]
fn robustness_emits_five_rows_per_algorithm() {
    let dir = TempDir::new().unwrap();
    let data = fixture(dir.path());
    let out = dir.path().join("rob");
    let o = run(&[
        "robustness",
        "--data",
        path_str(&data),
        "--rank",
        "3",
        "--output-dir",
        path_str(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_data_rows(&out.join("robustness.csv"));
    assert_eq!(rows.len(), 15);
    let alphas: Vec<&str> = rows[..5]
        .iter()
        .map(|r| r.split(',').nth(4).unwrap())
        .collect();
    assert_eq!(alphas, ["0.0", "0.2", "0.4", "0.6", "0.8"]);
}

#[test]
fn eval_at_full_rank_scores_every_two_class_item() {
    let dir = TempDir::new().unwrap();
    let data = fixture(dir.path());
    let out = dir.path().join("eval");
    let o = run(&[
        "eval",
        "--data",
        path_str(&data),
        "--algorithm",
        "vanilla",
        "--rank",
        "8",
        "--output-dir",
        path_str(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let text = fs::read_to_string(&data).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().map(|l| l.split(',').collect()).collect();
    let two_class = (0..8)
        .filter(|&j| {
            let ones = rows.iter().filter(|r| r[j] == "1").count();
            ones > 0 && ones < rows.len()
        })
        .count();
    let report = read_json(&out.join("eval.json"));
    assert_eq!(report["per_item_auc"].as_array().unwrap().len(), two_class);
    let item_rows = csv_data_rows(&out.join("eval.csv"))
        .into_iter()
        .filter(|r| r.contains(",auc,"))
        .count();
    assert_eq!(item_rows, two_class);
    assert_eq!(
        report["diagnostics"]["diagonal_by_popularity"]
            .as_array()
            .unwrap()
            .len(),
        3
    );
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = TempDir::new().unwrap();
    let data = fixture(dir.path());
    let out = dir.path().join("cfg");
    let cfg = dir.path().join("run.json");
    fs::write(
        &cfg,
        serde_json::json!({"data": data, "algorithm": "vanilla", "rank": 2, "output_dir": out})
            .to_string(),
    )
    .unwrap();
    assert!(run(&["fit", "--config", path_str(&cfg)]).status.success());
    assert_eq!(read_json(&out.join("projection.json"))["r"], 2);
    assert!(run(&["fit", "--config", path_str(&cfg), "--rank", "5"])
        .status
        .success());
    assert_eq!(read_json(&out.join("projection.json"))["r"], 5);

    fs::write(&cfg, r#"{"rnak": 2}"#).unwrap();
    assert_eq!(
        run(&["fit", "--config", path_str(&cfg)]).status.code(),
        Some(2)
    );
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let data = fixture(dir.path());
    assert_eq!(
        run(&[
            "fit",
            "--data",
            path_str(&data),
            "--algorithm",
            "nope",
            "--rank",
            "2"
        ])
        .status
        .code(),
        Some(2)
    );
    assert_eq!(
        run(&["fit", "--data", path_str(&data), "--rank", "9"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&[
            "fit",
            "--data",
            path_str(&data),
            "--weights",
            "proper",
            "--rank",
            "2"
        ])
        .status
        .code(),
        Some(2)
    );
    assert_eq!(run(&["theory", "theorem9"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn unscorable_matrix_is_a_failure_exit() {
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("flat.csv");
    fs::write(&data, "1,0\n1,0\n1,0\n").unwrap();
    let o = run(&[
        "eval",
        "--data",
        path_str(&data),
        "--algorithm",
        "vanilla",
        "--rank",
        "1",
        "--output-dir",
        path_str(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

const LASTFM: &str = "userID\tartistID\tweight\n\
1\t100\t5\n1\t300\t2\n2\t200\t1\n3\t100\t4\n3\t300\t1\n4\t100\t1\n5\t300\t7\n5\t200\t1\n";

#[test]
fn ingest_lastfm_writes_matrix_ids_and_manifest() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("user_artists.dat");
    fs::write(&input, LASTFM).unwrap();
    let out = dir.path().join("ingested");
    let o = run(&[
        "ingest",
        "--source",
        "lastfm",
        "--input",
        path_str(&input),
        "--min-artist-listeners",
        "3",
        "--min-user-total",
        "3",
        "--output-dir",
        path_str(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest = read_json(&out.join("lastfm.manifest.json"));
    assert_eq!(manifest["shape"], serde_json::json!([3, 2]));
    assert_eq!(manifest["normalization"], "row_l1");
    let ids = read_json(&out.join("lastfm.ids.json"));
    assert_eq!(ids["user_ids"], serde_json::json!(["1", "3", "5"]));
    assert_eq!(ids["item_ids"], serde_json::json!(["100", "300"]));
    let matrix = fs::read_to_string(out.join("lastfm.csv")).unwrap();
    assert_eq!(
        matrix.lines().next(),
        Some("0.7142857142857143,0.2857142857142857")
    );
}

#[test]
fn ingest_bad_separator_reports_line_and_exits_two() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("user_artists.dat");
    fs::write(&input, "userID\tartistID\tweight\n1\t100\t5\n2,200,3\n").unwrap();
    let o = run(&[
        "ingest",
        "--source",
        "lastfm",
        "--input",
        path_str(&input),
        "--output-dir",
        path_str(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert!(stderr.contains(":3:"), "{stderr}");
}

#[test]
fn theory_all_reports_six_passing_verdicts() {
    let o = run(&["theory", "all", "--seed", "0"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let verdicts: Value = serde_json::from_slice(&o.stdout).unwrap();
    let verdicts = verdicts.as_array().unwrap();
    assert_eq!(verdicts.len(), 6);
    for v in verdicts {
        assert_eq!(v["pass"], true, "{v}");
        assert!(v["seeds"].as_array().is_some_and(|s| !s.is_empty()));
    }
}
