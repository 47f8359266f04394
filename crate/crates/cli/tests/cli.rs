use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use jodscale::ingest::{ConditionSet, Selection, Trial, TrialTable};
use jodscale::scaling::CountMatrix;
use jodscale::simulate::{simulate_experiment, SimConfig};
use serde_json::Value;
use tempfile::TempDir;

fn jodscale(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jodscale"))
        .args(args)
        .env_remove("JODSCALE_THREADS")
        .output()
        .expect("binary runs")
}

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
        .display()
        .to_string()
}

fn schema(name: &str) -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schema").join(name);
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn assert_valid(instance: &Value, schema_name: &str) {
    let validator = jsonschema::validator_for(&schema(schema_name)).unwrap();
    let errors: Vec<String> = validator.iter_errors(instance).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{errors:?}");
}

fn json_stdout(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write_file(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path
}

/// Expands per-observer count matrices into trial rows labelled c0, c1, ….
fn trials_csv(observers: &[CountMatrix]) -> String {
    let n = observers[0].dim();
    let conditions = ConditionSet::new((0..n).map(|i| format!("c{i}"))).unwrap();
    let mut trials = Vec::new();
    for (k, m) in observers.iter().enumerate() {
        for i in 0..n {
            for j in i + 1..n {
                for (wins, selection) in [(m.wins(i, j), Selection::First), (m.wins(j, i), Selection::Second)] {
                    for _ in 0..wins {
                        trials.push(Trial {
                            observer: format!("obs{k:02}"),
                            session: "1".into(),
                            content: "s".into(),
                            condition_a: i,
                            condition_b: j,
                            selection,
                        });
                    }
                }
            }
        }
    }
    let mut out = Vec::new();
    TrialTable::new(trials, conditions).unwrap().write_csv(&mut out).unwrap();
    String::from_utf8(out).unwrap()
}

#[test]
fn toy_report() {
    let report = json_stdout(&jodscale(&["scale", "-i", &data("toy.csv"), "--seed", "7", "--bootstrap", "200"]));
    assert_valid(&report, "report.schema.json");
    let a = &report["analyses"][0];
    assert_eq!(a["conditions"], serde_json::json!(["O1", "O2", "O3"]));
    let jod: Vec<f64> = serde_json::from_value(a["jod"].clone()).unwrap();
    assert_eq!(jod[0], 0.0);
    assert!(jod.iter().all(|q| q.is_finite()) && 0.0 < jod[1] && jod[1] < jod[2]);
    let b = &a["bootstrap"];
    assert!(b["ci_low"][0].is_null() && b["ci_high"][0].is_null());
    assert!(b["ci_low"][2].as_f64().unwrap() < jod[2] && jod[2] < b["ci_high"][2].as_f64().unwrap());
    assert_eq!(report["provenance"]["seed"], 7);
    assert_eq!(report["provenance"]["input"], data("toy.csv"));
}

#[test]
fn point_estimates_only() {
    let report = json_stdout(&jodscale(&["scale", "-i", &data("toy.csv"), "--no-prior", "--bootstrap", "0"]));
    assert_valid(&report, "report.schema.json");
    assert!(report["analyses"][0].get("bootstrap").is_none());
    assert_eq!(report["provenance"]["options"]["scaling"]["use_prior"], false);
}

#[test]
fn seeded_reports_are_byte_identical() {
    let args = ["scale", "-i", &data("toy.csv"), "--seed", "7", "--bootstrap", "100"];
    let a = jodscale(&args);
    let b = jodscale(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let mut single = args.to_vec();
    single.extend(["--threads", "1"]);
    assert_eq!(a.stdout, jodscale(&single).stdout);
    let other = jodscale(&["scale", "-i", &data("toy.csv"), "--seed", "8", "--bootstrap", "100"]);
    assert_ne!(a.stdout, other.stdout);
}

#[test]
fn reference_label_moves_to_front() {
    let report = json_stdout(&jodscale(&["scale", "-i", &data("toy.csv"), "--reference", "O3", "--bootstrap", "0"]));
    let a = &report["analyses"][0];
    assert_eq!(a["conditions"][0], "O3");
    assert!(a["jod"][1].as_f64().unwrap() < 0.0);
}

#[test]
fn plots_and_edge_list() {
    let dir = TempDir::new().unwrap();
    let plot = dir.path().join("scores.svg");
    let graph = dir.path().join("graph.svg");
    let edges = dir.path().join("edges.csv");
    let out = jodscale(&[
        "scale", "-i", &data("toy.csv"), "--bootstrap", "50",
        "--plot", plot.to_str().unwrap(),
        "--graph", graph.to_str().unwrap(),
        "--edges", edges.to_str().unwrap(),
        "-o", dir.path().join("r.json").to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let svg = fs::read_to_string(plot).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    // the reference gets a point but no error bar
    assert_eq!(svg.matches("<circle").count(), 3);
    assert_eq!(svg.matches("stroke-width=\"1.5\"").count(), 2);
    assert!(fs::read_to_string(graph).unwrap().contains("O2 (2."));
    let edges = fs::read_to_string(edges).unwrap();
    let lines: Vec<&str> = edges.lines().collect();
    assert_eq!(lines[0], "content,condition_a,condition_b,p_value,significant");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with(",O1,O2,"));
}

#[test]
fn per_content_analyses() {
    let dir = TempDir::new().unwrap();
    let mut text = fs::read_to_string(data("toy.csv")).unwrap();
    for k in 0..10 {
        text += &format!("q{k},1,Beach,O1,O2,{}\nq{k},1,Beach,O2,O4,{}\n", 1 + (k % 3 == 0) as u8, 1 + (k % 4 != 0) as u8);
    }
    let input = write_file(&dir, "two.csv", &text);
    let report = json_stdout(&jodscale(&["scale", "-i", input.to_str().unwrap(), "--per-content", "--bootstrap", "20"]));
    assert_valid(&report, "report.schema.json");
    let analyses = report["analyses"].as_array().unwrap();
    assert_eq!(analyses.len(), 2);
    assert_eq!(analyses[0]["content"], "Window");
    assert_eq!(analyses[1]["conditions"], serde_json::json!(["O1", "O2", "O4"]));
    assert_eq!(analyses[1]["observers"], 10);

    let pooled = json_stdout(&jodscale(&["scale", "-i", input.to_str().unwrap(), "--bootstrap", "0"]));
    assert_eq!(pooled["analyses"][0]["comparisons"], 110);
}

fn contrarian_dataset() -> (Vec<CountMatrix>, usize) {
    let config = SimConfig {
        observers: 15,
        seed: 3,
        ..Default::default()
    };
    let mut observers = simulate_experiment(&config, 0).unwrap();
    let mut anti = CountMatrix::zeros(5);
    for i in 0..5 {
        for j in i + 1..5 {
            // the true order has j above i; this observer always picks i
            anti.set(i, j, 3);
        }
    }
    observers.insert(6, anti);
    (observers, 6)
}

#[test]
fn contrarian_observer_heads_the_outlier_report() {
    let dir = TempDir::new().unwrap();
    let (observers, k) = contrarian_dataset();
    let input = write_file(&dir, "anti.csv", &trials_csv(&observers));
    let profile = dir.path().join("profile.csv");
    let report = json_stdout(&jodscale(&[
        "outliers", "-i", input.to_str().unwrap(), "--profile", profile.to_str().unwrap(),
    ]));
    assert_valid(&report, "outliers.schema.json");
    let o = &report["outliers"];
    assert_eq!(o["threshold"], 1.5);
    assert_eq!(o["observers"][0]["observer"], format!("obs{k:02}"));
    assert_eq!(o["observers"][0]["flagged"], true);
    let scores: Vec<f64> = o["observers"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["iqr_score"].as_f64().unwrap())
        .collect();
    assert!(scores.windows(2).all(|w| w[0] >= w[1]));

    let csv = fs::read_to_string(profile).unwrap();
    let mine: Vec<&str> = csv.lines().filter(|l| l.contains(",observer,")).collect();
    assert_eq!(mine.len(), 5);
    // picks the lowest condition every time it is shown
    assert!(mine[0].starts_with(&format!("obs{k:02},c0,observer,obs{k:02},1")));
    assert_eq!(csv.lines().filter(|l| l.contains(",population,")).count(), 5 * 15);
}

#[test]
fn identical_observers_are_never_flagged() {
    let dir = TempDir::new().unwrap();
    let m = CountMatrix::from_rows(&[[0u32, 1, 0], [2, 0, 1], [3, 2, 0]]).unwrap();
    let input = write_file(&dir, "same.csv", &trials_csv(&vec![m; 6]));
    let report = json_stdout(&jodscale(&["outliers", "-i", input.to_str().unwrap()]));
    for r in report["outliers"]["observers"].as_array().unwrap() {
        assert_eq!(r["iqr_score"], 0.0);
        assert_eq!(r["flagged"], false);
    }
}

#[test]
fn outlier_screening_inside_the_scale_report() {
    let dir = TempDir::new().unwrap();
    let (observers, k) = contrarian_dataset();
    let input = write_file(&dir, "anti.csv", &trials_csv(&observers));
    let report = json_stdout(&jodscale(&["scale", "-i", input.to_str().unwrap(), "--bootstrap", "0", "--outliers"]));
    assert_valid(&report, "report.schema.json");
    assert_eq!(report["analyses"][0]["outliers"]["observers"][0]["observer"], format!("obs{k:02}"));
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let header = "observer,session,scene,condition_1,condition_2,selection\n";

    assert_eq!(code(&jodscale(&["scale", "-i", "/nonexistent/trials.csv"])), 2);
    let bad_selection = write_file(&dir, "bad.csv", &format!("{header}1,1,s,a,b,3\n"));
    let out = jodscale(&["scale", "-i", bad_selection.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("row 2") && err.contains('3'), "{err}");

    let missing = write_file(&dir, "missing.csv", "observer,session,scene,condition_1,condition_2\n");
    let out = jodscale(&["scale", "-i", missing.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("selection"));

    assert_eq!(code(&jodscale(&["scale", "-i", &data("toy.csv"), "--alpha", "1.5"])), 2);
    assert_eq!(code(&jodscale(&["scale", "-i", &data("toy.csv"), "--sigma", "0"])), 2);
    assert_eq!(code(&jodscale(&["scale", "-i", &data("toy.csv"), "--reference", "nope"])), 2);
    assert_eq!(code(&jodscale(&["scale", "--bogus"])), 2);
    assert_eq!(code(&jodscale(&["outliers", "-i", &data("toy.csv"), "--profile", "/tmp/x.csv", "--profile-observer", "ghost"])), 2);

    // two disjoint pairs of conditions cannot share a scale
    let split = write_file(&dir, "split.csv", &format!("{header}1,1,s,a,b,1\n1,1,s,c,d,1\n2,1,s,a,b,2\n"));
    let out = jodscale(&["scale", "-i", split.to_str().unwrap(), "--bootstrap", "0"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("disconnected"));

    let few = write_file(&dir, "few.csv", &format!("{header}1,1,s,a,b,1\n2,1,s,a,b,2\n"));
    assert_eq!(code(&jodscale(&["outliers", "-i", few.to_str().unwrap()])), 1);

    let empty = write_file(&dir, "empty.csv", header);
    assert_eq!(code(&jodscale(&["scale", "-i", empty.to_str().unwrap()])), 1);
}

#[test]
fn single_run_simulation_leaves_spread_fields_empty() {
    let dir = TempDir::new().unwrap();
    let summary = dir.path().join("summary.json");
    let out = jodscale(&[
        "simulate", "--preset", "prior-benefit", "--runs", "1", "--ci-runs", "0",
        "--summary", summary.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = String::from_utf8(out.stdout).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 14);
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    for r in &rows {
        assert_eq!(r[col("runs")], "1");
        assert_eq!(r[col("effect_size")], "");
        assert_eq!(r[col("std_jod")], "");
        assert_eq!(r[col("mean_ci_size")], "");
    }
    let s: Value = serde_json::from_str(&fs::read_to_string(summary).unwrap()).unwrap();
    assert_eq!(s["points"].as_array().unwrap().len(), 14);
    assert!(s["points"][0]["metrics"]["effect_size"].is_null());
}

#[test]
fn simulation_config_file() {
    let dir = TempDir::new().unwrap();
    let config = write_file(
        &dir,
        "grid.toml",
        "[base]\nq_true = [0.0, 1.0, 2.0]\nruns = 20\nci_runs = 2\nci_bootstrap = 20\nseed = 4\n\n[grid]\nobservers = [5, 10]\nties = [false, true]\n",
    );
    let args = ["simulate", "--config", config.to_str().unwrap()];
    let out = jodscale(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = String::from_utf8(out.stdout.clone()).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.lines().nth(4).unwrap().starts_with("3,complete,10,3,0 1 2,true,"));
    assert_eq!(jodscale(&args).stdout, out.stdout);

    let typo = write_file(&dir, "typo.toml", "[grid]\nobsevers = [5]\n");
    assert_eq!(code(&jodscale(&["simulate", "--config", typo.to_str().unwrap()])), 2);
    let invalid = write_file(&dir, "invalid.toml", "[base]\nq_true = [1.0, 2.0]\n");
    assert_eq!(code(&jodscale(&["simulate", "--config", invalid.to_str().unwrap()])), 2);
    assert_eq!(code(&jodscale(&["simulate"])), 2);
}
