use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn rodeo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rodeo")).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).display().to_string()
}

/// Synthetic targets written to `targets.json`.
fn synth(dir: &TempDir, images: &str) -> String {
    let t = path(dir, "targets.json");
    stdout(&rodeo(&["synth", "--images", images, "--classes", "4", "--seed", "3", "--output", &t]));
    t
}

#[test]
fn perfect_oracle_scores_one_everywhere() {
    let dir = TempDir::new().unwrap();
    let t = synth(&dir, "30");
    // targets carry no confidence, so AP is off when they echo back
    let table = stdout(&rodeo(&["evaluate", "--targets", &t, "--predictions", &t, "--per-class", "--no-ap", "--acc-thresholds", "30,50"]));
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0].split_whitespace().collect::<Vec<_>>(), ["class", "RoDeO", "loc", "shape", "cls", "acc@30", "acc@50"]);
    assert_eq!(lines.len(), 6);
    for line in &lines[1..] {
        assert!(line.split_whitespace().skip(1).all(|c| c == "1.0000"), "{line}");
    }

    let grid = path(&dir, "identity.json");
    fs::write(&grid, r#"{"runs": 1, "metrics": ["rodeo", "rodeo_loc", "rodeo_shape", "rodeo_cls", "acc@30", "ap@30", "map"]}"#).unwrap();
    let table = stdout(&rodeo(&["sweep", "--targets", &t, "--grid", &grid]));
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "metric,mean,std,runs");
    assert_eq!(lines.len(), 8);
    for line in &lines[1..] {
        assert!(line.ends_with(",1,0,1"), "{line}");
    }
}

#[test]
fn json_output_and_output_file() {
    let dir = TempDir::new().unwrap();
    let t = synth(&dir, "10");
    let out = path(&dir, "report.json");
    let o = rodeo(&["evaluate", "--targets", &t, "--predictions", &t, "--no-ap", "--json", "-o", &out]);
    assert!(stdout(&o).is_empty());
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(doc["total"]["metrics"]["rodeo"], 1.0);
    assert_eq!(doc["total"]["metrics"]["acc@30"], 1.0);
    assert!(doc.get("classes").is_none());
    assert!(doc["map_thresholds"].is_null());
}

#[test]
fn failures_exit_nonzero_with_message() {
    let dir = TempDir::new().unwrap();
    let t = synth(&dir, "5");
    let o = rodeo(&["evaluate", "--targets", &t, "--predictions", &t]);
    assert!(!o.status.success());
    assert!(o.stdout.is_empty());
    assert!(String::from_utf8_lossy(&o.stderr).contains("--no-ap"));

    let bad = path(&dir, "bad.json");
    fs::write(&bad, r#"{"schema_version": "1.0", "classes": ["a"], "images": [{"image_id": "i", "boxes": [{"class": "q", "x": 1, "y": 1, "w": 1, "h": 1}]}]}"#).unwrap();
    let o = rodeo(&["evaluate", "--targets", &bad, "--predictions", &bad]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("images[0].boxes[0]") && err.contains("vocabulary is [a]"), "{err}");

    let o = rodeo(&["evaluate", "--targets", &path(&dir, "missing.json"), "--predictions", &t]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing.json"));
}

#[test]
fn grid_errors_point_at_the_key() {
    let dir = TempDir::new().unwrap();
    let t = synth(&dir, "5");
    let grid = path(&dir, "grid.json");
    fs::write(&grid, r#"{"axes": [{"parameter": "sigma_pos", "values": [0.5, -1]}]}"#).unwrap();
    let o = rodeo(&["sweep", "--targets", &t, "--grid", &grid]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("axes[0].values[1]"));

    fs::write(&grid, r#"{"metrics": ["rodeo", "f1"]}"#).unwrap();
    let o = rodeo(&["sweep", "--targets", &t, "--grid", &grid]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("metrics[1]"));
}

const UNDERPREDICTION: &str = r#"{
    "runs": 5,
    "metrics": ["rodeo", "acc@50", "ap@50"],
    "base": {"sigma_pos": 0.5},
    "axes": [{"parameter": "p_underpred", "values": [0, 0.25, 0.5, 0.75, 1]}]
}"#;

fn column(table: &str, metric: &str) -> Vec<f64> {
    table
        .lines()
        .skip(1)
        .filter_map(|l| {
            let c: Vec<&str> = l.split(',').collect();
            (c[1] == metric).then(|| c[2].parse().unwrap())
        })
        .collect()
}

#[test]
fn sweep_is_deterministic_and_follows_underprediction() {
    let dir = TempDir::new().unwrap();
    let t = synth(&dir, "200");
    let grid = path(&dir, "grid.json");
    fs::write(&grid, UNDERPREDICTION).unwrap();
    let (a, b) = (path(&dir, "a.csv"), path(&dir, "b.csv"));
    let summary = path(&dir, "summary.csv");
    stdout(&rodeo(&["sweep", "--targets", &t, "--grid", &grid, "--seed", "11", "-o", &a, "--summary", &summary]));
    stdout(&rodeo(&["sweep", "--targets", &t, "--grid", &grid, "--seed", "11", "-o", &b]));
    let table = fs::read_to_string(&a).unwrap();
    assert_eq!(table, fs::read_to_string(&b).unwrap());
    assert!(table.starts_with("p_underpred,metric,mean,std,runs\n"));
    assert_eq!(table.lines().count(), 1 + 5 * 3);

    let acc = column(&table, "acc@50");
    assert!(acc.windows(2).all(|w| w[1] >= w[0]), "{acc:?}");
    let other = stdout(&rodeo(&["sweep", "--targets", &t, "--grid", &grid, "--seed", "12"]));
    assert_ne!(other, table);

    let summary = fs::read_to_string(&summary).unwrap();
    assert!(summary.starts_with("parameter,value,metric,mean,min,max,points\n"));
    assert_eq!(summary.lines().count(), 1 + 5 * 3);
}

fn report(dir: &TempDir, table: &str, extra: &[&str]) -> String {
    let input = path(dir, "table.csv");
    fs::write(&input, table).unwrap();
    let mut args = vec!["report", "--input", &input];
    args.extend_from_slice(extra);
    stdout(&rodeo(&args))
}

#[test]
fn report_reshapes_to_long_format() {
    let dir = TempDir::new().unwrap();
    let header = "point,parameter,value,metric,mean,std,runs\n";
    assert_eq!(report(&dir, "sigma_pos,metric,mean,std,runs\n", &[]), header);

    let one = "sigma_pos,metric,mean,std,runs\n0.5,rodeo,0.7,0.01,5\n0.5,acc@50,0.6,0.02,5\n0.5,map,0.4,0.03,5\n";
    let long = report(&dir, one, &[]);
    assert_eq!(
        long,
        format!("{header}0,sigma_pos,0.5,rodeo,0.7,0.01,5\n0,sigma_pos,0.5,acc@50,0.6,0.02,5\n0,sigma_pos,0.5,map,0.4,0.03,5\n")
    );

    let two_axes = "sigma_pos,p_underpred,metric,mean,std,runs\n\
                    0.5,0,rodeo,0.9,0.1,5\n0.5,0,map,0.8,0.1,5\n\
                    0.5,0.5,rodeo,0.6,0.2,5\n0.5,0.5,map,0.7,0.05,5\n\
                    1,0,rodeo,0.5,0,5\n1,0,map,0.3,0,5\n";
    let long = report(&dir, two_axes, &[]);
    assert_eq!(long.lines().count(), 1 + 6 * 2);
    assert_eq!(report(&dir, &long, &["--wide"]), two_axes);
    assert_eq!(report(&dir, &report(&dir, one, &[]), &["--wide"]), one);

    let no_axes = "metric,mean,std,runs\nrodeo,1,0,1\n";
    assert_eq!(report(&dir, &report(&dir, no_axes, &[]), &["--wide"]), no_axes);
}

#[test]
fn convert_between_formats() {
    let dir = TempDir::new().unwrap();
    let t = synth(&dir, "8");
    let csv = path(&dir, "t.csv");
    stdout(&rodeo(&["convert", "--input", &t, "--to", "csv", "-o", &csv]));
    let names = "class_0,class_1,class_2,class_3";
    let back = stdout(&rodeo(&["convert", "--input", &csv, "--to", "canonical-json", "--classes", names]));
    assert_eq!(back, fs::read_to_string(&t).unwrap());
    // without a vocabulary the classes come from the rows
    let guessed = stdout(&rodeo(&["convert", "--input", &csv, "--to", "canonical-json"]));
    assert!(!guessed.contains("class_2"));
    assert!(Path::new(&csv).exists());
}
