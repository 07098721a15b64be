use std::path::Path;
use std::process::{Command, Output};
use tempfile::TempDir;

fn rwelect(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rwelect")).args(args).current_dir(dir).output().expect("spawn rwelect")
}

fn ok(args: &[&str], dir: &Path) -> String {
    let out = rwelect(args, dir);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn json(args: &[&str], dir: &Path) -> serde_json::Value {
    serde_json::from_str(&ok(args, dir)).unwrap()
}

fn header(path: &Path) -> (usize, usize) {
    let text = std::fs::read_to_string(path).unwrap();
    let line = text.lines().find(|l| l.starts_with("graph ")).unwrap();
    let mut t = line.split_whitespace().skip(1).map(|x| x.parse().unwrap());
    (t.next().unwrap(), t.next().unwrap())
}

#[test]
fn generate_hypercube_writes_eight_nodes() {
    let dir = TempDir::new().unwrap();
    ok(&["generate", "--family", "hypercube", "--d", "3", "--out", "q3.txt"], dir.path());
    assert_eq!(header(&dir.path().join("q3.txt")), (8, 12));
}

#[test]
fn generate_lower_bound_family() {
    let dir = TempDir::new().unwrap();
    ok(&["generate", "--family", "lower-bound", "--n", "256", "--alpha", "0.0625", "--seed", "2", "--out", "lb.txt"], dir.path());
    assert_eq!(header(&dir.path().join("lb.txt")).0, 256);
}

#[test]
fn generated_file_survives_a_round_trip() {
    let dir = TempDir::new().unwrap();
    let text = ok(&["generate", "--family", "random-regular", "--n", "30", "--d", "4", "--seed", "9"], dir.path());
    let g = rwelect::graph::read_graph(&text).unwrap();
    assert_eq!(rwelect::graph::write_graph(&g), text);
}

#[test]
fn runs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    ok(&["generate", "--family", "hypercube", "--d", "6", "--out", "q6.txt"], dir.path());
    let args = ["run", "--graph", "q6.txt", "--seed", "3", "--max-phases", "4"];
    assert_eq!(ok(&args, dir.path()), ok(&args, dir.path()));
    let v = json(&args, dir.path());
    assert_eq!(v["n"], 64);
    assert!(v["total_units"].as_u64().unwrap() > 0);
}

#[test]
fn null_protocol_sends_nothing() {
    let dir = TempDir::new().unwrap();
    ok(&["generate", "--family", "clique", "--n", "10", "--out", "k.txt"], dir.path());
    let v = json(&["run", "--graph", "k.txt", "--protocol", "null"], dir.path());
    assert_eq!(v["total_units"], 0);
    assert_eq!(v["rounds"], 0);
    let csv = ok(&["run", "--graph", "k.txt", "--protocol", "null", "--format", "csv"], dir.path());
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "graph,n,m,seed,mode,rounds,total_units,outcome");
    assert!(lines.next().unwrap().contains(",10,45,"));
}

#[test]
fn explicit_runs_report_the_broadcast() {
    let dir = TempDir::new().unwrap();
    ok(&["generate", "--family", "hypercube", "--d", "8", "--out", "q8.txt"], dir.path());
    let mut found = false;
    for seed in 0..4 {
        let s = seed.to_string();
        let v = json(&["run", "--graph", "q8.txt", "--seed", &s, "--explicit", "--max-phases", "9", "--trace", "t.jsonl"], dir.path());
        assert!(dir.path().join("t.jsonl").exists());
        if v["outcome"] == "unique_leader" {
            assert_eq!(v["broadcast"]["all_informed"], true);
            assert_eq!(v["all_know_leader"], true);
            found = true;
        }
    }
    assert!(found);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = TempDir::new().unwrap();
    ok(&["generate", "--family", "ring", "--n", "12", "--out", "r.txt"], dir.path());
    std::fs::write(dir.path().join("c.json"), r#"{"protocol": "null", "seed": 5}"#).unwrap();
    let v = json(&["run", "--graph", "r.txt", "--config", "c.json", "--seed", "8"], dir.path());
    assert_eq!(v["seed"], 8);
    assert_eq!(v["total_units"], 0);
    std::fs::write(dir.path().join("bad.json"), r#"{"sed": 5}"#).unwrap();
    assert!(!rwelect(&["run", "--graph", "r.txt", "--config", "bad.json"], dir.path()).status.success());
}

#[test]
fn parse_errors_name_the_line() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("bad.txt"), "graph 2 1\nnode 0 -\nedge 0 1 x 1\n").unwrap();
    let out = rwelect(&["run", "--graph", "bad.txt"], dir.path());
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn analyze_reports_the_sandwich() {
    let dir = TempDir::new().unwrap();
    ok(&["generate", "--family", "hypercube", "--d", "4", "--out", "q4.txt"], dir.path());
    let v = json(&["analyze", "q4.txt"], dir.path());
    assert_eq!(v["n"], 16);
    assert!(v["t_mix"].as_u64().unwrap() > 0);
}

#[test]
fn experiment_sweep_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let spec = r#"{
        "name": "sweep",
        "graphs": [
            {"family": "hypercube", "d": 5},
            {"family": "clique", "n": 24},
            {"family": "random_regular", "n": 40, "d": 4, "seed": 1}
        ],
        "settings": {"max_phases": 4},
        "seed_count": 5,
        "tmix_max_n": 30
    }"#;
    std::fs::write(dir.path().join("spec.json"), spec).unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        std::fs::create_dir(out).unwrap();
        ok(&["experiment", "spec.json", "--out-dir", out.to_str().unwrap()], dir.path());
    }
    let a = std::fs::read_to_string(out_a.join("sweep.csv")).unwrap();
    assert_eq!(a, std::fs::read_to_string(out_b.join("sweep.csv")).unwrap());
    assert!(out_a.join("sweep.json").exists());
    let mut rd = csv::Reader::from_reader(a.as_bytes());
    let cols: Vec<String> = rd.headers().unwrap().iter().map(str::to_owned).collect();
    let t_mix = cols.iter().position(|c| c == "t_mix").unwrap();
    let rows: Vec<csv::StringRecord> = rd.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 15);
    for r in &rows {
        let n: usize = r[1].parse().unwrap();
        assert_eq!(r[t_mix].is_empty(), n > 30, "{r:?}");
    }
}
