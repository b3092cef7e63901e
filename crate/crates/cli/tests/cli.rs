use std::path::PathBuf;
use std::process::{Command, Output};

use tricount_core::asm::parse_asm;
use tricount_core::bench::{parse_records, CSV_HEADER};

fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name)
}

fn tricount(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tricount"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn mult_prints_product_row() {
    let o = tricount(&["mult", "2", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let recs = parse_records(&stdout(&o)).unwrap();
    assert_eq!(recs.len(), 1);
    assert_eq!(recs[0].result, 6u64);
    assert_eq!(recs[0].max_counter_value, 364u64);
    assert!(stdout(&o).starts_with(CSV_HEADER));
}

#[test]
fn mult_probes_and_naive_mode() {
    let o = tricount(&["mult", "1", "1", "--mode", "naive", "--probes"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.lines().nth(1).unwrap().ends_with(",naive"));
    let loop3: Vec<&str> = text.lines().find(|l| l.starts_with("probe,loop3_end,")).unwrap().split(',').collect();
    assert_eq!(loop3[3], "16");
    assert_eq!(text.lines().filter(|l| l.starts_with("probe,")).count(), 5);
}

#[test]
fn mult_with_short_fuel_is_not_an_error() {
    let o = tricount(&["mult", "9", "9", "--fuel", "10"]);
    assert_eq!(o.status.code(), Some(0));
    let recs = parse_records(&stdout(&o)).unwrap();
    assert_eq!(recs[0].steps, 10);
}

#[test]
fn expand_emits_valid_assembly() {
    let path = corpus("mult.macro");
    let o = tricount(&["expand", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let p = parse_asm(&stdout(&o)).unwrap();
    assert_eq!(p.register_count, 3);
    assert!(p.validate().is_valid());
}

#[test]
fn run_assembly_file() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("add.cm");
    std::fs::write(&src, "loop: decjz 2 end\ninc 1\njmp loop\nend: halt\n").unwrap();
    let o = tricount(&["run", src.to_str().unwrap(), "2", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("counters,5,0,0\n"), "{text}");
    assert!(text.contains("steps,"));
}

#[test]
fn tm_sim_adds() {
    let path = corpus("add.tm");
    let o = tricount(&["tm-sim", path.to_str().unwrap(), "3", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let recs = parse_records(&stdout(&o)).unwrap();
    assert_eq!(recs[0].result, 4u64);
}

#[test]
fn tm_run_and_compile() {
    let path = corpus("div.tm");
    let o = tricount(&["tm-run", path.to_str().unwrap(), "7", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).lines().nth(1).unwrap().starts_with("3,"));
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("div.cm");
    let o = tricount(&["tm-compile", path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).is_empty());
    let p = parse_asm(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(p.probes.values().any(|n| n == "tmstep"));
    // The emitted assembly runs through `run` and leaves 7 div 2 in counter 1.
    let o = tricount(&["run", out.to_str().unwrap(), "7", "2"]);
    assert!(stdout(&o).starts_with("counters,3,0,0\n"));
}

#[test]
fn tm_run_reports_stuck_machines() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("stuck.tm");
    std::fs::write(&src, "alphabet: blank # 0 1\nstart: a\nhalt: h\na 1 -> h 1 R\n").unwrap();
    let o = tricount(&["tm-run", src.to_str().unwrap(), "0", "0"]);
    assert_eq!(o.status.code(), Some(1));
    let o = tricount(&["tm-sim", src.to_str().unwrap(), "0", "0"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn audit_reports_ok() {
    let path = corpus("add.tm");
    let o = tricount(&["audit", path.to_str().unwrap(), "3", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("ok"));
}

#[test]
fn bench_mult_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench.csv");
    let o = tricount(&[
        "bench-mult", "--x", "3", "--y", "2,4,8,16,32", "--fit", "y", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("slope"));
    let recs = parse_records(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(recs.len(), 5);
    assert!(recs.iter().all(|r| r.result == r.x.clone() * r.y.clone()));
}

#[test]
fn bench_mult_probe_rows_follow_records() {
    let o = tricount(&["bench-mult", "--x", "1..2", "--y", "1", "--probes"]);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], CSV_HEADER);
    assert!(lines[1].starts_with("1,1,"));
    assert!(lines[2].starts_with("probe,"));
    assert_eq!(parse_records(&text).unwrap().len(), 2);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(tricount(&["mult", "2"]).status.code(), Some(2));
    assert_eq!(tricount(&["mult", "2", "x"]).status.code(), Some(2));
    assert_eq!(tricount(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(tricount(&["mult", "2", "3", "--mode", "fast"]).status.code(), Some(2));
    assert_eq!(tricount(&["tm-run", "/nonexistent.tm", "1", "1"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cm");
    std::fs::write(&bad, "decjz 1 nowhere\nhalt\n").unwrap();
    assert_eq!(tricount(&["run", bad.to_str().unwrap()]).status.code(), Some(2));
}
