use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn escape(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_escape")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, body).unwrap();
    path
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn measure_examples() {
    let dir = TempDir::new().unwrap();
    for (body, expected) in [("0\n10\n", "3/4"), ("", "0/1"), ("λ\n", "1/1"), (".kind family\n1 0\n", "1/2")] {
        let path = write(&dir, "set.txt", body);
        let out = escape(&["measure", arg(&path)]);
        assert_eq!(out.status.code(), Some(0));
        let row = stdout(&out).lines().nth(1).unwrap().to_string();
        assert_eq!(row.split(',').nth(2), Some(expected), "{row}");
    }
}

#[test]
fn measure_parse_error_is_usage() {
    let dir = TempDir::new().unwrap();
    let path = write(&dir, "bad.txt", "01x\n");
    assert_eq!(escape(&["measure", arg(&path)]).status.code(), Some(2));
    assert_eq!(escape(&["measure", "/nonexistent/set.txt"]).status.code(), Some(2));
}

#[test]
fn dlog_exact_values() {
    for (n, num, den) in [("2", "5", "12"), ("3", "6", "35")] {
        let out = escape(&["dlog", "--prog", "const_guess(0)", "--n", n]);
        assert_eq!(out.status.code(), Some(0));
        let text = stdout(&out);
        assert!(text.starts_with("program,n,modulus,success_num,success_den,success_decimal,m"));
        let cells: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
        assert_eq!(&cells[..5], &["const_guess(0)", n, "avg", num, den]);
    }
}

#[test]
fn sampling_needs_a_seed_and_is_deterministic() {
    let out = escape(&["dlog", "--prog", "const_guess(0)", "--n", "5", "--mode", "sample"]);
    assert_eq!(out.status.code(), Some(2));
    let args = ["dlog", "--prog", "linear_search(3)", "--n", "4", "--mode", "sample", "--seed", "7", "--samples", "20"];
    let a = escape(&args);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(stdout(&a), stdout(&escape(&args)));
}

#[test]
fn exhaustive_beyond_cap_and_unknown_programs_are_refused() {
    assert_eq!(escape(&["dlog", "--prog", "const_guess(0)", "--n", "4"]).status.code(), Some(2));
    assert_eq!(escape(&["cdh", "--prog", "no_such_program", "--n", "2"]).status.code(), Some(2));
}

#[test]
fn assembly_files_and_json_output() {
    let dir = TempDir::new().unwrap();
    let prog = write(&dir, "guess.asm", ".name zero\nout_int 0\n");
    let out = escape(&["dlog", "--prog", arg(&prog), "--n", "2", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let rows: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rows[0]["program"], "zero");
    assert_eq!(rows[0]["success_num"], "5");
    assert_eq!(rows[0]["success_den"], "12");
}

#[test]
fn audit_reports_bound_and_fails_when_exceeded() {
    let ok = escape(&["audit", "--prog", "linear_search(2)", "--n", "3", "--modulus", "7", "--C", "4"]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(stdout(&ok).lines().nth(1).unwrap().ends_with("true"));
    assert!(String::from_utf8_lossy(&ok.stderr).contains("minimal_shoup_constant"));
    // Success 3/7 against the bound (1/16)·4/7.
    let bad = escape(&["audit", "--prog", "linear_search(2)", "--n", "3", "--modulus", "7", "--C", "1/16"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn diagonalize_finite_sets() {
    let dir = TempDir::new().unwrap();
    let set = write(&dir, "s.txt", "00\n01\n10\n");
    let transcript = dir.path().join("t.csv");
    let out = escape(&["diagonalize", "--set", arg(&set), "--depth", "2", "--out", arg(&transcript)]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(&transcript).unwrap();
    assert!(text.lines().last().unwrap().ends_with(",11"), "{text}");
    assert!(text.contains("prefix: 11"));

    let full = write(&dir, "full.txt", "0\n1\n");
    let refused = escape(&["diagonalize", "--set", arg(&full), "--depth", "2"]);
    assert_eq!(refused.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&refused.stderr).contains("measure 1"));

    let empty = write(&dir, "empty.txt", "");
    let out = escape(&["diagonalize", "--set", arg(&empty), "--depth", "3", "--mode", "approx"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("prefix: 000"));
}

#[test]
fn diagonalize_family_set_json() {
    let dir = TempDir::new().unwrap();
    let set = write(&dir, "f.txt", ".kind family\n0 1\n");
    let out = escape(&["diagonalize", "--set", arg(&set), "--depth", "1", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["prefix"], "1 0");
    assert_eq!(doc["verified"], true);
}

#[test]
fn pipeline_default_schedule_is_vacuous() {
    let out = escape(&["diagonalize", "--pipeline", "ggm", "--depth", "2"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("all materialised constraint sets are empty"));
    assert!(stdout(&out).contains("initial_measure: 0"));
}

#[test]
fn pipeline_schedule_file_is_an_f_table() {
    let dir = TempDir::new().unwrap();
    let sparse = write(&dir, "sparse.txt", "1,2 = 1\n");
    let spec = format!("file:{}", arg(&sparse));
    let out = escape(&["diagonalize", "--pipeline", "ggm", "--depth", "1", "--schedule", &spec]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no entry"));

    // Every (i, 2d) reached by the first 64 pairs. Any f gives g(m) ≥ 4 > horizon 3.
    let mut body = String::new();
    for k in 1..=12 {
        for d in (2..=30).step_by(2) {
            body.push_str(&format!("{k},{d} = 1\n"));
        }
    }
    let full = write(&dir, "full.txt", &body);
    let spec = format!("file:{}", arg(&full));
    let out = escape(&["diagonalize", "--pipeline", "ggm", "--depth", "1", "--schedule", &spec]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("all materialised constraint sets are empty"));
}

#[test]
fn schedule_and_bounds() {
    let out = escape(&["schedule", "--k", "1", "--d", "2", "--C", "1"]);
    assert_eq!(stdout(&out), "k,d,C,f\n1,2,1,25\n");
    let out = escape(&["schedule", "--m", "1", "--m", "2", "--schedule", "compressed"]);
    assert_eq!(stdout(&out), "m,i,d,g\n1,1,2,2\n2,2,2,3\n");
    assert_eq!(escape(&["schedule", "--k", "1"]).status.code(), Some(2));

    let tail = escape(&["bounds", "tail", "--n", "1", "--d", "2"]);
    assert_eq!(tail.status.code(), Some(0));
    assert!(stdout(&tail).contains("holds"));
    let power = escape(&["bounds", "power", "--d", "4", "--to", "100"]);
    assert!(stdout(&power).contains("holds"));
    let markov = escape(&["bounds", "markov", "--values", "1/2,1/4,1", "--epsilon", "1/2", "--alpha", "2"]);
    assert_eq!(markov.status.code(), Some(0));
    assert_eq!(escape(&["bounds", "tail", "--n", "1", "--d", "1"]).status.code(), Some(2));
}
