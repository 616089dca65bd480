use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn crashlens(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crashlens"))
        .args(args)
        .env("CRASHLENS_NO_COLOR", "1")
        .output()
        .expect("binary runs")
}

fn core_path(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core").join(rel)
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Synthesizes the default dataset with seed 42 into `dir/records.csv`.
fn synth(dir: &Path) -> PathBuf {
    let out = dir.join("records.csv");
    let profile = core_path("data/maids2000.profile");
    let run = crashlens(&["synth", "--profile", s(&profile), "--seed", "42", "--out", s(&out)]);
    assert!(run.status.success(), "{}", text(&run.stderr));
    assert_eq!(text(&run.stdout).trim(), format!("wrote 921 synthetic records to {}", out.display()));
    out
}

/// Copies the records with the `mais` of data row `row` (1-based) set out of range.
fn corrupt(records: &Path, row: usize) -> PathBuf {
    let original = std::fs::read_to_string(records).unwrap();
    let lines: Vec<String> = original
        .lines()
        .enumerate()
        .map(|(i, line)| {
            if i != row {
                return line.to_string();
            }
            let mut cells: Vec<&str> = line.split(',').collect();
            cells[2] = "9";
            cells.join(",")
        })
        .collect();
    let path = records.with_file_name("corrupt.csv");
    std::fs::write(&path, lines.join("\n") + "\n").unwrap();
    path
}

fn analyze(records: &Path, report_dir: &Path, format: &str) -> Output {
    crashlens(&[
        "analyze",
        "--records",
        s(records),
        "--report-dir",
        s(report_dir),
        "--report-format",
        format,
    ])
}

#[test]
fn synth_then_analyze_reproduces_golden_reports() {
    let dir = TempDir::new().unwrap();
    let records = synth(dir.path());
    for format in ["csv", "md"] {
        let out = dir.path().join(format);
        let run = analyze(&records, &out, format);
        assert!(run.status.success(), "{}", text(&run.stderr));
        assert!(text(&run.stdout).starts_with("921 records, 803 in the study population (665 selected, 138 other)"));
        let mut names: Vec<_> = std::fs::read_dir(&out)
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        names.sort();
        assert!(!names.is_empty());
        for name in names {
            let golden = std::fs::read_to_string(core_path("tests/golden").join(&name))
                .unwrap_or_else(|_| panic!("no golden file for {name}"));
            assert_eq!(std::fs::read_to_string(out.join(&name)).unwrap(), golden, "{name}");
        }
    }
}

#[test]
fn json_report_carries_counts() {
    let dir = TempDir::new().unwrap();
    let records = synth(dir.path());
    let out = dir.path().join("json");
    assert!(analyze(&records, &out, "json").status.success());
    let json = std::fs::read_to_string(out.join("report.json")).unwrap();
    assert!(json.ends_with("}\n"));
    assert!(json.contains("\"n_study_population\": 803"));
}

#[test]
fn jsonl_records_analyze_like_csv() {
    let dir = TempDir::new().unwrap();
    let records = synth(dir.path());
    let jsonl = dir.path().join("records.jsonl");
    let run = crashlens(&["ingest", "--input", s(&records), "--format", "csv", "--out", s(&jsonl)]);
    assert!(run.status.success(), "{}", text(&run.stderr));
    let (a, b) = (dir.path().join("from_csv"), dir.path().join("from_jsonl"));
    assert!(analyze(&records, &a, "csv").status.success());
    assert!(analyze(&jsonl, &b, "csv").status.success());
    for entry in std::fs::read_dir(&a).unwrap() {
        let name = entry.unwrap().file_name();
        assert_eq!(std::fs::read(a.join(&name)).unwrap(), std::fs::read(b.join(&name)).unwrap());
    }
}

#[test]
fn analyze_refuses_rejected_rows() {
    let dir = TempDir::new().unwrap();
    let bad = corrupt(&synth(dir.path()), 3);
    let out = dir.path().join("report");
    let run = analyze(&bad, &out, "csv");
    assert_eq!(run.status.code(), Some(1));
    let err = text(&run.stderr);
    assert!(err.contains("row 3: mais"), "{err}");
    assert!(!out.exists());
}

#[test]
fn ingest_skips_or_refuses_rejected_rows() {
    let dir = TempDir::new().unwrap();
    let bad = corrupt(&synth(dir.path()), 5);
    let out = dir.path().join("clean.csv");

    let lenient = crashlens(&["ingest", "--input", s(&bad), "--format", "csv", "--out", s(&out)]);
    assert!(lenient.status.success());
    assert!(text(&lenient.stderr).contains("skipped row 5"));
    assert!(text(&lenient.stdout).contains("wrote 920 records"));
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 921);

    let strict_out = dir.path().join("strict.csv");
    let strict = crashlens(&["ingest", "--input", s(&bad), "--format", "csv", "--strict", "--out", s(&strict_out)]);
    assert_eq!(strict.status.code(), Some(1));
    assert!(text(&strict.stderr).contains("row 5: mais"));
    assert!(!strict_out.exists());
}

#[test]
fn verify_prints_a_line_per_check() {
    let dir = TempDir::new().unwrap();
    let records = synth(dir.path());
    let profile = core_path("data/maids2000.profile");
    let run = crashlens(&["verify", "--records", s(&records), "--expect", s(&profile)]);
    assert_eq!(run.status.code(), Some(0), "{}", text(&run.stdout));
    let stdout = text(&run.stdout);
    let lines: Vec<&str> = stdout.lines().collect();
    let (summary, checks) = lines.split_last().unwrap();
    assert!(checks.iter().all(|l| l.starts_with("PASS ")));
    assert_eq!(*summary, format!("{} checks, 0 failed", checks.len()));
    assert!(!stdout.contains('\x1b'));
}

#[test]
fn verify_fails_on_a_different_dataset() {
    let dir = TempDir::new().unwrap();
    let records = dir.path().join("large.csv");
    let profile = core_path("data/maids2000.profile");
    let run = crashlens(&[
        "synth", "--profile", s(&profile), "--seed", "1", "--total", "8030", "--out", s(&records),
    ]);
    assert!(run.status.success(), "{}", text(&run.stderr));
    let run = crashlens(&["verify", "--records", s(&records), "--expect", s(&profile)]);
    assert_eq!(run.status.code(), Some(1));
    assert!(text(&run.stdout).lines().any(|l| l.starts_with("FAIL population: ")));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let run = crashlens(&["analyze", "--bogus"]);
    assert_eq!(run.status.code(), Some(2));
    let err = text(&run.stderr);
    assert!(err.contains("--bogus"));
    assert!(err.contains("Usage:"));
    assert!(!err.contains('\x1b'));
    assert!(run.stdout.is_empty());
}

#[test]
fn missing_input_is_a_data_error() {
    let dir = TempDir::new().unwrap();
    let run = analyze(&dir.path().join("absent.csv"), &dir.path().join("out"), "csv");
    assert_eq!(run.status.code(), Some(1));
    assert!(text(&run.stderr).starts_with("error: cannot open"));
}

#[test]
fn custom_rulebook_must_keep_the_grouping() {
    let dir = TempDir::new().unwrap();
    let records = synth(dir.path());
    let book = std::fs::read_to_string(core_path("data/table_a1.rulebook"))
        .unwrap()
        .replace("ptw_impacting_rear_of_ov = RE_SD", "ptw_impacting_rear_of_ov = OTHER");
    let path = dir.path().join("edited.rulebook");
    std::fs::write(&path, book).unwrap();
    let run = crashlens(&[
        "verify", "--records", s(&records), "--expect", s(&core_path("data/maids2000.profile")),
        "--rulebook", s(&path),
    ]);
    assert_eq!(run.status.code(), Some(1));
    assert!(text(&run.stderr).contains("RE_SD has 0 source configurations, expected 1"), "{}", text(&run.stderr));
}
