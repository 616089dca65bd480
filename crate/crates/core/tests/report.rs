use std::path::PathBuf;

use crashlens::classify::ConfigRulebook;
use crashlens::model::MergedConfig;
use crashlens::report::{analyze, render, write_files, RenderError, ReportBundle, ReportFormat, TOTAL};
use crashlens::skills::{SkillRulebook, Thresholds};
use crashlens::stats::Share;
use crashlens::synth::{generate, MarginalProfile};

fn bundle(seed: u64) -> ReportBundle {
    let records = generate(&MarginalProfile::default_profile(), seed).unwrap();
    analyze(
        records,
        &ConfigRulebook::table_a1(),
        &SkillRulebook::default_rules(),
        &Thresholds::default(),
    )
}

fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// Set UPDATE_GOLDEN=1 to rewrite the files after an intended layout change.
#[test]
fn rendered_reports_match_golden_files() {
    let b = bundle(42);
    let mut files = render(&b, ReportFormat::Csv);
    files.extend(render(&b, ReportFormat::Markdown));
    let dir = golden_dir();
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        write_files(&dir, &files).unwrap();
    }
    for f in &files {
        let want = std::fs::read_to_string(dir.join(&f.name))
            .unwrap_or_else(|e| panic!("missing golden file {}: {e}", f.name));
        assert_eq!(f.contents, want, "{} differs from its golden copy", f.name);
    }
}

#[test]
fn table1_layout() {
    let files = render(&bundle(42), ReportFormat::Csv);
    let t1 = &files.iter().find(|f| f.name == "table1_frequency.csv").unwrap().contents;
    let mut lines = t1.lines();
    assert_eq!(lines.next(), Some("config,total_pct,severe_pct,nonsevere_pct,l3_pct,l1_pct"));
    assert_eq!(lines.next(), Some("SCP_LD,16.9,14.3,17.8,13.9,21.6"));
    assert_eq!(t1.lines().last(), Some("N,803,182,618,483,320"));
}

#[test]
fn json_round_trip_is_lossless() {
    let b = bundle(8);
    let json = &render(&b, ReportFormat::Json)[0];
    assert_eq!(json.name, "report.json");
    let back: ReportBundle = serde_json::from_str(&json.contents).unwrap();
    assert_eq!(back, b);
}

#[test]
fn percentages_are_recomputable_from_json_counts() {
    let b = bundle(8);
    let back: ReportBundle = serde_json::from_str(&render(&b, ReportFormat::Json)[0].contents).unwrap();
    let csv = render(&b, ReportFormat::Csv);
    let factors = &csv.iter().find(|f| f.name == "factors.csv").unwrap().contents;
    let mut lines = factors.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    for line in lines.filter(|l| !l.starts_with("N,")) {
        let cells: Vec<&str> = line.split(',').collect();
        for (col, cell) in header.iter().zip(&cells).skip(1) {
            let share = back.factors.share(cells[0], col).unwrap();
            assert_eq!(share.to_string(), *cell, "{} {col}", cells[0]);
        }
    }
    let t1 = back.frequency_column("severe").unwrap();
    let scp = t1.row(MergedConfig::ScpLd).unwrap();
    assert_eq!(Share::new(scp.count, t1.column_n).to_string(), "14.3");
}

#[test]
fn rendering_is_pure() {
    let b = bundle(3);
    for format in [ReportFormat::Csv, ReportFormat::Markdown, ReportFormat::Json] {
        assert_eq!(render(&b, format), render(&b.clone(), format));
    }
    assert_eq!(bundle(3), b);
}

#[test]
fn every_table_carries_its_n() {
    let b = bundle(42);
    assert_eq!(b.factors.column(TOTAL).unwrap().n, 665);
    assert_eq!(b.evasive_actions.column(TOTAL).unwrap().n, 576);
    assert_eq!(b.evasive_selection.column(TOTAL).unwrap().n, 374);
    let total = b.speed_time_row(TOTAL).unwrap();
    assert_eq!((total.posted_speed.n, total.impact_speed.n, total.tpei.n), (658, 664, 652));
    assert_eq!(total.speeding.total, 657);
}

#[test]
fn unwritable_destination_is_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let files = render(&ReportBundle::default(), ReportFormat::Json);
    let err = write_files(&blocker.join("out"), &files).unwrap_err();
    let RenderError::Io { path, .. } = &err;
    assert!(path.starts_with(&blocker));
    assert!(err.to_string().starts_with("cannot write "));
}

#[test]
fn empty_dataset_still_renders() {
    let mut profile = MarginalProfile::default_profile();
    profile.total_n = 0;
    profile.exclusions = Default::default();
    let records = generate(&profile, 1).unwrap();
    let b = analyze(records, &ConfigRulebook::table_a1(), &SkillRulebook::default_rules(), &Thresholds::default());
    assert!(b.profiles.is_empty());
    let files = render(&b, ReportFormat::Csv);
    let skills = files.iter().find(|f| f.name == "skills.csv").unwrap();
    assert_eq!(skills.contents.lines().count(), 1);
}
