//! Reading and writing crash-record files, and study-population selection.
//!
//! Two formats share one schema: CSV with an exact header row, and JSON lines
//! with one flat object per record using the same field names. Empty CSV cells
//! and JSON `null` (or absent keys) mean missing.

use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::classify::{classify, ConfigRulebook};
use crate::model::{
    validate_record, Actor, Alignment, ContributingFactor, CrashRecord, EvasiveAction,
    EvasiveResponse, FactorDetail, MaidsConfig, MergedConfig, PtwClass, Quality, Stage,
};

pub const COLUMNS: [&str; 16] = [
    "case_id",
    "ptw_class",
    "mais",
    "maids_config",
    "factor_actor",
    "factor_stage",
    "factor_detail",
    "evasive_action",
    "evasive_selection",
    "evasive_execution",
    "alignment",
    "posted_speed_kmh",
    "impact_speed_kmh",
    "tpei_s",
    "rider_impairment_primary",
    "mechanical_primary",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    JsonLines,
}

impl FromStr for Format {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "jsonl" | "json_lines" | "jsonlines" => Ok(Format::JsonLines),
            _ => Err(IngestError::UnknownFormat(s.to_string())),
        }
    }
}

impl Format {
    /// Guesses the format from a file extension; anything but `.jsonl` is CSV.
    pub fn from_path(path: &std::path::Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("jsonl") => Format::JsonLines,
            _ => Format::Csv,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("cannot read input: {0}")]
    Io(#[from] std::io::Error),
    #[error("unknown format {0:?} (expected csv or jsonl)")]
    UnknownFormat(String),
    #[error("header mismatch: expected [{}], found [{}]", COLUMNS.join(","), .0.join(","))]
    HeaderMismatch(Vec<String>),
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("{} row(s) rejected:\n{}", .0.len(), crate::token::join(.0, "\n"))]
    Rejected(Vec<RejectedRow>),
}

/// A row that could not become a record. `row` counts data rows from 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectedRow {
    pub row: usize,
    pub reason: String,
}

impl fmt::Display for RejectedRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "row {}: {}", self.row, self.reason)
    }
}

#[derive(Debug, Default)]
pub struct ParseOutcome {
    pub records: Vec<CrashRecord>,
    pub rejects: Vec<RejectedRow>,
}

impl ParseOutcome {
    /// Strict mode: any rejected row fails the whole batch.
    pub fn strict(self) -> Result<Vec<CrashRecord>, IngestError> {
        if self.rejects.is_empty() {
            Ok(self.records)
        } else {
            Err(IngestError::Rejected(self.rejects))
        }
    }
}

pub fn parse_records<R: Read>(source: R, format: Format) -> Result<ParseOutcome, IngestError> {
    match format {
        Format::Csv => parse_csv(source),
        Format::JsonLines => parse_jsonl(source),
    }
}

fn parse_csv<R: Read>(source: R) -> Result<ParseOutcome, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(source);
    let headers = reader.headers()?.clone();
    if headers.iter().ne(COLUMNS.iter().copied()) {
        return Err(IngestError::HeaderMismatch(
            headers.iter().map(str::to_string).collect(),
        ));
    }
    let mut out = ParseOutcome::default();
    for (idx, row) in reader.records().enumerate() {
        let row_no = idx + 1;
        let row = match row {
            Ok(r) => r,
            Err(e) if matches!(e.kind(), csv::ErrorKind::Io(_)) => return Err(e.into()),
            Err(e) => {
                out.rejects.push(RejectedRow {
                    row: row_no,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        if row.len() != COLUMNS.len() {
            out.rejects.push(RejectedRow {
                row: row_no,
                reason: format!("expected {} fields, found {}", COLUMNS.len(), row.len()),
            });
            continue;
        }
        let fields: Vec<&str> = row.iter().collect();
        push_row(&mut out, row_no, &fields);
    }
    Ok(out)
}

fn parse_jsonl<R: Read>(source: R) -> Result<ParseOutcome, IngestError> {
    let mut out = ParseOutcome::default();
    let mut row_no = 0;
    for line in BufReader::new(source).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        row_no += 1;
        let object: Map<String, Value> = match serde_json::from_str(&line) {
            Ok(o) => o,
            Err(e) => {
                out.rejects.push(RejectedRow {
                    row: row_no,
                    reason: format!("invalid JSON object: {e}"),
                });
                continue;
            }
        };
        if let Some(unknown) = object.keys().find(|k| !COLUMNS.contains(&k.as_str())) {
            out.rejects.push(RejectedRow {
                row: row_no,
                reason: format!("unknown field {unknown:?}"),
            });
            continue;
        }
        let mut owned = Vec::with_capacity(COLUMNS.len());
        let mut bad = None;
        for col in COLUMNS {
            match object.get(col) {
                None | Some(Value::Null) => owned.push(String::new()),
                Some(Value::String(s)) => owned.push(s.clone()),
                Some(Value::Number(n)) => owned.push(n.to_string()),
                Some(Value::Bool(b)) => owned.push(b.to_string()),
                Some(_) => {
                    bad = Some(format!("{col}: expected a scalar value"));
                    break;
                }
            }
        }
        if let Some(reason) = bad {
            out.rejects.push(RejectedRow { row: row_no, reason });
            continue;
        }
        let fields: Vec<&str> = owned.iter().map(String::as_str).collect();
        push_row(&mut out, row_no, &fields);
    }
    Ok(out)
}

fn push_row(out: &mut ParseOutcome, row: usize, fields: &[&str]) {
    match record_from_fields(fields) {
        Ok(rec) => {
            let violations = validate_record(&rec);
            if violations.is_empty() {
                out.records.push(rec);
            } else {
                out.rejects.push(RejectedRow {
                    row,
                    reason: crate::token::join(&violations, "; "),
                });
            }
        }
        Err(reason) => out.rejects.push(RejectedRow { row, reason }),
    }
}

fn cell<'a>(fields: &[&'a str], col: &str) -> Option<&'a str> {
    let idx = COLUMNS.iter().position(|c| *c == col).expect("known column");
    let v = fields[idx].trim();
    (!v.is_empty()).then_some(v)
}

fn token<T: FromStr>(fields: &[&str], col: &str) -> Result<Option<T>, String> {
    cell(fields, col)
        .map(|v| v.parse::<T>().map_err(|_| format!("{col}: invalid value {v:?}")))
        .transpose()
}

fn number(fields: &[&str], col: &str) -> Result<Option<f64>, String> {
    cell(fields, col)
        .map(|v| {
            v.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| format!("{col}: not a number {v:?}"))
        })
        .transpose()
}

fn boolean(fields: &[&str], col: &str) -> Result<bool, String> {
    match cell(fields, col) {
        Some("true") => Ok(true),
        Some("false") => Ok(false),
        Some(v) => Err(format!("{col}: expected true or false, found {v:?}")),
        None => Err(format!("{col}: expected true or false, found empty cell")),
    }
}

fn record_from_fields(fields: &[&str]) -> Result<CrashRecord, String> {
    let case_id = cell(fields, "case_id")
        .ok_or("case_id: missing")?
        .to_string();
    let ptw_raw = cell(fields, "ptw_class").ok_or("ptw_class: missing")?;
    let ptw_class =
        PtwClass::lookup(ptw_raw).ok_or_else(|| format!("ptw_class: invalid value {ptw_raw:?}"))?;
    let mais = cell(fields, "mais")
        .map(|v| {
            v.parse::<u8>()
                .map_err(|_| format!("mais: not an integer in 0..6 {v:?}"))
        })
        .transpose()?;
    let maids_config = match cell(fields, "maids_config") {
        None => MaidsConfig::Unknown,
        Some(v) => MaidsConfig::lookup(v)
            .ok_or_else(|| format!("maids_config: unknown configuration {v:?}"))?,
    };

    let actor: Option<Actor> = token(fields, "factor_actor")?;
    let stage: Option<Stage> = token(fields, "factor_stage")?;
    let detail: Option<FactorDetail> = token(fields, "factor_detail")?;
    let primary_factor = match actor {
        Some(actor) => Some(ContributingFactor { actor, stage, detail }),
        None if stage.is_some() || detail.is_some() => {
            return Err("factor_actor: missing while stage or detail is set".into())
        }
        None => None,
    };

    let action: Option<EvasiveAction> = token(fields, "evasive_action")?;
    let selection: Option<Quality> = token(fields, "evasive_selection")?;
    let execution: Option<Quality> = token(fields, "evasive_execution")?;
    let evasive = match action {
        Some(action) => Some(EvasiveResponse {
            action,
            selection_quality: selection.unwrap_or(Quality::Unknown),
            execution_quality: execution.unwrap_or(Quality::Unknown),
        }),
        None if selection.is_some() || execution.is_some() => {
            return Err("evasive_action: missing while quality is set".into())
        }
        None => None,
    };

    let alignment: Alignment = token(fields, "alignment")?.unwrap_or(Alignment::Unknown);
    let posted_speed_kmh = number(fields, "posted_speed_kmh")?;
    let impact_speed_kmh = number(fields, "impact_speed_kmh")?;
    let tpei_s = number(fields, "tpei_s")?;
    Ok(CrashRecord {
        case_id,
        ptw_class,
        mais,
        maids_config,
        primary_factor,
        evasive,
        alignment,
        posted_speed_kmh,
        impact_speed_kmh,
        tpei_s,
        rider_impairment_primary: boolean(fields, "rider_impairment_primary")?,
        mechanical_primary: boolean(fields, "mechanical_primary")?,
    })
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn record_fields(r: &CrashRecord) -> [String; 16] {
    let f = r.primary_factor;
    let e = r.evasive;
    [
        r.case_id.clone(),
        r.ptw_class.to_string(),
        opt(r.mais),
        r.maids_config.to_string(),
        opt(f.map(|f| f.actor)),
        opt(f.and_then(|f| f.stage)),
        opt(f.and_then(|f| f.detail)),
        opt(e.map(|e| e.action)),
        opt(e.map(|e| e.selection_quality)),
        opt(e.map(|e| e.execution_quality)),
        r.alignment.to_string(),
        opt(r.posted_speed_kmh),
        opt(r.impact_speed_kmh),
        opt(r.tpei_s),
        r.rider_impairment_primary.to_string(),
        r.mechanical_primary.to_string(),
    ]
}

pub fn write_csv<W: Write>(records: &[CrashRecord], sink: W) -> Result<(), IngestError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(sink);
    w.write_record(COLUMNS)?;
    for r in records {
        w.write_record(record_fields(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_jsonl<W: Write>(records: &[CrashRecord], mut sink: W) -> Result<(), IngestError> {
    for r in records {
        let mut obj = Map::new();
        for (col, value) in COLUMNS.iter().zip(record_fields(r)) {
            let v = match *col {
                _ if value.is_empty() => Value::Null,
                "mais" => Value::from(r.mais.expect("present")),
                "posted_speed_kmh" | "impact_speed_kmh" | "tpei_s" => {
                    Value::from(value.parse::<f64>().expect("formatted number"))
                }
                "rider_impairment_primary" | "mechanical_primary" => Value::Bool(value == "true"),
                _ => Value::String(value),
            };
            obj.insert(col.to_string(), v);
        }
        serde_json::to_writer(&mut sink, &obj).map_err(std::io::Error::from)?;
        sink.write_all(b"\n")?;
    }
    sink.flush()?;
    Ok(())
}

pub fn write_records<W: Write>(
    records: &[CrashRecord],
    format: Format,
    sink: W,
) -> Result<(), IngestError> {
    match format {
        Format::Csv => write_csv(records, sink),
        Format::JsonLines => write_jsonl(records, sink),
    }
}

/// Stage-by-stage counts of the study-population selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FilterReport {
    pub n_input: usize,
    pub n_excluded_impairment_mechanical: usize,
    pub n_excluded_mofa: usize,
    pub n_study_population: usize,
    pub n_selected_configs: usize,
    pub n_other_bucket: usize,
}

impl FilterReport {
    pub fn reconciles(&self) -> bool {
        self.n_input
            == self.n_excluded_impairment_mechanical + self.n_excluded_mofa + self.n_study_population
            && self.n_study_population == self.n_selected_configs + self.n_other_bucket
    }
}

/// Drops rider-impairment and mechanical cases, then mofa cases.
pub fn filter_study_population(
    records: Vec<CrashRecord>,
    rulebook: &ConfigRulebook,
) -> (Vec<CrashRecord>, FilterReport) {
    let mut report = FilterReport {
        n_input: records.len(),
        ..FilterReport::default()
    };
    let (excluded, rest): (Vec<_>, Vec<_>) = records
        .into_iter()
        .partition(|r| r.rider_impairment_primary || r.mechanical_primary);
    report.n_excluded_impairment_mechanical = excluded.len();
    let (mofa, retained): (Vec<_>, Vec<_>) =
        rest.into_iter().partition(|r| r.ptw_class == PtwClass::Mofa);
    report.n_excluded_mofa = mofa.len();
    report.n_study_population = retained.len();
    report.n_selected_configs = retained
        .iter()
        .filter(|r| classify(r, rulebook) != MergedConfig::Other)
        .count();
    report.n_other_bucket = report.n_study_population - report.n_selected_configs;
    (retained, report)
}

/// Splits records into the selected configurations and the residual bucket.
pub fn split_selected_vs_other(
    records: Vec<CrashRecord>,
    rulebook: &ConfigRulebook,
) -> (Vec<CrashRecord>, Vec<CrashRecord>) {
    records
        .into_iter()
        .partition(|r| classify(r, rulebook) != MergedConfig::Other)
}
