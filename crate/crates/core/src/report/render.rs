//! CSV, Markdown and JSON forms of a [`ReportBundle`].

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::model::MergedConfig;
use crate::stats::{round1, OddsRatioResult, Share, SpeedTimeSummary};

use super::{CountMatrix, ReportBundle, TOTAL};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    /// One CSV file per table.
    Csv,
    /// A single document.
    Markdown,
    /// The whole bundle with raw counts and unrounded values.
    Json,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "md" | "markdown" => Ok(ReportFormat::Markdown),
            "json" => Ok(ReportFormat::Json),
            other => Err(format!("unknown report format `{other}` (expected csv, md or json)")),
        }
    }
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Markdown => "md",
            ReportFormat::Json => "json",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedFile {
    pub name: String,
    pub contents: String,
}

#[derive(Debug, thiserror::Error)]
pub enum RenderError {
    #[error("cannot write {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

struct Table {
    name: &'static str,
    title: &'static str,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

const FREQUENCY_SEGMENTS: [&str; 5] = ["total", "severe", "nonsevere", "l3", "l1"];

fn fmt1(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".to_string(), |v| format!("{:.1}", round1(v)))
}

fn fmt2(x: f64) -> String {
    format!("{:.2}", (x * 100.0).round() / 100.0)
}

fn odds_flag(r: &OddsRatioResult) -> &'static str {
    if r.significant {
        "significant"
    } else if r.borderline() {
        "borderline"
    } else {
        ""
    }
}

fn odds_cells(r: Option<&OddsRatioResult>) -> Vec<String> {
    match r {
        Some(r) => vec![
            r.a.to_string(),
            r.b.to_string(),
            r.c.to_string(),
            r.d.to_string(),
            fmt2(r.or_value),
            fmt2(r.ci_low),
            fmt2(r.ci_high),
            odds_flag(r).to_string(),
        ],
        None => {
            let mut cells = vec!["NA".to_string(); 7];
            cells.push("undefined".to_string());
            cells
        }
    }
}

const ODDS_HEADER: [&str; 8] = ["a", "b", "c", "d", "or", "ci_low", "ci_high", "flag"];

fn summary_cells(s: &SpeedTimeSummary) -> [String; 4] {
    [fmt1(s.mean), fmt1(s.q1), fmt1(s.q3), s.n.to_string()]
}

fn matrix_table(name: &'static str, title: &'static str, row_name: &str, m: &CountMatrix) -> Table {
    let mut header = vec![row_name.to_string()];
    header.extend(m.columns.iter().map(|c| c.label.clone()));
    let mut rows: Vec<Vec<String>> = m
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = vec![r.clone()];
            row.extend(m.columns.iter().map(|c| Share::new(c.counts[i], c.n).to_string()));
            row
        })
        .collect();
    if !m.columns.is_empty() {
        let mut n_row = vec!["N".to_string()];
        n_row.extend(m.columns.iter().map(|c| c.n.to_string()));
        rows.push(n_row);
    }
    Table { name, title, header, rows }
}

fn tables(b: &ReportBundle) -> Vec<Table> {
    let mut out = Vec::new();

    let f = &b.filter;
    out.push(Table {
        name: "population",
        title: "Study population",
        header: vec!["step".into(), "cases".into()],
        rows: [
            ("input", f.n_input),
            ("excluded_impairment_mechanical", f.n_excluded_impairment_mechanical),
            ("excluded_mofa", f.n_excluded_mofa),
            ("study_population", f.n_study_population),
            ("selected_configurations", f.n_selected_configs),
            ("other_bucket", f.n_other_bucket),
        ]
        .iter()
        .map(|(k, v)| vec![k.to_string(), v.to_string()])
        .collect(),
    });

    let mut header = vec!["config".to_string()];
    header.extend(FREQUENCY_SEGMENTS.iter().map(|s| format!("{s}_pct")));
    let columns: Vec<_> = FREQUENCY_SEGMENTS.iter().map(|s| b.frequency_column(s)).collect();
    let mut rows = Vec::new();
    if columns.iter().any(Option::is_some) {
        for config in MergedConfig::ALL {
            let mut row = vec![config.to_string()];
            row.extend(columns.iter().map(|t| fmt1(t.and_then(|t| t.row(*config)).and_then(|r| r.pct))));
            rows.push(row);
        }
        let mut n_row = vec!["N".to_string()];
        n_row.extend(columns.iter().map(|t| t.map_or("NA".into(), |t| t.column_n.to_string())));
        rows.push(n_row);
    }
    out.push(Table {
        name: "table1_frequency",
        title: "Configuration frequency by severity and PTW class (column %)",
        header,
        rows,
    });

    let mut header = vec!["config".to_string(), "outcome".to_string()];
    header.extend(ODDS_HEADER.iter().map(|s| s.to_string()));
    out.push(Table {
        name: "table1_odds",
        title: "Odds ratios: configuration versus all others",
        header,
        rows: b
            .odds
            .iter()
            .map(|o| {
                let mut row = vec![o.config.to_string(), o.outcome.clone()];
                row.extend(odds_cells(o.result.as_ref()));
                row
            })
            .collect(),
    });

    let mut header = vec!["config".to_string()];
    for field in ["posted", "impact", "tpei"] {
        for stat in ["mean", "q1", "q3", "n"] {
            header.push(format!("{field}_{stat}"));
        }
    }
    header.extend(["speeding_pct".to_string(), "speeding_n".to_string()]);
    out.push(Table {
        name: "table2_speed_time",
        title: "Posted speed, impact speed (km/h) and time from precipitating event to impact (s): mean, Q1, Q3",
        header,
        rows: b
            .speed_time
            .iter()
            .map(|r| {
                let mut row = vec![r.label.clone()];
                row.extend(summary_cells(&r.posted_speed));
                row.extend(summary_cells(&r.impact_speed));
                row.extend(summary_cells(&r.tpei));
                row.push(r.speeding.to_string());
                row.push(r.speeding.total.to_string());
                row
            })
            .collect(),
    });

    out.push(matrix_table(
        "factors",
        "Primary contributing factor by configuration (column %)",
        "factor",
        &b.factors,
    ));
    out.push(matrix_table(
        "alignment",
        "Horizontal road alignment by configuration (column %)",
        "alignment",
        &b.alignment,
    ));
    out.push(matrix_table(
        "evasive_actions",
        "Evasive action by configuration (column %)",
        "action",
        &b.evasive_actions,
    ));

    let mut header = vec!["config".to_string(), "action".to_string()];
    header.extend(ODDS_HEADER.iter().map(|s| s.to_string()));
    out.push(Table {
        name: "evasive_odds",
        title: "Odds ratios: evasive action in configuration versus all others",
        header,
        rows: b
            .evasive_odds
            .iter()
            .map(|o| {
                let mut row = vec![o.config.to_string(), o.action.to_string()];
                row.extend(odds_cells(o.result.as_ref()));
                row
            })
            .collect(),
    });

    out.push(matrix_table(
        "evasive_selection",
        "Selection quality of attempted evasive actions (column %)",
        "selection",
        &b.evasive_selection,
    ));

    let mut header = vec!["action".to_string(), "execution".to_string()];
    header.extend(
        b.evasive_execution
            .first()
            .map(|e| e.matrix.columns.iter().map(|c| c.label.clone()).collect::<Vec<_>>())
            .unwrap_or_default(),
    );
    let mut rows = Vec::new();
    for e in &b.evasive_execution {
        for row in matrix_table("", "", "", &e.matrix).rows {
            let mut full = vec![e.action.to_string()];
            full.extend(row);
            rows.push(full);
        }
    }
    out.push(Table {
        name: "evasive_execution",
        title: "Execution quality of properly selected evasive actions (column %)",
        header,
        rows,
    });

    out.push(Table {
        name: "profiles",
        title: "Configuration profiles",
        header: [
            "config",
            "n",
            "dominant_factor",
            "dominant_factor_pct",
            "dominant_actor",
            "dominant_actor_pct",
            "alignment_mode",
            "curve_pct",
            "curve_left_pct",
            "curve_right_pct",
            "no_evasive_pct",
            "no_evasive_high",
            "overrepresented",
            "brake_poor_execution_pct",
            "swerve_poor_execution_pct",
            "mean_impact_speed",
            "speeding_pct",
            "tpei_mean",
            "short_tpei",
            "frequency_pct",
            "severe_pct",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect(),
        rows: b
            .profiles
            .iter()
            .map(|e| {
                let p = &e.profile;
                let join = |items: Vec<String>| if items.is_empty() { "NA".to_string() } else { items.join("; ") };
                vec![
                    p.config.to_string(),
                    p.n.to_string(),
                    join(p.dominant_factors.iter().map(ToString::to_string).collect()),
                    fmt1(p.dominant_factor_share),
                    p.dominant_actor.map_or("NA".into(), |a| a.to_string()),
                    fmt1(p.dominant_actor.and_then(|a| p.actor_shares.get(&a).copied())),
                    p.alignment_mode.map_or("NA".into(), |a| a.to_string()),
                    fmt1(p.curve_share),
                    fmt1(p.curve_left_share),
                    fmt1(p.curve_right_share),
                    fmt1(p.no_evasive_share),
                    p.no_evasive_high.to_string(),
                    join(
                        p.overrepresented
                            .iter()
                            .map(|o| {
                                let mark = if o.borderline { "**" } else { "*" };
                                format!(
                                    "{} {} [{}, {}]{mark}",
                                    o.action,
                                    fmt2(o.odds.or_value),
                                    fmt2(o.odds.ci_low),
                                    fmt2(o.odds.ci_high)
                                )
                            })
                            .collect(),
                    ),
                    fmt1(p.brake_poor_execution),
                    fmt1(p.swerve_poor_execution),
                    fmt1(p.mean_impact_speed),
                    fmt1(p.speeding_share),
                    fmt1(p.tpei.mean),
                    p.short_tpei.to_string(),
                    fmt1(p.frequency_share),
                    fmt1(p.severe_share),
                ]
            })
            .collect(),
    });

    out.push(Table {
        name: "skills",
        title: "Skill recommendations",
        header: ["config", "skill", "rule", "rationale"].iter().map(|s| s.to_string()).collect(),
        rows: b
            .profiles
            .iter()
            .flat_map(|e| {
                e.skills.iter().map(|s| {
                    vec![
                        e.profile.config.to_string(),
                        s.skill.clone(),
                        s.rule.clone().unwrap_or_default(),
                        s.rationale.clone(),
                    ]
                })
            })
            .collect(),
    });

    out
}

fn csv_text(t: &Table) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(&t.header).expect("writing to memory");
    for row in &t.rows {
        w.write_record(row).expect("writing to memory");
    }
    let bytes = w.into_inner().expect("writing to memory");
    String::from_utf8(bytes).expect("cells are UTF-8")
}

/// Configuration tokens become their display labels.
fn display_cell(cell: &str) -> String {
    if cell == TOTAL {
        return "Total".to_string();
    }
    let text = match cell.parse::<MergedConfig>() {
        Ok(c) => c.label().to_string(),
        Err(_) => cell.to_string(),
    };
    text.replace('|', "\\|")
}

fn markdown_text(tables: &[Table], bundle: &ReportBundle) -> String {
    let mut s = String::from("# Crash configuration report\n");
    let f = &bundle.filter;
    s.push_str(&format!(
        "\n{} input cases, {} in the study population: {} in the selected configurations and {} in OTHER.\n",
        f.n_input, f.n_study_population, f.n_selected_configs, f.n_other_bucket
    ));
    for t in tables {
        s.push_str(&format!("\n## {}\n\n", t.title));
        let header: Vec<String> = t.header.iter().map(|h| display_cell(h)).collect();
        s.push_str(&format!("| {} |\n", header.join(" | ")));
        s.push_str(&format!("|{}\n", "---|".repeat(header.len())));
        for row in &t.rows {
            let cells: Vec<String> = row.iter().map(|c| display_cell(c)).collect();
            s.push_str(&format!("| {} |\n", cells.join(" | ")));
        }
    }
    s
}

/// Renders a bundle. The output depends only on the bundle.
pub fn render(bundle: &ReportBundle, format: ReportFormat) -> Vec<RenderedFile> {
    match format {
        ReportFormat::Csv => tables(bundle)
            .iter()
            .map(|t| RenderedFile {
                name: format!("{}.csv", t.name),
                contents: csv_text(t),
            })
            .collect(),
        ReportFormat::Markdown => vec![RenderedFile {
            name: "report.md".into(),
            contents: markdown_text(&tables(bundle), bundle),
        }],
        ReportFormat::Json => {
            let mut contents = serde_json::to_string_pretty(bundle).expect("bundle serializes");
            contents.push('\n');
            vec![RenderedFile {
                name: "report.json".into(),
                contents,
            }]
        }
    }
}

/// Writes rendered files into `dir`, creating it if needed.
pub fn write_files(dir: &Path, files: &[RenderedFile]) -> Result<(), RenderError> {
    std::fs::create_dir_all(dir).map_err(|source| RenderError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    for f in files {
        let path = dir.join(&f.name);
        std::fs::write(&path, &f.contents).map_err(|source| RenderError::Io { path, source })?;
    }
    Ok(())
}
