//! Analysis pipeline and report tables.
//!
//! [`analyze`] runs the whole chain (study-population filter, configuration
//! partition, tabulation, profiles, skills) and returns a [`ReportBundle`],
//! which [`render`] turns into CSV, Markdown or JSON files.

mod render;
mod verify;

use serde::{Deserialize, Serialize};

use crate::classify::{partition, ConfigRulebook, Partition};
use crate::ingest::{filter_study_population, FilterReport};
use crate::model::{Alignment, CrashRecord, EvasiveAction, FactorKey, MergedConfig, PtwClass, Quality};
use crate::skills::{build_profile, map_skills, ConfigProfile, SkillMatch, SkillRulebook, Thresholds};
use crate::stats::{
    config_association, frequency_table, speeding_share, summarize_numeric, FrequencyTable,
    NumericField, OddsRatioResult, Share, SpeedTimeSummary,
};

pub use render::{render, write_files, RenderError, RenderedFile, ReportFormat};
pub use verify::{verify, Check, VerifyReport};

/// Column label for the pooled selected configurations.
pub const TOTAL: &str = "TOTAL";

/// Category counts per column; every column carries its own N.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CountMatrix {
    pub rows: Vec<String>,
    pub columns: Vec<CountColumn>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountColumn {
    pub label: String,
    pub n: usize,
    /// Aligned with [`CountMatrix::rows`].
    pub counts: Vec<usize>,
}

impl CountMatrix {
    fn build<'a, K: PartialEq + ToString>(
        keys: &[K],
        columns: impl IntoIterator<Item = (String, Vec<&'a CrashRecord>)>,
        key_of: impl Fn(&CrashRecord) -> Option<K>,
    ) -> Self {
        let columns = columns
            .into_iter()
            .map(|(label, recs)| {
                let mut counts = vec![0; keys.len()];
                let mut n = 0;
                for k in recs.iter().filter_map(|r| key_of(r)) {
                    n += 1;
                    if let Some(i) = keys.iter().position(|x| *x == k) {
                        counts[i] += 1;
                    }
                }
                CountColumn { label, n, counts }
            })
            .collect();
        CountMatrix {
            rows: keys.iter().map(ToString::to_string).collect(),
            columns,
        }
    }

    pub fn column(&self, label: &str) -> Option<&CountColumn> {
        self.columns.iter().find(|c| c.label == label)
    }

    pub fn share(&self, row: &str, column: &str) -> Option<Share> {
        let i = self.rows.iter().position(|r| r == row)?;
        let col = self.column(column)?;
        Some(Share::new(col.counts[i], col.n))
    }
}

/// Association of one configuration with a binary outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigOdds {
    pub config: MergedConfig,
    pub outcome: String,
    /// `None` when a margin of the table is empty.
    pub result: Option<OddsRatioResult>,
}

/// Association of one configuration with one evasive action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionOdds {
    pub config: MergedConfig,
    pub action: EvasiveAction,
    pub result: Option<OddsRatioResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedTimeRow {
    /// A configuration token or [`TOTAL`].
    pub label: String,
    pub posted_speed: SpeedTimeSummary,
    pub impact_speed: SpeedTimeSummary,
    pub tpei: SpeedTimeSummary,
    pub speeding: Share,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionMatrix {
    pub action: EvasiveAction,
    /// Execution quality among properly selected uses of `action`.
    pub matrix: CountMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileEntry {
    pub profile: ConfigProfile,
    pub skills: Vec<SkillMatch>,
}

/// Every table of a report. Percentages are derived from the stored counts.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ReportBundle {
    pub filter: FilterReport,
    /// Configuration frequency by total, severity and PTW class.
    pub frequency: Vec<FrequencyTable>,
    pub odds: Vec<ConfigOdds>,
    pub speed_time: Vec<SpeedTimeRow>,
    pub factors: CountMatrix,
    pub alignment: CountMatrix,
    pub evasive_actions: CountMatrix,
    pub evasive_odds: Vec<ActionOdds>,
    /// Selection quality of attempted actions.
    pub evasive_selection: CountMatrix,
    pub evasive_execution: Vec<ExecutionMatrix>,
    pub profiles: Vec<ProfileEntry>,
}

const ACTIONS: [EvasiveAction; 4] = [
    EvasiveAction::Brake,
    EvasiveAction::Swerve,
    EvasiveAction::Other,
    EvasiveAction::NoAction,
];

fn selected_columns<'a>(
    p: &Partition<'a>,
    keep: impl Fn(&[&'a CrashRecord]) -> bool,
) -> Vec<(String, Vec<&'a CrashRecord>)> {
    let mut cols = vec![(TOTAL.to_string(), p.selected().collect())];
    for c in MergedConfig::SELECTED {
        if keep(p.get(c)) {
            cols.push((c.to_string(), p.get(c).to_vec()));
        }
    }
    cols
}

fn speed_time_row(label: String, recs: &[&CrashRecord]) -> SpeedTimeRow {
    SpeedTimeRow {
        label,
        posted_speed: summarize_numeric(recs.iter().copied(), NumericField::PostedSpeed),
        impact_speed: summarize_numeric(recs.iter().copied(), NumericField::ImpactSpeed),
        tpei: summarize_numeric(recs.iter().copied(), NumericField::Tpei),
        speeding: speeding_share(recs.iter().copied()),
    }
}

/// Tabulates an already filtered study population.
pub fn analyze_population(
    filter: FilterReport,
    records: &[CrashRecord],
    rulebook: &ConfigRulebook,
    skills: &SkillRulebook,
    thresholds: &Thresholds,
) -> ReportBundle {
    let p = partition(records, rulebook);

    let frequency = vec![
        frequency_table(&p, "total", |_| true),
        frequency_table(&p, "severe", |r| r.is_severe() == Some(true)),
        frequency_table(&p, "nonsevere", |r| r.is_severe() == Some(false)),
        frequency_table(&p, "l3", |r| r.ptw_class == PtwClass::L3Motorcycle),
        frequency_table(&p, "l1", |r| r.ptw_class == PtwClass::L1Moped),
    ];

    let mut odds = Vec::new();
    for config in MergedConfig::ALL.iter().copied() {
        odds.push(ConfigOdds {
            config,
            outcome: "severe".into(),
            result: config_association(&p, config, CrashRecord::is_severe).ok(),
        });
    }
    for config in MergedConfig::ALL.iter().copied() {
        odds.push(ConfigOdds {
            config,
            outcome: "l3".into(),
            result: config_association(&p, config, |r| Some(r.ptw_class == PtwClass::L3Motorcycle)).ok(),
        });
    }

    let mut speed_time: Vec<SpeedTimeRow> = MergedConfig::SELECTED
        .iter()
        .map(|c| speed_time_row(c.to_string(), p.get(*c)))
        .collect();
    let selected: Vec<&CrashRecord> = p.selected().collect();
    speed_time.push(speed_time_row(TOTAL.to_string(), &selected));

    let all_columns = selected_columns(&p, |_| true);
    let factors = CountMatrix::build(&FactorKey::table_order(), all_columns.clone(), |r| {
        r.primary_factor.map(|f| f.key())
    });
    let alignment = CountMatrix::build(Alignment::ALL, all_columns, |r| Some(r.alignment));

    let evasive_columns = selected_columns(&p, |recs| recs.iter().any(|r| r.evasive.is_some()));
    let evasive_actions = CountMatrix::build(&ACTIONS, evasive_columns.clone(), |r| {
        r.evasive.map(|e| e.action).filter(|a| *a != EvasiveAction::Unknown)
    });
    let mut evasive_odds = Vec::new();
    for (label, _) in evasive_columns.iter().skip(1) {
        let config: MergedConfig = label.parse().expect("column labels are configuration tokens");
        for action in ACTIONS {
            evasive_odds.push(ActionOdds {
                config,
                action,
                result: config_association(&p, config, |r| r.evasive.map(|e| e.action == action)).ok(),
            });
        }
    }
    let evasive_selection = CountMatrix::build(Quality::ALL, evasive_columns.clone(), |r| {
        r.evasive
            .filter(|e| EvasiveAction::ATTEMPTED.contains(&e.action))
            .map(|e| e.selection_quality)
    });
    let evasive_execution = EvasiveAction::ATTEMPTED
        .iter()
        .map(|&action| ExecutionMatrix {
            action,
            matrix: CountMatrix::build(Quality::ALL, evasive_columns.clone(), |r| {
                r.evasive
                    .filter(|e| e.action == action && e.selection_quality == Quality::Proper)
                    .map(|e| e.execution_quality)
            }),
        })
        .collect();

    let profiles = MergedConfig::SELECTED
        .iter()
        .filter_map(|c| build_profile(&p, *c, thresholds).ok())
        .map(|profile| ProfileEntry {
            skills: map_skills(&profile, skills),
            profile,
        })
        .collect();

    ReportBundle {
        filter,
        frequency,
        odds,
        speed_time,
        factors,
        alignment,
        evasive_actions,
        evasive_odds,
        evasive_selection,
        evasive_execution,
        profiles,
    }
}

/// Filters the raw records to the study population and tabulates it.
pub fn analyze(
    records: Vec<CrashRecord>,
    rulebook: &ConfigRulebook,
    skills: &SkillRulebook,
    thresholds: &Thresholds,
) -> ReportBundle {
    let (kept, filter) = filter_study_population(records, rulebook);
    analyze_population(filter, &kept, rulebook, skills, thresholds)
}

impl ReportBundle {
    pub fn frequency_column(&self, segment: &str) -> Option<&FrequencyTable> {
        self.frequency.iter().find(|t| t.segment == segment)
    }

    pub fn speed_time_row(&self, label: &str) -> Option<&SpeedTimeRow> {
        self.speed_time.iter().find(|r| r.label == label)
    }

    pub fn profile(&self, config: MergedConfig) -> Option<&ProfileEntry> {
        self.profiles.iter().find(|p| p.profile.config == config)
    }
}
