//! Per-configuration feature profiles.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::classify::Partition;
use crate::model::{Actor, Alignment, CrashRecord, EvasiveAction, FactorKey, MergedConfig, Quality, Stage};
use crate::stats::{
    config_association, speeding_share, summarize_numeric, NumericField, OddsRatioResult, Share,
    SpeedTimeSummary,
};
use crate::token::token_enum;

token_enum! {
    /// Alignment with curve handedness folded together.
    pub enum AlignmentClass {
        Straight => "STRAIGHT",
        Curve => "CURVE",
        Corner => "CORNER",
        Jog => "JOG",
    }
}

impl AlignmentClass {
    pub fn of(a: Alignment) -> Option<AlignmentClass> {
        match a {
            Alignment::Straight => Some(AlignmentClass::Straight),
            Alignment::CurveLeft | Alignment::CurveRight => Some(AlignmentClass::Curve),
            Alignment::Corner => Some(AlignmentClass::Corner),
            Alignment::Jog => Some(AlignmentClass::Jog),
            Alignment::Unknown => None,
        }
    }
}

/// Cut-offs for the two boolean flags of a profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// `no_evasive_high` when the no-action share is at least this (percent).
    pub no_evasive_pct: f64,
    /// `short_tpei` when the mean time to impact is at most this (seconds).
    pub short_tpei_s: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            no_evasive_pct: 25.0,
            short_tpei_s: 1.7,
        }
    }
}

/// An evasive action more frequent in this configuration than in the rest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Overrepresented {
    pub action: EvasiveAction,
    pub odds: OddsRatioResult,
    /// Not significant, but the lower bound rounds to 1.0.
    pub borderline: bool,
}

/// Feature summary of one configuration. Percentages are unrounded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigProfile {
    pub config: MergedConfig,
    pub n: usize,
    /// Records with a known primary factor.
    pub factor_n: usize,
    pub factor_shares: BTreeMap<FactorKey, f64>,
    /// Highest-share factors; several when tied. Unknown-stage failures never lead.
    pub dominant_factors: Vec<FactorKey>,
    pub dominant_factor_share: Option<f64>,
    pub actor_shares: BTreeMap<Actor, f64>,
    pub dominant_actor: Option<Actor>,
    pub alignment_shares: BTreeMap<AlignmentClass, f64>,
    pub alignment_mode: Option<AlignmentClass>,
    pub curve_share: Option<f64>,
    pub curve_left_share: Option<f64>,
    pub curve_right_share: Option<f64>,
    /// Records with a known evasive response.
    pub evasive_n: usize,
    pub no_evasive_share: Option<f64>,
    pub no_evasive_high: bool,
    pub overrepresented: Vec<Overrepresented>,
    /// Improperly executed share of properly selected braking.
    pub brake_poor_execution: Option<f64>,
    pub swerve_poor_execution: Option<f64>,
    pub mean_impact_speed: Option<f64>,
    pub speeding_share: Option<f64>,
    pub tpei: SpeedTimeSummary,
    pub short_tpei: bool,
    pub frequency_share: Option<f64>,
    pub severe_share: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProfileBuildError {
    #[error("no cases for configuration {0}")]
    Empty(MergedConfig),
}

fn pct(count: usize, total: usize) -> Option<f64> {
    Share::new(count, total).exact()
}

fn shares<K: Ord + Copy>(items: impl IntoIterator<Item = K>) -> (usize, BTreeMap<K, usize>) {
    let mut counts = BTreeMap::new();
    let mut n = 0;
    for k in items {
        *counts.entry(k).or_insert(0) += 1;
        n += 1;
    }
    (n, counts)
}

fn to_pct<K: Ord + Copy>(n: usize, counts: &BTreeMap<K, usize>) -> BTreeMap<K, f64> {
    counts.iter().map(|(k, c)| (*k, pct(*c, n).unwrap_or(0.0))).collect()
}

/// Improperly executed share among properly selected uses of `action`.
fn poor_execution(bucket: &[&CrashRecord], action: EvasiveAction) -> Option<f64> {
    let proper: Vec<_> = bucket
        .iter()
        .filter_map(|r| r.evasive)
        .filter(|e| e.action == action && e.selection_quality == Quality::Proper)
        .collect();
    let bad = proper.iter().filter(|e| e.execution_quality == Quality::Improper).count();
    pct(bad, proper.len())
}

pub fn build_profile(
    partition: &Partition<'_>,
    config: MergedConfig,
    thresholds: &Thresholds,
) -> Result<ConfigProfile, ProfileBuildError> {
    let bucket = partition.get(config);
    if bucket.is_empty() {
        return Err(ProfileBuildError::Empty(config));
    }

    let (factor_n, factor_counts) = shares(bucket.iter().filter_map(|r| r.primary_factor.map(|f| f.key())));
    let leading = factor_counts
        .iter()
        .filter(|(k, _)| k.stage_of() != Some(Stage::UnknownType))
        .map(|(_, c)| *c)
        .max();
    let dominant_factors: Vec<FactorKey> = match leading {
        Some(top) => factor_counts
            .iter()
            .filter(|(k, c)| **c == top && k.stage_of() != Some(Stage::UnknownType))
            .map(|(k, _)| *k)
            .collect(),
        None => Vec::new(),
    };
    let (_, actor_counts) = shares(bucket.iter().filter_map(|r| r.primary_factor.map(|f| f.actor)));
    let dominant_actor = actor_counts
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
        .map(|(a, _)| *a);

    let known_alignment: Vec<Alignment> = bucket
        .iter()
        .map(|r| r.alignment)
        .filter(|a| *a != Alignment::Unknown)
        .collect();
    let (align_n, align_counts) = shares(known_alignment.iter().filter_map(|a| AlignmentClass::of(*a)));
    let alignment_mode = align_counts
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
        .map(|(a, _)| *a);
    let side = |s: Alignment| pct(known_alignment.iter().filter(|a| **a == s).count(), align_n);

    let evasive: Vec<_> = bucket.iter().filter_map(|r| r.evasive).collect();
    let none = evasive.iter().filter(|e| e.action == EvasiveAction::NoAction).count();
    let no_evasive_share = pct(none, evasive.len());

    let mut overrepresented = Vec::new();
    if !evasive.is_empty() {
        for action in [EvasiveAction::Brake, EvasiveAction::Swerve, EvasiveAction::NoAction, EvasiveAction::Other] {
            let Ok(odds) = config_association(partition, config, |r| r.evasive.map(|e| e.action == action)) else {
                continue;
            };
            if odds.or_value > 1.0 && (odds.significant || odds.borderline()) {
                overrepresented.push(Overrepresented {
                    action,
                    odds,
                    borderline: odds.borderline(),
                });
            }
        }
    }

    let impact = summarize_numeric(bucket.iter().copied(), NumericField::ImpactSpeed);
    let tpei = summarize_numeric(bucket.iter().copied(), NumericField::Tpei);
    let speeding = speeding_share(bucket.iter().copied());
    let severe = |r: &CrashRecord| r.is_severe() == Some(true);
    let all_severe = partition.records().filter(|r| severe(r)).count();

    Ok(ConfigProfile {
        config,
        n: bucket.len(),
        factor_n,
        factor_shares: to_pct(factor_n, &factor_counts),
        dominant_factor_share: leading.and_then(|c| pct(c, factor_n)),
        dominant_factors,
        actor_shares: to_pct(factor_n, &actor_counts),
        dominant_actor,
        alignment_shares: to_pct(align_n, &align_counts),
        alignment_mode,
        curve_share: align_counts
            .get(&AlignmentClass::Curve)
            .map_or(pct(0, align_n), |c| pct(*c, align_n)),
        curve_left_share: side(Alignment::CurveLeft),
        curve_right_share: side(Alignment::CurveRight),
        evasive_n: evasive.len(),
        no_evasive_high: no_evasive_share.is_some_and(|s| s >= thresholds.no_evasive_pct),
        no_evasive_share,
        overrepresented,
        brake_poor_execution: poor_execution(bucket, EvasiveAction::Brake),
        swerve_poor_execution: poor_execution(bucket, EvasiveAction::Swerve),
        mean_impact_speed: impact.mean,
        speeding_share: speeding.exact(),
        short_tpei: tpei.mean.is_some_and(|m| m <= thresholds.short_tpei_s),
        tpei,
        frequency_share: pct(bucket.len(), partition.len()),
        severe_share: pct(bucket.iter().filter(|r| severe(r)).count(), all_severe),
    })
}

/// Execution quality of properly selected uses of one action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionExecution {
    pub action: EvasiveAction,
    pub proper: Share,
    pub improper: Share,
    pub unknown: Share,
}

/// Selection and execution quality of attempted evasive actions.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EvasiveQualityBreakdown {
    /// Records with an attempted (assessable) action.
    pub attempted: usize,
    pub selection_proper: Share,
    pub selection_improper: Share,
    pub selection_unknown: Share,
    pub execution: Vec<ActionExecution>,
}

impl EvasiveQualityBreakdown {
    pub fn is_empty(&self) -> bool {
        self.attempted == 0
    }
}

/// Quality breakdown for one configuration, or over all records when `config` is `None`.
pub fn evasive_quality_breakdown(
    partition: &Partition<'_>,
    config: Option<MergedConfig>,
) -> EvasiveQualityBreakdown {
    let records: Vec<&CrashRecord> = match config {
        Some(c) => partition.get(c).to_vec(),
        None => partition.records().collect(),
    };
    let attempted: Vec<_> = records
        .iter()
        .filter_map(|r| r.evasive)
        .filter(|e| EvasiveAction::ATTEMPTED.contains(&e.action))
        .collect();
    if attempted.is_empty() {
        return EvasiveQualityBreakdown::default();
    }
    let n = attempted.len();
    let sel = |q: Quality| Share::new(attempted.iter().filter(|e| e.selection_quality == q).count(), n);
    let execution = EvasiveAction::ATTEMPTED
        .iter()
        .map(|&action| {
            let proper: Vec<_> = attempted
                .iter()
                .filter(|e| e.action == action && e.selection_quality == Quality::Proper)
                .collect();
            let m = proper.len();
            let ex = |q: Quality| Share::new(proper.iter().filter(|e| e.execution_quality == q).count(), m);
            ActionExecution {
                action,
                proper: ex(Quality::Proper),
                improper: ex(Quality::Improper),
                unknown: ex(Quality::Unknown),
            }
        })
        .collect();
    EvasiveQualityBreakdown {
        attempted: n,
        selection_proper: sel(Quality::Proper),
        selection_improper: sel(Quality::Improper),
        selection_unknown: sel(Quality::Unknown),
        execution,
    }
}
