//! Marginal profiles: the published-table shape a synthetic dataset must hit.
//!
//! The on-disk form is one `key.path = value` per line with `#` comments.
//! Percentages are column shares; `total_n`, `exclusions.*`, `frequency.*.n`,
//! `factor.*.missing` and `numeric.*.n` are absolute counts.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::model::{Alignment, EvasiveAction, FactorKey, MergedConfig, Quality};
use crate::stats::NumericField;
use crate::token::token_enum;

use super::oracle::apportion;

/// The committed default profile.
pub const DEFAULT_PROFILE: &str = include_str!("../../data/maids2000.profile");

token_enum! {
    /// A column of the configuration frequency table.
    pub enum FrequencyColumn {
        Total => "total",
        Severe => "severe",
        Nonsevere => "nonsevere",
        L3 => "l3",
        L1 => "l1",
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProfileError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: invalid value {value:?} for {key}")]
    BadValue {
        line: usize,
        key: String,
        value: String,
    },
    #[error("line {line}: {key} is set twice")]
    Duplicate { line: usize, key: String },
    #[error("missing required key {0}")]
    Missing(String),
    #[error("{margin}: {reason}")]
    Invalid { margin: String, reason: String },
    #[error("infeasible profile, margin {margin}: {reason}")]
    Infeasible { margin: String, reason: String },
}

impl ProfileError {
    pub(crate) fn infeasible(margin: impl Into<String>, reason: impl Into<String>) -> Self {
        ProfileError::Infeasible {
            margin: margin.into(),
            reason: reason.into(),
        }
    }

    fn invalid(margin: impl Into<String>, reason: impl Into<String>) -> Self {
        ProfileError::Invalid {
            margin: margin.into(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Exclusions {
    pub rider_impairment: usize,
    pub mechanical: usize,
    pub mofa: usize,
}

impl Exclusions {
    pub fn total(&self) -> usize {
        self.rider_impairment + self.mechanical + self.mofa
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FrequencyShares {
    /// Column size; `None` for the total column, whose size is `total_n`.
    pub n: Option<usize>,
    pub shares: BTreeMap<MergedConfig, f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FactorShares {
    /// Records with no primary factor recorded.
    pub missing: usize,
    pub shares: BTreeMap<FactorKey, f64>,
}

/// Evasive response shares for one configuration.
///
/// `no_action` is a share of the bucket; `selection` is over the remaining
/// records; `proper` and `nonproper` split actions within the properly and
/// not properly selected groups; `execution` qualifies properly selected actions.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvasiveShares {
    pub no_action: f64,
    pub selection: BTreeMap<Quality, f64>,
    pub proper: BTreeMap<EvasiveAction, f64>,
    pub nonproper: BTreeMap<EvasiveAction, f64>,
    pub execution: BTreeMap<EvasiveAction, BTreeMap<Quality, f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericMarginal {
    pub mean: f64,
    pub q1: f64,
    pub q3: f64,
    /// Number of records with the value present.
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpeedingShares {
    /// Share over every selected-configuration record with both speeds present.
    pub overall: Option<f64>,
    pub per_config: BTreeMap<MergedConfig, f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MarginalProfile {
    /// Size of the study population (after exclusions).
    pub total_n: usize,
    pub exclusions: Exclusions,
    pub frequency: BTreeMap<FrequencyColumn, FrequencyShares>,
    pub mais_severe: BTreeMap<u8, f64>,
    pub mais_nonsevere: BTreeMap<u8, f64>,
    pub factors: BTreeMap<MergedConfig, FactorShares>,
    pub evasive: BTreeMap<MergedConfig, EvasiveShares>,
    pub alignment: BTreeMap<MergedConfig, BTreeMap<Alignment, f64>>,
    pub numeric: BTreeMap<MergedConfig, BTreeMap<NumericField, NumericMarginal>>,
    pub speeding: SpeedingShares,
}

/// Tolerance on the sum of a categorical distribution. Each printed share
/// carries up to 0.05 points of rounding error, so wide distributions can
/// legitimately drift further from 100 than 0.1.
pub fn sum_tolerance(nonzero_categories: usize) -> f64 {
    (0.05 * nonzero_categories as f64).max(0.1)
}

fn check_distribution<'a>(
    margin: &str,
    values: impl IntoIterator<Item = &'a f64>,
) -> Result<(), ProfileError> {
    let mut sum = 0.0;
    let mut nonzero = 0;
    for &v in values {
        if !(0.0..=100.0).contains(&v) {
            return Err(ProfileError::invalid(margin, format!("share {v} outside [0, 100]")));
        }
        sum += v;
        nonzero += usize::from(v > 0.0);
    }
    if nonzero == 0 {
        return Ok(());
    }
    let tol = sum_tolerance(nonzero);
    if (sum - 100.0).abs() > tol + 1e-9 {
        return Err(ProfileError::invalid(
            margin,
            format!("shares sum to {sum:.1}, expected 100 within {tol:.2}"),
        ));
    }
    Ok(())
}

fn parse_num<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T, ProfileError> {
    value.parse().map_err(|_| ProfileError::BadValue {
        line,
        key: key.to_string(),
        value: value.to_string(),
    })
}

fn parse_pct(line: usize, key: &str, value: &str) -> Result<f64, ProfileError> {
    let v: f64 = parse_num(line, key, value)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ProfileError::BadValue {
            line,
            key: key.to_string(),
            value: value.to_string(),
        })
    }
}

#[derive(Default)]
struct NumericDraft {
    mean: Option<f64>,
    q1: Option<f64>,
    q3: Option<f64>,
    n: Option<usize>,
}

#[derive(Default)]
struct EvasiveDraft {
    no_action: Option<f64>,
    shares: EvasiveShares,
}

impl MarginalProfile {
    /// The committed default profile.
    pub fn default_profile() -> Self {
        Self::parse(DEFAULT_PROFILE).expect("committed profile is valid")
    }

    /// Parses and validates a profile.
    pub fn parse(text: &str) -> Result<Self, ProfileError> {
        let mut p = MarginalProfile::default();
        let mut total_n = None;
        let mut numeric: BTreeMap<(MergedConfig, NumericField), NumericDraft> = BTreeMap::new();
        let mut evasive: BTreeMap<MergedConfig, EvasiveDraft> = BTreeMap::new();
        let mut seen = std::collections::HashSet::new();

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or(ProfileError::Syntax { line })?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(ProfileError::Duplicate {
                    line,
                    key: key.to_string(),
                });
            }
            let unknown = || ProfileError::UnknownKey {
                line,
                key: key.to_string(),
            };
            let parts: Vec<&str> = key.split('.').collect();
            let cfg = |s: &str| s.parse::<MergedConfig>().map_err(|_| unknown());
            match parts.as_slice() {
                ["total_n"] => total_n = Some(parse_num(line, key, value)?),
                ["exclusions", which] => {
                    let v = parse_num(line, key, value)?;
                    match *which {
                        "rider_impairment" => p.exclusions.rider_impairment = v,
                        "mechanical" => p.exclusions.mechanical = v,
                        "mofa" => p.exclusions.mofa = v,
                        _ => return Err(unknown()),
                    }
                }
                ["frequency", col, rest] => {
                    let col: FrequencyColumn = col.parse().map_err(|_| unknown())?;
                    let entry = p.frequency.entry(col).or_default();
                    if *rest == "n" {
                        entry.n = Some(parse_num(line, key, value)?);
                    } else {
                        entry.shares.insert(cfg(rest)?, parse_pct(line, key, value)?);
                    }
                }
                ["mais", group, level] => {
                    let level: u8 = level.parse().map_err(|_| unknown())?;
                    let v = parse_pct(line, key, value)?;
                    match *group {
                        "severe" => p.mais_severe.insert(level, v),
                        "nonsevere" => p.mais_nonsevere.insert(level, v),
                        _ => return Err(unknown()),
                    };
                }
                ["factor", c, "missing"] => {
                    p.factors.entry(cfg(c)?).or_default().missing = parse_num(line, key, value)?;
                }
                ["factor", c, actor, detail] => {
                    let fk: FactorKey = format!("{actor}.{detail}").parse().map_err(|_| unknown())?;
                    p.factors
                        .entry(cfg(c)?)
                        .or_default()
                        .shares
                        .insert(fk, parse_pct(line, key, value)?);
                }
                ["evasive", c, rest @ ..] => {
                    let draft = evasive.entry(cfg(c)?).or_default();
                    let v = parse_pct(line, key, value)?;
                    let action = |s: &str| s.parse::<EvasiveAction>().map_err(|_| unknown());
                    let quality = |s: &str| s.parse::<Quality>().map_err(|_| unknown());
                    match rest {
                        ["no_action"] => draft.no_action = Some(v),
                        ["selection", q] => {
                            draft.shares.selection.insert(quality(q)?, v);
                        }
                        ["proper", a] => {
                            draft.shares.proper.insert(action(a)?, v);
                        }
                        ["nonproper", a] => {
                            draft.shares.nonproper.insert(action(a)?, v);
                        }
                        ["execution", a, q] => {
                            draft
                                .shares
                                .execution
                                .entry(action(a)?)
                                .or_default()
                                .insert(quality(q)?, v);
                        }
                        _ => return Err(unknown()),
                    }
                }
                ["alignment", c, a] => {
                    let a: Alignment = a.parse().map_err(|_| unknown())?;
                    p.alignment
                        .entry(cfg(c)?)
                        .or_default()
                        .insert(a, parse_pct(line, key, value)?);
                }
                ["numeric", c, field, stat] => {
                    let field: NumericField = field.parse().map_err(|_| unknown())?;
                    let d = numeric.entry((cfg(c)?, field)).or_default();
                    match *stat {
                        "mean" => d.mean = Some(parse_pct(line, key, value)?),
                        "q1" => d.q1 = Some(parse_pct(line, key, value)?),
                        "q3" => d.q3 = Some(parse_pct(line, key, value)?),
                        "n" => d.n = Some(parse_num(line, key, value)?),
                        _ => return Err(unknown()),
                    }
                }
                ["speeding", "overall"] => p.speeding.overall = Some(parse_pct(line, key, value)?),
                ["speeding", c] => {
                    p.speeding.per_config.insert(cfg(c)?, parse_pct(line, key, value)?);
                }
                _ => return Err(unknown()),
            }
        }

        p.total_n = total_n.ok_or_else(|| ProfileError::Missing("total_n".into()))?;
        for ((c, f), d) in numeric {
            let key = |s: &str| format!("numeric.{c}.{f}.{s}");
            let marginal = NumericMarginal {
                mean: d.mean.ok_or_else(|| ProfileError::Missing(key("mean")))?,
                q1: d.q1.ok_or_else(|| ProfileError::Missing(key("q1")))?,
                q3: d.q3.ok_or_else(|| ProfileError::Missing(key("q3")))?,
                n: d.n.ok_or_else(|| ProfileError::Missing(key("n")))?,
            };
            p.numeric.entry(c).or_default().insert(f, marginal);
        }
        for (c, d) in evasive {
            let mut shares = d.shares;
            shares.no_action = d
                .no_action
                .ok_or_else(|| ProfileError::Missing(format!("evasive.{c}.no_action")))?;
            p.evasive.insert(c, shares);
        }
        p.validate()?;
        Ok(p)
    }

    /// Checks every invariant that does not depend on integer reconstruction.
    pub fn validate(&self) -> Result<(), ProfileError> {
        let total = self
            .frequency
            .get(&FrequencyColumn::Total)
            .ok_or_else(|| ProfileError::Missing("frequency.total".into()))?;
        if total.n.is_some() {
            return Err(ProfileError::invalid("frequency.total.n", "the total column size is total_n"));
        }
        for (col, f) in &self.frequency {
            if *col != FrequencyColumn::Total && f.n.is_none() {
                return Err(ProfileError::Missing(format!("frequency.{col}.n")));
            }
            check_distribution(&format!("frequency.{col}"), f.shares.values())?;
        }
        let col_n = |c: FrequencyColumn| self.frequency.get(&c).and_then(|f| f.n).unwrap_or(0);
        if col_n(FrequencyColumn::Severe) + col_n(FrequencyColumn::Nonsevere) > self.total_n {
            return Err(ProfileError::infeasible(
                "frequency.severe.n + frequency.nonsevere.n",
                format!("exceeds total_n = {}", self.total_n),
            ));
        }
        if col_n(FrequencyColumn::L3) + col_n(FrequencyColumn::L1) > self.total_n {
            return Err(ProfileError::infeasible(
                "frequency.l3.n + frequency.l1.n",
                format!("exceeds total_n = {}", self.total_n),
            ));
        }
        check_distribution("mais.severe", self.mais_severe.values())?;
        check_distribution("mais.nonsevere", self.mais_nonsevere.values())?;
        if self.mais_severe.keys().any(|&m| !(3..=6).contains(&m)) {
            return Err(ProfileError::invalid("mais.severe", "levels must be 3 to 6"));
        }
        if self.mais_nonsevere.keys().any(|&m| m > 2) {
            return Err(ProfileError::invalid("mais.nonsevere", "levels must be 0 to 2"));
        }
        for (c, f) in &self.factors {
            check_distribution(&format!("factor.{c}"), f.shares.values())?;
        }
        for (c, e) in &self.evasive {
            if !(0.0..=100.0).contains(&e.no_action) {
                return Err(ProfileError::invalid(format!("evasive.{c}.no_action"), "share outside [0, 100]"));
            }
            check_distribution(&format!("evasive.{c}.selection"), e.selection.values())?;
            check_distribution(&format!("evasive.{c}.proper"), e.proper.values())?;
            check_distribution(&format!("evasive.{c}.nonproper"), e.nonproper.values())?;
            for (a, q) in &e.execution {
                check_distribution(&format!("evasive.{c}.execution.{a}"), q.values())?;
            }
            let bad_action = e
                .proper
                .keys()
                .chain(e.nonproper.keys())
                .chain(e.execution.keys())
                .any(|a| !EvasiveAction::ATTEMPTED.contains(a));
            if bad_action {
                return Err(ProfileError::invalid(
                    format!("evasive.{c}"),
                    "only BRAKE, SWERVE and OTHER are split by quality",
                ));
            }
        }
        for (c, a) in &self.alignment {
            check_distribution(&format!("alignment.{c}"), a.values())?;
        }
        for (c, fields) in &self.numeric {
            for (f, m) in fields {
                let margin = format!("numeric.{c}.{f}");
                if !(m.mean > 0.0 && m.q1 > 0.0 && m.q1 <= m.q3) {
                    return Err(ProfileError::invalid(margin, "need mean > 0 and 0 < q1 <= q3"));
                }
            }
        }
        if let Some(v) = self.speeding.overall {
            if !(0.0..=100.0).contains(&v) {
                return Err(ProfileError::invalid("speeding.overall", "share outside [0, 100]"));
            }
        }
        for (c, v) in &self.speeding.per_config {
            if !(0.0..=100.0).contains(v) {
                return Err(ProfileError::invalid(format!("speeding.{c}"), "share outside [0, 100]"));
            }
        }
        Ok(())
    }

    /// Share of a frequency column, `0.0` when absent.
    pub fn frequency_share(&self, col: FrequencyColumn, config: MergedConfig) -> f64 {
        self.frequency
            .get(&col)
            .and_then(|f| f.shares.get(&config))
            .copied()
            .unwrap_or(0.0)
    }

    /// Size of a frequency column.
    pub fn column_n(&self, col: FrequencyColumn) -> usize {
        match col {
            FrequencyColumn::Total => self.total_n,
            _ => self.frequency.get(&col).and_then(|f| f.n).unwrap_or(0),
        }
    }

    /// Bucket sizes implied by the total column.
    pub fn bucket_sizes(&self) -> Result<BTreeMap<MergedConfig, usize>, ProfileError> {
        self.column_counts(FrequencyColumn::Total)
    }

    /// Integer counts of one frequency column, summing to the column size.
    pub fn column_counts(
        &self,
        col: FrequencyColumn,
    ) -> Result<BTreeMap<MergedConfig, usize>, ProfileError> {
        let shares: Vec<f64> = MergedConfig::ALL
            .iter()
            .map(|c| self.frequency_share(col, *c))
            .collect();
        let counts = apportion(&shares, self.column_n(col))
            .map_err(|e| ProfileError::infeasible(format!("frequency.{col}"), e.to_string()))?;
        Ok(MergedConfig::ALL.iter().copied().zip(counts).collect())
    }

    /// The same shape at a different study-population size.
    ///
    /// Bucket sizes follow the total column. Severity and PTW-class counts are
    /// rescaled within each bucket so the columns stay mutually consistent, and
    /// their shares become the exact shares of the rescaled counts. Present-value
    /// counts are capped at the rescaled bucket sizes.
    pub fn scaled(&self, total_n: usize) -> Result<Self, ProfileError> {
        let f = if self.total_n == 0 {
            0.0
        } else {
            total_n as f64 / self.total_n as f64
        };
        let scale = |k: usize| (k as f64 * f).round() as usize;
        let mut p = self.clone();
        p.total_n = total_n;
        p.exclusions = Exclusions {
            rider_impairment: scale(self.exclusions.rider_impairment),
            mechanical: scale(self.exclusions.mechanical),
            mofa: scale(self.exclusions.mofa),
        };

        let old_sizes = self.bucket_sizes()?;
        let new_sizes = p.bucket_sizes()?;
        let counts = |col: FrequencyColumn| -> Result<Option<BTreeMap<MergedConfig, usize>>, ProfileError> {
            match self.frequency.get(&col) {
                Some(fs) if fs.n.is_some() => self.column_counts(col).map(Some),
                _ => Ok(None),
            }
        };
        let within = |k: usize, c: MergedConfig| -> usize {
            match old_sizes[&c] {
                0 => 0,
                n => ((k as f64) * new_sizes[&c] as f64 / n as f64).round() as usize,
            }
        };
        let mut rescaled: BTreeMap<FrequencyColumn, BTreeMap<MergedConfig, usize>> = BTreeMap::new();
        let severe = counts(FrequencyColumn::Severe)?;
        let nonsevere = counts(FrequencyColumn::Nonsevere)?;
        for c in MergedConfig::ALL.iter().copied() {
            let room = new_sizes[&c];
            let sev = severe.as_ref().map(|s| within(s[&c], c).min(room));
            let non = nonsevere.as_ref().map(|s| within(s[&c], c).min(room - sev.unwrap_or(0)));
            for (col, k) in [(FrequencyColumn::Severe, sev), (FrequencyColumn::Nonsevere, non)] {
                if let Some(k) = k {
                    rescaled.entry(col).or_default().insert(c, k);
                }
            }
        }
        let l3 = counts(FrequencyColumn::L3)?;
        let l1 = counts(FrequencyColumn::L1)?;
        let complementary = matches!(
            (self.frequency.get(&FrequencyColumn::L3), self.frequency.get(&FrequencyColumn::L1)),
            (Some(a), Some(b)) if a.n.zip(b.n).is_some_and(|(a, b)| a + b == self.total_n)
        );
        for c in MergedConfig::ALL.iter().copied() {
            let room = new_sizes[&c];
            let k3 = l3.as_ref().map(|s| within(s[&c], c).min(room));
            let k1 = match (complementary, k3) {
                (true, Some(k3)) => Some(room - k3),
                _ => l1.as_ref().map(|s| within(s[&c], c).min(room)),
            };
            for (col, k) in [(FrequencyColumn::L3, k3), (FrequencyColumn::L1, k1)] {
                if let Some(k) = k {
                    rescaled.entry(col).or_default().insert(c, k);
                }
            }
        }
        for (col, per_config) in rescaled {
            let n: usize = per_config.values().sum();
            let fs = p.frequency.get_mut(&col).expect("column present in the source profile");
            fs.n = Some(n);
            fs.shares = per_config
                .into_iter()
                .map(|(c, k)| (c, if n == 0 { 0.0 } else { 100.0 * k as f64 / n as f64 }))
                .collect();
        }
        for fs in p.factors.values_mut() {
            fs.missing = scale(fs.missing);
        }
        for (c, fields) in p.numeric.iter_mut() {
            for m in fields.values_mut() {
                m.n = scale(m.n).min(new_sizes[c]);
            }
        }
        Ok(p)
    }

    /// Canonical text form; parsing it yields an equal profile.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: String, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("total_n".into(), self.total_n.to_string());
        kv("exclusions.rider_impairment".into(), self.exclusions.rider_impairment.to_string());
        kv("exclusions.mechanical".into(), self.exclusions.mechanical.to_string());
        kv("exclusions.mofa".into(), self.exclusions.mofa.to_string());
        for (col, f) in &self.frequency {
            if let Some(n) = f.n {
                kv(format!("frequency.{col}.n"), n.to_string());
            }
            for (c, v) in &f.shares {
                kv(format!("frequency.{col}.{c}"), v.to_string());
            }
        }
        for (m, v) in &self.mais_severe {
            kv(format!("mais.severe.{m}"), v.to_string());
        }
        for (m, v) in &self.mais_nonsevere {
            kv(format!("mais.nonsevere.{m}"), v.to_string());
        }
        for (c, f) in &self.factors {
            kv(format!("factor.{c}.missing"), f.missing.to_string());
            for (k, v) in &f.shares {
                kv(format!("factor.{c}.{k}"), v.to_string());
            }
        }
        for (c, e) in &self.evasive {
            kv(format!("evasive.{c}.no_action"), e.no_action.to_string());
            for (q, v) in &e.selection {
                kv(format!("evasive.{c}.selection.{q}"), v.to_string());
            }
            for (a, v) in &e.proper {
                kv(format!("evasive.{c}.proper.{a}"), v.to_string());
            }
            for (a, v) in &e.nonproper {
                kv(format!("evasive.{c}.nonproper.{a}"), v.to_string());
            }
            for (a, qs) in &e.execution {
                for (q, v) in qs {
                    kv(format!("evasive.{c}.execution.{a}.{q}"), v.to_string());
                }
            }
        }
        for (c, a) in &self.alignment {
            for (al, v) in a {
                kv(format!("alignment.{c}.{al}"), v.to_string());
            }
        }
        for (c, fields) in &self.numeric {
            for (f, m) in fields {
                kv(format!("numeric.{c}.{f}.mean"), m.mean.to_string());
                kv(format!("numeric.{c}.{f}.q1"), m.q1.to_string());
                kv(format!("numeric.{c}.{f}.q3"), m.q3.to_string());
                kv(format!("numeric.{c}.{f}.n"), m.n.to_string());
            }
        }
        if let Some(v) = self.speeding.overall {
            kv("speeding.overall".into(), v.to_string());
        }
        for (c, v) in &self.speeding.per_config {
            kv(format!("speeding.{c}"), v.to_string());
        }
        out
    }
}
