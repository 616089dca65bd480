//! Comparison of a dataset against the marginal profile it should reproduce.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::classify::{partition, ConfigRulebook};
use crate::ingest::filter_study_population;
use crate::model::{Alignment, CrashRecord, EvasiveAction, MergedConfig, PtwClass, Quality};
use crate::stats::{speeding_share, summarize_numeric, Share};
use crate::synth::{FrequencyColumn, MarginalProfile};

/// Largest accepted gap between a reproduced and a target percentage.
pub const SHARE_TOLERANCE: f64 = 0.1;
/// Largest accepted relative gap between a reproduced and a target mean.
pub const MEAN_TOLERANCE: f64 = 0.10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{status} {}: {}", self.name, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

#[derive(Default)]
struct Cells {
    n: usize,
    misses: Vec<String>,
}

impl Cells {
    /// Within [`SHARE_TOLERANCE`], or less than one record away from the exact
    /// quota (small columns cannot resolve every target to 0.1).
    fn share(&mut self, label: impl fmt::Display, got: Share, want: f64) {
        self.n += 1;
        let within_quota = (got.count as f64 - want * got.total as f64 / 100.0).abs() < 1.0 - 1e-9;
        match got.pct() {
            Some(g) if (g - want).abs() <= SHARE_TOLERANCE + 1e-9 || within_quota => {}
            _ => self.misses.push(format!("{label} {got} vs {want:.1}")),
        }
    }

    fn exact(&mut self, label: impl fmt::Display, got: usize, want: usize) {
        self.n += 1;
        if got != want {
            self.misses.push(format!("{label} {got} vs {want}"));
        }
    }

    fn mean(&mut self, label: impl fmt::Display, got: Option<f64>, want: f64) {
        self.n += 1;
        match got {
            Some(g) if (g - want).abs() <= MEAN_TOLERANCE * want.abs() + 1e-9 => {}
            Some(g) => self.misses.push(format!("{label} mean {g:.2} vs {want:.2}")),
            None => self.misses.push(format!("{label} mean undefined vs {want:.2}")),
        }
    }

    fn check(self, name: impl Into<String>) -> Check {
        let passed = self.misses.is_empty();
        let detail = if passed {
            format!("{} values match", self.n)
        } else {
            let shown: Vec<_> = self.misses.iter().take(5).cloned().collect();
            let more = if self.misses.len() > 5 { ", ..." } else { "" };
            format!("{} of {} off: {}{more}", self.misses.len(), self.n, shown.join(", "))
        };
        Check {
            name: name.into(),
            passed,
            detail,
        }
    }
}

fn share_of<T>(items: &[T], pred: impl Fn(&T) -> bool) -> Share {
    Share::new(items.iter().filter(|x| pred(x)).count(), items.len())
}

/// Runs every profile check on raw (unfiltered) records.
pub fn verify(records: Vec<CrashRecord>, profile: &MarginalProfile, rulebook: &ConfigRulebook) -> VerifyReport {
    let mut checks = Vec::new();
    let (kept, filter) = filter_study_population(records, rulebook);
    let p = partition(&kept, rulebook);

    let mut c = Cells::default();
    let ex = &profile.exclusions;
    c.exact("input", filter.n_input, profile.total_n + ex.total());
    c.exact(
        "impairment/mechanical",
        filter.n_excluded_impairment_mechanical,
        ex.rider_impairment + ex.mechanical,
    );
    c.exact("mofa", filter.n_excluded_mofa, ex.mofa);
    c.exact("study population", filter.n_study_population, profile.total_n);
    checks.push(c.check("population"));

    let mut c = Cells::default();
    match profile.bucket_sizes() {
        Ok(sizes) => {
            for (config, want) in sizes {
                c.exact(config, p.get(config).len(), want);
            }
        }
        Err(e) => c.misses.push(e.to_string()),
    }
    checks.push(c.check("configurations"));

    for col in profile.frequency.keys().copied() {
        let pred = |r: &CrashRecord| match col {
            FrequencyColumn::Total => true,
            FrequencyColumn::Severe => r.is_severe() == Some(true),
            FrequencyColumn::Nonsevere => r.is_severe() == Some(false),
            FrequencyColumn::L3 => r.ptw_class == PtwClass::L3Motorcycle,
            FrequencyColumn::L1 => r.ptw_class == PtwClass::L1Moped,
        };
        let mut c = Cells::default();
        let column_n = p.records().filter(|r| pred(r)).count();
        c.exact("N", column_n, profile.column_n(col));
        for config in MergedConfig::ALL.iter().copied() {
            let k = p.get(config).iter().filter(|r| pred(r)).count();
            c.share(config, Share::new(k, column_n), profile.frequency_share(col, config));
        }
        checks.push(c.check(format!("frequency.{col}")));
    }

    let mut c = Cells::default();
    for (severe, shares) in [(true, &profile.mais_severe), (false, &profile.mais_nonsevere)] {
        let levels: Vec<u8> = p
            .records()
            .filter(|r| r.is_severe() == Some(severe))
            .filter_map(|r| r.mais)
            .collect();
        for (level, want) in shares {
            c.share(format!("MAIS {level}"), share_of(&levels, |m| m == level), *want);
        }
    }
    checks.push(c.check("mais"));

    for (config, f) in &profile.factors {
        let bucket = p.get(*config);
        let mut c = Cells::default();
        let missing = bucket.iter().filter(|r| r.primary_factor.is_none()).count();
        c.exact("missing", missing, f.missing);
        let keys: Vec<_> = bucket.iter().filter_map(|r| r.primary_factor.map(|x| x.key())).collect();
        let seen: BTreeSet<_> = keys.iter().copied().chain(f.shares.keys().copied()).collect();
        for key in seen {
            c.share(key, share_of(&keys, |k| *k == key), f.shares.get(&key).copied().unwrap_or(0.0));
        }
        checks.push(c.check(format!("factor.{config}")));
    }

    for (config, e) in &profile.evasive {
        let responses: Vec<_> = p.get(*config).iter().filter_map(|r| r.evasive).collect();
        let mut c = Cells::default();
        c.share("no_action", share_of(&responses, |r| r.action == EvasiveAction::NoAction), e.no_action);
        let attempted: Vec<_> = responses.iter().filter(|r| r.action != EvasiveAction::NoAction).collect();
        for (q, want) in &e.selection {
            c.share(format!("selection {q}"), share_of(&attempted, |r| r.selection_quality == *q), *want);
        }
        let proper: Vec<_> = attempted.iter().filter(|r| r.selection_quality == Quality::Proper).collect();
        let nonproper: Vec<_> = attempted.iter().filter(|r| r.selection_quality != Quality::Proper).collect();
        for (a, want) in &e.proper {
            c.share(format!("proper {a}"), share_of(&proper, |r| r.action == *a), *want);
        }
        for (a, want) in &e.nonproper {
            c.share(format!("nonproper {a}"), share_of(&nonproper, |r| r.action == *a), *want);
        }
        for (a, qualities) in &e.execution {
            let of_action: Vec<_> = proper.iter().filter(|r| r.action == *a).collect();
            for (q, want) in qualities {
                c.share(
                    format!("execution {a} {q}"),
                    share_of(&of_action, |r| r.execution_quality == *q),
                    *want,
                );
            }
        }
        checks.push(c.check(format!("evasive.{config}")));
    }

    for (config, shares) in &profile.alignment {
        let values: Vec<Alignment> = p.get(*config).iter().map(|r| r.alignment).collect();
        let mut c = Cells::default();
        for a in Alignment::ALL {
            c.share(a, share_of(&values, |v| v == a), shares.get(a).copied().unwrap_or(0.0));
        }
        checks.push(c.check(format!("alignment.{config}")));
    }

    for (config, fields) in &profile.numeric {
        let mut c = Cells::default();
        for (field, m) in fields {
            let s = summarize_numeric(p.get(*config).iter().copied(), *field);
            c.exact(format!("{field} n"), s.n, m.n);
            c.mean(field, s.mean, m.mean);
        }
        checks.push(c.check(format!("numeric.{config}")));
    }

    let mut c = Cells::default();
    if let Some(want) = profile.speeding.overall {
        c.share("overall", speeding_share(p.selected()), want);
    }
    for (config, want) in &profile.speeding.per_config {
        c.share(config, speeding_share(p.get(*config).iter().copied()), *want);
    }
    checks.push(c.check("speeding"));

    VerifyReport { checks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::generate;

    #[test]
    fn generated_data_passes_its_own_profile() {
        let profile = MarginalProfile::default_profile();
        let records = generate(&profile, 11).unwrap();
        let report = verify(records, &profile, &ConfigRulebook::table_a1());
        for c in &report.checks {
            assert!(c.passed, "{c}");
        }
        assert!(report.checks.len() > 30);
    }

    #[test]
    fn tampering_is_detected() {
        let profile = MarginalProfile::default_profile();
        let mut records = generate(&profile, 11).unwrap();
        records.truncate(900);
        let report = verify(records, &profile, &ConfigRulebook::table_a1());
        assert!(!report.passed());
        let first = report.failures().next().unwrap();
        assert_eq!(first.name, "population");
        assert!(first.to_string().starts_with("FAIL population: "));
    }
}
