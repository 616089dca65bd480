//! Frequency tables, 2×2 odds ratios, numeric summaries and kinematics.
//!
//! Everything here is a pure function over records or counts.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::classify::Partition;
use crate::model::{CrashRecord, MergedConfig};
use crate::token::token_enum;

/// Two-sided 95% standard-normal quantile used for Woolf intervals.
pub const Z_95: f64 = 1.959964;


#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StatsError {
    #[error("degenerate margin in 2x2 table ({a}, {b}, {c}, {d})")]
    DegenerateMargin { a: u64, b: u64, c: u64, d: u64 },
    #[error("zero time budget")]
    ZeroTimeBudget,
    #[error("negative time budget")]
    NegativeTime,
    #[error("negative speed")]
    NegativeSpeed,
}

/// Rounds half away from zero to one decimal place.
pub fn round1(x: f64) -> f64 {
    let scaled = x * 10.0;
    // Snap values that are a hair below a .5 boundary because of binary representation.
    let nudged = scaled + scaled.signum() * 1e-9 * scaled.abs().max(1.0);
    nudged.round() / 10.0
}

/// A count out of a total, rounded to a percentage with exact integer arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Share {
    pub count: usize,
    pub total: usize,
}

impl Share {
    pub fn new(count: usize, total: usize) -> Self {
        Share { count, total }
    }

    /// Percentage in tenths of a percent, rounded half away from zero.
    pub fn tenths(self) -> Option<u64> {
        if self.total == 0 {
            return None;
        }
        let (k, n) = (self.count as u64, self.total as u64);
        Some((2000 * k + n) / (2 * n))
    }

    /// Percentage rounded to one decimal; `None` when the total is zero.
    pub fn pct(self) -> Option<f64> {
        self.tenths().map(|t| t as f64 / 10.0)
    }

    /// Unrounded percentage.
    pub fn exact(self) -> Option<f64> {
        (self.total > 0).then(|| 100.0 * self.count as f64 / self.total as f64)
    }
}

impl fmt::Display for Share {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.pct() {
            Some(p) => write!(f, "{p:.1}"),
            None => f.write_str("NA"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyRow {
    pub config: MergedConfig,
    pub count: usize,
    /// Percentage of the column total; `None` for an empty column.
    pub pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyTable {
    pub segment: String,
    pub column_n: usize,
    pub rows: Vec<FrequencyRow>,
}

impl FrequencyTable {
    pub fn row(&self, config: MergedConfig) -> Option<&FrequencyRow> {
        self.rows.iter().find(|r| r.config == config)
    }

    pub fn is_defined(&self) -> bool {
        self.column_n > 0
    }
}

/// Counts records satisfying `segment` in each configuration.
pub fn frequency_table(
    partition: &Partition<'_>,
    segment: &str,
    predicate: impl Fn(&CrashRecord) -> bool,
) -> FrequencyTable {
    let counts: Vec<(MergedConfig, usize)> = partition
        .iter()
        .map(|(c, recs)| (c, recs.iter().filter(|r| predicate(r)).count()))
        .collect();
    let column_n = counts.iter().map(|(_, n)| n).sum();
    FrequencyTable {
        segment: segment.to_string(),
        column_n,
        rows: counts
            .into_iter()
            .map(|(config, count)| FrequencyRow {
                config,
                count,
                pct: Share::new(count, column_n).pct(),
            })
            .collect(),
    }
}

/// A 2×2 odds ratio with its Woolf 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OddsRatioResult {
    /// Exposed with outcome.
    pub a: u64,
    /// Exposed without outcome.
    pub b: u64,
    /// Unexposed with outcome.
    pub c: u64,
    /// Unexposed without outcome.
    pub d: u64,
    pub or_value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub significant: bool,
    /// 0.5 was added to every cell because at least one was zero.
    pub corrected: bool,
}

impl OddsRatioResult {
    /// Lower bound rounds to 1.0 at one decimal: on the edge of significance.
    pub fn borderline(&self) -> bool {
        !self.significant && self.or_value > 1.0 && round1(self.ci_low) == 1.0
    }
}

pub fn odds_ratio(a: u64, b: u64, c: u64, d: u64) -> Result<OddsRatioResult, StatsError> {
    if a + b == 0 || c + d == 0 || a + c == 0 || b + d == 0 {
        return Err(StatsError::DegenerateMargin { a, b, c, d });
    }
    let corrected = a == 0 || b == 0 || c == 0 || d == 0;
    let shift = if corrected { 0.5 } else { 0.0 };
    let [fa, fb, fc, fd] = [a, b, c, d].map(|x| x as f64 + shift);
    let ln_or = (fa * fd / (fb * fc)).ln();
    let se = (1.0 / fa + 1.0 / fb + 1.0 / fc + 1.0 / fd).sqrt();
    let ci_low = (ln_or - Z_95 * se).exp();
    let ci_high = (ln_or + Z_95 * se).exp();
    Ok(OddsRatioResult {
        a,
        b,
        c,
        d,
        or_value: ln_or.exp(),
        ci_low,
        ci_high,
        significant: ci_low > 1.0 || ci_high < 1.0,
        corrected,
    })
}

/// Cells of the 2×2 table `config` versus the pooled remaining records,
/// crossed with `outcome`. Records with unknown outcome are dropped.
pub fn association_counts(
    partition: &Partition<'_>,
    config: MergedConfig,
    outcome: impl Fn(&CrashRecord) -> Option<bool>,
) -> [u64; 4] {
    let mut cells = [0u64; 4];
    for (c, recs) in partition.iter() {
        let exposed = c == config;
        for r in recs {
            if let Some(o) = outcome(r) {
                let idx = match (exposed, o) {
                    (true, true) => 0,
                    (true, false) => 1,
                    (false, true) => 2,
                    (false, false) => 3,
                };
                cells[idx] += 1;
            }
        }
    }
    cells
}

pub fn config_association(
    partition: &Partition<'_>,
    config: MergedConfig,
    outcome: impl Fn(&CrashRecord) -> Option<bool>,
) -> Result<OddsRatioResult, StatsError> {
    let [a, b, c, d] = association_counts(partition, config, outcome);
    odds_ratio(a, b, c, d)
}

token_enum! {
    /// The numeric fields summarised by mean and quartiles.
    pub enum NumericField {
        PostedSpeed => "posted_speed_kmh",
        ImpactSpeed => "impact_speed_kmh",
        Tpei => "tpei_s",
    }
}

impl NumericField {
    pub fn get(self, record: &CrashRecord) -> Option<f64> {
        match self {
            NumericField::PostedSpeed => record.posted_speed_kmh,
            NumericField::ImpactSpeed => record.impact_speed_kmh,
            NumericField::Tpei => record.tpei_s,
        }
    }
}

/// Mean and quartiles over present values; all `None` when `n == 0`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SpeedTimeSummary {
    pub n: usize,
    pub mean: Option<f64>,
    pub q1: Option<f64>,
    pub q3: Option<f64>,
}

impl SpeedTimeSummary {
    pub fn is_defined(&self) -> bool {
        self.n > 0
    }

    pub fn of_values(values: &[f64]) -> Self {
        if values.is_empty() {
            return SpeedTimeSummary::default();
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mean = sorted.iter().sum::<f64>() / sorted.len() as f64;
        SpeedTimeSummary {
            n: sorted.len(),
            mean: Some(mean),
            q1: Some(quantile_sorted(&sorted, 0.25)),
            q3: Some(quantile_sorted(&sorted, 0.75)),
        }
    }
}

/// Quantile by linear interpolation between closest ranks at position `1 + p(n-1)`.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty sample");
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize_numeric<'a>(
    records: impl IntoIterator<Item = &'a CrashRecord>,
    field: NumericField,
) -> SpeedTimeSummary {
    let values: Vec<f64> = records.into_iter().filter_map(|r| field.get(r)).collect();
    SpeedTimeSummary::of_values(&values)
}

/// Strictly more than 20% over the posted limit; unknown if either speed is missing.
pub fn speeding_flag(impact_speed_kmh: Option<f64>, posted_speed_kmh: Option<f64>) -> Option<bool> {
    let (impact, posted) = (impact_speed_kmh?, posted_speed_kmh?);
    // impact > 1.2 * posted, compared as 5*impact vs 6*posted with a relative
    // tolerance so that decimal inputs such as 60 vs 50 sit exactly on the boundary.
    let gap = impact * 5.0 - posted * 6.0;
    Some(gap > 1e-9 * posted.abs().max(1.0))
}

/// Share of records flagged speeding, over records with both speeds present.
pub fn speeding_share<'a>(records: impl IntoIterator<Item = &'a CrashRecord>) -> Share {
    let mut share = Share::default();
    for r in records {
        if let Some(s) = speeding_flag(r.impact_speed_kmh, r.posted_speed_kmh) {
            share.total += 1;
            share.count += usize::from(s);
        }
    }
    share
}

/// Constant deceleration (m/s²) that stops a vehicle at `speed_kmh` in `tpei_s` seconds.
pub fn required_deceleration(speed_kmh: f64, tpei_s: f64) -> Result<f64, StatsError> {
    if tpei_s == 0.0 {
        return Err(StatsError::ZeroTimeBudget);
    }
    if tpei_s < 0.0 {
        return Err(StatsError::NegativeTime);
    }
    if speed_kmh < 0.0 {
        return Err(StatsError::NegativeSpeed);
    }
    Ok(speed_kmh / 3.6 / tpei_s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::{partition, ConfigRulebook};
    use crate::model::{MaidsConfig, PtwClass};
    use proptest::prelude::*;

    #[test]
    fn share_rounding_is_half_away_from_zero() {
        assert_eq!(Share::new(1, 8).pct(), Some(12.5));
        assert_eq!(Share::new(1, 16).pct(), Some(6.3)); // 6.25
        assert_eq!(Share::new(3, 16).pct(), Some(18.8)); // 18.75
        assert_eq!(Share::new(136, 803).pct(), Some(16.9));
        assert_eq!(Share::new(0, 0).pct(), None);
        assert_eq!(round1(0.25), 0.3);
        assert_eq!(round1(-0.25), -0.3);
        assert_eq!(round1(1.04999), 1.0);
    }

    #[test]
    fn woolf_examples() {
        let r = odds_ratio(31, 64, 151, 554).unwrap();
        // Reference values from an independent evaluation of the Woolf formula.
        assert!((r.or_value - 1.777111).abs() < 1e-6, "{r:?}");
        assert!((r.ci_low - 1.116158).abs() < 1e-6, "{r:?}");
        assert!((r.ci_high - 2.829460).abs() < 1e-6, "{r:?}");
        assert!(r.significant && !r.corrected);

        let r = odds_ratio(78, 405, 11, 309).unwrap();
        assert_eq!(round1(r.or_value), 5.4);
        assert_eq!(round1(r.ci_low), 2.8);
        assert_eq!(round1(r.ci_high), 10.3);

        let r = odds_ratio(10, 10, 10, 10).unwrap();
        assert_eq!(r.or_value, 1.0);
        assert!(!r.significant);
    }

    #[test]
    fn zero_cell_applies_haldane_correction() {
        let r = odds_ratio(0, 10, 5, 10).unwrap();
        assert!(r.corrected);
        assert!((r.or_value - (0.5 * 10.5) / (10.5 * 5.5)).abs() < 1e-12);
    }

    #[test]
    fn degenerate_margins() {
        assert!(odds_ratio(0, 0, 3, 4).is_err());
        assert!(odds_ratio(3, 4, 0, 0).is_err());
        assert!(odds_ratio(3, 0, 4, 0).is_err());
    }

    fn records(spec: &[(MaidsConfig, Option<u8>)]) -> Vec<CrashRecord> {
        spec.iter()
            .enumerate()
            .map(|(i, (c, m))| {
                let mut r = CrashRecord::new(format!("r{i}"), PtwClass::L3Motorcycle, *c);
                r.mais = *m;
                r
            })
            .collect()
    }

    #[test]
    fn association_drops_unknown_outcomes() {
        let book = ConfigRulebook::table_a1();
        let recs = records(&[
            (MaidsConfig::HeadOnPtwOv, Some(4)),
            (MaidsConfig::HeadOnPtwOv, Some(1)),
            (MaidsConfig::HeadOnPtwOv, None),
            (MaidsConfig::PtwFallingNoOv, Some(1)),
            (MaidsConfig::PtwFallingNoOv, Some(5)),
        ]);
        let p = partition(&recs, &book);
        assert_eq!(
            association_counts(&p, MergedConfig::HsOd, CrashRecord::is_severe),
            [1, 1, 1, 1]
        );
    }

    #[test]
    fn constant_outcome_is_degenerate() {
        let book = ConfigRulebook::table_a1();
        let recs = records(&[(MaidsConfig::HeadOnPtwOv, Some(4)), (MaidsConfig::PtwFallingNoOv, Some(5))]);
        let p = partition(&recs, &book);
        assert!(matches!(
            config_association(&p, MergedConfig::HsOd, CrashRecord::is_severe),
            Err(StatsError::DegenerateMargin { .. })
        ));
    }

    #[test]
    fn frequency_table_singleton_and_empty() {
        let book = ConfigRulebook::table_a1();
        let recs = records(&[(MaidsConfig::PtwFallingNoOv, Some(1))]);
        let p = partition(&recs, &book);
        let t = frequency_table(&p, "Total", |_| true);
        assert_eq!(t.row(MergedConfig::Sv).unwrap().pct, Some(100.0));
        assert_eq!(t.row(MergedConfig::ScpLd).unwrap().pct, Some(0.0));
        let t = frequency_table(&p, "Severe", |r| r.is_severe() == Some(true));
        assert_eq!(t.column_n, 0);
        assert!(t.rows.iter().all(|r| r.pct.is_none()));
    }

    #[test]
    fn quartiles_by_linear_interpolation() {
        let s = SpeedTimeSummary::of_values(&[4.0, 2.0, 3.0, 1.0]);
        assert_eq!((s.n, s.mean, s.q1, s.q3), (4, Some(2.5), Some(1.75), Some(3.25)));
        assert!(!SpeedTimeSummary::of_values(&[]).is_defined());
        let s = SpeedTimeSummary::of_values(&[7.0]);
        assert_eq!((s.q1, s.q3), (Some(7.0), Some(7.0)));
    }

    #[test]
    fn speeding_boundary_is_strict() {
        assert_eq!(speeding_flag(Some(61.0), Some(50.0)), Some(true));
        assert_eq!(speeding_flag(Some(60.0), Some(50.0)), Some(false));
        assert_eq!(speeding_flag(Some(36.0), Some(30.0)), Some(false));
        assert_eq!(speeding_flag(Some(36.1), Some(30.0)), Some(true));
        assert_eq!(speeding_flag(None, Some(50.0)), None);
        assert_eq!(speeding_flag(Some(50.0), None), None);
    }

    #[test]
    fn deceleration_examples() {
        assert!((required_deceleration(50.0, 2.0).unwrap() - 6.944).abs() < 0.0005);
        assert_eq!(required_deceleration(0.0, 2.0).unwrap(), 0.0);
        assert!((required_deceleration(100.0, 2.0).unwrap() - 13.889).abs() < 0.0005);
        assert_eq!(required_deceleration(50.0, 0.0), Err(StatsError::ZeroTimeBudget));
        assert_eq!(required_deceleration(-1.0, 1.0), Err(StatsError::NegativeSpeed));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn or_reciprocity(a in 1u64..500, b in 1u64..500, c in 1u64..500, d in 1u64..500) {
            let x = odds_ratio(a, b, c, d).unwrap();
            let y = odds_ratio(b, a, d, c).unwrap();
            prop_assert!((x.or_value * y.or_value - 1.0).abs() < 1e-12);
            prop_assert!((x.ci_low * y.ci_high - 1.0).abs() < 1e-9);
            prop_assert!((x.ci_high * y.ci_low - 1.0).abs() < 1e-9);
        }

        #[test]
        fn or_row_scale_invariance(a in 1u64..500, b in 1u64..500, c in 1u64..500, d in 1u64..500, k in 2u64..20) {
            let x = odds_ratio(a, b, c, d).unwrap();
            let y = odds_ratio(k * a, k * b, c, d).unwrap();
            prop_assert!((x.or_value / y.or_value - 1.0).abs() < 1e-12);
        }

        #[test]
        fn significance_matches_interval(a in 1u64..500, b in 1u64..500, c in 1u64..500, d in 1u64..500) {
            let x = odds_ratio(a, b, c, d).unwrap();
            prop_assert!(x.ci_low <= x.or_value && x.or_value <= x.ci_high);
            prop_assert_eq!(x.significant, !(x.ci_low <= 1.0 && 1.0 <= x.ci_high));
        }

        #[test]
        fn deceleration_monotone(v in 0.0f64..200.0, dv in 0.01f64..50.0, t in 0.1f64..10.0, dt in 0.01f64..5.0) {
            let base = required_deceleration(v, t).unwrap();
            prop_assert!(required_deceleration(v + dv, t).unwrap() > base);
            if v > 0.0 {
                prop_assert!(required_deceleration(v, t + dt).unwrap() < base);
            }
        }

        #[test]
        fn pairwise_deletion(values in proptest::collection::vec(proptest::option::of(0.0f64..200.0), 0..60)) {
            let recs: Vec<CrashRecord> = values.iter().enumerate().map(|(i, v)| {
                let mut r = CrashRecord::new(format!("r{i}"), PtwClass::L1Moped, MaidsConfig::HeadOnPtwOv);
                r.impact_speed_kmh = *v;
                r
            }).collect();
            let s = summarize_numeric(&recs, NumericField::ImpactSpeed);
            prop_assert_eq!(s.n, values.iter().flatten().count());
            let mut more = recs.clone();
            more.push(CrashRecord::new("extra", PtwClass::L1Moped, MaidsConfig::HeadOnPtwOv));
            prop_assert_eq!(summarize_numeric(&more, NumericField::ImpactSpeed), s);
            if let (Some(q1), Some(q3)) = (s.q1, s.q3) {
                prop_assert!(q1 <= q3);
            }
        }

        #[test]
        fn share_tenths_match_float_rounding(k in 0usize..5000, extra in 1usize..5000) {
            let n = k + extra;
            let t = Share::new(k, n).tenths().unwrap();
            let x = 1000.0 * k as f64 / n as f64;
            // Exact ties are handled by integer arithmetic; elsewhere both agree.
            if (x - x.floor() - 0.5).abs() > 1e-6 {
                prop_assert_eq!(t as f64, x.round());
            }
        }
    }
}
