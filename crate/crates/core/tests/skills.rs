use std::collections::BTreeMap;
use std::sync::OnceLock;

use crashlens::classify::{classify, partition, ConfigRulebook};
use crashlens::ingest::filter_study_population;
use crashlens::model::{Actor, CrashRecord, EvasiveAction, FactorKey, MergedConfig, Stage};
use crashlens::skills::{
    build_profile, evasive_quality_breakdown, map_skills, ConfigProfile, SkillRulebook, Thresholds,
    UNMAPPED,
};
use crashlens::synth::{generate, MarginalProfile};
use proptest::prelude::*;

const CURVE: &str = "curve trajectory, lane position and speed selection";
const RISK: &str = "risk attitudes, overtaking and speed choice";
const PERCEPTION: &str = "perception–action coupling under time pressure";

fn study(seed: u64) -> Vec<CrashRecord> {
    let records = generate(&MarginalProfile::default_profile(), seed).unwrap();
    filter_study_population(records, &ConfigRulebook::table_a1()).0
}

fn cached(seed: u64) -> &'static [CrashRecord] {
    static CACHE: OnceLock<Vec<Vec<CrashRecord>>> = OnceLock::new();
    &CACHE.get_or_init(|| (0..5).map(study).collect())[seed as usize]
}

fn profiles(records: &[CrashRecord], thresholds: &Thresholds) -> Vec<ConfigProfile> {
    let p = partition(records, &ConfigRulebook::table_a1());
    MergedConfig::ALL
        .iter()
        .map(|c| build_profile(&p, *c, thresholds).unwrap())
        .collect()
}

fn tags(profile: &ConfigProfile, book: &SkillRulebook) -> Vec<String> {
    map_skills(profile, book).into_iter().map(|m| m.skill).collect()
}

fn close(got: Option<f64>, want: f64, tol: f64) -> bool {
    got.is_some_and(|g| (g - want).abs() <= tol + 1e-9)
}

#[test]
fn tap_od_is_led_by_driver_detection() {
    let records = study(42);
    let prof = &profiles(&records, &Thresholds::default())[MergedConfig::TapOd.index()];
    assert_eq!(prof.dominant_factors, [FactorKey::stage(Actor::DriverOv, Stage::Detection)]);
    assert!(close(prof.dominant_factor_share, 67.4, 0.05), "{:?}", prof.dominant_factor_share);
}

#[test]
fn single_vehicle_profile() {
    let records = study(42);
    let prof = &profiles(&records, &Thresholds::default())[MergedConfig::Sv.index()];
    assert_eq!(prof.dominant_actor, Some(Actor::RiderMc));
    assert!(close(prof.actor_shares.get(&Actor::RiderMc).copied(), 67.4, 0.05));
    assert!(close(prof.mean_impact_speed, 63.8, 63.8 * 0.1));
    assert!(close(prof.speeding_share, 21.2, 0.05));
    assert_eq!(tags(prof, &SkillRulebook::default_rules()), [CURVE, RISK]);
}

#[test]
fn rider_shares_of_rear_end_and_head_on() {
    let records = study(42);
    let all = profiles(&records, &Thresholds::default());
    let rider = |c: MergedConfig| all[c.index()].actor_shares.get(&Actor::RiderMc).copied();
    assert!(close(rider(MergedConfig::ReSd), 50.0, 0.05));
    assert!(close(rider(MergedConfig::HsOd), 49.2, 0.05));
}

#[test]
fn same_lane_direction_lacks_avoidance() {
    let records = study(42);
    let prof = &profiles(&records, &Thresholds::default())[MergedConfig::ScpLd.index()];
    assert!(close(prof.no_evasive_share, 47.1, 0.05));
    assert!(prof.no_evasive_high);
    assert!(tags(prof, &SkillRulebook::default_rules()).iter().any(|t| t == PERCEPTION));
}

#[test]
fn every_configuration_maps_to_something() {
    let records = study(7);
    let book = SkillRulebook::default_rules();
    for prof in profiles(&records, &Thresholds::default()) {
        let found = tags(&prof, &book);
        assert!(!found.is_empty());
        assert!(!found.iter().any(|t| t == UNMAPPED), "{}", prof.config);
    }
}

#[test]
fn empty_rulebook_is_unmapped() {
    let records = study(42);
    let prof = &profiles(&records, &Thresholds::default())[0];
    let got = map_skills(prof, &SkillRulebook::default());
    assert_eq!(got.len(), 1);
    assert_eq!(got[0].skill, UNMAPPED);
    assert_eq!(got[0].rule, None);
}

#[test]
fn duplicate_tags_keep_first_rationale() {
    let book = SkillRulebook::parse(
        "rule a: when n > 0 then skill \"t\" because \"first\"\n\
         rule b: when n >= 0 then skill \"t\" because \"second\"\n\
         rule c: when config != SV then skill \"u\" because \"third\"",
    )
    .unwrap();
    let records = study(42);
    let prof = &profiles(&records, &Thresholds::default())[0];
    let got = map_skills(prof, &book);
    assert_eq!(got.len(), 2);
    assert_eq!((got[0].rationale.as_str(), got[0].rule.as_deref()), ("first", Some("a")));
    assert_eq!(got[1].skill, "u");
}

#[test]
fn evasive_quality_matches_published_totals() {
    let records = study(42);
    let p = partition(&records, &ConfigRulebook::table_a1());
    let b = evasive_quality_breakdown(&p, None);
    assert_eq!(b.attempted, 374);
    assert_eq!(b.selection_proper.to_string(), "81.6");
    let exec = |a: EvasiveAction| b.execution.iter().find(|e| e.action == a).unwrap().improper;
    assert_eq!(exec(EvasiveAction::Brake).to_string(), "43.1");
    assert_eq!(exec(EvasiveAction::Swerve).to_string(), "37.9");
    assert!(evasive_quality_breakdown(&p, Some(MergedConfig::Sv)).is_empty());
}

#[test]
fn profile_shares_match_record_by_record_counts() {
    let records = study(3);
    let book = ConfigRulebook::table_a1();
    for prof in profiles(&records, &Thresholds::default()) {
        let mine: Vec<&CrashRecord> =
            records.iter().filter(|r| classify(r, &book) == prof.config).collect();
        assert_eq!(prof.n, mine.len());
        let mut counts: BTreeMap<FactorKey, usize> = BTreeMap::new();
        for f in mine.iter().filter_map(|r| r.primary_factor) {
            *counts.entry(f.key()).or_default() += 1;
        }
        let known: usize = counts.values().sum();
        assert_eq!(prof.factor_n, known);
        for (k, c) in &counts {
            let want = 100.0 * *c as f64 / known as f64;
            assert!((prof.factor_shares[k] - want).abs() < 1e-9, "{} {k}", prof.config);
        }
        let total: f64 = prof.factor_shares.values().sum();
        assert!((total - 100.0).abs() <= 0.1);
        let no_action = mine
            .iter()
            .filter_map(|r| r.evasive)
            .filter(|e| e.action == EvasiveAction::NoAction)
            .count();
        let with_evasive = mine.iter().filter(|r| r.evasive.is_some()).count();
        assert_eq!(prof.evasive_n, with_evasive);
        if with_evasive > 0 {
            let want = 100.0 * no_action as f64 / with_evasive as f64;
            assert!((prof.no_evasive_share.unwrap() - want).abs() < 1e-9);
        }
        for o in &prof.overrepresented {
            assert!(o.odds.or_value > 1.0);
            assert!(o.odds.ci_low <= o.odds.or_value && o.odds.or_value <= o.odds.ci_high);
        }
    }
}

#[test]
fn rule_file_errors_carry_positions() {
    let text = format!("{}\nrule z: when alignment == CURVE then skill \"x\" because \"y\"\n", crashlens::skills::DEFAULT_RULES);
    let err = SkillRulebook::parse(&text).unwrap_err();
    assert_eq!(err.line, text.lines().count());
    assert_eq!(err.column, 14);
    assert!(err.to_string().contains("unknown field `alignment`"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn raising_no_action_threshold_never_adds_perception(lo in 0.0f64..100.0, step in 0.0f64..50.0, seed in 0u64..4) {
        let records = cached(seed);
        let book = SkillRulebook::default_rules();
        let fires = |t: f64| -> Vec<bool> {
            let th = Thresholds { no_evasive_pct: t, ..Thresholds::default() };
            profiles(records, &th).iter().map(|p| tags(p, &book).iter().any(|s| s == PERCEPTION)).collect()
        };
        let low = fires(lo);
        let high = fires(lo + step);
        for (l, h) in low.iter().zip(&high) {
            prop_assert!(*l || !*h);
        }
    }

    #[test]
    fn mapping_is_pure(seed in 0u64..4, pick in 0usize..8) {
        let records = cached(seed);
        let book = SkillRulebook::default_rules();
        let prof = &profiles(records, &Thresholds::default())[pick];
        let first = map_skills(prof, &book);
        let _ = profiles(cached(seed + 1), &Thresholds::default());
        prop_assert_eq!(first, map_skills(&prof.clone(), &book));
    }
}
