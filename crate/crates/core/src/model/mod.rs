//! Domain types for a single in-depth crash case.

mod maids;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use maids::{render_codebook, MaidsConfig, CODEBOOK, CODEBOOK_FILE, UNKNOWN_TOKEN};

use crate::token::{token_enum, UnknownToken};

token_enum! {
    /// Powered-two-wheeler vehicle class.
    pub enum PtwClass {
        /// Moped: design speed at most 45 km/h, engine at most 50 cm³.
        L1Moped => "L1_MOPED",
        L3Motorcycle => "L3_MOTORCYCLE",
        /// Low-power class excluded from the study population.
        Mofa => "MOFA",
    }
}

impl PtwClass {
    /// Accepts the canonical token or the short forms `L1`, `L3`, `mofa`.
    pub fn lookup(text: &str) -> Option<PtwClass> {
        match text.trim().to_ascii_uppercase().as_str() {
            "L1" | "L1_MOPED" | "MOPED" => Some(PtwClass::L1Moped),
            "L3" | "L3_MOTORCYCLE" | "MOTORCYCLE" => Some(PtwClass::L3Motorcycle),
            "MOFA" => Some(PtwClass::Mofa),
            _ => None,
        }
    }
}

token_enum! {
    /// Horizontal roadway alignment at the crash site.
    pub enum Alignment {
        Straight => "STRAIGHT",
        CurveLeft => "CURVE_LEFT",
        CurveRight => "CURVE_RIGHT",
        Corner => "CORNER",
        Jog => "JOG",
        Unknown => "UNKNOWN",
    }
}

impl Alignment {
    pub fn is_curve(self) -> bool {
        matches!(self, Alignment::CurveLeft | Alignment::CurveRight)
    }
}

token_enum! {
    /// The seven merged trajectory-based crash configurations plus the residual bucket.
    pub enum MergedConfig {
        /// Straight crossing paths, lateral direction.
        ScpLd => "SCP_LD",
        /// Turn into same or opposite path, lateral direction.
        TipLd => "TIP_LD",
        /// Turn across path, opposing direction.
        TapOd => "TAP_OD",
        /// Turn across path, same direction.
        TapSd => "TAP_SD",
        /// Rear-end, PTW striking, same direction.
        ReSd => "RE_SD",
        /// Head-on or sideswipe, opposing directions.
        HsOd => "HS_OD",
        /// Single vehicle, no other vehicle involved.
        Sv => "SV",
        Other => "OTHER",
    }
}

impl MergedConfig {
    /// The seven analysed configurations, excluding `Other`.
    pub const SELECTED: [MergedConfig; 7] = [
        MergedConfig::ScpLd,
        MergedConfig::TipLd,
        MergedConfig::TapOd,
        MergedConfig::TapSd,
        MergedConfig::ReSd,
        MergedConfig::HsOd,
        MergedConfig::Sv,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Label as printed in crash tables (`SCP/LD`).
    pub fn label(self) -> &'static str {
        match self {
            MergedConfig::ScpLd => "SCP/LD",
            MergedConfig::TipLd => "TIP/LD",
            MergedConfig::TapOd => "TAP/OD",
            MergedConfig::TapSd => "TAP/SD",
            MergedConfig::ReSd => "RE/SD",
            MergedConfig::HsOd => "HS/OD",
            MergedConfig::Sv => "SV",
            MergedConfig::Other => "OTHER",
        }
    }
}

token_enum! {
    /// Who generated the crash event.
    pub enum Actor {
        RiderMc => "RIDER_MC",
        DriverOv => "DRIVER_OV",
        Environment => "ENVIRONMENT",
        Other => "OTHER",
    }
}

impl Actor {
    pub fn is_human(self) -> bool {
        matches!(self, Actor::RiderMc | Actor::DriverOv)
    }
}

token_enum! {
    /// Information-processing stage at which a human failure occurred.
    pub enum Stage {
        Detection => "DETECTION",
        Comprehension => "COMPREHENSION",
        Decision => "DECISION",
        Execution => "EXECUTION",
        UnknownType => "UNKNOWN_TYPE",
    }
}

token_enum! {
    /// Non-human contributing factor categories.
    pub enum FactorDetail {
        ViewObstruction => "view_obstruction",
        AdverseWeather => "adverse_weather",
        RoadwayMaintenanceDefect => "roadway_maintenance_defect",
        RoadwayDesignDefect => "roadway_design_defect",
        RoadsideEnvironmentFactor => "roadside_environment_factor",
        TemporaryTrafficControl => "temporary_traffic_control",
        TrafficObstruction => "traffic_obstruction",
        UninvolvedOvManeuver => "uninvolved_ov_maneuver",
        OvAvoidingCollision => "ov_avoiding_collision",
        PtwAvoidingCollision => "ptw_avoiding_collision",
        OvPostCrashMotion => "ov_post_crash_motion",
        PtwMaintenanceProblem => "ptw_maintenance_problem",
        Other => "other",
    }
}

impl FactorDetail {
    /// The actor a detail is filed under in the contributing-factor table.
    pub fn actor(self) -> Actor {
        use FactorDetail::*;
        match self {
            ViewObstruction
            | AdverseWeather
            | RoadwayMaintenanceDefect
            | RoadwayDesignDefect
            | RoadsideEnvironmentFactor => Actor::Environment,
            _ => Actor::Other,
        }
    }
}

/// Primary crash contributing factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ContributingFactor {
    pub actor: Actor,
    pub stage: Option<Stage>,
    pub detail: Option<FactorDetail>,
}

impl ContributingFactor {
    pub fn human(actor: Actor, stage: Stage) -> Self {
        ContributingFactor {
            actor,
            stage: Some(stage),
            detail: None,
        }
    }

    pub fn external(detail: FactorDetail) -> Self {
        ContributingFactor {
            actor: detail.actor(),
            stage: None,
            detail: Some(detail),
        }
    }

    /// The tabulation key; total for validated factors.
    pub fn key(&self) -> FactorKey {
        let category = if self.actor.is_human() {
            FactorCategory::Stage(self.stage.unwrap_or(Stage::UnknownType))
        } else {
            FactorCategory::Detail(self.detail.unwrap_or(FactorDetail::Other))
        };
        FactorKey {
            actor: self.actor,
            category,
        }
    }

    pub fn from_key(key: FactorKey) -> Self {
        match key.category {
            FactorCategory::Stage(s) => ContributingFactor::human(key.actor, s),
            FactorCategory::Detail(d) => ContributingFactor {
                actor: key.actor,
                stage: None,
                detail: Some(d),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FactorCategory {
    Stage(Stage),
    Detail(FactorDetail),
}

/// `(actor, stage-or-detail)`, spelled `DRIVER_OV.DETECTION` or `ENVIRONMENT.adverse_weather`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FactorKey {
    pub actor: Actor,
    pub category: FactorCategory,
}

impl FactorKey {
    pub const fn stage(actor: Actor, stage: Stage) -> Self {
        FactorKey {
            actor,
            category: FactorCategory::Stage(stage),
        }
    }

    pub const fn detail(actor: Actor, detail: FactorDetail) -> Self {
        FactorKey {
            actor,
            category: FactorCategory::Detail(detail),
        }
    }

    pub fn stage_of(&self) -> Option<Stage> {
        match self.category {
            FactorCategory::Stage(s) => Some(s),
            FactorCategory::Detail(_) => None,
        }
    }

    /// Row order of the contributing-factor table.
    pub fn table_order() -> Vec<FactorKey> {
        use Stage::*;
        let mut keys = Vec::new();
        for actor in [Actor::DriverOv, Actor::RiderMc] {
            for stage in [Detection, Decision, Comprehension, Execution, UnknownType] {
                keys.push(FactorKey::stage(actor, stage));
            }
        }
        for d in FactorDetail::ALL {
            keys.push(FactorKey::detail(d.actor(), *d));
        }
        keys
    }
}

impl fmt::Display for FactorKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.category {
            FactorCategory::Stage(s) => write!(f, "{}.{}", self.actor, s),
            FactorCategory::Detail(d) => write!(f, "{}.{}", self.actor, d),
        }
    }
}

impl FromStr for FactorKey {
    type Err = UnknownToken;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || UnknownToken {
            kind: "FactorKey",
            token: s.to_string(),
        };
        let (actor, rest) = s.split_once('.').ok_or_else(bad)?;
        let actor: Actor = actor.parse()?;
        let category = if actor.is_human() {
            FactorCategory::Stage(rest.parse()?)
        } else {
            FactorCategory::Detail(rest.parse()?)
        };
        Ok(FactorKey { actor, category })
    }
}

impl Serialize for FactorKey {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FactorKey {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = <std::borrow::Cow<'de, str>>::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

token_enum! {
    pub enum EvasiveAction {
        Brake => "BRAKE",
        Swerve => "SWERVE",
        NoAction => "NO_ACTION",
        Other => "OTHER",
        Unknown => "UNKNOWN",
    }
}

impl EvasiveAction {
    /// Actions that can be assessed for selection and execution.
    pub const ATTEMPTED: [EvasiveAction; 3] =
        [EvasiveAction::Brake, EvasiveAction::Swerve, EvasiveAction::Other];
}

token_enum! {
    pub enum Quality {
        Proper => "PROPER",
        Improper => "IMPROPER",
        Unknown => "UNKNOWN",
    }
}

/// Collision-avoidance response and its assessment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EvasiveResponse {
    pub action: EvasiveAction,
    pub selection_quality: Quality,
    pub execution_quality: Quality,
}

impl EvasiveResponse {
    pub fn no_action() -> Self {
        EvasiveResponse {
            action: EvasiveAction::NoAction,
            selection_quality: Quality::Unknown,
            execution_quality: Quality::Unknown,
        }
    }
}

/// One in-depth crash case.
#[derive(Debug, Clone, PartialEq)]
pub struct CrashRecord {
    pub case_id: String,
    pub ptw_class: PtwClass,
    /// Maximum Abbreviated Injury Scale of the PTW user.
    pub mais: Option<u8>,
    pub maids_config: MaidsConfig,
    pub primary_factor: Option<ContributingFactor>,
    pub evasive: Option<EvasiveResponse>,
    pub alignment: Alignment,
    pub posted_speed_kmh: Option<f64>,
    pub impact_speed_kmh: Option<f64>,
    /// Time from precipitating event to impact.
    pub tpei_s: Option<f64>,
    pub rider_impairment_primary: bool,
    pub mechanical_primary: bool,
}

impl CrashRecord {
    /// A minimal well-formed record; fields not given are missing or false.
    pub fn new(case_id: impl Into<String>, ptw_class: PtwClass, maids_config: MaidsConfig) -> Self {
        CrashRecord {
            case_id: case_id.into(),
            ptw_class,
            mais: None,
            maids_config,
            primary_factor: None,
            evasive: None,
            alignment: Alignment::Unknown,
            posted_speed_kmh: None,
            impact_speed_kmh: None,
            tpei_s: None,
            rider_impairment_primary: false,
            mechanical_primary: false,
        }
    }

    pub fn is_severe(&self) -> Option<bool> {
        is_severe(self)
    }
}

pub const MAX_MAIS: u8 = 6;
pub const SEVERE_MAIS: u8 = 3;

/// A single invariant violation on a record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub reason: String,
}

impl Violation {
    fn new(field: &str, reason: &str) -> Self {
        Violation {
            field: field.to_string(),
            reason: reason.to_string(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.reason)
    }
}

/// Lists every invariant violation; an empty list means the record is accepted.
pub fn validate_record(record: &CrashRecord) -> Vec<Violation> {
    let mut out = Vec::new();
    if record.case_id.trim().is_empty() {
        out.push(Violation::new("case_id", "empty case id"));
    }
    if record.mais.is_some_and(|m| m > MAX_MAIS) {
        out.push(Violation::new("mais", "mais out of range"));
    }
    if let Some(v) = record.posted_speed_kmh {
        if !v.is_finite() || v <= 0.0 {
            out.push(Violation::new("posted_speed_kmh", "posted speed must be positive"));
        }
    }
    if let Some(v) = record.impact_speed_kmh {
        if !v.is_finite() || v < 0.0 {
            out.push(Violation::new("impact_speed_kmh", "negative speed"));
        }
    }
    if let Some(v) = record.tpei_s {
        if !v.is_finite() || v < 0.0 {
            out.push(Violation::new("tpei_s", "negative time"));
        }
    }
    if let Some(f) = &record.primary_factor {
        if f.actor.is_human() {
            if f.stage.is_none() {
                out.push(Violation::new("factor_stage", "stage required for rider or driver failure"));
            }
            if f.detail.is_some() {
                out.push(Violation::new("factor_detail", "detail only applies to environment or other factors"));
            }
        } else {
            if f.detail.is_none() {
                out.push(Violation::new("factor_detail", "detail required for environment or other factor"));
            }
            if f.stage.is_some() {
                out.push(Violation::new("factor_stage", "stage only applies to rider or driver failure"));
            }
        }
    }
    if let Some(e) = &record.evasive {
        if e.action == EvasiveAction::NoAction {
            if e.selection_quality != Quality::Unknown {
                out.push(Violation::new("evasive_selection", "selection not assessable without action"));
            }
            if e.execution_quality != Quality::Unknown {
                out.push(Violation::new("evasive_execution", "execution not assessable without action"));
            }
        }
    }
    out
}

/// Severe injury is MAIS 3 or higher; `None` when MAIS is missing.
pub fn is_severe(record: &CrashRecord) -> Option<bool> {
    record.mais.map(|m| m >= SEVERE_MAIS)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> CrashRecord {
        CrashRecord::new("c1", PtwClass::L3Motorcycle, MaidsConfig::HeadOnPtwOv)
    }

    #[test]
    fn mais_above_six_is_rejected() {
        let mut r = base();
        r.mais = Some(7);
        let v = validate_record(&r);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].reason, "mais out of range");
    }

    #[test]
    fn well_formed_speeds_pass() {
        let mut r = base();
        r.posted_speed_kmh = Some(50.0);
        r.impact_speed_kmh = Some(38.0);
        assert!(validate_record(&r).is_empty());
    }

    #[test]
    fn no_action_cannot_carry_execution_quality() {
        let mut r = base();
        r.evasive = Some(EvasiveResponse {
            action: EvasiveAction::NoAction,
            selection_quality: Quality::Unknown,
            execution_quality: Quality::Proper,
        });
        let v = validate_record(&r);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].reason, "execution not assessable without action");
    }

    #[test]
    fn factor_shape_violations() {
        let mut r = base();
        r.primary_factor = Some(ContributingFactor {
            actor: Actor::Environment,
            stage: None,
            detail: None,
        });
        assert_eq!(validate_record(&r)[0].field, "factor_detail");
        r.primary_factor = Some(ContributingFactor {
            actor: Actor::RiderMc,
            stage: None,
            detail: None,
        });
        assert_eq!(validate_record(&r)[0].field, "factor_stage");
    }

    #[test]
    fn negative_values_are_violations() {
        let mut r = base();
        r.impact_speed_kmh = Some(-5.0);
        r.posted_speed_kmh = Some(0.0);
        r.tpei_s = Some(-0.1);
        assert_eq!(validate_record(&r).len(), 3);
    }

    #[test]
    fn severity_threshold() {
        let mut r = base();
        r.mais = Some(3);
        assert_eq!(is_severe(&r), Some(true));
        r.mais = Some(2);
        assert_eq!(is_severe(&r), Some(false));
        r.mais = None;
        assert_eq!(is_severe(&r), None);
    }

    #[test]
    fn severity_is_monotone_in_mais() {
        let mut prev = false;
        for m in 0..=MAX_MAIS {
            let mut r = base();
            r.mais = Some(m);
            let s = is_severe(&r).unwrap();
            assert!(s >= prev);
            prev = s;
        }
    }

    #[test]
    fn factor_key_round_trip() {
        for key in FactorKey::table_order() {
            assert_eq!(key.to_string().parse::<FactorKey>().unwrap(), key);
            assert_eq!(ContributingFactor::from_key(key).key(), key);
        }
        assert!("RIDER_MC.view_obstruction".parse::<FactorKey>().is_err());
    }

    #[test]
    fn ptw_class_short_forms() {
        assert_eq!(PtwClass::lookup("L3"), Some(PtwClass::L3Motorcycle));
        assert_eq!(PtwClass::lookup("l1"), Some(PtwClass::L1Moped));
        assert_eq!(PtwClass::lookup("mofa"), Some(PtwClass::Mofa));
        assert_eq!(PtwClass::lookup("L7"), None);
    }
}
