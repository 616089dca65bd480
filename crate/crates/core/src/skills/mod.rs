//! Configuration profiles and their mapping onto rider skill targets.

mod profile;
mod rules;

pub use profile::{
    build_profile, evasive_quality_breakdown, ActionExecution, AlignmentClass, ConfigProfile,
    EvasiveQualityBreakdown, Overrepresented, ProfileBuildError, Thresholds,
};
pub use rules::{
    map_skills, Condition, Field, Op, RuleSyntaxError, SkillMatch, SkillRule, SkillRulebook, Value,
    DEFAULT_RULES, UNMAPPED,
};
