//! The 25 crash-group configurations of the MAIDS coding manual.
//!
//! Each configuration has a canonical snake_case token (the on-disk spelling)
//! and the description string used in the grouping table. The committed
//! codebook file `data/maids_codebook.txt` is a rendering of [`CODEBOOK`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::token::UnknownToken;

/// A MAIDS crash-group configuration, or `Unknown` when not coded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MaidsConfig {
    PtwIntoOvPerpendicular,
    OvIntoPtwPerpendicular,
    OvTurningLeftPtwPerpendicular,
    OvTurningRightPtwPerpendicular,
    OppositeOvTurnsPtwImpacting,
    OppositeOvTurnsOvImpacting,
    PtwOvertakingOvTurningLeft,
    OvUTurnAheadOfPtw,
    SideswipeSameDirection,
    PtwOvertakingOvTurningRight,
    PtwImpactingRearOfOv,
    HeadOnPtwOv,
    SideswipeOppositeDirection,
    PtwFallingNoOv,
    PtwRunningOffNoOv,
    OtherPtwNoOv,
    PtwFallingAvoidingOv,
    OvImpactingRearOfPtw,
    PtwImpactingEnvironmentalObject,
    PtwImpactingPedestrianOrAnimal,
    PtwTurningLeftOvPerpendicular,
    OvEnteringFailingToYield,
    PtwRunningOffAvoidingOv,
    PtwTurningRightOvPerpendicular,
    OtherUnspecified,
    Unknown,
}

/// `(configuration, token, description)` for every coded configuration.
pub const CODEBOOK: [(MaidsConfig, &str, &str); 25] = {
    use MaidsConfig::*;
    [
        (PtwIntoOvPerpendicular, "ptw_into_ov_perpendicular", "PTW into OV impact at intersection; paths perpendicular"),
        (OvIntoPtwPerpendicular, "ov_into_ptw_perpendicular", "OV into PTW impact at intersection; paths perpendicular"),
        (OvTurningLeftPtwPerpendicular, "ov_turning_left_ptw_perpendicular", "OV turning left in front of PTW, PTW perpendicular to OV path"),
        (OvTurningRightPtwPerpendicular, "ov_turning_right_ptw_perpendicular", "OV turning right in front of PTW, PTW perpendicular to OV path"),
        (OppositeOvTurnsPtwImpacting, "opposite_ov_turns_ptw_impacting", "PTW & OV in opp. dir., OV turns in front of PTW, PTW impacting"),
        (OppositeOvTurnsOvImpacting, "opposite_ov_turns_ov_impacting", "PTW & OV in opp. dir., OV turns in front of PTW, OV impacting"),
        (PtwOvertakingOvTurningLeft, "ptw_overtaking_ov_turning_left", "PTW overtaking OV while OV turning left"),
        (OvUTurnAheadOfPtw, "ov_u_turn_ahead_of_ptw", "OV making U-turn or Y-turn ahead of PTW"),
        (SideswipeSameDirection, "sideswipe_same_direction", "sideswipe, OV and PTW travelling in same directions"),
        (PtwOvertakingOvTurningRight, "ptw_overtaking_ov_turning_right", "PTW overtaking OV while OV turning right"),
        (PtwImpactingRearOfOv, "ptw_impacting_rear_of_ov", "PTW impacting rear of OV"),
        (HeadOnPtwOv, "head_on_ptw_ov", "head-on collision of PTW and OV"),
        (SideswipeOppositeDirection, "sideswipe_opposite_direction", "sideswipe, OV and PTW travelling in opposite directions"),
        (PtwFallingNoOv, "ptw_falling_no_ov", "PTW falling on roadway, no OV involvement"),
        (PtwRunningOffNoOv, "ptw_running_off_no_ov", "PTW running off roadway, no OV involvement"),
        (OtherPtwNoOv, "other_ptw_no_ov", "other PTW accidents with no OV or other involvement"),
        (PtwFallingAvoidingOv, "ptw_falling_avoiding_ov", "PTW falling on roadway in collision avoidance with OV"),
        (OvImpactingRearOfPtw, "ov_impacting_rear_of_ptw", "OV impacting rear of PTW"),
        (PtwImpactingEnvironmentalObject, "ptw_impacting_environmental_object", "PTW impacting environmental object"),
        (PtwImpactingPedestrianOrAnimal, "ptw_impacting_pedestrian_or_animal", "PTW impacting pedestrian or animal"),
        (PtwTurningLeftOvPerpendicular, "ptw_turning_left_ov_perpendicular", "PTW turning L in front of OV, OV proc in either direction perpendicular to PTW path"),
        (OvEnteringFailingToYield, "ov_entering_failing_to_yield", "OV entering roadway failing to yield to PTW right of way"),
        (PtwRunningOffAvoidingOv, "ptw_running_off_avoiding_ov", "PTW running off roadway in collision avoidance with OV"),
        (PtwTurningRightOvPerpendicular, "ptw_turning_right_ov_perpendicular", "PTW turning R in front of OV, OV proc in either direction perpendicular to PTW path"),
        (OtherUnspecified, "other_unspecified", "Other"),
    ]
};

/// Description strings accepted in input files besides the canonical ones.
const DESCRIPTION_ALIASES: [(&str, MaidsConfig); 1] =
    [("other PTW/OV impacts", MaidsConfig::OtherUnspecified)];

pub const UNKNOWN_TOKEN: &str = "unknown";

impl MaidsConfig {
    /// The 25 coded configurations, in codebook order.
    pub fn coded() -> impl Iterator<Item = MaidsConfig> {
        CODEBOOK.iter().map(|(c, _, _)| *c)
    }

    pub fn as_str(self) -> &'static str {
        CODEBOOK
            .iter()
            .find(|(c, _, _)| *c == self)
            .map_or(UNKNOWN_TOKEN, |(_, t, _)| t)
    }

    pub fn description(self) -> &'static str {
        CODEBOOK
            .iter()
            .find(|(c, _, _)| *c == self)
            .map_or("unknown", |(_, _, d)| d)
    }

    /// Resolves either a canonical token or a description string
    /// (descriptions match case-insensitively).
    pub fn lookup(text: &str) -> Option<MaidsConfig> {
        let text = text.trim();
        if text.eq_ignore_ascii_case(UNKNOWN_TOKEN) {
            return Some(MaidsConfig::Unknown);
        }
        CODEBOOK
            .iter()
            .find(|(_, t, d)| *t == text || d.eq_ignore_ascii_case(text))
            .map(|(c, _, _)| *c)
            .or_else(|| {
                DESCRIPTION_ALIASES
                    .iter()
                    .find(|(d, _)| d.eq_ignore_ascii_case(text))
                    .map(|(_, c)| *c)
            })
    }
}

impl FromStr for MaidsConfig {
    type Err = UnknownToken;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MaidsConfig::lookup(s).ok_or_else(|| UnknownToken {
            kind: "MaidsConfig",
            token: s.to_string(),
        })
    }
}

impl fmt::Display for MaidsConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for MaidsConfig {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for MaidsConfig {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = <std::borrow::Cow<'de, str>>::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Renders the codebook file: one `token = description` line per configuration.
pub fn render_codebook() -> String {
    let mut out = String::from("# MAIDS crash-group configurations: token = description\n");
    for (_, token, description) in CODEBOOK {
        out.push_str(token);
        out.push_str(" = ");
        out.push_str(description);
        out.push('\n');
    }
    out
}

/// The committed codebook file.
pub const CODEBOOK_FILE: &str = include_str!("../../data/maids_codebook.txt");

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn committed_codebook_matches_table() {
        assert_eq!(CODEBOOK_FILE, render_codebook());
    }

    #[test]
    fn tokens_and_descriptions_are_unique() {
        let tokens: HashSet<_> = CODEBOOK.iter().map(|(_, t, _)| *t).collect();
        let descs: HashSet<_> = CODEBOOK.iter().map(|(_, _, d)| d.to_lowercase()).collect();
        let configs: HashSet<_> = CODEBOOK.iter().map(|(c, _, _)| *c).collect();
        assert_eq!(tokens.len(), 25);
        assert_eq!(descs.len(), 25);
        assert_eq!(configs.len(), 25);
        assert!(!configs.contains(&MaidsConfig::Unknown));
    }

    #[test]
    fn lookup_accepts_tokens_descriptions_and_aliases() {
        assert_eq!(
            MaidsConfig::lookup("head-on collision of PTW and OV"),
            Some(MaidsConfig::HeadOnPtwOv)
        );
        assert_eq!(
            MaidsConfig::lookup("HEAD-ON COLLISION OF PTW AND OV"),
            Some(MaidsConfig::HeadOnPtwOv)
        );
        assert_eq!(
            MaidsConfig::lookup("ptw_impacting_rear_of_ov"),
            Some(MaidsConfig::PtwImpactingRearOfOv)
        );
        assert_eq!(
            MaidsConfig::lookup("other PTW/OV impacts"),
            Some(MaidsConfig::OtherUnspecified)
        );
        assert_eq!(MaidsConfig::lookup("unknown"), Some(MaidsConfig::Unknown));
        assert_eq!(MaidsConfig::lookup("bicycle"), None);
    }

    #[test]
    fn token_round_trip() {
        for c in MaidsConfig::coded().chain([MaidsConfig::Unknown]) {
            assert_eq!(c.as_str().parse::<MaidsConfig>().unwrap(), c);
        }
    }
}
