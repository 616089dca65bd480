//! Mapping of MAIDS crash-group configurations onto merged configurations.

use std::collections::BTreeMap;

use crate::model::{CrashRecord, MaidsConfig, MergedConfig};

/// The committed default rulebook.
pub const TABLE_A1_RULEBOOK: &str = include_str!("../data/table_a1.rulebook");

/// Preimage size of each merged configuration under the default grouping.
pub const TABLE_A1_PREIMAGE: [(MergedConfig, usize); 8] = [
    (MergedConfig::ScpLd, 2),
    (MergedConfig::TipLd, 2),
    (MergedConfig::TapOd, 2),
    (MergedConfig::TapSd, 4),
    (MergedConfig::ReSd, 1),
    (MergedConfig::HsOd, 2),
    (MergedConfig::Sv, 3),
    (MergedConfig::Other, 9),
];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RulebookError {
    #[error("line {line}: expected `maids_token = merged_token`")]
    Syntax { line: usize },
    #[error("line {line}: unknown MAIDS configuration {token:?}")]
    UnknownMaids { line: usize, token: String },
    #[error("line {line}: unknown merged configuration {token:?}")]
    UnknownMerged { line: usize, token: String },
    #[error("line {line}: {token} is mapped twice")]
    Duplicate { line: usize, token: String },
    #[error("rulebook is not total; unmapped: {}", .0.join(", "))]
    NotTotal(Vec<String>),
    #[error("{config} has {actual} source configurations, expected {expected}")]
    PreimageSize {
        config: MergedConfig,
        expected: usize,
        actual: usize,
    },
}

/// Total function from the 25 coded MAIDS configurations to merged configurations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigRulebook {
    mapping: BTreeMap<MaidsConfig, MergedConfig>,
}

impl ConfigRulebook {
    /// Parses a rulebook and checks totality. Alternative groupings are allowed.
    pub fn parse(text: &str) -> Result<Self, RulebookError> {
        let mut mapping = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (lhs, rhs) = content
                .split_once('=')
                .ok_or(RulebookError::Syntax { line })?;
            let (lhs, rhs) = (lhs.trim(), rhs.trim());
            let maids = MaidsConfig::coded()
                .find(|c| c.as_str() == lhs)
                .ok_or_else(|| RulebookError::UnknownMaids {
                    line,
                    token: lhs.to_string(),
                })?;
            let merged: MergedConfig = rhs.parse().map_err(|_| RulebookError::UnknownMerged {
                line,
                token: rhs.to_string(),
            })?;
            if mapping.insert(maids, merged).is_some() {
                return Err(RulebookError::Duplicate {
                    line,
                    token: lhs.to_string(),
                });
            }
        }
        let missing: Vec<String> = MaidsConfig::coded()
            .filter(|c| !mapping.contains_key(c))
            .map(|c| c.as_str().to_string())
            .collect();
        if !missing.is_empty() {
            return Err(RulebookError::NotTotal(missing));
        }
        Ok(ConfigRulebook { mapping })
    }

    /// Parses and additionally pins the preimage sizes of the default grouping.
    pub fn parse_strict(text: &str) -> Result<Self, RulebookError> {
        let book = Self::parse(text)?;
        book.check_preimage_sizes(&TABLE_A1_PREIMAGE)?;
        Ok(book)
    }

    pub fn table_a1() -> Self {
        Self::parse_strict(TABLE_A1_RULEBOOK).expect("committed rulebook is valid")
    }

    pub fn check_preimage_sizes(
        &self,
        expected: &[(MergedConfig, usize)],
    ) -> Result<(), RulebookError> {
        for &(config, n) in expected {
            let actual = self.preimage(config).len();
            if actual != n {
                return Err(RulebookError::PreimageSize {
                    config,
                    expected: n,
                    actual,
                });
            }
        }
        Ok(())
    }

    /// MAIDS configurations merged into `config`, in codebook order.
    pub fn preimage(&self, config: MergedConfig) -> Vec<MaidsConfig> {
        MaidsConfig::coded()
            .filter(|c| self.mapping.get(c) == Some(&config))
            .collect()
    }

    pub fn get(&self, maids: MaidsConfig) -> MergedConfig {
        self.mapping
            .get(&maids)
            .copied()
            .unwrap_or(MergedConfig::Other)
    }

    /// Canonical text form, grouped by merged configuration.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for config in MergedConfig::ALL {
            for maids in self.preimage(*config) {
                out.push_str(&format!("{} = {}\n", maids, config));
            }
        }
        out
    }
}

/// Merged configuration of a record; uncoded configurations fall into `Other`.
pub fn classify(record: &CrashRecord, rulebook: &ConfigRulebook) -> MergedConfig {
    rulebook.get(record.maids_config)
}

/// Records split into the eight merged-configuration buckets.
#[derive(Debug, Clone, Default)]
pub struct Partition<'a> {
    buckets: [Vec<&'a CrashRecord>; 8],
}

impl<'a> Partition<'a> {
    pub fn get(&self, config: MergedConfig) -> &[&'a CrashRecord] {
        &self.buckets[config.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (MergedConfig, &[&'a CrashRecord])> + '_ {
        MergedConfig::ALL
            .iter()
            .map(move |c| (*c, self.buckets[c.index()].as_slice()))
    }

    /// Every record, bucket by bucket.
    pub fn records(&self) -> impl Iterator<Item = &'a CrashRecord> + '_ {
        self.buckets.iter().flatten().copied()
    }

    /// Records of the seven selected configurations.
    pub fn selected(&self) -> impl Iterator<Item = &'a CrashRecord> + '_ {
        MergedConfig::SELECTED
            .iter()
            .flat_map(move |c| self.buckets[c.index()].iter().copied())
    }

    pub fn len(&self) -> usize {
        self.buckets.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sizes(&self) -> [(MergedConfig, usize); 8] {
        let mut out = [(MergedConfig::Other, 0); 8];
        for (i, c) in MergedConfig::ALL.iter().enumerate() {
            out[i] = (*c, self.buckets[c.index()].len());
        }
        out
    }
}

pub fn partition<'a>(records: &'a [CrashRecord], rulebook: &ConfigRulebook) -> Partition<'a> {
    let mut p = Partition::default();
    for r in records {
        p.buckets[classify(r, rulebook).index()].push(r);
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PtwClass;

    fn rec(c: MaidsConfig) -> CrashRecord {
        CrashRecord::new("x", PtwClass::L3Motorcycle, c)
    }

    #[test]
    fn default_rulebook_examples() {
        let book = ConfigRulebook::table_a1();
        assert_eq!(
            classify(&rec(MaidsConfig::PtwImpactingRearOfOv), &book),
            MergedConfig::ReSd
        );
        assert_eq!(classify(&rec(MaidsConfig::PtwFallingNoOv), &book), MergedConfig::Sv);
        assert_eq!(
            classify(&rec(MaidsConfig::PtwFallingAvoidingOv), &book),
            MergedConfig::Other
        );
        assert_eq!(classify(&rec(MaidsConfig::Unknown), &book), MergedConfig::Other);
    }

    #[test]
    fn committed_file_is_canonical_modulo_comments() {
        let book = ConfigRulebook::table_a1();
        let stripped: String = TABLE_A1_RULEBOOK
            .lines()
            .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
            .map(|l| format!("{l}\n"))
            .collect();
        assert_eq!(book.render(), stripped);
    }

    #[test]
    fn missing_line_breaks_totality() {
        let text: String = TABLE_A1_RULEBOOK
            .lines()
            .filter(|l| !l.starts_with("other_unspecified"))
            .map(|l| format!("{l}\n"))
            .collect();
        assert_eq!(
            ConfigRulebook::parse(&text),
            Err(RulebookError::NotTotal(vec!["other_unspecified".into()]))
        );
    }

    #[test]
    fn remapping_violates_preimage_sizes_only_in_strict_mode() {
        let text = TABLE_A1_RULEBOOK.replace("other_unspecified = OTHER", "other_unspecified = SV");
        assert!(ConfigRulebook::parse(&text).is_ok());
        assert!(matches!(
            ConfigRulebook::parse_strict(&text),
            Err(RulebookError::PreimageSize { config: MergedConfig::Sv, expected: 3, actual: 4 })
        ));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        assert_eq!(
            ConfigRulebook::parse("# c\nhead_on_ptw_ov SV\n"),
            Err(RulebookError::Syntax { line: 2 })
        );
        assert!(matches!(
            ConfigRulebook::parse("bogus = SV"),
            Err(RulebookError::UnknownMaids { line: 1, .. })
        ));
        assert!(matches!(
            ConfigRulebook::parse("head_on_ptw_ov = XX"),
            Err(RulebookError::UnknownMerged { line: 1, .. })
        ));
        assert!(matches!(
            ConfigRulebook::parse("head_on_ptw_ov = SV\nhead_on_ptw_ov = SV"),
            Err(RulebookError::Duplicate { line: 2, .. })
        ));
    }

    #[test]
    fn partition_of_empty_and_singleton() {
        let book = ConfigRulebook::table_a1();
        let empty: Vec<CrashRecord> = vec![];
        let p = partition(&empty, &book);
        assert!(p.iter().all(|(_, b)| b.is_empty()));
        let one = vec![rec(MaidsConfig::PtwRunningOffNoOv)];
        let p = partition(&one, &book);
        for (c, b) in p.iter() {
            assert_eq!(b.len(), usize::from(c == MergedConfig::Sv));
        }
    }
}
