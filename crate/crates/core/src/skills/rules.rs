//! Declarative rules mapping configuration profiles to skill targets.
//!
//! One rule per line:
//!
//! ```text
//! rule <id>: when <field> <op> <value> [and <field> <op> <value> ...] then skill "<tag>" because "<rationale>"
//! ```
//!
//! Blank lines and lines starting with `#` are ignored.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::model::{Actor, EvasiveAction, FactorKey, MergedConfig};

use super::profile::{AlignmentClass, ConfigProfile};

/// The committed default rules.
pub const DEFAULT_RULES: &str = include_str!("../../data/default.skills");

/// Tag emitted when no rule fires.
pub const UNMAPPED: &str = "unmapped";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}, column {column}: {message}")]
pub struct RuleSyntaxError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Number,
    Bool,
    Token,
    TokenSet,
}

macro_rules! fields {
    ($( $variant:ident => $name:literal : $kind:ident ),+ $(,)?) => {
        /// A profile field addressable from rules.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
        pub enum Field { $( $variant ),+ }

        impl Field {
            pub const ALL: &'static [Field] = &[$( Field::$variant ),+];

            pub fn name(self) -> &'static str {
                match self { $( Field::$variant => $name ),+ }
            }

            fn kind(self) -> Kind {
                match self { $( Field::$variant => Kind::$kind ),+ }
            }
        }

        impl FromStr for Field {
            type Err = ();
            fn from_str(s: &str) -> Result<Self, ()> {
                match s { $( $name => Ok(Field::$variant), )+ _ => Err(()) }
            }
        }
    };
}

fields! {
    Config => "config": Token,
    N => "n": Number,
    DominantFactor => "dominant_factor": TokenSet,
    DominantFactorShare => "dominant_factor_share": Number,
    DominantActor => "dominant_actor": Token,
    AlignmentMode => "alignment_mode": Token,
    CurveShare => "curve_share": Number,
    NoEvasiveShare => "no_evasive_share": Number,
    NoEvasiveHigh => "no_evasive_high": Bool,
    Overrepresented => "overrepresented": TokenSet,
    BrakePoorExecution => "brake_poor_execution": Number,
    SwervePoorExecution => "swerve_poor_execution": Number,
    MeanImpactSpeed => "mean_impact_speed": Number,
    SpeedingShare => "speeding_share": Number,
    TpeiMean => "tpei_mean": Number,
    ShortTpei => "short_tpei": Bool,
    FrequencyShare => "frequency_share": Number,
    SevereShare => "severe_share": Number,
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Op {
    Eq,
    Ne,
    Gt,
    Ge,
    Lt,
    Le,
    Contains,
}

impl Op {
    fn parse(s: &str) -> Option<Op> {
        Some(match s {
            "==" => Op::Eq,
            "!=" => Op::Ne,
            ">" => Op::Gt,
            ">=" => Op::Ge,
            "<" => Op::Lt,
            "<=" => Op::Le,
            "contains" => Op::Contains,
            _ => return None,
        })
    }

    fn as_str(self) -> &'static str {
        match self {
            Op::Eq => "==",
            Op::Ne => "!=",
            Op::Gt => ">",
            Op::Ge => ">=",
            Op::Lt => "<",
            Op::Le => "<=",
            Op::Contains => "contains",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Value {
    Number(f64),
    Bool(bool),
    Token(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub field: Field,
    pub op: Op,
    pub value: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkillRule {
    pub id: String,
    pub conditions: Vec<Condition>,
    pub skill: String,
    pub rationale: String,
}

/// A skill recommendation and the rule that produced it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkillMatch {
    pub skill: String,
    pub rationale: String,
    /// `None` for the unmapped fallback.
    pub rule: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SkillRulebook {
    pub rules: Vec<SkillRule>,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Quoted(String),
    Colon,
}

struct Lexed {
    tok: Tok,
    column: usize,
}

fn lex(line_no: usize, line: &str) -> Result<Vec<Lexed>, RuleSyntaxError> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c == ':' {
            out.push(Lexed { tok: Tok::Colon, column });
            i += 1;
        } else if c == '"' {
            let end = chars[i + 1..].iter().position(|&d| d == '"').ok_or(RuleSyntaxError {
                line: line_no,
                column,
                message: "unterminated string".into(),
            })?;
            out.push(Lexed {
                tok: Tok::Quoted(chars[i + 1..i + 1 + end].iter().collect()),
                column,
            });
            i += end + 2;
        } else {
            let start = i;
            while i < chars.len() && !chars[i].is_whitespace() && chars[i] != ':' && chars[i] != '"' {
                i += 1;
            }
            out.push(Lexed {
                tok: Tok::Word(chars[start..i].iter().collect()),
                column,
            });
        }
    }
    Ok(out)
}

struct Cursor<'a> {
    line: usize,
    toks: &'a [Lexed],
    pos: usize,
    end_column: usize,
}

impl Cursor<'_> {
    fn err(&self, column: usize, message: impl Into<String>) -> RuleSyntaxError {
        RuleSyntaxError {
            line: self.line,
            column,
            message: message.into(),
        }
    }

    fn column(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_column, |t| t.column)
    }

    fn next(&mut self, what: &str) -> Result<(&Tok, usize), RuleSyntaxError> {
        match self.toks.get(self.pos) {
            Some(t) => {
                self.pos += 1;
                Ok((&t.tok, t.column))
            }
            None => Err(self.err(self.end_column, format!("expected {what}, found end of line"))),
        }
    }

    fn word(&mut self, what: &str) -> Result<(String, usize), RuleSyntaxError> {
        match self.next(what)? {
            (Tok::Word(w), col) => Ok((w.clone(), col)),
            (_, col) => Err(self.err(col, format!("expected {what}"))),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), RuleSyntaxError> {
        let col = self.column();
        match self.word(&format!("`{kw}`"))? {
            (w, _) if w == kw => Ok(()),
            (w, _) => Err(self.err(col, format!("expected `{kw}`, found `{w}`"))),
        }
    }

    fn quoted(&mut self, what: &str) -> Result<String, RuleSyntaxError> {
        match self.next(what)? {
            (Tok::Quoted(s), _) => Ok(s.clone()),
            (_, col) => Err(self.err(col, format!("expected quoted {what}"))),
        }
    }
}

fn check_token(field: Field, token: &str) -> bool {
    match field {
        Field::Config => token.parse::<MergedConfig>().is_ok(),
        Field::DominantFactor => token.parse::<FactorKey>().is_ok(),
        Field::DominantActor => token.parse::<Actor>().is_ok(),
        Field::AlignmentMode => token.parse::<AlignmentClass>().is_ok(),
        Field::Overrepresented => token.parse::<EvasiveAction>().is_ok(),
        _ => false,
    }
}

fn parse_condition(cur: &mut Cursor<'_>) -> Result<Condition, RuleSyntaxError> {
    let (name, field_col) = cur.word("a field name")?;
    let field: Field = name
        .parse()
        .map_err(|_| cur.err(field_col, format!("unknown field `{name}`")))?;
    let (op_text, op_col) = cur.word("an operator")?;
    let op = Op::parse(&op_text).ok_or_else(|| cur.err(op_col, format!("unknown operator `{op_text}`")))?;
    let allowed = match field.kind() {
        Kind::Number => matches!(op, Op::Eq | Op::Ne | Op::Gt | Op::Ge | Op::Lt | Op::Le),
        Kind::Bool | Kind::Token => matches!(op, Op::Eq | Op::Ne),
        Kind::TokenSet => matches!(op, Op::Eq | Op::Ne | Op::Contains),
    };
    if !allowed {
        return Err(cur.err(op_col, format!("operator `{}` does not apply to `{field}`", op.as_str())));
    }
    let (raw, value_col) = cur.word("a value")?;
    let value = match field.kind() {
        Kind::Number => Value::Number(
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| cur.err(value_col, format!("`{field}` needs a number, found `{raw}`")))?,
        ),
        Kind::Bool => Value::Bool(match raw.as_str() {
            "true" => true,
            "false" => false,
            _ => return Err(cur.err(value_col, format!("`{field}` needs true or false, found `{raw}`"))),
        }),
        Kind::Token | Kind::TokenSet => {
            if !check_token(field, &raw) {
                return Err(cur.err(value_col, format!("`{raw}` is not a valid value for `{field}`")));
            }
            Value::Token(raw)
        }
    };
    Ok(Condition { field, op, value })
}

fn parse_rule(line_no: usize, line: &str) -> Result<SkillRule, RuleSyntaxError> {
    let toks = lex(line_no, line)?;
    let mut cur = Cursor {
        line: line_no,
        toks: &toks,
        pos: 0,
        end_column: line.chars().count() + 1,
    };
    cur.keyword("rule")?;
    let (id, _) = cur.word("a rule id")?;
    match cur.next("`:`")? {
        (Tok::Colon, _) => {}
        (_, col) => return Err(cur.err(col, "expected `:` after the rule id")),
    }
    cur.keyword("when")?;
    let mut conditions = vec![parse_condition(&mut cur)?];
    loop {
        let col = cur.column();
        let (w, _) = cur.word("`and` or `then`")?;
        match w.as_str() {
            "and" => conditions.push(parse_condition(&mut cur)?),
            "then" => break,
            _ => return Err(cur.err(col, format!("expected `and` or `then`, found `{w}`"))),
        }
    }
    cur.keyword("skill")?;
    let skill = cur.quoted("skill tag")?;
    cur.keyword("because")?;
    let rationale = cur.quoted("rationale")?;
    if cur.pos < toks.len() {
        return Err(cur.err(cur.column(), "unexpected text after the rationale"));
    }
    Ok(SkillRule {
        id,
        conditions,
        skill,
        rationale,
    })
}

impl SkillRulebook {
    pub fn parse(text: &str) -> Result<Self, RuleSyntaxError> {
        let mut rules = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            rules.push(parse_rule(idx + 1, line)?);
        }
        Ok(SkillRulebook { rules })
    }

    pub fn default_rules() -> Self {
        Self::parse(DEFAULT_RULES).expect("committed skill rules are valid")
    }
}

enum Actual {
    Number(Option<f64>),
    Bool(bool),
    Tokens(Vec<String>),
}

fn actual(profile: &ConfigProfile, field: Field) -> Actual {
    let one = |s: Option<String>| Actual::Tokens(s.into_iter().collect());
    match field {
        Field::Config => one(Some(profile.config.to_string())),
        Field::N => Actual::Number(Some(profile.n as f64)),
        Field::DominantFactor => {
            Actual::Tokens(profile.dominant_factors.iter().map(|k| k.to_string()).collect())
        }
        Field::DominantFactorShare => Actual::Number(profile.dominant_factor_share),
        Field::DominantActor => one(profile.dominant_actor.map(|a| a.to_string())),
        Field::AlignmentMode => one(profile.alignment_mode.map(|a| a.to_string())),
        Field::CurveShare => Actual::Number(profile.curve_share),
        Field::NoEvasiveShare => Actual::Number(profile.no_evasive_share),
        Field::NoEvasiveHigh => Actual::Bool(profile.no_evasive_high),
        Field::Overrepresented => {
            Actual::Tokens(profile.overrepresented.iter().map(|o| o.action.to_string()).collect())
        }
        Field::BrakePoorExecution => Actual::Number(profile.brake_poor_execution),
        Field::SwervePoorExecution => Actual::Number(profile.swerve_poor_execution),
        Field::MeanImpactSpeed => Actual::Number(profile.mean_impact_speed),
        Field::SpeedingShare => Actual::Number(profile.speeding_share),
        Field::TpeiMean => Actual::Number(profile.tpei.mean),
        Field::ShortTpei => Actual::Bool(profile.short_tpei),
        Field::FrequencyShare => Actual::Number(profile.frequency_share),
        Field::SevereShare => Actual::Number(profile.severe_share),
    }
}

impl Condition {
    /// Comparisons against an undefined number are false.
    pub fn holds(&self, profile: &ConfigProfile) -> bool {
        match (actual(profile, self.field), &self.value) {
            (Actual::Number(None), _) => false,
            (Actual::Number(Some(x)), Value::Number(v)) => match self.op {
                Op::Eq => x == *v,
                Op::Ne => x != *v,
                Op::Gt => x > *v,
                Op::Ge => x >= *v,
                Op::Lt => x < *v,
                Op::Le => x <= *v,
                Op::Contains => false,
            },
            (Actual::Bool(b), Value::Bool(v)) => match self.op {
                Op::Eq => b == *v,
                Op::Ne => b != *v,
                _ => false,
            },
            (Actual::Tokens(ts), Value::Token(v)) => {
                let has = ts.iter().any(|t| t == v);
                match self.op {
                    Op::Eq | Op::Contains => has,
                    Op::Ne => !has,
                    _ => false,
                }
            }
            _ => false,
        }
    }
}

impl SkillRule {
    pub fn fires(&self, profile: &ConfigProfile) -> bool {
        self.conditions.iter().all(|c| c.holds(profile))
    }
}

/// Every firing rule in order, merged by skill tag (first rationale wins);
/// a single `unmapped` entry when nothing fires.
pub fn map_skills(profile: &ConfigProfile, rulebook: &SkillRulebook) -> Vec<SkillMatch> {
    let mut out: Vec<SkillMatch> = Vec::new();
    for rule in rulebook.rules.iter().filter(|r| r.fires(profile)) {
        if out.iter().any(|m| m.skill == rule.skill) {
            continue;
        }
        out.push(SkillMatch {
            skill: rule.skill.clone(),
            rationale: rule.rationale.clone(),
            rule: Some(rule.id.clone()),
        });
    }
    if out.is_empty() {
        out.push(SkillMatch {
            skill: UNMAPPED.to_string(),
            rationale: "no rule matched this profile".to_string(),
            rule: None,
        });
    }
    out
}
