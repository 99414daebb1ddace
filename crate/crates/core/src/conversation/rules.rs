use std::collections::BTreeMap;
use std::path::Path;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{ConversationError, Label, LabelSource, Utterance};

const EN_RULES: &str = include_str!("rules_en.json");
const JA_RULES: &str = include_str!("rules_ja.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PatternKind {
    /// Case-insensitive substring; the right choice for unsegmented scripts.
    Literal,
    /// Case-insensitive whole-token sequence.
    Word,
    Regex,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Pattern {
    pub kind: PatternKind,
    pub pattern: String,
    #[serde(default = "unit_weight")]
    pub weight: f64,
}

fn unit_weight() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
struct RawRuleSet {
    language: String,
    #[serde(default)]
    rules: BTreeMap<Label, Vec<Pattern>>,
    #[serde(default)]
    unreachable: Vec<Label>,
}

#[derive(Debug, Clone)]
enum Matcher {
    Literal(String),
    Word(Vec<String>),
    Regex(Regex),
}

impl Matcher {
    fn matches(&self, lower: &str, tokens: &[String], raw: &str) -> bool {
        match self {
            Matcher::Literal(s) => lower.contains(s.as_str()),
            Matcher::Word(seq) => tokens.windows(seq.len()).any(|w| w == seq.as_slice()),
            Matcher::Regex(re) => re.is_match(raw),
        }
    }
}

fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()).map(str::to_lowercase).collect()
}

/// Weighted patterns per intent class. The class with the highest summed
/// weight of matching patterns wins; ties go to the earlier class in
/// DO, UO, PL, TA order; no match gives NONE.
#[derive(Debug, Clone)]
pub struct RuleSet {
    pub language: String,
    rules: BTreeMap<Label, Vec<(Matcher, f64)>>,
    pub unreachable: Vec<Label>,
}

impl RuleSet {
    /// A rule set that labels everything NONE.
    pub fn empty(language: &str) -> Self {
        Self { language: language.into(), rules: BTreeMap::new(), unreachable: Label::CLASSES.to_vec() }
    }

    pub fn from_json_str(text: &str) -> Result<Self, ConversationError> {
        let raw: RawRuleSet =
            serde_json::from_str(text).map_err(|e| ConversationError::BadRuleSet { reason: e.to_string() })?;
        let bad = |reason: String| ConversationError::BadRuleSet { reason };
        let mut rules = BTreeMap::new();
        for (label, patterns) in raw.rules {
            if label == Label::NONE {
                return Err(bad("NONE is the default class and takes no rules".into()));
            }
            let mut compiled = Vec::with_capacity(patterns.len());
            for p in patterns {
                if p.pattern.trim().is_empty() {
                    return Err(bad(format!("empty pattern for {label}")));
                }
                if !p.weight.is_finite() || p.weight <= 0.0 {
                    return Err(bad(format!("weight of `{}` must be positive", p.pattern)));
                }
                let m = match p.kind {
                    PatternKind::Literal => Matcher::Literal(p.pattern.to_lowercase()),
                    PatternKind::Word => {
                        let toks = tokenize(&p.pattern);
                        if toks.is_empty() {
                            return Err(bad(format!("word pattern `{}` has no tokens", p.pattern)));
                        }
                        Matcher::Word(toks)
                    }
                    PatternKind::Regex => Matcher::Regex(Regex::new(&p.pattern).map_err(|e| bad(e.to_string()))?),
                };
                compiled.push((m, p.weight));
            }
            if !compiled.is_empty() {
                rules.insert(label, compiled);
            }
        }
        for class in Label::CLASSES {
            let has = rules.contains_key(&class);
            let declared = raw.unreachable.contains(&class);
            if !has && !declared {
                return Err(bad(format!("class {class} has no rules and is not declared unreachable")));
            }
            if has && declared {
                return Err(bad(format!("class {class} has rules but is declared unreachable")));
            }
        }
        Ok(Self { language: raw.language, rules, unreachable: raw.unreachable })
    }

    pub fn from_path(path: &Path) -> Result<Self, ConversationError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConversationError::RuleSetIo { path: path.to_path_buf(), reason: e.to_string() })?;
        Self::from_json_str(&text)
    }

    /// Bundled rule set for `en` or `ja`.
    pub fn bundled(language: &str) -> Option<Self> {
        let text = match language {
            "en" => EN_RULES,
            "ja" => JA_RULES,
            _ => return None,
        };
        Some(Self::from_json_str(text).expect("bundled rule sets are valid"))
    }

    /// Summed matching weight per class.
    pub fn scores(&self, text: &str) -> BTreeMap<Label, f64> {
        let lower = text.to_lowercase();
        let tokens = tokenize(text);
        Label::CLASSES
            .iter()
            .map(|&c| {
                let s = self
                    .rules
                    .get(&c)
                    .map(|rs| rs.iter().filter(|(m, _)| m.matches(&lower, &tokens, text)).map(|(_, w)| w).sum())
                    .unwrap_or(0.0);
                (c, s)
            })
            .collect()
    }

    pub fn label_text(&self, text: &str) -> Label {
        let scores = self.scores(text);
        let mut best = (Label::NONE, 0.0);
        for c in Label::CLASSES {
            if scores[&c] > best.1 {
                best = (c, scores[&c]);
            }
        }
        best.0
    }
}

pub fn classify_rule(utt: &Utterance, rules: &RuleSet) -> Utterance {
    utt.clone().labeled(rules.label_text(&utt.text), LabelSource::Rule)
}
