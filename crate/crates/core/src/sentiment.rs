//! Rule-based lexicon sentiment analyzer.
//!
//! Each token gets a valence from the lexicon. Boosters and all-caps
//! emphasis push a valence further in its own direction, a preceding
//! negator scales it by `negation_factor`, and trailing exclamation marks
//! amplify the total. The summed valence `S` is squashed into a compound
//! score `S / sqrt(S^2 + alpha)`.
//!
//! Deliberately minimal: no "but"-clause reweighting, no emoji handling.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::read_to_string;
use crate::{Error, PolarityLabel, Result};

const BUNDLED_LEXICON: &str = include_str!("../data/lexicon.tsv");
const BUNDLED_NEGATORS: &str = include_str!("../data/negators.txt");
const BUNDLED_BOOSTERS: &str = include_str!("../data/boosters.txt");

pub const MAX_VALENCE: f64 = 4.0;
/// Increment for booster list lines that carry no explicit value.
pub const DEFAULT_BOOSTER_INCREMENT: f64 = 0.293;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SentimentLexicon {
    pub entries: HashMap<String, f64>,
    pub negators: HashSet<String>,
    pub boosters: HashMap<String, f64>,
}

impl SentimentLexicon {
    /// The lexicon shipped with the crate.
    pub fn bundled() -> Self {
        let (entries, _) = parse_lexicon(BUNDLED_LEXICON, "lexicon.tsv").expect("bundled lexicon parses");
        let negators = parse_negators(BUNDLED_NEGATORS);
        let boosters = parse_boosters(BUNDLED_BOOSTERS, "boosters.txt").expect("bundled boosters parse");
        SentimentLexicon::new(entries, negators, boosters).expect("bundled lexicon is consistent")
    }

    pub fn new(
        entries: HashMap<String, f64>,
        negators: HashSet<String>,
        boosters: HashMap<String, f64>,
    ) -> Result<Self> {
        if let Some((t, v)) = entries.iter().find(|(_, v)| !(-MAX_VALENCE..=MAX_VALENCE).contains(*v)) {
            return Err(Error::Invalid(format!("valence {v} for {t:?} outside [-4, 4]")));
        }
        if let Some(t) = negators.iter().find(|t| boosters.contains_key(*t)) {
            return Err(Error::Invalid(format!("{t:?} is both a negator and a booster")));
        }
        Ok(SentimentLexicon {
            entries,
            negators,
            boosters,
        })
    }

    pub fn valence(&self, token: &str) -> f64 {
        self.entries
            .get(&token.to_lowercase())
            .copied()
            .unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// A duplicate lexicon row; the later row wins.
#[derive(Debug, Clone, PartialEq)]
pub struct DuplicateWarning {
    pub token: String,
    pub line: usize,
}

/// Parse `token<TAB>valence` rows. Extra columns are ignored.
pub fn parse_lexicon(input: &str, source: &str) -> Result<(HashMap<String, f64>, Vec<DuplicateWarning>)> {
    let mut entries = HashMap::new();
    let mut warnings = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let mut cols = line.split('\t');
        let token = cols.next().unwrap_or_default().to_lowercase();
        let value = cols
            .next()
            .ok_or_else(|| Error::parse(source, idx + 1, "expected `token<TAB>valence`"))?;
        let valence: f64 = value
            .trim()
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| Error::parse(source, idx + 1, format!("non-numeric valence {value:?}")))?;
        if !(-MAX_VALENCE..=MAX_VALENCE).contains(&valence) {
            return Err(Error::parse(source, idx + 1, format!("valence {valence} outside [-4, 4]")));
        }
        if entries.insert(token.clone(), valence).is_some() {
            warnings.push(DuplicateWarning { token, line: idx + 1 });
        }
    }
    Ok((entries, warnings))
}

pub fn parse_negators(input: &str) -> HashSet<String> {
    input
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// One booster per line, optionally followed by `<TAB>increment`.
pub fn parse_boosters(input: &str, source: &str) -> Result<HashMap<String, f64>> {
    let mut out = HashMap::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let (token, incr) = match line.split_once('\t') {
            Some((t, v)) => {
                let v: f64 = v
                    .trim()
                    .parse()
                    .map_err(|_| Error::parse(source, idx + 1, format!("non-numeric increment {v:?}")))?;
                (t, v)
            }
            None => (line, DEFAULT_BOOSTER_INCREMENT),
        };
        out.insert(token.trim().to_lowercase(), incr);
    }
    Ok(out)
}

/// Load a lexicon file, returning warnings for duplicate rows.
pub fn load_lexicon(path: &Path) -> Result<(HashMap<String, f64>, Vec<DuplicateWarning>)> {
    parse_lexicon(&read_to_string(path)?, &path.display().to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SentimentConfig {
    pub alpha: f64,
    pub neg_window: usize,
    pub pos_threshold: f64,
    pub neg_threshold: f64,
    pub negation_factor: f64,
    pub caps_boost: f64,
    pub exclaim_boost: f64,
}

impl Default for SentimentConfig {
    fn default() -> Self {
        SentimentConfig {
            alpha: 15.0,
            neg_window: 3,
            pos_threshold: 0.05,
            neg_threshold: -0.05,
            negation_factor: -0.74,
            caps_boost: 0.733,
            exclaim_boost: 0.292,
        }
    }
}

impl SentimentConfig {
    pub const MAX_EXCLAMATIONS: usize = 3;

    pub fn validate(&self) -> Result<()> {
        let ok = self.alpha > 0.0
            && self.neg_window >= 1
            && self.neg_threshold < 0.0
            && 0.0 < self.pos_threshold
            && self.negation_factor > -1.0
            && self.negation_factor < 0.0
            && self.caps_boost >= 0.0
            && self.exclaim_boost >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Invalid(format!("invalid sentiment config {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SentimentResult {
    pub compound: f64,
    pub label: PolarityLabel,
}

/// `S / sqrt(S^2 + alpha)`.
pub fn normalize(sum: f64, alpha: f64) -> f64 {
    (sum / (sum * sum + alpha).sqrt()).clamp(-1.0, 1.0)
}

pub fn label_from_compound(compound: f64, config: &SentimentConfig) -> PolarityLabel {
    if compound >= config.pos_threshold {
        PolarityLabel::Positive
    } else if compound <= config.neg_threshold {
        PolarityLabel::Negative
    } else {
        PolarityLabel::Neutral
    }
}

fn tokenize(text: &str) -> Vec<&str> {
    text.split_whitespace()
        .flat_map(|w| w.split(|c: char| matches!(c, ',' | ';' | ':' | '(' | ')' | '"' | '/')))
        .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|w| !w.is_empty())
        .collect()
}

fn is_shouting(token: &str) -> bool {
    let letters: Vec<char> = token.chars().filter(|c| c.is_alphabetic()).collect();
    letters.len() >= 2 && letters.iter().all(|c| c.is_uppercase())
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

pub fn analyze(text: &str, lexicon: &SentimentLexicon, config: &SentimentConfig) -> SentimentResult {
    let tokens = tokenize(text);
    let lowered: Vec<String> = tokens.iter().map(|t| t.to_lowercase()).collect();
    let mut worded = tokens.iter().filter(|t| t.chars().any(char::is_alphabetic)).peekable();
    let all_caps_text = worded.peek().is_some()
        && worded.all(|t| t.chars().filter(|c| c.is_alphabetic()).all(char::is_uppercase));

    let mut sum = 0.0;
    for (i, token) in tokens.iter().enumerate() {
        let mut valence = lexicon.entries.get(&lowered[i]).copied().unwrap_or(0.0);
        if valence == 0.0 {
            continue;
        }
        let direction = sign(valence);
        if !all_caps_text && is_shouting(token) {
            valence += direction * config.caps_boost;
        }
        let window = &lowered[i.saturating_sub(config.neg_window)..i];
        for w in window {
            if let Some(incr) = lexicon.boosters.get(w) {
                valence += direction * incr;
            }
        }
        if window.iter().any(|w| lexicon.negators.contains(w)) {
            valence *= config.negation_factor;
        }
        sum += valence;
    }

    let exclamations = text
        .trim_end()
        .chars()
        .rev()
        .take_while(|&c| c == '!')
        .count()
        .min(SentimentConfig::MAX_EXCLAMATIONS);
    sum += sign(sum) * config.exclaim_boost * exclamations as f64;

    let compound = normalize(sum, config.alpha);
    SentimentResult {
        compound,
        label: label_from_compound(compound, config),
    }
}

/// A lexicon and configuration bundled together.
#[derive(Debug, Clone)]
pub struct SentimentAnalyzer {
    pub lexicon: SentimentLexicon,
    pub config: SentimentConfig,
}

impl SentimentAnalyzer {
    pub fn new(lexicon: SentimentLexicon, config: SentimentConfig) -> Result<Self> {
        config.validate()?;
        Ok(SentimentAnalyzer { lexicon, config })
    }

    pub fn bundled() -> Self {
        SentimentAnalyzer {
            lexicon: SentimentLexicon::bundled(),
            config: SentimentConfig::default(),
        }
    }

    pub fn analyze(&self, text: &str) -> SentimentResult {
        analyze(text, &self.lexicon, &self.config)
    }
}

impl Default for SentimentAnalyzer {
    fn default() -> Self {
        Self::bundled()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> SentimentLexicon {
        let entries = HashMap::from([("good".to_string(), 1.9), ("bad".to_string(), -2.5)]);
        let negators = HashSet::from(["not".to_string()]);
        let boosters = HashMap::from([("very".to_string(), 0.293), ("slightly".to_string(), -0.293)]);
        SentimentLexicon::new(entries, negators, boosters).unwrap()
    }

    #[test]
    fn empty_text_is_neutral() {
        let r = analyze("", &tiny(), &SentimentConfig::default());
        assert_eq!(r.compound, 0.0);
        assert_eq!(r.label, PolarityLabel::Neutral);
    }

    #[test]
    fn single_token_normalization() {
        let r = analyze("good", &tiny(), &SentimentConfig::default());
        let expected = 1.9 / (1.9f64 * 1.9 + 15.0).sqrt();
        assert!((r.compound - expected).abs() < 1e-12);
        assert!((r.compound - 0.4404).abs() < 1e-4);
        assert_eq!(r.label, PolarityLabel::Positive);
    }

    #[test]
    fn negation() {
        let r = analyze("not good", &tiny(), &SentimentConfig::default());
        let s = -1.406f64;
        assert!((r.compound - s / (s * s + 15.0).sqrt()).abs() < 1e-12);
        assert!((r.compound + 0.3412).abs() < 1e-4);
        assert_eq!(r.label, PolarityLabel::Negative);
        // outside the three-token window
        let far = analyze("not a b c good", &tiny(), &SentimentConfig::default());
        assert!(far.compound > 0.0);
    }

    #[test]
    fn boosters_caps_and_exclamation() {
        let cfg = SentimentConfig::default();
        let lex = tiny();
        let plain = analyze("good", &lex, &cfg).compound;
        assert!(analyze("very good", &lex, &cfg).compound > plain);
        assert!(analyze("slightly good", &lex, &cfg).compound < plain);
        assert!(analyze("it is GOOD", &lex, &cfg).compound > plain);
        // all-caps text gets no caps emphasis
        assert!((analyze("GOOD", &lex, &cfg).compound - plain).abs() < 1e-12);
        let e3 = analyze("good!!!", &lex, &cfg).compound;
        let e5 = analyze("good!!!!!", &lex, &cfg).compound;
        assert!(e3 > plain);
        assert_eq!(e3, e5);
        let neg = analyze("very bad!", &lex, &cfg).compound;
        let s: f64 = -(2.5 + 0.293 + 0.292);
        assert!((neg - s / (s * s + 15.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn thresholds() {
        let cfg = SentimentConfig::default();
        assert_eq!(label_from_compound(0.0, &cfg), PolarityLabel::Neutral);
        assert_eq!(label_from_compound(0.05, &cfg), PolarityLabel::Positive);
        assert_eq!(label_from_compound(-0.05, &cfg), PolarityLabel::Negative);
        assert_eq!(label_from_compound(-0.34, &cfg), PolarityLabel::Negative);
        assert_eq!(label_from_compound(0.049, &cfg), PolarityLabel::Neutral);
    }

    #[test]
    fn lexicon_parsing() {
        let (entries, warnings) = parse_lexicon("good\t1.9\nbad\t-2.5\ngood\t2.0\n", "t").unwrap();
        assert_eq!(entries["good"], 2.0);
        assert_eq!(warnings, vec![DuplicateWarning { token: "good".into(), line: 3 }]);
        let (entries, _) = parse_lexicon("good\t1.9", "t").unwrap();
        assert_eq!(entries["good"], 1.9);
        assert!(parse_lexicon("", "t").unwrap().0.is_empty());
        let err = parse_lexicon("good\t1.9\nbad\tterrible\n", "lex.tsv").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!(parse_lexicon("huge\t9.0", "t").is_err());
    }

    #[test]
    fn empty_lexicon_is_always_neutral() {
        let lex = SentimentLexicon::default();
        let r = analyze("wonderful terrible day!!!", &lex, &SentimentConfig::default());
        assert_eq!(r.label, PolarityLabel::Neutral);
    }

    #[test]
    fn bundled_lexicon_size() {
        let lex = SentimentLexicon::bundled();
        assert!(lex.len() >= 3000, "{}", lex.len());
        assert!(lex.negators.contains("not"));
        assert_eq!(lex.entries["good"], 1.9);
    }

    #[test]
    fn config_validation() {
        assert!(SentimentConfig::default().validate().is_ok());
        let bad = SentimentConfig {
            negation_factor: 0.5,
            ..SentimentConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
