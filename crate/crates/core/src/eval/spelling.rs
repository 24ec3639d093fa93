use serde::{Deserialize, Serialize};

use super::EvalError;

const BUNDLED: &str = include_str!("../../data/spelling_lexicon.tsv");

/// British/American variant pairs, lower-cased.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lexicon {
    pairs: Vec<(String, String)>,
}

impl Lexicon {
    /// Parses `british<TAB>american` lines; `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self, EvalError> {
        let mut pairs = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split('\t');
            match (cols.next(), cols.next(), cols.next()) {
                (Some(b), Some(a), None) if !b.is_empty() && !a.is_empty() => {
                    pairs.push((b.to_lowercase(), a.to_lowercase()))
                }
                _ => {
                    return Err(EvalError::Lexicon {
                        line: i + 1,
                        message: "expected two tab-separated forms".into(),
                    })
                }
            }
        }
        if pairs.is_empty() {
            return Err(EvalError::Lexicon {
                line: 0,
                message: "lexicon is empty".into(),
            });
        }
        Ok(Self { pairs })
    }

    pub fn bundled() -> Self {
        Self::parse(BUNDLED).expect("bundled lexicon parses")
    }

    pub fn pairs(&self) -> &[(String, String)] {
        &self.pairs
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpellingCounts {
    pub british: usize,
    pub american: usize,
}

/// Whole-word, case-insensitive occurrence counts of each dialect's forms.
pub fn spelling_style_counts<S: AsRef<str>>(texts: &[S], lexicon: &Lexicon) -> SpellingCounts {
    let british: std::collections::HashSet<&str> = lexicon.pairs.iter().map(|(b, _)| b.as_str()).collect();
    let american: std::collections::HashSet<&str> = lexicon.pairs.iter().map(|(_, a)| a.as_str()).collect();
    let mut counts = SpellingCounts::default();
    for text in texts {
        for word in text.as_ref().split(|c: char| !c.is_alphanumeric()) {
            if word.is_empty() {
                continue;
            }
            let w = word.to_lowercase();
            if british.contains(w.as_str()) {
                counts.british += 1;
            }
            if american.contains(w.as_str()) {
                counts.american += 1;
            }
        }
    }
    counts
}
