//! Word-level vocabulary with the prompt control tokens.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub type TokenId = u32;

pub const UNKNOWN_TOKEN: &str = "<unk>";
pub const END_OF_TEXT: &str = "<|endoftext|>";

/// Literal strings of the three prompt control tokens.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpecialTokens {
    pub start_publication: String,
    pub end_publication: String,
    pub separator: String,
}

impl Default for SpecialTokens {
    fn default() -> Self {
        Self {
            start_publication: "<|Start_Publication|>".into(),
            end_publication: "<|End_Publication|>".into(),
            separator: "<sep>".into(),
        }
    }
}

/// Resolved ids of the control tokens.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SpecialIds {
    pub start_publication: TokenId,
    pub end_publication: TokenId,
    pub separator: TokenId,
    pub end_of_text: TokenId,
}

impl SpecialIds {
    pub fn is_control(&self, id: TokenId) -> bool {
        id == self.start_publication || id == self.end_publication || id == self.separator || id == self.end_of_text
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, TokenId>,
    special: Option<SpecialIds>,
    literals: Option<SpecialTokens>,
}

impl Vocab {
    pub const UNKNOWN: TokenId = 0;
    pub const END_OF_TEXT: TokenId = 1;

    /// Collects every whitespace-separated word of `texts`, sorted, after the
    /// unknown and end-of-text tokens.
    pub fn build<'a, I>(texts: I) -> Self
    where
        I: IntoIterator<Item = &'a str>,
    {
        let words: BTreeSet<&str> = texts.into_iter().flat_map(str::split_whitespace).collect();
        let mut vocab = Self::from_tokens([UNKNOWN_TOKEN.to_string(), END_OF_TEXT.to_string()]);
        for w in words {
            vocab.push(w);
        }
        vocab
    }

    fn from_tokens<I: IntoIterator<Item = String>>(tokens: I) -> Self {
        let mut vocab = Self {
            tokens: Vec::new(),
            index: HashMap::new(),
            special: None,
            literals: None,
        };
        for t in tokens {
            vocab.push(&t);
        }
        vocab
    }

    fn push(&mut self, token: &str) -> TokenId {
        if let Some(&id) = self.index.get(token) {
            return id;
        }
        let id = self.tokens.len() as TokenId;
        self.tokens.push(token.to_string());
        self.index.insert(token.to_string(), id);
        id
    }

    /// Registers the prompt control tokens, appending them when absent.
    pub fn add_special_tokens(&mut self, literals: &SpecialTokens) -> SpecialIds {
        let ids = SpecialIds {
            start_publication: self.push(&literals.start_publication),
            end_publication: self.push(&literals.end_publication),
            separator: self.push(&literals.separator),
            end_of_text: Self::END_OF_TEXT,
        };
        self.special = Some(ids);
        self.literals = Some(literals.clone());
        ids
    }

    pub fn special_ids(&self) -> Option<SpecialIds> {
        self.special
    }

    pub fn special_literals(&self) -> Option<&SpecialTokens> {
        self.literals.as_ref()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<TokenId> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: TokenId) -> &str {
        self.tokens
            .get(id as usize)
            .map(String::as_str)
            .unwrap_or(UNKNOWN_TOKEN)
    }

    /// Whitespace tokenization; out-of-vocabulary words map to the unknown id.
    pub fn encode(&self, text: &str) -> Vec<TokenId> {
        text.split_whitespace()
            .map(|w| self.id(w).unwrap_or(Self::UNKNOWN))
            .collect()
    }

    /// Encodes plain content, dropping any control tokens that appear literally.
    pub fn encode_content(&self, text: &str) -> Vec<TokenId> {
        let mut ids = self.encode(text);
        if let Some(special) = self.special {
            ids.retain(|&id| !special.is_control(id));
        }
        ids
    }

    pub fn decode(&self, ids: &[TokenId]) -> String {
        let mut out = String::new();
        for (i, &id) in ids.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(self.token(id));
        }
        out
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(String::as_str)
    }

    /// SHA-256 over the newline-joined token list.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for t in &self.tokens {
            h.update(t.as_bytes());
            h.update(b"\n");
        }
        hex::encode(h.finalize())
    }

    /// One token per line, in id order.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for t in &self.tokens {
            let _ = writeln!(s, "{t}");
        }
        s
    }

    pub fn from_text(text: &str, literals: Option<&SpecialTokens>) -> Self {
        let mut vocab = Self::from_tokens(text.lines().map(str::to_string));
        if let Some(l) = literals {
            vocab.add_special_tokens(l);
        }
        vocab
    }
}
