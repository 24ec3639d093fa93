//! Publisher-conditioned prompt sequences:
//! `<|Start_Publication|> publisher <|End_Publication|> highlight <sep> content`.

use std::ops::Range;

use thiserror::Error;

use crate::vocab::{SpecialIds, TokenId, Vocab};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("prompt frame needs {frame} tokens but the maximum length is {max_len}")]
    FrameTooLarge { frame: usize, max_len: usize },
    #[error("vocabulary has no prompt control tokens registered")]
    MissingSpecialTokens,
    #[error("token sequence has no separator token")]
    NoContentSpan,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PromptSequence {
    pub token_ids: Vec<TokenId>,
    pub publisher_span: Range<usize>,
    pub highlight_span: Range<usize>,
    pub content_span: Range<usize>,
    pub truncated: bool,
}

impl PromptSequence {
    pub fn len(&self) -> usize {
        self.token_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.token_ids.is_empty()
    }

    pub fn content_tokens(&self) -> &[TokenId] {
        &self.token_ids[self.content_span.clone()]
    }

    pub fn decode(&self, vocab: &Vocab) -> String {
        vocab.decode(&self.token_ids)
    }
}

/// Encodes the prompt, truncating only the tail of the content when the
/// sequence would exceed `max_len`.
pub fn build_prompt(
    publisher: &str,
    highlight: &str,
    content: &str,
    max_len: usize,
    vocab: &Vocab,
) -> Result<PromptSequence, PromptError> {
    let special = vocab.special_ids().ok_or(PromptError::MissingSpecialTokens)?;
    let publisher_ids = vocab.encode(publisher);
    let highlight_ids = vocab.encode(highlight);
    let content_ids = vocab.encode(content);
    assemble(special, &publisher_ids, &highlight_ids, &content_ids, max_len)
}

/// The prompt with an empty content span, used to start generation.
pub fn build_frame(
    publisher: &str,
    highlight: &str,
    max_len: usize,
    vocab: &Vocab,
) -> Result<PromptSequence, PromptError> {
    build_prompt(publisher, highlight, "", max_len, vocab)
}

pub fn frame_len(publisher_len: usize, highlight_len: usize) -> usize {
    publisher_len + highlight_len + 3
}

fn assemble(
    special: SpecialIds,
    publisher: &[TokenId],
    highlight: &[TokenId],
    content: &[TokenId],
    max_len: usize,
) -> Result<PromptSequence, PromptError> {
    let frame = frame_len(publisher.len(), highlight.len());
    if frame > max_len {
        return Err(PromptError::FrameTooLarge { frame, max_len });
    }
    let keep = content.len().min(max_len - frame);
    let mut ids = Vec::with_capacity(frame + keep);
    ids.push(special.start_publication);
    ids.extend_from_slice(publisher);
    let publisher_span = 1..ids.len();
    ids.push(special.end_publication);
    let h0 = ids.len();
    ids.extend_from_slice(highlight);
    let highlight_span = h0..ids.len();
    ids.push(special.separator);
    let c0 = ids.len();
    ids.extend_from_slice(&content[..keep]);
    let content_span = c0..ids.len();
    Ok(PromptSequence {
        token_ids: ids,
        publisher_span,
        highlight_span,
        content_span,
        truncated: keep < content.len(),
    })
}

/// Content tokens of a prompt or of a generated sequence: everything after the
/// first separator, up to end-of-text, with control tokens removed.
pub fn strip_to_content(tokens: &[TokenId], special: &SpecialIds) -> Result<Vec<TokenId>, PromptError> {
    let sep = tokens
        .iter()
        .position(|&t| t == special.separator)
        .ok_or(PromptError::NoContentSpan)?;
    Ok(tokens[sep + 1..]
        .iter()
        .copied()
        .take_while(|&t| t != special.end_of_text)
        .filter(|&t| !special.is_control(t))
        .collect())
}
