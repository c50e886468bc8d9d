//! Article records and sentence-level segmentation into sections.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

/// A news document as handed to the store.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArticleRecord {
    pub url: String,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub body: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub published_at: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub author: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

impl ArticleRecord {
    pub fn new(url: impl Into<String>, title: impl Into<String>, body: impl Into<String>) -> Self {
        Self {
            url: url.into(),
            title: title.into(),
            body: body.into(),
            published_at: None,
            author: None,
            source: None,
        }
    }

    pub fn validate(&self) -> Result<(), SegmentError> {
        if self.url.trim().is_empty() {
            return Err(SegmentError::MissingUrl);
        }
        if self.title.trim().is_empty() && self.body.trim().is_empty() {
            return Err(SegmentError::EmptyArticle);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SegmentError {
    #[error("article has an empty url")]
    MissingUrl,
    #[error("article title and body are both empty")]
    EmptyArticle,
    #[error("segmentation config needs at least one terminator")]
    NoTerminators,
    #[error("min_section_chars must be at least 1")]
    ZeroMinSection,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentationConfig {
    pub terminators: Vec<char>,
    pub min_section_chars: usize,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        // ';' doubles as the Greek question mark.
        Self {
            terminators: vec!['.', '!', '?', ';'],
            min_section_chars: 3,
        }
    }
}

impl SegmentationConfig {
    pub fn with_min_section_chars(mut self, n: usize) -> Self {
        self.min_section_chars = n;
        self
    }

    pub fn validate(&self) -> Result<(), SegmentError> {
        if self.terminators.is_empty() {
            return Err(SegmentError::NoTerminators);
        }
        if self.min_section_chars == 0 {
            return Err(SegmentError::ZeroMinSection);
        }
        Ok(())
    }

    fn is_terminator(&self, c: char) -> bool {
        self.terminators.contains(&c)
    }
}

/// Splits an article into sections: the title first (when non-empty), then
/// the body cut after every run of terminators that is followed by
/// whitespace or the end of text.
///
/// Fragments shorter than `min_section_chars` are merged into the preceding
/// body section, or into the following one when they open the body.
pub fn segment(
    article: &ArticleRecord,
    cfg: &SegmentationConfig,
) -> Result<Vec<String>, SegmentError> {
    cfg.validate()?;
    if article.title.trim().is_empty() && article.body.trim().is_empty() {
        return Err(SegmentError::EmptyArticle);
    }

    let mut sections = Vec::new();
    let title = article.title.trim();
    if !title.is_empty() {
        sections.push(String::from(title));
    }

    let mut body_sections: Vec<String> = Vec::new();
    let mut pending: Option<String> = None;
    for piece in split_body(&article.body, cfg) {
        let piece = match pending.take() {
            Some(mut prefix) => {
                prefix.push(' ');
                prefix.push_str(&piece);
                prefix
            }
            None => piece,
        };
        if piece.chars().count() >= cfg.min_section_chars {
            body_sections.push(piece);
        } else if let Some(prev) = body_sections.last_mut() {
            prev.push(' ');
            prev.push_str(&piece);
        } else {
            pending = Some(piece);
        }
    }
    if let Some(rest) = pending {
        body_sections.push(rest);
    }

    sections.extend(body_sections);
    Ok(sections)
}

fn split_body(body: &str, cfg: &SegmentationConfig) -> Vec<String> {
    let mut pieces = Vec::new();
    let mut current = String::new();
    let mut chars = body.chars().peekable();
    while let Some(c) = chars.next() {
        current.push(c);
        if !cfg.is_terminator(c) {
            continue;
        }
        while let Some(&next) = chars.peek() {
            if cfg.is_terminator(next) {
                current.push(next);
                chars.next();
            } else {
                break;
            }
        }
        if chars.peek().is_none_or(|n| n.is_whitespace()) {
            push_trimmed(&mut pieces, &current);
            current.clear();
        }
    }
    push_trimmed(&mut pieces, &current);
    pieces
}

fn push_trimmed(pieces: &mut Vec<String>, raw: &str) {
    let t = raw.trim();
    if !t.is_empty() {
        pieces.push(String::from(t));
    }
}
