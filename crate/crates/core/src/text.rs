//! Text folding and tokenization shared by the gazetteer matcher and the
//! reference scorers.
//!
//! Folding lowercases, strips combining marks after canonical decomposition
//! and maps the Greek final sigma onto its medial form, so that `ΔΑΝΊΑ`,
//! `Δανία` and `δανια` all compare equal.

use alloc::string::String;
use alloc::vec::Vec;

use unicode_normalization::char::{decompose_canonical, is_combining_mark};

/// Folds a single character, pushing zero or more folded characters into `out`.
pub fn fold_char_into(c: char, out: &mut String) {
    for lower in c.to_lowercase() {
        decompose_canonical(lower, |d| {
            if is_combining_mark(d) {
                return;
            }
            out.push(if d == 'ς' { 'σ' } else { d });
        });
    }
}

/// Case- and accent-folds a whole string.
pub fn fold(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        fold_char_into(c, &mut out);
    }
    out
}

/// A folded token together with the character span it covers in the source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub folded: String,
    /// Inclusive start, in characters.
    pub start: usize,
    /// Exclusive end, in characters.
    pub end: usize,
}

/// Splits `text` into maximal runs of characters accepted by `keep`, folding
/// each run. Spans are character offsets into the original text.
pub fn tokenize_by(text: &str, keep: impl Fn(char) -> bool) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut current: Option<Token> = None;
    for (idx, c) in text.chars().enumerate() {
        if keep(c) {
            let tok = current.get_or_insert_with(|| Token {
                folded: String::new(),
                start: idx,
                end: idx,
            });
            fold_char_into(c, &mut tok.folded);
            tok.end = idx + 1;
        } else if let Some(tok) = current.take() {
            if !tok.folded.is_empty() {
                tokens.push(tok);
            }
        }
    }
    if let Some(tok) = current {
        if !tok.folded.is_empty() {
            tokens.push(tok);
        }
    }
    tokens
}

/// Word tokens: runs of alphanumeric characters. Used for alias matching.
pub fn word_tokens(text: &str) -> Vec<Token> {
    tokenize_by(text, char::is_alphanumeric)
}

/// Letter tokens: runs of alphabetic characters, folded. Used by the
/// reference scorers, which split on every non-letter.
pub fn letter_tokens(text: &str) -> Vec<String> {
    tokenize_by(text, char::is_alphabetic)
        .into_iter()
        .map(|t| t.folded)
        .collect()
}

/// Returns the substring covering characters `[start, end)`.
pub fn char_slice(text: &str, start: usize, end: usize) -> &str {
    let mut indices = text
        .char_indices()
        .map(|(i, _)| i)
        .chain(core::iter::once(text.len()));
    let from = indices.nth(start).unwrap_or(text.len());
    let to = if end > start {
        indices.nth(end - start - 1).unwrap_or(text.len())
    } else {
        from
    };
    &text[from..to]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn greek_case_and_accent_folding() {
        assert_eq!(fold("ΔΑΝΊΑ"), fold("Δανία"));
        assert_eq!(fold("Δανία"), "δανια");
        assert_eq!(fold("Όχι"), "οχι");
        assert_eq!(fold("ΚΡΑΤΟΣ"), fold("κρατος"));
        assert_eq!(fold("Éire"), "eire");
    }

    #[test]
    fn word_tokens_carry_char_spans() {
        let toks = word_tokens("Η Δανία, η Αυστρία!");
        let spans: Vec<_> = toks
            .iter()
            .map(|t| (t.folded.as_str(), t.start, t.end))
            .collect();
        assert_eq!(
            spans,
            [
                ("η", 0, 1),
                ("δανια", 2, 7),
                ("η", 9, 10),
                ("αυστρια", 11, 18)
            ]
        );
        assert_eq!(char_slice("Η Δανία, η Αυστρία!", 2, 7), "Δανία");
    }

    #[test]
    fn letter_tokens_split_on_digits() {
        assert_eq!(letter_tokens("abc1def g"), ["abc", "def", "g"]);
    }

    #[test]
    fn char_slice_edges() {
        assert_eq!(char_slice("αβγ", 0, 3), "αβγ");
        assert_eq!(char_slice("αβγ", 3, 3), "");
        assert_eq!(char_slice("αβγ", 1, 2), "β");
    }
}
