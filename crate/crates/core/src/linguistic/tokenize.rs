//! Whitespace tokenizer and rule-based sentence splitter.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TokenKind {
    Word,
    Punct,
    Number,
    Url,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PosTag {
    Noun,
    Verb,
    Adj,
    Adv,
    Pron,
    Other,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub surface: String,
    pub kind: TokenKind,
    pub tag: Option<PosTag>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TokenSequence {
    pub tokens: Vec<Token>,
}

impl TokenSequence {
    pub fn words(&self) -> impl Iterator<Item = &Token> {
        self.tokens.iter().filter(|t| t.kind == TokenKind::Word)
    }

    pub fn count(&self, kind: TokenKind) -> usize {
        self.tokens.iter().filter(|t| t.kind == kind).count()
    }
}

fn is_url(chunk: &str) -> bool {
    chunk.starts_with("http://") || chunk.starts_with("https://") || chunk.starts_with("www.")
}

/// Split text on whitespace, strip leading/trailing punctuation from each
/// chunk (emitting it as punctuation tokens), and keep internal
/// apostrophes and hyphens. URLs are detected before stripping.
pub fn tokenize(text: &str) -> TokenSequence {
    let mut tokens = Vec::new();
    for chunk in text.split_whitespace() {
        if is_url(chunk) {
            tokens.push(Token {
                surface: chunk.to_string(),
                kind: TokenKind::Url,
                tag: None,
            });
            continue;
        }
        let chars: Vec<char> = chunk.chars().collect();
        let mut start = 0;
        let mut end = chars.len();
        while start < end && !chars[start].is_alphanumeric() {
            start += 1;
        }
        while end > start && !chars[end - 1].is_alphanumeric() {
            end -= 1;
        }
        for &c in &chars[..start] {
            tokens.push(Token {
                surface: c.to_string(),
                kind: TokenKind::Punct,
                tag: None,
            });
        }
        if start < end {
            let core: String = chars[start..end].iter().collect();
            let kind = if core.chars().any(|c| c.is_alphabetic()) {
                TokenKind::Word
            } else {
                TokenKind::Number
            };
            tokens.push(Token {
                surface: core,
                kind,
                tag: None,
            });
        }
        for &c in &chars[end.max(start)..] {
            tokens.push(Token {
                surface: c.to_string(),
                kind: TokenKind::Punct,
                tag: None,
            });
        }
    }
    TokenSequence { tokens }
}

/// Abbreviations whose trailing period does not end a sentence.
const ABBREVIATIONS: [&str; 9] = [
    "e.g.", "i.e.", "etc.", "dr.", "mr.", "ms.", "fig.", "eq.", "vs.",
];

fn is_sentence_break(text: &str, byte_idx: usize, c: char) -> bool {
    let after = &text[byte_idx + c.len_utf8()..];
    match after.chars().next() {
        Some(next) if !next.is_whitespace() => return false,
        _ => {}
    }
    if c != '.' {
        return true;
    }
    // the whitespace-delimited token ending at this period
    let token_start = text[..byte_idx]
        .rfind(char::is_whitespace)
        .map(|i| i + text[i..].chars().next().unwrap().len_utf8())
        .unwrap_or(0);
    let token = &text[token_start..byte_idx + 1];
    let token = token.trim_start_matches(|ch: char| !ch.is_alphanumeric());
    let lower = token.to_lowercase();
    if ABBREVIATIONS.contains(&lower.as_str()) {
        return false;
    }
    // single letter like "A." (initials)
    let mut chars = token.chars();
    if let (Some(first), Some('.'), None) = (chars.next(), chars.next(), chars.next()) {
        if first.is_alphabetic() {
            return false;
        }
    }
    true
}

/// Split on '.', '!', '?' followed by whitespace or end of text, except
/// when a period terminates a known abbreviation or a single letter.
/// Empty spans are discarded; a trailing unterminated span counts.
pub fn split_sentences(text: &str) -> Vec<&str> {
    let mut spans = Vec::new();
    let mut span_start = 0;
    for (idx, c) in text.char_indices() {
        if matches!(c, '.' | '!' | '?') && is_sentence_break(text, idx, c) {
            let span = text[span_start..idx + c.len_utf8()].trim();
            if !span.is_empty() {
                spans.push(span);
            }
            span_start = idx + c.len_utf8();
        }
    }
    let tail = text[span_start..].trim();
    if !tail.is_empty() {
        spans.push(tail);
    }
    spans
}
