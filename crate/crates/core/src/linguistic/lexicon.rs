//! Lexicon loading and the rule-based part-of-speech tagger.
//!
//! The lexicons ship with the crate and are loaded once; their content
//! hashes are recorded in model metadata so a trained model pins the
//! exact feature definitions it was built with.

use super::tokenize::{PosTag, TokenKind, TokenSequence};
use sha2::{Digest, Sha256};
use std::collections::HashMap;
use std::sync::OnceLock;

const POS_LEXICON: &str = include_str!("../../data/pos_lexicon.txt");
const HEDGES: &str = include_str!("../../data/hedges.txt");
const DISCOURSE_MARKERS: &str = include_str!("../../data/discourse_markers.txt");

#[derive(Debug)]
pub struct Lexicons {
    pos: HashMap<String, PosTag>,
    pub hedges: Vec<Vec<String>>,
    pub discourse_markers: Vec<Vec<String>>,
    /// sha256 of the pos, hedge, and discourse files, in that order.
    pub hashes: Vec<String>,
}

fn data_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
}

fn parse_pos(text: &str) -> HashMap<String, PosTag> {
    let mut map = HashMap::new();
    for line in data_lines(text) {
        let mut parts = line.split_whitespace();
        let (Some(word), Some(tag)) = (parts.next(), parts.next()) else {
            continue;
        };
        let tag = match tag {
            "noun" => PosTag::Noun,
            "verb" => PosTag::Verb,
            "adj" => PosTag::Adj,
            "adv" => PosTag::Adv,
            "pron" => PosTag::Pron,
            _ => PosTag::Other,
        };
        map.entry(word.to_lowercase()).or_insert(tag);
    }
    map
}

fn parse_phrases(text: &str) -> Vec<Vec<String>> {
    data_lines(text)
        .map(|l| l.split_whitespace().map(str::to_lowercase).collect())
        .collect()
}

fn file_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

impl Lexicons {
    /// The lexicons shipped with this crate.
    pub fn builtin() -> &'static Lexicons {
        static BUILTIN: OnceLock<Lexicons> = OnceLock::new();
        BUILTIN.get_or_init(|| Lexicons {
            pos: parse_pos(POS_LEXICON),
            hedges: parse_phrases(HEDGES),
            discourse_markers: parse_phrases(DISCOURSE_MARKERS),
            hashes: vec![
                file_hash(POS_LEXICON),
                file_hash(HEDGES),
                file_hash(DISCOURSE_MARKERS),
            ],
        })
    }

    fn lookup(&self, lower: &str) -> Option<PosTag> {
        self.pos.get(lower).copied()
    }

    /// Tag one lower-cased word: lexicon lookup first, then suffix
    /// heuristics, falling back to `Other`.
    pub fn tag_word(&self, lower: &str) -> PosTag {
        if let Some(tag) = self.lookup(lower) {
            return tag;
        }
        if lower.ends_with("ly") {
            return PosTag::Adv;
        }
        if lower.ends_with("tion") || lower.ends_with("ness") || lower.ends_with("ment") {
            return PosTag::Noun;
        }
        if lower.ends_with("ize") || lower.ends_with("ate") {
            return PosTag::Verb;
        }
        for suffix in ["ed", "ing"] {
            if let Some(stem) = lower.strip_suffix(suffix) {
                if self.is_known_verb_stem(stem) {
                    return PosTag::Verb;
                }
            }
        }
        PosTag::Other
    }

    fn is_known_verb_stem(&self, stem: &str) -> bool {
        if self.lookup(stem) == Some(PosTag::Verb) {
            return true;
        }
        // "hoped" -> "hope", "stopped" -> "stop"
        let with_e = format!("{stem}e");
        if self.lookup(&with_e) == Some(PosTag::Verb) {
            return true;
        }
        let chars: Vec<char> = stem.chars().collect();
        if chars.len() >= 2 && chars[chars.len() - 1] == chars[chars.len() - 2] {
            let undoubled: String = chars[..chars.len() - 1].iter().collect();
            if self.lookup(&undoubled) == Some(PosTag::Verb) {
                return true;
            }
        }
        false
    }
}

/// Apply the tagger to every word token in place.
pub fn tag_tokens(sequence: &mut TokenSequence, lexicons: &Lexicons) {
    for token in &mut sequence.tokens {
        if token.kind == TokenKind::Word {
            token.tag = Some(lexicons.tag_word(&token.surface.to_lowercase()));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexicon_loads_and_hashes_are_stable() {
        let lex = Lexicons::builtin();
        assert!(lex.pos.len() > 500);
        assert_eq!(lex.hashes.len(), 3);
        assert_eq!(lex.hashes, Lexicons::builtin().hashes);
        assert!(lex.hedges.iter().any(|h| h == &vec!["may".to_string()]));
        assert!(lex
            .discourse_markers
            .iter()
            .any(|m| m.join(" ") == "on the other hand"));
    }

    #[test]
    fn suffix_heuristics() {
        let lex = Lexicons::builtin();
        assert_eq!(lex.tag_word("quickly"), PosTag::Adv);
        assert_eq!(lex.tag_word("operation"), PosTag::Noun);
        assert_eq!(lex.tag_word("willingness"), PosTag::Noun);
        assert_eq!(lex.tag_word("optimize"), PosTag::Verb);
        // -ed after a known verb stem
        assert_eq!(lex.tag_word("hoped"), PosTag::Verb);
        assert_eq!(lex.tag_word("stopped"), PosTag::Verb);
        assert_eq!(lex.tag_word("zxqv"), PosTag::Other);
    }

    #[test]
    fn closed_classes_win_over_suffixes() {
        let lex = Lexicons::builtin();
        assert_eq!(lex.tag_word("it"), PosTag::Pron);
        assert_eq!(lex.tag_word("cat"), PosTag::Noun);
        assert_eq!(lex.tag_word("runs"), PosTag::Verb);
    }
}
