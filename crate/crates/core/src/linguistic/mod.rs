//! Linguistic feature extraction from candidate text.
//!
//! Every feature is a pure, deterministic function of the text (and the
//! configured analyzer), so extraction is reproducible across runs and
//! machines. Blank candidates are legal and produce all-zero features.

mod lexicon;
mod syntax;
mod tokenize;

pub use lexicon::{tag_tokens, Lexicons};
pub use syntax::{HeuristicAnalyzer, SyntaxAnalyzer, SyntaxStats};
pub use tokenize::{split_sentences, tokenize, PosTag, Token, TokenKind, TokenSequence};

use crate::data::{JudgmentInstance, JudgmentScore, JudgmentType};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinguisticError {
    #[error("lexical features need tagged tokens; run the tagger first")]
    Untagged,
    #[error("expected {expected} responses for a {kind} instance, got {got}")]
    ArityMismatch {
        kind: JudgmentType,
        expected: usize,
        got: usize,
    },
}

/// Length and structure counts.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LengthStats {
    pub word_count: f64,
    pub char_count: f64,
    pub sentence_count: f64,
    pub avg_sentence_length: f64,
    pub list_count: f64,
    pub paragraph_count: f64,
    pub punctuation_count: f64,
    pub reference_count: f64,
}

/// Compute length features. Words are word and number tokens; characters
/// count Unicode scalar values of the raw text including whitespace.
pub fn length_features(text: &str) -> LengthStats {
    let seq = tokenize(text);
    let word_count =
        (seq.count(TokenKind::Word) + seq.count(TokenKind::Number)) as f64;
    let sentence_count = split_sentences(text).len() as f64;
    let mut list_count = 0usize;
    for line in text.lines() {
        let trimmed = line.trim_start();
        if trimmed.starts_with('-') || trimmed.starts_with('*') || trimmed.starts_with('•') {
            list_count += 1;
            continue;
        }
        let digits: String = trimmed.chars().take_while(|c| c.is_ascii_digit()).collect();
        if !digits.is_empty() {
            if let Some(next) = trimmed[digits.len()..].chars().next() {
                if next == '.' || next == ')' {
                    list_count += 1;
                }
            }
        }
    }
    let mut paragraph_count = 0usize;
    let mut in_paragraph = false;
    for line in text.lines() {
        if line.trim().is_empty() {
            in_paragraph = false;
        } else if !in_paragraph {
            paragraph_count += 1;
            in_paragraph = true;
        }
    }
    LengthStats {
        word_count,
        char_count: text.chars().count() as f64,
        sentence_count,
        avg_sentence_length: word_count / sentence_count.max(1.0),
        list_count: list_count as f64,
        paragraph_count: paragraph_count as f64,
        punctuation_count: seq.count(TokenKind::Punct) as f64,
        reference_count: seq.count(TokenKind::Url) as f64,
    }
}

/// Lexical diversity and tag-ratio features over word tokens.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LexicalStats {
    pub unique_words: f64,
    pub vocab_diversity: f64,
    pub average_word_length: f64,
    pub noun_verb_ratio: f64,
    pub adjective_ratio: f64,
    pub adverb_ratio: f64,
    pub pronoun_ratio: f64,
    pub contraction_rate: f64,
}

/// Unbounded noun/verb ratios destabilize standardization, so the ratio
/// is capped here.
pub const NOUN_VERB_RATIO_CAP: f64 = 50.0;

fn has_contraction(surface: &str) -> bool {
    surface.contains('\'') || surface.contains('\u{2019}')
}

/// Compute lexical features over lower-cased word tokens. The sequence
/// must have been tagged.
pub fn lexical_features(sequence: &TokenSequence) -> Result<LexicalStats, LinguisticError> {
    let words: Vec<&Token> = sequence.words().collect();
    if words.iter().any(|t| t.tag.is_none()) {
        return Err(LinguisticError::Untagged);
    }
    if words.is_empty() {
        return Ok(LexicalStats::default());
    }
    let total = words.len() as f64;
    let lowered: Vec<String> = words.iter().map(|t| t.surface.to_lowercase()).collect();
    let unique = lowered
        .iter()
        .collect::<std::collections::BTreeSet<_>>()
        .len() as f64;
    let tag_count = |tag: PosTag| words.iter().filter(|t| t.tag == Some(tag)).count() as f64;
    let nouns = tag_count(PosTag::Noun);
    let verbs = tag_count(PosTag::Verb);
    Ok(LexicalStats {
        unique_words: unique,
        vocab_diversity: unique / total,
        average_word_length: lowered.iter().map(|w| w.chars().count() as f64).sum::<f64>() / total,
        noun_verb_ratio: (nouns / verbs.max(1.0)).min(NOUN_VERB_RATIO_CAP),
        adjective_ratio: tag_count(PosTag::Adj) / total,
        adverb_ratio: tag_count(PosTag::Adv) / total,
        pronoun_ratio: tag_count(PosTag::Pron) / total,
        contraction_rate: words.iter().filter(|t| has_contraction(&t.surface)).count() as f64
            / total,
    })
}

/// Coleman-Liau readability index:
/// `0.0588 * L - 0.296 * S - 15.8`, with L letters per 100 words and S
/// sentences per 100 words. Letters are alphabetic characters only.
/// Returns 0 for texts with no words.
pub fn coleman_liau(text: &str) -> f64 {
    let seq = tokenize(text);
    let words = (seq.count(TokenKind::Word) + seq.count(TokenKind::Number)) as f64;
    if words == 0.0 {
        return 0.0;
    }
    let letters = text.chars().filter(|c| c.is_alphabetic()).count() as f64;
    let sentences = split_sentences(text).len() as f64;
    0.0588 * (100.0 * letters / words) - 0.296 * (100.0 * sentences / words) - 15.8
}

/// Delegate to the analyzer; exists so the pipeline contract stays
/// independent of any particular parser.
pub fn syntax_features(text: &str, analyzer: &dyn SyntaxAnalyzer) -> SyntaxStats {
    analyzer.analyze(text)
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DiscourseStats {
    pub hedging_frequency: f64,
    pub discourse_marker_rate: f64,
}

fn phrase_hits(words: &[String], phrases: &[Vec<String>]) -> usize {
    let mut by_len: Vec<&Vec<String>> = phrases.iter().collect();
    by_len.sort_by_key(|p| std::cmp::Reverse(p.len()));
    let mut hits = 0;
    let mut i = 0;
    while i < words.len() {
        let matched = by_len.iter().find(|p| {
            !p.is_empty() && i + p.len() <= words.len() && words[i..i + p.len()] == p[..]
        });
        if let Some(p) = matched {
            hits += 1;
            i += p.len();
        } else {
            i += 1;
        }
    }
    hits
}

/// Hedge and discourse-marker frequencies per word token, matched
/// case-insensitively; multi-word markers count once.
pub fn discourse_features(sequence: &TokenSequence, lexicons: &Lexicons) -> DiscourseStats {
    let words: Vec<String> = sequence.words().map(|t| t.surface.to_lowercase()).collect();
    if words.is_empty() {
        return DiscourseStats::default();
    }
    let total = words.len() as f64;
    DiscourseStats {
        hedging_frequency: phrase_hits(&words, &lexicons.hedges) as f64 / total,
        discourse_marker_rate: phrase_hits(&words, &lexicons.discourse_markers) as f64 / total,
    }
}

/// Names of the scalar record fields, in feature order.
pub const RECORD_FIELDS: [&str; 23] = [
    "word_count",
    "char_count",
    "sentence_count",
    "avg_sentence_length",
    "list_count",
    "paragraph_count",
    "punctuation_count",
    "reference_count",
    "unique_words",
    "vocab_diversity",
    "average_word_length",
    "noun_verb_ratio",
    "adjective_ratio",
    "adverb_ratio",
    "pronoun_ratio",
    "contraction_rate",
    "coleman_liau",
    "syntax_tree_depth",
    "average_dependency_length",
    "passive_voice_ratio",
    "subordinate_clause_rate",
    "hedging_frequency",
    "discourse_marker_rate",
];

/// The full per-response linguistic record.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LinguisticRecord {
    pub length: LengthStats,
    pub lexical: LexicalStats,
    pub coleman_liau: f64,
    pub syntax: SyntaxStats,
    pub discourse: DiscourseStats,
}

impl LinguisticRecord {
    pub fn values(&self) -> [f64; 23] {
        [
            self.length.word_count,
            self.length.char_count,
            self.length.sentence_count,
            self.length.avg_sentence_length,
            self.length.list_count,
            self.length.paragraph_count,
            self.length.punctuation_count,
            self.length.reference_count,
            self.lexical.unique_words,
            self.lexical.vocab_diversity,
            self.lexical.average_word_length,
            self.lexical.noun_verb_ratio,
            self.lexical.adjective_ratio,
            self.lexical.adverb_ratio,
            self.lexical.pronoun_ratio,
            self.lexical.contraction_rate,
            self.coleman_liau,
            self.syntax.syntax_tree_depth,
            self.syntax.average_dependency_length,
            self.syntax.passive_voice_ratio,
            self.syntax.subordinate_clause_rate,
            self.discourse.hedging_frequency,
            self.discourse.discourse_marker_rate,
        ]
    }
}

/// Extracts linguistic feature blocks from judgment instances.
pub struct LinguisticExtractor {
    lexicons: &'static Lexicons,
    analyzer: Box<dyn SyntaxAnalyzer>,
}

impl Default for LinguisticExtractor {
    fn default() -> Self {
        LinguisticExtractor {
            lexicons: Lexicons::builtin(),
            analyzer: Box::new(HeuristicAnalyzer::default()),
        }
    }
}

impl LinguisticExtractor {
    pub fn with_analyzer(analyzer: Box<dyn SyntaxAnalyzer>) -> Self {
        LinguisticExtractor {
            lexicons: Lexicons::builtin(),
            analyzer,
        }
    }

    pub fn lexicon_hashes(&self) -> Vec<String> {
        self.lexicons.hashes.clone()
    }

    /// Full record for one text.
    pub fn record(&self, text: &str) -> LinguisticRecord {
        let mut seq = tokenize(text);
        tag_tokens(&mut seq, self.lexicons);
        LinguisticRecord {
            length: length_features(text),
            lexical: lexical_features(&seq).expect("sequence was tagged"),
            coleman_liau: coleman_liau(text),
            syntax: self.analyzer.analyze(text),
            discourse: discourse_features(&seq, self.lexicons),
        }
    }

    /// Linguistic block values for one instance, in the order given by
    /// [`feature_names`] for its type.
    pub fn extract(
        &self,
        instance: &JudgmentInstance,
        k_items: usize,
    ) -> Result<Vec<f64>, LinguisticError> {
        let responses = &instance.candidate.responses;
        let expect = |expected: usize| -> Result<(), LinguisticError> {
            if responses.len() != expected {
                Err(LinguisticError::ArityMismatch {
                    kind: instance.judgment_type(),
                    expected,
                    got: responses.len(),
                })
            } else {
                Ok(())
            }
        };
        match &instance.score {
            JudgmentScore::Pointwise { .. } => {
                expect(1)?;
                Ok(self.record(&responses[0]).values().to_vec())
            }
            JudgmentScore::Pairwise { .. } => {
                expect(2)?;
                let r1 = self.record(&responses[0]).values();
                let r2 = self.record(&responses[1]).values();
                let mut out = Vec::with_capacity(69);
                out.extend_from_slice(&r1);
                out.extend_from_slice(&r2);
                out.extend(r1.iter().zip(r2.iter()).map(|(a, b)| a - b));
                Ok(out)
            }
            JudgmentScore::Listwise { ranking, .. } => {
                let mut records = Vec::with_capacity(k_items);
                for i in 0..k_items {
                    records.push(responses.get(i).map(|r| self.record(r)));
                }
                let mut out = Vec::new();
                for record in &records {
                    match record {
                        Some(r) => {
                            out.extend_from_slice(&r.values());
                            out.push(1.0);
                        }
                        None => {
                            out.extend(std::iter::repeat_n(0.0, 23));
                            out.push(0.0);
                        }
                    }
                }
                // diffs between consecutive ranked items, best to worst
                let zeros = [0.0; 23];
                for j in 0..k_items.saturating_sub(1) {
                    let a = ranking
                        .get(j)
                        .and_then(|&i| records.get(i).and_then(|r| r.as_ref()))
                        .map(|r| r.values())
                        .unwrap_or(zeros);
                    let b = ranking
                        .get(j + 1)
                        .and_then(|&i| records.get(i).and_then(|r| r.as_ref()))
                        .map(|r| r.values())
                        .unwrap_or(zeros);
                    out.extend(a.iter().zip(b.iter()).map(|(x, y)| x - y));
                }
                Ok(out)
            }
        }
    }
}

/// Names of the linguistic block, matching [`LinguisticExtractor::extract`].
pub fn feature_names(ty: JudgmentType, k_items: usize) -> Vec<String> {
    let mut names = Vec::new();
    match ty {
        JudgmentType::Pointwise => {
            names.extend(RECORD_FIELDS.iter().map(|f| format!("ling.{f}")));
        }
        JudgmentType::Pairwise => {
            for prefix in ["r1", "r2", "diff"] {
                names.extend(RECORD_FIELDS.iter().map(|f| format!("ling.{prefix}.{f}")));
            }
        }
        JudgmentType::Listwise => {
            for i in 0..k_items {
                names.extend(RECORD_FIELDS.iter().map(|f| format!("ling.item{i}.{f}")));
                names.push(format!("ling.item{i}.present"));
            }
            for j in 0..k_items.saturating_sub(1) {
                names.extend(
                    RECORD_FIELDS
                        .iter()
                        .map(|f| format!("ling.rankdiff{j}.{f}")),
                );
            }
        }
    }
    names
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Candidate;
    use std::collections::BTreeMap;

    #[test]
    fn length_example_counts() {
        let stats = length_features("Hello world. How are you?");
        assert_eq!(stats.word_count, 5.0);
        assert_eq!(stats.char_count, 25.0);
        assert_eq!(stats.sentence_count, 2.0);
        assert!((stats.avg_sentence_length - 2.5).abs() < 1e-12);
    }

    #[test]
    fn list_and_paragraph_counts() {
        let stats = length_features("- a\n- b\n\nc");
        assert_eq!(stats.list_count, 2.0);
        assert_eq!(stats.paragraph_count, 2.0);
        let numbered = length_features("1. first\n2) second\nplain");
        assert_eq!(numbered.list_count, 2.0);
    }

    #[test]
    fn empty_text_is_zero() {
        let stats = length_features("");
        assert_eq!(stats, LengthStats::default());
        assert_eq!(coleman_liau(""), 0.0);
    }

    fn tagged(text: &str) -> TokenSequence {
        let mut seq = tokenize(text);
        tag_tokens(&mut seq, Lexicons::builtin());
        seq
    }

    #[test]
    fn lexical_example_counts() {
        let stats = lexical_features(&tagged("the cat the mat")).unwrap();
        assert_eq!(stats.unique_words, 3.0);
        assert!((stats.vocab_diversity - 0.75).abs() < 1e-12);
        assert!((stats.average_word_length - 3.0).abs() < 1e-12);
    }

    #[test]
    fn noun_verb_ratio_with_injected_tags() {
        let seq = TokenSequence {
            tokens: vec![
                Token {
                    surface: "cat".into(),
                    kind: TokenKind::Word,
                    tag: Some(PosTag::Noun),
                },
                Token {
                    surface: "runs".into(),
                    kind: TokenKind::Word,
                    tag: Some(PosTag::Verb),
                },
            ],
        };
        let stats = lexical_features(&seq).unwrap();
        assert_eq!(stats.noun_verb_ratio, 1.0);
    }

    #[test]
    fn contraction_rate() {
        let stats = lexical_features(&tagged("don't stop")).unwrap();
        assert!((stats.contraction_rate - 0.5).abs() < 1e-12);
    }

    #[test]
    fn untagged_input_rejected() {
        let seq = tokenize("hello world");
        assert!(matches!(
            lexical_features(&seq),
            Err(LinguisticError::Untagged)
        ));
    }

    #[test]
    fn coleman_liau_matches_hand_computation() {
        // 10 letters, 3 words, 1 sentence:
        // 0.0588*333.333 - 0.296*33.333 - 15.8 = -6.0667
        let value = coleman_liau("The cats sat.");
        assert!((value - (-6.0667)).abs() < 1e-4, "got {value}");
    }

    #[test]
    fn coleman_liau_is_invariant_under_doubling() {
        let text = "The quick brown fox jumps over the lazy dog. It runs far!";
        let doubled = format!("{text}\n{text}");
        assert!((coleman_liau(text) - coleman_liau(&doubled)).abs() < 1e-9);
    }

    #[test]
    fn discourse_example_counts() {
        let lex = Lexicons::builtin();
        let stats = discourse_features(&tagged("however it may rain"), lex);
        assert!((stats.hedging_frequency - 0.25).abs() < 1e-12);
        assert!((stats.discourse_marker_rate - 0.25).abs() < 1e-12);

        let all_hedges = discourse_features(&tagged("may possibly"), lex);
        assert_eq!(all_hedges.hedging_frequency, 1.0);

        let none = discourse_features(&tagged("plain words here"), lex);
        assert_eq!(none, DiscourseStats::default());
    }

    #[test]
    fn multi_word_marker_counts_once() {
        let lex = Lexicons::builtin();
        let stats = discourse_features(&tagged("on the other hand we agree"), lex);
        // one marker over six words
        assert!((stats.discourse_marker_rate - 1.0 / 6.0).abs() < 1e-12);
    }

    fn pointwise_instance(text: &str) -> JudgmentInstance {
        let mut dims = BTreeMap::new();
        dims.insert("Overall".into(), 3.0);
        JudgmentInstance {
            candidate: Candidate {
                id: "c".into(),
                prompt: None,
                responses: vec![text.into()],
                meta: BTreeMap::new(),
            },
            score: JudgmentScore::Pointwise { dims },
        }
    }

    fn pairwise_instance(r1: &str, r2: &str) -> JudgmentInstance {
        JudgmentInstance {
            candidate: Candidate {
                id: "c".into(),
                prompt: None,
                responses: vec![r1.into(), r2.into()],
                meta: BTreeMap::new(),
            },
            score: JudgmentScore::Pairwise { pair: 1 },
        }
    }

    #[test]
    fn pointwise_extraction_has_word_count() {
        let ex = LinguisticExtractor::default();
        let values = ex.extract(&pointwise_instance("Hello world. How are you?"), 0).unwrap();
        let names = feature_names(JudgmentType::Pointwise, 0);
        let idx = names.iter().position(|n| n == "ling.word_count").unwrap();
        assert_eq!(values[idx], 5.0);
        assert_eq!(values.len(), names.len());
    }

    #[test]
    fn pairwise_identical_responses_zero_diffs() {
        let ex = LinguisticExtractor::default();
        let values = ex
            .extract(&pairwise_instance("Same text here.", "Same text here."), 0)
            .unwrap();
        let names = feature_names(JudgmentType::Pairwise, 0);
        for (name, value) in names.iter().zip(&values) {
            if name.starts_with("ling.diff.") {
                assert_eq!(*value, 0.0, "{name}");
            }
        }
    }

    #[test]
    fn pairwise_swap_negates_diffs_and_swaps_blocks() {
        let ex = LinguisticExtractor::default();
        let a = ex
            .extract(&pairwise_instance("Short one.", "A much longer response, with clauses."), 0)
            .unwrap();
        let b = ex
            .extract(&pairwise_instance("A much longer response, with clauses.", "Short one."), 0)
            .unwrap();
        let n = RECORD_FIELDS.len();
        assert_eq!(&a[..n], &b[n..2 * n]);
        assert_eq!(&a[n..2 * n], &b[..n]);
        for i in 0..n {
            assert!((a[2 * n + i] + b[2 * n + i]).abs() < 1e-12);
        }
    }

    #[test]
    fn listwise_padding_and_presence() {
        let ex = LinguisticExtractor::default();
        let instance = JudgmentInstance {
            candidate: Candidate {
                id: "c".into(),
                prompt: None,
                responses: vec!["First answer.".into(), "Second answer.".into()],
                meta: BTreeMap::new(),
            },
            score: JudgmentScore::Listwise {
                items: vec![4.0, 2.0],
                ranking: vec![0, 1],
            },
        };
        // declared arity 3; the third item is padded with zeros
        let values = ex.extract(&instance, 3).unwrap();
        let names = feature_names(JudgmentType::Listwise, 3);
        assert_eq!(values.len(), names.len());
        let present =
            |i: usize| values[names.iter().position(|n| *n == format!("ling.item{i}.present")).unwrap()];
        assert_eq!(present(0), 1.0);
        assert_eq!(present(1), 1.0);
        assert_eq!(present(2), 0.0);
    }

    #[test]
    fn arity_mismatch_is_an_error() {
        let ex = LinguisticExtractor::default();
        let mut bad = pairwise_instance("one", "two");
        bad.candidate.responses.pop();
        assert!(matches!(
            ex.extract(&bad, 0),
            Err(LinguisticError::ArityMismatch { .. })
        ));
    }
}
