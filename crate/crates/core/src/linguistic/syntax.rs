//! Pluggable syntactic-complexity analysis.
//!
//! The pipeline contract only needs consistent, deterministic complexity
//! signals, so the default analyzer is rule-based: clause nesting stands
//! in for tree depth and verb-anchored token distance stands in for
//! dependency length. Both preserve the monotone "more embedding means
//! larger values" signal the features exist to capture.

use super::lexicon::Lexicons;
use super::tokenize::{split_sentences, tokenize, PosTag, TokenKind};

/// Output of a syntax analyzer over one text.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SyntaxStats {
    /// Max over sentences; at least 1 when the text has a sentence.
    pub syntax_tree_depth: f64,
    /// Mean over word tokens; 0 for empty text.
    pub average_dependency_length: f64,
    /// Passive sentences / sentences.
    pub passive_voice_ratio: f64,
    /// Subordinator tokens / sentences; may exceed 1.
    pub subordinate_clause_rate: f64,
}

pub trait SyntaxAnalyzer: Send + Sync {
    fn analyze(&self, text: &str) -> SyntaxStats;
}

const SUBORDINATORS: [&str; 11] = [
    "that", "because", "although", "which", "who", "if", "while", "since", "whereas", "unless",
    "when",
];

const BE_FORMS: [&str; 8] = ["is", "are", "was", "were", "be", "been", "being", "am"];

fn is_participle(lower: &str) -> bool {
    lower.len() > 2 && (lower.ends_with("ed") || lower.ends_with("en"))
}

/// Deterministic rule-based analyzer; the default everywhere.
pub struct HeuristicAnalyzer {
    lexicons: &'static Lexicons,
}

impl HeuristicAnalyzer {
    pub fn new(lexicons: &'static Lexicons) -> Self {
        HeuristicAnalyzer { lexicons }
    }
}

impl Default for HeuristicAnalyzer {
    fn default() -> Self {
        HeuristicAnalyzer::new(Lexicons::builtin())
    }
}

impl SyntaxAnalyzer for HeuristicAnalyzer {
    fn analyze(&self, text: &str) -> SyntaxStats {
        let sentences = split_sentences(text);
        if sentences.is_empty() {
            return SyntaxStats::default();
        }
        let mut max_depth = 0usize;
        let mut dep_total = 0.0;
        let mut dep_count = 0usize;
        let mut passive = 0usize;
        let mut subordinators = 0usize;
        for sentence in &sentences {
            let seq = tokenize(sentence);
            let words: Vec<String> = seq
                .tokens
                .iter()
                .filter(|t| matches!(t.kind, TokenKind::Word | TokenKind::Number))
                .map(|t| t.surface.to_lowercase())
                .collect();
            let subs = words
                .iter()
                .filter(|w| SUBORDINATORS.contains(&w.as_str()))
                .count();
            subordinators += subs;
            max_depth = max_depth.max(1 + subs);

            let mut last_verb: Option<usize> = None;
            for (pos, word) in words.iter().enumerate() {
                let anchor = last_verb.unwrap_or(0);
                dep_total += (pos - anchor) as f64;
                dep_count += 1;
                if self.lexicons.tag_word(word) == PosTag::Verb {
                    last_verb = Some(pos);
                }
            }

            let is_passive = words.iter().enumerate().any(|(i, w)| {
                BE_FORMS.contains(&w.as_str())
                    && words[i + 1..].iter().take(2).any(|n| is_participle(n))
            });
            if is_passive {
                passive += 1;
            }
        }
        let n = sentences.len() as f64;
        SyntaxStats {
            syntax_tree_depth: max_depth as f64,
            average_dependency_length: if dep_count == 0 {
                0.0
            } else {
                dep_total / dep_count as f64
            },
            passive_voice_ratio: passive as f64 / n,
            subordinate_clause_rate: subordinators as f64 / n,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn analyzer() -> HeuristicAnalyzer {
        HeuristicAnalyzer::default()
    }

    #[test]
    fn single_word_sentence() {
        let stats = analyzer().analyze("Go.");
        assert_eq!(stats.syntax_tree_depth, 1.0);
        assert_eq!(stats.average_dependency_length, 0.0);
    }

    #[test]
    fn passive_voice_detected() {
        let stats = analyzer().analyze("It was eaten.");
        assert_eq!(stats.passive_voice_ratio, 1.0);
        let active = analyzer().analyze("The cat eats fish.");
        assert_eq!(active.passive_voice_ratio, 0.0);
    }

    #[test]
    fn subordinate_clause_rate_counts_subordinators() {
        let stats = analyzer().analyze("I left because it rained.");
        assert_eq!(stats.subordinate_clause_rate, 1.0);
        assert_eq!(stats.syntax_tree_depth, 2.0);
    }

    #[test]
    fn empty_text_is_all_zero() {
        assert_eq!(analyzer().analyze(""), SyntaxStats::default());
    }

    #[test]
    fn dependency_length_anchors_on_preceding_verb() {
        // words: the(0) cat(1) sat(2) on(3) the(4) mat(5); "sat" is a verb
        // distances: 0,1,2 then 1,2,3 -> mean = 9/6
        let stats = analyzer().analyze("The cat sat on the mat.");
        assert!((stats.average_dependency_length - 1.5).abs() < 1e-12);
    }

    #[test]
    fn deeper_embedding_raises_depth() {
        let flat = analyzer().analyze("The cat sat.");
        let nested = analyzer().analyze("I think that the cat which you saw sat because it was tired.");
        assert!(nested.syntax_tree_depth > flat.syntax_tree_depth);
    }
}
