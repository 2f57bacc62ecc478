//! Hierarchical lyric timing: subtitle cues give line spans, per-line ASR
//! transcripts give word timestamps.
//!
//! The steps are separate so the orchestration (which owns the ASR client
//! and persistence) can run them in order:
//!
//! 1. [`match_cues_to_lines`] assigns cues to lyric lines monotonically.
//! 2. [`derive_line_spans`] turns the assignment into line spans.
//! 3. [`align_words`] maps one line's ASR words onto its lyric words.

mod matcher;
mod similarity;
mod spans;
mod words;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use matcher::{
    match_cues_to_lines, monotone_total, pair_weight, AmbiguousWindow, LineMatchFallback,
    WindowAssignment, SCORE_SCALE,
};
pub use similarity::{token_set_ratio, word_similarity};
pub use spans::derive_line_spans;
pub use words::{align_words, edit_alignment, EditOp};

use crate::model::LyricLine;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMethod {
    Exact,
    Fuzzy,
    LlmFallback,
    Interpolated,
}

impl MatchMethod {
    pub fn is_matched(self) -> bool {
        !matches!(self, MatchMethod::Interpolated)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineMatch {
    pub line_index: usize,
    pub cue_indices: Vec<usize>,
    pub similarity: f64,
    pub method: MatchMethod,
}

/// Tunables. Thresholds have no published values; these are our defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignConfig {
    /// Minimum line/cue similarity for a fuzzy match.
    pub fuzzy_threshold: f64,
    /// Minimum word similarity for an ASR substitution.
    pub substitution_threshold: f64,
    /// Longest run of consecutive cues one lyric line may absorb.
    pub max_cues_per_line: usize,
    /// Concurrent per-line ASR requests.
    pub asr_concurrency: usize,
    /// Confidence given to a matched word whose ASR time had to be clamped
    /// into the line span.
    pub clamped_confidence: f64,
}

impl Default for AlignConfig {
    fn default() -> Self {
        AlignConfig {
            fuzzy_threshold: 0.60,
            substitution_threshold: 0.50,
            max_cues_per_line: 3,
            asr_concurrency: 4,
            clamped_confidence: 0.5,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub lines_total: usize,
    pub lines_matched: usize,
    pub words_total: usize,
    pub words_matched: usize,
    pub methods: BTreeMap<MatchMethod, usize>,
}

impl AlignmentReport {
    pub fn from_lines(lines: &[LyricLine], matches: &[LineMatch]) -> Self {
        let mut methods = BTreeMap::new();
        for m in matches {
            *methods.entry(m.method).or_insert(0) += 1;
        }
        let words: Vec<_> = lines.iter().flat_map(|l| &l.words).collect();
        AlignmentReport {
            lines_total: lines.len(),
            lines_matched: matches.iter().filter(|m| m.method.is_matched()).count(),
            words_total: words.len(),
            words_matched: words.iter().filter(|w| w.matched).count(),
            methods,
        }
    }
}
