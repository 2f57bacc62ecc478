use super::similarity::word_similarity;
use super::AlignConfig;
use crate::model::{AsrWord, LyricLine, Span, TimedWord};
use crate::text::normalize_text;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EditOp {
    /// Lyric word `.0` takes ASR word `.1` (identical or substituted).
    Pair(usize, usize),
    /// Lyric word with no ASR counterpart.
    SkipLyric(usize),
    /// ASR word with no lyric counterpart.
    SkipAsr(usize),
}

/// Minimum edit-distance alignment between lyric and ASR tokens.
///
/// Identical tokens pair for free; tokens with similarity at or above
/// `substitution_threshold` may pair at cost 1; every skip costs 1. Among
/// equal-cost alignments pairing is preferred, then skipping ASR words.
/// Returns the operations in order and the total cost.
pub fn edit_alignment(lyric: &[String], asr: &[String], substitution_threshold: f64) -> (Vec<EditOp>, usize) {
    let (n, m) = (lyric.len(), asr.len());
    let pair_cost = |i: usize, j: usize| -> Option<usize> {
        if lyric[i] == asr[j] && !lyric[i].is_empty() {
            Some(0)
        } else if !lyric[i].is_empty() && word_similarity(&lyric[i], &asr[j]) >= substitution_threshold {
            Some(1)
        } else {
            None
        }
    };
    // cost[i][j]: aligning lyric[i..] with asr[j..].
    let mut cost = vec![vec![0usize; m + 1]; n + 1];
    for i in (0..=n).rev() {
        for j in (0..=m).rev() {
            if i == n || j == m {
                cost[i][j] = (n - i) + (m - j);
                continue;
            }
            let mut best = cost[i + 1][j].min(cost[i][j + 1]) + 1;
            if let Some(c) = pair_cost(i, j) {
                best = best.min(cost[i + 1][j + 1] + c);
            }
            cost[i][j] = best;
        }
    }

    let mut ops = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (0, 0);
    while i < n || j < m {
        if i < n && j < m {
            if let Some(c) = pair_cost(i, j) {
                if cost[i + 1][j + 1] + c == cost[i][j] {
                    ops.push(EditOp::Pair(i, j));
                    i += 1;
                    j += 1;
                    continue;
                }
            }
        }
        if j < m && (i == n || cost[i][j + 1] + 1 == cost[i][j]) {
            ops.push(EditOp::SkipAsr(j));
            j += 1;
        } else {
            ops.push(EditOp::SkipLyric(i));
            i += 1;
        }
    }
    (ops, cost[0][0])
}

/// Word timestamps for one lyric line.
///
/// ASR times are relative to the line span start. Paired lyric words take
/// the ASR timing (clamped into the span, which lowers confidence to
/// `config.clamped_confidence`); confidence is 1 for identical tokens and the
/// character similarity for substitutions. Unpaired lyric words are spread
/// evenly over the gap between the end of the previous paired word and the
/// start of the next one (or the span edges), with confidence 0. A line
/// without a span yields unpaired words at time 0.
pub fn align_words(line: &LyricLine, asr: &[AsrWord], config: &AlignConfig) -> Vec<TimedWord> {
    let surfaces: Vec<&str> = line.text.split_whitespace().collect();
    let Some(span) = line.span else {
        return surfaces
            .iter()
            .map(|s| TimedWord {
                surface: s.to_string(),
                start_ms: 0,
                duration_ms: 0,
                confidence: 0.0,
                matched: false,
            })
            .collect();
    };

    let lyric_tokens: Vec<String> = surfaces.iter().map(|s| normalize_text(s)).collect();
    let asr_tokens: Vec<String> = asr.iter().map(|w| normalize_text(&w.surface)).collect();
    let (ops, _) = edit_alignment(&lyric_tokens, &asr_tokens, config.substitution_threshold);

    let mut paired: Vec<Option<(u64, u64, f64)>> = vec![None; surfaces.len()];
    let mut floor = span.start_ms;
    for op in ops {
        if let EditOp::Pair(i, j) = op {
            let w = &asr[j];
            let raw_start = span.start_ms + w.start_ms;
            let raw_end = raw_start + w.duration_ms;
            let start = raw_start.clamp(floor, span.end_ms);
            let end = raw_end.clamp(start, span.end_ms);
            let mut confidence = if lyric_tokens[i] == asr_tokens[j] {
                1.0
            } else {
                word_similarity(&lyric_tokens[i], &asr_tokens[j])
            };
            if start != raw_start || end != raw_end {
                confidence = confidence.min(config.clamped_confidence);
            }
            paired[i] = Some((start, end, confidence));
            floor = start;
        }
    }

    let mut out: Vec<TimedWord> = Vec::with_capacity(surfaces.len());
    let mut i = 0;
    while i < surfaces.len() {
        if let Some((start, end, confidence)) = paired[i] {
            out.push(TimedWord {
                surface: surfaces[i].to_string(),
                start_ms: start,
                duration_ms: end - start,
                confidence,
                matched: true,
            });
            i += 1;
            continue;
        }
        let first = i;
        while i < surfaces.len() && paired[i].is_none() {
            i += 1;
        }
        let next_start = paired.get(i).copied().flatten().map(|(s, _, _)| s);
        let gap_end = next_start.unwrap_or(span.end_ms);
        let gap_start = out.last().map_or(span.start_ms, TimedWord::end_ms).min(gap_end);
        fill_gap(&mut out, &surfaces[first..i], Span { start_ms: gap_start, end_ms: gap_end });
    }
    out
}

/// Evenly spaces unpaired words over `[gap.start_ms, gap.end_ms]`, which may
/// be empty.
fn fill_gap(out: &mut Vec<TimedWord>, surfaces: &[&str], gap: Span) {
    let k = surfaces.len() as u64;
    let width = gap.end_ms - gap.start_ms;
    for (idx, s) in surfaces.iter().enumerate() {
        let idx = idx as u64;
        let start = gap.start_ms + width * idx / k;
        let end = gap.start_ms + width * (idx + 1) / k;
        out.push(TimedWord {
            surface: s.to_string(),
            start_ms: start,
            duration_ms: end - start,
            confidence: 0.0,
            matched: false,
        });
    }
}
