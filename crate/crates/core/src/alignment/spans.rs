use super::LineMatch;
use crate::model::Span;
use crate::subtitles::SubtitleCue;

/// Splits `[start, end)` among lines proportionally to their character
/// lengths. Every line gets at least 1 ms; `None` when the gap is too small.
fn split_gap(start: u64, end: u64, lengths: &[u64]) -> Vec<Option<Span>> {
    let count = lengths.len() as u64;
    if end < start || end - start < count {
        return vec![None; lengths.len()];
    }
    let width = end - start;
    let total: u64 = lengths.iter().sum();
    let mut out = Vec::with_capacity(lengths.len());
    let mut prev = start;
    let mut cum = 0;
    for (k, len) in lengths.iter().enumerate() {
        cum += len;
        let remaining_after = count - (k as u64 + 1);
        let ideal = start + (width as u128 * cum as u128 / total as u128) as u64;
        let boundary = ideal.max(prev + 1).min(end - remaining_after);
        out.push(Some(Span::new(prev, boundary)));
        prev = boundary;
    }
    out
}

/// Line spans from a cue assignment.
///
/// A matched line spans its cues. Overlapping neighbors are cut at the
/// midpoint of the overlap. Unmatched lines share the gap between their
/// matched neighbors in proportion to character length; a leading gap starts
/// at 0 and a trailing gap ends at `track_end_ms` (left unspanned without it).
pub fn derive_line_spans(
    matches: &[LineMatch],
    cues: &[SubtitleCue],
    line_texts: &[&str],
    track_end_ms: Option<u64>,
) -> Vec<Option<Span>> {
    let n = matches.len();
    let mut spans: Vec<Option<Span>> = matches
        .iter()
        .map(|m| {
            let start = m.cue_indices.iter().map(|&c| cues[c].start_ms).min()?;
            let end = m.cue_indices.iter().map(|&c| cues[c].end_ms).max()?;
            (start < end).then(|| Span::new(start, end))
        })
        .collect();

    // Resolve overlaps between consecutive matched lines, left to right.
    let mut prev: Option<usize> = None;
    for i in 0..n {
        let Some(cur) = spans[i] else { continue };
        if let Some(p) = prev {
            let before = spans[p].expect("matched");
            if before.end_ms > cur.start_ms {
                let mid = (before.end_ms + cur.start_ms) / 2;
                let lo = before.start_ms + 1;
                let hi = cur.end_ms.saturating_sub(1);
                if lo > hi {
                    // Degenerate: the later line cannot be placed after its
                    // predecessor.
                    spans[i] = None;
                    continue;
                }
                let cut = mid.clamp(lo, hi);
                spans[p] = Some(Span::new(before.start_ms, cut));
                spans[i] = Some(Span::new(cut.max(cur.start_ms), cur.end_ms));
            }
        }
        prev = Some(i);
    }

    // Fill gaps with interpolated lines.
    let mut i = 0;
    while i < n {
        if spans[i].is_some() {
            i += 1;
            continue;
        }
        let first = i;
        while i < n && spans[i].is_none() {
            i += 1;
        }
        let gap_start = first.checked_sub(1).and_then(|p| spans[p]).map_or(0, |s| s.end_ms);
        let gap_end = match spans.get(i).copied().flatten() {
            Some(next) => next.start_ms,
            None => match track_end_ms {
                Some(end) => end,
                None => continue,
            },
        };
        let lengths: Vec<u64> = (first..i)
            .map(|l| line_texts[l].chars().count().max(1) as u64)
            .collect();
        for (offset, span) in split_gap(gap_start, gap_end, &lengths).into_iter().enumerate() {
            spans[first + offset] = span;
        }
    }
    spans
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alignment::MatchMethod;

    fn cue(index: usize, start_ms: u64, end_ms: u64) -> SubtitleCue {
        SubtitleCue { index, start_ms, end_ms, text: String::new() }
    }

    fn matched(line: usize, cues: Vec<usize>) -> LineMatch {
        LineMatch { line_index: line, cue_indices: cues, similarity: 1.0, method: MatchMethod::Fuzzy }
    }

    fn unmatched(line: usize) -> LineMatch {
        LineMatch { line_index: line, cue_indices: vec![], similarity: 0.0, method: MatchMethod::Interpolated }
    }

    #[test]
    fn single_cue_span() {
        let s = derive_line_spans(&[matched(0, vec![0])], &[cue(0, 1000, 3500)], &["x"], None);
        assert_eq!(s, vec![Some(Span::new(1000, 3500))]);
    }

    #[test]
    fn single_gap_occupant() {
        let cues = [cue(0, 1000, 2000), cue(1, 6000, 7000)];
        let m = [matched(0, vec![0]), unmatched(1), matched(2, vec![1])];
        let s = derive_line_spans(&m, &cues, &["a", "0123456789", "b"], None);
        assert_eq!(s[1], Some(Span::new(2000, 6000)));
    }

    #[test]
    fn proportional_split() {
        let cues = [cue(0, 1000, 2000), cue(1, 6000, 7000)];
        let m = [matched(0, vec![0]), unmatched(1), unmatched(2), matched(3, vec![1])];
        let ten = "0123456789";
        let thirty = "012345678901234567890123456789";
        let s = derive_line_spans(&m, &cues, &["a", ten, thirty, "b"], None);
        assert_eq!(s[1], Some(Span::new(2000, 3000)));
        assert_eq!(s[2], Some(Span::new(3000, 6000)));
    }

    #[test]
    fn overlap_split_at_midpoint() {
        let cues = [cue(0, 1000, 3000), cue(1, 2000, 4000)];
        let s = derive_line_spans(&[matched(0, vec![0]), matched(1, vec![1])], &cues, &["a", "b"], None);
        assert_eq!(s, vec![Some(Span::new(1000, 2500)), Some(Span::new(2500, 4000))]);
    }

    #[test]
    fn multi_cue_line() {
        let cues = [cue(0, 1000, 2000), cue(1, 2100, 3000)];
        let s = derive_line_spans(&[matched(0, vec![0, 1])], &cues, &["a"], None);
        assert_eq!(s, vec![Some(Span::new(1000, 3000))]);
    }

    #[test]
    fn leading_and_trailing_gaps() {
        let cues = [cue(0, 4000, 5000)];
        let m = [unmatched(0), matched(1, vec![0]), unmatched(2)];
        let s = derive_line_spans(&m, &cues, &["aa", "b", "cc"], None);
        assert_eq!(s[0], Some(Span::new(0, 4000)));
        assert_eq!(s[2], None);
        let s = derive_line_spans(&m, &cues, &["aa", "b", "cc"], Some(9000));
        assert_eq!(s[2], Some(Span::new(5000, 9000)));
    }

    #[test]
    fn tiny_gap_gets_minimum_widths() {
        let cues = [cue(0, 0, 10), cue(1, 13, 20)];
        let m = [matched(0, vec![0]), unmatched(1), unmatched(2), unmatched(3), matched(4, vec![1])];
        let long = "x".repeat(100);
        let s = derive_line_spans(&m, &cues, &["a", "b", &long, "c", "d"], None);
        assert_eq!(s[1..4], [Some(Span::new(10, 11)), Some(Span::new(11, 12)), Some(Span::new(12, 13))]);
        let m = [matched(0, vec![0]), unmatched(1), unmatched(2), unmatched(3), unmatched(4), matched(5, vec![1])];
        let s = derive_line_spans(&m, &cues, &["a", "b", "c", "d", "e", "f"], None);
        assert!(s[1..5].iter().all(Option::is_none));
    }
}
