use super::similarity::token_set_ratio;
use super::{AlignConfig, LineMatch, MatchMethod};
use crate::subtitles::SubtitleCue;
use crate::text::normalized_tokens;

/// Similarities are compared as integers scaled by this factor so the DP
/// total is exact.
pub const SCORE_SCALE: u64 = 1_000_000;

/// Scaled weight of assigning a line to a concatenated cue run, or `None`
/// when the similarity is below the fuzzy threshold.
pub fn pair_weight(line: &[String], cues: &[String], threshold: f64) -> Option<u64> {
    let (num, den) = token_set_ratio(line, cues);
    if num == 0 || (num as f64) / (den as f64) < threshold {
        return None;
    }
    Some(num * SCORE_SCALE / den)
}

/// Lyric lines and cues the DP could not place, between two anchored
/// neighbors. Indices are global.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AmbiguousWindow {
    pub lines: Vec<(usize, String)>,
    pub cues: Vec<(usize, String)>,
}

/// `(line index, contiguous ascending cue indices)` pairs.
pub type WindowAssignment = Vec<(usize, Vec<usize>)>;

/// Resolves ambiguous windows, typically by asking an LLM. Returning `None`
/// leaves the window to interpolation.
pub trait LineMatchFallback {
    fn resolve(&self, window: &AmbiguousWindow) -> Option<WindowAssignment>;
}

#[derive(Clone, Copy)]
enum Step {
    SkipLine,
    SkipCue,
    Assign(usize),
}

/// Maximum-weight monotone assignment of cue runs to lines.
///
/// Each line takes either nothing or a run of `1..=max_run` consecutive cues;
/// runs never share or cross cues. Returns the total scaled weight and, per
/// line, the inclusive cue range assigned to it.
pub fn monotone_total(
    lines: &[Vec<String>],
    cues: &[Vec<String>],
    threshold: f64,
    max_run: usize,
) -> (u64, Vec<Option<(usize, usize)>>) {
    let (n, m) = (lines.len(), cues.len());
    let max_run = max_run.max(1);

    // weight[i][end][k-1]: line i against cues end-k+1..=end.
    let mut weight = vec![vec![vec![None; max_run]; m]; n];
    for (end, _) in cues.iter().enumerate() {
        let mut joined: Vec<String> = Vec::new();
        for k in 1..=max_run.min(end + 1) {
            let mut run = cues[end + 1 - k].clone();
            run.extend(joined);
            joined = run;
            for (i, line) in lines.iter().enumerate() {
                weight[i][end][k - 1] = pair_weight(line, &joined, threshold);
            }
        }
    }

    let mut best = vec![vec![0u64; m + 1]; n + 1];
    let mut step = vec![vec![Step::SkipLine; m + 1]; n + 1];
    for i in 1..=n {
        for j in 1..=m {
            let mut top = None::<(u64, Step)>;
            for k in 1..=max_run.min(j) {
                if let Some(w) = weight[i - 1][j - 1][k - 1] {
                    let cand = best[i - 1][j - k] + w;
                    if top.is_none_or(|(b, _)| cand > b) {
                        top = Some((cand, Step::Assign(k)));
                    }
                }
            }
            for (cand, s) in [(best[i - 1][j], Step::SkipLine), (best[i][j - 1], Step::SkipCue)] {
                if top.is_none_or(|(b, _)| cand > b) {
                    top = Some((cand, s));
                }
            }
            let (b, s) = top.expect("at least one candidate");
            best[i][j] = b;
            step[i][j] = s;
        }
    }

    let mut assigned = vec![None; n];
    let (mut i, mut j) = (n, m);
    while i > 0 && j > 0 {
        match step[i][j] {
            Step::SkipLine => i -= 1,
            Step::SkipCue => j -= 1,
            Step::Assign(k) => {
                assigned[i - 1] = Some((j - k, j - 1));
                i -= 1;
                j -= k;
            }
        }
    }
    (best[n][m], assigned)
}

fn concat_tokens(cue_tokens: &[Vec<String>], range: &[usize]) -> Vec<String> {
    range.iter().flat_map(|&c| cue_tokens[c].iter().cloned()).collect()
}

fn valid_window_assignment(window: &AmbiguousWindow, answer: &WindowAssignment) -> bool {
    let line_ok = |l: usize| window.lines.iter().any(|(i, _)| *i == l);
    let cue_ok = |c: usize| window.cues.iter().any(|(i, _)| *i == c);
    let mut last_line = None;
    let mut last_cue = None;
    for (line, cues) in answer {
        if !line_ok(*line) || cues.is_empty() || !cues.iter().all(|c| cue_ok(*c)) {
            return false;
        }
        if last_line.is_some_and(|l| *line <= l) {
            return false;
        }
        if cues.windows(2).any(|w| w[1] != w[0] + 1) {
            return false;
        }
        if last_cue.is_some_and(|c| cues[0] <= c) {
            return false;
        }
        last_line = Some(*line);
        last_cue = cues.last().copied();
    }
    true
}

/// Assigns subtitle cues to lyric lines.
///
/// Returns one [`LineMatch`] per line, in line order. Lines the DP leaves
/// unassigned are grouped into windows bounded by their matched neighbors;
/// windows that also contain free cues go to `fallback`, whose answer is
/// validated for monotonicity and discarded if invalid. Whatever is still
/// unmatched is marked [`MatchMethod::Interpolated`].
pub fn match_cues_to_lines(
    cues: &[SubtitleCue],
    lines: &[&str],
    config: &AlignConfig,
    fallback: Option<&dyn LineMatchFallback>,
) -> Vec<LineMatch> {
    let line_tokens: Vec<Vec<String>> = lines.iter().map(|l| normalized_tokens(l)).collect();
    let cue_tokens: Vec<Vec<String>> = cues.iter().map(|c| normalized_tokens(&c.text)).collect();
    let (_, assigned) = monotone_total(
        &line_tokens,
        &cue_tokens,
        config.fuzzy_threshold,
        config.max_cues_per_line,
    );

    let mut matches: Vec<LineMatch> = assigned
        .iter()
        .enumerate()
        .map(|(i, a)| match a {
            Some((lo, hi)) => {
                let range: Vec<usize> = (*lo..=*hi).collect();
                let joined = concat_tokens(&cue_tokens, &range);
                let (num, den) = token_set_ratio(&line_tokens[i], &joined);
                let method = if line_tokens[i] == joined {
                    MatchMethod::Exact
                } else {
                    MatchMethod::Fuzzy
                };
                LineMatch {
                    line_index: i,
                    cue_indices: range,
                    similarity: num as f64 / den as f64,
                    method,
                }
            }
            None => LineMatch {
                line_index: i,
                cue_indices: Vec::new(),
                similarity: 0.0,
                method: MatchMethod::Interpolated,
            },
        })
        .collect();

    if let Some(fallback) = fallback {
        for window in ambiguous_windows(&matches, cues, lines) {
            let Some(answer) = fallback.resolve(&window) else {
                continue;
            };
            if !valid_window_assignment(&window, &answer) {
                continue;
            }
            for (line, range) in answer {
                let joined = concat_tokens(&cue_tokens, &range);
                let (num, den) = token_set_ratio(&line_tokens[line], &joined);
                matches[line] = LineMatch {
                    line_index: line,
                    cue_indices: range,
                    similarity: num as f64 / den as f64,
                    method: MatchMethod::LlmFallback,
                };
            }
        }
    }
    matches
}

fn ambiguous_windows(matches: &[LineMatch], cues: &[SubtitleCue], lines: &[&str]) -> Vec<AmbiguousWindow> {
    let mut windows = Vec::new();
    let mut i = 0;
    while i < matches.len() {
        if matches[i].method.is_matched() {
            i += 1;
            continue;
        }
        let start = i;
        while i < matches.len() && !matches[i].method.is_matched() {
            i += 1;
        }
        let cue_lo = start
            .checked_sub(1)
            .and_then(|p| matches[p].cue_indices.last())
            .map_or(0, |c| c + 1);
        let cue_hi = matches.get(i).and_then(|m| m.cue_indices.first()).copied().unwrap_or(cues.len());
        if cue_lo >= cue_hi {
            continue;
        }
        windows.push(AmbiguousWindow {
            lines: (start..i).map(|l| (l, lines[l].to_string())).collect(),
            cues: (cue_lo..cue_hi).map(|c| (c, cues[c].text.clone())).collect(),
        });
    }
    windows
}
