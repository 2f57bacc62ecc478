//! Which line and word are active at a playback time.

use elmi_core::{LyricLine, TimedLyric};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlaybackMode {
    #[default]
    Global,
    LineLoop,
}

impl std::str::FromStr for PlaybackMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "global" => Ok(PlaybackMode::Global),
            "line_loop" => Ok(PlaybackMode::LineLoop),
            other => Err(format!("unknown playback mode {other:?}; expected global or line_loop")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlaybackState {
    pub project_id: String,
    /// Resolved time; in line-loop mode this is the wrapped time.
    pub t_ms: u64,
    pub active_line: Option<usize>,
    pub active_word: Option<usize>,
    pub mode: PlaybackMode,
    pub loop_line: Option<usize>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PlaybackError {
    #[error("line_loop mode needs a loop line")]
    LoopLineMissing,
    #[error("loop line {0} does not exist")]
    NoSuchLine(usize),
    #[error("loop line {0} has no time span")]
    UntimedLine(usize),
}

/// Last word of `line` starting at or before `t_ms`.
fn active_word(line: &LyricLine, t_ms: u64) -> Option<usize> {
    line.words.iter().rposition(|w| w.start_ms <= t_ms)
}

/// Resolves the active line and word at `t_ms`.
///
/// Spans are closed; when two lines share a boundary the later one wins.
/// In line-loop mode `t_ms` is first wrapped into the loop line's span and
/// only that line can be active.
pub fn resolve_playback(
    project_id: &str,
    lyric: &TimedLyric,
    t_ms: u64,
    mode: PlaybackMode,
    loop_line: Option<usize>,
) -> Result<PlaybackState, PlaybackError> {
    let mut state = PlaybackState { project_id: project_id.to_string(), t_ms, active_line: None, active_word: None, mode, loop_line: None };
    match mode {
        PlaybackMode::Global => {
            if let Some((i, line)) = lyric.lines.iter().enumerate().rev().find(|(_, l)| l.span.is_some_and(|s| s.contains(t_ms))) {
                state.active_line = Some(i);
                state.active_word = active_word(line, t_ms);
            }
        }
        PlaybackMode::LineLoop => {
            let n = loop_line.ok_or(PlaybackError::LoopLineMissing)?;
            let line = lyric.lines.get(n).ok_or(PlaybackError::NoSuchLine(n))?;
            let span = line.span.filter(|s| s.end_ms > s.start_ms).ok_or(PlaybackError::UntimedLine(n))?;
            let offset = (i128::from(t_ms) - i128::from(span.start_ms)).rem_euclid(i128::from(span.len_ms()));
            let wrapped = span.start_ms + offset as u64;
            state.t_ms = wrapped;
            state.loop_line = Some(n);
            state.active_line = Some(n);
            state.active_word = active_word(line, wrapped);
        }
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use elmi_core::{Span, TimedWord};

    fn word(s: &str, start: u64, dur: u64) -> TimedWord {
        TimedWord { surface: s.into(), start_ms: start, duration_ms: dur, confidence: 1.0, matched: true }
    }

    fn lyric() -> TimedLyric {
        TimedLyric {
            lines: vec![
                LyricLine {
                    index: 0,
                    section: "V".into(),
                    text: "Smooth like".into(),
                    span: Some(Span::new(1000, 3500)),
                    words: vec![word("Smooth", 1000, 900), word("like", 2000, 800)],
                },
                LyricLine {
                    index: 1,
                    section: "V".into(),
                    text: "butter".into(),
                    span: Some(Span::new(3500, 5000)),
                    words: vec![word("butter", 3600, 900)],
                },
            ],
        }
    }

    #[test]
    fn global_resolution() {
        let l = lyric();
        let at = |t| {
            let s = resolve_playback("p", &l, t, PlaybackMode::Global, None).unwrap();
            (s.active_line, s.active_word)
        };
        assert_eq!(at(500), (None, None));
        assert_eq!(at(2100), (Some(0), Some(1)));
        assert_eq!(at(3500), (Some(1), None));
        assert_eq!(at(3600), (Some(1), Some(0)));
        assert_eq!(at(5000), (Some(1), Some(0)));
        assert_eq!(at(5001), (None, None));
    }

    #[test]
    fn loop_wraps() {
        let l = lyric();
        let s = resolve_playback("p", &l, 4000, PlaybackMode::LineLoop, Some(0)).unwrap();
        assert_eq!((s.t_ms, s.active_line, s.active_word), (1500, Some(0), Some(0)));
        let s = resolve_playback("p", &l, 0, PlaybackMode::LineLoop, Some(0)).unwrap();
        assert_eq!(s.t_ms, 2500);
        assert_eq!(resolve_playback("p", &l, 0, PlaybackMode::LineLoop, None), Err(PlaybackError::LoopLineMissing));
        assert_eq!(resolve_playback("p", &l, 0, PlaybackMode::LineLoop, Some(9)), Err(PlaybackError::NoSuchLine(9)));
    }
}
