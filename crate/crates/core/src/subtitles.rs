//! WebVTT and SubRip cue parsing.
//!
//! Timestamps are kept as integer milliseconds. Styling tags are stripped,
//! multi-row cue text is joined with single spaces, and consecutive cues that
//! repeat the same text over overlapping spans (auto-caption roll-up) are
//! merged.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::collapse_whitespace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubtitleFormat {
    Vtt,
    Srt,
}

impl SubtitleFormat {
    pub fn extension(self) -> &'static str {
        match self {
            SubtitleFormat::Vtt => "vtt",
            SubtitleFormat::Srt => "srt",
        }
    }
}

impl FromStr for SubtitleFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().trim_start_matches('.').to_ascii_lowercase().as_str() {
            "vtt" | "webvtt" => Ok(SubtitleFormat::Vtt),
            "srt" | "subrip" => Ok(SubtitleFormat::Srt),
            other => Err(format!("unsupported subtitle format {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubtitleCue {
    pub index: usize,
    pub start_ms: u64,
    pub end_ms: u64,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SubtitleError {
    #[error("subtitle data is not valid UTF-8")]
    InvalidUtf8,
    #[error("malformed timestamp on line {line}: {found:?}")]
    MalformedTimestamp { line: usize, found: String },
    #[error("subtitle document contains no cues")]
    EmptyDocument,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedSubtitles {
    pub cues: Vec<SubtitleCue>,
    pub warnings: Vec<String>,
}

/// Parses `hh:mm:ss.mmm`, `mm:ss.mmm` (and `,` as the fraction separator).
fn parse_timestamp(s: &str) -> Option<u64> {
    let s = s.trim();
    let (clock, frac) = s.rsplit_once(['.', ','])?;
    if frac.len() != 3 || !frac.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let parts: Vec<&str> = clock.split(':').collect();
    let nums: Option<Vec<u64>> = parts
        .iter()
        .map(|p| {
            (!p.is_empty() && p.bytes().all(|b| b.is_ascii_digit()))
                .then(|| p.parse().ok())
                .flatten()
        })
        .collect();
    let nums = nums?;
    let (h, m, sec) = match nums.as_slice() {
        [h, m, s] => (*h, *m, *s),
        [m, s] => (0, *m, *s),
        _ => return None,
    };
    if m >= 60 || sec >= 60 {
        return None;
    }
    Some(((h * 60 + m) * 60 + sec) * 1000 + frac.parse::<u64>().ok()?)
}

fn format_timestamp(ms: u64, sep: char) -> String {
    let (h, rem) = (ms / 3_600_000, ms % 3_600_000);
    format!(
        "{:02}:{:02}:{:02}{}{:03}",
        h,
        rem / 60_000,
        (rem / 1000) % 60,
        sep,
        rem % 1000
    )
}

fn parse_timing_line(line: &str, line_no: usize) -> Result<(u64, u64), SubtitleError> {
    let malformed = || SubtitleError::MalformedTimestamp {
        line: line_no,
        found: line.to_string(),
    };
    let (start, rest) = line.split_once("-->").ok_or_else(malformed)?;
    // VTT cue settings may follow the end timestamp.
    let end = rest.split_whitespace().next().ok_or_else(malformed)?;
    let start = parse_timestamp(start).ok_or_else(malformed)?;
    let end = parse_timestamp(end).ok_or_else(malformed)?;
    Ok((start, end))
}

/// Removes `<...>` tags and `{\...}` override blocks, then decodes the
/// common HTML entities.
fn strip_markup(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        let closer = match c {
            '<' => Some('>'),
            '{' if s[i + 1..].starts_with('\\') => Some('}'),
            _ => None,
        };
        if let Some(closer) = closer {
            if let Some(rel) = s[i..].find(closer) {
                let end = i + rel;
                while chars.peek().is_some_and(|(j, _)| *j <= end) {
                    chars.next();
                }
                continue;
            }
        }
        out.push(c);
    }
    out.replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&nbsp;", " ")
        .replace("&quot;", "\"")
        .replace("&#39;", "'")
        .replace("&amp;", "&")
}

fn escape_markup(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct RawCue {
    start_ms: u64,
    end_ms: u64,
    text: String,
    line_no: usize,
}

/// Splits a document into blank-line separated blocks, keeping the 1-based
/// line number of each block's first row.
fn blocks(text: &str) -> Vec<(usize, Vec<&str>)> {
    let mut out = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    let mut first = 0;
    for (i, row) in text.lines().enumerate() {
        if row.trim().is_empty() {
            if !current.is_empty() {
                out.push((first, std::mem::take(&mut current)));
            }
        } else {
            if current.is_empty() {
                first = i + 1;
            }
            current.push(row);
        }
    }
    if !current.is_empty() {
        out.push((first, current));
    }
    out
}

fn read_cues(text: &str, format: SubtitleFormat) -> Result<Vec<RawCue>, SubtitleError> {
    let mut cues = Vec::new();
    for (block_no, (first, rows)) in blocks(text).into_iter().enumerate() {
        let head = rows[0].trim();
        if format == SubtitleFormat::Vtt
            && (block_no == 0 && head.starts_with("WEBVTT")
                || head.starts_with("NOTE")
                || head == "STYLE"
                || head == "REGION")
        {
            continue;
        }
        let timing_at = match rows.iter().position(|r| r.contains("-->")) {
            Some(p) if p <= 1 => p,
            Some(p) => {
                return Err(SubtitleError::MalformedTimestamp {
                    line: first + p,
                    found: rows[p].to_string(),
                })
            }
            None => {
                // An SRT block whose timing row is mangled beyond recognition.
                let at = if rows.len() > 1 { 1 } else { 0 };
                return Err(SubtitleError::MalformedTimestamp {
                    line: first + at,
                    found: rows[at].to_string(),
                });
            }
        };
        let line_no = first + timing_at;
        let (start_ms, end_ms) = parse_timing_line(rows[timing_at], line_no)?;
        let joined = rows[timing_at + 1..]
            .iter()
            .map(|r| strip_markup(r))
            .collect::<Vec<_>>()
            .join(" ");
        cues.push(RawCue {
            start_ms,
            end_ms,
            text: collapse_whitespace(&joined),
            line_no,
        });
    }
    Ok(cues)
}

/// Parses a WebVTT or SubRip document into ordered cues.
pub fn parse_subtitles(data: &[u8], format: SubtitleFormat) -> Result<ParsedSubtitles, SubtitleError> {
    let text = std::str::from_utf8(data).map_err(|_| SubtitleError::InvalidUtf8)?;
    let text = text.strip_prefix('\u{FEFF}').unwrap_or(text);
    let mut warnings = Vec::new();

    let mut raw: Vec<RawCue> = read_cues(text, format)?
        .into_iter()
        .filter(|c| {
            if c.start_ms >= c.end_ms {
                warnings.push(format!("line {}: cue ends before it starts, dropped", c.line_no));
                false
            } else if c.text.is_empty() {
                warnings.push(format!("line {}: cue has no text, dropped", c.line_no));
                false
            } else {
                true
            }
        })
        .collect();
    raw.sort_by_key(|c| c.start_ms);

    let mut merged: Vec<RawCue> = Vec::with_capacity(raw.len());
    for cue in raw {
        if let Some(prev) = merged.last_mut() {
            if prev.text == cue.text && cue.start_ms <= prev.end_ms {
                prev.end_ms = prev.end_ms.max(cue.end_ms);
                continue;
            }
        }
        merged.push(cue);
    }

    for pair in merged.windows(2) {
        if pair[1].start_ms < pair[0].end_ms {
            warnings.push(format!(
                "line {}: cue overlaps the previous cue",
                pair[1].line_no
            ));
        }
    }

    if merged.is_empty() {
        return Err(SubtitleError::EmptyDocument);
    }

    let cues = merged
        .into_iter()
        .enumerate()
        .map(|(index, c)| SubtitleCue {
            index,
            start_ms: c.start_ms,
            end_ms: c.end_ms,
            text: c.text,
        })
        .collect();
    Ok(ParsedSubtitles { cues, warnings })
}

/// Serializes cues back into the given format.
pub fn write_subtitles(cues: &[SubtitleCue], format: SubtitleFormat) -> String {
    let mut out = String::new();
    match format {
        SubtitleFormat::Vtt => {
            out.push_str("WEBVTT\n\n");
            for c in cues {
                out.push_str(&format!(
                    "{} --> {}\n{}\n\n",
                    format_timestamp(c.start_ms, '.'),
                    format_timestamp(c.end_ms, '.'),
                    escape_markup(&c.text)
                ));
            }
        }
        SubtitleFormat::Srt => {
            for (i, c) in cues.iter().enumerate() {
                out.push_str(&format!(
                    "{}\n{} --> {}\n{}\n\n",
                    i + 1,
                    format_timestamp(c.start_ms, ','),
                    format_timestamp(c.end_ms, ','),
                    escape_markup(&c.text)
                ));
            }
        }
    }
    out
}

impl fmt::Display for SubtitleCue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{} [{}-{}] {}", self.index, self.start_ms, self.end_ms, self.text)
    }
}
