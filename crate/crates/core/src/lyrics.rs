//! Reference lyrics documents: one lyric line per row, `[Header]` rows open
//! sections.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::LyricLine;
use crate::text::normalize_text;

pub const DEFAULT_SECTION: &str = "Body";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Section {
    pub label: String,
    pub lines: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LyricsDocument {
    pub sections: Vec<Section>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LyricsError {
    #[error("lyrics document contains no lines")]
    EmptyDocument,
}

fn header_label(row: &str) -> Option<&str> {
    let inner = row.strip_prefix('[')?.strip_suffix(']')?.trim();
    (!inner.is_empty() && !inner.contains(['[', ']'])).then_some(inner)
}

/// Parses reference lyrics. Rows that normalize to nothing (blank rows,
/// symbol-only rows like `♪`) are skipped, empty sections are dropped, and a
/// repeated header label gets a ` (2)`, ` (3)`… suffix so labels stay unique.
pub fn parse_lyrics(data: &str) -> Result<LyricsDocument, LyricsError> {
    let mut sections: Vec<Section> = Vec::new();
    let mut current = Section {
        label: DEFAULT_SECTION.to_string(),
        lines: Vec::new(),
    };
    let flush = |s: Section, sections: &mut Vec<Section>| {
        if !s.lines.is_empty() {
            sections.push(s);
        }
    };

    for row in data.lines() {
        let row = row.trim();
        if let Some(label) = header_label(row) {
            let prev = std::mem::replace(
                &mut current,
                Section {
                    label: label.to_string(),
                    lines: Vec::new(),
                },
            );
            flush(prev, &mut sections);
            continue;
        }
        if normalize_text(row).is_empty() {
            continue;
        }
        current.lines.push(row.to_string());
    }
    flush(current, &mut sections);

    if sections.is_empty() {
        return Err(LyricsError::EmptyDocument);
    }

    for i in 0..sections.len() {
        let base = sections[i].label.clone();
        let mut n = 1;
        while sections[..i].iter().any(|s| s.label == sections[i].label) {
            n += 1;
            sections[i].label = format!("{base} ({n})");
        }
    }

    Ok(LyricsDocument { sections })
}

impl LyricsDocument {
    pub fn line_count(&self) -> usize {
        self.sections.iter().map(|s| s.lines.len()).sum()
    }

    /// Flattened `(global index, section label, text)` triples.
    pub fn indexed_lines(&self) -> Vec<(usize, &str, &str)> {
        self.sections
            .iter()
            .flat_map(|s| s.lines.iter().map(move |l| (s.label.as_str(), l.as_str())))
            .enumerate()
            .map(|(i, (label, text))| (i, label, text))
            .collect()
    }

    /// Untimed lyric lines, ready for alignment.
    pub fn to_lyric_lines(&self) -> Vec<LyricLine> {
        self.indexed_lines()
            .into_iter()
            .map(|(index, section, text)| LyricLine {
                index,
                section: section.to_string(),
                text: text.to_string(),
                span: None,
                words: Vec::new(),
            })
            .collect()
    }

    /// Renders back to the row-per-line text format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, s) in self.sections.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            out.push_str(&format!("[{}]\n", s.label));
            for l in &s.lines {
                out.push_str(l);
                out.push('\n');
            }
        }
        out
    }
}
