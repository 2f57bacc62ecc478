//! Core domain model for the song-signing workbench.
//!
//! This crate holds everything that is a pure function of its inputs: the
//! gloss notation grammar and its metrics, text normalization, the lyric and
//! subtitle parsers, and the line/word timing alignment algorithms. Nothing
//! here performs network or database IO.

pub mod alignment;
pub mod gloss;
pub mod lyrics;
pub mod model;
pub mod overlap;
pub mod subtitles;
pub mod text;

pub use gloss::{gloss_metrics, tokenize_gloss, GlossError, GlossMetrics, GlossToken, TokenKind};
pub use lyrics::{parse_lyrics, LyricsDocument, LyricsError, Section};
pub use model::{
    AsrWord, GlossLine, LyricLine, MediaRefs, Proficiency, ProjectId, ProjectStatus, SignLanguage,
    SongProject, Span, TimedLyric, TimedWord, UserProfile,
};
pub use overlap::{overlap_coefficient, render_percent, OverlapError};
pub use subtitles::{parse_subtitles, ParsedSubtitles, SubtitleCue, SubtitleError, SubtitleFormat};
pub use text::normalize_text;
