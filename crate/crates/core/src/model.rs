use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::gloss::{tokenize_gloss, GlossError, GlossToken};

/// Opaque project identifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProjectId(pub String);

impl ProjectId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ProjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ProjectId {
    fn from(s: &str) -> Self {
        ProjectId(s.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SignLanguage {
    #[serde(rename = "ASL")]
    Asl,
    #[serde(rename = "PSE")]
    Pse,
}

impl SignLanguage {
    pub fn as_str(self) -> &'static str {
        match self {
            SignLanguage::Asl => "ASL",
            SignLanguage::Pse => "PSE",
        }
    }
}

impl fmt::Display for SignLanguage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SignLanguage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "ASL" => Ok(SignLanguage::Asl),
            "PSE" => Ok(SignLanguage::Pse),
            other => Err(format!("unknown sign language {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Proficiency {
    Novice,
    Moderate,
    Fluent,
    Native,
}

impl Proficiency {
    pub fn as_str(self) -> &'static str {
        match self {
            Proficiency::Novice => "novice",
            Proficiency::Moderate => "moderate",
            Proficiency::Fluent => "fluent",
            Proficiency::Native => "native",
        }
    }
}

impl std::str::FromStr for Proficiency {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "novice" => Ok(Proficiency::Novice),
            "moderate" => Ok(Proficiency::Moderate),
            "fluent" => Ok(Proficiency::Fluent),
            "native" => Ok(Proficiency::Native),
            other => Err(format!("unknown proficiency {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserProfile {
    pub nickname: String,
    pub proficiency: Proficiency,
}

impl UserProfile {
    /// Fails when the nickname is blank.
    pub fn new(nickname: impl Into<String>, proficiency: Proficiency) -> Result<Self, String> {
        let nickname = nickname.into();
        if nickname.trim().is_empty() {
            return Err("nickname must not be empty".into());
        }
        Ok(UserProfile {
            nickname,
            proficiency,
        })
    }
}

/// Keys under which the external clients resolve a song's inputs.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MediaRefs {
    pub lyrics_key: Option<String>,
    pub subtitle_key: Option<String>,
    pub audio_key: Option<String>,
    pub video_url: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProjectStatus {
    Created,
    Preprocessing,
    Ready,
    Failed,
}

impl ProjectStatus {
    /// Forward transitions plus re-entry into preprocessing from a finished
    /// state, which is how a failed or stale project gets re-run.
    pub fn can_transition_to(self, next: ProjectStatus) -> bool {
        use ProjectStatus::*;
        matches!(
            (self, next),
            (Created, Preprocessing)
                | (Preprocessing, Ready)
                | (Preprocessing, Failed)
                | (Failed, Preprocessing)
                | (Ready, Preprocessing)
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ProjectStatus::Created => "created",
            ProjectStatus::Preprocessing => "preprocessing",
            ProjectStatus::Ready => "ready",
            ProjectStatus::Failed => "failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SongProject {
    pub id: ProjectId,
    pub title: String,
    pub artist: String,
    pub sign_language: SignLanguage,
    pub user_profile: UserProfile,
    pub media: MediaRefs,
    pub status: ProjectStatus,
    pub song_description: String,
}

impl SongProject {
    pub fn transition(&mut self, next: ProjectStatus) -> Result<(), String> {
        if self.status == next || self.status.can_transition_to(next) {
            self.status = next;
            Ok(())
        } else {
            Err(format!(
                "illegal status transition {} -> {}",
                self.status.as_str(),
                next.as_str()
            ))
        }
    }
}

/// Interval of integer milliseconds. `contains` includes both ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Span {
    pub start_ms: u64,
    pub end_ms: u64,
}

impl Span {
    pub fn new(start_ms: u64, end_ms: u64) -> Self {
        debug_assert!(start_ms < end_ms, "span must be non-empty");
        Span { start_ms, end_ms }
    }

    pub fn len_ms(&self) -> u64 {
        self.end_ms - self.start_ms
    }

    pub fn contains(&self, t_ms: u64) -> bool {
        self.start_ms <= t_ms && t_ms <= self.end_ms
    }
}

// Serialized as a two-element array to match the timed-lyrics export.
impl Serialize for Span {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.start_ms, self.end_ms].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Span {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [start_ms, end_ms] = <[u64; 2]>::deserialize(d)?;
        if start_ms >= end_ms {
            return Err(serde::de::Error::custom("span start must precede end"));
        }
        Ok(Span { start_ms, end_ms })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimedWord {
    pub surface: String,
    pub start_ms: u64,
    pub duration_ms: u64,
    pub confidence: f64,
    pub matched: bool,
}

impl TimedWord {
    pub fn end_ms(&self) -> u64 {
        self.start_ms + self.duration_ms
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyricLine {
    pub index: usize,
    pub section: String,
    pub text: String,
    pub span: Option<Span>,
    pub words: Vec<TimedWord>,
}

impl LyricLine {
    /// Checks span ordering and word containment.
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut last_start = 0;
        for (i, w) in self.words.iter().enumerate() {
            if !(0.0..=1.0).contains(&w.confidence) {
                return Err(format!("word {i} confidence out of range"));
            }
            if !w.matched && w.confidence != 0.0 {
                return Err(format!("unmatched word {i} has non-zero confidence"));
            }
            if w.start_ms < last_start {
                return Err(format!("word {i} starts before its predecessor"));
            }
            last_start = w.start_ms;
            if let Some(span) = self.span {
                if w.start_ms < span.start_ms || w.end_ms() > span.end_ms {
                    return Err(format!("word {i} lies outside line span"));
                }
            }
        }
        Ok(())
    }
}

/// Lyric lines carrying line spans and word timestamps.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TimedLyric {
    pub lines: Vec<LyricLine>,
}

impl TimedLyric {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("timed lyrics serialize")
    }

    /// Line-level LRC export: `[mm:ss.xx]text` for every line with a span.
    pub fn to_lrc(&self, title: &str, artist: &str) -> String {
        let mut out = String::new();
        out.push_str(&format!("[ti:{title}]\n[ar:{artist}]\n"));
        for line in &self.lines {
            if let Some(span) = line.span {
                let cs = span.start_ms / 10;
                out.push_str(&format!(
                    "[{:02}:{:02}.{:02}]{}\n",
                    cs / 6000,
                    (cs / 100) % 60,
                    cs % 100,
                    line.text
                ));
            }
        }
        out
    }
}

/// One word of an ASR transcript, timed relative to the submitted segment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AsrWord {
    pub surface: String,
    pub start_ms: u64,
    pub duration_ms: u64,
}

/// One version of the user's gloss for a lyric line. Only `raw` is
/// serialized; tokens are re-parsed on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StoredGloss")]
pub struct GlossLine {
    pub line_index: usize,
    pub raw: String,
    #[serde(skip)]
    pub tokens: Vec<GlossToken>,
    pub version: u32,
    pub authored_at: DateTime<Utc>,
}

#[derive(Deserialize)]
struct StoredGloss {
    line_index: usize,
    raw: String,
    version: u32,
    authored_at: DateTime<Utc>,
}

impl TryFrom<StoredGloss> for GlossLine {
    type Error = GlossError;

    fn try_from(g: StoredGloss) -> Result<Self, GlossError> {
        GlossLine::new(g.line_index, g.raw, g.version, g.authored_at)
    }
}

impl GlossLine {
    pub fn new(
        line_index: usize,
        raw: impl Into<String>,
        version: u32,
        authored_at: DateTime<Utc>,
    ) -> Result<Self, GlossError> {
        let raw = raw.into();
        let tokens = tokenize_gloss(&raw)?;
        Ok(GlossLine {
            line_index,
            raw,
            tokens,
            version,
            authored_at,
        })
    }
}
