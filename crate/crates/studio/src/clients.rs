//! Lyrics, media and ASR sources. Fixture implementations read a directory
//! per song; live implementations are gated by `ELMI_LIVE`.

use std::path::{Path, PathBuf};
use std::time::Duration;

use elmi_core::{parse_lyrics, AsrWord, LyricsDocument, SubtitleFormat};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClientError {
    #[error("not found: {0}")]
    NotFound(String),
    #[error("service unavailable: {0}")]
    Unavailable(String),
    #[error("no subtitles for {0}")]
    MissingSubtitles(String),
    #[error("live mode disabled (set ELMI_LIVE=1)")]
    LiveModeDisabled,
    #[error("segment [{start_ms}, {end_ms}) outside audio of {duration_ms} ms")]
    SegmentOutOfRange { start_ms: u64, end_ms: u64, duration_ms: u64 },
    #[error("bad fixture data: {0}")]
    BadData(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SongQuery {
    pub title: String,
    pub artist: String,
}

impl SongQuery {
    pub fn new(title: &str, artist: &str) -> Result<Self, ClientError> {
        if title.trim().is_empty() || artist.trim().is_empty() {
            return Err(ClientError::BadData("title and artist must be non-empty".into()));
        }
        Ok(SongQuery { title: title.trim().into(), artist: artist.trim().into() })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LyricsFetch {
    pub doc: LyricsDocument,
    pub description: String,
    /// Source-specific key for the lyrics.
    pub key: String,
}

/// Reference audio, addressed by a key. Byte offsets assume a constant
/// bitrate of `bytes_per_ms`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AudioHandle {
    pub key: String,
    pub duration_ms: u64,
    pub bytes_per_ms: u64,
}

impl AudioHandle {
    pub fn check_segment(&self, start_ms: u64, end_ms: u64) -> Result<(), ClientError> {
        if start_ms >= end_ms || end_ms > self.duration_ms {
            return Err(ClientError::SegmentOutOfRange { start_ms, end_ms, duration_ms: self.duration_ms });
        }
        Ok(())
    }

    pub fn byte_range(&self, start_ms: u64, end_ms: u64) -> Result<std::ops::Range<u64>, ClientError> {
        self.check_segment(start_ms, end_ms)?;
        Ok(start_ms * self.bytes_per_ms..end_ms * self.bytes_per_ms)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MediaFetch {
    pub subtitles: Vec<u8>,
    pub format: SubtitleFormat,
    pub subtitle_key: String,
    pub audio: AudioHandle,
    pub video_url: String,
}

pub trait LyricsSource: Send + Sync {
    fn fetch(&self, query: &SongQuery) -> Result<LyricsFetch, ClientError>;
}

pub trait MediaSource: Send + Sync {
    fn fetch(&self, query: &SongQuery) -> Result<MediaFetch, ClientError>;
}

pub trait AsrService: Send + Sync {
    /// Words whose start lies in `[start_ms, end_ms)`, timed relative to
    /// `start_ms`.
    fn transcribe_segment(&self, audio: &AudioHandle, start_ms: u64, end_ms: u64) -> Result<Vec<AsrWord>, ClientError>;
}

/// `meta.json` in a fixture directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureMeta {
    pub title: String,
    pub artist: String,
    pub description: String,
    pub video_url: String,
    pub duration_ms: u64,
}

/// Bytes per millisecond of 16 kHz mono 16-bit PCM.
pub const FIXTURE_BYTES_PER_MS: u64 = 32;

/// Songs stored as `<root>/<song-id>/{meta.json, lyrics.txt, subs.vtt|subs.srt, words.json}`.
#[derive(Debug, Clone)]
pub struct FixtureLibrary {
    root: PathBuf,
}

impl FixtureLibrary {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        FixtureLibrary { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn read_meta(dir: &Path) -> Result<FixtureMeta, ClientError> {
        let text = std::fs::read_to_string(dir.join("meta.json")).map_err(|e| ClientError::BadData(e.to_string()))?;
        serde_json::from_str(&text).map_err(|e| ClientError::BadData(format!("{}: {e}", dir.display())))
    }

    /// Finds the song directory whose metadata matches the query
    /// (case-insensitive).
    pub fn locate(&self, query: &SongQuery) -> Result<(String, FixtureMeta), ClientError> {
        let entries = std::fs::read_dir(&self.root).map_err(|_| ClientError::NotFound(query.title.clone()))?;
        let mut dirs: Vec<PathBuf> = entries.filter_map(|e| e.ok()).map(|e| e.path()).filter(|p| p.join("meta.json").is_file()).collect();
        dirs.sort();
        for dir in dirs {
            let meta = Self::read_meta(&dir)?;
            if meta.title.eq_ignore_ascii_case(&query.title) && meta.artist.eq_ignore_ascii_case(&query.artist) {
                let id = dir.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
                return Ok((id, meta));
            }
        }
        Err(ClientError::NotFound(format!("{} by {}", query.title, query.artist)))
    }

    fn song_dir(&self, id: &str) -> PathBuf {
        self.root.join(id)
    }
}

impl LyricsSource for FixtureLibrary {
    fn fetch(&self, query: &SongQuery) -> Result<LyricsFetch, ClientError> {
        let (id, meta) = self.locate(query)?;
        let text = std::fs::read_to_string(self.song_dir(&id).join("lyrics.txt"))
            .map_err(|_| ClientError::NotFound(format!("lyrics for {id}")))?;
        let doc = parse_lyrics(&text).map_err(|e| ClientError::BadData(e.to_string()))?;
        Ok(LyricsFetch { doc, description: meta.description, key: format!("fixture:{id}/lyrics.txt") })
    }
}

impl MediaSource for FixtureLibrary {
    fn fetch(&self, query: &SongQuery) -> Result<MediaFetch, ClientError> {
        let (id, meta) = self.locate(query)?;
        let dir = self.song_dir(&id);
        let (path, format) = [("subs.vtt", SubtitleFormat::Vtt), ("subs.srt", SubtitleFormat::Srt)]
            .into_iter()
            .map(|(name, f)| (dir.join(name), f))
            .find(|(p, _)| p.is_file())
            .ok_or_else(|| ClientError::MissingSubtitles(id.clone()))?;
        let subtitles = std::fs::read(&path).map_err(|e| ClientError::BadData(e.to_string()))?;
        let file = path.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
        Ok(MediaFetch {
            subtitles,
            format,
            subtitle_key: format!("fixture:{id}/{file}"),
            audio: AudioHandle { key: id, duration_ms: meta.duration_ms, bytes_per_ms: FIXTURE_BYTES_PER_MS },
            video_url: meta.video_url,
        })
    }
}

/// Word timestamps absolute to track start, as stored in `words.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureWord {
    pub surface: String,
    pub start_ms: u64,
    pub duration_ms: u64,
}

impl AsrService for FixtureLibrary {
    fn transcribe_segment(&self, audio: &AudioHandle, start_ms: u64, end_ms: u64) -> Result<Vec<AsrWord>, ClientError> {
        audio.check_segment(start_ms, end_ms)?;
        let path = self.song_dir(&audio.key).join("words.json");
        let text = std::fs::read_to_string(&path).map_err(|_| ClientError::NotFound(format!("{}", path.display())))?;
        let words: Vec<FixtureWord> = serde_json::from_str(&text).map_err(|e| ClientError::BadData(e.to_string()))?;
        Ok(crop_words(&words, start_ms, end_ms))
    }
}

/// Words starting inside `[start_ms, end_ms)`, re-based to `start_ms`, with
/// durations clipped at the segment end.
pub fn crop_words(words: &[FixtureWord], start_ms: u64, end_ms: u64) -> Vec<AsrWord> {
    let mut out: Vec<AsrWord> = words
        .iter()
        .filter(|w| w.start_ms >= start_ms && w.start_ms < end_ms)
        .map(|w| AsrWord {
            surface: w.surface.clone(),
            start_ms: w.start_ms - start_ms,
            duration_ms: w.duration_ms.min(end_ms - w.start_ms),
        })
        .collect();
    out.sort_by_key(|w| w.start_ms);
    out
}

/// Whether `ELMI_LIVE=1`.
pub fn live_enabled() -> bool {
    std::env::var("ELMI_LIVE").map(|v| v == "1").unwrap_or(false)
}

/// Placeholder for third-party services. Disabled unless `ELMI_LIVE=1`;
/// enabled, it reports the service as unavailable until a backend is wired
/// in through the credential variables (`LYRICS_API_KEY`,
/// `MEDIA_COOKIE_FILE`, `ASR_API_KEY`).
#[derive(Debug, Clone, Default)]
pub struct LiveClients;

impl LiveClients {
    fn refusal(var: &str) -> ClientError {
        if !live_enabled() {
            return ClientError::LiveModeDisabled;
        }
        match std::env::var(var) {
            Ok(_) => ClientError::Unavailable(format!("no live backend compiled in for {var}")),
            Err(_) => ClientError::Unavailable(format!("{var} is not set")),
        }
    }
}

impl LyricsSource for LiveClients {
    fn fetch(&self, _query: &SongQuery) -> Result<LyricsFetch, ClientError> {
        Err(Self::refusal("LYRICS_API_KEY"))
    }
}

impl MediaSource for LiveClients {
    fn fetch(&self, _query: &SongQuery) -> Result<MediaFetch, ClientError> {
        Err(Self::refusal("MEDIA_COOKIE_FILE"))
    }
}

impl AsrService for LiveClients {
    fn transcribe_segment(&self, audio: &AudioHandle, start_ms: u64, end_ms: u64) -> Result<Vec<AsrWord>, ClientError> {
        audio.check_segment(start_ms, end_ms)?;
        Err(Self::refusal("ASR_API_KEY"))
    }
}

pub const RETRY_ATTEMPTS: u32 = 3;
pub const RETRY_INITIAL_BACKOFF: Duration = Duration::from_millis(250);

/// Runs `op` up to three times, sleeping 250 ms then 500 ms between
/// attempts. Only `Unavailable` is retried.
pub fn with_retry<T>(mut sleep: impl FnMut(Duration), mut op: impl FnMut() -> Result<T, ClientError>) -> Result<T, ClientError> {
    let mut backoff = RETRY_INITIAL_BACKOFF;
    let mut attempt = 1;
    loop {
        match op() {
            Err(ClientError::Unavailable(_)) if attempt < RETRY_ATTEMPTS => {
                sleep(backoff);
                backoff *= 2;
                attempt += 1;
            }
            other => return other,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words() -> Vec<FixtureWord> {
        [("smooth", 1000, 400), ("like", 1500, 300), ("butter", 1900, 600), ("like", 3200, 300)]
            .iter()
            .map(|(s, st, d)| FixtureWord { surface: s.to_string(), start_ms: *st, duration_ms: *d })
            .collect()
    }

    #[test]
    fn crop_and_rebase() {
        let got = crop_words(&words(), 1000, 3000);
        let starts: Vec<_> = got.iter().map(|w| w.start_ms).collect();
        assert_eq!(starts, vec![0, 500, 900]);
        let got = crop_words(&words(), 1000, 2200);
        assert_eq!(got[2].duration_ms, 300);
    }

    #[test]
    fn segment_checks() {
        let a = AudioHandle { key: "x".into(), duration_ms: 5000, bytes_per_ms: 32 };
        assert!(matches!(a.check_segment(3000, 3000), Err(ClientError::SegmentOutOfRange { .. })));
        assert!(a.check_segment(0, 5001).is_err());
        assert_eq!(a.byte_range(1000, 2000).unwrap(), 32_000..64_000);
    }

    #[test]
    fn retry_policy() {
        let mut sleeps = Vec::new();
        let mut calls = 0;
        let r: Result<(), _> = with_retry(|d| sleeps.push(d), || {
            calls += 1;
            Err(ClientError::Unavailable("down".into()))
        });
        assert!(matches!(r, Err(ClientError::Unavailable(_))));
        assert_eq!(calls, 3);
        assert_eq!(sleeps, vec![Duration::from_millis(250), Duration::from_millis(500)]);

        let mut calls = 0;
        let r = with_retry(|_| {}, || {
            calls += 1;
            if calls < 2 { Err(ClientError::Unavailable("x".into())) } else { Ok(7) }
        });
        assert_eq!(r, Ok(7));

        let mut calls = 0;
        let r: Result<(), _> = with_retry(|_| {}, || {
            calls += 1;
            Err(ClientError::NotFound("x".into()))
        });
        assert!(r.is_err());
        assert_eq!(calls, 1);
    }

    #[test]
    fn query_validation() {
        assert!(SongQuery::new("", "BTS").is_err());
        assert!(SongQuery::new("Butter", "BTS").is_ok());
    }
}
