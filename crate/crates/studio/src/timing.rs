//! Lyrics + subtitles + per-line ASR into a word-timed lyric.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use elmi_core::alignment::{
    align_words, derive_line_spans, match_cues_to_lines, AlignConfig, AlignmentReport, AmbiguousWindow, LineMatchFallback,
    WindowAssignment,
};
use elmi_core::{parse_subtitles, AsrWord, LyricsDocument, TimedLyric};
use elmi_llm::{ChatExchange, FieldSpec, FieldType, LlmClient, PromptKey, StructuredSpec, TemperatureClass};
use serde_json::json;
use thiserror::Error;

use crate::clients::{AsrService, ClientError, MediaFetch};
use crate::prompts::PromptCatalog;

#[derive(Debug, Error)]
pub enum TimingError {
    #[error("subtitles: {0}")]
    Subtitles(#[from] elmi_core::SubtitleError),
    #[error("lyrics document is empty")]
    EmptyDocument,
    #[error("ASR failed on line {line}: {source}")]
    Asr {
        line: usize,
        source: ClientError,
        /// Lines with spans but without ASR-derived word times.
        partial: Box<TimedLyric>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingOutcome {
    pub lyric: TimedLyric,
    pub report: AlignmentReport,
    pub warnings: Vec<String>,
}

/// Asks the LLM to resolve windows the similarity matcher could not.
pub struct LlmLineFallback<'a> {
    pub client: &'a LlmClient,
    pub catalog: &'a PromptCatalog,
}

impl LlmLineFallback<'_> {
    pub const TEMPLATE: &'static str = "line_match";

    pub fn values(window: &AmbiguousWindow) -> BTreeMap<String, String> {
        let lines: Vec<_> = window.lines.iter().map(|(i, t)| json!({"line_index": i, "text": t})).collect();
        let cues: Vec<_> = window.cues.iter().map(|(i, t)| json!({"cue_index": i, "text": t})).collect();
        BTreeMap::from([
            ("lines".to_string(), serde_json::to_string(&lines).expect("json")),
            ("cues".to_string(), serde_json::to_string(&cues).expect("json")),
        ])
    }
}

impl LineMatchFallback for LlmLineFallback<'_> {
    fn resolve(&self, window: &AmbiguousWindow) -> Option<WindowAssignment> {
        let values = Self::values(window);
        let prompt = self.catalog.render(Self::TEMPLATE, &values).ok()?;
        let exchange = ChatExchange::single(prompt, "Reply with the JSON object.", TemperatureClass::Deterministic);
        let spec = StructuredSpec::new(
            vec![FieldSpec::required(
                "assignments",
                FieldType::Array(Box::new(FieldType::Object(vec![
                    FieldSpec::required("line_index", FieldType::Integer),
                    FieldSpec::required("cue_indices", FieldType::Array(Box::new(FieldType::Integer))),
                ]))),
            )],
            1,
        );
        let key = PromptKey::new(Self::TEMPLATE, &values);
        let reply = self.client.complete_structured(&exchange, Some(&key), &spec, &|_| Ok(())).ok()?;
        let rows = reply.record["assignments"].as_array()?;
        rows.iter()
            .map(|r| {
                let line = r["line_index"].as_u64()? as usize;
                let cues = r["cue_indices"].as_array()?.iter().map(|c| c.as_u64().map(|c| c as usize)).collect::<Option<Vec<_>>>()?;
                Some((line, cues))
            })
            .collect()
    }
}

/// Matches cues to lines, derives line spans, transcribes each matched line
/// and aligns its words. ASR calls run on up to `config.asr_concurrency`
/// threads; results do not depend on scheduling.
pub fn build_timed_lyrics(
    doc: &LyricsDocument,
    media: &MediaFetch,
    asr: &dyn AsrService,
    fallback: Option<&dyn LineMatchFallback>,
    config: &AlignConfig,
) -> Result<TimingOutcome, TimingError> {
    if doc.line_count() == 0 {
        return Err(TimingError::EmptyDocument);
    }
    let parsed = parse_subtitles(&media.subtitles, media.format)?;
    let mut lines = doc.to_lyric_lines();
    let texts: Vec<&str> = lines.iter().map(|l| l.text.as_str()).collect();
    let matches = match_cues_to_lines(&parsed.cues, &texts, config, fallback);
    let spans = derive_line_spans(&matches, &parsed.cues, &texts, Some(media.audio.duration_ms));
    for (line, span) in lines.iter_mut().zip(&spans) {
        line.span = *span;
    }

    let jobs: Vec<usize> = (0..lines.len()).filter(|&i| matches[i].method.is_matched() && lines[i].span.is_some()).collect();
    let results: Mutex<BTreeMap<usize, Result<Vec<AsrWord>, ClientError>>> = Mutex::new(BTreeMap::new());
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..config.asr_concurrency.max(1).min(jobs.len().max(1)) {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::SeqCst);
                let Some(&i) = jobs.get(k) else { break };
                let span = lines[i].span.expect("filtered");
                let r = asr.transcribe_segment(&media.audio, span.start_ms, span.end_ms);
                results.lock().expect("results").insert(i, r);
            });
        }
    });
    let mut results = results.into_inner().expect("results");

    let mut failure = None;
    for line in lines.iter_mut() {
        let words = match results.remove(&line.index) {
            Some(Ok(words)) => words,
            Some(Err(e)) => {
                failure.get_or_insert((line.index, e));
                Vec::new()
            }
            None => Vec::new(),
        };
        line.words = align_words(line, &words, config);
    }
    let lyric = TimedLyric { lines };
    if let Some((line, source)) = failure {
        return Err(TimingError::Asr { line, source, partial: Box::new(lyric) });
    }
    let report = AlignmentReport::from_lines(&lyric.lines, &matches);
    Ok(TimingOutcome { lyric, report, warnings: parsed.warnings })
}
