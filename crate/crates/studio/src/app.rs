//! Application layer shared by the CLI and the HTTP service.

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use elmi_core::alignment::AlignConfig;
use elmi_core::{
    GlossLine, LyricLine, MediaRefs, Proficiency, ProjectId, ProjectStatus, SignLanguage, SongProject, TimedLyric, UserProfile,
};
use elmi_llm::{ChatProvider, LlmClient, MockProvider, MockTable};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;
use tokio::sync::broadcast;

use crate::analytics::{line_metrics, AnalyticsReport, Scope};
use crate::annotation::LineAnnotation;
use crate::chat::{ChatEngine, ChatError, TurnInput, TurnOutcome};
use crate::clients::{live_enabled, AsrService, ClientError, FixtureLibrary, LiveClients, LyricsSource, MediaSource, SongQuery};
use crate::pipeline::{Pipeline, PipelineConfig, PipelineError, Stage};
use crate::playback::{resolve_playback, PlaybackError, PlaybackMode, PlaybackState};
use crate::prompts::PromptCatalog;
use crate::records::{ChatThread, Intent, JobKind, JobRecord, JobStatus, OpenedBy};
use crate::store::{ExportBundle, Store, StoreError};
use crate::timing::{build_timed_lyrics, LlmLineFallback, TimingError, TimingOutcome};

/// Errors surfaced to API and CLI callers.
#[derive(Debug, Error)]
pub enum AppError {
    #[error("{0}")]
    BadRequest(String),
    #[error("{0}")]
    NotFound(String),
    #[error("{message}")]
    Conflict { message: String, details: Value },
    #[error("{0}")]
    Busy(String),
    #[error("{0}")]
    NotReady(String),
    #[error("{0}")]
    Unavailable(String),
    #[error("{0}")]
    Internal(String),
}

impl AppError {
    pub fn code(&self) -> &'static str {
        match self {
            AppError::BadRequest(_) => "bad_request",
            AppError::NotFound(_) => "not_found",
            AppError::Conflict { .. } => "conflict",
            AppError::Busy(_) => "busy",
            AppError::NotReady(_) => "not_ready",
            AppError::Unavailable(_) => "unavailable",
            AppError::Internal(_) => "internal",
        }
    }

    pub fn details(&self) -> Value {
        match self {
            AppError::Conflict { details, .. } => details.clone(),
            _ => Value::Null,
        }
    }
}

impl From<StoreError> for AppError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::NotFound(what) => AppError::NotFound(format!("not found: {what}")),
            StoreError::ConflictingVersion { line_index, expected, current } => AppError::Conflict {
                message: e.to_string(),
                details: json!({"line_index": line_index, "expected_version": expected, "current_version": current}),
            },
            StoreError::Gloss(g) => AppError::BadRequest(format!("gloss does not parse: {g}")),
            StoreError::ThreadExists(line) => AppError::Conflict {
                message: e.to_string(),
                details: json!({"line_index": line}),
            },
            other => AppError::Internal(other.to_string()),
        }
    }
}

impl From<ChatError> for AppError {
    fn from(e: ChatError) -> Self {
        match e {
            ChatError::ThreadExists { line_index, ref thread_id } => AppError::Conflict {
                message: e.to_string(),
                details: json!({"line_index": line_index, "thread_id": thread_id}),
            },
            ChatError::NotNoteworthy(_) | ChatError::BadRequest(_) => AppError::BadRequest(e.to_string()),
            ChatError::NotReady(m) => AppError::NotReady(m),
            ChatError::Busy(_) => AppError::Busy(e.to_string()),
            ChatError::Store(s) => s.into(),
        }
    }
}

impl From<ClientError> for AppError {
    fn from(e: ClientError) -> Self {
        match e {
            ClientError::NotFound(_) | ClientError::MissingSubtitles(_) => AppError::NotFound(e.to_string()),
            ClientError::Unavailable(_) | ClientError::LiveModeDisabled => AppError::Unavailable(e.to_string()),
            ClientError::SegmentOutOfRange { .. } | ClientError::BadData(_) => AppError::Internal(e.to_string()),
        }
    }
}

impl From<PlaybackError> for AppError {
    fn from(e: PlaybackError) -> Self {
        match e {
            PlaybackError::LoopLineMissing | PlaybackError::NoSuchLine(_) => AppError::BadRequest(e.to_string()),
            PlaybackError::UntimedLine(_) => AppError::NotReady(e.to_string()),
        }
    }
}

/// Progress notifications for subscribers such as the event stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    JobStatus { project_id: String, job: JobRecord },
    StageDone { project_id: String, stage: Stage, reused: bool },
}

impl Event {
    pub fn project_id(&self) -> &str {
        match self {
            Event::JobStatus { project_id, .. } | Event::StageDone { project_id, .. } => project_id,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Event::JobStatus { .. } => "job_status",
            Event::StageDone { .. } => "stage_done",
        }
    }
}

/// The three external services a project needs.
#[derive(Clone)]
pub struct Sources {
    pub lyrics: Arc<dyn LyricsSource>,
    pub media: Arc<dyn MediaSource>,
    pub asr: Arc<dyn AsrService>,
}

impl Sources {
    pub fn fixtures(root: impl Into<PathBuf>) -> Self {
        let lib = Arc::new(FixtureLibrary::new(root));
        Sources { lyrics: lib.clone(), media: lib.clone(), asr: lib }
    }

    /// Live clients when `ELMI_LIVE` is set, otherwise the fixture library
    /// at `ELMI_FIXTURES` (or `default_root`).
    pub fn from_env(default_root: &Path) -> Self {
        if live_enabled() {
            let live = Arc::new(LiveClients);
            return Sources { lyrics: live.clone(), media: live.clone(), asr: live };
        }
        Sources::fixtures(fixtures_root(default_root))
    }
}

pub fn fixtures_root(default_root: &Path) -> PathBuf {
    std::env::var_os("ELMI_FIXTURES").map(PathBuf::from).unwrap_or_else(|| default_root.to_path_buf())
}

/// A mock provider holding every `mock_llm.json` found one level below
/// `root`.
pub fn fixture_mock_provider(root: &Path) -> Result<MockProvider, String> {
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(root)
        .map_err(|e| format!("{}: {e}", root.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("mock_llm.json").is_file())
        .collect();
    dirs.sort();
    let mut provider = MockProvider::default();
    for d in dirs {
        let table = MockTable::load(&d.join("mock_llm.json")).map_err(|e| format!("{}: {e}", d.display()))?;
        provider.extend(table)?;
    }
    Ok(provider)
}

/// The provider selected by the environment. Without `ELMI_PROVIDER=http`
/// or `ELMI_MOCK_TABLE`, the fixture mock tables under `fixtures` are used.
pub fn provider_from_env(fixtures: &Path) -> Result<Arc<dyn ChatProvider>, String> {
    let provider = std::env::var("ELMI_PROVIDER").unwrap_or_default();
    if !matches!(provider.as_str(), "" | "mock") || std::env::var_os("ELMI_MOCK_TABLE").is_some() {
        return elmi_llm::provider_from_env(None);
    }
    Ok(Arc::new(fixture_mock_provider(fixtures)?))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewProject {
    pub title: String,
    pub artist: String,
    pub sign_language: String,
    pub nickname: String,
    #[serde(default)]
    pub proficiency: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectView {
    #[serde(flatten)]
    pub project: SongProject,
    pub jobs: Vec<JobRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LineView {
    #[serde(flatten)]
    pub line: LyricLine,
    pub annotation: Option<LineAnnotation>,
    pub noteworthy: bool,
    pub gloss: Option<GlossLine>,
    pub thread_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThreadSummary {
    pub thread_id: String,
    pub line_index: usize,
    pub opened_by: OpenedBy,
    pub message_count: usize,
    pub last_message: Option<String>,
    pub last_intent: Option<Intent>,
}

#[derive(Debug, Clone, Default)]
pub struct StudioConfig {
    pub align: AlignConfig,
    pub pipeline: PipelineConfig,
}

struct JobGuard<'a> {
    running: &'a Mutex<HashSet<String>>,
    id: String,
}

impl Drop for JobGuard<'_> {
    fn drop(&mut self) {
        self.running.lock().expect("jobs lock").remove(&self.id);
    }
}

pub struct Studio {
    pub store: Arc<Store>,
    pub client: Arc<LlmClient>,
    pub catalog: Arc<PromptCatalog>,
    pub chat: ChatEngine,
    sources: Sources,
    config: StudioConfig,
    events: broadcast::Sender<Event>,
    running: Mutex<HashSet<String>>,
}

fn slug(s: &str) -> String {
    let mut out = String::new();
    for c in s.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
        } else if !out.ends_with('-') {
            out.push('-');
        }
    }
    out.trim_matches('-').to_string()
}

impl Studio {
    pub fn new(store: Arc<Store>, client: Arc<LlmClient>, sources: Sources) -> Self {
        let catalog = Arc::new(PromptCatalog::builtin());
        let chat = ChatEngine::new(store.clone(), client.clone(), catalog.clone());
        let (events, _) = broadcast::channel(256);
        Studio { store, client, catalog, chat, sources, config: StudioConfig::default(), events, running: Mutex::new(HashSet::new()) }
    }

    pub fn with_config(mut self, config: StudioConfig) -> Self {
        self.config = config;
        self
    }

    pub fn subscribe(&self) -> broadcast::Receiver<Event> {
        self.events.subscribe()
    }

    fn emit(&self, event: Event) {
        // No subscribers is fine.
        let _ = self.events.send(event);
    }

    fn begin_job(&self, id: &ProjectId) -> Result<JobGuard<'_>, AppError> {
        let mut running = self.running.lock().expect("jobs lock");
        if !running.insert(id.0.clone()) {
            return Err(AppError::Busy(format!("a job is already running for project {id}")));
        }
        Ok(JobGuard { running: &self.running, id: id.0.clone() })
    }

    pub fn job_running(&self, id: &ProjectId) -> bool {
        self.running.lock().expect("jobs lock").contains(&id.0)
    }

    fn update_job(&self, job: &JobRecord, status: JobStatus, stage: Option<&str>, error: Option<&str>) -> Result<JobRecord, AppError> {
        let job = self.store.update_job(job.id, status, stage, error)?;
        self.emit(Event::JobStatus { project_id: job.project_id.clone(), job: job.clone() });
        Ok(job)
    }

    fn query(project: &SongProject) -> Result<SongQuery, AppError> {
        SongQuery::new(&project.title, &project.artist).map_err(|e| AppError::BadRequest(e.to_string()))
    }

    /// Validates the request, looks the song up and stores a new project.
    pub fn create_project(&self, req: &NewProject) -> Result<SongProject, AppError> {
        let query = SongQuery::new(&req.title, &req.artist).map_err(|e| AppError::BadRequest(e.to_string()))?;
        let sign_language: SignLanguage = req.sign_language.parse().map_err(AppError::BadRequest)?;
        let proficiency: Proficiency =
            req.proficiency.as_deref().unwrap_or("novice").parse().map_err(AppError::BadRequest)?;
        let user_profile = UserProfile::new(req.nickname.trim(), proficiency).map_err(AppError::BadRequest)?;
        let lyrics = self.sources.lyrics.fetch(&query)?;
        let media = self.sources.media.fetch(&query)?;
        let uid = uuid::Uuid::new_v4().simple().to_string();
        let project = SongProject {
            id: ProjectId(format!("{}-{}", slug(&format!("{} {}", query.artist, query.title)), &uid[..8])),
            title: query.title,
            artist: query.artist,
            sign_language,
            user_profile,
            media: MediaRefs {
                lyrics_key: Some(lyrics.key),
                subtitle_key: Some(media.subtitle_key),
                audio_key: Some(media.audio.key),
                video_url: Some(media.video_url),
            },
            status: ProjectStatus::Created,
            song_description: lyrics.description,
        };
        self.store.save_project(&project)?;
        Ok(project)
    }

    fn fail_project(&self, id: &ProjectId) -> Result<(), AppError> {
        let p = self.store.load_project(id)?;
        if p.status == ProjectStatus::Created {
            self.store.set_status(id, ProjectStatus::Preprocessing)?;
        }
        self.store.set_status(id, ProjectStatus::Failed)?;
        Ok(())
    }

    fn align_unguarded(&self, id: &ProjectId) -> Result<TimingOutcome, AppError> {
        let project = self.store.load_project(id)?;
        let job = self.store.create_job(id, JobKind::Alignment)?;
        let job = self.update_job(&job, JobStatus::Running, Some("alignment"), None)?;
        let result = (|| -> Result<TimingOutcome, AppError> {
            let query = Self::query(&project)?;
            let lyrics = self.sources.lyrics.fetch(&query)?;
            let media = self.sources.media.fetch(&query)?;
            let fallback = LlmLineFallback { client: &self.client, catalog: &self.catalog };
            build_timed_lyrics(&lyrics.doc, &media, self.sources.asr.as_ref(), Some(&fallback), &self.config.align).map_err(|e| match e {
                TimingError::Asr { source, .. } => source.into(),
                other => AppError::BadRequest(other.to_string()),
            })
        })();
        match result {
            Ok(outcome) => {
                self.store.save_timed_lyrics(id, &outcome.lyric, &outcome.report)?;
                self.update_job(&job, JobStatus::Done, Some("alignment"), None)?;
                Ok(outcome)
            }
            Err(e) => {
                self.update_job(&job, JobStatus::Failed, Some("alignment"), Some(&e.to_string()))?;
                self.fail_project(id)?;
                Err(e)
            }
        }
    }

    fn preprocess_unguarded(&self, id: &ProjectId, from: Option<Stage>) -> Result<Vec<LineAnnotation>, AppError> {
        let (lyric, _) = self.timed_lyrics(id)?;
        let job = self.store.create_job(id, JobKind::Preprocess)?;
        self.store.set_status(id, ProjectStatus::Preprocessing)?;
        let project = self.store.load_project(id)?;
        let job = self.update_job(&job, JobStatus::Running, None, None)?;
        let pipeline = Pipeline { client: &self.client, catalog: &self.catalog, config: self.config.pipeline };
        let progress = |stage: Stage, reused: bool| {
            let _ = self.store.update_job(job.id, JobStatus::Running, Some(stage.name()), None);
            self.emit(Event::StageDone { project_id: id.0.clone(), stage, reused });
        };
        match pipeline.run(&self.store, &project, &lyric, from, &progress) {
            Ok(annotations) => {
                self.update_job(&job, JobStatus::Done, Some(Stage::Alternatives.name()), None)?;
                self.store.set_status(id, ProjectStatus::Ready)?;
                Ok(annotations)
            }
            Err(e) => {
                let stage = e.stage().map(Stage::name);
                self.update_job(&job, JobStatus::Failed, stage, Some(&e.to_string()))?;
                self.store.set_status(id, ProjectStatus::Failed)?;
                Err(match e {
                    PipelineError::Store(s) => s.into(),
                    other => AppError::Unavailable(other.to_string()),
                })
            }
        }
    }

    /// Times the lyrics of a project.
    pub fn align(&self, id: &ProjectId) -> Result<TimingOutcome, AppError> {
        let _guard = self.begin_job(id)?;
        self.align_unguarded(id)
    }

    /// Runs the analysis stages; `from` forces recomputation from a stage on.
    pub fn preprocess(&self, id: &ProjectId, from: Option<Stage>) -> Result<Vec<LineAnnotation>, AppError> {
        let _guard = self.begin_job(id)?;
        self.preprocess_unguarded(id, from)
    }

    /// Alignment followed by preprocessing, as one job slot.
    pub fn process(&self, id: &ProjectId) -> Result<Vec<LineAnnotation>, AppError> {
        let _guard = self.begin_job(id)?;
        self.align_unguarded(id)?;
        self.preprocess_unguarded(id, None)
    }

    pub fn project_view(&self, id: &ProjectId) -> Result<ProjectView, AppError> {
        Ok(ProjectView { project: self.store.load_project(id)?, jobs: self.store.list_jobs(id)? })
    }

    pub fn timed_lyrics(&self, id: &ProjectId) -> Result<(TimedLyric, elmi_core::alignment::AlignmentReport), AppError> {
        self.store.load_project(id)?;
        self.store.load_timed_lyrics(id).map_err(|e| match e {
            StoreError::NotFound(_) => AppError::NotReady("lyrics have not been timed yet".into()),
            other => other.into(),
        })
    }

    pub fn lines(&self, id: &ProjectId) -> Result<Vec<LineView>, AppError> {
        let (lyric, _) = self.timed_lyrics(id)?;
        let annotations = self.store.load_annotations(id)?;
        let noteworthy = self.chat.noteworthy_lines(id).unwrap_or_default();
        let glosses = self.store.all_glosses(id)?;
        let threads = self.store.list_threads(id)?;
        Ok(lyric
            .lines
            .into_iter()
            .map(|line| {
                let i = line.index;
                LineView {
                    annotation: annotations.iter().find(|a| a.line_index == i).cloned(),
                    noteworthy: noteworthy.contains(&i),
                    gloss: glosses.iter().filter(|g| g.line_index == i).max_by_key(|g| g.version).cloned(),
                    thread_id: threads.iter().find(|t| t.line_index == i).map(|t| t.id.clone()),
                    line,
                }
            })
            .collect())
    }

    fn check_line(&self, id: &ProjectId, line_index: usize) -> Result<(), AppError> {
        let (lyric, _) = self.timed_lyrics(id)?;
        if line_index >= lyric.lines.len() {
            return Err(AppError::NotFound(format!("line {line_index} does not exist ({} lines)", lyric.lines.len())));
        }
        Ok(())
    }

    pub fn put_gloss(&self, id: &ProjectId, line_index: usize, raw: &str, expected_version: u32) -> Result<GlossLine, AppError> {
        self.check_line(id, line_index)?;
        Ok(self.store.append_gloss(id, line_index, raw, expected_version)?)
    }

    pub fn suggestions(&self, id: &ProjectId, line_index: usize, partial: &str) -> Result<Vec<String>, AppError> {
        self.check_line(id, line_index)?;
        Ok(self.chat.suggest_inline(id, line_index, partial)?)
    }

    /// Opens the thread of a line. An existing thread is returned as is with
    /// `created = false`; a line has at most one thread.
    pub fn open_thread(&self, id: &ProjectId, line_index: usize, proactive: bool) -> Result<(ChatThread, bool), AppError> {
        self.check_line(id, line_index)?;
        match self.chat.open_thread(id, line_index, proactive) {
            Ok(thread) => Ok((thread, true)),
            Err(ChatError::ThreadExists { thread_id, .. }) => Ok((self.store.load_thread(&thread_id)?, false)),
            Err(e) => Err(e.into()),
        }
    }

    pub fn thread(&self, thread_id: &str) -> Result<ChatThread, AppError> {
        Ok(self.store.load_thread(thread_id)?)
    }

    /// One row per thread of a project, for condensed display.
    pub fn thread_summaries(&self, id: &ProjectId) -> Result<Vec<ThreadSummary>, AppError> {
        self.store.load_project(id)?;
        Ok(self
            .store
            .list_threads(id)?
            .into_iter()
            .map(|t| ThreadSummary {
                message_count: t.messages.len(),
                last_message: t.messages.last().map(|m| m.text.clone()),
                last_intent: t.messages.iter().rev().find_map(|m| m.intent),
                thread_id: t.id,
                line_index: t.line_index,
                opened_by: t.opened_by,
            })
            .collect())
    }

    pub fn send_message(&self, thread_id: &str, input: TurnInput) -> Result<TurnOutcome, AppError> {
        Ok(self.chat.send(thread_id, input)?)
    }

    pub fn playback(&self, id: &ProjectId, t_ms: u64, mode: PlaybackMode, loop_line: Option<usize>) -> Result<PlaybackState, AppError> {
        let (lyric, _) = self.timed_lyrics(id)?;
        Ok(resolve_playback(id.as_str(), &lyric, t_ms, mode, loop_line)?)
    }

    /// Per-line statistics, either over one project's gloss variants or
    /// across every project of the same song.
    pub fn analytics(&self, id: &ProjectId, scope: Scope) -> Result<AnalyticsReport, AppError> {
        let project = self.store.load_project(id)?;
        let (lyric, _) = self.timed_lyrics(id)?;
        let mut lines = Vec::new();
        match scope {
            Scope::Project => {
                let annotations = self.store.load_annotations(id)?;
                for line in &lyric.lines {
                    let i = line.index;
                    let mut variants = Vec::new();
                    if let Some(g) = self.store.current_gloss(id, i)? {
                        variants.push(("user".to_string(), g.raw));
                    }
                    if let Some(a) = annotations.iter().find(|a| a.line_index == i) {
                        variants.push(("base".to_string(), a.base_gloss.clone()));
                        variants.push(("base_alt".to_string(), a.alt_glosses.base_alt.clone()));
                        variants.push(("shorter".to_string(), a.alt_glosses.shorter.clone()));
                        variants.push(("longer".to_string(), a.alt_glosses.longer.clone()));
                    }
                    if !variants.is_empty() {
                        lines.push(line_metrics(i, &variants).map_err(|e| AppError::Internal(e.to_string()))?);
                    }
                }
            }
            Scope::Corpus => {
                let peers: Vec<SongProject> = self
                    .store
                    .list_projects()?
                    .into_iter()
                    .filter(|p| p.title.eq_ignore_ascii_case(&project.title) && p.artist.eq_ignore_ascii_case(&project.artist))
                    .collect();
                let mut per_peer = Vec::with_capacity(peers.len());
                for p in &peers {
                    per_peer.push((p.id.clone(), self.store.all_glosses(&p.id)?, self.store.load_annotations(&p.id)?));
                }
                for line in &lyric.lines {
                    let i = line.index;
                    let variants: Vec<(String, String)> = per_peer
                        .iter()
                        .filter_map(|(pid, glosses, annotations)| {
                            let user = glosses.iter().filter(|g| g.line_index == i).max_by_key(|g| g.version).map(|g| g.raw.clone());
                            let base = || annotations.iter().find(|a| a.line_index == i).map(|a| a.base_gloss.clone());
                            user.or_else(base).map(|g| (pid.0.clone(), g))
                        })
                        .collect();
                    if !variants.is_empty() {
                        lines.push(line_metrics(i, &variants).map_err(|e| AppError::Internal(e.to_string()))?);
                    }
                }
            }
        }
        Ok(AnalyticsReport { project_id: id.0.clone(), scope, lines })
    }

    pub fn export(&self, id: &ProjectId) -> Result<ExportBundle, AppError> {
        Ok(self.store.export_bundle(id)?)
    }
}
