//! SQLite persistence. One writer connection behind a mutex; reads go
//! through a small pool of read connections (WAL mode) or, for in-memory
//! stores, the writer itself. Every aggregate is written in one transaction.

use std::path::{Path, PathBuf};
use std::sync::{Mutex, MutexGuard};

use chrono::{DateTime, SecondsFormat, Utc};
use elmi_core::alignment::AlignmentReport;
use elmi_core::{GlossError, GlossLine, ProjectId, ProjectStatus, SongProject, TimedLyric};
use rusqlite::{params, Connection, OptionalExtension, Transaction};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotation::LineAnnotation;
use crate::records::{ChatMessage, ChatThread, JobKind, JobRecord, JobStatus, OpenedBy};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("not found: {0}")]
    NotFound(String),
    #[error("line {line_index} is at version {current}, not {expected}")]
    ConflictingVersion { line_index: usize, expected: u32, current: u32 },
    #[error(transparent)]
    Gloss(#[from] GlossError),
    #[error("a thread already exists for line {0}")]
    ThreadExists(usize),
    #[error("invalid transition: {0}")]
    InvalidTransition(String),
    #[error("database: {0}")]
    Sql(#[from] rusqlite::Error),
    #[error("stored data is corrupt: {0}")]
    Corrupt(String),
}

pub type StoreResult<T> = Result<T, StoreError>;

const MIGRATIONS: &[&str] = &[
    "CREATE TABLE projects (
        id TEXT PRIMARY KEY,
        body TEXT NOT NULL,
        status TEXT NOT NULL,
        created_seq INTEGER NOT NULL
    );
    CREATE TABLE timed_lyrics (
        project_id TEXT PRIMARY KEY REFERENCES projects(id),
        body TEXT NOT NULL,
        report TEXT NOT NULL
    );
    CREATE TABLE gloss_versions (
        project_id TEXT NOT NULL REFERENCES projects(id),
        line_index INTEGER NOT NULL,
        version INTEGER NOT NULL,
        raw TEXT NOT NULL,
        authored_at TEXT NOT NULL,
        PRIMARY KEY (project_id, line_index, version)
    );
    CREATE TABLE annotations (
        project_id TEXT NOT NULL REFERENCES projects(id),
        line_index INTEGER NOT NULL,
        body TEXT NOT NULL,
        PRIMARY KEY (project_id, line_index)
    );
    CREATE TABLE stage_artifacts (
        project_id TEXT NOT NULL REFERENCES projects(id),
        stage TEXT NOT NULL,
        input_hash TEXT NOT NULL,
        body TEXT NOT NULL,
        PRIMARY KEY (project_id, stage)
    );
    CREATE TABLE threads (
        id TEXT PRIMARY KEY,
        project_id TEXT NOT NULL REFERENCES projects(id),
        line_index INTEGER NOT NULL,
        opened_by TEXT NOT NULL,
        UNIQUE (project_id, line_index)
    );
    CREATE TABLE messages (
        thread_id TEXT NOT NULL REFERENCES threads(id),
        seq INTEGER NOT NULL,
        body TEXT NOT NULL,
        PRIMARY KEY (thread_id, seq)
    );
    CREATE TABLE jobs (
        id INTEGER PRIMARY KEY AUTOINCREMENT,
        project_id TEXT NOT NULL REFERENCES projects(id),
        kind TEXT NOT NULL,
        body TEXT NOT NULL
    );
    CREATE TABLE idempotency (
        key TEXT PRIMARY KEY,
        fingerprint TEXT NOT NULL,
        status INTEGER NOT NULL,
        body TEXT NOT NULL
    );",
];

const READ_POOL: usize = 4;

pub struct Store {
    path: Option<PathBuf>,
    writer: Mutex<Connection>,
    readers: Mutex<Vec<Connection>>,
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("domain types serialize")
}

fn from_json<T: DeserializeOwned>(s: &str) -> StoreResult<T> {
    serde_json::from_str(s).map_err(|e| StoreError::Corrupt(e.to_string()))
}

fn timestamp(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Nanos, true)
}

fn parse_timestamp(s: &str) -> StoreResult<DateTime<Utc>> {
    DateTime::parse_from_rfc3339(s).map(|t| t.with_timezone(&Utc)).map_err(|e| StoreError::Corrupt(e.to_string()))
}

fn enum_str<T: Serialize>(v: &T) -> String {
    to_json(v).trim_matches('"').to_string()
}

fn migrate(conn: &mut Connection) -> StoreResult<()> {
    let version: usize = conn.query_row("PRAGMA user_version", [], |r| r.get(0))?;
    for (i, sql) in MIGRATIONS.iter().enumerate().skip(version) {
        let tx = conn.transaction()?;
        tx.execute_batch(sql)?;
        tx.pragma_update(None, "user_version", i + 1)?;
        tx.commit()?;
    }
    Ok(())
}

/// Read-only view used by loaders; implemented for both pooled readers and
/// open transactions.
trait Reader {
    fn conn(&self) -> &Connection;
}

impl Reader for Connection {
    fn conn(&self) -> &Connection {
        self
    }
}

impl Reader for Transaction<'_> {
    fn conn(&self) -> &Connection {
        self
    }
}

impl Store {
    /// Opens (creating if needed) a store file and applies migrations.
    pub fn open(path: &Path) -> StoreResult<Self> {
        let mut writer = Connection::open(path)?;
        writer.pragma_update(None, "journal_mode", "WAL")?;
        writer.pragma_update(None, "foreign_keys", "ON")?;
        writer.busy_timeout(std::time::Duration::from_secs(5))?;
        migrate(&mut writer)?;
        Ok(Store { path: Some(path.to_path_buf()), writer: Mutex::new(writer), readers: Mutex::new(Vec::new()) })
    }

    pub fn open_in_memory() -> StoreResult<Self> {
        let mut writer = Connection::open_in_memory()?;
        writer.pragma_update(None, "foreign_keys", "ON")?;
        migrate(&mut writer)?;
        Ok(Store { path: None, writer: Mutex::new(writer), readers: Mutex::new(Vec::new()) })
    }

    /// Path from `ELMI_DB`, defaulting to `elmi.db` in the working directory.
    pub fn open_from_env() -> StoreResult<Self> {
        let path = std::env::var("ELMI_DB").unwrap_or_else(|_| "elmi.db".into());
        Self::open(Path::new(&path))
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    fn writer(&self) -> MutexGuard<'_, Connection> {
        self.writer.lock().expect("writer lock")
    }

    fn read<T>(&self, f: impl FnOnce(&Connection) -> StoreResult<T>) -> StoreResult<T> {
        let Some(path) = &self.path else {
            return f(&self.writer());
        };
        let pooled = self.readers.lock().expect("reader pool").pop();
        let conn = match pooled {
            Some(c) => c,
            None => {
                let c = Connection::open(path)?;
                c.busy_timeout(std::time::Duration::from_secs(5))?;
                c
            }
        };
        let out = f(&conn);
        let mut pool = self.readers.lock().expect("reader pool");
        if pool.len() < READ_POOL {
            pool.push(conn);
        }
        out
    }

    fn write<T>(&self, f: impl FnOnce(&Transaction<'_>) -> StoreResult<T>) -> StoreResult<T> {
        let mut conn = self.writer();
        let tx = conn.transaction()?;
        let out = f(&tx)?;
        tx.commit()?;
        Ok(out)
    }

    // Projects.

    pub fn save_project(&self, project: &SongProject) -> StoreResult<()> {
        self.write(|tx| {
            let seq: i64 = tx.query_row("SELECT COALESCE(MAX(created_seq), 0) + 1 FROM projects", [], |r| r.get(0))?;
            tx.execute(
                "INSERT INTO projects (id, body, status, created_seq) VALUES (?1, ?2, ?3, ?4)
                 ON CONFLICT(id) DO UPDATE SET body = excluded.body, status = excluded.status",
                params![project.id.as_str(), to_json(project), project.status.as_str(), seq],
            )?;
            Ok(())
        })
    }

    pub fn load_project(&self, id: &ProjectId) -> StoreResult<SongProject> {
        self.read(|c| load_project(c, id))
    }

    pub fn list_projects(&self) -> StoreResult<Vec<SongProject>> {
        self.read(|c| {
            let mut stmt = c.prepare("SELECT body FROM projects ORDER BY created_seq")?;
            let rows = stmt.query_map([], |r| r.get::<_, String>(0))?;
            rows.map(|r| from_json(&r?)).collect()
        })
    }

    /// Moves a project along its status machine.
    pub fn set_status(&self, id: &ProjectId, next: ProjectStatus) -> StoreResult<SongProject> {
        self.write(|tx| {
            let mut p = load_project(tx, id)?;
            if p.status != next {
                p.transition(next).map_err(StoreError::InvalidTransition)?;
            }
            tx.execute("UPDATE projects SET body = ?2, status = ?3 WHERE id = ?1", params![id.as_str(), to_json(&p), p.status.as_str()])?;
            Ok(p)
        })
    }

    // Timed lyrics.

    pub fn save_timed_lyrics(&self, id: &ProjectId, lyric: &TimedLyric, report: &AlignmentReport) -> StoreResult<()> {
        self.write(|tx| {
            load_project(tx, id)?;
            tx.execute(
                "INSERT INTO timed_lyrics (project_id, body, report) VALUES (?1, ?2, ?3)
                 ON CONFLICT(project_id) DO UPDATE SET body = excluded.body, report = excluded.report",
                params![id.as_str(), to_json(lyric), to_json(report)],
            )?;
            Ok(())
        })
    }

    pub fn load_timed_lyrics(&self, id: &ProjectId) -> StoreResult<(TimedLyric, AlignmentReport)> {
        self.read(|c| load_timed(c, id))
    }

    // Glosses.

    /// Appends a gloss version. `expected_version` is the caller's view of
    /// the current version (0 when the line has no gloss yet).
    pub fn append_gloss(&self, id: &ProjectId, line_index: usize, raw: &str, expected_version: u32) -> StoreResult<GlossLine> {
        let line = GlossLine::new(line_index, raw.trim(), expected_version + 1, Utc::now())?;
        self.write(|tx| {
            load_project(tx, id)?;
            let current: u32 = tx.query_row(
                "SELECT COALESCE(MAX(version), 0) FROM gloss_versions WHERE project_id = ?1 AND line_index = ?2",
                params![id.as_str(), line_index as i64],
                |r| r.get(0),
            )?;
            if current != expected_version {
                return Err(StoreError::ConflictingVersion { line_index, expected: expected_version, current });
            }
            tx.execute(
                "INSERT INTO gloss_versions (project_id, line_index, version, raw, authored_at) VALUES (?1, ?2, ?3, ?4, ?5)",
                params![id.as_str(), line_index as i64, line.version, line.raw, timestamp(&line.authored_at)],
            )?;
            Ok(line)
        })
    }

    pub fn gloss_history(&self, id: &ProjectId, line_index: usize) -> StoreResult<Vec<GlossLine>> {
        self.read(|c| {
            Ok(load_glosses(c, id)?.into_iter().filter(|g| g.line_index == line_index).collect())
        })
    }

    pub fn current_gloss(&self, id: &ProjectId, line_index: usize) -> StoreResult<Option<GlossLine>> {
        Ok(self.gloss_history(id, line_index)?.pop())
    }

    /// Every stored version, ordered by line then version.
    pub fn all_glosses(&self, id: &ProjectId) -> StoreResult<Vec<GlossLine>> {
        self.read(|c| load_glosses(c, id))
    }

    // Annotations and stage artifacts.

    pub fn save_annotations(&self, id: &ProjectId, annotations: &[LineAnnotation]) -> StoreResult<()> {
        self.write(|tx| {
            load_project(tx, id)?;
            tx.execute("DELETE FROM annotations WHERE project_id = ?1", params![id.as_str()])?;
            for a in annotations {
                tx.execute(
                    "INSERT INTO annotations (project_id, line_index, body) VALUES (?1, ?2, ?3)",
                    params![id.as_str(), a.line_index as i64, to_json(a)],
                )?;
            }
            Ok(())
        })
    }

    pub fn load_annotations(&self, id: &ProjectId) -> StoreResult<Vec<LineAnnotation>> {
        self.read(|c| load_annotations(c, id))
    }

    pub fn save_stage_artifact(&self, id: &ProjectId, stage: &str, input_hash: &str, body: &str) -> StoreResult<()> {
        self.write(|tx| {
            tx.execute(
                "INSERT INTO stage_artifacts (project_id, stage, input_hash, body) VALUES (?1, ?2, ?3, ?4)
                 ON CONFLICT(project_id, stage) DO UPDATE SET input_hash = excluded.input_hash, body = excluded.body",
                params![id.as_str(), stage, input_hash, body],
            )?;
            Ok(())
        })
    }

    /// `(input_hash, body)` of a stored stage artifact.
    pub fn load_stage_artifact(&self, id: &ProjectId, stage: &str) -> StoreResult<Option<(String, String)>> {
        self.read(|c| {
            Ok(c.query_row(
                "SELECT input_hash, body FROM stage_artifacts WHERE project_id = ?1 AND stage = ?2",
                params![id.as_str(), stage],
                |r| Ok((r.get(0)?, r.get(1)?)),
            )
            .optional()?)
        })
    }

    pub fn delete_stage_artifacts(&self, id: &ProjectId, stages: &[&str]) -> StoreResult<()> {
        self.write(|tx| {
            for s in stages {
                tx.execute("DELETE FROM stage_artifacts WHERE project_id = ?1 AND stage = ?2", params![id.as_str(), s])?;
            }
            Ok(())
        })
    }

    // Threads.

    /// Creates a thread, optionally seeded with an opening message.
    pub fn create_thread(
        &self,
        id: &ProjectId,
        line_index: usize,
        opened_by: OpenedBy,
        opener: Option<ChatMessage>,
    ) -> StoreResult<ChatThread> {
        let thread_id = uuid::Uuid::new_v4().to_string();
        self.write(|tx| {
            load_project(tx, id)?;
            let exists: Option<String> = tx
                .query_row(
                    "SELECT id FROM threads WHERE project_id = ?1 AND line_index = ?2",
                    params![id.as_str(), line_index as i64],
                    |r| r.get(0),
                )
                .optional()?;
            if exists.is_some() {
                return Err(StoreError::ThreadExists(line_index));
            }
            tx.execute(
                "INSERT INTO threads (id, project_id, line_index, opened_by) VALUES (?1, ?2, ?3, ?4)",
                params![thread_id, id.as_str(), line_index as i64, enum_str(&opened_by)],
            )?;
            if let Some(mut m) = opener {
                m.seq = 1;
                insert_message(tx, &thread_id, &m)?;
            }
            load_thread(tx, &thread_id)
        })
    }

    pub fn load_thread(&self, thread_id: &str) -> StoreResult<ChatThread> {
        self.read(|c| load_thread(c, thread_id))
    }

    pub fn thread_for_line(&self, id: &ProjectId, line_index: usize) -> StoreResult<Option<ChatThread>> {
        self.read(|c| {
            let tid: Option<String> = c
                .query_row(
                    "SELECT id FROM threads WHERE project_id = ?1 AND line_index = ?2",
                    params![id.as_str(), line_index as i64],
                    |r| r.get(0),
                )
                .optional()?;
            tid.map(|t| load_thread(c, &t)).transpose()
        })
    }

    pub fn list_threads(&self, id: &ProjectId) -> StoreResult<Vec<ChatThread>> {
        self.read(|c| load_threads(c, id))
    }

    /// Appends messages to a thread in one transaction, assigning dense
    /// sequence numbers. Returns the stored messages.
    pub fn append_messages(&self, thread_id: &str, messages: Vec<ChatMessage>) -> StoreResult<Vec<ChatMessage>> {
        self.write(|tx| {
            let mut next: u32 = tx.query_row(
                "SELECT COALESCE(MAX(seq), 0) + 1 FROM messages WHERE thread_id = ?1",
                params![thread_id],
                |r| r.get(0),
            )?;
            let known: Option<String> = tx.query_row("SELECT id FROM threads WHERE id = ?1", params![thread_id], |r| r.get(0)).optional()?;
            if known.is_none() {
                return Err(StoreError::NotFound(format!("thread {thread_id}")));
            }
            let mut out = Vec::with_capacity(messages.len());
            for mut m in messages {
                m.seq = next;
                next += 1;
                insert_message(tx, thread_id, &m)?;
                out.push(m);
            }
            Ok(out)
        })
    }

    // Jobs.

    pub fn create_job(&self, id: &ProjectId, kind: JobKind) -> StoreResult<JobRecord> {
        self.write(|tx| {
            load_project(tx, id)?;
            let now = Utc::now();
            let mut job = JobRecord {
                id: 0,
                project_id: id.0.clone(),
                kind,
                status: JobStatus::Pending,
                stage: None,
                error: None,
                created_at: now,
                updated_at: now,
            };
            tx.execute("INSERT INTO jobs (project_id, kind, body) VALUES (?1, ?2, '')", params![id.as_str(), enum_str(&kind)])?;
            job.id = tx.last_insert_rowid();
            tx.execute("UPDATE jobs SET body = ?2 WHERE id = ?1", params![job.id, to_json(&job)])?;
            Ok(job)
        })
    }

    pub fn update_job(&self, job_id: i64, status: JobStatus, stage: Option<&str>, error: Option<&str>) -> StoreResult<JobRecord> {
        self.write(|tx| {
            let body: String = tx
                .query_row("SELECT body FROM jobs WHERE id = ?1", params![job_id], |r| r.get(0))
                .optional()?
                .ok_or_else(|| StoreError::NotFound(format!("job {job_id}")))?;
            let mut job: JobRecord = from_json(&body)?;
            if job.status != status && !job.status.can_transition_to(status) {
                return Err(StoreError::InvalidTransition(format!("job {:?} -> {:?}", job.status, status)));
            }
            job.status = status;
            if stage.is_some() {
                job.stage = stage.map(String::from);
            }
            job.error = error.map(String::from);
            job.updated_at = Utc::now();
            tx.execute("UPDATE jobs SET body = ?2 WHERE id = ?1", params![job_id, to_json(&job)])?;
            Ok(job)
        })
    }

    pub fn list_jobs(&self, id: &ProjectId) -> StoreResult<Vec<JobRecord>> {
        self.read(|c| {
            let mut stmt = c.prepare("SELECT body FROM jobs WHERE project_id = ?1 ORDER BY id")?;
            let rows = stmt.query_map(params![id.as_str()], |r| r.get::<_, String>(0))?;
            rows.map(|r| from_json(&r?)).collect()
        })
    }

    // Idempotency keys.

    /// Stored `(fingerprint, status, body)` for an idempotency key.
    pub fn idempotent_response(&self, key: &str) -> StoreResult<Option<(String, u16, String)>> {
        self.read(|c| {
            Ok(c.query_row("SELECT fingerprint, status, body FROM idempotency WHERE key = ?1", params![key], |r| {
                Ok((r.get(0)?, r.get(1)?, r.get(2)?))
            })
            .optional()?)
        })
    }

    pub fn record_idempotent_response(&self, key: &str, fingerprint: &str, status: u16, body: &str) -> StoreResult<()> {
        self.write(|tx| {
            tx.execute(
                "INSERT OR IGNORE INTO idempotency (key, fingerprint, status, body) VALUES (?1, ?2, ?3, ?4)",
                params![key, fingerprint, status, body],
            )?;
            Ok(())
        })
    }

    // Export.

    /// Every aggregate of a project, read in one transaction.
    pub fn export_bundle(&self, id: &ProjectId) -> StoreResult<ExportBundle> {
        self.read(|c| {
            let project = load_project(c, id)?;
            let timed = match load_timed(c, id) {
                Ok((lyric, report)) => Some(TimedExport { lyric, report }),
                Err(StoreError::NotFound(_)) => None,
                Err(e) => return Err(e),
            };
            Ok(ExportBundle {
                format: EXPORT_FORMAT.into(),
                project,
                timed_lyrics: timed,
                glosses: load_glosses(c, id)?,
                annotations: load_annotations(c, id)?,
                threads: load_threads(c, id)?,
            })
        })
    }
}

pub const EXPORT_FORMAT: &str = "elmi-export/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimedExport {
    pub lyric: TimedLyric,
    pub report: AlignmentReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportBundle {
    pub format: String,
    pub project: SongProject,
    pub timed_lyrics: Option<TimedExport>,
    pub glosses: Vec<GlossLine>,
    pub annotations: Vec<LineAnnotation>,
    pub threads: Vec<ChatThread>,
}

fn load_project(c: &impl Reader, id: &ProjectId) -> StoreResult<SongProject> {
    let body: Option<String> =
        c.conn().query_row("SELECT body FROM projects WHERE id = ?1", params![id.as_str()], |r| r.get(0)).optional()?;
    from_json(&body.ok_or_else(|| StoreError::NotFound(format!("project {id}")))?)
}

fn load_timed(c: &impl Reader, id: &ProjectId) -> StoreResult<(TimedLyric, AlignmentReport)> {
    let row: Option<(String, String)> = c
        .conn()
        .query_row("SELECT body, report FROM timed_lyrics WHERE project_id = ?1", params![id.as_str()], |r| {
            Ok((r.get(0)?, r.get(1)?))
        })
        .optional()?;
    let (body, report) = row.ok_or_else(|| StoreError::NotFound(format!("timed lyrics for {id}")))?;
    Ok((from_json(&body)?, from_json(&report)?))
}

fn load_glosses(c: &impl Reader, id: &ProjectId) -> StoreResult<Vec<GlossLine>> {
    let mut stmt = c.conn().prepare(
        "SELECT line_index, version, raw, authored_at FROM gloss_versions WHERE project_id = ?1 ORDER BY line_index, version",
    )?;
    let rows = stmt.query_map(params![id.as_str()], |r| {
        Ok((r.get::<_, i64>(0)?, r.get::<_, u32>(1)?, r.get::<_, String>(2)?, r.get::<_, String>(3)?))
    })?;
    rows.map(|row| {
        let (line, version, raw, at) = row?;
        Ok(GlossLine::new(line as usize, raw, version, parse_timestamp(&at)?)?)
    })
    .collect()
}

fn load_annotations(c: &impl Reader, id: &ProjectId) -> StoreResult<Vec<LineAnnotation>> {
    let mut stmt = c.conn().prepare("SELECT body FROM annotations WHERE project_id = ?1 ORDER BY line_index")?;
    let rows = stmt.query_map(params![id.as_str()], |r| r.get::<_, String>(0))?;
    rows.map(|r| from_json(&r?)).collect()
}

fn load_thread(c: &impl Reader, thread_id: &str) -> StoreResult<ChatThread> {
    let row: Option<(String, i64, String)> = c
        .conn()
        .query_row("SELECT project_id, line_index, opened_by FROM threads WHERE id = ?1", params![thread_id], |r| {
            Ok((r.get(0)?, r.get(1)?, r.get(2)?))
        })
        .optional()?;
    let (project_id, line_index, opened_by) = row.ok_or_else(|| StoreError::NotFound(format!("thread {thread_id}")))?;
    let mut stmt = c.conn().prepare("SELECT body FROM messages WHERE thread_id = ?1 ORDER BY seq")?;
    let messages = stmt
        .query_map(params![thread_id], |r| r.get::<_, String>(0))?
        .map(|r| from_json(&r?))
        .collect::<StoreResult<Vec<ChatMessage>>>()?;
    Ok(ChatThread {
        id: thread_id.to_string(),
        project_id,
        line_index: line_index as usize,
        opened_by: from_json(&format!("\"{opened_by}\""))?,
        messages,
    })
}

fn load_threads(c: &impl Reader, id: &ProjectId) -> StoreResult<Vec<ChatThread>> {
    let ids: Vec<String> = {
        let mut stmt = c.conn().prepare("SELECT id FROM threads WHERE project_id = ?1 ORDER BY line_index")?;
        let rows = stmt.query_map(params![id.as_str()], |r| r.get(0))?;
        rows.collect::<Result<_, _>>()?
    };
    ids.iter().map(|t| load_thread(c, t)).collect()
}

fn insert_message(tx: &Transaction<'_>, thread_id: &str, m: &ChatMessage) -> StoreResult<()> {
    tx.execute("INSERT INTO messages (thread_id, seq, body) VALUES (?1, ?2, ?3)", params![thread_id, m.seq, to_json(m)])?;
    Ok(())
}
