//! The four-stage preprocessing chain: inspect lines, write base glosses,
//! write performance guides, write length alternatives.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use elmi_core::{tokenize_gloss, GlossToken, LyricLine, SongProject, TimedLyric};
use elmi_llm::{ChatExchange, FieldSpec, FieldType, LlmClient, LlmError, PromptKey, StructuredSpec, TemperatureClass};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::annotation::{AltGlosses, ChallengeKind, ChallengeNote, LineAnnotation, PerformanceGuide};
use crate::prompts::PromptCatalog;
use crate::store::{Store, StoreError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    InspectLines,
    BaseGloss,
    PerformanceGuide,
    Alternatives,
}

impl Stage {
    pub const ALL: [Stage; 4] = [Stage::InspectLines, Stage::BaseGloss, Stage::PerformanceGuide, Stage::Alternatives];

    pub fn name(self) -> &'static str {
        match self {
            Stage::InspectLines => "inspect_lines",
            Stage::BaseGloss => "base_gloss",
            Stage::PerformanceGuide => "performance_guide",
            Stage::Alternatives => "alternatives",
        }
    }

    pub fn template(self) -> &'static str {
        match self {
            Stage::InspectLines => "line_inspector",
            Stage::BaseGloss => "base_gloss",
            Stage::PerformanceGuide => "performance_guide",
            Stage::Alternatives => "alternative_gloss",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s || st.template() == s)
            .ok_or_else(|| format!("unknown stage {s:?}; expected one of inspect_lines, base_gloss, performance_guide, alternatives"))
    }
}

pub const MAX_GUIDE_CHARS: usize = 500;
pub const MAX_HASHTAGS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PipelineConfig {
    pub batch_size: usize,
    pub concurrency: usize,
    pub max_retries: u32,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig { batch_size: 10, concurrency: 2, max_retries: 2 }
    }
}

/// Song-level prompt values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SongContext {
    pub title: String,
    pub artist: String,
    pub sign_language: String,
    pub user_name: String,
    pub proficiency: String,
    pub description: String,
}

impl SongContext {
    pub fn of(project: &SongProject) -> Self {
        SongContext {
            title: project.title.clone(),
            artist: project.artist.clone(),
            sign_language: project.sign_language.as_str().to_string(),
            user_name: project.user_profile.nickname.clone(),
            proficiency: project.user_profile.proficiency.as_str().to_string(),
            description: project.song_description.clone(),
        }
    }

    pub fn values(&self) -> BTreeMap<String, String> {
        BTreeMap::from([
            ("title".to_string(), self.title.clone()),
            ("artist".to_string(), self.artist.clone()),
            ("sign language".to_string(), self.sign_language.clone()),
            ("user name".to_string(), self.user_name.clone()),
            ("proficiency".to_string(), self.proficiency.clone()),
        ])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineInput {
    pub line_index: usize,
    pub section: String,
    pub text: String,
}

impl From<&LyricLine> for LineInput {
    fn from(l: &LyricLine) -> Self {
        LineInput { line_index: l.index, section: l.section.clone(), text: l.text.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineGloss {
    pub line_index: usize,
    pub gloss: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineAlternatives {
    pub line_index: usize,
    #[serde(flatten)]
    pub alternatives: AltGlosses,
}

/// Groups lines into batches of at most `max` lines. Whole sections are
/// packed together; a section longer than `max` is split into chunks.
pub fn batches(lines: &[LineInput], max: usize) -> Vec<Vec<LineInput>> {
    let max = max.max(1);
    let mut sections: Vec<Vec<LineInput>> = Vec::new();
    for l in lines {
        match sections.last_mut() {
            Some(s) if s[0].section == l.section => s.push(l.clone()),
            _ => sections.push(vec![l.clone()]),
        }
    }
    let mut out: Vec<Vec<LineInput>> = Vec::new();
    for section in sections {
        if section.len() > max {
            out.extend(section.chunks(max).map(<[LineInput]>::to_vec));
            continue;
        }
        match out.last_mut() {
            Some(b) if b.len() + section.len() <= max && b.len() < max => b.extend(section),
            _ => out.push(section),
        }
    }
    out
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("stage {stage} failed for lines {lines:?}: {source}")]
    Stage { stage: Stage, lines: Vec<usize>, source: LlmError },
    #[error("stage {stage}: {message}")]
    Inconsistent { stage: Stage, message: String },
    #[error(transparent)]
    Store(#[from] StoreError),
}

impl PipelineError {
    pub fn stage(&self) -> Option<Stage> {
        match self {
            PipelineError::Stage { stage, .. } | PipelineError::Inconsistent { stage, .. } => Some(*stage),
            PipelineError::Store(_) => None,
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("serializable")
}

fn notes_for<'a>(notes: &'a [ChallengeNote], batch: &[LineInput]) -> Vec<&'a ChallengeNote> {
    let wanted: BTreeSet<usize> = batch.iter().map(|l| l.line_index).collect();
    notes.iter().filter(|n| wanted.contains(&n.line_index)).collect()
}

fn glosses_for<'a>(glosses: &'a [LineGloss], batch: &[LineInput]) -> Vec<&'a LineGloss> {
    let wanted: BTreeSet<usize> = batch.iter().map(|l| l.line_index).collect();
    glosses.iter().filter(|g| wanted.contains(&g.line_index)).collect()
}

/// Prompt values for one batch of a stage. Each stage sees only the outputs
/// of the stages it depends on.
pub fn stage_values(
    stage: Stage,
    ctx: &SongContext,
    batch: &[LineInput],
    notes: &[ChallengeNote],
    glosses: &[LineGloss],
) -> BTreeMap<String, String> {
    let mut v = ctx.values();
    match stage {
        Stage::InspectLines => {
            v.insert("song description".into(), ctx.description.clone());
            v.insert("lines".into(), to_json(&batch));
        }
        Stage::BaseGloss => {
            v.insert("lines".into(), to_json(&batch));
            v.insert("notes".into(), to_json(&notes_for(notes, batch)));
        }
        Stage::PerformanceGuide => {
            v.insert("lines".into(), to_json(&batch));
            v.insert("glosses".into(), to_json(&glosses_for(glosses, batch)));
            v.insert("notes".into(), to_json(&notes_for(notes, batch)));
        }
        Stage::Alternatives => {
            v.insert("glosses".into(), to_json(&glosses_for(glosses, batch)));
            v.insert("notes".into(), to_json(&notes_for(notes, batch)));
        }
    }
    v
}

fn obj(fields: Vec<FieldSpec>) -> FieldType {
    FieldType::Object(fields)
}

fn list_of(name: &str, item: FieldType) -> Vec<FieldSpec> {
    vec![FieldSpec::required(name, FieldType::Array(Box::new(item)))]
}

pub fn stage_spec(stage: Stage, max_retries: u32) -> StructuredSpec {
    let idx = || FieldSpec::required("line_index", FieldType::Integer);
    let s = |n: &str| FieldSpec::required(n, FieldType::String);
    let fields = match stage {
        Stage::InspectLines => list_of(
            "notes",
            obj(vec![
                idx(),
                s("kind").one_of(&["poetic", "cultural", "mismatch", "none"]),
                s("summary"),
                FieldSpec::required("needs_fingerspelling_hint", FieldType::Boolean),
            ]),
        ),
        Stage::BaseGloss => list_of("glosses", obj(vec![idx(), s("gloss")])),
        Stage::PerformanceGuide => list_of(
            "guides",
            obj(vec![idx(), FieldSpec::required("mood_hashtags", FieldType::Array(Box::new(FieldType::String))), s("performance_guide")]),
        ),
        Stage::Alternatives => list_of("alternatives", obj(vec![idx(), s("shorter"), s("base_alt"), s("longer")])),
    };
    StructuredSpec::new(fields, max_retries)
}

fn list_key(stage: Stage) -> &'static str {
    match stage {
        Stage::InspectLines => "notes",
        Stage::BaseGloss => "glosses",
        Stage::PerformanceGuide => "guides",
        Stage::Alternatives => "alternatives",
    }
}

fn rows<T: DeserializeOwned>(record: &Map<String, Value>, key: &str) -> Result<Vec<T>, String> {
    serde_json::from_value(record[key].clone()).map_err(|e| format!("`{key}`: {e}"))
}

fn check_coverage(indices: impl Iterator<Item = usize>, batch: &[LineInput]) -> Result<(), String> {
    let got: Vec<usize> = indices.collect();
    let want: Vec<usize> = batch.iter().map(|l| l.line_index).collect();
    let mut sorted = got.clone();
    sorted.sort_unstable();
    if sorted != want {
        return Err(format!("expected exactly one entry for each of lines {want:?}, got {got:?}"));
    }
    Ok(())
}

fn parse_nonempty(what: &str, line: usize, gloss: &str) -> Result<Vec<GlossToken>, String> {
    let toks = tokenize_gloss(gloss).map_err(|e| format!("line {line} {what} {gloss:?}: {e}"))?;
    if toks.is_empty() {
        return Err(format!("line {line} {what} is empty"));
    }
    Ok(toks)
}

/// Semantic checks beyond the field schema.
pub fn check_stage_record(
    stage: Stage,
    record: &Map<String, Value>,
    batch: &[LineInput],
    glosses: &[LineGloss],
) -> Result<(), String> {
    match stage {
        Stage::InspectLines => {
            let notes: Vec<ChallengeNote> = rows(record, "notes")?;
            check_coverage(notes.iter().map(|n| n.line_index), batch)?;
            if let Some(n) = notes.iter().find(|n| n.kind == ChallengeKind::None && !n.summary.trim().is_empty()) {
                return Err(format!("line {} has kind none but a non-empty summary", n.line_index));
            }
        }
        Stage::BaseGloss => {
            let gl: Vec<LineGloss> = rows(record, "glosses")?;
            check_coverage(gl.iter().map(|g| g.line_index), batch)?;
            for g in &gl {
                parse_nonempty("gloss", g.line_index, &g.gloss)?;
            }
        }
        Stage::PerformanceGuide => {
            let guides: Vec<PerformanceGuide> = rows(record, "guides")?;
            check_coverage(guides.iter().map(|g| g.line_index), batch)?;
            for g in &guides {
                let n = g.mood_hashtags.len();
                if n == 0 || n > MAX_HASHTAGS {
                    return Err(format!("line {} needs 1 to {MAX_HASHTAGS} mood hashtags, got {n}", g.line_index));
                }
                if let Some(bad) = g.mood_hashtags.iter().find(|h| !h.starts_with('#') || h.len() < 2 || h.contains(char::is_whitespace)) {
                    return Err(format!("line {} hashtag {bad:?} must be a single word starting with #", g.line_index));
                }
                if g.performance_guide.trim().is_empty() {
                    return Err(format!("line {} has an empty performance guide", g.line_index));
                }
            }
        }
        Stage::Alternatives => {
            let alts: Vec<LineAlternatives> = rows(record, "alternatives")?;
            check_coverage(alts.iter().map(|a| a.line_index), batch)?;
            for a in &alts {
                let base = glosses
                    .iter()
                    .find(|g| g.line_index == a.line_index)
                    .ok_or_else(|| format!("no base gloss for line {}", a.line_index))?;
                check_alternatives(a.line_index, &base.gloss, &a.alternatives)?;
            }
        }
    }
    Ok(())
}

fn sign_count(tokens: &[GlossToken]) -> usize {
    tokens.iter().filter(|t| t.is_sign()).count()
}

/// Length ordering of the three variants against the base gloss.
pub fn check_alternatives(line: usize, base: &str, alt: &AltGlosses) -> Result<(), String> {
    let base_t = parse_nonempty("base gloss", line, base)?;
    let shorter = parse_nonempty("shorter", line, &alt.shorter)?;
    let base_alt = parse_nonempty("base_alt", line, &alt.base_alt)?;
    let longer = parse_nonempty("longer", line, &alt.longer)?;
    if base_t.len() > 1 && shorter.len() >= base_t.len() {
        return Err(format!(
            "line {line}: shorter has {} tokens but must have fewer than the base gloss ({})",
            shorter.len(),
            base_t.len()
        ));
    }
    if !(shorter.len() <= base_alt.len() && base_alt.len() <= longer.len()) {
        return Err(format!(
            "line {line}: token counts must satisfy shorter <= base_alt <= longer, got {} / {} / {}",
            shorter.len(),
            base_alt.len(),
            longer.len()
        ));
    }
    if sign_count(&shorter) > sign_count(&base_t) || sign_count(&longer) < sign_count(&base_t) {
        return Err(format!("line {line}: shorter must not add signs and longer must not drop signs relative to the base gloss"));
    }
    Ok(())
}

/// Cuts a guide to at most `MAX_GUIDE_CHARS`, at the last sentence end that
/// fits, or at a word boundary when no sentence fits.
pub fn truncate_guide(text: &str) -> String {
    let text = text.trim();
    if text.chars().count() <= MAX_GUIDE_CHARS {
        return text.to_string();
    }
    let limit = text.char_indices().nth(MAX_GUIDE_CHARS).map_or(text.len(), |(i, _)| i);
    let head = &text[..limit];
    if let Some(end) = head.rfind(['.', '!', '?']) {
        return head[..=end].trim_end().to_string();
    }
    match head.rfind(char::is_whitespace) {
        Some(ws) => head[..ws].trim_end().to_string(),
        None => head.to_string(),
    }
}

/// Sorts rows by line, collapses gloss whitespace and truncates guides.
/// Idempotent.
pub fn normalize_outputs(o: &mut StageOutputs) {
    let squash = |s: &mut String| *s = s.split_whitespace().collect::<Vec<_>>().join(" ");
    o.notes.sort_by_key(|n| n.line_index);
    o.glosses.sort_by_key(|g| g.line_index);
    o.guides.sort_by_key(|g| g.line_index);
    o.alternatives.sort_by_key(|a| a.line_index);
    o.glosses.iter_mut().for_each(|g| squash(&mut g.gloss));
    for a in &mut o.alternatives {
        squash(&mut a.alternatives.shorter);
        squash(&mut a.alternatives.base_alt);
        squash(&mut a.alternatives.longer);
    }
    for g in &mut o.guides {
        g.performance_guide = truncate_guide(&g.performance_guide);
    }
}

/// Outputs of all stages.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageOutputs {
    pub notes: Vec<ChallengeNote>,
    pub glosses: Vec<LineGloss>,
    pub guides: Vec<PerformanceGuide>,
    pub alternatives: Vec<LineAlternatives>,
}

pub struct Pipeline<'a> {
    pub client: &'a LlmClient,
    pub catalog: &'a PromptCatalog,
    pub config: PipelineConfig,
}

impl Pipeline<'_> {
    fn run_batch(
        &self,
        stage: Stage,
        ctx: &SongContext,
        batch: &[LineInput],
        prior: &StageOutputs,
    ) -> Result<Map<String, Value>, PipelineError> {
        let values = stage_values(stage, ctx, batch, &prior.notes, &prior.glosses);
        let template = stage.template();
        let prompt = self
            .catalog
            .render(template, &values)
            .map_err(|e| PipelineError::Stage { stage, lines: batch.iter().map(|l| l.line_index).collect(), source: e.into() })?;
        let exchange = ChatExchange::single(prompt, "Reply with the JSON object only.", TemperatureClass::Deterministic);
        let key = PromptKey::new(template, &values);
        let spec = stage_spec(stage, self.config.max_retries);
        let check = |r: &Map<String, Value>| check_stage_record(stage, r, batch, &prior.glosses);
        self.client
            .complete_structured(&exchange, Some(&key), &spec, &check)
            .map(|reply| reply.record)
            .map_err(|source| PipelineError::Stage { stage, lines: batch.iter().map(|l| l.line_index).collect(), source })
    }

    /// Runs one stage over all batches, up to `config.concurrency` at a time,
    /// returning the records in batch order.
    fn run_stage(
        &self,
        stage: Stage,
        ctx: &SongContext,
        batches: &[Vec<LineInput>],
        prior: &StageOutputs,
    ) -> Result<Vec<Map<String, Value>>, PipelineError> {
        let mut out = Vec::with_capacity(batches.len());
        for group in batches.chunks(self.config.concurrency.max(1)) {
            let results: Vec<_> = std::thread::scope(|scope| {
                let handles: Vec<_> = group.iter().map(|b| scope.spawn(move || self.run_batch(stage, ctx, b, prior))).collect();
                handles.into_iter().map(|h| h.join().expect("batch thread")).collect()
            });
            for r in results {
                out.push(r?);
            }
        }
        Ok(out)
    }

    /// Runs a stage and merges its rows into `outputs`.
    pub fn stage(
        &self,
        stage: Stage,
        ctx: &SongContext,
        batches: &[Vec<LineInput>],
        outputs: &mut StageOutputs,
    ) -> Result<(), PipelineError> {
        let records = self.run_stage(stage, ctx, batches, outputs)?;
        let key = list_key(stage);
        let bad = |message: String| PipelineError::Inconsistent { stage, message };
        match stage {
            Stage::InspectLines => {
                outputs.notes = records.iter().map(|r| rows(r, key)).collect::<Result<Vec<Vec<_>>, _>>().map_err(bad)?.concat();
            }
            Stage::BaseGloss => {
                outputs.glosses = records.iter().map(|r| rows(r, key)).collect::<Result<Vec<Vec<_>>, _>>().map_err(bad)?.concat();
            }
            Stage::PerformanceGuide => {
                outputs.guides = records.iter().map(|r| rows(r, key)).collect::<Result<Vec<Vec<_>>, _>>().map_err(bad)?.concat();
            }
            Stage::Alternatives => {
                outputs.alternatives = records.iter().map(|r| rows(r, key)).collect::<Result<Vec<Vec<_>>, _>>().map_err(bad)?.concat();
            }
        }
        normalize_outputs(outputs);
        Ok(())
    }

    /// Hash of everything a stage's prompts depend on.
    pub fn input_hash(&self, stage: Stage, ctx: &SongContext, batches: &[Vec<LineInput>], prior: &StageOutputs) -> String {
        let t = self.catalog.get(stage.template());
        let mut h = Sha256::new();
        h.update(format!("{}@{}\n", t.id, t.version));
        h.update(t.body.as_bytes());
        for b in batches {
            h.update(to_json(&stage_values(stage, ctx, b, &prior.notes, &prior.glosses)));
            h.update(b"\n");
        }
        hex::encode(h.finalize())
    }

    /// Runs the stages in order, reusing stored artifacts whose inputs are
    /// unchanged. Stages at and after `from` are recomputed regardless.
    /// `progress` is told about every stage as it completes (and whether it
    /// was reused).
    pub fn run(
        &self,
        store: &Store,
        project: &SongProject,
        lyric: &TimedLyric,
        from: Option<Stage>,
        progress: &dyn Fn(Stage, bool),
    ) -> Result<Vec<LineAnnotation>, PipelineError> {
        let ctx = SongContext::of(project);
        let lines: Vec<LineInput> = lyric.lines.iter().filter(|l| !l.text.trim().is_empty()).map(LineInput::from).collect();
        let batches = batches(&lines, self.config.batch_size);
        if let Some(from) = from {
            let later: Vec<&str> = Stage::ALL.iter().filter(|s| **s >= from).map(|s| s.name()).collect();
            store.delete_stage_artifacts(&project.id, &later)?;
        }
        let mut outputs = StageOutputs::default();
        for stage in Stage::ALL {
            let hash = self.input_hash(stage, &ctx, &batches, &outputs);
            let cached = store.load_stage_artifact(&project.id, stage.name())?.filter(|(h, _)| *h == hash);
            let reused = match cached {
                Some((_, body)) => {
                    let restored: StageOutputs =
                        serde_json::from_str(&body).map_err(|e| PipelineError::Inconsistent { stage, message: e.to_string() })?;
                    merge_stage(stage, &mut outputs, restored);
                    true
                }
                None => {
                    self.stage(stage, &ctx, &batches, &mut outputs)?;
                    let only = project_stage(stage, &outputs);
                    store.save_stage_artifact(&project.id, stage.name(), &hash, &to_json(&only))?;
                    false
                }
            };
            progress(stage, reused);
        }
        let annotations = assemble(&lines, &outputs).map_err(|message| PipelineError::Inconsistent { stage: Stage::Alternatives, message })?;
        store.save_annotations(&project.id, &annotations)?;
        Ok(annotations)
    }
}

fn project_stage(stage: Stage, all: &StageOutputs) -> StageOutputs {
    let mut out = StageOutputs::default();
    match stage {
        Stage::InspectLines => out.notes = all.notes.clone(),
        Stage::BaseGloss => out.glosses = all.glosses.clone(),
        Stage::PerformanceGuide => out.guides = all.guides.clone(),
        Stage::Alternatives => out.alternatives = all.alternatives.clone(),
    }
    out
}

fn merge_stage(stage: Stage, into: &mut StageOutputs, from: StageOutputs) {
    match stage {
        Stage::InspectLines => into.notes = from.notes,
        Stage::BaseGloss => into.glosses = from.glosses,
        Stage::PerformanceGuide => into.guides = from.guides,
        Stage::Alternatives => into.alternatives = from.alternatives,
    }
}

/// Joins stage outputs into one annotation per line.
pub fn assemble(lines: &[LineInput], outputs: &StageOutputs) -> Result<Vec<LineAnnotation>, String> {
    lines
        .iter()
        .map(|l| {
            let i = l.line_index;
            let missing = |what: &str| format!("line {i} has no {what}");
            let note = outputs.notes.iter().find(|n| n.line_index == i).ok_or_else(|| missing("challenge note"))?;
            let gloss = outputs.glosses.iter().find(|g| g.line_index == i).ok_or_else(|| missing("base gloss"))?;
            let guide = outputs.guides.iter().find(|g| g.line_index == i).ok_or_else(|| missing("performance guide"))?;
            let alt = outputs.alternatives.iter().find(|a| a.line_index == i).ok_or_else(|| missing("alternatives"))?;
            Ok(LineAnnotation {
                line_index: i,
                challenge: note.clone(),
                base_gloss: gloss.gloss.clone(),
                alt_glosses: alt.alternatives.clone(),
                mood_hashtags: guide.mood_hashtags.clone(),
                performance_guide: guide.performance_guide.clone(),
            })
        })
        .collect()
}

/// Canonical annotation export: pretty JSON with a trailing newline.
pub fn annotation_export(annotations: &[LineAnnotation]) -> String {
    let mut s = serde_json::to_string_pretty(annotations).expect("serializable");
    s.push('\n');
    s
}
