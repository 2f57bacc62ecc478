//! Deterministic fixture generation: a timed song with noisy subtitles and
//! ASR output, and the mock LLM table that drives the pipeline and chat
//! over it.

use std::collections::BTreeMap;

use elmi_core::{parse_lyrics, LyricsDocument, Span, SubtitleCue, SubtitleFormat};
use elmi_llm::{MockEntry, MockFailure, MockTable};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::annotation::{AltGlosses, ChallengeKind, ChallengeNote, LineAnnotation, PerformanceGuide};
use crate::chat::{chat_template, shortcut_text, LineContext};
use crate::clients::{FixtureMeta, FixtureWord};
use crate::pipeline::{
    assemble, batches, normalize_outputs, stage_values, LineAlternatives, LineGloss, LineInput, PipelineConfig, SongContext,
    Stage, StageOutputs,
};
use crate::records::Intent;

/// Time kept before the first and after the last word of a line.
pub const LINE_MARGIN_MS: u64 = 250;
/// Largest shift applied to a cue boundary.
pub const CUE_JITTER_MS: i64 = 200;
/// Largest shift applied to an ASR word start.
pub const ASR_JITTER_MS: i64 = 30;
/// Fraction of lyric tokens perturbed in the subtitle text.
pub const TOKEN_NOISE: f64 = 0.10;

pub struct SongSpec {
    pub title: &'static str,
    pub artist: &'static str,
    pub description: &'static str,
    pub video_url: &'static str,
    pub sections: Vec<(&'static str, Vec<&'static str>)>,
    /// Lines whose subtitle is split into two cues before the given word.
    pub split_cues: Vec<(usize, usize)>,
}

pub fn butter() -> SongSpec {
    SongSpec {
        title: "Butter",
        artist: "BTS",
        description: "Dance-pop single built on a bouncy bass groove. The lyrics string together boastful, \
                      playful similes about being smooth, cool and impossible to resist.",
        video_url: "https://www.youtube.com/watch?v=WMweEpGlu_U",
        sections: vec![
            (
                "Verse 1",
                vec![
                    "Smooth like butter",
                    "Like a criminal undercover",
                    "Gon' pop like trouble",
                    "Breakin' into your heart like that",
                    "Cool shade stunner",
                    "Yeah, I owe it all to my mother",
                    "Hot like summer",
                    "Yeah, I'm makin' you sweat like that",
                    "Break it down",
                ],
            ),
            (
                "Pre-Chorus",
                vec!["Ooh, when I look in the mirror", "I'll melt your heart into two", "I got that superstar glow so", "Do the boogie like"],
            ),
            (
                "Chorus",
                vec![
                    "Side step, right, left to my beat",
                    "High like the moon, rock with me, baby",
                    "Know that I got that heat",
                    "Let me show you 'cause talk is cheap",
                    "Side step, right, left to my beat",
                    "Get it, let it roll",
                ],
            ),
        ],
        split_cues: vec![(14, 4)],
    }
}

/// What was done to a cue's text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CueNoise {
    pub line_index: usize,
    pub op: String,
    pub before: String,
    pub after: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthWord {
    pub surface: String,
    pub start_ms: u64,
    pub duration_ms: u64,
    /// False when the ASR output leaves this word out.
    pub heard: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthLine {
    pub line_index: usize,
    pub text: String,
    pub span: Span,
    pub words: Vec<TruthWord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Truth {
    pub seed: u64,
    pub lines: Vec<TruthLine>,
    pub cue_noise: Vec<CueNoise>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureFiles {
    pub meta: FixtureMeta,
    pub lyrics: String,
    pub subtitles: String,
    pub words: Vec<FixtureWord>,
    pub truth: Truth,
}

impl FixtureFiles {
    /// `(file name, contents)` for every generated file.
    pub fn files(&self) -> Vec<(&'static str, String)> {
        let pretty = |v: &dyn erased::Json| v.pretty();
        vec![
            ("meta.json", pretty(&self.meta)),
            ("lyrics.txt", self.lyrics.clone()),
            ("subs.vtt", self.subtitles.clone()),
            ("words.json", pretty(&self.words)),
            ("truth.json", pretty(&self.truth)),
        ]
    }
}

mod erased {
    pub trait Json {
        fn pretty(&self) -> String;
    }

    impl<T: serde::Serialize> Json for T {
        fn pretty(&self) -> String {
            let mut s = serde_json::to_string_pretty(self).expect("serializable");
            s.push('\n');
            s
        }
    }
}

/// Common ASR spellings of lyric words.
const ASR_SPELLINGS: &[(&str, &str)] = &[("gon'", "gonna"), ("breakin'", "breaking"), ("makin'", "making"), ("'cause", "because")];

const FILLERS: &[&str] = &["oh", "yeah", "uh"];

fn shift(v: u64, by: i64) -> u64 {
    (v as i64 + by).max(0) as u64
}

/// A misspelling whose normalized form differs from the word.
fn misspell(word: &str, rng: &mut ChaCha8Rng) -> String {
    let chars: Vec<char> = word.chars().collect();
    let letters: Vec<usize> = (0..chars.len()).filter(|&i| chars[i].is_alphabetic()).collect();
    if letters.len() >= 4 {
        let drop = letters[rng.gen_range(1..letters.len())];
        chars.iter().enumerate().filter(|(i, _)| *i != drop).map(|(_, c)| *c).collect()
    } else {
        let dup = letters[letters.len() - 1];
        let mut out: String = chars[..=dup].iter().collect();
        out.push(chars[dup]);
        out.extend(&chars[dup + 1..]);
        out
    }
}

fn noisy_text(words: &[&str], rng: &mut ChaCha8Rng) -> (String, String) {
    let mut out: Vec<String> = words.iter().map(|w| w.to_string()).collect();
    let op = match rng.gen_range(0..3) {
        0 => {
            let i = rng.gen_range(0..out.len());
            out[i] = misspell(&out[i], rng);
            "substitute"
        }
        1 => {
            let i = rng.gen_range(0..=out.len());
            out.insert(i, FILLERS[rng.gen_range(0..FILLERS.len())].to_string());
            "insert"
        }
        _ if out.len() >= 4 => {
            out.remove(rng.gen_range(0..out.len()));
            "delete"
        }
        _ => {
            let i = rng.gen_range(0..out.len());
            out[i] = misspell(&out[i], rng);
            "substitute"
        }
    };
    (out.join(" "), op.to_string())
}

fn lyrics_text(song: &SongSpec) -> String {
    let mut out = String::new();
    for (label, lines) in &song.sections {
        if !out.is_empty() {
            out.push('\n');
        }
        out.push_str(&format!("[{label}]\n"));
        for l in lines {
            out.push_str(l);
            out.push('\n');
        }
    }
    out
}

/// Builds the fixture files for `song` from `seed`.
pub fn synthesize(song: &SongSpec, seed: u64) -> FixtureFiles {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let texts: Vec<&str> = song.sections.iter().flat_map(|(_, l)| l.iter().copied()).collect();
    let section_ends: Vec<usize> = song
        .sections
        .iter()
        .scan(0, |n, (_, l)| {
            *n += l.len();
            Some(*n - 1)
        })
        .collect();

    // Ground-truth word times.
    let mut t: u64 = 4000;
    let mut truth_lines = Vec::with_capacity(texts.len());
    for (i, text) in texts.iter().enumerate() {
        let mut words = Vec::new();
        for w in text.split_whitespace() {
            let letters = w.chars().filter(|c| c.is_alphanumeric()).count() as u64;
            let dur = 150 + 35 * letters + rng.gen_range(0..80);
            words.push(TruthWord { surface: w.to_string(), start_ms: t, duration_ms: dur, heard: true });
            t += dur + rng.gen_range(40..120);
        }
        let first = words[0].start_ms;
        let last = words.last().map(|w| w.start_ms + w.duration_ms).expect("non-empty line");
        truth_lines.push(TruthLine {
            line_index: i,
            text: text.to_string(),
            span: Span::new(first - LINE_MARGIN_MS, last + LINE_MARGIN_MS),
            words,
        });
        t = last + rng.gen_range(1100..1600);
        if section_ends.contains(&i) {
            t += 2500;
        }
    }
    let duration_ms = truth_lines.last().map_or(0, |l| l.span.end_ms) + 5000;

    // Subtitle text noise on distinct lines.
    let total_tokens: usize = texts.iter().map(|t| t.split_whitespace().count()).sum();
    let noisy_count = (total_tokens as f64 * TOKEN_NOISE).round() as usize;
    let mut candidates: Vec<usize> = (0..texts.len()).filter(|i| !song.split_cues.iter().any(|(l, _)| l == i)).collect();
    candidates.shuffle(&mut rng);
    let mut noisy: Vec<usize> = candidates.into_iter().take(noisy_count).collect();
    noisy.sort_unstable();
    let mut cue_noise = Vec::new();

    let mut cues = vec![SubtitleCue { index: 0, start_ms: 1000, end_ms: 3000, text: "[Music]".into() }];
    for line in &truth_lines {
        let words: Vec<&str> = line.text.split_whitespace().collect();
        let start = shift(line.span.start_ms, rng.gen_range(-CUE_JITTER_MS..=CUE_JITTER_MS));
        let end = shift(line.span.end_ms, rng.gen_range(-CUE_JITTER_MS..=CUE_JITTER_MS));
        if let Some(&(_, at)) = song.split_cues.iter().find(|(l, _)| *l == line.line_index) {
            let cut = line.words[at - 1].start_ms + line.words[at - 1].duration_ms;
            cues.push(SubtitleCue { index: 0, start_ms: start, end_ms: cut + 100, text: words[..at].join(" ") });
            cues.push(SubtitleCue { index: 0, start_ms: cut + 100, end_ms: end, text: words[at..].join(" ") });
            continue;
        }
        let text = if noisy.contains(&line.line_index) {
            let (after, op) = noisy_text(&words, &mut rng);
            cue_noise.push(CueNoise { line_index: line.line_index, op, before: line.text.clone(), after: after.clone() });
            after
        } else {
            line.text.clone()
        };
        cues.push(SubtitleCue { index: 0, start_ms: start, end_ms: end, text });
    }
    for (i, c) in cues.iter_mut().enumerate() {
        c.index = i;
    }

    // ASR output: jittered starts, ASR spellings, two missed words and a
    // few fillers.
    let all_words: Vec<(usize, usize)> =
        truth_lines.iter().flat_map(|l| (0..l.words.len()).map(move |w| (l.line_index, w))).collect();
    let mut missed: Vec<(usize, usize)> = all_words.choose_multiple(&mut rng, 2).copied().collect();
    missed.sort_unstable();
    let mut asr = Vec::new();
    for line in &mut truth_lines {
        for (w, word) in line.words.iter_mut().enumerate() {
            let jitter = rng.gen_range(-ASR_JITTER_MS..=ASR_JITTER_MS);
            if missed.contains(&(line.line_index, w)) {
                word.heard = false;
                continue;
            }
            let lower = word.surface.to_lowercase();
            let bare = lower.trim_end_matches([',', '.', '!', '?']);
            let surface = ASR_SPELLINGS.iter().find(|(from, _)| *from == bare).map_or(bare.to_string(), |(_, to)| to.to_string());
            asr.push(FixtureWord { surface, start_ms: shift(word.start_ms, jitter), duration_ms: word.duration_ms });
        }
    }
    for &line in &[2usize, 7, 15] {
        // A filler identical to the first lyric word would be ambiguous to
        // any text aligner.
        let first = &truth_lines[line].words[0];
        let lead = elmi_core::normalize_text(&first.surface);
        let filler = FILLERS.iter().cycle().skip(line).find(|f| **f != lead).expect("fillers differ");
        asr.push(FixtureWord { surface: filler.to_string(), start_ms: first.start_ms - 200, duration_ms: 150 });
    }
    asr.push(FixtureWord { surface: "yeah".into(), start_ms: 2000, duration_ms: 300 });
    asr.sort_by_key(|w| w.start_ms);

    FixtureFiles {
        meta: FixtureMeta {
            title: song.title.into(),
            artist: song.artist.into(),
            description: song.description.into(),
            video_url: song.video_url.into(),
            duration_ms,
        },
        lyrics: lyrics_text(song),
        subtitles: elmi_core::subtitles::write_subtitles(&cues, SubtitleFormat::Vtt),
        words: asr,
        truth: Truth { seed, lines: truth_lines, cue_noise },
    }
}

/// Hand-written analysis for one line, as the mock returns it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisLine {
    pub line_index: usize,
    pub kind: ChallengeKind,
    #[serde(default)]
    pub summary: String,
    #[serde(default)]
    pub needs_fingerspelling_hint: bool,
    pub base_gloss: String,
    pub mood_hashtags: Vec<String>,
    pub performance_guide: String,
    pub shorter: String,
    pub base_alt: String,
    pub longer: String,
}

/// A batch whose first base-gloss reply carries a bad gloss for one line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvalidGloss {
    pub batch: usize,
    pub line_index: usize,
    pub gloss: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Analysis {
    pub lines: Vec<AnalysisLine>,
    #[serde(default)]
    pub invalid_first_gloss: Vec<InvalidGloss>,
}

impl Analysis {
    /// Stage outputs as the pipeline would store them.
    pub fn stage_outputs(&self) -> StageOutputs {
        let mut o = StageOutputs {
            notes: self
                .lines
                .iter()
                .map(|l| ChallengeNote {
                    line_index: l.line_index,
                    kind: l.kind,
                    summary: l.summary.clone(),
                    needs_fingerspelling_hint: l.needs_fingerspelling_hint,
                })
                .collect(),
            glosses: self.lines.iter().map(|l| LineGloss { line_index: l.line_index, gloss: l.base_gloss.clone() }).collect(),
            guides: self
                .lines
                .iter()
                .map(|l| PerformanceGuide {
                    line_index: l.line_index,
                    mood_hashtags: l.mood_hashtags.clone(),
                    performance_guide: l.performance_guide.clone(),
                })
                .collect(),
            alternatives: self
                .lines
                .iter()
                .map(|l| LineAlternatives {
                    line_index: l.line_index,
                    alternatives: AltGlosses { shorter: l.shorter.clone(), base_alt: l.base_alt.clone(), longer: l.longer.clone() },
                })
                .collect(),
        };
        normalize_outputs(&mut o);
        o
    }
}

/// The user side of a fixture project.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Persona {
    pub nickname: String,
    pub proficiency: String,
    pub sign_language: String,
}

/// One scripted action in a thread.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScriptStep {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shortcut: Option<Intent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manual: Option<String>,
    /// Classifier answer for a manual message.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intent: Option<Intent>,
    /// Reply, then the regenerated reply if any.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub replies: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<MockFailure>,
    /// Saves a user gloss for the thread's line instead of sending a message.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub set_gloss: Option<String>,
}

impl ScriptStep {
    pub fn shortcut(intent: Intent, reply: &str) -> Self {
        ScriptStep { shortcut: Some(intent), replies: vec![reply.into()], ..Default::default() }
    }

    pub fn manual(text: &str, intent: Intent, reply: &str) -> Self {
        ScriptStep { manual: Some(text.into()), intent: Some(intent), replies: vec![reply.into()], ..Default::default() }
    }

    /// The intent this step routes to.
    pub fn routed_intent(&self) -> Option<Intent> {
        self.shortcut.or(self.intent)
    }

    pub fn message(&self) -> Option<String> {
        match (&self.shortcut, &self.manual) {
            (Some(i), _) => Some(shortcut_text(*i).to_string()),
            (None, Some(m)) => Some(m.trim().to_string()),
            (None, None) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptThread {
    pub line_index: usize,
    #[serde(default)]
    pub proactive: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub opener: Option<String>,
    pub steps: Vec<ScriptStep>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatScript {
    pub persona: Persona,
    pub threads: Vec<ScriptThread>,
}

const PERSONA_LINE: usize = 7;

/// A fifty-turn conversation on one line whose replies regularly break the
/// persona rules: too many questions, and numbers in timing advice.
pub fn persona_thread() -> ScriptThread {
    let manual: [(&str, Intent); 4] = [
        ("what is this line really saying?", Intent::Meaning),
        ("which signs would you pick for sweat?", Intent::Glossing),
        ("how cocky should my face be here?", Intent::Emoting),
        ("am I rushing this line?", Intent::Timing),
    ];
    let steps = (0..50)
        .map(|k| {
            let intent = Intent::ALL[k % 4];
            let base = match intent {
                Intent::Meaning => "The line is a playful boast about turning up the heat on the dance floor.",
                Intent::Glossing => "MAKE YOU SWEAT keeps the English order, which reads fine in a song.",
                Intent::Emoting => "Let a teasing smirk build as you reach SWEAT.",
                Intent::Timing => "Your gloss fits if you let SWEAT ride the end of the phrase.",
            };
            let chatty = format!("{base} What picture comes to mind? Who are you singing to? Where should your eyes go?");
            let calm = if intent == Intent::Timing {
                format!("{base} Hold it for {} beats and keep the energy light.", 2 + k % 3)
            } else {
                format!("{base} What would feel most natural to you?")
            };
            let replies = match k % 6 {
                0 => vec![chatty, calm],
                3 => vec![chatty.clone(), format!("{chatty} Does that help?")],
                _ => vec![calm],
            };
            match k % 5 {
                4 => {
                    let (text, i) = manual[k % 4];
                    ScriptStep { manual: Some(text.into()), intent: Some(i), replies, ..Default::default() }
                }
                _ => ScriptStep { shortcut: Some(intent), replies, ..Default::default() },
            }
        })
        .collect();
    ScriptThread { line_index: PERSONA_LINE, proactive: false, opener: None, steps }
}

fn song_context(meta: &FixtureMeta, persona: &Persona) -> SongContext {
    SongContext {
        title: meta.title.clone(),
        artist: meta.artist.clone(),
        sign_language: persona.sign_language.clone(),
        user_name: persona.nickname.clone(),
        proficiency: persona.proficiency.clone(),
        description: meta.description.clone(),
    }
}

struct TableBuilder {
    entries: BTreeMap<(String, String), MockEntry>,
}

impl TableBuilder {
    fn add(&mut self, entry: MockEntry) -> Result<(), String> {
        let hash = elmi_llm::values_hash(entry.values.as_ref().expect("values"));
        let key = (entry.template.clone(), hash);
        match self.entries.get(&key) {
            Some(existing) if existing != &entry => Err(format!("conflicting mock entries for {}#{}", key.0, key.1)),
            Some(_) => Ok(()),
            None => {
                self.entries.insert(key, entry);
                Ok(())
            }
        }
    }
}

fn json(v: &impl Serialize) -> String {
    serde_json::to_string(v).expect("serializable")
}

/// The mock table for a fixture song.
pub fn build_mock_table(doc: &LyricsDocument, meta: &FixtureMeta, analysis: &Analysis, script: &ChatScript) -> Result<MockTable, String> {
    let ctx = song_context(meta, &script.persona);
    let lines: Vec<LineInput> = doc.to_lyric_lines().iter().map(LineInput::from).collect();
    if analysis.lines.iter().map(|l| l.line_index).ne(lines.iter().map(|l| l.line_index)) {
        return Err("analysis must cover every lyric line in order".into());
    }
    let outputs = analysis.stage_outputs();
    let batches = batches(&lines, PipelineConfig::default().batch_size);
    let mut table = TableBuilder { entries: BTreeMap::new() };

    for stage in Stage::ALL {
        for (b, batch) in batches.iter().enumerate() {
            let in_batch = |i: usize| batch.iter().any(|l| l.line_index == i);
            let values = stage_values(stage, &ctx, batch, &outputs.notes, &outputs.glosses);
            let reply = match stage {
                Stage::InspectLines => {
                    let notes: Vec<_> = outputs.notes.iter().filter(|n| in_batch(n.line_index)).collect();
                    json(&serde_json::json!({ "notes": notes }))
                }
                Stage::BaseGloss => {
                    let gl: Vec<_> = outputs.glosses.iter().filter(|g| in_batch(g.line_index)).collect();
                    json(&serde_json::json!({ "glosses": gl }))
                }
                Stage::PerformanceGuide => {
                    let raw: Vec<_> = analysis
                        .lines
                        .iter()
                        .filter(|l| in_batch(l.line_index))
                        .map(|l| serde_json::json!({"line_index": l.line_index, "mood_hashtags": l.mood_hashtags, "performance_guide": l.performance_guide}))
                        .collect();
                    json(&serde_json::json!({ "guides": raw }))
                }
                Stage::Alternatives => {
                    let alts: Vec<_> = outputs.alternatives.iter().filter(|a| in_batch(a.line_index)).collect();
                    json(&serde_json::json!({ "alternatives": alts }))
                }
            };
            let mut responses = vec![reply.clone()];
            if stage == Stage::BaseGloss {
                if let Some(bad) = analysis.invalid_first_gloss.iter().find(|x| x.batch == b) {
                    let gl: Vec<_> = outputs
                        .glosses
                        .iter()
                        .filter(|g| in_batch(g.line_index))
                        .map(|g| {
                            let gloss = if g.line_index == bad.line_index { bad.gloss.clone() } else { g.gloss.clone() };
                            LineGloss { line_index: g.line_index, gloss }
                        })
                        .collect();
                    responses = vec![json(&serde_json::json!({ "glosses": gl })), reply];
                }
            }
            table.add(MockEntry::new(stage.template(), values, responses))?;
        }
    }

    let annotations: Vec<LineAnnotation> = assemble(&lines, &outputs)?;
    let mut glosses: BTreeMap<usize, String> = BTreeMap::new();
    let mut threads = script.threads.clone();
    threads.push(persona_thread());
    for thread in &threads {
        let line = lines.get(thread.line_index).ok_or_else(|| format!("no line {}", thread.line_index))?;
        let annotation = annotations.iter().find(|a| a.line_index == thread.line_index).cloned();
        let mut lctx = LineContext {
            song: ctx.clone(),
            line_index: thread.line_index,
            lyric_line: line.text.clone(),
            annotation: annotation.clone(),
            user_gloss: glosses.get(&thread.line_index).cloned(),
        };
        if thread.proactive {
            let note = annotation.as_ref().map(|a| a.challenge.clone()).filter(ChallengeNote::is_noteworthy).ok_or_else(|| {
                format!("line {} is opened proactively but has no challenge note", thread.line_index)
            })?;
            let opener = thread.opener.clone().ok_or_else(|| format!("proactive thread on line {} needs an opener", thread.line_index))?;
            table.add(MockEntry::new("proactive_opener", lctx.opener_values(&note), vec![opener]))?;
        }
        let mut turn = 0;
        for step in &thread.steps {
            if let Some(g) = &step.set_gloss {
                glosses.insert(thread.line_index, g.clone());
                lctx.user_gloss = Some(g.clone());
                continue;
            }
            let message = step.message().ok_or("step has no shortcut, manual text or gloss")?;
            let intent = step.routed_intent().ok_or("manual step needs an intent")?;
            if step.manual.is_some() {
                table.add(MockEntry::new("intent_classifier", lctx.classifier_values(&message), vec![intent.as_str().into()]))?;
            }
            turn += 1;
            let values = lctx.chat_values(&message, turn);
            let mut entry = MockEntry::new(chat_template(intent, lctx.user_gloss.is_some()), values, step.replies.clone());
            entry.error = step.error;
            if entry.responses.is_empty() && entry.error.is_none() {
                return Err(format!("step {message:?} on line {} has no reply", thread.line_index));
            }
            table.add(entry)?;
        }
    }
    Ok(MockTable { entries: table.entries.into_values().collect() })
}

/// Reads `analysis.json`, `chat_script.json`, `lyrics.txt` and `meta.json`
/// from a fixture directory and builds its mock table.
pub fn mock_table_for(dir: &std::path::Path) -> Result<MockTable, String> {
    let read = |name: &str| std::fs::read_to_string(dir.join(name)).map_err(|e| format!("{}/{name}: {e}", dir.display()));
    let doc = parse_lyrics(&read("lyrics.txt")?).map_err(|e| e.to_string())?;
    let meta: FixtureMeta = serde_json::from_str(&read("meta.json")?).map_err(|e| format!("meta.json: {e}"))?;
    let analysis: Analysis = serde_json::from_str(&read("analysis.json")?).map_err(|e| format!("analysis.json: {e}"))?;
    let script: ChatScript = serde_json::from_str(&read("chat_script.json")?).map_err(|e| format!("chat_script.json: {e}"))?;
    build_mock_table(&doc, &meta, &analysis, &script)
}

pub fn table_json(table: &MockTable) -> String {
    let mut s = serde_json::to_string_pretty(table).expect("serializable");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use elmi_core::parse_subtitles;

    #[test]
    fn fixture_shape() {
        let f = synthesize(&butter(), 2021);
        let doc = parse_lyrics(&f.lyrics).unwrap();
        assert_eq!(doc.line_count(), 19);
        let words: usize = f.truth.lines.iter().map(|l| l.words.len()).sum();
        assert_eq!(words, 105);
        assert_eq!(f.truth.cue_noise.len(), 11);
        let cues = parse_subtitles(f.subtitles.as_bytes(), SubtitleFormat::Vtt).unwrap();
        assert_eq!(cues.cues.len(), 21);
        assert!(cues.warnings.is_empty());
        for w in f.truth.lines.windows(2) {
            assert!(w[0].span.end_ms + 2 * CUE_JITTER_MS as u64 <= w[1].span.start_ms);
        }
    }

    #[test]
    fn deterministic() {
        assert_eq!(synthesize(&butter(), 7), synthesize(&butter(), 7));
        assert_ne!(synthesize(&butter(), 7).subtitles, synthesize(&butter(), 8).subtitles);
    }

    #[test]
    fn misspellings_change_normal_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for w in ["butter", "Hot", "it", "Gon'", "'cause", "me,"] {
            for _ in 0..20 {
                let m = misspell(w, &mut rng);
                assert_ne!(elmi_core::normalize_text(&m), elmi_core::normalize_text(w), "{w} -> {m}");
            }
        }
    }

    #[test]
    fn persona_thread_breaks_rules() {
        let t = persona_thread();
        assert_eq!(t.steps.len(), 50);
        assert!(t.steps.iter().any(|s| s.replies.iter().any(|r| r.matches('?').count() > 2)));
        assert!(t.steps.iter().filter(|s| s.routed_intent() == Some(Intent::Timing)).any(|s| s.replies.iter().any(|r| r.chars().any(|c| c.is_ascii_digit()))));
    }
}
