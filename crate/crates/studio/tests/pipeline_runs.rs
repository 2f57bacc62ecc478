mod common;

use std::sync::Arc;

use elmi_core::ProjectStatus;
use elmi_llm::{MockProvider, MockTable};
use elmi_studio::app::{AppError, Event};
use elmi_studio::pipeline::{annotation_export, Stage, MAX_GUIDE_CHARS};
use elmi_studio::records::JobStatus;
use elmi_studio::store::Store;
use elmi_studio::synth::mock_table_for;

fn stage_of(template: &str) -> Option<Stage> {
    Stage::ALL.into_iter().find(|s| s.template() == template)
}

#[test]
fn consecutive_runs_export_identical_bytes() {
    let studio = common::studio();
    let id = common::ready_project(&studio);
    let first = annotation_export(&studio.store.load_annotations(&id).unwrap());

    studio.client.clear_log();
    let again = studio.preprocess(&id, None).unwrap();
    assert_eq!(annotation_export(&again), first);
    assert!(studio.client.calls().is_empty(), "cached stages are reused");

    let forced = studio.preprocess(&id, Some(Stage::InspectLines)).unwrap();
    assert_eq!(annotation_export(&forced), first);

    // A separate store and client reach the same bytes.
    let other = common::studio();
    let other_id = common::ready_project(&other);
    assert_eq!(annotation_export(&other.store.load_annotations(&other_id).unwrap()), first);
}

#[test]
fn stages_run_in_dataflow_order() {
    let studio = common::studio();
    let id = common::ready_project(&studio);
    let stages: Vec<Stage> = studio.client.calls().iter().filter_map(|c| c.template.as_deref().and_then(stage_of)).collect();
    assert!(!stages.is_empty());
    assert!(stages.windows(2).all(|w| w[0] <= w[1]), "{stages:?}");
    let mut distinct = stages.clone();
    distinct.dedup();
    assert_eq!(distinct, Stage::ALL.to_vec());

    // The first base-gloss reply has an unbalanced bracket and is retried.
    let retried: Vec<_> = studio.client.calls().into_iter().filter(|c| c.attempt > 0).collect();
    assert_eq!(retried.len(), 1);
    assert_eq!(retried[0].template.as_deref(), Some("base_gloss"));

    let project = studio.store.load_project(&id).unwrap();
    assert_eq!(project.status, ProjectStatus::Ready);
    let annotations = studio.store.load_annotations(&id).unwrap();
    assert_eq!(annotations.len(), 19);
    assert_eq!(annotations[0].base_gloss, "SMOOTH LIKE BUTTER");
    assert!(annotations.iter().all(|a| a.performance_guide.chars().count() <= MAX_GUIDE_CHARS));
    let noteworthy: Vec<usize> = annotations.iter().filter(|a| a.challenge.is_noteworthy()).map(|a| a.line_index).collect();
    assert_eq!(noteworthy, vec![4, 6, 12]);
}

#[test]
fn failed_stage_resumes_from_cache() {
    let table = mock_table_for(&common::song_dir()).unwrap();
    let without_gloss =
        MockTable { entries: table.entries.iter().filter(|e| e.template != "base_gloss").cloned().collect() };
    let store = Arc::new(Store::open_in_memory().unwrap());

    let broken = common::studio_with(MockProvider::new(without_gloss).unwrap(), store.clone());
    let mut events = broken.subscribe();
    let project = broken.create_project(&common::butter_request()).unwrap();
    let err = broken.process(&project.id).unwrap_err();
    assert!(matches!(err, AppError::Unavailable(_)), "{err:?}");
    assert_eq!(store.load_project(&project.id).unwrap().status, ProjectStatus::Failed);
    let jobs = store.list_jobs(&project.id).unwrap();
    let failed = jobs.last().unwrap();
    assert_eq!((failed.status, failed.stage.as_deref()), (JobStatus::Failed, Some("base_gloss")));
    assert!(store.load_stage_artifact(&project.id, "inspect_lines").unwrap().is_some());
    let mut done = Vec::new();
    while let Ok(e) = events.try_recv() {
        if let Event::StageDone { stage, reused, .. } = e {
            done.push((stage, reused));
        }
    }
    assert_eq!(done, vec![(Stage::InspectLines, false)]);

    let fixed = common::studio_with(MockProvider::new(table).unwrap(), store.clone());
    let mut events = fixed.subscribe();
    fixed.preprocess(&project.id, None).unwrap();
    assert_eq!(fixed.client.calls_for("line_inspector"), 0);
    assert!(fixed.client.calls_for("base_gloss") > 0);
    assert_eq!(store.load_project(&project.id).unwrap().status, ProjectStatus::Ready);
    let mut done = Vec::new();
    while let Ok(e) = events.try_recv() {
        if let Event::StageDone { stage, reused, .. } = e {
            done.push((stage, reused));
        }
    }
    assert_eq!(
        done,
        vec![(Stage::InspectLines, true), (Stage::BaseGloss, false), (Stage::PerformanceGuide, false), (Stage::Alternatives, false)]
    );
}

#[test]
fn one_job_per_project() {
    let studio = Arc::new(common::studio());
    let project = studio.create_project(&common::butter_request()).unwrap();
    studio.align(&project.id).unwrap();
    let results: Vec<_> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..4).map(|_| s.spawn(|| studio.preprocess(&project.id, Some(Stage::InspectLines)))).collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    assert!(results.iter().any(|r| r.is_ok()));
    assert!(results.iter().all(|r| matches!(r, Ok(_) | Err(AppError::Busy(_)))));
    assert!(!studio.job_running(&project.id));
}
