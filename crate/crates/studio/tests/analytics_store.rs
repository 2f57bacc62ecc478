mod common;

use std::sync::Arc;

use elmi_studio::analytics::Scope;
use elmi_studio::app::AppError;
use elmi_studio::store::Store;
use num_rational::Ratio;

#[test]
fn project_scope_covers_every_variant() {
    let studio = common::studio();
    let id = common::ready_project(&studio);
    let report = studio.analytics(&id, Scope::Project).unwrap();
    assert_eq!(report.lines.len(), 19);
    let line0 = &report.lines[0];
    let labels: Vec<&str> = line0.variants.iter().map(|v| v.label.as_str()).collect();
    assert_eq!(labels, ["base", "base_alt", "shorter", "longer"]);
    // Signs: 3, 3, 2, 4.
    assert_eq!((line0.sign_min, line0.sign_max), (2, 4));
    assert_eq!(line0.sign_mean.ratio(), Ratio::new(3, 1));
    assert!((line0.sign_std.unwrap() - (2.0f64 / 3.0).sqrt()).abs() < 1e-12);

    studio.put_gloss(&id, 0, "ME SAME-AS BUTTER SMOOTH [smile]", 0).unwrap();
    let report = studio.analytics(&id, Scope::Project).unwrap();
    let line0 = &report.lines[0];
    assert_eq!(line0.variants[0].label, "user");
    assert_eq!((line0.variants[0].sign_count, line0.variants[0].nms_count), (4, 1));
}

#[test]
fn corpus_scope_compares_projects_of_a_song() {
    let studio = common::studio();
    let first = common::ready_project(&studio);
    let second = common::ready_project(&studio);
    studio.put_gloss(&second, 0, "ME SAME-AS BUTTER SMOOTH", 0).unwrap();

    let report = studio.analytics(&first, Scope::Corpus).unwrap();
    let line0 = &report.lines[0];
    assert_eq!(line0.variants.len(), 2);
    assert_eq!(line0.overlap.as_ref().unwrap().ratio(), Ratio::new(2, 3));
    assert_eq!(line0.overlap_percent.as_deref(), Some("66.67%"));
    // Untouched lines compare two identical base glosses.
    assert_eq!(report.lines[1].overlap_percent.as_deref(), Some("100.00%"));
}

#[test]
fn file_store_reload_reproduces_everything() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("elmi.db");
    let (id, export, project_report, glosses) = {
        let studio = common::studio_with(common::provider(), Arc::new(Store::open(&path).unwrap()));
        let id = common::ready_project(&studio);
        let v1 = studio.put_gloss(&id, 10, "MELT YOUR HEART TWO", 0).unwrap();
        assert_eq!(v1.version, 1);
        let stale = studio.put_gloss(&id, 10, "HEART", 0).unwrap_err();
        match stale {
            AppError::Conflict { details, .. } => assert_eq!(details["current_version"], 1),
            other => panic!("{other:?}"),
        }
        let thread = common::script().threads.into_iter().find(|t| t.line_index == 10).unwrap();
        let (_, turns) = common::play_thread(&studio, &id, &thread);
        assert_eq!(turns.len(), 3);
        (
            id.clone(),
            studio.export(&id).unwrap(),
            studio.analytics(&id, Scope::Project).unwrap(),
            studio.store.gloss_history(&id, 10).unwrap(),
        )
    };
    assert_eq!(glosses.len(), 3);

    let reopened = common::studio_with(common::provider(), Arc::new(Store::open(&path).unwrap()));
    assert_eq!(reopened.export(&id).unwrap(), export);
    assert_eq!(reopened.analytics(&id, Scope::Project).unwrap(), project_report);
    assert_eq!(reopened.store.gloss_history(&id, 10).unwrap(), glosses);
    assert_eq!(export.threads[0].messages.len(), 6);
    let bundle = serde_json::to_string(&export).unwrap();
    let back: elmi_studio::store::ExportBundle = serde_json::from_str(&bundle).unwrap();
    assert_eq!(back, export);
}
