mod common;

use std::time::Instant;

use elmi_studio::synth::TOKEN_NOISE;

#[test]
fn noisy_fixture_aligns_to_ground_truth() {
    let truth = common::truth();
    let studio = common::studio();
    let project = studio.create_project(&common::butter_request()).unwrap();
    let started = Instant::now();
    let outcome = studio.align(&project.id).unwrap();
    assert!(started.elapsed().as_secs_f64() < 5.0);

    // The fixture carries the noise it claims to.
    let tokens: usize = truth.lines.iter().map(|l| l.words.len()).sum();
    assert_eq!(truth.cue_noise.len(), (tokens as f64 * TOKEN_NOISE).round() as usize);

    let report = &outcome.report;
    assert_eq!((report.lines_total, report.lines_matched), (19, 19));
    assert_eq!(report.words_total, 105);
    assert!(report.words_matched * 100 >= report.words_total * 95, "{report:?}");

    for (line, t) in outcome.lyric.lines.iter().zip(&truth.lines) {
        assert!(line.span.is_some());
        assert!(line.check_invariants().is_ok(), "line {}", line.index);
        assert_eq!(line.words.len(), t.words.len());
        for (w, tw) in line.words.iter().zip(&t.words) {
            if w.matched {
                let err = w.start_ms as i64 - tw.start_ms as i64;
                assert!(err.abs() <= 50, "line {} {:?}: {err} ms", line.index, tw.surface);
            }
        }
    }
}
