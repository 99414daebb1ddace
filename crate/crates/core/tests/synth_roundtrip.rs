use egolead::pipeline::{analyze, load_session, RunConfig};
use egolead::synth::{generate_session, score_against_truth, ScoreInputs, SynthSpec};

fn run(spec: &SynthSpec, tol_ms: f64) -> egolead::synth::Scores {
    let out = generate_session(spec).unwrap();
    let dir = tempfile::tempdir().unwrap();
    out.write_to(dir.path()).unwrap();
    let cfg = RunConfig::default();
    let (session, v) = load_session(&dir.path().join("manifest.json"), &cfg);
    assert!(v.is_ok(), "{:?}", v.errors);
    let analysis = analyze(&session.unwrap(), &cfg).unwrap();
    score_against_truth(&ScoreInputs::from_analysis(&analysis), &out.truth, tol_ms).unwrap()
}

#[test]
fn zero_noise_recovers_everything() {
    let s = run(&SynthSpec::standard(7, 600.0, 0.0), 100.0);
    eprintln!("{s:#?}");
    assert_eq!(s.boundary_agreement, 1.0);
}

#[test]
fn noisy_session_scores() {
    let s = run(&SynthSpec::standard(7, 600.0, 3.0), 150.0);
    eprintln!("{s:#?}");
}
