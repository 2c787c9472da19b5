use tputml::drift::{run_monitor, DriftMonitorState, Stream};
use tputml::nn::{ModelSpec, NetworkWeights};
use tputml::Frame;

const LEVEL: f64 = 0.5;

/// All-zero LSTM with output bias `LEVEL`: predicts the level whatever the input.
fn constant_model() -> (ModelSpec, NetworkWeights<f64>) {
    let spec = ModelSpec::direct(1, 0, 2, 3, 2);
    let mut w = NetworkWeights::<f64>::zeros(&spec);
    w.dense[0].b.fill(LEVEL);
    (spec, w)
}

fn step_stream(len: i64, onset: i64, jump: f64) -> Stream {
    let y: Vec<f64> = (0..len).map(|t| if t >= onset { LEVEL + jump } else { LEVEL }).collect();
    let frame = Frame {
        timestamps: (0..len).map(|t| 1_700_000_000 + t).collect(),
        segments: vec![0..len as usize],
        names: vec!["y".into()],
        columns: vec![y],
    };
    Stream::from_frame(&frame, &["y".to_string()], "y").unwrap()
}

/// First check strictly after `t`: a sample stamped t covers [t, t + 1) and is
/// not yet observed by the check at t.
fn first_check_after(t: i64, p: i64) -> i64 {
    (t / p + 1) * p
}

#[test]
fn first_flag_at_first_check_after_onset() {
    let (spec, w) = constant_model();
    for (onset, period) in [(130, 600), (840, 600), (1799, 600), (1801, 600), (451, 300), (1000, 250), (1200, 600)] {
        let stream = step_stream(2400, onset, 1000.0);
        let mut state = DriftMonitorState::new(0.1);
        state.check_period = period;
        state.window_size = period;
        let (report, _) = run_monitor(&spec, w.clone(), &stream, &mut state, 1e-3, 0).unwrap();
        assert_eq!(report.summary.detection_times.first().copied(), Some(first_check_after(onset, period)), "onset {onset} period {period}");
        assert!(report.history.iter().take_while(|r| r.check_time_s < first_check_after(onset, period)).all(|r| !r.drift_flag));
    }
}

#[test]
fn threshold_tracks_baseline_through_every_transition() {
    let (spec, w) = constant_model();
    let stream = step_stream(3600, 700, 1000.0);
    let mut state = DriftMonitorState::new(0.0213);
    state.check_period = 300;
    state.window_size = 300;
    let (report, _) = run_monitor(&spec, w, &stream, &mut state, 1e-2, 0).unwrap();
    assert!(report.summary.baselines.len() > 1, "at least one adaptation");
    assert_eq!(report.history[0].threshold, 1.2 * 0.0213);
    for r in &report.history {
        assert!(
            report.summary.baselines.iter().any(|b| (r.threshold - 1.2 * b).abs() <= 1e-12),
            "threshold {} at {} matches no baseline",
            r.threshold,
            r.check_time_s
        );
    }
    assert!((state.threshold() - 1.2 * state.baseline_mae).abs() <= 1e-12);
}
