//! End-to-end checks of the `vislog` binary: exit codes, output layout and
//! determinism, driving real renders through temporary directories.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use vislog_cli::{record_token, InteractionsFile};
use vislog_core::detection::{load_truth, FrameElements};
use vislog_core::synthgui::transitions_log;

fn vislog(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vislog"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_ok(args: &[&str]) -> Output {
    let out = vislog(args);
    assert!(
        out.status.success(),
        "vislog {:?} failed: {}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn render_demo(dir: &Path) {
    run_ok(&["synth", "--demo", "--out", dir.to_str().unwrap()]);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(exit_code(&vislog(&[])), 2);
    assert_eq!(exit_code(&vislog(&["detect"])), 2);
    assert_eq!(exit_code(&vislog(&["frobnicate"])), 2);
    assert_eq!(exit_code(&vislog(&["generate", "m.json", "--mode", "banana"])), 2);
}

#[test]
fn missing_out_dir_is_invalid() {
    let out = vislog(&["synth", "--demo"]);
    assert_eq!(exit_code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--out"));
}

#[test]
fn missing_log_dir_is_invalid() {
    let tmp = tempfile::tempdir().unwrap();
    let out = vislog(&[
        "analyze",
        tmp.path().join("nope").to_str().unwrap(),
        "--out",
        tmp.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn demo_analyze_recovers_scripted_tokens() {
    let tmp = tempfile::tempdir().unwrap();
    let log = tmp.path().join("demo");
    render_demo(&log);
    for f in ["vislog.json", "events.jsonl", "truth.json", "f00000.png"] {
        assert!(log.join(f).exists(), "missing {f}");
    }

    let out_dir = tmp.path().join("analysis");
    run_ok(&[
        "analyze",
        log.to_str().unwrap(),
        "--text-detector",
        "oracle",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    let parsed: InteractionsFile =
        serde_json::from_str(&fs::read_to_string(out_dir.join("interactions.json")).unwrap())
            .unwrap();
    assert_eq!(parsed.log, "demo");
    let truth = load_truth(&log.join("truth.json")).unwrap();
    let tokens: Vec<String> = parsed.events.iter().map(record_token).collect();
    assert_eq!(tokens, truth.tokens);
    let times: Vec<u64> = parsed.events.iter().map(|e| e.t_ms).collect();
    assert!(times.windows(2).all(|w| w[0] <= w[1]), "timestamps out of order: {times:?}");
    assert!(parsed.events.iter().all(|e| !e.low_confidence));
}

#[test]
fn analyze_without_events_flags_low_confidence() {
    let tmp = tempfile::tempdir().unwrap();
    let log = tmp.path().join("log");
    // transition-only script: no input events recorded at all
    let script = transitions_log(3, 20);
    assert!(script.events.is_empty());
    let spec = tmp.path().join("spec.json");
    fs::write(&spec, serde_json::to_string(&script).unwrap()).unwrap();
    run_ok(&["synth", spec.to_str().unwrap(), "--out", log.to_str().unwrap()]);
    assert!(!log.join("events.jsonl").exists());

    let out_dir = tmp.path().join("analysis");
    run_ok(&["analyze", log.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    let parsed: InteractionsFile =
        serde_json::from_str(&fs::read_to_string(out_dir.join("interactions.json")).unwrap())
            .unwrap();
    assert_eq!(parsed.events.len(), 3);
    assert!(parsed.events.iter().all(|e| e.low_confidence));
}

#[test]
fn detect_writes_elements_and_overlays_per_sampled_frame() {
    let tmp = tempfile::tempdir().unwrap();
    let log = tmp.path().join("log");
    let spec = tmp.path().join("spec.json");
    fs::write(&spec, serde_json::to_string(&transitions_log(2, 10)).unwrap()).unwrap();
    run_ok(&["synth", spec.to_str().unwrap(), "--out", log.to_str().unwrap()]);

    let out_dir = tmp.path().join("det");
    let out = run_ok(&["detect", log.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("sampled"));

    let jsons: Vec<_> = fs::read_dir(out_dir.join("elements")).unwrap().collect();
    let pngs: Vec<_> = fs::read_dir(out_dir.join("annotated")).unwrap().collect();
    // frame 0 plus one sample per transition
    assert_eq!(jsons.len(), 3);
    assert_eq!(pngs.len(), 3);

    let fe: FrameElements =
        serde_json::from_str(&fs::read_to_string(out_dir.join("elements/f00000.json")).unwrap())
            .unwrap();
    assert!(!fe.elements.is_empty());
    let png = fs::read(out_dir.join("annotated/f00000.png")).unwrap();
    assert_eq!(&png[..8], b"\x89PNG\r\n\x1a\n");
}

#[test]
fn synth_validates_scripts() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("o");
    let od = out_dir.to_str().unwrap();

    // widget reaching past the right edge
    let bad = tmp.path().join("bad.json");
    fs::write(
        &bad,
        r#"{"width": 100, "height": 80, "frame_dt_ms": 50, "frames": [
            {"width": 100, "height": 80, "background": 0.1,
             "widgets": [{"rect_icon": {"rect": [90, 10, 20, 20], "shade": 0.9}}]}
        ]}"#,
    )
    .unwrap();
    let out = vislog(&["synth", bad.to_str().unwrap(), "--out", od]);
    assert_eq!(exit_code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("invalid input"));

    let garbled = tmp.path().join("garbled.json");
    fs::write(&garbled, "{not json").unwrap();
    assert_eq!(exit_code(&vislog(&["synth", garbled.to_str().unwrap(), "--out", od])), 2);

    assert_eq!(exit_code(&vislog(&["synth", "/no/such/spec.json", "--out", od])), 2);
    assert_eq!(exit_code(&vislog(&["synth", bad.to_str().unwrap(), "--demo", "--out", od])), 2);
    assert_eq!(exit_code(&vislog(&["synth", "--out", od])), 2);
}

#[test]
fn synth_spec_renders_and_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = tmp.path().join("spec.json");
    fs::write(&spec, serde_json::to_string(&transitions_log(2, 8)).unwrap()).unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    run_ok(&["synth", spec.to_str().unwrap(), "--out", a.to_str().unwrap()]);
    run_ok(&["synth", spec.to_str().unwrap(), "--out", b.to_str().unwrap()]);

    let mut names: Vec<String> = fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert!(names.contains(&"truth.json".to_string()));
    for name in &names {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name} differs between identical renders"
        );
    }
}

#[test]
fn mine_and_generate_are_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let mk = |name: &str, tokens: &[(&str, u64)]| {
        let events: Vec<serde_json::Value> = tokens
            .iter()
            .map(|(label, t)| {
                serde_json::json!({
                    "t_ms": t, "action": "click", "target_id": 0, "target_label": label
                })
            })
            .collect();
        let p = tmp.path().join(name);
        fs::write(
            &p,
            serde_json::to_string(&serde_json::json!({"log": name, "events": events})).unwrap(),
        )
        .unwrap();
        p
    };
    let one = mk("one.json", &[("open", 100), ("edit", 200), ("save", 300)]);
    let two = mk("two.json", &[("open", 100), ("edit", 200), ("quit", 300)]);

    let out_dir = tmp.path().join("mined");
    let out = run_ok(&[
        "mine",
        one.to_str().unwrap(),
        two.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("sequences: 2"));

    let patterns: Vec<vislog_core::mining::UsagePattern> =
        serde_json::from_str(&fs::read_to_string(out_dir.join("patterns.json")).unwrap()).unwrap();
    let shared = patterns
        .iter()
        .find(|p| p.tokens == ["click:open", "click:edit"])
        .expect("shared prefix mined");
    assert_eq!(shared.support, 2);

    let model = out_dir.join("model.json");
    let greedy1 = run_ok(&["generate", model.to_str().unwrap()]);
    let greedy2 = run_ok(&["generate", model.to_str().unwrap()]);
    assert_eq!(greedy1.stdout, greedy2.stdout);
    let sampled = |seed: &str| {
        run_ok(&[
            "generate",
            model.to_str().unwrap(),
            "--mode",
            "sample",
            "--seed",
            seed,
            "--count",
            "4",
        ])
        .stdout
    };
    assert_eq!(sampled("9"), sampled("9"));
}

#[test]
fn mine_rejects_malformed_input_naming_the_file() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("broken.json");
    fs::write(&bad, "][").unwrap();
    let out = vislog(&[
        "mine",
        bad.to_str().unwrap(),
        "--out",
        tmp.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("broken.json"));
}

#[test]
fn config_file_is_validated_and_applied() {
    let tmp = tempfile::tempdir().unwrap();
    let log = tmp.path().join("log");
    let spec = tmp.path().join("spec.json");
    fs::write(&spec, serde_json::to_string(&transitions_log(2, 10)).unwrap()).unwrap();
    run_ok(&["synth", spec.to_str().unwrap(), "--out", log.to_str().unwrap()]);

    let bad_cfg = tmp.path().join("bad.json");
    fs::write(&bad_cfg, r#"{"thetta": 0.01}"#).unwrap();
    let out = vislog(&[
        "analyze",
        log.to_str().unwrap(),
        "--config",
        bad_cfg.to_str().unwrap(),
        "--out",
        tmp.path().join("o1").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 2);

    // theta above every inter-frame MSE: no major events survive
    let quiet_cfg = tmp.path().join("quiet.json");
    fs::write(&quiet_cfg, r#"{"theta": 0.9}"#).unwrap();
    let out_dir = tmp.path().join("o2");
    run_ok(&[
        "analyze",
        log.to_str().unwrap(),
        "--config",
        quiet_cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    let parsed: InteractionsFile =
        serde_json::from_str(&fs::read_to_string(out_dir.join("interactions.json")).unwrap())
            .unwrap();
    assert!(parsed.events.is_empty());
}

#[test]
fn worker_count_does_not_change_output() {
    let tmp = tempfile::tempdir().unwrap();
    let log = tmp.path().join("log");
    let spec = tmp.path().join("spec.json");
    fs::write(&spec, serde_json::to_string(&transitions_log(3, 12)).unwrap()).unwrap();
    run_ok(&["synth", spec.to_str().unwrap(), "--out", log.to_str().unwrap()]);

    let run_with = |workers: &str, name: &str| {
        let out_dir = tmp.path().join(name);
        run_ok(&[
            "analyze",
            log.to_str().unwrap(),
            "--workers",
            workers,
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        fs::read(out_dir.join("interactions.json")).unwrap()
    };
    assert_eq!(run_with("1", "w1"), run_with("4", "w4"));
}
