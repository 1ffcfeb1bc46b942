use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_prm-decode"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn gen_then_decode_then_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    let c = corpus.to_str().unwrap();
    stdout(&run(&[
        "--seed",
        "4",
        "--out",
        c,
        "gen",
        "--count",
        "12",
        "--image-size",
        "64",
        "--resolution",
        "16",
    ]));
    assert!(corpus.join("manifest.json").exists());

    let map = corpus.join("item000000_00.hmap");
    let doc: serde_json::Value = serde_json::from_str(&stdout(&run(&[
        "decode",
        map.to_str().unwrap(),
        "--decoder",
        "igno",
        "--anchors",
    ])))
    .unwrap();
    assert_eq!(doc["decoder"], "igno");
    assert_eq!(doc["anchors"].as_array().unwrap().len(), 10);

    let csv = stdout(&run(&["--format", "csv", "sweep", "--corpus", c]));
    assert!(csv.starts_with("resolution,decoder,mean_nme,std_nme,mean_px_error,throughput,latency,failures"));
    assert_eq!(csv.lines().count(), 7);

    let losses: serde_json::Value =
        serde_json::from_str(&stdout(&run(&["losses", "--pred", c, "--gt", c, "--k", "5"]))).unwrap();
    assert_eq!(losses["combined"]["value"], 0.0);
}

#[test]
fn sweep_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.json");
    std::fs::write(
        &cfg,
        r#"{"resolutions": [8], "decoders": ["onehot", "pppsc"],
            "corpus": {"source": "generate", "count": 20, "image_size": 64, "seed": 1}}"#,
    )
    .unwrap();
    let out = dir.path().join("report.md");
    stdout(&run(&[
        "--config",
        cfg.to_str().unwrap(),
        "--format",
        "markdown",
        "--out",
        out.to_str().unwrap(),
        "sweep",
    ]));
    let md = std::fs::read_to_string(&out).unwrap();
    assert!(md.contains("| 8x8 | pppsc |"));
}

#[test]
fn bad_inputs_exit_nonzero() {
    assert!(!run(&["decode", "/nonexistent.hmap"]).status.success());
    assert!(!run(&["decode", "x.hmap", "--decoder", "dark"]).status.success());
    assert!(!run(&["gen", "--count", "3"]).status.success());
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/bad_token.pts");
    assert!(!run(&["decode", fixture.to_str().unwrap()]).status.success());
}
