use std::path::Path;
use std::process::{Command, Output};

fn zebra(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zebra"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove("OPENAI_API_KEY")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn generate_evaluate_analyze() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path();
    let o = zebra(out, &["generate", "--size", "2x3", "--size", "3x3", "--count", "12", "--seed", "5"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("en-houses-2x3-rh5/manifest.json").exists());

    let o = zebra(out, &["evaluate", "--dataset", "en-houses-3x3-rh5", "--mock", "oracle"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("a_puzzle=1.0000"));
    let o = zebra(out, &["evaluate", "--dataset", "en-houses-3x3-rh5", "--mock", "scrambler", "--mock-seed", "2"]);
    assert_eq!(code(&o), 0);

    let o = zebra(
        out,
        &[
            "analyze",
            "--dataset", "en-houses-3x3-rh5",
            "--dataset", "en-houses-2x3-rh5",
            "--run", "oracle=results/en-houses-3x3-rh5.mock-oracle.jsonl",
            "--run", "results/en-houses-3x3-rh5.mock-scrambler.jsonl",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["summaries.csv", "deltas.csv", "frequencies.csv", "a_cell.svg", "deltas.svg"] {
        assert!(out.join("report").join(f).exists(), "{f}");
    }
    let deltas = std::fs::read_to_string(out.join("report/deltas.csv")).unwrap();
    assert!(deltas.contains("en-houses-3x3-rh5.mock-scrambler - oracle"));

    // A second analyze into the same report directory needs --overwrite.
    let o = zebra(out, &["analyze", "--dataset", "en-houses-2x3-rh5"]);
    assert_eq!(code(&o), 4);
    let o = zebra(out, &["--overwrite", "analyze", "--dataset", "en-houses-2x3-rh5"]);
    assert_eq!(code(&o), 0);
}

#[test]
fn refuses_to_overwrite_datasets() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["generate", "--size", "2x2", "--count", "3", "--herrings", "1"];
    assert_eq!(code(&zebra(tmp.path(), &args)), 0);
    let o = zebra(tmp.path(), &args);
    assert_eq!(code(&o), 4);
    assert!(String::from_utf8_lossy(&o.stderr).contains("overwrite"));
    let mut forced = vec!["--overwrite"];
    forced.extend(args);
    assert_eq!(code(&zebra(tmp.path(), &forced)), 0);
}

#[test]
fn usage_and_validation_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path();
    assert_eq!(code(&zebra(out, &["generate", "--size", "1x3"])), 2);
    assert_eq!(code(&zebra(out, &["generate", "--size", "3"])), 2);
    assert_eq!(code(&zebra(out, &["generate", "--size", "3x3", "--lang", "xx"])), 3);
    assert_eq!(code(&zebra(out, &["generate", "--size", "2x2", "--herrings", "2", "--reduce-herrings", "3"])), 3);
    // Nothing was written by the failed runs.
    assert_eq!(std::fs::read_dir(out).unwrap().count(), 0);

    let o = zebra(out, &["validate-theme", "--lang", "da", "--size", "5x5"]);
    assert_eq!(code(&o), 0);
    let o = zebra(out, &["validate-theme", "--size", "9x2"]);
    assert_eq!(code(&o), 3);
    assert!(stdout(&o).contains("9x2"));
}

#[test]
fn missing_token_is_an_endpoint_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path();
    assert_eq!(code(&zebra(out, &["generate", "--size", "2x2", "--count", "2"])), 0);
    let o = zebra(out, &["evaluate", "--dataset", "en-houses-2x2-rh5"]);
    assert_eq!(code(&o), 5);
    assert!(String::from_utf8_lossy(&o.stderr).contains("OPENAI_API_KEY"));
    assert_eq!(code(&zebra(out, &["evaluate", "--dataset", "missing"])), 4);
}

#[test]
fn config_file_overrides_generation() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path();
    std::fs::write(
        out.join("cfg.json"),
        r#"{"generation": {"clue_weights": {"found_at": 1.0, "not_at": 0.0, "same_object": 0.0,
            "not_same_object": 0.0, "left_of": 0.0, "right_of": 0.0}}}"#,
    )
    .unwrap();
    let o = zebra(out, &["--config", "cfg.json", "generate", "--size", "2x2", "--count", "5", "--herrings", "0"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(out.join("en-houses-2x2-rh0/test.jsonl")).unwrap();
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        for item in v["items"].as_array().unwrap() {
            assert_eq!(item["clue_type"], "found_at");
        }
    }
    std::fs::write(out.join("bad.json"), r#"{"generaton": {}}"#).unwrap();
    assert_eq!(code(&zebra(out, &["--config", "bad.json", "validate-theme"])), 3);
}
