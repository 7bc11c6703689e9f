use std::path::Path;
use std::process::{Command, Output};

fn csrminer(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_csrminer"))
        .current_dir(dir)
        .env_remove("CSRMINER_CONFIG")
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

const SMALL: &str = r#"
models = ["linear", "cart"]
[sensitivity]
enabled = false
[synth]
n_records = 600
"#;

#[test]
fn zero_records_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = csrminer(dir.path(), &["synth", "--n", "0"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_records"));
}

#[test]
fn bad_flags_are_usage_errors_and_help_is_not() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&csrminer(dir.path(), &["synth", "--bogus"])), 1);
    assert_eq!(
        code(&csrminer(dir.path(), &["--target", "sales", "synth"])),
        1
    );
    assert_eq!(code(&csrminer(dir.path(), &["--help"])), 0);
}

#[test]
fn missing_input_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = csrminer(dir.path(), &["clean", "nope.csv"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("load"));
}

#[test]
fn synth_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        let o = csrminer(
            dir.path(),
            &["--seed", "7", "--out", out, "synth", "--n", "800"],
        );
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = std::fs::read(dir.path().join("a/records.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b/records.csv")).unwrap();
    assert_eq!(a, b);
    assert_eq!(String::from_utf8_lossy(&a).lines().count(), 801);
}

#[test]
fn paper_defaults_match_the_census_size() {
    let dir = tempfile::tempdir().unwrap();
    let o = csrminer(
        dir.path(),
        &[
            "--target",
            "customer-service",
            "--seed",
            "7",
            "synth",
            "--paper-defaults",
        ],
    );
    assert_eq!(code(&o), 0);
    let csv = std::fs::read_to_string(dir.path().join("csrminer-out/records.csv")).unwrap();
    assert_eq!(csv.lines().count(), 14671 + 1);
    let truth = std::fs::read_to_string(dir.path().join("csrminer-out/ground_truth.txt")).unwrap();
    assert!(truth.starts_with("Product,"));
}

#[test]
fn scores_question_rows() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("calls.csv"),
        "agent_id,date,kind,product_id,q1,q2,q3,q4,q5,q6,q7,q8,q9,q10,q11\n\
         7,09/01/2001,customer-service,226,3,4,1,0,0,0,0,0,0,0,0\n\
         8,09/01/2001,customer-service,226,0,0,0,0,0,0,0,0,0,0,0\n\
         9,09/01/2001,customer-service,226,5,5,5,5,5,5,5,5,5,5,4\n",
    )
    .unwrap();
    let o = csrminer(dir.path(), &["--out", ".", "score", "calls.csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let scores = std::fs::read_to_string(dir.path().join("scores.csv")).unwrap();
    assert!(
        scores.contains("7,09/01/2001,customer-service,1,8,3,2.67,Met Some"),
        "{scores}"
    );
    assert!(scores.contains(",4.91,Far Exceeded"), "{scores}");
    let log = std::fs::read_to_string(dir.path().join("score_rejections.csv")).unwrap();
    assert!(log.contains("applicable"), "{log}");
}

#[test]
fn run_respects_model_selection_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("small.toml"), SMALL).unwrap();
    let o = csrminer(
        dir.path(),
        &[
            "--config",
            "small.toml",
            "--models",
            "cart",
            "--out",
            "one",
            "run",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let matrix = std::fs::read_to_string(dir.path().join("one/evaluation.csv")).unwrap();
    assert!(matrix.lines().skip(1).all(|l| l.contains(",CART,")));
    assert!(dir.path().join("one/rejections.csv").exists());

    // the environment variable stands in for --config
    let o = Command::new(env!("CARGO_BIN_EXE_csrminer"))
        .current_dir(dir.path())
        .env("CSRMINER_CONFIG", "one/config.toml")
        .args(["--out", "two", "run"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in [
        "manifest.json",
        "evaluation.csv",
        "evaluation.txt",
        "models/met-1_cart.json",
    ] {
        let a = std::fs::read(dir.path().join("one").join(f)).unwrap();
        let b = std::fs::read(dir.path().join("two").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
}
