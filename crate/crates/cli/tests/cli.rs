//! End-to-end checks of the command-line tool: the bundled corpus runs
//! with its documented verdicts and exit codes, malformed input is
//! rejected fail-fast, and reports are deterministic.

use std::process::Command;

use aeds::{bundled_examples, run_problem, CommandKind, Overrides, ProblemFile};

fn problems_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("problems")
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_aeds"))
}

#[test]
fn bundled_corpus_runs_with_documented_verdicts() {
    for example in bundled_examples() {
        let file = ProblemFile::parse(example.content)
            .unwrap_or_else(|e| panic!("{} does not parse: {e}", example.name));
        let opts = Overrides {
            max_degree: example.max_degree,
            ..Overrides::default()
        };
        let report = run_problem(example.command, &file, example.name, "sha256:test", &opts)
            .unwrap_or_else(|e| panic!("{}: {e}", example.name));
        assert_eq!(
            report.exit_code(),
            example.expected_exit,
            "{}: verdict {}",
            example.name,
            report.verdict
        );
    }
}

#[test]
fn bundled_files_on_disk_match_embedded_corpus() {
    for example in bundled_examples() {
        let path = problems_dir().join(format!("{}.toml", example.name));
        let on_disk = std::fs::read_to_string(&path)
            .unwrap_or_else(|e| panic!("missing {}: {e}", path.display()));
        assert_eq!(on_disk, example.content, "{} diverged from disk", example.name);
    }
}

#[test]
fn heisenberg_solve_exits_one_with_documented_verdict() {
    let out = bin()
        .args(["solve", "--max-degree", "0"])
        .arg(problems_dir().join("heisenberg.toml"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(
        text.contains("nullspace nonempty but all singular"),
        "unexpected output:\n{text}"
    );
}

#[test]
fn r1_helmholtz_exits_zero() {
    let out = bin()
        .arg("helmholtz")
        .arg(problems_dir().join("r1_canonical.toml"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn antisymmetry_failure_exits_one() {
    let dir = std::env::temp_dir().join("aeds-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("broken.toml");
    std::fs::write(
        &path,
        r#"
[chart]
coords = ["x"]

[algebroid]
rank = 2
anchor = [["0"], ["0"]]
[[algebroid.structure]]
alpha = 1
beta = 2
gamma = 1
value = "1"
[[algebroid.structure]]
alpha = 2
beta = 1
gamma = 1
value = "1"
"#,
    )
    .unwrap();
    let out = bin().arg("validate").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("antisymmetry"));
}

#[test]
fn missing_file_and_unknown_key_exit_two() {
    let out = bin()
        .arg("validate")
        .arg(problems_dir().join("does-not-exist.toml"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    let dir = std::env::temp_dir().join("aeds-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("unknown-key.toml");
    std::fs::write(
        &path,
        "[chart]\ncoords = [\"x\"]\nnot_a_key = 1\n\n[algebroid]\nrank = 1\nanchor = [[\"1\"]]\n",
    )
    .unwrap();
    let out = bin().arg("validate").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("not_a_key"), "stderr: {err}");
}

#[test]
fn json_flag_emits_versioned_report() {
    let out = bin()
        .args(["ideal-check", "--json"])
        .arg(problems_dir().join("radial-atiyah.toml"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let value: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(value["report_version"], 1);
    assert_eq!(value["verdict"], "pass");
    assert!(value["input_digest"]
        .as_str()
        .unwrap()
        .starts_with("sha256:"));
}

#[test]
fn reports_are_byte_identical_across_runs() {
    for example in bundled_examples() {
        let file = ProblemFile::parse(example.content).unwrap();
        let opts = Overrides {
            max_degree: example.max_degree,
            ..Overrides::default()
        };
        let a = run_problem(example.command, &file, example.name, "sha256:test", &opts).unwrap();
        let b = run_problem(example.command, &file, example.name, "sha256:test", &opts).unwrap();
        assert_eq!(a.to_json(), b.to_json(), "{} report drifted", example.name);
    }
}

#[test]
fn list_examples_names_the_corpus() {
    let out = bin().arg("list-examples").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for name in [
        "semilinear",
        "radial-atiyah",
        "radial-manifold",
        "r1_canonical",
        "heisenberg",
        "so3_canonical",
    ] {
        assert!(text.contains(name), "listing lacks {name}:\n{text}");
    }
}

#[test]
fn cli_overrides_change_the_sampling_block() {
    let out = bin()
        .args(["helmholtz", "--json", "--seed", "7", "--samples", "32"])
        .arg(problems_dir().join("r1_canonical.toml"))
        .output()
        .unwrap();
    let value: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(value["sampling"]["seed"], 7);
    assert_eq!(value["sampling"]["count"], 32);
}
