//! End-to-end tests of the `iqml` binary: verdict text, exit codes, JSON
//! output, and byte-for-byte determinism.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_iqml"))
}

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn sat_contradiction_is_unsat_exit_1() {
    let out = run(&["sat", "p & ~p"]);
    assert_eq!(stdout(&out), "UNSAT\n");
    assert_eq!(code(&out), 1);
}

#[test]
fn sat_prints_model_exit_0() {
    let out = run(&["sat", "<E>p & <A>~p"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.starts_with("SAT\nworld w0"), "got: {text}");
    assert!(text.contains("edge w0"));
}

#[test]
fn valid_axiom_a2_exit_0() {
    let out = run(&["valid", "[A](p->q) -> (<A>p -> <A>q)"]);
    assert_eq!(stdout(&out), "VALID\n");
    assert_eq!(code(&out), 0);
}

#[test]
fn invalid_formula_exit_1() {
    let out = run(&["valid", "p -> [A]p"]);
    assert_eq!(stdout(&out), "NOT VALID\n");
    assert_eq!(code(&out), 1);
}

#[test]
fn check_two_index_model() {
    let model = data("two_index.kmodel");
    let out = run(&["check", &model, "w", "[E]p"]);
    assert_eq!(stdout(&out), "true\n");
    assert_eq!(code(&out), 0);
    let out = run(&["check", &model, "w", "[A]p"]);
    assert_eq!(stdout(&out), "false\n");
    assert_eq!(code(&out), 1);
}

#[test]
fn oracle_finds_and_rejects() {
    let out = run(&["oracle", "<E>p & <A>~p", "--worlds", "3", "--indices", "2"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).starts_with("SAT\n"));
    let out = run(&["oracle", "p & ~p"]);
    assert_eq!(stdout(&out), "NO MODEL WITHIN BOUNDS\n");
    assert_eq!(code(&out), 1);
}

#[test]
fn oracle_guard_env_override() {
    let out = bin()
        .args(["oracle", "p", "--worlds", "4", "--indices", "2"])
        .env("IQML_ORACLE_GUARD", "10")
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("guard"), "stderr: {err}");
}

#[test]
fn bisim_with_explanation() {
    let merged = data("merged.kmodel");
    let split = data("split.kmodel");
    let out = run(&["bisim", &merged, "w1", &split, "w2", "--explain"]);
    assert_eq!(code(&out), 1);
    let text = stdout(&out);
    assert!(text.starts_with("NOT BISIMILAR\ndistinguishing: "), "got: {text}");
    let out = run(&["bisim", &merged, "w1", &merged, "w1"]);
    assert_eq!(stdout(&out), "BISIMILAR\n");
    assert_eq!(code(&out), 0);
}

#[test]
fn nbisim_depths() {
    let merged = data("merged.kmodel");
    let split = data("split.kmodel");
    let out = run(&["nbisim", &merged, "w1", &split, "w2", "--n", "0"]);
    assert_eq!(stdout(&out), "N-BISIMILAR\n");
    assert_eq!(code(&out), 0);
    let out = run(&["nbisim", &merged, "w1", &split, "w2", "--n", "1"]);
    assert_eq!(stdout(&out), "NOT N-BISIMILAR\n");
    assert_eq!(code(&out), 1);
}

#[test]
fn distinguish_and_charform() {
    let merged = data("merged.kmodel");
    let split = data("split.kmodel");
    let out = run(&["distinguish", &merged, "w1", &split, "w2", "--max-n", "2"]);
    assert_eq!(code(&out), 0);
    assert!(!stdout(&out).trim().is_empty());
    let out = run(&["distinguish", &merged, "w1", &merged, "w1", "--max-n", "2"]);
    assert_eq!(stdout(&out), "NONE\n");
    assert_eq!(code(&out), 1);
    let out = run(&["charform", &merged, "a", "--n", "0"]);
    assert_eq!(stdout(&out), "p\n");
    assert_eq!(code(&out), 0);
}

#[test]
fn translate_uses_two_world_variables() {
    let out = run(&["translate", "[E]p"]);
    assert_eq!(stdout(&out), "EXISTS-I t FORALL-W y (R(x,t,y) -> Qp(y))\n");
    assert_eq!(code(&out), 0);
}

#[test]
fn ef_winners() {
    let merged = data("merged.kmodel");
    let split = data("split.kmodel");
    let out = run(&["ef", &merged, "w1", &split, "w2", "--qx", "2", "--qt", "1"]);
    assert_eq!(stdout(&out), "SPOILER\n");
    assert_eq!(code(&out), 1);
    let out = run(&["ef", &merged, "w1", &merged, "w1", "--qx", "2", "--qt", "1"]);
    assert_eq!(stdout(&out), "DUPLICATOR\n");
    assert_eq!(code(&out), 0);
}

#[test]
fn prove_bundled_derivation() {
    let proof = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../iqml/testdata/conj_distribution.proof")
        .to_string_lossy()
        .into_owned();
    let out = run(&["prove", &proof]);
    assert_eq!(stdout(&out), "ACCEPTED\n");
    assert_eq!(code(&out), 0);
}

#[test]
fn prove_rejects_bad_proof() {
    let dir = std::env::temp_dir().join("iqml-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("bad.proof");
    std::fs::write(&path, "1: p -> q ; A0\n").unwrap();
    let out = run(&["prove", path.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).starts_with("REJECTED line 1:"));
}

#[test]
fn json_output_shape() {
    let out = run(&["--format", "json", "sat", "p & ~p"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["command"], "sat");
    assert_eq!(v["verdict"], "unsat");
    let out = run(&["--format", "json", "sat", "<E>p"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["verdict"], "sat");
    let model = v["model"].as_str().unwrap();
    assert!(model.contains("world w0"));
    assert_eq!(v["point"], "w0");
    let out = run(&["--format", "json", "check", &data("two_index.kmodel"), "w", "[E]p"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["value"], true);
}

#[test]
fn parse_errors_exit_2() {
    let out = run(&["sat", "[E"]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("offset 2"), "stderr: {err}");
    let out = run(&["check", "no_such_file.kmodel", "w", "p"]);
    assert_eq!(code(&out), 2);
    let out = run(&["nonsense-command"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn gen_commands_are_seeded() {
    let a = run(&["gen-formula", "--seed", "7", "--depth", "2"]);
    let b = run(&["gen-formula", "--seed", "7", "--depth", "2"]);
    assert_eq!(stdout(&a), stdout(&b));
    assert_eq!(code(&a), 0);
    let a = run(&["gen-model", "--seed", "3"]);
    let b = run(&["gen-model", "--seed", "3"]);
    assert_eq!(stdout(&a), stdout(&b));
    // Generated artifacts feed back into the other commands.
    let dir = std::env::temp_dir().join("iqml-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("gen.kmodel");
    std::fs::write(&path, stdout(&a)).unwrap();
    let out = run(&["check", path.to_str().unwrap(), "w1", "true"]);
    assert_eq!(code(&out), 0);
}

#[test]
fn identical_invocations_are_byte_identical() {
    for args in [
        vec!["sat", "<E>p & <A>~p"],
        vec!["oracle", "<E>p & <A>q", "--worlds", "2", "--indices", "2"],
        vec!["charform", &*Box::leak(data("merged.kmodel").into_boxed_str()), "w1", "--n", "2"],
    ] {
        let a = run(&args);
        let b = run(&args);
        assert_eq!(a.stdout, b.stdout, "nondeterministic output for {args:?}");
        assert_eq!(a.status.code(), b.status.code());
    }
}
