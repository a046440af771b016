mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::fixtures;

fn qgrt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qgrt")).args(args).output().unwrap()
}

fn qvm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qvm")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn call(dir: &Path, kernel: &Path, op: &str, args_json: &str, extra: &[&str]) -> Output {
    let config = fixtures().join("platform.qfg");
    let (out, desc) = (dir.join("result.bin"), dir.join("result.desc"));
    let mut argv = vec!["call", "--kernel", s(kernel), "--op", op, "--args-json", args_json, "--config", s(&config)];
    argv.extend(["--seed", "7", "--out", s(&out), "--desc", s(&desc)]);
    argv.extend(extra);
    qgrt(&argv)
}

fn decode(dir: &Path, format: &str) -> Output {
    let (out, desc) = (dir.join("result.bin"), dir.join("result.desc"));
    qgrt(&["decode", "--bin", s(&out), "--desc", s(&desc), "--format", format])
}

#[test]
fn call_writes_result_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = call(dir.path(), &fixtures().join("kernel.qu"), "sum_random", "[[2,6,8], false]", &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read(dir.path().join("result.bin")).unwrap(), [16, 0, 0, 0, 0, 0, 0, 0]);
    assert_eq!(std::fs::read_to_string(dir.path().join("result.desc")).unwrap(), "(int,int)\n");
    assert_eq!(stdout(&decode(dir.path(), "text")), "(16, 0)\n");
    assert_eq!(stdout(&decode(dir.path(), "json")), "[16,0]\n");
}

#[test]
fn f32_doubles_descriptor() {
    let dir = tempfile::tempdir().unwrap();
    let o = call(dir.path(), &fixtures().join("ipe.qu"), "ipe", "[3]", &["--f32-doubles"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read(dir.path().join("result.bin")).unwrap(), 0.625f32.to_le_bytes());
    assert_eq!(std::fs::read_to_string(dir.path().join("result.desc")).unwrap(), "double\nf32-doubles\n");
    assert_eq!(stdout(&decode(dir.path(), "text")), "0.625\n");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let kernel = fixtures().join("kernel.qu");
    assert_eq!(call(dir.path(), &kernel, "nope", "[]", &[]).status.code(), Some(2));
    assert_eq!(call(dir.path(), &kernel, "sum_random", "[[1,\"x\"], false]", &[]).status.code(), Some(2));
    assert_eq!(call(dir.path(), &dir.path().join("missing.qu"), "f", "[]", &[]).status.code(), Some(2));

    let bad = dir.path().join("bad.qu");
    std::fs::write(&bad, "operation f(): int { return true; }\n").unwrap();
    let o = call(dir.path(), &bad, "f", "[]", &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error[E0005]"));

    let pulse = dir.path().join("pulse.qu");
    std::fs::write(
        &pulse,
        "import operations.*\noperation p(): unit {\n    using(q: qubit) {\n        Y90p(q);\n    }\n}\n",
    )
    .unwrap();
    let sp = fixtures();
    let o = call(dir.path(), &pulse, "p", "[]", &["--search-path", s(&sp)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = call(dir.path(), &pulse, "p", "[]", &["--search-path", s(&sp), "--strict-pulse"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));

    std::fs::write(dir.path().join("result.desc"), "int[\n").unwrap();
    assert_eq!(decode(dir.path(), "text").status.code(), Some(3));
    std::fs::write(dir.path().join("result.desc"), "int\n").unwrap();
    std::fs::write(dir.path().join("result.bin"), [1u8]).unwrap();
    assert_eq!(decode(dir.path(), "text").status.code(), Some(3));
}

#[test]
fn compile_then_run_on_the_vm() {
    let dir = tempfile::tempdir().unwrap();
    let asm = dir.path().join("rus.qasm");
    let config = fixtures().join("platform.qfg");
    let kernel = fixtures().join("rus.qu");
    let o = qgrt(&["compile", "--kernel", s(&kernel), "--op", "rus", "--config", s(&config), "--out", s(&asm)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    let trace = dir.path().join("trace.jsonl");
    let o = qvm(&["run", s(&asm), "--config", s(&config), "--seed", "7", "--trace", s(&trace)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    // Same program and seed through the runtime.
    let cdir = tempfile::tempdir().unwrap();
    assert_eq!(call(cdir.path(), &kernel, "rus", "[]", &[]).status.code(), Some(0));
    assert_eq!(stdout(&o), stdout(&decode(cdir.path(), "text")));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("cycles: "));

    let text = std::fs::read_to_string(&trace).unwrap();
    let lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(lines.windows(2).all(|w| w[0]["cycle"].as_u64() <= w[1]["cycle"].as_u64()));
    assert_eq!(lines.last().unwrap()["instruction"], "halt");
    assert!(lines.iter().any(|l| l["instruction"].as_str().unwrap().starts_with("measure") && l["outcome"].is_u64()));

    let o = qvm(&["run", s(&asm), "--config", s(&config), "--seed", "7", "--max-cycles", "10"]);
    assert_eq!(o.status.code(), Some(3));
    std::fs::write(&asm, "bogus\n").unwrap();
    assert_eq!(qvm(&["run", s(&asm), "--config", s(&config), "--seed", "0"]).status.code(), Some(2));
}

#[test]
fn dumps() {
    let config = fixtures().join("platform.qfg");
    let kernel = fixtures().join("t2.qu");
    let o = qgrt(&[
        "compile",
        "--kernel",
        s(&kernel),
        "--op",
        "t2",
        "--args-json",
        "[[200,400], true]",
        "--config",
        s(&config),
        "--dump-schedule",
        "--dump-ir",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.contains("measure"), "{out}");
    assert!(out.contains("halt"));
}
