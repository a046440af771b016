mod common;

use std::path::Path;

use common::gen::{random_descriptor, random_value};
use common::ref_codec::{bit_equal, reference_encode};
use common::{fixtures, ints, platform, rt};
use quingo::codec::Descriptor;
use quingo::frontend::FsProvider;
use quingo::ir::Value;
use quingo::runtime::{
    call_kernel, compile_source, read_result, run_compiled, Phase, RunHandle, RuntimeError, Session,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn kernel(name: &str) -> std::path::PathBuf {
    fixtures().join(name)
}

#[test]
fn sum_random_static() {
    let h = call_kernel(&kernel("kernel.qu"), "sum_random", &[ints(&[2, 6, 8]), Value::Bool(false)], &rt(3)).unwrap();
    assert_eq!(read_result(&h).unwrap(), Value::Tuple(vec![Value::Int(16), Value::Int(0)]));
    let block = h.result_block().unwrap();
    assert_eq!(block.bytes, [16, 0, 0, 0, 0, 0, 0, 0]);
    assert_eq!(block.desc_text(), "(int,int)\n");
}

#[test]
fn phases_run_once_in_order() {
    for (k, op, args) in common::fixture_calls() {
        let h = call_kernel(&kernel(k), op, &args, &rt(1)).unwrap();
        let nums: Vec<u8> = h.phases.iter().map(|p| *p as u8).collect();
        assert_eq!(nums, [3, 4, 5, 6], "{op}");
    }
}

#[test]
fn errors_carry_their_phase() {
    let e = call_kernel(&kernel("kernel.qu"), "nope", &[], &rt(0)).unwrap_err();
    assert!(matches!(&e, RuntimeError::UnknownKernelOp { op, .. } if op == "nope"), "{e}");
    assert_eq!(e.phase(), Some(Phase::PreExecution));

    let e = call_kernel(&kernel("kernel.qu"), "sum_random", &[Value::Int(1)], &rt(0)).unwrap_err();
    assert_eq!(e.phase(), Some(Phase::PreExecution), "{e}");

    let e = call_kernel(&kernel("missing.qu"), "f", &[], &rt(0)).unwrap_err();
    assert!(matches!(e, RuntimeError::Io { .. }));
    assert!(e.is_compile_error());

    let mut cfg = rt(0);
    cfg.backend = "hw0".into();
    let e = call_kernel(&kernel("kernel.qu"), "sum_random", &[ints(&[1]), Value::Bool(false)], &cfg).unwrap_err();
    assert!(matches!(&e, RuntimeError::UnknownBackend(b) if b == "hw0"));

    // A pulse runs as identity unless strict mode rejects it on the machine.
    let src = "import operations.*\noperation p(): unit {\n    using(q: qubit) {\n        Y90p(q);\n    }\n}\n";
    let compiled = compile(src, "p", &[], &rt(0));
    assert!(run_compiled(compiled.clone(), platform(), &rt(0), RunHandle::pending()).is_ok());
    let mut strict = rt(0);
    strict.strict_pulse = true;
    let e = run_compiled(compiled, platform(), &strict, RunHandle::pending()).unwrap_err();
    assert_eq!(e.phase(), Some(Phase::QuantumExecution), "{e}");
    assert!(!e.is_compile_error());
}

#[test]
fn not_completed() {
    let h = RunHandle::pending();
    assert!(!h.is_completed());
    assert!(matches!(read_result(&h), Err(RuntimeError::NotCompleted)));
    let mut s = Session::new(rt(0));
    assert!(matches!(s.read_result(), Err(RuntimeError::NotCompleted)));
    // A failed call leaves no result behind.
    s.call_kernel(&kernel("kernel.qu"), "sum_random", &[ints(&[2, 6, 8]), Value::Bool(false)]).unwrap();
    assert!(s.read_result().is_ok());
    assert!(s.call_kernel(&kernel("kernel.qu"), "nope", &[]).is_err());
    assert!(matches!(s.read_result(), Err(RuntimeError::NotCompleted)));
}

#[test]
fn unit_result() {
    let src = "import operations.*\noperation u(): unit {\n    using(q: qubit) {\n        init(q);\n        H(q);\n    }\n}\n";
    let c = compile(src, "u", &[], &rt(0));
    let h = run_compiled(c, platform(), &rt(0), RunHandle::pending()).unwrap();
    assert_eq!(read_result(&h).unwrap(), Value::Unit);
    assert!(h.result_block().unwrap().bytes.is_empty());
}

#[test]
fn json_arguments() {
    let mut s = Session::new(rt(5));
    s.call_kernel_json(&kernel("kernel.qu"), "sum_random", "[[2, 6, 8], false]").unwrap();
    assert_eq!(s.read_result().unwrap(), Value::Tuple(vec![Value::Int(16), Value::Int(0)]));
    assert!(s.call_kernel_json(&kernel("kernel.qu"), "sum_random", "[[2, 6, 8.5], false]").is_err());
    assert!(s.call_kernel_json(&kernel("kernel.qu"), "sum_random", "[[2, 6, 8]]").is_err());
    assert!(s.call_kernel_json(&kernel("kernel.qu"), "sum_random", "[[2147483648], false]").is_err());
}

#[test]
fn generated_main_is_deterministic() {
    let args = [ints(&[2, 6, 8]), Value::Bool(true)];
    let mains: Vec<String> = (0..3)
        .map(|seed| call_kernel(&kernel("kernel.qu"), "sum_random", &args, &rt(seed)).unwrap())
        .map(|h| h.compiled.unwrap().main_source)
        .collect();
    assert!(mains.windows(2).all(|w| w[0] == w[1]));
    assert!(mains[0].contains("int[] var0_arr = {2, 6, 8};"), "{}", mains[0]);
    assert!(mains[0].contains("return sum_random(var0_arr,var1_bool);"), "{}", mains[0]);
}

#[test]
fn f32_doubles_mode() {
    let mut cfg = rt(0);
    cfg.f32_doubles = true;
    let h = call_kernel(&kernel("ipe.qu"), "ipe", &[Value::Int(3)], &cfg).unwrap();
    let block = h.result_block().unwrap();
    assert_eq!(block.bytes, 0.625f32.to_le_bytes());
    assert_eq!(block.desc_text(), "double\nf32-doubles\n");
    assert_eq!(read_result(&h).unwrap(), Value::Double(0.625));
}

#[test]
fn concurrent_handles_are_independent() {
    let args = [ints(&[2, 6, 8]), Value::Bool(true)];
    let serial: Vec<Vec<u8>> = (0..8)
        .map(|s| {
            call_kernel(&kernel("kernel.qu"), "sum_random", &args, &rt(s))
                .unwrap()
                .result_block()
                .unwrap()
                .bytes
                .clone()
        })
        .collect();
    let parallel: Vec<Vec<u8>> = std::thread::scope(|scope| {
        let hs: Vec<_> = (0..8)
            .map(|s| {
                let args = args.clone();
                scope.spawn(move || {
                    call_kernel(&kernel("kernel.qu"), "sum_random", &args, &rt(s))
                        .unwrap()
                        .result_block()
                        .unwrap()
                        .bytes
                        .clone()
                })
            })
            .collect();
        hs.into_iter().map(|h| h.join().unwrap()).collect()
    });
    assert_eq!(serial, parallel);
}

fn compile(src: &str, op: &str, args: &[Value], cfg: &quingo::runtime::RuntimeConfig) -> quingo::runtime::Compiled {
    let path = kernel("inline.qu");
    compile_source(&path, src, op, args, &platform(), cfg, &FsProvider, &mut Vec::new())
        .unwrap_or_else(|e| panic!("{e}\n{src}"))
}

fn type_text(d: &Descriptor) -> String {
    match d {
        Descriptor::Unit => "unit".into(),
        Descriptor::Bool => "bool".into(),
        Descriptor::Int => "int".into(),
        Descriptor::Double => "double".into(),
        Descriptor::Tuple(ds) => format!("({})", ds.iter().map(type_text).collect::<Vec<_>>().join(", ")),
        Descriptor::Array(e) => format!("{}[]", type_text(e)),
    }
}

/// A kernel whose result is fixed at compile time reduces to the result
/// epilogue, and the machine writes exactly the encoded block.
#[test]
fn constant_results_match_reference_encoding() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..200 {
        let d = random_descriptor(&mut rng, 3);
        let v = random_value(&mut rng, &d);
        let ty = type_text(&d);
        let src = format!("operation id(v: {ty}): {ty} {{\n    return v;\n}}\n");
        let c = compile(&src, "id", std::slice::from_ref(&v), &rt(0));
        assert!(!c.asm.contains("qop") && !c.asm.contains("measure"), "case {case}");
        let h = run_compiled(c, platform(), &rt(case), RunHandle::pending()).unwrap();
        let want = reference_encode(&v, &d);
        let block = h.result_block().unwrap();
        assert_eq!(block.bytes, want, "case {case}: {ty} = {v}");
        assert!(bit_equal(&read_result(&h).unwrap(), &v));
    }
}

#[test]
fn search_paths_after_kernel_dir() {
    let dir = tempfile::tempdir().unwrap();
    let lib = dir.path().join("lib");
    std::fs::create_dir(&lib).unwrap();
    std::fs::write(lib.join("helpers.qu"), "package helpers;\noperation seven(): int { return 7; }\n").unwrap();
    let k = dir.path().join("k.qu");
    std::fs::write(&k, "import helpers.*\noperation f(): int { return seven(); }\n").unwrap();
    let mut cfg = rt(0);
    assert!(call_kernel(&k, "f", &[], &cfg).is_err());
    cfg.search_paths.push(lib);
    let h = call_kernel(Path::new(&k), "f", &[], &cfg).unwrap();
    assert_eq!(read_result(&h).unwrap(), Value::Int(7));
}
