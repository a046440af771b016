mod common;

use quingo::frontend::{check, CompileInput, ErrorCode, FrontendError, MemProvider};

const OPERATIONS: &str = include_str!("../fixtures/operations.qu");

fn provider(extra: &[(&str, &str)]) -> MemProvider {
    extra
        .iter()
        .fold(MemProvider::default().with("lib/operations.qu", OPERATIONS), |p, (path, text)| p.with(*path, *text))
}

fn check_with(src: &str, extra: &[(&str, &str)]) -> Result<(), FrontendError> {
    let input = CompileInput { roots: vec![("kernel.qu".into(), src.into())], search_paths: vec!["lib".into()] };
    check(&input, &provider(extra), &common::platform(), Some("kernel.f")).map(|_| ())
}

fn fails(src: &str, extra: &[(&str, &str)]) -> FrontendError {
    match check_with(src, extra) {
        Ok(()) => panic!("accepted:\n{src}"),
        Err(e) => e,
    }
}

type Case<'a> = (&'a str, &'a [(&'a str, &'a str)], ErrorCode, &'a str);

const LIB_A: (&str, &str) = ("lib/a.qu", "package a;\noperation g(): int { return 1; }\n");
const LIB_B: (&str, &str) = ("lib/b.qu", "package b;\noperation g(): int { return 2; }\n");

#[test]
fn one_negative_per_code() {
    let cases: &[Case] = &[
        ("operation f(): int {\n    return 1 $ 2;\n}\n", &[], ErrorCode::Lex, "kernel.qu:2:14"),
        ("operation f(): int {\n    return 1\n}\n", &[], ErrorCode::Parse, "kernel.qu:3:1"),
        ("import nowhere.*\noperation f(): int { return 1; }\n", &[], ErrorCode::UnresolvedImport, "kernel.qu:1:1"),
        ("import a.*\nimport b.*\noperation f(): int { return 1; }\n", &[LIB_A, LIB_B], ErrorCode::AmbiguousName, "kernel.qu:2:1"),
        ("operation f(): int {\n    int x = true;\n    return x;\n}\n", &[], ErrorCode::Type, "kernel.qu:2:"),
        (
            "operation g(): int { return 1; }\noperation f(): int {\n    timer t;\n    int x = g() @{t >= 10ns};\n    return x;\n}\n",
            &[],
            ErrorCode::TimingOnClassical,
            "kernel.qu:4:",
        ),
        (
            "import operations.*\noperation f(): unit {\n    using(q: qubit) {\n        H(q, q);\n    }\n}\n",
            &[],
            ErrorCode::Arity,
            "kernel.qu:4:",
        ),
        ("operation f(): int {\n    return y;\n}\n", &[], ErrorCode::UnresolvedName, "kernel.qu:2:12"),
        ("operation f(): int {\n    int x = 1;\n    int x = 2;\n    return x;\n}\n", &[], ErrorCode::Duplicate, "kernel.qu:3:"),
        ("opaque Foo(q: qubit): unit;\noperation f(): int { return 1; }\n", &[], ErrorCode::ConfigMismatch, "kernel.qu:1:8"),
    ];
    for (src, extra, code, at) in cases {
        let e = fails(src, extra);
        assert_eq!(e.code(), *code, "{}", e.rendered);
        assert!(e.rendered.starts_with(at), "{code}: `{}` does not start with `{at}`", e.rendered);
        assert!(e.rendered.contains(&format!("error[{}]", code.as_str())), "{}", e.rendered);
    }
}

#[test]
fn more_negatives() {
    let cases: &[(&str, ErrorCode)] = &[
        // An opaque whose signature disagrees with the configuration.
        ("opaque H(q: qubit, theta: double): unit;\noperation f(): int { return 1; }\n", ErrorCode::ConfigMismatch),
        ("operation f(): qubit { using(q: qubit) { } }\n", ErrorCode::Type),
        ("operation f(): int { return 1.5; }\n", ErrorCode::Type),
        ("operation f(): int { int x = 1; return x + true; }\n", ErrorCode::Type),
        ("operation g(a: int): int { return a; }\noperation f(): int { return g(1, 2); }\n", ErrorCode::Arity),
        ("operation f(): int { return g(); }\n", ErrorCode::UnresolvedName),
        (
            "operation g(): int { return 1; }\noperation g(): int { return 2; }\noperation f(): int { return 1; }\n",
            ErrorCode::Duplicate,
        ),
        ("import a.h\noperation f(): int { return 1; }\n", ErrorCode::UnresolvedImport),
        ("import a.g\nimport b.*\noperation f(): int { return 1; }\n", ErrorCode::AmbiguousName),
    ];
    for (src, code) in cases {
        let e = fails(src, &[LIB_A, LIB_B]);
        assert_eq!(e.code(), *code, "{src}\n{}", e.rendered);
    }
}

#[test]
fn accepted_programs() {
    let ok = [
        "import a.*\noperation f(): int { return g(); }\n",
        "import a.g\nimport a.*\noperation f(): int { return g(); }\n",
        "import config.json.*\nimport operations.*\noperation f(): bool {\n    bool r = false;\n    timer t;\n    using(q: qubit) {\n        init(q) !{t};\n        X(q, PI) @{t >= 200ns};\n        r = measure(q);\n    }\n    return r;\n}\n",
    ];
    for src in ok {
        if let Err(e) = check_with(src, &[LIB_A, LIB_B]) {
            panic!("{src}\n{}", e.rendered);
        }
    }
}

#[test]
fn fixtures_type_check() {
    for (kernel, op, _) in common::fixture_calls() {
        let path = common::fixtures().join(kernel);
        let platform = common::platform();
        let rt = common::rt(0);
        quingo::runtime::kernel_signature(&path, op, &platform, &rt).unwrap_or_else(|e| panic!("{kernel}: {e}"));
    }
}
