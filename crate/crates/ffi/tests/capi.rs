use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use quingo_ffi::*;

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn session(seed: u64) -> *mut QgSession {
    let cfg = c(fixtures().join("platform.qfg").to_str().unwrap());
    let s = unsafe { qg_session_new(cfg.as_ptr(), seed) };
    assert!(!s.is_null());
    s
}

fn call(s: *mut QgSession, kernel: &str, op: &str, args: &str) -> (QgStatus, *mut QgRun) {
    let k = c(fixtures().join(kernel).to_str().unwrap());
    let (o, a) = (c(op), c(args));
    let mut run = ptr::null_mut();
    let st = unsafe { qg_call_kernel(s, k.as_ptr(), o.as_ptr(), a.as_ptr(), &mut run) };
    (st, run)
}

fn last_error() -> String {
    let p = qg_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn sum_random_static() {
    let s = session(1);
    let (st, run) = call(s, "kernel.qu", "sum_random", "[[2,6,8], false]");
    assert_eq!(st, QgStatus::Ok);
    unsafe {
        let (mut data, mut len) = (ptr::null(), 0usize);
        assert_eq!(qg_run_result_bytes(run, &mut data, &mut len), QgStatus::Ok);
        assert_eq!(std::slice::from_raw_parts(data, len), &[16, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(CStr::from_ptr(qg_run_descriptor(run)).to_str().unwrap(), "(int,int)");
        let text = qg_run_text(run);
        assert_eq!(CStr::from_ptr(text).to_str().unwrap(), "(16, 0)");
        qg_string_free(text);
        qg_run_free(run);
        qg_session_free(s);
    }
}

#[test]
fn error_codes() {
    let s = session(1);
    let (st, run) = call(s, "kernel.qu", "no_such_op", "[]");
    assert_eq!(st, QgStatus::CompileError);
    assert!(run.is_null());
    assert!(last_error().contains("no_such_op"));

    let (st, _) = call(s, "kernel.qu", "sum_random", "[[1, \"x\"], false]");
    assert_eq!(st, QgStatus::CompileError);

    unsafe {
        assert_eq!(qg_session_set_flags(s, QG_FLAG_STRICT_PULSE), QgStatus::Ok);
        let mut out = ptr::null_mut();
        assert_eq!(qg_call_kernel(s, ptr::null(), ptr::null(), ptr::null(), &mut out), QgStatus::NullArgument);
        assert_eq!(
            qg_call_kernel(ptr::null_mut(), ptr::null(), ptr::null(), ptr::null(), &mut out),
            QgStatus::NullArgument
        );
        let bad = [0xffu8, 0];
        assert_eq!(qg_session_add_search_path(s, bad.as_ptr().cast()), QgStatus::InvalidUtf8);
        assert!(qg_run_text(ptr::null()).is_null());
        assert!(qg_run_descriptor(ptr::null()).is_null());
        qg_session_free(s);
        assert!(qg_session_new(ptr::null(), 0).is_null());
    }
}

#[test]
fn seeded_runs_are_repeatable() {
    let text = |seed| {
        let s = session(seed);
        let (st, run) = call(s, "kernel.qu", "sum_random", "[[2,6,8], true]");
        assert_eq!(st, QgStatus::Ok);
        unsafe {
            let t = qg_run_text(run);
            let out = CStr::from_ptr(t).to_str().unwrap().to_string();
            qg_string_free(t);
            qg_run_free(run);
            qg_session_free(s);
            out
        }
    };
    for seed in 0..4 {
        let a = text(seed);
        assert!(a == "(16, 2)" || a == "(16, 6)", "{a}");
        assert_eq!(a, text(seed));
    }
}

const C_MAIN: &str = r#"
#include <stdio.h>
#include <string.h>
#include "quingo.h"

int main(int argc, char **argv) {
    QgSession *s = qg_session_new(argv[1], 3);
    QgRun *run = NULL;
    if (qg_call_kernel(s, argv[2], "sum_random", "[[2,6,8], false]", &run) != QG_STATUS_OK) {
        fprintf(stderr, "%s\n", qg_last_error_message());
        return 1;
    }
    const uint8_t *data;
    size_t len;
    if (qg_run_result_bytes(run, &data, &len) != QG_STATUS_OK || len != 8 || data[0] != 16) return 2;
    char *text = qg_run_text(run);
    printf("%s %s\n", qg_run_descriptor(run), text);
    qg_string_free(text);
    qg_run_free(run);
    qg_session_free(s);
    return 0;
}
"#;

/// Builds a C program against the generated header and the static library.
#[test]
fn c_program_links_and_runs() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(&src, C_MAIN).unwrap();
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    // target/<profile>/deps/capi-* -> target/<profile>
    let profile_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let lib = profile_dir.join("libquingo_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let exe = dir.path().join("main");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("cc available");
    assert!(status.success());
    let out =
        Command::new(&exe).arg(fixtures().join("platform.qfg")).arg(fixtures().join("kernel.qu")).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout), "(int,int) (16, 0)\n");
}
