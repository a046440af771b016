//! C ABI over the Quingo runtime.
//!
//! Handles are opaque. Every fallible call returns a [`QgStatus`]; on
//! failure the message is available from [`qg_last_error_message`] on the
//! same thread until the next call. Strings returned as `char *` are owned
//! by the caller and released with [`qg_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::ptr;

use quingo::codec::format_value;
use quingo::runtime::{RunHandle, RuntimeConfig, RuntimeError, Session};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QgStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    CompileError = 3,
    RuntimeError = 4,
    NotCompleted = 5,
}

/// Start every qubit in |0> instead of a seeded random state.
pub const QG_FLAG_ZERO_INIT: u32 = 1;
/// Executing a pulse is an error.
pub const QG_FLAG_STRICT_PULSE: u32 = 2;
/// Serialize doubles as 4-byte floats.
pub const QG_FLAG_F32_DOUBLES: u32 = 4;

pub struct QgSession {
    inner: Session,
}

pub struct QgRun {
    handle: RunHandle,
    descriptor: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn fail(status: QgStatus, msg: impl Into<String>) -> QgStatus {
    set_error(msg);
    status
}

fn runtime_status(e: &RuntimeError) -> QgStatus {
    match e {
        RuntimeError::NotCompleted => QgStatus::NotCompleted,
        e if e.is_compile_error() => QgStatus::CompileError,
        _ => QgStatus::RuntimeError,
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, QgStatus> {
    if p.is_null() {
        return Err(fail(QgStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(QgStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

fn owned(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw)
}

/// Creates a session for the platform configuration at `config_path`.
/// Returns null on a null or non-UTF-8 path.
///
/// # Safety
/// `config_path` must be null or a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn qg_session_new(config_path: *const c_char, seed: u64) -> *mut QgSession {
    clear_error();
    match str_arg(config_path, "config_path") {
        Ok(p) => Box::into_raw(Box::new(QgSession { inner: Session::new(RuntimeConfig::new(p, seed)) })),
        Err(_) => ptr::null_mut(),
    }
}

/// # Safety
/// `session` must be null or a pointer from [`qg_session_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qg_session_free(session: *mut QgSession) {
    if !session.is_null() {
        drop(Box::from_raw(session));
    }
}

/// # Safety
/// `session` must be a live session; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn qg_session_add_search_path(session: *mut QgSession, path: *const c_char) -> QgStatus {
    clear_error();
    let Some(s) = session.as_mut() else {
        return fail(QgStatus::NullArgument, "session is null");
    };
    match str_arg(path, "path") {
        Ok(p) => {
            s.inner.config.search_paths.push(p.into());
            QgStatus::Ok
        }
        Err(st) => st,
    }
}

/// Sets `QG_FLAG_*` bits for later calls.
///
/// # Safety
/// `session` must be a live session.
#[no_mangle]
pub unsafe extern "C" fn qg_session_set_flags(session: *mut QgSession, flags: u32) -> QgStatus {
    clear_error();
    let Some(s) = session.as_mut() else {
        return fail(QgStatus::NullArgument, "session is null");
    };
    s.inner.config.zero_init = flags & QG_FLAG_ZERO_INIT != 0;
    s.inner.config.strict_pulse = flags & QG_FLAG_STRICT_PULSE != 0;
    s.inner.config.f32_doubles = flags & QG_FLAG_F32_DOUBLES != 0;
    QgStatus::Ok
}

/// Compiles and runs `op` from `kernel_path` with a JSON argument array.
/// On success `*out` receives a run to be released with [`qg_run_free`].
///
/// # Safety
/// `session` must be a live session, the strings NUL-terminated, and
/// `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qg_call_kernel(
    session: *mut QgSession,
    kernel_path: *const c_char,
    op: *const c_char,
    args_json: *const c_char,
    out: *mut *mut QgRun,
) -> QgStatus {
    clear_error();
    let (Some(s), false) = (session.as_mut(), out.is_null()) else {
        return fail(QgStatus::NullArgument, "session or out is null");
    };
    *out = ptr::null_mut();
    let args = match (str_arg(kernel_path, "kernel_path"), str_arg(op, "op"), str_arg(args_json, "args_json")) {
        (Ok(k), Ok(o), Ok(a)) => (k, o, a),
        (Err(st), ..) | (_, Err(st), _) | (.., Err(st)) => return st,
    };
    if let Err(e) = s.inner.call_kernel_json(Path::new(args.0), args.1, args.2) {
        return fail(runtime_status(&e), e.to_string());
    }
    let Some(handle) = s.inner.take_last() else {
        return fail(QgStatus::NotCompleted, "the call produced no result");
    };
    let descriptor = match handle.result_block() {
        Ok(b) => CString::new(b.desc_text().trim_end()).expect("descriptor text has no NUL"),
        Err(e) => return fail(runtime_status(&e), e.to_string()),
    };
    *out = Box::into_raw(Box::new(QgRun { handle, descriptor }));
    QgStatus::Ok
}

/// Points `*data`/`*len` at the result bytes, valid while `run` lives.
///
/// # Safety
/// `run` must be a live run; `data` and `len` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn qg_run_result_bytes(run: *const QgRun, data: *mut *const u8, len: *mut usize) -> QgStatus {
    clear_error();
    let (Some(r), false, false) = (run.as_ref(), data.is_null(), len.is_null()) else {
        return fail(QgStatus::NullArgument, "run, data or len is null");
    };
    match r.handle.result_block() {
        Ok(b) => {
            *data = b.bytes.as_ptr();
            *len = b.bytes.len();
            QgStatus::Ok
        }
        Err(e) => fail(runtime_status(&e), e.to_string()),
    }
}

/// The result's type descriptor text, valid while `run` lives.
///
/// # Safety
/// `run` must be null or a live run.
#[no_mangle]
pub unsafe extern "C" fn qg_run_descriptor(run: *const QgRun) -> *const c_char {
    run.as_ref().map_or(ptr::null(), |r| r.descriptor.as_ptr())
}

/// The decoded result as text, e.g. `(16, 0)`; null on failure.
///
/// # Safety
/// `run` must be null or a live run.
#[no_mangle]
pub unsafe extern "C" fn qg_run_text(run: *const QgRun) -> *mut c_char {
    clear_error();
    let Some(r) = run.as_ref() else {
        set_error("run is null");
        return ptr::null_mut();
    };
    match quingo::runtime::read_result(&r.handle) {
        Ok(v) => owned(format_value(&v)),
        Err(e) => {
            set_error(e.to_string());
            ptr::null_mut()
        }
    }
}

/// # Safety
/// `run` must be null or a run not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qg_run_free(run: *mut QgRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Message of the last failure on this thread, or null. Valid until the
/// next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn qg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn qg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
