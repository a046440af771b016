//! Host-facing runtime: argument conversion, main generation, the compile
//! pipeline, backend execution and result decoding.

mod args;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use args::{args_from_json, ArgsError};

use crate::codec::{decode_value, encode_value, CodecError, CodecOptions, Descriptor};
use crate::codegen::{assemble, emit, AsmError, CodegenError, EmitOptions, IsaCost, QProgram};
use crate::frontend::{check, CompileInput, FrontendError, FsProvider, SourceProvider};
use crate::ir::{KernelIR, Value};
use crate::peval::{
    generate_main, partial_evaluate, ArgTypeError, PeError, PeOptions, TraceEvent, DEFAULT_STEP_BUDGET,
};
use crate::platform::{parse_config, ConfigError, PlatformConfig};
use crate::qvm::{Issue, TraceLine, Vm, VmError, VmOptions, DEFAULT_MEMORY};
use crate::sched::{dump_schedule, schedule, SchedError, TimedIR};
use crate::types::Type;

pub const BACKENDS: &[&str] = &["qvm"];

#[derive(Debug, Clone)]
pub struct RuntimeConfig {
    pub backend: String,
    pub config_path: PathBuf,
    pub seed: u64,
    pub search_paths: Vec<PathBuf>,
    pub memory_size: usize,
    pub strict_pulse: bool,
    pub zero_init: bool,
    pub f32_doubles: bool,
    pub classical_cycle_ns: u64,
    pub step_budget: u64,
    pub record_trace: bool,
}

impl RuntimeConfig {
    pub fn new(config_path: impl Into<PathBuf>, seed: u64) -> Self {
        RuntimeConfig {
            backend: "qvm".into(),
            config_path: config_path.into(),
            seed,
            search_paths: Vec::new(),
            memory_size: DEFAULT_MEMORY,
            strict_pulse: false,
            zero_init: false,
            f32_doubles: false,
            classical_cycle_ns: 1,
            step_budget: DEFAULT_STEP_BUDGET,
            record_trace: false,
        }
    }

    fn codec(&self) -> CodecOptions {
        CodecOptions { f32_doubles: self.f32_doubles }
    }
}

/// Life-cycle phases the runtime drives; numbering follows the host's
/// six-phase model, of which phases 1 and 2 happen before the runtime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Phase {
    PreExecution = 3,
    QuantumCompilation = 4,
    QuantumExecution = 5,
    PostExecution = 6,
}

#[derive(Debug, Error)]
pub enum RuntimeError {
    #[error("unknown backend `{0}`")]
    UnknownBackend(String),
    #[error("cannot read `{path}`: {msg}")]
    Io { path: PathBuf, msg: String },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("`{kernel}` has no operation `{op}`")]
    UnknownKernelOp { kernel: String, op: String },
    #[error(transparent)]
    Args(#[from] ArgsError),
    #[error(transparent)]
    ArgType(#[from] ArgTypeError),
    #[error("{}", .0.rendered)]
    Frontend(FrontendError),
    #[error(transparent)]
    Pe(#[from] PeError),
    #[error(transparent)]
    Sched(#[from] SchedError),
    #[error(transparent)]
    Codegen(#[from] CodegenError),
    #[error(transparent)]
    Asm(#[from] AsmError),
    #[error("execution failed: {0}")]
    Vm(#[from] VmError),
    #[error("result decoding failed: {0}")]
    Decode(#[from] CodecError),
    #[error("no completed kernel call")]
    NotCompleted,
}

impl From<FrontendError> for RuntimeError {
    fn from(e: FrontendError) -> Self {
        RuntimeError::Frontend(e)
    }
}

impl RuntimeError {
    /// The phase an error belongs to, if it arose inside one.
    pub fn phase(&self) -> Option<Phase> {
        match self {
            RuntimeError::UnknownKernelOp { .. } | RuntimeError::Args(_) | RuntimeError::ArgType(_) => {
                Some(Phase::PreExecution)
            }
            RuntimeError::Frontend(_)
            | RuntimeError::Pe(_)
            | RuntimeError::Sched(_)
            | RuntimeError::Codegen(_)
            | RuntimeError::Asm(_) => Some(Phase::QuantumCompilation),
            RuntimeError::Vm(_) => Some(Phase::QuantumExecution),
            RuntimeError::Decode(_) => Some(Phase::PostExecution),
            _ => None,
        }
    }

    /// Errors found before anything ran on the backend.
    pub fn is_compile_error(&self) -> bool {
        !matches!(self, RuntimeError::Vm(_) | RuntimeError::Decode(_) | RuntimeError::NotCompleted)
    }
}

/// Quantum-coprocessor driver.
pub trait Backend {
    fn upload(&mut self, program: QProgram) -> Result<(), RuntimeError>;
    fn start(&mut self) -> Result<(), RuntimeError>;
    fn wait(&mut self) -> Result<(), RuntimeError>;
    fn read(&self, addr: u64, len: u64) -> Result<Vec<u8>, RuntimeError>;
}

/// What one VM run left behind.
#[derive(Debug, Clone, Default)]
pub struct Execution {
    pub memory: Vec<u8>,
    pub trace: Vec<TraceEvent>,
    pub issues: Vec<Issue>,
    pub lines: Vec<TraceLine>,
    pub cycles: u64,
}

pub struct QvmBackend {
    config: PlatformConfig,
    seed: u64,
    opts: VmOptions,
    program: Option<QProgram>,
    pending: Option<Result<Execution, VmError>>,
    done: Option<Execution>,
}

impl QvmBackend {
    pub fn new(config: PlatformConfig, seed: u64, opts: VmOptions) -> Self {
        QvmBackend { config, seed, opts, program: None, pending: None, done: None }
    }

    pub fn execution(&self) -> Option<&Execution> {
        self.done.as_ref()
    }
}

impl Backend for QvmBackend {
    fn upload(&mut self, program: QProgram) -> Result<(), RuntimeError> {
        self.program = Some(program);
        self.pending = None;
        self.done = None;
        Ok(())
    }

    fn start(&mut self) -> Result<(), RuntimeError> {
        let program = self.program.as_ref().ok_or(RuntimeError::NotCompleted)?;
        let run = || -> Result<Execution, VmError> {
            let mut vm = Vm::load(program, &self.config, self.seed, self.opts.clone())?;
            vm.run()?;
            Ok(Execution {
                memory: vm.memory().to_vec(),
                trace: vm.trace().to_vec(),
                issues: vm.issues().to_vec(),
                lines: vm.trace_lines().to_vec(),
                cycles: vm.cycle(),
            })
        };
        self.pending = Some(run());
        Ok(())
    }

    fn wait(&mut self) -> Result<(), RuntimeError> {
        match self.pending.take() {
            Some(Ok(e)) => {
                self.done = Some(e);
                Ok(())
            }
            Some(Err(e)) => Err(e.into()),
            None => Err(RuntimeError::NotCompleted),
        }
    }

    fn read(&self, addr: u64, len: u64) -> Result<Vec<u8>, RuntimeError> {
        let mem = &self.done.as_ref().ok_or(RuntimeError::NotCompleted)?.memory;
        match addr.checked_add(len) {
            Some(end) if end <= mem.len() as u64 => Ok(mem[addr as usize..end as usize].to_vec()),
            _ => Err(VmError::MemoryOutOfRange { addr, len, size: mem.len() }.into()),
        }
    }
}

/// Every intermediate product of compiling one kernel call.
#[derive(Debug, Clone)]
pub struct Compiled {
    pub package: String,
    pub main_source: String,
    pub lowered: KernelIR,
    pub residual: KernelIR,
    pub timed: TimedIR,
    pub asm: String,
    pub program: QProgram,
    pub descriptor: Descriptor,
}

impl Compiled {
    pub fn dump_schedule(&self) -> String {
        dump_schedule(&self.timed)
    }
}

pub fn load_platform(path: &Path) -> Result<PlatformConfig, RuntimeError> {
    Ok(parse_config(&read(path)?)?)
}

fn read(path: &Path) -> Result<String, RuntimeError> {
    std::fs::read_to_string(path).map_err(|e| RuntimeError::Io { path: path.into(), msg: e.to_string() })
}

fn search_paths(kernel: &Path, rt: &RuntimeConfig) -> Vec<PathBuf> {
    let dir = kernel.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut out = vec![if dir.as_os_str().is_empty() { PathBuf::from(".") } else { dir }];
    out.extend(rt.search_paths.iter().cloned());
    out
}

/// The signature of `op` in the kernel file: (package, params, return type).
pub fn kernel_signature(
    kernel: &Path,
    op: &str,
    platform: &PlatformConfig,
    rt: &RuntimeConfig,
) -> Result<(String, Vec<Type>, Type), RuntimeError> {
    let text = read(kernel)?;
    signature_in(kernel, &text, op, platform, &search_paths(kernel, rt), &FsProvider)
}

fn signature_in(
    kernel: &Path,
    text: &str,
    op: &str,
    platform: &PlatformConfig,
    search: &[PathBuf],
    provider: &dyn SourceProvider,
) -> Result<(String, Vec<Type>, Type), RuntimeError> {
    let name = kernel.to_string_lossy().into_owned();
    let input = CompileInput { roots: vec![(name.clone(), text.to_string())], search_paths: search.to_vec() };
    let tp = check(&input, provider, platform, None)?;
    let package = tp.program.units[0].package_name();
    let unknown = || RuntimeError::UnknownKernelOp { kernel: name.clone(), op: op.to_string() };
    let decl = tp.program.lookup(&format!("{package}.{op}")).ok_or_else(unknown)?;
    if !matches!(decl, crate::frontend::ast::Decl::Operation(_)) {
        return Err(unknown());
    }
    Ok((package, decl.params().iter().map(|p| p.ty.clone()).collect(), decl.ret().clone()))
}

/// Phases 3 and 4: main generation and quantum compilation.
pub fn compile_kernel(
    kernel: &Path,
    op: &str,
    args: &[Value],
    platform: &PlatformConfig,
    rt: &RuntimeConfig,
    log: &mut Vec<Phase>,
) -> Result<Compiled, RuntimeError> {
    let text = read(kernel)?;
    compile_source(kernel, &text, op, args, platform, rt, &FsProvider, log)
}

#[allow(clippy::too_many_arguments)]
pub fn compile_source(
    kernel: &Path,
    text: &str,
    op: &str,
    args: &[Value],
    platform: &PlatformConfig,
    rt: &RuntimeConfig,
    provider: &dyn SourceProvider,
    log: &mut Vec<Phase>,
) -> Result<Compiled, RuntimeError> {
    let search = search_paths(kernel, rt);
    log.push(Phase::PreExecution);
    let (package, params, ret) = signature_in(kernel, text, op, platform, &search, provider)?;
    let main_source = generate_main(&package, op, &params, &ret, args)?;
    let descriptor = Descriptor::from_type(&ret)?;

    log.push(Phase::QuantumCompilation);
    let main_name = kernel.with_file_name("__main__.qu").to_string_lossy().into_owned();
    let input = CompileInput {
        roots: vec![(kernel.to_string_lossy().into_owned(), text.to_string()), (main_name, main_source.clone())],
        search_paths: search,
    };
    let entry = format!("{package}.main");
    let tp = check(&input, provider, platform, Some(&entry))?;
    let lowered = crate::lower::lower(&tp, &entry);
    let residual = partial_evaluate(&lowered, platform, &PeOptions { step_budget: rt.step_budget })?;
    let timed = schedule(&residual, platform, &IsaCost { classical_cycle_ns: rt.classical_cycle_ns as i64 })?;
    let asm = emit(&timed, platform, &EmitOptions { f32_doubles: rt.f32_doubles })?;
    let program = assemble(&asm)?;
    Ok(Compiled { package, main_source, lowered, residual, timed, asm, program, descriptor })
}

/// A completed result block.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultBlock {
    pub bytes: Vec<u8>,
    pub descriptor: Descriptor,
    pub f32_doubles: bool,
}

impl ResultBlock {
    pub fn decode(&self) -> Result<Value, CodecError> {
        decode_value(&self.bytes, &self.descriptor, CodecOptions { f32_doubles: self.f32_doubles })
    }

    /// Contents of `result.desc`.
    pub fn desc_text(&self) -> String {
        desc_text(&self.descriptor, self.f32_doubles)
    }
}

pub fn desc_text(d: &Descriptor, f32_doubles: bool) -> String {
    let mut s = format!("{d}\n");
    if f32_doubles {
        s.push_str("f32-doubles\n");
    }
    s
}

/// Parses `result.desc`.
pub fn parse_desc(text: &str) -> Result<(Descriptor, bool), CodecError> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let d: Descriptor = lines.next().unwrap_or("").parse()?;
    let mut f32 = false;
    for l in lines {
        match l {
            "f32-doubles" => f32 = true,
            _ => return Err(CodecError::DescriptorSyntax(l.to_string())),
        }
    }
    Ok((d, f32))
}

#[derive(Debug)]
pub struct RunHandle {
    pub phases: Vec<Phase>,
    pub compiled: Option<Compiled>,
    pub execution: Option<Execution>,
    result: Option<ResultBlock>,
}

impl RunHandle {
    /// A handle whose call has not completed.
    pub fn pending() -> Self {
        RunHandle { phases: Vec::new(), compiled: None, execution: None, result: None }
    }

    pub fn is_completed(&self) -> bool {
        self.result.is_some()
    }

    pub fn result_block(&self) -> Result<&ResultBlock, RuntimeError> {
        self.result.as_ref().ok_or(RuntimeError::NotCompleted)
    }
}

pub fn call_kernel(kernel: &Path, op: &str, args: &[Value], rt: &RuntimeConfig) -> Result<RunHandle, RuntimeError> {
    if !BACKENDS.contains(&rt.backend.as_str()) {
        return Err(RuntimeError::UnknownBackend(rt.backend.clone()));
    }
    let platform = load_platform(&rt.config_path)?;
    let mut handle = RunHandle::pending();
    let compiled = compile_kernel(kernel, op, args, &platform, rt, &mut handle.phases)?;
    run_compiled(compiled, platform, rt, handle)
}

/// Phases 5 and 6 for an already compiled kernel.
pub fn run_compiled(
    compiled: Compiled,
    platform: PlatformConfig,
    rt: &RuntimeConfig,
    mut handle: RunHandle,
) -> Result<RunHandle, RuntimeError> {
    handle.phases.push(Phase::QuantumExecution);
    let opts = VmOptions {
        memory_size: rt.memory_size,
        zero_init: rt.zero_init,
        strict_pulse: rt.strict_pulse,
        classical_cycle_ns: rt.classical_cycle_ns,
        record: rt.record_trace,
        ..VmOptions::default()
    };
    let mut backend = QvmBackend::new(platform, rt.seed, opts);
    backend.upload(compiled.program.clone())?;
    backend.start()?;
    backend.wait()?;

    handle.phases.push(Phase::PostExecution);
    let memory = backend.read(0, rt.memory_size as u64)?;
    let value = decode_value(&memory, &compiled.descriptor, rt.codec())?;
    let bytes = encode_value(&value, &compiled.descriptor, rt.codec())?;
    handle.result = Some(ResultBlock { bytes, descriptor: compiled.descriptor.clone(), f32_doubles: rt.f32_doubles });
    handle.execution = backend.done.take();
    handle.compiled = Some(compiled);
    Ok(handle)
}

pub fn read_result(handle: &RunHandle) -> Result<Value, RuntimeError> {
    Ok(handle.result_block()?.decode()?)
}

/// The most recent call, as the host interface sees it.
#[derive(Debug)]
pub struct Session {
    pub config: RuntimeConfig,
    last: Option<RunHandle>,
}

impl Session {
    pub fn new(config: RuntimeConfig) -> Self {
        Session { config, last: None }
    }

    /// Runs a kernel; the previous result is dropped either way.
    pub fn call_kernel(&mut self, kernel: &Path, op: &str, args: &[Value]) -> Result<(), RuntimeError> {
        self.last = None;
        self.last = Some(call_kernel(kernel, op, args, &self.config)?);
        Ok(())
    }

    /// Like [`Session::call_kernel`] with a JSON argument list converted by
    /// the operation's parameter types.
    pub fn call_kernel_json(&mut self, kernel: &Path, op: &str, args_json: &str) -> Result<(), RuntimeError> {
        self.last = None;
        let platform = load_platform(&self.config.config_path)?;
        let (_, params, _) = kernel_signature(kernel, op, &platform, &self.config)?;
        let args = args_from_json(args_json, &params)?;
        self.call_kernel(kernel, op, &args)
    }

    pub fn last(&self) -> Option<&RunHandle> {
        self.last.as_ref()
    }

    pub fn take_last(&mut self) -> Option<RunHandle> {
        self.last.take()
    }

    pub fn read_result(&self) -> Result<Value, RuntimeError> {
        read_result(self.last.as_ref().ok_or(RuntimeError::NotCompleted)?)
    }
}
