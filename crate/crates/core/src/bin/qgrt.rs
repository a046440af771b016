use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use quingo::codec::{decode_value, format_value, value_to_json, CodecOptions};
use quingo::runtime::{
    args_from_json, compile_kernel, kernel_signature, load_platform, parse_desc, run_compiled, RunHandle,
    RuntimeConfig, RuntimeError,
};

#[derive(Parser)]
#[command(name = "qgrt", about = "Quingo runtime: compile and run kernels, decode results")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compile and run one kernel call; writes result.bin and result.desc.
    Call {
        #[command(flatten)]
        k: KernelArgs,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        desc: PathBuf,
        #[arg(long)]
        zero_init: bool,
        #[arg(long)]
        strict_pulse: bool,
        /// Write the emitted assembly to this file.
        #[arg(long)]
        emit_asm: Option<PathBuf>,
    },
    /// Compile one kernel call and print its assembly.
    Compile {
        #[command(flatten)]
        k: KernelArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a result block.
    Decode {
        #[arg(long)]
        bin: PathBuf,
        #[arg(long)]
        desc: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

#[derive(Args)]
struct KernelArgs {
    #[arg(long)]
    kernel: PathBuf,
    #[arg(long)]
    op: String,
    #[arg(long, default_value = "[]")]
    args_json: String,
    #[arg(long)]
    config: PathBuf,
    #[arg(long = "search-path")]
    search_paths: Vec<PathBuf>,
    #[arg(long)]
    f32_doubles: bool,
    #[arg(long, default_value_t = 1)]
    classical_cycle_ns: u64,
    /// Print the residual IR after partial evaluation.
    #[arg(long)]
    dump_ir: bool,
    /// Print `cycle op qubits` lines per block.
    #[arg(long)]
    dump_schedule: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

const COMPILE_ERROR: u8 = 2;
const RUNTIME_ERROR: u8 = 3;

fn fail(e: &RuntimeError) -> ExitCode {
    eprintln!("{e}");
    ExitCode::from(if e.is_compile_error() { COMPILE_ERROR } else { RUNTIME_ERROR })
}

fn rt_config(k: &KernelArgs, seed: u64) -> RuntimeConfig {
    let mut rt = RuntimeConfig::new(&k.config, seed);
    rt.search_paths = k.search_paths.clone();
    rt.f32_doubles = k.f32_doubles;
    rt.classical_cycle_ns = k.classical_cycle_ns;
    rt
}

fn compile(
    k: &KernelArgs,
    rt: &RuntimeConfig,
    handle: &mut RunHandle,
) -> Result<quingo::runtime::Compiled, RuntimeError> {
    let platform = load_platform(&rt.config_path)?;
    let (_, params, _) = kernel_signature(&k.kernel, &k.op, &platform, rt)?;
    let args = args_from_json(&k.args_json, &params)?;
    let c = compile_kernel(&k.kernel, &k.op, &args, &platform, rt, &mut handle.phases)?;
    if k.dump_ir {
        println!("{}", c.residual);
    }
    if k.dump_schedule {
        print!("{}", c.dump_schedule());
    }
    Ok(c)
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), RuntimeError> {
    std::fs::write(path, bytes).map_err(|e| RuntimeError::Io { path: path.into(), msg: e.to_string() })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Call { k, seed, out, desc, zero_init, strict_pulse, emit_asm } => {
            let mut rt = rt_config(&k, seed);
            rt.zero_init = zero_init;
            rt.strict_pulse = strict_pulse;
            let mut handle = RunHandle::pending();
            let c = match compile(&k, &rt, &mut handle) {
                Ok(c) => c,
                Err(e) => return fail(&e),
            };
            if let Some(p) = &emit_asm {
                if let Err(e) = write(p, c.asm.as_bytes()) {
                    return fail(&e);
                }
            }
            let run = load_platform(&rt.config_path).and_then(|pf| run_compiled(c, pf, &rt, handle));
            let result = run.and_then(|h| {
                let block = h.result_block()?.clone();
                write(&out, &block.bytes)?;
                write(&desc, block.desc_text().as_bytes())
            });
            match result {
                Ok(()) => ExitCode::SUCCESS,
                // A failed write after a successful run is still a runtime failure.
                Err(e @ RuntimeError::Io { .. }) => {
                    eprintln!("{e}");
                    ExitCode::from(RUNTIME_ERROR)
                }
                Err(e) => fail(&e),
            }
        }
        Cmd::Compile { k, out } => {
            let rt = rt_config(&k, 0);
            let mut handle = RunHandle::pending();
            match compile(&k, &rt, &mut handle) {
                Ok(c) => match out {
                    Some(p) => match write(&p, c.asm.as_bytes()) {
                        Ok(()) => ExitCode::SUCCESS,
                        Err(e) => fail(&e),
                    },
                    None => {
                        print!("{}", c.asm);
                        ExitCode::SUCCESS
                    }
                },
                Err(e) => fail(&e),
            }
        }
        Cmd::Decode { bin, desc, format } => {
            let decoded = (|| -> Result<String, String> {
                let bytes = std::fs::read(&bin).map_err(|e| format!("cannot read `{}`: {e}", bin.display()))?;
                let text =
                    std::fs::read_to_string(&desc).map_err(|e| format!("cannot read `{}`: {e}", desc.display()))?;
                let (d, f32_doubles) = parse_desc(&text).map_err(|e| e.to_string())?;
                let v = decode_value(&bytes, &d, CodecOptions { f32_doubles }).map_err(|e| e.to_string())?;
                Ok(match format {
                    Format::Text => format_value(&v),
                    Format::Json => value_to_json(&v).to_string(),
                })
            })();
            match decoded {
                Ok(s) => {
                    println!("{s}");
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("{e}");
                    ExitCode::from(RUNTIME_ERROR)
                }
            }
        }
    }
}
