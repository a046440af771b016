use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use quingo::codec::{decode_value, format_value, CodecOptions};
use quingo::codegen::assemble;
use quingo::platform::parse_config;
use quingo::qvm::{trace_jsonl, Vm, VmOptions};

#[derive(Parser)]
#[command(name = "qvm", about = "Control-processor VM for Quingo assembly")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a program and print the decoded result block.
    Run {
        program: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: u64,
        /// Write one JSON line per retired instruction.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        zero_init: bool,
        #[arg(long)]
        strict_pulse: bool,
        #[arg(long)]
        max_cycles: Option<u64>,
        #[arg(long, default_value_t = 1)]
        classical_cycle_ns: u64,
    },
}

fn run(cli: Cli) -> Result<(), (u8, String)> {
    let Cmd::Run { program, config, seed, trace, zero_init, strict_pulse, max_cycles, classical_cycle_ns } = cli.cmd;
    let read = |p: &PathBuf| std::fs::read_to_string(p).map_err(|e| (2, format!("cannot read `{}`: {e}", p.display())));
    let prog = assemble(&read(&program)?).map_err(|e| (2, format!("{}: {e}", program.display())))?;
    let cfg = parse_config(&read(&config)?).map_err(|e| (2, e.to_string()))?;
    let opts = VmOptions {
        zero_init,
        strict_pulse,
        max_cycles,
        classical_cycle_ns,
        record: trace.is_some(),
        ..VmOptions::default()
    };
    let mut vm = Vm::load(&prog, &cfg, seed, opts).map_err(|e| (3, e.to_string()))?;
    let outcome = vm.run();
    if let Some(p) = &trace {
        std::fs::write(p, trace_jsonl(vm.trace_lines()))
            .map_err(|e| (3, format!("cannot write `{}`: {e}", p.display())))?;
    }
    outcome.map_err(|e| (3, e.to_string()))?;
    let v = decode_value(vm.memory(), &prog.rettype, CodecOptions { f32_doubles: prog.f32_doubles })
        .map_err(|e| (3, e.to_string()))?;
    println!("{}", format_value(&v));
    eprintln!("cycles: {}", vm.cycle());
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, msg)) => {
            eprintln!("{msg}");
            ExitCode::from(code)
        }
    }
}
