//! Control-processor virtual machine.
//!
//! Time is counted in ns. Quantum instructions are issued in zero time and
//! occupy their qubits for the operation's duration; `qwait n` advances
//! time by `n`; every other instruction except `halt` costs
//! `classical_cycle_ns`.

pub mod state;

use std::cmp::Ordering;

use serde::Serialize;
use thiserror::Error;

use crate::codegen::{Instr, QProgram, Reg};
use crate::peval::{TraceEvent, TraceKind};
use crate::platform::{semantics_unitary, OpDef, PlatformConfig, Semantics};
use state::{QuantumState, StateError, MAX_QUBITS};

pub const DEFAULT_MEMORY: usize = 64 * 1024;
pub const DEFAULT_MAX_STEPS: u64 = 100_000_000;

#[derive(Debug, Clone)]
pub struct VmOptions {
    pub memory_size: usize,
    pub zero_init: bool,
    pub strict_pulse: bool,
    pub classical_cycle_ns: u64,
    pub max_cycles: Option<u64>,
    pub max_steps: u64,
    /// Keep one [`TraceLine`] per retired instruction.
    pub record: bool,
}

impl Default for VmOptions {
    fn default() -> Self {
        VmOptions {
            memory_size: DEFAULT_MEMORY,
            zero_init: false,
            strict_pulse: false,
            classical_cycle_ns: 1,
            max_cycles: None,
            max_steps: DEFAULT_MAX_STEPS,
            record: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VmError {
    #[error("program uses {requested} qubits but the platform has {available}")]
    TooManyQubits { requested: u32, available: u32 },
    #[error(transparent)]
    State(#[from] StateError),
    #[error("pc {pc}: fmr reads q{q} before any measurement of it")]
    FmrBeforeMeasure { pc: usize, q: u32 },
    #[error("pc {pc}: fmr reads q{q} at {now}ns but the result is ready at {ready}ns")]
    ResultNotReady { pc: usize, q: u32, now: u64, ready: u64 },
    #[error("pc {pc}: q{q} is busy until {until}ns, issued at {now}ns")]
    QubitBusy { pc: usize, q: u32, now: u64, until: u64 },
    #[error("pc {pc}: illegal instruction: {what}")]
    IllegalInstruction { pc: usize, what: String },
    #[error("memory access [{addr}, {addr}+{len}) outside {size} bytes")]
    MemoryOutOfRange { addr: u64, len: u64, size: usize },
    #[error("pc {pc}: pulse `{name}` rejected in strict mode")]
    PulseRejected { pc: usize, name: String },
    #[error("cycle budget of {0}ns exceeded")]
    CycleBudgetExceeded(u64),
    #[error("step budget of {0} instructions exceeded")]
    StepBudgetExceeded(u64),
    #[error("the machine has halted")]
    Halted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Running,
    Halted,
}

/// One retired instruction, for `--trace`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceLine {
    #[serde(skip)]
    pub pc: usize,
    pub cycle: u64,
    pub instruction: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcome: Option<u8>,
}

/// A quantum instruction's issue time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Issue {
    pub cycle: u64,
    pub pc: usize,
}

#[derive(Debug, Clone, Copy)]
struct Record {
    outcome: bool,
    ready: u64,
}

pub struct Vm<'a> {
    program: &'a QProgram,
    config: &'a PlatformConfig,
    opts: VmOptions,
    pc: usize,
    regs: [i32; 32],
    flags: Option<Ordering>,
    cycle: u64,
    steps: u64,
    busy: Vec<u64>,
    last: Vec<Option<Record>>,
    memory: Vec<u8>,
    halted: bool,
    state: QuantumState,
    trace: Vec<TraceEvent>,
    issues: Vec<Issue>,
    lines: Vec<TraceLine>,
}

impl<'a> Vm<'a> {
    pub fn load(
        program: &'a QProgram,
        config: &'a PlatformConfig,
        seed: u64,
        opts: VmOptions,
    ) -> Result<Self, VmError> {
        let n = program.qubits;
        let available = config.qubit_count.min(MAX_QUBITS);
        if n > available {
            return Err(VmError::TooManyQubits { requested: n, available });
        }
        let state = QuantumState::new(n, seed, opts.zero_init)?;
        Ok(Vm {
            program,
            config,
            pc: 0,
            regs: [0; 32],
            flags: None,
            cycle: 0,
            steps: 0,
            busy: vec![0; n as usize],
            last: vec![None; n as usize],
            memory: vec![0; opts.memory_size],
            halted: false,
            state,
            trace: Vec::new(),
            issues: Vec::new(),
            lines: Vec::new(),
            opts,
        })
    }

    pub fn pc(&self) -> usize {
        self.pc
    }

    pub fn cycle(&self) -> u64 {
        self.cycle
    }

    pub fn halted(&self) -> bool {
        self.halted
    }

    pub fn reg(&self, r: Reg) -> i32 {
        self.regs[r as usize]
    }

    pub fn state(&self) -> &QuantumState {
        &self.state
    }

    /// Measurements and resets in execution order.
    pub fn trace(&self) -> &[TraceEvent] {
        &self.trace
    }

    /// Issue time of every quantum instruction.
    pub fn issues(&self) -> &[Issue] {
        &self.issues
    }

    pub fn trace_lines(&self) -> &[TraceLine] {
        &self.lines
    }

    pub fn memory(&self) -> &[u8] {
        &self.memory
    }

    pub fn read_memory(&self, addr: u64, len: u64) -> Result<Vec<u8>, VmError> {
        let r = self.range(addr, len)?;
        Ok(self.memory[r].to_vec())
    }

    fn range(&self, addr: u64, len: u64) -> Result<std::ops::Range<usize>, VmError> {
        let size = self.memory.len();
        match addr.checked_add(len) {
            Some(end) if end <= size as u64 => Ok(addr as usize..end as usize),
            _ => Err(VmError::MemoryOutOfRange { addr, len, size }),
        }
    }

    fn store(&mut self, addr: u32, bytes: &[u8]) -> Result<(), VmError> {
        let r = self.range(addr as u64, bytes.len() as u64)?;
        self.memory[r].copy_from_slice(bytes);
        Ok(())
    }

    fn set(&mut self, r: Reg, v: i32) {
        if r != 0 {
            self.regs[r as usize] = v;
        }
    }

    fn illegal(&self, what: impl Into<String>) -> VmError {
        VmError::IllegalInstruction { pc: self.pc, what: what.into() }
    }

    fn check_qubit(&self, q: u32) -> Result<(), VmError> {
        if q >= self.program.qubits {
            return Err(self.illegal(format!("q{q} outside the {}-qubit register", self.program.qubits)));
        }
        Ok(())
    }

    /// Marks `qs` busy for `dur` from now, after checking none is busy.
    fn occupy(&mut self, qs: &[u32], dur: u64) -> Result<(), VmError> {
        for (i, &q) in qs.iter().enumerate() {
            self.check_qubit(q)?;
            if qs[..i].contains(&q) {
                return Err(self.illegal(format!("q{q} appears twice")));
            }
            let until = self.busy[q as usize];
            if until > self.cycle {
                return Err(VmError::QubitBusy { pc: self.pc, q, now: self.cycle, until });
            }
        }
        for &q in qs {
            self.busy[q as usize] = self.cycle + dur;
        }
        self.issues.push(Issue { cycle: self.cycle, pc: self.pc });
        Ok(())
    }

    fn canonical(&self, found: Option<&'a OpDef>, what: &str) -> Result<&'a OpDef, VmError> {
        found.ok_or_else(|| self.illegal(format!("the platform defines no {what} operation")))
    }

    /// Retires one instruction.
    pub fn step(&mut self) -> Result<Status, VmError> {
        if self.halted {
            return Err(VmError::Halted);
        }
        if self.steps >= self.opts.max_steps {
            return Err(VmError::StepBudgetExceeded(self.opts.max_steps));
        }
        let program = self.program;
        let Some(ins) = program.instrs.get(self.pc) else {
            return Err(self.illegal("execution ran past the last instruction"));
        };
        self.steps += 1;
        let start = self.cycle;
        let mut next = self.pc + 1;
        let mut cost = self.opts.classical_cycle_ns;
        let mut outcome = None;
        let r = |x: &Reg| self.regs[*x as usize];
        match ins {
            Instr::Ldi { rd, imm } => self.set(*rd, *imm),
            Instr::Alu { op, rd, ra, rb } => self.set(*rd, op.apply(r(ra), r(rb))),
            Instr::Not { rd, ra } => self.set(*rd, !r(ra)),
            Instr::Cmp { ra, rb } => self.flags = Some(r(ra).cmp(&r(rb))),
            Instr::Br { cond, target } => {
                let o = self.flags.ok_or_else(|| self.illegal("br without a preceding cmp"))?;
                if cond.holds(o) {
                    next = target.index;
                }
            }
            Instr::Jmp { target } => next = target.index,
            Instr::Set { rd, cond } => {
                let o = self.flags.ok_or_else(|| self.illegal("set without a preceding cmp"))?;
                self.set(*rd, cond.holds(o) as i32);
            }
            Instr::Fmr { rd, q } => {
                self.check_qubit(*q)?;
                let rec = self.last[*q as usize].ok_or(VmError::FmrBeforeMeasure { pc: self.pc, q: *q })?;
                if self.cycle < rec.ready {
                    return Err(VmError::ResultNotReady { pc: self.pc, q: *q, now: self.cycle, ready: rec.ready });
                }
                self.set(*rd, rec.outcome as i32);
            }
            Instr::Nop => {}
            Instr::Stb { ra, addr } => self.store(*addr, &[r(ra) as u8])?,
            Instr::Stw { ra, addr } => self.store(*addr, &r(ra).to_le_bytes())?,
            Instr::Std { ra, rb, addr } => {
                let mut b = [0u8; 8];
                b[..4].copy_from_slice(&r(ra).to_le_bytes());
                b[4..].copy_from_slice(&r(rb).to_le_bytes());
                self.store(*addr, &b)?
            }
            Instr::Halt => {
                cost = 0;
                self.halted = true;
            }
            Instr::Qwait { n } => cost = *n as u64,
            Instr::Qop { name, qubits, params, inverse, controls } => {
                cost = 0;
                let def = self.config.op(name).ok_or_else(|| self.illegal(format!("unknown operation `{name}`")))?;
                if matches!(def.semantics, Semantics::Measure | Semantics::Reset | Semantics::Pulse(_)) {
                    return Err(self.illegal(format!("`{name}` cannot be issued with qop")));
                }
                if qubits.len() != def.num_qubits as usize {
                    return Err(self.illegal(format!(
                        "`{name}` acts on {} qubits, got {}",
                        def.num_qubits,
                        qubits.len()
                    )));
                }
                let u = semantics_unitary(def, params).map_err(|e| self.illegal(e.to_string()))?;
                let all: Vec<u32> = qubits.iter().chain(controls).copied().collect();
                self.occupy(&all, def.duration_ns() as u64)?;
                let u = if *inverse { u.adjoint() } else { u };
                self.state.apply(qubits, controls, &u);
            }
            Instr::Pulse { name, q, .. } => {
                cost = 0;
                if self.opts.strict_pulse {
                    return Err(VmError::PulseRejected { pc: self.pc, name: name.clone() });
                }
                let def = self.config.op(name).ok_or_else(|| self.illegal(format!("unknown operation `{name}`")))?;
                if !matches!(def.semantics, Semantics::Pulse(_)) {
                    return Err(self.illegal(format!("`{name}` is not a pulse")));
                }
                self.occupy(&[*q], def.duration_ns() as u64)?;
            }
            Instr::Measure { q } | Instr::Init { q } => {
                cost = 0;
                let measure = matches!(ins, Instr::Measure { .. });
                let def = if measure {
                    self.canonical(self.config.measure_op(), "measurement")?
                } else {
                    self.canonical(self.config.reset_op(), "reset")?
                };
                let dur = def.duration_ns() as u64;
                self.occupy(&[*q], dur)?;
                let (kind, o) = if measure {
                    (TraceKind::Measure, self.state.measure(*q))
                } else {
                    (TraceKind::Init, self.state.reset(*q))
                };
                if measure {
                    self.last[*q as usize] = Some(Record { outcome: o, ready: self.cycle + dur });
                }
                self.trace.push(TraceEvent { kind, qubit: *q, outcome: o });
                outcome = Some(o as u8);
            }
        }
        if ins.is_quantum() {
            self.state.check_norm()?;
        }
        if self.opts.record {
            self.lines.push(TraceLine { pc: self.pc, cycle: start, instruction: ins.to_string(), outcome });
        }
        self.cycle += cost;
        if let Some(max) = self.opts.max_cycles {
            if self.cycle > max {
                return Err(VmError::CycleBudgetExceeded(max));
            }
        }
        self.pc = next;
        Ok(if self.halted { Status::Halted } else { Status::Running })
    }

    /// Steps until `halt`.
    pub fn run(&mut self) -> Result<(), VmError> {
        while self.step()? == Status::Running {}
        Ok(())
    }
}

/// Trace as JSON lines.
pub fn trace_jsonl(lines: &[TraceLine]) -> String {
    lines.iter().map(|l| serde_json::to_string(l).expect("serializable") + "\n").collect()
}
