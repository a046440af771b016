//! Emission of a scheduled residual program as assembly text.

use std::collections::BTreeSet;
use std::fmt::Write;

use super::isa::{Cond, Instr, Label, Reg};
use super::regalloc::allocate;
use super::select::{imm_of, select_block, select_moves, used_vars, VInst, FIRST_TEMP, V};
use super::CodegenError;
use crate::codec::{CodecOptions, Descriptor};
use crate::ir::*;
use crate::platform::{PlatformConfig, Semantics};
use crate::sched::{qop_qubits, TimedIR};

#[derive(Debug, Clone, Copy, Default)]
pub struct EmitOptions {
    pub f32_doubles: bool,
}

const T0: Reg = FIRST_TEMP + 6;
const T1: Reg = FIRST_TEMP + 7;

fn label(b: BlockId) -> Label {
    Label { name: format!("L{b}"), index: usize::MAX }
}

fn reg_of(regs: &[Option<u8>], v: V) -> Reg {
    match v {
        V::Zero => 0,
        V::Temp(t) => t,
        V::Var(x) => regs[x as usize].expect("allocated"),
    }
}

fn lower_vinst(regs: &[Option<u8>], i: &VInst) -> Instr {
    let r = |v| reg_of(regs, v);
    match i {
        VInst::Ldi { rd, imm } => Instr::Ldi { rd: r(*rd), imm: *imm },
        VInst::Alu { op, rd, ra, rb } => Instr::Alu { op: *op, rd: r(*rd), ra: r(*ra), rb: r(*rb) },
        VInst::Cmp { ra, rb } => Instr::Cmp { ra: r(*ra), rb: r(*rb) },
        VInst::Set { rd, cond } => Instr::Set { rd: r(*rd), cond: *cond },
        VInst::Fmr { rd, q } => Instr::Fmr { rd: r(*rd), q: *q },
    }
}

fn quantum(q: &QOp, config: &PlatformConfig) -> Result<Instr, CodegenError> {
    let unsupported = |m: String| CodegenError::Unsupported(m);
    let def = config.op(&q.name).ok_or_else(|| unsupported(format!("unknown operation `{}`", q.name)))?;
    let (targets, controls) = qop_qubits(q).ok_or_else(|| unsupported(format!("`{}` on a run-time qubit", q.name)))?;
    let plain = controls.is_empty() && !q.inverse;
    let single = |what: &str| -> Result<u32, CodegenError> {
        match (&targets[..], plain) {
            ([t], true) => Ok(*t),
            _ => Err(unsupported(format!("{what} `{}` on several or modified qubits", q.name))),
        }
    };
    let canonical = |found: Option<&crate::platform::OpDef>, what: &str| -> Result<(), CodegenError> {
        match found {
            Some(d) if d.name == q.name => Ok(()),
            _ => Err(unsupported(format!("a second {what} operation `{}`", q.name))),
        }
    };
    Ok(match &def.semantics {
        Semantics::Measure => {
            canonical(config.measure_op(), "measurement")?;
            Instr::Measure { q: single("measurement")? }
        }
        Semantics::Reset => {
            canonical(config.reset_op(), "reset")?;
            Instr::Init { q: single("reset")? }
        }
        Semantics::Pulse(text) => Instr::Pulse { name: q.name.clone(), q: single("pulse")?, text: text.clone() },
        _ => {
            let params = q
                .params
                .iter()
                .map(|p| p.as_const().and_then(Value::as_f64))
                .collect::<Option<Vec<f64>>>()
                .ok_or_else(|| unsupported(format!("a run-time parameter of `{}`", q.name)))?;
            Instr::Qop { name: q.name.clone(), qubits: targets, params, inverse: q.inverse, controls }
        }
    })
}

/// Stores the serialized return value at address 0, then halts.
pub fn emit_result_epilogue(
    value: &Operand,
    desc: &Descriptor,
    reg: &dyn Fn(VarId) -> Option<Reg>,
    opts: EmitOptions,
) -> Result<Vec<Instr>, CodegenError> {
    let co = CodecOptions { f32_doubles: opts.f32_doubles };
    let mut out = Vec::new();
    let mut end = desc.fixed_size(co) as u32;
    store(value, desc, 0, &mut end, reg, co, &mut out)?;
    out.push(Instr::Halt);
    Ok(out)
}

fn expand(o: &Operand) -> Operand {
    match o {
        Operand::Const(Value::Tuple(vs)) => Operand::Tuple(vs.iter().cloned().map(Operand::Const).collect()),
        Operand::Const(Value::Array(vs)) => Operand::Array(vs.iter().cloned().map(Operand::Const).collect()),
        other => other.clone(),
    }
}

fn store(
    o: &Operand,
    d: &Descriptor,
    at: u32,
    end: &mut u32,
    reg: &dyn Fn(VarId) -> Option<Reg>,
    co: CodecOptions,
    out: &mut Vec<Instr>,
) -> Result<(), CodegenError> {
    let bad = || CodegenError::UnsupportedReturn(format!("{o} as `{d}`"));
    let word = |imm: i32, addr: u32, out: &mut Vec<Instr>| {
        out.push(Instr::Ldi { rd: T0, imm });
        out.push(Instr::Stw { ra: T0, addr });
    };
    match (expand(o), d) {
        (_, Descriptor::Unit) => {}
        (Operand::Var(v), Descriptor::Bool | Descriptor::Int) => {
            let ra = reg(v).ok_or_else(bad)?;
            out.push(if *d == Descriptor::Bool { Instr::Stb { ra, addr: at } } else { Instr::Stw { ra, addr: at } });
        }
        (Operand::Const(c @ (Value::Bool(_) | Value::Int(_))), Descriptor::Bool | Descriptor::Int) => {
            let imm = imm_of(&c).ok_or_else(bad)?;
            if matches!((&c, d), (Value::Bool(_), Descriptor::Int) | (Value::Int(_), Descriptor::Bool)) {
                return Err(bad());
            }
            out.push(Instr::Ldi { rd: T0, imm });
            out.push(if *d == Descriptor::Bool {
                Instr::Stb { ra: T0, addr: at }
            } else {
                Instr::Stw { ra: T0, addr: at }
            });
        }
        (Operand::Const(Value::Double(x)), Descriptor::Double) => {
            if co.f32_doubles {
                word((x as f32).to_bits() as i32, at, out);
            } else {
                let bits = x.to_bits();
                out.push(Instr::Ldi { rd: T0, imm: bits as u32 as i32 });
                out.push(Instr::Ldi { rd: T1, imm: (bits >> 32) as u32 as i32 });
                out.push(Instr::Std { ra: T0, rb: T1, addr: at });
            }
        }
        (Operand::Tuple(xs), Descriptor::Tuple(ds)) if xs.len() == ds.len() => {
            let mut off = at;
            for (x, e) in xs.iter().zip(ds) {
                store(x, e, off, end, reg, co, out)?;
                off += e.fixed_size(co) as u32;
            }
        }
        (Operand::Array(xs), Descriptor::Array(e)) => {
            let region = *end;
            let es = e.fixed_size(co) as u32;
            word((region - at) as i32, at, out);
            word(xs.len() as i32, region, out);
            *end = region + 4 + es * xs.len() as u32;
            for (i, x) in xs.iter().enumerate() {
                store(x, e, region + 4 + i as u32 * es, end, reg, co, out)?;
            }
        }
        _ => return Err(bad()),
    }
    Ok(())
}

/// Assembly text for a scheduled residual program.
pub fn emit(timed: &TimedIR, config: &PlatformConfig, opts: &EmitOptions) -> Result<String, CodegenError> {
    let p = timed.proc();
    let desc = Descriptor::from_type(&p.ret).map_err(|e| CodegenError::UnsupportedReturn(e.to_string()))?;
    let used = used_vars(p);
    let n = p.blocks.len();
    let mut body = Vec::with_capacity(n);
    let mut moves = Vec::with_capacity(n);
    for b in 0..n as BlockId {
        body.push(select_block(p, b, &used)?);
        moves.push(select_moves(p, b)?);
    }
    let all: Vec<Vec<VInst>> = body.iter().zip(&moves).map(|(a, m)| a.iter().chain(m).cloned().collect()).collect();
    let regs = allocate(p, &all)?;

    let mut targets = BTreeSet::new();
    let order = p.rpo();
    for &b in &order {
        targets.extend(p.block(b).term.successors());
    }
    let mut max_q: Option<u32> = None;
    for blk in &p.blocks {
        for inst in &blk.insts {
            let qs = match inst {
                Inst::QOp(q) => qop_qubits(q).map(|(t, c)| [t, c].concat()).unwrap_or_default(),
                Inst::AllocPhys(qs) => qs.clone(),
                _ => vec![],
            };
            max_q = qs.into_iter().chain(max_q).max();
        }
    }

    let mut text = format!(".qubits {}\n.rettype {desc}\n", max_q.map_or(0, |q| q + 1));
    if opts.f32_doubles {
        text.push_str(".encoding f32\n");
    }
    let mut lines: Vec<Result<Instr, String>> = Vec::new();
    for &b in &order {
        let bi = b as usize;
        let blk = p.block(b);
        let bt = &timed.blocks[bi];
        if targets.contains(&b) {
            lines.push(Err(label(b).name));
        }
        let mut events: Vec<(i64, usize)> = blk
            .insts
            .iter()
            .enumerate()
            .filter(|(_, i)| matches!(i, Inst::QOp(_)))
            .map(|(i, _)| (bt.starts[i].expect("scheduled"), i))
            .collect();
        events.sort();
        let mut cur = 0i64;
        let wait = |n: i64, lines: &mut Vec<Result<Instr, String>>| {
            if n > 0 {
                lines.push(Ok(Instr::Qwait { n: n as u32 }));
            }
        };
        for (s, i) in events {
            wait(s - cur, &mut lines);
            cur = s;
            let Inst::QOp(q) = &blk.insts[i] else { unreachable!() };
            lines.push(Ok(quantum(q, config)?));
        }
        wait(bt.quantum_end - cur, &mut lines);
        for v in &body[bi] {
            lines.push(Ok(lower_vinst(&regs, v)));
        }
        wait(bt.pad, &mut lines);
        match &blk.term {
            Terminator::Jump { target, .. } => {
                for v in &moves[bi] {
                    lines.push(Ok(lower_vinst(&regs, v)));
                }
                lines.push(Ok(Instr::Jmp { target: label(*target) }));
            }
            Terminator::Branch { cond, then_to, else_to } => {
                let Operand::Var(c) = cond else {
                    return Err(CodegenError::Unsupported(format!("branch on {cond}")));
                };
                lines.push(Ok(Instr::Cmp { ra: regs[*c as usize].expect("allocated"), rb: 0 }));
                lines.push(Ok(Instr::Br { cond: Cond::Ne, target: label(*then_to) }));
                lines.push(Ok(Instr::Jmp { target: label(*else_to) }));
            }
            Terminator::Return { value } => {
                let r = |v: VarId| regs.get(v as usize).copied().flatten();
                for ins in emit_result_epilogue(value, &desc, &r, *opts)? {
                    lines.push(Ok(ins));
                }
            }
            Terminator::Call { .. } => return Err(CodegenError::Unsupported("a call in residual code".into())),
        }
    }
    for l in lines {
        match l {
            Ok(ins) => writeln!(text, "    {ins}").unwrap(),
            Err(name) => writeln!(text, "{name}:").unwrap(),
        }
    }
    Ok(text)
}
