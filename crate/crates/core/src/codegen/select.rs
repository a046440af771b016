//! Instruction selection for the classical parts of a block, over
//! variables instead of registers. The scheduler's cost model counts these
//! instructions, so selection must not depend on register assignment.

use super::isa::{AluOp, Cond};
use super::CodegenError;
use crate::ir::*;
use crate::sched::CostModel;
use crate::types::Type;

/// Fixed scratch registers `r24..r31`; variables live in `r1..r23`.
pub const FIRST_TEMP: u8 = 24;
pub const NUM_TEMPS: u8 = 8;
pub const ALLOCATABLE: u8 = 23;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum V {
    Zero,
    Var(VarId),
    Temp(u8),
}

#[derive(Debug, Clone, PartialEq)]
pub enum VInst {
    Ldi { rd: V, imm: i32 },
    Alu { op: AluOp, rd: V, ra: V, rb: V },
    Cmp { ra: V, rb: V },
    Set { rd: V, cond: Cond },
    Fmr { rd: V, q: u32 },
}

impl VInst {
    pub fn def(&self) -> Option<V> {
        match self {
            VInst::Ldi { rd, .. } | VInst::Alu { rd, .. } | VInst::Set { rd, .. } | VInst::Fmr { rd, .. } => Some(*rd),
            VInst::Cmp { .. } => None,
        }
    }

    pub fn uses(&self) -> Vec<V> {
        match self {
            VInst::Alu { ra, rb, .. } | VInst::Cmp { ra, rb } => vec![*ra, *rb],
            _ => vec![],
        }
    }
}

pub fn imm_of(v: &Value) -> Option<i32> {
    match v {
        Value::Bool(b) => Some(*b as i32),
        Value::Int(i) => Some(*i),
        _ => None,
    }
}

/// Variables read anywhere in the procedure.
pub fn used_vars(p: &Proc) -> Vec<bool> {
    let mut used = vec![false; p.var_types.len()];
    for b in &p.blocks {
        for i in &b.insts {
            i.for_each_use(&mut |v| used[v as usize] = true);
        }
        b.term.for_each_use(&mut |v| used[v as usize] = true);
    }
    used
}

fn unsupported(what: impl Into<String>) -> CodegenError {
    CodegenError::Unsupported(what.into())
}

fn scalar(p: &Proc, v: VarId) -> Result<(), CodegenError> {
    match &p.var_types[v as usize] {
        Type::Bool | Type::Int => Ok(()),
        t => Err(unsupported(format!(
            "a run-time value of type `{t}` (the control processor has integer registers only)"
        ))),
    }
}

fn operand(p: &Proc, o: &Operand, temp: u8, out: &mut Vec<VInst>) -> Result<V, CodegenError> {
    match o {
        Operand::Var(v) => {
            scalar(p, *v)?;
            Ok(V::Var(*v))
        }
        Operand::Const(c) => {
            let imm = imm_of(c).ok_or_else(|| unsupported(format!("constant operand {c}")))?;
            out.push(VInst::Ldi { rd: V::Temp(temp), imm });
            Ok(V::Temp(temp))
        }
        other => Err(unsupported(format!("aggregate operand {other}"))),
    }
}

fn compute(p: &Proc, dest: VarId, op: &PrimOp, args: &[Operand], out: &mut Vec<VInst>) -> Result<(), CodegenError> {
    scalar(p, dest)?;
    let rd = V::Var(dest);
    let cond = |op: &PrimOp| match op {
        PrimOp::Eq => Some(Cond::Eq),
        PrimOp::Ne => Some(Cond::Ne),
        PrimOp::Lt => Some(Cond::Lt),
        PrimOp::Le => Some(Cond::Le),
        PrimOp::Gt => Some(Cond::Gt),
        PrimOp::Ge => Some(Cond::Ge),
        _ => None,
    };
    let alu = match op {
        PrimOp::Add => Some(AluOp::Add),
        PrimOp::Sub => Some(AluOp::Sub),
        PrimOp::Mul => Some(AluOp::Mul),
        PrimOp::And => Some(AluOp::And),
        PrimOp::Or => Some(AluOp::Or),
        _ => None,
    };
    match op {
        PrimOp::Copy | PrimOp::Convert(Type::Int) | PrimOp::Convert(Type::Bool) => match &args[0] {
            Operand::Const(c) => {
                let imm = imm_of(c).ok_or_else(|| unsupported(format!("constant {c}")))?;
                out.push(VInst::Ldi { rd, imm });
            }
            a => {
                let ra = operand(p, a, FIRST_TEMP + 6, out)?;
                out.push(VInst::Alu { op: AluOp::Add, rd, ra, rb: V::Zero });
            }
        },
        PrimOp::Neg => {
            let ra = operand(p, &args[0], FIRST_TEMP + 6, out)?;
            out.push(VInst::Alu { op: AluOp::Sub, rd, ra: V::Zero, rb: ra });
        }
        PrimOp::Not => {
            let ra = operand(p, &args[0], FIRST_TEMP + 6, out)?;
            out.push(VInst::Ldi { rd: V::Temp(FIRST_TEMP + 7), imm: 1 });
            out.push(VInst::Alu { op: AluOp::Xor, rd, ra, rb: V::Temp(FIRST_TEMP + 7) });
        }
        _ if alu.is_some() => {
            let ra = operand(p, &args[0], FIRST_TEMP + 6, out)?;
            let rb = operand(p, &args[1], FIRST_TEMP + 7, out)?;
            out.push(VInst::Alu { op: alu.unwrap(), rd, ra, rb });
        }
        _ if cond(op).is_some() => {
            let ra = operand(p, &args[0], FIRST_TEMP + 6, out)?;
            let rb = operand(p, &args[1], FIRST_TEMP + 7, out)?;
            out.push(VInst::Cmp { ra, rb });
            out.push(VInst::Set { rd, cond: cond(op).unwrap() });
        }
        other => return Err(unsupported(format!("run-time `{}`", other.name()))),
    }
    Ok(())
}

/// Measurement fetches followed by the block's computations.
pub fn select_block(p: &Proc, b: BlockId, used: &[bool]) -> Result<Vec<VInst>, CodegenError> {
    let mut out = Vec::new();
    let blk = p.block(b);
    for inst in &blk.insts {
        if let Inst::QOp(q) = inst {
            if let Some(d) = q.dest.filter(|d| used[*d as usize]) {
                let qb = q.qubits.first().and_then(|o| o.as_const()).and_then(|v| v.qubits());
                let qb = qb
                    .and_then(|qs| qs.first().copied())
                    .ok_or_else(|| unsupported("measurement of a run-time qubit"))?;
                out.push(VInst::Fmr { rd: V::Var(d), q: qb });
            }
        }
    }
    for inst in &blk.insts {
        if let Inst::Compute { dest, op, args } = inst {
            compute(p, *dest, op, args, &mut out)?;
        }
    }
    Ok(out)
}

/// Parallel move of jump arguments into the target's parameters, staged
/// through scratch registers.
pub fn select_moves(p: &Proc, b: BlockId) -> Result<Vec<VInst>, CodegenError> {
    let Terminator::Jump { target, args } = &p.block(b).term else { return Ok(vec![]) };
    let params = &p.block(*target).params;
    let nvars = args.iter().filter(|a| matches!(a, Operand::Var(_))).count();
    if nvars > NUM_TEMPS as usize {
        return Err(CodegenError::TooManyJumpArgs { block: b, count: nvars });
    }
    let mut out = Vec::new();
    let mut staged = Vec::new();
    for a in args {
        if let Operand::Var(v) = a {
            scalar(p, *v)?;
            let t = V::Temp(FIRST_TEMP + staged.len() as u8);
            out.push(VInst::Alu { op: AluOp::Add, rd: t, ra: V::Var(*v), rb: V::Zero });
            staged.push(t);
        }
    }
    let mut k = 0;
    for (a, &param) in args.iter().zip(params) {
        let rd = V::Var(param);
        match a {
            Operand::Var(_) => {
                out.push(VInst::Alu { op: AluOp::Add, rd, ra: staged[k], rb: V::Zero });
                k += 1;
            }
            Operand::Const(c) => {
                let imm = imm_of(c).ok_or_else(|| unsupported(format!("jump argument {c}")))?;
                out.push(VInst::Ldi { rd, imm });
            }
            other => return Err(unsupported(format!("jump argument {other}"))),
        }
    }
    Ok(out)
}

/// Instruction counts of the selected code times the classical cycle.
pub struct IsaCost {
    pub classical_cycle_ns: i64,
}

impl CostModel for IsaCost {
    fn classical_ns(&self, p: &Proc, b: BlockId) -> i64 {
        let used = used_vars(p);
        select_block(p, b, &used).map_or(0, |v| v.len() as i64) * self.classical_cycle_ns
    }

    fn edge_ns(&self, p: &Proc, b: BlockId, k: usize) -> i64 {
        let n = match &p.block(b).term {
            Terminator::Jump { .. } => select_moves(p, b).map_or(0, |m| m.len() as i64) + 1,
            // cmp, br; the fall-through edge adds a jmp.
            Terminator::Branch { .. } => 2 + k as i64,
            _ => 0,
        };
        n * self.classical_cycle_ns
    }
}
