//! Statement-level kernel IR: procedures made of basic blocks.
//!
//! Lowered programs use mutable variable slots and calls. Residual programs
//! produced by partial execution use the same types but have one procedure,
//! no calls, constant qubit indices, and block parameters fed by jumps.

use std::fmt::{self, Write};

use thiserror::Error;

use crate::frontend::ast::TimingCmp;
use crate::types::Type;

pub type VarId = u32;
pub type BlockId = u32;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OpRef {
    Proc(u32),
    Opaque(String),
}

/// Run-time values.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Unit,
    Bool(bool),
    Int(i32),
    Double(f64),
    /// Whole nanoseconds.
    Time(i64),
    Qubit(u32),
    Timer(u32),
    Array(Vec<Value>),
    Tuple(Vec<Value>),
    Op(OpRef),
}

impl Value {
    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i32> {
        match self {
            Value::Int(v) => Some(*v),
            _ => None,
        }
    }

    /// Numeric view used for gate parameters.
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(v) => Some(*v as f64),
            Value::Double(v) => Some(*v),
            Value::Bool(b) => Some(*b as i32 as f64),
            _ => None,
        }
    }

    /// Physical qubits held by a qubit or qubit array.
    pub fn qubits(&self) -> Option<Vec<u32>> {
        match self {
            Value::Qubit(q) => Some(vec![*q]),
            Value::Array(vs) => vs.iter().map(|v| if let Value::Qubit(q) = v { Some(*q) } else { None }).collect(),
            _ => None,
        }
    }

    /// Bitwise identity (doubles compare by bit pattern).
    pub fn same(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Double(a), Value::Double(b)) => a.to_bits() == b.to_bits(),
            (Value::Array(a), Value::Array(b)) | (Value::Tuple(a), Value::Tuple(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.same(y))
            }
            _ => self == other,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Unit => f.write_str("()"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(v) => write!(f, "{v}"),
            Value::Double(v) => f.write_str(&crate::frontend::pretty::fmt_double(*v)),
            Value::Time(v) => write!(f, "{v}ns"),
            Value::Qubit(q) => write!(f, "q{q}"),
            Value::Timer(t) => write!(f, "timer{t}"),
            Value::Array(vs) => {
                f.write_str("{")?;
                for (i, v) in vs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("}")
            }
            Value::Tuple(vs) => {
                f.write_str("(")?;
                for (i, v) in vs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str(")")
            }
            Value::Op(OpRef::Proc(p)) => write!(f, "proc{p}"),
            Value::Op(OpRef::Opaque(n)) => write!(f, "@{n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Operand {
    Var(VarId),
    Const(Value),
    /// Aggregates with some non-constant leaves; only residual code builds them.
    Tuple(Vec<Operand>),
    Array(Vec<Operand>),
}

impl Operand {
    pub fn as_const(&self) -> Option<&Value> {
        match self {
            Operand::Const(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_const(&self) -> bool {
        match self {
            Operand::Const(_) => true,
            Operand::Var(_) => false,
            Operand::Tuple(xs) | Operand::Array(xs) => xs.iter().all(Operand::is_const),
        }
    }

    pub fn for_each_var(&self, f: &mut dyn FnMut(VarId)) {
        match self {
            Operand::Var(v) => f(*v),
            Operand::Const(_) => {}
            Operand::Tuple(xs) | Operand::Array(xs) => xs.iter().for_each(|x| x.for_each_var(f)),
        }
    }

    pub fn map_vars(&mut self, f: &mut dyn FnMut(VarId) -> Option<Operand>) {
        match self {
            Operand::Var(v) => {
                if let Some(new) = f(*v) {
                    *self = new;
                }
            }
            Operand::Const(_) => {}
            Operand::Tuple(xs) | Operand::Array(xs) => xs.iter_mut().for_each(|x| x.map_vars(f)),
        }
    }
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Var(v) => write!(f, "%{v}"),
            Operand::Const(c) => write!(f, "{c}"),
            Operand::Tuple(xs) => write!(f, "({})", join(xs)),
            Operand::Array(xs) => write!(f, "{{{}}}", join(xs)),
        }
    }
}

fn join<T: fmt::Display>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

#[derive(Debug, Clone, PartialEq)]
pub enum PrimOp {
    Copy,
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Neg,
    Not,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
    /// Widens to the given type (int to double, element-wise for aggregates).
    Convert(Type),
    /// Integer nanoseconds to `time`.
    IntToTime,
    MakeTuple,
    MakeArray,
    TupleGet(u32),
    Index,
    Length,
    /// `(array, index, value)` to a new array.
    ArraySet,
}

impl PrimOp {
    pub fn name(&self) -> String {
        match self {
            PrimOp::Convert(t) => format!("convert<{t}>"),
            PrimOp::TupleGet(i) => format!("get.{i}"),
            other => format!("{other:?}").to_lowercase(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QKind {
    Gate,
    Measure,
    Reset,
    Pulse,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct IrTiming {
    pub constraints: Vec<(Operand, TimingCmp, Operand)>,
    pub resets: Vec<Operand>,
}

impl IrTiming {
    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty() && self.resets.is_empty()
    }

    fn operands(&self) -> impl Iterator<Item = &Operand> {
        self.constraints.iter().flat_map(|(a, _, b)| [a, b]).chain(self.resets.iter())
    }

    fn operands_mut(&mut self) -> impl Iterator<Item = &mut Operand> {
        self.constraints.iter_mut().flat_map(|(a, _, b)| [a, b]).chain(self.resets.iter_mut())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QOp {
    pub name: String,
    pub kind: QKind,
    pub qubits: Vec<Operand>,
    pub params: Vec<Operand>,
    /// Each control operand is a qubit or a qubit array.
    pub controls: Vec<Operand>,
    pub inverse: bool,
    pub timing: IrTiming,
    pub dest: Option<VarId>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Inst {
    Compute {
        dest: VarId,
        op: PrimOp,
        args: Vec<Operand>,
    },
    QOp(QOp),
    /// Reset without an operation (`timer t;`).
    TimerReset {
        timer: Operand,
    },
    /// `count == None` binds one qubit, otherwise a qubit array.
    Alloc {
        dest: VarId,
        count: Option<Operand>,
    },
    Free {
        qubits: Operand,
    },
    /// Allocation bookkeeping in residual code.
    AllocPhys(Vec<u32>),
    FreePhys(Vec<u32>),
}

impl Inst {
    pub fn for_each_use(&self, f: &mut dyn FnMut(VarId)) {
        match self {
            Inst::Compute { args, .. } => args.iter().for_each(|a| a.for_each_var(f)),
            Inst::QOp(q) => q
                .qubits
                .iter()
                .chain(&q.params)
                .chain(&q.controls)
                .chain(q.timing.operands())
                .for_each(|a| a.for_each_var(f)),
            Inst::TimerReset { timer } => timer.for_each_var(f),
            Inst::Alloc { count, .. } => {
                if let Some(c) = count {
                    c.for_each_var(f)
                }
            }
            Inst::Free { qubits } => qubits.for_each_var(f),
            Inst::AllocPhys(_) | Inst::FreePhys(_) => {}
        }
    }

    pub fn operands_mut(&mut self) -> Vec<&mut Operand> {
        match self {
            Inst::Compute { args, .. } => args.iter_mut().collect(),
            Inst::QOp(q) => q
                .qubits
                .iter_mut()
                .chain(q.params.iter_mut())
                .chain(q.controls.iter_mut())
                .chain(q.timing.operands_mut())
                .collect(),
            Inst::TimerReset { timer } => vec![timer],
            Inst::Alloc { count, .. } => count.iter_mut().collect(),
            Inst::Free { qubits } => vec![qubits],
            Inst::AllocPhys(_) | Inst::FreePhys(_) => vec![],
        }
    }

    pub fn def(&self) -> Option<VarId> {
        match self {
            Inst::Compute { dest, .. } | Inst::Alloc { dest, .. } => Some(*dest),
            Inst::QOp(q) => q.dest,
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum IrModifier {
    Control(Vec<Operand>),
    Invert,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Terminator {
    Jump {
        target: BlockId,
        args: Vec<Operand>,
    },
    Branch {
        cond: Operand,
        then_to: BlockId,
        else_to: BlockId,
    },
    Call {
        dest: Option<VarId>,
        callee: Operand,
        args: Vec<Operand>,
        modifiers: Vec<IrModifier>,
        timing: IrTiming,
        next: BlockId,
    },
    Return {
        value: Operand,
    },
}

impl Terminator {
    pub fn successors(&self) -> Vec<BlockId> {
        match self {
            Terminator::Jump { target, .. } => vec![*target],
            Terminator::Branch { then_to, else_to, .. } => vec![*then_to, *else_to],
            Terminator::Call { next, .. } => vec![*next],
            Terminator::Return { .. } => vec![],
        }
    }

    pub fn for_each_use(&self, f: &mut dyn FnMut(VarId)) {
        self.operands().into_iter().for_each(|o| o.for_each_var(f));
    }

    pub fn operands(&self) -> Vec<&Operand> {
        match self {
            Terminator::Jump { args, .. } => args.iter().collect(),
            Terminator::Branch { cond, .. } => vec![cond],
            Terminator::Call { callee, args, modifiers, timing, .. } => {
                let mut v: Vec<&Operand> = vec![callee];
                v.extend(args.iter());
                for m in modifiers {
                    if let IrModifier::Control(qs) = m {
                        v.extend(qs.iter());
                    }
                }
                v.extend(timing.operands());
                v
            }
            Terminator::Return { value } => vec![value],
        }
    }

    pub fn operands_mut(&mut self) -> Vec<&mut Operand> {
        match self {
            Terminator::Jump { args, .. } => args.iter_mut().collect(),
            Terminator::Branch { cond, .. } => vec![cond],
            Terminator::Call { callee, args, modifiers, timing, .. } => {
                let mut v: Vec<&mut Operand> = vec![callee];
                v.extend(args.iter_mut());
                for m in modifiers {
                    if let IrModifier::Control(qs) = m {
                        v.extend(qs.iter_mut());
                    }
                }
                v.extend(timing.operands_mut());
                v
            }
            Terminator::Return { value } => vec![value],
        }
    }

    pub fn map_targets(&mut self, f: &mut dyn FnMut(BlockId) -> BlockId) {
        match self {
            Terminator::Jump { target, .. } => *target = f(*target),
            Terminator::Branch { then_to, else_to, .. } => {
                *then_to = f(*then_to);
                *else_to = f(*else_to);
            }
            Terminator::Call { next, .. } => *next = f(*next),
            Terminator::Return { .. } => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub params: Vec<VarId>,
    pub insts: Vec<Inst>,
    pub term: Terminator,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Proc {
    pub name: String,
    pub params: Vec<VarId>,
    pub ret: Type,
    pub var_types: Vec<Type>,
    pub var_names: Vec<String>,
    pub blocks: Vec<Block>,
    pub entry: BlockId,
}

impl Proc {
    pub fn block(&self, b: BlockId) -> &Block {
        &self.blocks[b as usize]
    }

    pub fn new_var(&mut self, ty: Type, name: impl Into<String>) -> VarId {
        self.var_types.push(ty);
        self.var_names.push(name.into());
        (self.var_types.len() - 1) as VarId
    }

    pub fn predecessors(&self) -> Vec<Vec<BlockId>> {
        let mut preds = vec![Vec::new(); self.blocks.len()];
        for (i, b) in self.blocks.iter().enumerate() {
            for s in b.term.successors() {
                preds[s as usize].push(i as BlockId);
            }
        }
        preds
    }

    /// Reverse post-order of blocks reachable from the entry.
    pub fn rpo(&self) -> Vec<BlockId> {
        let n = self.blocks.len();
        let mut seen = vec![false; n];
        let mut post = Vec::with_capacity(n);
        let mut stack: Vec<(BlockId, usize)> = vec![(self.entry, 0)];
        seen[self.entry as usize] = true;
        while let Some((b, i)) = stack.pop() {
            let succs = self.block(b).term.successors();
            if i < succs.len() {
                stack.push((b, i + 1));
                let s = succs[i];
                if !seen[s as usize] {
                    seen[s as usize] = true;
                    stack.push((s, 0));
                }
            } else {
                post.push(b);
            }
        }
        post.reverse();
        post
    }

    /// Position of each block in [`Proc::rpo`]; unreachable blocks get `u32::MAX`.
    pub fn rpo_index(&self) -> Vec<u32> {
        let mut idx = vec![u32::MAX; self.blocks.len()];
        for (i, b) in self.rpo().into_iter().enumerate() {
            idx[b as usize] = i as u32;
        }
        idx
    }

    /// Edges `(from, to)` whose target does not come later in RPO.
    pub fn back_edges(&self) -> Vec<(BlockId, BlockId)> {
        let idx = self.rpo_index();
        let mut out = Vec::new();
        for (i, b) in self.blocks.iter().enumerate() {
            if idx[i] == u32::MAX {
                continue;
            }
            for s in b.term.successors() {
                if idx[s as usize] <= idx[i] {
                    out.push((i as BlockId, s));
                }
            }
        }
        out
    }

    /// Blocks of the natural loop of each back edge, keyed by header.
    pub fn natural_loops(&self) -> Vec<(BlockId, Vec<bool>)> {
        let preds = self.predecessors();
        let mut loops: Vec<(BlockId, Vec<bool>)> = Vec::new();
        for (latch, header) in self.back_edges() {
            let pos = match loops.iter().position(|(h, _)| *h == header) {
                Some(p) => p,
                None => {
                    let mut body = vec![false; self.blocks.len()];
                    body[header as usize] = true;
                    loops.push((header, body));
                    loops.len() - 1
                }
            };
            let body = &mut loops[pos].1;
            let mut stack = vec![latch];
            while let Some(b) = stack.pop() {
                if !body[b as usize] {
                    body[b as usize] = true;
                    stack.extend(preds[b as usize].iter().copied());
                }
            }
        }
        loops
    }

    /// Variables live on entry to each block.
    pub fn live_in(&self) -> Vec<Vec<bool>> {
        let n = self.blocks.len();
        let nv = self.var_types.len();
        let mut gen = vec![vec![false; nv]; n];
        let mut kill = vec![vec![false; nv]; n];
        for (i, b) in self.blocks.iter().enumerate() {
            let (g, k) = (&mut gen[i], &mut kill[i]);
            for inst in &b.insts {
                inst.for_each_use(&mut |v| {
                    if !k[v as usize] {
                        g[v as usize] = true;
                    }
                });
                if let Some(d) = inst.def() {
                    k[d as usize] = true;
                }
            }
            b.term.for_each_use(&mut |v| {
                if !k[v as usize] {
                    g[v as usize] = true;
                }
            });
            for p in &b.params {
                k[*p as usize] = true;
                g[*p as usize] = false;
            }
        }
        let mut live = vec![vec![false; nv]; n];
        let order = self.rpo();
        let mut changed = true;
        while changed {
            changed = false;
            for &b in order.iter().rev() {
                let bi = b as usize;
                let mut out = vec![false; nv];
                let term = &self.blocks[bi].term;
                for s in term.successors() {
                    for (v, l) in live[s as usize].iter().enumerate() {
                        if *l {
                            out[v] = true;
                        }
                    }
                }
                if let Terminator::Call { dest: Some(d), .. } = term {
                    out[*d as usize] = false;
                }
                let mut inn = gen[bi].clone();
                for v in 0..nv {
                    if out[v] && !kill[bi][v] {
                        inn[v] = true;
                    }
                }
                if inn != live[bi] {
                    live[bi] = inn;
                    changed = true;
                }
            }
        }
        live
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelIR {
    pub procs: Vec<Proc>,
    pub main: u32,
}

impl KernelIR {
    pub fn main_proc(&self) -> &Proc {
        &self.procs[self.main as usize]
    }

    pub fn count_qops(&self) -> usize {
        self.procs.iter().flat_map(|p| &p.blocks).flat_map(|b| &b.insts).filter(|i| matches!(i, Inst::QOp(_))).count()
    }
}

fn fmt_timing(t: &IrTiming) -> String {
    let mut s = String::new();
    if !t.constraints.is_empty() {
        let cs: Vec<String> = t.constraints.iter().map(|(a, c, b)| format!("{a} {} {b}", c.as_str())).collect();
        let _ = write!(s, " @{{{}}}", cs.join(" && "));
    }
    if !t.resets.is_empty() {
        let _ = write!(s, " !{{{}}}", join(&t.resets));
    }
    s
}

impl fmt::Display for Inst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Inst::Compute { dest, op, args } => write!(f, "%{dest} = {} {}", op.name(), join(args)),
            Inst::QOp(q) => {
                if let Some(d) = q.dest {
                    write!(f, "%{d} = ")?;
                }
                let kind = match q.kind {
                    QKind::Gate => "qop",
                    QKind::Measure => "measure",
                    QKind::Reset => "reset",
                    QKind::Pulse => "pulse",
                };
                write!(f, "{kind} {} [{}]", q.name, join(&q.qubits))?;
                if !q.params.is_empty() {
                    write!(f, " ({})", join(&q.params))?;
                }
                if q.inverse {
                    f.write_str(" inv")?;
                }
                if !q.controls.is_empty() {
                    write!(f, " ctrl [{}]", join(&q.controls))?;
                }
                f.write_str(&fmt_timing(&q.timing))
            }
            Inst::TimerReset { timer } => write!(f, "reset_timer {timer}"),
            Inst::Alloc { dest, count: None } => write!(f, "%{dest} = alloc"),
            Inst::Alloc { dest, count: Some(c) } => write!(f, "%{dest} = alloc [{c}]"),
            Inst::Free { qubits } => write!(f, "free {qubits}"),
            Inst::AllocPhys(qs) => {
                write!(f, "alloc {}", qs.iter().map(|q| format!("q{q}")).collect::<Vec<_>>().join(", "))
            }
            Inst::FreePhys(qs) => {
                write!(f, "free {}", qs.iter().map(|q| format!("q{q}")).collect::<Vec<_>>().join(", "))
            }
        }
    }
}

impl fmt::Display for Terminator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Terminator::Jump { target, args } if args.is_empty() => write!(f, "jump b{target}"),
            Terminator::Jump { target, args } => write!(f, "jump b{target}({})", join(args)),
            Terminator::Branch { cond, then_to, else_to } => write!(f, "branch {cond} b{then_to} b{else_to}"),
            Terminator::Call { dest, callee, args, modifiers, timing, next } => {
                if let Some(d) = dest {
                    write!(f, "%{d} = ")?;
                }
                f.write_str("call ")?;
                for m in modifiers {
                    match m {
                        IrModifier::Control(qs) => write!(f, "control({}) ", join(qs))?,
                        IrModifier::Invert => f.write_str("invert ")?,
                    }
                }
                write!(f, "{callee}({}){} then b{next}", join(args), fmt_timing(timing))
            }
            Terminator::Return { value } => write!(f, "return {value}"),
        }
    }
}

impl fmt::Display for Proc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let params: Vec<String> =
            self.params.iter().map(|p| format!("%{p}: {}", self.var_types[*p as usize])).collect();
        writeln!(f, "proc {}({}): {} entry b{}", self.name, params.join(", "), self.ret, self.entry)?;
        for (i, b) in self.blocks.iter().enumerate() {
            if b.params.is_empty() {
                writeln!(f, "b{i}:")?;
            } else {
                let ps: Vec<String> =
                    b.params.iter().map(|p| format!("%{p}: {}", self.var_types[*p as usize])).collect();
                writeln!(f, "b{i}({}):", ps.join(", "))?;
            }
            for inst in &b.insts {
                writeln!(f, "    {inst}")?;
            }
            writeln!(f, "    {}", b.term)?;
        }
        Ok(())
    }
}

impl fmt::Display for KernelIR {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.procs.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("index {index} out of bounds for array of length {len}")]
    IndexOutOfBounds { index: i64, len: usize },
    #[error("ill-typed operands for `{0}`")]
    IllTyped(String),
}

fn time_scale(t: i64, k: f64) -> i64 {
    (t as f64 * k).round() as i64
}

fn convert(v: &Value, to: &Type) -> Value {
    match (v, to) {
        (Value::Int(i), Type::Double) => Value::Double(*i as f64),
        (Value::Array(vs), Type::Array(t)) => Value::Array(vs.iter().map(|x| convert(x, t)).collect()),
        (Value::Tuple(vs), Type::Tuple(ts)) if vs.len() == ts.len() => {
            Value::Tuple(vs.iter().zip(ts).map(|(x, t)| convert(x, t)).collect())
        }
        _ => v.clone(),
    }
}

/// Evaluates a primitive on constant operands. Integers wrap at 32 bits.
pub fn eval_prim(op: &PrimOp, args: &[Value]) -> Result<Value, EvalError> {
    use Value::*;
    let ill = || EvalError::IllTyped(op.name());
    Ok(match (op, args) {
        (PrimOp::Copy, [a]) => a.clone(),
        (PrimOp::Convert(t), [a]) => convert(a, t),
        (PrimOp::IntToTime, [Int(a)]) => Time(*a as i64),
        (PrimOp::Add, [Int(a), Int(b)]) => Int(a.wrapping_add(*b)),
        (PrimOp::Sub, [Int(a), Int(b)]) => Int(a.wrapping_sub(*b)),
        (PrimOp::Mul, [Int(a), Int(b)]) => Int(a.wrapping_mul(*b)),
        (PrimOp::Div, [Int(_), Int(0)]) | (PrimOp::Mod, [Int(_), Int(0)]) => return Err(EvalError::DivisionByZero),
        (PrimOp::Div, [Int(a), Int(b)]) => Int(a.wrapping_div(*b)),
        (PrimOp::Mod, [Int(a), Int(b)]) => Int(a.wrapping_rem(*b)),
        (PrimOp::Add, [Double(a), Double(b)]) => Double(a + b),
        (PrimOp::Sub, [Double(a), Double(b)]) => Double(a - b),
        (PrimOp::Mul, [Double(a), Double(b)]) => Double(a * b),
        (PrimOp::Div, [Double(a), Double(b)]) => Double(a / b),
        (PrimOp::Add, [Time(a), Time(b)]) => Time(a.wrapping_add(*b)),
        (PrimOp::Sub, [Time(a), Time(b)]) => Time(a.wrapping_sub(*b)),
        (PrimOp::Mul, [Time(a), Int(b)]) | (PrimOp::Mul, [Int(b), Time(a)]) => Time(a.wrapping_mul(*b as i64)),
        (PrimOp::Mul, [Time(a), Double(b)]) | (PrimOp::Mul, [Double(b), Time(a)]) => Time(time_scale(*a, *b)),
        (PrimOp::Div, [Time(_), Int(0)]) => return Err(EvalError::DivisionByZero),
        (PrimOp::Div, [Time(a), Int(b)]) => Time((*a as f64 / *b as f64).round() as i64),
        (PrimOp::Div, [Time(a), Double(b)]) => Time(time_scale(*a, 1.0 / *b)),
        (PrimOp::Neg, [Int(a)]) => Int(a.wrapping_neg()),
        (PrimOp::Neg, [Double(a)]) => Double(-a),
        (PrimOp::Neg, [Time(a)]) => Time(-a),
        (PrimOp::Not, [Bool(a)]) => Bool(!a),
        (PrimOp::And, [Bool(a), Bool(b)]) => Bool(*a && *b),
        (PrimOp::Or, [Bool(a), Bool(b)]) => Bool(*a || *b),
        (PrimOp::Eq | PrimOp::Ne | PrimOp::Lt | PrimOp::Le | PrimOp::Gt | PrimOp::Ge, [a, b]) => {
            let ord = match (a, b) {
                (Int(x), Int(y)) => x.partial_cmp(y),
                (Double(x), Double(y)) => x.partial_cmp(y),
                (Time(x), Time(y)) => x.partial_cmp(y),
                (Bool(x), Bool(y)) => x.partial_cmp(y),
                _ => return Err(ill()),
            };
            use std::cmp::Ordering::*;
            Bool(match op {
                PrimOp::Eq => ord == Some(Equal),
                PrimOp::Ne => ord != Some(Equal),
                PrimOp::Lt => ord == Some(Less),
                PrimOp::Le => matches!(ord, Some(Less | Equal)),
                PrimOp::Gt => ord == Some(Greater),
                _ => matches!(ord, Some(Greater | Equal)),
            })
        }
        (PrimOp::MakeTuple, xs) => Tuple(xs.to_vec()),
        (PrimOp::MakeArray, xs) => Array(xs.to_vec()),
        (PrimOp::TupleGet(i), [Tuple(xs)]) => xs.get(*i as usize).cloned().ok_or_else(ill)?,
        (PrimOp::Index, [Array(xs), Int(i)]) => xs
            .get(usize::try_from(*i).map_err(|_| EvalError::IndexOutOfBounds { index: *i as i64, len: xs.len() })?)
            .cloned()
            .ok_or(EvalError::IndexOutOfBounds { index: *i as i64, len: xs.len() })?,
        (PrimOp::Length, [Array(xs)]) => Int(xs.len() as i32),
        (PrimOp::ArraySet, [Array(xs), Int(i), v]) => {
            let idx = usize::try_from(*i)
                .ok()
                .filter(|i| *i < xs.len())
                .ok_or(EvalError::IndexOutOfBounds { index: *i as i64, len: xs.len() })?;
            let mut out = xs.clone();
            out[idx] = v.clone();
            Array(out)
        }
        _ => return Err(ill()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_arithmetic_wraps() {
        let r = eval_prim(&PrimOp::Add, &[Value::Int(i32::MAX), Value::Int(1)]).unwrap();
        assert_eq!(r, Value::Int(i32::MIN));
        assert_eq!(eval_prim(&PrimOp::Div, &[Value::Int(1), Value::Int(0)]), Err(EvalError::DivisionByZero));
        assert_eq!(eval_prim(&PrimOp::Div, &[Value::Int(-7), Value::Int(2)]).unwrap(), Value::Int(-3));
    }

    #[test]
    fn time_arithmetic() {
        assert_eq!(eval_prim(&PrimOp::Div, &[Value::Time(200), Value::Int(2)]).unwrap(), Value::Time(100));
        assert_eq!(eval_prim(&PrimOp::Mul, &[Value::Int(3), Value::Time(10)]).unwrap(), Value::Time(30));
    }

    #[test]
    fn arrays() {
        let a = Value::Array(vec![Value::Int(2), Value::Int(6)]);
        assert_eq!(eval_prim(&PrimOp::Length, std::slice::from_ref(&a)).unwrap(), Value::Int(2));
        assert!(matches!(
            eval_prim(&PrimOp::Index, &[a.clone(), Value::Int(2)]),
            Err(EvalError::IndexOutOfBounds { .. })
        ));
        let b = eval_prim(&PrimOp::ArraySet, &[a, Value::Int(1), Value::Int(9)]).unwrap();
        assert_eq!(b, Value::Array(vec![Value::Int(2), Value::Int(9)]));
    }
}
