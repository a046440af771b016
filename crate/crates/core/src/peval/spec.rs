//! Online polyvariant specializer.
//!
//! Execution follows the lowered program with abstract values that are
//! either known ([`Abs::S`]) or residual variables ([`Abs::D`]). Known work
//! is done immediately; quantum operations and measurement-dependent
//! arithmetic are emitted into a residual procedure. Blocks with several
//! predecessors and loop headers are memo points: configurations arriving
//! there are grouped by shape and share one residual block. Integer and
//! boolean leaves that differ between arrivals become block parameters;
//! any other difference gives a separate specialization.

use std::collections::{BTreeMap, HashMap};

use super::{PeError, PeOptions};
use crate::ir::*;
use crate::platform::{PlatformConfig, Semantics};
use crate::types::Type;

/// Placeholder residual variable used while probing loops.
const PROBE: VarId = VarId::MAX;

#[derive(Debug, Clone, PartialEq)]
enum Abs {
    S(Value),
    D(VarId),
    Tuple(Vec<Abs>),
    Array(Vec<Abs>),
}

impl Abs {
    fn norm(self) -> Abs {
        match self {
            Abs::Tuple(xs) if xs.iter().all(|x| matches!(x, Abs::S(_))) => Abs::S(Value::Tuple(
                xs.into_iter().map(|x| if let Abs::S(v) = x { v } else { unreachable!() }).collect(),
            )),
            Abs::Array(xs) if xs.iter().all(|x| matches!(x, Abs::S(_))) => Abs::S(Value::Array(
                xs.into_iter().map(|x| if let Abs::S(v) = x { v } else { unreachable!() }).collect(),
            )),
            other => other,
        }
    }

    fn operand(&self) -> Operand {
        match self {
            Abs::S(v) => Operand::Const(v.clone()),
            Abs::D(v) => Operand::Var(*v),
            Abs::Tuple(xs) => Operand::Tuple(xs.iter().map(Abs::operand).collect()),
            Abs::Array(xs) => Operand::Array(xs.iter().map(Abs::operand).collect()),
        }
    }

    /// Elements of an aggregate, known or not.
    fn elements(&self) -> Option<(bool, Vec<Abs>)> {
        match self {
            Abs::S(Value::Array(vs)) => Some((true, vs.iter().cloned().map(Abs::S).collect())),
            Abs::S(Value::Tuple(vs)) => Some((false, vs.iter().cloned().map(Abs::S).collect())),
            Abs::Array(xs) => Some((true, xs.clone())),
            Abs::Tuple(xs) => Some((false, xs.clone())),
            _ => None,
        }
    }
}

/// Result of abstract evaluation of a primitive.
enum Computed {
    Done(Abs),
    Residual,
}

fn compute_abs(op: &PrimOp, args: &[Abs]) -> Result<Computed, EvalError> {
    if let Some(vals) =
        args.iter().map(|a| if let Abs::S(v) = a { Some(v.clone()) } else { None }).collect::<Option<Vec<_>>>()
    {
        return eval_prim(op, &vals).map(|v| Computed::Done(Abs::S(v)));
    }
    let idx = |a: &Abs, len: usize| -> Result<Option<usize>, EvalError> {
        match a {
            Abs::S(Value::Int(i)) => usize::try_from(*i)
                .ok()
                .filter(|i| *i < len)
                .map(Some)
                .ok_or(EvalError::IndexOutOfBounds { index: *i as i64, len }),
            _ => Ok(None),
        }
    };
    Ok(Computed::Done(match (op, args) {
        (PrimOp::Copy, [a]) => a.clone(),
        (PrimOp::MakeTuple, xs) => Abs::Tuple(xs.to_vec()).norm(),
        (PrimOp::MakeArray, xs) => Abs::Array(xs.to_vec()).norm(),
        (PrimOp::TupleGet(i), [t]) => match t.elements() {
            Some((false, xs)) => xs.get(*i as usize).cloned().ok_or(EvalError::IllTyped("get".into()))?,
            _ => return Ok(Computed::Residual),
        },
        (PrimOp::Length, [a]) => match a.elements() {
            Some((true, xs)) => Abs::S(Value::Int(xs.len() as i32)),
            _ => return Ok(Computed::Residual),
        },
        (PrimOp::Index, [a, i]) => match a.elements() {
            Some((true, xs)) => match idx(i, xs.len())? {
                Some(i) => xs[i].clone(),
                None => return Ok(Computed::Residual),
            },
            _ => return Ok(Computed::Residual),
        },
        (PrimOp::ArraySet, [a, i, v]) => match a.elements() {
            Some((true, mut xs)) => match idx(i, xs.len())? {
                Some(i) => {
                    xs[i] = v.clone();
                    Abs::Array(xs).norm()
                }
                None => return Ok(Computed::Residual),
            },
            _ => return Ok(Computed::Residual),
        },
        (PrimOp::Convert(t), [a]) => match (a.elements(), t) {
            (Some((true, xs)), Type::Array(et)) => {
                let mut out = Vec::new();
                for x in xs {
                    match compute_abs(&PrimOp::Convert((**et).clone()), &[x])? {
                        Computed::Done(y) => out.push(y),
                        Computed::Residual => return Ok(Computed::Residual),
                    }
                }
                Abs::Array(out).norm()
            }
            (Some((false, xs)), Type::Tuple(ts)) => {
                let mut out = Vec::new();
                for (x, t) in xs.into_iter().zip(ts) {
                    match compute_abs(&PrimOp::Convert(t.clone()), &[x])? {
                        Computed::Done(y) => out.push(y),
                        Computed::Residual => return Ok(Computed::Residual),
                    }
                }
                Abs::Tuple(out).norm()
            }
            _ => return Ok(Computed::Residual),
        },
        _ => return Ok(Computed::Residual),
    }))
}

#[derive(Debug, Clone)]
struct Frame {
    proc: u32,
    block: BlockId,
    env: Vec<Abs>,
    /// Set while suspended at a call: result variable and continuation.
    resume: Option<(Option<VarId>, BlockId)>,
    /// Control qubits applied to every operation issued by this frame.
    controls: Vec<u32>,
    /// This frame was entered under `invert` and owns an operation buffer.
    owns_buffer: bool,
    /// Timing annotation of the call that created the frame, waiting for
    /// the first quantum operation.
    pending: Option<IrTiming>,
    /// Bumped on every unrolled iteration of a static loop, so arrivals
    /// from different iterations are never merged.
    epoch: u64,
}

#[derive(Debug, Clone)]
struct Config {
    frames: Vec<Frame>,
    used: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Tok {
    Frame { proc: u32, block: u32, resume: Option<(Option<u32>, u32)>, owns_buffer: bool },
    Controls(Vec<u32>),
    Pending(String),
    Int,
    Bool,
    Exact(String),
    Tuple(usize),
    Array(usize),
    Used(Vec<bool>),
}

type Skeleton = Vec<Tok>;

struct Leaf {
    abs: Abs,
    frame: usize,
    var: VarId,
}

struct LoopInfo {
    body: Vec<bool>,
    modified: Vec<bool>,
}

struct ProcInfo {
    rpo: Vec<u32>,
    memo: Vec<bool>,
    /// Per block: variables worth keeping on entry (live-in plus parameters).
    keep: Vec<Vec<bool>>,
    loops: HashMap<BlockId, LoopInfo>,
}

impl ProcInfo {
    fn new(p: &Proc) -> Self {
        let preds = p.predecessors();
        let rpo = p.rpo_index();
        let mut memo: Vec<bool> = preds.iter().map(|ps| ps.len() >= 2).collect();
        let mut loops = HashMap::new();
        for (header, body) in p.natural_loops() {
            memo[header as usize] = true;
            let mut modified = vec![false; p.var_types.len()];
            for (b, inside) in body.iter().enumerate() {
                if !inside {
                    continue;
                }
                let blk = &p.blocks[b];
                for v in &blk.params {
                    modified[*v as usize] = true;
                }
                for inst in &blk.insts {
                    if let Some(d) = inst.def() {
                        modified[d as usize] = true;
                    }
                }
                if let Terminator::Call { dest: Some(d), .. } = &blk.term {
                    modified[*d as usize] = true;
                }
            }
            loops.insert(header, LoopInfo { body, modified });
        }
        let mut keep = p.live_in();
        for (b, blk) in p.blocks.iter().enumerate() {
            for v in &blk.params {
                keep[b][*v as usize] = true;
            }
        }
        ProcInfo { rpo, memo, keep, loops }
    }
}

struct Spec {
    template: Vec<Option<Value>>,
    block: BlockId,
}

struct Arrival {
    config: Config,
    from: BlockId,
}

struct Task {
    config: Config,
    block: BlockId,
    /// False when the task starts exactly at a memo point it was created for.
    check_memo: bool,
}

struct Specializer<'a> {
    ir: &'a KernelIR,
    platform: &'a PlatformConfig,
    info: Vec<ProcInfo>,
    out: Proc,
    specs: HashMap<Skeleton, Vec<Spec>>,
    pending: BTreeMap<(Vec<u32>, Vec<u64>, Skeleton), Vec<Arrival>>,
    epochs: u64,
    stack: Vec<Task>,
    steps: u64,
    budget: u64,
    buffers: Vec<Vec<QOp>>,
    cur: BlockId,
}

/// Specializes `ir.main` (which takes no parameters) into a one-procedure
/// residual program. The result is not simplified.
pub fn specialize(ir: &KernelIR, platform: &PlatformConfig, opts: &PeOptions) -> Result<KernelIR, PeError> {
    let main = ir.main_proc();
    if !main.params.is_empty() {
        return Err(PeError::EntryHasParams);
    }
    let mut sp = Specializer {
        ir,
        platform,
        info: ir.procs.iter().map(ProcInfo::new).collect(),
        out: Proc {
            name: main.name.clone(),
            params: vec![],
            ret: main.ret.clone(),
            var_types: vec![],
            var_names: vec![],
            blocks: vec![],
            entry: 0,
        },
        specs: HashMap::new(),
        pending: BTreeMap::new(),
        stack: Vec::new(),
        steps: 0,
        budget: opts.step_budget,
        buffers: Vec::new(),
        cur: 0,
        epochs: 0,
    };
    let entry = sp.new_block();
    let frame = Frame {
        proc: ir.main,
        block: main.entry,
        env: vec![Abs::S(Value::Unit); main.var_types.len()],
        resume: None,
        controls: vec![],
        owns_buffer: false,
        pending: None,
        epoch: 0,
    };
    let config = Config { frames: vec![frame], used: vec![false; platform.qubit_count as usize] };
    sp.stack.push(Task { config, block: entry, check_memo: true });
    loop {
        while let Some(task) = sp.stack.pop() {
            sp.run(task)?;
        }
        let Some(((_, _, skel), arrivals)) = sp.pending.pop_first() else { break };
        sp.process_group(skel, arrivals)?;
    }
    Ok(KernelIR { procs: vec![sp.out], main: 0 })
}

impl Specializer<'_> {
    fn new_block(&mut self) -> BlockId {
        self.out.blocks.push(Block {
            params: vec![],
            insts: vec![],
            term: Terminator::Return { value: Operand::Const(Value::Unit) },
        });
        (self.out.blocks.len() - 1) as BlockId
    }

    fn set_term(&mut self, b: BlockId, t: Terminator) {
        self.out.blocks[b as usize].term = t;
    }

    fn fresh(&mut self, ty: Type) -> VarId {
        self.out.new_var(ty, "")
    }

    fn tick(&mut self) -> Result<(), PeError> {
        self.steps += 1;
        if self.steps > self.budget {
            Err(PeError::StepBudgetExceeded(self.budget))
        } else {
            Ok(())
        }
    }

    fn proc_name(&self, cfg: &Config) -> String {
        self.ir.procs[cfg.frames.last().unwrap().proc as usize].name.clone()
    }

    fn dynamic(&self, cfg: &Config, what: impl Into<String>) -> PeError {
        PeError::DynamicValueRequired { proc: self.proc_name(cfg), what: what.into() }
    }

    fn eval(&self, cfg: &Config, o: &Operand) -> Abs {
        let env = &cfg.frames.last().unwrap().env;
        eval_in(env, o)
    }

    fn static_qubits(&self, cfg: &Config, a: &Abs, what: &str) -> Result<Vec<u32>, PeError> {
        match a {
            Abs::S(v) => v.qubits().ok_or_else(|| self.dynamic(cfg, what)),
            _ => Err(self.dynamic(cfg, what)),
        }
    }

    fn static_timing(&self, cfg: &Config, t: &IrTiming) -> Result<IrTiming, PeError> {
        let mut out = IrTiming::default();
        for (timer, cmp, value) in &t.constraints {
            let timer = match self.eval(cfg, timer) {
                Abs::S(v @ Value::Timer(_)) => v,
                _ => return Err(self.dynamic(cfg, "timer")),
            };
            let value = match self.eval(cfg, value) {
                Abs::S(v @ Value::Time(_)) => v,
                _ => return Err(self.dynamic(cfg, "timing constraint bound")),
            };
            out.constraints.push((Operand::Const(timer), *cmp, Operand::Const(value)));
        }
        for r in &t.resets {
            match self.eval(cfg, r) {
                Abs::S(v @ Value::Timer(_)) => out.resets.push(Operand::Const(v)),
                _ => return Err(self.dynamic(cfg, "timer")),
            }
        }
        Ok(out)
    }

    fn sink(&mut self, q: QOp) {
        match self.buffers.last_mut() {
            Some(buf) => buf.push(q),
            None => self.out.blocks[self.cur as usize].insts.push(Inst::QOp(q)),
        }
    }

    fn emit_plain(&mut self, cfg: &Config, inst: Inst, what: &str) -> Result<(), PeError> {
        if !self.buffers.is_empty() {
            return Err(PeError::NonInvertible { proc: self.proc_name(cfg), what: what.into() });
        }
        self.out.blocks[self.cur as usize].insts.push(inst);
        Ok(())
    }

    /// Issues a platform operation with already evaluated operands.
    #[allow(clippy::too_many_arguments)]
    fn issue(
        &mut self,
        cfg: &mut Config,
        name: &str,
        args: &[Abs],
        extra_controls: Vec<u32>,
        inverse: bool,
        mut timing: IrTiming,
        dest: Option<VarId>,
    ) -> Result<(), PeError> {
        let proc = self.proc_name(cfg);
        let def = self.platform.op(name).ok_or_else(|| PeError::InvalidQuantumOp {
            proc: proc.clone(),
            what: format!("unknown operation `{name}`"),
        })?;
        let kind = match def.semantics {
            Semantics::Measure => QKind::Measure,
            Semantics::Reset => QKind::Reset,
            Semantics::Pulse(_) => QKind::Pulse,
            _ => QKind::Gate,
        };
        let nq = def.num_qubits as usize;
        if args.len() != nq + def.params.len() {
            return Err(PeError::InvalidQuantumOp {
                proc,
                what: format!("`{name}` called with {} operands", args.len()),
            });
        }
        let mut qubits = Vec::new();
        for a in &args[..nq] {
            match a {
                Abs::S(Value::Qubit(q)) => qubits.push(*q),
                _ => return Err(self.dynamic(cfg, format!("qubit operand of `{name}`"))),
            }
        }
        let mut params = Vec::new();
        for a in &args[nq..] {
            match a {
                Abs::S(v @ (Value::Int(_) | Value::Double(_) | Value::Bool(_))) => {
                    params.push(Operand::Const(v.clone()))
                }
                _ => return Err(self.dynamic(cfg, format!("parameter of `{name}`"))),
            }
        }
        let mut controls = cfg.frames.last().unwrap().controls.clone();
        controls.extend(extra_controls);
        let mut all: Vec<u32> = qubits.iter().chain(&controls).copied().collect();
        all.sort_unstable();
        if all.windows(2).any(|w| w[0] == w[1]) {
            return Err(PeError::InvalidQuantumOp { proc, what: format!("`{name}` uses a qubit more than once") });
        }
        if kind != QKind::Gate && !controls.is_empty() {
            return Err(PeError::InvalidQuantumOp { proc, what: format!("`{name}` cannot be controlled") });
        }
        if kind != QKind::Gate && (inverse || !self.buffers.is_empty()) {
            return Err(PeError::NonInvertible { proc, what: format!("`{name}` has no inverse") });
        }
        for f in cfg.frames.iter_mut().rev() {
            if let Some(p) = f.pending.take() {
                let mut merged = p;
                merged.constraints.extend(timing.constraints);
                merged.resets.extend(timing.resets);
                timing = merged;
                break;
            }
        }
        let rdest = dest.map(|_| self.fresh(Type::Bool));
        self.sink(QOp {
            name: name.to_string(),
            kind,
            qubits: qubits.into_iter().map(|q| Operand::Const(Value::Qubit(q))).collect(),
            params,
            controls: controls.into_iter().map(|q| Operand::Const(Value::Qubit(q))).collect(),
            inverse,
            timing,
            dest: rdest,
        });
        if let (Some(d), Some(r)) = (dest, rdest) {
            cfg.frames.last_mut().unwrap().env[d as usize] = Abs::D(r);
        }
        Ok(())
    }

    fn exec_inst(&mut self, cfg: &mut Config, inst: &Inst) -> Result<(), PeError> {
        let pi = cfg.frames.last().unwrap().proc as usize;
        match inst {
            Inst::Compute { dest, op, args } => {
                let vals: Vec<Abs> = args.iter().map(|a| self.eval(cfg, a)).collect();
                let r = match compute_abs(op, &vals).map_err(|e| PeError::eval(&self.proc_name(cfg), e))? {
                    Computed::Done(a) => a,
                    Computed::Residual => {
                        let ty = self.ir.procs[pi].var_types[*dest as usize].clone();
                        if !matches!(ty, Type::Int | Type::Bool)
                            || vals.iter().any(|v| matches!(v, Abs::Tuple(_) | Abs::Array(_)))
                        {
                            return Err(self.dynamic(cfg, format!("value of type `{ty}` computed by `{}`", op.name())));
                        }
                        let d = self.fresh(ty);
                        let args = vals.iter().map(Abs::operand).collect();
                        self.out.blocks[self.cur as usize].insts.push(Inst::Compute { dest: d, op: op.clone(), args });
                        Abs::D(d)
                    }
                };
                cfg.frames.last_mut().unwrap().env[*dest as usize] = r;
            }
            Inst::QOp(q) => {
                let mut args: Vec<Abs> = q.qubits.iter().map(|a| self.eval(cfg, a)).collect();
                args.extend(q.params.iter().map(|a| self.eval(cfg, a)));
                let mut ctl = Vec::new();
                for c in &q.controls {
                    let a = self.eval(cfg, c);
                    ctl.extend(self.static_qubits(cfg, &a, "control qubit")?);
                }
                let timing = self.static_timing(cfg, &q.timing)?;
                self.issue(cfg, &q.name, &args, ctl, q.inverse, timing, q.dest)?;
            }
            Inst::TimerReset { timer } => {
                let t = match self.eval(cfg, timer) {
                    Abs::S(v @ Value::Timer(_)) => v,
                    _ => return Err(self.dynamic(cfg, "timer")),
                };
                self.emit_plain(cfg, Inst::TimerReset { timer: Operand::Const(t) }, "timer reset")?;
            }
            Inst::Alloc { dest, count } => {
                let n = match count.as_ref().map(|c| self.eval(cfg, c)) {
                    None => None,
                    Some(Abs::S(Value::Int(n))) if n >= 0 => Some(n as usize),
                    Some(Abs::S(Value::Int(n))) => {
                        return Err(PeError::InvalidQuantumOp {
                            proc: self.proc_name(cfg),
                            what: format!("negative qubit count {n}"),
                        })
                    }
                    Some(_) => return Err(self.dynamic(cfg, "qubit count")),
                };
                let want = n.unwrap_or(1);
                let mut got = Vec::new();
                for (q, u) in cfg.used.iter_mut().enumerate() {
                    if got.len() == want {
                        break;
                    }
                    if !*u {
                        *u = true;
                        got.push(q as u32);
                    }
                }
                if got.len() < want {
                    let in_use = cfg.used.iter().filter(|u| **u).count() - got.len();
                    return Err(PeError::TooManyQubits {
                        requested: (in_use + want) as u32,
                        available: self.platform.qubit_count,
                    });
                }
                let val = match n {
                    None => Value::Qubit(got[0]),
                    Some(_) => Value::Array(got.iter().map(|q| Value::Qubit(*q)).collect()),
                };
                self.emit_plain(cfg, Inst::AllocPhys(got), "qubit allocation")?;
                cfg.frames.last_mut().unwrap().env[*dest as usize] = Abs::S(val);
            }
            Inst::Free { qubits } => {
                let a = self.eval(cfg, qubits);
                let qs = self.static_qubits(cfg, &a, "qubit")?;
                for q in &qs {
                    cfg.used[*q as usize] = false;
                }
                self.emit_plain(cfg, Inst::FreePhys(qs), "qubit release")?;
            }
            Inst::AllocPhys(qs) => {
                for q in qs {
                    match cfg.used.get_mut(*q as usize) {
                        Some(u) => *u = true,
                        None => {
                            return Err(PeError::TooManyQubits {
                                requested: q + 1,
                                available: self.platform.qubit_count,
                            })
                        }
                    }
                }
                self.emit_plain(cfg, inst.clone(), "qubit allocation")?;
            }
            Inst::FreePhys(qs) => {
                for q in qs {
                    if let Some(u) = cfg.used.get_mut(*q as usize) {
                        *u = false;
                    }
                }
                self.emit_plain(cfg, inst.clone(), "qubit release")?;
            }
        }
        Ok(())
    }

    /// Moves the top frame to `target`. Returns false when the task ends
    /// because `target` is a memo point.
    fn goto(&mut self, cfg: &mut Config, target: BlockId) -> bool {
        let top = cfg.frames.last_mut().unwrap();
        top.block = target;
        if !self.buffers.is_empty() || !self.info[top.proc as usize].memo[target as usize] {
            return true;
        }
        self.arrive(cfg.clone(), self.cur);
        false
    }

    fn run(&mut self, task: Task) -> Result<(), PeError> {
        let ir = self.ir;
        let mut cfg = task.config;
        self.cur = task.block;
        if task.check_memo {
            let target = cfg.frames.last().unwrap().block;
            if !self.goto(&mut cfg, target) {
                return Ok(());
            }
        }
        loop {
            let top = cfg.frames.last().unwrap();
            let proc = &ir.procs[top.proc as usize];
            let block = &proc.blocks[top.block as usize];
            for inst in &block.insts {
                self.tick()?;
                self.exec_inst(&mut cfg, inst)?;
            }
            self.tick()?;
            match &block.term {
                Terminator::Jump { target, args } => {
                    let vals: Vec<Abs> = args.iter().map(|a| self.eval(&cfg, a)).collect();
                    let top = cfg.frames.last_mut().unwrap();
                    for (p, v) in proc.blocks[*target as usize].params.iter().zip(vals) {
                        top.env[*p as usize] = v;
                    }
                    if !self.goto(&mut cfg, *target) {
                        return Ok(());
                    }
                }
                Terminator::Branch { cond, then_to, else_to } => match self.eval(&cfg, cond) {
                    Abs::S(Value::Bool(b)) => {
                        if !self.goto(&mut cfg, if b { *then_to } else { *else_to }) {
                            return Ok(());
                        }
                    }
                    Abs::D(v) => {
                        if !self.buffers.is_empty() {
                            return Err(PeError::NonInvertible {
                                proc: proc.name.clone(),
                                what: "control flow depends on a measurement".into(),
                            });
                        }
                        let (t, e) = (self.new_block(), self.new_block());
                        self.set_term(self.cur, Terminator::Branch { cond: Operand::Var(v), then_to: t, else_to: e });
                        let mut other = cfg.clone();
                        other.frames.last_mut().unwrap().block = *else_to;
                        cfg.frames.last_mut().unwrap().block = *then_to;
                        self.stack.push(Task { config: other, block: e, check_memo: true });
                        self.stack.push(Task { config: cfg, block: t, check_memo: true });
                        return Ok(());
                    }
                    _ => return Err(self.dynamic(&cfg, "branch condition")),
                },
                Terminator::Call { dest, callee, args, modifiers, timing, next } => {
                    let argv: Vec<Abs> = args.iter().map(|a| self.eval(&cfg, a)).collect();
                    let mut ctl = Vec::new();
                    let mut inv = false;
                    for m in modifiers {
                        match m {
                            IrModifier::Control(qs) => {
                                for q in qs {
                                    let a = self.eval(&cfg, q);
                                    ctl.extend(self.static_qubits(&cfg, &a, "control qubit")?);
                                }
                            }
                            IrModifier::Invert => inv = !inv,
                        }
                    }
                    let timing = self.static_timing(&cfg, timing)?;
                    match self.eval(&cfg, callee) {
                        Abs::S(Value::Op(OpRef::Opaque(name))) => {
                            self.issue(&mut cfg, &name, &argv, ctl, inv, timing, *dest)?;
                            if !self.goto(&mut cfg, *next) {
                                return Ok(());
                            }
                        }
                        Abs::S(Value::Op(OpRef::Proc(p))) => {
                            let callee = &ir.procs[p as usize];
                            let mut env = vec![Abs::S(Value::Unit); callee.var_types.len()];
                            for (pv, a) in callee.params.iter().zip(argv) {
                                env[*pv as usize] = a;
                            }
                            let top = cfg.frames.last_mut().unwrap();
                            top.resume = Some((*dest, *next));
                            let mut controls = top.controls.clone();
                            controls.extend(ctl);
                            if inv {
                                self.buffers.push(Vec::new());
                            }
                            cfg.frames.push(Frame {
                                proc: p,
                                block: callee.entry,
                                env,
                                resume: None,
                                controls,
                                owns_buffer: inv,
                                pending: (!timing.is_empty()).then_some(timing),
                                epoch: 0,
                            });
                            if !self.goto(&mut cfg, callee.entry) {
                                return Ok(());
                            }
                        }
                        _ => return Err(self.dynamic(&cfg, "called operation")),
                    }
                }
                Terminator::Return { value } => {
                    let v = self.eval(&cfg, value);
                    let f = cfg.frames.pop().unwrap();
                    if f.owns_buffer {
                        let buf = self.buffers.pop().unwrap();
                        for mut q in buf.into_iter().rev() {
                            q.inverse = !q.inverse;
                            self.sink(q);
                        }
                    }
                    let Some(top) = cfg.frames.last_mut() else {
                        self.set_term(self.cur, Terminator::Return { value: v.operand() });
                        return Ok(());
                    };
                    let (dest, next) = top.resume.take().expect("caller frame is suspended");
                    if let Some(d) = dest {
                        top.env[d as usize] = v;
                    }
                    if !self.goto(&mut cfg, next) {
                        return Ok(());
                    }
                }
            }
        }
    }

    /// Clears dead variables so they do not split specializations.
    fn normalize(&self, cfg: &mut Config) {
        let n = cfg.frames.len();
        for (i, f) in cfg.frames.iter_mut().enumerate() {
            let info = &self.info[f.proc as usize];
            let (block, dest) = if i + 1 == n {
                (f.block, None)
            } else {
                let (d, next) = f.resume.expect("inner frames are suspended");
                (next, d)
            };
            let keep = &info.keep[block as usize];
            for (v, a) in f.env.iter_mut().enumerate() {
                if !keep[v] || Some(v as VarId) == dest {
                    *a = Abs::S(Value::Unit);
                }
            }
        }
    }

    fn skeleton(&self, cfg: &Config) -> (Skeleton, Vec<Leaf>) {
        let mut toks = Vec::new();
        let mut leaves = Vec::new();
        for (fi, f) in cfg.frames.iter().enumerate() {
            toks.push(Tok::Frame { proc: f.proc, block: f.block, resume: f.resume, owns_buffer: f.owns_buffer });
            toks.push(Tok::Controls(f.controls.clone()));
            if let Some(p) = &f.pending {
                toks.push(Tok::Pending(format!("{p:?}")));
            }
            for (v, a) in f.env.iter().enumerate() {
                self.skel_abs(a, fi, v as VarId, &mut toks, &mut leaves);
            }
        }
        toks.push(Tok::Used(cfg.used.clone()));
        (toks, leaves)
    }

    fn skel_abs(&self, a: &Abs, frame: usize, var: VarId, toks: &mut Skeleton, leaves: &mut Vec<Leaf>) {
        match a {
            Abs::S(Value::Int(_)) => {
                toks.push(Tok::Int);
                leaves.push(Leaf { abs: a.clone(), frame, var });
            }
            Abs::S(Value::Bool(_)) => {
                toks.push(Tok::Bool);
                leaves.push(Leaf { abs: a.clone(), frame, var });
            }
            Abs::D(v) => {
                toks.push(if self.out.var_types.get(*v as usize) == Some(&Type::Bool) { Tok::Bool } else { Tok::Int });
                leaves.push(Leaf { abs: a.clone(), frame, var });
            }
            Abs::S(Value::Array(_) | Value::Tuple(_)) | Abs::Array(_) | Abs::Tuple(_) => {
                let (is_array, xs) = a.elements().unwrap();
                toks.push(if is_array { Tok::Array(xs.len()) } else { Tok::Tuple(xs.len()) });
                for x in &xs {
                    self.skel_abs(x, frame, var, toks, leaves);
                }
            }
            Abs::S(other) => toks.push(Tok::Exact(format!("{other:?}"))),
        }
    }

    fn arrive(&mut self, mut cfg: Config, from: BlockId) {
        self.normalize(&mut cfg);
        let positions: Vec<u32> = cfg.frames.iter().map(|f| self.info[f.proc as usize].rpo[f.block as usize]).collect();
        let epochs: Vec<u64> = cfg.frames.iter().map(|f| f.epoch).collect();
        let (skel, _) = self.skeleton(&cfg);
        self.pending.entry((positions, epochs, skel)).or_default().push(Arrival { config: cfg, from });
    }

    fn patch(&mut self, from: BlockId, spec_block: BlockId, template: &[Option<Value>], leaves: &[Leaf]) {
        let args = template.iter().zip(leaves).filter(|(t, _)| t.is_none()).map(|(_, l)| l.abs.operand()).collect();
        self.set_term(from, Terminator::Jump { target: spec_block, args });
    }

    fn process_group(&mut self, skel: Skeleton, arrivals: Vec<Arrival>) -> Result<(), PeError> {
        let mut rest = Vec::new();
        for a in arrivals {
            let (_, leaves) = self.skeleton(&a.config);
            let hit = self.specs.get(&skel).and_then(|ss| {
                ss.iter().find(|s| {
                    s.template.iter().zip(&leaves).all(|(t, l)| match (t, &l.abs) {
                        (None, _) => true,
                        (Some(v), Abs::S(w)) => v.same(w),
                        _ => false,
                    })
                })
            });
            match hit {
                Some(s) => {
                    let (block, template) = (s.block, s.template.clone());
                    self.patch(a.from, block, &template, &leaves);
                }
                None => rest.push((a, leaves)),
            }
        }
        if rest.is_empty() {
            return Ok(());
        }
        let n = rest[0].1.len();
        let mut template: Vec<Option<Value>> = (0..n)
            .map(|i| match &rest[0].1[i].abs {
                Abs::S(v) if rest.iter().all(|(_, l)| matches!(&l[i].abs, Abs::S(w) if w.same(v))) => Some(v.clone()),
                _ => None,
            })
            .collect();
        let cfg0 = rest[0].0.config.clone();
        let mut new_epoch = false;
        let top_index = cfg0.frames.len() - 1;
        let top = &cfg0.frames[top_index];
        if let Some(lp) = self.info[top.proc as usize].loops.get(&top.block) {
            let probe_leaves: Vec<Abs> =
                template.iter().map(|t| t.clone().map(Abs::S).unwrap_or(Abs::D(PROBE))).collect();
            let probe = instantiate(&cfg0, probe_leaves);
            if self.loop_is_dynamic(&probe, top.block, &lp.body) {
                for (t, l) in template.iter_mut().zip(&rest[0].1) {
                    if l.frame == top_index && lp.modified[l.var as usize] {
                        *t = None;
                    }
                }
            } else {
                new_epoch = true;
            }
        }
        let block = self.new_block();
        let mut replacement = Vec::with_capacity(n);
        for (t, l) in template.iter().zip(&rest[0].1) {
            match t {
                Some(v) => replacement.push(Abs::S(v.clone())),
                None => {
                    let ty = match &l.abs {
                        Abs::S(Value::Bool(_)) => Type::Bool,
                        Abs::S(_) => Type::Int,
                        Abs::D(v) => self.out.var_types[*v as usize].clone(),
                        _ => unreachable!("leaves are scalars"),
                    };
                    let p = self.fresh(ty);
                    self.out.blocks[block as usize].params.push(p);
                    replacement.push(Abs::D(p));
                }
            }
        }
        for (a, leaves) in &rest {
            self.patch(a.from, block, &template, leaves);
        }
        let mut config = instantiate(&cfg0, replacement);
        if new_epoch {
            self.epochs += 1;
            config.frames.last_mut().unwrap().epoch = self.epochs;
        }
        self.specs.entry(skel).or_default().push(Spec { template, block });
        self.stack.push(Task { config, block, check_memo: false });
        Ok(())
    }

    /// Probes one trip from a loop header and reports whether the loop's
    /// exit decision depends on a measurement.
    fn loop_is_dynamic(&self, cfg: &Config, header: BlockId, body: &[bool]) -> bool {
        let f = cfg.frames.last().unwrap();
        let proc = &self.ir.procs[f.proc as usize];
        let mut env = f.env.clone();
        let mut b = header;
        for _ in 0..100_000 {
            let blk = &proc.blocks[b as usize];
            for inst in &blk.insts {
                match inst {
                    Inst::Compute { dest, op, args } => {
                        let vals: Vec<Abs> = args.iter().map(|a| eval_in(&env, a)).collect();
                        env[*dest as usize] = match compute_abs(op, &vals) {
                            Ok(Computed::Done(a)) => a,
                            _ => Abs::D(PROBE),
                        };
                    }
                    other => {
                        if let Some(d) = other.def() {
                            env[d as usize] = Abs::D(PROBE);
                        }
                    }
                }
            }
            let next = match &blk.term {
                Terminator::Jump { target, args } => {
                    let vals: Vec<Abs> = args.iter().map(|a| eval_in(&env, a)).collect();
                    for (p, v) in proc.blocks[*target as usize].params.iter().zip(vals) {
                        env[*p as usize] = v;
                    }
                    *target
                }
                Terminator::Branch { cond, then_to, else_to } => {
                    let exits = !body[*then_to as usize] || !body[*else_to as usize];
                    match eval_in(&env, cond) {
                        Abs::S(Value::Bool(c)) => {
                            if exits {
                                return false;
                            }
                            if c {
                                *then_to
                            } else {
                                *else_to
                            }
                        }
                        _ => {
                            if exits {
                                return true;
                            }
                            *then_to
                        }
                    }
                }
                Terminator::Call { dest, next, .. } => {
                    if let Some(d) = dest {
                        env[*d as usize] = Abs::D(PROBE);
                    }
                    *next
                }
                Terminator::Return { .. } => return false,
            };
            if next == header || !body[next as usize] {
                return false;
            }
            b = next;
        }
        true
    }
}

fn eval_in(env: &[Abs], o: &Operand) -> Abs {
    match o {
        Operand::Var(v) => env[*v as usize].clone(),
        Operand::Const(c) => Abs::S(c.clone()),
        Operand::Tuple(xs) => Abs::Tuple(xs.iter().map(|x| eval_in(env, x)).collect()).norm(),
        Operand::Array(xs) => Abs::Array(xs.iter().map(|x| eval_in(env, x)).collect()).norm(),
    }
}

/// Rebuilds `cfg` with its scalar leaves replaced, in skeleton order.
fn instantiate(cfg: &Config, leaves: Vec<Abs>) -> Config {
    let mut it = leaves.into_iter();
    let mut out = cfg.clone();
    for f in &mut out.frames {
        for a in &mut f.env {
            *a = rebuild(a, &mut it);
        }
    }
    out
}

fn rebuild(a: &Abs, it: &mut impl Iterator<Item = Abs>) -> Abs {
    match a {
        Abs::S(Value::Int(_) | Value::Bool(_)) | Abs::D(_) => it.next().expect("leaf count matches"),
        Abs::S(Value::Array(_) | Value::Tuple(_)) | Abs::Array(_) | Abs::Tuple(_) => {
            let (is_array, xs) = a.elements().unwrap();
            let ys: Vec<Abs> = xs.iter().map(|x| rebuild(x, it)).collect();
            if is_array {
                Abs::Array(ys).norm()
            } else {
                Abs::Tuple(ys).norm()
            }
        }
        other => other.clone(),
    }
}
