//! Typed syntax tree to [`KernelIR`].

use std::collections::HashMap;

use crate::frontend::ast::{
    self, AssignOp, BinOp, Decl, ElseBranch, Expr, ExprKind, Modifier, NodeId, Stmt, StmtKind, Timing, UnOp,
};
use crate::frontend::{NameRef, TypedProgram};
use crate::ir::*;
use crate::platform::Semantics;
use crate::types::Type;

/// Lowers every operation reachable from `entry` (a qualified name).
pub fn lower(tp: &TypedProgram, entry: &str) -> KernelIR {
    let mut ctx = Ctx { tp, index: HashMap::new(), order: Vec::new(), timers: 0 };
    let main = ctx.proc_index(entry);
    let mut procs = Vec::new();
    let mut i = 0;
    while i < ctx.order.len() {
        let name = ctx.order[i].clone();
        procs.push(ctx.lower_proc(&name));
        i += 1;
    }
    KernelIR { procs, main }
}

struct Ctx<'a> {
    tp: &'a TypedProgram,
    index: HashMap<String, u32>,
    order: Vec<String>,
    timers: u32,
}

impl Ctx<'_> {
    fn proc_index(&mut self, qualified: &str) -> u32 {
        if let Some(i) = self.index.get(qualified) {
            return *i;
        }
        let i = self.order.len() as u32;
        self.order.push(qualified.to_string());
        self.index.insert(qualified.to_string(), i);
        i
    }

    fn lower_proc(&mut self, qualified: &str) -> Proc {
        let tp = self.tp;
        let r = tp.program.decls[qualified];
        let Decl::Operation(op) = tp.program.decl(r) else { unreachable!("opaque operations have no body") };
        let mut proc = Proc {
            name: qualified.to_string(),
            params: Vec::new(),
            ret: op.ret.clone(),
            var_types: Vec::new(),
            var_names: Vec::new(),
            blocks: Vec::new(),
            entry: 0,
        };
        let mut scope = HashMap::new();
        for p in &op.params {
            let v = proc.new_var(p.ty.clone(), &p.name.name);
            proc.params.push(v);
            scope.insert(p.name.name.clone(), v);
        }
        let ret_var = (op.ret != Type::Unit).then(|| proc.new_var(op.ret.clone(), "$ret"));
        let mut l = Lowerer {
            ctx: self,
            proc,
            cur: 0,
            open: Vec::new(),
            scopes: vec![scope],
            loops: Vec::new(),
            usings: Vec::new(),
            exit: 0,
            ret_var,
        };
        let entry = l.new_block();
        l.exit = l.new_block();
        l.open[l.exit as usize] = false;
        l.proc.blocks[l.exit as usize].term =
            Terminator::Return { value: ret_var.map(Operand::Var).unwrap_or(Operand::Const(Value::Unit)) };
        l.cur = entry;
        l.block(&op.body);
        if l.is_open() {
            let exit = l.exit;
            l.terminate(Terminator::Jump { target: exit, args: vec![] });
        }
        for (i, open) in l.open.iter().enumerate() {
            if *open {
                l.proc.blocks[i].term = Terminator::Jump { target: l.exit, args: vec![] };
            }
        }
        l.proc
    }
}

struct LoopCtx {
    header: BlockId,
    exit: BlockId,
    usings: usize,
}

struct Lowerer<'a, 'b> {
    ctx: &'a mut Ctx<'b>,
    proc: Proc,
    cur: BlockId,
    open: Vec<bool>,
    scopes: Vec<HashMap<String, VarId>>,
    loops: Vec<LoopCtx>,
    /// Qubit variables of enclosing `using` statements.
    usings: Vec<VarId>,
    exit: BlockId,
    ret_var: Option<VarId>,
}

impl Lowerer<'_, '_> {
    fn ty(&self, id: NodeId) -> Type {
        self.ctx.tp.type_of(id).clone()
    }

    fn new_block(&mut self) -> BlockId {
        self.proc.blocks.push(Block {
            params: vec![],
            insts: vec![],
            term: Terminator::Return { value: Operand::Const(Value::Unit) },
        });
        self.open.push(true);
        (self.proc.blocks.len() - 1) as BlockId
    }

    fn is_open(&self) -> bool {
        self.open[self.cur as usize]
    }

    fn emit(&mut self, inst: Inst) {
        self.proc.blocks[self.cur as usize].insts.push(inst);
    }

    fn terminate(&mut self, term: Terminator) {
        let c = self.cur as usize;
        debug_assert!(self.open[c]);
        self.proc.blocks[c].term = term;
        self.open[c] = false;
    }

    /// Terminates the current block and continues in a fresh one that has
    /// no predecessors (dead code after `return`, `break`, `continue`).
    fn terminate_dead(&mut self, term: Terminator) {
        self.terminate(term);
        self.cur = self.new_block();
    }

    fn temp(&mut self, ty: Type) -> VarId {
        self.proc.new_var(ty, "")
    }

    fn compute(&mut self, ty: Type, op: PrimOp, args: Vec<Operand>) -> Operand {
        let d = self.temp(ty);
        self.emit(Inst::Compute { dest: d, op, args });
        Operand::Var(d)
    }

    fn lookup(&self, name: &str) -> VarId {
        self.scopes.iter().rev().find_map(|s| s.get(name).copied()).expect("type checker resolved every local")
    }

    fn widen(&mut self, v: Operand, from: &Type, to: &Type) -> Operand {
        if from == to || !from.contains(&|t| *t == Type::Int) || !to.contains(&|t| *t == Type::Double) {
            return v;
        }
        match v {
            Operand::Const(c) => Operand::Const(eval_prim(&PrimOp::Convert(to.clone()), &[c]).unwrap()),
            v => self.compute(to.clone(), PrimOp::Convert(to.clone()), vec![v]),
        }
    }

    fn expr_to(&mut self, e: &Expr, to: &Type) -> Operand {
        let v = self.expr(e);
        let from = self.ty(e.id);
        self.widen(v, &from, to)
    }

    fn block(&mut self, b: &ast::Block) {
        self.scopes.push(HashMap::new());
        for s in &b.stmts {
            self.stmt(s);
        }
        self.scopes.pop();
    }

    fn free_usings_to(&mut self, depth: usize) {
        for i in (depth..self.usings.len()).rev() {
            let v = self.usings[i];
            self.emit(Inst::Free { qubits: Operand::Var(v) });
        }
    }

    fn stmt(&mut self, s: &Stmt) {
        match &s.kind {
            StmtKind::VarDecl { ty, vars } => {
                for v in vars {
                    let var = self.proc.new_var(ty.clone(), &v.name.name);
                    match &v.init {
                        Some(e) => {
                            let val = self.expr_to(e, ty);
                            self.emit(Inst::Compute { dest: var, op: PrimOp::Copy, args: vec![val] });
                        }
                        None => {
                            let id = self.ctx.timers;
                            self.ctx.timers += 1;
                            self.emit(Inst::Compute {
                                dest: var,
                                op: PrimOp::Copy,
                                args: vec![Operand::Const(Value::Timer(id))],
                            });
                            self.emit(Inst::TimerReset { timer: Operand::Var(var) });
                        }
                    }
                    self.scopes.last_mut().unwrap().insert(v.name.name.clone(), var);
                }
            }
            StmtKind::Assign { target, op, value } => self.assign(target, *op, value),
            StmtKind::Expr(e) => {
                self.expr(e);
            }
            StmtKind::If { cond, then_branch, else_branch } => {
                let c = self.expr(cond);
                let then_b = self.new_block();
                let join = self.new_block();
                let else_b = if else_branch.is_some() { self.new_block() } else { join };
                self.terminate(Terminator::Branch { cond: c, then_to: then_b, else_to: else_b });
                self.cur = then_b;
                self.block(then_branch);
                if self.is_open() {
                    self.terminate(Terminator::Jump { target: join, args: vec![] });
                }
                if let Some(eb) = else_branch {
                    self.cur = else_b;
                    match eb {
                        ElseBranch::Block(b) => self.block(b),
                        ElseBranch::If(s) => {
                            self.scopes.push(HashMap::new());
                            self.stmt(s);
                            self.scopes.pop();
                        }
                    }
                    if self.is_open() {
                        self.terminate(Terminator::Jump { target: join, args: vec![] });
                    }
                }
                self.cur = join;
            }
            StmtKind::While { cond, body } => {
                let header = self.new_block();
                let body_b = self.new_block();
                let exit = self.new_block();
                self.terminate(Terminator::Jump { target: header, args: vec![] });
                self.cur = header;
                let c = self.expr(cond);
                self.terminate(Terminator::Branch { cond: c, then_to: body_b, else_to: exit });
                self.cur = body_b;
                self.loops.push(LoopCtx { header, exit, usings: self.usings.len() });
                self.block(body);
                self.loops.pop();
                if self.is_open() {
                    self.terminate(Terminator::Jump { target: header, args: vec![] });
                }
                self.cur = exit;
            }
            StmtKind::Break | StmtKind::Continue => {
                let l = self.loops.last().expect("checked by the type checker");
                let (target, depth) = (if matches!(s.kind, StmtKind::Break) { l.exit } else { l.header }, l.usings);
                self.free_usings_to(depth);
                self.terminate_dead(Terminator::Jump { target, args: vec![] });
            }
            StmtKind::Return(value) => {
                if let (Some(e), Some(rv)) = (value, self.ret_var) {
                    let ret = self.proc.ret.clone();
                    let v = self.expr_to(e, &ret);
                    self.emit(Inst::Compute { dest: rv, op: PrimOp::Copy, args: vec![v] });
                }
                self.free_usings_to(0);
                let exit = self.exit;
                self.terminate_dead(Terminator::Jump { target: exit, args: vec![] });
            }
            StmtKind::Using { bindings, body } => {
                self.scopes.push(HashMap::new());
                let depth = self.usings.len();
                for b in bindings {
                    let count = b.count.as_ref().map(|n| self.expr(n));
                    let ty = if count.is_some() { Type::array(Type::Qubit) } else { Type::Qubit };
                    let v = self.proc.new_var(ty, &b.name.name);
                    self.emit(Inst::Alloc { dest: v, count });
                    self.usings.push(v);
                    self.scopes.last_mut().unwrap().insert(b.name.name.clone(), v);
                }
                self.block(body);
                if self.is_open() {
                    self.free_usings_to(depth);
                }
                self.usings.truncate(depth);
                self.scopes.pop();
            }
            StmtKind::Block(b) => self.block(b),
        }
    }

    fn assign(&mut self, target: &Expr, op: AssignOp, value: &Expr) {
        let tt = self.ty(target.id);
        let vt = self.ty(value.id);
        let new_val = match op.binop() {
            None => self.expr_to(value, &tt),
            Some(b) => {
                let cur = self.expr(target);
                let v = self.expr(value);
                self.arith(b, cur, &tt, v, &vt, &tt)
            }
        };
        self.store(target, new_val);
    }

    /// Writes `val` through an lvalue path `x[i][j]...`.
    fn store(&mut self, target: &Expr, val: Operand) {
        match &target.kind {
            ExprKind::Var(name) => {
                let v = self.lookup(name);
                self.emit(Inst::Compute { dest: v, op: PrimOp::Copy, args: vec![val] });
            }
            ExprKind::Index(base, idx) => {
                let arr = self.expr(base);
                let i = self.expr(idx);
                let bt = self.ty(base.id);
                let updated = self.compute(bt, PrimOp::ArraySet, vec![arr, i, val]);
                self.store(base, updated);
            }
            _ => unreachable!("assignment targets are variables or indexings"),
        }
    }

    /// Binary arithmetic with operand widening; `rt` is the result type.
    fn arith(&mut self, op: BinOp, a: Operand, at: &Type, b: Operand, bt: &Type, rt: &Type) -> Operand {
        let (a, b) = if at != bt && at.is_numeric() && bt.is_numeric() {
            let (a, b) = (self.widen(a, at, &Type::Double), self.widen(b, bt, &Type::Double));
            (a, b)
        } else {
            (a, b)
        };
        let p = match op {
            BinOp::Add => PrimOp::Add,
            BinOp::Sub => PrimOp::Sub,
            BinOp::Mul => PrimOp::Mul,
            BinOp::Div => PrimOp::Div,
            BinOp::Mod => PrimOp::Mod,
            BinOp::Eq => PrimOp::Eq,
            BinOp::Ne => PrimOp::Ne,
            BinOp::Lt => PrimOp::Lt,
            BinOp::Le => PrimOp::Le,
            BinOp::Gt => PrimOp::Gt,
            BinOp::Ge => PrimOp::Ge,
            BinOp::And => PrimOp::And,
            BinOp::Or => PrimOp::Or,
        };
        self.compute(rt.clone(), p, vec![a, b])
    }

    fn global(&mut self, q: &str) -> Operand {
        let d = self.ctx.tp.program.lookup(q).expect("resolved name");
        match d {
            Decl::Opaque(o) => Operand::Const(Value::Op(OpRef::Opaque(o.name.name.clone()))),
            Decl::Operation(_) => Operand::Const(Value::Op(OpRef::Proc(self.ctx.proc_index(q)))),
        }
    }

    fn expr(&mut self, e: &Expr) -> Operand {
        match &e.kind {
            ExprKind::Int(v) => Operand::Const(Value::Int(*v as i32)),
            ExprKind::Double(v) => Operand::Const(Value::Double(*v)),
            ExprKind::Bool(b) => Operand::Const(Value::Bool(*b)),
            ExprKind::Time(v, unit) => {
                let ns = crate::time::TimeValue::new(*v, *unit).to_ns_rounded().unwrap_or(0);
                Operand::Const(Value::Time(ns))
            }
            ExprKind::Var(name) => match self.ctx.tp.refs.get(&e.id) {
                Some(NameRef::Local) => Operand::Var(self.lookup(name)),
                Some(NameRef::Global(q)) => {
                    let q = q.clone();
                    self.global(&q)
                }
                Some(NameRef::Pi) => Operand::Const(Value::Double(std::f64::consts::PI)),
                None => unreachable!("unresolved name after type checking"),
            },
            ExprKind::Unary(op, a) => {
                if let (UnOp::Neg, ExprKind::Int(v)) = (op, &a.kind) {
                    return Operand::Const(Value::Int((-*v) as i32));
                }
                let v = self.expr(a);
                let t = self.ty(e.id);
                let p = if *op == UnOp::Neg { PrimOp::Neg } else { PrimOp::Not };
                self.compute(t, p, vec![v])
            }
            ExprKind::Binary(op @ (BinOp::And | BinOp::Or), a, b) => {
                let r = self.temp(Type::Bool);
                let av = self.expr(a);
                let rhs = self.new_block();
                let short = self.new_block();
                let join = self.new_block();
                let (t, f) = if *op == BinOp::And { (rhs, short) } else { (short, rhs) };
                self.terminate(Terminator::Branch { cond: av, then_to: t, else_to: f });
                self.cur = short;
                self.emit(Inst::Compute {
                    dest: r,
                    op: PrimOp::Copy,
                    args: vec![Operand::Const(Value::Bool(*op == BinOp::Or))],
                });
                self.terminate(Terminator::Jump { target: join, args: vec![] });
                self.cur = rhs;
                let bv = self.expr(b);
                self.emit(Inst::Compute { dest: r, op: PrimOp::Copy, args: vec![bv] });
                self.terminate(Terminator::Jump { target: join, args: vec![] });
                self.cur = join;
                Operand::Var(r)
            }
            ExprKind::Binary(op, a, b) => {
                let (at, bt, rt) = (self.ty(a.id), self.ty(b.id), self.ty(e.id));
                let av = self.expr(a);
                let bv = self.expr(b);
                self.arith(*op, av, &at, bv, &bt, &rt)
            }
            ExprKind::Call { modifiers, callee, args, timing } => {
                self.call(e, modifiers, callee, args, timing.as_ref())
            }
            ExprKind::Index(a, i) => {
                let av = self.expr(a);
                let iv = self.expr(i);
                let t = self.ty(e.id);
                self.compute(t, PrimOp::Index, vec![av, iv])
            }
            ExprKind::Field(base, _) => {
                if let Some(NameRef::Global(q)) = self.ctx.tp.refs.get(&e.id) {
                    let q = q.clone();
                    return self.global(&q);
                }
                let b = self.expr(base);
                self.compute(Type::Int, PrimOp::Length, vec![b])
            }
            ExprKind::Array(elems) => {
                let t = self.ty(e.id);
                let Type::Array(et) = &t else { unreachable!() };
                let et = (**et).clone();
                let vs: Vec<Operand> = elems.iter().map(|x| self.expr_to(x, &et)).collect();
                if vs.iter().all(|v| matches!(v, Operand::Const(_))) {
                    return Operand::Const(Value::Array(
                        vs.into_iter().map(|v| v.as_const().unwrap().clone()).collect(),
                    ));
                }
                self.compute(t, PrimOp::MakeArray, vs)
            }
            ExprKind::Tuple(elems) => {
                let t = self.ty(e.id);
                let vs: Vec<Operand> = elems.iter().map(|x| self.expr(x)).collect();
                self.compute(t, PrimOp::MakeTuple, vs)
            }
            ExprKind::Duration(name) => {
                let d = self.ctx.tp.config.op(&name.name).map(|o| o.duration_ns()).unwrap_or(0);
                Operand::Const(Value::Time(d))
            }
        }
    }

    fn timing(&mut self, t: Option<&Timing>) -> IrTiming {
        let Some(t) = t else { return IrTiming::default() };
        let mut out = IrTiming::default();
        for c in &t.constraints {
            let timer = self.expr(&c.timer);
            let mut v = self.expr(&c.value);
            if self.ty(c.value.id) == Type::Int {
                v = match v {
                    Operand::Const(Value::Int(i)) => Operand::Const(Value::Time(i as i64)),
                    v => self.compute(Type::Time, PrimOp::IntToTime, vec![v]),
                };
            }
            out.constraints.push((timer, c.cmp, v));
        }
        for r in &t.resets {
            out.resets.push(Operand::Var(self.lookup(&r.name)));
        }
        out
    }

    fn call(
        &mut self,
        e: &Expr,
        modifiers: &[Modifier],
        callee: &Expr,
        args: &[Expr],
        timing: Option<&Timing>,
    ) -> Operand {
        let ct = self.ty(callee.id);
        let Type::Op(pt, _) = &ct else { unreachable!("callee has an operation type") };
        let ptys: Vec<Type> = match &**pt {
            Type::Unit => vec![],
            Type::Tuple(ts) => ts.clone(),
            other => vec![other.clone()],
        };
        let cv = self.expr(callee);
        let avs: Vec<Operand> = args.iter().zip(&ptys).map(|(a, t)| self.expr_to(a, t)).collect();
        let mut mods = Vec::new();
        for m in modifiers {
            mods.push(match m {
                Modifier::Control(qs) => IrModifier::Control(qs.iter().map(|q| self.expr(q)).collect()),
                Modifier::Invert => IrModifier::Invert,
            });
        }
        let timing = self.timing(timing);
        let rt = self.ty(e.id);
        let dest = (rt != Type::Unit).then(|| self.temp(rt.clone()));
        let result = dest.map(Operand::Var).unwrap_or(Operand::Const(Value::Unit));

        if let Operand::Const(Value::Op(OpRef::Opaque(name))) = &cv {
            let def = self.ctx.tp.config.op(name).expect("opaque checked against the configuration");
            let kind = match def.semantics {
                Semantics::Measure => QKind::Measure,
                Semantics::Reset => QKind::Reset,
                Semantics::Pulse(_) => QKind::Pulse,
                _ => QKind::Gate,
            };
            let nq = def.num_qubits as usize;
            let mut controls = Vec::new();
            let mut inverse = false;
            for m in mods {
                match m {
                    IrModifier::Control(qs) => controls.extend(qs),
                    IrModifier::Invert => inverse = !inverse,
                }
            }
            self.emit(Inst::QOp(QOp {
                name: name.clone(),
                kind,
                qubits: avs[..nq].to_vec(),
                params: avs[nq..].to_vec(),
                controls,
                inverse,
                timing,
                dest,
            }));
            return result;
        }
        let next = self.new_block();
        self.terminate(Terminator::Call { dest, callee: cv, args: avs, modifiers: mods, timing, next });
        self.cur = next;
        result
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::typed;

    #[test]
    fn fixtures_lower() {
        for (src, entry) in [
            (include_str!("../fixtures/kernel.qu"), "kernel.sum_random"),
            (include_str!("../fixtures/ipe.qu"), "kernel.ipe"),
            (include_str!("../fixtures/rus.qu"), "kernel.rus"),
            (include_str!("../fixtures/t2.qu"), "kernel.t2"),
        ] {
            let ir = lower(&typed(src, entry), entry);
            assert!(!ir.main_proc().blocks.is_empty());
            assert!(ir.count_qops() > 0);
        }
    }

    #[test]
    fn calls_split_blocks() {
        let src = "import operations.*\n\
            operation prep(q: qubit): unit { H(q); }\n\
            operation main(): bool { using(q: qubit) { prep(q); return measure(q); } }";
        let ir = lower(&typed(src, "kernel.main"), "kernel.main");
        assert_eq!(ir.procs.len(), 2);
        let main = ir.main_proc();
        assert!(main.blocks.iter().any(|b| matches!(b.term, Terminator::Call { .. })));
    }
}
