//! Static type checking of a linked program against a platform config.

use std::collections::{BTreeSet, HashMap};

use super::ast::*;
use super::diag::{Diagnostic, ErrorCode, SourceMap, Span};
use super::resolve::Program;
use crate::platform::PlatformConfig;
use crate::types::Type;

/// What a name expression refers to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NameRef {
    Local,
    Global(String),
    Pi,
}

#[derive(Debug, Clone)]
pub struct TypedProgram {
    pub program: Program,
    pub config: PlatformConfig,
    /// Qualified name of the entry operation, when one was requested.
    pub entry: Option<String>,
    /// Type of every expression and statement (statements are `unit`).
    pub types: HashMap<NodeId, Type>,
    /// Resolution of every `Var` and every dotted name used as a value.
    pub refs: HashMap<NodeId, NameRef>,
    /// Operations that touch qubits, directly or through callees.
    pub quantum_ops: BTreeSet<String>,
}

impl TypedProgram {
    pub fn type_of(&self, id: NodeId) -> &Type {
        &self.types[&id]
    }
}

type TResult<T> = Result<T, Diagnostic>;

fn err(code: ErrorCode, span: Span, msg: impl Into<String>) -> Diagnostic {
    Diagnostic::new(code, span, msg)
}

fn type_err(span: Span, msg: impl Into<String>) -> Diagnostic {
    err(ErrorCode::Type, span, msg)
}

/// Checks `program`. `entry` is the qualified name of the operation that
/// execution starts from, if any.
pub fn typecheck(
    program: Program,
    config: &PlatformConfig,
    entry: Option<&str>,
) -> Result<TypedProgram, (Diagnostic, SourceMap)> {
    match check_all(&program, config, entry) {
        Ok((types, refs, quantum_ops)) => Ok(TypedProgram {
            program,
            config: config.clone(),
            entry: entry.map(str::to_string),
            types,
            refs,
            quantum_ops,
        }),
        Err(d) => Err((d, program.sources)),
    }
}

type CheckOut = (HashMap<NodeId, Type>, HashMap<NodeId, NameRef>, BTreeSet<String>);

fn check_all(program: &Program, config: &PlatformConfig, entry: Option<&str>) -> TResult<CheckOut> {
    for (q, r) in &program.decls {
        let d = program.decl(*r);
        if d.ret().contains(&|t| matches!(t, Type::Qubit | Type::Timer)) {
            return Err(type_err(d.name().span, format!("`{q}` may not return a qubit or timer")));
        }
        if let Decl::Opaque(o) = d {
            let Some(def) = config.op(&o.name.name) else {
                return Err(err(
                    ErrorCode::ConfigMismatch,
                    o.name.span,
                    format!("opaque operation `{}` is not defined by the platform configuration", o.name.name),
                ));
            };
            let (want_params, want_ret) = def.signature();
            let got: Vec<Type> = o.params.iter().map(|p| p.ty.clone()).collect();
            if got != want_params || o.ret != want_ret {
                let want = Type::op(Type::params_type(&want_params), want_ret);
                return Err(err(
                    ErrorCode::ConfigMismatch,
                    o.name.span,
                    format!(
                        "opaque `{}` is declared as `{}` but the configuration defines `{want}`",
                        o.name.name,
                        d.op_type()
                    ),
                ));
            }
        }
    }
    if let Some(entry) = entry {
        match program.lookup(entry) {
            Some(Decl::Operation(_)) => {}
            _ => {
                let span = program.units.first().map(|u| Span::new(u.file, 1, 1)).unwrap_or_default();
                return Err(err(ErrorCode::UnresolvedName, span, format!("entry operation `{entry}` not found")));
            }
        }
    }
    let quantum = quantum_ops(program);
    let mut types = HashMap::new();
    let mut refs = HashMap::new();
    for (ui, u) in program.units.iter().enumerate() {
        for d in &u.decls {
            if let Decl::Operation(op) = d {
                let mut c = Checker {
                    program,
                    config,
                    unit: ui,
                    types: &mut types,
                    refs: &mut refs,
                    scopes: vec![HashMap::new()],
                    ret: op.ret.clone(),
                    loop_depth: 0,
                    quantum: &quantum,
                };
                c.operation(op)?;
            }
        }
    }
    Ok((types, refs, quantum))
}

/// Fixpoint over the call graph: an operation is quantum when it takes
/// qubits, allocates qubits, or calls something quantum.
fn quantum_ops(program: &Program) -> BTreeSet<String> {
    let mut quantum: BTreeSet<String> = BTreeSet::new();
    let mut calls: HashMap<String, Vec<String>> = HashMap::new();
    for (q, r) in &program.decls {
        let d = program.decl(*r);
        match d {
            Decl::Opaque(_) => {
                quantum.insert(q.clone());
            }
            Decl::Operation(op) => {
                if op.params.iter().any(|p| p.ty.contains_qubit()) {
                    quantum.insert(q.clone());
                }
                let mut callees = Vec::new();
                let mut uses_using = false;
                visit_stmts(&op.body, &mut |s| {
                    if matches!(s.kind, StmtKind::Using { .. }) {
                        uses_using = true;
                    }
                });
                walk_block_exprs(&op.body, &mut |e| {
                    if let ExprKind::Call { callee, .. } = &e.kind {
                        if let Some(path) = callee.as_path() {
                            if let Some(t) = program.resolve_path(r.unit, &path) {
                                callees.push(t);
                            }
                        }
                    }
                });
                if uses_using {
                    quantum.insert(q.clone());
                }
                calls.insert(q.clone(), callees);
            }
        }
    }
    loop {
        let mut changed = false;
        for (q, cs) in &calls {
            if !quantum.contains(q) && cs.iter().any(|c| quantum.contains(c)) {
                quantum.insert(q.clone());
                changed = true;
            }
        }
        if !changed {
            return quantum;
        }
    }
}

fn visit_stmts(b: &Block, f: &mut dyn FnMut(&Stmt)) {
    for s in &b.stmts {
        visit_stmt(s, f);
    }
}

fn visit_stmt(s: &Stmt, f: &mut dyn FnMut(&Stmt)) {
    f(s);
    match &s.kind {
        StmtKind::If { then_branch, else_branch, .. } => {
            visit_stmts(then_branch, f);
            match else_branch {
                Some(ElseBranch::Block(b)) => visit_stmts(b, f),
                Some(ElseBranch::If(s)) => visit_stmt(s, f),
                None => {}
            }
        }
        StmtKind::While { body, .. } | StmtKind::Using { body, .. } | StmtKind::Block(body) => visit_stmts(body, f),
        _ => {}
    }
}

fn block_returns(b: &Block) -> bool {
    b.stmts.iter().any(stmt_returns)
}

fn stmt_returns(s: &Stmt) -> bool {
    match &s.kind {
        StmtKind::Return(_) => true,
        StmtKind::If { then_branch, else_branch: Some(e), .. } => {
            block_returns(then_branch)
                && match e {
                    ElseBranch::Block(b) => block_returns(b),
                    ElseBranch::If(s) => stmt_returns(s),
                }
        }
        StmtKind::Using { body, .. } | StmtKind::Block(body) => block_returns(body),
        _ => false,
    }
}

#[derive(Debug, Clone)]
struct Local {
    ty: Type,
    /// Qubits bound by `using` or passed as parameters cannot be reassigned.
    assignable: bool,
}

struct Checker<'a> {
    program: &'a Program,
    config: &'a PlatformConfig,
    unit: usize,
    types: &'a mut HashMap<NodeId, Type>,
    refs: &'a mut HashMap<NodeId, NameRef>,
    scopes: Vec<HashMap<String, Local>>,
    ret: Type,
    loop_depth: u32,
    quantum: &'a BTreeSet<String>,
}

/// What a callee expression denotes.
enum CalleeInfo {
    Decl { qualified: String, params: Vec<Type>, ret: Type },
    Value { params: Vec<Type>, ret: Type, quantum: bool },
}

impl Checker<'_> {
    fn lookup_local(&self, name: &str) -> Option<&Local> {
        self.scopes.iter().rev().find_map(|s| s.get(name))
    }

    fn declare(&mut self, name: &Ident, ty: Type, assignable: bool) -> TResult<()> {
        let scope = self.scopes.last_mut().unwrap();
        if scope.contains_key(&name.name) {
            return Err(err(
                ErrorCode::Duplicate,
                name.span,
                format!("`{}` is already declared in this scope", name.name),
            ));
        }
        scope.insert(name.name.clone(), Local { ty, assignable });
        Ok(())
    }

    fn record(&mut self, id: NodeId, ty: Type) -> Type {
        self.types.insert(id, ty.clone());
        ty
    }

    fn operation(&mut self, op: &OperationDecl) -> TResult<()> {
        for p in &op.params {
            self.declare(&p.name, p.ty.clone(), !p.ty.contains(&|t| matches!(t, Type::Qubit | Type::Timer)))?;
        }
        self.block(&op.body, false)?;
        if op.ret != Type::Unit && !block_returns(&op.body) {
            return Err(type_err(
                op.name.span,
                format!("operation `{}` may finish without returning a value", op.name.name),
            ));
        }
        Ok(())
    }

    fn block(&mut self, b: &Block, new_scope: bool) -> TResult<()> {
        if new_scope {
            self.scopes.push(HashMap::new());
        }
        for s in &b.stmts {
            self.stmt(s)?;
        }
        if new_scope {
            self.scopes.pop();
        }
        Ok(())
    }

    fn expect_assignable(&self, want: &Type, got: &Type, span: Span) -> TResult<()> {
        if want.assignable_from(got) {
            Ok(())
        } else {
            Err(type_err(span, format!("expected `{want}`, found `{got}`")))
        }
    }

    fn stmt(&mut self, s: &Stmt) -> TResult<()> {
        self.record(s.id, Type::Unit);
        match &s.kind {
            StmtKind::VarDecl { ty, vars } => {
                if ty.contains_qubit() {
                    return Err(type_err(s.span, "qubit variables can only be introduced by `using`"));
                }
                for v in vars {
                    match (&v.init, ty) {
                        (None, Type::Timer) => {}
                        (Some(e), Type::Timer) => {
                            return Err(type_err(e.span, "a timer is declared without an initializer"));
                        }
                        (None, _) => {
                            return Err(type_err(
                                v.name.span,
                                format!("variable `{}` needs an initializer", v.name.name),
                            ));
                        }
                        (Some(e), _) => {
                            let got = self.expr(e, Some(ty))?;
                            self.expect_assignable(ty, &got, e.span)?;
                        }
                    }
                    self.declare(&v.name, ty.clone(), *ty != Type::Timer)?;
                }
            }
            StmtKind::Assign { target, op, value } => {
                let root = assign_root(target).ok_or_else(|| type_err(target.span, "invalid assignment target"))?;
                let local = self
                    .lookup_local(&root.0)
                    .cloned()
                    .ok_or_else(|| err(ErrorCode::UnresolvedName, root.1, format!("unknown variable `{}`", root.0)))?;
                if !local.assignable {
                    return Err(type_err(target.span, format!("`{}` cannot be assigned", root.0)));
                }
                let tt = self.expr(target, None)?;
                if tt.contains(&|t| matches!(t, Type::Qubit | Type::Timer)) {
                    return Err(type_err(target.span, format!("values of type `{tt}` cannot be assigned")));
                }
                let vt = self.expr(value, Some(&tt))?;
                if let Some(bop) = op.binop() {
                    let res = self.arith(bop, &tt, &vt, s.span)?;
                    self.expect_assignable(&tt, &res, s.span)?;
                } else {
                    self.expect_assignable(&tt, &vt, value.span)?;
                }
            }
            StmtKind::Expr(e) => {
                self.expr(e, None)?;
            }
            StmtKind::If { cond, then_branch, else_branch } => {
                let ct = self.expr(cond, Some(&Type::Bool))?;
                self.expect_assignable(&Type::Bool, &ct, cond.span)?;
                self.block(then_branch, true)?;
                match else_branch {
                    Some(ElseBranch::Block(b)) => self.block(b, true)?,
                    Some(ElseBranch::If(s)) => self.stmt(s)?,
                    None => {}
                }
            }
            StmtKind::While { cond, body } => {
                let ct = self.expr(cond, Some(&Type::Bool))?;
                self.expect_assignable(&Type::Bool, &ct, cond.span)?;
                self.loop_depth += 1;
                self.block(body, true)?;
                self.loop_depth -= 1;
            }
            StmtKind::Break | StmtKind::Continue => {
                if self.loop_depth == 0 {
                    return Err(type_err(s.span, "`break`/`continue` outside of a loop"));
                }
            }
            StmtKind::Return(value) => {
                let ret = self.ret.clone();
                match value {
                    None if ret == Type::Unit => {}
                    None => return Err(type_err(s.span, format!("expected a return value of type `{ret}`"))),
                    Some(e) => {
                        let t = self.expr(e, Some(&ret))?;
                        self.expect_assignable(&ret, &t, e.span)?;
                    }
                }
            }
            StmtKind::Using { bindings, body } => {
                self.scopes.push(HashMap::new());
                let mut static_total: u64 = 0;
                for b in bindings {
                    let ty = match &b.count {
                        None => {
                            static_total += 1;
                            Type::Qubit
                        }
                        Some(n) => {
                            let t = self.expr(n, Some(&Type::Int))?;
                            self.expect_assignable(&Type::Int, &t, n.span)?;
                            if let ExprKind::Int(k) = n.kind {
                                static_total += k.max(0) as u64;
                            }
                            Type::array(Type::Qubit)
                        }
                    };
                    self.declare(&b.name, ty, false)?;
                }
                if static_total > self.config.qubit_count as u64 {
                    return Err(type_err(
                        s.span,
                        format!(
                            "`using` allocates {static_total} qubits but the platform has {}",
                            self.config.qubit_count
                        ),
                    ));
                }
                self.block(body, false)?;
                self.scopes.pop();
            }
            StmtKind::Block(b) => self.block(b, true)?,
        }
        Ok(())
    }

    fn arith(&self, op: BinOp, a: &Type, b: &Type, span: Span) -> TResult<Type> {
        use Type::*;
        let bad = || type_err(span, format!("operator `{}` cannot be applied to `{a}` and `{b}`", op.as_str()));
        match op {
            BinOp::Add | BinOp::Sub => match (a, b) {
                (Int, Int) => Ok(Int),
                (Int | Double, Int | Double) => Ok(Double),
                (Time, Time) => Ok(Time),
                _ => Err(bad()),
            },
            BinOp::Mul => match (a, b) {
                (Int, Int) => Ok(Int),
                (Int | Double, Int | Double) => Ok(Double),
                (Time, Int | Double) | (Int | Double, Time) => Ok(Time),
                _ => Err(bad()),
            },
            BinOp::Div => match (a, b) {
                (Int, Int) => Ok(Int),
                (Int | Double, Int | Double) => Ok(Double),
                (Time, Int | Double) => Ok(Time),
                _ => Err(bad()),
            },
            BinOp::Mod => match (a, b) {
                (Int, Int) => Ok(Int),
                _ => Err(bad()),
            },
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => match (a, b) {
                (Int | Double, Int | Double) | (Time, Time) => Ok(Bool),
                _ => Err(bad()),
            },
            BinOp::Eq | BinOp::Ne => match (a, b) {
                (Int | Double, Int | Double) | (Time, Time) | (Bool, Bool) => Ok(Bool),
                _ => Err(bad()),
            },
            BinOp::And | BinOp::Or => match (a, b) {
                (Bool, Bool) => Ok(Bool),
                _ => Err(bad()),
            },
        }
    }

    fn int_literal_ok(v: i64, negated: bool) -> bool {
        v <= i32::MAX as i64 || (negated && v == 1 << 31)
    }

    fn expr(&mut self, e: &Expr, expected: Option<&Type>) -> TResult<Type> {
        let t = self.expr_inner(e, expected)?;
        Ok(self.record(e.id, t))
    }

    fn expr_inner(&mut self, e: &Expr, expected: Option<&Type>) -> TResult<Type> {
        match &e.kind {
            ExprKind::Int(v) => {
                if !Self::int_literal_ok(*v, false) {
                    return Err(type_err(e.span, format!("integer literal {v} does not fit in 32 bits")));
                }
                Ok(Type::Int)
            }
            ExprKind::Double(_) => Ok(Type::Double),
            ExprKind::Bool(_) => Ok(Type::Bool),
            ExprKind::Time(v, _) => {
                if !v.is_finite() {
                    return Err(type_err(e.span, "time literal is not finite"));
                }
                Ok(Type::Time)
            }
            ExprKind::Var(name) => {
                if let Some(l) = self.lookup_local(name) {
                    let ty = l.ty.clone();
                    self.refs.insert(e.id, NameRef::Local);
                    return Ok(ty);
                }
                if let Some(q) = self.program.resolve_path(self.unit, std::slice::from_ref(name)) {
                    let ty = self.program.lookup(&q).unwrap().op_type();
                    self.refs.insert(e.id, NameRef::Global(q));
                    return Ok(ty);
                }
                if name == "PI" {
                    self.refs.insert(e.id, NameRef::Pi);
                    return Ok(Type::Double);
                }
                Err(err(ErrorCode::UnresolvedName, e.span, format!("unknown name `{name}`")))
            }
            ExprKind::Unary(op, a) => {
                if let (UnOp::Neg, ExprKind::Int(v)) = (op, &a.kind) {
                    if !Self::int_literal_ok(*v, true) {
                        return Err(type_err(a.span, format!("integer literal {v} does not fit in 32 bits")));
                    }
                    self.record(a.id, Type::Int);
                    return Ok(Type::Int);
                }
                let t = self.expr(a, expected)?;
                match (op, &t) {
                    (UnOp::Neg, Type::Int | Type::Double | Type::Time) => Ok(t),
                    (UnOp::Not, Type::Bool) => Ok(Type::Bool),
                    _ => Err(type_err(e.span, format!("unary operator cannot be applied to `{t}`"))),
                }
            }
            ExprKind::Binary(op, a, b) => {
                let ta = self.expr(a, None)?;
                let tb = self.expr(b, None)?;
                self.arith(*op, &ta, &tb, e.span)
            }
            ExprKind::Call { modifiers, callee, args, timing } => {
                self.call(e, modifiers, callee, args, timing.as_ref())
            }
            ExprKind::Index(a, i) => {
                let ta = self.expr(a, None)?;
                let ti = self.expr(i, Some(&Type::Int))?;
                self.expect_assignable(&Type::Int, &ti, i.span)?;
                match ta {
                    Type::Array(elem) => Ok(*elem),
                    other => Err(type_err(a.span, format!("cannot index a value of type `{other}`"))),
                }
            }
            ExprKind::Field(base, field) => {
                let is_local_root = base.as_path().is_some_and(|p| self.lookup_local(&p[0]).is_some());
                if !is_local_root {
                    if let Some(path) = e.as_path() {
                        if let Some(q) = self.program.resolve_path(self.unit, &path) {
                            let ty = self.program.lookup(&q).unwrap().op_type();
                            self.refs.insert(e.id, NameRef::Global(q));
                            return Ok(ty);
                        }
                        if path.len() > 1 && base.as_path().is_some() && self.lookup_local(&path[0]).is_none() {
                            return Err(err(
                                ErrorCode::UnresolvedName,
                                e.span,
                                format!("unknown name `{}`", path.join(".")),
                            ));
                        }
                    }
                }
                let tb = self.expr(base, None)?;
                match (&tb, field.name.as_str()) {
                    (Type::Array(_), "length") => Ok(Type::Int),
                    _ => Err(type_err(field.span, format!("`{tb}` has no field `{}`", field.name))),
                }
            }
            ExprKind::Array(elems) => {
                let want_elem = match expected {
                    Some(Type::Array(t)) => Some((**t).clone()),
                    _ => None,
                };
                if elems.is_empty() {
                    return match want_elem {
                        Some(t) => Ok(Type::array(t)),
                        None => Err(type_err(e.span, "cannot infer the element type of an empty array")),
                    };
                }
                let mut elem_ty: Option<Type> = want_elem.clone();
                let mut seen = Vec::new();
                for x in elems {
                    let t = self.expr(x, want_elem.as_ref())?;
                    seen.push((t, x.span));
                }
                for (t, span) in &seen {
                    elem_ty = Some(match elem_ty {
                        None => t.clone(),
                        Some(cur) if cur.assignable_from(t) => cur,
                        Some(cur) if t.assignable_from(&cur) && want_elem.is_none() => t.clone(),
                        Some(cur) => {
                            return Err(type_err(
                                *span,
                                format!("array elements must share one type: `{cur}` vs `{t}`"),
                            ))
                        }
                    });
                }
                Ok(Type::array(elem_ty.unwrap()))
            }
            ExprKind::Tuple(elems) => {
                let wants: Vec<Option<Type>> = match expected {
                    Some(Type::Tuple(ts)) if ts.len() == elems.len() => ts.iter().cloned().map(Some).collect(),
                    _ => vec![None; elems.len()],
                };
                let mut ts = Vec::new();
                for (x, w) in elems.iter().zip(wants) {
                    ts.push(self.expr(x, w.as_ref())?);
                }
                Ok(Type::Tuple(ts))
            }
            ExprKind::Duration(name) => {
                let q = self.program.resolve_path(self.unit, std::slice::from_ref(&name.name));
                match q.as_deref().and_then(|q| self.program.lookup(q)) {
                    Some(Decl::Opaque(_)) => {
                        self.refs.insert(e.id, NameRef::Global(q.unwrap()));
                        Ok(Type::Time)
                    }
                    Some(_) => Err(type_err(
                        name.span,
                        format!("`duration` needs an opaque operation, `{}` is not", name.name),
                    )),
                    None => {
                        Err(err(ErrorCode::UnresolvedName, name.span, format!("unknown operation `{}`", name.name)))
                    }
                }
            }
        }
    }

    fn callee_info(&mut self, callee: &Expr) -> TResult<CalleeInfo> {
        let ty = self.expr(callee, None)?;
        let global = match self.refs.get(&callee.id) {
            Some(NameRef::Global(q)) => Some(q.clone()),
            _ => None,
        };
        if let Some(q) = global {
            let d = self.program.lookup(&q).unwrap();
            let params = d.params().iter().map(|p| p.ty.clone()).collect();
            return Ok(CalleeInfo::Decl { qualified: q, params, ret: d.ret().clone() });
        }
        match ty {
            Type::Op(p, r) => {
                let params = match *p {
                    Type::Unit => vec![],
                    Type::Tuple(ts) => ts,
                    other => vec![other],
                };
                let quantum = params.iter().any(Type::contains_qubit);
                Ok(CalleeInfo::Value { params, ret: *r, quantum })
            }
            other => Err(type_err(callee.span, format!("`{other}` is not an operation"))),
        }
    }

    fn call(
        &mut self,
        e: &Expr,
        modifiers: &[Modifier],
        callee: &Expr,
        args: &[Expr],
        timing: Option<&Timing>,
    ) -> TResult<Type> {
        let info = self.callee_info(callee)?;
        let (params, ret, quantum, name) = match &info {
            CalleeInfo::Decl { qualified, params, ret } => {
                (params.clone(), ret.clone(), self.quantum.contains(qualified), qualified.clone())
            }
            CalleeInfo::Value { params, ret, quantum } => {
                (params.clone(), ret.clone(), *quantum, crate::frontend::pretty::print_expr(callee))
            }
        };
        if params.len() != args.len() {
            return Err(err(
                ErrorCode::Arity,
                e.span,
                format!("`{name}` takes {} argument(s) but {} were given", params.len(), args.len()),
            ));
        }
        for (p, a) in params.iter().zip(args) {
            let t = self.expr(a, Some(p))?;
            self.expect_assignable(p, &t, a.span)?;
        }
        for m in modifiers {
            if !quantum {
                return Err(type_err(
                    e.span,
                    format!("modifiers apply only to quantum operations, `{name}` is classical"),
                ));
            }
            if ret != Type::Unit {
                return Err(type_err(e.span, format!("`{name}` returns `{ret}` and cannot be modified")));
            }
            if let Modifier::Control(qs) = m {
                if qs.is_empty() {
                    return Err(err(ErrorCode::Arity, e.span, "`control` needs at least one qubit"));
                }
                for q in qs {
                    let t = self.expr(q, None)?;
                    if t != Type::Qubit && t != Type::array(Type::Qubit) {
                        return Err(type_err(q.span, format!("control operand must be a qubit, found `{t}`")));
                    }
                }
            }
        }
        if let Some(t) = timing {
            if !quantum {
                return Err(err(
                    ErrorCode::TimingOnClassical,
                    e.span,
                    format!("timing annotations attach only to quantum operations; `{name}` is classical"),
                ));
            }
            for c in &t.constraints {
                let tt = self.expr(&c.timer, None)?;
                if tt != Type::Timer {
                    return Err(type_err(
                        c.timer.span,
                        format!("left side of a timing constraint must be a timer, found `{tt}`"),
                    ));
                }
                let vt = self.expr(&c.value, None)?;
                if vt != Type::Time && vt != Type::Int {
                    return Err(type_err(
                        c.value.span,
                        format!("timing constraint bound must be `time` or `int` ns, found `{vt}`"),
                    ));
                }
            }
            for r in &t.resets {
                match self.lookup_local(&r.name) {
                    Some(Local { ty: Type::Timer, .. }) => {}
                    Some(l) => return Err(type_err(r.span, format!("`{}` has type `{}`, not `timer`", r.name, l.ty))),
                    None => return Err(err(ErrorCode::UnresolvedName, r.span, format!("unknown timer `{}`", r.name))),
                }
            }
        }
        Ok(ret)
    }
}

/// Name and span of the variable an assignment target writes through.
fn assign_root(e: &Expr) -> Option<(String, Span)> {
    match &e.kind {
        ExprKind::Var(n) => Some((n.clone(), e.span)),
        ExprKind::Index(base, _) => assign_root(base),
        _ => None,
    }
}
