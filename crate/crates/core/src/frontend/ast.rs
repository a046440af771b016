//! Syntax tree for Quingo source units.

use super::diag::{FileId, Span};
use crate::time::TimeUnit;
use crate::types::Type;

/// Identifies an expression or statement inside a compilation. The pair is
/// `(file, local index)`; local indices are assigned by the parser.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId {
    pub file: FileId,
    pub local: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ident {
    pub name: String,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Import {
    pub path: Vec<String>,
    /// `import a.b.*` when true, `import a.b.Name` otherwise (the last path
    /// segment then names the declaration).
    pub wildcard: bool,
    pub span: Span,
}

impl Import {
    pub fn package(&self) -> String {
        if self.wildcard {
            self.path.join(".")
        } else {
            self.path[..self.path.len() - 1].join(".")
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceUnit {
    pub file: FileId,
    pub package: Vec<String>,
    /// False when the file has no `package` statement and the name was taken
    /// from the file stem.
    pub package_explicit: bool,
    pub imports: Vec<Import>,
    pub decls: Vec<Decl>,
}

impl SourceUnit {
    pub fn package_name(&self) -> String {
        self.package.join(".")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: Ident,
    pub ty: Type,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Decl {
    Opaque(OpaqueDecl),
    Operation(OperationDecl),
}

impl Decl {
    pub fn name(&self) -> &Ident {
        match self {
            Decl::Opaque(d) => &d.name,
            Decl::Operation(d) => &d.name,
        }
    }

    pub fn params(&self) -> &[Param] {
        match self {
            Decl::Opaque(d) => &d.params,
            Decl::Operation(d) => &d.params,
        }
    }

    pub fn ret(&self) -> &Type {
        match self {
            Decl::Opaque(d) => &d.ret,
            Decl::Operation(d) => &d.ret,
        }
    }

    pub fn op_type(&self) -> Type {
        let params: Vec<Type> = self.params().iter().map(|p| p.ty.clone()).collect();
        Type::op(Type::params_type(&params), self.ret().clone())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpaqueDecl {
    pub name: Ident,
    pub params: Vec<Param>,
    pub ret: Type,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperationDecl {
    pub name: Ident,
    pub params: Vec<Param>,
    pub ret: Type,
    pub body: Block,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub stmts: Vec<Stmt>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub id: NodeId,
    pub kind: StmtKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarInit {
    pub name: Ident,
    pub init: Option<Expr>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssignOp {
    Set,
    Add,
    Sub,
    Mul,
    Div,
}

impl AssignOp {
    pub fn as_str(self) -> &'static str {
        match self {
            AssignOp::Set => "=",
            AssignOp::Add => "+=",
            AssignOp::Sub => "-=",
            AssignOp::Mul => "*=",
            AssignOp::Div => "/=",
        }
    }

    pub fn binop(self) -> Option<BinOp> {
        match self {
            AssignOp::Set => None,
            AssignOp::Add => Some(BinOp::Add),
            AssignOp::Sub => Some(BinOp::Sub),
            AssignOp::Mul => Some(BinOp::Mul),
            AssignOp::Div => Some(BinOp::Div),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QubitBinding {
    pub name: Ident,
    /// `None` for a single `qubit`, `Some(n)` for `qubit[n]`.
    pub count: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ElseBranch {
    Block(Block),
    If(Box<Stmt>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    VarDecl { ty: Type, vars: Vec<VarInit> },
    Assign { target: Expr, op: AssignOp, value: Expr },
    Expr(Expr),
    If { cond: Expr, then_branch: Block, else_branch: Option<ElseBranch> },
    While { cond: Expr, body: Block },
    Break,
    Continue,
    Return(Option<Expr>),
    Using { bindings: Vec<QubitBinding>, body: Block },
    Block(Block),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn as_str(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "%",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne => 3,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div | BinOp::Mod => 6,
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(self, BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TimingCmp {
    Eq,
    Gt,
    Ge,
}

impl TimingCmp {
    pub fn as_str(self) -> &'static str {
        match self {
            TimingCmp::Eq => "==",
            TimingCmp::Gt => ">",
            TimingCmp::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingConstraint {
    pub timer: Expr,
    pub cmp: TimingCmp,
    pub value: Expr,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Timing {
    pub constraints: Vec<TimingConstraint>,
    pub resets: Vec<Ident>,
}

impl Timing {
    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty() && self.resets.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Modifier {
    Control(Vec<Expr>),
    Invert,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub id: NodeId,
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Int(i64),
    Double(f64),
    Bool(bool),
    Time(f64, TimeUnit),
    Var(String),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    /// `modifiers callee(args) @{..} !{..}`; modifiers apply outermost first.
    Call {
        modifiers: Vec<Modifier>,
        callee: Box<Expr>,
        args: Vec<Expr>,
        timing: Option<Timing>,
    },
    Index(Box<Expr>, Box<Expr>),
    /// `base.name`: array `.length` or a package-qualified name.
    Field(Box<Expr>, Ident),
    Array(Vec<Expr>),
    Tuple(Vec<Expr>),
    Duration(Ident),
}

impl Expr {
    /// Dotted name if the expression is `a.b.c` made only of identifiers.
    pub fn as_path(&self) -> Option<Vec<String>> {
        match &self.kind {
            ExprKind::Var(n) => Some(vec![n.clone()]),
            ExprKind::Field(base, f) => {
                let mut p = base.as_path()?;
                p.push(f.name.clone());
                Some(p)
            }
            _ => None,
        }
    }
}

/// Visits every expression of a statement, outermost first.
pub fn walk_stmt_exprs<'a>(stmt: &'a Stmt, f: &mut dyn FnMut(&'a Expr)) {
    match &stmt.kind {
        StmtKind::VarDecl { vars, .. } => {
            for v in vars {
                if let Some(e) = &v.init {
                    walk_expr(e, f);
                }
            }
        }
        StmtKind::Assign { target, value, .. } => {
            walk_expr(target, f);
            walk_expr(value, f);
        }
        StmtKind::Expr(e) => walk_expr(e, f),
        StmtKind::If { cond, then_branch, else_branch } => {
            walk_expr(cond, f);
            walk_block_exprs(then_branch, f);
            match else_branch {
                Some(ElseBranch::Block(b)) => walk_block_exprs(b, f),
                Some(ElseBranch::If(s)) => walk_stmt_exprs(s, f),
                None => {}
            }
        }
        StmtKind::While { cond, body } => {
            walk_expr(cond, f);
            walk_block_exprs(body, f);
        }
        StmtKind::Return(Some(e)) => walk_expr(e, f),
        StmtKind::Using { bindings, body } => {
            for b in bindings {
                if let Some(c) = &b.count {
                    walk_expr(c, f);
                }
            }
            walk_block_exprs(body, f);
        }
        StmtKind::Block(b) => walk_block_exprs(b, f),
        StmtKind::Break | StmtKind::Continue | StmtKind::Return(None) => {}
    }
}

pub fn walk_block_exprs<'a>(block: &'a Block, f: &mut dyn FnMut(&'a Expr)) {
    for s in &block.stmts {
        walk_stmt_exprs(s, f);
    }
}

pub fn walk_expr<'a>(e: &'a Expr, f: &mut dyn FnMut(&'a Expr)) {
    f(e);
    match &e.kind {
        ExprKind::Unary(_, a) => walk_expr(a, f),
        ExprKind::Binary(_, a, b) | ExprKind::Index(a, b) => {
            walk_expr(a, f);
            walk_expr(b, f);
        }
        ExprKind::Call { modifiers, callee, args, timing } => {
            for m in modifiers {
                if let Modifier::Control(qs) = m {
                    for q in qs {
                        walk_expr(q, f);
                    }
                }
            }
            walk_expr(callee, f);
            for a in args {
                walk_expr(a, f);
            }
            if let Some(t) = timing {
                for c in &t.constraints {
                    walk_expr(&c.timer, f);
                    walk_expr(&c.value, f);
                }
            }
        }
        ExprKind::Field(base, _) => walk_expr(base, f),
        ExprKind::Array(es) | ExprKind::Tuple(es) => {
            for x in es {
                walk_expr(x, f);
            }
        }
        ExprKind::Int(_)
        | ExprKind::Double(_)
        | ExprKind::Bool(_)
        | ExprKind::Time(..)
        | ExprKind::Var(_)
        | ExprKind::Duration(_) => {}
    }
}
