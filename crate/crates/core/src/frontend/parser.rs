//! Recursive-descent parser producing a [`SourceUnit`].

use super::ast::*;
use super::diag::{Diagnostic, ErrorCode, FileId, Span};
use super::lexer::{Keyword, Tok, Token};
use crate::types::Type;

pub struct Parser<'t> {
    toks: &'t [Token],
    pos: usize,
    file: FileId,
    next_id: u32,
}

type PResult<T> = Result<T, Diagnostic>;

/// Parses a whole file. `stem` names the package when the file has no
/// `package` statement.
pub fn parse_unit(toks: &[Token], file: FileId, stem: &str) -> PResult<SourceUnit> {
    Parser::new(toks, file).unit(stem)
}

impl<'t> Parser<'t> {
    pub fn new(toks: &'t [Token], file: FileId) -> Self {
        Parser { toks, pos: 0, file, next_id: 0 }
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos.min(self.toks.len() - 1)].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        &self.toks[(self.pos + n).min(self.toks.len() - 1)].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos.min(self.toks.len() - 1)].span
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos.min(self.toks.len() - 1)].clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn at(&self, tok: &Tok) -> bool {
        self.peek() == tok
    }

    fn at_kw(&self, kw: Keyword) -> bool {
        *self.peek() == Tok::Kw(kw)
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.at(tok) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn error_here(&self, expected: &str) -> Diagnostic {
        Diagnostic::new(ErrorCode::Parse, self.span(), format!("expected {expected}, found {}", self.peek()))
    }

    fn expect(&mut self, tok: &Tok) -> PResult<Span> {
        if self.at(tok) {
            Ok(self.bump().span)
        } else {
            Err(self.error_here(&tok.to_string()))
        }
    }

    fn expect_kw(&mut self, kw: Keyword) -> PResult<Span> {
        self.expect(&Tok::Kw(kw))
    }

    fn ident(&mut self) -> PResult<Ident> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                let span = self.bump().span;
                Ok(Ident { name, span })
            }
            _ => Err(self.error_here("identifier")),
        }
    }

    fn fresh_id(&mut self) -> NodeId {
        let id = NodeId { file: self.file, local: self.next_id };
        self.next_id += 1;
        id
    }

    fn mk_expr(&mut self, kind: ExprKind, span: Span) -> Expr {
        Expr { id: self.fresh_id(), kind, span }
    }

    fn mk_stmt(&mut self, kind: StmtKind, span: Span) -> Stmt {
        Stmt { id: self.fresh_id(), kind, span }
    }

    pub fn unit(&mut self, stem: &str) -> PResult<SourceUnit> {
        let (package, package_explicit) = if self.at_kw(Keyword::Package) {
            self.bump();
            let (path, _) = self.dotted_path(false)?;
            self.expect(&Tok::Semi)?;
            (path, true)
        } else {
            (stem.split('.').map(str::to_string).collect(), false)
        };
        let mut imports = Vec::new();
        while self.at_kw(Keyword::Import) {
            let span = self.bump().span;
            let (path, wildcard) = self.dotted_path(true)?;
            if !wildcard && path.len() < 2 {
                return Err(Diagnostic::new(
                    ErrorCode::Parse,
                    span,
                    "import needs a package path followed by `.*` or `.Name`",
                ));
            }
            self.eat(&Tok::Semi);
            imports.push(Import { path, wildcard, span });
        }
        let mut decls = Vec::new();
        while !self.at(&Tok::Eof) {
            decls.push(self.decl()?);
        }
        Ok(SourceUnit { file: self.file, package, package_explicit, imports, decls })
    }

    fn dotted_path(&mut self, allow_star: bool) -> PResult<(Vec<String>, bool)> {
        let mut path = vec![self.ident()?.name];
        while self.at(&Tok::Dot) {
            self.bump();
            if allow_star && self.at(&Tok::Star) {
                self.bump();
                return Ok((path, true));
            }
            path.push(self.ident()?.name);
        }
        Ok((path, false))
    }

    fn decl(&mut self) -> PResult<Decl> {
        if self.at_kw(Keyword::Opaque) {
            self.bump();
            let name = self.ident()?;
            let params = self.param_list()?;
            self.expect(&Tok::Colon)?;
            let ret = self.ty()?;
            self.expect(&Tok::Semi)?;
            Ok(Decl::Opaque(OpaqueDecl { name, params, ret }))
        } else if self.at_kw(Keyword::Operation) {
            self.bump();
            let name = self.ident()?;
            let params = self.param_list()?;
            self.expect(&Tok::Colon)?;
            let ret = self.ty()?;
            let body = self.block()?;
            Ok(Decl::Operation(OperationDecl { name, params, ret, body }))
        } else {
            Err(self.error_here("`opaque` or `operation`"))
        }
    }

    fn param_list(&mut self) -> PResult<Vec<Param>> {
        self.expect(&Tok::LParen)?;
        let mut params = Vec::new();
        if !self.at(&Tok::RParen) {
            loop {
                let name = self.ident()?;
                self.expect(&Tok::Colon)?;
                let ty = self.ty()?;
                params.push(Param { name, ty });
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(&Tok::RParen)?;
        Ok(params)
    }

    fn starts_type(&self) -> bool {
        matches!(
            self.peek(),
            Tok::Kw(
                Keyword::Bool
                    | Keyword::Int
                    | Keyword::Double
                    | Keyword::Unit
                    | Keyword::Qubit
                    | Keyword::Time
                    | Keyword::Timer
            )
        )
    }

    pub fn ty(&mut self) -> PResult<Type> {
        let mut base = match self.peek().clone() {
            Tok::Kw(k) => {
                let t = match k {
                    Keyword::Bool => Type::Bool,
                    Keyword::Int => Type::Int,
                    Keyword::Double => Type::Double,
                    Keyword::Unit => Type::Unit,
                    Keyword::Qubit => Type::Qubit,
                    Keyword::Time => Type::Time,
                    Keyword::Timer => Type::Timer,
                    _ => return Err(self.error_here("type")),
                };
                self.bump();
                t
            }
            Tok::LParen => {
                self.bump();
                let mut elems = vec![self.ty()?];
                while self.eat(&Tok::Comma) {
                    elems.push(self.ty()?);
                }
                self.expect(&Tok::RParen)?;
                if elems.len() == 1 {
                    elems.pop().unwrap()
                } else {
                    Type::Tuple(elems)
                }
            }
            _ => return Err(self.error_here("type")),
        };
        while self.at(&Tok::LBracket) && *self.peek_at(1) == Tok::RBracket {
            self.bump();
            self.bump();
            base = Type::array(base);
        }
        if self.eat(&Tok::Arrow) {
            let ret = self.ty()?;
            base = Type::op(base, ret);
        }
        Ok(base)
    }

    fn block(&mut self) -> PResult<Block> {
        let span = self.expect(&Tok::LBrace)?;
        let mut stmts = Vec::new();
        while !self.at(&Tok::RBrace) {
            if self.at(&Tok::Eof) {
                return Err(self.error_here("`}`"));
            }
            stmts.push(self.stmt()?);
        }
        self.bump();
        Ok(Block { stmts, span })
    }

    /// Tries `type name` at the current position, restoring on failure.
    fn try_tuple_decl_type(&mut self) -> Option<Type> {
        let save = (self.pos, self.next_id);
        match self.ty() {
            Ok(t) if matches!(self.peek(), Tok::Ident(_)) => Some(t),
            _ => {
                self.pos = save.0;
                self.next_id = save.1;
                None
            }
        }
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let span = self.span();
        match self.peek().clone() {
            Tok::LBrace => {
                let b = self.block()?;
                Ok(self.mk_stmt(StmtKind::Block(b), span))
            }
            Tok::Kw(Keyword::If) => self.if_stmt(),
            Tok::Kw(Keyword::While) => {
                self.bump();
                self.expect(&Tok::LParen)?;
                let cond = self.expr()?;
                self.expect(&Tok::RParen)?;
                let body = self.block()?;
                Ok(self.mk_stmt(StmtKind::While { cond, body }, span))
            }
            Tok::Kw(Keyword::Break) => {
                self.bump();
                self.expect(&Tok::Semi)?;
                Ok(self.mk_stmt(StmtKind::Break, span))
            }
            Tok::Kw(Keyword::Continue) => {
                self.bump();
                self.expect(&Tok::Semi)?;
                Ok(self.mk_stmt(StmtKind::Continue, span))
            }
            Tok::Kw(Keyword::Return) => {
                self.bump();
                let value = if self.at(&Tok::Semi) { None } else { Some(self.expr()?) };
                self.expect(&Tok::Semi)?;
                Ok(self.mk_stmt(StmtKind::Return(value), span))
            }
            Tok::Kw(Keyword::Using) => self.using_stmt(),
            _ if self.starts_type() => {
                let ty = self.ty()?;
                self.var_decl(ty, span)
            }
            Tok::LParen => {
                if let Some(ty) = self.try_tuple_decl_type() {
                    return self.var_decl(ty, span);
                }
                self.expr_stmt(span)
            }
            _ => self.expr_stmt(span),
        }
    }

    fn var_decl(&mut self, ty: Type, span: Span) -> PResult<Stmt> {
        let mut vars = Vec::new();
        loop {
            let name = self.ident()?;
            let init = if self.eat(&Tok::Assign) { Some(self.expr()?) } else { None };
            vars.push(VarInit { name, init });
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(&Tok::Semi)?;
        Ok(self.mk_stmt(StmtKind::VarDecl { ty, vars }, span))
    }

    fn expr_stmt(&mut self, span: Span) -> PResult<Stmt> {
        let e = self.expr()?;
        let op = match self.peek() {
            Tok::Assign => Some(AssignOp::Set),
            Tok::PlusAssign => Some(AssignOp::Add),
            Tok::MinusAssign => Some(AssignOp::Sub),
            Tok::StarAssign => Some(AssignOp::Mul),
            Tok::SlashAssign => Some(AssignOp::Div),
            _ => None,
        };
        let kind = if let Some(op) = op {
            if !matches!(e.kind, ExprKind::Var(_) | ExprKind::Index(..)) {
                return Err(Diagnostic::new(ErrorCode::Parse, e.span, "invalid assignment target"));
            }
            self.bump();
            let value = self.expr()?;
            StmtKind::Assign { target: e, op, value }
        } else {
            StmtKind::Expr(e)
        };
        self.expect(&Tok::Semi)?;
        Ok(self.mk_stmt(kind, span))
    }

    fn if_stmt(&mut self) -> PResult<Stmt> {
        let span = self.expect_kw(Keyword::If)?;
        self.expect(&Tok::LParen)?;
        let cond = self.expr()?;
        self.expect(&Tok::RParen)?;
        let then_branch = self.block()?;
        let else_branch = if self.at_kw(Keyword::Else) {
            self.bump();
            if self.at_kw(Keyword::If) {
                Some(ElseBranch::If(Box::new(self.if_stmt()?)))
            } else {
                Some(ElseBranch::Block(self.block()?))
            }
        } else {
            None
        };
        Ok(self.mk_stmt(StmtKind::If { cond, then_branch, else_branch }, span))
    }

    fn using_stmt(&mut self) -> PResult<Stmt> {
        let span = self.expect_kw(Keyword::Using)?;
        self.expect(&Tok::LParen)?;
        let mut bindings = Vec::new();
        loop {
            let name = self.ident()?;
            self.expect(&Tok::Colon)?;
            self.expect_kw(Keyword::Qubit)?;
            let count = if self.eat(&Tok::LBracket) {
                let n = self.expr()?;
                self.expect(&Tok::RBracket)?;
                Some(n)
            } else {
                None
            };
            bindings.push(QubitBinding { name, count });
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(&Tok::RParen)?;
        let body = self.block()?;
        Ok(self.mk_stmt(StmtKind::Using { bindings, body }, span))
    }

    pub fn expr(&mut self) -> PResult<Expr> {
        self.binary(1)
    }

    fn binop_here(&self) -> Option<BinOp> {
        Some(match self.peek() {
            Tok::OrOr => BinOp::Or,
            Tok::AndAnd => BinOp::And,
            Tok::EqEq => BinOp::Eq,
            Tok::NotEq => BinOp::Ne,
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            Tok::Plus => BinOp::Add,
            Tok::Minus => BinOp::Sub,
            Tok::Star => BinOp::Mul,
            Tok::Slash => BinOp::Div,
            Tok::Percent => BinOp::Mod,
            _ => return None,
        })
    }

    /// Precedence climbing; all binary operators are left-associative.
    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop_here() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            let span = self.bump().span;
            let rhs = self.binary(prec + 1)?;
            lhs = self.mk_expr(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        let span = self.span();
        let op = match self.peek() {
            Tok::Minus => UnOp::Neg,
            Tok::Bang => UnOp::Not,
            _ => return self.postfix(),
        };
        self.bump();
        let inner = self.unary()?;
        Ok(self.mk_expr(ExprKind::Unary(op, Box::new(inner)), span))
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.primary()?;
        loop {
            match self.peek() {
                Tok::LParen => {
                    let span = e.span;
                    let args = self.call_args()?;
                    let timing = self.timing()?;
                    e = self.mk_expr(ExprKind::Call { modifiers: Vec::new(), callee: Box::new(e), args, timing }, span);
                }
                Tok::LBracket => {
                    let span = self.bump().span;
                    let idx = self.expr()?;
                    self.expect(&Tok::RBracket)?;
                    e = self.mk_expr(ExprKind::Index(Box::new(e), Box::new(idx)), span);
                }
                Tok::Dot => {
                    let span = self.bump().span;
                    let field = self.ident()?;
                    e = self.mk_expr(ExprKind::Field(Box::new(e), field), span);
                }
                _ => return Ok(e),
            }
        }
    }

    fn call_args(&mut self) -> PResult<Vec<Expr>> {
        self.expect(&Tok::LParen)?;
        let mut args = Vec::new();
        if !self.at(&Tok::RParen) {
            loop {
                args.push(self.expr()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(&Tok::RParen)?;
        Ok(args)
    }

    fn timing(&mut self) -> PResult<Option<Timing>> {
        let mut timing = Timing::default();
        let mut seen = false;
        if self.at(&Tok::At) && *self.peek_at(1) == Tok::LBrace {
            seen = true;
            self.bump();
            self.bump();
            loop {
                let span = self.span();
                let timer = self.binary(BinOp::Add.precedence())?;
                let cmp = match self.peek() {
                    Tok::EqEq => TimingCmp::Eq,
                    Tok::Gt => TimingCmp::Gt,
                    Tok::Ge => TimingCmp::Ge,
                    Tok::Lt | Tok::Le | Tok::NotEq => {
                        return Err(Diagnostic::new(
                            ErrorCode::Parse,
                            self.span(),
                            format!("comparator {} cannot bound a start time; use `==`, `>` or `>=`", self.peek()),
                        ))
                    }
                    _ => return Err(self.error_here("`==`, `>` or `>=`")),
                };
                self.bump();
                let value = self.binary(BinOp::Add.precedence())?;
                timing.constraints.push(TimingConstraint { timer, cmp, value, span });
                if !self.eat(&Tok::AndAnd) {
                    break;
                }
            }
            self.expect(&Tok::RBrace)?;
        }
        if self.at(&Tok::Bang) && *self.peek_at(1) == Tok::LBrace {
            seen = true;
            self.bump();
            self.bump();
            loop {
                timing.resets.push(self.ident()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(&Tok::RBrace)?;
        }
        Ok(seen.then_some(timing))
    }

    fn primary(&mut self) -> PResult<Expr> {
        let span = self.span();
        let kind = match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                ExprKind::Int(v)
            }
            Tok::Double(v) => {
                self.bump();
                ExprKind::Double(v)
            }
            Tok::Time(v, u) => {
                self.bump();
                ExprKind::Time(v, u)
            }
            Tok::Kw(Keyword::True) => {
                self.bump();
                ExprKind::Bool(true)
            }
            Tok::Kw(Keyword::False) => {
                self.bump();
                ExprKind::Bool(false)
            }
            Tok::Ident(name) => {
                self.bump();
                ExprKind::Var(name)
            }
            Tok::Kw(Keyword::Duration) => {
                self.bump();
                self.expect(&Tok::LParen)?;
                let name = self.ident()?;
                self.expect(&Tok::RParen)?;
                ExprKind::Duration(name)
            }
            Tok::Kw(Keyword::Control) | Tok::Kw(Keyword::Invert) => return self.modified_call(),
            Tok::LParen => {
                self.bump();
                let first = self.expr()?;
                if self.eat(&Tok::RParen) {
                    return Ok(first);
                }
                let mut elems = vec![first];
                while self.eat(&Tok::Comma) {
                    elems.push(self.expr()?);
                }
                self.expect(&Tok::RParen)?;
                ExprKind::Tuple(elems)
            }
            Tok::LBrace => {
                self.bump();
                let mut elems = Vec::new();
                if !self.at(&Tok::RBrace) {
                    loop {
                        elems.push(self.expr()?);
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                }
                self.expect(&Tok::RBrace)?;
                ExprKind::Array(elems)
            }
            _ => return Err(self.error_here("expression")),
        };
        Ok(self.mk_expr(kind, span))
    }

    /// `control(qs) invert Op(args)`: modifiers followed by a call.
    fn modified_call(&mut self) -> PResult<Expr> {
        let mut modifiers = Vec::new();
        loop {
            if self.at_kw(Keyword::Control) {
                self.bump();
                modifiers.push(Modifier::Control(self.call_args()?));
            } else if self.at_kw(Keyword::Invert) {
                self.bump();
                modifiers.push(Modifier::Invert);
            } else {
                break;
            }
        }
        let span = self.span();
        let mut e = self.postfix()?;
        match &mut e.kind {
            ExprKind::Call { modifiers: inner, .. } => {
                modifiers.append(inner);
                *inner = modifiers;
                Ok(e)
            }
            _ => Err(Diagnostic::new(ErrorCode::Parse, span, "a modifier must be applied to an operation call")),
        }
    }
}
