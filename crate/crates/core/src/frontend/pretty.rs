//! Source printer. Output reparses to the same tree (up to spans and ids).

use std::fmt::Write;

use super::ast::*;
use super::diag::Span;

pub fn print_unit(u: &SourceUnit) -> String {
    let mut p = Printer { out: String::new(), indent: 0 };
    if u.package_explicit {
        let _ = writeln!(p.out, "package {};", u.package_name());
    }
    for i in &u.imports {
        let star = if i.wildcard { ".*" } else { "" };
        let _ = writeln!(p.out, "import {}{star};", i.path.join("."));
    }
    for d in &u.decls {
        p.out.push('\n');
        p.decl(d);
    }
    p.out
}

pub fn print_expr(e: &Expr) -> String {
    let mut p = Printer { out: String::new(), indent: 0 };
    p.expr(e, 0);
    p.out
}

/// Formats a double so that the lexer reads it back as a double literal.
pub fn fmt_double(v: f64) -> String {
    let s = format!("{v:?}");
    if s.contains('.') || !s.contains('e') {
        return s;
    }
    let (mant, exp) = s.split_once('e').unwrap();
    format!("{mant}.0e{exp}")
}

struct Printer {
    out: String,
    indent: usize,
}

impl Printer {
    fn line_start(&mut self) {
        for _ in 0..self.indent {
            self.out.push_str("    ");
        }
    }

    fn params(&mut self, ps: &[Param]) {
        self.out.push('(');
        for (i, p) in ps.iter().enumerate() {
            if i > 0 {
                self.out.push_str(", ");
            }
            let _ = write!(self.out, "{}: {}", p.name.name, p.ty);
        }
        self.out.push(')');
    }

    fn decl(&mut self, d: &Decl) {
        match d {
            Decl::Opaque(o) => {
                let _ = write!(self.out, "opaque {}", o.name.name);
                self.params(&o.params);
                let _ = writeln!(self.out, ": {};", o.ret);
            }
            Decl::Operation(o) => {
                let _ = write!(self.out, "operation {}", o.name.name);
                self.params(&o.params);
                let _ = write!(self.out, ": {} ", o.ret);
                self.block(&o.body);
                self.out.push('\n');
            }
        }
    }

    fn block(&mut self, b: &Block) {
        self.out.push_str("{\n");
        self.indent += 1;
        for s in &b.stmts {
            self.line_start();
            self.stmt(s);
            self.out.push('\n');
        }
        self.indent -= 1;
        self.line_start();
        self.out.push('}');
    }

    fn stmt(&mut self, s: &Stmt) {
        match &s.kind {
            StmtKind::VarDecl { ty, vars } => {
                let _ = write!(self.out, "{ty} ");
                for (i, v) in vars.iter().enumerate() {
                    if i > 0 {
                        self.out.push_str(", ");
                    }
                    self.out.push_str(&v.name.name);
                    if let Some(e) = &v.init {
                        self.out.push_str(" = ");
                        self.expr(e, 0);
                    }
                }
                self.out.push(';');
            }
            StmtKind::Assign { target, op, value } => {
                self.expr(target, 0);
                let _ = write!(self.out, " {} ", op.as_str());
                self.expr(value, 0);
                self.out.push(';');
            }
            StmtKind::Expr(e) => {
                self.expr(e, 0);
                self.out.push(';');
            }
            StmtKind::If { .. } => self.if_stmt(s),
            StmtKind::While { cond, body } => {
                self.out.push_str("while (");
                self.expr(cond, 0);
                self.out.push_str(") ");
                self.block(body);
            }
            StmtKind::Break => self.out.push_str("break;"),
            StmtKind::Continue => self.out.push_str("continue;"),
            StmtKind::Return(None) => self.out.push_str("return;"),
            StmtKind::Return(Some(e)) => {
                self.out.push_str("return ");
                self.expr(e, 0);
                self.out.push(';');
            }
            StmtKind::Using { bindings, body } => {
                self.out.push_str("using(");
                for (i, b) in bindings.iter().enumerate() {
                    if i > 0 {
                        self.out.push_str(", ");
                    }
                    let _ = write!(self.out, "{}: qubit", b.name.name);
                    if let Some(n) = &b.count {
                        self.out.push('[');
                        self.expr(n, 0);
                        self.out.push(']');
                    }
                }
                self.out.push_str(") ");
                self.block(body);
            }
            StmtKind::Block(b) => self.block(b),
        }
    }

    fn if_stmt(&mut self, s: &Stmt) {
        let StmtKind::If { cond, then_branch, else_branch } = &s.kind else { unreachable!() };
        self.out.push_str("if (");
        self.expr(cond, 0);
        self.out.push_str(") ");
        self.block(then_branch);
        match else_branch {
            Some(ElseBranch::Block(b)) => {
                self.out.push_str(" else ");
                self.block(b);
            }
            Some(ElseBranch::If(s)) => {
                self.out.push_str(" else ");
                self.if_stmt(s);
            }
            None => {}
        }
    }

    fn list(&mut self, es: &[Expr]) {
        for (i, e) in es.iter().enumerate() {
            if i > 0 {
                self.out.push_str(", ");
            }
            self.expr(e, 0);
        }
    }

    /// Prints `e`, parenthesized when its precedence is below `min_prec`.
    /// Unary expressions rank 7, postfix and primary forms 8.
    fn expr(&mut self, e: &Expr, min_prec: u8) {
        let prec = match &e.kind {
            ExprKind::Binary(op, ..) => op.precedence(),
            ExprKind::Unary(..) => 7,
            _ => 8,
        };
        let paren = prec < min_prec;
        if paren {
            self.out.push('(');
        }
        match &e.kind {
            ExprKind::Int(v) => {
                let _ = write!(self.out, "{v}");
            }
            ExprKind::Double(v) => self.out.push_str(&fmt_double(*v)),
            ExprKind::Bool(b) => self.out.push_str(if *b { "true" } else { "false" }),
            ExprKind::Time(v, u) => {
                if v.fract() == 0.0 && v.abs() < 1e15 {
                    let _ = write!(self.out, "{}{}", *v as i64, u.as_str());
                } else {
                    let _ = write!(self.out, "{}{}", fmt_double(*v), u.as_str());
                }
            }
            ExprKind::Var(n) => self.out.push_str(n),
            ExprKind::Unary(op, a) => {
                self.out.push(match op {
                    UnOp::Neg => '-',
                    UnOp::Not => '!',
                });
                self.expr(a, 7);
            }
            ExprKind::Binary(op, a, b) => {
                self.expr(a, op.precedence());
                let _ = write!(self.out, " {} ", op.as_str());
                self.expr(b, op.precedence() + 1);
            }
            ExprKind::Call { modifiers, callee, args, timing } => {
                for m in modifiers {
                    match m {
                        Modifier::Control(qs) => {
                            self.out.push_str("control(");
                            self.list(qs);
                            self.out.push_str(") ");
                        }
                        Modifier::Invert => self.out.push_str("invert "),
                    }
                }
                self.expr(callee, 8);
                self.out.push('(');
                self.list(args);
                self.out.push(')');
                if let Some(t) = timing {
                    self.timing(t);
                }
            }
            ExprKind::Index(a, i) => {
                self.expr(a, 8);
                self.out.push('[');
                self.expr(i, 0);
                self.out.push(']');
            }
            ExprKind::Field(a, f) => {
                self.expr(a, 8);
                self.out.push('.');
                self.out.push_str(&f.name);
            }
            ExprKind::Array(es) => {
                self.out.push('{');
                self.list(es);
                self.out.push('}');
            }
            ExprKind::Tuple(es) => {
                self.out.push('(');
                self.list(es);
                self.out.push(')');
            }
            ExprKind::Duration(n) => {
                let _ = write!(self.out, "duration({})", n.name);
            }
        }
        if paren {
            self.out.push(')');
        }
    }

    fn timing(&mut self, t: &Timing) {
        let add = super::ast::BinOp::Add.precedence();
        if !t.constraints.is_empty() {
            self.out.push_str(" @{");
            for (i, c) in t.constraints.iter().enumerate() {
                if i > 0 {
                    self.out.push_str(" && ");
                }
                self.expr(&c.timer, add);
                let _ = write!(self.out, " {} ", c.cmp.as_str());
                self.expr(&c.value, add);
            }
            self.out.push('}');
        }
        if !t.resets.is_empty() {
            self.out.push_str(" !{");
            let names: Vec<&str> = t.resets.iter().map(|r| r.name.as_str()).collect();
            self.out.push_str(&names.join(", "));
            self.out.push('}');
        }
    }
}

/// Resets every span in the unit so trees parsed from different texts can be
/// compared structurally. Node ids are kept: the parser assigns them in
/// a structure-determined order.
pub fn erase_spans(u: &mut SourceUnit) {
    let z = Span::default();
    for i in &mut u.imports {
        i.span = z;
    }
    for d in &mut u.decls {
        match d {
            Decl::Opaque(o) => {
                o.name.span = z;
                o.params.iter_mut().for_each(|p| p.name.span = z);
            }
            Decl::Operation(o) => {
                o.name.span = z;
                o.params.iter_mut().for_each(|p| p.name.span = z);
                erase_block(&mut o.body);
            }
        }
    }
}

fn erase_block(b: &mut Block) {
    b.span = Span::default();
    b.stmts.iter_mut().for_each(erase_stmt);
}

fn erase_stmt(s: &mut Stmt) {
    s.span = Span::default();
    match &mut s.kind {
        StmtKind::VarDecl { vars, .. } => {
            for v in vars {
                v.name.span = Span::default();
                if let Some(e) = &mut v.init {
                    erase_expr(e);
                }
            }
        }
        StmtKind::Assign { target, value, .. } => {
            erase_expr(target);
            erase_expr(value);
        }
        StmtKind::Expr(e) | StmtKind::Return(Some(e)) => erase_expr(e),
        StmtKind::If { cond, then_branch, else_branch } => {
            erase_expr(cond);
            erase_block(then_branch);
            match else_branch {
                Some(ElseBranch::Block(b)) => erase_block(b),
                Some(ElseBranch::If(s)) => erase_stmt(s),
                None => {}
            }
        }
        StmtKind::While { cond, body } => {
            erase_expr(cond);
            erase_block(body);
        }
        StmtKind::Using { bindings, body } => {
            for b in bindings {
                b.name.span = Span::default();
                if let Some(c) = &mut b.count {
                    erase_expr(c);
                }
            }
            erase_block(body);
        }
        StmtKind::Block(b) => erase_block(b),
        StmtKind::Break | StmtKind::Continue | StmtKind::Return(None) => {}
    }
}

fn erase_expr(e: &mut Expr) {
    e.span = Span::default();
    match &mut e.kind {
        ExprKind::Unary(_, a) | ExprKind::Field(a, _) => {
            erase_expr(a);
            if let ExprKind::Field(_, f) = &mut e.kind {
                f.span = Span::default();
            }
        }
        ExprKind::Binary(_, a, b) | ExprKind::Index(a, b) => {
            erase_expr(a);
            erase_expr(b);
        }
        ExprKind::Call { modifiers, callee, args, timing } => {
            for m in modifiers {
                if let Modifier::Control(qs) = m {
                    qs.iter_mut().for_each(erase_expr);
                }
            }
            erase_expr(callee);
            args.iter_mut().for_each(erase_expr);
            if let Some(t) = timing {
                for c in &mut t.constraints {
                    c.span = Span::default();
                    erase_expr(&mut c.timer);
                    erase_expr(&mut c.value);
                }
                t.resets.iter_mut().for_each(|r| r.span = Span::default());
            }
        }
        ExprKind::Array(es) | ExprKind::Tuple(es) => es.iter_mut().for_each(erase_expr),
        ExprKind::Duration(n) => n.span = Span::default(),
        ExprKind::Int(_) | ExprKind::Double(_) | ExprKind::Bool(_) | ExprKind::Time(..) | ExprKind::Var(_) => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{lexer::tokenize, parser::parse_unit};

    fn roundtrip(src: &str) {
        let mut a = parse_unit(&tokenize(src, 0).unwrap(), 0, "t").unwrap();
        let text = print_unit(&a);
        let mut b =
            parse_unit(&tokenize(&text, 0).unwrap(), 0, "t").unwrap_or_else(|e| panic!("reparse failed: {e}\n{text}"));
        erase_spans(&mut a);
        erase_spans(&mut b);
        assert_eq!(a, b, "printed:\n{text}");
    }

    #[test]
    fn doubles_keep_a_dot() {
        assert_eq!(fmt_double(1.0), "1.0");
        assert_eq!(fmt_double(1e-7), "1.0e-7");
        assert_eq!(fmt_double(0.625), "0.625");
    }

    #[test]
    fn expressions_roundtrip() {
        roundtrip(
            "package p; import ops.*;\noperation f(a: int[], b: bool): (int, double) {\n\
             int x = -(1 + 2) * 3 - -4, y = a[0] % 2; double d = 1.0e-9;\n\
             if (!(x < y) || b && a.length == 3) { x += 1; } else if (b) { x = 2; } else { }\n\
             while (x > 0) { x -= 1; if (x == 3) { break; } continue; }\n\
             return ((x - (y - 1)), d / 2.0); }",
        );
    }

    #[test]
    fn quantum_forms_roundtrip() {
        roundtrip(
            "opaque X(q: qubit, theta: double): unit;\n\
             operation g(q: qubit, c: qubit[], op: (qubit, int)->unit): bool {\n\
             timer tmr; time t = 0.5us;\n\
             X(q, PI / 2) !{tmr};\n X(q, PI) @{tmr == (3 + 1) * 10ns && tmr >= t} !{tmr};\n\
             control(c[0], c[1]) invert op(q, 2);\n using(a: qubit, bs: qubit[2]) { X(a, 0.0); }\n\
             return measure(q) @{tmr == duration(X)}; }",
        );
    }
}
