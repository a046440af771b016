//! The text instruction set: data types, printing and assembly.
//!
//! One instruction per line, `#` comments, `name:` labels, and header
//! directives `.qubits N`, `.rettype DESC`, `.encoding f32`.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::codec::Descriptor;

pub type Reg = u8;
pub const NUM_REGS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cond {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl Cond {
    pub fn as_str(self) -> &'static str {
        match self {
            Cond::Eq => "eq",
            Cond::Ne => "ne",
            Cond::Lt => "lt",
            Cond::Le => "le",
            Cond::Gt => "gt",
            Cond::Ge => "ge",
        }
    }

    fn parse(s: &str) -> Option<Cond> {
        Some(match s {
            "eq" => Cond::Eq,
            "ne" => Cond::Ne,
            "lt" => Cond::Lt,
            "le" => Cond::Le,
            "gt" => Cond::Gt,
            "ge" => Cond::Ge,
            _ => return None,
        })
    }

    pub fn holds(self, o: std::cmp::Ordering) -> bool {
        use std::cmp::Ordering::*;
        match self {
            Cond::Eq => o == Equal,
            Cond::Ne => o != Equal,
            Cond::Lt => o == Less,
            Cond::Le => o != Greater,
            Cond::Gt => o == Greater,
            Cond::Ge => o != Less,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AluOp {
    Add,
    Sub,
    Mul,
    And,
    Or,
    Xor,
}

impl AluOp {
    pub fn as_str(self) -> &'static str {
        match self {
            AluOp::Add => "add",
            AluOp::Sub => "sub",
            AluOp::Mul => "mul",
            AluOp::And => "and",
            AluOp::Or => "or",
            AluOp::Xor => "xor",
        }
    }

    pub fn apply(self, a: i32, b: i32) -> i32 {
        match self {
            AluOp::Add => a.wrapping_add(b),
            AluOp::Sub => a.wrapping_sub(b),
            AluOp::Mul => a.wrapping_mul(b),
            AluOp::And => a & b,
            AluOp::Or => a | b,
            AluOp::Xor => a ^ b,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Label {
    pub name: String,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Instr {
    Ldi {
        rd: Reg,
        imm: i32,
    },
    Alu {
        op: AluOp,
        rd: Reg,
        ra: Reg,
        rb: Reg,
    },
    Not {
        rd: Reg,
        ra: Reg,
    },
    Cmp {
        ra: Reg,
        rb: Reg,
    },
    Br {
        cond: Cond,
        target: Label,
    },
    Jmp {
        target: Label,
    },
    /// `rd = 1` if the last comparison satisfies `cond`, else 0.
    Set {
        rd: Reg,
        cond: Cond,
    },
    Fmr {
        rd: Reg,
        q: u32,
    },
    Nop,
    Stb {
        ra: Reg,
        addr: u32,
    },
    Stw {
        ra: Reg,
        addr: u32,
    },
    /// `ra` to `addr`, `rb` to `addr + 4`.
    Std {
        ra: Reg,
        rb: Reg,
        addr: u32,
    },
    Halt,
    Qwait {
        n: u32,
    },
    Qop {
        name: String,
        qubits: Vec<u32>,
        params: Vec<f64>,
        inverse: bool,
        controls: Vec<u32>,
    },
    Pulse {
        name: String,
        q: u32,
        text: String,
    },
    Measure {
        q: u32,
    },
    Init {
        q: u32,
    },
}

impl Instr {
    pub fn is_quantum(&self) -> bool {
        matches!(self, Instr::Qop { .. } | Instr::Pulse { .. } | Instr::Measure { .. } | Instr::Init { .. })
    }
}

fn qlist(qs: &[u32]) -> String {
    qs.iter().map(|q| format!("q{q}")).collect::<Vec<_>>().join(",")
}

impl fmt::Display for Instr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instr::Ldi { rd, imm } => write!(f, "ldi r{rd} {imm}"),
            Instr::Alu { op, rd, ra, rb } => write!(f, "{} r{rd} r{ra} r{rb}", op.as_str()),
            Instr::Not { rd, ra } => write!(f, "not r{rd} r{ra}"),
            Instr::Cmp { ra, rb } => write!(f, "cmp r{ra} r{rb}"),
            Instr::Br { cond, target } => write!(f, "br {} {}", cond.as_str(), target.name),
            Instr::Jmp { target } => write!(f, "jmp {}", target.name),
            Instr::Set { rd, cond } => write!(f, "set r{rd} {}", cond.as_str()),
            Instr::Fmr { rd, q } => write!(f, "fmr r{rd} q{q}"),
            Instr::Nop => f.write_str("nop"),
            Instr::Stb { ra, addr } => write!(f, "stb r{ra} {addr}"),
            Instr::Stw { ra, addr } => write!(f, "stw r{ra} {addr}"),
            Instr::Std { ra, rb, addr } => write!(f, "std r{ra} r{rb} {addr}"),
            Instr::Halt => f.write_str("halt"),
            Instr::Qwait { n } => write!(f, "qwait {n}"),
            Instr::Qop { name, qubits, params, inverse, controls } => {
                write!(f, "qop {name} {}", qlist(qubits))?;
                for p in params {
                    write!(f, " {p:?}")?;
                }
                if *inverse {
                    f.write_str(" inv")?;
                }
                if !controls.is_empty() {
                    write!(f, " ctrl {}", qlist(controls))?;
                }
                Ok(())
            }
            Instr::Pulse { name, q, text } => {
                write!(f, "pulse {name} q{q} {}", serde_json::to_string(text).unwrap())
            }
            Instr::Measure { q } => write!(f, "measure q{q}"),
            Instr::Init { q } => write!(f, "init q{q}"),
        }
    }
}

/// An assembled program; execution starts at instruction 0.
#[derive(Debug, Clone, PartialEq)]
pub struct QProgram {
    pub instrs: Vec<Instr>,
    pub labels: BTreeMap<String, usize>,
    pub qubits: u32,
    pub rettype: Descriptor,
    pub f32_doubles: bool,
}

impl QProgram {
    pub fn disassemble(&self) -> String {
        let mut at: BTreeMap<usize, Vec<&str>> = BTreeMap::new();
        for (name, &i) in &self.labels {
            at.entry(i).or_default().push(name);
        }
        let mut out = format!(".qubits {}\n.rettype {}\n", self.qubits, self.rettype);
        if self.f32_doubles {
            out.push_str(".encoding f32\n");
        }
        for i in 0..=self.instrs.len() {
            for name in at.get(&i).into_iter().flatten() {
                out.push_str(name);
                out.push_str(":\n");
            }
            if let Some(ins) = self.instrs.get(i) {
                out.push_str("    ");
                out.push_str(&ins.to_string());
                out.push('\n');
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AsmErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("undefined label `{0}`")]
    UndefinedLabel(String),
    #[error("label `{0}` defined twice")]
    DuplicateLabel(String),
    #[error("immediate `{0}` does not fit in 32 bits")]
    UnencodableImmediate(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct AsmError {
    pub line: usize,
    pub kind: AsmErrorKind,
}

/// Splits a line into tokens; double-quoted strings stay whole.
fn tokens(line: &str) -> Result<Vec<String>, String> {
    let mut out = Vec::new();
    let mut chars = line.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
        } else if c == '#' {
            break;
        } else if c == '"' {
            let mut s = String::from('"');
            chars.next();
            let mut closed = false;
            while let Some(c) = chars.next() {
                s.push(c);
                if c == '\\' {
                    if let Some(n) = chars.next() {
                        s.push(n);
                    }
                } else if c == '"' {
                    closed = true;
                    break;
                }
            }
            if !closed {
                return Err("unterminated string".into());
            }
            out.push(s);
        } else {
            let mut s = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_whitespace() || c == '#' || c == '"' {
                    break;
                }
                s.push(c);
                chars.next();
            }
            out.push(s);
        }
    }
    Ok(out)
}

struct LineParser<'a> {
    toks: &'a [String],
    pos: usize,
}

type PResult<T> = Result<T, AsmErrorKind>;

fn syntax(msg: impl Into<String>) -> AsmErrorKind {
    AsmErrorKind::Syntax(msg.into())
}

impl LineParser<'_> {
    fn next(&mut self, what: &str) -> PResult<&str> {
        let t = self.toks.get(self.pos).ok_or_else(|| syntax(format!("expected {what}")))?;
        self.pos += 1;
        Ok(t)
    }

    fn peek(&self) -> Option<&str> {
        self.toks.get(self.pos).map(|s| s.as_str())
    }

    fn reg(&mut self) -> PResult<Reg> {
        let t = self.next("a register")?;
        t.strip_prefix('r')
            .and_then(|n| n.parse::<usize>().ok())
            .filter(|&n| n < NUM_REGS && !t[1..].starts_with('+'))
            .map(|n| n as Reg)
            .ok_or_else(|| syntax(format!("bad register `{t}`")))
    }

    fn qubit_text(t: &str) -> PResult<u32> {
        t.strip_prefix('q')
            .filter(|n| !n.is_empty() && n.bytes().all(|b| b.is_ascii_digit()))
            .and_then(|n| n.parse().ok())
            .ok_or_else(|| syntax(format!("bad qubit `{t}`")))
    }

    fn qubit(&mut self) -> PResult<u32> {
        let t = self.next("a qubit")?.to_string();
        Self::qubit_text(&t)
    }

    fn qubits(&mut self) -> PResult<Vec<u32>> {
        let t = self.next("qubits")?.to_string();
        t.split(',').map(Self::qubit_text).collect()
    }

    fn imm(&mut self) -> PResult<i32> {
        let t = self.next("an immediate")?;
        let v: i64 = if let Some(h) = t.strip_prefix("0x") {
            i64::from_str_radix(h, 16).map_err(|_| syntax(format!("bad immediate `{t}`")))?
        } else {
            t.parse().map_err(|_| syntax(format!("bad immediate `{t}`")))?
        };
        if t.starts_with("0x") {
            u32::try_from(v).map(|u| u as i32).map_err(|_| AsmErrorKind::UnencodableImmediate(t.into()))
        } else {
            i32::try_from(v).map_err(|_| AsmErrorKind::UnencodableImmediate(t.into()))
        }
    }

    fn unsigned(&mut self, what: &str) -> PResult<u32> {
        let t = self.next(what)?;
        let v = match t.strip_prefix("0x") {
            Some(h) => u64::from_str_radix(h, 16),
            None => t.parse::<u64>(),
        }
        .map_err(|_| syntax(format!("bad {what} `{t}`")))?;
        u32::try_from(v).map_err(|_| AsmErrorKind::UnencodableImmediate(t.into()))
    }

    fn cond(&mut self) -> PResult<Cond> {
        let t = self.next("a condition")?;
        Cond::parse(t).ok_or_else(|| syntax(format!("bad condition `{t}`")))
    }

    fn label(&mut self) -> PResult<Label> {
        let t = self.next("a label")?;
        if !is_ident(t) {
            return Err(syntax(format!("bad label `{t}`")));
        }
        Ok(Label { name: t.to_string(), index: usize::MAX })
    }

    fn end(&self) -> PResult<()> {
        match self.peek() {
            None => Ok(()),
            Some(t) => Err(syntax(format!("unexpected `{t}`"))),
        }
    }

    fn instr(&mut self) -> PResult<Instr> {
        let op = self.next("an instruction")?.to_string();
        let ins = match op.as_str() {
            "ldi" => Instr::Ldi { rd: self.reg()?, imm: self.imm()? },
            "add" | "sub" | "mul" | "and" | "or" | "xor" => {
                let op = match op.as_str() {
                    "add" => AluOp::Add,
                    "sub" => AluOp::Sub,
                    "mul" => AluOp::Mul,
                    "and" => AluOp::And,
                    "or" => AluOp::Or,
                    _ => AluOp::Xor,
                };
                Instr::Alu { op, rd: self.reg()?, ra: self.reg()?, rb: self.reg()? }
            }
            "not" => Instr::Not { rd: self.reg()?, ra: self.reg()? },
            "cmp" => Instr::Cmp { ra: self.reg()?, rb: self.reg()? },
            "br" => Instr::Br { cond: self.cond()?, target: self.label()? },
            "jmp" => Instr::Jmp { target: self.label()? },
            "set" => Instr::Set { rd: self.reg()?, cond: self.cond()? },
            "fmr" => Instr::Fmr { rd: self.reg()?, q: self.qubit()? },
            "nop" => Instr::Nop,
            "stb" => Instr::Stb { ra: self.reg()?, addr: self.unsigned("an address")? },
            "stw" => Instr::Stw { ra: self.reg()?, addr: self.unsigned("an address")? },
            "std" => Instr::Std { ra: self.reg()?, rb: self.reg()?, addr: self.unsigned("an address")? },
            "halt" => Instr::Halt,
            "qwait" => Instr::Qwait { n: self.unsigned("a cycle count")? },
            "measure" => Instr::Measure { q: self.qubit()? },
            "init" => Instr::Init { q: self.qubit()? },
            "pulse" => {
                let name = self.next("an operation name")?.to_string();
                let q = self.qubit()?;
                let t = self.next("pulse text")?;
                let text: String = serde_json::from_str(t).map_err(|_| syntax(format!("bad pulse text `{t}`")))?;
                Instr::Pulse { name, q, text }
            }
            "qop" => {
                let name = self.next("an operation name")?.to_string();
                if !is_ident(&name) {
                    return Err(syntax(format!("bad operation name `{name}`")));
                }
                let qubits = self.qubits()?;
                let mut params = Vec::new();
                while let Some(t) = self.peek() {
                    if t == "inv" || t == "ctrl" {
                        break;
                    }
                    params.push(t.parse::<f64>().map_err(|_| syntax(format!("bad parameter `{t}`")))?);
                    self.pos += 1;
                }
                let inverse = self.peek() == Some("inv");
                if inverse {
                    self.pos += 1;
                }
                let controls = if self.peek() == Some("ctrl") {
                    self.pos += 1;
                    self.qubits()?
                } else {
                    vec![]
                };
                Instr::Qop { name, qubits, params, inverse, controls }
            }
            other => return Err(syntax(format!("unknown instruction `{other}`"))),
        };
        self.end()?;
        Ok(ins)
    }
}

fn is_ident(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && cs.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
}

pub fn assemble(text: &str) -> Result<QProgram, AsmError> {
    let mut instrs = Vec::new();
    let mut lines = Vec::new();
    let mut labels = BTreeMap::new();
    let mut qubits = None;
    let mut rettype = Descriptor::Unit;
    let mut f32_doubles = false;
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let err = |kind| AsmError { line, kind };
        let toks = tokens(raw).map_err(|m| err(syntax(m)))?;
        let mut toks = &toks[..];
        if toks.is_empty() {
            continue;
        }
        if let Some(d) = toks[0].strip_prefix('.') {
            match (d, &toks[1..]) {
                ("qubits", [n]) => qubits = Some(n.parse::<u32>().map_err(|_| err(syntax("bad qubit count")))?),
                ("rettype", rest) if !rest.is_empty() => {
                    rettype = rest.concat().parse().map_err(|_| err(syntax("bad return type")))?
                }
                ("encoding", [e]) if e == "f32" => f32_doubles = true,
                _ => return Err(err(syntax(format!("bad directive `{raw}`")))),
            }
            continue;
        }
        if let Some(name) = toks[0].strip_suffix(':') {
            if !is_ident(name) {
                return Err(err(syntax(format!("bad label `{name}`"))));
            }
            if labels.insert(name.to_string(), instrs.len()).is_some() {
                return Err(err(AsmErrorKind::DuplicateLabel(name.into())));
            }
            toks = &toks[1..];
            if toks.is_empty() {
                continue;
            }
        }
        let mut p = LineParser { toks, pos: 0 };
        instrs.push(p.instr().map_err(err)?);
        lines.push(line);
    }
    for (ins, &line) in instrs.iter_mut().zip(&lines) {
        if let Instr::Br { target, .. } | Instr::Jmp { target } = ins {
            target.index = *labels
                .get(&target.name)
                .ok_or_else(|| AsmError { line, kind: AsmErrorKind::UndefinedLabel(target.name.clone()) })?;
        }
    }
    let max_q = instrs
        .iter()
        .flat_map(|i| match i {
            Instr::Qop { qubits, controls, .. } => qubits.iter().chain(controls).copied().collect(),
            Instr::Pulse { q, .. } | Instr::Measure { q } | Instr::Init { q } | Instr::Fmr { q, .. } => vec![*q],
            _ => vec![],
        })
        .max();
    let qubits = qubits.unwrap_or(max_q.map_or(0, |q| q + 1));
    Ok(QProgram { instrs, labels, qubits, rettype, f32_doubles })
}

/// Whitespace tokens with comments removed, for round-trip comparisons.
pub fn asm_tokens(text: &str) -> Vec<String> {
    text.lines().flat_map(|l| tokens(l).unwrap_or_default()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = ".qubits 2
.rettype (int,bool)
    init q0
    qwait 200
    qop H q0
    qop Rz q1 7.853981633974483 ctrl q0
    qop X q0 3.141592653589793 inv
    qop CZ q0,q1
    pulse Y90p q1 \"gauss sigma=5ns # not a comment\"
    measure q0   # trailing comment
    qwait 300
    fmr r1 q0
    cmp r1 r0
    br ne L1
    jmp L2
L1:
    ldi r30 -7
    ldi r31 -1
    set r2 lt
L2:
    stw r30 0
    stb r1 4
    std r30 r31 8
    halt
";

    #[test]
    fn round_trip() {
        let p = assemble(SAMPLE).unwrap();
        assert_eq!(p.qubits, 2);
        assert_eq!(p.labels["L1"], 13);
        let text = p.disassemble();
        assert_eq!(asm_tokens(&text), asm_tokens(SAMPLE));
        assert_eq!(assemble(&text).unwrap(), p);
        assert!(matches!(&p.instrs[6], Instr::Pulse { text, .. } if text.contains('#')));
        assert_eq!(p.instrs[14], Instr::Ldi { rd: 31, imm: -1 });
    }

    #[test]
    fn undefined_label() {
        let e = assemble("br eq nowhere\n").unwrap_err();
        assert_eq!(e.kind, AsmErrorKind::UndefinedLabel("nowhere".into()));
        assert_eq!(e.line, 1);
    }

    #[test]
    fn errors() {
        assert!(matches!(assemble("ldi r1 4294967296").unwrap_err().kind, AsmErrorKind::UnencodableImmediate(_)));
        assert!(matches!(assemble("ldi r32 1").unwrap_err().kind, AsmErrorKind::Syntax(_)));
        assert!(matches!(assemble("a:\na:\n").unwrap_err().kind, AsmErrorKind::DuplicateLabel(_)));
        assert!(matches!(assemble("frob r1").unwrap_err().kind, AsmErrorKind::Syntax(_)));
        assert!(matches!(assemble("halt r1").unwrap_err().kind, AsmErrorKind::Syntax(_)));
    }
}
