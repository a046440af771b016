//! Concrete reference interpreter for kernel IR. It runs lowered and
//! residual programs alike against the shared state-vector simulator, so
//! outcomes can be compared with the compiled pipeline draw for draw.

use thiserror::Error;

use crate::ir::*;
use crate::platform::{semantics_unitary, PlatformConfig, Semantics};
use crate::qvm::state::{QuantumState, StateError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceKind {
    Measure,
    Init,
}

/// One random event: a measurement or a reset, in program order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceEvent {
    pub kind: TraceKind,
    pub qubit: u32,
    pub outcome: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExecOutcome {
    pub value: Value,
    pub trace: Vec<TraceEvent>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InterpError {
    #[error("{0}")]
    Eval(#[from] EvalError),
    #[error("{0}")]
    State(#[from] StateError),
    #[error("step budget of {0} exhausted")]
    StepBudgetExceeded(u64),
    #[error("no free qubit")]
    TooManyQubits,
    #[error("invalid quantum operation: {0}")]
    InvalidQuantumOp(String),
    #[error("ill-formed program: {0}")]
    IllFormed(String),
}

/// Gate name, targets, parameters, controls, inverse.
type Buffered = (String, Vec<u32>, Vec<f64>, Vec<u32>, bool);

struct Interp<'a> {
    ir: &'a KernelIR,
    platform: &'a PlatformConfig,
    state: QuantumState,
    used: Vec<bool>,
    trace: Vec<TraceEvent>,
    buffers: Vec<Vec<Buffered>>,
    steps: u64,
    budget: u64,
}

/// Runs `ir.main` with the register sized to the platform.
pub fn interpret(
    ir: &KernelIR,
    platform: &PlatformConfig,
    seed: u64,
    zero_init: bool,
    budget: u64,
) -> Result<ExecOutcome, InterpError> {
    let state = QuantumState::new(platform.qubit_count, seed, zero_init)?;
    let mut it = Interp {
        ir,
        platform,
        state,
        used: vec![false; platform.qubit_count as usize],
        trace: Vec::new(),
        buffers: Vec::new(),
        steps: 0,
        budget,
    };
    let value = it.call(ir.main, vec![], &[])?;
    Ok(ExecOutcome { value, trace: it.trace })
}

fn ill(msg: impl Into<String>) -> InterpError {
    InterpError::IllFormed(msg.into())
}

impl Interp<'_> {
    fn tick(&mut self) -> Result<(), InterpError> {
        self.steps += 1;
        if self.steps > self.budget {
            Err(InterpError::StepBudgetExceeded(self.budget))
        } else {
            Ok(())
        }
    }

    fn qubits(v: &Value) -> Result<Vec<u32>, InterpError> {
        v.qubits().ok_or_else(|| ill(format!("expected qubits, found {v}")))
    }

    #[allow(clippy::too_many_arguments)]
    fn issue(
        &mut self,
        name: &str,
        args: &[Value],
        controls: Vec<u32>,
        inverse: bool,
    ) -> Result<Option<bool>, InterpError> {
        let def = self.platform.op(name).ok_or_else(|| ill(format!("unknown operation `{name}`")))?;
        let nq = def.num_qubits as usize;
        let mut qs = Vec::new();
        for a in &args[..nq] {
            qs.extend(Self::qubits(a)?);
        }
        let params: Vec<f64> = args[nq..]
            .iter()
            .map(|a| a.as_f64().ok_or_else(|| ill("non-numeric parameter")))
            .collect::<Result<_, _>>()?;
        match &def.semantics {
            Semantics::Measure | Semantics::Reset => {
                if !controls.is_empty() || inverse || !self.buffers.is_empty() {
                    return Err(InterpError::InvalidQuantumOp(format!("`{name}` cannot be modified")));
                }
                let q = qs[0];
                let (kind, outcome) = if def.semantics == Semantics::Measure {
                    (TraceKind::Measure, self.state.measure(q))
                } else {
                    (TraceKind::Init, self.state.reset(q))
                };
                self.trace.push(TraceEvent { kind, qubit: q, outcome });
                Ok((kind == TraceKind::Measure).then_some(outcome))
            }
            Semantics::Pulse(_) => {
                if !controls.is_empty() || inverse || !self.buffers.is_empty() {
                    return Err(InterpError::InvalidQuantumOp(format!("`{name}` cannot be modified")));
                }
                Ok(None)
            }
            _ => {
                match self.buffers.last_mut() {
                    Some(buf) => buf.push((name.to_string(), qs, params, controls, inverse)),
                    None => self.apply_gate(name, &qs, &params, &controls, inverse)?,
                }
                Ok(None)
            }
        }
    }

    fn apply_gate(
        &mut self,
        name: &str,
        qs: &[u32],
        params: &[f64],
        controls: &[u32],
        inverse: bool,
    ) -> Result<(), InterpError> {
        let def = self.platform.op(name).ok_or_else(|| ill(format!("unknown operation `{name}`")))?;
        let u = semantics_unitary(def, params).map_err(|e| InterpError::InvalidQuantumOp(e.to_string()))?;
        let u = if inverse { u.adjoint() } else { u };
        self.state.apply(qs, controls, &u);
        Ok(())
    }

    fn call(&mut self, p: u32, args: Vec<Value>, controls: &[u32]) -> Result<Value, InterpError> {
        let ir = self.ir;
        let proc = &ir.procs[p as usize];
        let mut env = vec![Value::Unit; proc.var_types.len()];
        for (v, a) in proc.params.iter().zip(args) {
            env[*v as usize] = a;
        }
        let eval = |env: &Vec<Value>, o: &Operand| -> Value { eval_operand(env, o) };
        let mut b = proc.entry;
        loop {
            let blk = &proc.blocks[b as usize];
            for inst in &blk.insts {
                self.tick()?;
                match inst {
                    Inst::Compute { dest, op, args } => {
                        let vals: Vec<Value> = args.iter().map(|a| eval(&env, a)).collect();
                        env[*dest as usize] = eval_prim(op, &vals)?;
                    }
                    Inst::QOp(q) => {
                        let mut vals: Vec<Value> = q.qubits.iter().map(|a| eval(&env, a)).collect();
                        vals.extend(q.params.iter().map(|a| eval(&env, a)));
                        let mut ctl = controls.to_vec();
                        for c in &q.controls {
                            ctl.extend(Self::qubits(&eval(&env, c))?);
                        }
                        let r = self.issue(&q.name, &vals, ctl, q.inverse)?;
                        if let (Some(d), Some(r)) = (q.dest, r) {
                            env[d as usize] = Value::Bool(r);
                        }
                    }
                    Inst::TimerReset { .. } => {}
                    Inst::Alloc { dest, count } => {
                        let n = match count.as_ref().map(|c| eval(&env, c)) {
                            None => None,
                            Some(Value::Int(n)) if n >= 0 => Some(n as usize),
                            Some(v) => return Err(ill(format!("bad qubit count {v}"))),
                        };
                        let mut got = Vec::new();
                        for _ in 0..n.unwrap_or(1) {
                            let q = self.used.iter().position(|u| !u).ok_or(InterpError::TooManyQubits)?;
                            self.used[q] = true;
                            got.push(q as u32);
                        }
                        env[*dest as usize] = match n {
                            None => Value::Qubit(got[0]),
                            Some(_) => Value::Array(got.into_iter().map(Value::Qubit).collect()),
                        };
                    }
                    Inst::Free { qubits } => {
                        for q in Self::qubits(&eval(&env, qubits))? {
                            self.used[q as usize] = false;
                        }
                    }
                    Inst::AllocPhys(qs) => {
                        for q in qs {
                            *self.used.get_mut(*q as usize).ok_or(InterpError::TooManyQubits)? = true;
                        }
                    }
                    Inst::FreePhys(qs) => {
                        for q in qs {
                            if let Some(u) = self.used.get_mut(*q as usize) {
                                *u = false;
                            }
                        }
                    }
                }
            }
            self.tick()?;
            match &blk.term {
                Terminator::Jump { target, args } => {
                    let vals: Vec<Value> = args.iter().map(|a| eval(&env, a)).collect();
                    for (p, v) in proc.blocks[*target as usize].params.iter().zip(vals) {
                        env[*p as usize] = v;
                    }
                    b = *target;
                }
                Terminator::Branch { cond, then_to, else_to } => match eval(&env, cond) {
                    Value::Bool(c) => b = if c { *then_to } else { *else_to },
                    v => return Err(ill(format!("branch on {v}"))),
                },
                Terminator::Call { dest, callee, args, modifiers, next, .. } => {
                    let vals: Vec<Value> = args.iter().map(|a| eval(&env, a)).collect();
                    let mut ctl = controls.to_vec();
                    let mut inv = false;
                    for m in modifiers {
                        match m {
                            IrModifier::Control(qs) => {
                                for q in qs {
                                    ctl.extend(Self::qubits(&eval(&env, q))?);
                                }
                            }
                            IrModifier::Invert => inv = !inv,
                        }
                    }
                    let r = match eval(&env, callee) {
                        Value::Op(OpRef::Opaque(name)) => {
                            self.issue(&name, &vals, ctl, inv)?.map(Value::Bool).unwrap_or(Value::Unit)
                        }
                        Value::Op(OpRef::Proc(p)) => {
                            if inv {
                                self.buffers.push(Vec::new());
                            }
                            let r = self.call(p, vals, &ctl)?;
                            if inv {
                                let buf = self.buffers.pop().unwrap();
                                for (name, qs, params, c, i) in buf.into_iter().rev() {
                                    match self.buffers.last_mut() {
                                        Some(outer) => outer.push((name, qs, params, c, !i)),
                                        None => self.apply_gate(&name, &qs, &params, &c, !i)?,
                                    }
                                }
                            }
                            r
                        }
                        v => return Err(ill(format!("call of {v}"))),
                    };
                    if let Some(d) = dest {
                        env[*d as usize] = r;
                    }
                    b = *next;
                }
                Terminator::Return { value } => return Ok(eval(&env, value)),
            }
        }
    }
}

fn eval_operand(env: &[Value], o: &Operand) -> Value {
    match o {
        Operand::Var(v) => env[*v as usize].clone(),
        Operand::Const(c) => c.clone(),
        Operand::Tuple(xs) => Value::Tuple(xs.iter().map(|x| eval_operand(env, x)).collect()),
        Operand::Array(xs) => Value::Array(xs.iter().map(|x| eval_operand(env, x)).collect()),
    }
}
