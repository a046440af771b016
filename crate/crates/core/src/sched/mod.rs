//! Timing scheduler: assigns every quantum operation of a residual program
//! a start cycle (1 cycle = 1 ns) relative to its block's entry.
//!
//! Block time line: the quantum section (operations at their start cycles),
//! a barrier at the end of the last operation, the classical section, any
//! join padding, then the terminator. Timers carry known values across a
//! block boundary only when every incoming path agrees on them; joins are
//! padded with waits when that makes paths agree.

mod solver;
mod verify;

use std::collections::BTreeSet;
use std::fmt::Write;

use thiserror::Error;

pub use solver::{solve, timer_name, BlockSystem, EntryTimers, Event, Reason, SolveError};
pub use verify::{verify_schedule, Violation};

use crate::ir::*;
use crate::platform::PlatformConfig;

/// Time the non-quantum parts of a block take, supplied by the code
/// generator so the schedule matches the emitted program.
pub trait CostModel {
    /// Classical instructions between the barrier and the terminator.
    fn classical_ns(&self, p: &Proc, b: BlockId) -> i64;
    /// Terminator instructions executed on the way to successor `k`.
    fn edge_ns(&self, p: &Proc, b: BlockId, k: usize) -> i64;
}

/// Classical code is free.
pub struct ZeroCost;

impl CostModel for ZeroCost {
    fn classical_ns(&self, _: &Proc, _: BlockId) -> i64 {
        0
    }
    fn edge_ns(&self, _: &Proc, _: BlockId, _: usize) -> i64 {
        0
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SchedError {
    #[error("scheduling needs a single call-free procedure: {0}")]
    IllFormed(String),
    #[error("block b{block}: `{op}` uses {what} that is only known at run time")]
    Dynamic { block: BlockId, op: String, what: &'static str },
    #[error("unknown operation `{0}`")]
    UnknownOp(String),
    #[error(
        "block b{block}: `{op}` reads {timer}, whose value is unknown here (never reset on some path, reset in a loop, or paths of different length)"
    )]
    Synchronization { block: BlockId, op: String, timer: String },
    #[error("block b{block}: timing constraints cannot be met: {first} conflicts with {second}")]
    Infeasible { block: BlockId, first: String, second: String, cycle: Vec<String> },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BlockTiming {
    /// Known timer values at entry; other timers are unknown.
    pub entry: EntryTimers,
    /// Start cycle of each quantum operation or timer reset, by instruction.
    pub starts: Vec<Option<i64>>,
    pub durations: Vec<Option<i64>>,
    pub quantum_end: i64,
    pub classical_ns: i64,
    /// Wait inserted before the terminator to equalize paths into a join.
    pub pad: i64,
    /// Terminator time per successor.
    pub edge_ns: Vec<i64>,
}

impl BlockTiming {
    /// Time from block entry to the entry of successor `k`.
    pub fn exit_ns(&self, k: usize) -> i64 {
        self.quantum_end + self.classical_ns + self.pad + self.edge_ns[k]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimedIR {
    pub ir: KernelIR,
    pub blocks: Vec<BlockTiming>,
}

impl TimedIR {
    pub fn proc(&self) -> &Proc {
        self.ir.main_proc()
    }

    /// Value of `timer` when control leaves block `b` towards successor `k`.
    pub fn exit_timer(&self, b: BlockId, k: usize, timer: u32) -> Option<i64> {
        let bt = &self.blocks[b as usize];
        let blk = self.proc().block(b);
        let exit = bt.exit_ns(k);
        let last_reset = blk.insts.iter().enumerate().rev().find(|(_, i)| resets_of(i).contains(&timer));
        match last_reset {
            Some((i, _)) => Some(exit - bt.starts[i]?),
            None => bt.entry.get(&timer).map(|v| v + exit),
        }
    }
}

pub(crate) fn const_timer(o: &Operand) -> Option<u32> {
    match o {
        Operand::Const(Value::Timer(t)) => Some(*t),
        _ => None,
    }
}

fn resets_of(inst: &Inst) -> Vec<u32> {
    match inst {
        Inst::QOp(q) => q.timing.resets.iter().filter_map(const_timer).collect(),
        Inst::TimerReset { timer } => const_timer(timer).into_iter().collect(),
        _ => vec![],
    }
}

pub(crate) fn qop_qubits(q: &QOp) -> Option<(Vec<u32>, Vec<u32>)> {
    let mut ts = Vec::new();
    for o in &q.qubits {
        ts.extend(o.as_const()?.qubits()?);
    }
    let mut cs = Vec::new();
    for o in &q.controls {
        cs.extend(o.as_const()?.qubits()?);
    }
    Some((ts, cs))
}

pub(crate) fn qop_label(q: &QOp) -> String {
    match qop_qubits(q) {
        Some((ts, cs)) => {
            let qs: Vec<String> = ts.iter().chain(&cs).map(|q| format!("q{q}")).collect();
            format!("{} {}", q.name, qs.join(","))
        }
        None => q.name.clone(),
    }
}

/// The events of a block with the instruction index each came from.
pub(crate) fn block_events(
    p: &Proc,
    b: BlockId,
    config: &PlatformConfig,
) -> Result<(Vec<Event>, Vec<usize>), SchedError> {
    let mut events = Vec::new();
    let mut index = Vec::new();
    for (i, inst) in p.block(b).insts.iter().enumerate() {
        match inst {
            Inst::QOp(q) => {
                let label = qop_label(q);
                let dynamic = |what| SchedError::Dynamic { block: b, op: label.clone(), what };
                let def = config.op(&q.name).ok_or_else(|| SchedError::UnknownOp(q.name.clone()))?;
                let (ts, cs) = qop_qubits(q).ok_or_else(|| dynamic("a qubit"))?;
                let mut reads = Vec::new();
                for (t, cmp, v) in &q.timing.constraints {
                    let t = const_timer(t).ok_or_else(|| dynamic("a timer"))?;
                    let ns = match v {
                        Operand::Const(Value::Time(ns)) => *ns,
                        _ => return Err(dynamic("a time value")),
                    };
                    reads.push((t, *cmp, ns));
                }
                let mut resets = Vec::new();
                for r in &q.timing.resets {
                    resets.push(const_timer(r).ok_or_else(|| dynamic("a timer"))?);
                }
                events.push(Event {
                    label,
                    duration: def.duration_ns(),
                    qubits: ts.into_iter().chain(cs).collect(),
                    random: matches!(q.kind, QKind::Measure | QKind::Reset),
                    reads,
                    resets,
                });
                index.push(i);
            }
            Inst::TimerReset { timer } => {
                let t = const_timer(timer).ok_or_else(|| SchedError::Dynamic {
                    block: b,
                    op: "timer reset".into(),
                    what: "a timer",
                })?;
                let mut e = Event::new(format!("reset {}", timer_name(t)), 0, vec![]);
                e.resets = vec![t];
                events.push(e);
                index.push(i);
            }
            Inst::Compute { .. } | Inst::AllocPhys(_) | Inst::FreePhys(_) => {}
            Inst::Alloc { .. } | Inst::Free { .. } => {
                return Err(SchedError::IllFormed(format!("block b{b} still allocates qubits dynamically")))
            }
        }
    }
    Ok((events, index))
}

/// Timers read before being reset on some path from each block's entry.
fn timer_liveness(p: &Proc, events: &[Vec<Event>]) -> Vec<BTreeSet<u32>> {
    let n = p.blocks.len();
    let mut gen = vec![BTreeSet::new(); n];
    let mut kill = vec![BTreeSet::new(); n];
    for b in 0..n {
        for e in &events[b] {
            for (t, _, _) in &e.reads {
                if !kill[b].contains(t) {
                    gen[b].insert(*t);
                }
            }
            kill[b].extend(e.resets.iter().copied());
        }
    }
    let mut live = vec![BTreeSet::new(); n];
    let order = p.rpo();
    let mut changed = true;
    while changed {
        changed = false;
        for &b in order.iter().rev() {
            let bi = b as usize;
            let mut inn = gen[bi].clone();
            for s in p.block(b).term.successors() {
                for t in &live[s as usize] {
                    if !kill[bi].contains(t) {
                        inn.insert(*t);
                    }
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

fn infeasible(block: BlockId, cycle: &[Reason], events: &[Event]) -> SchedError {
    let texts: Vec<String> = cycle.iter().map(|r| r.describe(events)).collect();
    let first = cycle.iter().position(|r| matches!(r, Reason::Timing { .. })).unwrap_or(0);
    let second = (0..texts.len()).find(|&i| i != first && texts[i] != texts[first]).unwrap_or(first);
    SchedError::Infeasible {
        block,
        first: texts.get(first).cloned().unwrap_or_default(),
        second: texts.get(second).cloned().unwrap_or_default(),
        cycle: texts,
    }
}

/// Schedules the main procedure of a residual program.
pub fn schedule(ir: &KernelIR, config: &PlatformConfig, cost: &dyn CostModel) -> Result<TimedIR, SchedError> {
    let p = ir.main_proc();
    if p.blocks.iter().any(|b| matches!(b.term, Terminator::Call { .. })) {
        return Err(SchedError::IllFormed("calls remain".into()));
    }
    let n = p.blocks.len();
    let mut events = vec![Vec::new(); n];
    let mut index = vec![Vec::new(); n];
    for b in 0..n {
        let (e, i) = block_events(p, b as BlockId, config)?;
        events[b] = e;
        index[b] = i;
    }
    let live = timer_liveness(p, &events);
    let rpo_index = p.rpo_index();
    let preds = p.predecessors();
    let mut blocks = vec![BlockTiming::default(); n];
    for b in p.rpo() {
        let bi = b as usize;
        let blk = p.block(b);
        let incoming: Vec<(BlockId, usize)> = preds[bi]
            .iter()
            .copied()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .flat_map(|q| {
                p.block(q)
                    .term
                    .successors()
                    .into_iter()
                    .enumerate()
                    .filter(move |(_, s)| *s == b)
                    .map(move |(k, _)| (q, k))
            })
            .collect();
        let loop_header = incoming.iter().any(|(q, _)| rpo_index[*q as usize] >= rpo_index[bi]);
        let entry = if b == p.entry || loop_header {
            EntryTimers::new()
        } else {
            join_entry(p, &live[bi], &incoming, &mut blocks, &events, &index)
        };
        let sys = BlockSystem { events: events[bi].clone(), entry };
        let starts = solve(&sys).map_err(|e| match e {
            SolveError::Unsynchronized { event, timer } => {
                SchedError::Synchronization { block: b, op: sys.events[event].label.clone(), timer: timer_name(timer) }
            }
            SolveError::Infeasible(cycle) => infeasible(b, &cycle, &sys.events),
        })?;
        let bt = &mut blocks[bi];
        bt.entry = sys.entry;
        bt.starts = vec![None; blk.insts.len()];
        bt.durations = vec![None; blk.insts.len()];
        for ((s, e), &i) in starts.iter().zip(&sys.events).zip(&index[bi]) {
            bt.starts[i] = Some(*s);
            bt.durations[i] = Some(e.duration);
        }
        bt.quantum_end = starts.iter().zip(&sys.events).map(|(s, e)| s + e.duration).max().unwrap_or(0);
        bt.classical_ns = cost.classical_ns(p, b);
        bt.edge_ns = (0..blk.term.successors().len()).map(|k| cost.edge_ns(p, b, k)).collect();
    }
    Ok(TimedIR { ir: ir.clone(), blocks })
}

fn exit_value(bt: &BlockTiming, events: &[Event], index: &[usize], k: usize, t: u32) -> Option<i64> {
    let exit = bt.exit_ns(k);
    match events.iter().zip(index).rev().find(|(e, _)| e.resets.contains(&t)) {
        Some((_, &i)) => Some(exit - bt.starts[i]?),
        None => bt.entry.get(&t).map(|v| v + exit),
    }
}

/// Entry timer values of a join, padding jump predecessors where that
/// makes the incoming paths agree.
fn join_entry(
    p: &Proc,
    live: &BTreeSet<u32>,
    incoming: &[(BlockId, usize)],
    blocks: &mut [BlockTiming],
    events: &[Vec<Event>],
    index: &[Vec<usize>],
) -> EntryTimers {
    let mut entry = EntryTimers::new();
    let mut deltas: Option<Vec<i64>> = None;
    for &t in live {
        let vals: Option<Vec<i64>> = incoming
            .iter()
            .map(|&(q, k)| exit_value(&blocks[q as usize], &events[q as usize], &index[q as usize], k, t))
            .collect();
        let Some(vals) = vals else { continue };
        let Some(&target) = vals.iter().max() else { continue };
        let d: Vec<i64> = vals.iter().map(|v| target - v).collect();
        let paddable = incoming
            .iter()
            .zip(&d)
            .all(|(&(q, _), &delta)| delta == 0 || matches!(p.block(q).term, Terminator::Jump { .. }));
        if !paddable {
            continue;
        }
        match &deltas {
            None => {
                deltas = Some(d);
                entry.insert(t, target);
            }
            Some(prev) if *prev == d => {
                entry.insert(t, target);
            }
            Some(_) => {}
        }
    }
    if let Some(d) = deltas {
        for (&(q, _), delta) in incoming.iter().zip(d) {
            blocks[q as usize].pad += delta;
        }
    }
    entry
}

/// `cycle op qubits` lines, one block at a time.
pub fn dump_schedule(timed: &TimedIR) -> String {
    let p = timed.proc();
    let mut out = String::new();
    for (b, blk) in p.blocks.iter().enumerate() {
        let bt = &timed.blocks[b];
        let entry: Vec<String> = bt.entry.iter().map(|(t, v)| format!("{}={v}ns", timer_name(*t))).collect();
        writeln!(
            out,
            "# b{b} end={} classical={} pad={} timers[{}]",
            bt.quantum_end,
            bt.classical_ns,
            bt.pad,
            entry.join(" ")
        )
        .unwrap();
        let mut rows: Vec<(i64, usize, String)> = Vec::new();
        for (i, inst) in blk.insts.iter().enumerate() {
            if let (Inst::QOp(q), Some(s)) = (inst, bt.starts.get(i).copied().flatten()) {
                let (ts, cs) = qop_qubits(q).unwrap_or_default();
                let qs: Vec<String> = ts.iter().chain(&cs).map(|q| format!("q{q}")).collect();
                rows.push((s, i, format!("{s} {} {}", q.name, qs.join(","))));
            }
        }
        rows.sort();
        for (_, _, line) in rows {
            writeln!(out, "{line}").unwrap();
        }
    }
    out
}
