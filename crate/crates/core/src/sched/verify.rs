//! Independent replay of a schedule: qubit occupancy, random-event order,
//! timer trajectories and agreement of timer values across block edges.

use std::collections::BTreeMap;
use std::fmt;

use super::{block_events, timer_name, TimedIR};
use crate::frontend::ast::TimingCmp;
use crate::ir::BlockId;
use crate::platform::PlatformConfig;

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Extraction(String),
    MissingStart { block: BlockId, op: String },
    Negative { block: BlockId, op: String, start: i64 },
    QubitOverlap { block: BlockId, op: String, qubit: u32, start: i64, busy_until: i64 },
    RandomOrder { block: BlockId, op: String },
    TimerOrder { block: BlockId, op: String, timer: u32 },
    UnknownTimer { block: BlockId, op: String, timer: u32 },
    Constraint { block: BlockId, op: String, timer: u32, cmp: TimingCmp, ns: i64, actual: i64, start: i64 },
    QuantumEnd { block: BlockId, end: i64, needed: i64 },
    EdgeMismatch { from: BlockId, to: BlockId, timer: u32, expected: i64, actual: Option<i64> },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Extraction(m) => write!(f, "{m}"),
            Violation::MissingStart { block, op } => write!(f, "b{block}: `{op}` has no start cycle"),
            Violation::Negative { block, op, start } => write!(f, "b{block}: `{op}` starts at {start}"),
            Violation::QubitOverlap { block, op, qubit, start, busy_until } => {
                write!(f, "b{block}: qubit-overlap: `{op}` starts at {start} but q{qubit} is busy until {busy_until}")
            }
            Violation::RandomOrder { block, op } => {
                write!(f, "b{block}: `{op}` starts before an earlier measurement or reset")
            }
            Violation::TimerOrder { block, op, timer } => {
                write!(f, "b{block}: `{op}` starts before an earlier use of {}", timer_name(*timer))
            }
            Violation::UnknownTimer { block, op, timer } => {
                write!(f, "b{block}: `{op}` reads {} with no known value", timer_name(*timer))
            }
            Violation::Constraint { block, op, timer, cmp, ns, actual, start } => write!(
                f,
                "b{block}: `{op}` needs {} {} {ns}ns but reads {actual}ns at cycle {start}",
                timer_name(*timer),
                cmp.as_str()
            ),
            Violation::QuantumEnd { block, end, needed } => {
                write!(f, "b{block}: quantum section ends at {end} but operations run until {needed}")
            }
            Violation::EdgeMismatch { from, to, timer, expected, actual } => write!(
                f,
                "edge b{from} -> b{to}: {} should read {expected}ns, reads {}",
                timer_name(*timer),
                actual.map(|a| format!("{a}ns")).unwrap_or_else(|| "unknown".into())
            ),
        }
    }
}

fn holds(cmp: TimingCmp, actual: i64, ns: i64) -> bool {
    match cmp {
        TimingCmp::Eq => actual == ns,
        TimingCmp::Gt => actual > ns,
        TimingCmp::Ge => actual >= ns,
    }
}

pub fn verify_schedule(timed: &TimedIR, config: &PlatformConfig) -> Result<(), Violation> {
    let p = timed.proc();
    let reachable = p.rpo();
    for &b in &reachable {
        let bt = &timed.blocks[b as usize];
        let (events, index) = block_events(p, b, config).map_err(|e| Violation::Extraction(e.to_string()))?;
        let mut busy: BTreeMap<u32, i64> = BTreeMap::new();
        let mut last_random = i64::MIN;
        let mut last_touch: BTreeMap<u32, i64> = BTreeMap::new();
        // Timer value at cycle s is s - origin.
        let mut origin: BTreeMap<u32, i64> = bt.entry.iter().map(|(t, v)| (*t, -v)).collect();
        let mut needed = 0;
        for (e, &i) in events.iter().zip(&index) {
            let op = e.label.clone();
            let s = bt.starts.get(i).copied().flatten().ok_or(Violation::MissingStart { block: b, op: op.clone() })?;
            if s < 0 {
                return Err(Violation::Negative { block: b, op, start: s });
            }
            for &q in &e.qubits {
                let until = busy.get(&q).copied().unwrap_or(0);
                if s < until {
                    return Err(Violation::QubitOverlap { block: b, op, qubit: q, start: s, busy_until: until });
                }
            }
            if e.random {
                if s < last_random {
                    return Err(Violation::RandomOrder { block: b, op });
                }
                last_random = s;
            }
            for t in e.reads.iter().map(|r| r.0).chain(e.resets.iter().copied()) {
                if s < last_touch.get(&t).copied().unwrap_or(i64::MIN) {
                    return Err(Violation::TimerOrder { block: b, op, timer: t });
                }
            }
            for &(t, cmp, ns) in &e.reads {
                let o = *origin.get(&t).ok_or(Violation::UnknownTimer { block: b, op: op.clone(), timer: t })?;
                let actual = s - o;
                if !holds(cmp, actual, ns) {
                    return Err(Violation::Constraint { block: b, op, timer: t, cmp, ns, actual, start: s });
                }
                last_touch.insert(t, s);
            }
            for &t in &e.resets {
                origin.insert(t, s);
                last_touch.insert(t, s);
            }
            for &q in &e.qubits {
                busy.insert(q, s + e.duration);
            }
            needed = needed.max(s + e.duration);
        }
        if bt.quantum_end < needed {
            return Err(Violation::QuantumEnd { block: b, end: bt.quantum_end, needed });
        }
    }
    let preds = p.predecessors();
    for &b in &reachable {
        let bt = &timed.blocks[b as usize];
        for (&t, &v) in &bt.entry {
            for &q in &preds[b as usize] {
                for (k, s) in p.block(q).term.successors().into_iter().enumerate() {
                    if s != b {
                        continue;
                    }
                    let actual = timed.exit_timer(q, k, t);
                    if actual != Some(v) {
                        return Err(Violation::EdgeMismatch { from: q, to: b, timer: t, expected: v, actual });
                    }
                }
            }
        }
    }
    Ok(())
}
