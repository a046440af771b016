//! Earliest start times for one block as a system of difference
//! constraints, solved by longest paths from a time origin.
//!
//! Every constraint has the form `s_v >= s_u + w`. The longest-path
//! distances are the least solution, so each event starts as early as the
//! whole system allows. A positive cycle means no solution exists.

use std::collections::BTreeMap;
use std::fmt;

use crate::frontend::ast::TimingCmp;

/// A quantum operation or bare timer reset, in program order.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub label: String,
    pub duration: i64,
    pub qubits: Vec<u32>,
    /// Measurements and resets draw random numbers; their order is kept.
    pub random: bool,
    pub reads: Vec<(u32, TimingCmp, i64)>,
    pub resets: Vec<u32>,
}

impl Event {
    pub fn new(label: impl Into<String>, duration: i64, qubits: Vec<u32>) -> Self {
        Event { label: label.into(), duration, qubits, random: false, reads: vec![], resets: vec![] }
    }
}

/// Timer value at block entry. Timers absent from the map are unknown.
pub type EntryTimers = BTreeMap<u32, i64>;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BlockSystem {
    pub events: Vec<Event>,
    pub entry: EntryTimers,
}

/// Why an edge exists; used to explain infeasibility.
#[derive(Debug, Clone, PartialEq)]
pub enum Reason {
    Origin,
    Qubit { before: usize, after: usize, qubit: u32 },
    Random { before: usize, after: usize },
    Sequence { before: usize, after: usize },
    TimerOrder { before: usize, after: usize, timer: u32 },
    Timing { event: usize, timer: u32, cmp: TimingCmp, ns: i64, from_entry: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolveError {
    /// A constraint reads a timer with no known value at this point.
    Unsynchronized { event: usize, timer: u32 },
    /// The cycle of constraints that cannot hold together.
    Infeasible(Vec<Reason>),
}

pub fn timer_name(t: u32) -> String {
    format!("timer{t}")
}

impl Reason {
    pub fn describe(&self, events: &[Event]) -> String {
        let l = |i: &usize| events.get(*i).map(|e| e.label.clone()).unwrap_or_else(|| format!("#{i}"));
        match self {
            Reason::Origin => "block entry".into(),
            Reason::Qubit { before, after, qubit } => {
                format!("`{}` waits for `{}` on q{qubit}", l(after), l(before))
            }
            Reason::Random { before, after } => format!("`{}` follows measurement/reset `{}`", l(after), l(before)),
            Reason::Sequence { before, after } => format!("`{}` follows `{}`", l(after), l(before)),
            Reason::TimerOrder { before, after, timer } => {
                format!("`{}` follows `{}` on {}", l(after), l(before), timer_name(*timer))
            }
            Reason::Timing { event, timer, cmp, ns, .. } => {
                format!("`{}` @{{{} {} {ns}ns}}", l(event), timer_name(*timer), cmp.as_str())
            }
        }
    }
}

impl fmt::Display for SolveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolveError::Unsynchronized { event, timer } => {
                write!(f, "event {event} reads {} which has no known value", timer_name(*timer))
            }
            SolveError::Infeasible(r) => write!(f, "infeasible cycle of {} constraints", r.len()),
        }
    }
}

struct Edge {
    from: usize,
    to: usize,
    w: i64,
    why: Reason,
}

/// Node 0 is the origin, node `i + 1` is event `i`.
fn edges(sys: &BlockSystem) -> Result<Vec<Edge>, SolveError> {
    let mut es = Vec::new();
    let mut add = |from: usize, to: usize, w: i64, why: Reason| es.push(Edge { from, to, w, why });
    let mut last_on_qubit: BTreeMap<u32, usize> = BTreeMap::new();
    let mut last_random: Option<usize> = None;
    let mut last_on_timer: BTreeMap<u32, usize> = BTreeMap::new();
    let mut last_reset: BTreeMap<u32, usize> = BTreeMap::new();
    for (i, e) in sys.events.iter().enumerate() {
        let n = i + 1;
        add(0, n, 0, Reason::Origin);
        for &q in &e.qubits {
            if let Some(&j) = last_on_qubit.get(&q) {
                add(j + 1, n, sys.events[j].duration, Reason::Qubit { before: j, after: i, qubit: q });
            }
        }
        if e.random {
            if let Some(j) = last_random {
                add(j + 1, n, 0, Reason::Random { before: j, after: i });
            }
        }
        if e.qubits.is_empty() && i > 0 {
            add(i, n, 0, Reason::Sequence { before: i - 1, after: i });
        }
        let touched = e.reads.iter().map(|r| r.0).chain(e.resets.iter().copied());
        for t in touched {
            if let Some(&j) = last_on_timer.get(&t) {
                if j != i {
                    add(j + 1, n, 0, Reason::TimerOrder { before: j, after: i, timer: t });
                }
            }
        }
        for &(t, cmp, ns) in &e.reads {
            let lo = if cmp == TimingCmp::Gt { ns + 1 } else { ns };
            let why = |from_entry| Reason::Timing { event: i, timer: t, cmp, ns, from_entry };
            let (src, base) = match last_reset.get(&t) {
                Some(&j) => (j + 1, 0),
                None => match sys.entry.get(&t) {
                    Some(&v) => (0, v),
                    None => return Err(SolveError::Unsynchronized { event: i, timer: t }),
                },
            };
            add(src, n, lo - base, why(src == 0));
            if cmp == TimingCmp::Eq {
                add(n, src, base - ns, why(src == 0));
            }
        }
        for &q in &e.qubits {
            last_on_qubit.insert(q, i);
        }
        if e.random {
            last_random = Some(i);
        }
        for &(t, _, _) in &e.reads {
            last_on_timer.insert(t, i);
        }
        for &t in &e.resets {
            last_on_timer.insert(t, i);
            last_reset.insert(t, i);
        }
    }
    Ok(es)
}

/// Least start times, one per event.
pub fn solve(sys: &BlockSystem) -> Result<Vec<i64>, SolveError> {
    let es = edges(sys)?;
    let n = sys.events.len() + 1;
    let mut dist = vec![i64::MIN; n];
    let mut pred: Vec<Option<usize>> = vec![None; n];
    dist[0] = 0;
    let mut changed_node = None;
    for _ in 0..n {
        changed_node = None;
        for (k, e) in es.iter().enumerate() {
            if dist[e.from] == i64::MIN {
                continue;
            }
            let cand = dist[e.from] + e.w;
            if cand > dist[e.to] {
                dist[e.to] = cand;
                pred[e.to] = Some(k);
                changed_node = Some(e.to);
            }
        }
        if changed_node.is_none() {
            break;
        }
    }
    if let Some(mut v) = changed_node {
        // Walk back far enough to land on the cycle, then collect it.
        for _ in 0..n {
            v = es[pred[v].unwrap()].from;
        }
        let start = v;
        let mut cycle = Vec::new();
        loop {
            let e = &es[pred[v].unwrap()];
            cycle.push(e.why.clone());
            v = e.from;
            if v == start {
                break;
            }
        }
        cycle.reverse();
        return Err(SolveError::Infeasible(cycle));
    }
    Ok(dist[1..].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn op(d: i64, q: u32) -> Event {
        Event::new(format!("op{d}"), d, vec![q])
    }

    #[test]
    fn asap_back_to_back() {
        let sys = BlockSystem { events: vec![op(20, 0), op(40, 0)], entry: EntryTimers::new() };
        assert_eq!(solve(&sys).unwrap(), vec![0, 20]);
    }

    #[test]
    fn parallel_qubits() {
        let sys = BlockSystem { events: vec![op(20, 0), op(40, 1)], entry: EntryTimers::new() };
        assert_eq!(solve(&sys).unwrap(), vec![0, 0]);
    }

    #[test]
    fn equality_against_busy_resetter() {
        let mut a = op(50, 0);
        a.resets = vec![0];
        let mut b = op(20, 0);
        b.reads = vec![(0, TimingCmp::Eq, 10)];
        let sys = BlockSystem { events: vec![a, b], entry: EntryTimers::new() };
        let SolveError::Infeasible(c) = solve(&sys).unwrap_err() else { panic!() };
        assert!(c.iter().any(|r| matches!(r, Reason::Timing { cmp: TimingCmp::Eq, .. })));
        assert!(c.iter().any(|r| matches!(r, Reason::Qubit { .. })));
    }

    #[test]
    fn resetter_moves_later() {
        let mut a = op(20, 0);
        a.resets = vec![0];
        let busy = op(50, 1);
        let mut b = op(20, 1);
        b.reads = vec![(0, TimingCmp::Eq, 10)];
        let sys = BlockSystem { events: vec![a, busy, b], entry: EntryTimers::new() };
        assert_eq!(solve(&sys).unwrap(), vec![40, 0, 50]);
    }

    #[test]
    fn entry_binding() {
        let mut b = op(20, 0);
        b.reads = vec![(0, TimingCmp::Ge, 100)];
        let sys = BlockSystem { events: vec![b.clone()], entry: [(0, 30)].into() };
        assert_eq!(solve(&sys).unwrap(), vec![70]);
        let none = BlockSystem { events: vec![b], entry: EntryTimers::new() };
        assert_eq!(solve(&none).unwrap_err(), SolveError::Unsynchronized { event: 0, timer: 0 });
    }

    #[test]
    fn strict_bound() {
        let mut a = op(20, 0);
        a.resets = vec![0];
        let mut b = op(20, 1);
        b.reads = vec![(0, TimingCmp::Gt, 5)];
        let sys = BlockSystem { events: vec![a, b], entry: EntryTimers::new() };
        assert_eq!(solve(&sys).unwrap(), vec![0, 6]);
    }
}
