//! Exhaustive scheduling oracle over start times in `0..64`.
//!
//! Semantics checked directly on start times: ops on a shared qubit do not
//! overlap and keep program order; measurements/resets keep program order;
//! a bare timer reset follows the op before it; every timer is touched in
//! program order; a timer read sees `start − start of the latest earlier
//! reset`, or the entry value plus `start` when the block has not reset it.

use quingo::frontend::ast::TimingCmp;
use quingo::sched::{BlockSystem, Event};
use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Unsynchronized {
        event: usize,
        timer: u32,
    },
    Infeasible,
    /// Least start of every event over all solutions within the horizon.
    Feasible(Vec<i64>),
}

fn touches(e: &Event, t: u32) -> bool {
    e.resets.contains(&t) || e.reads.iter().any(|r| r.0 == t)
}

/// Whether event `i` at `s[i]` is consistent with every earlier event.
pub fn consistent(sys: &BlockSystem, s: &[i64], i: usize) -> bool {
    let e = &sys.events[i];
    for j in 0..i {
        let p = &sys.events[j];
        if p.qubits.iter().any(|q| e.qubits.contains(q)) && s[i] < s[j] + p.duration {
            return false;
        }
        if p.random && e.random && s[i] < s[j] {
            return false;
        }
        if (0..4).any(|t| touches(p, t) && touches(e, t)) && s[i] < s[j] {
            return false;
        }
    }
    if e.qubits.is_empty() && i > 0 && s[i] < s[i - 1] {
        return false;
    }
    for &(t, cmp, ns) in &e.reads {
        let value = match (0..i).rev().find(|&j| sys.events[j].resets.contains(&t)) {
            Some(j) => s[i] - s[j],
            None => sys.entry[&t] + s[i],
        };
        let ok = match cmp {
            TimingCmp::Eq => value == ns,
            TimingCmp::Ge => value >= ns,
            TimingCmp::Gt => value > ns,
        };
        if !ok {
            return false;
        }
    }
    true
}

/// `s[b] - s[a]` compared against `k`, or a plain `s[b] >= s[a] + k`.
#[derive(Debug, Clone, Copy)]
struct Link {
    a: usize,
    b: usize,
    cmp: TimingCmp,
    k: i64,
}

impl Link {
    fn holds(&self, va: i64, vb: i64) -> bool {
        let d = vb - va;
        match self.cmp {
            TimingCmp::Eq => d == self.k,
            TimingCmp::Ge => d >= self.k,
            TimingCmp::Gt => d > self.k,
        }
    }
}

/// Start times are searched in `0..HORIZON`; domains are bitsets.
pub const HORIZON: i64 = 64;

type Domains = Vec<u64>;

fn links(sys: &BlockSystem) -> (Vec<Link>, Vec<(usize, TimingCmp, i64)>) {
    let ge = |a, b, k| Link { a, b, cmp: TimingCmp::Ge, k };
    let (mut bin, mut unary) = (vec![], vec![]);
    for (i, e) in sys.events.iter().enumerate() {
        for j in 0..i {
            let p = &sys.events[j];
            if p.qubits.iter().any(|q| e.qubits.contains(q)) {
                bin.push(ge(j, i, p.duration));
            }
            if (p.random && e.random) || (0..4).any(|t| touches(p, t) && touches(e, t)) {
                bin.push(ge(j, i, 0));
            }
        }
        if e.qubits.is_empty() && i > 0 {
            bin.push(ge(i - 1, i, 0));
        }
        for &(t, cmp, ns) in &e.reads {
            match (0..i).rev().find(|&j| sys.events[j].resets.contains(&t)) {
                Some(j) => bin.push(Link { a: j, b: i, cmp, k: ns }),
                None => unary.push((i, cmp, ns - sys.entry[&t])),
            }
        }
    }
    (bin, unary)
}

fn values(d: u64) -> impl Iterator<Item = i64> {
    (0..64).filter(move |v| d >> v & 1 == 1)
}

/// Removes unsupported values until every link is arc consistent.
fn propagate(links: &[Link], dom: &mut Domains) -> bool {
    loop {
        let mut changed = false;
        for l in links {
            let (da, db) = (dom[l.a], dom[l.b]);
            let na = values(da).filter(|&va| values(db).any(|vb| l.holds(va, vb))).fold(0, |m, v| m | 1 << v);
            let nb = values(db).filter(|&vb| values(na).any(|va| l.holds(va, vb))).fold(0, |m, v| m | 1 << v);
            if na == 0 || nb == 0 {
                return false;
            }
            changed |= na != da || nb != db;
            dom[l.a] = na;
            dom[l.b] = nb;
        }
        if !changed {
            return true;
        }
    }
}

/// Any full assignment within `dom`, by branching on the smallest value.
fn solution(links: &[Link], mut dom: Domains) -> Option<Vec<i64>> {
    if dom.contains(&0) || !propagate(links, &mut dom) {
        return None;
    }
    let Some(i) = dom.iter().position(|d| d.count_ones() > 1) else {
        return Some(dom.iter().map(|d| d.trailing_zeros() as i64).collect());
    };
    values(dom[i]).find_map(|v| {
        let mut d = dom.clone();
        d[i] = 1 << v;
        solution(links, d)
    })
}

/// Verdict over start times in `0..64`.
pub fn oracle(sys: &BlockSystem) -> Verdict {
    for (i, e) in sys.events.iter().enumerate() {
        for &(t, _, _) in &e.reads {
            let reset_before = sys.events[..i].iter().any(|p| p.resets.contains(&t));
            if !reset_before && !sys.entry.contains_key(&t) {
                return Verdict::Unsynchronized { event: i, timer: t };
            }
        }
    }
    let (bin, unary) = links(sys);
    let mut dom: Domains = vec![u64::MAX; sys.events.len()];
    for (i, cmp, k) in unary {
        dom[i] = values(dom[i]).filter(|&v| Link { a: 0, b: 0, cmp, k }.holds(0, v)).fold(0, |m, v| m | 1 << v);
    }
    if solution(&bin, dom.clone()).is_none() {
        return Verdict::Infeasible;
    }
    // The least value of each event that extends to a full solution.
    let least = (0..dom.len())
        .map(|i| {
            values(dom[i])
                .find(|&v| {
                    let mut d = dom.clone();
                    d[i] = 1 << v;
                    solution(&bin, d).is_some()
                })
                .expect("some solution exists")
        })
        .collect();
    Verdict::Feasible(least)
}

/// A random block of up to `max_ops` events over three qubits and two timers.
pub fn random_system(rng: &mut impl Rng, max_ops: usize) -> BlockSystem {
    let n = rng.gen_range(1..=max_ops);
    let mut events = Vec::new();
    for i in 0..n {
        let qubits = if rng.gen_bool(0.1) {
            vec![]
        } else if rng.gen_bool(0.2) {
            let a = rng.gen_range(0..3);
            vec![a, (a + rng.gen_range(1..3)) % 3]
        } else {
            vec![rng.gen_range(0..3)]
        };
        let mut e = Event::new(format!("op{i}"), rng.gen_range(1..=16), qubits.clone());
        e.random = !qubits.is_empty() && rng.gen_bool(0.25);
        if qubits.is_empty() || rng.gen_bool(0.35) {
            e.resets.push(rng.gen_range(0..2));
        }
        if !qubits.is_empty() && rng.gen_bool(0.45) {
            let cmp = [TimingCmp::Eq, TimingCmp::Ge, TimingCmp::Gt][rng.gen_range(0..3)];
            e.reads.push((rng.gen_range(0..2), cmp, rng.gen_range(0..40)));
        }
        events.push(e);
    }
    let mut entry = quingo::sched::EntryTimers::new();
    for t in 0..2 {
        if rng.gen_bool(0.5) {
            entry.insert(t, rng.gen_range(0..30));
        }
    }
    BlockSystem { events, entry }
}
