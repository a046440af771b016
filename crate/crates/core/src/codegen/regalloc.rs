//! Register assignment by greedy coloring of the interference graph built
//! from liveness over the selected code. Running out of registers is an
//! error; there is no spilling.

use std::collections::BTreeSet;

use super::select::{VInst, ALLOCATABLE, V};
use super::CodegenError;
use crate::ir::*;

struct Item {
    defs: Vec<VarId>,
    uses: Vec<VarId>,
}

fn vars(vs: impl IntoIterator<Item = V>) -> Vec<VarId> {
    vs.into_iter()
        .filter_map(|v| match v {
            V::Var(x) => Some(x),
            _ => None,
        })
        .collect()
}

fn items(p: &Proc, b: usize, code: &[Vec<VInst>]) -> Vec<Item> {
    let mut out: Vec<Item> = code[b].iter().map(|i| Item { defs: vars(i.def()), uses: vars(i.uses()) }).collect();
    let mut uses = Vec::new();
    match &p.blocks[b].term {
        Terminator::Jump { .. } => {}
        t => t.for_each_use(&mut |v| uses.push(v)),
    }
    out.push(Item { defs: vec![], uses });
    out
}

/// Register of each variable; `code[b]` is the full classical code of block
/// `b` including jump moves.
pub fn allocate(p: &Proc, code: &[Vec<VInst>]) -> Result<Vec<Option<u8>>, CodegenError> {
    let n = p.blocks.len();
    let nv = p.var_types.len();
    let items: Vec<Vec<Item>> = (0..n).map(|b| items(p, b, code)).collect();
    let mut live_in: Vec<BTreeSet<VarId>> = vec![BTreeSet::new(); n];
    let order = p.rpo();
    let live_out = |live_in: &[BTreeSet<VarId>], b: usize| -> BTreeSet<VarId> {
        p.blocks[b].term.successors().iter().flat_map(|s| live_in[*s as usize].iter().copied()).collect()
    };
    let mut changed = true;
    while changed {
        changed = false;
        for &b in order.iter().rev() {
            let b = b as usize;
            let mut live = live_out(&live_in, b);
            for it in items[b].iter().rev() {
                for d in &it.defs {
                    live.remove(d);
                }
                live.extend(it.uses.iter().copied());
            }
            if live != live_in[b] {
                live_in[b] = live;
                changed = true;
            }
        }
    }
    let mut adj: Vec<BTreeSet<VarId>> = vec![BTreeSet::new(); nv];
    let mut needed = vec![false; nv];
    for &b in &order {
        let b = b as usize;
        let mut live = live_out(&live_in, b);
        for it in items[b].iter().rev() {
            for &d in &it.defs {
                needed[d as usize] = true;
                for &l in &live {
                    if l != d {
                        adj[d as usize].insert(l);
                        adj[l as usize].insert(d);
                    }
                }
                live.remove(&d);
            }
            for &u in &it.uses {
                needed[u as usize] = true;
                live.insert(u);
            }
        }
        // Values live on entry to the first block have no definition and
        // still need distinct registers.
        let entry: Vec<VarId> = live.into_iter().collect();
        for (i, &a) in entry.iter().enumerate() {
            for &c in &entry[i + 1..] {
                adj[a as usize].insert(c);
                adj[c as usize].insert(a);
            }
        }
    }
    let mut reg: Vec<Option<u8>> = vec![None; nv];
    for v in 0..nv {
        if !needed[v] {
            continue;
        }
        let taken: BTreeSet<u8> = adj[v].iter().filter_map(|u| reg[*u as usize]).collect();
        let r = (1..=ALLOCATABLE)
            .find(|r| !taken.contains(r))
            .ok_or(CodegenError::RegisterPressure { available: ALLOCATABLE as usize })?;
        reg[v] = Some(r);
    }
    Ok(reg)
}
