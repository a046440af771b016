//! Cleanup of residual programs: constant folding, parameter and dead-code
//! elimination, jump fusion, and a canonical numbering.
//!
//! These passes assume the residual shape: one procedure, no calls, every
//! variable assigned exactly once.

use std::collections::HashMap;

use crate::ir::*;

pub fn simplify(ir: &mut KernelIR) {
    for p in &mut ir.procs {
        loop {
            let mut changed = fold(p);
            changed |= drop_constant_params(p);
            changed |= fuse(p);
            changed |= dce(p);
            if !changed {
                break;
            }
        }
        remove_unreachable(p);
    }
}

fn substitute(p: &mut Proc, map: &HashMap<VarId, Operand>) {
    if map.is_empty() {
        return;
    }
    // Chains resolve by repeated substitution.
    let mut map = map.clone();
    for _ in 0..map.len() {
        let snapshot = map.clone();
        let mut stable = true;
        for o in map.values_mut() {
            let before = o.clone();
            o.map_vars(&mut |v| snapshot.get(&v).cloned());
            stable &= *o == before;
        }
        if stable {
            break;
        }
    }
    let mut f = |v: VarId| map.get(&v).cloned();
    for b in &mut p.blocks {
        for inst in &mut b.insts {
            for o in inst.operands_mut() {
                o.map_vars(&mut f);
            }
        }
        for o in b.term.operands_mut() {
            o.map_vars(&mut f);
        }
    }
}

fn const_value(o: &Operand) -> Option<Value> {
    match o {
        Operand::Const(v) => Some(v.clone()),
        Operand::Var(_) => None,
        Operand::Tuple(xs) => xs.iter().map(const_value).collect::<Option<Vec<_>>>().map(Value::Tuple),
        Operand::Array(xs) => xs.iter().map(const_value).collect::<Option<Vec<_>>>().map(Value::Array),
    }
}

fn fold(p: &mut Proc) -> bool {
    let mut changed = false;
    let mut map = HashMap::new();
    for b in &mut p.blocks {
        let mut kept = Vec::with_capacity(b.insts.len());
        for inst in b.insts.drain(..) {
            if let Inst::Compute { dest, op, args } = &inst {
                if let Some(vals) = args.iter().map(const_value).collect::<Option<Vec<_>>>() {
                    if let Ok(v) = eval_prim(op, &vals) {
                        map.insert(*dest, Operand::Const(v));
                        changed = true;
                        continue;
                    }
                }
                if *op == PrimOp::Copy {
                    map.insert(*dest, args[0].clone());
                    changed = true;
                    continue;
                }
            }
            kept.push(inst);
        }
        b.insts = kept;
    }
    substitute(p, &map);
    for b in &mut p.blocks {
        if let Terminator::Branch { cond: Operand::Const(Value::Bool(c)), then_to, else_to } = b.term {
            b.term = Terminator::Jump { target: if c { then_to } else { else_to }, args: vec![] };
            changed = true;
        }
    }
    changed
}

/// Incoming jump arguments for every block parameter, from reachable blocks.
fn incoming(p: &Proc) -> Vec<Vec<Vec<Operand>>> {
    let reach = reachable(p);
    let mut inc: Vec<Vec<Vec<Operand>>> = p.blocks.iter().map(|b| vec![Vec::new(); b.params.len()]).collect();
    for (i, b) in p.blocks.iter().enumerate() {
        if !reach[i] {
            continue;
        }
        if let Terminator::Jump { target, args } = &b.term {
            for (k, a) in args.iter().enumerate() {
                inc[*target as usize][k].push(a.clone());
            }
        }
    }
    inc
}

fn drop_constant_params(p: &mut Proc) -> bool {
    let inc = incoming(p);
    let mut map = HashMap::new();
    let mut drop: Vec<Vec<bool>> = p.blocks.iter().map(|b| vec![false; b.params.len()]).collect();
    for (bi, b) in p.blocks.iter().enumerate() {
        for (k, &param) in b.params.iter().enumerate() {
            let others: Vec<&Operand> = inc[bi][k].iter().filter(|o| **o != Operand::Var(param)).collect();
            let Some(first) = others.first() else { continue };
            if others.iter().all(|o| o == first) && matches!(first, Operand::Const(_) | Operand::Var(_)) {
                map.insert(param, (*first).clone());
                drop[bi][k] = true;
            }
        }
    }
    if map.is_empty() {
        return false;
    }
    remove_params(p, &drop);
    substitute(p, &map);
    true
}

fn remove_params(p: &mut Proc, drop: &[Vec<bool>]) {
    for b in &mut p.blocks {
        if let Terminator::Jump { target, args } = &mut b.term {
            let d = &drop[*target as usize];
            let mut k = 0;
            args.retain(|_| {
                let keep = !d.get(k).copied().unwrap_or(false);
                k += 1;
                keep
            });
        }
    }
    for (bi, b) in p.blocks.iter_mut().enumerate() {
        let mut k = 0;
        b.params.retain(|_| {
            let keep = !drop[bi][k];
            k += 1;
            keep
        });
    }
}

fn reachable(p: &Proc) -> Vec<bool> {
    let mut seen = vec![false; p.blocks.len()];
    let mut stack = vec![p.entry];
    while let Some(b) = stack.pop() {
        if std::mem::replace(&mut seen[b as usize], true) {
            continue;
        }
        stack.extend(p.blocks[b as usize].term.successors());
    }
    seen
}

fn fuse(p: &mut Proc) -> bool {
    let mut changed = false;
    loop {
        let reach = reachable(p);
        let mut preds = vec![0u32; p.blocks.len()];
        for (i, b) in p.blocks.iter().enumerate() {
            if reach[i] {
                for s in b.term.successors() {
                    preds[s as usize] += 1;
                }
            }
        }
        let candidate = (0..p.blocks.len()).find(|&i| {
            reach[i]
                && matches!(&p.blocks[i].term, Terminator::Jump { target, .. }
                    if *target as usize != i && *target != p.entry && preds[*target as usize] == 1)
        });
        let Some(b) = candidate else { return changed };
        let Terminator::Jump { target, args } = p.blocks[b].term.clone() else { unreachable!() };
        let c = target as usize;
        let map: HashMap<VarId, Operand> = p.blocks[c].params.iter().copied().zip(args).collect();
        let mut moved = std::mem::replace(
            &mut p.blocks[c],
            Block { params: vec![], insts: vec![], term: Terminator::Return { value: Operand::Const(Value::Unit) } },
        );
        let mut f = |v: VarId| map.get(&v).cloned();
        for inst in &mut moved.insts {
            for o in inst.operands_mut() {
                o.map_vars(&mut f);
            }
        }
        for o in moved.term.operands_mut() {
            o.map_vars(&mut f);
        }
        p.blocks[b].insts.extend(moved.insts);
        p.blocks[b].term = moved.term;
        changed = true;
    }
}

fn dce(p: &mut Proc) -> bool {
    let nv = p.var_types.len();
    let reach = reachable(p);
    let mut def_args: HashMap<VarId, Vec<VarId>> = HashMap::new();
    let mut useful = vec![false; nv];
    let mut work = Vec::new();
    let mut param_pos: HashMap<VarId, (usize, usize)> = HashMap::new();
    for (bi, b) in p.blocks.iter().enumerate() {
        if !reach[bi] {
            continue;
        }
        for (k, v) in b.params.iter().enumerate() {
            param_pos.insert(*v, (bi, k));
        }
        for inst in &b.insts {
            match inst {
                Inst::Compute { dest, args, .. } => {
                    let mut uses = Vec::new();
                    args.iter().for_each(|a| a.for_each_var(&mut |v| uses.push(v)));
                    def_args.insert(*dest, uses);
                }
                other => other.for_each_use(&mut |v| work.push(v)),
            }
        }
        match &b.term {
            Terminator::Jump { .. } => {}
            t => t.for_each_use(&mut |v| work.push(v)),
        }
    }
    let inc = incoming(p);
    while let Some(v) = work.pop() {
        if std::mem::replace(&mut useful[v as usize], true) {
            continue;
        }
        if let Some(args) = def_args.get(&v) {
            work.extend(args.iter().copied());
        }
        if let Some(&(bi, k)) = param_pos.get(&v) {
            for a in &inc[bi][k] {
                a.for_each_var(&mut |u| work.push(u));
            }
        }
    }
    let mut changed = false;
    for b in &mut p.blocks {
        let before = b.insts.len();
        b.insts.retain(|i| !matches!(i, Inst::Compute { dest, .. } if !useful[*dest as usize]));
        changed |= b.insts.len() != before;
    }
    let drop: Vec<Vec<bool>> =
        p.blocks.iter().map(|b| b.params.iter().map(|v| !useful[*v as usize]).collect()).collect();
    if drop.iter().flatten().any(|d| *d) {
        remove_params(p, &drop);
        changed = true;
    }
    changed
}

fn remove_unreachable(p: &mut Proc) {
    let reach = reachable(p);
    for (i, b) in p.blocks.iter_mut().enumerate() {
        if !reach[i] {
            *b = Block {
                params: vec![],
                insts: vec![],
                term: Terminator::Return { value: Operand::Const(Value::Unit) },
            };
        }
    }
}

/// Renumbers blocks in depth-first pre-order from the entry and variables
/// in order of definition; unreachable blocks and unused variables vanish.
pub fn canonicalize(ir: &mut KernelIR) {
    for p in &mut ir.procs {
        let mut order = Vec::new();
        let mut seen = vec![false; p.blocks.len()];
        let mut stack = vec![p.entry];
        while let Some(b) = stack.pop() {
            if std::mem::replace(&mut seen[b as usize], true) {
                continue;
            }
            order.push(b);
            let mut succ = p.blocks[b as usize].term.successors();
            succ.reverse();
            stack.extend(succ);
        }
        let mut bmap = vec![u32::MAX; p.blocks.len()];
        for (new, old) in order.iter().enumerate() {
            bmap[*old as usize] = new as u32;
        }
        let mut vmap: HashMap<VarId, VarId> = HashMap::new();
        let mut types = Vec::new();
        let mut names = Vec::new();
        let mut def = |v: VarId, vmap: &mut HashMap<VarId, VarId>| {
            vmap.entry(v).or_insert_with(|| {
                types.push(p.var_types[v as usize].clone());
                names.push(p.var_names[v as usize].clone());
                (types.len() - 1) as VarId
            });
        };
        for v in &p.params {
            def(*v, &mut vmap);
        }
        for &b in &order {
            let blk = &p.blocks[b as usize];
            for v in &blk.params {
                def(*v, &mut vmap);
            }
            for inst in &blk.insts {
                if let Some(d) = inst.def() {
                    def(d, &mut vmap);
                }
            }
        }
        let mut blocks = Vec::with_capacity(order.len());
        for &b in &order {
            let mut blk = p.blocks[b as usize].clone();
            let mut f = |v: VarId| Some(Operand::Var(vmap[&v]));
            for inst in &mut blk.insts {
                for o in inst.operands_mut() {
                    o.map_vars(&mut f);
                }
                match inst {
                    Inst::Compute { dest, .. } | Inst::Alloc { dest, .. } => *dest = vmap[dest],
                    Inst::QOp(q) => q.dest = q.dest.map(|d| vmap[&d]),
                    _ => {}
                }
            }
            for o in blk.term.operands_mut() {
                o.map_vars(&mut f);
            }
            if let Terminator::Call { dest, .. } = &mut blk.term {
                *dest = dest.map(|d| vmap[&d]);
            }
            blk.term.map_targets(&mut |t| bmap[t as usize]);
            blk.params = blk.params.iter().map(|v| vmap[v]).collect();
            blocks.push(blk);
        }
        p.params = p.params.iter().map(|v| vmap[v]).collect();
        p.blocks = blocks;
        p.entry = 0;
        p.var_types = types;
        p.var_names = names;
    }
}
