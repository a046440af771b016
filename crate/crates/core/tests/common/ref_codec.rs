//! Result-block encoder written from the layout rules alone.

use quingo::codec::Descriptor;
use quingo::ir::Value;

/// Reference layout built by composition: each value yields a fixed head,
/// a tail of array regions, and the head positions that must point at a
/// given tail position once head and tail are joined.
struct Layout {
    head: Vec<u8>,
    tail: Vec<u8>,
    links: Vec<(usize, usize)>,
}

fn layout(v: &Value, d: &Descriptor) -> Layout {
    let leaf = |head: Vec<u8>| Layout { head, tail: vec![], links: vec![] };
    match (v, d) {
        (Value::Unit, Descriptor::Unit) => leaf(vec![]),
        (Value::Bool(b), Descriptor::Bool) => leaf(vec![if *b { 1 } else { 0 }]),
        (Value::Int(i), Descriptor::Int) => leaf((0..4).map(|k| (*i as u32 >> (8 * k)) as u8).collect()),
        (Value::Double(x), Descriptor::Double) => leaf((0..8).map(|k| (x.to_bits() >> (8 * k)) as u8).collect()),
        (Value::Tuple(vs), Descriptor::Tuple(ds)) => {
            let mut out = Layout { head: vec![], tail: vec![], links: vec![] };
            for (x, e) in vs.iter().zip(ds) {
                let l = layout(x, e);
                let (h0, t0) = (out.head.len(), out.tail.len());
                out.links.extend(l.links.iter().map(|(h, t)| (h0 + h, t0 + t)));
                out.head.extend(l.head);
                out.tail.extend(l.tail);
            }
            out
        }
        (Value::Array(vs), Descriptor::Array(e)) => {
            let parts: Vec<Layout> = vs.iter().map(|x| layout(x, e)).collect();
            let mut region = (vs.len() as u32).to_le_bytes().to_vec();
            let heads: usize = parts.iter().map(|p| p.head.len()).sum();
            let mut tails: Vec<u8> = Vec::new();
            for p in &parts {
                let at = region.len();
                region.extend(&p.head);
                for &(h, t) in &p.links {
                    let target = 4 + heads + tails.len() + t;
                    let off = (target - (at + h)) as u32;
                    region[at + h..at + h + 4].copy_from_slice(&off.to_le_bytes());
                }
                tails.extend(&p.tail);
            }
            region.extend(tails);
            Layout { head: vec![0; 4], tail: region, links: vec![(0, 0)] }
        }
        _ => panic!("value does not match descriptor"),
    }
}

pub fn reference_encode(v: &Value, d: &Descriptor) -> Vec<u8> {
    let l = layout(v, d);
    let mut out = l.head.clone();
    for &(h, t) in &l.links {
        let off = (l.head.len() - h + t) as u32;
        out[h..h + 4].copy_from_slice(&off.to_le_bytes());
    }
    out.extend(l.tail);
    out
}

pub fn bit_equal(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Double(x), Value::Double(y)) => x.to_bits() == y.to_bits(),
        (Value::Tuple(xs), Value::Tuple(ys)) | (Value::Array(xs), Value::Array(ys)) => {
            xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| bit_equal(x, y))
        }
        _ => a == b,
    }
}
