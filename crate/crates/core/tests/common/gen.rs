//! Random typed values for the result-block tests.

use quingo::codec::Descriptor;
use quingo::ir::Value;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Leaves are bool, int and double; `depth` bounds array and tuple nesting.
pub fn random_descriptor(rng: &mut ChaCha8Rng, depth: u32) -> Descriptor {
    match rng.gen_range(0..if depth == 0 { 3 } else { 5 }) {
        0 => Descriptor::Bool,
        1 => Descriptor::Int,
        2 => Descriptor::Double,
        3 => Descriptor::Array(Box::new(random_descriptor(rng, depth - 1))),
        _ => Descriptor::Tuple((0..rng.gen_range(2..4)).map(|_| random_descriptor(rng, depth - 1)).collect()),
    }
}

pub fn random_value(rng: &mut ChaCha8Rng, d: &Descriptor) -> Value {
    match d {
        Descriptor::Unit => Value::Unit,
        Descriptor::Bool => Value::Bool(rng.gen()),
        Descriptor::Int => Value::Int(rng.gen()),
        Descriptor::Double => loop {
            let x = f64::from_bits(rng.gen());
            if x.is_finite() {
                break Value::Double(x);
            }
        },
        Descriptor::Tuple(ds) => Value::Tuple(ds.iter().map(|e| random_value(rng, e)).collect()),
        Descriptor::Array(e) => Value::Array((0..rng.gen_range(0..4)).map(|_| random_value(rng, e)).collect()),
    }
}
