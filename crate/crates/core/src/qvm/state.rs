//! Dense state-vector simulator shared by the VM and the reference
//! interpreter.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::linalg::{CMatrix, C64};

/// Largest register the simulator accepts.
pub const MAX_QUBITS: u32 = 12;

/// Tolerance on ‖ψ‖² − 1.
pub const NORM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StateError {
    #[error("{0} qubits requested, the simulator supports at most {MAX_QUBITS}")]
    TooManyQubits(u32),
    #[error("state norm drifted by {0:e}")]
    Normalization(f64),
}

/// `n` qubits; qubit `q` is bit `q` of the basis index.
///
/// Randomness comes from two ChaCha8 sources keyed by the seed: stream 0
/// draws measurement outcomes, stream `q + 1` draws qubit `q`'s initial
/// state. The initial state therefore does not depend on `n`.
#[derive(Debug, Clone)]
pub struct QuantumState {
    n: u32,
    amps: Vec<C64>,
    rng: ChaCha8Rng,
}

fn initial_qubit(seed: u64, q: u32) -> [C64; 2] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(q as u64 + 1);
    let u: f64 = rng.gen();
    let v: f64 = rng.gen();
    let theta = (1.0 - 2.0 * u).clamp(-1.0, 1.0).acos();
    let phi = 2.0 * std::f64::consts::PI * v;
    [C64::new((theta / 2.0).cos(), 0.0), C64::from_polar((theta / 2.0).sin(), phi)]
}

impl QuantumState {
    /// Random product state, or `|0…0⟩` with `zero_init`.
    pub fn new(n: u32, seed: u64, zero_init: bool) -> Result<Self, StateError> {
        if n > MAX_QUBITS {
            return Err(StateError::TooManyQubits(n));
        }
        let mut amps = vec![C64::new(1.0, 0.0)];
        for q in 0..n {
            let [a0, a1] = if zero_init { [C64::new(1.0, 0.0), C64::new(0.0, 0.0)] } else { initial_qubit(seed, q) };
            // Qubit q is the next-higher bit.
            let mut next = Vec::with_capacity(amps.len() * 2);
            next.extend(amps.iter().map(|a| a * a0));
            next.extend(amps.iter().map(|a| a * a1));
            amps = next;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(0);
        Ok(QuantumState { n, amps, rng })
    }

    pub fn num_qubits(&self) -> u32 {
        self.n
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    /// Applies `u` to `targets` (first target is the matrix's most
    /// significant bit) on the subspace where every control is 1.
    pub fn apply(&mut self, targets: &[u32], controls: &[u32], u: &CMatrix) {
        let k = targets.len();
        debug_assert_eq!(u.dim(), 1 << k);
        let tmask: usize = targets.iter().map(|t| 1usize << t).sum();
        let cmask: usize = controls.iter().map(|c| 1usize << c).sum();
        let offsets: Vec<usize> = (0..1usize << k)
            .map(|m| (0..k).filter(|j| m >> (k - 1 - j) & 1 == 1).map(|j| 1usize << targets[j]).sum())
            .collect();
        let mut buf = vec![C64::new(0.0, 0.0); 1 << k];
        for base in 0..self.amps.len() {
            if base & tmask != 0 || base & cmask != cmask {
                continue;
            }
            for (i, off) in offsets.iter().enumerate() {
                buf[i] = self.amps[base | off];
            }
            let out = u.apply(&buf);
            for (i, off) in offsets.iter().enumerate() {
                self.amps[base | off] = out[i];
            }
        }
    }

    pub fn prob_one(&self, q: u32) -> f64 {
        let bit = 1usize << q;
        self.amps.iter().enumerate().filter(|(i, _)| i & bit != 0).map(|(_, a)| a.norm_sqr()).sum()
    }

    /// Projective Z measurement; consumes one draw.
    pub fn measure(&mut self, q: u32) -> bool {
        let p1 = self.prob_one(q);
        let u: f64 = self.rng.gen();
        let one = u < p1;
        let bit = 1usize << q;
        let p = if one { p1 } else { 1.0 - p1 };
        let scale = if p > 0.0 { 1.0 / p.sqrt() } else { 0.0 };
        for (i, a) in self.amps.iter_mut().enumerate() {
            if (i & bit != 0) == one {
                *a *= scale;
            } else {
                *a = C64::new(0.0, 0.0);
            }
        }
        one
    }

    /// Measures, then flips to `|0⟩` on outcome 1. Returns the outcome.
    pub fn reset(&mut self, q: u32) -> bool {
        let one = self.measure(q);
        if one {
            self.apply(&[q], &[], &crate::linalg::pauli_x());
        }
        one
    }

    pub fn norm_error(&self) -> f64 {
        (self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>() - 1.0).abs()
    }

    pub fn check_norm(&self) -> Result<(), StateError> {
        let e = self.norm_error();
        if e > NORM_TOL {
            Err(StateError::Normalization(e))
        } else {
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{pauli_x, rotation};

    #[test]
    fn initial_state_is_normalized_and_seeded() {
        let a = QuantumState::new(4, 7, false).unwrap();
        let b = QuantumState::new(4, 7, false).unwrap();
        assert!(a.norm_error() < 1e-12);
        assert_eq!(a.amplitudes(), b.amplitudes());
        assert_ne!(a.amplitudes(), QuantumState::new(4, 8, false).unwrap().amplitudes());
    }

    #[test]
    fn initial_qubit_independent_of_register_size() {
        let a = QuantumState::new(1, 3, false).unwrap();
        let b = QuantumState::new(3, 3, false).unwrap();
        assert!((a.prob_one(0) - b.prob_one(0)).abs() < 1e-12);
    }

    #[test]
    fn reset_then_x_gives_one() {
        let mut s = QuantumState::new(2, 11, false).unwrap();
        s.reset(1);
        assert!(s.prob_one(1) < 1e-12);
        s.apply(&[1], &[], &pauli_x());
        assert!((s.prob_one(1) - 1.0).abs() < 1e-12);
        assert!(s.measure(1));
    }

    #[test]
    fn controlled_gate_acts_only_when_control_set() {
        let mut s = QuantumState::new(2, 0, true).unwrap();
        s.apply(&[1], &[0], &pauli_x());
        assert!(s.prob_one(1) < 1e-12);
        s.apply(&[0], &[], &pauli_x());
        s.apply(&[1], &[0], &pauli_x());
        assert!((s.prob_one(1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn too_many_qubits() {
        assert_eq!(QuantumState::new(13, 0, true).unwrap_err(), StateError::TooManyQubits(13));
    }

    #[test]
    fn rotation_probability() {
        let mut s = QuantumState::new(1, 0, true).unwrap();
        s.apply(&[0], &[], &rotation([1.0, 0.0, 0.0], 1.0));
        assert!((s.prob_one(0) - (0.5f64).sin().powi(2)).abs() < 1e-12);
    }
}
