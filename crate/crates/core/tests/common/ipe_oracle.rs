//! Dense two-qubit simulation of the iterative phase estimation fixture.
//! Qubit 0 is the ancilla, qubit 1 holds the eigenstate.

use std::f64::consts::PI;

use num_complex::Complex64 as C;

use super::{embed, hadamard, matvec, rot};

fn prob_one(psi: &[C], q: usize) -> f64 {
    psi.iter().enumerate().filter(|(i, _)| i >> q & 1 == 1).map(|(_, a)| a.norm_sqr()).sum()
}

/// Projects qubit `q` onto `bit` and renormalizes.
fn project(psi: &mut [C], q: usize, bit: usize) {
    let p: f64 = psi.iter().enumerate().filter(|(i, _)| i >> q & 1 == bit).map(|(_, a)| a.norm_sqr()).sum();
    for (i, a) in psi.iter_mut().enumerate() {
        *a = if i >> q & 1 == bit { *a / p.sqrt() } else { C::new(0.0, 0.0) };
    }
}

/// Outcome probabilities of each round, the outcomes (most likely branch),
/// and the final estimate. `eigen_angle` is the Rz angle of the unit power.
pub fn ipe(m: u32, eigen_angle: f64) -> (Vec<f64>, Vec<bool>, f64) {
    let mut psi = vec![C::new(0.0, 0.0); 4];
    psi[0] = C::new(1.0, 0.0);
    psi = matvec(&embed(2, &rot('x', PI), &[1], &[]), &psi);
    let (mut probs, mut bits, mut omega) = (vec![], vec![], 0.0);
    for k in (1..=m).rev() {
        let power = 1i64 << (k - 1);
        let p1 = prob_one(&psi, 0);
        project(&mut psi, 0, (p1 > 0.5) as usize);
        if p1 > 0.5 {
            psi = matvec(&embed(2, &rot('x', PI), &[0], &[]), &psi);
        }
        psi = matvec(&embed(2, &hadamard(), &[0], &[]), &psi);
        psi = matvec(&embed(2, &rot('z', eigen_angle * power as f64), &[1], &[0]), &psi);
        psi = matvec(&embed(2, &rot('z', -omega * PI), &[0], &[]), &psi);
        psi = matvec(&embed(2, &hadamard(), &[0], &[]), &psi);
        let p = prob_one(&psi, 0);
        let one = p > 0.5;
        project(&mut psi, 0, one as usize);
        probs.push(p);
        bits.push(one);
        omega = if one { (omega + 1.0) / 2.0 } else { omega / 2.0 };
    }
    (probs, bits, omega)
}
