mod common;

use std::f64::consts::PI;

use common::{binomial_3sigma, compile, dagger, embed, eye, hadamard, matmul, matvec, platform, rot, Mat};
use num_complex::Complex64 as C;
use quingo::codegen::assemble;
use quingo::ir::Value;
use quingo::qvm::{Vm, VmOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Number of seeds in `0..n` whose one-byte result is 1.
fn ones(kernel_op: &str, args: &[Value], n: u64) -> u64 {
    let c = compile("physics.qu", kernel_op, args);
    let pf = platform();
    (0..n)
        .filter(|&seed| {
            let mut vm = Vm::load(&c.program, &pf, seed, VmOptions::default()).unwrap();
            vm.run().unwrap();
            vm.memory()[0] == 1
        })
        .count() as u64
}

#[test]
fn x_rotation_follows_born_rule() {
    const N: u64 = 10_000;
    for theta in [0.0, PI / 4.0, PI / 2.0, PI] {
        let p = (theta / 2.0).sin().powi(2);
        let (lo, hi) = binomial_3sigma(N, p);
        let k = ones("xm", &[Value::Double(theta)], N) as f64;
        assert!(lo <= k && k <= hi, "θ = {theta}: {k} ones, want [{lo:.1}, {hi:.1}]");
    }
}

#[test]
fn hadamard_is_fair() {
    let f = ones("hm", &[], 10_000) as f64 / 10_000.0;
    assert!((0.48..=0.52).contains(&f), "{f}");
}

enum Gate {
    H(u32),
    Rot(&'static str, char, u32, f64),
    Cz(u32, u32),
}

fn random_circuit(rng: &mut ChaCha8Rng, n: u32, len: usize) -> (String, Mat) {
    let mut asm = format!(".qubits {n}\n");
    let mut u = eye(1 << n);
    for _ in 0..len {
        let q = rng.gen_range(0..n);
        let gate = match rng.gen_range(0..4) {
            0 => Gate::H(q),
            1 if n > 1 => {
                let t = (q + rng.gen_range(1..n)) % n;
                Gate::Cz(q, t)
            }
            k => {
                let (name, axis) = [("X", 'x'), ("Y", 'y'), ("Rz", 'z')][(k as usize + rng.gen_range(0..2)) % 3];
                Gate::Rot(name, axis, q, rng.gen_range(-PI..PI))
            }
        };
        let inverse = rng.gen_bool(0.3);
        let controls: Vec<u32> = if n > 2 && rng.gen_bool(0.3) {
            let busy = match gate {
                Gate::H(a) | Gate::Rot(_, _, a, _) => vec![a],
                Gate::Cz(a, b) => vec![a, b],
            };
            (0..n).filter(|c| !busy.contains(c)).take(1).collect()
        } else {
            vec![]
        };
        let (text, g, targets) = match gate {
            Gate::H(a) => (format!("qop H q{a}"), hadamard(), vec![a]),
            Gate::Rot(name, axis, a, th) => (format!("qop {name} q{a} {th:?}"), rot(axis, th), vec![a]),
            Gate::Cz(a, b) => (format!("qop CZ q{a},q{b}"), common::cz(), vec![a, b]),
        };
        let g = if inverse { dagger(&g) } else { g };
        asm += &text;
        if inverse {
            asm += " inv";
        }
        if !controls.is_empty() {
            asm += &format!(" ctrl {}", controls.iter().map(|c| format!("q{c}")).collect::<Vec<_>>().join(","));
        }
        asm += "\nqwait 40\n";
        u = matmul(&embed(n, &g, &targets, &controls), &u);
    }
    asm += "halt\n";
    (asm, u)
}

#[test]
fn unitaries_match_dense_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let pf = platform();
    let opts = VmOptions { zero_init: true, ..VmOptions::default() };
    for trial in 0..200 {
        let n = rng.gen_range(1..=4);
        let (asm, u) = random_circuit(&mut rng, n, 24);
        // Unitarity of the composed operator.
        let id = matmul(&dagger(&u), &u);
        for (r, row) in id.iter().enumerate() {
            for (c, x) in row.iter().enumerate() {
                let want = if r == c { 1.0 } else { 0.0 };
                assert!((x - C::new(want, 0.0)).norm() < 1e-9, "trial {trial}: U†U[{r}][{c}] = {x}");
            }
        }
        let mut zero = vec![C::new(0.0, 0.0); 1 << n];
        zero[0] = C::new(1.0, 0.0);
        let want = matvec(&u, &zero);
        let prog = assemble(&asm).unwrap();
        let mut vm = Vm::load(&prog, &pf, trial, opts.clone()).unwrap();
        vm.run().unwrap_or_else(|e| panic!("trial {trial}: {e}\n{asm}"));
        let got = vm.state().amplitudes();
        for (i, (a, b)) in got.iter().zip(&want).enumerate() {
            assert!((a - b).norm() < 1e-9, "trial {trial}, amplitude {i}: vm {a}, oracle {b}\n{asm}");
        }
    }
}

#[test]
fn fixtures_are_deterministic_per_seed() {
    for (kernel, op, args) in common::fixture_calls() {
        let c = compile(kernel, op, &args);
        for seed in [0, 1, 99] {
            let a = common::run(&c, &common::rt(seed));
            let b = common::run(&c, &common::rt(seed));
            assert_eq!(a.result_block().unwrap(), b.result_block().unwrap(), "{op} seed {seed}");
            let (ea, eb) = (a.execution.as_ref().unwrap(), b.execution.as_ref().unwrap());
            assert_eq!(ea.trace, eb.trace);
            assert_eq!(ea.cycles, eb.cycles);
        }
    }
}

#[test]
fn seeds_change_outcomes() {
    let c = compile("physics.qu", "hm", &[]);
    let results: std::collections::BTreeSet<Vec<u8>> =
        (0..32).map(|s| common::run(&c, &common::rt(s)).result_block().unwrap().bytes.clone()).collect();
    assert_eq!(results.len(), 2);
}

#[test]
fn unprepared_qubits_start_in_seeded_states() {
    // Without init, |0> is not guaranteed; with zero_init it is.
    let prog = assemble(".qubits 1\nmeasure q0\nqwait 300\nfmr r1 q0\nstb r1 0\nhalt\n").unwrap();
    let pf = platform();
    let run = |seed, zero_init| {
        let mut vm = Vm::load(&prog, &pf, seed, VmOptions { zero_init, ..VmOptions::default() }).unwrap();
        vm.run().unwrap();
        vm.memory()[0]
    };
    assert!((0..64).all(|s| run(s, true) == 0));
    assert!((0..64).any(|s| run(s, false) == 1));
}
