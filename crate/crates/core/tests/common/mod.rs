//! Fixture access and independent oracles shared by the integration tests.
#![allow(dead_code)]

pub mod gen;
pub mod ipe_oracle;
pub mod ref_codec;
pub mod sched_oracle;

use std::path::PathBuf;

use num_complex::Complex64 as C;
use quingo::ir::Value;
use quingo::platform::PlatformConfig;
use quingo::runtime::{compile_kernel, load_platform, run_compiled, Compiled, RunHandle, RuntimeConfig};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn platform() -> PlatformConfig {
    load_platform(&fixtures().join("platform.qfg")).unwrap()
}

pub fn rt(seed: u64) -> RuntimeConfig {
    RuntimeConfig::new(fixtures().join("platform.qfg"), seed)
}

pub fn ints(xs: &[i32]) -> Value {
    Value::Array(xs.iter().map(|x| Value::Int(*x)).collect())
}

pub fn compile(kernel: &str, op: &str, args: &[Value]) -> Compiled {
    compile_kernel(&fixtures().join(kernel), op, args, &platform(), &rt(0), &mut Vec::new())
        .unwrap_or_else(|e| panic!("{kernel}/{op}: {e}"))
}

pub fn run(c: &Compiled, cfg: &RuntimeConfig) -> RunHandle {
    run_compiled(c.clone(), platform(), cfg, RunHandle::pending()).unwrap_or_else(|e| panic!("run: {e}"))
}

/// Every fixture call, with arguments.
pub fn fixture_calls() -> Vec<(&'static str, &'static str, Vec<Value>)> {
    vec![
        ("kernel.qu", "sum_random", vec![ints(&[2, 6, 8]), Value::Bool(false)]),
        ("kernel.qu", "sum_random", vec![ints(&[2, 6, 8]), Value::Bool(true)]),
        ("ipe.qu", "ipe", vec![Value::Int(3)]),
        ("rus.qu", "rus", vec![]),
        ("t2.qu", "t2", vec![ints(&[200, 400]), Value::Bool(true)]),
        ("t2.qu", "t2", vec![ints(&[200, 400]), Value::Bool(false)]),
        ("pad.qu", "pad", vec![]),
        ("physics.qu", "xm", vec![Value::Double(std::f64::consts::FRAC_PI_4)]),
        ("physics.qu", "hm", vec![]),
    ]
}

/// Two-sided 3σ interval for the success count of `n` Bernoulli(p) draws.
pub fn binomial_3sigma(n: u64, p: f64) -> (f64, f64) {
    let mean = n as f64 * p;
    let sd = (n as f64 * p * (1.0 - p)).sqrt();
    (mean - 3.0 * sd, mean + 3.0 * sd)
}

// Dense linear algebra written independently of the library's simulator:
// full 2^n operators built from Kronecker products, qubit 0 least significant.

pub type Mat = Vec<Vec<C>>;

pub fn eye(d: usize) -> Mat {
    (0..d).map(|r| (0..d).map(|c| if r == c { C::new(1.0, 0.0) } else { C::new(0.0, 0.0) }).collect()).collect()
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let n = a.len();
    (0..n).map(|r| (0..n).map(|c| (0..n).map(|k| a[r][k] * b[k][c]).sum()).collect()).collect()
}

pub fn matvec(a: &Mat, v: &[C]) -> Vec<C> {
    a.iter().map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
}

pub fn dagger(a: &Mat) -> Mat {
    let n = a.len();
    (0..n).map(|r| (0..n).map(|c| a[c][r].conj()).collect()).collect()
}

/// exp(-iθ/2 · n·σ) written out for the axis-aligned cases.
pub fn rot(axis: char, theta: f64) -> Mat {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let z = C::new(0.0, 0.0);
    match axis {
        'x' => vec![vec![C::new(c, 0.0), C::new(0.0, -s)], vec![C::new(0.0, -s), C::new(c, 0.0)]],
        'y' => vec![vec![C::new(c, 0.0), C::new(-s, 0.0)], vec![C::new(s, 0.0), C::new(c, 0.0)]],
        'z' => vec![vec![C::new(c, -s), z], vec![z, C::new(c, s)]],
        _ => unreachable!(),
    }
}

pub fn hadamard() -> Mat {
    let h = C::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    vec![vec![h, h], vec![h, -h]]
}

pub fn cz() -> Mat {
    let mut m = eye(4);
    m[3][3] = C::new(-1.0, 0.0);
    m
}

/// Embeds a `k`-qubit gate (first target = most significant matrix bit)
/// with optional controls into an `n`-qubit operator, entry by entry.
pub fn embed(n: u32, g: &Mat, targets: &[u32], controls: &[u32]) -> Mat {
    let dim = 1usize << n;
    let k = targets.len();
    let sub = |i: usize| -> usize { (0..k).fold(0, |acc, j| (acc << 1) | (i >> targets[j] & 1)) };
    let mut out = vec![vec![C::new(0.0, 0.0); dim]; dim];
    for col in 0..dim {
        let active = controls.iter().all(|&c| col >> c & 1 == 1);
        for row in 0..dim {
            let rest_equal =
                (0..n as usize).filter(|b| !targets.contains(&(*b as u32))).all(|b| (row >> b & 1) == (col >> b & 1));
            if !rest_equal {
                continue;
            }
            out[row][col] = if active {
                g[sub(row)][sub(col)]
            } else if row == col {
                C::new(1.0, 0.0)
            } else {
                C::new(0.0, 0.0)
            };
        }
    }
    out
}
