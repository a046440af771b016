//! One line per acceptance criterion; exits non-zero if any fails.

mod common;

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::sched_oracle::{consistent, oracle, random_system, Verdict, HORIZON};
use common::{binomial_3sigma, compile, fixture_calls, ints, platform, rt, run};
use quingo::codec::{decode_value, encode_value, CodecOptions, Descriptor};
use quingo::ir::{Inst, Value};
use quingo::peval::{interpret, DEFAULT_STEP_BUDGET};
use quingo::qvm::{Status, Vm, VmOptions};
use quingo::runtime::{call_kernel, read_result};
use quingo::sched::{solve, verify_schedule};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

fn ipe_end_to_end() -> Outcome {
    let (probs, bits, omega) = common::ipe_oracle::ipe(3, 5.0 * PI / 2.0);
    ensure!(probs.iter().all(|p| p.min(1.0 - p) < 1e-12), "oracle rounds are not certain: {probs:?}");
    ensure!(bits == [true, false, true] && omega == 0.625, "oracle gives {bits:?} -> {omega}");
    let kernel = common::fixtures().join("ipe.qu");
    let mut slowest = Duration::ZERO;
    for seed in 0..100 {
        let t = Instant::now();
        let h = call_kernel(&kernel, "ipe", &[Value::Int(3)], &rt(seed)).map_err(|e| e.to_string())?;
        slowest = slowest.max(t.elapsed());
        let v = read_result(&h).map_err(|e| e.to_string())?;
        ensure!(v == Value::Double(omega), "seed {seed}: {v}");
    }
    ensure!(slowest < Duration::from_secs(1), "slowest call took {slowest:?}");
    Ok(format!("100 seeds -> 0.625 (bits 101), slowest call {:.1} ms", slowest.as_secs_f64() * 1e3))
}

fn partial_elimination() -> Outcome {
    let c = compile("kernel.qu", "sum_random", &[ints(&[2, 6, 8]), Value::Bool(false)]);
    let instrs: Vec<&str> =
        c.asm.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('.') && !l.ends_with(':')).collect();
    let quantum = instrs.iter().filter(|l| ["qop", "measure", "init"].iter().any(|m| l.starts_with(m))).count();
    ensure!(quantum == 0, "{quantum} quantum instructions");
    let other: Vec<&&str> =
        instrs.iter().filter(|l| !["ldi", "stw", "halt"].iter().any(|m| l.starts_with(m))).collect();
    ensure!(other.is_empty(), "non-epilogue instructions {other:?}");
    ensure!(instrs.last() == Some(&"halt"), "does not end in halt");
    let v = read_result(&run(&c, &rt(0))).map_err(|e| e.to_string())?;
    ensure!(v == Value::Tuple(vec![Value::Int(16), Value::Int(0)]), "result {v}");
    Ok(format!("{} instructions (epilogue + halt), result (16, 0)", instrs.len()))
}

fn dynamic_selection() -> Outcome {
    const N: u64 = 10_000;
    let c = compile("kernel.qu", "sum_random", &[ints(&[2, 6, 8]), Value::Bool(true)]);
    let pf = platform();
    let mut twos = 0u64;
    for seed in 0..N {
        let mut vm = Vm::load(&c.program, &pf, seed, VmOptions::default()).map_err(|e| e.to_string())?;
        vm.run().map_err(|e| format!("seed {seed}: {e}"))?;
        let m = vm.memory();
        let (sum, second) =
            (i32::from_le_bytes(m[0..4].try_into().unwrap()), i32::from_le_bytes(m[4..8].try_into().unwrap()));
        ensure!(sum == 16 && (second == 2 || second == 6), "seed {seed}: ({sum}, {second})");
        twos += (second == 2) as u64;
    }
    let f = twos as f64 / N as f64;
    ensure!((0.48..=0.52).contains(&f), "frequency of 2 is {f}");
    Ok(format!("frequency of 2 = {f:.4} over {N} seeds, tolerance [0.48, 0.52]"))
}

fn repeat_until_success() -> Outcome {
    const N: u64 = 1000;
    let c = compile("rus.qu", "rus", &[]);
    let pf = platform();
    let mut total = 0i64;
    for seed in 0..N {
        let mut vm = Vm::load(&c.program, &pf, seed, VmOptions::default()).map_err(|e| e.to_string())?;
        vm.run().map_err(|e| format!("seed {seed} did not finish: {e}"))?;
        let rounds = i32::from_le_bytes(vm.memory()[0..4].try_into().unwrap());
        ensure!(rounds >= 1, "seed {seed}: {rounds} rounds");
        total += rounds as i64;
    }
    let mean = total as f64 / N as f64;
    ensure!((1.85..=2.15).contains(&mean), "mean {mean}");
    Ok(format!("all {N} seeds terminate, mean rounds {mean:.3}, tolerance [1.85, 2.15]"))
}

fn t2_schedule() -> Outcome {
    let pf = platform();
    let x = pf.op("X").ok_or("no X")?.duration_ns();
    ensure!(x == 20, "X lasts {x} ns");
    let mut checked = 0;
    for echo in [true, false] {
        let c = compile("t2.qu", "t2", &[ints(&[200, 400]), Value::Bool(echo)]);
        verify_schedule(&c.timed, &pf).map_err(|v| v.to_string())?;
        for (b, blk) in c.timed.proc().blocks.iter().enumerate() {
            let starts = &c.timed.blocks[b].starts;
            let mut last_x = None;
            for (i, inst) in blk.insts.iter().enumerate() {
                if let Inst::QOp(q) = inst {
                    match q.name.as_str() {
                        "X" => last_x = starts[i],
                        "measure" => {
                            let (m, x90) = (starts[i].unwrap(), last_x.ok_or("measure without X")?);
                            ensure!(m == x90 + x, "echo={echo} b{b}: measure at {m}, X90 at {x90}");
                            checked += 1;
                        }
                        _ => {}
                    }
                }
            }
        }
        // The machine issues them the same distance apart.
        let mut cfg = rt(3);
        cfg.record_trace = true;
        let h = run(&c, &cfg);
        let lines = &h.execution.as_ref().unwrap().lines;
        for (i, l) in lines.iter().enumerate().filter(|(_, l)| l.instruction.starts_with("measure")) {
            let prev =
                lines[..i].iter().rev().find(|p| p.instruction.starts_with("qop X")).ok_or("no X before measure")?;
            ensure!(l.cycle == prev.cycle + x as u64, "echo={echo}: issued at {} and {}", prev.cycle, l.cycle);
        }
    }
    ensure!(checked == 4, "{checked} measurements checked");
    Ok("echo and Ramsey verify; measure starts 20 ns after the second X90 for 200 and 400 ns".into())
}

fn scheduler_oracle() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2025);
    let mut kinds = [0usize; 3];
    for k in 0..200 {
        let sys = random_system(&mut rng, 5);
        match (oracle(&sys), solve(&sys)) {
            (
                Verdict::Unsynchronized { event, timer },
                Err(quingo::sched::SolveError::Unsynchronized { event: e, timer: tm }),
            ) if (event, timer) == (e, tm) => kinds[0] += 1,
            (Verdict::Infeasible, Err(quingo::sched::SolveError::Infeasible(_))) => kinds[1] += 1,
            (Verdict::Infeasible, Ok(s)) if s.iter().any(|&v| v >= HORIZON) => kinds[1] += 1,
            (Verdict::Feasible(least), Ok(s)) => {
                ensure!((0..s.len()).all(|i| consistent(&sys, &s, i)), "system {k}: {s:?} violates a constraint");
                ensure!(s == least, "system {k}: solver {s:?}, least {least:?}");
                kinds[2] += 1;
            }
            (want, got) => return Err(format!("system {k}: oracle {want:?}, solver {got:?}")),
        }
    }
    let el = t.elapsed();
    ensure!(el < Duration::from_secs(30), "took {el:?}");
    Ok(format!(
        "200 systems agree ({} unsynchronized, {} infeasible, {} feasible) in {:.2} s",
        kinds[0],
        kinds[1],
        kinds[2],
        el.as_secs_f64()
    ))
}

fn serialization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let opts = CodecOptions::default();
    for k in 0..1000 {
        let d = common::gen::random_descriptor(&mut rng, 3);
        let v = common::gen::random_value(&mut rng, &d);
        let bytes = encode_value(&v, &d, opts).map_err(|e| e.to_string())?;
        ensure!(
            bytes == common::ref_codec::reference_encode(&v, &d),
            "value {k}: encoding differs from the layout rules"
        );
        let back = decode_value(&bytes, &d, opts).map_err(|e| e.to_string())?;
        ensure!(common::ref_codec::bit_equal(&back, &v), "value {k}: {v} came back as {back}");
    }
    let image = encode_value(&ints(&[2, 6, 8]), &Descriptor::Array(Box::new(Descriptor::Int)), opts).unwrap();
    let hex: String = image.iter().map(|b| format!("{b:02x}")).collect();
    ensure!(hex == "0400000003000000020000000600000008000000", "[2,6,8] -> {hex}");
    Ok("1000 values round-trip bit-exactly; [2,6,8] -> 04000000 03000000 02000000 06000000 08000000".into())
}

fn vm_physics() -> Outcome {
    let pf = platform();
    let mut worst = 0.0f64;
    for (kernel, op, args) in fixture_calls() {
        let c = compile(kernel, op, &args);
        for seed in 0..10 {
            let mut vm = Vm::load(&c.program, &pf, seed, VmOptions::default()).map_err(|e| e.to_string())?;
            loop {
                let st = vm.step().map_err(|e| format!("{op} seed {seed}: {e}"))?;
                worst = worst.max(vm.state().norm_error());
                if st == Status::Halted {
                    break;
                }
            }
        }
    }
    ensure!(worst <= 1e-9, "norm error {worst:e}");
    const N: u64 = 10_000;
    let mut freqs = vec![];
    for theta in [0.0, PI / 4.0, PI / 2.0, PI] {
        let c = compile("physics.qu", "xm", &[Value::Double(theta)]);
        let mut ones = 0u64;
        for seed in 0..N {
            let mut vm = Vm::load(&c.program, &pf, seed, VmOptions::default()).map_err(|e| e.to_string())?;
            vm.run().map_err(|e| e.to_string())?;
            ones += vm.memory()[0] as u64;
        }
        let p = (theta / 2.0).sin().powi(2);
        let (lo, hi) = binomial_3sigma(N, p);
        ensure!(lo <= ones as f64 && ones as f64 <= hi, "θ = {theta}: {ones} ones, want [{lo:.1}, {hi:.1}]");
        freqs.push(format!("{:.4}", ones as f64 / N as f64));
    }
    Ok(format!("max norm error {worst:.1e}; P(1) at θ = 0, π/4, π/2, π: {} (3σ)", freqs.join(", ")))
}

fn semantic_preservation() -> Outcome {
    let pf = platform();
    let mut runs = 0;
    for (kernel, op, args) in fixture_calls() {
        let c = compile(kernel, op, &args);
        for seed in 0..40 {
            let reference = interpret(&c.lowered, &pf, seed, false, DEFAULT_STEP_BUDGET).map_err(|e| e.to_string())?;
            let residual = interpret(&c.residual, &pf, seed, false, DEFAULT_STEP_BUDGET).map_err(|e| e.to_string())?;
            let want =
                encode_value(&reference.value, &c.descriptor, CodecOptions::default()).map_err(|e| e.to_string())?;
            let h = run(&c, &rt(seed));
            let got = &h.result_block().map_err(|e| e.to_string())?.bytes;
            ensure!(*got == want, "{op} seed {seed}: bytes differ");
            ensure!(residual.value == reference.value, "{op} seed {seed}: residual value differs");
            ensure!(residual.trace == reference.trace, "{op} seed {seed}: residual trace differs");
            ensure!(h.execution.as_ref().unwrap().trace == reference.trace, "{op} seed {seed}: machine trace differs");
            runs += 1;
        }
    }
    Ok(format!("{runs} fixture runs: unoptimized IR, residual IR and machine agree on bytes and traces"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("IPE end-to-end", ipe_end_to_end),
        ("partial-execution elimination", partial_elimination),
        ("dynamic selection", dynamic_selection),
        ("repeat-until-success", repeat_until_success),
        ("T2 schedule", t2_schedule),
        ("scheduler oracle equivalence", scheduler_oracle),
        ("serialization protocol", serialization),
        ("VM physics", vm_physics),
        ("semantic preservation", semantic_preservation),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default())
        });
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS [{}] {name}: {detail} ({secs:.2} s)", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL [{}] {name}: {why} ({secs:.2} s)", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
