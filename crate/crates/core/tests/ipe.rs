mod common;

use std::f64::consts::PI;

use common::{compile, ipe_oracle, rt, run};
use quingo::ir::Value;

#[test]
fn oracle_reads_101() {
    let (probs, bits, omega) = ipe_oracle::ipe(3, 5.0 * PI / 2.0);
    // Rounds measure c3, c2, c1; every outcome is certain.
    assert!(probs.iter().all(|p| p.min(1.0 - p) < 1e-12), "{probs:?}");
    assert_eq!(bits, [true, false, true]);
    assert_eq!(omega, 0.625);
}

#[test]
fn machine_matches_oracle_for_every_seed() {
    let (_, bits, omega) = ipe_oracle::ipe(3, 5.0 * PI / 2.0);
    let c = compile("ipe.qu", "ipe", &[Value::Int(3)]);
    for seed in 0..200 {
        let mut cfg = rt(seed);
        cfg.record_trace = true;
        let h = run(&c, &cfg);
        assert_eq!(quingo::runtime::read_result(&h).unwrap(), Value::Double(omega), "seed {seed}");
        let ex = h.execution.as_ref().unwrap();
        let measured: Vec<bool> =
            ex.trace.iter().filter(|e| e.kind == quingo::peval::TraceKind::Measure).map(|e| e.outcome).collect();
        assert_eq!(measured, bits, "seed {seed}");
    }
}

#[test]
fn other_precisions() {
    // With m = 2 the phase 0.101 is truncated: the final round is not certain.
    let (probs, _, _) = ipe_oracle::ipe(2, 5.0 * PI / 2.0);
    assert!(probs.iter().any(|p| p.min(1.0 - p) > 0.1), "{probs:?}");
    for m in 3..=5 {
        let (_, _, omega) = ipe_oracle::ipe(m, 5.0 * PI / 2.0);
        assert_eq!(omega, 0.625);
        let c = compile("ipe.qu", "ipe", &[Value::Int(m as i32)]);
        let h = run(&c, &rt(m as u64));
        assert_eq!(quingo::runtime::read_result(&h).unwrap(), Value::Double(omega), "m = {m}");
    }
}
