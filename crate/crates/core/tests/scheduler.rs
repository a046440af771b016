mod common;

use common::sched_oracle::{consistent, oracle, random_system, Verdict, HORIZON};
use quingo::sched::{solve, SolveError};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn compare(sys: &quingo::sched::BlockSystem) -> Result<(), String> {
    let got = solve(sys);
    match (oracle(sys), got) {
        (Verdict::Unsynchronized { event, timer }, Err(SolveError::Unsynchronized { event: e, timer: t }))
            if (event, timer) == (e, t) =>
        {
            Ok(())
        }
        (Verdict::Infeasible, Err(SolveError::Infeasible(_))) => Ok(()),
        (Verdict::Infeasible, Ok(s)) if s.iter().any(|&x| x >= HORIZON) => Ok(()),
        (Verdict::Feasible(least), Ok(s)) => {
            for i in 0..s.len() {
                if !consistent(sys, &s, i) {
                    return Err(format!("solution {s:?} violates event {i}"));
                }
            }
            if s == least {
                Ok(())
            } else {
                Err(format!("solver {s:?}, least {least:?}"))
            }
        }
        (want, got) => Err(format!("oracle {want:?}, solver {got:?}")),
    }
}

#[test]
fn agrees_with_exhaustive_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut kinds = [0usize; 3];
    for k in 0..3000 {
        let sys = random_system(&mut rng, 8);
        match oracle(&sys) {
            Verdict::Unsynchronized { .. } => kinds[0] += 1,
            Verdict::Infeasible => kinds[1] += 1,
            Verdict::Feasible(_) => kinds[2] += 1,
        }
        if let Err(m) = compare(&sys) {
            panic!("system {k}: {m}\n{sys:#?}");
        }
    }
    // The generator must exercise every verdict.
    assert!(kinds.iter().all(|&c| c >= 100), "{kinds:?}");
}
