//! Fixture loading shared by unit tests.

use crate::frontend::{check, CompileInput, MemProvider, TypedProgram};
use crate::platform::{parse_config, PlatformConfig};

pub const PLATFORM: &str = include_str!("../fixtures/platform.qfg");
pub const OPERATIONS: &str = include_str!("../fixtures/operations.qu");

pub fn platform() -> PlatformConfig {
    parse_config(PLATFORM).unwrap()
}

/// Type-checks `src` (file `kernel.qu`) with the fixture operations available.
pub fn typed(src: &str, entry: &str) -> TypedProgram {
    let provider = MemProvider::default().with("lib/operations.qu", OPERATIONS);
    let input = CompileInput { roots: vec![("kernel.qu".into(), src.into())], search_paths: vec!["lib".into()] };
    match check(&input, &provider, &platform(), Some(entry)) {
        Ok(t) => t,
        Err(e) => panic!("{}", e.rendered),
    }
}

/// Type-checks `src` together with a generated `main` calling `op(args)`,
/// and lowers from `main`.
pub fn lowered_main(src: &str, op: &str, args: &[crate::ir::Value]) -> crate::ir::KernelIR {
    let kernel = typed(src, &format!("kernel.{op}"));
    let d = kernel.program.lookup(&format!("kernel.{op}")).unwrap();
    let params: Vec<crate::types::Type> = d.params().iter().map(|p| p.ty.clone()).collect();
    let main = crate::peval::generate_main("kernel", op, &params, d.ret(), args).unwrap();
    let provider = MemProvider::default().with("lib/operations.qu", OPERATIONS);
    let input = CompileInput {
        roots: vec![("kernel.qu".into(), src.into()), ("main.qu".into(), main)],
        search_paths: vec!["lib".into()],
    };
    let tp = match check(&input, &provider, &platform(), Some("kernel.main")) {
        Ok(t) => t,
        Err(e) => panic!("{}", e.rendered),
    };
    crate::lower::lower(&tp, "kernel.main")
}
