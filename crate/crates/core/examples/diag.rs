use tmm_core::execution::Arch;
use tmm_core::meta::*;
use tmm_core::models::by_name;

fn main() {
    let t0 = std::time::Instant::now();
    let w = check_monotonicity(&by_name("x86-tm").unwrap(), 4);
    eprintln!("x86 mono@4: witness={} ({:?})", w.is_some(), t0.elapsed());

    let t0 = std::time::Instant::now();
    let w = check_monotonicity(&by_name("cpp-tm").unwrap(), 4);
    eprintln!("cpp mono@4: witness={} ({:?})", w.is_some(), t0.elapsed());

    for tgt in [Arch::X86, Arch::Power, Arch::Armv8] {
        let t0 = std::time::Instant::now();
        let w = check_compilation(tgt, 4);
        eprintln!("compile cpp->{:?}@4: witness={} ({:?})", tgt, w.is_some(), t0.elapsed());
    }

    for (arch, fixed, bound) in [
        (Arch::X86, false, 6usize),
        (Arch::Power, false, 6),
        (Arch::Armv8, true, 6),
    ] {
        let t0 = std::time::Instant::now();
        let w = check_lock_elision(arch, fixed, bound).unwrap();
        eprintln!(
            "elision {:?} fixed={fixed} @{bound}: witness={} ({:?})",
            arch,
            w.is_some(),
            t0.elapsed()
        );
    }
}
