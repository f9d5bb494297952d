use tmm_core::execution::Arch;
use tmm_core::models::by_name;
use tmm_core::synth::{summarize, Signature};

fn main() {
    let t0 = std::time::Instant::now();
    let m = by_name("x86-tm").unwrap();
    let b = by_name("x86").unwrap();
    let sig = Signature::for_arch(Arch::X86, 4);
    let table = summarize(&m, Some(&b), &sig);
    for row in &table.rows {
        println!("x86 |E|={}: forbid {} allow {}", row.events, row.forbid, row.allow);
    }
    println!("x86 txn histogram: {:?}", table.forbid_txn_histogram);
    println!("x86 took {:?}", t0.elapsed());

    let t0 = std::time::Instant::now();
    let m = by_name("power-tm").unwrap();
    let b = by_name("power").unwrap();
    let sig = Signature::for_arch(Arch::Power, 3);
    let table = summarize(&m, Some(&b), &sig);
    for row in &table.rows {
        println!("power |E|={}: forbid {} allow {}", row.events, row.forbid, row.allow);
    }
    println!("power took {:?}", t0.elapsed());
}
