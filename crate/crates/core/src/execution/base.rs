use super::{Arch, EventKind, Execution, FenceFlavor, LockKind, Tags};
use crate::relalg::{EventSet, Rel, Value};

/// Names bound against every execution, in slot order. Event sets are
/// capitalised, relations lowercase; the fence-event sets (`SYNC`, ...) are
/// distinct from the derived fence relations (`sync`, ...).
pub const BASE_NAMES: [&str; 58] = [
    // event sets
    "E", "R", "W", "M", "F", "Acq", "Rel", "SC", "Ato", "X", "L", "U", "Lt", "Ut", "MFENCE",
    "SYNC", "LWSYNC", "ISYNC", "DMB", "DMBLD", "DMBST", "ISB",
    // relations
    "id", "po", "poloc", "podloc", "addr", "ctrl", "data", "rmw", "sloc", "rf", "rfe", "rfi",
    "co", "coe", "coi", "fr", "fre", "fri", "com", "come", "comi", "stxn", "satxn", "scr",
    "scrt", "mfence", "sync", "lwsync", "isync", "dmb", "dmbld", "dmbst", "isb", "ecom", "cnf",
    "unv",
];

pub fn base_index(name: &str) -> Option<usize> {
    BASE_NAMES.iter().position(|n| *n == name)
}

/// Compute the value of every base name for `x`, in [`BASE_NAMES`] order.
pub fn base_values(x: &Execution) -> Vec<Value> {
    let n = x.len();
    let mut out = Vec::with_capacity(BASE_NAMES.len());
    let tagset = |t: Tags| x.kind_set(|e| e.tags.has(t));

    // sets
    let reads = x.reads();
    let writes = x.writes();
    out.push(Value::Set(EventSet::full(n)));
    out.push(Value::Set(reads));
    out.push(Value::Set(writes));
    out.push(Value::Set(reads.union(&writes)));
    out.push(Value::Set(x.fences()));
    out.push(Value::Set(tagset(Tags::ACQ)));
    out.push(Value::Set(tagset(Tags::REL)));
    out.push(Value::Set(tagset(Tags::SC)));
    out.push(Value::Set(tagset(Tags::ATO)));
    out.push(Value::Set(tagset(Tags::EXCL)));
    out.push(Value::Set(x.lock_set(LockKind::Lock)));
    out.push(Value::Set(x.lock_set(LockKind::Unlock)));
    out.push(Value::Set(x.lock_set(LockKind::LockElided)));
    out.push(Value::Set(x.lock_set(LockKind::UnlockElided)));
    for f in FenceFlavor::ALL {
        out.push(Value::Set(x.kind_set(|e| e.kind == EventKind::Fence(f))));
    }

    // relations
    let sloc = x.sloc();
    let fr = x.derive_fr();
    let com = x.rf.union(&x.co).union(&fr);
    let posym = x.po.union(&x.po.inverse()).rtclos();
    let ext = |r: &Rel| r.diff(&posym);
    let int = |r: &Rel| r.inter(&posym);
    out.push(Value::Rel(Rel::identity(n)));
    out.push(Value::Rel(x.po));
    out.push(Value::Rel(x.po.inter(&sloc)));
    out.push(Value::Rel(x.po.diff(&sloc)));
    out.push(Value::Rel(x.addr));
    out.push(Value::Rel(x.ctrl));
    out.push(Value::Rel(x.data));
    out.push(Value::Rel(x.rmw));
    out.push(Value::Rel(sloc));
    out.push(Value::Rel(x.rf));
    out.push(Value::Rel(ext(&x.rf)));
    out.push(Value::Rel(int(&x.rf)));
    out.push(Value::Rel(x.co));
    out.push(Value::Rel(ext(&x.co)));
    out.push(Value::Rel(int(&x.co)));
    out.push(Value::Rel(fr));
    out.push(Value::Rel(ext(&fr)));
    out.push(Value::Rel(int(&fr)));
    out.push(Value::Rel(com));
    out.push(Value::Rel(ext(&com)));
    out.push(Value::Rel(int(&com)));
    out.push(Value::Rel(x.stxn));
    out.push(Value::Rel(x.satxn));
    let (scr, scrt) = if x.events.iter().any(|e| e.kind.is_lock()) {
        x.derive_scr()
    } else {
        (Rel::empty(n), Rel::empty(n))
    };
    out.push(Value::Rel(scr));
    out.push(Value::Rel(scrt));
    if x.events.iter().any(|e| e.kind.is_fence()) {
        for (_, r) in x.derive_fences() {
            out.push(Value::Rel(r));
        }
    } else {
        for _ in FenceFlavor::ALL {
            out.push(Value::Rel(Rel::empty(n)));
        }
    }
    // Conveniences shared by several models and test suites.
    out.push(Value::Rel(com.union(&x.co.seq(&x.rf)))); // ecom
    let w_lift = Rel::lift_set(&writes);
    let r_lift = Rel::lift_set(&reads);
    let cnf = w_lift
        .seq(&sloc)
        .seq(&w_lift)
        .union(&r_lift.seq(&sloc).seq(&w_lift))
        .union(&w_lift.seq(&sloc).seq(&r_lift))
        .diff(&Rel::identity(n));
    out.push(Value::Rel(cnf));
    out.push(Value::Rel(Rel::full(n))); // unv

    debug_assert_eq!(out.len(), BASE_NAMES.len());
    let _ = Arch::Sc;
    out
}
