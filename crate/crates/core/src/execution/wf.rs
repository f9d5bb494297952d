use super::{Arch, EventKind, Execution, LockKind, Tags};
use crate::relalg::{irreflexive, EventId, Rel};
use std::fmt;

/// Named well-formedness rules. Rules 1-9 are the structural conditions on
/// executions; `Values` and `TagsRule` cover the value-assignment and
/// per-architecture attribute conventions.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Rule {
    /// po is a union of per-thread strict total orders.
    Po,
    /// addr/ctrl/data are in po, originate at reads (ctrl may also start at
    /// the write of an rmw pair), have sensible targets, and ctrl is closed
    /// under po suffixes.
    Deps,
    /// rmw links a read to a po-adjacent write on the same location.
    Rmw,
    /// rf connects writes to same-location reads, at most one per read.
    Rf,
    /// co is a strict total order over the writes of each location.
    Co,
    /// location fields: memory and lock events carry one, fences do not.
    Sloc,
    /// stxn is a PER whose classes are po-contiguous within one thread.
    Stxn,
    /// satxn is a PER, contained in stxn, and closed under stxn.
    Satxn,
    /// lock calls are properly bracketed per thread, L with U and Lt with
    /// Ut on the same mutex, without nesting.
    Locks,
    /// writes carry distinct non-zero values per location; read values
    /// match their rf source (0 when reading the initial state).
    Values,
    /// tags and fence flavors fit the event kind and the architecture.
    TagsRule,
}

impl Rule {
    pub fn id(self) -> &'static str {
        match self {
            Rule::Po => "1",
            Rule::Deps => "2",
            Rule::Rmw => "3",
            Rule::Rf => "4",
            Rule::Co => "5",
            Rule::Sloc => "6",
            Rule::Stxn => "7",
            Rule::Satxn => "8",
            Rule::Locks => "9",
            Rule::Values => "values",
            Rule::TagsRule => "tags",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.id())
    }
}

#[derive(Clone, Debug)]
pub struct RuleViolation {
    pub rule: Rule,
    pub detail: String,
}

#[derive(Clone, Debug, Default)]
pub struct WellformednessReport {
    pub violations: Vec<RuleViolation>,
}

impl WellformednessReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violated_rules(&self) -> Vec<Rule> {
        let mut out: Vec<Rule> = Vec::new();
        for v in &self.violations {
            if !out.contains(&v.rule) {
                out.push(v.rule);
            }
        }
        out
    }
}

impl fmt::Display for WellformednessReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ok() {
            return write!(f, "well-formed");
        }
        for v in &self.violations {
            writeln!(f, "rule {}: {}", v.rule, v.detail)?;
        }
        Ok(())
    }
}

/// Check every well-formedness condition; failures are reported, never
/// raised.
pub fn validate_wellformed(x: &Execution) -> WellformednessReport {
    let mut rep = WellformednessReport::default();
    let n = x.len();
    let mut bad = |rule: Rule, detail: String| rep.violations.push(RuleViolation { rule, detail });

    // Rule 1: po strict total order per thread.
    if !irreflexive(&x.po) {
        bad(Rule::Po, "po is reflexive".into());
    }
    let po_t = x.po.tclos();
    if !irreflexive(&po_t) {
        bad(Rule::Po, "po has a cycle".into());
    } else {
        if x.po.seq(&x.po).diff(&x.po).len() != 0 {
            bad(Rule::Po, "po is not transitive".into());
        }
        // Comparability within each weakly-connected component.
        let sym = x.po.union(&x.po.inverse()).rtclos();
        for a in x.event_ids() {
            for b in x.event_ids() {
                if a < b && sym.contains(a, b) && !x.po.contains(a, b) && !x.po.contains(b, a) {
                    bad(Rule::Po, format!("events {a} and {b} share a thread but are po-incomparable"));
                }
            }
        }
    }

    // Rule 2: dependencies.
    let rmw_writes = x.rmw.range();
    for (name, dep) in [("addr", &x.addr), ("ctrl", &x.ctrl), ("data", &x.data)] {
        for (a, b) in dep.pairs() {
            if !x.po.contains(a, b) {
                bad(Rule::Deps, format!("{name} edge {a}->{b} not in po"));
            }
            let src = x.event(a);
            let src_ok = src.kind.is_read()
                || (name == "ctrl" && src.kind.is_write() && rmw_writes.contains(a));
            if !src_ok {
                bad(Rule::Deps, format!("{name} edge {a}->{b} does not originate at a read"));
            }
            let dst = x.event(b);
            match name {
                "data" if !dst.kind.is_write() => {
                    bad(Rule::Deps, format!("data edge {a}->{b} does not target a write"))
                }
                "addr" if !dst.kind.is_memory() => {
                    bad(Rule::Deps, format!("addr edge {a}->{b} does not target a memory access"))
                }
                _ => {}
            }
        }
    }
    if !x.ctrl.seq(&x.po).is_subset_of(&x.ctrl) {
        bad(Rule::Deps, "ctrl is not closed under po suffixes".into());
    }

    // Rule 3: rmw pairs. An rmw links the read of a read-modify-write to
    // its corresponding same-location write later in the thread; exclusives
    // may have unrelated events between the two halves. Each event belongs
    // to at most one pair.
    for (r, w) in x.rmw.pairs() {
        if !x.event(r).kind.is_read() || !x.event(w).kind.is_write() {
            bad(Rule::Rmw, format!("rmw edge {r}->{w} is not read-to-write"));
            continue;
        }
        if x.event(r).loc != x.event(w).loc {
            bad(Rule::Rmw, format!("rmw edge {r}->{w} crosses locations"));
        }
        if !x.po.contains(r, w) {
            bad(Rule::Rmw, format!("rmw edge {r}->{w} not in po"));
        }
    }
    for e in x.event_ids() {
        if x.rmw.row(e).count_ones() > 1 || x.rmw.inverse().row(e).count_ones() > 1 {
            bad(Rule::Rmw, format!("event {e} is part of more than one rmw pair"));
        }
    }

    // Rule 4: rf.
    let rf_inv = x.rf.inverse();
    for (w, r) in x.rf.pairs() {
        if !x.event(w).kind.is_write() || !x.event(r).kind.is_read() {
            bad(Rule::Rf, format!("rf edge {w}->{r} is not write-to-read"));
        } else if x.event(w).loc != x.event(r).loc {
            bad(Rule::Rf, format!("rf edge {w}->{r} crosses locations"));
        }
    }
    for r in x.event_ids() {
        if rf_inv.row(r).count_ones() > 1 {
            bad(Rule::Rf, format!("read {r} has multiple incoming rf edges"));
        }
    }

    // Rule 5: co total per location over writes.
    for (a, b) in x.co.pairs() {
        if !x.event(a).kind.is_write() || !x.event(b).kind.is_write() {
            bad(Rule::Co, format!("co edge {a}->{b} is not write-to-write"));
        } else if x.event(a).loc != x.event(b).loc {
            bad(Rule::Co, format!("co edge {a}->{b} crosses locations"));
        }
    }
    if !irreflexive(&x.co.tclos()) {
        bad(Rule::Co, "co has a cycle".into());
    } else if x.co.seq(&x.co).diff(&x.co).len() != 0 {
        bad(Rule::Co, "co is not transitive".into());
    } else {
        for a in x.event_ids() {
            for b in x.event_ids() {
                if a < b
                    && x.event(a).kind.is_write()
                    && x.event(b).kind.is_write()
                    && x.event(a).loc == x.event(b).loc
                    && !x.co.contains(a, b)
                    && !x.co.contains(b, a)
                {
                    bad(Rule::Co, format!("writes {a} and {b} on one location are co-incomparable"));
                }
            }
        }
    }

    // Rule 6: location fields.
    for e in x.event_ids() {
        let ev = x.event(e);
        match ev.kind {
            EventKind::Fence(_) if ev.loc.is_some() => {
                bad(Rule::Sloc, format!("fence {e} carries a location"))
            }
            EventKind::Read | EventKind::Write | EventKind::Lock(_) if ev.loc.is_none() => {
                bad(Rule::Sloc, format!("event {e} is missing a location"))
            }
            _ => {}
        }
    }

    // Rule 7: stxn.
    check_per(x, &x.stxn, Rule::Stxn, &mut rep);
    for class in super::classes_of_per(&x.stxn, n) {
        if let Some(detail) = class_contiguity_issue(x, &class) {
            rep.violations.push(RuleViolation { rule: Rule::Stxn, detail });
        }
    }

    // Rule 8: satxn.
    check_per(x, &x.satxn, Rule::Satxn, &mut rep);
    if !x.satxn.is_subset_of(&x.stxn) {
        rep.violations.push(RuleViolation {
            rule: Rule::Satxn,
            detail: "satxn is not contained in stxn".into(),
        });
    }
    if !x.satxn.seq(&x.stxn).is_subset_of(&x.satxn) {
        rep.violations.push(RuleViolation {
            rule: Rule::Satxn,
            detail: "satxn is not a union of whole stxn classes".into(),
        });
    }

    // Rule 9: lock bracketing.
    for thread in x.threads() {
        let mut open: Option<(LockKind, Option<u8>)> = None;
        for &e in &thread {
            if let EventKind::Lock(k) = x.event(e).kind {
                match (k.is_open(), &open) {
                    (true, None) => open = Some((k, x.event(e).loc)),
                    (true, Some(_)) => {
                        rep.violations.push(RuleViolation {
                            rule: Rule::Locks,
                            detail: format!("lock call {e} opens a nested critical region"),
                        });
                    }
                    (false, Some((ok, oloc))) => {
                        let matches = (*ok == LockKind::Lock && k == LockKind::Unlock)
                            || (*ok == LockKind::LockElided && k == LockKind::UnlockElided);
                        if !matches || *oloc != x.event(e).loc {
                            rep.violations.push(RuleViolation {
                                rule: Rule::Locks,
                                detail: format!("unlock {e} does not match its open lock call"),
                            });
                        }
                        open = None;
                    }
                    (false, None) => {
                        rep.violations.push(RuleViolation {
                            rule: Rule::Locks,
                            detail: format!("unlock {e} without an open critical region"),
                        });
                    }
                }
            }
        }
        if open.is_some() {
            rep.violations.push(RuleViolation {
                rule: Rule::Locks,
                detail: "critical region left open at end of thread".into(),
            });
        }
    }

    // Values.
    for a in x.event_ids() {
        for b in x.event_ids() {
            if a < b
                && x.event(a).kind.is_write()
                && x.event(b).kind.is_write()
                && x.event(a).loc == x.event(b).loc
                && x.event(a).value == x.event(b).value
            {
                rep.violations.push(RuleViolation {
                    rule: Rule::Values,
                    detail: format!("writes {a} and {b} store the same value to one location"),
                });
            }
        }
        let ev = x.event(a);
        if ev.kind.is_write() && ev.value == 0 {
            rep.violations.push(RuleViolation {
                rule: Rule::Values,
                detail: format!("write {a} stores zero"),
            });
        }
        if ev.kind.is_read() {
            let sources = rf_inv.row(a);
            let expect = if sources == 0 {
                0
            } else {
                x.events[sources.trailing_zeros() as usize].value
            };
            if ev.value != expect {
                rep.violations.push(RuleViolation {
                    rule: Rule::Values,
                    detail: format!("read {a} observes {} but its rf source dictates {expect}", ev.value),
                });
            }
        }
    }

    // Tags and architecture conventions.
    for e in x.event_ids() {
        let ev = x.event(e);
        let mut tag_bad = |msg: &str| {
            rep.violations.push(RuleViolation {
                rule: Rule::TagsRule,
                detail: format!("event {e}: {msg}"),
            })
        };
        if ev.tags.has(Tags::ACQ) && !(ev.kind.is_read() || ev.kind.is_lock()) {
            tag_bad("acq on a non-read");
        }
        if ev.tags.has(Tags::REL) && !(ev.kind.is_write() || ev.kind.is_lock()) {
            tag_bad("rel on a non-write");
        }
        if ev.tags.has(Tags::SC) && !ev.tags.has(Tags::ATO) {
            tag_bad("sc without ato");
        }
        if let EventKind::Fence(f) = ev.kind {
            if !x.arch.fence_flavors().contains(&f) {
                tag_bad(&format!("fence flavor {} not available on {}", f.name(), x.arch.name()));
            }
        }
        match x.arch {
            Arch::Sc | Arch::Tsc | Arch::X86 | Arch::Power => {
                if !ev.tags.without(Tags::EXCL).is_empty() {
                    tag_bad("ordering tags are not available on this architecture");
                }
            }
            Arch::Armv8 => {
                if ev.tags.has(Tags::SC) || ev.tags.has(Tags::ATO) {
                    tag_bad("sc/ato tags are not available on armv8");
                }
            }
            Arch::Cpp => {
                if ev.tags.has(Tags::EXCL) {
                    tag_bad("excl tag is not available on cpp");
                }
                if (ev.tags.has(Tags::ACQ) || ev.tags.has(Tags::REL)) && !ev.tags.has(Tags::ATO) {
                    tag_bad("acquire/release on a non-atomic access");
                }
            }
        }
        if ev.kind.is_lock() && !matches!(x.arch, Arch::X86 | Arch::Power | Arch::Armv8) {
            tag_bad("lock events are only modelled for hardware architectures");
        }
    }

    // Endpoint sanity shared by every relation.
    for (name, r) in [
        ("po", &x.po),
        ("addr", &x.addr),
        ("ctrl", &x.ctrl),
        ("data", &x.data),
        ("rmw", &x.rmw),
        ("rf", &x.rf),
        ("co", &x.co),
        ("stxn", &x.stxn),
        ("satxn", &x.satxn),
    ] {
        if r.universe_size() != n {
            rep.violations.push(RuleViolation {
                rule: Rule::Po,
                detail: format!("relation {name} has universe {} but execution has {n} events", r.universe_size()),
            });
        }
    }

    rep
}

fn check_per(x: &Execution, t: &Rel, rule: Rule, rep: &mut WellformednessReport) {
    if *t != t.inverse() {
        rep.violations.push(RuleViolation {
            rule,
            detail: "relation is not symmetric".into(),
        });
    }
    if !t.seq(t).is_subset_of(t) {
        rep.violations.push(RuleViolation {
            rule,
            detail: "relation is not transitive".into(),
        });
    }
    let _ = x;
}

/// A transaction class must be a po-contiguous run within one thread.
fn class_contiguity_issue(x: &Execution, class: &[EventId]) -> Option<String> {
    let first = class[0];
    for &m in class {
        let same_thread = m == first
            || x.po.contains(first, m)
            || x.po.contains(m, first);
        if !same_thread {
            return Some(format!("transaction spans threads (events {first} and {m})"));
        }
    }
    for &m in class {
        for mid in x.event_ids() {
            if class.contains(&mid) {
                continue;
            }
            for &m2 in class {
                if x.po.contains(m, mid) && x.po.contains(mid, m2) {
                    return Some(format!(
                        "transaction is not po-contiguous: event {mid} sits between {m} and {m2}"
                    ));
                }
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::execution::deserialize;

    #[test]
    fn fig1_is_wellformed() {
        let x = deserialize(
            "arch tsc\nevent 0 W x 1\nevent 1 R x 2\nevent 2 W x 2\nthread 0 1\nthread 2\nrf 2 1\nco 0 2\n",
        )
        .unwrap()
        .execution;
        let rep = validate_wellformed(&x);
        assert!(rep.ok(), "{rep}");
    }

    #[test]
    fn po_cycle_violates_rule_1() {
        let mut x = deserialize("arch sc\nevent 0 W x 1\nevent 1 R x 0\nthread 0 1\n")
            .unwrap()
            .execution;
        x.po.insert(crate::relalg::EventId(1), crate::relalg::EventId(0));
        let rep = validate_wellformed(&x);
        assert!(rep.violated_rules().contains(&Rule::Po), "{rep}");
    }

    #[test]
    fn non_contiguous_transaction_violates_rule_7() {
        // stxn class {e0,e2} skipping the po-middle e1
        let x = deserialize(
            "arch tsc\nevent 0 W x 1\nevent 1 W y 1\nevent 2 R x 1\nthread 0 1 2\nrf 0 2\nstxn { 0 2 }\n",
        )
        .unwrap()
        .execution;
        let rep = validate_wellformed(&x);
        assert!(rep.violated_rules().contains(&Rule::Stxn), "{rep}");
    }

    #[test]
    fn lock_sequencing_enforced() {
        let x = deserialize(
            "arch armv8\nevent 0 L m\nevent 1 Ut m\nthread 0 1\n",
        )
        .unwrap()
        .execution;
        let rep = validate_wellformed(&x);
        assert!(rep.violated_rules().contains(&Rule::Locks), "{rep}");
    }

    #[test]
    fn mismatched_read_value_is_flagged() {
        let x = deserialize(
            "arch sc\nevent 0 W x 1\nevent 1 R x 2\nthread 0\nthread 1\nrf 0 1\n",
        )
        .unwrap()
        .execution;
        let rep = validate_wellformed(&x);
        assert!(rep.violated_rules().contains(&Rule::Values), "{rep}");
    }
}
