//! Mapping-based metatheory checks: bounded searches for counterexamples
//! to transaction monotonicity, to the compilation of C++ transactions to
//! hardware, and to lock elision.
//!
//! Each check looks for a pair of executions related by a structure
//! mapping π where the source is forbidden and the target allowed — a
//! witness that the transformation can introduce new behaviour. Searches
//! enumerate the concrete side's ingredients exhaustively up to a bound,
//! so a `None` result means "no counterexample up to the bound", never
//! "verified".

use crate::execution::{
    per_from_classes, Arch, Event, EventKind, Execution, FenceFlavor, LockKind, Tags,
};
use crate::models::{by_name, Model, Verdict};
use crate::relalg::{EventId, Rel, MAX_EVENTS};
use crate::synth::{canonical_key, enumerate_chunk, parallel_chunks, Signature};
use rayon::prelude::*;

/// A source/target execution pair related by an event mapping, with both
/// verdicts. The mapping is a relation: lock-call events map to several
/// implementation events, vanished events (elided unlocks) to none.
#[derive(Clone, Debug)]
pub struct PiWitness {
    pub source: Execution,
    pub target: Execution,
    pub pi: Vec<(EventId, EventId)>,
    pub source_verdict: Verdict,
    pub target_verdict: Verdict,
}

impl PiWitness {
    /// Canonical key of the pair, for deduplication and stable ordering.
    pub fn key(&self) -> Vec<u64> {
        let mut k = canonical_key(&self.source);
        k.push(u64::MAX);
        k.extend(canonical_key(&self.target));
        k
    }
}

// ---------------------------------------------------------------------------
// Monotonicity
// ---------------------------------------------------------------------------

/// Restrictions of the stxn-addition search to the three pictured program
/// transformations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MonoPattern {
    /// Any addition of stxn edges.
    Any,
    /// A new transaction over previously untransactional events.
    Introduce,
    /// One existing transaction absorbs more events.
    Enlarge,
    /// Two adjacent transactions merge into one.
    Coalesce,
}

/// Search for an inconsistent execution that becomes consistent when stxn
/// edges are added. Returns every witness (capped), in canonical order;
/// the head is the reported counterexample.
pub fn monotonicity_witnesses(m: &Model, bound: usize, pattern: MonoPattern) -> Vec<PiWitness> {
    let sig = Signature::for_arch(m.arch, bound);
    let chunks = parallel_chunks(&sig);
    let mut all: Vec<PiWitness> = chunks
        .par_iter()
        .flat_map_iter(|(sizes, kinds)| {
            let checker = m.checker().expect("model compiles");
            let mut found: Vec<PiWitness> = Vec::new();
            enumerate_chunk(&sig, sizes, kinds, &mut |x| {
                if found.len() >= 8 || checker.consistent(x) {
                    return;
                }
                for y in stxn_extensions(x, pattern) {
                    if checker.consistent(&y) {
                        let pi = x.event_ids().map(|e| (e, e)).collect();
                        found.push(PiWitness {
                            source_verdict: m.check(x).unwrap(),
                            target_verdict: m.check(&y).unwrap(),
                            source: x.clone(),
                            target: y,
                            pi,
                        });
                        break;
                    }
                }
            });
            found
        })
        .collect();
    all.sort_by_key(|w| (w.source.len(), w.key()));
    all.dedup_by_key(|w| w.key());
    all
}

/// First witness in canonical order, if any.
pub fn check_monotonicity(m: &Model, bound: usize) -> Option<PiWitness> {
    monotonicity_witnesses(m, bound, MonoPattern::Any).into_iter().next()
}

/// All well-formed stxn relations strictly extending `x.stxn`, filtered by
/// the pattern.
fn stxn_extensions(x: &Execution, pattern: MonoPattern) -> Vec<Execution> {
    let threads = x.threads();
    let old_classes = x.stxn_classes();
    let mut out = Vec::new();
    for structure in all_txn_structures(&threads) {
        let classes: Vec<Vec<EventId>> = structure;
        let stxn = per_from_classes(x.len(), &classes);
        if !x.stxn.is_subset_of(&stxn) || stxn == x.stxn {
            continue;
        }
        let ok = match pattern {
            MonoPattern::Any => true,
            MonoPattern::Introduce => {
                classes.len() == old_classes.len() + 1
                    && old_classes.iter().all(|c| classes.contains(c))
            }
            MonoPattern::Enlarge => {
                classes.len() == old_classes.len()
                    && old_classes
                        .iter()
                        .filter(|c| !classes.contains(c))
                        .count()
                        == 1
            }
            MonoPattern::Coalesce => {
                classes.len() + 1 == old_classes.len()
                    && old_classes
                        .iter()
                        .filter(|c| !classes.contains(c))
                        .count()
                        == 2
            }
        };
        if !ok {
            continue;
        }
        let mut y = x.clone();
        y.stxn = stxn;
        // Atomic-transaction markings must stay inside classes; keep only
        // those still closed under the new stxn.
        if !y.satxn.seq(&y.stxn).is_subset_of(&y.satxn) {
            continue;
        }
        out.push(y);
    }
    out
}

/// Every set of disjoint po-contiguous runs over the given threads.
fn all_txn_structures(threads: &[Vec<EventId>]) -> Vec<Vec<Vec<EventId>>> {
    fn per_thread(thread: &[EventId]) -> Vec<Vec<Vec<EventId>>> {
        fn go(pos: usize, t: &[EventId]) -> Vec<Vec<Vec<EventId>>> {
            if pos == t.len() {
                return vec![Vec::new()];
            }
            let mut out = Vec::new();
            for rest in go(pos + 1, t) {
                out.push(rest);
            }
            for k in 1..=(t.len() - pos) {
                let run: Vec<EventId> = t[pos..pos + k].to_vec();
                for rest in go(pos + k, t) {
                    let mut v = vec![run.clone()];
                    v.extend(rest);
                    out.push(v);
                }
            }
            out
        }
        go(0, thread)
    }
    let mut acc: Vec<Vec<Vec<EventId>>> = vec![Vec::new()];
    for t in threads {
        let per = per_thread(t);
        let mut next = Vec::new();
        for base in &acc {
            for p in &per {
                let mut v = base.clone();
                v.extend(p.iter().cloned());
                next.push(v);
            }
        }
        acc = next;
    }
    acc
}

// ---------------------------------------------------------------------------
// Compilation of C++ transactions to hardware
// ---------------------------------------------------------------------------

/// Per-event emission of the baseline compilation scheme. The transaction
/// structure is preserved: a source class maps onto all events emitted for
/// its members.
#[derive(Clone, Debug, Default)]
struct Emission {
    pre: Vec<FenceFlavor>,
    tags: Tags,
    post: Vec<FenceFlavor>,
    /// ctrl edge from the emitted read to the post fence (the
    /// branch-then-isync idiom).
    ctrl_to_post: bool,
}

fn emit_access(target: Arch, kind: EventKind, tags: Tags) -> Emission {
    let sc = tags.has(Tags::SC);
    let acq = tags.has(Tags::ACQ);
    let rel = tags.has(Tags::REL);
    match (target, kind) {
        (Arch::X86, EventKind::Read) => Emission::default(),
        (Arch::X86, EventKind::Write) => Emission {
            post: if sc { vec![FenceFlavor::Mfence] } else { vec![] },
            ..Default::default()
        },
        (Arch::Power, EventKind::Read) => Emission {
            pre: if sc { vec![FenceFlavor::Sync] } else { vec![] },
            post: if acq { vec![FenceFlavor::Isync] } else { vec![] },
            ctrl_to_post: acq,
            ..Default::default()
        },
        (Arch::Power, EventKind::Write) => Emission {
            pre: if sc {
                vec![FenceFlavor::Sync]
            } else if rel {
                vec![FenceFlavor::Lwsync]
            } else {
                vec![]
            },
            ..Default::default()
        },
        (Arch::Armv8, EventKind::Read) => Emission {
            tags: if acq { Tags::ACQ } else { Tags::NONE },
            ..Default::default()
        },
        (Arch::Armv8, EventKind::Write) => Emission {
            tags: if rel { Tags::REL } else { Tags::NONE },
            ..Default::default()
        },
        _ => Emission::default(),
    }
}

/// Apply the compilation scheme to a C++ execution. Reads and writes map
/// to single accesses with mode-dependent fences and tags; rmw pairs keep
/// their edge with the pair's fences outside the exclusives; transactions
/// map onto transactions.
pub fn compile(x: &Execution, target: Arch) -> Option<(Execution, Vec<(EventId, EventId)>)> {
    struct Slot {
        kind: EventKind,
        loc: Option<u8>,
        value: u32,
        tags: Tags,
        txn: Option<usize>,
    }
    let classes = x.stxn_classes();
    let class_of = |e: EventId| classes.iter().position(|c| c.contains(&e));
    let mut slots: Vec<Slot> = Vec::new();
    let mut image: Vec<Option<usize>> = vec![None; x.len()];
    let mut ctrl_isync: Vec<(usize, usize)> = Vec::new();

    for thread in x.threads() {
        let mut i = 0;
        while i < thread.len() {
            let e = thread[i];
            let ev = x.event(e);
            // rmw pairs emit as one unit: pre fences, read, write, post.
            let paired = thread
                .get(i + 1)
                .copied()
                .filter(|&w| x.rmw.contains(e, w));
            let (events, tags_for_emit): (Vec<EventId>, Tags) = match paired {
                Some(w) => (vec![e, w], ev.tags.with(x.event(w).tags)),
                None => (vec![e], ev.tags),
            };
            let em = emit_access(target, x.event(*events.last().unwrap()).kind, tags_for_emit);
            let em_first = emit_access(target, ev.kind, tags_for_emit);
            let txn = class_of(e);
            for f in &em_first.pre {
                slots.push(Slot {
                    kind: EventKind::Fence(*f),
                    loc: None,
                    value: 0,
                    tags: Tags::NONE,
                    txn,
                });
            }
            let mut read_slot = None;
            for &s in &events {
                let sv = x.event(s);
                let slot = slots.len();
                image[s.index()] = Some(slot);
                if sv.kind.is_read() {
                    read_slot = Some(slot);
                }
                slots.push(Slot {
                    kind: sv.kind,
                    loc: sv.loc,
                    value: sv.value,
                    tags: if sv.kind.is_read() {
                        em_first.tags
                    } else {
                        em.tags
                    },
                    txn: class_of(s),
                });
            }
            for f in &em.post {
                let slot = slots.len();
                if em.ctrl_to_post {
                    if let Some(r) = read_slot {
                        ctrl_isync.push((r, slot));
                    }
                }
                slots.push(Slot {
                    kind: EventKind::Fence(*f),
                    loc: None,
                    value: 0,
                    tags: Tags::NONE,
                    txn,
                });
            }
            i += events.len();
        }
        // thread boundary marker: remember length via sentinel below
        slots.push(Slot {
            kind: EventKind::Fence(FenceFlavor::Isb),
            loc: None,
            value: u32::MAX,
            tags: Tags::NONE,
            txn: None,
        });
    }

    // Split on sentinels into threads.
    let mut threads_slots: Vec<Vec<usize>> = vec![Vec::new()];
    let mut kept: Vec<usize> = Vec::new();
    for (i, s) in slots.iter().enumerate() {
        if s.value == u32::MAX && matches!(s.kind, EventKind::Fence(FenceFlavor::Isb)) {
            threads_slots.push(Vec::new());
        } else {
            threads_slots.last_mut().unwrap().push(i);
            kept.push(i);
        }
    }
    threads_slots.retain(|t| !t.is_empty());
    let n = kept.len();
    if n > MAX_EVENTS {
        return None;
    }
    let new_of_slot = |slot: usize| kept.iter().position(|&k| k == slot).unwrap();

    let mut events = Vec::with_capacity(n);
    for (new, &slot) in kept.iter().enumerate() {
        let s = &slots[slot];
        events.push(Event {
            id: EventId(new as u8),
            kind: s.kind,
            loc: s.loc,
            value: s.value,
            tags: s.tags,
        });
    }
    let mut y = Execution {
        arch: target,
        events,
        po: Rel::empty(n),
        addr: Rel::empty(n),
        ctrl: Rel::empty(n),
        data: Rel::empty(n),
        rmw: Rel::empty(n),
        rf: Rel::empty(n),
        co: Rel::empty(n),
        stxn: Rel::empty(n),
        satxn: Rel::empty(n),
    };
    for t in &threads_slots {
        for (i, &a) in t.iter().enumerate() {
            for &b in &t[i + 1..] {
                y.po.insert(EventId(new_of_slot(a) as u8), EventId(new_of_slot(b) as u8));
            }
        }
    }
    let map_e = |e: EventId| EventId(new_of_slot(image[e.index()].unwrap()) as u8);
    for (r, rel_src) in [
        (&mut y.addr, &x.addr),
        (&mut y.data, &x.data),
        (&mut y.ctrl, &x.ctrl),
        (&mut y.rmw, &x.rmw),
        (&mut y.rf, &x.rf),
        (&mut y.co, &x.co),
    ] {
        for (a, b) in rel_src.pairs() {
            r.insert(map_e(a), map_e(b));
        }
    }
    for (r, f) in ctrl_isync {
        y.ctrl
            .insert(EventId(new_of_slot(r) as u8), EventId(new_of_slot(f) as u8));
    }
    y.ctrl = y.ctrl.seq(&y.po.rtclos());
    // Transactions: a class maps onto every event emitted for its members.
    let mut y_classes: Vec<Vec<EventId>> = vec![Vec::new(); classes.len()];
    for (slot_idx, s) in slots.iter().enumerate() {
        if let Some(c) = s.txn {
            if s.value != u32::MAX {
                y_classes[c].push(EventId(new_of_slot(slot_idx) as u8));
            }
        }
    }
    y.stxn = per_from_classes(n, &y_classes);
    y.refresh_read_values();

    let pi = x
        .event_ids()
        .map(|e| (e, map_e(e)))
        .collect();
    Some((y, pi))
}

/// Search for an inconsistent C++ execution whose compiled image is
/// consistent on the target. `bound` limits source events.
pub fn compilation_witnesses(target: Arch, bound: usize) -> Vec<PiWitness> {
    let src_model = by_name("cpp-tm").unwrap();
    let tgt_model = by_name(&format!("{}-tm", target.name())).unwrap();
    let sig = Signature::for_arch(Arch::Cpp, bound);
    let chunks = parallel_chunks(&sig);
    let mut all: Vec<PiWitness> = chunks
        .par_iter()
        .flat_map_iter(|(sizes, kinds)| {
            let src_checker = src_model.checker().unwrap();
            let tgt_checker = tgt_model.checker().unwrap();
            let mut found: Vec<PiWitness> = Vec::new();
            enumerate_chunk(&sig, sizes, kinds, &mut |x| {
                if found.len() >= 4 || src_checker.consistent(x) {
                    return;
                }
                let Some((y, pi)) = compile(x, target) else {
                    return;
                };
                if tgt_checker.consistent(&y) {
                    found.push(PiWitness {
                        source_verdict: src_model.check(x).unwrap(),
                        target_verdict: tgt_model.check(&y).unwrap(),
                        source: x.clone(),
                        target: y,
                        pi,
                    });
                }
            });
            found
        })
        .collect();
    all.sort_by_key(|w| (w.source.len(), w.key()));
    all.dedup_by_key(|w| w.key());
    all
}

pub fn check_compilation(target: Arch, bound: usize) -> Option<PiWitness> {
    compilation_witnesses(target, bound).into_iter().next()
}

// ---------------------------------------------------------------------------
// Lock elision
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, thiserror::Error)]
pub enum MetaError {
    #[error("lock elision is only modelled for x86, Power and ARMv8 (got {0:?})")]
    UnsupportedArch(Arch),
    #[error("the lock fix is specific to ARMv8")]
    FixNotApplicable,
}

/// Search for a lock-elision soundness counterexample: an abstract
/// execution forbidden by the architecture model plus critical-region
/// serialisability, whose lock-expansion image is consistent. `bound`
/// limits target (concrete) events.
pub fn elision_witnesses(arch: Arch, fixed: bool, bound: usize) -> Result<Vec<PiWitness>, MetaError> {
    if !matches!(arch, Arch::X86 | Arch::Power | Arch::Armv8) {
        return Err(MetaError::UnsupportedArch(arch));
    }
    if fixed && arch != Arch::Armv8 {
        return Err(MetaError::FixNotApplicable);
    }
    let src_model = by_name(&format!("{}-tm+crorder", arch.name())).unwrap();
    let tgt_model = by_name(&format!("{}-tm", arch.name())).unwrap();

    let skeletons = abstract_skeletons(arch, fixed, bound);
    let mut all: Vec<PiWitness> = skeletons
        .par_iter()
        .flat_map_iter(|skel| {
            let arch_checker = tgt_model.checker().unwrap();
            let tgt_checker = tgt_model.checker().unwrap();
            let mut found: Vec<PiWitness> = Vec::new();
            expand_abstract(skel, &mut |x| {
                if found.len() >= 32 {
                    return;
                }
                // A witness source must break critical-region
                // serialisability while satisfying the architecture axioms
                // on its own: memory-event inconsistencies transport to the
                // expansion (which only adds ordering), so such sources can
                // never map to a consistent target.
                let (scr, _) = x.derive_scr();
                let cr_order = crate::relalg::weaklift(&x.po.union(&x.derive_com()), &scr);
                if crate::relalg::acyclic(&cr_order) {
                    return;
                }
                if !arch_checker.consistent(x) {
                    return;
                }
                for_each_expansion(x, arch, fixed, bound, &mut |y, pi| {
                    if tgt_checker.consistent(y) {
                        found.push(PiWitness {
                            source_verdict: src_model.check(x).unwrap(),
                            target_verdict: tgt_model.check(y).unwrap(),
                            source: x.clone(),
                            target: y.clone(),
                            pi: pi.to_vec(),
                        });
                        true
                    } else {
                        false
                    }
                });
            });
            found
        })
        .collect();
    all.sort_by_key(|w| (w.target.len(), w.key()));
    all.dedup_by_key(|w| w.key());
    Ok(all)
}

pub fn check_lock_elision(arch: Arch, fixed: bool, bound: usize) -> Result<Option<PiWitness>, MetaError> {
    Ok(elision_witnesses(arch, fixed, bound)?.into_iter().next())
}

/// Cost of one abstract event after expansion.
fn expansion_cost(arch: Arch, fixed: bool, kind: EventKind) -> usize {
    match kind {
        EventKind::Lock(LockKind::Lock) => match (arch, fixed) {
            (Arch::X86, _) => 3,
            (Arch::Power, _) => 3,
            (Arch::Armv8, false) => 2,
            (Arch::Armv8, true) => 3,
            _ => unreachable!(),
        },
        EventKind::Lock(LockKind::Unlock) => match arch {
            Arch::Power => 2,
            _ => 1,
        },
        EventKind::Lock(LockKind::LockElided) => 1,
        EventKind::Lock(LockKind::UnlockElided) => 0,
        _ => 1,
    }
}

/// One abstract-thread item.
#[derive(Clone, Debug)]
enum Item {
    Mem,
    Cr { elided: bool, body: usize },
}

#[derive(Clone, Debug)]
struct Skeleton {
    arch: Arch,
    threads: Vec<Vec<Item>>,
}

/// Thread shapes: per thread one critical region (body up to two
/// accesses) with optionally one standalone access before or after it, at
/// most one standalone access in the whole skeleton, one or two threads,
/// at least one critical region, all within the expansion budget. This
/// covers every witness shape expressible at desk-scale bounds.
fn abstract_skeletons(arch: Arch, fixed: bool, bound: usize) -> Vec<Skeleton> {
    let item_cost = |it: &Item| match it {
        Item::Mem => 1,
        Item::Cr { elided, body } => {
            let (l, u) = if *elided {
                (
                    expansion_cost(arch, fixed, EventKind::Lock(LockKind::LockElided)),
                    expansion_cost(arch, fixed, EventKind::Lock(LockKind::UnlockElided)),
                )
            } else {
                (
                    expansion_cost(arch, fixed, EventKind::Lock(LockKind::Lock)),
                    expansion_cost(arch, fixed, EventKind::Lock(LockKind::Unlock)),
                )
            };
            l + u + body
        }
    };
    // (items, expansion cost, standalone-access count)
    let mut seqs: Vec<(Vec<Item>, usize, usize)> = Vec::new();
    for elided in [false, true] {
        for body in 0..=2usize {
            let cr = Item::Cr { elided, body };
            let c = item_cost(&cr);
            seqs.push((vec![cr.clone()], c, 0));
            seqs.push((vec![Item::Mem, cr.clone()], c + 1, 1));
            seqs.push((vec![cr.clone(), Item::Mem], c + 1, 1));
        }
    }
    seqs.push((vec![Item::Mem], 1, 1));
    let mut out = Vec::new();
    for (i0, (t0, c0, m0)) in seqs.iter().enumerate() {
        if matches!(t0.as_slice(), [Item::Mem]) {
            continue; // a lone access can only be the second thread
        }
        for (t1, c1, m1) in &seqs[i0..] {
            if c0 + c1 > bound || m0 + m1 > 1 {
                continue;
            }
            let threads = vec![t0.clone(), t1.clone()];
            out.push(Skeleton { arch, threads });
        }
        if c0 + 0 <= bound {
            out.push(Skeleton { arch, threads: vec![t0.clone()] });
        }
    }
    out
}

/// Expand a skeleton into concrete abstract executions: read/write kinds
/// and data locations for the accesses, dependencies within each thread,
/// and every rf/co choice. Streams through the callback.
fn expand_abstract(skel: &Skeleton, f: &mut impl FnMut(&Execution)) {
    // Thread-major layout: lock events inline, memory accesses as slots.
    let mut kinds_fixed: Vec<Option<LockKind>> = Vec::new();
    let mut mem_slot: Vec<Option<usize>> = Vec::new();
    let mut thread_of: Vec<usize> = Vec::new();
    let mut mem_slots = 0usize;
    for (ti, t) in skel.threads.iter().enumerate() {
        for item in t {
            match item {
                Item::Mem => {
                    kinds_fixed.push(None);
                    mem_slot.push(Some(mem_slots));
                    thread_of.push(ti);
                    mem_slots += 1;
                }
                Item::Cr { elided, body } => {
                    kinds_fixed.push(Some(if *elided { LockKind::LockElided } else { LockKind::Lock }));
                    mem_slot.push(None);
                    thread_of.push(ti);
                    for _ in 0..*body {
                        kinds_fixed.push(None);
                        mem_slot.push(Some(mem_slots));
                        thread_of.push(ti);
                        mem_slots += 1;
                    }
                    kinds_fixed.push(Some(if *elided { LockKind::UnlockElided } else { LockKind::Unlock }));
                    mem_slot.push(None);
                    thread_of.push(ti);
                }
            }
        }
    }
    let n = kinds_fixed.len();
    if n > MAX_EVENTS {
        return;
    }

    let mut po = Rel::empty(n);
    for a in 0..n {
        for b in a + 1..n {
            if thread_of[a] == thread_of[b] {
                po.insert(EventId(a as u8), EventId(b as u8));
            }
        }
    }
    let po_rt = po.rtclos();

    let mut kind_choice = vec![0usize; mem_slots]; // 0 = read, 1 = write
    loop {
        let mut locs = vec![0usize; mem_slots];
        loop {
            let mut rgs = true;
            let mut maxv = 0usize;
            for (i, &l) in locs.iter().enumerate() {
                if i == 0 {
                    rgs = l == 0;
                } else if l > maxv + 1 {
                    rgs = false;
                }
                if !rgs {
                    break;
                }
                maxv = maxv.max(l);
            }
            if rgs {
                let kind_of = |i: usize| -> EventKind {
                    match kinds_fixed[i] {
                        Some(lk) => EventKind::Lock(lk),
                        None => {
                            if kind_choice[mem_slot[i].unwrap()] == 0 {
                                EventKind::Read
                            } else {
                                EventKind::Write
                            }
                        }
                    }
                };
                let loc_of = |i: usize| -> Option<u8> {
                    match kinds_fixed[i] {
                        Some(_) => Some(100),
                        None => Some(locs[mem_slot[i].unwrap()] as u8),
                    }
                };
                expand_relations(skel.arch, n, &thread_of, &kind_of, &loc_of, &po, &po_rt, f);
            }
            if !bump(&mut locs, mem_slots.max(1)) {
                break;
            }
        }
        if mem_slots == 0 || !bump(&mut kind_choice, 2) {
            break;
        }
    }
}

fn bump(v: &mut [usize], base: usize) -> bool {
    for i in (0..v.len()).rev() {
        v[i] += 1;
        if v[i] < base {
            return true;
        }
        v[i] = 0;
    }
    false
}

#[allow(clippy::too_many_arguments)]
fn expand_relations(
    arch: Arch,
    n: usize,
    thread_of: &[usize],
    kind_of: &dyn Fn(usize) -> EventKind,
    loc_of: &dyn Fn(usize) -> Option<u8>,
    po: &Rel,
    po_rt: &Rel,
    f: &mut impl FnMut(&Execution),
) {
    let mems: Vec<usize> = (0..n).filter(|&i| kind_of(i).is_memory()).collect();
    let reads: Vec<usize> = mems.iter().copied().filter(|&i| kind_of(i).is_read()).collect();
    let writes: Vec<usize> = mems.iter().copied().filter(|&i| kind_of(i).is_write()).collect();

    // Dependencies: data (read -> later write, same thread) and ctrl (read
    // -> po suffix). addr adds nothing the models distinguish here beyond
    // data at these sizes, so the generator sticks to data and ctrl.
    let data_targets: Vec<Vec<usize>> = reads
        .iter()
        .map(|&r| {
            writes
                .iter()
                .copied()
                .filter(|&w| thread_of[w] == thread_of[r] && r < w)
                .collect()
        })
        .collect();
    let ctrl_cuts: Vec<Vec<Option<usize>>> = reads
        .iter()
        .map(|&r| {
            let mut opts = vec![None];
            for c in r + 1..n {
                if thread_of[c] == thread_of[r] {
                    opts.push(Some(c));
                }
            }
            opts
        })
        .collect();
    let rf_opts: Vec<Vec<Option<usize>>> = reads
        .iter()
        .map(|&r| {
            let mut opts = vec![None];
            for &w in &writes {
                if loc_of(w) == loc_of(r) {
                    opts.push(Some(w));
                }
            }
            opts
        })
        .collect();
    let mut writes_per_loc: Vec<(u8, Vec<usize>)> = Vec::new();
    for &w in &writes {
        let l = loc_of(w).unwrap();
        match writes_per_loc.iter_mut().find(|(ll, _)| *ll == l) {
            Some((_, v)) => v.push(w),
            None => writes_per_loc.push((l, vec![w])),
        }
    }
    writes_per_loc.sort_by_key(|(l, _)| *l);
    let co_orders: Vec<Vec<Vec<usize>>> = writes_per_loc.iter().map(|(_, ws)| perms(ws)).collect();

    let data_sizes: Vec<usize> = data_targets.iter().map(|t| 1 << t.len()).collect();
    let ctrl_sizes: Vec<usize> = ctrl_cuts.iter().map(|o| o.len()).collect();
    let rf_sizes: Vec<usize> = rf_opts.iter().map(|o| o.len()).collect();
    let co_sizes: Vec<usize> = co_orders.iter().map(|o| o.len()).collect();

    let mut data_choice = vec![0usize; reads.len()];
    loop {
        let mut ctrl_choice = vec![0usize; reads.len()];
        loop {
            let mut data = Rel::empty(n);
            let mut ctrl = Rel::empty(n);
            for (ri, &r) in reads.iter().enumerate() {
                for (bit, &w) in data_targets[ri].iter().enumerate() {
                    if data_choice[ri] & (1 << bit) != 0 {
                        data.insert(EventId(r as u8), EventId(w as u8));
                    }
                }
                if let Some(cut) = ctrl_cuts[ri][ctrl_choice[ri]] {
                    for b in cut..n {
                        if thread_of[b] == thread_of[r] {
                            ctrl.insert(EventId(r as u8), EventId(b as u8));
                        }
                    }
                }
            }
            let mut rf_choice = vec![0usize; reads.len()];
            loop {
                let mut rf = Rel::empty(n);
                for (ri, &r) in reads.iter().enumerate() {
                    if let Some(w) = rf_opts[ri][rf_choice[ri]] {
                        rf.insert(EventId(w as u8), EventId(r as u8));
                    }
                }
                let mut co_choice = vec![0usize; co_orders.len()];
                loop {
                    let mut co = Rel::empty(n);
                    for (li, orders) in co_orders.iter().enumerate() {
                        let order = &orders[co_choice[li]];
                        for (i, &a) in order.iter().enumerate() {
                            for &b in &order[i + 1..] {
                                co.insert(EventId(a as u8), EventId(b as u8));
                            }
                        }
                    }
                    let mut events = Vec::with_capacity(n);
                    for i in 0..n {
                        events.push(Event {
                            id: EventId(i as u8),
                            kind: kind_of(i),
                            loc: if kind_of(i).is_fence() { None } else { loc_of(i) },
                            value: 0,
                            tags: Tags::NONE,
                        });
                    }
                    let mut x = Execution {
                        arch,
                        events,
                        po: *po,
                        addr: Rel::empty(n),
                        ctrl: ctrl.seq(po_rt),
                        data,
                        rmw: Rel::empty(n),
                        rf,
                        co,
                        stxn: Rel::empty(n),
                        satxn: Rel::empty(n),
                    };
                    for i in 0..n {
                        if x.events[i].kind.is_write() {
                            let e = EventId(i as u8);
                            let before = x.event_ids().filter(|&g| x.co.contains(g, e)).count() as u32;
                            x.events[i].value = before + 1;
                        }
                    }
                    x.refresh_read_values();
                    f(&x);
                    if !bump_mixed(&mut co_choice, &co_sizes) {
                        break;
                    }
                }
                if !bump_mixed(&mut rf_choice, &rf_sizes) {
                    break;
                }
            }
            if !bump_mixed(&mut ctrl_choice, &ctrl_sizes) {
                break;
            }
        }
        if !bump_mixed(&mut data_choice, &data_sizes) {
            break;
        }
    }
}

fn bump_mixed(v: &mut [usize], bases: &[usize]) -> bool {
    for i in (0..v.len()).rev() {
        v[i] += 1;
        if v[i] < bases[i] {
            return true;
        }
        v[i] = 0;
    }
    false
}

fn perms(items: &[usize]) -> Vec<Vec<usize>> {
    if items.is_empty() {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for (i, &x) in items.iter().enumerate() {
        let mut rest: Vec<usize> = items.to_vec();
        rest.remove(i);
        for mut p in perms(&rest) {
            let mut v = vec![x];
            v.append(&mut p);
            out.push(v);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Lock expansion
// ---------------------------------------------------------------------------

/// Expand an abstract execution's lock calls into their implementations
/// and enumerate the lock variable's rf/co, streaming each candidate over
/// one scratch execution; the callback returns `true` to stop.
/// Lock-protocol reads (the spinlock's test/exclusive reads and the
/// elided lock's check) may read the initial state or an unlock write,
/// never a lock-taking write: a successful acquire and an elidable region
/// both see the lock free.
fn for_each_expansion(
    x: &Execution,
    arch: Arch,
    fixed: bool,
    bound: usize,
    f: &mut impl FnMut(&Execution, &[(EventId, EventId)]) -> bool,
) {
    struct Slot {
        kind: EventKind,
        loc: Option<u8>,
        tags: Tags,
        /// lock-variable role
        role: MRole,
        txn: Option<usize>,
    }
    #[derive(Clone, Copy, PartialEq, Eq)]
    enum MRole {
        None,
        LockRead,
        LockWrite,
        UnlockWrite,
    }

    let (scr, scrt) = x.derive_scr();
    let cr_classes = crate::execution::classes_of_per(&scr, x.len());
    let elided_class_of = |e: EventId| -> Option<usize> {
        if scrt.contains(e, e) {
            cr_classes.iter().position(|c| c.contains(&e))
        } else {
            None
        }
    };

    let mut slots: Vec<Slot> = Vec::new();
    let mut threads_slots: Vec<Vec<usize>> = Vec::new();
    let mut image_first: Vec<Option<usize>> = vec![None; x.len()];
    let mut pi: Vec<(EventId, EventId)> = Vec::new();
    let mut rmw_pairs: Vec<(usize, usize)> = Vec::new();
    let mut ctrl_extra: Vec<(usize, usize)> = Vec::new();

    for thread in x.threads() {
        let mut tslots = Vec::new();
        for &e in &thread {
            let ev = x.event(e);
            let txn = elided_class_of(e);
            let start = slots.len();
            match ev.kind {
                EventKind::Lock(LockKind::Lock) => match (arch, fixed) {
                    (Arch::X86, _) => {
                        slots.push(Slot { kind: EventKind::Read, loc: Some(100), tags: Tags::NONE, role: MRole::LockRead, txn });
                        slots.push(Slot { kind: EventKind::Read, loc: Some(100), tags: Tags::NONE, role: MRole::LockRead, txn });
                        slots.push(Slot { kind: EventKind::Write, loc: Some(100), tags: Tags::NONE, role: MRole::LockWrite, txn });
                        ctrl_extra.push((start, start + 1));
                        rmw_pairs.push((start + 1, start + 2));
                    }
                    (Arch::Power, _) => {
                        slots.push(Slot { kind: EventKind::Read, loc: Some(100), tags: Tags::NONE, role: MRole::LockRead, txn });
                        slots.push(Slot { kind: EventKind::Write, loc: Some(100), tags: Tags::NONE, role: MRole::LockWrite, txn });
                        slots.push(Slot { kind: EventKind::Fence(FenceFlavor::Isync), loc: None, tags: Tags::NONE, role: MRole::None, txn });
                        rmw_pairs.push((start, start + 1));
                        ctrl_extra.push((start, start + 1));
                        // the branch on the store-exclusive's status guards the isync
                        ctrl_extra.push((start + 1, start + 2));
                    }
                    (Arch::Armv8, false) => {
                        slots.push(Slot { kind: EventKind::Read, loc: Some(100), tags: Tags::ACQ, role: MRole::LockRead, txn });
                        slots.push(Slot { kind: EventKind::Write, loc: Some(100), tags: Tags::NONE, role: MRole::LockWrite, txn });
                        rmw_pairs.push((start, start + 1));
                        ctrl_extra.push((start, start + 1));
                    }
                    (Arch::Armv8, true) => {
                        slots.push(Slot { kind: EventKind::Read, loc: Some(100), tags: Tags::ACQ, role: MRole::LockRead, txn });
                        slots.push(Slot { kind: EventKind::Write, loc: Some(100), tags: Tags::NONE, role: MRole::LockWrite, txn });
                        slots.push(Slot { kind: EventKind::Fence(FenceFlavor::Dmb), loc: None, tags: Tags::NONE, role: MRole::None, txn });
                        rmw_pairs.push((start, start + 1));
                        ctrl_extra.push((start, start + 1));
                    }
                    _ => unreachable!(),
                },
                EventKind::Lock(LockKind::Unlock) => match arch {
                    Arch::Power => {
                        slots.push(Slot { kind: EventKind::Fence(FenceFlavor::Sync), loc: None, tags: Tags::NONE, role: MRole::None, txn });
                        slots.push(Slot { kind: EventKind::Write, loc: Some(100), tags: Tags::NONE, role: MRole::UnlockWrite, txn });
                    }
                    Arch::Armv8 => {
                        slots.push(Slot { kind: EventKind::Write, loc: Some(100), tags: Tags::REL, role: MRole::UnlockWrite, txn });
                    }
                    _ => {
                        slots.push(Slot { kind: EventKind::Write, loc: Some(100), tags: Tags::NONE, role: MRole::UnlockWrite, txn });
                    }
                },
                EventKind::Lock(LockKind::LockElided) => {
                    slots.push(Slot { kind: EventKind::Read, loc: Some(100), tags: Tags::NONE, role: MRole::LockRead, txn });
                }
                EventKind::Lock(LockKind::UnlockElided) => {}
                _ => {
                    slots.push(Slot { kind: ev.kind, loc: ev.loc, tags: ev.tags, role: MRole::None, txn });
                }
            }
            if image_first[e.index()].is_none() && slots.len() > start {
                image_first[e.index()] = Some(start);
            }
            for s in start..slots.len() {
                tslots.push(s);
                pi.push((e, EventId(s as u8)));
            }
        }
        threads_slots.push(tslots);
    }

    let n = slots.len();
    if n > bound || n > MAX_EVENTS {
        return;
    }

    let mut events = Vec::with_capacity(n);
    for (i, s) in slots.iter().enumerate() {
        events.push(Event { id: EventId(i as u8), kind: s.kind, loc: s.loc, value: 0, tags: s.tags });
    }
    let mut base = Execution {
        arch,
        events,
        po: Rel::empty(n),
        addr: Rel::empty(n),
        ctrl: Rel::empty(n),
        data: Rel::empty(n),
        rmw: Rel::empty(n),
        rf: Rel::empty(n),
        co: Rel::empty(n),
        stxn: Rel::empty(n),
        satxn: Rel::empty(n),
    };
    for t in &threads_slots {
        for (i, &a) in t.iter().enumerate() {
            for &b in &t[i + 1..] {
                base.po.insert(EventId(a as u8), EventId(b as u8));
            }
        }
    }
    for &(r, w) in &rmw_pairs {
        base.rmw.insert(EventId(r as u8), EventId(w as u8));
    }
    for &(a, b) in &ctrl_extra {
        base.ctrl.insert(EventId(a as u8), EventId(b as u8));
    }
    // Transport the abstract execution's relations over memory images.
    let map_e = |e: EventId| image_first[e.index()].map(|s| EventId(s as u8));
    for (dst, src_rel) in [
        (&mut base.addr, &x.addr),
        (&mut base.data, &x.data),
        (&mut base.ctrl, &x.ctrl),
        (&mut base.rf, &x.rf),
        (&mut base.co, &x.co),
        (&mut base.rmw, &x.rmw),
    ] {
        for (a, b) in src_rel.pairs() {
            if x.event(a).kind.is_lock() || x.event(b).kind.is_lock() {
                continue;
            }
            if let (Some(na), Some(nb)) = (map_e(a), map_e(b)) {
                dst.insert(na, nb);
            }
        }
    }
    base.ctrl = base.ctrl.seq(&base.po.rtclos());
    // Transactions: the images of each elided critical region (the elided
    // unlock vanishes, so the class is the lock read plus the body).
    let mut txn_classes: Vec<Vec<EventId>> = vec![Vec::new(); cr_classes.len()];
    for (i, s) in slots.iter().enumerate() {
        if let Some(c) = s.txn {
            txn_classes[c].push(EventId(i as u8));
        }
    }
    txn_classes.retain(|c| !c.is_empty());
    base.stxn = per_from_classes(n, &txn_classes);

    // Enumerate rf and co on the lock variable. Lock-protocol reads see
    // the lock free: initial state or an unlock write.
    let m_reads: Vec<usize> = (0..n).filter(|&i| slots[i].role == MRole::LockRead).collect();
    let m_writes: Vec<usize> = (0..n)
        .filter(|&i| matches!(slots[i].role, MRole::LockWrite | MRole::UnlockWrite))
        .collect();
    let rf_opts: Vec<Vec<Option<usize>>> = m_reads
        .iter()
        .map(|&r| {
            let mut opts: Vec<Option<usize>> = vec![None];
            for &w in &m_writes {
                if slots[w].role == MRole::UnlockWrite {
                    opts.push(Some(w));
                }
            }
            let _ = r;
            opts
        })
        .collect();
    let co_orders = perms(&m_writes);

    let rf_sizes: Vec<usize> = rf_opts.iter().map(|o| o.len()).collect();
    let mut y = base.clone();
    let mut rf_choice = vec![0usize; m_reads.len()];
    loop {
        for order in &co_orders {
            y.rf = base.rf;
            y.co = base.co;
            for (ri, &r) in m_reads.iter().enumerate() {
                if let Some(w) = rf_opts[ri][rf_choice[ri]] {
                    y.rf.insert(EventId(w as u8), EventId(r as u8));
                }
            }
            for (i, &a) in order.iter().enumerate() {
                for &b in &order[i + 1..] {
                    y.co.insert(EventId(a as u8), EventId(b as u8));
                }
            }
            for i in 0..n {
                if y.events[i].kind.is_write() {
                    let e = EventId(i as u8);
                    let before = y.event_ids().filter(|&g| y.co.contains(g, e)).count() as u32;
                    y.events[i].value = before + 1;
                }
            }
            y.refresh_read_values();
            if f(&y, &pi) {
                return;
            }
        }
        if !bump_mixed(&mut rf_choice, &rf_sizes) {
            return;
        }
    }
}

/// Independent re-validation of a witness: both sides well-formed, the
/// source forbidden and the target allowed by the stated models, and the
/// structural mapping clauses intact.
pub fn validate_witness(w: &PiWitness, source_model: &Model, target_model: &Model) -> Result<(), String> {
    let wf_s = crate::execution::validate_wellformed(&w.source);
    if !wf_s.ok() {
        return Err(format!("source ill-formed: {wf_s}"));
    }
    let wf_t = crate::execution::validate_wellformed(&w.target);
    if !wf_t.ok() {
        return Err(format!("target ill-formed: {wf_t}"));
    }
    let sv = source_model.check(&w.source).map_err(|e| e.to_string())?;
    if sv.consistent {
        return Err("source is consistent; expected forbidden".into());
    }
    let tv = target_model.check(&w.target).map_err(|e| e.to_string())?;
    if !tv.consistent {
        return Err("target is inconsistent; expected allowed".into());
    }
    // π structure: every non-vanishing source event is mapped.
    for e in w.source.event_ids() {
        let vanishes = w.source.event(e).kind == EventKind::Lock(LockKind::UnlockElided);
        let mapped = w.pi.iter().any(|(a, _)| *a == e);
        if vanishes && mapped {
            return Err(format!("elided unlock {e} should have no image"));
        }
        if !vanishes && !mapped {
            return Err(format!("source event {e} has no image"));
        }
    }
    // Lock-variable clauses, when lock events are present.
    if w.source.events.iter().any(|e| e.kind.is_lock()) {
        let introduced: Vec<EventId> = w
            .pi
            .iter()
            .filter(|(a, _)| w.source.event(*a).kind.is_lock())
            .map(|(_, b)| *b)
            .collect();
        for e in w.target.event_ids() {
            let ev = w.target.event(e);
            if !ev.kind.is_memory() {
                continue;
            }
            let is_m = ev.loc == Some(100);
            let is_introduced = introduced.contains(&e);
            if is_m != is_introduced {
                return Err(format!("lock-variable access {e} violates the fresh-location clause"));
            }
        }
        // TxnReadsLockFree: no elided-lock read observes a lock-taking write.
        let lock_writes: Vec<EventId> = w
            .pi
            .iter()
            .filter(|(a, _)| w.source.event(*a).kind == EventKind::Lock(LockKind::Lock))
            .map(|(_, b)| *b)
            .filter(|&b| w.target.event(b).kind.is_write())
            .collect();
        for (a, b) in &w.pi {
            if w.source.event(*a).kind == EventKind::Lock(LockKind::LockElided) {
                for lw in &lock_writes {
                    if w.target.rf.contains(*lw, *b) {
                        return Err("elided lock read observes a lock-taking write".into());
                    }
                }
            }
        }
        // TxnIntro: the target transactions are exactly the images of the
        // transactionalised critical regions (elided unlocks aside).
        let (_, scrt) = w.source.derive_scr();
        for (a1, b1) in &w.pi {
            for (a2, b2) in &w.pi {
                let src_same = scrt.contains(*a1, *a2)
                    && w.source.event(*a1).kind != EventKind::Lock(LockKind::UnlockElided)
                    && w.source.event(*a2).kind != EventKind::Lock(LockKind::UnlockElided);
                let tgt_same = w.target.stxn.contains(*b1, *b2);
                if src_same != tgt_same {
                    return Err(format!(
                        "transaction-introduction clause broken at {a1}->{b1} / {a2}->{b2}"
                    ));
                }
            }
        }
    } else {
        // Monotonicity / compilation: stxn edges are preserved through π
        // (the target may add more, by transaction addition or by fences
        // joining their enclosing transaction).
        for (a1, b1) in &w.pi {
            for (a2, b2) in &w.pi {
                if w.source.stxn.contains(*a1, *a2) && !w.target.stxn.contains(*b1, *b2) {
                    return Err("stxn edge lost through the mapping".into());
                }
            }
        }
    }
    Ok(())
}

/// Render a witness bundle: both executions, the mapping, verdicts, litmus
/// renderings and a paired DOT graph.
pub fn render_bundle(w: &PiWitness, title: &str) -> String {
    use std::fmt::Write as _;
    let mut out = String::new();
    let _ = writeln!(out, "== {title}");
    let _ = writeln!(
        out,
        "source verdict: inconsistent, violated {:?}",
        w.source_verdict.violated
    );
    let _ = writeln!(out, "target verdict: consistent");
    let _ = writeln!(out, "-- source execution");
    let _ = write!(out, "{}", crate::execution::serialize(&w.source));
    let _ = writeln!(out, "-- target execution");
    let _ = write!(out, "{}", crate::execution::serialize(&w.target));
    let _ = writeln!(out, "-- mapping");
    for (a, b) in &w.pi {
        let _ = writeln!(out, "pi {a} -> {b}");
    }
    let _ = writeln!(out, "-- source litmus");
    let (ts, _) = crate::litmus::to_litmus(&w.source);
    let _ = write!(out, "{}", crate::litmus::render(&ts));
    let _ = writeln!(out, "-- target litmus");
    let (tt, _) = crate::litmus::to_litmus(&w.target);
    let _ = write!(out, "{}", crate::litmus::render(&tt));
    let _ = writeln!(out, "-- dot");
    let _ = write!(out, "{}", crate::dot::pair_to_dot(&w.source, &w.target, &w.pi, title));
    out
}

/// Search-space instrumentation used while tuning; counts each phase.
pub fn instrument_elision(arch: Arch, fixed: bool, bound: usize) -> (usize, u64, u64, u64, u64, u64) {
    use std::sync::atomic::{AtomicU64, Ordering};
    let tgt_model = by_name(&format!("{}-tm", arch.name())).unwrap();
    let skeletons = abstract_skeletons(arch, fixed, bound);
    let xs = AtomicU64::new(0);
    let crv = AtomicU64::new(0);
    let aok = AtomicU64::new(0);
    let yc = AtomicU64::new(0);
    let wit = AtomicU64::new(0);
    skeletons.par_iter().for_each(|skel| {
        let arch_checker = tgt_model.checker().unwrap();
        let tgt_checker = tgt_model.checker().unwrap();
        expand_abstract(skel, &mut |x| {
            xs.fetch_add(1, Ordering::Relaxed);
            let (scr, _) = x.derive_scr();
            let cr_order = crate::relalg::weaklift(&x.po.union(&x.derive_com()), &scr);
            if crate::relalg::acyclic(&cr_order) {
                return;
            }
            crv.fetch_add(1, Ordering::Relaxed);
            if !arch_checker.consistent(x) {
                return;
            }
            aok.fetch_add(1, Ordering::Relaxed);
            for_each_expansion(x, arch, fixed, bound, &mut |y, _pi| {
                yc.fetch_add(1, Ordering::Relaxed);
                if tgt_checker.consistent(y) {
                    wit.fetch_add(1, Ordering::Relaxed);
                    true
                } else {
                    false
                }
            });
        });
    });
    (skeletons.len(), xs.into_inner(), crv.into_inner(), aok.into_inner(), yc.into_inner(), wit.into_inner())
}
