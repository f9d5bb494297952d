//! Bounded exhaustive enumeration of well-formed executions and synthesis
//! of conformance suites.
//!
//! The shrink order between executions drives both minimality and the
//! allowed suites: `X` is one step below `Y` when it is obtained by
//! removing an event, removing a dependency edge, downgrading an event
//! along the architecture's strength lattice, or stripping the first or
//! last event of a transaction. Minimally-inconsistent executions are the
//! inconsistent ones whose every one-step shrink is consistent; the
//! maximally-allowed suite collects the consistent one-step shrinks of
//! those.
//!
//! The backend is explicit enumeration with canonical-form deduplication;
//! executions are small enough that this stays desk-scale without a
//! constraint solver. `enumerate_raw` is the streaming variant used by the
//! exhaustive property suites, which tolerate isomorphic duplicates.

use crate::execution::{per_from_classes, Arch, Event, EventKind, Execution, FenceFlavor, Tags};
use crate::models::Model;
use crate::relalg::{EventId, Rel, MAX_EVENTS};
use rayon::prelude::*;
use std::collections::BTreeMap;

/// What the enumerator is allowed to generate.
#[derive(Clone, Debug)]
pub struct Signature {
    pub arch: Arch,
    pub max_events: usize,
    /// Generate transactions (stxn classes).
    pub txns: bool,
    pub max_txns: usize,
    /// Generate atomic-transaction markings (satxn, C++ only).
    pub atomic_txns: bool,
    /// Permitted fence flavors.
    pub fences: Vec<FenceFlavor>,
    /// Generate ordering tags (ARMv8 acq/rel, C++ modes).
    pub tags: bool,
    /// Generate addr/ctrl/data dependencies.
    pub deps: bool,
    /// Generate rmw pairs.
    pub rmw: bool,
}

impl Signature {
    /// Architecture defaults: every feature the models of that
    /// architecture can observe. Dependencies are omitted where inert
    /// (x86 and C++ axioms never mention them).
    pub fn for_arch(arch: Arch, max_events: usize) -> Signature {
        let (tags, deps) = match arch {
            Arch::Sc | Arch::Tsc | Arch::X86 => (false, false),
            Arch::Power => (false, true),
            Arch::Armv8 => (true, true),
            Arch::Cpp => (true, false),
        };
        Signature {
            arch,
            max_events,
            txns: true,
            max_txns: max_events,
            atomic_txns: arch == Arch::Cpp,
            fences: arch.fence_flavors().to_vec(),
            tags,
            deps,
            rmw: !matches!(arch, Arch::Sc | Arch::Tsc),
        }
    }

    pub fn without_txns(mut self) -> Signature {
        self.txns = false;
        self.atomic_txns = false;
        self
    }
}

/// One step of the shrink order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ShrinkStep {
    RemoveEvent(EventId),
    /// Dependency-edge removal (addr, ctrl, data or rmw).
    RemoveDep(DepEdge, EventId, EventId),
    /// One step down the per-architecture strength lattice.
    Downgrade(EventId, &'static str),
    /// Strip the first or last event of a transaction.
    DetxnBoundary(EventId),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DepEdge {
    Addr,
    Ctrl,
    Data,
    Rmw,
}

impl DepEdge {
    pub fn name(self) -> &'static str {
        match self {
            DepEdge::Addr => "addr",
            DepEdge::Ctrl => "ctrl",
            DepEdge::Data => "data",
            DepEdge::Rmw => "rmw",
        }
    }
}

/// Lexicographic well-foundedness measure: every shrink step strictly
/// decreases it.
pub fn measure(x: &Execution) -> (usize, usize, u32, usize) {
    let deps = x.addr.len() + x.ctrl.len() + x.data.len() + x.rmw.len();
    let tag_weight: u32 = x
        .events
        .iter()
        .map(|e| {
            let mut w = 0;
            for t in [Tags::ACQ, Tags::REL, Tags::SC, Tags::ATO] {
                if e.tags.has(t) {
                    w += 1;
                }
            }
            w += match e.kind {
                EventKind::Fence(FenceFlavor::Dmb) => 1,
                EventKind::Fence(FenceFlavor::Sync) => 2,
                EventKind::Fence(FenceFlavor::Lwsync) => 1,
                _ => 0,
            };
            w
        })
        .sum();
    (x.len(), deps, tag_weight, x.stxn.len())
}

// ---------------------------------------------------------------------------
// Canonicalisation
// ---------------------------------------------------------------------------

/// Canonical representative under thread, location and value renaming
/// (event ids follow thread order). Two executions are isomorphic iff
/// their canonical forms are equal.
pub fn canonicalize(x: &Execution) -> Execution {
    canonical_with_key(x).0
}

pub fn canonical_key(x: &Execution) -> Vec<u64> {
    canonical_with_key(x).1
}

fn canonical_with_key(x: &Execution) -> (Execution, Vec<u64>) {
    let threads = x.threads();
    let k = threads.len();
    // Group threads by a cheap invariant; only permutations within equal
    // groups can change the encoding's minimum.
    let inv: Vec<Vec<u32>> = threads
        .iter()
        .map(|t| {
            t.iter()
                .map(|&e| {
                    let ev = x.event(e);
                    (kind_code(ev) as u32) << 8 | ev.tags.names().len() as u32
                })
                .collect()
        })
        .collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| inv[a].cmp(&inv[b]).then(a.cmp(&b)));

    let mut best: Option<(Execution, Vec<u64>)> = None;
    permute_groups(&mut order.clone(), &inv, 0, &mut |perm| {
        let cand = relabel(x, &threads, perm);
        let key = encode(&cand);
        if best.as_ref().map(|(_, bk)| key < *bk).unwrap_or(true) {
            best = Some((cand, key));
        }
    });
    best.unwrap()
}

/// Visit permutations of `order` that only swap positions with equal
/// invariants (plus the identity arrangement by sorted invariant).
fn permute_groups(
    order: &mut Vec<usize>,
    inv: &[Vec<u32>],
    from: usize,
    f: &mut impl FnMut(&[usize]),
) {
    if from == order.len() {
        f(order);
        return;
    }
    // positions from..to share the invariant of position `from`
    let mut to = from + 1;
    while to < order.len() && inv[order[to]] == inv[order[from]] {
        to += 1;
    }
    // permute the block [from, to), then recurse past it
    permute_block(order, from, to, inv, &mut |o| {
        let mut o2 = o.to_vec();
        permute_groups(&mut o2, inv, to, f);
    });
}

fn permute_block(
    order: &mut Vec<usize>,
    from: usize,
    to: usize,
    inv: &[Vec<u32>],
    f: &mut impl FnMut(&[usize]),
) {
    if from + 1 >= to {
        f(order);
        return;
    }
    for i in from..to {
        order.swap(from, i);
        permute_block(order, from + 1, to, inv, f);
        order.swap(from, i);
    }
}

fn kind_code(e: &Event) -> u8 {
    match e.kind {
        EventKind::Read => 0,
        EventKind::Write => 1,
        EventKind::Fence(f) => 2 + f as u8,
        EventKind::Lock(k) => 10 + k as u8,
    }
}

/// Rebuild `x` with threads in the given order, events renumbered
/// thread-major, locations renamed in first-use order (mutexes
/// separately) and write values renumbered along co.
fn relabel(x: &Execution, threads: &[Vec<EventId>], order: &[usize]) -> Execution {
    let n = x.len();
    let mut old_of_new: Vec<EventId> = Vec::with_capacity(n);
    for &t in order {
        old_of_new.extend(threads[t].iter().copied());
    }
    let mut new_of_old = vec![0u8; n];
    for (new, &old) in old_of_new.iter().enumerate() {
        new_of_old[old.index()] = new as u8;
    }
    let map = |r: &Rel| {
        let mut out = Rel::empty(n);
        for (a, b) in r.pairs() {
            out.insert(
                EventId(new_of_old[a.index()]),
                EventId(new_of_old[b.index()]),
            );
        }
        out
    };
    let mut events = Vec::with_capacity(n);
    let mut loc_map: Vec<(u8, u8)> = Vec::new();
    let mut next_loc = 0u8;
    let mut next_mutex = 100u8;
    for (new, &old) in old_of_new.iter().enumerate() {
        let ev = x.event(old);
        let loc = ev.loc.map(|l| {
            if let Some(&(_, m)) = loc_map.iter().find(|(o, _)| *o == l) {
                m
            } else {
                let m = if l >= 100 {
                    let m = next_mutex;
                    next_mutex += 1;
                    m
                } else {
                    let m = next_loc;
                    next_loc += 1;
                    m
                };
                loc_map.push((l, m));
                m
            }
        });
        events.push(Event {
            id: EventId(new as u8),
            kind: ev.kind,
            loc,
            value: ev.value,
            tags: ev.tags,
        });
    }
    let mut out = Execution {
        arch: x.arch,
        events,
        po: map(&x.po),
        addr: map(&x.addr),
        ctrl: map(&x.ctrl),
        data: map(&x.data),
        rmw: map(&x.rmw),
        rf: map(&x.rf),
        co: map(&x.co),
        stxn: map(&x.stxn),
        satxn: map(&x.satxn),
    };
    // Canonical values: co position within each location, then rf.
    for i in 0..n {
        if out.events[i].kind.is_write() {
            let e = EventId(i as u8);
            let before = out
                .event_ids()
                .filter(|&f| out.co.contains(f, e))
                .count() as u32;
            out.events[i].value = before + 1;
        }
    }
    out.refresh_read_values();
    out
}

/// Stable encoding used as the canonical ordering key.
fn encode(x: &Execution) -> Vec<u64> {
    let n = x.len();
    let mut key = Vec::with_capacity(2 + n + 9);
    key.push(n as u64);
    key.push(x.threads().len() as u64);
    for e in &x.events {
        let mut v: u64 = kind_code(e) as u64;
        v = v << 8 | e.loc.unwrap_or(255) as u64;
        v = v << 8 | tag_bits(e.tags) as u64;
        key.push(v);
    }
    for r in [
        &x.po, &x.addr, &x.ctrl, &x.data, &x.rmw, &x.rf, &x.co, &x.stxn, &x.satxn,
    ] {
        let mut acc: u64 = 0;
        for i in 0..n {
            acc = acc.rotate_left(16) ^ r.row(EventId(i as u8)) as u64;
            if i % 4 == 3 {
                key.push(acc);
                acc = 0;
            }
        }
        key.push(acc);
    }
    key
}

fn tag_bits(t: Tags) -> u8 {
    let mut b = 0;
    for (i, tag) in [Tags::ACQ, Tags::REL, Tags::SC, Tags::ATO, Tags::EXCL]
        .into_iter()
        .enumerate()
    {
        if t.has(tag) {
            b |= 1 << i;
        }
    }
    b
}

// ---------------------------------------------------------------------------
// Shrinking
// ---------------------------------------------------------------------------

/// All immediate predecessors in the shrink order, with the executions
/// they produce. Every produced execution is well-formed.
pub fn shrink_steps(x: &Execution) -> Vec<(ShrinkStep, Execution)> {
    let mut out = Vec::new();
    for e in x.event_ids() {
        out.push((ShrinkStep::RemoveEvent(e), remove_event(x, e)));
    }
    for (edge, r) in [
        (DepEdge::Addr, &x.addr),
        (DepEdge::Data, &x.data),
        (DepEdge::Rmw, &x.rmw),
    ] {
        for (a, b) in r.pairs() {
            let mut y = x.clone();
            match edge {
                DepEdge::Addr => y.addr.remove(a, b),
                DepEdge::Data => y.data.remove(a, b),
                _ => y.rmw.remove(a, b),
            }
            out.push((ShrinkStep::RemoveDep(edge, a, b), y));
        }
    }
    // Only the head of a ctrl suffix is removable; removing a later edge
    // would break suffix closure (and thus well-formedness).
    for (a, b) in x.ctrl.pairs() {
        let head = x
            .event_ids()
            .all(|z| !(x.ctrl.contains(a, z) && x.po.contains(z, b)));
        if head {
            let mut y = x.clone();
            y.ctrl.remove(a, b);
            out.push((ShrinkStep::RemoveDep(DepEdge::Ctrl, a, b), y));
        }
    }
    for e in x.event_ids() {
        for (what, y) in downgrades(x, e) {
            out.push((ShrinkStep::Downgrade(e, what), y));
        }
    }
    for class in x.stxn_classes() {
        let mut boundaries = vec![class[0]];
        if class.len() > 1 {
            // first and last in po order
            let first = *class
                .iter()
                .find(|&&e| class.iter().all(|&f| f == e || x.po.contains(e, f)))
                .unwrap();
            let last = *class
                .iter()
                .find(|&&e| class.iter().all(|&f| f == e || x.po.contains(f, e)))
                .unwrap();
            boundaries = vec![first, last];
        }
        for e in boundaries {
            let mut y = x.clone();
            for f in x.event_ids() {
                y.stxn.remove(e, f);
                y.stxn.remove(f, e);
                y.satxn.remove(e, f);
                y.satxn.remove(f, e);
            }
            out.push((ShrinkStep::DetxnBoundary(e), y));
        }
    }
    out
}

/// Per-architecture strength lattice, one step at a time.
fn downgrades(x: &Execution, e: EventId) -> Vec<(&'static str, Execution)> {
    let ev = *x.event(e);
    let mut out = Vec::new();
    let with_tags = |tags: Tags, what: &'static str, out: &mut Vec<(&'static str, Execution)>| {
        let mut y = x.clone();
        y.events[e.index()].tags = tags;
        out.push((what, y));
    };
    match x.arch {
        Arch::Power => {
            // Fence weakening: sync -> lwsync -> isync. isync is terminal
            // (its removal is an event-removal step).
            let next = match ev.kind {
                EventKind::Fence(FenceFlavor::Sync) => Some((FenceFlavor::Lwsync, "sync->lwsync")),
                EventKind::Fence(FenceFlavor::Lwsync) => Some((FenceFlavor::Isync, "lwsync->isync")),
                _ => None,
            };
            if let Some((flavor, what)) = next {
                let mut y = x.clone();
                y.events[e.index()].kind = EventKind::Fence(flavor);
                out.push((what, y));
            }
        }
        Arch::Armv8 => {
            if ev.tags.has(Tags::ACQ) {
                with_tags(ev.tags.without(Tags::ACQ), "acq->plain", &mut out);
            }
            if ev.tags.has(Tags::REL) {
                with_tags(ev.tags.without(Tags::REL), "rel->plain", &mut out);
            }
            if ev.kind == EventKind::Fence(FenceFlavor::Dmb) {
                for (flavor, what) in [
                    (FenceFlavor::Dmbld, "dmb->dmbld"),
                    (FenceFlavor::Dmbst, "dmb->dmbst"),
                ] {
                    let mut y = x.clone();
                    y.events[e.index()].kind = EventKind::Fence(flavor);
                    out.push((what, y));
                }
            }
        }
        Arch::Cpp => {
            if ev.tags.has(Tags::SC) {
                with_tags(ev.tags.without(Tags::SC), "sc->acqrel", &mut out);
            } else if ev.tags.has(Tags::ACQ) {
                with_tags(ev.tags.without(Tags::ACQ), "acq->relaxed", &mut out);
            } else if ev.tags.has(Tags::REL) {
                with_tags(ev.tags.without(Tags::REL), "rel->relaxed", &mut out);
            } else if ev.tags.has(Tags::ATO) && !x.satxn.contains(e, e) {
                // atomics inside atomic transactions are not generated
                with_tags(ev.tags.without(Tags::ATO), "atomic->plain", &mut out);
            }
        }
        _ => {}
    }
    out
}

/// Remove an event and all incident edges, renumbering densely.
pub fn remove_event(x: &Execution, e: EventId) -> Execution {
    let n = x.len();
    let keep: Vec<EventId> = x.event_ids().filter(|&f| f != e).collect();
    let map = |r: &Rel| {
        let mut out = Rel::empty(n - 1);
        for (a, b) in r.pairs() {
            if a == e || b == e {
                continue;
            }
            let na = keep.iter().position(|&k| k == a).unwrap();
            let nb = keep.iter().position(|&k| k == b).unwrap();
            out.insert(EventId(na as u8), EventId(nb as u8));
        }
        out
    };
    let mut events = Vec::with_capacity(n - 1);
    for (i, &old) in keep.iter().enumerate() {
        let mut ev = *x.event(old);
        ev.id = EventId(i as u8);
        events.push(ev);
    }
    let mut out = Execution {
        arch: x.arch,
        events,
        po: map(&x.po),
        addr: map(&x.addr),
        ctrl: map(&x.ctrl),
        data: map(&x.data),
        rmw: map(&x.rmw),
        rf: map(&x.rf),
        co: map(&x.co),
        stxn: map(&x.stxn),
        satxn: map(&x.satxn),
    };
    out.refresh_read_values();
    out
}

// ---------------------------------------------------------------------------
// Enumeration
// ---------------------------------------------------------------------------

/// Kind-and-tag palette per architecture.
fn palette(sig: &Signature) -> Vec<(EventKind, Tags)> {
    let mut out = vec![(EventKind::Read, Tags::NONE), (EventKind::Write, Tags::NONE)];
    if sig.tags {
        match sig.arch {
            Arch::Armv8 => {
                out.push((EventKind::Read, Tags::ACQ));
                out.push((EventKind::Write, Tags::REL));
            }
            Arch::Cpp => {
                out.push((EventKind::Read, Tags::ATO));
                out.push((EventKind::Read, Tags::ATO.with(Tags::ACQ)));
                out.push((EventKind::Read, Tags::ATO.with(Tags::ACQ).with(Tags::SC)));
                out.push((EventKind::Write, Tags::ATO));
                out.push((EventKind::Write, Tags::ATO.with(Tags::REL)));
                out.push((EventKind::Write, Tags::ATO.with(Tags::REL).with(Tags::SC)));
            }
            _ => {}
        }
    }
    for &f in &sig.fences {
        out.push((EventKind::Fence(f), Tags::NONE));
    }
    out
}

/// Non-increasing thread-size partitions of n.
fn partitions(n: usize) -> Vec<Vec<usize>> {
    fn go(n: usize, max: usize, acc: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if n == 0 {
            out.push(acc.clone());
            return;
        }
        for k in (1..=n.min(max)).rev() {
            acc.push(k);
            go(n - k, k, acc, out);
            acc.pop();
        }
    }
    let mut out = Vec::new();
    go(n, n, &mut Vec::new(), &mut out);
    out
}

/// Stream every well-formed execution the signature permits. Isomorphic
/// duplicates may occur; use [`enumerate`] for canonical representatives.
pub fn enumerate_raw<F: FnMut(&Execution)>(sig: &Signature, mut f: F) {
    for n in 1..=sig.max_events.min(MAX_EVENTS) {
        for sizes in partitions(n) {
            enumerate_shape(sig, &sizes, &mut f);
        }
    }
}

/// Top-level work items for parallel enumeration: one per (event count,
/// thread shape, kind vector).
pub fn parallel_chunks(sig: &Signature) -> Vec<(Vec<usize>, Vec<usize>)> {
    let pal = palette(sig);
    let mut out = Vec::new();
    for n in 1..=sig.max_events.min(MAX_EVENTS) {
        for sizes in partitions(n) {
            let mut kinds = vec![0usize; n];
            loop {
                out.push((sizes.clone(), kinds.clone()));
                if !bump(&mut kinds, pal.len()) {
                    break;
                }
            }
        }
    }
    out
}

/// Expand one parallel chunk.
pub fn enumerate_chunk<F: FnMut(&Execution)>(
    sig: &Signature,
    sizes: &[usize],
    kinds: &[usize],
    f: &mut F,
) {
    let pal = palette(sig);
    let chosen: Vec<(EventKind, Tags)> = kinds.iter().map(|&k| pal[k]).collect();
    expand_assignment(sig, sizes, &chosen, f);
}

fn enumerate_shape<F: FnMut(&Execution)>(sig: &Signature, sizes: &[usize], f: &mut F) {
    let pal = palette(sig);
    let n: usize = sizes.iter().sum();
    let mut kinds = vec![0usize; n];
    loop {
        let chosen: Vec<(EventKind, Tags)> = kinds.iter().map(|&k| pal[k]).collect();
        expand_assignment(sig, sizes, &chosen, f);
        if !bump(&mut kinds, pal.len()) {
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

/// Fill locations, rmw pairs, dependencies, transactions, rf and co for a
/// fixed shape and kind vector.
fn expand_assignment<F: FnMut(&Execution)>(
    sig: &Signature,
    sizes: &[usize],
    kinds: &[(EventKind, Tags)],
    f: &mut F,
) {
    let n = kinds.len();
    // Fences at the very start or end of a thread never separate two
    // events; such executions exist but every model ignores the fence, so
    // enumerating them would only add shrink-reducible noise. They are
    // still covered as shrink results of larger executions. Skip threads
    // that consist only of fences or have boundary fences.
    let mut pos = 0;
    for &len in sizes {
        let evs = &kinds[pos..pos + len];
        if evs.first().map(|(k, _)| k.is_fence()).unwrap_or(false)
            || evs.last().map(|(k, _)| k.is_fence()).unwrap_or(false)
        {
            return;
        }
        pos += len;
    }

    let memory: Vec<usize> = (0..n).filter(|&i| kinds[i].0.is_memory()).collect();
    // Location assignment: restricted-growth strings over memory events.
    let mut locs = vec![0usize; memory.len()];
    loop {
        // restricted growth: locs[i] <= 1 + max(locs[..i])
        let mut ok = true;
        let mut maxv = 0usize;
        for (i, &l) in locs.iter().enumerate() {
            if i == 0 {
                ok = l == 0;
            } else if l > maxv + 1 {
                ok = false;
            }
            if !ok {
                break;
            }
            maxv = maxv.max(l);
        }
        if ok {
            expand_locs(sig, sizes, kinds, &memory, &locs, f);
        }
        if !bump(&mut locs, memory.len().max(1)) {
            break;
        }
    }
}

fn expand_locs<F: FnMut(&Execution)>(
    sig: &Signature,
    sizes: &[usize],
    kinds: &[(EventKind, Tags)],
    memory: &[usize],
    locs: &[usize],
    f: &mut F,
) {
    let n = kinds.len();
    let loc_of = |i: usize| -> Option<u8> {
        memory
            .iter()
            .position(|&m| m == i)
            .map(|mi| locs[mi] as u8)
    };
    // Thread index and po-position helpers.
    let mut thread_of = vec![0usize; n];
    let mut thread_start = vec![0usize; sizes.len()];
    {
        let mut pos = 0;
        for (t, &len) in sizes.iter().enumerate() {
            thread_start[t] = pos;
            for i in pos..pos + len {
                thread_of[i] = t;
            }
            pos += len;
        }
    }
    let same_thread = |a: usize, b: usize| thread_of[a] == thread_of[b];
    let po_before = |a: usize, b: usize| same_thread(a, b) && a < b;

    // rmw pair sets: same-location read-then-write pairs within a thread
    // (not necessarily adjacent), with disjoint endpoints.
    let mut rmw_candidates: Vec<(usize, usize)> = Vec::new();
    if sig.rmw {
        for i in 0..n {
            for j in i + 1..n {
                if po_before(i, j)
                    && kinds[i].0.is_read()
                    && kinds[j].0.is_write()
                    && loc_of(i) == loc_of(j)
                {
                    if sig.arch == Arch::Cpp
                        && !(kinds[i].1.has(Tags::ATO) && kinds[j].1.has(Tags::ATO))
                    {
                        continue;
                    }
                    rmw_candidates.push((i, j));
                }
            }
        }
    }
    let rmw_sets = disjoint_subsets(&rmw_candidates);

    // Dependency choices per read.
    let reads: Vec<usize> = (0..n).filter(|&i| kinds[i].0.is_read()).collect();
    // ctrl: per read, a cut position in its thread (or none)
    let ctrl_opts: Vec<Vec<Option<usize>>> = reads
        .iter()
        .map(|&r| {
            let mut opts = vec![None];
            if sig.deps {
                let t = thread_of[r];
                let end = thread_start[t] + sizes[t];
                for cut in (r + 1)..end {
                    opts.push(Some(cut));
                }
            }
            opts
        })
        .collect();
    // addr/data: per read, bitmask over eligible later targets
    let addr_targets: Vec<Vec<usize>> = reads
        .iter()
        .map(|&r| {
            if !sig.deps {
                return Vec::new();
            }
            (r + 1..n)
                .filter(|&t| po_before(r, t) && kinds[t].0.is_memory())
                .collect()
        })
        .collect();
    let data_targets: Vec<Vec<usize>> = reads
        .iter()
        .map(|&r| {
            if !sig.deps {
                return Vec::new();
            }
            (r + 1..n)
                .filter(|&t| po_before(r, t) && kinds[t].0.is_write())
                .collect()
        })
        .collect();

    // Transactions: contiguous disjoint runs per thread.
    let txn_structures = if sig.txns {
        txn_runs(sizes, sig.max_txns)
    } else {
        vec![Vec::new()]
    };

    // rf options per read and write permutations per location.
    let rf_opts: Vec<Vec<Option<usize>>> = reads
        .iter()
        .map(|&r| {
            let mut opts = vec![None];
            for w in 0..n {
                if kinds[w].0.is_write() && loc_of(w) == loc_of(r) {
                    opts.push(Some(w));
                }
            }
            opts
        })
        .collect();
    let mut writes_per_loc: Vec<(u8, Vec<usize>)> = Vec::new();
    for i in 0..n {
        if kinds[i].0.is_write() {
            let l = loc_of(i).unwrap();
            match writes_per_loc.iter_mut().find(|(ll, _)| *ll == l) {
                Some((_, v)) => v.push(i),
                None => writes_per_loc.push((l, vec![i])),
            }
        }
    }
    writes_per_loc.sort_by_key(|(l, _)| *l);
    let co_orders: Vec<Vec<Vec<usize>>> = writes_per_loc
        .iter()
        .map(|(_, ws)| permutations(ws))
        .collect();

    // Base execution pieces shared across inner loops.
    let mut po = Rel::empty(n);
    for (t, &len) in sizes.iter().enumerate() {
        let s = thread_start[t];
        for a in s..s + len {
            for b in a + 1..s + len {
                po.insert(EventId(a as u8), EventId(b as u8));
            }
        }
    }
    let po_rt = po.rtclos();

    for rmw_set in &rmw_sets {
        let mut rmw = Rel::empty(n);
        for &(a, b) in rmw_set {
            rmw.insert(EventId(a as u8), EventId(b as u8));
        }
        // addr/data/ctrl odometers
        let addr_sizes: Vec<usize> = addr_targets.iter().map(|t| 1 << t.len()).collect();
        let data_sizes: Vec<usize> = data_targets.iter().map(|t| 1 << t.len()).collect();
        let ctrl_sizes: Vec<usize> = ctrl_opts.iter().map(|o| o.len()).collect();
        let mut addr_choice = vec![0usize; reads.len()];
        loop {
            let mut data_choice = vec![0usize; reads.len()];
            loop {
                let mut ctrl_choice = vec![0usize; reads.len()];
                loop {
                    let mut addr = Rel::empty(n);
                    let mut data = Rel::empty(n);
                    let mut ctrl = Rel::empty(n);
                    for (ri, &r) in reads.iter().enumerate() {
                        for (bit, &t) in addr_targets[ri].iter().enumerate() {
                            if addr_choice[ri] & (1 << bit) != 0 {
                                addr.insert(EventId(r as u8), EventId(t as u8));
                            }
                        }
                        for (bit, &t) in data_targets[ri].iter().enumerate() {
                            if data_choice[ri] & (1 << bit) != 0 {
                                data.insert(EventId(r as u8), EventId(t as u8));
                            }
                        }
                        if let Some(cut) = ctrl_opts[ri][ctrl_choice[ri]] {
                            let t = thread_of[r];
                            let end = thread_start[t] + sizes[t];
                            for b in cut..end {
                                ctrl.insert(EventId(r as u8), EventId(b as u8));
                            }
                        }
                    }
                    for txn_classes in &txn_structures {
                        let stxn = per_from_classes(
                            n,
                            &txn_classes
                                .iter()
                                .map(|c| c.iter().map(|&i| EventId(i as u8)).collect())
                                .collect::<Vec<_>>(),
                        );
                        let satxn_choices = if sig.atomic_txns {
                            1usize << txn_classes.len()
                        } else {
                            1
                        };
                        for satxn_mask in 0..satxn_choices {
                            let marked: Vec<Vec<EventId>> = txn_classes
                                .iter()
                                .enumerate()
                                .filter(|(i, _)| satxn_mask & (1 << i) != 0)
                                .map(|(_, c)| c.iter().map(|&i| EventId(i as u8)).collect())
                                .collect();
                            let satxn = per_from_classes(n, &marked);
                            // rf and co odometers
                            let rf_sizes: Vec<usize> = rf_opts.iter().map(|o| o.len()).collect();
                            let co_sizes: Vec<usize> =
                                co_orders.iter().map(|o| o.len()).collect();
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
                                            kind: kinds[i].0,
                                            loc: loc_of(i),
                                            value: 0,
                                            tags: kinds[i].1,
                                        });
                                    }
                                    let mut x = Execution {
                                        arch: sig.arch,
                                        events,
                                        po,
                                        addr,
                                        ctrl: ctrl.seq(&po_rt),
                                        data,
                                        rmw,
                                        rf,
                                        co,
                                        stxn,
                                        satxn,
                                    };
                                    for i in 0..n {
                                        if x.events[i].kind.is_write() {
                                            let e = EventId(i as u8);
                                            let before = x
                                                .event_ids()
                                                .filter(|&g| x.co.contains(g, e))
                                                .count()
                                                as u32;
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
            if !bump_mixed(&mut addr_choice, &addr_sizes) {
                break;
            }
        }
    }
}

/// All subsets of candidate pairs with pairwise-disjoint endpoints.
fn disjoint_subsets(pairs: &[(usize, usize)]) -> Vec<Vec<(usize, usize)>> {
    let mut out = vec![Vec::new()];
    for &(a, b) in pairs {
        let mut extra = Vec::new();
        for set in &out {
            if set.iter().all(|&(x, y)| x != a && y != b && x != b && y != a) {
                let mut s = set.clone();
                s.push((a, b));
                extra.push(s);
            }
        }
        out.extend(extra);
    }
    out
}

/// Sets of disjoint contiguous runs (the transaction classes), at most
/// `max_txns` in total across threads. Runs are lists of global event
/// indices.
fn txn_runs(sizes: &[usize], max_txns: usize) -> Vec<Vec<Vec<usize>>> {
    fn thread_runs(start: usize, len: usize) -> Vec<Vec<Vec<usize>>> {
        // structures over positions [start, start+len)
        fn go(pos: usize, end: usize) -> Vec<Vec<Vec<usize>>> {
            if pos == end {
                return vec![Vec::new()];
            }
            let mut out = Vec::new();
            // position not in a transaction
            for rest in go(pos + 1, end) {
                out.push(rest);
            }
            // a transaction starting here of length k
            for k in 1..=(end - pos) {
                let run: Vec<usize> = (pos..pos + k).collect();
                for rest in go(pos + k, end) {
                    let mut v = vec![run.clone()];
                    v.extend(rest);
                    out.push(v);
                }
            }
            out
        }
        go(start, start + len)
    }
    let mut acc: Vec<Vec<Vec<usize>>> = vec![Vec::new()];
    let mut start = 0;
    for &len in sizes {
        let per_thread = thread_runs(start, len);
        let mut next = Vec::new();
        for base in &acc {
            for tr in &per_thread {
                if base.len() + tr.len() <= max_txns {
                    let mut v = base.clone();
                    v.extend(tr.iter().cloned());
                    next.push(v);
                }
            }
        }
        acc = next;
        start += len;
    }
    acc
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.is_empty() {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for (i, &x) in items.iter().enumerate() {
        let mut rest: Vec<usize> = items.to_vec();
        rest.remove(i);
        for mut p in permutations(&rest) {
            let mut v = vec![x];
            v.append(&mut p);
            out.push(v);
        }
    }
    out
}

/// Every well-formed execution over at most `sig.max_events` events, up to
/// isomorphism, each exactly once (canonical representatives, in canonical
/// key order).
pub fn enumerate(sig: &Signature) -> Vec<Execution> {
    let mut seen: BTreeMap<Vec<u64>, Execution> = BTreeMap::new();
    enumerate_raw(sig, |x| {
        let (canon, key) = canonical_with_key(x);
        seen.entry(key).or_insert(canon);
    });
    seen.into_values().collect()
}

// ---------------------------------------------------------------------------
// Conformance suites
// ---------------------------------------------------------------------------

/// Minimally-inconsistent executions of `m`: inconsistent, with every
/// one-step shrink consistent. When `baseline` is given, the result is
/// further filtered to executions the (transaction-erased) baseline
/// allows — the differential set the conformance tables report.
pub fn min_inconsistent(m: &Model, baseline: Option<&Model>, sig: &Signature) -> Vec<Execution> {
    let chunks = parallel_chunks(sig);
    let maps: Vec<BTreeMap<Vec<u64>, Execution>> = chunks
        .par_iter()
        .map(|(sizes, kinds)| {
            let checker = m.checker().expect("model compiles");
            let base_checker = baseline.map(|b| b.checker().expect("baseline compiles"));
            let mut found = BTreeMap::new();
            enumerate_chunk(sig, sizes, kinds, &mut |x| {
                if checker.consistent(x) {
                    return;
                }
                if let Some(bc) = &base_checker {
                    if !bc.consistent(&x.erase_stxn()) {
                        return;
                    }
                }
                let minimal = shrink_steps(x)
                    .iter()
                    .all(|(_, y)| checker.consistent(y));
                if !minimal {
                    return;
                }
                let (canon, key) = canonical_with_key(x);
                found.entry(key).or_insert(canon);
            });
            found
        })
        .collect();
    let mut all = BTreeMap::new();
    for m in maps {
        all.extend(m);
    }
    all.into_values().collect()
}

/// Maximally-allowed executions: consistent one-step shrinks of the
/// minimally-inconsistent set (no baseline filter), deduplicated
/// canonically.
pub fn max_consistent(m: &Model, sig: &Signature) -> Vec<Execution> {
    let mins = min_inconsistent(m, None, sig);
    let checker = m.checker().expect("model compiles");
    let mut out: BTreeMap<Vec<u64>, Execution> = BTreeMap::new();
    for y in &mins {
        for (_, x) in shrink_steps(y) {
            if checker.consistent(&x) {
                let (canon, key) = canonical_with_key(&x);
                out.entry(key).or_insert(canon);
            }
        }
    }
    out.into_values().collect()
}

/// Conformance summary mirroring the forbid/allow table layout: one row
/// per event count, counting the differential forbidden tests of exactly
/// that size and the allowed tests relaxed from them (deduplicated within
/// each row; an allowed test derived from generators of two sizes shows up
/// in both rows, matching per-bound synthesis runs).
#[derive(Clone, Debug)]
pub struct SummaryTable {
    pub model: String,
    pub baseline: Option<String>,
    pub rows: Vec<SummaryRow>,
    /// Transaction-count histogram over the forbidden suite at full bound.
    pub forbid_txn_histogram: Vec<(usize, usize)>,
}

#[derive(Clone, Debug)]
pub struct SummaryRow {
    pub events: usize,
    pub forbid: usize,
    pub allow: usize,
}

pub struct Suites {
    /// Minimally-inconsistent executions, baseline filter applied.
    pub forbid: Vec<Execution>,
    /// All minimally-inconsistent executions (the allowed-set generators).
    pub generators: Vec<Execution>,
    /// Allowed tests per generator size: (generator size, tests).
    pub allow_rows: Vec<(usize, Vec<Execution>)>,
}

pub fn suites(m: &Model, baseline: Option<&Model>, sig: &Signature) -> Suites {
    let generators = min_inconsistent(m, None, sig);
    let base_checker = baseline.map(|b| b.checker().expect("baseline compiles"));
    let checker = m.checker().expect("model compiles");
    let forbid: Vec<Execution> = generators
        .iter()
        .filter(|x| {
            base_checker
                .as_ref()
                .map(|bc| bc.consistent(&x.erase_stxn()))
                .unwrap_or(true)
        })
        .cloned()
        .collect();
    let mut allow_rows = Vec::new();
    for k in 1..=sig.max_events {
        let mut row: BTreeMap<Vec<u64>, Execution> = BTreeMap::new();
        for y in generators.iter().filter(|y| y.len() == k) {
            for (_, x) in shrink_steps(y) {
                if checker.consistent(&x) {
                    let (canon, key) = canonical_with_key(&x);
                    row.entry(key).or_insert(canon);
                }
            }
        }
        allow_rows.push((k, row.into_values().collect()));
    }
    Suites {
        forbid,
        generators,
        allow_rows,
    }
}

pub fn summarize(m: &Model, baseline: Option<&Model>, sig: &Signature) -> SummaryTable {
    let s = suites(m, baseline, sig);
    let rows = (1..=sig.max_events)
        .map(|k| SummaryRow {
            events: k,
            forbid: s.forbid.iter().filter(|x| x.len() == k).count(),
            allow: s.allow_rows[k - 1].1.len(),
        })
        .collect();
    let mut hist: BTreeMap<usize, usize> = BTreeMap::new();
    for x in &s.forbid {
        *hist.entry(x.stxn_classes().len()).or_insert(0) += 1;
    }
    SummaryTable {
        model: m.name.clone(),
        baseline: baseline.map(|b| b.name.clone()),
        rows,
        forbid_txn_histogram: hist.into_iter().collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::execution::deserialize;
    use crate::models::{by_name, model_x86_tm};

    #[test]
    fn single_event_sc_enumeration() {
        let mut sig = Signature::for_arch(Arch::Sc, 1);
        sig.txns = false;
        let xs = enumerate(&sig);
        assert_eq!(xs.len(), 2); // one read, one write
    }

    #[test]
    fn zero_bound_is_empty() {
        let sig = Signature::for_arch(Arch::Sc, 0);
        assert!(enumerate(&sig).is_empty());
    }

    #[test]
    fn enumeration_is_deterministic() {
        let sig = Signature::for_arch(Arch::X86, 2);
        let a = enumerate(&sig);
        let b = enumerate(&sig);
        assert_eq!(a.len(), b.len());
        assert!(a.iter().zip(&b).all(|(x, y)| x == y));
    }

    #[test]
    fn shrinks_of_single_event_transaction() {
        let x = deserialize("arch tsc\nevent 0 W x 1\nthread 0\nstxn { 0 }\n")
            .unwrap()
            .execution;
        let steps = shrink_steps(&x);
        assert_eq!(steps.len(), 2);
        assert!(matches!(steps[0].0, ShrinkStep::RemoveEvent(_)));
        assert!(matches!(steps[1].0, ShrinkStep::DetxnBoundary(_)));
    }

    #[test]
    fn ctrl_edge_shrink_is_offered() {
        let x = deserialize(
            "arch power\nevent 0 R x 0\nevent 1 W y 1\nthread 0 1\nctrl 0 1\n",
        )
        .unwrap()
        .execution;
        let steps = shrink_steps(&x);
        assert!(steps
            .iter()
            .any(|(s, _)| matches!(s, ShrinkStep::RemoveDep(DepEdge::Ctrl, _, _))));
    }

    #[test]
    fn detxn_offered_only_at_boundaries() {
        let x = deserialize(
            "arch tsc\nevent 0 W x 1\nevent 1 W y 1\nevent 2 W z 1\nthread 0 1 2\nstxn { 0 1 2 }\n",
        )
        .unwrap()
        .execution;
        let detxns: Vec<EventId> = shrink_steps(&x)
            .into_iter()
            .filter_map(|(s, _)| match s {
                ShrinkStep::DetxnBoundary(e) => Some(e),
                _ => None,
            })
            .collect();
        assert_eq!(detxns, vec![EventId(0), EventId(2)]);
    }

    #[test]
    fn every_shrink_decreases_the_measure_and_stays_wellformed() {
        let sig = Signature::for_arch(Arch::Armv8, 3);
        let mut checked = 0;
        for x in enumerate(&sig).into_iter().take(4000) {
            let mx = measure(&x);
            for (step, y) in shrink_steps(&x) {
                let rep = crate::execution::validate_wellformed(&y);
                assert!(rep.ok(), "{step:?} broke well-formedness: {rep}");
                assert!(measure(&y) < mx, "{step:?} did not decrease the measure");
                checked += 1;
            }
        }
        assert!(checked > 0);
    }

    #[test]
    fn canonicalize_identifies_symmetric_variants() {
        // Thread-swapped store-buffering halves.
        let a = deserialize(
            "arch x86\nevent 0 W x 1\nevent 1 R y 0\nevent 2 W y 1\nevent 3 R x 0\nthread 0 1\nthread 2 3\n",
        )
        .unwrap()
        .execution;
        let b = deserialize(
            "arch x86\nevent 0 W y 1\nevent 1 R x 0\nevent 2 W x 1\nevent 3 R y 0\nthread 0 1\nthread 2 3\n",
        )
        .unwrap()
        .execution;
        assert_eq!(canonicalize(&a), canonicalize(&b));
        // Location renaming.
        let c = deserialize(
            "arch x86\nevent 0 W z 1\nevent 1 R x 0\nevent 2 W x 1\nevent 3 R z 0\nthread 0 1\nthread 2 3\n",
        )
        .unwrap()
        .execution;
        assert_eq!(canonicalize(&a), canonicalize(&c));
    }

    #[test]
    fn canonicalize_distinguishes_different_shapes() {
        let a = deserialize(
            "arch tsc\nevent 0 R x 0\nevent 1 R x 1\nevent 2 W x 1\nthread 0 1\nthread 2\nrf 2 1\nstxn { 0 1 }\n",
        )
        .unwrap()
        .execution;
        let d = deserialize(
            "arch tsc\nevent 0 W x 1\nevent 1 W x 2\nevent 2 R x 1\nthread 0 1\nthread 2\nco 0 1\nrf 0 2\nstxn { 0 1 }\n",
        )
        .unwrap()
        .execution;
        assert_ne!(canonicalize(&a), canonicalize(&d));
    }

    #[test]
    fn x86_bound2_suites() {
        let m = model_x86_tm();
        let baseline = by_name("x86").unwrap();
        let sig = Signature::for_arch(Arch::X86, 2);
        let forbid = min_inconsistent(&m, Some(&baseline), &sig);
        assert_eq!(forbid.len(), 0, "{forbid:?}");
        let allow = max_consistent(&m, &sig);
        assert_eq!(allow.len(), 2, "{:#?}", allow.iter().map(crate::execution::serialize).collect::<Vec<_>>());
    }

    #[test]
    fn power_bound2_suites() {
        let m = by_name("power-tm").unwrap();
        let baseline = by_name("power").unwrap();
        let sig = Signature::for_arch(Arch::Power, 2);
        let forbid = min_inconsistent(&m, Some(&baseline), &sig);
        assert_eq!(
            forbid.len(),
            2,
            "{:#?}",
            forbid.iter().map(crate::execution::serialize).collect::<Vec<_>>()
        );
        let allow = max_consistent(&m, &sig);
        assert_eq!(
            allow.len(),
            7,
            "{:#?}",
            allow.iter().map(crate::execution::serialize).collect::<Vec<_>>()
        );
    }

    #[test]
    fn x86_bound3_forbid_is_the_isolation_quartet() {
        let m = model_x86_tm();
        let baseline = by_name("x86").unwrap();
        let sig = Signature::for_arch(Arch::X86, 3);
        let forbid = min_inconsistent(&m, Some(&baseline), &sig);
        assert_eq!(
            forbid.len(),
            4,
            "{:#?}",
            forbid.iter().map(crate::execution::serialize).collect::<Vec<_>>()
        );
        // All four fail strong isolation with a two-event transaction.
        for x in &forbid {
            assert_eq!(x.len(), 3);
            let v = m.check(x).unwrap();
            assert!(v.violated.contains(&"StrongIsol".to_string()));
        }
    }
}
