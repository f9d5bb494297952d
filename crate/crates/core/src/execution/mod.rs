//! Execution graphs: events, base relations, well-formedness and the
//! derived relations the consistency models are written against.

mod base;
mod fmt;
mod wf;

pub use base::{base_index, base_values, BASE_NAMES};
pub use fmt::{deserialize, serialize, ExecDoc, Expect, ExpectVerdict, ParseError};
pub use wf::{validate_wellformed, Rule, RuleViolation, WellformednessReport};

use crate::relalg::{EventId, EventSet, Rel, Value};
use std::collections::HashMap;

/// Target architecture (or language) of an execution.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub enum Arch {
    Sc,
    Tsc,
    X86,
    Power,
    Armv8,
    Cpp,
}

impl Arch {
    pub fn name(self) -> &'static str {
        match self {
            Arch::Sc => "sc",
            Arch::Tsc => "tsc",
            Arch::X86 => "x86",
            Arch::Power => "power",
            Arch::Armv8 => "armv8",
            Arch::Cpp => "cpp",
        }
    }

    pub fn from_name(s: &str) -> Option<Arch> {
        Some(match s {
            "sc" => Arch::Sc,
            "tsc" => Arch::Tsc,
            "x86" => Arch::X86,
            "power" => Arch::Power,
            "armv8" => Arch::Armv8,
            "cpp" => Arch::Cpp,
            _ => return None,
        })
    }

    /// SC and TSC describe the same executions; every other arch only its own.
    pub fn compatible_with(self, other: Arch) -> bool {
        self == other || (matches!(self, Arch::Sc | Arch::Tsc) && matches!(other, Arch::Sc | Arch::Tsc))
    }

    pub fn fence_flavors(self) -> &'static [FenceFlavor] {
        match self {
            Arch::Sc | Arch::Tsc | Arch::Cpp => &[],
            Arch::X86 => &[FenceFlavor::Mfence],
            Arch::Power => &[FenceFlavor::Sync, FenceFlavor::Lwsync, FenceFlavor::Isync],
            Arch::Armv8 => &[
                FenceFlavor::Dmb,
                FenceFlavor::Dmbld,
                FenceFlavor::Dmbst,
                FenceFlavor::Isb,
            ],
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub enum FenceFlavor {
    Mfence,
    Sync,
    Lwsync,
    Isync,
    Dmb,
    Dmbld,
    Dmbst,
    Isb,
}

impl FenceFlavor {
    pub const ALL: [FenceFlavor; 8] = [
        FenceFlavor::Mfence,
        FenceFlavor::Sync,
        FenceFlavor::Lwsync,
        FenceFlavor::Isync,
        FenceFlavor::Dmb,
        FenceFlavor::Dmbld,
        FenceFlavor::Dmbst,
        FenceFlavor::Isb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FenceFlavor::Mfence => "mfence",
            FenceFlavor::Sync => "sync",
            FenceFlavor::Lwsync => "lwsync",
            FenceFlavor::Isync => "isync",
            FenceFlavor::Dmb => "dmb",
            FenceFlavor::Dmbld => "dmbld",
            FenceFlavor::Dmbst => "dmbst",
            FenceFlavor::Isb => "isb",
        }
    }

    pub fn from_name(s: &str) -> Option<FenceFlavor> {
        FenceFlavor::ALL.into_iter().find(|f| f.name() == s)
    }

    /// Uppercase name of the fence-event set bound in eval environments.
    pub fn set_name(self) -> &'static str {
        match self {
            FenceFlavor::Mfence => "MFENCE",
            FenceFlavor::Sync => "SYNC",
            FenceFlavor::Lwsync => "LWSYNC",
            FenceFlavor::Isync => "ISYNC",
            FenceFlavor::Dmb => "DMB",
            FenceFlavor::Dmbld => "DMBLD",
            FenceFlavor::Dmbst => "DMBST",
            FenceFlavor::Isb => "ISB",
        }
    }
}

/// Lock-call events used by the lock-elision analysis. `LockElided` and
/// `UnlockElided` mark critical regions that will be transactionalised.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub enum LockKind {
    Lock,
    Unlock,
    LockElided,
    UnlockElided,
}

impl LockKind {
    pub fn name(self) -> &'static str {
        match self {
            LockKind::Lock => "L",
            LockKind::Unlock => "U",
            LockKind::LockElided => "Lt",
            LockKind::UnlockElided => "Ut",
        }
    }

    pub fn is_open(self) -> bool {
        matches!(self, LockKind::Lock | LockKind::LockElided)
    }

    pub fn is_elided(self) -> bool {
        matches!(self, LockKind::LockElided | LockKind::UnlockElided)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub enum EventKind {
    Read,
    Write,
    Fence(FenceFlavor),
    Lock(LockKind),
}

impl EventKind {
    pub fn is_read(self) -> bool {
        self == EventKind::Read
    }

    pub fn is_write(self) -> bool {
        self == EventKind::Write
    }

    pub fn is_memory(self) -> bool {
        matches!(self, EventKind::Read | EventKind::Write)
    }

    pub fn is_fence(self) -> bool {
        matches!(self, EventKind::Fence(_))
    }

    pub fn is_lock(self) -> bool {
        matches!(self, EventKind::Lock(_))
    }
}

/// Attribute tags on an event.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Tags(u8);

impl Tags {
    pub const NONE: Tags = Tags(0);
    pub const ACQ: Tags = Tags(1);
    pub const REL: Tags = Tags(2);
    pub const SC: Tags = Tags(4);
    pub const ATO: Tags = Tags(8);
    pub const EXCL: Tags = Tags(16);

    pub fn with(self, other: Tags) -> Tags {
        Tags(self.0 | other.0)
    }

    pub fn without(self, other: Tags) -> Tags {
        Tags(self.0 & !other.0)
    }

    pub fn has(self, other: Tags) -> bool {
        self.0 & other.0 == other.0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Close tags under implication: SC accesses are also acquire/release
    /// (per kind) and atomic.
    pub fn normalized(self, kind: EventKind) -> Tags {
        let mut t = self;
        if t.has(Tags::SC) {
            t = t.with(Tags::ATO);
            if kind.is_read() {
                t = t.with(Tags::ACQ);
            }
            if kind.is_write() {
                t = t.with(Tags::REL);
            }
        }
        t
    }

    pub fn names(self) -> Vec<&'static str> {
        let mut out = Vec::new();
        for (t, n) in [
            (Tags::ACQ, "acq"),
            (Tags::REL, "rel"),
            (Tags::SC, "sc"),
            (Tags::ATO, "ato"),
            (Tags::EXCL, "excl"),
        ] {
            if self.has(t) {
                out.push(n);
            }
        }
        out
    }

    pub fn from_name(s: &str) -> Option<Tags> {
        Some(match s {
            "acq" => Tags::ACQ,
            "rel" => Tags::REL,
            "sc" => Tags::SC,
            "ato" => Tags::ATO,
            "excl" => Tags::EXCL,
            _ => return None,
        })
    }
}

impl std::fmt::Debug for Tags {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}]", self.names().join(","))
    }
}

/// One memory-system event.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Event {
    pub id: EventId,
    pub kind: EventKind,
    /// Location accessed; `None` for fences. Lock events carry the mutex.
    pub loc: Option<u8>,
    /// Writes: the value stored. Reads: the value observed (the rf source's
    /// value, or 0 when reading the initial state).
    pub value: u32,
    pub tags: Tags,
}

/// A finite execution graph.
///
/// `po` must be a union of per-thread strict total orders; threads are the
/// weakly-connected components of `po`. `sloc`, the fence relations and the
/// critical-region relations are derived on demand rather than stored.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Execution {
    pub arch: Arch,
    pub events: Vec<Event>,
    pub po: Rel,
    pub addr: Rel,
    pub ctrl: Rel,
    pub data: Rel,
    pub rmw: Rel,
    pub rf: Rel,
    pub co: Rel,
    pub stxn: Rel,
    pub satxn: Rel,
}

impl Execution {
    pub fn empty(arch: Arch) -> Execution {
        Execution {
            arch,
            events: Vec::new(),
            po: Rel::empty(0),
            addr: Rel::empty(0),
            ctrl: Rel::empty(0),
            data: Rel::empty(0),
            rmw: Rel::empty(0),
            rf: Rel::empty(0),
            co: Rel::empty(0),
            stxn: Rel::empty(0),
            satxn: Rel::empty(0),
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.events.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn event(&self, e: EventId) -> &Event {
        &self.events[e.index()]
    }

    pub fn event_ids(&self) -> impl Iterator<Item = EventId> {
        (0..self.events.len() as u8).map(EventId)
    }

    pub fn kind_set(&self, pred: impl Fn(&Event) -> bool) -> EventSet {
        EventSet::from_iter(
            self.len(),
            self.events.iter().filter(|e| pred(e)).map(|e| e.id),
        )
    }

    pub fn reads(&self) -> EventSet {
        self.kind_set(|e| e.kind.is_read())
    }

    pub fn writes(&self) -> EventSet {
        self.kind_set(|e| e.kind.is_write())
    }

    pub fn fences(&self) -> EventSet {
        self.kind_set(|e| e.kind.is_fence())
    }

    /// Threads as lists of events in program order. Thread identity is the
    /// weakly-connected component of `po`; single events form singleton
    /// threads. Ordered by smallest member id.
    pub fn threads(&self) -> Vec<Vec<EventId>> {
        let n = self.len();
        let mut seen: u16 = 0;
        let mut out = Vec::new();
        for i in 0..n {
            if seen & (1 << i) != 0 {
                continue;
            }
            // Component of i under po in either direction, by bitset BFS.
            let mut comp: u16 = 1 << i;
            loop {
                let mut next = comp;
                for j in 0..n {
                    if comp & (1 << j) != 0 {
                        next |= self.po.row(EventId(j as u8));
                    } else if self.po.row(EventId(j as u8)) & comp != 0 {
                        next |= 1 << j;
                    }
                }
                if next == comp {
                    break;
                }
                comp = next;
            }
            seen |= comp;
            let mut members: Vec<EventId> = (0..n)
                .filter(|&j| comp & (1 << j) != 0)
                .map(|j| EventId(j as u8))
                .collect();
            // po position: more po-successors = earlier.
            members.sort_by_key(|&m| usize::MAX - (self.po.row(m).count_ones() as usize));
            out.push(members);
        }
        out
    }

    /// Same-location equivalence over events that carry a location of the
    /// same class (memory with memory, locks with locks).
    pub fn sloc(&self) -> Rel {
        let mut r = Rel::empty(self.len());
        for a in self.event_ids() {
            let ea = self.event(a);
            if !ea.kind.is_memory() {
                continue;
            }
            for b in self.event_ids() {
                let eb = self.event(b);
                if eb.kind.is_memory() && ea.loc == eb.loc {
                    r.insert(a, b);
                }
            }
        }
        r
    }

    /// `po` restricted to same-location memory events.
    pub fn poloc(&self) -> Rel {
        self.po.inter(&self.sloc())
    }

    /// From-read: each read related to every same-location write coherence-
    /// later than the write it observed. A read with no incoming `rf` reads
    /// the initial value and is `fr`-before every same-location write.
    pub fn derive_fr(&self) -> Rel {
        let n = self.len();
        let reads = Rel::lift_set(&self.reads());
        let writes = Rel::lift_set(&self.writes());
        let rsw = reads.seq(&self.sloc()).seq(&writes);
        let seen = self.rf.inverse().seq(&self.co.inverse().rtclos());
        rsw.diff(&seen).inter(&Rel::full(n).diff(&Rel::identity(n)))
    }

    /// `com = rf | co | fr`.
    pub fn derive_com(&self) -> Rel {
        self.rf.union(&self.co).union(&self.derive_fr())
    }

    /// Extended communication `ecom = com | (co;rf)`.
    pub fn derive_ecom(&self) -> Rel {
        self.derive_com().union(&self.co.seq(&self.rf))
    }

    /// Restrict `r` to inter-thread (`external`), intra-thread (`internal`)
    /// or same-location pairs.
    pub fn restrict(&self, r: &Rel, mode: RestrictMode) -> Rel {
        match mode {
            RestrictMode::External => r.diff(&self.po.union(&self.po.inverse()).rtclos()),
            RestrictMode::Internal => r.inter(&self.po.union(&self.po.inverse()).rtclos()),
            RestrictMode::SameLoc => r.inter(&self.sloc()),
        }
    }

    /// Architecture fence relations: for each flavor, the pairs of
    /// non-fence events separated in program order by a fence event of that
    /// flavor. `dmbld` keeps only read sources; `dmbst` only write-to-write
    /// pairs.
    pub fn derive_fences(&self) -> Vec<(FenceFlavor, Rel)> {
        let n = self.len();
        let mut out = Vec::new();
        for flavor in FenceFlavor::ALL {
            let mut r = Rel::empty(n);
            for f in self.event_ids() {
                if self.event(f).kind != EventKind::Fence(flavor) {
                    continue;
                }
                for a in self.event_ids() {
                    if self.event(a).kind.is_fence() || !self.po.contains(a, f) {
                        continue;
                    }
                    for b in self.event_ids() {
                        if self.event(b).kind.is_fence() || !self.po.contains(f, b) {
                            continue;
                        }
                        r.insert(a, b);
                    }
                }
            }
            r = match flavor {
                FenceFlavor::Dmbld => Rel::lift_set(&self.reads()).seq(&r),
                FenceFlavor::Dmbst => {
                    let w = Rel::lift_set(&self.writes());
                    w.seq(&r).seq(&w)
                }
                _ => r,
            };
            out.push((flavor, r));
        }
        out
    }

    pub fn lock_set(&self, kind: LockKind) -> EventSet {
        self.kind_set(|e| e.kind == EventKind::Lock(kind))
    }

    /// Critical-region equivalence: all events in the same critical region
    /// (lock calls included) are related; `scrt` keeps only the regions
    /// opened by an elided lock.
    pub fn derive_scr(&self) -> (Rel, Rel) {
        let n = self.len();
        let mut scr = Rel::empty(n);
        let mut scrt = Rel::empty(n);
        for thread in self.threads() {
            let mut region: Vec<EventId> = Vec::new();
            let mut open: Option<LockKind> = None;
            for &e in &thread {
                match self.event(e).kind {
                    EventKind::Lock(k) if k.is_open() => {
                        region = vec![e];
                        open = Some(k);
                    }
                    EventKind::Lock(_) => {
                        region.push(e);
                        for &a in &region {
                            for &b in &region {
                                scr.insert(a, b);
                                if open == Some(LockKind::LockElided) {
                                    scrt.insert(a, b);
                                }
                            }
                        }
                        region.clear();
                        open = None;
                    }
                    _ => {
                        if open.is_some() {
                            region.push(e);
                        }
                    }
                }
            }
        }
        (scr, scrt)
    }

    /// Recompute read values from `rf` (0 for reads of the initial state).
    pub fn refresh_read_values(&mut self) {
        let rf_inv = self.rf.inverse();
        for i in 0..self.events.len() {
            if self.events[i].kind.is_read() {
                let sources = rf_inv.row(EventId(i as u8));
                self.events[i].value = if sources == 0 {
                    0
                } else {
                    self.events[sources.trailing_zeros() as usize].value
                };
            }
        }
    }

    /// Name environment for evaluating relation expressions against this
    /// execution. Relations are lowercase, event sets capitalised; see
    /// [`BASE_NAMES`] for the full table.
    pub fn env(&self) -> HashMap<String, Value> {
        BASE_NAMES
            .iter()
            .map(|n| n.to_string())
            .zip(base_values(self))
            .collect()
    }

    /// Copy with all transaction structure erased.
    pub fn erase_stxn(&self) -> Execution {
        let mut x = self.clone();
        x.stxn = Rel::empty(self.len());
        x.satxn = Rel::empty(self.len());
        x
    }

    /// The stxn classes, each a sorted list of events, ordered by smallest
    /// member.
    pub fn stxn_classes(&self) -> Vec<Vec<EventId>> {
        classes_of_per(&self.stxn, self.len())
    }

    pub fn satxn_classes(&self) -> Vec<Vec<EventId>> {
        classes_of_per(&self.satxn, self.len())
    }
}

/// Classes of a partial equivalence relation.
pub fn classes_of_per(t: &Rel, n: usize) -> Vec<Vec<EventId>> {
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for i in 0..n {
        let e = EventId(i as u8);
        if seen[i] || !t.contains(e, e) {
            continue;
        }
        let members: Vec<EventId> = (0..n)
            .map(|j| EventId(j as u8))
            .filter(|&j| t.contains(e, j))
            .collect();
        for m in &members {
            seen[m.index()] = true;
        }
        out.push(members);
    }
    out
}

/// Build a partial equivalence relation from classes.
pub fn per_from_classes(n: usize, classes: &[Vec<EventId>]) -> Rel {
    let mut t = Rel::empty(n);
    for class in classes {
        for &a in class {
            for &b in class {
                t.insert(a, b);
            }
        }
    }
    t
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum RestrictMode {
    External,
    Internal,
    SameLoc,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig1() -> Execution {
        deserialize(
            "arch tsc\n\
             event 0 W x 1\n\
             event 1 R x 2\n\
             event 2 W x 2\n\
             thread 0 1\n\
             thread 2\n\
             rf 2 1\n\
             co 0 2\n",
        )
        .unwrap()
        .execution
    }

    #[test]
    fn fig1_fr_is_empty() {
        // The read observes the co-maximal write.
        assert!(fig1().derive_fr().is_empty());
    }

    #[test]
    fn fig1_com_edges() {
        let x = fig1();
        let com = x.derive_com();
        assert_eq!(
            com,
            Rel::from_pairs(3, [(EventId(2), EventId(1)), (EventId(0), EventId(2))])
        );
    }

    #[test]
    fn reads_only_execution_has_empty_com() {
        let x = deserialize(
            "arch sc\nevent 0 R x 0\nevent 1 R x 0\nthread 0\nthread 1\n",
        )
        .unwrap()
        .execution;
        assert!(x.derive_com().is_empty());
    }

    #[test]
    fn fr_from_rf_and_co() {
        // rf(w1,r), co(w1,w2) -> fr = {(r,w2)}
        let x = deserialize(
            "arch sc\n\
             event 0 W x 1\n\
             event 1 W x 2\n\
             event 2 R x 1\n\
             thread 0\nthread 1\nthread 2\n\
             rf 0 2\n\
             co 0 1\n",
        )
        .unwrap()
        .execution;
        assert_eq!(x.derive_fr(), Rel::from_pairs(3, [(EventId(2), EventId(1))]));
    }

    #[test]
    fn fr_for_initial_read() {
        // read with no rf, one same-location write -> fr = {(r,w)}
        let x = deserialize(
            "arch sc\nevent 0 R x 0\nevent 1 W x 1\nthread 0\nthread 1\n",
        )
        .unwrap()
        .execution;
        assert_eq!(x.derive_fr(), Rel::from_pairs(2, [(EventId(0), EventId(1))]));
    }

    #[test]
    fn restrict_modes() {
        // intra-thread rf -> rfe empty; cross-thread rf -> rfi empty
        let intra = deserialize(
            "arch sc\nevent 0 W x 1\nevent 1 R x 1\nthread 0 1\nrf 0 1\n",
        )
        .unwrap()
        .execution;
        assert!(intra.restrict(&intra.rf, RestrictMode::External).is_empty());
        let inter = deserialize(
            "arch sc\nevent 0 W x 1\nevent 1 R x 1\nthread 0\nthread 1\nrf 0 1\n",
        )
        .unwrap()
        .execution;
        assert!(inter.restrict(&inter.rf, RestrictMode::Internal).is_empty());
        // co is already per-location: same_loc restriction is identity on it.
        let x = fig1();
        assert_eq!(x.restrict(&x.co, RestrictMode::SameLoc), x.co);
    }

    #[test]
    fn fence_relation_scopes() {
        // W; mfence; R in one thread -> mfence = {(W,R)}
        let x = deserialize(
            "arch x86\nevent 0 W x 1\nevent 1 F mfence\nevent 2 R y 0\nthread 0 1 2\n",
        )
        .unwrap()
        .execution;
        let fences = x.derive_fences();
        let mfence = fences
            .iter()
            .find(|(f, _)| *f == FenceFlavor::Mfence)
            .unwrap()
            .1;
        assert_eq!(mfence, Rel::from_pairs(3, [(EventId(0), EventId(2))]));

        // no fence events -> all fence relations empty
        let y = fig1();
        assert!(y.derive_fences().iter().all(|(_, r)| r.is_empty()));

        // W; dmbst; R -> dmbst empty (read target not covered)
        let z = deserialize(
            "arch armv8\nevent 0 W x 1\nevent 1 F dmbst\nevent 2 R y 0\nthread 0 1 2\n",
        )
        .unwrap()
        .execution;
        let dmbst = z
            .derive_fences()
            .into_iter()
            .find(|(f, _)| *f == FenceFlavor::Dmbst)
            .unwrap()
            .1;
        assert!(dmbst.is_empty());
    }

    #[test]
    fn threads_are_po_components() {
        let x = fig1();
        let threads = x.threads();
        assert_eq!(threads.len(), 2);
        assert_eq!(threads[0], vec![EventId(0), EventId(1)]);
        assert_eq!(threads[1], vec![EventId(2)]);
    }

    #[test]
    fn scr_groups_critical_regions() {
        let x = deserialize(
            "arch armv8\n\
             event 0 L m\n\
             event 1 W x 1\n\
             event 2 U m\n\
             event 3 Lt m\n\
             event 4 R x 1\n\
             event 5 Ut m\n\
             thread 0 1 2\n\
             thread 3 4 5\n\
             rf 1 4\n",
        )
        .unwrap()
        .execution;
        let (scr, scrt) = x.derive_scr();
        assert!(scr.contains(EventId(0), EventId(2)));
        assert!(scr.contains(EventId(1), EventId(1)));
        assert!(!scr.contains(EventId(1), EventId(4)));
        assert!(scrt.contains(EventId(3), EventId(5)));
        assert!(!scrt.contains(EventId(0), EventId(1)));
    }
}
