use super::MAX_EVENTS;
use std::fmt;

/// Index of an event within one execution's event table.
///
/// Ids are small and dense: the events of an execution with `n` events are
/// exactly `0..n`. Ids are not stable across executions.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EventId(pub u8);

impl EventId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Debug for EventId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

impl fmt::Display for EventId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A subset of an execution's events, as a bitmask.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct EventSet {
    n: u8,
    bits: u16,
}

impl EventSet {
    pub fn empty(n: usize) -> Self {
        debug_assert!(n <= MAX_EVENTS);
        EventSet { n: n as u8, bits: 0 }
    }

    pub fn full(n: usize) -> Self {
        debug_assert!(n <= MAX_EVENTS);
        EventSet {
            n: n as u8,
            bits: mask(n),
        }
    }

    pub fn from_iter(n: usize, it: impl IntoIterator<Item = EventId>) -> Self {
        let mut s = EventSet::empty(n);
        for e in it {
            s.insert(e);
        }
        s
    }

    #[inline]
    pub fn universe_size(&self) -> usize {
        self.n as usize
    }

    #[inline]
    pub fn insert(&mut self, e: EventId) {
        debug_assert!(e.index() < self.n as usize);
        self.bits |= 1 << e.0;
    }

    #[inline]
    pub fn contains(&self, e: EventId) -> bool {
        self.bits & (1 << e.0) != 0
    }

    #[inline]
    pub fn bits(&self) -> u16 {
        self.bits
    }

    #[inline]
    pub fn from_bits(n: usize, bits: u16) -> Self {
        EventSet {
            n: n as u8,
            bits: bits & mask(n),
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.bits.count_ones() as usize
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.bits == 0
    }

    pub fn union(&self, other: &EventSet) -> EventSet {
        EventSet {
            n: self.n,
            bits: self.bits | other.bits,
        }
    }

    pub fn inter(&self, other: &EventSet) -> EventSet {
        EventSet {
            n: self.n,
            bits: self.bits & other.bits,
        }
    }

    pub fn diff(&self, other: &EventSet) -> EventSet {
        EventSet {
            n: self.n,
            bits: self.bits & !other.bits,
        }
    }

    pub fn complement(&self) -> EventSet {
        EventSet {
            n: self.n,
            bits: !self.bits & mask(self.n as usize),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = EventId> + '_ {
        let n = self.n;
        (0..n).filter(|i| self.bits & (1 << i) != 0).map(EventId)
    }
}

impl fmt::Debug for EventSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, e) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, "}}")
    }
}

#[inline]
fn mask(n: usize) -> u16 {
    if n >= 16 {
        u16::MAX
    } else {
        (1u16 << n) - 1
    }
}

/// A binary relation over an execution's events.
///
/// `rows[i]` holds the successor set of event `i` as a bitmask. All
/// operations treat the universe as `0..n`; complement is taken relative to
/// the full pair universe `E x E`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rel {
    n: u8,
    rows: [u16; MAX_EVENTS],
}

impl Rel {
    pub fn empty(n: usize) -> Self {
        debug_assert!(n <= MAX_EVENTS);
        Rel {
            n: n as u8,
            rows: [0; MAX_EVENTS],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut r = Rel::empty(n);
        for i in 0..n {
            r.rows[i] = 1 << i;
        }
        r
    }

    pub fn full(n: usize) -> Self {
        let mut r = Rel::empty(n);
        for i in 0..n {
            r.rows[i] = mask(n);
        }
        r
    }

    pub fn from_pairs(n: usize, pairs: impl IntoIterator<Item = (EventId, EventId)>) -> Self {
        let mut r = Rel::empty(n);
        for (a, b) in pairs {
            r.insert(a, b);
        }
        r
    }

    #[inline]
    pub fn universe_size(&self) -> usize {
        self.n as usize
    }

    #[inline]
    pub fn insert(&mut self, a: EventId, b: EventId) {
        debug_assert!(a.index() < self.n as usize && b.index() < self.n as usize);
        self.rows[a.index()] |= 1 << b.0;
    }

    #[inline]
    pub fn remove(&mut self, a: EventId, b: EventId) {
        self.rows[a.index()] &= !(1 << b.0);
    }

    #[inline]
    pub fn contains(&self, a: EventId, b: EventId) -> bool {
        self.rows[a.index()] & (1 << b.0) != 0
    }

    #[inline]
    pub fn row(&self, a: EventId) -> u16 {
        self.rows[a.index()]
    }

    #[inline]
    pub fn set_row(&mut self, a: EventId, bits: u16) {
        self.rows[a.index()] = bits & mask(self.n as usize);
    }

    pub fn is_empty(&self) -> bool {
        self.rows[..self.n as usize].iter().all(|&r| r == 0)
    }

    pub fn len(&self) -> usize {
        self.rows[..self.n as usize]
            .iter()
            .map(|r| r.count_ones() as usize)
            .sum()
    }

    pub fn pairs(&self) -> Vec<(EventId, EventId)> {
        let mut out = Vec::new();
        for a in 0..self.n {
            let mut bits = self.rows[a as usize];
            while bits != 0 {
                let b = bits.trailing_zeros() as u8;
                bits &= bits - 1;
                out.push((EventId(a), EventId(b)));
            }
        }
        out
    }

    pub fn union(&self, other: &Rel) -> Rel {
        debug_assert_eq!(self.n, other.n);
        let mut r = *self;
        for i in 0..self.n as usize {
            r.rows[i] |= other.rows[i];
        }
        r
    }

    pub fn inter(&self, other: &Rel) -> Rel {
        debug_assert_eq!(self.n, other.n);
        let mut r = *self;
        for i in 0..self.n as usize {
            r.rows[i] &= other.rows[i];
        }
        r
    }

    pub fn diff(&self, other: &Rel) -> Rel {
        debug_assert_eq!(self.n, other.n);
        let mut r = *self;
        for i in 0..self.n as usize {
            r.rows[i] &= !other.rows[i];
        }
        r
    }

    /// Complement relative to `E x E`.
    pub fn complement(&self) -> Rel {
        let m = mask(self.n as usize);
        let mut r = Rel::empty(self.n as usize);
        for i in 0..self.n as usize {
            r.rows[i] = !self.rows[i] & m;
        }
        r
    }

    /// Relational composition `self ; other`.
    pub fn seq(&self, other: &Rel) -> Rel {
        debug_assert_eq!(self.n, other.n);
        let mut r = Rel::empty(self.n as usize);
        for i in 0..self.n as usize {
            let mut mid = self.rows[i];
            let mut acc = 0u16;
            while mid != 0 {
                let j = mid.trailing_zeros() as usize;
                mid &= mid - 1;
                acc |= other.rows[j];
            }
            r.rows[i] = acc;
        }
        r
    }

    pub fn inverse(&self) -> Rel {
        let mut r = Rel::empty(self.n as usize);
        for a in 0..self.n as usize {
            let mut bits = self.rows[a];
            while bits != 0 {
                let b = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                r.rows[b] |= 1 << a;
            }
        }
        r
    }

    /// Reflexive closure `r?`.
    pub fn rclos(&self) -> Rel {
        self.union(&Rel::identity(self.n as usize))
    }

    /// Transitive closure `r+`, computed to fixpoint.
    pub fn tclos(&self) -> Rel {
        let n = self.n as usize;
        let mut r = *self;
        for k in 0..n {
            let row_k = r.rows[k];
            if row_k == 0 {
                continue;
            }
            let bit = 1u16 << k;
            for i in 0..n {
                if r.rows[i] & bit != 0 {
                    r.rows[i] |= row_k;
                }
            }
        }
        r
    }

    /// Reflexive transitive closure `r*`.
    pub fn rtclos(&self) -> Rel {
        self.tclos().union(&Rel::identity(self.n as usize))
    }

    /// `[s]`: the identity relation restricted to `s`.
    pub fn lift_set(s: &EventSet) -> Rel {
        let mut r = Rel::empty(s.universe_size());
        for e in s.iter() {
            r.insert(e, e);
        }
        r
    }

    /// Cartesian product `s x t` of two event sets.
    pub fn cross(s: &EventSet, t: &EventSet) -> Rel {
        debug_assert_eq!(s.universe_size(), t.universe_size());
        let mut r = Rel::empty(s.universe_size());
        for a in s.iter() {
            r.rows[a.index()] = t.bits();
        }
        r
    }

    pub fn domain(&self) -> EventSet {
        let mut s = EventSet::empty(self.n as usize);
        for a in 0..self.n {
            if self.rows[a as usize] != 0 {
                s.insert(EventId(a));
            }
        }
        s
    }

    pub fn range(&self) -> EventSet {
        let mut bits = 0u16;
        for a in 0..self.n as usize {
            bits |= self.rows[a];
        }
        EventSet::from_bits(self.n as usize, bits)
    }

    pub fn is_subset_of(&self, other: &Rel) -> bool {
        debug_assert_eq!(self.n, other.n);
        (0..self.n as usize).all(|i| self.rows[i] & !other.rows[i] == 0)
    }
}

impl fmt::Debug for Rel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (a, b)) in self.pairs().into_iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "({a},{b})")?;
        }
        write!(f, "}}")
    }
}

/// True iff `r+` is irreflexive.
pub fn acyclic(r: &Rel) -> bool {
    irreflexive(&r.tclos())
}

pub fn irreflexive(r: &Rel) -> bool {
    (0..r.universe_size()).all(|i| r.rows[i] & (1 << i) == 0)
}

pub fn is_empty(r: &Rel) -> bool {
    r.is_empty()
}

/// Lift `r` from events to whole transactions: `t ; (r \ t) ; t`.
///
/// `t` is a partial equivalence relation; events outside `t`'s domain have
/// no self-pair, so edges touching untransactional events are dropped.
pub fn weaklift(r: &Rel, t: &Rel) -> Rel {
    t.seq(&r.diff(t)).seq(t)
}

/// Like [`weaklift`] but keeps untransactional endpoints: `t? ; (r \ t) ; t?`.
pub fn stronglift(r: &Rel, t: &Rel) -> Rel {
    let tq = t.rclos();
    tq.seq(&r.diff(t)).seq(&tq)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(i: u8) -> EventId {
        EventId(i)
    }

    #[test]
    fn transitive_closure_basic() {
        // r+ with r={(a,b),(b,c)} -> {(a,b),(b,c),(a,c)}
        let r = Rel::from_pairs(3, [(e(0), e(1)), (e(1), e(2))]);
        let expect = Rel::from_pairs(3, [(e(0), e(1)), (e(1), e(2)), (e(0), e(2))]);
        assert_eq!(r.tclos(), expect);
    }

    #[test]
    fn lift_restricts_identity() {
        // [S];r with S={a}, r={(a,b),(c,d)} -> {(a,b)}
        let s = EventSet::from_iter(4, [e(0)]);
        let r = Rel::from_pairs(4, [(e(0), e(1)), (e(2), e(3))]);
        let got = Rel::lift_set(&s).seq(&r);
        assert_eq!(got, Rel::from_pairs(4, [(e(0), e(1))]));
    }

    #[test]
    fn acyclic_cases() {
        assert!(acyclic(&Rel::empty(2)));
        assert!(!acyclic(&Rel::from_pairs(2, [(e(0), e(1)), (e(1), e(0))])));
        assert!(acyclic(&Rel::from_pairs(
            3,
            [(e(0), e(1)), (e(1), e(2)), (e(0), e(2))]
        )));
    }

    #[test]
    fn predicate_cases() {
        assert!(!irreflexive(&Rel::from_pairs(1, [(e(0), e(0))])));
        assert!(irreflexive(&Rel::from_pairs(2, [(e(0), e(1))])));
        assert!(is_empty(&Rel::empty(3)));
        assert!(!is_empty(&Rel::from_pairs(2, [(e(0), e(1))])));
    }

    /// PER over the listed classes: all intra-class pairs including
    /// self-pairs, nothing for events not listed.
    fn per(n: usize, classes: &[&[u8]]) -> Rel {
        let mut t = Rel::empty(n);
        for class in classes {
            for &a in *class {
                for &b in *class {
                    t.insert(e(a), e(b));
                }
            }
        }
        t
    }

    #[test]
    fn weaklift_expansion() {
        // r={(b,c)}, t the PER of classes {a,b} and {c} -> {(a,c),(b,c)}
        let r = Rel::from_pairs(3, [(e(1), e(2))]);
        let t = per(3, &[&[0, 1], &[2]]);
        assert_eq!(
            weaklift(&r, &t),
            Rel::from_pairs(3, [(e(0), e(2)), (e(1), e(2))])
        );
    }

    #[test]
    fn weaklift_drops_untransactional_target() {
        // c untransactional: the trailing ;t kills the pair.
        let r = Rel::from_pairs(3, [(e(1), e(2))]);
        let t = per(3, &[&[0, 1]]);
        assert!(weaklift(&r, &t).is_empty());
    }

    #[test]
    fn weaklift_of_contained_relation_is_empty() {
        let t = per(3, &[&[0, 1, 2]]);
        let r = Rel::from_pairs(3, [(e(0), e(1)), (e(1), e(2))]);
        assert!(weaklift(&r, &t).is_empty());
    }

    #[test]
    fn stronglift_keeps_untransactional_endpoints() {
        // r={(b,c)}, t PER of {a,b}, c untransactional -> {(a,c),(b,c)}
        let r = Rel::from_pairs(3, [(e(1), e(2))]);
        let t = per(3, &[&[0, 1]]);
        assert_eq!(
            stronglift(&r, &t),
            Rel::from_pairs(3, [(e(0), e(2)), (e(1), e(2))])
        );
        // r={(c,b)}, t PER of {a,b} -> {(c,b),(c,a)}
        let r = Rel::from_pairs(3, [(e(2), e(1))]);
        assert_eq!(
            stronglift(&r, &t),
            Rel::from_pairs(3, [(e(2), e(1)), (e(2), e(0))])
        );
    }

    #[test]
    fn stronglift_with_empty_txn_is_original() {
        let r = Rel::from_pairs(3, [(e(0), e(2)), (e(2), e(1))]);
        assert_eq!(stronglift(&r, &Rel::empty(3)), r);
    }

    #[test]
    fn weaklift_subset_of_stronglift() {
        let r = Rel::from_pairs(4, [(e(0), e(2)), (e(2), e(3)), (e(3), e(1))]);
        let t = per(4, &[&[0, 1]]);
        assert!(weaklift(&r, &t).is_subset_of(&stronglift(&r, &t)));
    }
}
