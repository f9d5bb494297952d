//! Litmus tests: a small DSL for concurrent programs with postconditions,
//! candidate-execution enumeration under a nondeterministic memory system,
//! test evaluation against a model, and conversion of executions back into
//! tests.
//!
//! Grammar (one statement per line, `#` comments):
//!
//! ```text
//! litmus NAME
//! arch armv8
//! init { x=0 y=0 }
//! thread P0 {
//!   r0 = load.acq x
//!   store y 1 data(r0)
//!   r1 = rmw m 1 ctrl(r0)
//!   fence dmb
//!   txbegin        # or: txbegin atomic
//!   txend
//!   lock m         # or: lock elide m / unlock m / unlock elide m
//! }
//! exists (P0:r0=1 /\ x=2 /\ ok0=1)
//! expect allowed armv8-tm
//! ```
//!
//! Loads and rmws bind registers; `okN=1` in the postcondition requires the
//! N-th transaction (thread-major program order) to have committed. A
//! `ctrl` annotation orders everything from that instruction to the end of
//! its thread after the named read, mirroring a conditional branch.

use crate::execution::{per_from_classes, Arch, Event, EventKind, Execution, FenceFlavor, LockKind, Tags};
use crate::models::{CheckError, Model};
use crate::relalg::{EventId, Rel};
use std::collections::HashMap;
use std::fmt::Write as _;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LitmusTest {
    pub name: Option<String>,
    pub arch: Arch,
    /// Declared locations; initial values are always zero.
    pub init: Vec<String>,
    pub threads: Vec<Thread>,
    pub post: Vec<PostTerm>,
    pub expects: Vec<TestExpect>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Thread {
    pub name: String,
    pub instrs: Vec<Instr>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Instr {
    Load { reg: String, loc: String, tags: Tags, deps: Vec<Dep> },
    Store { loc: String, value: u32, tags: Tags, deps: Vec<Dep> },
    Rmw { reg: String, loc: String, value: u32, tags: Tags, deps: Vec<Dep> },
    Fence(FenceFlavor),
    TxBegin { atomic: bool },
    TxEnd,
    Lock { mutex: String, elide: bool },
    Unlock { mutex: String, elide: bool },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DepKind {
    Addr,
    Ctrl,
    Data,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dep {
    pub kind: DepKind,
    pub reg: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PostTerm {
    Reg { thread: Option<String>, reg: String, value: u32 },
    Loc { loc: String, value: u32 },
    /// `okN=v`: transaction N committed (1) or failed (0).
    TxnOk { index: usize, ok: bool },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TestExpect {
    pub status: TestStatus,
    pub model: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TestStatus {
    Allowed,
    Forbidden,
    Undefined,
}

impl TestStatus {
    pub fn name(self) -> &'static str {
        match self {
            TestStatus::Allowed => "allowed",
            TestStatus::Forbidden => "forbidden",
            TestStatus::Undefined => "undefined",
        }
    }

    pub fn from_name(s: &str) -> Option<TestStatus> {
        Some(match s {
            "allowed" => TestStatus::Allowed,
            "forbidden" => TestStatus::Forbidden,
            "undefined" => TestStatus::Undefined,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum LitmusError {
    #[error("litmus parse error at {line}:{col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("unsupported at line {line}: {what}")]
    Unsupported { line: usize, what: String },
}

fn perr<T>(line: usize, col: usize, msg: impl Into<String>) -> Result<T, LitmusError> {
    Err(LitmusError::Parse { line, col, msg: msg.into() })
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

pub fn parse(text: &str) -> Result<LitmusTest, LitmusError> {
    let mut name = None;
    let mut arch: Option<Arch> = None;
    let mut init = Vec::new();
    let mut threads: Vec<Thread> = Vec::new();
    let mut post = Vec::new();
    let mut expects = Vec::new();
    let mut current: Option<Thread> = None;
    let mut txn_open = false;
    let mut lock_open = false;

    for (lno, raw) in text.lines().enumerate() {
        let lno = lno + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(t) = current.as_mut() {
            if line == "}" {
                if txn_open {
                    return perr(lno, 1, "transaction left open at end of thread");
                }
                if lock_open {
                    return perr(lno, 1, "critical region left open at end of thread");
                }
                threads.push(current.take().unwrap());
                continue;
            }
            let instr = parse_instr(line, lno, arch)?;
            match &instr {
                Instr::TxBegin { .. } => {
                    if txn_open {
                        return Err(LitmusError::Unsupported { line: lno, what: "nested transactions".into() });
                    }
                    txn_open = true;
                }
                Instr::TxEnd => {
                    if !txn_open {
                        return perr(lno, 1, "txend without txbegin");
                    }
                    txn_open = false;
                }
                Instr::Lock { .. } => {
                    if lock_open {
                        return Err(LitmusError::Unsupported { line: lno, what: "nested critical regions".into() });
                    }
                    lock_open = true;
                }
                Instr::Unlock { .. } => {
                    if !lock_open {
                        return perr(lno, 1, "unlock without lock");
                    }
                    lock_open = false;
                }
                _ => {}
            }
            t.instrs.push(instr);
            continue;
        }
        if let Some(rest) = line.strip_prefix("litmus ") {
            name = Some(rest.trim().trim_matches('"').to_string());
        } else if let Some(rest) = line.strip_prefix("arch ") {
            arch = Some(Arch::from_name(rest.trim()).ok_or_else(|| LitmusError::Parse {
                line: lno,
                col: 6,
                msg: format!("unknown architecture `{}`", rest.trim()),
            })?);
        } else if let Some(rest) = line.strip_prefix("init") {
            let inner = rest
                .trim()
                .strip_prefix('{')
                .and_then(|s| s.strip_suffix('}'))
                .ok_or_else(|| LitmusError::Parse { line: lno, col: 1, msg: "init needs `{ x=0 ... }`".into() })?;
            for item in inner.split(|c| c == ';' || c == ' ').map(str::trim).filter(|s| !s.is_empty()) {
                let (loc, val) = item
                    .split_once('=')
                    .ok_or_else(|| LitmusError::Parse { line: lno, col: 1, msg: format!("bad init item `{item}`") })?;
                if val.trim() != "0" {
                    return Err(LitmusError::Unsupported { line: lno, what: "non-zero initial values".into() });
                }
                init.push(loc.trim().to_string());
            }
        } else if let Some(rest) = line.strip_prefix("thread ") {
            if arch.is_none() {
                return perr(lno, 1, "`arch` must come before thread blocks");
            }
            if !rest.trim_end().ends_with('{') {
                return perr(lno, 1, "thread line must end with `{`");
            }
            let tname = rest.trim_end().trim_end_matches('{').trim();
            current = Some(Thread { name: tname.to_string(), instrs: Vec::new() });
        } else if let Some(rest) = line.strip_prefix("exists") {
            let inner = rest
                .trim()
                .strip_prefix('(')
                .and_then(|s| s.strip_suffix(')'))
                .ok_or_else(|| LitmusError::Parse { line: lno, col: 1, msg: "exists needs `( ... )`".into() })?;
            for term in inner.split("/\\").map(str::trim).filter(|s| !s.is_empty()) {
                post.push(parse_post_term(term, lno)?);
            }
        } else if let Some(rest) = line.strip_prefix("expect ") {
            let mut parts = rest.split_whitespace();
            let status = parts
                .next()
                .and_then(TestStatus::from_name)
                .ok_or_else(|| LitmusError::Parse { line: lno, col: 8, msg: "unknown expect status".into() })?;
            let model = parts
                .next()
                .ok_or_else(|| LitmusError::Parse { line: lno, col: 1, msg: "expect needs a model name".into() })?
                .to_string();
            expects.push(TestExpect { status, model });
        } else {
            return perr(lno, 1, format!("unknown statement `{line}`"));
        }
    }
    if current.is_some() {
        return perr(0, 0, "unterminated thread block");
    }
    let arch = arch.ok_or(LitmusError::Parse { line: 1, col: 1, msg: "missing `arch` line".into() })?;
    let t = LitmusTest { name, arch, init, threads, post, expects };
    validate_test(&t)?;
    Ok(t)
}

fn parse_instr(line: &str, lno: usize, arch: Option<Arch>) -> Result<Instr, LitmusError> {
    let arch = arch.ok_or(LitmusError::Parse { line: lno, col: 1, msg: "missing `arch`".into() })?;
    let words: Vec<&str> = line.split_whitespace().collect();
    if words.len() >= 3 && words[1] == "=" {
        let reg = words[0].to_string();
        let (op, tags) = split_op(words[2], lno)?;
        return match op {
            "load" => {
                let loc = req(&words, 3, "load needs a location", lno)?.to_string();
                Ok(Instr::Load {
                    reg,
                    loc,
                    tags: check_tags(tags, EventKind::Read, arch, lno)?,
                    deps: parse_deps(&words[4..], lno)?,
                })
            }
            "rmw" => {
                let loc = req(&words, 3, "rmw needs a location", lno)?.to_string();
                let value: u32 = req(&words, 4, "rmw needs a value", lno)?
                    .parse()
                    .map_err(|_| LitmusError::Parse { line: lno, col: 1, msg: "bad rmw value".into() })?;
                let tags = if arch == Arch::Cpp { tags.with(Tags::ATO) } else { tags };
                Ok(Instr::Rmw { reg, loc, value, tags, deps: parse_deps(&words[5..], lno)? })
            }
            other => perr(lno, 1, format!("unknown instruction `{other}`")),
        };
    }
    let (op, tags) = split_op(words[0], lno)?;
    match op {
        "store" => {
            let loc = req(&words, 1, "store needs a location", lno)?.to_string();
            let value: u32 = req(&words, 2, "store needs a value", lno)?
                .parse()
                .map_err(|_| LitmusError::Parse { line: lno, col: 1, msg: "bad store value".into() })?;
            Ok(Instr::Store {
                loc,
                value,
                tags: check_tags(tags, EventKind::Write, arch, lno)?,
                deps: parse_deps(&words[3..], lno)?,
            })
        }
        "fence" => {
            let flavor = words
                .get(1)
                .and_then(|s| FenceFlavor::from_name(s))
                .ok_or_else(|| LitmusError::Parse { line: lno, col: 1, msg: "fence needs a flavor".into() })?;
            if !arch.fence_flavors().contains(&flavor) {
                return Err(LitmusError::Unsupported {
                    line: lno,
                    what: format!("fence {} on {}", flavor.name(), arch.name()),
                });
            }
            Ok(Instr::Fence(flavor))
        }
        "txbegin" => Ok(Instr::TxBegin { atomic: words.get(1) == Some(&"atomic") }),
        "txend" => Ok(Instr::TxEnd),
        "lock" | "unlock" => {
            let elide = words.get(1) == Some(&"elide");
            let mutex = req(&words, if elide { 2 } else { 1 }, "lock needs a mutex", lno)?.to_string();
            if !matches!(arch, Arch::X86 | Arch::Power | Arch::Armv8) {
                return Err(LitmusError::Unsupported { line: lno, what: format!("lock calls on {}", arch.name()) });
            }
            Ok(if op == "lock" {
                Instr::Lock { mutex, elide }
            } else {
                Instr::Unlock { mutex, elide }
            })
        }
        other => perr(lno, 1, format!("unknown instruction `{other}`")),
    }
}

fn req<'a>(words: &[&'a str], i: usize, msg: &str, lno: usize) -> Result<&'a str, LitmusError> {
    words
        .get(i)
        .copied()
        .ok_or_else(|| LitmusError::Parse { line: lno, col: 1, msg: msg.to_string() })
}

fn split_op<'a>(word: &'a str, lno: usize) -> Result<(&'a str, Tags), LitmusError> {
    let mut parts = word.split('.');
    let op = parts.next().unwrap();
    let mut tags = Tags::NONE;
    for p in parts {
        tags = tags.with(match p {
            "acq" => Tags::ACQ,
            "rel" => Tags::REL,
            "acqrel" => Tags::ACQ.with(Tags::REL),
            "sc" => Tags::SC,
            "ato" => Tags::ATO,
            other => return perr(lno, 1, format!("unknown mode `.{other}`")),
        });
    }
    Ok((op, tags))
}

fn check_tags(tags: Tags, kind: EventKind, arch: Arch, lno: usize) -> Result<Tags, LitmusError> {
    let t = tags.normalized(kind);
    let ok = match arch {
        Arch::Sc | Arch::Tsc | Arch::X86 | Arch::Power => t.is_empty(),
        Arch::Armv8 => !t.has(Tags::ATO) && !t.has(Tags::SC),
        Arch::Cpp => true,
    };
    if !ok {
        return Err(LitmusError::Unsupported { line: lno, what: format!("access modes on {}", arch.name()) });
    }
    // In C++ an acquire/release access is an atomic access.
    Ok(if arch == Arch::Cpp && (t.has(Tags::ACQ) || t.has(Tags::REL)) {
        t.with(Tags::ATO)
    } else {
        t
    })
}

fn parse_deps(words: &[&str], lno: usize) -> Result<Vec<Dep>, LitmusError> {
    let mut out = Vec::new();
    for w in words {
        let (kind, rest) = if let Some(r) = w.strip_prefix("addr(") {
            (DepKind::Addr, r)
        } else if let Some(r) = w.strip_prefix("ctrl(") {
            (DepKind::Ctrl, r)
        } else if let Some(r) = w.strip_prefix("data(") {
            (DepKind::Data, r)
        } else {
            return perr(lno, 1, format!("expected dep annotation, found `{w}`"));
        };
        let reg = rest
            .strip_suffix(')')
            .ok_or_else(|| LitmusError::Parse { line: lno, col: 1, msg: format!("unterminated dep `{w}`") })?;
        out.push(Dep { kind, reg: reg.to_string() });
    }
    Ok(out)
}

fn parse_post_term(term: &str, lno: usize) -> Result<PostTerm, LitmusError> {
    let (lhs, rhs) = term
        .split_once('=')
        .ok_or_else(|| LitmusError::Parse { line: lno, col: 1, msg: format!("bad postcondition term `{term}`") })?;
    let value: u32 = rhs
        .trim()
        .parse()
        .map_err(|_| LitmusError::Parse { line: lno, col: 1, msg: format!("bad value in `{term}`") })?;
    let lhs = lhs.trim();
    if let Some(idx) = lhs.strip_prefix("ok") {
        if let Ok(index) = idx.parse::<usize>() {
            return Ok(PostTerm::TxnOk { index, ok: value == 1 });
        }
    }
    if let Some((thread, reg)) = lhs.split_once(':') {
        return Ok(PostTerm::Reg { thread: Some(thread.to_string()), reg: reg.to_string(), value });
    }
    if lhs.starts_with('r') && lhs.len() > 1 && lhs[1..].chars().all(|c| c.is_ascii_digit()) {
        return Ok(PostTerm::Reg { thread: None, reg: lhs.to_string(), value });
    }
    Ok(PostTerm::Loc { loc: lhs.to_string(), value })
}

fn validate_test(t: &LitmusTest) -> Result<(), LitmusError> {
    // Store values must be unique and non-zero per location.
    let mut values: HashMap<&str, Vec<u32>> = HashMap::new();
    for th in &t.threads {
        for i in &th.instrs {
            if let Instr::Store { loc, value, .. } | Instr::Rmw { loc, value, .. } = i {
                if *value == 0 {
                    return perr(0, 0, format!("store of 0 to `{loc}`"));
                }
                let vs = values.entry(loc.as_str()).or_default();
                if vs.contains(value) {
                    return perr(0, 0, format!("two stores write {value} to `{loc}`"));
                }
                vs.push(*value);
            }
        }
    }
    for term in &t.post {
        if let PostTerm::Reg { thread: None, reg, .. } = term {
            let holders = t.threads.iter().filter(|th| thread_defines_reg(th, reg)).count();
            if holders != 1 {
                return perr(0, 0, format!("register `{reg}` is not uniquely defined"));
            }
        }
    }
    Ok(())
}

fn thread_defines_reg(t: &Thread, reg: &str) -> bool {
    t.instrs.iter().any(|i| matches!(i, Instr::Load { reg: r, .. } | Instr::Rmw { reg: r, .. } if r == reg))
}

/// Locations in first-appearance program order (shared by the candidate
/// builder and postcondition evaluation): data locations from 0, mutexes
/// from 100.
fn loc_table(t: &LitmusTest) -> HashMap<String, u8> {
    let mut out = HashMap::new();
    let mut next_loc = 0u8;
    let mut next_mutex = 100u8;
    let mut add = |name: &str, mutex: bool, out: &mut HashMap<String, u8>| {
        if !out.contains_key(name) {
            let id = if mutex {
                let l = next_mutex;
                next_mutex += 1;
                l
            } else {
                let l = next_loc;
                next_loc += 1;
                l
            };
            out.insert(name.to_string(), id);
        }
    };
    for l in &t.init {
        add(l, false, &mut out);
    }
    for th in &t.threads {
        for i in &th.instrs {
            match i {
                Instr::Load { loc, .. } | Instr::Store { loc, .. } | Instr::Rmw { loc, .. } => {
                    add(loc, false, &mut out)
                }
                Instr::Lock { mutex, .. } | Instr::Unlock { mutex, .. } => add(mutex, true, &mut out),
                _ => {}
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Candidate enumeration
// ---------------------------------------------------------------------------

/// One candidate execution plus the register values it induces.
#[derive(Clone, Debug)]
pub struct Candidate {
    pub execution: Execution,
    /// (thread name, register, observed value)
    pub regs: Vec<(String, String, u32)>,
    /// Commit outcome per transaction, thread-major program order.
    pub txn_ok: Vec<bool>,
}

#[derive(Clone, Debug)]
pub struct CandidateSet {
    pub candidates: Vec<Candidate>,
    /// `prod(per-load rf options) * prod(per-location co orders) *
    /// 2^(transaction count)`: the enumeration size before filtering.
    pub raw_count: u64,
}

/// Enumerate candidate executions: every reads-from choice per load (any
/// same-location store, or the initial state), every per-location
/// coherence order, each transaction committing or vanishing as a no-op,
/// and each elidable critical region running locked or transactionalised.
pub fn candidates(t: &LitmusTest) -> CandidateSet {
    let locs = loc_table(t);
    let txn_count = count_instr(t, |i| matches!(i, Instr::TxBegin { .. }));
    let elidable_count = count_instr(t, |i| matches!(i, Instr::Lock { elide: true, .. }));
    let mut out = Vec::new();
    for txn_mask in 0..(1u32 << txn_count) {
        for elide_mask in 0..(1u32 << elidable_count) {
            build_world(t, &locs, txn_mask, elide_mask, &mut out);
        }
    }
    CandidateSet { candidates: out, raw_count: raw_candidate_count(t) }
}

fn count_instr(t: &LitmusTest, f: impl Fn(&Instr) -> bool) -> usize {
    t.threads.iter().flat_map(|th| &th.instrs).filter(|i| f(i)).count()
}

/// The pre-filter count formula, over the full program.
pub fn raw_candidate_count(t: &LitmusTest) -> u64 {
    let mut stores_per_loc: HashMap<&str, u64> = HashMap::new();
    for th in &t.threads {
        for i in &th.instrs {
            if let Instr::Store { loc, .. } | Instr::Rmw { loc, .. } = i {
                *stores_per_loc.entry(loc.as_str()).or_insert(0) += 1;
            }
        }
    }
    let mut count: u64 = 1;
    for th in &t.threads {
        for i in &th.instrs {
            if let Instr::Load { loc, .. } | Instr::Rmw { loc, .. } = i {
                count *= stores_per_loc.get(loc.as_str()).copied().unwrap_or(0) + 1;
            }
        }
    }
    for (_, s) in stores_per_loc {
        count *= factorial(s);
    }
    count << count_instr(t, |i| matches!(i, Instr::TxBegin { .. })) as u32
}

fn factorial(n: u64) -> u64 {
    (1..=n).product::<u64>().max(1)
}

struct PendingEvent {
    kind: EventKind,
    loc: Option<u8>,
    value: u32,
    tags: Tags,
    thread: usize,
    reg: Option<String>,
    deps: Vec<Dep>,
    txn: Option<usize>,
}

fn build_world(
    t: &LitmusTest,
    locs: &HashMap<String, u8>,
    txn_mask: u32,
    elide_mask: u32,
    out: &mut Vec<Candidate>,
) {
    let mut events: Vec<PendingEvent> = Vec::new();
    let mut threads_events: Vec<Vec<usize>> = Vec::new();
    let mut rmw_pairs: Vec<(usize, usize)> = Vec::new();
    let mut atomic_txns: Vec<usize> = Vec::new();
    let mut txn_ok = Vec::new();
    let mut txn_index = 0usize;
    let mut elide_index = 0usize;

    for (ti, th) in t.threads.iter().enumerate() {
        let mut thread_events = Vec::new();
        let mut open_txn: Option<usize> = None;
        let mut failed_txn = false;
        let mut cr_elided = false;
        for instr in &th.instrs {
            match instr {
                Instr::TxBegin { atomic } => {
                    let idx = txn_index;
                    txn_index += 1;
                    let ok = txn_mask & (1 << idx) != 0;
                    txn_ok.push(ok);
                    if ok {
                        open_txn = Some(idx);
                        if *atomic {
                            atomic_txns.push(idx);
                        }
                    } else {
                        failed_txn = true;
                    }
                }
                Instr::TxEnd => {
                    open_txn = None;
                    failed_txn = false;
                }
                _ if failed_txn => {}
                Instr::Fence(f) => {
                    events.push(PendingEvent {
                        kind: EventKind::Fence(*f),
                        loc: None,
                        value: 0,
                        tags: Tags::NONE,
                        thread: ti,
                        reg: None,
                        deps: Vec::new(),
                        txn: open_txn,
                    });
                    thread_events.push(events.len() - 1);
                }
                Instr::Lock { mutex, elide } | Instr::Unlock { mutex, elide } => {
                    let is_lock = matches!(instr, Instr::Lock { .. });
                    if is_lock && *elide {
                        cr_elided = elide_mask & (1 << elide_index) != 0;
                        elide_index += 1;
                    }
                    let transactionalised = *elide && cr_elided;
                    let lk = match (is_lock, transactionalised) {
                        (true, true) => LockKind::LockElided,
                        (true, false) => LockKind::Lock,
                        (false, true) => LockKind::UnlockElided,
                        (false, false) => LockKind::Unlock,
                    };
                    events.push(PendingEvent {
                        kind: EventKind::Lock(lk),
                        loc: Some(locs[mutex]),
                        value: 0,
                        tags: Tags::NONE,
                        thread: ti,
                        reg: None,
                        deps: Vec::new(),
                        txn: open_txn,
                    });
                    thread_events.push(events.len() - 1);
                }
                Instr::Load { reg, loc, tags, deps } => {
                    events.push(PendingEvent {
                        kind: EventKind::Read,
                        loc: Some(locs[loc]),
                        value: 0,
                        tags: *tags,
                        thread: ti,
                        reg: Some(reg.clone()),
                        deps: deps.clone(),
                        txn: open_txn,
                    });
                    thread_events.push(events.len() - 1);
                }
                Instr::Store { loc, value, tags, deps } => {
                    events.push(PendingEvent {
                        kind: EventKind::Write,
                        loc: Some(locs[loc]),
                        value: *value,
                        tags: *tags,
                        thread: ti,
                        reg: None,
                        deps: deps.clone(),
                        txn: open_txn,
                    });
                    thread_events.push(events.len() - 1);
                }
                Instr::Rmw { reg, loc, value, tags, deps } => {
                    events.push(PendingEvent {
                        kind: EventKind::Read,
                        loc: Some(locs[loc]),
                        value: 0,
                        tags: tags.normalized(EventKind::Read).without(Tags::REL),
                        thread: ti,
                        reg: Some(reg.clone()),
                        deps: deps.clone(),
                        txn: open_txn,
                    });
                    let r_idx = events.len() - 1;
                    thread_events.push(r_idx);
                    events.push(PendingEvent {
                        kind: EventKind::Write,
                        loc: Some(locs[loc]),
                        value: *value,
                        tags: tags.normalized(EventKind::Write).without(Tags::ACQ),
                        thread: ti,
                        reg: None,
                        deps: deps.clone(),
                        txn: open_txn,
                    });
                    thread_events.push(events.len() - 1);
                    rmw_pairs.push((r_idx, events.len() - 1));
                }
            }
        }
        threads_events.push(thread_events);
    }

    let n = events.len();
    if n > crate::relalg::MAX_EVENTS {
        return;
    }

    // Register definitions (reads bind registers, per thread).
    let mut reg_def: HashMap<(usize, &str), usize> = HashMap::new();
    for (i, pe) in events.iter().enumerate() {
        if let Some(r) = &pe.reg {
            reg_def.insert((pe.thread, r.as_str()), i);
        }
    }

    let mut base = Execution::empty(t.arch);
    base.po = Rel::empty(n);
    base.addr = Rel::empty(n);
    base.ctrl = Rel::empty(n);
    base.data = Rel::empty(n);
    base.rmw = Rel::empty(n);
    base.rf = Rel::empty(n);
    base.co = Rel::empty(n);
    base.stxn = Rel::empty(n);
    base.satxn = Rel::empty(n);
    for (i, pe) in events.iter().enumerate() {
        base.events.push(Event {
            id: EventId(i as u8),
            kind: pe.kind,
            loc: pe.loc,
            value: pe.value,
            tags: pe.tags,
        });
    }
    for th in &threads_events {
        for (i, &a) in th.iter().enumerate() {
            for &b in &th[i + 1..] {
                base.po.insert(EventId(a as u8), EventId(b as u8));
            }
        }
    }
    for &(r, w) in &rmw_pairs {
        base.rmw.insert(EventId(r as u8), EventId(w as u8));
    }
    for (i, pe) in events.iter().enumerate() {
        for d in &pe.deps {
            let Some(&src) = reg_def.get(&(pe.thread, d.reg.as_str())) else {
                continue;
            };
            if src == i || !base.po.contains(EventId(src as u8), EventId(i as u8)) {
                continue;
            }
            let (a, b) = (EventId(src as u8), EventId(i as u8));
            match d.kind {
                DepKind::Addr if events[i].kind.is_memory() => base.addr.insert(a, b),
                DepKind::Data if events[i].kind.is_write() => base.data.insert(a, b),
                DepKind::Ctrl => base.ctrl.insert(a, b),
                _ => {}
            }
        }
    }
    // A control dependency covers the whole po suffix after its target.
    base.ctrl = base.ctrl.seq(&base.po.rtclos());

    let mut txn_classes: Vec<Vec<EventId>> = vec![Vec::new(); txn_ok.len()];
    for (i, pe) in events.iter().enumerate() {
        if let Some(txn) = pe.txn {
            txn_classes[txn].push(EventId(i as u8));
        }
    }
    let stxn_classes: Vec<Vec<EventId>> = txn_classes.iter().filter(|c| !c.is_empty()).cloned().collect();
    base.stxn = per_from_classes(n, &stxn_classes);
    let satxn_classes: Vec<Vec<EventId>> = txn_classes
        .iter()
        .enumerate()
        .filter(|(i, c)| atomic_txns.contains(i) && !c.is_empty())
        .map(|(_, c)| c.clone())
        .collect();
    base.satxn = per_from_classes(n, &satxn_classes);

    // Enumerate rf per read and co per location.
    let reads: Vec<usize> = (0..n).filter(|&i| events[i].kind.is_read()).collect();
    let rf_options: Vec<Vec<Option<usize>>> = reads
        .iter()
        .map(|&r| {
            let mut opts: Vec<Option<usize>> = vec![None];
            for w in 0..n {
                if events[w].kind.is_write() && events[w].loc == events[r].loc {
                    opts.push(Some(w));
                }
            }
            opts
        })
        .collect();
    let mut loc_writes: Vec<(u8, Vec<usize>)> = Vec::new();
    for w in 0..n {
        if events[w].kind.is_write() {
            let l = events[w].loc.unwrap();
            match loc_writes.iter_mut().find(|(ll, _)| *ll == l) {
                Some((_, v)) => v.push(w),
                None => loc_writes.push((l, vec![w])),
            }
        }
    }
    loc_writes.sort_by_key(|(l, _)| *l);
    let co_orders: Vec<Vec<Vec<usize>>> = loc_writes.iter().map(|(_, ws)| permutations(ws)).collect();

    let rf_sizes: Vec<usize> = rf_options.iter().map(|o| o.len()).collect();
    let co_sizes: Vec<usize> = co_orders.iter().map(|o| o.len()).collect();
    let mut rf_choice = vec![0usize; reads.len()];
    loop {
        let mut co_choice = vec![0usize; co_orders.len()];
        loop {
            let mut x = base.clone();
            for (ri, &r) in reads.iter().enumerate() {
                if let Some(w) = rf_options[ri][rf_choice[ri]] {
                    x.rf.insert(EventId(w as u8), EventId(r as u8));
                }
            }
            for (li, orders) in co_orders.iter().enumerate() {
                let order = &orders[co_choice[li]];
                for (i, &a) in order.iter().enumerate() {
                    for &b in &order[i + 1..] {
                        x.co.insert(EventId(a as u8), EventId(b as u8));
                    }
                }
            }
            x.refresh_read_values();
            let regs = x
                .events
                .iter()
                .enumerate()
                .filter_map(|(i, e)| {
                    events[i]
                        .reg
                        .clone()
                        .map(|r| (t.threads[events[i].thread].name.clone(), r, e.value))
                })
                .collect();
            out.push(Candidate { execution: x, regs, txn_ok: txn_ok.clone() });
            if !bump(&mut co_choice, &co_sizes) {
                break;
            }
        }
        if !bump(&mut rf_choice, &rf_sizes) {
            break;
        }
    }
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

fn bump(choice: &mut [usize], sizes: &[usize]) -> bool {
    for i in (0..choice.len()).rev() {
        choice[i] += 1;
        if choice[i] < sizes[i] {
            return true;
        }
        choice[i] = 0;
    }
    false
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct TestVerdict {
    pub status: TestStatus,
    /// Consistent candidates satisfying the postcondition.
    pub witnesses: Vec<Candidate>,
    /// Consistent candidates that are racy (C++ only).
    pub racy_witnesses: Vec<Candidate>,
}

impl TestVerdict {
    pub fn allowed(&self) -> bool {
        self.status == TestStatus::Allowed
    }
}

/// Evaluate a test: allowed iff some consistent candidate satisfies the
/// postcondition (ok flags require the matching transactions to have
/// committed). A C++ test with any racy consistent candidate is undefined.
pub fn evaluate(t: &LitmusTest, m: &Model) -> Result<TestVerdict, CheckError> {
    if !m.accepts_arch(t.arch) {
        return Err(CheckError::Arch { model: m.name.clone(), expected: m.arch, got: t.arch });
    }
    let checker = m.checker()?;
    let cs = candidates(t);
    let mut witnesses = Vec::new();
    let mut racy_witnesses = Vec::new();
    for cand in cs.candidates {
        let v = checker.verdict(&cand.execution)?;
        if !v.consistent {
            continue;
        }
        if v.racy == Some(true) {
            racy_witnesses.push(cand.clone());
        }
        if post_satisfied(t, &cand) {
            witnesses.push(cand);
        }
    }
    let status = if !racy_witnesses.is_empty() {
        TestStatus::Undefined
    } else if witnesses.is_empty() {
        TestStatus::Forbidden
    } else {
        TestStatus::Allowed
    };
    Ok(TestVerdict { status, witnesses, racy_witnesses })
}

fn post_satisfied(t: &LitmusTest, cand: &Candidate) -> bool {
    let locs = loc_table(t);
    t.post.iter().all(|term| match term {
        PostTerm::Reg { thread, reg, value } => cand.regs.iter().any(|(th, r, v)| {
            r == reg && v == value && thread.as_ref().map(|tn| tn == th).unwrap_or(true)
        }),
        PostTerm::Loc { loc, value } => {
            locs.get(loc).map(|&l| final_value(&cand.execution, l)) == Some(*value)
        }
        PostTerm::TxnOk { index, ok } => cand.txn_ok.get(*index).copied().unwrap_or(false) == *ok,
    })
}

fn final_value(x: &Execution, loc: u8) -> u32 {
    x.event_ids()
        .filter(|&e| x.event(e).kind.is_write() && x.event(e).loc == Some(loc))
        .find(|&e| x.event_ids().all(|f| !x.co.contains(e, f)))
        .map(|e| x.event(e).value)
        .unwrap_or(0)
}

// ---------------------------------------------------------------------------
// Execution -> litmus test
// ---------------------------------------------------------------------------

/// Convert an execution into a test that picks out exactly its isomorphism
/// class among consistent candidates: reads are pinned by register
/// equalities, coherence by final values, transaction success by ok flags.
///
/// Returns a warning when a location has more than two writes (final
/// values alone cannot pin the whole coherence order then; observer
/// threads are not added automatically).
pub fn to_litmus(x: &Execution) -> (LitmusTest, Vec<String>) {
    let mut warnings = Vec::new();
    let mut write_counts: HashMap<u8, usize> = HashMap::new();
    for e in &x.events {
        if e.kind.is_write() {
            *write_counts.entry(e.loc.unwrap()).or_insert(0) += 1;
        }
    }
    for (l, c) in &write_counts {
        if *c > 2 {
            warnings.push(format!(
                "location {} has {c} writes; final values pin only the coherence-last edge",
                loc_name(*l)
            ));
        }
    }

    let classes = x.stxn_classes();
    let satxn_classes = x.satxn_classes();
    let mut threads = Vec::new();
    let mut post = Vec::new();
    let mut reg_counter = 0usize;
    let mut txn_counter = 0usize;

    for (ti, thread) in x.threads().iter().enumerate() {
        let tname = format!("P{ti}");
        let mut instrs = Vec::new();
        let mut open_txn: Option<usize> = None;
        let mut reg_of_event: HashMap<EventId, String> = HashMap::new();
        let mut k = 0;
        while k < thread.len() {
            let e = thread[k];
            let ev = x.event(e);
            let class = classes.iter().position(|c| c.contains(&e));
            if open_txn.is_some() && class != open_txn {
                instrs.push(Instr::TxEnd);
                open_txn = None;
            }
            if open_txn.is_none() {
                if let Some(ci) = class {
                    let atomic = satxn_classes.iter().any(|sc| sc == &classes[ci]);
                    instrs.push(Instr::TxBegin { atomic });
                    open_txn = Some(ci);
                    post.push(PostTerm::TxnOk { index: txn_counter, ok: true });
                    txn_counter += 1;
                }
            }
            let deps = collect_deps(x, e, &reg_of_event);
            match ev.kind {
                EventKind::Read => {
                    let paired = thread.get(k + 1).copied().filter(|&w| x.rmw.contains(e, w));
                    let reg = format!("r{reg_counter}");
                    reg_counter += 1;
                    reg_of_event.insert(e, reg.clone());
                    post.push(PostTerm::Reg {
                        thread: Some(tname.clone()),
                        reg: reg.clone(),
                        value: ev.value,
                    });
                    if let Some(w) = paired {
                        let wv = x.event(w);
                        instrs.push(Instr::Rmw {
                            reg,
                            loc: loc_name(ev.loc.unwrap()),
                            value: wv.value,
                            tags: ev.tags.with(wv.tags),
                            deps,
                        });
                        k += 2;
                        continue;
                    }
                    instrs.push(Instr::Load { reg, loc: loc_name(ev.loc.unwrap()), tags: ev.tags, deps });
                }
                EventKind::Write => {
                    instrs.push(Instr::Store {
                        loc: loc_name(ev.loc.unwrap()),
                        value: ev.value,
                        tags: ev.tags,
                        deps,
                    });
                }
                EventKind::Fence(f) => instrs.push(Instr::Fence(f)),
                EventKind::Lock(lk) => {
                    let mutex = loc_name(ev.loc.unwrap());
                    instrs.push(match lk {
                        LockKind::Lock => Instr::Lock { mutex, elide: false },
                        LockKind::LockElided => Instr::Lock { mutex, elide: true },
                        LockKind::Unlock => Instr::Unlock { mutex, elide: false },
                        LockKind::UnlockElided => Instr::Unlock { mutex, elide: true },
                    });
                }
            }
            k += 1;
        }
        if open_txn.is_some() {
            instrs.push(Instr::TxEnd);
        }
        threads.push(Thread { name: tname, instrs });
    }

    let mut locs: Vec<u8> = write_counts.keys().copied().collect();
    locs.sort_unstable();
    for l in locs {
        let co_max = x
            .event_ids()
            .filter(|&e| x.event(e).kind.is_write() && x.event(e).loc == Some(l))
            .find(|&e| x.event_ids().all(|f| !x.co.contains(e, f)));
        if let Some(e) = co_max {
            post.push(PostTerm::Loc { loc: loc_name(l), value: x.event(e).value });
        }
    }

    (
        LitmusTest { name: None, arch: x.arch, init: Vec::new(), threads, post, expects: Vec::new() },
        warnings,
    )
}

fn collect_deps(x: &Execution, e: EventId, reg_of_event: &HashMap<EventId, String>) -> Vec<Dep> {
    let mut deps = Vec::new();
    for (kind, r) in [(DepKind::Addr, &x.addr), (DepKind::Data, &x.data)] {
        for src in x.event_ids() {
            if r.contains(src, e) {
                if let Some(reg) = reg_of_event.get(&src) {
                    deps.push(Dep { kind, reg: reg.clone() });
                }
            }
        }
    }
    // ctrl edges are suffix-closed: annotate only the suffix's first event.
    for src in x.event_ids() {
        if x.ctrl.contains(src, e) {
            let first = x.event_ids().all(|m| !(x.ctrl.contains(src, m) && x.po.contains(m, e)));
            if first {
                if let Some(reg) = reg_of_event.get(&src) {
                    deps.push(Dep { kind: DepKind::Ctrl, reg: reg.clone() });
                }
            }
        }
    }
    deps
}

fn loc_name(l: u8) -> String {
    const NAMES: [&str; 6] = ["x", "y", "z", "u", "v", "w"];
    if (l as usize) < NAMES.len() {
        NAMES[l as usize].to_string()
    } else if l >= 100 {
        format!("m{}", l - 100)
    } else {
        format!("loc{l}")
    }
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

/// Render a test back to its DSL source.
pub fn render(t: &LitmusTest) -> String {
    let mut out = String::new();
    if let Some(n) = &t.name {
        let _ = writeln!(out, "litmus {n}");
    }
    let _ = writeln!(out, "arch {}", t.arch.name());
    for th in &t.threads {
        let _ = writeln!(out, "thread {} {{", th.name);
        for i in &th.instrs {
            let _ = writeln!(out, "  {}", render_instr(i));
        }
        let _ = writeln!(out, "}}");
    }
    if !t.post.is_empty() {
        let terms: Vec<String> = t.post.iter().map(render_post_term).collect();
        let _ = writeln!(out, "exists ({})", terms.join(" /\\ "));
    }
    for e in &t.expects {
        let _ = writeln!(out, "expect {} {}", e.status.name(), e.model);
    }
    out
}

fn mode_suffix(tags: Tags) -> String {
    if tags.has(Tags::SC) {
        ".sc".into()
    } else if tags.has(Tags::ACQ) && tags.has(Tags::REL) {
        ".acqrel".into()
    } else if tags.has(Tags::ACQ) {
        ".acq".into()
    } else if tags.has(Tags::REL) {
        ".rel".into()
    } else if tags.has(Tags::ATO) {
        ".ato".into()
    } else {
        String::new()
    }
}

fn render_instr(i: &Instr) -> String {
    let deps = |ds: &[Dep]| {
        ds.iter()
            .map(|d| {
                let k = match d.kind {
                    DepKind::Addr => "addr",
                    DepKind::Ctrl => "ctrl",
                    DepKind::Data => "data",
                };
                format!(" {k}({})", d.reg)
            })
            .collect::<String>()
    };
    match i {
        Instr::Load { reg, loc, tags, deps: d } => {
            format!("{reg} = load{} {loc}{}", mode_suffix(*tags), deps(d))
        }
        Instr::Store { loc, value, tags, deps: d } => {
            format!("store{} {loc} {value}{}", mode_suffix(*tags), deps(d))
        }
        Instr::Rmw { reg, loc, value, tags, deps: d } => {
            format!("{reg} = rmw{} {loc} {value}{}", mode_suffix(*tags), deps(d))
        }
        Instr::Fence(f) => format!("fence {}", f.name()),
        Instr::TxBegin { atomic: true } => "txbegin atomic".into(),
        Instr::TxBegin { atomic: false } => "txbegin".into(),
        Instr::TxEnd => "txend".into(),
        Instr::Lock { mutex, elide } => format!("lock {}{mutex}", if *elide { "elide " } else { "" }),
        Instr::Unlock { mutex, elide } => format!("unlock {}{mutex}", if *elide { "elide " } else { "" }),
    }
}

fn render_post_term(t: &PostTerm) -> String {
    match t {
        PostTerm::Reg { thread: Some(th), reg, value } => format!("{th}:{reg}={value}"),
        PostTerm::Reg { thread: None, reg, value } => format!("{reg}={value}"),
        PostTerm::Loc { loc, value } => format!("{loc}={value}"),
        PostTerm::TxnOk { index, ok } => format!("ok{index}={}", u32::from(*ok)),
    }
}

/// Best-effort assembly rendering for external runners. ARMv8 transactional
/// mnemonics are unofficial but representative of proposed extensions and
/// are marked non-executable.
pub fn export_asm(t: &LitmusTest) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "; {} rendering of `{}`", t.arch.name(), t.name.as_deref().unwrap_or("test"));
    if t.arch == Arch::Armv8 && count_instr(t, |i| matches!(i, Instr::TxBegin { .. })) > 0 {
        let _ = writeln!(
            out,
            "; NOT EXECUTABLE: transactional mnemonics are unofficial; no shipping ARM hardware supports them"
        );
    }
    let mut locs: Vec<String> = Vec::new();
    for th in &t.threads {
        for i in &th.instrs {
            if let Instr::Load { loc, .. }
            | Instr::Store { loc, .. }
            | Instr::Rmw { loc, .. }
            | Instr::Lock { mutex: loc, .. }
            | Instr::Unlock { mutex: loc, .. } = i
            {
                if !locs.contains(loc) {
                    locs.push(loc.clone());
                }
            }
        }
    }
    let xreg = |loc: &str| format!("[X{}]", locs.iter().position(|l| l == loc).unwrap());
    for (ti, th) in t.threads.iter().enumerate() {
        let _ = writeln!(out, "; thread {ti} ({})", th.name);
        for (k, i) in th.instrs.iter().enumerate() {
            let line = match (t.arch, i) {
                (Arch::X86, Instr::Load { reg, loc, .. }) => format!("MOV {reg}, {}", xreg(loc)),
                (Arch::X86, Instr::Store { loc, value, .. }) => format!("MOV {}, ${value}", xreg(loc)),
                (Arch::X86, Instr::Rmw { reg, loc, value, .. }) => {
                    format!("MOV {reg}, ${value}; LOCK XCHG {}, {reg}", xreg(loc))
                }
                (Arch::X86, Instr::Fence(_)) => "MFENCE".into(),
                (Arch::X86, Instr::TxBegin { .. }) => "XBEGIN Lfail".into(),
                (Arch::X86, Instr::TxEnd) => "XEND".into(),
                (Arch::Power, Instr::Load { reg, loc, .. }) => format!("lwz {reg}, {}", xreg(loc)),
                (Arch::Power, Instr::Store { loc, value, .. }) => {
                    format!("li r9, {value}; stw r9, {}", xreg(loc))
                }
                (Arch::Power, Instr::Rmw { reg, loc, value, .. }) => format!(
                    "L{k}: lwarx {reg}, {0}; li r9, {value}; stwcx. r9, {0}; bne L{k}",
                    xreg(loc)
                ),
                (Arch::Power, Instr::Fence(f)) => f.name().to_string(),
                (Arch::Power, Instr::TxBegin { .. }) => "tbegin.; beq Lfail".into(),
                (Arch::Power, Instr::TxEnd) => "tend.".into(),
                (Arch::Armv8, Instr::Load { reg, loc, tags, .. }) => {
                    format!("{} {reg}, {}", if tags.has(Tags::ACQ) { "LDAR" } else { "LDR" }, xreg(loc))
                }
                (Arch::Armv8, Instr::Store { loc, value, tags, .. }) => {
                    format!("MOV W9, #{value}; {} W9, {}", if tags.has(Tags::REL) { "STLR" } else { "STR" }, xreg(loc))
                }
                (Arch::Armv8, Instr::Rmw { reg, loc, value, tags, .. }) => {
                    let op = if tags.has(Tags::ACQ) { "LDAXR" } else { "LDXR" };
                    let l = xreg(loc);
                    format!("L{k}: {op} {reg}, {l}; MOV W9, #{value}; STXR W10, W9, {l}; CBNZ W10, L{k}")
                }
                (Arch::Armv8, Instr::Fence(f)) => match f {
                    FenceFlavor::Dmb => "DMB SY".into(),
                    FenceFlavor::Dmbld => "DMB LD".into(),
                    FenceFlavor::Dmbst => "DMB ST".into(),
                    _ => "ISB".into(),
                },
                (Arch::Armv8, Instr::TxBegin { .. }) => "TXBEGIN Lfail        ; unofficial".into(),
                (Arch::Armv8, Instr::TxEnd) => "TXEND                ; unofficial".into(),
                (_, Instr::Lock { mutex, elide }) => {
                    format!("BL lock({mutex}){}", if *elide { "   ; elidable" } else { "" })
                }
                (_, Instr::Unlock { mutex, .. }) => format!("BL unlock({mutex})"),
                (_, other) => render_instr(other),
            };
            let _ = writeln!(out, "  {line}");
        }
    }
    let terms: Vec<String> = t.post.iter().map(render_post_term).collect();
    let _ = writeln!(out, "; exists ({})", terms.join(" /\\ "));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{by_name, model_sc, model_tsc, model_x86};

    const FIG1: &str = "litmus fig1\n\
                        arch tsc\n\
                        thread P0 {\n\
                          store x 1\n\
                          r0 = load x\n\
                        }\n\
                        thread P1 {\n\
                          store x 2\n\
                        }\n\
                        exists (r0=2 /\\ x=2)\n";

    const FIG2: &str = "litmus fig2\n\
                        arch tsc\n\
                        thread P0 {\n\
                          txbegin\n\
                          store x 1\n\
                          r0 = load x\n\
                          txend\n\
                        }\n\
                        thread P1 {\n\
                          store x 2\n\
                        }\n\
                        exists (ok0=1 /\\ r0=2 /\\ x=2)\n";

    #[test]
    fn parses_fig1_shape() {
        let t = parse(FIG1).unwrap();
        assert_eq!(t.threads.len(), 2);
        assert_eq!(t.post.len(), 2);
    }

    #[test]
    fn parses_fig2_shape() {
        let t = parse(FIG2).unwrap();
        assert_eq!(t.threads[0].instrs.len(), 4);
        assert!(t.post.iter().any(|p| matches!(p, PostTerm::TxnOk { index: 0, ok: true })));
    }

    #[test]
    fn unbalanced_txbegin_is_rejected() {
        assert!(parse("arch tsc\nthread P0 {\n txbegin\n store x 1\n}\n").is_err());
    }

    #[test]
    fn nested_transactions_are_rejected() {
        assert!(matches!(
            parse("arch tsc\nthread P0 {\n txbegin\n txbegin\n txend\n txend\n}\n"),
            Err(LitmusError::Unsupported { .. })
        ));
    }

    #[test]
    fn fig1_candidate_count() {
        // one load with 3 rf options (two stores + initial), 2 co orders
        let t = parse(FIG1).unwrap();
        let cs = candidates(&t);
        assert_eq!(cs.raw_count, 6);
        assert_eq!(cs.candidates.len(), 6);
    }

    #[test]
    fn store_load_thread_has_two_candidates() {
        let t = parse("arch x86\nthread P0 {\n store x 1\n r0 = load x\n}\nexists (r0=1)\n").unwrap();
        let cs = candidates(&t);
        assert_eq!(cs.candidates.len(), 2);
        let m = model_x86();
        let consistent: Vec<bool> = cs
            .candidates
            .iter()
            .map(|c| m.consistent(&c.execution).unwrap())
            .collect();
        assert_eq!(consistent.iter().filter(|b| **b).count(), 1);
        let bad = cs
            .candidates
            .iter()
            .find(|c| !m.consistent(&c.execution).unwrap())
            .unwrap();
        assert!(m
            .check(&bad.execution)
            .unwrap()
            .violated
            .contains(&"Coherence".to_string()));
    }

    #[test]
    fn fig2_candidates_split_on_transaction_outcome() {
        let t = parse(FIG2).unwrap();
        let cs = candidates(&t);
        assert_eq!(cs.raw_count, 12);
        assert!(cs
            .candidates
            .iter()
            .any(|c| c.txn_ok == vec![true] && c.execution.stxn_classes().len() == 1));
        assert!(cs.candidates.iter().any(|c| c.txn_ok == vec![false] && c.execution.len() == 1));
    }

    #[test]
    fn fig2_forbidden_under_tsc_allowed_under_sc() {
        let t = parse(FIG2).unwrap();
        assert_eq!(evaluate(&t, &model_tsc()).unwrap().status, TestStatus::Forbidden);
        assert_eq!(evaluate(&t, &model_sc()).unwrap().status, TestStatus::Allowed);
    }

    #[test]
    fn to_litmus_roundtrips_fig1() {
        let x = crate::execution::deserialize(
            "arch tsc\nevent 0 W x 1\nevent 1 R x 2\nevent 2 W x 2\nthread 0 1\nthread 2\nrf 2 1\nco 0 2\n",
        )
        .unwrap()
        .execution;
        let (t, warnings) = to_litmus(&x);
        assert!(warnings.is_empty());
        assert_eq!(t.threads.len(), 2);
        assert!(t.post.iter().any(|p| matches!(p, PostTerm::Reg { value: 2, .. })));
        assert!(t.post.iter().any(|p| matches!(p, PostTerm::Loc { value: 2, .. })));
        let v = evaluate(&t, &model_sc()).unwrap();
        assert!(v.witnesses.iter().any(|c| c.execution == x));
    }

    #[test]
    fn to_litmus_roundtrips_fig2_with_ok_flag() {
        let x = crate::execution::deserialize(
            "arch tsc\nevent 0 W x 1\nevent 1 R x 2\nevent 2 W x 2\nthread 0 1\nthread 2\nrf 2 1\nco 0 2\nstxn { 0 1 }\n",
        )
        .unwrap()
        .execution;
        let (t, _) = to_litmus(&x);
        assert!(t.post.iter().any(|p| matches!(p, PostTerm::TxnOk { ok: true, .. })));
        let v = evaluate(&t, &model_sc()).unwrap();
        assert!(v.witnesses.iter().any(|c| c.execution == x));
        assert_eq!(evaluate(&t, &model_tsc()).unwrap().status, TestStatus::Forbidden);
    }

    #[test]
    fn cpp_racy_program_is_undefined() {
        // atomic transaction with a plain store, racing an atomic store
        let t = parse(
            "arch cpp\nthread P0 {\n txbegin atomic\n store x 1\n txend\n}\nthread P1 {\n store.sc x 2\n}\nexists (x=2)\n",
        )
        .unwrap();
        let v = evaluate(&t, &by_name("cpp-tm").unwrap()).unwrap();
        assert_eq!(v.status, TestStatus::Undefined);
        assert!(!v.racy_witnesses.is_empty());
    }

    #[test]
    fn render_parse_roundtrip() {
        let t = parse(FIG2).unwrap();
        let t2 = parse(&render(&t)).unwrap();
        assert_eq!(t.threads, t2.threads);
        assert_eq!(t.post, t2.post);
    }
}
