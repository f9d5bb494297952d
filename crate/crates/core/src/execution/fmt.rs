use super::{Arch, Event, EventKind, Execution, FenceFlavor, LockKind, Tags};
use crate::relalg::{EventId, Rel, MAX_EVENTS};
use std::collections::HashMap;
use std::fmt::Write as _;

/// Execution interchange format.
///
/// One statement per line; `#` starts a comment. Event lines give id, kind,
/// location, value and optional bracketed tags; `thread` lines list each
/// thread's events in program order; relation lines list pairs; `stxn` and
/// `satxn` take brace-delimited classes. `expect` lines attach intended
/// verdicts that drive the corpus runner.
///
/// ```text
/// arch tsc
/// event 0 W x 1
/// event 1 R x 2 [acq]
/// event 2 F sync
/// event 3 L m
/// thread 0 1 2
/// rf 0 1
/// co 0 4
/// stxn { 0 1 }
/// expect inconsistent tsc TxnOrder
/// ```
#[derive(Clone, Debug)]
pub struct ExecDoc {
    pub name: Option<String>,
    pub execution: Execution,
    pub expects: Vec<Expect>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Expect {
    pub model: String,
    pub verdict: ExpectVerdict,
    /// For `inconsistent`, axioms that must appear among the violations.
    pub axioms: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExpectVerdict {
    Consistent,
    Inconsistent,
    Racy,
}

impl ExpectVerdict {
    pub fn name(self) -> &'static str {
        match self {
            ExpectVerdict::Consistent => "consistent",
            ExpectVerdict::Inconsistent => "inconsistent",
            ExpectVerdict::Racy => "racy",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("parse error at {line}:{col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

fn err<T>(line: usize, col: usize, msg: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError {
        line,
        col,
        msg: msg.into(),
    })
}

/// Render an execution in the interchange format. Locations are printed as
/// `x y z u v w ...` in first-use order; mutexes as `m0 m1 ...`.
pub fn serialize(x: &Execution) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "arch {}", x.arch.name());
    let loc_name = |l: u8| loc_display_name(l);
    for e in &x.events {
        let _ = write!(out, "event {} ", e.id);
        match e.kind {
            EventKind::Read => {
                let _ = write!(out, "R {} {}", loc_name(e.loc.unwrap_or(0)), e.value);
            }
            EventKind::Write => {
                let _ = write!(out, "W {} {}", loc_name(e.loc.unwrap_or(0)), e.value);
            }
            EventKind::Fence(f) => {
                let _ = write!(out, "F {}", f.name());
            }
            EventKind::Lock(k) => {
                let _ = write!(out, "{} {}", k.name(), loc_name(e.loc.unwrap_or(0)));
            }
        }
        if !e.tags.is_empty() {
            let _ = write!(out, " [{}]", e.tags.names().join(","));
        }
        out.push('\n');
    }
    for thread in x.threads() {
        let ids: Vec<String> = thread.iter().map(|e| e.to_string()).collect();
        let _ = writeln!(out, "thread {}", ids.join(" "));
    }
    for (name, r) in [
        ("rf", &x.rf),
        ("co", &x.co),
        ("addr", &x.addr),
        ("ctrl", &x.ctrl),
        ("data", &x.data),
        ("rmw", &x.rmw),
    ] {
        for (a, b) in r.pairs() {
            let _ = writeln!(out, "{name} {a} {b}");
        }
    }
    for (name, classes) in [("stxn", x.stxn_classes()), ("satxn", x.satxn_classes())] {
        for class in classes {
            let ids: Vec<String> = class.iter().map(|e| e.to_string()).collect();
            let _ = writeln!(out, "{name} {{ {} }}", ids.join(" "));
        }
    }
    out
}

fn loc_display_name(l: u8) -> String {
    const NAMES: [&str; 6] = ["x", "y", "z", "u", "v", "w"];
    if (l as usize) < NAMES.len() {
        NAMES[l as usize].to_string()
    } else if l >= 100 {
        format!("m{}", l - 100)
    } else {
        format!("loc{l}")
    }
}

/// Parse the interchange format. Round-trips with [`serialize`] up to
/// event-id renaming.
pub fn deserialize(text: &str) -> Result<ExecDoc, ParseError> {
    let mut arch: Option<Arch> = None;
    let mut name: Option<String> = None;
    struct RawEvent {
        kind: EventKind,
        loc: Option<u8>,
        value: u32,
        tags: Tags,
    }
    let mut events: HashMap<usize, RawEvent> = HashMap::new();
    let mut threads: Vec<Vec<usize>> = Vec::new();
    let mut pairs: HashMap<&'static str, Vec<(usize, usize)>> = HashMap::new();
    let mut classes: HashMap<&'static str, Vec<Vec<usize>>> = HashMap::new();
    let mut expects = Vec::new();
    let mut locs: HashMap<String, u8> = HashMap::new();
    let mut next_loc: u8 = 0;
    let mut next_mutex: u8 = 100;

    for (lno, raw) in text.lines().enumerate() {
        let lno = lno + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut words = line.split_whitespace();
        let head = words.next().unwrap();
        let rest: Vec<&str> = words.collect();
        match head {
            "arch" => {
                let a = rest
                    .first()
                    .and_then(|s| Arch::from_name(s))
                    .ok_or(ParseError {
                        line: lno,
                        col: 6,
                        msg: format!("unknown architecture in `{line}`"),
                    })?;
                arch = Some(a);
            }
            "name" => name = Some(rest.join(" ")),
            "event" => {
                if rest.len() < 2 {
                    return err(lno, 1, "event line needs an id and a kind");
                }
                let id: usize = rest[0]
                    .parse()
                    .map_err(|_| ParseError { line: lno, col: 7, msg: format!("bad event id `{}`", rest[0]) })?;
                let mut mutex_loc = false;
                let kind = match rest[1] {
                    "R" => EventKind::Read,
                    "W" => EventKind::Write,
                    "F" => EventKind::Fence(
                        rest.get(2)
                            .and_then(|s| FenceFlavor::from_name(s))
                            .ok_or(ParseError { line: lno, col: 1, msg: "fence needs a flavor".into() })?,
                    ),
                    "L" | "U" | "Lt" | "Ut" => {
                        mutex_loc = true;
                        EventKind::Lock(match rest[1] {
                            "L" => LockKind::Lock,
                            "U" => LockKind::Unlock,
                            "Lt" => LockKind::LockElided,
                            _ => LockKind::UnlockElided,
                        })
                    }
                    k => return err(lno, 1, format!("unknown event kind `{k}`")),
                };
                let mut loc = None;
                let mut value = 0;
                let mut tags = Tags::NONE;
                let arg_at;
                match kind {
                    EventKind::Read | EventKind::Write => {
                        let lname = *rest
                            .get(2)
                            .ok_or(ParseError { line: lno, col: 1, msg: "memory event needs a location".into() })?;
                        loc = Some(intern_loc(lname, false, &mut locs, &mut next_loc, &mut next_mutex));
                        value = rest
                            .get(3)
                            .and_then(|s| s.parse().ok())
                            .ok_or(ParseError { line: lno, col: 1, msg: "memory event needs a value".into() })?;
                        arg_at = 4;
                    }
                    EventKind::Fence(_) => arg_at = 3,
                    EventKind::Lock(_) => {
                        let lname = *rest
                            .get(2)
                            .ok_or(ParseError { line: lno, col: 1, msg: "lock event needs a mutex".into() })?;
                        loc = Some(intern_loc(lname, mutex_loc, &mut locs, &mut next_loc, &mut next_mutex));
                        arg_at = 3;
                    }
                }
                if let Some(tag_word) = rest.get(arg_at) {
                    let inner = tag_word
                        .strip_prefix('[')
                        .and_then(|s| s.strip_suffix(']'))
                        .ok_or(ParseError { line: lno, col: 1, msg: format!("expected [tags], found `{tag_word}`") })?;
                    for t in inner.split(',').filter(|s| !s.is_empty()) {
                        tags = tags.with(Tags::from_name(t).ok_or(ParseError {
                            line: lno,
                            col: 1,
                            msg: format!("unknown tag `{t}`"),
                        })?);
                    }
                }
                tags = tags.normalized(kind);
                if events.insert(id, RawEvent { kind, loc, value, tags }).is_some() {
                    return err(lno, 1, format!("duplicate event id {id}"));
                }
            }
            "thread" => {
                let ids: Result<Vec<usize>, _> = rest.iter().map(|s| s.parse()).collect();
                threads.push(ids.map_err(|_| ParseError { line: lno, col: 8, msg: "bad event id in thread line".into() })?);
            }
            "rf" | "co" | "addr" | "ctrl" | "data" | "rmw" => {
                if rest.len() != 2 {
                    return err(lno, 1, format!("`{head}` line needs two event ids"));
                }
                let a: usize = rest[0].parse().map_err(|_| ParseError { line: lno, col: 1, msg: "bad event id".into() })?;
                let b: usize = rest[1].parse().map_err(|_| ParseError { line: lno, col: 1, msg: "bad event id".into() })?;
                let key = ["rf", "co", "addr", "ctrl", "data", "rmw"]
                    .into_iter()
                    .find(|k| *k == head)
                    .unwrap();
                pairs.entry(key).or_default().push((a, b));
            }
            "stxn" | "satxn" => {
                let inner = line
                    .strip_prefix(head)
                    .unwrap()
                    .trim()
                    .strip_prefix('{')
                    .and_then(|s| s.strip_suffix('}'))
                    .ok_or(ParseError { line: lno, col: 1, msg: format!("`{head}` line needs a {{ ... }} class") })?;
                let ids: Result<Vec<usize>, _> = inner.split_whitespace().map(|s| s.parse()).collect();
                let key = if head == "stxn" { "stxn" } else { "satxn" };
                classes
                    .entry(key)
                    .or_default()
                    .push(ids.map_err(|_| ParseError { line: lno, col: 1, msg: "bad event id in class".into() })?);
            }
            "expect" => {
                if rest.len() < 2 {
                    return err(lno, 1, "expect line needs a verdict and a model");
                }
                let verdict = match rest[0] {
                    "consistent" => ExpectVerdict::Consistent,
                    "inconsistent" => ExpectVerdict::Inconsistent,
                    "racy" => ExpectVerdict::Racy,
                    v => return err(lno, 8, format!("unknown verdict `{v}`")),
                };
                expects.push(Expect {
                    model: rest[1].to_string(),
                    verdict,
                    axioms: rest[2..].iter().map(|s| s.to_string()).collect(),
                });
            }
            other => return err(lno, 1, format!("unknown statement `{other}`")),
        }
    }

    let arch = arch.ok_or(ParseError { line: 1, col: 1, msg: "missing `arch` line".into() })?;
    let n = events.len();
    if n > MAX_EVENTS {
        return err(1, 1, format!("too many events ({n}; limit {MAX_EVENTS})"));
    }

    // Dense renumbering in ascending file-id order.
    let mut file_ids: Vec<usize> = events.keys().copied().collect();
    file_ids.sort_unstable();
    let index: HashMap<usize, EventId> = file_ids
        .iter()
        .enumerate()
        .map(|(i, &fid)| (fid, EventId(i as u8)))
        .collect();
    let lookup = |fid: usize| -> Result<EventId, ParseError> {
        index.get(&fid).copied().ok_or(ParseError {
            line: 0,
            col: 0,
            msg: format!("reference to undeclared event {fid}"),
        })
    };

    let mut evs: Vec<Event> = Vec::with_capacity(n);
    for &fid in &file_ids {
        let raw = &events[&fid];
        evs.push(Event {
            id: index[&fid],
            kind: raw.kind,
            loc: raw.loc,
            value: raw.value,
            tags: raw.tags,
        });
    }

    let mut po = Rel::empty(n);
    for t in &threads {
        for (i, &a) in t.iter().enumerate() {
            for &b in &t[i + 1..] {
                po.insert(lookup(a)?, lookup(b)?);
            }
        }
    }

    let mut x = Execution {
        arch,
        events: evs,
        po,
        addr: Rel::empty(n),
        ctrl: Rel::empty(n),
        data: Rel::empty(n),
        rmw: Rel::empty(n),
        rf: Rel::empty(n),
        co: Rel::empty(n),
        stxn: Rel::empty(n),
        satxn: Rel::empty(n),
    };
    for (key, ps) in pairs {
        let target = match key {
            "rf" => &mut x.rf,
            "co" => &mut x.co,
            "addr" => &mut x.addr,
            "ctrl" => &mut x.ctrl,
            "data" => &mut x.data,
            _ => &mut x.rmw,
        };
        for (a, b) in ps {
            target.insert(lookup(a)?, lookup(b)?);
        }
    }
    // Listed relations are generators: close co transitively and ctrl under
    // po suffixes so files can state just the covering edges.
    x.co = x.co.tclos();
    x.ctrl = x.ctrl.seq(&x.po.rtclos());
    for (key, cls) in classes {
        let target = if key == "stxn" { &mut x.stxn } else { &mut x.satxn };
        for class in cls {
            for &a in &class {
                for &b in &class {
                    target.insert(lookup(a)?, lookup(b)?);
                }
            }
        }
    }

    Ok(ExecDoc {
        name,
        execution: x,
        expects,
    })
}

fn intern_loc(
    name: &str,
    mutex: bool,
    locs: &mut HashMap<String, u8>,
    next_loc: &mut u8,
    next_mutex: &mut u8,
) -> u8 {
    *locs.entry(name.to_string()).or_insert_with(|| {
        if mutex || name.starts_with('m') {
            let l = *next_mutex;
            *next_mutex += 1;
            l
        } else {
            let l = *next_loc;
            *next_loc += 1;
            l
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::execution::validate_wellformed;

    #[test]
    fn roundtrip_preserves_structure() {
        let src = "arch tsc\n\
                   event 0 W x 1\n\
                   event 1 R x 2\n\
                   event 2 W x 2\n\
                   thread 0 1\n\
                   thread 2\n\
                   rf 2 1\n\
                   co 0 2\n\
                   stxn { 0 1 }\n";
        let doc = deserialize(src).unwrap();
        assert!(validate_wellformed(&doc.execution).ok());
        let doc2 = deserialize(&serialize(&doc.execution)).unwrap();
        assert_eq!(doc.execution, doc2.execution);
        assert_eq!(doc2.execution.stxn_classes().len(), 1);
    }

    #[test]
    fn truncated_input_is_a_parse_error() {
        let e = deserialize("arch tsc\nevent 0 W x\n").unwrap_err();
        assert_eq!(e.line, 2);
    }

    #[test]
    fn missing_arch_is_a_parse_error() {
        assert!(deserialize("event 0 W x 1\nthread 0\n").is_err());
    }

    #[test]
    fn expect_lines_parse() {
        let doc = deserialize(
            "arch tsc\nevent 0 W x 1\nthread 0\nexpect consistent sc\nexpect inconsistent tsc TxnOrder\n",
        )
        .unwrap();
        assert_eq!(doc.expects.len(), 2);
        assert_eq!(doc.expects[1].verdict, ExpectVerdict::Inconsistent);
        assert_eq!(doc.expects[1].axioms, vec!["TxnOrder".to_string()]);
    }
}
