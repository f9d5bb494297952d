//! Graphviz rendering of executions and witness pairs. Solid boxes group
//! the events of each committed transaction; dashed boxes group critical
//! regions; dotted arrows connect mapped events across a witness pair.

use crate::execution::{classes_of_per, EventKind, Execution};
use crate::relalg::EventId;
use std::fmt::Write as _;

fn event_label(x: &Execution, e: EventId) -> String {
    let ev = x.event(e);
    let loc = ev
        .loc
        .map(|l| {
            if l >= 100 {
                format!("m{}", l - 100)
            } else {
                const NAMES: [&str; 6] = ["x", "y", "z", "u", "v", "w"];
                NAMES
                    .get(l as usize)
                    .map(|s| s.to_string())
                    .unwrap_or(format!("loc{l}"))
            }
        })
        .unwrap_or_default();
    let tags = if ev.tags.is_empty() {
        String::new()
    } else {
        format!(" [{}]", ev.tags.names().join(","))
    };
    match ev.kind {
        EventKind::Read => format!("e{e}: R {loc}={}{tags}", ev.value),
        EventKind::Write => format!("e{e}: W {loc}={}{tags}", ev.value),
        EventKind::Fence(f) => format!("e{e}: F {}", f.name()),
        EventKind::Lock(k) => format!("e{e}: {} {loc}", k.name()),
    }
}

const EDGE_STYLES: [(&str, &str); 8] = [
    ("po", "color=black"),
    ("rf", "color=forestgreen,fontcolor=forestgreen"),
    ("co", "color=red3,fontcolor=red3"),
    ("fr", "color=darkorange2,fontcolor=darkorange2"),
    ("addr", "style=dashed,color=blue3,fontcolor=blue3"),
    ("data", "style=dashed,color=blue3,fontcolor=blue3"),
    ("ctrl", "style=dashed,color=blue3,fontcolor=blue3"),
    ("rmw", "style=bold,color=purple3,fontcolor=purple3"),
];

fn write_body(out: &mut String, x: &Execution, prefix: &str) {
    for (ti, thread) in x.threads().iter().enumerate() {
        let _ = writeln!(out, "  subgraph cluster_{prefix}t{ti} {{");
        let _ = writeln!(out, "    style=invis;");
        for &e in thread {
            let _ = writeln!(
                out,
                "    {prefix}{e} [label=\"{}\",shape=plaintext];",
                event_label(x, e)
            );
        }
        let _ = writeln!(out, "  }}");
    }
    for (ci, class) in x.stxn_classes().iter().enumerate() {
        let _ = writeln!(out, "  subgraph cluster_{prefix}txn{ci} {{");
        let atomic = x.satxn_classes().iter().any(|sc| sc == class);
        let _ = writeln!(
            out,
            "    style=solid; label=\"{}\";",
            if atomic { "atomic txn" } else { "txn" }
        );
        for &e in class {
            let _ = writeln!(out, "    {prefix}{e};");
        }
        let _ = writeln!(out, "  }}");
    }
    let (scr, _) = x.derive_scr();
    for (ci, class) in classes_of_per(&scr, x.len()).iter().enumerate() {
        let _ = writeln!(out, "  subgraph cluster_{prefix}cr{ci} {{");
        let _ = writeln!(out, "    style=dashed; label=\"CR\";");
        for &e in class {
            let _ = writeln!(out, "    {prefix}{e};");
        }
        let _ = writeln!(out, "  }}");
    }
    // po drawn as immediate edges only; everything else in full.
    for thread in x.threads() {
        for pair in thread.windows(2) {
            let _ = writeln!(
                out,
                "  {prefix}{} -> {prefix}{} [label=po,{}];",
                pair[0], pair[1], EDGE_STYLES[0].1
            );
        }
    }
    let fr = x.derive_fr();
    for (name, rel) in [
        ("rf", &x.rf),
        ("co", &x.co),
        ("fr", &fr),
        ("addr", &x.addr),
        ("data", &x.data),
        ("ctrl", &x.ctrl),
        ("rmw", &x.rmw),
    ] {
        let style = EDGE_STYLES.iter().find(|(n, _)| *n == name).unwrap().1;
        for (a, b) in rel.pairs() {
            if name == "ctrl" {
                let head = x
                    .event_ids()
                    .all(|z| !(x.ctrl.contains(a, z) && x.po.contains(z, b)));
                if !head {
                    continue;
                }
            }
            let _ = writeln!(out, "  {prefix}{a} -> {prefix}{b} [label={name},{style}];");
        }
    }
}

/// Render one execution.
pub fn execution_to_dot(x: &Execution, name: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph \"{name}\" {{");
    let _ = writeln!(out, "  rankdir=TB; node [fontname=monospace];");
    write_body(&mut out, x, "e");
    let _ = writeln!(out, "}}");
    out
}

/// Render a source/target pair with the mapping drawn as dotted arrows.
pub fn pair_to_dot(
    source: &Execution,
    target: &Execution,
    pi: &[(EventId, EventId)],
    name: &str,
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph \"{name}\" {{");
    let _ = writeln!(out, "  rankdir=TB; node [fontname=monospace];");
    let _ = writeln!(out, "  subgraph cluster_source {{ label=\"source\";");
    write_body(&mut out, source, "s");
    let _ = writeln!(out, "  }}");
    let _ = writeln!(out, "  subgraph cluster_target {{ label=\"target\";");
    write_body(&mut out, target, "t");
    let _ = writeln!(out, "  }}");
    for (a, b) in pi {
        let _ = writeln!(
            out,
            "  s{a} -> t{b} [style=dotted,color=gray40,constraint=false];"
        );
    }
    let _ = writeln!(out, "}}");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::execution::deserialize;

    #[test]
    fn stxn_classes_become_boxes() {
        let x = deserialize(
            "arch tsc\nevent 0 W x 1\nevent 1 R x 2\nevent 2 W x 2\nthread 0 1\nthread 2\nrf 2 1\nco 0 2\nstxn { 0 1 }\n",
        )
        .unwrap()
        .execution;
        let dot = execution_to_dot(&x, "fig2");
        assert!(dot.contains("cluster_etxn0"));
        assert!(dot.contains("style=solid"));
        assert!(dot.contains("label=rf"));
        assert_eq!(dot, execution_to_dot(&x, "fig2"));
    }
}
