//! Golden corpus: every execution and litmus file under `corpus/` carries
//! `expect` annotations; this runner checks all of them and the
//! serialisation round-trip.

use std::fs;
use std::path::PathBuf;
use tmm_core::execution::{deserialize, serialize, validate_wellformed, ExpectVerdict};
use tmm_core::litmus;
use tmm_core::models;

fn corpus_dir(sub: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../corpus")
        .join(sub)
}

fn corpus_files(sub: &str, ext: &str) -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = fs::read_dir(corpus_dir(sub))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().map(|e| e == ext).unwrap_or(false))
        .collect();
    files.sort();
    assert!(!files.is_empty());
    files
}

#[test]
fn executions_are_wellformed_and_match_expectations() {
    for path in corpus_files("executions", "exec") {
        let name = path.file_name().unwrap().to_string_lossy().to_string();
        let text = fs::read_to_string(&path).unwrap();
        let doc = deserialize(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        let rep = validate_wellformed(&doc.execution);
        assert!(rep.ok(), "{name}: {rep}");
        assert!(!doc.expects.is_empty(), "{name}: no expectations");
        for expect in &doc.expects {
            let model = models::by_name(&expect.model)
                .unwrap_or_else(|| panic!("{name}: unknown model {}", expect.model));
            let verdict = model
                .check(&doc.execution)
                .unwrap_or_else(|e| panic!("{name}: {e}"));
            match expect.verdict {
                ExpectVerdict::Consistent => {
                    assert!(
                        verdict.consistent,
                        "{name}: expected consistent under {}, violated {:?}",
                        expect.model, verdict.violated
                    );
                }
                ExpectVerdict::Inconsistent => {
                    assert!(
                        !verdict.consistent,
                        "{name}: expected inconsistent under {}",
                        expect.model
                    );
                    for ax in &expect.axioms {
                        assert!(
                            verdict.violated.contains(ax),
                            "{name}: expected {ax} among violations {:?} under {}",
                            verdict.violated,
                            expect.model
                        );
                    }
                }
                ExpectVerdict::Racy => {
                    assert_eq!(
                        verdict.racy,
                        Some(true),
                        "{name}: expected racy under {}",
                        expect.model
                    );
                }
            }
        }
    }
}

#[test]
fn executions_roundtrip_through_the_interchange_format() {
    for path in corpus_files("executions", "exec") {
        let name = path.file_name().unwrap().to_string_lossy().to_string();
        let text = fs::read_to_string(&path).unwrap();
        let doc = deserialize(&text).unwrap();
        let doc2 = deserialize(&serialize(&doc.execution)).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(doc.execution, doc2.execution, "{name}: round-trip changed the execution");
    }
}

#[test]
fn litmus_corpus_matches_expectations() {
    for path in corpus_files("litmus", "litmus") {
        let name = path.file_name().unwrap().to_string_lossy().to_string();
        let text = fs::read_to_string(&path).unwrap();
        let test = litmus::parse(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(!test.expects.is_empty(), "{name}: no expectations");
        for expect in &test.expects {
            let model = models::by_name(&expect.model)
                .unwrap_or_else(|| panic!("{name}: unknown model {}", expect.model));
            let verdict = litmus::evaluate(&test, &model).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(
                verdict.status, expect.status,
                "{name}: expected {} under {}",
                expect.status.name(),
                expect.model
            );
        }
    }
}

#[test]
fn litmus_corpus_roundtrips_through_render() {
    for path in corpus_files("litmus", "litmus") {
        let name = path.file_name().unwrap().to_string_lossy().to_string();
        let text = fs::read_to_string(&path).unwrap();
        let test = litmus::parse(&text).unwrap();
        let again = litmus::parse(&litmus::render(&test)).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(test.threads, again.threads, "{name}");
        assert_eq!(test.post, again.post, "{name}");
    }
}
