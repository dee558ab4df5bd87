//! Replays the checked-in fuzz corpus seeds through the parser entry points.

use std::fs;
use std::path::PathBuf;

use ffsched::fuzzy::{LookupTable, TableOrigin};
use ffsched::harness::{parse_scenario, read_trace_csv, summarize};

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    out.sort();
    assert!(!out.is_empty());
    out
}

#[test]
fn scenario_seeds() {
    for (name, bytes) in seeds("parse_scenario") {
        let parsed = parse_scenario(std::str::from_utf8(&bytes).unwrap());
        assert_eq!(parsed.is_ok(), name != "gap.toml", "{name}: {parsed:?}");
    }
}

#[test]
fn table_seeds() {
    for (name, bytes) in seeds("parse_lookup_table") {
        let t = LookupTable::parse(std::str::from_utf8(&bytes).unwrap(), TableOrigin::Golden)
            .unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(
            LookupTable::parse(&t.to_text(), TableOrigin::Golden)
                .unwrap()
                .cells(),
            t.cells()
        );
    }
}

#[test]
fn trace_seeds() {
    for (name, bytes) in seeds("read_trace_csv") {
        let t = read_trace_csv(bytes.as_slice()).unwrap_or_else(|e| panic!("{name}: {e}"));
        summarize(&t).unwrap();
    }
}
