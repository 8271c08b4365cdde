use std::collections::BTreeMap;
use std::path::Path;

use facetflow::harness::{self, Command};

fn csv_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else if path.extension().is_some_and(|e| e == "csv") {
                let rel = path.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn twice(text: &str, command: Command) {
    let cfg = harness::load(text, command, Some(424242)).unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    harness::run(&cfg, a.path(), 1).unwrap();
    harness::run(&cfg, b.path(), 1).unwrap();
    let (fa, fb) = (csv_files(a.path()), csv_files(b.path()));
    assert!(!fa.is_empty());
    assert_eq!(fa.keys().collect::<Vec<_>>(), fb.keys().collect::<Vec<_>>());
    for (name, bytes) in &fa {
        assert!(bytes == &fb[name], "{name} differs");
    }
}

#[test]
fn prox_properties_csvs_are_byte_identical() {
    let text = "scenario = \"prox_properties\"\n[properties]\nshift_cases = 3\ncomparison_cases = 4\nsensitivity_cases = 3\noracle_cases = 3\n";
    twice(text, Command::Prox);
}

#[test]
fn explicit1d_csvs_are_byte_identical() {
    twice("scenario = \"explicit1d\"\n[time]\nT = 0.02\n", Command::Facet1d);
}

#[test]
fn ordered_pairs_csvs_are_byte_identical() {
    twice("scenario = \"ordered_pairs\"\n[grid]\nn = 48\n[time]\nT = 0.005\n[pairs]\ncases = 3\n", Command::Evolve);
}
