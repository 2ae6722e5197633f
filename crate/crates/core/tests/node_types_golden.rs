//! Node-type sets for the reference grammar, frozen from CPython's `ast`
//! module with expression contexts removed.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use concat_core::similarity::{extract_node_types, PythonSubset};

#[test]
fn reference_grammar_matches_frozen_sets() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/python");
    let expected: BTreeMap<String, BTreeSet<String>> =
        serde_json::from_str(&std::fs::read_to_string(dir.join("node_types.json")).unwrap())
            .unwrap();
    assert_eq!(expected.len(), 5);
    for (file, want) in expected {
        let code = std::fs::read_to_string(dir.join(&file)).unwrap();
        let got = extract_node_types(&code, &PythonSubset).unwrap();
        assert_eq!(got, want, "{file}");
    }
}
