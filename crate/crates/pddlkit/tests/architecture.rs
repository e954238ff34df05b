//! The model crate stays free of I/O: no network or async stack anywhere in
//! its dependency closure, and no `std` outside tests.

use std::collections::{BTreeSet, VecDeque};
use std::process::Command;

use serde_json::Value;

const FORBIDDEN: [&str; 8] = [
    "ureq",
    "reqwest",
    "hyper",
    "tokio",
    "rustls",
    "native-tls",
    "openssl",
    "async-std",
];

#[test]
fn core_has_no_network_dependencies() {
    let out = Command::new(env!("CARGO"))
        .args(["metadata", "--format-version", "1", "--offline"])
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let meta: Value = serde_json::from_slice(&out.stdout).unwrap();
    let nodes = meta["resolve"]["nodes"].as_array().unwrap();
    let name_of = |id: &str| -> String {
        meta["packages"]
            .as_array()
            .unwrap()
            .iter()
            .find(|p| p["id"] == id)
            .map(|p| p["name"].as_str().unwrap().to_string())
            .unwrap()
    };
    let core = meta["packages"]
        .as_array()
        .unwrap()
        .iter()
        .find(|p| p["name"] == "pddlkit-core")
        .unwrap()["id"]
        .as_str()
        .unwrap()
        .to_string();

    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::from([core]);
    while let Some(id) = queue.pop_front() {
        if !seen.insert(id.clone()) {
            continue;
        }
        let node = nodes.iter().find(|n| n["id"] == id.as_str()).unwrap();
        for dep in node["deps"].as_array().unwrap() {
            let normal = dep["dep_kinds"]
                .as_array()
                .unwrap()
                .iter()
                .any(|k| k["kind"].is_null());
            if normal {
                queue.push_back(dep["pkg"].as_str().unwrap().to_string());
            }
        }
    }
    let names: BTreeSet<String> = seen.iter().map(|id| name_of(id)).collect();
    for bad in FORBIDDEN {
        assert!(
            !names.contains(bad),
            "pddlkit-core depends on {bad}: {names:?}"
        );
    }
    assert!(!names.contains("pddlkit"));
}

#[test]
fn core_is_no_std_outside_tests() {
    let lib = include_str!("../../core/src/lib.rs");
    assert!(lib.contains("#![cfg_attr(not(test), no_std)]"));
}
