use std::path::Path;
use std::process::{Command, Output};

fn medlens(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_medlens"))
        .args(args)
        .current_dir(cwd)
        .env_remove("RUST_LOG")
        .output()
        .unwrap()
}

#[test]
fn synth_ingest_and_pipeline_from_the_store() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    std::fs::create_dir(root.join("in")).unwrap();
    assert!(medlens(&["synth", "--count", "40", "--seed", "5", "--out", "in/a.jsonl"], root).status.success());

    let out = medlens(&["ingest", "in", "--store", "store"], root);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let meta: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(meta["documents"], 40);
    let id = meta["corpus_id"].as_str().unwrap();

    let out = medlens(
        &["pipeline", "--corpus", id, "--store", "store", "--query", "the", "--out", "views", "--seed", "3", "--max-subgraph-size", "4"],
        root,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in medlens_core::pipeline::OUTPUT_FILES {
        assert!(root.join("views").join(f).is_file(), "{f} missing");
    }
    let starmap: serde_json::Value =
        serde_json::from_slice(&std::fs::read(root.join("views/starmap.json")).unwrap()).unwrap();
    assert_eq!(starmap["max_subgraph_size"], 4);
    assert_eq!(starmap["starmap"]["seed"], 3);
}

#[test]
fn failures_exit_non_zero_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    assert!(medlens(&["synth", "--count", "5", "--out", "c.jsonl"], root).status.success());

    let out = medlens(&["pipeline", "--corpus", "c.jsonl", "--query", "qqqzzz", "--out", "v"], root);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no documents match"));

    let out = medlens(&["pipeline", "--corpus", "c.jsonl", "--query", "pain", "--out", "v", "--theta", "3"], root);
    assert!(!out.status.success());

    let out = medlens(&["ingest", "missing-dir"], root);
    assert!(!out.status.success());

    let out = medlens(&["embed", "--corpus", "unknown-id", "--store", "store", "--out", "e.bin"], root);
    assert!(String::from_utf8_lossy(&out.stderr).contains("not found"));
}
