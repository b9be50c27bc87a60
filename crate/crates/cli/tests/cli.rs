use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

use cliquesum::generate::fixtures;
use cliquesum::io::write_json;
use cliquesum::Graph;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cliquesum"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_graph(dir: &Path, name: &str, g: &Graph) -> PathBuf {
    let p = dir.join(name);
    write_json(&p, g).unwrap();
    p
}

fn read(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn generate_is_deterministic() {
    let d = TempDir::new().unwrap();
    for name in ["a.json", "b.json"] {
        let o = run(d.path(), &["generate", "--seed", "7", "--out", name]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let a = std::fs::read(d.path().join("a.json")).unwrap();
    assert_eq!(a, std::fs::read(d.path().join("b.json")).unwrap());
    let o = run(d.path(), &["generate", "--seed", "8"]);
    assert_ne!(o.stdout, a);
}

#[test]
fn weigh_is_deterministic() {
    let d = TempDir::new().unwrap();
    run(d.path(), &["generate", "--seed", "11", "--thin", "0.3", "--out", "g.json"]);
    for name in ["m1.json", "m2.json"] {
        let o = run(d.path(), &["weigh", "--graph", "g.json", "--out", name]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    assert_eq!(std::fs::read(d.path().join("m1.json")).unwrap(), std::fs::read(d.path().join("m2.json")).unwrap());
}

#[test]
fn weigh_two_k4_golden() {
    let d = TempDir::new().unwrap();
    write_graph(d.path(), "g.json", &fixtures::two_k4());
    let o = run(d.path(), &["weigh", "--graph", "g.json", "--out", "m.json"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("22 cycles, 0 with zero circulation"));
    let m = read(&d.path().join("m.json"));
    // cross-checked with an independent cycle enumerator: 22 cycles, min |circulation| 1
    assert_eq!(
        m["weights"],
        json!({"0": "400", "1": "-400", "2": "397", "3": "0", "4": "799", "5": "401", "6": "0", "7": "0", "8": "0"})
    );
    assert_eq!(m["K"], "8");
    assert_eq!(m["B_shift"], "25");
    assert_eq!(m["max_bits"], 10);
    for key in ["input", "weights", "block0.tree", "block0.gadget_map", "block0.gprime", "block0.aux"] {
        assert!(m["provenance"][key].is_string(), "{key}");
    }
    let o = run(d.path(), &["verify", "--graph", "g.json", "--weights", "m.json", "--out", "r.json"]);
    assert_eq!(code(&o), 0);
    let r = read(&d.path().join("r.json"));
    assert_eq!(r["cycles_total"], 22);
    assert_eq!(r["min_abs_circulation"], "1");
}

#[test]
fn pipeline_subcommands_chain() {
    let d = TempDir::new().unwrap();
    write_graph(d.path(), "g.json", &fixtures::two_k4());
    let o = run(d.path(), &["decompose", "--graph", "g.json", "--out", "t.json"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = run(d.path(), &["normalize", "--tree", "t.json", "--out", "n.json"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let n = read(&d.path().join("n.json"));
    assert!(n["tree"]["nodes"].is_array() && n["gadget_map"]["paths"].is_object());
    let o = run(d.path(), &["weigh", "--graph", "g.json", "--tree", "t.json", "--out", "m.json"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = run(d.path(), &["verify", "--graph", "g.json", "--out", "r.json"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = read(&d.path().join("r.json"));
    assert_eq!(r["lemma4_violations"], 0);
    assert_eq!(r["lemma5_violations"], 0);
}

#[test]
fn tampered_weights_fail_with_witness() {
    let d = TempDir::new().unwrap();
    write_graph(d.path(), "g.json", &fixtures::two_k4());
    run(d.path(), &["weigh", "--graph", "g.json", "--out", "m.json"]);
    // edges 0:(0,1) 1:(0,2) 2:(1,2), so triangle 0->1->2->0 sums to w0 + w2 - w1
    // = 400 + w2 + 400
    let m = read(&d.path().join("m.json"));
    let mut w = m["weights"].clone();
    w["2"] = json!("-800");
    std::fs::write(d.path().join("w.json"), w.to_string()).unwrap();
    let o = run(d.path(), &["verify", "--graph", "g.json", "--weights", "w.json"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("zero-circulation cycle through vertices"), "{}", stderr(&o));
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(!report["zero_witnesses"].as_array().unwrap().is_empty());
    assert_eq!(report["min_abs_circulation"], "0");

    // same edit inside the manifest also breaks its recorded hash
    let mut m2 = m.clone();
    m2["weights"]["2"] = json!("398");
    std::fs::write(d.path().join("m2.json"), m2.to_string()).unwrap();
    let o = run(d.path(), &["verify", "--graph", "g.json", "--weights", "m2.json", "--out", "r.json"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("recorded hash"));
}

#[test]
fn zero_circulation_square_fails() {
    let d = TempDir::new().unwrap();
    write_graph(d.path(), "g.json", &fixtures::cycle(4));
    std::fs::write(d.path().join("w.json"), r#"{"0": "1", "1": "2", "2": "-1", "3": "-2"}"#).unwrap();
    let o = run(d.path(), &["verify", "--graph", "g.json", "--weights", "w.json", "--out", "r.json"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("zero-circulation cycle through vertices 0 1 2 3"), "{}", stdout(&o));
}

#[test]
fn nonfacial_virtual_triangle_is_structural() {
    let d = TempDir::new().unwrap();
    let t = fixtures::nonfacial_triangle_tree();
    write_json(&d.path().join("t.json"), &t).unwrap();
    write_graph(d.path(), "g.json", &t.reassemble().real_part());
    let o = run(d.path(), &["verify", "--tree", "t.json", "--normalized"]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("virtual triangle [0, 1, 2] is not a face"), "{}", stderr(&o));
    let o = run(d.path(), &["weigh", "--graph", "g.json", "--tree", "t.json", "--normalized", "--out", "m.json"]);
    assert_eq!(code(&o), 3);
    // without the claim the pipeline repairs the tree
    let o = run(d.path(), &["verify", "--tree", "t.json"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = run(d.path(), &["weigh", "--graph", "g.json", "--tree", "t.json", "--out", "m.json"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn input_errors_exit_2() {
    let d = TempDir::new().unwrap();
    std::fs::write(d.path().join("bad.json"), "{\"vertices\": [0, 1],\n \"edges\": [}").unwrap();
    let o = run(d.path(), &["weigh", "--graph", "bad.json"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("read graph") && stderr(&o).contains("line 2"), "{}", stderr(&o));
    let o = run(d.path(), &["verify", "--graph", "missing.json"]);
    assert_eq!(code(&o), 2);
    let o = run(d.path(), &["frobnicate"]);
    assert_eq!(code(&o), 2);
    write_graph(d.path(), "g.json", &fixtures::cycle(4));
    std::fs::write(d.path().join("w.json"), r#"{"0": "1"}"#).unwrap();
    let o = run(d.path(), &["verify", "--graph", "g.json", "--weights", "w.json"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn match_and_paths() {
    let d = TempDir::new().unwrap();
    write_graph(d.path(), "k33.json", &fixtures::k33());
    let o = run(d.path(), &["match", "--graph", "k33.json", "--out", "m.json"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let m = read(&d.path().join("m.json"));
    assert_eq!(m["kind"], "perfect");
    assert_eq!(m["audit"]["count"], 6);
    assert_eq!(m["audit"]["minimum"]["edges"].as_array().unwrap().len(), 3);
    assert!(m["audit"]["tie"].is_null());

    write_graph(d.path(), "g.json", &fixtures::two_k4());
    let o = run(d.path(), &["paths", "--graph", "g.json", "--out", "p.json"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let p = read(&d.path().join("p.json"));
    assert_eq!(p["pairs"], 20);
    assert!(p["ties"].as_array().unwrap().is_empty());
}

#[test]
fn match_reports_a_tie() {
    let d = TempDir::new().unwrap();
    write_graph(d.path(), "g.json", &fixtures::cycle(4));
    std::fs::write(d.path().join("w.json"), r#"{"0": "1", "1": "-1", "2": "1", "3": "-1"}"#).unwrap();
    let o = run(d.path(), &["match", "--graph", "g.json", "--weights", "w.json", "--out", "m.json"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("tied matching"));
}

#[test]
fn dyn_update_reinserts_an_edge() {
    let d = TempDir::new().unwrap();
    let mut g = fixtures::k33();
    write_graph(d.path(), "full.json", &g);
    run(d.path(), &["weigh", "--graph", "full.json", "--out", "m.json"]);
    let e = g.remove_edge(cliquesum::EdgeId(4)).unwrap();
    write_graph(d.path(), "g.json", &g);
    std::fs::write(d.path().join("ins.json"), json!([{"u": e.u.0, "v": e.v.0}]).to_string()).unwrap();
    let o = run(d.path(), &["dyn-update", "--graph", "g.json", "--weights", "m.json", "--insert", "ins.json", "--out", "u.json"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let u = read(&d.path().join("u.json"));
    assert_eq!(u["update"]["partition"]["real"].as_array().unwrap().len(), 1);
    assert!(u["update"]["selected"]["audit"]["tie"].is_null());
    assert_eq!(u["update"]["weights"].as_object().unwrap().len(), 9);
    assert_eq!(u["graph"]["edges"].as_array().unwrap().len(), 9);

    // nothing to insert: the old weights are kept
    std::fs::write(d.path().join("none.json"), "[]").unwrap();
    let o = run(d.path(), &["dyn-update", "--graph", "g.json", "--weights", "m.json", "--insert", "none.json", "--out", "u.json"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(read(&d.path().join("u.json"))["update"]["selected"].is_null());
}
