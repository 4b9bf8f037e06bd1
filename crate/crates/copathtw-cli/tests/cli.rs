//! End-to-end checks of the binary: exit codes, JSON schema stability,
//! and the solve -> verify round trip.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_copathtw"))
}

fn write_temp(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("copathtw-cli-tests");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(format!("{}-{name}", std::process::id()));
    std::fs::write(&path, contents).unwrap();
    path
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

const C5: &str = "c five-cycle\np tw 5 5\n1 2\n2 3\n3 4\n4 5\n5 1\n";

#[test]
fn solve_c5_decision_yes() {
    let gr = write_temp("c5.gr", C5);
    let out = bin()
        .args(["solve", "--problem", "set", "--graph"])
        .arg(&gr)
        .args(["--decision", "1"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{out:?}");
    let json: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(json["problem"], "set");
    assert_eq!(json["n"], 5);
    assert_eq!(json["m"], 5);
    assert_eq!(json["opt_weight"], 4);
    assert_eq!(json["deleted_count"], 1);
    assert_eq!(json["verdict"], "YES");
    assert!(json.get("kept").is_none());

    let out = bin()
        .args(["solve", "--problem", "set", "--graph"])
        .arg(&gr)
        .args(["--decision", "0"])
        .output()
        .unwrap();
    let json: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(json["verdict"], "NO");
}

#[test]
fn malformed_graph_exits_2() {
    let gr = write_temp("bad.gr", "p tw 3 1\n1 9\n");
    let out = bin()
        .args(["solve", "--problem", "set", "--graph"])
        .arg(&gr)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));
}

#[test]
fn solve_verify_roundtrip() {
    let gr = write_temp("rt.gr", C5);
    let out = bin()
        .args(["solve", "--problem", "packing", "--emit-solution", "--graph"])
        .arg(&gr)
        .output()
        .unwrap();
    assert!(out.status.success());
    let sol = write_temp("rt.json", &stdout(&out));
    let out = bin()
        .args(["verify", "--problem", "packing", "--graph"])
        .arg(&gr)
        .arg("--solution")
        .arg(&sol)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{out:?}");

    // Corrupt the claimed weight: verification must fail with exit 1.
    let mut json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&sol).unwrap()).unwrap();
    json["opt_weight"] = serde_json::json!(99);
    let bad = write_temp("rt-bad.json", &json.to_string());
    let out = bin()
        .args(["verify", "--problem", "packing", "--graph"])
        .arg(&gr)
        .arg("--solution")
        .arg(&bad)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));

    // A kept set that is not a linear forest also fails.
    json["opt_weight"] = serde_json::json!(5);
    json["kept"] = serde_json::json!([0, 1, 2, 3, 4]);
    let cycle = write_temp("rt-cycle.json", &json.to_string());
    let out = bin()
        .args(["verify", "--problem", "packing", "--graph"])
        .arg(&gr)
        .arg("--solution")
        .arg(&cycle)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn weights_file_changes_optimum() {
    let gr = write_temp("w.gr", "p tw 3 3\n1 2\n2 3\n1 3\n");
    // Weight the triangle edges 10, 1, 10: keep the two heavy ones.
    let weights = write_temp("w.txt", "10\n1\n10\n");
    let out = bin()
        .args(["solve", "--problem", "set", "--graph"])
        .arg(&gr)
        .arg("--weights")
        .arg(&weights)
        .output()
        .unwrap();
    let json: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(json["opt_weight"], 20);
}

#[test]
fn td_file_is_honored_and_validated() {
    let gr = write_temp("td.gr", C5);
    let td = write_temp(
        "c5.td",
        "s td 4 3 5\nb 1 1 2 3\nb 2 1 3 4\nb 3 1 4 5\nb 4 5 1\n1 2\n2 3\n3 4\n",
    );
    let out = bin()
        .args(["solve", "--problem", "set", "--graph"])
        .arg(&gr)
        .arg("--td")
        .arg(&td)
        .output()
        .unwrap();
    assert!(out.status.success(), "{out:?}");
    let json: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(json["opt_weight"], 4);

    // A decomposition missing a vertex is an input error.
    let bad = write_temp("bad.td", "s td 1 3 5\nb 1 1 2 3\n");
    let out = bin()
        .args(["solve", "--problem", "set", "--graph"])
        .arg(&gr)
        .arg("--td")
        .arg(&bad)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn identical_runs_are_byte_identical() {
    let gr = write_temp("det.gr", C5);
    let run = || {
        bin()
            .args([
                "solve",
                "--problem",
                "set",
                "--emit-solution",
                "--stats",
                "--seed",
                "7",
                "--graph",
            ])
            .arg(&gr)
            .output()
            .unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(stdout(&a), stdout(&b));
}

#[test]
fn selfcheck_passes_quickly() {
    let out = bin()
        .args(["selfcheck", "--seeds", "6", "--max-n", "6"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{out:?}");
    assert!(stdout(&out).contains("all suites passed"));
}
