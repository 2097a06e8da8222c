use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_sha-delta-lab"));
    c.env_remove("SHA_DELTA_LAB_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const E0: &str = r#"{"p":2,"n":1,"kind":"elliptic-weierstrass","a":[0,1,0,1,0]}"#;
const E1: &str = r#"{"p":2,"n":1,"kind":"elliptic-weierstrass","a":[0,1,0,0,0]}"#;

#[test]
fn count_e0() {
    let dir = tempfile::tempdir().unwrap();
    let curve = write(dir.path(), "e0.json", E0);
    let o = run(&["count", "--curve", &curve, "--max-degree", "4"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "m,N\n1,5\n2,5\n3,5\n4,25\n");
}

#[test]
fn count_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", "{\"p\":2,");
    assert_eq!(run(&["count", "--curve", &bad]).status.code(), Some(2));
    let curve = write(dir.path(), "e0.json", E0);
    let o = run(&["count", "--curve", &curve, "--max-degree", "40"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("budget"));
    let singular = write(dir.path(), "s.json", r#"{"p":2,"kind":"elliptic","a":[0,0,0,0,0]}"#);
    assert_eq!(run(&["count", "--curve", &singular]).status.code(), Some(2));
    assert_eq!(run(&["count"]).status.code(), Some(2));
    let o = run(&["count", "--curve", &curve, "--max-degree", "12", "--budget", "1000"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn zeta_from_curve_and_counts() {
    let dir = tempfile::tempdir().unwrap();
    let curve = write(dir.path(), "e0.json", E0);
    let o = run(&["zeta", "--curve", &curve]);
    assert_eq!(stdout(&o), "{\"q\":2,\"g\":1,\"coeffs\":[\"1\",\"2\",\"2\"]}\n");
    let csv = write(dir.path(), "c.csv", "m,N\n1,3\n2,9\n");
    let o = run(&["zeta", "--counts", &csv, "--q", "2", "--genus", "1"]);
    assert_eq!(stdout(&o), "{\"q\":2,\"g\":1,\"coeffs\":[\"1\",\"0\",\"2\"]}\n");
    let weil = write(dir.path(), "w.csv", "m,N\n1,7\n");
    assert_eq!(run(&["zeta", "--counts", &weil, "--q", "2", "--genus", "1"]).status.code(), Some(2));
}

#[test]
fn milne_examples() {
    let dir = tempfile::tempdir().unwrap();
    let z = write(dir.path(), "z.json", r#"{"q":2,"g":1,"coeffs":["1","2","2"]}"#);
    let o = run(&["milne", "--zeta", &z, "--frobenius", r#"{"a":-2,"q":2}"#]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "{\"d\":1,\"g\":1,\"rank\":2,\"sha_delta\":\"4\"}\n");
    let o = run(&["milne", "--zeta", &z, "--frobenius-poly", r#"["2","2","1"]"#, "--oracle"]);
    assert_eq!(stdout(&o), "{\"d\":1,\"g\":1,\"rank\":2,\"sha_delta\":\"4\"}\n");
    let o = run(&["milne", "--zeta", &z, "--frobenius-poly", r#"["4","8","8","4","1"]"#]);
    assert_eq!(stdout(&o), "{\"d\":2,\"g\":1,\"rank\":4,\"sha_delta\":\"16\"}\n");
    assert_eq!(run(&["milne", "--zeta", &z, "--frobenius", r#"{"a":0,"q":3}"#]).status.code(), Some(2));
    assert_eq!(run(&["milne", "--zeta", &z, "--frobenius", r#"{"a":3,"q":2}"#]).status.code(), Some(2));
    assert_eq!(run(&["milne", "--zeta", &z]).status.code(), Some(2));
    let o = run(&["milne", "--zeta", &z, "--frobenius", r#"{"a":-2,"q":2}"#, "--precision-bits", "8"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn measure_histogram() {
    let dir = tempfile::tempdir().unwrap();
    let z = write(dir.path(), "z.json", r#"{"q":2,"g":1,"coeffs":["1","0","2"]}"#);
    let o = run(&["measure", "--zeta", &z, "--bins", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let masses: Vec<String> = stdout(&o)
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().to_string())
        .collect();
    let expect = ["0.00000000000e0", "1.00000000000e0", "0.00000000000e0", "1.00000000000e0"];
    assert_eq!(masses, expect);
    assert!(String::from_utf8_lossy(&o.stderr).contains("max_multiplicity=1"));
    let bad = write(dir.path(), "bad.json", r#"{"q":2,"g":1,"coeffs":["1","3","2"]}"#);
    assert_eq!(run(&["measure", "--zeta", &bad]).status.code(), Some(2));
}

#[test]
fn ratio_two_curve_family_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let fam = format!(
        r#"{{"q":2,"members":[{{"label":"e0","curve":{E0}}},{{"label":"e1","curve":{E1}}}]}}"#
    );
    let fam = write(dir.path(), "two.json", &fam);
    let mut outputs = Vec::new();
    for threads in ["1", "4", "1"] {
        let out = dir.path().join(format!("r{}.csv", outputs.len()));
        let o = run(&[
            "ratio",
            "--family",
            &fam,
            "--frobenius",
            r#"{"a":-2,"q":2}"#,
            "--max-m",
            "6",
            "--threads",
            threads,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        let csv = std::fs::read_to_string(&out).unwrap();
        let sidecar = std::fs::read_to_string(out.with_extension("json")).unwrap();
        outputs.push((csv, sidecar));
    }
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));
    let csv = &outputs[0].0;
    let sha: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').nth(3).unwrap()).collect();
    assert_eq!(sha, vec!["4", "4"]);
    assert!(outputs[0].1.contains("\"sha_delta\": \"4\""));
}

#[test]
fn ratio_errors() {
    let dir = tempfile::tempdir().unwrap();
    let empty = write(dir.path(), "empty.json", r#"{"q":2,"members":[]}"#);
    let fiber = r#"{"a":-2,"q":2}"#;
    assert_eq!(run(&["ratio", "--family", &empty, "--frobenius", fiber]).status.code(), Some(2));
    let line = write(
        dir.path(),
        "line.json",
        r#"{"q":2,"members":[{"label":"p1","zeta":{"q":2,"g":0,"coeffs":["1"]}}]}"#,
    );
    assert_eq!(run(&["ratio", "--family", &line, "--frobenius", fiber]).status.code(), Some(2));
    let big = write(
        dir.path(),
        "big.json",
        r#"{"q":2,"members":[{"label":"x","curve":{"p":2,"kind":"artin-schreier","f":[0,1,0,0,0,1]}}]}"#,
    );
    let o = run(&["ratio", "--family", &big, "--frobenius", fiber, "--budget", "2"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn threads_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let curve = write(dir.path(), "e0.json", E0);
    let o = bin()
        .args(["count", "--curve", &curve])
        .env("SHA_DELTA_LAB_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = bin()
        .args(["count", "--curve", &curve, "--threads", "2"])
        .env("SHA_DELTA_LAB_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn shipped_family_with_seeded_synthetics() {
    let dir = tempfile::tempdir().unwrap();
    // large q keeps the synthetic place counts nonnegative
    let fam = write(
        dir.path(),
        "syn.json",
        r#"{"q":101,"members":[{"label":"s2","synthetic":{"g":2}},{"label":"s3","synthetic":{"g":3,"law":"uniform"}}]}"#,
    );
    let args = ["ratio", "--family", &fam, "--frobenius", r#"{"a":3,"q":101}"#, "--seed", "9"];
    let a = run(&args);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, run(&args).stdout);
    let o = run(&["ratio", "--frobenius", r#"{"a":-2,"q":2}"#, "--max-m", "5"]);
    assert_eq!(stdout(&o).lines().count(), 13);
}
