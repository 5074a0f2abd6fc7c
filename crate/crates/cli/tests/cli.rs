use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_gf2m-verify"));
    c.env_remove("GF2M_VERIFY_THREADS")
        .env_remove("GF2M_VERIFY_TERM_CAP");
    c
}

fn gf4_netlist() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data/gf4_mapped.net")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn verify_reference_netlist_passes() {
    let net = gf4_netlist();
    let o = run(&[
        "verify",
        net.to_str().unwrap(),
        "--poly",
        "x^2+x+1",
        "--threads",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("result      : PASS"));
    for col in ["equations", "time_ms", "runtime", "mem/task", "mem total"] {
        assert!(out.contains(col), "missing {col} in\n{out}");
    }
}

#[test]
fn reducible_polynomial_is_an_error() {
    let net = gf4_netlist();
    let o = run(&["verify", net.to_str().unwrap(), "--poly", "x^2+1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("reducible"));
}

#[test]
fn field_and_poly_conflict() {
    let net = gf4_netlist();
    let o = run(&[
        "verify",
        net.to_str().unwrap(),
        "--poly",
        "x^2+x+1",
        "--field",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["verify", net.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["verify", net.to_str().unwrap(), "--field", "2", "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn extract_all_and_trace() {
    let net = gf4_netlist();
    let o = run(&["extract", net.to_str().unwrap(), "--all"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "z0: a0*b0 + a1*b1\nz1: a0*b1 + a1*b0 + a1*b1\n");

    let o = run(&[
        "extract",
        net.to_str().unwrap(),
        "--bit",
        "1",
        "--format",
        "trace",
    ]);
    let out = stdout(&o);
    let elims: Vec<&str> = out
        .lines()
        .map(|l| l.rsplit(" | ").next().unwrap())
        .filter(|e| *e != "-")
        .collect();
    assert_eq!(elims, ["2x", "2x"]);
    assert!(out.ends_with("Sig_in | x*(a0*b1 + a1*b0 + a1*b1) | -\n"));
}

#[test]
fn extract_undriven_output_fails() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("empty-cone.net");
    std::fs::write(&p, "input a0 b0\noutput z0\n").unwrap();
    let o = run(&["extract", p.to_str().unwrap(), "--bit", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("z0"), "{}", stderr(&o));
}

#[test]
fn stdin_netlist() {
    let mut child = bin()
        .args(["verify", "-", "--field", "2", "--format", "json"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(std::fs::read(gf4_netlist()).unwrap().as_slice())
        .unwrap();
    let o = child.wait_with_output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["overall"], "PASS");
    assert_eq!(v["bits"].as_array().unwrap().len(), 2);
    let again: serde_json::Value =
        serde_json::from_str(&serde_json::to_string(&v).unwrap()).unwrap();
    assert_eq!(v, again);
}

#[test]
fn generate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.net");
    let b = dir.path().join("b.net");
    for p in [&a, &b] {
        let o = run(&[
            "generate",
            "--poly",
            "x^4+x+1",
            "--out",
            p.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    assert_eq!(text.matches("= AND(").count(), 16);
    assert_eq!(text.matches("= XOR(").count(), 15);
    let o = run(&["verify", a.to_str().unwrap(), "--poly", "x^4+x+1"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn faulty_multiplier_fails_with_residuals() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("mutated16.net");
    let o = run(&[
        "generate",
        "--field",
        "16",
        "--fault",
        "seed=7,kind=kind-swap",
        "--out",
        p.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("function changed"), "{}", stderr(&o));
    let o = run(&["verify", p.to_str().unwrap(), "--field", "16"]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.contains("result      : FAIL"));
    assert!(out.contains("residual:"));
}

#[test]
fn fault_header_names_mutation() {
    let o = run(&["generate", "--field", "8", "--fault", "seed=7"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let header: Vec<&str> = out.lines().take_while(|l| l.starts_with('#')).collect();
    assert!(
        header
            .iter()
            .any(|l| l.contains("fault:") && l.contains("seed 7")),
        "{header:?}"
    );
}

#[test]
fn threads_from_environment_and_output_independent_of_threads() {
    let net = gf4_netlist();
    let args = [
        "verify",
        net.to_str().unwrap(),
        "--field",
        "2",
        "--no-timing",
    ];
    let one = bin()
        .args(args)
        .env("GF2M_VERIFY_THREADS", "1")
        .output()
        .unwrap();
    let two = bin()
        .args(args)
        .env("GF2M_VERIFY_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(stdout(&one), stdout(&two));
    let zero = bin()
        .args(args)
        .env("GF2M_VERIFY_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(zero.status.code(), Some(2));
}

#[test]
fn term_cap_reports_resource_limit() {
    let net = gf4_netlist();
    let o = run(&[
        "verify",
        net.to_str().unwrap(),
        "--field",
        "2",
        "--term-cap",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("exceeds cap"));
}

#[test]
fn blif_input() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("gf2.blif");
    std::fs::write(
        &p,
        ".model m\n.inputs a0 b0\n.outputs z0\n.names a0 b0 z0\n11 1\n.end\n",
    )
    .unwrap();
    let o = run(&["verify", p.to_str().unwrap(), "--field", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn selftest_suites() {
    for max_m in ["6", "1"] {
        let o = run(&["selftest", "--max-m", max_m]);
        assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
        assert!(stdout(&o).contains(": PASS"));
    }
}

#[test]
fn port_map_renames() {
    let dir = tempfile::tempdir().unwrap();
    let net = dir.path().join("renamed.net");
    std::fs::write(&net, "input x y\noutput out\nout = AND(x, y)\n").unwrap();
    let map = dir.path().join("ports.txt");
    std::fs::write(&map, "a0 x\nb0 y\nz0 out\n").unwrap();
    let o = run(&["verify", net.to_str().unwrap(), "--field", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&[
        "verify",
        net.to_str().unwrap(),
        "--field",
        "1",
        "--port-map",
        map.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}
